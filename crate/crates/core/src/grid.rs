//! Staggered grid, discrete state, initial-data sampling and the
//! piecewise extensions of grid functions.
//!
//! Densities live at cell centres `x_i = (i + 1/2) dx`, `i = 0..N`, and
//! velocities on the faces `x_{i-1/2} = i dx`, `i = 0..=N`. Face `j` sits
//! between cells `j - 1` and `j`; faces `0` and `N` are the walls.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature;

/// Lower bound accepted for sampled initial densities. Only used to
/// validate input; solves never clip.
pub const RHO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub length: f64,
    pub cells: usize,
    pub dx: f64,
    pub dt: f64,
    pub final_time: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(length: f64, cells: usize, dt: f64, final_time: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!("domain length must be > 0, got {length}")));
        }
        if cells < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 cells, got {cells}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be > 0, got {dt}")));
        }
        if !(final_time.is_finite() && final_time >= 0.0) {
            return Err(Error::InvalidInput(format!("final time must be >= 0, got {final_time}")));
        }
        let ratio = final_time / dt;
        // T/dt within roundoff of an integer counts as that integer.
        let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        Ok(Self {
            length,
            cells,
            dx: length / cells as f64,
            dt,
            final_time,
            steps,
        })
    }

    /// Grid with `dt == dx`.
    pub fn coupled(length: f64, cells: usize, final_time: f64) -> Result<Self> {
        Self::new(length, cells, length / cells as f64, final_time)
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Position of face `j`, i.e. `x_{j-1/2}`.
    pub fn face(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn is_coupled(&self) -> bool {
        (self.dt - self.dx).abs() <= 1e-12 * self.dx
    }

    /// Index of the right-open cell `[x_{i-1/2}, x_{i+1/2})` holding `x`;
    /// `x = L` belongs to the last cell.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::OutOfDomain { x, length: self.length });
        }
        let i = (x / self.dx).floor() as usize;
        Ok(i.min(self.cells - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub a: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl PhysParams {
    pub fn new(a: f64, gamma: f64, mu: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidInput(format!("pressure coefficient a must be > 0, got {a}")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidInput(format!("adiabatic exponent must be > 1, got {gamma}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidInput(format!("viscosity mu must be > 0, got {mu}")));
        }
        Ok(Self { a, gamma, mu })
    }

    /// Whether `3/2 < gamma < 2`, the range covered by the convergence theory.
    pub fn in_convergence_regime(&self) -> bool {
        self.gamma > 1.5 && self.gamma < 2.0
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Internal energy density `p(rho) / (gamma - 1)`.
    pub fn internal_energy(&self, rho: f64) -> f64 {
        self.pressure(rho) / (self.gamma - 1.0)
    }
}

/// One time level: `N` cell densities and `N + 1` face velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub k: usize,
}

impl FluidState {
    /// Checks lengths, strict positivity and the no-slip walls.
    pub fn new(rho: Vec<f64>, u: Vec<f64>, k: usize) -> Result<Self> {
        if rho.len() < 2 || u.len() != rho.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "state needs N >= 2 densities and N + 1 velocities, got {} and {}",
                rho.len(),
                u.len()
            )));
        }
        if let Some((cell, &value)) = rho.iter().enumerate().find(|(_, r)| r.is_nan() || **r <= 0.0) {
            return Err(Error::NonPositiveDensity { cell, value });
        }
        if u[0] != 0.0 || u[rho.len()] != 0.0 {
            return Err(Error::InvalidInput("wall velocities must be exactly zero".into()));
        }
        Ok(Self { rho, u, k })
    }

    pub fn constant(cells: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; cells], vec![0.0; cells + 1], 0)
    }

    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    /// Cell-averaged velocity `(u_{i-1/2} + u_{i+1/2}) / 2`; equal to the
    /// L² projection of the piecewise-linear velocity onto cell constants.
    pub fn hat_velocity(&self) -> Vec<f64> {
        hat_velocity(&self.u)
    }

    pub fn mass(&self, dx: f64) -> f64 {
        dx * self.rho.iter().sum::<f64>()
    }

    /// Piecewise-constant density extension (right-open cells).
    pub fn eval_density(&self, grid: &GridSpec, x: f64) -> Result<f64> {
        Ok(self.rho[grid.locate(x)?])
    }

    /// Continuous piecewise-linear velocity extension.
    pub fn eval_velocity(&self, grid: &GridSpec, x: f64) -> Result<f64> {
        let i = grid.locate(x)?;
        let s = (x - grid.face(i)) / grid.dx;
        Ok(self.u[i] + s * (self.u[i + 1] - self.u[i]))
    }

    /// Mirror about `x = L/2`: densities reversed, velocities reversed and negated.
    pub fn mirrored(&self) -> Self {
        Self {
            rho: self.rho.iter().rev().copied().collect(),
            u: self.u.iter().rev().map(|v| if *v == 0.0 { 0.0 } else { -v }).collect(),
            k: self.k,
        }
    }
}

pub fn hat_velocity(u: &[f64]) -> Vec<f64> {
    u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// A scalar profile on `[0, L]` used for initial data.
pub trait Profile {
    fn value(&self, x: f64) -> f64;

    /// Mean over `[a, b]`. The default is five-point Gauss on two panels.
    fn cell_average(&self, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        (quadrature::integrate(a, m, |x| self.value(x)) + quadrature::integrate(m, b, |x| self.value(x)))
            / (b - a)
    }

    /// Value used for pointwise sampling: the left limit at jumps.
    fn left_limit(&self, x: f64) -> f64 {
        self.value(x)
    }
}

impl<F: Fn(f64) -> f64> Profile for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Named analytic or piecewise-constant profiles.
#[derive(Clone)]
pub enum ProfileSpec {
    Constant(f64),
    /// `base + amplitude * sin²(π x / L)`
    SinSquared { base: f64, amplitude: f64, length: f64 },
    /// `amplitude * sin(mode π x / L)`
    Sine { amplitude: f64, mode: u32, length: f64 },
    /// `slope * x + intercept`
    Linear { intercept: f64, slope: f64 },
    /// `values[0]` on `[0, breaks[0])`, `values[1]` on `[breaks[0], breaks[1])`, ...
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Custom(_) => f.write_str("Custom(..)"),
            other => write!(f, "{other}"),
        }
    }
}

impl PartialEq for ProfileSpec {
    fn eq(&self, other: &Self) -> bool {
        use ProfileSpec::*;
        match (self, other) {
            (Constant(a), Constant(b)) => a == b,
            (
                SinSquared { base: b1, amplitude: a1, length: l1 },
                SinSquared { base: b2, amplitude: a2, length: l2 },
            ) => b1 == b2 && a1 == a2 && l1 == l2,
            (
                Sine { amplitude: a1, mode: m1, length: l1 },
                Sine { amplitude: a2, mode: m2, length: l2 },
            ) => a1 == a2 && m1 == m2 && l1 == l2,
            (Linear { intercept: i1, slope: s1 }, Linear { intercept: i2, slope: s2 }) => i1 == i2 && s1 == s2,
            (Piecewise { breaks: b1, values: v1 }, Piecewise { breaks: b2, values: v2 }) => b1 == b2 && v1 == v2,
            _ => false,
        }
    }
}

/// Textual form: `constant C`, `sin2 BASE AMP`, `sine AMP MODE`,
/// `linear INTERCEPT SLOPE`, `piecewise V0 X1 V1 X2 V2 ...`.
/// The domain length is not part of the text.
impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Constant(c) => write!(f, "constant {c:?}"),
            ProfileSpec::SinSquared { base, amplitude, .. } => write!(f, "sin2 {base:?} {amplitude:?}"),
            ProfileSpec::Sine { amplitude, mode, .. } => write!(f, "sine {amplitude:?} {mode}"),
            ProfileSpec::Linear { intercept, slope } => write!(f, "linear {intercept:?} {slope:?}"),
            ProfileSpec::Piecewise { breaks, values } => {
                write!(f, "piecewise {:?}", values[0])?;
                for (b, v) in breaks.iter().zip(&values[1..]) {
                    write!(f, " {b:?} {v:?}")?;
                }
                Ok(())
            }
            ProfileSpec::Custom(_) => f.write_str("custom"),
        }
    }
}

impl ProfileSpec {
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidInput("piecewise profile needs one more value than breaks".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("piecewise breaks must be strictly increasing".into()));
        }
        Ok(ProfileSpec::Piecewise { breaks, values })
    }

    /// Parses the textual form; `length` fixes the period of the trigonometric kinds.
    pub fn parse(text: &str, length: f64) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let kind = tokens.next().ok_or_else(|| Error::InvalidInput("empty profile".into()))?;
        let nums: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number `{t}` in profile"))))
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("profile `{kind}` takes {n} numbers, got {}", nums.len())))
            }
        };
        match kind {
            "constant" => {
                want(1)?;
                Ok(ProfileSpec::Constant(nums[0]))
            }
            "sin2" => {
                want(2)?;
                Ok(ProfileSpec::SinSquared { base: nums[0], amplitude: nums[1], length })
            }
            "sine" => {
                want(2)?;
                if nums[1] < 0.0 || nums[1].fract() != 0.0 {
                    return Err(Error::InvalidInput("sine mode must be a non-negative integer".into()));
                }
                Ok(ProfileSpec::Sine { amplitude: nums[0], mode: nums[1] as u32, length })
            }
            "linear" => {
                want(2)?;
                Ok(ProfileSpec::Linear { intercept: nums[0], slope: nums[1] })
            }
            "piecewise" => {
                if nums.is_empty() || nums.len().is_multiple_of(2) {
                    return Err(Error::InvalidInput(
                        "piecewise profile is `piecewise V0 X1 V1 ...` (odd count)".into(),
                    ));
                }
                let values = nums.iter().step_by(2).copied().collect();
                let breaks = nums.iter().skip(1).step_by(2).copied().collect();
                ProfileSpec::piecewise(breaks, values)
            }
            other => Err(Error::InvalidInput(format!("unknown profile kind `{other}`"))),
        }
    }

    /// Same profile on a domain of a different length.
    pub fn with_length(&self, length: f64) -> Self {
        match self.clone() {
            ProfileSpec::SinSquared { base, amplitude, .. } => ProfileSpec::SinSquared { base, amplitude, length },
            ProfileSpec::Sine { amplitude, mode, .. } => ProfileSpec::Sine { amplitude, mode, length },
            other => other,
        }
    }
}

impl Profile for ProfileSpec {
    fn value(&self, x: f64) -> f64 {
        match self {
            ProfileSpec::Constant(c) => *c,
            ProfileSpec::SinSquared { base, amplitude, length } => {
                let s = (std::f64::consts::PI * x / length).sin();
                base + amplitude * s * s
            }
            ProfileSpec::Sine { amplitude, mode, length } => {
                amplitude * (*mode as f64 * std::f64::consts::PI * x / length).sin()
            }
            ProfileSpec::Linear { intercept, slope } => intercept + slope * x,
            ProfileSpec::Piecewise { breaks, values } => values[breaks.partition_point(|b| *b <= x)],
            ProfileSpec::Custom(f) => f(x),
        }
    }

    fn cell_average(&self, a: f64, b: f64) -> f64 {
        match self {
            ProfileSpec::Constant(c) => *c,
            ProfileSpec::Linear { intercept, slope } => intercept + slope * 0.5 * (a + b),
            ProfileSpec::Piecewise { breaks, values } => {
                let mut total = 0.0;
                let mut left = a;
                let mut piece = breaks.partition_point(|x| *x <= a);
                for &brk in &breaks[piece..] {
                    if brk >= b {
                        break;
                    }
                    total += values[piece] * (brk - left);
                    left = brk;
                    piece += 1;
                }
                total += values[piece] * (b - left);
                total / (b - a)
            }
            _ => {
                let m = 0.5 * (a + b);
                (quadrature::integrate(a, m, |x| self.value(x)) + quadrature::integrate(m, b, |x| self.value(x)))
                    / (b - a)
            }
        }
    }

    fn left_limit(&self, x: f64) -> f64 {
        match self {
            ProfileSpec::Piecewise { breaks, values } => values[breaks.partition_point(|b| *b < x)],
            _ => self.value(x),
        }
    }
}

/// Numerical initial data: exact (or Gauss) cell averages of `rho0`,
/// pointwise face samples of `u0` with the walls forced to zero.
pub fn init_state(grid: &GridSpec, rho0: &dyn Profile, u0: &dyn Profile) -> Result<FluidState> {
    let n = grid.cells;
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let avg = rho0.cell_average(grid.face(i), grid.face(i + 1));
        if avg.is_nan() || avg < RHO_FLOOR {
            return Err(Error::NonPositiveDensity { cell: i, value: avg });
        }
        rho.push(avg);
    }
    let mut u: Vec<f64> = (0..=n).map(|j| u0.left_limit(grid.face(j))).collect();
    if let Some(bad) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("initial velocity not finite at face {bad}")));
    }
    u[0] = 0.0;
    u[n] = 0.0;
    FluidState::new(rho, u, 0)
}

/// Per-step solver bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMeta {
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub fallback_used: bool,
}

/// States `k = 0..=M` together with the data that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub params: PhysParams,
    pub states: Vec<FluidState>,
    /// `meta[k - 1]` describes the solve producing `states[k]`.
    pub meta: Vec<StepMeta>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn initial_mass(&self) -> f64 {
        self.states[0].mass(self.grid.dx)
    }

    /// Solver tolerance of step `k >= 1`.
    pub fn tolerance(&self, k: usize) -> f64 {
        self.meta[k - 1].tolerance
    }

    pub fn eval_density(&self, k: usize, x: f64) -> Result<f64> {
        self.state(k)?.eval_density(&self.grid, x)
    }

    pub fn eval_velocity(&self, k: usize, x: f64) -> Result<f64> {
        self.state(k)?.eval_velocity(&self.grid, x)
    }

    fn state(&self, k: usize) -> Result<&FluidState> {
        self.states
            .get(k)
            .ok_or_else(|| Error::InvalidInput(format!("time index {k} beyond {} steps", self.steps())))
    }
}
