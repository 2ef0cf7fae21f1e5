//! Weak forms of the continuity and momentum equations evaluated on the
//! extended fields, against the numerical error functionals `P1`, `P2`.
//!
//! Step `k` occupies `[t_{k-1}, t_k)`; on it the extended density is `ρ^k`
//! (piecewise constant), the velocity `u^k` (piecewise linear) and the
//! discrete time derivative `(ρ^k - ρ^{k-1}) / dt`. Writing `φ̄^k` for the
//! time average of `φ` over the step and `φ_i^k` for its cell average,
//!
//! `P1 = -dt dx ΣΣ [∂_{j}ρ u⁻_j (φ_{j-1} - φ̄_j) + ∂_jρ u⁺_j (φ_j - φ̄_j)]`
//!
//! and, with `Q = ρû`,
//!
//! `P2 = -dt Σ_k (H1 + H2)`,
//! `H1 = Σ_i ∂_t Q_i [dx (v̄_i + v̄_{i+1}) / 2 - ∫_cell v̄]`,
//! `H2 = ½ Σ_j (Q_j - Q_{j-1}) [u_j⁺ (v̄_{j+1} - v̄_j) - u_j⁻ (v̄_j - v̄_{j-1})]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{hat_velocity, Trajectory};
use crate::operators::{neg, pos};
use crate::quadrature::gauss5;

/// Smooth space-time test function with its space derivative.
pub trait TestFunction: Sync {
    fn value(&self, t: f64, x: f64) -> f64;
    fn dx(&self, t: f64, x: f64) -> f64;
}

/// `sin(jπx/L) (1 - t/T)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTest {
    pub mode: u32,
    pub length: f64,
    pub final_time: f64,
}

impl SineTest {
    pub fn new(mode: u32, length: f64, final_time: f64) -> Self {
        Self { mode, length, final_time }
    }

    fn envelope(&self, t: f64) -> f64 {
        (1.0 - t / self.final_time).powi(2)
    }

    fn k(&self) -> f64 {
        self.mode as f64 * PI / self.length
    }
}

impl TestFunction for SineTest {
    fn value(&self, t: f64, x: f64) -> f64 {
        (self.k() * x).sin() * self.envelope(t)
    }

    fn dx(&self, t: f64, x: f64) -> f64 {
        self.k() * (self.k() * x).cos() * self.envelope(t)
    }
}

impl<F: TestFunction + ?Sized> TestFunction for &F {
    fn value(&self, t: f64, x: f64) -> f64 {
        (**self).value(t, x)
    }

    fn dx(&self, t: f64, x: f64) -> f64 {
        (**self).dx(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub lhs_weak: f64,
    pub error_term: f64,
}

impl WeakResidual {
    pub fn mismatch(&self) -> f64 {
        (self.lhs_weak - self.error_term).abs()
    }
}

const SUPPORT_TOL: f64 = 1e-12;

fn check_support(traj: &Trajectory, f: &dyn TestFunction) -> Result<()> {
    let (l, t_end) = (traj.grid.length, traj.grid.final_time);
    let scale = (0..=16)
        .flat_map(|a| (0..=16).map(move |b| (a as f64 / 16.0 * t_end, b as f64 / 16.0 * l)))
        .map(|(t, x)| f.value(t, x).abs())
        .fold(1.0_f64, f64::max);
    for s in 0..=32 {
        let frac = s as f64 / 32.0;
        let at_end = f.value(t_end, frac * l).abs();
        let left = f.value(frac * t_end, 0.0).abs();
        let right = f.value(frac * t_end, l).abs();
        if at_end > SUPPORT_TOL * scale {
            return Err(Error::InvalidInput(format!("test function does not vanish at t = T (x = {})", frac * l)));
        }
        if left.max(right) > SUPPORT_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "test function does not vanish on the boundary (t = {})",
                frac * t_end
            )));
        }
    }
    Ok(())
}

/// Time averages over step `k` at the face nodes, and space-time cell averages.
struct Averages {
    faces: Vec<f64>,
    cells: Vec<f64>,
}

fn averages(traj: &Trajectory, f: &dyn TestFunction, k: usize) -> Averages {
    let g = &traj.grid;
    let (t0, t1) = (g.time(k - 1), g.time(k));
    let time_nodes = gauss5(t0, t1);
    let faces = (0..=g.cells)
        .map(|j| time_nodes.iter().map(|&(t, w)| w * f.value(t, g.face(j))).sum::<f64>() / g.dt)
        .collect();
    let cells = (0..g.cells)
        .map(|i| {
            let space = gauss5(g.face(i), g.face(i + 1));
            let mut acc = 0.0;
            for &(t, wt) in &time_nodes {
                for &(x, wx) in &space {
                    acc += wt * wx * f.value(t, x);
                }
            }
            acc / (g.dt * g.dx)
        })
        .collect();
    Averages { faces, cells }
}

/// Space-time Gauss quadrature of `integrand(i, t, x)` over cell `i`, step `k`.
fn cell_integral(traj: &Trajectory, k: usize, i: usize, integrand: impl Fn(f64, f64) -> f64) -> f64 {
    let g = &traj.grid;
    let mut acc = 0.0;
    for &(t, wt) in &gauss5(g.time(k - 1), g.time(k)) {
        for &(x, wx) in &gauss5(g.face(i), g.face(i + 1)) {
            acc += wt * wx * integrand(t, x);
        }
    }
    acc
}

fn linear(u: &[f64], i: usize, x0: f64, dx: f64, x: f64) -> f64 {
    u[i] + (x - x0) / dx * (u[i + 1] - u[i])
}

/// `∫∫ ∂_t ρ_h φ - ρ_h u_h φ_x` and `P1(φ)`.
pub fn weak_residual_continuity(traj: &Trajectory, phi: &dyn TestFunction) -> Result<WeakResidual> {
    check_support(traj, phi)?;
    let g = &traj.grid;
    let (dt, dx) = (g.dt, g.dx);
    let mut lhs = 0.0;
    let mut p1 = 0.0;
    for k in 1..=traj.steps() {
        let prev = &traj.states[k - 1];
        let cur = &traj.states[k];
        let (rho, u) = (&cur.rho, &cur.u);
        let n = rho.len();
        for i in 0..n {
            let dt_rho = (rho[i] - prev.rho[i]) / dt;
            let x0 = g.face(i);
            lhs += cell_integral(traj, k, i, |t, x| {
                dt_rho * phi.value(t, x) - rho[i] * linear(u, i, x0, dx, x) * phi.dx(t, x)
            });
        }
        let avg = averages(traj, phi, k);
        let mut step = 0.0;
        for j in 1..n {
            let grad = (rho[j] - rho[j - 1]) / dx;
            step += grad * neg(u[j]) * (avg.cells[j - 1] - avg.faces[j]) + grad * pos(u[j]) * (avg.cells[j] - avg.faces[j]);
        }
        p1 -= dt * dx * step;
    }
    Ok(WeakResidual { lhs_weak: lhs, error_term: p1 })
}

/// `∫∫ ∂_t(ρû) v - ρû² v_x + (μ u_x - p(ρ)) v_x` and `P2(v)`.
pub fn weak_residual_momentum(traj: &Trajectory, v: &dyn TestFunction) -> Result<WeakResidual> {
    check_support(traj, v)?;
    let g = &traj.grid;
    let (dt, dx) = (g.dt, g.dx);
    let mu = traj.params.mu;
    let mut lhs = 0.0;
    let mut p2 = 0.0;
    for k in 1..=traj.steps() {
        let prev = &traj.states[k - 1];
        let cur = &traj.states[k];
        let (rho, u) = (&cur.rho, &cur.u);
        let n = rho.len();
        let hat = hat_velocity(u);
        let prev_hat = hat_velocity(&prev.u);
        let q: Vec<f64> = rho.iter().zip(&hat).map(|(r, h)| r * h).collect();
        let dt_q: Vec<f64> = (0..n).map(|i| (q[i] - prev.rho[i] * prev_hat[i]) / dt).collect();
        for i in 0..n {
            let flux = q[i] * hat[i];
            let sigma = mu * (u[i + 1] - u[i]) / dx - traj.params.pressure(rho[i]);
            lhs += cell_integral(traj, k, i, |t, x| dt_q[i] * v.value(t, x) + (sigma - flux) * v.dx(t, x));
        }
        let avg = averages(traj, v, k);
        let vf = &avg.faces;
        let h1: f64 = (0..n).map(|i| dt_q[i] * (0.5 * dx * (vf[i] + vf[i + 1]) - dx * avg.cells[i])).sum();
        let h2: f64 = (1..n)
            .map(|j| 0.5 * (q[j] - q[j - 1]) * (pos(u[j]) * (vf[j + 1] - vf[j]) - neg(u[j]) * (vf[j] - vf[j - 1])))
            .sum();
        p2 -= dt * (h1 + h2);
    }
    Ok(WeakResidual { lhs_weak: lhs, error_term: p2 })
}
