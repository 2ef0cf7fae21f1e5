//! Renormalized continuity scheme: for a convex `B` the discrete identity
//!
//! `∂_t B(ρ_i) + ∂_i Up(B(ρ)u) + b(ρ_i) ∂_i u + T_i + S_i / dx = B'(ρ_i) cont_i`
//!
//! holds exactly, with `b(z) = z B'(z) - B(z)` and the Bregman remainders
//! `T_i = D_B(ρ_i^{k-1}; ρ_i^k) / dt` (time) and
//! `S_i = -D_B(ρ_{i+1}; ρ_i) u⁻_{i+1/2} + D_B(ρ_{i-1}; ρ_i) u⁺_{i-1/2}` (space).

use crate::error::{Error, Result};
use crate::grid::Trajectory;
use crate::operators::{neg, pos, upwind_mass_flux};

/// A scalar function with first derivative, used as a renormalization.
pub trait Renormalizer: Sync {
    fn value(&self, z: f64) -> f64;
    fn derivative(&self, z: f64) -> f64;
    fn label(&self) -> String;

    /// `b(z) = z B'(z) - B(z)`.
    fn pressure_like(&self, z: f64) -> f64 {
        z * self.derivative(z) - self.value(z)
    }
}

/// `D_B(y; x) = B(y) - B(x) - B'(x)(y - x)`.
pub fn bregman(f: &dyn Renormalizer, y: f64, x: f64) -> f64 {
    f.value(y) - f.value(x) - f.derivative(x) * (y - x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenormFn {
    /// `z²`
    Square,
    /// `z^p`
    Power(f64),
    /// `z log z`
    Entropy,
    /// `a z^γ / (γ - 1)`, the internal energy density.
    InternalEnergy { a: f64, gamma: f64 },
}

impl Renormalizer for RenormFn {
    fn value(&self, z: f64) -> f64 {
        match *self {
            RenormFn::Square => z * z,
            RenormFn::Power(p) => z.powf(p),
            RenormFn::Entropy => z * z.ln(),
            RenormFn::InternalEnergy { a, gamma } => a * z.powf(gamma) / (gamma - 1.0),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match *self {
            RenormFn::Square => 2.0 * z,
            RenormFn::Power(p) => p * z.powf(p - 1.0),
            RenormFn::Entropy => z.ln() + 1.0,
            RenormFn::InternalEnergy { a, gamma } => a * gamma * z.powf(gamma - 1.0) / (gamma - 1.0),
        }
    }

    fn label(&self) -> String {
        match *self {
            RenormFn::Square => "z^2".into(),
            RenormFn::Power(p) => format!("z^{p}"),
            RenormFn::Entropy => "z log z".into(),
            RenormFn::InternalEnergy { .. } => "p/(gamma-1)".into(),
        }
    }
}

/// Renormalization residuals of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormStep {
    pub k: usize,
    /// Per-cell residual of the renormalized identity.
    pub residual: Vec<f64>,
    /// `10 tol_k max|B'(ρ)|`.
    pub tolerance: f64,
    /// `dx Σ B(ρ^k) - dx Σ B(ρ^{k-1}) + dt dx Σ b(ρ^k) ∂_i u^k`; nonpositive
    /// up to the solve tolerance when `B` is convex.
    pub functional_change: f64,
    /// Time and space remainders summed: `dt dx Σ T_i + dt Σ S_i`.
    pub remainder: f64,
}

impl RenormStep {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Renormalized residuals for every step of `traj`.
pub fn renorm_residual(traj: &Trajectory, f: &dyn Renormalizer) -> Result<Vec<RenormStep>> {
    let (dt, dx) = (traj.grid.dt, traj.grid.dx);
    for state in &traj.states {
        if let Some(z) = state.rho.iter().find(|z| !(f.value(**z).is_finite() && f.derivative(**z).is_finite())) {
            return Err(Error::InvalidInput(format!(
                "renormalization {} is not C^1 at density {z}",
                f.label()
            )));
        }
    }
    let mut out = Vec::with_capacity(traj.steps());
    for k in 1..=traj.steps() {
        let prev = &traj.states[k - 1];
        let cur = &traj.states[k];
        let (rho, u) = (&cur.rho, &cur.u);
        let n = rho.len();
        let b_rho: Vec<f64> = rho.iter().map(|z| f.value(*z)).collect();
        let flux = upwind_mass_flux(&b_rho, u);
        let mut residual = Vec::with_capacity(n);
        let mut functional_change = 0.0;
        let mut remainder = 0.0;
        let mut max_db = 0.0_f64;
        for i in 0..n {
            let div = (u[i + 1] - u[i]) / dx;
            let time = bregman(f, prev.rho[i], rho[i]) / dt;
            let mut space = 0.0;
            if i + 1 < n {
                space -= bregman(f, rho[i + 1], rho[i]) * neg(u[i + 1]);
            }
            if i > 0 {
                space += bregman(f, rho[i - 1], rho[i]) * pos(u[i]);
            }
            let r = (b_rho[i] - f.value(prev.rho[i])) / dt
                + (flux[i + 1] - flux[i]) / dx
                + f.pressure_like(rho[i]) * div
                + time
                + space / dx;
            residual.push(r);
            functional_change += dx * (b_rho[i] - f.value(prev.rho[i])) + dt * dx * f.pressure_like(rho[i]) * div;
            remainder += dt * dx * time + dt * space;
            max_db = max_db.max(f.derivative(rho[i]).abs());
        }
        out.push(RenormStep {
            k,
            residual,
            tolerance: 10.0 * traj.tolerance(k) * max_db,
            functional_change,
            remainder,
        });
    }
    Ok(out)
}

/// Cumulative entropy balance for `B = z log z`:
/// `dx Σ ρ^m log ρ^m - dx Σ ρ^0 log ρ^0 + dt dx Σ_k Σ_i ρ_i^k ∂_i u^k`,
/// which the convexity remainders make nonpositive.
pub fn entropy_balance(traj: &Trajectory) -> f64 {
    let f = RenormFn::Entropy;
    let dx = traj.grid.dx;
    let total = |k: usize| dx * traj.states[k].rho.iter().map(|z| f.value(*z)).sum::<f64>();
    let work: f64 = (1..=traj.steps())
        .map(|k| {
            let s = &traj.states[k];
            traj.grid.dt * s.rho.iter().enumerate().map(|(i, r)| r * (s.u[i + 1] - s.u[i])).sum::<f64>()
        })
        .sum();
    total(traj.steps()) - total(0) + work
}
