//! Effective viscous flux identity. Testing the momentum scheme with
//! `v^k = ∂ Δ^{-1}[ρ^k - M/L]` and summing over steps `k = 1..m` gives
//!
//! `lhs = up_term + terminal + initial + E1 + E2`
//!
//! where `lhs = -dt dx ΣΣ (μ ∂_i u - p(ρ_i)) (ρ_i - M/L)`, `A_j = (Q_{j-1} + Q_j) / 2`
//! is the face-averaged momentum (`Q = ρ û`), and
//! - `up_term = dt dx ΣΣ Up(ρûu)_j M/L`
//! - `terminal = -dx Σ ∂Δ^{-1}[A^m]_i ρ_i^m`, `initial = dx Σ ∂Δ^{-1}[A^0]_i ρ_i^0`
//! - `E1 = -dt dx ΣΣ Up(ρu)_j (A_j^k - A_j^{k-1})`
//! - `E2 = dt dx ΣΣ ρ_{j-1} ρ_j |u_j| (û_j - û_{j-1}) / 2`.
//!
//! The two halves `S1` (time derivative against `v`) and `S2` (convection
//! against `v`) are kept so each can be checked on its own.

use crate::error::{Error, Result};
use crate::grid::{hat_velocity, FluidState, Trajectory};
use crate::operators::{dirichlet_inv_grad, neumann_inv_grad, upwind_mass_flux, upwind_momentum_flux};

#[derive(Debug, Clone, PartialEq)]
pub struct FluxLedger {
    pub m: usize,
    pub lhs: f64,
    pub up_term: f64,
    pub terminal: f64,
    pub initial: f64,
    pub e1: f64,
    pub e2: f64,
    /// `dt dx ΣΣ ∂_t A · v`.
    pub s1: f64,
    /// `dt dx ΣΣ (Up_{j+1} - Up_{j-1}) / (2 dx) · v`.
    pub s2: f64,
    /// `dt dx ΣΣ Up(ρûu)_j (ρ_{j-1} + ρ_j) / 2`, the term S1 and S2 share.
    pub cross: f64,
    /// `100 Σ_{k<=m} tol_k`.
    pub tolerance: f64,
}

impl FluxLedger {
    pub fn rhs(&self) -> f64 {
        self.up_term + self.terminal + self.initial + self.e1 + self.e2
    }

    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs()).abs()
    }

    /// `|lhs - (S1 + S2)|`: the momentum scheme tested with `v`.
    pub fn split_residual(&self) -> f64 {
        (self.lhs - self.s1 - self.s2).abs()
    }

    /// `|S1 - (cross + terminal + initial + E1 + E2)|`.
    pub fn s1_residual(&self) -> f64 {
        (self.s1 - (self.cross + self.terminal + self.initial + self.e1 + self.e2)).abs()
    }

    /// `|S2 - (up_term - cross)|`.
    pub fn s2_residual(&self) -> f64 {
        (self.s2 - (self.up_term - self.cross)).abs()
    }

    pub fn holds(&self) -> bool {
        [self.residual(), self.split_residual(), self.s1_residual(), self.s2_residual()]
            .iter()
            .all(|r| *r <= self.tolerance)
    }
}

/// Face-averaged momentum on interior faces.
fn face_momentum(state: &FluidState) -> Vec<f64> {
    let hat = state.hat_velocity();
    let q: Vec<f64> = state.rho.iter().zip(&hat).map(|(r, h)| r * h).collect();
    q.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

pub fn flux_ledger(traj: &Trajectory, m: usize) -> Result<FluxLedger> {
    if m == 0 || m > traj.steps() {
        return Err(Error::InvalidInput(format!(
            "checkpoint {m} outside 1..={} steps",
            traj.steps()
        )));
    }
    let (dt, dx) = (traj.grid.dt, traj.grid.dx);
    let mean = traj.initial_mass() / traj.grid.length;
    let mu = traj.params.mu;
    let mut ledger = FluxLedger {
        m,
        lhs: 0.0,
        up_term: 0.0,
        terminal: 0.0,
        initial: 0.0,
        e1: 0.0,
        e2: 0.0,
        s1: 0.0,
        s2: 0.0,
        cross: 0.0,
        tolerance: 0.0,
    };
    let mut a_prev = face_momentum(&traj.states[0]);
    for k in 1..=m {
        let cur = &traj.states[k];
        let (rho, u) = (&cur.rho, &cur.u);
        let n = rho.len();
        let hat = hat_velocity(u);
        let a = face_momentum(cur);
        let mass_flux = upwind_mass_flux(rho, u);
        let mom_flux = upwind_momentum_flux(rho, &hat, u);
        let centred: Vec<f64> = rho.iter().map(|r| r - mean).collect();
        let v = neumann_inv_grad(&centred, dx)?;

        for i in 0..n {
            let sigma = mu * (u[i + 1] - u[i]) / dx - traj.params.pressure(rho[i]);
            ledger.lhs -= dt * dx * sigma * centred[i];
        }
        for j in 1..n {
            let dt_a = (a[j - 1] - a_prev[j - 1]) / dt;
            let conv = (mom_flux[j + 1] - mom_flux[j - 1]) / (2.0 * dx);
            ledger.s1 += dt * dx * dt_a * v[j];
            ledger.s2 += dt * dx * conv * v[j];
            ledger.up_term += dt * dx * mom_flux[j] * mean;
            ledger.cross += dt * dx * mom_flux[j] * 0.5 * (rho[j - 1] + rho[j]);
            ledger.e1 -= dt * dx * mass_flux[j] * (a[j - 1] - a_prev[j - 1]);
            ledger.e2 += dt * dx * rho[j - 1] * rho[j] * u[j].abs() * 0.5 * (hat[j] - hat[j - 1]);
        }
        ledger.tolerance += 100.0 * traj.tolerance(k);
        a_prev = a;
    }
    let pairing = |a: &[f64], rho: &[f64]| -> f64 {
        dirichlet_inv_grad(a, dx).iter().zip(rho).map(|(g, r)| g * r).sum::<f64>() * dx
    };
    ledger.terminal = -pairing(&face_momentum(&traj.states[m]), &traj.states[m].rho);
    ledger.initial = pairing(&face_momentum(&traj.states[0]), &traj.states[0].rho);
    Ok(ledger)
}
