//! Discrete energy equality. For every step
//!
//! `E^k - E^{k-1} + μ dt dx Σ (∂_i u^k)² + N1 + N2 + N3 + N4 = O(residual)`
//!
//! with `E = dx Σ [ρ û² / 2 + p(ρ) / (γ - 1)]` and numerical diffusion
//! written as exact remainders of the internal energy `B = p / (γ - 1)`:
//! - `N1 = dx Σ D_B(ρ^{k-1}; ρ^k)`
//! - `N2 = dt Σ [-D_B(ρ_{i+1}; ρ_i) u⁻_{i+1/2} + D_B(ρ_{i-1}; ρ_i) u⁺_{i-1/2}]`
//! - `N3 = dx Σ ρ^{k-1} |û^k - û^{k-1}|² / 2`
//! - `N4 = dt dx Σ_faces (dx / 2) |Up(ρu)| |∂û|²`

use crate::diagnostics::renorm::{bregman, RenormFn, Renormalizer};
use crate::grid::{hat_velocity, FluidState, PhysParams, Trajectory};
use crate::operators::{neg, pos, upwind_mass_flux};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    /// `E^k` for `k = 0..=M`.
    pub energy: Vec<f64>,
    /// Cumulative `μ dt dx ΣΣ |∂_i u|²`, index `k = 0..=M` (zero at `k = 0`).
    pub dissipation: Vec<f64>,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
    pub n3: Vec<f64>,
    pub n4: Vec<f64>,
    /// `|E^m + dissipation + N1 + N2 + N3 + N4 - E^0|` for each `m`.
    pub balance_residual: Vec<f64>,
    /// `100 Σ_{k<=m} tol_k`.
    pub tolerance: Vec<f64>,
    /// Smallest single-step value of each numerical diffusion term.
    pub min_step_terms: [f64; 4],
}

impl EnergyLedger {
    pub fn worst_ratio(&self) -> f64 {
        self.balance_residual
            .iter()
            .zip(&self.tolerance)
            .skip(1)
            .map(|(r, t)| r / t)
            .fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.balance_residual.iter().zip(&self.tolerance).all(|(r, t)| r <= t)
    }
}

pub fn energy(state: &FluidState, params: &PhysParams, dx: f64) -> f64 {
    let hat = state.hat_velocity();
    let b = internal_energy_fn(params);
    dx * state
        .rho
        .iter()
        .zip(&hat)
        .map(|(r, h)| 0.5 * r * h * h + b.value(*r))
        .sum::<f64>()
}

fn internal_energy_fn(params: &PhysParams) -> RenormFn {
    RenormFn::InternalEnergy {
        a: params.a,
        gamma: params.gamma,
    }
}

pub fn energy_ledger(traj: &Trajectory) -> EnergyLedger {
    let (dt, dx) = (traj.grid.dt, traj.grid.dx);
    let mu = traj.params.mu;
    let b = internal_energy_fn(&traj.params);
    let m = traj.steps();
    let energy: Vec<f64> = traj.states.iter().map(|s| energy(s, &traj.params, dx)).collect();
    let mut cum = [vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1]];
    let mut min_step_terms = [0.0_f64; 4];
    let mut balance_residual = vec![0.0; m + 1];
    let mut tolerance = vec![0.0; m + 1];
    for k in 1..=m {
        let prev = &traj.states[k - 1];
        let cur = &traj.states[k];
        let (rho, u) = (&cur.rho, &cur.u);
        let n = rho.len();
        let hat = hat_velocity(u);
        let prev_hat = hat_velocity(&prev.u);
        let flux = upwind_mass_flux(rho, u);

        let diss = mu * dt * dx * u.windows(2).map(|w| ((w[1] - w[0]) / dx).powi(2)).sum::<f64>();
        let n1 = dx * (0..n).map(|i| bregman(&b, prev.rho[i], rho[i])).sum::<f64>();
        let n2 = dt
            * (0..n)
                .map(|i| {
                    let mut s = 0.0;
                    if i + 1 < n {
                        s -= bregman(&b, rho[i + 1], rho[i]) * neg(u[i + 1]);
                    }
                    if i > 0 {
                        s += bregman(&b, rho[i - 1], rho[i]) * pos(u[i]);
                    }
                    s
                })
                .sum::<f64>();
        let n3 = dx * (0..n).map(|i| 0.5 * prev.rho[i] * (hat[i] - prev_hat[i]).powi(2)).sum::<f64>();
        let n4 = dt
            * dx
            * (1..n)
                .map(|j| 0.5 * dx * flux[j].abs() * ((hat[j] - hat[j - 1]) / dx).powi(2))
                .sum::<f64>();
        for (slot, v) in [diss, n1, n2, n3, n4].into_iter().enumerate() {
            cum[slot][k] = cum[slot][k - 1] + v;
        }
        for (slot, v) in [n1, n2, n3, n4].into_iter().enumerate() {
            min_step_terms[slot] = if k == 1 { v } else { min_step_terms[slot].min(v) };
        }
        let total: f64 = cum.iter().map(|c| c[k]).sum();
        balance_residual[k] = (energy[k] + total - energy[0]).abs();
        tolerance[k] = tolerance[k - 1] + 100.0 * traj.tolerance(k);
    }
    let [dissipation, n1, n2, n3, n4] = cum;
    EnergyLedger {
        energy,
        dissipation,
        n1,
        n2,
        n3,
        n4,
        balance_residual,
        tolerance,
        min_step_terms,
    }
}
