//! Density lower bounds step by step.

use crate::grid::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityRow {
    pub k: usize,
    pub min_rho: f64,
    /// `min ρ^{k-1} / (1 + dt max |u^k|)`.
    pub bound: f64,
    pub margin: f64,
    /// `min ρ^{k-1} / (1 + dt max (∂_i u^k)⁺)`, the bound the continuity
    /// scheme actually implies.
    pub divergence_bound: f64,
    pub divergence_margin: f64,
}

/// `min ρ_prev / (1 + dt max |u|)`.
pub fn positivity_bound(min_prev: f64, dt: f64, max_abs_u: f64) -> f64 {
    min_prev / (1.0 + dt * max_abs_u)
}

pub fn positivity_report(traj: &Trajectory) -> Vec<PositivityRow> {
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (dt, dx) = (traj.grid.dt, traj.grid.dx);
    (1..=traj.steps())
        .map(|k| {
            let prev = min(&traj.states[k - 1].rho);
            let cur = &traj.states[k];
            let min_rho = min(&cur.rho);
            let max_u = cur.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let max_div = cur.u.windows(2).map(|w| (w[1] - w[0]) / dx).fold(0.0_f64, f64::max);
            let bound = positivity_bound(prev, dt, max_u);
            let divergence_bound = positivity_bound(prev, dt, max_div);
            PositivityRow {
                k,
                min_rho,
                bound,
                margin: min_rho - bound,
                divergence_bound,
                divergence_margin: min_rho - divergence_bound,
            }
        })
        .collect()
}
