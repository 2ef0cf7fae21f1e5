//! Exact discrete identities, error functionals and norms computed from a
//! trajectory.

mod energy;
mod flux;
mod norms;
mod positivity;
mod rates;
mod renorm;
mod weak;

pub use energy::{energy, energy_ledger, EnergyLedger};
pub use flux::{flux_ledger, FluxLedger};
pub use norms::{abs_linear_power, norm_suite, NormSuite};
pub use positivity::{positivity_bound, positivity_report, PositivityRow};
pub use rates::{error_rates, theoretical_floors, ErrorRates, Order, RateSample, ORDER_SLACK};
pub use renorm::{bregman, entropy_balance, renorm_residual, RenormFn, RenormStep, Renormalizer};
pub use weak::{weak_residual_continuity, weak_residual_momentum, SineTest, TestFunction, WeakResidual};

use crate::error::Result;
use crate::grid::Trajectory;
use crate::stepper::{assemble_residual, POSITIVITY_SLACK};

/// Relative tolerance on mass conservation.
pub const MASS_TOL: f64 = 1e-12;
/// Absolute tolerance for `lhs_weak == P`.
pub const WEAK_TOL: f64 = 1e-8;
/// Mode of the default continuity test function `sin(jπx/L)(1 - t/T)²`.
pub const CONTINUITY_MODE: u32 = 1;
/// Mode of the default momentum test function. Mirror-symmetric data give an
/// odd momentum, which every odd mode annihilates; `j = 2` does not.
pub const MOMENTUM_MODE: u32 = 2;
/// Floor for individual numerical diffusion terms.
pub const DIFFUSION_FLOOR: f64 = -1e-12;

/// One checked identity or inequality: passes when `value <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub checks: Vec<IdentityCheck>,
    pub energy: EnergyLedger,
    pub positivity: Vec<PositivityRow>,
    /// Flux ledgers at the checkpoints `M/4, M/2, M` (distinct, nonzero).
    pub flux: Vec<FluxLedger>,
    pub weak_continuity: Option<WeakResidual>,
    pub weak_momentum: Option<WeakResidual>,
    pub norms: NormSuite,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    /// Flux ledger at the final step, if any step was taken.
    pub fn final_flux(&self) -> Option<&FluxLedger> {
        self.flux.last()
    }

    /// Smallest margin against `min ρ^{k-1} / (1 + dt max|u^k|)`.
    pub fn min_positivity_margin(&self) -> f64 {
        self.positivity.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Checkpoints `M/4, M/2, M` without duplicates or zero.
pub fn checkpoints(steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [steps / 4, steps / 2, steps].into_iter().filter(|m| *m > 0).collect();
    out.dedup();
    out
}

/// Runs the identity suite on `traj`.
pub fn diagnose(traj: &Trajectory) -> Result<DiagnosticsReport> {
    let g = &traj.grid;
    let mut checks = Vec::new();

    let mut worst_scheme: f64 = 0.0;
    for k in 1..=traj.steps() {
        let r = assemble_residual(&traj.states[k - 1], &traj.states[k], g, &traj.params)?;
        worst_scheme = worst_scheme.max(r.max_norm() / traj.tolerance(k));
    }
    checks.push(IdentityCheck::new("scheme residual / tolerance", worst_scheme, 1.0));

    let m0 = traj.initial_mass();
    let drift = traj.states.iter().map(|s| (s.mass(g.dx) - m0).abs()).fold(0.0, f64::max);
    checks.push(IdentityCheck::new("mass drift", drift, MASS_TOL * m0));

    let positivity = positivity_report(traj);
    let worst_div = positivity
        .iter()
        .map(|r| -r.divergence_margin / (1.0 + r.divergence_bound))
        .fold(f64::NEG_INFINITY, f64::max);
    if !positivity.is_empty() {
        checks.push(IdentityCheck::new("positivity (divergence bound) deficit", worst_div, POSITIVITY_SLACK));
    }

    let energy = energy_ledger(traj);
    if traj.steps() > 0 {
        checks.push(IdentityCheck::new("energy balance / tolerance", energy.worst_ratio(), 1.0));
        for (name, v) in ["N1", "N2", "N3", "N4"].iter().zip(energy.min_step_terms) {
            checks.push(IdentityCheck::new(format!("{name} step minimum (negated)"), -v, -DIFFUSION_FLOOR));
        }
    }

    let gamma = traj.params.gamma;
    for f in [RenormFn::Square, RenormFn::Power(gamma), RenormFn::Entropy] {
        let steps = renorm_residual(traj, &f)?;
        let ratio = steps.iter().map(|s| s.max_residual() / s.tolerance.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        let growth = steps
            .iter()
            .map(|s| s.functional_change / (g.dt * g.length * s.tolerance).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if !steps.is_empty() {
            checks.push(IdentityCheck::new(format!("renormalized {} residual / tolerance", f.label()), ratio, 1.0));
            checks.push(IdentityCheck::new(format!("{} functional growth / tolerance", f.label()), growth, 1.0));
        }
    }
    if traj.steps() > 0 {
        let tol: f64 = (1..=traj.steps()).map(|k| 10.0 * g.dt * g.length * traj.tolerance(k)).sum();
        checks.push(IdentityCheck::new("entropy inequality", entropy_balance(traj), tol));
    }

    let mut flux = Vec::new();
    for m in checkpoints(traj.steps()) {
        let ledger = flux_ledger(traj, m)?;
        checks.push(IdentityCheck::new(format!("flux identity m={m}"), ledger.residual(), ledger.tolerance));
        checks.push(IdentityCheck::new(format!("flux S1 split m={m}"), ledger.s1_residual(), ledger.tolerance));
        checks.push(IdentityCheck::new(format!("flux S2 split m={m}"), ledger.s2_residual(), ledger.tolerance));
        flux.push(ledger);
    }

    let (mut weak_continuity, mut weak_momentum) = (None, None);
    if traj.steps() > 0 {
        let wc = weak_residual_continuity(traj, &SineTest::new(CONTINUITY_MODE, g.length, g.final_time))?;
        let wm = weak_residual_momentum(traj, &SineTest::new(MOMENTUM_MODE, g.length, g.final_time))?;
        checks.push(IdentityCheck::new("weak continuity |lhs - P1|", wc.mismatch(), WEAK_TOL));
        checks.push(IdentityCheck::new("weak momentum |lhs - P2|", wm.mismatch(), WEAK_TOL));
        weak_continuity = Some(wc);
        weak_momentum = Some(wm);
    }

    Ok(DiagnosticsReport {
        checks,
        energy,
        positivity,
        flux,
        weak_continuity,
        weak_momentum,
        norms: norm_suite(traj),
    })
}
