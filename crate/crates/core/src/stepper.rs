//! One implicit step of the staggered upwind scheme and the time loop.
//!
//! Unknowns are interleaved as `(ρ_0, u_1, ρ_1, u_2, ..., u_{N-1}, ρ_{N-1})`
//! where `u_j` is the velocity on interior face `j`; equations use the same
//! ordering (continuity of cell `i` on row `2i`, momentum of face `j` on
//! row `2j - 1`). Every equation couples at most three cells and three faces,
//! so the Jacobian has four sub- and four super-diagonals.

use crate::banded::BandMatrix;
use crate::error::{Error, Result, StepFailure};
use crate::grid::{hat_velocity, FluidState, GridSpec, PhysParams, StepMeta, Trajectory};
use crate::operators::{neg, pos, thomas, upwind_mass_flux, upwind_momentum_flux};

const BAND: usize = 4;
/// Slack on the post-hoc positivity check.
pub const POSITIVITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative scale of the residual tolerance: a step is accepted once the
    /// max-norm residual is at most `newton_tol * (1 + |R(guess)|)`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Backtracking factor of the damped Newton update.
    pub damping: f64,
    /// Iteration cap of the Picard fallback.
    pub fallback_iters: usize,
    /// Smooth the `u±` switches in the Jacobian (the residual is unchanged).
    pub regularize_upwind: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton_iters: 50,
            damping: 0.5,
            fallback_iters: 500,
            regularize_upwind: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::InvalidInput(format!("newton_tol must be > 0, got {}", self.newton_tol)));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidInput("max_newton_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn tolerance(&self, guess_residual: f64) -> f64 {
        self.newton_tol * (1.0 + guess_residual)
    }
}

/// Residual of the discrete system: `N` continuity rows and `N - 1`
/// momentum rows (interior faces).
#[derive(Debug, Clone, PartialEq)]
pub struct StepResidual {
    pub cont: Vec<f64>,
    pub mom: Vec<f64>,
}

impl StepResidual {
    pub fn max_norm(&self) -> f64 {
        self.cont.iter().chain(&self.mom).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn packed(&self) -> Vec<f64> {
        let n = self.cont.len();
        let mut out = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            out.push(self.cont[i]);
            if i + 1 < n {
                out.push(self.mom[i]);
            }
        }
        out
    }
}

/// Residual of the scheme for `trial` given the previous level `prev`.
pub fn assemble_residual(
    prev: &FluidState,
    trial: &FluidState,
    grid: &GridSpec,
    params: &PhysParams,
) -> Result<StepResidual> {
    if trial.u[0] != 0.0 || trial.u[trial.cells()] != 0.0 {
        return Err(Error::InvalidInput("trial velocity must vanish on the walls".into()));
    }
    residual(&prev.rho, &prev.u, &trial.rho, &trial.u, grid, params)
}

fn residual(
    prev_rho: &[f64],
    prev_u: &[f64],
    rho: &[f64],
    u: &[f64],
    grid: &GridSpec,
    params: &PhysParams,
) -> Result<StepResidual> {
    if let Some((cell, &value)) = rho.iter().enumerate().find(|(_, r)| r.is_nan() || **r <= 0.0) {
        return Err(Error::NonPositiveDensity { cell, value });
    }
    let n = rho.len();
    let (dt, dx) = (grid.dt, grid.dx);
    let hat = hat_velocity(u);
    let prev_hat = hat_velocity(prev_u);
    let mass_flux = upwind_mass_flux(rho, u);
    let mom_flux = upwind_momentum_flux(rho, &hat, u);

    let cont = (0..n)
        .map(|i| (rho[i] - prev_rho[i]) / dt + (mass_flux[i + 1] - mass_flux[i]) / dx)
        .collect();

    let q = |i: usize| rho[i] * hat[i];
    let qp = |i: usize| prev_rho[i] * prev_hat[i];
    let mom = (1..n)
        .map(|j| {
            let time = (q(j - 1) + q(j) - qp(j - 1) - qp(j)) / (2.0 * dt);
            let convection = (mom_flux[j + 1] - mom_flux[j - 1]) / (2.0 * dx);
            let viscous = params.mu * (u[j - 1] - 2.0 * u[j] + u[j + 1]) / (dx * dx);
            let pressure = (params.pressure(rho[j]) - params.pressure(rho[j - 1])) / dx;
            time + convection - viscous + pressure
        })
        .collect();
    Ok(StepResidual { cont, mom })
}

#[inline]
fn rho_var(i: usize) -> usize {
    2 * i
}

#[inline]
fn u_var(j: usize) -> usize {
    2 * j - 1
}

type Grad = Vec<(usize, f64)>;

struct Switch {
    width: Option<f64>,
}

impl Switch {
    fn dpos(&self, u: f64) -> f64 {
        match self.width {
            Some(w) => 0.5 * (1.0 + (u / w).tanh()),
            None if u > 0.0 => 1.0,
            None => 0.0,
        }
    }

    fn dneg(&self, u: f64) -> f64 {
        match self.width {
            Some(w) => 0.5 * (1.0 - (u / w).tanh()),
            None if u < 0.0 => 1.0,
            None => 0.0,
        }
    }
}

/// Gradient of the upwind flux `D_{j-1} u_j⁺ + D_j u_j⁻` on interior face `j`.
fn flux_grad(j: usize, donor: &[f64], donor_grad: &[Grad], u: &[f64], switch: &Switch) -> Grad {
    let mut g = vec![(u_var(j), donor[j - 1] * switch.dpos(u[j]) + donor[j] * switch.dneg(u[j]))];
    g.extend(donor_grad[j - 1].iter().map(|&(v, d)| (v, d * pos(u[j]))));
    g.extend(donor_grad[j].iter().map(|&(v, d)| (v, d * neg(u[j]))));
    g
}

/// Exact Jacobian of the residual with respect to the interleaved unknowns.
/// The `u±` kinks use the active-set convention (derivative 0 at `u = 0`).
pub fn assemble_jacobian(
    prev: &FluidState,
    trial: &FluidState,
    grid: &GridSpec,
    params: &PhysParams,
) -> BandMatrix {
    let _ = prev; // the Jacobian does not depend on the previous level
    jacobian(&trial.rho, &trial.u, grid, params, false)
}

fn jacobian(rho: &[f64], u: &[f64], grid: &GridSpec, params: &PhysParams, regularize: bool) -> BandMatrix {
    let n = rho.len();
    let (dt, dx) = (grid.dt, grid.dx);
    let switch = Switch {
        width: regularize.then(|| 1e-6 * (1.0 + u.iter().fold(0.0_f64, |m, v| m.max(v.abs())))),
    };
    let hat = hat_velocity(u);
    let momentum: Vec<f64> = rho.iter().zip(&hat).map(|(r, h)| r * h).collect();
    let rho_grad: Vec<Grad> = (0..n).map(|i| vec![(rho_var(i), 1.0)]).collect();
    let momentum_grad: Vec<Grad> = (0..n)
        .map(|i| {
            let mut g = vec![(rho_var(i), hat[i])];
            if i >= 1 {
                g.push((u_var(i), 0.5 * rho[i]));
            }
            if i + 1 < n {
                g.push((u_var(i + 1), 0.5 * rho[i]));
            }
            g
        })
        .collect();
    let mass_flux: Vec<Grad> = (0..=n)
        .map(|j| if j == 0 || j == n { Vec::new() } else { flux_grad(j, rho, &rho_grad, u, &switch) })
        .collect();
    let mom_flux: Vec<Grad> = (0..=n)
        .map(|j| {
            if j == 0 || j == n {
                Vec::new()
            } else {
                flux_grad(j, &momentum, &momentum_grad, u, &switch)
            }
        })
        .collect();

    let mut jac = BandMatrix::zeros(2 * n - 1, BAND, BAND);
    for i in 0..n {
        let row = rho_var(i);
        jac.add(row, rho_var(i), 1.0 / dt);
        for &(v, d) in &mass_flux[i + 1] {
            jac.add(row, v, d / dx);
        }
        for &(v, d) in &mass_flux[i] {
            jac.add(row, v, -d / dx);
        }
    }
    let visc = params.mu / (dx * dx);
    for j in 1..n {
        let row = u_var(j);
        for &(v, d) in momentum_grad[j - 1].iter().chain(&momentum_grad[j]) {
            jac.add(row, v, d / (2.0 * dt));
        }
        for &(v, d) in &mom_flux[j + 1] {
            jac.add(row, v, d / (2.0 * dx));
        }
        for &(v, d) in &mom_flux[j - 1] {
            jac.add(row, v, -d / (2.0 * dx));
        }
        jac.add(row, u_var(j), 2.0 * visc);
        if j >= 2 {
            jac.add(row, u_var(j - 1), -visc);
        }
        if j + 1 < n {
            jac.add(row, u_var(j + 1), -visc);
        }
        jac.add(row, rho_var(j), params.pressure_derivative(rho[j]) / dx);
        jac.add(row, rho_var(j - 1), -params.pressure_derivative(rho[j - 1]) / dx);
    }
    jac
}

struct Iterate {
    rho: Vec<f64>,
    u: Vec<f64>,
    res: StepResidual,
    norm: f64,
}

enum NewtonOutcome {
    Converged { iterations: usize },
    Stalled,
}

struct StepProblem<'a> {
    prev: &'a FluidState,
    grid: &'a GridSpec,
    params: &'a PhysParams,
    cfg: &'a SolverConfig,
    tol: f64,
    history: Vec<f64>,
}

impl StepProblem<'_> {
    fn evaluate(&self, rho: Vec<f64>, u: Vec<f64>) -> Result<Iterate> {
        let res = residual(&self.prev.rho, &self.prev.u, &rho, &u, self.grid, self.params)?;
        let norm = res.max_norm();
        Ok(Iterate { rho, u, res, norm })
    }

    /// Damped semismooth Newton. Each update is halved until every density
    /// is positive and the residual does not grow.
    fn newton(&mut self, it: &mut Iterate) -> NewtonOutcome {
        let n = it.rho.len();
        for pass in 1..=self.cfg.max_newton_iters {
            if it.norm <= self.tol {
                return NewtonOutcome::Converged { iterations: pass };
            }
            let jac = jacobian(&it.rho, &it.u, self.grid, self.params, self.cfg.regularize_upwind);
            let rhs: Vec<f64> = it.res.packed().iter().map(|v| -v).collect();
            let Ok(delta) = jac.solve(&rhs) else {
                return NewtonOutcome::Stalled;
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let rho: Vec<f64> = (0..n).map(|i| it.rho[i] + lambda * delta[rho_var(i)]).collect();
                if rho.iter().all(|r| *r > 0.0) {
                    let mut u = it.u.clone();
                    for j in 1..n {
                        u[j] += lambda * delta[u_var(j)];
                    }
                    if let Ok(cand) = self.evaluate(rho, u) {
                        if cand.norm.is_finite() && (cand.norm < it.norm || cand.norm <= self.tol) {
                            accepted = Some(cand);
                            break;
                        }
                    }
                }
                lambda *= self.cfg.damping;
            }
            match accepted {
                Some(next) => {
                    *it = next;
                    self.history.push(it.norm);
                }
                None => return NewtonOutcome::Stalled,
            }
        }
        if it.norm <= self.tol {
            NewtonOutcome::Converged { iterations: self.cfg.max_newton_iters }
        } else {
            NewtonOutcome::Stalled
        }
    }

    /// One Picard sweep with lagged transport: the continuity equation is
    /// solved for the densities with the current velocities, then the
    /// momentum equation is solved for the velocities with the new densities
    /// and the current upwind directions. Both solves are linear.
    fn picard_sweep(&self, it: &Iterate) -> Result<Iterate> {
        let n = it.rho.len();
        let (dt, dx) = (self.grid.dt, self.grid.dx);
        let lag = &it.u;
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let rhs: Vec<f64> = self.prev.rho.iter().map(|r| r / dt).collect();
        for i in 0..n {
            diag[i] = 1.0 / dt + (pos(lag[i + 1]) - neg(lag[i])) / dx;
            sup[i] = neg(lag[i + 1]) / dx;
            sub[i] = -pos(lag[i]) / dx;
        }
        let rho = thomas(&sub, &diag, &sup, &rhs)?;

        // Velocities u_1..u_{N-1} stored at index j - 1.
        let m = n - 1;
        let mut mat = BandMatrix::zeros(m, 2, 2);
        let prev_hat = hat_velocity(&self.prev.u);
        let qp = |i: usize| self.prev.rho[i] * prev_hat[i];
        let q_coeffs = |i: usize| {
            let mut c = Vec::with_capacity(2);
            if i >= 1 {
                c.push((i - 1, 0.5 * rho[i]));
            }
            if i + 1 < n {
                c.push((i, 0.5 * rho[i]));
            }
            c
        };
        let flux_coeffs = |j: usize| -> Vec<(usize, f64)> {
            if j == 0 || j == n {
                return Vec::new();
            }
            let mut c: Vec<(usize, f64)> = q_coeffs(j - 1).into_iter().map(|(k, v)| (k, v * pos(lag[j]))).collect();
            c.extend(q_coeffs(j).into_iter().map(|(k, v)| (k, v * neg(lag[j]))));
            c
        };
        let visc = self.params.mu / (dx * dx);
        let mut b = vec![0.0; m];
        for j in 1..n {
            let row = j - 1;
            for (k, v) in q_coeffs(j - 1).into_iter().chain(q_coeffs(j)) {
                mat.add(row, k, v / (2.0 * dt));
            }
            for (k, v) in flux_coeffs(j + 1) {
                mat.add(row, k, v / (2.0 * dx));
            }
            for (k, v) in flux_coeffs(j - 1) {
                mat.add(row, k, -v / (2.0 * dx));
            }
            mat.add(row, row, 2.0 * visc);
            if j >= 2 {
                mat.add(row, row - 1, -visc);
            }
            if j + 1 < n {
                mat.add(row, row + 1, -visc);
            }
            b[row] = (qp(j - 1) + qp(j)) / (2.0 * dt)
                - (self.params.pressure(rho[j]) - self.params.pressure(rho[j - 1])) / dx;
        }
        let inner = mat.solve(&b)?;
        let mut u = vec![0.0; n + 1];
        u[1..n].copy_from_slice(&inner);
        self.evaluate(rho, u)
    }

    fn failure(&self, reason: &str, it: &Iterate) -> Error {
        Error::StepFailure {
            step: self.prev.k + 1,
            failure: Box::new(StepFailure {
                reason: reason.to_string(),
                min_density: it.rho.iter().copied().fold(f64::INFINITY, f64::min),
                residual_history: self.history.clone(),
            }),
        }
    }
}

/// Solves one implicit step starting from the previous level.
pub fn advance(
    prev: &FluidState,
    grid: &GridSpec,
    params: &PhysParams,
    cfg: &SolverConfig,
) -> Result<(FluidState, StepMeta)> {
    cfg.validate()?;
    let guess_res = residual(&prev.rho, &prev.u, &prev.rho, &prev.u, grid, params)?;
    let guess_norm = guess_res.max_norm();
    let mut problem = StepProblem {
        prev,
        grid,
        params,
        cfg,
        tol: cfg.tolerance(guess_norm),
        history: vec![guess_norm],
    };
    let mut it = Iterate {
        rho: prev.rho.clone(),
        u: prev.u.clone(),
        res: guess_res,
        norm: guess_norm,
    };

    let mut fallback_used = false;
    let iterations = match problem.newton(&mut it) {
        NewtonOutcome::Converged { iterations } => iterations,
        NewtonOutcome::Stalled => {
            fallback_used = true;
            // Restart from the previous level: a stalled Newton iterate may be far off.
            it = problem.evaluate(prev.rho.clone(), prev.u.clone())?;
            let mut done = None;
            for sweep in 1..=cfg.fallback_iters {
                it = match problem.picard_sweep(&it) {
                    Ok(next) => next,
                    Err(_) => return Err(problem.failure("Picard fallback hit a singular solve", &it)),
                };
                problem.history.push(it.norm);
                if it.norm <= problem.tol {
                    done = Some(sweep);
                    break;
                }
                if sweep % 10 == 0 {
                    let mut trial = problem.evaluate(it.rho.clone(), it.u.clone())?;
                    if let NewtonOutcome::Converged { iterations } = problem.newton(&mut trial) {
                        it = trial;
                        done = Some(sweep + iterations);
                        break;
                    }
                }
            }
            match done {
                Some(count) => count,
                None => return Err(problem.failure("no convergence after Newton and Picard fallback", &it)),
            }
        }
    };

    // Discrete minimum principle: min ρ^k ≥ min ρ^{k-1} / (1 + Δt max (∂_i u^k)⁺).
    let bound = divergence_positivity_bound(&prev.rho, &it.u, grid);
    let min_rho = it.rho.iter().copied().fold(f64::INFINITY, f64::min);
    if min_rho < bound - POSITIVITY_SLACK * (1.0 + bound) {
        return Err(problem.failure(&format!("density minimum {min_rho:e} below positivity bound {bound:e}"), &it));
    }

    let meta = StepMeta {
        iterations,
        residual: it.norm,
        tolerance: problem.tol,
        fallback_used,
    };
    let state = FluidState {
        rho: it.rho,
        u: it.u,
        k: prev.k + 1,
    };
    Ok((state, meta))
}

/// `min ρ^{k-1} / (1 + Δt max_i (∂_i u^k)⁺)`, the bound implied by the
/// continuity scheme at the cell holding the new minimum.
pub fn divergence_positivity_bound(prev_rho: &[f64], u: &[f64], grid: &GridSpec) -> f64 {
    let min_prev = prev_rho.iter().copied().fold(f64::INFINITY, f64::min);
    let max_div = u.windows(2).map(|w| (w[1] - w[0]) / grid.dx).fold(0.0_f64, f64::max);
    min_prev / (1.0 + grid.dt * max_div)
}

/// Integrates from `initial` for `grid.steps` steps.
pub fn run(initial: FluidState, grid: &GridSpec, params: &PhysParams, cfg: &SolverConfig) -> Result<Trajectory> {
    if initial.cells() != grid.cells {
        return Err(Error::InvalidInput(format!(
            "initial state has {} cells, grid has {}",
            initial.cells(),
            grid.cells
        )));
    }
    cfg.validate()?;
    let mut states = Vec::with_capacity(grid.steps + 1);
    let mut meta = Vec::with_capacity(grid.steps);
    states.push(FluidState { k: 0, ..initial });
    for _ in 0..grid.steps {
        let (next, m) = advance(states.last().expect("non-empty"), grid, params, cfg)?;
        states.push(next);
        meta.push(m);
    }
    Ok(Trajectory {
        grid: *grid,
        params: *params,
        states,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysParams {
        PhysParams::new(1.0, 5.0 / 3.0, 0.1).unwrap()
    }

    #[test]
    fn constant_state_is_steady() {
        let grid = GridSpec::coupled(1.0, 8, 1.0).unwrap();
        let s = FluidState::constant(8, 1.3).unwrap();
        let r = assemble_residual(&s, &s, &grid, &params()).unwrap();
        assert_eq!(r.max_norm(), 0.0);
        let (next, meta) = advance(&s, &grid, &params(), &SolverConfig::default()).unwrap();
        assert_eq!(next.rho, s.rho);
        assert_eq!(next.u, s.u);
        assert_eq!(meta.iterations, 1);
        assert!(!meta.fallback_used);
    }

    #[test]
    fn two_cell_continuity_residual() {
        let grid = GridSpec::new(1.0, 2, 0.1, 1.0).unwrap();
        let eps = 1e-3;
        let prev = FluidState::constant(2, 1.0).unwrap();
        let trial = FluidState::new(vec![1.0, 1.0], vec![0.0, eps, 0.0], 1).unwrap();
        let r = assemble_residual(&prev, &trial, &grid, &params()).unwrap();
        assert!((r.cont[0] - eps / grid.dx).abs() < 1e-15);
        assert!((r.cont[1] + eps / grid.dx).abs() < 1e-15);
    }

    #[test]
    fn viscosity_enters_linearly() {
        let grid = GridSpec::new(1.0, 4, 0.05, 1.0).unwrap();
        let prev = FluidState::new(vec![1.0, 1.2, 0.9, 1.1], vec![0.0, 0.1, -0.2, 0.05, 0.0], 0).unwrap();
        let trial = FluidState::new(vec![1.1, 1.0, 1.0, 1.05], vec![0.0, 0.3, 0.1, -0.1, 0.0], 1).unwrap();
        let with = |mu| assemble_residual(&prev, &trial, &grid, &PhysParams { mu, ..params() }).unwrap();
        let (r0, r1, r2) = (with(0.0), with(1.0), with(2.0));
        assert_eq!(r0.cont, r1.cont);
        let lap = crate::operators::laplace_velocity(&trial.u, grid.dx);
        for j in 0..3 {
            assert!((r0.mom[j] - r1.mom[j] - lap[j]).abs() < 1e-10);
            assert!((2.0 * r1.mom[j] - r0.mom[j] - r2.mom[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_positive_trial() {
        let grid = GridSpec::coupled(1.0, 2, 1.0).unwrap();
        let prev = FluidState::constant(2, 1.0).unwrap();
        let trial = FluidState { rho: vec![1.0, -0.5], u: vec![0.0; 3], k: 1 };
        assert!(matches!(
            assemble_residual(&prev, &trial, &grid, &params()),
            Err(Error::NonPositiveDensity { cell: 1, .. })
        ));
    }

    #[test]
    fn jacobian_diagonal_entries_at_rest() {
        let grid = GridSpec::new(1.0, 4, 0.1, 1.0).unwrap();
        let p = params();
        let s = FluidState::new(vec![1.0, 2.0, 1.5, 1.0], vec![0.0; 5], 0).unwrap();
        let jac = assemble_jacobian(&s, &s, &grid, &p);
        for i in 0..4 {
            assert!((jac.get(2 * i, 2 * i) - 1.0 / grid.dt).abs() < 1e-12);
        }
        // ∂mom_j/∂ρ_j contains a γ ρ^{γ-1} / dx at rest (no convective part).
        let expected = p.pressure_derivative(2.0) / grid.dx;
        assert!((jac.get(u_var(1), rho_var(1)) - expected).abs() < 1e-12);
    }

    #[test]
    fn picard_fallback_reaches_newton_solution() {
        let grid = GridSpec::coupled(1.0, 16, 1.0).unwrap();
        let p = params();
        let mut u: Vec<f64> = (0..=16).map(|j| 0.3 * (std::f64::consts::PI * j as f64 / 8.0).sin()).collect();
        u[0] = 0.0;
        u[16] = 0.0;
        let prev = FluidState::new((0..16).map(|i| 1.0 + 0.2 * (i as f64 * 0.4).cos()).collect(), u, 0).unwrap();
        let (newton, _) = advance(&prev, &grid, &p, &SolverConfig::default()).unwrap();
        // Force the fallback by allowing a single Newton pass.
        let cfg = SolverConfig { max_newton_iters: 1, ..SolverConfig::default() };
        let (picard, meta) = advance(&prev, &grid, &p, &cfg).unwrap();
        assert!(meta.fallback_used);
        assert!(meta.residual <= meta.tolerance);
        for (a, b) in newton.rho.iter().zip(&picard.rho) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
