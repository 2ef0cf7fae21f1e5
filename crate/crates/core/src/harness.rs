//! Scenario library and refinement studies.

use rayon::prelude::*;

use crate::diagnostics::{
    diagnose, error_rates, theoretical_floors, DiagnosticsReport, ErrorRates, Order, RateSample, ORDER_SLACK,
};
use crate::error::{Error, Result};
use crate::grid::{init_state, GridSpec, PhysParams, ProfileSpec, Trajectory, RHO_FLOOR};
use crate::stepper::{run, SolverConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "VISCO1D_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub length: f64,
    pub final_time: f64,
    pub params: PhysParams,
    pub rho0: ProfileSpec,
    pub u0: ProfileSpec,
    pub levels: Vec<usize>,
    /// Use `dt = dx` on every level.
    pub couple_dt_dx: bool,
    /// Fixed time step when `couple_dt_dx` is off.
    pub dt: Option<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("scenario needs at least one level".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("levels must be strictly increasing".into()));
        }
        let coarse = self.levels[0];
        if let Some(bad) = self.levels.iter().find(|n| *n % coarse != 0) {
            return Err(Error::InvalidInput(format!(
                "level {bad} is not a multiple of the coarsest level {coarse}"
            )));
        }
        if !self.couple_dt_dx && self.dt.is_none() {
            return Err(Error::InvalidInput("uncoupled scenario needs an explicit dt".into()));
        }
        let finest = *self.levels.last().expect("non-empty");
        let state = init_state(&self.grid(finest)?, &self.rho0, &self.u0)?;
        if let Some(i) = state.rho.iter().position(|r| *r < RHO_FLOOR) {
            return Err(Error::InvalidInput(format!("initial density below floor in cell {i}")));
        }
        Ok(())
    }

    pub fn grid(&self, cells: usize) -> Result<GridSpec> {
        match (self.couple_dt_dx, self.dt) {
            (false, Some(dt)) => GridSpec::new(self.length, cells, dt, self.final_time),
            _ => GridSpec::coupled(self.length, cells, self.final_time),
        }
    }

    /// Reasons the scenario falls outside the setting of the convergence theory.
    pub fn regime_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if !self.params.in_convergence_regime() {
            flags.push(format!(
                "outside convergence-theory regime: gamma = {} not in (3/2, 2)",
                self.params.gamma
            ));
        }
        if !self.couple_dt_dx {
            flags.push("outside convergence-theory regime: dt not coupled to dx".into());
        }
        flags
    }

    pub fn run_level(&self, cells: usize, solver: &SolverConfig) -> Result<Trajectory> {
        let grid = self.grid(cells)?;
        let initial = init_state(&grid, &self.rho0, &self.u0)?;
        run(initial, &grid, &self.params, solver)
    }
}

pub const DEFAULT_LEVELS: [usize; 4] = [64, 128, 256, 512];

fn bump(name: &str, gamma: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        length: 1.0,
        final_time: 4.0,
        params: PhysParams {
            a: 1.0,
            gamma,
            mu: 0.8,
        },
        rho0: ProfileSpec::SinSquared {
            base: 1.0,
            amplitude: 0.5,
            length: 1.0,
        },
        u0: ProfileSpec::Sine {
            amplitude: 0.1,
            mode: 2,
            length: 1.0,
        },
        levels: DEFAULT_LEVELS.to_vec(),
        couple_dt_dx: true,
        dt: None,
    }
}

/// `constant`, `smooth-bump`, `riemann` and the `gamma-*` sweep.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    let constant = ScenarioConfig {
        name: "constant".into(),
        final_time: 1.0,
        rho0: ProfileSpec::Constant(1.0),
        u0: ProfileSpec::Constant(0.0),
        ..bump("constant", 5.0 / 3.0)
    };
    let riemann = ScenarioConfig {
        name: "riemann".into(),
        final_time: 1.0,
        rho0: ProfileSpec::Piecewise {
            breaks: vec![0.5],
            values: vec![2.0, 1.0],
        },
        u0: ProfileSpec::Constant(0.0),
        ..bump("riemann", 5.0 / 3.0)
    };
    vec![
        constant,
        bump("smooth-bump", 5.0 / 3.0),
        riemann,
        bump("gamma-1.6", 1.6),
        bump("gamma-5/3", 5.0 / 3.0),
        bump("gamma-1.9", 1.9),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<ScenarioConfig> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// `VISCO1D_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Results of one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_newton_iterations: usize,
    pub fallback_steps: usize,
    pub e1: f64,
    pub e2: f64,
    pub p1: f64,
    pub p2: f64,
    pub diagnostics: DiagnosticsReport,
}

impl LevelSummary {
    fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let diagnostics = diagnose(traj)?;
        let (e1, e2) = diagnostics.final_flux().map_or((0.0, 0.0), |f| (f.e1, f.e2));
        let p1 = diagnostics.weak_continuity.map_or(0.0, |w| w.error_term);
        let p2 = diagnostics.weak_momentum.map_or(0.0, |w| w.error_term);
        Ok(Self {
            cells: traj.grid.cells,
            h: traj.grid.dx,
            dt: traj.grid.dt,
            steps: traj.steps(),
            max_newton_iterations: traj.meta.iter().map(|m| m.iterations).max().unwrap_or(0),
            fallback_steps: traj.meta.iter().filter(|m| m.fallback_used).count(),
            e1,
            e2,
            p1,
            p2,
            diagnostics,
        })
    }

    pub fn rate_sample(&self) -> RateSample {
        RateSample {
            h: self.h,
            e1: self.e1,
            e2: self.e2,
            p1: self.p1,
            p2: self.p2,
            rho_gamma_plus_one: self.diagnostics.norms.rho_gamma_plus_one,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub scenario: ScenarioConfig,
    pub levels: Vec<LevelSummary>,
    /// `‖ρ_h - ρ_{h/2}‖_{L¹(L¹)}` per consecutive pair of levels.
    pub cauchy_rho: Vec<f64>,
    /// `‖u_h - u_{h/2}‖_{L²(L²)}` per consecutive pair of levels.
    pub cauchy_u: Vec<f64>,
    /// Orders of the Cauchy differences, `[ρ, u]`, per consecutive pair of pairs.
    pub cauchy_orders: Vec<[Order; 2]>,
    pub rates: Option<ErrorRates>,
    /// Theoretical exponents for `E1, E2, P1, P2`.
    pub floors: [f64; 4],
    pub flags: Vec<String>,
    /// Set when a level failed; the report then holds the levels before it.
    pub failure: Option<String>,
}

impl RefinementReport {
    /// Each observed order against its floor minus the slack.
    pub fn floors_met(&self) -> bool {
        self.rates.as_ref().is_some_and(|r| {
            r.orders
                .iter()
                .all(|row| row.iter().zip(self.floors).all(|(o, f)| o.meets(f - ORDER_SLACK)))
        })
    }

    pub fn identities_hold(&self) -> bool {
        self.levels.iter().all(|l| l.diagnostics.all_passed())
    }
}

/// Fine-to-coarse space-time average of the density, one row per coarse
/// step `1..=M_c`. Coarse boxes are unions of fine boxes, so mass is kept.
pub fn project_density(fine: &Trajectory, coarse: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let (r, s) = nesting(&fine.grid, coarse)?;
    Ok((1..=coarse.steps)
        .map(|kc| {
            (0..coarse.cells)
                .map(|ic| {
                    let mut acc = 0.0;
                    for kf in (kc - 1) * s + 1..=kc * s {
                        acc += fine.states[kf].rho[ic * r..(ic + 1) * r].iter().sum::<f64>();
                    }
                    acc / (r * s) as f64
                })
                .collect()
        })
        .collect())
}

/// Space and time refinement ratios of `fine` over `coarse`.
fn nesting(fine: &GridSpec, coarse: &GridSpec) -> Result<(usize, usize)> {
    let bad = || Error::InvalidInput(format!("grid with {} cells does not nest in {} cells", fine.cells, coarse.cells));
    if !fine.cells.is_multiple_of(coarse.cells) || (fine.length - coarse.length).abs() > 1e-12 * coarse.length {
        return Err(bad());
    }
    let ratio = coarse.dt / fine.dt;
    let s = ratio.round();
    if s < 1.0 || (ratio - s).abs() > 1e-9 * ratio || fine.steps != coarse.steps * s as usize {
        return Err(bad());
    }
    Ok((fine.cells / coarse.cells, s as usize))
}

/// `‖ρ_c - P ρ_f‖_{L¹(L¹)}` with `P` the space-time averaging projection.
pub fn cauchy_density(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let g = &coarse.grid;
    let projected = project_density(fine, g)?;
    Ok((1..=g.steps)
        .map(|k| {
            coarse.states[k]
                .rho
                .iter()
                .zip(&projected[k - 1])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum::<f64>()
        * g.dt
        * g.dx)
}

/// `‖u_c - u_f‖_{L²(L²)}` of the extended velocities, integrated exactly
/// on the fine grid.
pub fn cauchy_velocity(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let (r, s) = nesting(&fine.grid, &coarse.grid)?;
    let gf = &fine.grid;
    let mut total = 0.0;
    for kf in 1..=gf.steps {
        let uc = &coarse.states[(kf - 1) / s + 1].u;
        let uf = &fine.states[kf].u;
        // coarse interpolant at fine face j
        let at = |j: usize| -> f64 {
            let (ic, off) = (j / r, j % r);
            if off == 0 {
                uc[ic]
            } else {
                uc[ic] + (uc[ic + 1] - uc[ic]) * off as f64 / r as f64
            }
        };
        let mut step = 0.0;
        for i in 0..gf.cells {
            let a = at(i) - uf[i];
            let b = at(i + 1) - uf[i + 1];
            step += (a * a + a * b + b * b) / 3.0;
        }
        total += gf.dt * gf.dx * step;
    }
    Ok(total.sqrt())
}

/// Runs every level (in parallel, capped by `threads`), the diagnostics
/// on each, Cauchy differences between consecutive levels and the rates.
pub fn run_refinement(
    scenario: &ScenarioConfig,
    solver: &SolverConfig,
    threads: Option<usize>,
) -> Result<RefinementReport> {
    if scenario.levels.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "refinement needs at least 3 levels, got {}",
            scenario.levels.len()
        )));
    }
    scenario.validate()?;
    solver.validate()?;

    let work = || -> Vec<Result<(Trajectory, LevelSummary)>> {
        scenario
            .levels
            .par_iter()
            .map(|&n| {
                let traj = scenario.run_level(n, solver)?;
                let summary = LevelSummary::from_trajectory(&traj)?;
                Ok((traj, summary))
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut trajectories = Vec::new();
    let mut levels = Vec::new();
    let mut failure = None;
    for (n, res) in scenario.levels.iter().zip(results) {
        match res {
            Ok((t, l)) => {
                trajectories.push(t);
                levels.push(l);
            }
            Err(e) => {
                failure = Some(format!("level N={n}: {e}"));
                break;
            }
        }
    }

    let mut cauchy_rho = Vec::new();
    let mut cauchy_u = Vec::new();
    for w in trajectories.windows(2) {
        cauchy_rho.push(cauchy_density(&w[0], &w[1])?);
        cauchy_u.push(cauchy_velocity(&w[0], &w[1])?);
    }
    let cauchy_orders = (1..cauchy_rho.len())
        .map(|i| {
            let (hc, hf) = (levels[i].h, levels[i + 1].h);
            [
                Order::between(cauchy_rho[i - 1], cauchy_rho[i], hc, hf),
                Order::between(cauchy_u[i - 1], cauchy_u[i], hc, hf),
            ]
        })
        .collect();
    let samples: Vec<RateSample> = levels.iter().map(LevelSummary::rate_sample).collect();
    let rates = if failure.is_none() { Some(error_rates(&samples)?) } else { None };

    Ok(RefinementReport {
        floors: theoretical_floors(scenario.params.gamma),
        flags: scenario.regime_flags(),
        scenario: scenario.clone(),
        levels,
        cauchy_rho,
        cauchy_u,
        cauchy_orders,
        rates,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        let all = builtin_scenarios();
        for s in &all {
            s.validate().unwrap();
        }
        let c = builtin_scenario("constant").unwrap();
        assert_eq!(c.rho0, ProfileSpec::Constant(1.0));
        for g in ["gamma-1.6", "gamma-5/3", "gamma-1.9"] {
            assert!(builtin_scenario(g).is_some());
        }
    }

    #[test]
    fn riemann_cell_averages() {
        let s = builtin_scenario("riemann").unwrap();
        let grid = GridSpec::coupled(1.0, 4, 1.0).unwrap();
        let st = init_state(&grid, &s.rho0, &s.u0).unwrap();
        assert_eq!(st.rho, vec![2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn level_validation() {
        let mut s = builtin_scenario("constant").unwrap();
        s.levels = vec![64, 96, 128];
        assert!(s.validate().is_err());
        s.levels = vec![64, 32, 128];
        assert!(s.validate().is_err());
        s.levels = vec![8, 16];
        assert!(run_refinement(&s, &SolverConfig::default(), Some(1)).is_err());
    }

    #[test]
    fn uncoupled_is_flagged() {
        let mut s = builtin_scenario("smooth-bump").unwrap();
        s.couple_dt_dx = false;
        s.dt = Some(0.01);
        assert!(s.regime_flags().iter().any(|f| f.contains("outside convergence-theory regime")));
        s.params.gamma = 1.4;
        assert_eq!(s.regime_flags().len(), 2);
    }

    #[test]
    fn projection_keeps_mass() {
        let mut s = builtin_scenario("riemann").unwrap();
        s.final_time = 0.25;
        let coarse = s.run_level(8, &SolverConfig::default()).unwrap();
        let fine = s.run_level(16, &SolverConfig::default()).unwrap();
        let p = project_density(&fine, &coarse.grid).unwrap();
        for row in &p {
            let m: f64 = row.iter().sum::<f64>() * coarse.grid.dx;
            assert!((m - fine.initial_mass()).abs() < 1e-13);
        }
        assert!(cauchy_density(&coarse, &fine).unwrap() > 0.0);
        assert!(cauchy_velocity(&coarse, &fine).unwrap() > 0.0);
    }

    #[test]
    fn velocity_difference_of_identical_runs_is_zero() {
        let mut s = builtin_scenario("smooth-bump").unwrap();
        s.final_time = 0.125;
        let a = s.run_level(8, &SolverConfig::default()).unwrap();
        assert_eq!(cauchy_velocity(&a, &a).unwrap(), 0.0);
        assert_eq!(cauchy_density(&a, &a).unwrap(), 0.0);
    }
}
