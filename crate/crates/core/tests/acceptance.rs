//! Acceptance criteria 1-12. Each test prints one `criterion N: PASS|FAIL`
//! line (visible with `--nocapture`) and then asserts.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use visco1d::diagnostics::{DiagnosticsReport, IdentityCheck, MASS_TOL};
use visco1d::harness::{builtin_scenario, run_refinement, RefinementReport};
use visco1d::operators::{dirichlet_inv_grad, neumann_inv_grad};
use visco1d::stepper::SolverConfig;
use visco1d::{GridSpec, PhysParams};

const MASS_REL: f64 = 1e-12;
const POSITIVITY_SLACK: f64 = 1e-9;
const DIFFUSION_FLOOR: f64 = -1e-12;
const DUALITY_REL: f64 = 1e-12;
const FD_REL: f64 = 1e-6;
const WEAK_ABS: f64 = 1e-8;
const RATE_SLACK: f64 = 0.05;
const SPREAD_MAX: f64 = 2.0;
const RUNTIME_SECS: f64 = 1.0;

const FULL_LEVELS: [usize; 4] = [64, 128, 256, 512];
const SHORT_LEVELS: [usize; 3] = [64, 128, 256];
const SCENARIOS: [&str; 6] = ["constant", "smooth-bump", "riemann", "gamma-1.6", "gamma-5/3", "gamma-1.9"];

struct Suite {
    reports: Vec<RefinementReport>,
}

impl Suite {
    fn get(&self, name: &str) -> &RefinementReport {
        self.reports.iter().find(|r| r.scenario.name == name).unwrap()
    }

    fn levels(&self) -> impl Iterator<Item = (&str, usize, &DiagnosticsReport)> {
        self.reports
            .iter()
            .flat_map(|r| r.levels.iter().map(move |l| (r.scenario.name.as_str(), l.cells, &l.diagnostics)))
    }
}

/// Every built-in scenario: smooth-bump and riemann on 64..512, the rest on 64..256.
fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let reports = SCENARIOS
            .iter()
            .map(|name| {
                let mut s = builtin_scenario(name).unwrap();
                s.levels = if matches!(*name, "smooth-bump" | "riemann") {
                    FULL_LEVELS.to_vec()
                } else {
                    SHORT_LEVELS.to_vec()
                };
                let r = run_refinement(&s, &SolverConfig::default(), None).unwrap();
                assert!(r.failure.is_none(), "{name}: {:?}", r.failure);
                r
            })
            .collect();
        Suite { reports }
    })
}

fn check<'a>(d: &'a DiagnosticsReport, prefix: &str) -> Vec<&'a IdentityCheck> {
    d.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
}

fn verdict(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

#[test]
fn criterion_01_scheme_residual() {
    let s = suite();
    let mut worst: f64 = 0.0;
    for (_, _, d) in s.levels() {
        for c in check(d, "scheme residual") {
            worst = worst.max(c.value / c.tolerance);
        }
    }
    let constant_iters = s.get("constant").levels.iter().map(|l| l.max_newton_iterations).max().unwrap();

    let mut slowest: f64 = 0.0;
    for name in SCENARIOS {
        let sc = builtin_scenario(name).unwrap();
        let start = Instant::now();
        sc.run_level(64, &SolverConfig::default()).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    verdict(
        1,
        worst <= 1.0 && constant_iters == 1 && slowest < RUNTIME_SECS,
        format!("residual/tol {worst:.3e}, constant iterations {constant_iters}, slowest N=64 run {slowest:.3}s"),
    );
}

#[test]
fn criterion_02_mass() {
    let mut worst: f64 = 0.0;
    for (_, _, d) in suite().levels() {
        let c = check(d, "mass drift")[0];
        let mass = c.tolerance / MASS_TOL;
        worst = worst.max(c.value / (MASS_REL * mass));
    }
    verdict(2, worst <= 1.0, format!("worst drift / (1e-12 M) {worst:.3e}"));
}

#[test]
fn criterion_03_positivity() {
    let mut worst = f64::INFINITY;
    let mut at = (String::new(), 0, 0);
    for (name, n, d) in suite().levels() {
        for row in &d.positivity {
            if row.margin < worst {
                worst = row.margin;
                at = (name.to_string(), n, row.k);
            }
        }
    }
    verdict(
        3,
        worst >= -POSITIVITY_SLACK,
        format!("min(min rho^k - min rho^(k-1)/(1+dt max|u^k|)) = {worst:.3e} ({} N={} k={})", at.0, at.1, at.2),
    );
}

#[test]
fn criterion_04_energy() {
    let mut ratio: f64 = 0.0;
    let mut min_term = f64::INFINITY;
    for (_, n, d) in suite().levels() {
        if !SHORT_LEVELS.contains(&n) {
            continue;
        }
        let e = &d.energy;
        for (r, t) in e.balance_residual.iter().zip(&e.tolerance).skip(1) {
            ratio = ratio.max(r / t);
        }
        min_term = e.min_step_terms.iter().copied().fold(min_term, f64::min);
    }
    verdict(
        4,
        ratio <= 1.0 && min_term >= DIFFUSION_FLOOR,
        format!("balance/(100 sum tol) {ratio:.3e}, min N-term {min_term:.3e}"),
    );
}

#[test]
fn criterion_05_renormalization() {
    let mut worst: f64 = 0.0;
    for (_, _, d) in suite().levels() {
        let cs = check(d, "renormalized");
        assert_eq!(cs.len(), 3);
        worst = cs.iter().map(|c| c.value / c.tolerance).fold(worst, f64::max);
    }
    verdict(5, worst <= 1.0, format!("residual/(10 tol max|B'|) {worst:.3e}"));
}

#[test]
fn criterion_06_duality() {
    let mut rng = common::rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=64);
        let dx: f64 = rng.gen_range(0.01..2.0);
        let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mean = f.iter().sum::<f64>() / n as f64;
        f.iter_mut().for_each(|x| *x -= mean);
        let v: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let r = neumann_inv_grad(&f, dx).unwrap();
        let g = dirichlet_inv_grad(&v, dx);
        let left: Vec<f64> = v.iter().zip(&r[1..n]).map(|(a, b)| dx * a * b).collect();
        let right: Vec<f64> = g.iter().zip(&f).map(|(a, b)| -dx * a * b).collect();
        let scale = left.iter().map(|x| x.abs()).sum::<f64>().max(right.iter().map(|x| x.abs()).sum());
        let err = (left.iter().sum::<f64>() - right.iter().sum::<f64>()).abs() / scale;
        worst = worst.max(err);
    }
    verdict(6, worst <= DUALITY_REL, format!("worst relative error {worst:.3e} over 1000 cases"));
}

#[test]
fn criterion_07_flux_identity() {
    let level = suite().get("smooth-bump").levels.iter().find(|l| l.cells == 128).unwrap();
    let ledgers = &level.diagnostics.flux;
    let m = level.steps;
    let ms: Vec<usize> = ledgers.iter().map(|f| f.m).collect();
    assert_eq!(ms, vec![m / 4, m / 2, m]);
    let worst = ledgers.iter().map(|f| f.residual() / f.tolerance).fold(0.0, f64::max);
    verdict(7, worst <= 1.0, format!("|lhs - rhs|/(100 sum tol) {worst:.3e} at m = {ms:?}"));
}

#[test]
fn criterion_08_rate_floors() {
    let r = suite().get("smooth-bump");
    assert_eq!(r.scenario.params.gamma, 5.0 / 3.0);
    let floors = [0.1, 0.3, 0.5, 0.25];
    for (a, b) in floors.iter().zip(r.floors) {
        assert!((a - b).abs() < 1e-12);
    }
    let rates = r.rates.as_ref().unwrap();
    let ok = rates
        .orders
        .iter()
        .all(|row| row.iter().zip(floors).all(|(o, f)| o.meets(f - RATE_SLACK)));
    let table: Vec<String> = rates
        .orders
        .iter()
        .map(|row| row.iter().map(|o| format!("{o}")).collect::<Vec<_>>().join(" "))
        .collect();
    verdict(8, ok, format!("orders [E1 E2 P1 P2] per pair: {table:?}"));
}

#[test]
fn criterion_09_integrability() {
    let r = suite().get("smooth-bump");
    let v: Vec<f64> = r.levels.iter().map(|l| l.diagnostics.norms.rho_gamma_plus_one).collect();
    let spread = v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(9, spread < SPREAD_MAX, format!("int rho^(gamma+1) {v:?}, spread {spread:.4}"));
}

#[test]
fn criterion_10_cauchy() {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["smooth-bump", "riemann"] {
        let c = &suite().get(name).cauchy_rho;
        ok &= c.len() == 3 && c.windows(2).all(|w| w[1] < w[0]);
        let c: Vec<String> = c.iter().map(|v| format!("{v:.3e}")).collect();
        detail.push(format!("{name} {c:?}"));
    }
    verdict(10, ok, detail.join(", "));
}

#[test]
fn criterion_11_jacobian() {
    let mut rng = common::rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let params = PhysParams::new(rng.gen_range(0.5..2.0), rng.gen_range(1.51..1.99), rng.gen_range(0.01..1.0)).unwrap();
        let grid = GridSpec::new(1.0, n, rng.gen_range(0.01..0.5), 1.0).unwrap();
        let prev = common::random_state(&mut rng, n);
        let trial = common::random_state(&mut rng, n);
        worst = worst.max(common::jacobian_fd_error(&prev, &trial, &grid, &params));
    }
    verdict(11, worst <= FD_REL, format!("worst entry error {worst:.3e} over 200 states"));
}

#[test]
fn criterion_12_weak_forms() {
    let mut worst: f64 = 0.0;
    for (_, _, d) in suite().levels() {
        for w in [d.weak_continuity, d.weak_momentum].into_iter().flatten() {
            worst = worst.max(w.mismatch());
        }
    }
    verdict(12, worst <= WEAK_ABS, format!("worst |lhs_weak - error term| {worst:.3e}"));
}
