use std::f64::consts::PI;

use visco1d::diagnostics::{
    abs_linear_power, diagnose, energy, energy_ledger, error_rates, flux_ledger, positivity_bound, norm_suite,
    positivity_report, renorm_residual, theoretical_floors, weak_residual_continuity, weak_residual_momentum,
    Order, RateSample, RenormFn, SineTest, TestFunction,
};
use visco1d::stepper::{assemble_residual, run, SolverConfig};
use visco1d::{init_state, FluidState, GridSpec, PhysParams, Trajectory};

fn params(mu: f64) -> PhysParams {
    PhysParams::new(1.0, 5.0 / 3.0, mu).unwrap()
}

fn constant_traj(n: usize, rho: f64) -> Trajectory {
    let grid = GridSpec::coupled(1.0, n, 0.5).unwrap();
    run(FluidState::constant(n, rho).unwrap(), &grid, &params(0.5), &SolverConfig::default()).unwrap()
}

fn bump_traj(n: usize, t: f64) -> Trajectory {
    let grid = GridSpec::coupled(1.0, n, t).unwrap();
    let rho0 = |x: f64| 1.0 + 0.5 * (PI * x).sin().powi(2);
    let u0 = |x: f64| 0.1 * (2.0 * PI * x).sin();
    let s = init_state(&grid, &rho0, &u0).unwrap();
    run(s, &grid, &params(0.8), &SolverConfig::default()).unwrap()
}

#[test]
fn constant_state_energy_and_identities() {
    let t = constant_traj(16, 1.0);
    assert!((energy(&t.states[0], &t.params, t.grid.dx) - 1.5).abs() < 1e-14);
    let e = energy_ledger(&t);
    assert!(e.balance_residual.iter().all(|r| *r == 0.0));
    assert!(e.dissipation.iter().all(|d| *d == 0.0));
    let d = diagnose(&t).unwrap();
    assert!(d.all_passed());
    for f in &d.flux {
        assert_eq!(f.residual(), 0.0);
    }
}

#[test]
fn positivity_bound_example() {
    assert!((positivity_bound(1.0, 0.1, 2.0) - 1.0 / 1.2).abs() < 1e-15);
    assert_eq!(positivity_bound(0.7, 0.3, 0.0), 0.7);
}

#[test]
fn zero_velocity_keeps_minimum_density() {
    let t = constant_traj(8, 2.0);
    for row in positivity_report(&t) {
        assert_eq!(row.min_rho, 2.0);
        assert_eq!(row.margin, 0.0);
    }
}

#[test]
fn bump_run_satisfies_identities() {
    let t = bump_traj(32, 0.5);
    let d = diagnose(&t).unwrap();
    for c in &d.checks {
        assert!(c.passed(), "{}: {:e} > {:e}", c.name, c.value, c.tolerance);
    }
    assert!(d.energy.min_step_terms.iter().all(|v| *v >= -1e-12));
    for row in &d.positivity {
        assert!(row.divergence_margin >= -1e-9);
    }
}

#[test]
fn linear_renormalization_is_continuity_residual() {
    let t = bump_traj(16, 0.25);
    let steps = renorm_residual(&t, &RenormFn::Power(1.0)).unwrap();
    for s in &steps {
        let r = assemble_residual(&t.states[s.k - 1], &t.states[s.k], &t.grid, &t.params).unwrap();
        for (a, b) in s.residual.iter().zip(&r.cont) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        assert!(s.max_residual() <= s.tolerance);
    }
}

#[test]
fn convex_renormalizations_hold() {
    let t = bump_traj(32, 0.5);
    for f in [RenormFn::Square, RenormFn::Entropy, RenormFn::Power(5.0 / 3.0)] {
        for s in renorm_residual(&t, &f).unwrap() {
            assert!(s.max_residual() <= s.tolerance);
            assert!(s.remainder >= -s.tolerance);
        }
    }
}

#[test]
fn flux_ledger_checkpoints() {
    let t = bump_traj(32, 0.5);
    for m in [1, t.steps() / 2, t.steps()] {
        let f = flux_ledger(&t, m).unwrap();
        assert!(f.holds(), "m={m}: {:e}", f.residual());
    }
    assert!(flux_ledger(&t, 0).is_err());
    assert!(flux_ledger(&t, t.steps() + 1).is_err());
}

#[test]
fn weak_forms_match_error_terms() {
    let t = bump_traj(32, 0.5);
    let phi = SineTest::new(1, 1.0, 0.5);
    let v = SineTest::new(2, 1.0, 0.5);
    let c = weak_residual_continuity(&t, &phi).unwrap();
    let m = weak_residual_momentum(&t, &v).unwrap();
    assert!(c.mismatch() <= 1e-8, "{:e}", c.mismatch());
    assert!(m.mismatch() <= 1e-8, "{:e}", m.mismatch());
    assert!(c.error_term != 0.0);
}

#[test]
fn weak_forms_vanish_for_steady_state() {
    let t = constant_traj(8, 1.3);
    let c = weak_residual_continuity(&t, &SineTest::new(1, 1.0, 0.5)).unwrap();
    let m = weak_residual_momentum(&t, &SineTest::new(2, 1.0, 0.5)).unwrap();
    assert_eq!(c.error_term, 0.0);
    assert!(c.lhs_weak.abs() < 1e-14);
    assert!(m.mismatch() < 1e-14);
}

struct Cosine;

impl TestFunction for Cosine {
    fn value(&self, _t: f64, x: f64) -> f64 {
        (PI * x).cos()
    }
    fn dx(&self, _t: f64, x: f64) -> f64 {
        -PI * (PI * x).sin()
    }
}

#[test]
fn unsupported_test_function_rejected() {
    let t = constant_traj(4, 1.0);
    assert!(weak_residual_continuity(&t, &Cosine).is_err());
    assert!(weak_residual_momentum(&t, &Cosine).is_err());
}

#[test]
fn constant_norms() {
    let t = constant_traj(8, 1.0);
    let n = norm_suite(&t);
    assert!((n.rho_linf_lgamma - 1.0).abs() < 1e-14);
    assert!((n.pressure_linf_l1 - 1.0).abs() < 1e-14);
    assert!((n.rho_gamma_plus_one - 0.5).abs() < 1e-14);
    assert_eq!(n.ux_l2_l2, 0.0);
    assert_eq!(n.kinetic_linf_l1, 0.0);
    assert_eq!(n.u_l2_linf, 0.0);
}

#[test]
fn density_norm_scales() {
    let a = norm_suite(&constant_traj(8, 1.0));
    let b = norm_suite(&constant_traj(8, 2.0));
    assert!((b.rho_linf_lgamma / a.rho_linf_lgamma - 2.0).abs() < 1e-13);
    let g = 5.0 / 3.0;
    assert!((b.pressure_linf_l1 / a.pressure_linf_l1 - 2f64.powf(g)).abs() < 1e-12);
}

#[test]
fn abs_linear_power_matches_quadrature() {
    for (a, b, s) in [(1.0, 3.0, 2.0), (-1.0, 2.0, 1.5), (0.5, -0.5, 3.0), (2.0, 2.0, 0.7)] {
        let n = 200_000;
        let h = 0.3;
        let mid: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64 * h;
                (a + (b - a) * x / h).abs().powf(s) * h / n as f64
            })
            .sum();
        let exact = abs_linear_power(a, b, h, s);
        assert!((exact - mid).abs() < 1e-8 * (1.0 + mid), "{a} {b} {s}: {exact} vs {mid}");
    }
}

fn sample(h: f64, e: f64) -> RateSample {
    RateSample { h, e1: e, e2: e, p1: e, p2: e, rho_gamma_plus_one: 1.0 }
}

#[test]
fn rates_need_three_levels() {
    assert!(error_rates(&[sample(0.1, 1.0), sample(0.05, 0.5)]).is_err());
}

#[test]
fn rates_of_power_law_and_zeros() {
    let r = error_rates(&[sample(0.1, 0.01), sample(0.05, 0.0025), sample(0.025, 0.000625)]).unwrap();
    for row in &r.orders {
        for o in row {
            match o {
                Order::Value(v) => assert!((v - 2.0).abs() < 1e-12),
                other => panic!("{other:?}"),
            }
        }
    }
    assert_eq!(r.integrability_spread, 1.0);
    let z = error_rates(&[sample(0.1, 0.0), sample(0.05, 0.0), sample(0.025, 0.0)]).unwrap();
    assert!(z.orders.iter().flatten().all(|o| *o == Order::Exact && o.meets(10.0)));
    assert_eq!(Order::between(1.0, 0.0, 0.1, 0.05), Order::Undefined);
}

#[test]
fn floors_for_five_thirds() {
    let f = theoretical_floors(5.0 / 3.0);
    assert!((f[0] - 0.1).abs() < 1e-15);
    assert!((f[1] - 0.3).abs() < 1e-15);
    assert_eq!([f[2], f[3]], [0.5, 0.25]);
}
