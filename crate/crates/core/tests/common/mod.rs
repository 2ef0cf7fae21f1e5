#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use visco1d::stepper::{assemble_jacobian, assemble_residual, StepResidual};
use visco1d::{FluidState, GridSpec, PhysParams};

pub fn packed(r: &StepResidual) -> Vec<f64> {
    let n = r.cont.len();
    let mut out = Vec::new();
    for i in 0..n {
        out.push(r.cont[i]);
        if i + 1 < n {
            out.push(r.mom[i]);
        }
    }
    out
}

/// Adds `h` to unknown `var` of the interleaved ordering.
pub fn perturbed(s: &FluidState, var: usize, h: f64) -> FluidState {
    let mut t = s.clone();
    if var.is_multiple_of(2) {
        t.rho[var / 2] += h;
    } else {
        t.u[var.div_ceil(2)] += h;
    }
    t
}

/// Random state with densities in [0.5, 2] and interior velocities of
/// magnitude in [0.01, 1] (kept away from the `u = 0` kink).
pub fn random_state(rng: &mut StdRng, n: usize) -> FluidState {
    let rho = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let mut u: Vec<f64> = (0..=n)
        .map(|_| {
            let m: f64 = rng.gen_range(0.01..1.0);
            if rng.gen_bool(0.5) { m } else { -m }
        })
        .collect();
    u[0] = 0.0;
    u[n] = 0.0;
    FluidState::new(rho, u, 1).unwrap()
}

/// Worst entry error of the assembled Jacobian against central differences,
/// relative to `max(|J_ij|, 1)`.
pub fn jacobian_fd_error(prev: &FluidState, trial: &FluidState, grid: &GridSpec, params: &PhysParams) -> f64 {
    let jac = assemble_jacobian(prev, trial, grid, params);
    let size = 2 * trial.cells() - 1;
    let mut worst: f64 = 0.0;
    for var in 0..size {
        let x = if var.is_multiple_of(2) { trial.rho[var / 2] } else { trial.u[var.div_ceil(2)] };
        let h = 1e-7 * (1.0 + x.abs());
        let plus = packed(&assemble_residual(prev, &perturbed(trial, var, h), grid, params).unwrap());
        let minus = packed(&assemble_residual(prev, &perturbed(trial, var, -h), grid, params).unwrap());
        for row in 0..size {
            let fd = (plus[row] - minus[row]) / (2.0 * h);
            let exact = jac.get(row, var);
            worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
        }
    }
    worst
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
