//! Uniform-bound norms of the extended fields. Time is piecewise constant
//! (step `k` on `[t_{k-1}, t_k)`), so `L²` in time sums `k = 1..M` and `L^∞`
//! in time takes all `k = 0..M`. Space integrals of powers of the piecewise
//! linear velocity are exact.

use crate::grid::{FluidState, Trajectory};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSuite {
    /// `‖ρ‖_{L^∞(L^γ)}`
    pub rho_linf_lgamma: f64,
    /// `‖u_x‖_{L²(L²)}`
    pub ux_l2_l2: f64,
    /// `‖ρ û²‖_{L^∞(L¹)}`
    pub kinetic_linf_l1: f64,
    /// `‖ρ û‖_{L^∞(L^{2γ/(γ+1)})}`
    pub momentum_linf: f64,
    /// `‖ρ u‖_{L²(L^γ)}`
    pub rho_u_l2_lgamma: f64,
    /// `‖u‖_{L²(L^∞)}`
    pub u_l2_linf: f64,
    /// `‖p(ρ)‖_{L^∞(L¹)}`
    pub pressure_linf_l1: f64,
    /// `‖ρ u²‖_{L²(L^{2γ/(γ+1)})}`
    pub rho_u2_l2: f64,
    /// `∫∫ ρ^{γ+1}`
    pub rho_gamma_plus_one: f64,
}

impl NormSuite {
    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("rho_linf_lgamma", self.rho_linf_lgamma),
            ("ux_l2_l2", self.ux_l2_l2),
            ("kinetic_linf_l1", self.kinetic_linf_l1),
            ("momentum_linf", self.momentum_linf),
            ("rho_u_l2_lgamma", self.rho_u_l2_lgamma),
            ("u_l2_linf", self.u_l2_linf),
            ("pressure_linf_l1", self.pressure_linf_l1),
            ("rho_u2_l2", self.rho_u2_l2),
            ("rho_gamma_plus_one", self.rho_gamma_plus_one),
        ]
    }
}

/// `∫_0^h |a + (b - a) x / h|^s dx`, exact.
pub fn abs_linear_power(a: f64, b: f64, h: f64, s: f64) -> f64 {
    let (fa, fb) = (a.abs(), b.abs());
    if a * b < 0.0 {
        // sign change: two pieces, each linear from 0
        return h * (fa.powf(s + 1.0) + fb.powf(s + 1.0)) / ((s + 1.0) * (fa + fb));
    }
    let (lo, hi) = if fa < fb { (fa, fb) } else { (fb, fa) };
    if hi == 0.0 {
        return 0.0;
    }
    if (hi - lo) <= 1e-4 * hi {
        // the closed form cancels; the integrand is smooth here
        return quadrature::integrate(0.0, h, |x| (lo + (hi - lo) * x / h).powf(s));
    }
    h * (hi.powf(s + 1.0) - lo.powf(s + 1.0)) / ((s + 1.0) * (hi - lo))
}

fn space_sum(state: &FluidState, f: impl Fn(usize) -> f64) -> f64 {
    (0..state.cells()).map(f).sum()
}

pub fn norm_suite(traj: &Trajectory) -> NormSuite {
    let g = &traj.grid;
    let p = &traj.params;
    let (dt, dx) = (g.dt, g.dx);
    let gamma = p.gamma;
    let q = 2.0 * gamma / (gamma + 1.0);
    let mut out = NormSuite {
        rho_linf_lgamma: 0.0,
        ux_l2_l2: 0.0,
        kinetic_linf_l1: 0.0,
        momentum_linf: 0.0,
        rho_u_l2_lgamma: 0.0,
        u_l2_linf: 0.0,
        pressure_linf_l1: 0.0,
        rho_u2_l2: 0.0,
        rho_gamma_plus_one: 0.0,
    };
    for (k, s) in traj.states.iter().enumerate() {
        let hat = s.hat_velocity();
        let (rho, u) = (&s.rho, &s.u);
        let rho_g = (dx * space_sum(s, |i| rho[i].powf(gamma))).powf(1.0 / gamma);
        out.rho_linf_lgamma = out.rho_linf_lgamma.max(rho_g);
        out.kinetic_linf_l1 = out.kinetic_linf_l1.max(dx * space_sum(s, |i| rho[i] * hat[i] * hat[i]));
        let mom = (dx * space_sum(s, |i| (rho[i] * hat[i]).abs().powf(q))).powf(1.0 / q);
        out.momentum_linf = out.momentum_linf.max(mom);
        out.pressure_linf_l1 = out.pressure_linf_l1.max(dx * space_sum(s, |i| p.pressure(rho[i])));
        if k == 0 {
            continue;
        }
        out.ux_l2_l2 += dt * dx * space_sum(s, |i| ((u[i + 1] - u[i]) / dx).powi(2));
        let rho_u = space_sum(s, |i| rho[i].powf(gamma) * abs_linear_power(u[i], u[i + 1], dx, gamma));
        out.rho_u_l2_lgamma += dt * rho_u.powf(2.0 / gamma);
        let sup = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        out.u_l2_linf += dt * sup * sup;
        let rho_u2 = space_sum(s, |i| rho[i].powf(q) * abs_linear_power(u[i], u[i + 1], dx, 2.0 * q));
        out.rho_u2_l2 += dt * rho_u2.powf(2.0 / q);
        out.rho_gamma_plus_one += dt * dx * space_sum(s, |i| rho[i].powf(gamma + 1.0));
    }
    out.ux_l2_l2 = out.ux_l2_l2.sqrt();
    out.rho_u_l2_lgamma = out.rho_u_l2_lgamma.sqrt();
    out.u_l2_linf = out.u_l2_linf.sqrt();
    out.rho_u2_l2 = out.rho_u2_l2.sqrt();
    out
}
