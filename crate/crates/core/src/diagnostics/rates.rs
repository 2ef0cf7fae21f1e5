//! Observed decay orders across refinement levels.

use std::fmt;

use crate::error::{Error, Result};

/// Observed order between two successive levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Value(f64),
    /// Both magnitudes are exactly zero.
    Exact,
    /// One magnitude is zero or non-finite.
    Undefined,
}

impl Order {
    /// `ln(coarse / fine) / ln(h_coarse / h_fine)` on magnitudes.
    pub fn between(coarse: f64, fine: f64, h_coarse: f64, h_fine: f64) -> Self {
        let (c, f) = (coarse.abs(), fine.abs());
        if c == 0.0 && f == 0.0 {
            return Order::Exact;
        }
        if c == 0.0 || f == 0.0 || !c.is_finite() || !f.is_finite() {
            return Order::Undefined;
        }
        Order::Value((c / f).ln() / (h_coarse / h_fine).ln())
    }

    /// Exact zeros pass every floor.
    pub fn meets(&self, floor: f64) -> bool {
        match *self {
            Order::Value(v) => v >= floor,
            Order::Exact => true,
            Order::Undefined => false,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Value(v) => write!(f, "{v:.16e}"),
            Order::Exact => f.write_str("exact (0 magnitude)"),
            Order::Undefined => f.write_str("undefined"),
        }
    }
}

/// Slack subtracted from every theoretical floor.
pub const ORDER_SLACK: f64 = 0.05;

/// Theoretical decay exponents for `|E1|`, `|E2|`, `|P1|`, `|P2|`.
pub fn theoretical_floors(gamma: f64) -> [f64; 4] {
    [(2.0 * gamma - 3.0) / (2.0 * gamma), (3.0 * gamma - 4.0) / (2.0 * gamma), 0.5, 0.25]
}

/// Magnitudes of the decaying functionals at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub h: f64,
    pub e1: f64,
    pub e2: f64,
    pub p1: f64,
    pub p2: f64,
    pub rho_gamma_plus_one: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRates {
    /// Orders between level `l` and `l + 1`, one row per pair: `[E1, E2, P1, P2]`.
    pub orders: Vec<[Order; 4]>,
    pub rho_gamma_plus_one: Vec<f64>,
    /// `max / min` of `∫∫ ρ^{γ+1}` over the levels.
    pub integrability_spread: f64,
}

pub fn error_rates(samples: &[RateSample]) -> Result<ErrorRates> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate estimation needs at least 3 levels, got {}",
            samples.len()
        )));
    }
    let orders = samples
        .windows(2)
        .map(|w| {
            let (c, f) = (&w[0], &w[1]);
            [
                Order::between(c.e1, f.e1, c.h, f.h),
                Order::between(c.e2, f.e2, c.h, f.h),
                Order::between(c.p1, f.p1, c.h, f.h),
                Order::between(c.p2, f.p2, c.h, f.h),
            ]
        })
        .collect();
    let ints: Vec<f64> = samples.iter().map(|s| s.rho_gamma_plus_one).collect();
    let max = ints.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ints.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ErrorRates {
        orders,
        rho_gamma_plus_one: ints,
        integrability_spread: max / min,
    })
}
