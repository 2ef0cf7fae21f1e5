//! Discrete spatial operators on the staggered grid.
//!
//! Conventions: a cell field has length `N`; a full face field has length
//! `N + 1` with entries `0` and `N` on the walls; an interior face field has
//! length `N - 1` and holds faces `1..N` (half-integer labels
//! `x_{1/2} .. x_{N-3/2}`).

use crate::error::{Error, Result};

#[inline]
pub fn pos(u: f64) -> f64 {
    u.max(0.0)
}

#[inline]
pub fn neg(u: f64) -> f64 {
    u.min(0.0)
}

fn upwind(donor: &[f64], u: &[f64]) -> Vec<f64> {
    let n = donor.len();
    debug_assert_eq!(u.len(), n + 1);
    let mut flux = vec![0.0; n + 1];
    for j in 1..n {
        flux[j] = donor[j - 1] * pos(u[j]) + donor[j] * neg(u[j]);
    }
    flux
}

/// `Up(ρu)` on every face; zero on the walls.
pub fn upwind_mass_flux(rho: &[f64], u: &[f64]) -> Vec<f64> {
    upwind(rho, u)
}

/// `Up(ρ û u)` on every face: the cell momentum `ρ_i û_i` taken from the donor cell.
pub fn upwind_momentum_flux(rho: &[f64], hat_u: &[f64], u: &[f64]) -> Vec<f64> {
    let momentum: Vec<f64> = rho.iter().zip(hat_u).map(|(r, h)| r * h).collect();
    upwind(&momentum, u)
}

/// `∂_{i+1/2} f` on interior faces.
pub fn diff_face(f: &[f64], dx: f64) -> Vec<f64> {
    f.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// `∂_i v` on cells from a full face field.
pub fn diff_cell(v: &[f64], dx: f64) -> Vec<f64> {
    v.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Three-point Laplacian on interior faces of a full face field.
pub fn laplace_velocity(u: &[f64], dx: f64) -> Vec<f64> {
    let dx2 = dx * dx;
    u.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]) / dx2).collect()
}

/// Zero-mean tolerance for sources of the Neumann inverse.
pub fn mean_tolerance(f: &[f64]) -> f64 {
    let sup = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-10 * (1.0 + sup)
}

fn check_zero_mean(f: &[f64]) -> Result<()> {
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let tol = mean_tolerance(f);
    if mean.abs() > tol {
        return Err(Error::NonZeroMean { mean, tol });
    }
    Ok(())
}

/// Gradient of the Neumann inverse Laplacian, `∂_{i+1/2} Δ_i^{-1}[f]`, on
/// all faces. Closed form: the running sum `dx Σ_{i<j} f_i`, with both
/// wall values exactly zero.
pub fn neumann_inv_grad(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    check_zero_mean(f)?;
    let n = f.len();
    let mut r = vec![0.0; n + 1];
    let mut acc = 0.0;
    for j in 1..n {
        acc += dx * f[j - 1];
        r[j] = acc;
    }
    Ok(r)
}

/// Same quantity through the shadow-cell Neumann system
/// `-(q_{i+1} - 2 q_i + q_{i-1}) / dx² = f_i`, `q_{-1} = q_0`, `q_N = q_{N-1}`,
/// pinned by `q_0 = 0` and solved with the Thomas algorithm; returns `-∂q`.
pub fn neumann_inv_grad_solve(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    check_zero_mean(f)?;
    let n = f.len();
    let m = n - 1; // unknowns q_1 .. q_{N-1}; the row for cell 0 is redundant
    let dx2 = dx * dx;
    let mut sub = vec![-1.0; m];
    let mut diag = vec![2.0; m];
    let mut sup = vec![-1.0; m];
    let rhs: Vec<f64> = f[1..].iter().map(|v| v * dx2).collect();
    diag[m - 1] = 1.0;
    sub[0] = 0.0;
    sup[m - 1] = 0.0;
    let q_inner = thomas(&sub, &diag, &sup, &rhs)?;
    let mut q = vec![0.0; n];
    q[1..].copy_from_slice(&q_inner);
    let mut r = vec![0.0; n + 1];
    for j in 1..n {
        r[j] = -(q[j] - q[j - 1]) / dx;
    }
    Ok(r)
}

/// `∂_i Δ_{i+1/2}^{-1}[v] = -∂_i w` on cells, where `-Δ_{i+1/2} w = v` on
/// interior faces with `w = 0` on the walls. `v` is an interior face field.
pub fn dirichlet_inv_grad(v: &[f64], dx: f64) -> Vec<f64> {
    let m = v.len();
    let dx2 = dx * dx;
    let mut sub = vec![-1.0; m];
    let diag = vec![2.0; m];
    let mut sup = vec![-1.0; m];
    sub[0] = 0.0;
    sup[m - 1] = 0.0;
    let rhs: Vec<f64> = v.iter().map(|x| x * dx2).collect();
    // SPD tridiagonal: elimination never meets a zero pivot.
    let w_inner = thomas(&sub, &diag, &sup, &rhs).expect("Dirichlet Laplacian is positive definite");
    let mut w = vec![0.0; m + 2];
    w[1..=m].copy_from_slice(&w_inner);
    w.windows(2).map(|p| -(p[1] - p[0]) / dx).collect()
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::SingularMatrix { row: 0 });
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::SingularMatrix { row: i });
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
