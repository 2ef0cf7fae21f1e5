//! Banded LU factorisation with partial pivoting.

use crate::error::{Error, Result};

/// Square matrix with `lower` sub- and `upper` super-diagonals. Row `i`
/// stores columns `i - lower ..= i + upper + lower`; the extra `lower`
/// columns absorb fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn in_band(&self, row: usize, col: usize) -> bool {
        col + self.lower >= row && col <= row + self.upper
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.upper + self.lower);
        row * self.width + (col + self.lower - row)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.lower < row || col > row + self.upper + self.lower {
            return 0.0;
        }
        self.data[self.slot(row, col)]
    }

    /// Accumulates into an entry; panics outside the declared band.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(self.in_band(row, col), "entry ({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let reach = self.upper + self.lower;
        let mut x = b.to_vec();
        for k in 0..n {
            let last = (k + self.lower).min(n - 1);
            let (mut piv, mut best) = (k, self.get(k, k).abs());
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    piv = r;
                    best = v;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { row: k });
            }
            let right = (k + reach).min(n - 1);
            if piv != k {
                for c in k..=right {
                    let (a, b) = (self.slot(k, c), self.slot(piv, c));
                    self.data.swap(a, b);
                }
                x.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last {
                let factor = self.get(r, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                for c in k + 1..=right {
                    let s = self.slot(r, c);
                    self.data[s] -= factor * self.data[self.slot(k, c)];
                }
                let s = self.slot(r, k);
                self.data[s] = 0.0;
                x[r] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let right = (k + reach).min(n - 1);
            let mut acc = x[k];
            for c in k + 1..=right {
                acc -= self.data[self.slot(k, c)] * x[c];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for r in k + 1..n {
                let f = a[r][k] / a[k][k];
                for c in k..n {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            x[k] = (b[k] - (k + 1..n).map(|c| a[k][c] * x[c]).sum::<f64>()) / a[k][k];
        }
        x
    }

    #[test]
    fn matches_dense_elimination_with_pivoting() {
        // Deterministic pseudo-random band with a weak diagonal to force row swaps.
        let (n, lo, up) = (17, 4, 4);
        let mut m = BandMatrix::zeros(n, lo, up);
        let mut dense = vec![vec![0.0; n]; n];
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(lo)..=(i + up).min(n - 1) {
                let v = if i == j { 0.01 * next() } else { next() };
                m.add(i, j, v);
                dense[i][j] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = m.clone().solve(&b).unwrap();
        let y = dense_solve(dense, b.clone());
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()));
        }
        let back = m.mul_vec(&x);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn detects_singular() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(2, 2, 1.0);
        assert!(matches!(m.solve(&[1.0, 1.0, 1.0]), Err(Error::SingularMatrix { row: 1 })));
    }
}
