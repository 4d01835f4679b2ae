//! Small dense helpers and a banded LU factorization with partial pivoting.
//!
//! The linearized operator is a 9-point stencil over row-major interior
//! nodes, so its bandwidth is about one grid row. A general banded LU
//! (the layout of LAPACK `gbtrf`, with `kl` extra upper diagonals reserved
//! for pivoting fill-in) is a direct, non-symmetric solver that is exact
//! enough and fast enough for grids up to ~10⁵ unknowns.

use thiserror::Error;

use crate::{M2, P2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("entry ({row}, {col}) lies outside the band (kl={kl}, ku={ku})")]
    OutsideBand {
        row: usize,
        col: usize,
        kl: usize,
        ku: usize,
    },
}

/// Eigenvalues `(λ_min, λ_max)` of a symmetric 2×2 matrix, closed form.
pub fn sym2_eigenvalues(m: &M2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Spectral norm of a symmetric 2×2 matrix.
pub fn sym2_norm(m: &M2) -> f64 {
    let (lo, hi) = sym2_eigenvalues(m);
    lo.abs().max(hi.abs())
}

/// Unit direction at angle `theta`.
pub fn direction(theta: f64) -> P2 {
    P2::new(theta.cos(), theta.sin())
}

/// `count` uniformly spaced angles on `[0, π)`; directions are sign-invariant
/// for every quadratic form evaluated here.
pub fn direction_angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| std::f64::consts::PI * k as f64 / count as f64)
        .collect()
}

/// Square banded matrix in LAPACK-style band storage.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    #[inline]
    fn stored(&self, row: usize, col: usize) -> bool {
        col + self.kl >= row && col <= row + self.ku + self.kl
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if self.stored(row, col) {
            self.data[self.slot(row, col)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) -> Result<(), LinalgError> {
        if col + self.kl < row || col > row + self.ku {
            return Err(LinalgError::OutsideBand {
                row,
                col,
                kl: self.kl,
                ku: self.ku,
            });
        }
        let s = self.slot(row, col);
        self.data[s] += value;
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu, LinalgError> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            if best <= tiny || best == 0.0 {
                return Err(LinalgError::Singular(k));
            }
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = self.slot(k, c);
                    let b = self.slot(p, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let srk = self.slot(r, k);
                let l = self.data[srk] / pivot;
                self.data[srk] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let src = self.data[self.slot(k, c)];
                    let dst = self.slot(r, c);
                    self.data[dst] -= l * src;
                }
            }
        }
        Ok(BandLu { m: self, pivots })
    }
}

/// Factorization produced by [`BandMatrix::factor`].
#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let kl = self.m.kl;
        let reach = self.m.ku + kl;
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.m.data[self.m.slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                s -= self.m.data[self.m.slot(k, c)] * b[c];
            }
            b[k] = s / self.m.data[self.m.slot(k, k)];
        }
        b
    }
}
