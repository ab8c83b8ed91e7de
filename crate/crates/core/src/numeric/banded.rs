//! Banded linear algebra.
//!
//! Two eliminations live here:
//!
//! * [`BandMatrix::gth_null_vector`]: Grassmann–Taksar–Heyman elimination for
//!   the balance equations of a finite CTMC. Pivots are formed as column sums
//!   of off-diagonal magnitudes, so no subtraction ever happens and every
//!   component of the null vector keeps full relative accuracy, including
//!   entries twenty orders of magnitude below the largest.
//! * [`BandLu`]: LU with partial pivoting for general banded systems.

// Index loops below follow the band layout and read more clearly than iterators.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, row-wise storage.
#[derive(Clone, Debug)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`; panics when `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band kl={} ku={}", self.kl, self.ku));
        self.data[s] = self.data[s] + v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band kl={} ku={}", self.kl, self.ku));
        self.data[s] = v;
    }

    /// Clears row `i`.
    pub fn clear_row(&mut self, i: usize) {
        let w = self.kl + self.ku + 1;
        for v in &mut self.data[i * w..(i + 1) * w] {
            *v = T::zero();
        }
    }

    /// Column range `(lo, hi)` (inclusive) that row `i` may occupy.
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.kl), (i + self.ku).min(self.n - 1))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.row_span(i);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Per-row relative residual `|Σ a_ij x_j| / Σ |a_ij x_j|`, with `rhs` subtracted.
    pub fn relative_residuals(&self, x: &[T], rhs: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.row_span(i);
                let mut s = -rhs[i];
                let mut mag = rhs[i].abs();
                for j in lo..=hi {
                    let t = self.get(i, j) * x[j];
                    s = s + t;
                    mag = mag + t.abs();
                }
                if mag == T::zero() {
                    T::zero()
                } else {
                    s.abs() / mag
                }
            })
            .collect()
    }

    /// Null vector of a balance-equation matrix `B = -Qᵀ` by GTH elimination.
    ///
    /// Requirements: non-negative diagonal, non-positive off-diagonals and zero
    /// column sums (a conservative generator). No pivoting is performed, so the
    /// band structure is preserved. The last unknown is fixed to one and the
    /// rest follow by back-substitution of non-negative terms; the returned
    /// vector is only defined up to scale (and is rescaled internally to stay
    /// within floating-point range).
    pub fn gth_null_vector(&self) -> Result<Vec<T>> {
        let n = self.n;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut a = self.clone();
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n - 1 {
            let lo = j + 1;
            let hi = (j + kl).min(n - 1);
            let mut pivot = T::zero();
            for i in lo..=hi {
                pivot = pivot - a.get(i, j);
            }
            if pivot <= T::zero() {
                return Err(Error::Singular {
                    row: j,
                    pivot: to_f64(pivot),
                    ratio: 0.0,
                });
            }
            a.set(j, j, pivot);
            let chi = (j + ku).min(n - 1);
            for i in lo..=hi {
                let aij = a.get(i, j);
                if aij == T::zero() {
                    continue;
                }
                let f = aij / pivot;
                for c in lo..=chi {
                    let ajc = a.get(j, c);
                    if ajc != T::zero() {
                        a.add(i, c, -f * ajc);
                    }
                }
                a.set(i, j, T::zero());
            }
        }
        let big: T = lit(1e200);
        let shrink: T = lit(1e-200);
        let mut x = vec![T::zero(); n];
        x[n - 1] = T::one();
        for i in (0..n - 1).rev() {
            let chi = (i + ku).min(n - 1);
            let mut s = T::zero();
            for (c, xc) in x.iter().enumerate().take(chi + 1).skip(i + 1) {
                s = s - a.get(i, c) * *xc;
            }
            let xi = s / a.get(i, i);
            x[i] = xi;
            if xi > big {
                for v in &mut x[i..] {
                    *v = *v * shrink;
                }
            }
        }
        Ok(x)
    }
}

/// LU factorisation with partial pivoting of a band matrix.
///
/// Storage follows the LAPACK `gbtrf` layout: each row keeps room for `kl`
/// extra super-diagonals of fill created by row interchanges.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    lu: Vec<T>,
    pivots: Vec<usize>,
    /// Smallest over largest pivot magnitude.
    pub pivot_ratio: T,
}

impl<T: Scalar> BandLu<T> {
    pub fn factor(m: &BandMatrix<T>) -> Result<Self> {
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        let width = 2 * kl + ku + 1;
        let mut f = Self {
            n,
            kl,
            ku,
            width,
            lu: vec![T::zero(); n * width],
            pivots: vec![0; n],
            pivot_ratio: T::one(),
        };
        for i in 0..n {
            let (lo, hi) = m.row_span(i);
            for j in lo..=hi {
                let s = f.slot(i, j);
                f.lu[s] = m.get(i, j);
            }
        }
        let mut pmax = T::zero();
        let mut pmin = T::infinity();
        for j in 0..n {
            let rhi = (j + kl).min(n - 1);
            let chi = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = f.at(j, j).abs();
            for i in j + 1..=rhi {
                let v = f.at(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(Error::Singular {
                    row: j,
                    pivot: to_f64(best),
                    ratio: 0.0,
                });
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);
            f.pivots[j] = p;
            if p != j {
                for c in j..=chi {
                    let (sj, sp) = (f.slot(j, c), f.slot(p, c));
                    f.lu.swap(sj, sp);
                }
            }
            let piv = f.at(j, j);
            for i in j + 1..=rhi {
                let sij = f.slot(i, j);
                let l = f.lu[sij] / piv;
                f.lu[sij] = l;
                if l == T::zero() {
                    continue;
                }
                for c in j + 1..=chi {
                    let sjc = f.slot(j, c);
                    let sic = f.slot(i, c);
                    f.lu[sic] = f.lu[sic] - l * f.lu[sjc];
                }
            }
        }
        f.pivot_ratio = pmin / pmax;
        Ok(f)
    }

    #[inline]
    fn slot(&self, i: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= i && c <= i + self.kl + self.ku);
        i * self.width + (c + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, c: usize) -> T {
        self.lu[self.slot(i, c)]
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.n;
        let mut b = rhs.to_vec();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            for (i, bi) in b.iter_mut().enumerate().take((j + self.kl).min(n - 1) + 1).skip(j + 1) {
                *bi = *bi - self.at(i, j) * bj;
            }
        }
        for i in (0..n).rev() {
            let chi = (i + self.kl + self.ku).min(n - 1);
            let mut s = b[i];
            for c in i + 1..=chi {
                s = s - self.at(i, c) * b[c];
            }
            b[i] = s / self.at(i, i);
        }
        b
    }
}
