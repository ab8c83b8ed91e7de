//! Distribution of the wasted space `W = max S - |S|`.
//!
//! With `π(k,r;M)` the stationary law of the model with `M` primary spaces,
//!
//! ```text
//! P[W = 0] = Σ_{j>=0} π(j,0;j)
//! P[W = L] = Σ_{j>=1} [π(j,0;L+j) - π(j,0;L+j-1)],   L >= 1
//! ```
//!
//! Every summand is bounded by the anti-diagonal mass `(1-ρ)ρ^j`, so the
//! `j`-sums stop at the first `J` with `ρ^{J+1} <= tol`.
//!
//! Model `M` is solved with the zero closure at `R = max(n_cut - M, 0)`, where
//! `ρ^{n_cut}` is well below `tol`: secondary space `R+1` can only be reached
//! through level `M+R+1`, so the cut perturbs `π(j,0;M)` by `O(ρ^{M+R})`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::ctmc::{solve_truncated, Closure};
use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::numeric::NeumaierSum;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Knobs for [`w_pmf`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WastedConfig<T> {
    /// Absolute tolerance on each `P[W = L]`.
    pub tol: T,
    /// Upper limit on the number of `j` terms.
    pub max_terms: usize,
}

impl<T: Scalar> Default for WastedConfig<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-12),
            max_terms: 20_000,
        }
    }
}

/// Coffman–Mitrani heavy-traffic band `½√(π/(1-ρ)) <= E[W] <= (π²/6 - 1)/(1-ρ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanBounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> MeanBounds<T> {
    pub fn new(rho: T) -> Self {
        let eps = T::one() - rho;
        let pi = T::PI();
        Self {
            lower: lit::<T>(0.5) * (pi / eps).sqrt(),
            upper: (pi * pi / lit(6.0) - T::one()) / eps,
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lower && x <= self.upper
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WastedSpaceDistribution<T> {
    pub rho: T,
    pub lmax: usize,
    /// `P[W = L]`, `L = 0..=lmax`.
    pub pmf: Vec<T>,
    /// `Σ L P[W = L]` over the stored support.
    pub mean: T,
    /// Last `j` kept in the inner sums.
    pub jmax: usize,
    /// Bound `ρ^{jmax+1}` on what the `j` truncation drops from each `P[W = L]`.
    pub j_tail_bound: T,
    /// Truncation target `n_cut` used for the per-model solves.
    pub model_cut: usize,
    /// Number of fixed-`M` models solved.
    pub models: usize,
    /// `1 - Σ_{L=1}^{lmax} P[W = L]`, a second estimate of `P[W = 0]`.
    pub p0_complement: T,
}

impl<T: Scalar> WastedSpaceDistribution<T> {
    pub fn total(&self) -> T {
        self.pmf.iter().copied().sum()
    }

    /// Mass beyond `lmax` implied by the stored pmf.
    pub fn tail_mass(&self) -> T {
        T::one() - self.total()
    }

    pub fn bounds(&self) -> MeanBounds<T> {
        MeanBounds::new(self.rho)
    }
}

/// `E[W]` over the stored support and an estimate of the part beyond `lmax`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate<T> {
    pub mean: T,
    /// Geometric extrapolation of `Σ_{L > lmax} L P[W = L]`.
    pub tail_estimate: T,
}

/// Lazily solved rows `π(·,0;M)`, safe to fill from several threads.
struct RowCache<T> {
    rho: T,
    cut: usize,
    rows: Vec<OnceLock<Result<Vec<T>>>>,
}

impl<T: Scalar> RowCache<T> {
    fn new(rho: T, cut: usize, m_max: usize) -> Self {
        Self {
            rho,
            cut,
            rows: (0..=m_max).map(|_| OnceLock::new()).collect(),
        }
    }

    fn row(&self, m: usize) -> Result<&[T]> {
        let slot = self.rows[m].get_or_init(|| {
            if m == 0 {
                return Ok(vec![T::one() - self.rho]);
            }
            let p = ModelParams { m, rho: self.rho };
            let r_max = self.cut.saturating_sub(m);
            let d = solve_truncated(p, r_max, Closure::Zero)?;
            Ok((0..=m).map(|k| d.pi(k, 0)).collect())
        });
        slot.as_ref().map(|v| v.as_slice()).map_err(Clone::clone)
    }
}

/// Smallest `n` with `ρ^n <= x`.
fn log_steps<T: Scalar>(rho: T, x: T) -> usize {
    let n = (x.ln() / rho.ln()).ceil();
    to_f64(n).max(0.0) as usize
}

/// `P[W = L]` for `L <= lmax`.
pub fn w_pmf<T: Scalar>(rho: T, lmax: usize, cfg: &WastedConfig<T>) -> Result<WastedSpaceDistribution<T>> {
    let rho = validate_params(ModelParams { m: 1, rho })?.rho;
    if !(cfg.tol > T::zero() && cfg.tol < T::one()) {
        return Err(Error::Config(format!("tol = {} outside (0, 1)", cfg.tol)));
    }
    // ρ^{J+1} <= tol
    let jmax = log_steps(rho, cfg.tol).saturating_sub(1).max(1);
    if jmax > cfg.max_terms {
        return Err(Error::NonConvergent {
            context: "wasted-space j-sum",
            terms: cfg.max_terms,
        });
    }
    let cut = log_steps(rho, cfg.tol);
    let m_max = lmax + jmax;
    let cache = RowCache::new(rho, cut, m_max);
    (0..=m_max).into_par_iter().try_for_each(|m| cache.row(m).map(|_| ()))?;

    let pi = |j: usize, m: usize| -> Result<T> { Ok(cache.row(m)?[j]) };
    let mut pmf = Vec::with_capacity(lmax + 1);
    let mut p0 = NeumaierSum::new();
    for j in 0..=jmax {
        p0.add(pi(j, j)?);
    }
    pmf.push(p0.value());
    for l in 1..=lmax {
        let mut s = NeumaierSum::new();
        for j in 1..=jmax {
            s.add(pi(j, l + j)? - pi(j, l + j - 1)?);
        }
        pmf.push(s.value());
    }
    let mean = pmf
        .iter()
        .enumerate()
        .map(|(l, &p)| from_usize::<T>(l) * p)
        .sum();
    let rest: T = pmf.iter().skip(1).copied().sum();
    Ok(WastedSpaceDistribution {
        rho,
        lmax,
        mean,
        jmax,
        j_tail_bound: rho.powi(jmax as i32 + 1),
        model_cut: cut,
        models: m_max + 1,
        p0_complement: T::one() - rest,
        pmf,
    })
}

/// `Σ L P[W = L]` with an extrapolated tail.
pub fn w_mean<T: Scalar>(dist: &WastedSpaceDistribution<T>) -> MeanEstimate<T> {
    let n = dist.pmf.len();
    let mut tail = T::zero();
    if n >= 2 {
        let (a, b) = (dist.pmf[n - 2], dist.pmf[n - 1]);
        if a > T::zero() && b > T::zero() && b < a {
            let q = b / a;
            let l = from_usize::<T>(n - 1);
            let one = T::one();
            // Σ_{i>=1} (l+i) b q^i
            tail = b * (l * q / (one - q) + q / ((one - q) * (one - q)));
        }
    }
    MeanEstimate {
        mean: dist.mean,
        tail_estimate: tail,
    }
}
