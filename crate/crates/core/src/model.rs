//! Model parameters, the distribution table, and consistency checks shared by all solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// One model instance: `m` primary spaces, traffic intensity `rho` (service rate 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub m: usize,
    pub rho: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Builds and validates.
    pub fn new(m: usize, rho: T) -> Result<Self> {
        validate_params(Self { m, rho })
    }

    pub fn epsilon(&self) -> T {
        T::one() - self.rho
    }

    /// `Σ_{k+r=N} π(k,r) = (1-ρ)ρ^N`.
    pub fn diagonal_mass(&self, n: usize) -> T {
        self.epsilon() * self.rho.powi(n as i32)
    }
}

/// Checks `0 < rho < 1` and `m >= 1`.
pub fn validate_params<T: Scalar>(p: ModelParams<T>) -> Result<ModelParams<T>> {
    let rho = to_f64(p.rho);
    if p.m < 1 {
        return Err(Error::MOutOfRange { m: p.m });
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::RhoNotPositive { rho });
    }
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(p)
}

/// A lattice point: `k` primary and `r` secondary spaces occupied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex {
    pub k: usize,
    pub r: usize,
}

impl StateIndex {
    pub fn new(k: usize, r: usize) -> Self {
        Self { k, r }
    }

    /// Number of customers present.
    pub fn n(&self) -> usize {
        self.k + self.r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ctmc,
    ClosedForm,
    Spectral,
    Asymptotic,
    Empirical,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ctmc => "ctmc",
            Method::ClosedForm => "closed_form",
            Method::Spectral => "spectral",
            Method::Asymptotic => "asymptotic",
            Method::Empirical => "empirical",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ctmc" => Ok(Method::Ctmc),
            "closed_form" => Ok(Method::ClosedForm),
            "spectral" => Ok(Method::Spectral),
            "asymptotic" => Ok(Method::Asymptotic),
            "empirical" => Ok(Method::Empirical),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Table of `π(k,r)` for `0 <= k <= m`, `0 <= r <= r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T> {
    pub params: ModelParams<T>,
    pub r_max: usize,
    /// Row-major in `k`: entry `(k, r)` sits at `k * (r_max + 1) + r`.
    values: Vec<T>,
    pub method: Method,
    /// Achieved residual or requested tolerance, whichever the producer reports.
    pub tol: T,
    /// Entries whose magnitude fell below [`Scalar::flush_threshold`] and were set to zero.
    pub flushed: usize,
}

impl<T: Scalar> JointDistribution<T> {
    /// Wraps a k-major table, flushing denormal-scale entries.
    pub fn from_values(
        params: ModelParams<T>,
        r_max: usize,
        mut values: Vec<T>,
        method: Method,
        tol: T,
    ) -> Result<Self> {
        let expected = (params.m + 1) * (r_max + 1);
        if values.len() != expected {
            return Err(Error::Config(format!(
                "table has {} entries, expected {expected}",
                values.len()
            )));
        }
        let mut flushed = 0;
        let thr = T::flush_threshold();
        for v in &mut values {
            if *v != T::zero() && v.abs() < thr {
                *v = T::zero();
                flushed += 1;
            }
        }
        Ok(Self {
            params,
            r_max,
            values,
            method,
            tol,
            flushed,
        })
    }

    /// Builds a table by evaluating `f(k, r)` on every cell.
    pub fn tabulate<F>(params: ModelParams<T>, r_max: usize, method: Method, tol: T, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<T>,
    {
        let mut values = Vec::with_capacity((params.m + 1) * (r_max + 1));
        for k in 0..=params.m {
            for r in 0..=r_max {
                values.push(f(k, r)?);
            }
        }
        Self::from_values(params, r_max, values, method, tol)
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn rho(&self) -> T {
        self.params.rho
    }

    /// `π(k, r)`; panics outside the table.
    pub fn pi(&self, k: usize, r: usize) -> T {
        self.get(k, r)
            .unwrap_or_else(|| panic!("({k}, {r}) outside table m={} R={}", self.m(), self.r_max))
    }

    pub fn get(&self, k: usize, r: usize) -> Option<T> {
        (k <= self.m() && r <= self.r_max).then(|| self.values[k * (self.r_max + 1) + r])
    }

    /// Entries `π(k, 0..=r_max)`.
    pub fn row(&self, k: usize) -> &[T] {
        let w = self.r_max + 1;
        &self.values[k * w..(k + 1) * w]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(k, r, π)` in k-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.r_max + 1;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / w, i % w, v))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    /// Same table in another precision.
    pub fn cast<U: Scalar>(&self) -> JointDistribution<U> {
        let c = |x: T| U::from_f64(to_f64(x)).unwrap_or_else(U::nan);
        JointDistribution {
            params: ModelParams {
                m: self.params.m,
                rho: c(self.params.rho),
            },
            r_max: self.r_max,
            values: self.values.iter().map(|&v| c(v)).collect(),
            method: self.method,
            tol: c(self.tol),
            flushed: self.flushed,
        }
    }
}

/// Solver knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T> {
    /// Truncation level in `r`.
    pub r_max: usize,
    /// Gauss–Legendre nodes per panel.
    pub quad_points: usize,
    pub tol_rel: T,
    pub max_terms: usize,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn default_for(params: &ModelParams<T>) -> Self {
        Self {
            r_max: default_truncation(params),
            quad_points: 20,
            tol_rel: lit(1e-12),
            max_terms: 100_000,
        }
    }

    pub fn with_r_max(mut self, r_max: usize) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_tol(mut self, tol_rel: T) -> Self {
        self.tol_rel = tol_rel;
        self
    }

    pub fn validate(&self, params: &ModelParams<T>) -> Result<()> {
        if self.r_max < params.m + 2 {
            return Err(Error::TruncationTooSmall {
                r_max: self.r_max,
                min: params.m + 2,
            });
        }
        if self.quad_points < 8 {
            return Err(Error::Config(format!(
                "quad_points = {} (need at least 8)",
                self.quad_points
            )));
        }
        let t = to_f64(self.tol_rel);
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("tol_rel = {t} outside (0, 1)")));
        }
        if self.max_terms == 0 {
            return Err(Error::Config("max_terms must be positive".into()));
        }
        Ok(())
    }
}

/// Smallest `R` with `ρ^R < 1e-16 (1-ρ)`, and at least `m + 2`.
pub fn default_truncation<T: Scalar>(params: &ModelParams<T>) -> usize {
    let rho = to_f64(params.rho);
    let target = (1e-16 * (1.0 - rho)).ln() / rho.ln();
    let r = target.floor() as usize + 1;
    r.max(params.m + 2)
}

/// `|Σ_k π(k, N-k) - (1-ρ)ρ^N|`.
pub fn geometric_identity_residual<T: Scalar>(d: &JointDistribution<T>, n: usize) -> Result<T> {
    if n > d.r_max {
        return Err(Error::Truncation { n, r_max: d.r_max });
    }
    let s: T = (0..=d.m().min(n)).map(|k| d.pi(k, n - k)).sum();
    Ok((s - d.params.diagonal_mass(n)).abs())
}

/// Largest geometric residual over `N <= R - m`, relative to `(1-ρ)ρ^N`.
pub fn max_geometric_residual<T: Scalar>(d: &JointDistribution<T>) -> (T, T) {
    let mut abs = T::zero();
    let mut rel = T::zero();
    for n in 0..=d.r_max.saturating_sub(d.m()) {
        let res = geometric_identity_residual(d, n).expect("within table");
        abs = abs.max(res);
        rel = rel.max(res / d.params.diagonal_mass(n));
    }
    (abs, rel)
}

/// Outcome of [`normalization_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization<T> {
    pub residual: T,
    /// Sum over the counted anti-diagonals.
    pub stored: T,
    /// `1 - ρ^{n_max+1}`.
    pub expected: T,
    /// Anti-diagonals `N = 0..=n_max` were counted (all fully inside the table).
    pub n_max: usize,
}

/// Compares stored mass on complete anti-diagonals with its exact value.
pub fn normalization_residual<T: Scalar>(d: &JointDistribution<T>) -> Result<Normalization<T>> {
    if d.method == Method::Asymptotic {
        return Err(Error::Domain(
            "normalization is not defined for asymptotic tables".into(),
        ));
    }
    let n_max = d.r_max;
    let mut stored = crate::numeric::NeumaierSum::new();
    for (k, r, v) in d.iter() {
        if k + r <= n_max {
            stored.add(v);
        }
    }
    let stored = stored.value();
    let expected = T::one() - d.rho().powi(n_max as i32 + 1);
    Ok(Normalization {
        residual: (stored - expected).abs(),
        stored,
        expected,
        n_max,
    })
}

/// Max relative deviation between two tables over entries of `reference` above `floor`.
pub fn max_relative_difference<T: Scalar>(
    a: &JointDistribution<T>,
    reference: &JointDistribution<T>,
    r_upto: usize,
    floor: T,
) -> T {
    let mut worst = T::zero();
    for k in 0..=a.m().min(reference.m()) {
        for r in 0..=r_upto.min(a.r_max).min(reference.r_max) {
            let b = reference.pi(k, r);
            if b.abs() > floor {
                worst = worst.max((a.pi(k, r) / b - T::one()).abs());
            }
        }
    }
    worst
}

/// `n!` as a scalar.
pub fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * from_usize::<T>(i))
}
