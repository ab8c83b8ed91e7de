//! Two primary spaces.
//!
//! The double integrals are evaluated in log form. With `v = (1-u)(1-t)`,
//! the `r`-dependent factor is `[(1+ρ)v / (1+ρv)]^r <= 1`, peaking at
//! `u = t = 0` with width `O(1/r)`, so both directions use partitions graded
//! toward zero.

use rayon::prelude::*;

use super::{check_rho, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::model::{JointDistribution, Method, ModelParams, SolverConfig};
use crate::numeric::quadrature::{graded_toward_lower, GaussLegendre};
use crate::numeric::NeumaierSum;
use crate::scalar::{from_usize, lit, Scalar};

/// Largest `r` accepted by the series forms.
pub const SERIES_MAX_R: usize = 8;

/// `a* = ρ/(1+ρ)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct M2Constants<T> {
    pub a_star: T,
}

impl<T: Scalar> M2Constants<T> {
    pub fn new(rho: T) -> Result<Self> {
        let rho = check_rho(rho)?;
        let s = T::one() + rho;
        Ok(Self { a_star: rho / (s * s) })
    }
}

/// The log-form integrand sums `O(r)` terms, so its relative accuracy is `O(r ε)`.
fn rule<T: Scalar>(r: usize, cfg: &SolverConfig<T>) -> GaussLegendre<T> {
    GaussLegendre::new(cfg.quad_points).with_noise(T::epsilon() * lit(4.0) * from_usize::<T>(r + 2))
}

fn breaks<T: Scalar>(r: usize) -> Vec<T> {
    graded_toward_lower(T::zero(), T::one(), T::one() / from_usize::<T>(8 * (r + 1)))
}

/// Shared integrand: `log` of everything except the bracket and prefactor.
/// `extra` is the power of `1+ρv` beyond `r`.
fn log_kernel<T: Scalar>(rho: T, a_star: T, r: usize, extra: i32, u: T, t: T) -> T {
    let one = T::one();
    let c = rho * rho / ((one + rho) * (one + rho));
    let rf = from_usize::<T>(r);
    let l1u = (-u).ln_1p();
    let l1t = (-t).ln_1p();
    let v = (one - u) * (one - t);
    let lden = (rho * v).ln_1p();
    c * t * (one - u) + lit::<T>(2.0) * u.ln() + (rf - one) * l1u + (rf - a_star) * l1t
        - (rf + from_usize::<T>(extra as usize)) * lden
        + rf * rho.ln_1p()
}

/// `(1+ρ)^{r-2} r(r+1) ∫∫ …` of the `π(0,r)` representation, without the
/// `(1-ρ)ρ^{r+2}` prefactor. Stays finite at `ρ = 1`.
pub(crate) fn double_integral_0<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let one = T::one();
    let s = one + rho;
    let a_star = rho / (s * s);
    let gl = rule(r, cfg);
    let b = breaks::<T>(r);
    let est = gl.integrate_2d(
        |u, t| log_kernel(rho, a_star, r, 2, u, t).exp(),
        &b,
        &b,
        cfg.tol_rel,
        MAX_DEPTH,
    )?;
    // (1+ρ)^r is folded into the integrand
    let rf = from_usize::<T>(r);
    Ok(rf * (rf + one) / (s * s) * est.value)
}

/// `(1+ρ)^{r-1} (r+1)² ∫∫ …` of the `π(1,r)` representation, `r >= 1`.
pub(crate) fn double_integral_1<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let one = T::one();
    let s = one + rho;
    let a_star = rho / (s * s);
    let gl = rule(r, cfg);
    let b = breaks::<T>(r);
    let rf = from_usize::<T>(r);
    let two: T = lit(2.0);
    let est = gl.integrate_2d(
        |u, t| {
            let v = (one - u) * (one - t);
            (rf - two * rho * v) * log_kernel(rho, a_star, r, 3, u, t).exp()
        },
        &b,
        &b,
        cfg.tol_rel,
        MAX_DEPTH,
    )?;
    let r1 = rf + one;
    Ok(r1 * r1 / s * est.value)
}

/// `π(0,r)` for `m = 2` from the double integral; `1-ρ` at `r = 0`.
pub fn pi0_m2<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r == 0 {
        return Ok(T::one() - rho);
    }
    Ok((T::one() - rho) * rho.powi(r as i32 + 2) * double_integral_0(rho, r, cfg)?)
}

/// `π(1,r)` for `m = 2`, `r >= 1`; `r = 0` goes through the corner identity.
pub fn pi1_m2<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r == 0 {
        return Ok(rho * (T::one() - rho) - pi0_m2(rho, 1, cfg)?);
    }
    Ok((T::one() - rho) * rho.powi(r as i32 + 2) * double_integral_1(rho, r, cfg)?)
}

/// `π(2,r) = (1-ρ)ρ^{r+2} - π(1,r+1) - π(0,r+2)`.
pub fn pi2_m2<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    let p1 = pi1_m2(rho, r + 1, cfg)?;
    let p0 = pi0_m2(rho, r + 2, cfg)?;
    Ok((T::one() - rho) * rho.powi(r as i32 + 2) - p1 - p0)
}

/// `Σ_{s>=0} x^{2s} / (l(l-1)(l-2) Π_{j=lo}^{l-1}(j-a*))` with `l = l0 + s`.
fn inner_tail<T: Scalar>(x2: T, a_star: T, l0: usize, lo: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let mut prod = T::one();
    for j in lo..l0 {
        prod = prod * (from_usize::<T>(j) - a_star);
    }
    let mut sum = NeumaierSum::new();
    let mut pow = T::one();
    for s in 0..cfg.max_terms {
        let l = l0 + s;
        if s > 0 {
            prod = prod * (from_usize::<T>(l - 1) - a_star);
            pow = pow * x2;
        }
        let lf = from_usize::<T>(l);
        let term = pow / (lf * (lf - T::one()) * (lf - lit(2.0)) * prod);
        sum.add(term);
        if term < T::epsilon() * lit(1e-3) * sum.value() {
            return Ok(sum.value());
        }
    }
    Err(Error::NonConvergent {
        context: "inner series",
        terms: cfg.max_terms,
    })
}

/// Outer alternating sum `Σ_L (-1)^L c_L`, stopped once several consecutive
/// terms fall below `eps · max |term|`.
fn alternating<T: Scalar, F>(cfg: &SolverConfig<T>, mut term: F) -> Result<T>
where
    F: FnMut(usize) -> Result<T>,
{
    let mut sum = NeumaierSum::new();
    let mut biggest = T::zero();
    let mut quiet = 0;
    for l in 0..cfg.max_terms {
        let c = term(l)?;
        biggest = biggest.max(c.abs());
        sum.add(if l % 2 == 0 { c } else { -c });
        if c.abs() < T::epsilon() * lit(1e-2) * biggest {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum.value());
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergent {
        context: "alternating series",
        terms: cfg.max_terms,
    })
}

fn refuse_large_r(r: usize) -> Result<()> {
    if r > SERIES_MAX_R {
        return Err(Error::Domain(format!(
            "series form limited to r <= {SERIES_MAX_R} (r = {r}): alternating terms grow like (1/a*)^L and cancel"
        )));
    }
    Ok(())
}

/// `π(0,r)` for `m = 2` from the alternating series, `1 <= r <= 8`.
///
/// The factor `(−1/a*)^L x^{2L}` collapses to `(−ρ)^L` and the Gamma ratio
/// `Γ(L+r+1−a*)/Γ(l−a*)` becomes a finite product, so no term overflows.
pub fn pi0_m2_series<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let a_star = M2Constants::new(rho)?.a_star;
    if r == 0 {
        return Ok(T::one() - rho);
    }
    refuse_large_r(r)?;
    let one = T::one();
    let x = rho / (one + rho);
    let x2 = x * x;
    let fact_rm1 = crate::model::factorial::<T>(r - 1);
    let sum = alternating(cfg, |l| {
        // (L+r+1)! / (L! (r-1)!)
        let mut c = one / fact_rm1;
        for i in l + 1..=l + r + 1 {
            c = c * from_usize::<T>(i);
        }
        let inner = inner_tail(x2, a_star, l + r + 2, l + r + 1, cfg)?;
        Ok(rho.powi(l as i32) * c * inner)
    })?;
    let s = one + rho;
    let pre = lit::<T>(2.0) * (one - rho) * s.powi(3 * r as i32 + 2) / rho.powi(r as i32 + 2)
        * x2.powi(r as i32 + 2);
    Ok(pre * sum)
}

/// `π(1,r)` for `m = 2` from the alternating series, `1 <= r <= 8`.
pub fn pi1_m2_series<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let a_star = M2Constants::new(rho)?.a_star;
    if r == 0 {
        return Err(Error::Domain("series form of π(1,r) needs r >= 1".into()));
    }
    refuse_large_r(r)?;
    let one = T::one();
    let x = rho / (one + rho);
    let x2 = x * x;
    let sum = alternating(cfg, |l| {
        let n = l + r - 1;
        // (L+r)(L+r+1)!/L!
        let mut c = from_usize::<T>(l + r);
        for i in l + 1..=l + r + 1 {
            c = c * from_usize::<T>(i);
        }
        let inner = inner_tail(x2, a_star, n + 3, n + 2, cfg)?;
        Ok(rho.powi(n as i32) * c * inner)
    })?;
    let s = one + rho;
    let rf = from_usize::<T>(r);
    let pre = lit::<T>(2.0) * (rf + one) / crate::model::factorial::<T>(r) * (one - rho) * s.powi(r as i32 + 5)
        / (rho * rho * rho)
        * x2.powi(3);
    Ok(pre * sum)
}

/// Table for `r <= cfg.r_max` from the double integrals.
pub fn full_distribution_m2<T: Scalar>(rho: T, cfg: &SolverConfig<T>) -> Result<JointDistribution<T>> {
    let params = ModelParams::new(2, rho)?;
    cfg.validate(&params)?;
    let rr = cfg.r_max;
    // rows are independent quadratures
    let p0: Vec<T> = (0..=rr + 2).into_par_iter().map(|r| pi0_m2(rho, r, cfg)).collect::<Result<_>>()?;
    let mut p1: Vec<T> = vec![rho * (T::one() - rho) - p0[1]];
    p1.extend((1..=rr + 1).into_par_iter().map(|r| pi1_m2(rho, r, cfg)).collect::<Result<Vec<T>>>()?);
    JointDistribution::tabulate(params, rr, Method::ClosedForm, cfg.tol_rel, |k, r| {
        Ok(match k {
            0 => p0[r],
            1 => p1[r],
            _ => (T::one() - rho) * rho.powi(r as i32 + 2) - p1[r + 1] - p0[r + 2],
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig<f64> {
        SolverConfig::default_for(&ModelParams::new(2, 0.5).unwrap())
    }

    #[test]
    fn a_star_value() {
        let c = M2Constants::new(0.5f64).unwrap();
        assert!((c.a_star - 0.5 / 2.25).abs() < 1e-16);
    }

    #[test]
    fn series_matches_integral() {
        let c = cfg();
        for r in [1, 4] {
            let a = pi0_m2(0.5, r, &c).unwrap();
            let b = pi0_m2_series(0.5, r, &c).unwrap();
            assert!((a / b - 1.0).abs() < 1e-9, "r = {r}: {a} vs {b}");
            let a = pi1_m2(0.5, r, &c).unwrap();
            let b = pi1_m2_series(0.5, r, &c).unwrap();
            assert!((a / b - 1.0).abs() < 1e-9, "r = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn series_refuses_large_r() {
        assert!(matches!(pi0_m2_series(0.5, 9, &cfg()), Err(Error::Domain(_))));
    }
}
