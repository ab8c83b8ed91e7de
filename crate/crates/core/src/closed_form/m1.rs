//! One primary space.
//!
//! Integrals are written with the `r`-th power normalised to peak at one, so
//! nothing overflows for large `r`: `ρ^r g(u)^r` with
//! `g(u) = (1+ρ)(u-1)/(ρu)` replaces `(1+ρ)^r (1-1/u)^r` on `[1, 1+ρ]`.

use super::{check_rho, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::model::{JointDistribution, Method, ModelParams, SolverConfig};
use crate::numeric::quadrature::{graded_toward_upper, GaussLegendre};
use crate::scalar::{from_usize, lit, Scalar};

/// Above this `r` the integrals are replaced by the series.
pub const SERIES_ONLY_ABOVE: usize = 500;

fn peak_breaks<T: Scalar>(a: T, b: T, r: usize) -> Vec<T> {
    let w = (b - a) / from_usize::<T>(4 * (r + 1));
    graded_toward_upper(a, b, w)
}

/// `π(0,r) = (1-ρ)(1+ρ)^{r-1} ∫₁^{1+ρ} (1-1/u)^r du`; `1-ρ` at `r = 0`.
pub fn pi0_integral<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r == 0 {
        return Ok(T::one() - rho);
    }
    if r > SERIES_ONLY_ABOVE {
        return pi0_series(rho, r, cfg);
    }
    let one = T::one();
    Ok((one - rho) * rho.powi(r as i32) / (one + rho) * scaled_power_integral(rho, r, 0, cfg)?)
}

/// `∫₁^{1+ρ} g(u)^r u^{-j} du` with `g(u) = (1+ρ)(u-1)/(ρu)`. Also used at `ρ = 1`.
pub(crate) fn scaled_power_integral<T: Scalar>(rho: T, r: usize, j: i32, cfg: &SolverConfig<T>) -> Result<T> {
    let one = T::one();
    let gl = GaussLegendre::new(cfg.quad_points);
    let g = |u: T| ((one + rho) * (u - one) / (rho * u)).powi(r as i32) * u.powi(-j);
    Ok(gl.integrate(g, &peak_breaks(one, one + rho, r), cfg.tol_rel, MAX_DEPTH)?.value)
}

/// `π(0,r) = (1-ρ)/(1+ρ) ρ^r Σ_{n>=1} n/(r+n) x^n`, `x = ρ/(1+ρ)`.
pub fn pi0_series<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r == 0 {
        return Ok(T::one() - rho);
    }
    let x = rho / (T::one() + rho);
    let s = geometric_series(x, cfg, |n| from_usize::<T>(n) / from_usize::<T>(r + n))?;
    Ok((T::one() - rho) / (T::one() + rho) * rho.powi(r as i32) * s)
}

/// `Σ_{n>=1} c(n) x^n` for `0 <= c(n) <= 1`, stopped once the bound
/// `x^{n+1}/(1-x)` on the remainder drops below rounding level. With
/// `x < 1/2` that takes at most ~55 terms in double precision.
fn geometric_series<T: Scalar, F: Fn(usize) -> T>(x: T, cfg: &SolverConfig<T>, c: F) -> Result<T> {
    let mut sum = T::zero();
    let mut pow = T::one();
    for n in 1..=cfg.max_terms {
        pow = pow * x;
        sum = sum + c(n) * pow;
        if pow * x / (T::one() - x) < T::epsilon() * sum * lit(0.25) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergent {
        context: "geometric series",
        terms: cfg.max_terms,
    })
}

/// `π(0,r) = (1-ρ)ρ^{r+1} ∫₀¹ u^r / (1+ρ-uρ)² du`.
pub fn pi0_integral_alt<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r == 0 {
        return Ok(T::one() - rho);
    }
    if r > SERIES_ONLY_ABOVE {
        return pi0_series(rho, r, cfg);
    }
    let one = T::one();
    let gl = GaussLegendre::new(cfg.quad_points);
    let f = |u: T| {
        let den = one + rho - u * rho;
        u.powi(r as i32) / (den * den)
    };
    let est = gl.integrate(f, &peak_breaks(T::zero(), one, r), cfg.tol_rel, MAX_DEPTH)?;
    Ok((one - rho) * rho.powi(r as i32 + 1) * est.value)
}

/// `π(1,r) = (1-ρ)ρ^{r+1}(r+1) ∫₀¹ u^r / (1+ρ-uρ) du`.
pub fn pi1<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    if r > SERIES_ONLY_ABOVE {
        return pi1_series(rho, r, cfg);
    }
    let one = T::one();
    let gl = GaussLegendre::new(cfg.quad_points);
    let f = |u: T| u.powi(r as i32) / (one + rho - u * rho);
    let est = gl.integrate(f, &peak_breaks(T::zero(), one, r), cfg.tol_rel, MAX_DEPTH)?;
    Ok((one - rho) * rho.powi(r as i32 + 1) * from_usize::<T>(r + 1) * est.value)
}

/// `π(1,r) = (1-ρ)ρ^{r+1} - π(0,r+1)`.
pub fn pi1_from_pi0<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let p0 = pi0_integral(rho, r + 1, cfg)?;
    Ok((T::one() - rho) * rho.powi(r as i32 + 1) - p0)
}

/// `π(1,r) = (1-ρ)(1+ρ)^r (r+1) ∫₁^{1+ρ} (1/u)(1-1/u)^r du`.
pub fn pi1_log_integral<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    let v = scaled_power_integral(rho, r, 1, cfg)?;
    Ok((T::one() - rho) * rho.powi(r as i32) * from_usize::<T>(r + 1) * v)
}

/// `π(1,r) = (1-ρ)ρ^r Σ_{L>=1} (r+1)/(r+L) x^L`.
pub fn pi1_series<T: Scalar>(rho: T, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let rho = check_rho(rho)?;
    let x = rho / (T::one() + rho);
    let s = geometric_series(x, cfg, |l| from_usize::<T>(r + 1) / from_usize::<T>(r + l))?;
    Ok((T::one() - rho) * rho.powi(r as i32) * s)
}

/// `π(1,0) = (1-ρ) ln(1+ρ)`.
pub fn pi1_corner<T: Scalar>(rho: T) -> Result<T> {
    let rho = check_rho(rho)?;
    Ok((T::one() - rho) * rho.ln_1p())
}

/// Table for `r <= cfg.r_max` from [`pi0_integral`] and [`pi1`].
pub fn full_distribution_m1<T: Scalar>(rho: T, cfg: &SolverConfig<T>) -> Result<JointDistribution<T>> {
    let params = ModelParams::new(1, rho)?;
    cfg.validate(&params)?;
    JointDistribution::tabulate(params, cfg.r_max, Method::ClosedForm, cfg.tol_rel, |k, r| {
        if k == 0 {
            pi0_integral(rho, r, cfg)
        } else {
            pi1(rho, r, cfg)
        }
    })
}
