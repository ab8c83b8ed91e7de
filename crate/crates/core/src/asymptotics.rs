//! Heavy-traffic, large-`r` and boundary-layer approximations.

use crate::closed_form::{m1, m2};
use crate::error::{Error, Result};
use crate::model::{factorial, validate_params, ModelParams, SolverConfig};
use crate::scalar::{from_usize, lit, Scalar};

/// Number of terms kept in the heavy-traffic expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terms {
    One,
    Two,
}

/// Point on the heavy-traffic scale `Y = ε r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeavyTrafficPoint<T> {
    pub epsilon: T,
    pub y: T,
    pub k: usize,
    pub m: usize,
}

/// Heavy-traffic value; `negative` marks a two-term value below zero, which
/// is returned unclamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approximation<T> {
    pub value: T,
    pub negative: bool,
}

/// `π(k,r) ≈ ε^{m-k+1} (m!/k!) e^{-Y} Y^{k-m} [1 - ε(Y/2 + m + (m²+(2-k)m-k)/Y)]`.
pub fn heavy_traffic_pi<T: Scalar>(m: usize, k: usize, epsilon: T, r: usize, terms: Terms) -> Result<Approximation<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::Domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if m < 1 {
        return Err(Error::MOutOfRange { m });
    }
    if k > m {
        return Err(Error::Domain(format!("k = {k} exceeds m = {m}")));
    }
    if r == 0 {
        return Err(Error::Domain(
            "heavy-traffic expansion is invalid at Y = 0 (r = 0)".into(),
        ));
    }
    let point = HeavyTrafficPoint {
        epsilon,
        y: epsilon * from_usize::<T>(r),
        k,
        m,
    };
    Ok(heavy_traffic_at(point, terms))
}

/// Same formula evaluated at an explicit `(ε, Y)`; `Y` must be positive.
pub fn heavy_traffic_at<T: Scalar>(p: HeavyTrafficPoint<T>, terms: Terms) -> Approximation<T> {
    let HeavyTrafficPoint { epsilon, y, k, m } = p;
    let lead = epsilon.powi((m - k + 1) as i32) * factorial::<T>(m) / factorial::<T>(k) * (-y).exp()
        * y.powi(k as i32 - m as i32);
    let value = match terms {
        Terms::One => lead,
        Terms::Two => {
            let (mf, kf) = (from_usize::<T>(m), from_usize::<T>(k));
            let c = mf * mf + (lit::<T>(2.0) - kf) * mf - kf;
            lead * (T::one() - epsilon * (y * lit(0.5) + mf + c / y))
        }
    };
    Approximation {
        value,
        negative: value < T::zero(),
    }
}

/// Large-`r` law `π(k,r) ~ (1-ρ) ρ^{m+r} r^{k-m} m!/k!`.
pub fn tail_pi<T: Scalar>(m: usize, k: usize, rho: T, r: usize) -> Result<T> {
    let p = validate_params(ModelParams { m, rho })?;
    if k > m {
        return Err(Error::Domain(format!("k = {k} exceeds m = {m}")));
    }
    if r == 0 {
        return Err(Error::Domain("tail law needs r >= 1".into()));
    }
    let rf = from_usize::<T>(r);
    Ok(p.epsilon() * rho.powi((m + r) as i32) * rf.powi(k as i32 - m as i32) * factorial::<T>(m)
        / factorial::<T>(k))
}

/// Leading boundary-layer term `Q⁽⁰⁾(k,r)` for `m ∈ {1, 2}`.
pub fn boundary_layer_q0<T: Scalar>(m: usize, k: usize, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    if k > m {
        return Err(Error::Domain(format!("k = {k} exceeds m = {m}")));
    }
    let one = T::one();
    if k == 0 && r == 0 {
        return Ok(one);
    }
    match (m, k) {
        // 2^{r-1} ∫₁² (1-1/u)^r du
        (1, 0) => Ok(lit::<T>(0.5) * m1::scaled_power_integral(one, r, 0, cfg)?),
        (1, 1) => Ok(one - boundary_layer_q0(1, 0, r + 1, cfg)?),
        (2, 0) => m2::double_integral_0(one, r, cfg),
        (2, 1) if r == 0 => Ok(one - boundary_layer_q0(2, 0, 1, cfg)?),
        (2, 1) => m2::double_integral_1(one, r, cfg),
        (2, 2) => Ok(one - boundary_layer_q0(2, 1, r + 1, cfg)? - boundary_layer_q0(2, 0, r + 2, cfg)?),
        _ => Err(Error::Unsupported(format!(
            "boundary-layer terms are available for m = 1 and m = 2 only (m = {m})"
        ))),
    }
}

/// Correction `Q⁽¹⁾(k,r)` for `m = 1`.
pub fn boundary_layer_q1_m1<T: Scalar>(k: usize, r: usize, cfg: &SolverConfig<T>) -> Result<T> {
    let half: T = lit(0.5);
    match k {
        0 if r == 0 => Ok(T::zero()),
        // -(r-1) 2^{r-2} ∫₁²(1-1/u)^r du - 1/2
        0 => {
            let q0 = boundary_layer_q0(1, 0, r, cfg)?;
            Ok(-(from_usize::<T>(r) - T::one()) * half * q0 - half)
        }
        1 => Ok(-from_usize::<T>(r) - T::one() - boundary_layer_q1_m1(0, r + 1, cfg)?),
        _ => Err(Error::Domain(format!("k = {k} exceeds m = 1"))),
    }
}
