//! Exact representations for one and two primary spaces.

pub mod m1;
pub mod m2;

use crate::error::{Error, Result};
use crate::model::{validate_params, JointDistribution, ModelParams, SolverConfig};
use crate::scalar::Scalar;

/// Deepest bisection level used by the adaptive rules.
pub(crate) const MAX_DEPTH: usize = 40;

pub(crate) fn check_rho<T: Scalar>(rho: T) -> Result<T> {
    validate_params(ModelParams { m: 1, rho }).map(|p| p.rho)
}

/// Full table from the closed forms; `m` must be 1 or 2.
pub fn full_distribution<T: Scalar>(params: ModelParams<T>, cfg: &SolverConfig<T>) -> Result<JointDistribution<T>> {
    match params.m {
        1 => m1::full_distribution_m1(params.rho, cfg),
        2 => m2::full_distribution_m2(params.rho, cfg),
        m => Err(Error::Unsupported(format!(
            "closed forms exist for m = 1 and m = 2 only (m = {m})"
        ))),
    }
}
