//! The two reference tables for `m = 3` and three-significant-figure output.

use serde::Serialize;

use crate::asymptotics::{heavy_traffic_pi, tail_pi, Approximation, Terms};
use crate::error::Result;
use crate::model::{ModelParams, SolverConfig};
use crate::{ctmc, spectral};

pub const TABLE_M: usize = 3;
pub const TABLE1_EPSILONS: [f64; 4] = [0.1, 0.05, 0.02, 0.01];
pub const TABLE2_RHO: f64 = 0.5;
pub const TABLE2_RS: [usize; 6] = [5, 10, 20, 30, 40, 50];
/// Truncation used for the `ρ = 0.5` table.
pub const TABLE2_R_MAX: usize = 120;

/// Heavy traffic at `Y = εr = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub epsilon: f64,
    pub r: usize,
    pub k: usize,
    pub exact: f64,
    pub one_term: f64,
    pub two_term: f64,
}

impl Table1Row {
    pub fn two_term_negative(&self) -> bool {
        self.two_term < 0.0
    }
}

/// Large `r` at `ρ = 0.5`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Row {
    pub r: usize,
    pub k: usize,
    pub exact: f64,
    pub spectral: f64,
    pub asymptotic: f64,
}

pub fn table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for &eps in &TABLE1_EPSILONS {
        let p = ModelParams::new(TABLE_M, 1.0 - eps)?;
        let d = ctmc::solve_stationary(p, &SolverConfig::default_for(&p))?;
        let r = (1.0 / eps).round() as usize;
        for k in 0..=TABLE_M {
            let one: Approximation<f64> = heavy_traffic_pi(TABLE_M, k, eps, r, Terms::One)?;
            let two = heavy_traffic_pi(TABLE_M, k, eps, r, Terms::Two)?;
            rows.push(Table1Row {
                epsilon: eps,
                r,
                k,
                exact: d.pi(k, r),
                one_term: one.value,
                two_term: two.value,
            });
        }
    }
    Ok(rows)
}

pub fn table2() -> Result<Vec<Table2Row>> {
    let p = ModelParams::new(TABLE_M, TABLE2_RHO)?;
    let cfg = SolverConfig::default_for(&p).with_r_max(TABLE2_R_MAX);
    let d = ctmc::solve_stationary(p, &cfg)?;
    let s = spectral::solve(p, &cfg)?;
    let mut rows = Vec::new();
    for &r in &TABLE2_RS {
        for k in 0..=TABLE_M {
            rows.push(Table2Row {
                r,
                k,
                exact: d.pi(k, r),
                spectral: s.pi(k, r),
                asymptotic: tail_pi(TABLE_M, k, TABLE2_RHO, r)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Nearest,
    /// Drop digits past the third, as the heavy-traffic table does.
    Truncate,
}

/// Positive `x` as `d.dd × 10^exp`, returned as `(ddd, exp)`.
pub fn sig3(x: f64, mode: Rounding) -> (u32, i32) {
    let mut exp = x.log10().floor() as i32;
    let scaled = x / 10f64.powi(exp - 2);
    let mut digits = match mode {
        // Guard against 3.4599999 style representation error.
        Rounding::Truncate => (scaled * (1.0 + 1e-12)).floor(),
        Rounding::Nearest => scaled.round(),
    } as u32;
    if digits >= 1000 {
        digits /= 10;
        exp += 1;
    } else if digits < 100 {
        digits *= 10;
        exp -= 1;
    }
    (digits, exp)
}

/// Value with the three digits of [`sig3`] applied.
pub fn to_sig3(x: f64, mode: Rounding) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let (d, e) = sig3(x.abs(), mode);
    x.signum() * d as f64 * 10f64.powi(e - 2)
}

/// `"<0"` for negatives, decimal for `x >= 1e-4`, otherwise `d.dde-N`.
pub fn format_sig3(x: f64, mode: Rounding, decimal_above: f64) -> String {
    if x < 0.0 {
        return "<0".into();
    }
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let (d, e) = sig3(x, mode);
    if x >= decimal_above && e < 0 {
        let zeros = (-e - 1) as usize;
        format!("0.{}{d}", "0".repeat(zeros))
    } else if x >= decimal_above {
        format!("{}", d as f64 * 10f64.powi(e - 2))
    } else {
        format!("{}.{:02}e{e}", d / 100, d % 100)
    }
}
