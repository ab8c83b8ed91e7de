//! Goodness-of-fit and interval helpers for the simulators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Smallest expected count kept as its own cell.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells after pooling.
    pub cells: usize,
}

impl ChiSquareTest {
    pub fn rejected_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pearson test of `observed` against cell probabilities `probs` out of
/// `total` samples. Counts outside the listed cells form one remainder cell
/// with probability `1 - Σ probs`. Adjacent cells are pooled until each
/// expected count reaches [`MIN_EXPECTED`].
pub fn chi_square(observed: &[u64], probs: &[f64], total: u64) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::Config(format!(
            "{} observed cells but {} probabilities",
            observed.len(),
            probs.len()
        )));
    }
    if total == 0 {
        return Err(Error::Config("no samples".into()));
    }
    let listed: u64 = observed.iter().sum();
    if listed > total {
        return Err(Error::Config(format!("cell counts {listed} exceed total {total}")));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&c, &p) in observed.iter().zip(probs) {
        o += c as f64;
        e += p.max(0.0) * n;
        if e >= MIN_EXPECTED {
            cells.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    let rest_p = (1.0 - probs.iter().map(|p| p.max(0.0)).sum::<f64>()).max(0.0);
    o += (total - listed) as f64;
    e += rest_p * n;
    if e >= MIN_EXPECTED || cells.is_empty() {
        cells.push((o, e));
    } else if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    if cells.len() < 2 {
        return Err(Error::Config("fewer than two cells after pooling".into()));
    }
    let statistic = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Config(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        cells: cells.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Mean and sample standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Student-t interval for the mean of independent batch values.
pub fn t_interval(xs: &[f64], level: f64) -> Result<ConfidenceInterval> {
    if xs.len() < 2 {
        return Err(Error::Config("need at least two batches for an interval".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level = {level} outside (0, 1)")));
    }
    let (mean, se) = mean_and_se(xs);
    let t = StudentsT::new(0.0, 1.0, (xs.len() - 1) as f64).map_err(|e| Error::Config(e.to_string()))?;
    let q = t.inverse_cdf(0.5 + level / 2.0);
    Ok(ConfidenceInterval {
        mean,
        half_width: q * se,
        level,
    })
}
