use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{run, Process, SimConfig, SimMode, SimulationSummary};
use crate::error::Result;
use crate::model::{validate_params, ModelParams};

/// The `(k, r)` chain itself.
struct Aggregate {
    m: usize,
    rho: f64,
    k: usize,
    r: usize,
}

impl Process for Aggregate {
    fn rate(&self) -> f64 {
        if self.k + self.r > 0 {
            self.rho + 1.0
        } else {
            self.rho
        }
    }

    fn observe(&self) -> (usize, usize, Option<usize>) {
        (self.k, self.r, None)
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        let u = rng.random::<f64>() * self.rate();
        if u < self.rho {
            if self.k < self.m {
                self.k += 1;
            } else {
                self.r += 1;
            }
        } else if rng.random_range(0..self.k + self.r) < self.k {
            self.k -= 1;
        } else {
            self.r -= 1;
        }
    }
}

/// Simulate the `(k, r)` chain with `m` primary spaces.
pub fn simulate_aggregate(params: ModelParams<f64>, cfg: &SimConfig) -> Result<SimulationSummary> {
    let p = validate_params(params)?;
    run(SimMode::Aggregate, p.rho, p.m, cfg, || Aggregate {
        m: p.m,
        rho: p.rho,
        k: 0,
        r: 0,
    })
}
