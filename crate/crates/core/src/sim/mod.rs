//! Event-driven simulators used as independent oracles.
//!
//! Both simulators draw exponential holding times and accumulate the time
//! spent in each state. Chi-square tests use snapshots of the state taken
//! every `snapshot_interval` time units; the spacing is a few relaxation
//! times of the occupancy process so that snapshots are close to
//! independent.
//!
//! Randomness comes from ChaCha8 seeded with `seed`; replication `i` uses
//! stream `i`, so results do not depend on thread scheduling.

mod aggregate;
mod detailed;

pub use aggregate::simulate_aggregate;
pub use detailed::{simulate_detailed, OccupiedSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::JointDistribution;
use crate::stats::{chi_square, mean_and_se, t_interval, ChiSquareTest, ConfidenceInterval};

/// Confidence level of the reported intervals.
pub const CI_LEVEL: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Events discarded at the start of each replication.
    pub warmup_events: u64,
    /// Recorded events per replication.
    pub sample_events: u64,
    pub replications: usize,
    /// Batches per replication for the interval estimates.
    pub batches: usize,
    /// Time between snapshots; `None` picks `6/(1-√ρ)²`.
    pub snapshot_interval: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            warmup_events: 100_000,
            sample_events: 1_000_000,
            replications: 4,
            batches: 10,
            snapshot_interval: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_events == 0 {
            return Err(Error::Config("sample_events must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.batches == 0 || self.batches as u64 > self.sample_events {
            return Err(Error::Config(format!(
                "batches = {} must lie in 1..=sample_events",
                self.batches
            )));
        }
        if self.replications * self.batches < 2 {
            return Err(Error::Config("need at least two batches in total".into()));
        }
        if let Some(dt) = self.snapshot_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("snapshot interval {dt} must be positive")));
            }
        }
        Ok(())
    }

    fn interval(&self, rho: f64) -> f64 {
        self.snapshot_interval.unwrap_or_else(|| {
            let gap = 1.0 - rho.sqrt();
            6.0 / (gap * gap)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Aggregate,
    Detailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mode: SimMode,
    pub rho: f64,
    /// Number of primary spaces (the projection index in detailed mode).
    pub m: usize,
    pub seed: u64,
    pub replications: usize,
    pub warmup_events: u64,
    /// Recorded events over all replications.
    pub events: u64,
    pub sim_time: f64,
    pub snapshot_interval: f64,
    /// Time fractions `pi_hat[k][r]`.
    pub pi_hat: Vec<Vec<f64>>,
    /// Batch-means standard errors of `pi_hat`.
    pub pi_se: Vec<Vec<f64>>,
    pub snapshots: Vec<Vec<u64>>,
    pub snapshot_total: u64,
    /// Time fractions of `W = L` (detailed mode only).
    pub w_pmf_hat: Vec<f64>,
    /// Snapshot counts of `W = L` (detailed mode only).
    pub w_snapshots: Vec<u64>,
    pub replication_mean_n: Vec<f64>,
    pub replication_mean_w: Vec<f64>,
    pub mean_n: ConfidenceInterval,
    pub mean_w: Option<ConfidenceInterval>,
}

impl SimulationSummary {
    pub fn pi(&self, k: usize, r: usize) -> f64 {
        cell(&self.pi_hat, k, r).unwrap_or(0.0)
    }

    pub fn se(&self, k: usize, r: usize) -> f64 {
        cell(&self.pi_se, k, r).unwrap_or(0.0)
    }

    pub fn snapshot_count(&self, k: usize, r: usize) -> u64 {
        cell(&self.snapshots, k, r).unwrap_or(0)
    }

    /// Time fraction with `N = k + r = n`.
    pub fn n_marginal(&self, n: usize) -> f64 {
        (0..=self.m.min(n)).map(|k| self.pi(k, n - k)).sum()
    }

    pub fn n_snapshots(&self, n: usize) -> u64 {
        (0..=self.m.min(n)).map(|k| self.snapshot_count(k, n - k)).sum()
    }

    /// Chi-square of the snapshots against `d` over states with `π > min_prob`.
    pub fn chi_square_states(&self, d: &JointDistribution<f64>, min_prob: f64) -> Result<ChiSquareTest> {
        if d.m() != self.m {
            return Err(Error::Config(format!("table has m = {}, simulation m = {}", d.m(), self.m)));
        }
        let (obs, probs): (Vec<u64>, Vec<f64>) = d
            .iter()
            .filter(|&(_, _, p)| p > min_prob)
            .map(|(k, r, p)| (self.snapshot_count(k, r), p))
            .unzip();
        chi_square(&obs, &probs, self.snapshot_total)
    }

    /// Chi-square of the `N` snapshots against `(1-ρ)ρ^N`, `N <= n_max`.
    pub fn chi_square_geometric(&self, n_max: usize) -> Result<ChiSquareTest> {
        let obs: Vec<u64> = (0..=n_max).map(|n| self.n_snapshots(n)).collect();
        let probs: Vec<f64> = (0..=n_max)
            .map(|n| (1.0 - self.rho) * self.rho.powi(n as i32))
            .collect();
        chi_square(&obs, &probs, self.snapshot_total)
    }

    /// Chi-square of the `W` snapshots against `pmf`.
    pub fn chi_square_w(&self, pmf: &[f64]) -> Result<ChiSquareTest> {
        if self.mode != SimMode::Detailed {
            return Err(Error::Config("W samples exist in detailed mode only".into()));
        }
        let obs: Vec<u64> = (0..pmf.len())
            .map(|l| self.w_snapshots.get(l).copied().unwrap_or(0))
            .collect();
        chi_square(&obs, pmf, self.snapshot_total)
    }
}

fn cell<T: Copy>(t: &[Vec<T>], k: usize, r: usize) -> Option<T> {
    t.get(k).and_then(|row| row.get(r)).copied()
}

fn bump<T: Copy + Default + std::ops::AddAssign>(v: &mut Vec<T>, i: usize, x: T) {
    if v.len() <= i {
        v.resize(i + 1, T::default());
    }
    v[i] += x;
}

/// One step of a simulated process.
pub(crate) trait Process {
    /// Total event rate in the current state.
    fn rate(&self) -> f64;
    /// `(k, r, W)` of the current state.
    fn observe(&self) -> (usize, usize, Option<usize>);
    fn step(&mut self, rng: &mut ChaCha8Rng);
}

/// Per-batch accumulators of one replication.
#[derive(Default)]
struct Batch {
    occupancy: Vec<Vec<f64>>,
    time: f64,
    n_area: f64,
    w_area: f64,
}

struct Recorder {
    interval: f64,
    batches: Vec<Batch>,
    snapshots: Vec<Vec<u64>>,
    snapshot_total: u64,
    w_time: Vec<f64>,
    w_snapshots: Vec<u64>,
    clock: f64,
    next_snapshot: f64,
}

impl Recorder {
    fn new(m: usize, batches: usize, interval: f64) -> Self {
        Self {
            interval,
            batches: (0..batches)
                .map(|_| Batch {
                    occupancy: vec![Vec::new(); m + 1],
                    ..Batch::default()
                })
                .collect(),
            snapshots: vec![Vec::new(); m + 1],
            snapshot_total: 0,
            w_time: Vec::new(),
            w_snapshots: Vec::new(),
            clock: 0.0,
            next_snapshot: interval,
        }
    }

    fn record(&mut self, batch: usize, hold: f64, (k, r, w): (usize, usize, Option<usize>)) {
        let b = &mut self.batches[batch];
        bump(&mut b.occupancy[k], r, hold);
        b.time += hold;
        b.n_area += (k + r) as f64 * hold;
        if let Some(w) = w {
            b.w_area += w as f64 * hold;
            bump(&mut self.w_time, w, hold);
        }
        let end = self.clock + hold;
        while self.next_snapshot < end {
            bump(&mut self.snapshots[k], r, 1);
            if let Some(w) = w {
                bump(&mut self.w_snapshots, w, 1);
            }
            self.snapshot_total += 1;
            self.next_snapshot += self.interval;
        }
        self.clock = end;
    }
}

fn replicate<P: Process>(mut p: P, cfg: &SimConfig, rep: usize, m: usize, interval: f64) -> Recorder {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    for _ in 0..cfg.warmup_events {
        p.step(&mut rng);
    }
    let mut rec = Recorder::new(m, cfg.batches, interval);
    let per = cfg.sample_events;
    let nb = cfg.batches as u64;
    for i in 0..per {
        let e: f64 = rng.sample(Exp1);
        let hold = e / p.rate();
        rec.record((i * nb / per) as usize, hold, p.observe());
        p.step(&mut rng);
    }
    rec
}

pub(crate) fn run<P, F>(mode: SimMode, rho: f64, m: usize, cfg: &SimConfig, make: F) -> Result<SimulationSummary>
where
    P: Process,
    F: Fn() -> P + Sync,
{
    cfg.validate()?;
    let interval = cfg.interval(rho);
    let recs: Vec<Recorder> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| replicate(make(), cfg, rep, m, interval))
        .collect();

    let mut occupancy: Vec<Vec<f64>> = vec![Vec::new(); m + 1];
    let mut snapshots: Vec<Vec<u64>> = vec![Vec::new(); m + 1];
    let mut w_time = Vec::new();
    let mut w_snapshots = Vec::new();
    let mut snapshot_total = 0;
    let mut total_time = 0.0;
    let mut rep_n = Vec::new();
    let mut rep_w = Vec::new();
    for rec in &recs {
        let t: f64 = rec.batches.iter().map(|b| b.time).sum();
        rep_n.push(rec.batches.iter().map(|b| b.n_area).sum::<f64>() / t);
        if mode == SimMode::Detailed {
            rep_w.push(rec.batches.iter().map(|b| b.w_area).sum::<f64>() / t);
        }
        total_time += t;
        for b in &rec.batches {
            for (k, row) in b.occupancy.iter().enumerate() {
                for (r, &x) in row.iter().enumerate() {
                    bump(&mut occupancy[k], r, x);
                }
            }
        }
        for (k, row) in rec.snapshots.iter().enumerate() {
            for (r, &c) in row.iter().enumerate() {
                bump(&mut snapshots[k], r, c);
            }
        }
        for (l, &x) in rec.w_time.iter().enumerate() {
            bump(&mut w_time, l, x);
        }
        for (l, &c) in rec.w_snapshots.iter().enumerate() {
            bump(&mut w_snapshots, l, c);
        }
        snapshot_total += rec.snapshot_total;
    }
    let batches: Vec<&Batch> = recs.iter().flat_map(|r| &r.batches).collect();
    let pi_hat: Vec<Vec<f64>> = occupancy
        .iter()
        .map(|row| row.iter().map(|x| x / total_time).collect())
        .collect();
    let pi_se = pi_hat
        .iter()
        .enumerate()
        .map(|(k, row)| {
            (0..row.len())
                .map(|r| {
                    let xs: Vec<f64> = batches
                        .iter()
                        .map(|b| cell(&b.occupancy, k, r).unwrap_or(0.0) / b.time)
                        .collect();
                    mean_and_se(&xs).1
                })
                .collect()
        })
        .collect();
    let n_batches: Vec<f64> = batches.iter().map(|b| b.n_area / b.time).collect();
    let mean_w = if mode == SimMode::Detailed {
        let xs: Vec<f64> = batches.iter().map(|b| b.w_area / b.time).collect();
        Some(t_interval(&xs, CI_LEVEL)?)
    } else {
        None
    };
    Ok(SimulationSummary {
        mode,
        rho,
        m,
        seed: cfg.seed,
        replications: cfg.replications,
        warmup_events: cfg.warmup_events,
        events: cfg.sample_events * cfg.replications as u64,
        sim_time: total_time,
        snapshot_interval: interval,
        pi_hat,
        pi_se,
        snapshots,
        snapshot_total,
        w_pmf_hat: w_time.iter().map(|x| x / total_time).collect(),
        w_snapshots,
        replication_mean_n: rep_n,
        replication_mean_w: rep_w,
        mean_n: t_interval(&n_batches, CI_LEVEL)?,
        mean_w,
    })
}
