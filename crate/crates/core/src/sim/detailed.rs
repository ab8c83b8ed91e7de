use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{run, Process, SimConfig, SimMode, SimulationSummary};
use crate::error::Result;
use crate::model::{validate_params, ModelParams};

const EMPTY: u32 = u32::MAX;

/// Occupied spaces `1, 2, ...` with lowest-free allocation.
#[derive(Clone, Debug, Default)]
pub struct OccupiedSet {
    /// Occupied indices in arbitrary order, for uniform sampling.
    spaces: Vec<u32>,
    /// `slot[i]` is the position of space `i` in `spaces`, or `EMPTY`.
    slot: Vec<u32>,
    /// Free spaces below `max`.
    holes: BTreeSet<u32>,
    max: u32,
}

impl OccupiedSet {
    pub fn new() -> Self {
        Self {
            slot: vec![EMPTY],
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// Highest occupied index, 0 when empty.
    pub fn max(&self) -> u32 {
        self.max
    }

    pub fn wasted(&self) -> usize {
        self.max as usize - self.len()
    }

    pub fn contains(&self, space: u32) -> bool {
        self.slot.get(space as usize).is_some_and(|&s| s != EMPTY)
    }

    /// Park in the lowest free space and return it.
    pub fn arrive(&mut self) -> u32 {
        let space = match self.holes.pop_first() {
            Some(s) => s,
            None => {
                self.max += 1;
                if self.slot.len() <= self.max as usize {
                    self.slot.push(EMPTY);
                }
                self.max
            }
        };
        self.slot[space as usize] = self.spaces.len() as u32;
        self.spaces.push(space);
        space
    }

    /// Remove the occupant at position `i` of the internal list.
    fn depart_at(&mut self, i: usize) -> u32 {
        let space = self.spaces.swap_remove(i);
        if let Some(&moved) = self.spaces.get(i) {
            self.slot[moved as usize] = i as u32;
        }
        self.slot[space as usize] = EMPTY;
        if space == self.max {
            self.max -= 1;
            while self.max > 0 && self.slot[self.max as usize] == EMPTY {
                self.holes.remove(&self.max);
                self.max -= 1;
            }
        } else {
            self.holes.insert(space);
        }
        space
    }

    /// Remove a uniformly chosen occupant.
    pub fn depart_uniform<R: Rng>(&mut self, rng: &mut R) -> u32 {
        let i = rng.random_range(0..self.spaces.len());
        self.depart_at(i)
    }

    /// Remove the occupant of `space`; false if it was free.
    pub fn depart(&mut self, space: u32) -> bool {
        match self.slot.get(space as usize) {
            Some(&s) if s != EMPTY => {
                self.depart_at(s as usize);
                true
            }
            _ => false,
        }
    }
}

struct Detailed {
    rho: f64,
    m: u32,
    set: OccupiedSet,
    /// Occupied spaces with index `<= m`.
    primary: usize,
}

impl Process for Detailed {
    fn rate(&self) -> f64 {
        if self.set.is_empty() {
            self.rho
        } else {
            self.rho + 1.0
        }
    }

    fn observe(&self) -> (usize, usize, Option<usize>) {
        let n = self.set.len();
        (self.primary, n - self.primary, Some(self.set.wasted()))
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        let u = rng.random::<f64>() * self.rate();
        let (space, delta) = if u < self.rho {
            (self.set.arrive(), 1)
        } else {
            (self.set.depart_uniform(rng), -1)
        };
        if space <= self.m {
            self.primary = (self.primary as isize + delta) as usize;
        }
    }
}

/// Simulate the occupied set directly. Occupancy is projected onto `(k, r)`
/// with spaces `1..=m` counted as primary.
pub fn simulate_detailed(rho: f64, m: usize, cfg: &SimConfig) -> Result<SimulationSummary> {
    let p = validate_params(ModelParams { m, rho })?;
    run(SimMode::Detailed, p.rho, m, cfg, || Detailed {
        rho: p.rho,
        m: m as u32,
        set: OccupiedSet::new(),
        primary: 0,
    })
}
