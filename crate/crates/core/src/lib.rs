//! Stationary distribution of the processor-sharing storage-allocation model.
//!
//! Customers arrive at rate `ρ`, share one server equally, and park in the
//! lowest free space. With `m` primary spaces, `π(k,r)` is the stationary
//! probability that `k` primary and `r` secondary spaces are occupied.
//!
//! Solvers are generic over [`Scalar`]; the `*64` aliases fix `f64`.
//!
//! ```
//! use psalloc::{ctmc, ModelParams64, SolverConfig64};
//!
//! let p = ModelParams64::new(3, 0.5).unwrap();
//! let d = ctmc::solve_stationary(p, &SolverConfig64::default_for(&p).with_r_max(80)).unwrap();
//! assert!((d.pi(3, 5) - 1.65e-3).abs() < 1e-5);
//! ```

pub mod asymptotics;
pub mod closed_form;
pub mod ctmc;
pub mod error;
pub mod export;
pub mod model;
pub mod numeric;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod stats;
pub mod tables;
pub mod wasted;

pub use error::{Error, Result};
pub use model::{JointDistribution, Method, ModelParams, SolverConfig, StateIndex};
pub use scalar::Scalar;
pub use sim::{simulate_aggregate, simulate_detailed, SimConfig, SimulationSummary};
pub use wasted::{w_mean, w_pmf, WastedConfig, WastedSpaceDistribution};

pub type ModelParams64 = ModelParams<f64>;
pub type JointDistribution64 = JointDistribution<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type WastedConfig64 = WastedConfig<f64>;
pub type WastedSpaceDistribution64 = WastedSpaceDistribution<f64>;
pub type DSequence64 = spectral::DSequence<f64>;
pub type AKernel64 = spectral::AKernel<f64>;
