//! Numerical building blocks: quadrature, banded elimination, compensated sums.

pub mod banded;
pub mod quadrature;
pub mod summation;

pub use banded::{BandLu, BandMatrix};
pub use quadrature::{Estimate, GaussLegendre};
pub use summation::NeumaierSum;
