//! Iterative rounding for degree-bounded g-polymatroid element problems,
//! and approximation algorithms for the metric many-visits TSP built on it.

pub mod approx;
pub mod cli;
pub mod formats;
pub mod gpoly;
pub mod instances;
pub mod lp;
pub mod mvtsp;
pub mod oracles;
pub mod rational;
pub mod rounding;
