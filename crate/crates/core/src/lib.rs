//! Determinant maximization under matroid constraints by exchange-graph local search.

pub mod cycles;
pub mod error;
pub mod generate;
pub mod instance;
pub mod linalg;
pub mod matroids;
pub mod oracle;
pub mod report;
pub mod solver;
pub mod xgraph;

pub use error::{Error, Result};
pub use instance::{Instance, InstanceFile};
pub use linalg::{LogVolume, VectorSet};
pub use matroids::{Matroid, MatroidSpec};
pub use report::{run, RunOptions, RunReport};
pub use solver::{certify, solve, Solution, SolverConfig, Termination};
