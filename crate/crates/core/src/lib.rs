//! Exact isotonic regression over finite pre-ordered sets, the comparable
//! level-set partition of a reference function with its localization
//! operator, and Monte Carlo machinery for limit-law checks of isotonized
//! estimators.

pub mod error;
pub mod par;
pub mod preorder;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use par::Execution;
pub use preorder::{ComponentPartition, PreOrder};
pub use solver::{
    antitonic_regression, isotonic_regression, oracle_projection, Direction, IsotonicFit,
    IsotonicSolver, WeightedFunction,
};
pub mod estimators;
pub mod experiment;
pub mod level;
pub mod limit;
pub mod stats;

pub use estimators::{
    empirical_pmf, mixture_uniform_pmf, regression_means, EstimatorOutput, Sample,
};
pub use level::{
    check_localization, level_partition, phi, truncated_level_partition, LevelPartition, LevelSet,
    PhiOperator,
};
pub use limit::{
    finite_sample_law, limit_check, sample_limit, truncate_infinite_pmf, Covariance, LimitSpec,
    MCReport, McPlan, Scenario,
};
