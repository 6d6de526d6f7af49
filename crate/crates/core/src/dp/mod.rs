//! Bellman operators on gridded value functions, finite-horizon backward
//! induction and infinite-horizon value iteration.

mod bounds;
mod finite;
mod infinite;
mod model;
mod operator;
mod policy;
mod value;

pub use bounds::{finite_bounds, infinite_bounds, stage_bounds, Bounds};
pub use finite::{evaluate_policy, solve_finite, FiniteSolution, StageStats};
pub use infinite::{
    evaluate_stationary_policy, modulus, solve_infinite, weakly_increasing, weighted_norm, InfiniteSolution,
    ValueIteration, Weight,
};
pub use model::{
    GridSpec, Horizon, ModelConfig, SearchSpec, SimulationSpec, StageData, StageSpec, TreatyConfig,
};
pub use operator::{apply_l, bellman_step, step, Choice, Minimum, StepOutput};
pub(crate) use operator::minimize;
pub use policy::{fmt_float, PolicyTable};
pub use value::{uniform_grid, ValueFunction};
