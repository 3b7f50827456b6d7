//! Capacitance optimization: BCD with Armijo steps, exhaustive 1-bit
//! search, and the user-displacement study.

mod bcd;
mod exhaustive;
mod perturbation;

pub use bcd::{
    alternating_optimize, argmin, armijo_coordinate_step, bcd_sweep, min_sinr, min_sinr_gradient, min_sinr_gradients,
    multistart_optimize, random_group_values, suppress_boundary_gradient, BcdSettings, BcdState, OptimizationTrace,
    StepRecord, SweepRecord,
};
pub use exhaustive::{exhaustive_1bit_search, min_rate_of, ExhaustiveEntry, ExhaustiveResult};
pub use perturbation::{
    default_offset_grid, offset_grid, perturbation_study, PerturbationEntry, PerturbationResult, DEFAULT_X_OFFSETS,
    DEFAULT_Y_OFFSETS,
};
