//! Concrete operators and the error/convergence harness.

mod ch;
mod heat;
mod metric;
mod scalar;

pub use ch::{
    ch_energy, ch_initial, ch_operator, grid_mean, CHOperator, CHParams, DEFAULT_CENTERS,
    DEFAULT_RADIUS,
};
pub use heat::{heat_analytic, heat_analytic_discrete, heat_initial, heat_operator, Heat1D};
pub use metric::{
    convergence_study, convergence_study_with, fit_slope, kernel_step, relative_error, BoxedEnergy,
    BoxedReference, ConvergenceOptions, ConvergenceTable, ErrorMetric, Problem, Reference,
};
pub use scalar::{scalar_analytic, scalar_operator, ScalarLinear, ScalarSplit};
