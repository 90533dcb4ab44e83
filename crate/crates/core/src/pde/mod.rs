//! Cauchy problem from step-like data: grid state, time stepping, front
//! tracking, delay fits and the Gaussian envelope check.

pub mod field;
pub mod front;
pub mod heat;
pub mod reaction;
pub mod scheme;

pub use field::{init_field, init_field_with, FieldState};
pub use front::{fit_delay, fit_delay_in, front_position, run_front, run_fronts, FrontConfig, FrontRun, FrontTrace, WindowPolicy};
pub use heat::{heat_bound_check, heat_constants, sample_solution, HeatReport, HeatSample};
pub use reaction::{ClassicalKpp, LogKpp, NoReaction, Reaction};
pub use scheme::{linear_speed, Scheme, StepStats, Stepper};
