//! Configuration files, the record format and golden fixtures.

mod config;
pub mod fixture;
mod record;

pub use config::{
    Axis, AxisScale, BudgetConfig, OutputConfig, RectangleConfig, RunConfig, SweepConfig, SweepParam, SweepQuantity,
    ValidateConfig, WillieConfig, MAX_SWEEP_POINTS,
};
pub use record::{Record, Section};
