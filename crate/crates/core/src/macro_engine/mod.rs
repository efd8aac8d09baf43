//! Macroscopic density transport by the discrete push-forward scheme.

mod engine;
mod grid;

pub use engine::{
    absorb_at_target, inject_boundary, push_forward, step, InflowProfile, InflowSchedule,
    MassLedger, Population, PopulationField, RepulsionSource, SpatialModulation, StepReport,
};
pub use grid::{GridMeasure, GridSpec};

use thiserror::Error;

/// Errors raised by the macroscopic engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MacroError {
    #[error("grid does not cover the domain bounds with square cells")]
    GridDomainMismatch,
    #[error("CFL violated: dt*max|v| = {speed_dt} exceeds h = {h}; admissible dt = {admissible_dt}")]
    CflViolation {
        speed_dt: f64,
        h: f64,
        admissible_dt: f64,
    },
    #[error("inflow profile references a segment not labeled as inflow")]
    UnknownSegment,
    #[error("populations share no common grid")]
    PopulationGridMismatch,
}
