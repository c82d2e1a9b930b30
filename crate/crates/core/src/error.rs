use alloc::string::String;
use alloc::vec::Vec;

use crate::units::Vec3;

/// Errors produced by the field models, the grid solver and the trap planners.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The evaluation point lies on a wire axis or inside an electrode.
    #[error("singular point at ({}, {}, {}) m", .0.x, .0.y, .0.z)]
    SingularPoint(Vec3),

    #[error("point ({}, {}, {}) m lies outside the field domain", .0.x, .0.y, .0.z)]
    OutOfDomain(Vec3),

    #[error("no axial confinement: q·V = {0} (must be positive)")]
    NoAxialConfinement(f64),

    #[error("unstable trap: ω_z² = {omega_z_sq} exceeds ω_c²/2 = {limit}")]
    UnstableTrap { omega_z_sq: f64, limit: f64 },

    #[error("electrodes `{first}` and `{second}` overlap with different voltages")]
    GeometryConflict { first: String, second: String },

    #[error("electrode `{0}` is closer than 5 cells to the domain boundary")]
    Margin(String),

    #[error("solver did not converge after {sweeps} sweeps (last max update {residual} V)")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("potential is flat over the probe region")]
    FlatField,

    #[error("hop plan infeasible: axial curvature {curvature} V/m² at ({}, {}, {}) m", .point.x, .point.y, .point.z)]
    PlanInfeasible { point: Vec3, curvature: f64 },

    #[error("unknown electrode label(s): {0:?}")]
    UnknownLabel(Vec<String>),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
