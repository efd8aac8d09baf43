//! Domain, obstacle, and circular-sector primitives.

mod domain;
mod rect;
mod sector;
mod vec;

pub use domain::{BoundaryLabel, BoundarySegment, Domain, Side};
pub use rect::{cell_overlap_volume, Rect};
pub use sector::{sector_area, sector_contains, Sector};
pub use vec::Vec2;

use thiserror::Error;

/// Errors raised while validating geometric primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("sector axis has zero length but the span angle is below a full turn")]
    ZeroAxis,
    #[error("sector axis must be unit length, got |axis| = {0}")]
    AxisNotUnit(f64),
    #[error("angle must lie in (0, 2*pi], got {0}")]
    InvalidAngle(f64),
    #[error("radius must be non-negative, got {0}")]
    InvalidRadius(f64),
    #[error("rectangle has min > max on some axis")]
    EmptyRect,
    #[error("obstacle {0} is not contained in the domain interior")]
    ObstacleOutsideDomain(usize),
    #[error("obstacles {0} and {1} overlap")]
    ObstaclesOverlap(usize, usize),
    #[error("boundary of side {side:?} is not tiled by its segments near coordinate {at}")]
    BoundaryNotTiled { side: Side, at: f64 },
}
