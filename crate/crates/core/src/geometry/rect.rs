use serde::{Deserialize, Serialize};

use super::{GeometryError, Vec2};
use crate::scalar::Scalar;

/// Axis-aligned rectangle given by its lower-left and upper-right corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<S> {
    pub min: Vec2<S>,
    pub max: Vec2<S>,
}

impl<S: Scalar> Rect<S> {
    pub fn new(min: Vec2<S>, max: Vec2<S>) -> Result<Self, GeometryError> {
        if min.x > max.x || min.y > max.y {
            return Err(GeometryError::EmptyRect);
        }
        Ok(Self { min, max })
    }

    pub fn from_corners(x0: S, y0: S, x1: S, y1: S) -> Result<Self, GeometryError> {
        Self::new(Vec2::new(x0, y0), Vec2::new(x1, y1))
    }

    pub fn width(&self) -> S {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> S {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> S {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2<S> {
        Vec2::new(
            (self.min.x + self.max.x) * S::from_f64c(0.5),
            (self.min.y + self.max.y) * S::from_f64c(0.5),
        )
    }

    /// Closed containment test.
    pub fn contains(&self, p: Vec2<S>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Containment in the open interior.
    pub fn contains_interior(&self, p: Vec2<S>) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// True when the open interiors of the two rectangles intersect.
    pub fn intersects_interior(&self, other: &Self) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }

    pub fn translated(&self, shift: Vec2<S>) -> Self {
        Self {
            min: self.min + shift,
            max: self.max + shift,
        }
    }
}

fn interval_overlap<S: Scalar>(a0: S, a1: S, b0: S, b1: S) -> S {
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    (hi - lo).max(S::zero())
}

/// Area of `cell_a` intersected with `cell_b` translated by `shift`.
///
/// Both rectangles are axis-aligned, so the intersection area is the product
/// of the per-axis interval overlaps and is computed exactly.
pub fn cell_overlap_volume<S: Scalar>(cell_a: &Rect<S>, cell_b: &Rect<S>, shift: Vec2<S>) -> S {
    let ox = interval_overlap(
        cell_a.min.x,
        cell_a.max.x,
        cell_b.min.x + shift.x,
        cell_b.max.x + shift.x,
    );
    let oy = interval_overlap(
        cell_a.min.y,
        cell_a.max.y,
        cell_b.min.y + shift.y,
        cell_b.max.y + shift.y,
    );
    ox * oy
}
