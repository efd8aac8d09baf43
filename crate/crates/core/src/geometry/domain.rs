use serde::{Deserialize, Serialize};

use super::{GeometryError, Rect, Vec2};
use crate::scalar::Scalar;

/// One of the four outer edges of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Unit normal pointing out of the domain.
    pub fn outward_normal<S: Scalar>(self) -> Vec2<S> {
        match self {
            Side::Left => Vec2::new(-S::one(), S::zero()),
            Side::Right => Vec2::new(S::one(), S::zero()),
            Side::Bottom => Vec2::new(S::zero(), -S::one()),
            Side::Top => Vec2::new(S::zero(), S::one()),
        }
    }
}

/// Behavior of a piece of the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLabel {
    /// Destination the crowd walks toward; potential value 1, absorbs mass.
    Target,
    /// Impenetrable edge; potential value 0.
    Wall,
    /// Edge through which mass is injected; homogeneous Neumann condition.
    Inflow,
}

/// Labeled piece of one outer edge. The span holds coordinates along the
/// edge: y values for left/right, x values for bottom/top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment<S> {
    pub side: Side,
    pub span: (S, S),
    pub label: BoundaryLabel,
}

impl<S: Scalar> BoundarySegment<S> {
    pub fn full_side(side: Side, bounds: &Rect<S>, label: BoundaryLabel) -> Self {
        let span = match side {
            Side::Left | Side::Right => (bounds.min.y, bounds.max.y),
            Side::Bottom | Side::Top => (bounds.min.x, bounds.max.x),
        };
        Self { side, span, label }
    }
}

/// Simulation domain: a rectangle with axis-aligned rectangular obstacles
/// and a fully labeled outer boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<S> {
    bounds: Rect<S>,
    obstacles: Vec<Rect<S>>,
    segments: Vec<BoundarySegment<S>>,
}

impl<S: Scalar> Domain<S> {
    pub fn new(
        bounds: Rect<S>,
        obstacles: Vec<Rect<S>>,
        segments: Vec<BoundarySegment<S>>,
    ) -> Result<Self, GeometryError> {
        for (i, obs) in obstacles.iter().enumerate() {
            let inside = bounds.contains_interior(obs.min) && bounds.contains_interior(obs.max);
            if !inside {
                return Err(GeometryError::ObstacleOutsideDomain(i));
            }
        }
        for i in 0..obstacles.len() {
            for j in (i + 1)..obstacles.len() {
                let a = &obstacles[i];
                let b = &obstacles[j];
                let touch = a.min.x <= b.max.x
                    && b.min.x <= a.max.x
                    && a.min.y <= b.max.y
                    && b.min.y <= a.max.y;
                if touch {
                    return Err(GeometryError::ObstaclesOverlap(i, j));
                }
            }
        }
        let domain = Self {
            bounds,
            obstacles,
            segments,
        };
        for side in Side::ALL {
            domain.check_side_tiled(side)?;
        }
        Ok(domain)
    }

    /// Rectangle with every outer edge labeled as a wall and no obstacles.
    pub fn walled(bounds: Rect<S>) -> Self {
        let segments = Side::ALL
            .iter()
            .map(|&side| BoundarySegment::full_side(side, &bounds, BoundaryLabel::Wall))
            .collect();
        Self {
            bounds,
            obstacles: Vec::new(),
            segments,
        }
    }

    /// Replaces every segment on `side` with a single full-length one.
    pub fn relabel_side(&mut self, side: Side, label: BoundaryLabel) {
        self.segments.retain(|s| s.side != side);
        self.segments
            .push(BoundarySegment::full_side(side, &self.bounds, label));
    }

    fn side_extent(&self, side: Side) -> (S, S) {
        match side {
            Side::Left | Side::Right => (self.bounds.min.y, self.bounds.max.y),
            Side::Bottom | Side::Top => (self.bounds.min.x, self.bounds.max.x),
        }
    }

    fn check_side_tiled(&self, side: Side) -> Result<(), GeometryError> {
        let (lo, hi) = self.side_extent(side);
        let eps = (hi - lo) * S::from_f64c(1e-9);
        let mut spans: Vec<(S, S)> = self
            .segments
            .iter()
            .filter(|s| s.side == side)
            .map(|s| s.span)
            .collect();
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut cursor = lo;
        for (a, b) in spans {
            if (a - cursor).abs() > eps || b < a {
                return Err(GeometryError::BoundaryNotTiled {
                    side,
                    at: cursor.to_f64().unwrap_or(f64::NAN),
                });
            }
            cursor = b;
        }
        if (cursor - hi).abs() > eps {
            return Err(GeometryError::BoundaryNotTiled {
                side,
                at: cursor.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn bounds(&self) -> &Rect<S> {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Rect<S>] {
        &self.obstacles
    }

    pub fn segments(&self) -> &[BoundarySegment<S>] {
        &self.segments
    }

    /// Label of the outer boundary at coordinate `t` along `side`.
    pub fn label_at(&self, side: Side, t: S) -> BoundaryLabel {
        let (lo, hi) = self.side_extent(side);
        let t = t.max(lo).min(hi);
        let mut best = BoundaryLabel::Wall;
        let mut best_dist = S::infinity();
        for seg in self.segments.iter().filter(|s| s.side == side) {
            if t >= seg.span.0 && t <= seg.span.1 {
                let mid = (seg.span.0 + seg.span.1) * S::from_f64c(0.5);
                let d = (t - mid).abs();
                if d < best_dist {
                    best_dist = d;
                    best = seg.label;
                }
            }
        }
        best
    }

    /// True when the domain has at least one target-labeled segment.
    pub fn has_target(&self) -> bool {
        self.segments
            .iter()
            .any(|s| s.label == BoundaryLabel::Target)
    }

    /// Inside the outer bounds and outside every obstacle.
    pub fn is_free(&self, p: Vec2<S>) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains_interior(p))
    }
}
