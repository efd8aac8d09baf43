use serde::{Deserialize, Serialize};

use super::MacroError;
use crate::geometry::{Domain, Rect, Vec2};
use crate::scalar::Scalar;

/// Uniform Cartesian grid of square cells covering the domain bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<S> {
    pub nx: usize,
    pub ny: usize,
    pub h: S,
    pub origin: Vec2<S>,
}

impl<S: Scalar> GridSpec<S> {
    /// Grid of `nx` by `ny` square cells covering `bounds` exactly.
    pub fn cover(bounds: &Rect<S>, nx: usize, ny: usize) -> Result<Self, MacroError> {
        if nx == 0 || ny == 0 {
            return Err(MacroError::GridDomainMismatch);
        }
        let h = bounds.width() / S::from_count(nx);
        let expected_height = h * S::from_count(ny);
        let tol = h * S::from_f64c(1e-9);
        if (bounds.height() - expected_height).abs() > tol {
            return Err(MacroError::GridDomainMismatch);
        }
        Ok(Self {
            nx,
            ny,
            h,
            origin: bounds.min,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2<S> {
        let half = S::from_f64c(0.5);
        Vec2::new(
            self.origin.x + (S::from_count(i) + half) * self.h,
            self.origin.y + (S::from_count(j) + half) * self.h,
        )
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Rect<S> {
        let min = Vec2::new(
            self.origin.x + S::from_count(i) * self.h,
            self.origin.y + S::from_count(j) * self.h,
        );
        Rect {
            min,
            max: Vec2::new(min.x + self.h, min.y + self.h),
        }
    }

    /// Cell containing the point, or `None` outside the grid.
    pub fn cell_of(&self, p: Vec2<S>) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if fx < S::zero() || fy < S::zero() {
            return None;
        }
        let i = fx.floor().to_usize()?;
        let j = fy.floor().to_usize()?;
        if i >= self.nx || j >= self.ny {
            return None;
        }
        Some((i, j))
    }

    pub fn cell_area(&self) -> S {
        self.h * self.h
    }

    /// Whole extent of the grid as a rectangle.
    pub fn extent(&self) -> Rect<S> {
        Rect {
            min: self.origin,
            max: Vec2::new(
                self.origin.x + self.h * S::from_count(self.nx),
                self.origin.y + self.h * S::from_count(self.ny),
            ),
        }
    }
}

/// Piecewise-constant non-negative density on a grid, zero on obstacle cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<S> {
    pub spec: GridSpec<S>,
    rho: Vec<S>,
    obstacle_mask: Vec<bool>,
}

impl<S: Scalar> GridMeasure<S> {
    /// Zero density; the obstacle mask marks cells whose centers fall inside
    /// a domain obstacle.
    pub fn zeros(spec: GridSpec<S>, domain: &Domain<S>) -> Self {
        let mut obstacle_mask = vec![false; spec.n_cells()];
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let c = spec.cell_center(i, j);
                if domain.obstacles().iter().any(|o| o.contains(c)) {
                    obstacle_mask[spec.index(i, j)] = true;
                }
            }
        }
        Self {
            spec,
            rho: vec![S::zero(); spec.n_cells()],
            obstacle_mask,
        }
    }

    /// Zero density on an obstacle-free grid, without a domain.
    pub fn zeros_free(spec: GridSpec<S>) -> Self {
        Self {
            spec,
            rho: vec![S::zero(); spec.n_cells()],
            obstacle_mask: vec![false; spec.n_cells()],
        }
    }

    pub fn rho(&self) -> &[S] {
        &self.rho
    }

    pub fn obstacle_mask(&self) -> &[bool] {
        &self.obstacle_mask
    }

    pub fn is_obstacle(&self, i: usize, j: usize) -> bool {
        self.obstacle_mask[self.spec.index(i, j)]
    }

    pub fn density_at(&self, i: usize, j: usize) -> S {
        self.rho[self.spec.index(i, j)]
    }

    /// Sets the density of one cell; obstacle cells stay at zero.
    pub fn set_density(&mut self, i: usize, j: usize, value: S) {
        let idx = self.spec.index(i, j);
        if !self.obstacle_mask[idx] {
            self.rho[idx] = value;
        }
    }

    /// Sets `value` on every free cell whose center lies inside `rect`.
    pub fn fill_rect(&mut self, rect: &Rect<S>, value: S) {
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                if rect.contains(self.spec.cell_center(i, j)) {
                    self.set_density(i, j, value);
                }
            }
        }
    }

    /// Replaces the density array wholesale; lengths must match and obstacle
    /// cells are forced back to zero.
    pub fn set_rho(&mut self, rho: Vec<S>) {
        assert_eq!(rho.len(), self.rho.len());
        self.rho = rho;
        for (r, &masked) in self.rho.iter_mut().zip(&self.obstacle_mask) {
            if masked {
                *r = S::zero();
            }
        }
    }

    pub fn total_mass(&self) -> S {
        let mut sum = S::zero();
        for &r in &self.rho {
            sum += r;
        }
        sum * self.spec.cell_area()
    }

    pub fn max_density(&self) -> S {
        self.rho.iter().fold(S::zero(), |a, &b| a.max(b))
    }

    pub fn min_density(&self) -> S {
        self.rho.iter().fold(S::infinity(), |a, &b| a.min(b))
    }
}
