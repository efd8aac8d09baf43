use super::{GeometryError, Vec2};
use crate::scalar::Scalar;

/// Circular sector: all points within `radius` of `apex` whose direction from
/// the apex deviates from `axis` by at most `angle / 2`.
///
/// Membership is closed (boundary points included) and the apex is always a
/// member. A span of a full turn degenerates to the closed ball, in which
/// case the axis is irrelevant and may be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector<S> {
    apex: Vec2<S>,
    radius: S,
    axis: Vec2<S>,
    angle: S,
    cos_half_angle: S,
    full_turn: bool,
}

impl<S: Scalar> Sector<S> {
    pub fn new(apex: Vec2<S>, radius: S, axis: Vec2<S>, angle: S) -> Result<Self, GeometryError> {
        if !(radius >= S::zero()) {
            return Err(GeometryError::InvalidRadius(
                radius.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let two_pi = S::PI() + S::PI();
        if !(angle > S::zero()) || angle > two_pi {
            return Err(GeometryError::InvalidAngle(
                angle.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let full_turn = angle == two_pi;
        let n = axis.norm();
        if !full_turn {
            if n == S::zero() {
                return Err(GeometryError::ZeroAxis);
            }
            if (n - S::one()).abs() > S::from_f64c(1e-12) {
                return Err(GeometryError::AxisNotUnit(n.to_f64().unwrap_or(f64::NAN)));
            }
        }
        // sin((pi - angle)/2) equals cos(angle/2) but evaluates to exactly
        // zero at angle = pi, keeping the half-plane case closed.
        let cos_half_angle = ((S::PI() - angle) * S::from_f64c(0.5)).sin();
        Ok(Self {
            apex,
            radius,
            axis,
            angle,
            cos_half_angle,
            full_turn,
        })
    }

    pub fn apex(&self) -> Vec2<S> {
        self.apex
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn axis(&self) -> Vec2<S> {
        self.axis
    }

    pub fn angle(&self) -> S {
        self.angle
    }

    /// Closed membership test.
    pub fn contains(&self, y: Vec2<S>) -> bool {
        let r = y - self.apex;
        let d2 = r.norm_sq();
        if d2 > self.radius * self.radius {
            return false;
        }
        if self.full_turn || d2 == S::zero() {
            return true;
        }
        r.dot(self.axis) >= self.cos_half_angle * d2.sqrt()
    }
}

/// Closed membership test of a point in a sector.
pub fn sector_contains<S: Scalar>(s: &Sector<S>, y: Vec2<S>) -> bool {
    s.contains(y)
}

/// Lebesgue measure of the sector, `angle * radius^2 / 2`, ignoring any
/// clipping by the domain.
pub fn sector_area<S: Scalar>(s: &Sector<S>) -> S {
    s.angle * s.radius * s.radius * S::from_f64c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn half_plane_sector() -> Sector<f64> {
        Sector::new(Vec2::zero(), 1.0, Vec2::new(1.0, 0.0), PI).unwrap()
    }

    #[test]
    fn frontal_point_is_inside() {
        assert!(half_plane_sector().contains(Vec2::new(0.5, 0.0)));
    }

    #[test]
    fn point_behind_apex_is_outside() {
        assert!(!half_plane_sector().contains(Vec2::new(-0.5, 0.0)));
    }

    #[test]
    fn angular_boundary_is_included() {
        // r_hat . axis = 0 = cos(pi/2) exactly: closed-set convention.
        assert!(half_plane_sector().contains(Vec2::new(0.0, 1.0)));
    }

    #[test]
    fn apex_is_member_even_at_zero_radius() {
        let s = Sector::new(Vec2::new(2.0, 3.0), 0.0, Vec2::new(0.0, 1.0), PI).unwrap();
        assert!(s.contains(Vec2::new(2.0, 3.0)));
        assert!(!s.contains(Vec2::new(2.0, 3.1)));
    }

    #[test]
    fn full_turn_is_a_ball_and_accepts_zero_axis() {
        let s = Sector::new(Vec2::zero(), 2.0, Vec2::zero(), 2.0 * PI).unwrap();
        assert!(s.contains(Vec2::new(-1.5, 1.0)));
        assert!(s.contains(Vec2::new(0.0, -2.0)));
        assert!(!s.contains(Vec2::new(2.0, 0.1)));
    }

    #[test]
    fn zero_axis_rejected_below_full_turn() {
        let got = Sector::new(Vec2::<f64>::zero(), 1.0, Vec2::zero(), PI);
        assert_eq!(got, Err(GeometryError::ZeroAxis));
    }

    #[test]
    fn non_unit_axis_rejected() {
        let got = Sector::new(Vec2::<f64>::zero(), 1.0, Vec2::new(0.5, 0.0), PI);
        assert!(matches!(got, Err(GeometryError::AxisNotUnit(_))));
    }

    #[test]
    fn invalid_angle_and_radius_rejected() {
        let axis = Vec2::new(1.0, 0.0);
        assert!(matches!(
            Sector::new(Vec2::<f64>::zero(), 1.0, axis, 0.0),
            Err(GeometryError::InvalidAngle(_))
        ));
        assert!(matches!(
            Sector::new(Vec2::<f64>::zero(), 1.0, axis, 2.0 * PI + 0.1),
            Err(GeometryError::InvalidAngle(_))
        ));
        assert!(matches!(
            Sector::new(Vec2::<f64>::zero(), -1.0, axis, PI),
            Err(GeometryError::InvalidRadius(_))
        ));
    }

    #[test]
    fn area_of_full_and_half_disks() {
        let full = Sector::new(Vec2::<f64>::zero(), 1.0, Vec2::zero(), 2.0 * PI).unwrap();
        assert!((sector_area(&full) - PI).abs() < 1e-15);
        let half = Sector::new(Vec2::zero(), 2.0, Vec2::new(1.0, 0.0), PI).unwrap();
        assert!((sector_area(&half) - 2.0 * PI).abs() < 1e-15);
    }

    // Oracle: quadrature of the membership indicator over a fine grid.
    #[test]
    fn area_matches_indicator_quadrature() {
        let s = Sector::new(Vec2::zero(), 0.5, Vec2::new(1.0, 0.0), PI / 4.0).unwrap();
        let n = 2000;
        let step = 1.2 / n as f64;
        let mut covered = 0u64;
        for i in 0..n {
            for j in 0..n {
                let p = Vec2::new(
                    -0.6 + (i as f64 + 0.5) * step,
                    -0.6 + (j as f64 + 0.5) * step,
                );
                if s.contains(p) {
                    covered += 1;
                }
            }
        }
        let quadrature = covered as f64 * step * step;
        let expected = PI / 32.0;
        assert!((sector_area(&s) - expected).abs() < 1e-15);
        assert!(
            (quadrature - expected).abs() < 1e-3,
            "quadrature {quadrature} vs closed form {expected}"
        );
    }

    #[test]
    fn membership_invariant_under_rotation_about_apex() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let apex = Vec2::new(rng.gen_range(-1.0f64..1.0), rng.gen_range(-1.0..1.0));
            let alpha = rng.gen_range(0.1..2.0 * PI);
            let radius = rng.gen_range(0.1..2.0);
            let axis_angle = rng.gen_range(0.0..2.0 * PI);
            let axis = Vec2::new(axis_angle.cos(), axis_angle.sin());
            let y = apex + Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));

            // Stay away from the sector boundary where a rotation can
            // legitimately flip the closed membership bit.
            let rel = y - apex;
            let d = rel.norm();
            if (d - radius).abs() < 1e-6 || d < 1e-6 {
                continue;
            }
            let cos_gap = rel.dot(axis) / d - (alpha / 2.0).cos();
            if cos_gap.abs() < 1e-6 {
                continue;
            }

            let theta = rng.gen_range(0.0..2.0 * PI);
            let s = Sector::new(apex, radius, axis, alpha).unwrap();
            let s_rot = Sector::new(
                apex,
                radius,
                axis.rotated(theta).normalized().unwrap(),
                alpha,
            )
            .unwrap();
            let y_rot = apex + rel.rotated(theta);
            assert_eq!(s.contains(y), s_rot.contains(y_rot));
        }
    }

    #[test]
    fn area_monotone_in_radius_and_angle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let axis = Vec2::new(0.0f64, 1.0);
        for _ in 0..200 {
            let r1 = rng.gen_range(0.0..2.0);
            let r2 = r1 + rng.gen_range(0.0..1.0);
            let a1 = rng.gen_range(0.05..PI);
            let a2 = (a1 + rng.gen_range(0.0..PI)).min(2.0 * PI);
            let s11 = Sector::new(Vec2::zero(), r1, axis, a1).unwrap();
            let s21 = Sector::new(Vec2::zero(), r2, axis, a1).unwrap();
            let s12 = Sector::new(Vec2::zero(), r1, axis, a2).unwrap();
            assert!(sector_area(&s21) >= sector_area(&s11));
            assert!(sector_area(&s12) >= sector_area(&s11));
        }
    }
}
