//! Observables that turn simulation outcomes into numbers: neighbor angle
//! statistics, crystal order scores, collinearity, lane profiles, and exact
//! small-scale Wasserstein distances.

use thiserror::Error;

use crate::geometry::Vec2;
use crate::macro_engine::GridMeasure;
use crate::micro_engine::AgentSet;
use crate::scalar::Scalar;

/// Errors raised by metric evaluations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("point set is degenerate (collinear or coincident), no hull interior")]
    DegenerateHull,
    #[error("density grids do not share a spec")]
    GridMismatch,
    #[error("measures carry different total masses")]
    MassMismatch,
}

/// Histogram of neighbor bearings measured from the fixed x-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleHistogram {
    /// Bin width in degrees.
    pub bin_width: f64,
    /// Tallies over [0, 360) degrees; one entry per (agent, neighbor) pair.
    pub counts: Vec<u64>,
}

impl AngleHistogram {
    pub fn new(bin_width: f64) -> Self {
        let bins = (360.0 / bin_width).ceil() as usize;
        Self {
            bin_width,
            counts: vec![0; bins],
        }
    }

    pub fn record(&mut self, bearing_deg: f64) {
        let wrapped = bearing_deg.rem_euclid(360.0);
        let bin = ((wrapped / self.bin_width) as usize).min(self.counts.len() - 1);
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds another histogram with the same binning; used for multi-seed
    /// aggregation.
    pub fn merge(&mut self, other: &AngleHistogram) {
        assert_eq!(self.bin_width, other.bin_width);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Center angle of bin `b` in degrees.
    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.bin_width
    }
}

/// Bearings from each agent to its `k` nearest neighbors, binned at 5
/// degrees.
pub fn angle_distribution<S: Scalar>(agents: &AgentSet<S>, k_neighbors: usize) -> AngleHistogram {
    angle_distribution_binned(agents, k_neighbors, 5.0)
}

pub fn angle_distribution_binned<S: Scalar>(
    agents: &AgentSet<S>,
    k_neighbors: usize,
    bin_width: f64,
) -> AngleHistogram {
    let pts = agents.positions();
    let mut hist = AngleHistogram::new(bin_width);
    let mut order: Vec<usize> = Vec::new();
    for (i, &x) in pts.iter().enumerate() {
        order.clear();
        order.extend((0..pts.len()).filter(|&j| j != i));
        order.sort_unstable_by(|&a, &b| {
            let da = (pts[a] - x).norm_sq();
            let db = (pts[b] - x).norm_sq();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for &j in order.iter().take(k_neighbors) {
            let d = pts[j] - x;
            let deg = d.y.to_f64().unwrap().atan2(d.x.to_f64().unwrap()).to_degrees();
            hist.record(deg);
        }
    }
    hist
}

/// Hexagonal order summary of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalScore<S> {
    /// Fraction of interior agents with exactly six neighbors within 1.5
    /// median nearest-neighbor distances.
    pub interior_fraction: S,
    /// Coefficient of variation of nearest-neighbor distances.
    pub nn_distance_cv: S,
    /// Number of agents counted as interior.
    pub interior_count: usize,
}

/// Scores how closely a configuration matches a hexagonal packing.
///
/// Interior agents are those farther from the convex hull boundary than the
/// median nearest-neighbor distance.
pub fn crystal_score<S: Scalar>(agents: &AgentSet<S>) -> Result<CrystalScore<S>, MetricsError> {
    let pts = agents.positions();
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        return Err(MetricsError::DegenerateHull);
    }

    let nn: Vec<S> = (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| (pts[j] - pts[i]).norm())
                .fold(S::infinity(), S::min)
        })
        .collect();
    let median_nn = median(&nn);
    let mean = nn.iter().fold(S::zero(), |a, &b| a + b) / S::from_count(nn.len());
    let var = nn
        .iter()
        .map(|&d| (d - mean) * (d - mean))
        .fold(S::zero(), |a, b| a + b)
        / S::from_count(nn.len());
    let cv = if mean > S::zero() {
        var.sqrt() / mean
    } else {
        S::zero()
    };

    let radius = median_nn * S::from_f64c(1.5);
    let mut interior = 0usize;
    let mut six = 0usize;
    for (i, &x) in pts.iter().enumerate() {
        if hull_boundary_distance(&hull, x) <= median_nn {
            continue;
        }
        interior += 1;
        let neighbors = (0..pts.len())
            .filter(|&j| j != i && (pts[j] - x).norm() <= radius)
            .count();
        if neighbors == 6 {
            six += 1;
        }
    }
    let interior_fraction = if interior > 0 {
        S::from_count(six) / S::from_count(interior)
    } else {
        S::zero()
    };
    Ok(CrystalScore {
        interior_fraction,
        nn_distance_cv: cv,
        interior_count: interior,
    })
}

/// Principal-axis summary of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collinearity<S> {
    /// Fraction of total variance on the principal axis, in [1/2, 1].
    pub ratio: S,
    /// Principal-axis bearing in radians, in [0, pi).
    pub bearing: S,
}

/// Measures how close a configuration is to a straight line.
pub fn collinearity<S: Scalar>(agents: &AgentSet<S>) -> Collinearity<S> {
    let pts = agents.positions();
    let n = S::from_count(pts.len().max(1));
    let mean = pts.iter().fold(Vec2::zero(), |a, &b| a + b) / n;
    let (mut cxx, mut cxy, mut cyy) = (S::zero(), S::zero(), S::zero());
    for &p in pts {
        let d = p - mean;
        cxx += d.x * d.x;
        cxy += d.x * d.y;
        cyy += d.y * d.y;
    }
    let trace = cxx + cyy;
    if trace <= S::zero() {
        return Collinearity {
            ratio: S::one(),
            bearing: S::zero(),
        };
    }
    let half = S::from_f64c(0.5);
    let gap = ((cxx - cyy) * (cxx - cyy) + S::from_f64c(4.0) * cxy * cxy).sqrt();
    let l_max = (trace + gap) * half;
    let ratio = l_max / trace;
    let dir = if cxy.abs() > S::zero() {
        Vec2::new(l_max - cyy, cxy)
    } else if cxx >= cyy {
        Vec2::new(S::one(), S::zero())
    } else {
        Vec2::new(S::zero(), S::one())
    };
    let mut bearing = dir.y.atan2(dir.x);
    if bearing < S::zero() {
        bearing += S::PI();
    }
    if bearing >= S::PI() {
        bearing -= S::PI();
    }
    Collinearity { ratio, bearing }
}

/// Vertical profile of the density difference averaged over a column range.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneProfile<S> {
    /// Row-wise mean of `rho1 - rho2` over the selected columns.
    pub profile: Vec<S>,
    /// Sign changes after suppressing bands below 5% of the peak.
    pub alternation_count: usize,
}

pub fn lane_profile<S: Scalar>(
    density: &GridMeasure<S>,
    density2: &GridMeasure<S>,
    columns: std::ops::Range<usize>,
) -> Result<LaneProfile<S>, MetricsError> {
    let spec = density.spec;
    if density2.spec != spec || columns.end > spec.nx || columns.is_empty() {
        return Err(MetricsError::GridMismatch);
    }
    let width = S::from_count(columns.len());
    let profile: Vec<S> = (0..spec.ny)
        .map(|j| {
            let mut acc = S::zero();
            for i in columns.clone() {
                acc += density.density_at(i, j) - density2.density_at(i, j);
            }
            acc / width
        })
        .collect();
    let peak = profile.iter().fold(S::zero(), |a, &v| a.max(v.abs()));
    let threshold = peak * S::from_f64c(0.05);
    let mut alternation = 0usize;
    let mut last = S::zero();
    for &v in &profile {
        if v.abs() <= threshold || v == S::zero() {
            continue;
        }
        if last != S::zero() && v.signum() != last {
            alternation += 1;
        }
        last = v.signum();
    }
    Ok(LaneProfile {
        profile,
        alternation_count: alternation,
    })
}

/// Number of 4-connected components of cells whose density exceeds
/// `threshold_fraction` of the grid maximum. Zero for an empty grid.
pub fn density_components<S: Scalar>(density: &GridMeasure<S>, threshold_fraction: S) -> usize {
    let spec = density.spec;
    let peak = density.max_density();
    if peak <= S::zero() {
        return 0;
    }
    let cut = peak * threshold_fraction;
    let above = |i: usize, j: usize| density.density_at(i, j) > cut;
    let mut seen = vec![false; spec.n_cells()];
    let mut components = 0usize;
    let mut stack = Vec::new();
    for j0 in 0..spec.ny {
        for i0 in 0..spec.nx {
            if seen[spec.index(i0, j0)] || !above(i0, j0) {
                continue;
            }
            components += 1;
            stack.push((i0, j0));
            seen[spec.index(i0, j0)] = true;
            while let Some((i, j)) = stack.pop() {
                let mut push = |ni: usize, nj: usize| {
                    let idx = spec.index(ni, nj);
                    if !seen[idx] && above(ni, nj) {
                        seen[idx] = true;
                        stack.push((ni, nj));
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < spec.nx {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < spec.ny {
                    push(i, j + 1);
                }
            }
        }
    }
    components
}

/// Exact 1-D 1-Wasserstein distance between weighted sample sets, by the
/// area between their cumulative mass functions.
pub fn wasserstein_1d<S: Scalar>(mu1: &[(S, S)], mu2: &[(S, S)]) -> Result<S, MetricsError> {
    let mass = |mu: &[(S, S)]| mu.iter().fold(S::zero(), |a, &(_, w)| a + w);
    assert!(
        mu1.iter().chain(mu2).all(|&(_, w)| w > S::zero()),
        "weights must be positive"
    );
    let (m1, m2) = (mass(mu1), mass(mu2));
    let scale = m1.max(m2).max(S::from_f64c(f64::MIN_POSITIVE));
    if (m1 - m2).abs() > S::from_f64c(1e-9) * scale {
        return Err(MetricsError::MassMismatch);
    }

    let mut a: Vec<(S, S)> = mu1.to_vec();
    let mut b: Vec<(S, S)> = mu2.to_vec();
    a.sort_unstable_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    b.sort_unstable_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    let mut dist = S::zero();
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (S::zero(), S::zero());
    let mut x_prev: Option<S> = None;
    while ia < a.len() || ib < b.len() {
        let x = match (a.get(ia), b.get(ib)) {
            (Some(&(xa, _)), Some(&(xb, _))) => xa.min(xb),
            (Some(&(xa, _)), None) => xa,
            (None, Some(&(xb, _))) => xb,
            (None, None) => unreachable!(),
        };
        if let Some(xp) = x_prev {
            dist += (fa - fb).abs() * (x - xp);
        }
        while ia < a.len() && a[ia].0 == x {
            fa += a[ia].1;
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == x {
            fb += b[ib].1;
            ib += 1;
        }
        x_prev = Some(x);
    }
    Ok(dist)
}

/// Exact 2-D 1-Wasserstein distance between equal-size unit-weight point
/// clouds by exhaustive assignment enumeration. Intended for tiny inputs.
pub fn wasserstein_2d_exact<S: Scalar>(a: &[Vec2<S>], b: &[Vec2<S>]) -> Result<S, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::MassMismatch);
    }
    assert!(a.len() <= 10, "exhaustive oracle limited to tiny clouds");
    if a.is_empty() {
        return Ok(S::zero());
    }
    let mut perm: Vec<usize> = (0..b.len()).collect();
    let mut best = S::infinity();
    permute(&mut perm, 0, &mut |p: &[usize]| {
        let cost = p
            .iter()
            .enumerate()
            .map(|(i, &j)| (a[i] - b[j]).norm())
            .fold(S::zero(), |x, y| x + y);
        if cost < best {
            best = cost;
        }
    });
    Ok(best)
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn median<S: Scalar>(values: &[S]) -> S {
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        return S::zero();
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * S::from_f64c(0.5)
    }
}

/// Convex hull by the monotone chain, counterclockwise without repetition.
fn convex_hull<S: Scalar>(pts: &[Vec2<S>]) -> Vec<Vec2<S>> {
    let mut p: Vec<Vec2<S>> = pts.to_vec();
    p.sort_unstable_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
    });
    p.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Vec2<S>, a: Vec2<S>, b: Vec2<S>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Vec2<S>> = Vec::new();
    for &pt in &p {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= S::zero()
        {
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<Vec2<S>> = Vec::new();
    for &pt in p.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= S::zero()
        {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from a point to the boundary polyline of a hull.
fn hull_boundary_distance<S: Scalar>(hull: &[Vec2<S>], p: Vec2<S>) -> S {
    let mut best = S::infinity();
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        best = best.min(segment_distance(a, b, p));
    }
    best
}

fn segment_distance<S: Scalar>(a: Vec2<S>, b: Vec2<S>, p: Vec2<S>) -> S {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == S::zero() {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).max(S::zero()).min(S::one());
    (p - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, Rect};
    use crate::macro_engine::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn set(points: Vec<Vec2<f64>>) -> AgentSet<f64> {
        AgentSet::with_uniform_axis(points, Vec2::new(1.0, 0.0))
    }

    fn hex_lattice(rows: i32, cols: i32, a: f64) -> Vec<Vec2<f64>> {
        let mut pts = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let x = c as f64 * a + if r % 2 == 1 { a / 2.0 } else { 0.0 };
                let y = r as f64 * a * (3.0f64).sqrt() / 2.0;
                pts.push(Vec2::new(x, y));
            }
        }
        pts
    }

    #[test]
    fn horizontal_pair_fills_opposite_bins() {
        let agents = set(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]);
        let hist = angle_distribution(&agents, 1);
        assert_eq!(hist.total(), 2);
        assert_eq!(hist.counts[0], 1);
        assert_eq!(hist.counts[(180.0f64 / 5.0) as usize], 1);
    }

    #[test]
    fn hex_lattice_shows_six_equal_peaks() {
        let agents = set(hex_lattice(9, 9, 1.0));
        let hist = angle_distribution(&agents, 6);
        // Lattice directions sit on bin edges, so each peak spans the two
        // adjacent bins.
        let window: Vec<u64> = (0..6)
            .map(|k| {
                (0..hist.counts.len())
                    .filter(|&b| angle_gap(hist.bin_center(b), k as f64 * 60.0) < 5.0)
                    .map(|b| hist.counts[b])
                    .sum()
            })
            .collect();
        let on_peak: u64 = window.iter().sum();
        // Boundary agents see farther bearings; the interior dominates.
        assert!(
            on_peak as f64 > 0.7 * hist.total() as f64,
            "peaks carry {on_peak} of {}",
            hist.total()
        );
        let max = *window.iter().max().unwrap();
        let min = *window.iter().min().unwrap();
        assert!(max - min <= max / 3, "peaks uneven: {window:?}");
    }

    #[test]
    fn jittered_hex_lattice_keeps_bearings_near_lattice_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts: Vec<Vec2<f64>> = hex_lattice(24, 24, 1.0)
            .into_iter()
            .map(|p| {
                Vec2::new(
                    p.x + rng.gen_range(-0.02..0.02),
                    p.y + rng.gen_range(-0.02..0.02),
                )
            })
            .collect();
        let hist = angle_distribution_binned(&set(pts), 6, 1.0);
        let near: u64 = (0..hist.counts.len())
            .filter(|&b| (0..6).any(|k| angle_gap(hist.bin_center(b), k as f64 * 60.0) <= 10.0))
            .map(|b| hist.counts[b])
            .sum();
        assert!(
            near as f64 >= 0.9 * hist.total() as f64,
            "near = {near} of {}",
            hist.total()
        );
    }

    fn angle_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(360.0);
        d.min(360.0 - d)
    }

    #[test]
    fn perfect_hex_crystal_scores_cleanly() {
        let agents = set(hex_lattice(11, 11, 0.5));
        let score = crystal_score(&agents).unwrap();
        assert!(score.interior_count > 20);
        assert_eq!(score.interior_fraction, 1.0);
        assert!(score.nn_distance_cv < 1e-12);
    }

    #[test]
    fn square_lattice_fails_the_six_neighbor_test() {
        let mut pts = Vec::new();
        for r in 0..12 {
            for c in 0..12 {
                pts.push(Vec2::new(c as f64, r as f64));
            }
        }
        let score = crystal_score(&set(pts)).unwrap();
        assert!(score.interior_count > 0);
        assert_eq!(
            score.interior_fraction, 0.0,
            "square lattice has 8 neighbors within 1.5 spacings"
        );
    }

    #[test]
    fn uniform_random_points_are_disordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pts: Vec<Vec2<f64>> = (0..100)
                .map(|_| Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
                .collect();
            let score = crystal_score(&set(pts)).unwrap();
            assert!(score.nn_distance_cv > 0.2, "cv = {}", score.nn_distance_cv);
            assert!(score.interior_fraction < 1.0);
        }
    }

    #[test]
    fn crystal_score_is_invariant_under_rigid_motion_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec2<f64>> = (0..60)
            .map(|_| Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let base = crystal_score(&set(pts.clone())).unwrap();
        let moved: Vec<Vec2<f64>> = pts
            .iter()
            .map(|p| (p.rotated(0.7) * 3.5) + Vec2::new(-2.0, 11.0))
            .collect();
        let other = crystal_score(&set(moved)).unwrap();
        assert_eq!(base.interior_count, other.interior_count);
        assert!((base.interior_fraction - other.interior_fraction).abs() < 1e-12);
        assert!((base.nn_distance_cv - other.nn_distance_cv).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_are_degenerate_for_crystal_score() {
        let pts: Vec<Vec2<f64>> = (0..30).map(|k| Vec2::new(k as f64, 2.0 * k as f64)).collect();
        assert_eq!(
            crystal_score(&set(pts)).unwrap_err(),
            MetricsError::DegenerateHull
        );
    }

    #[test]
    fn exact_line_has_unit_collinearity() {
        let pts: Vec<Vec2<f64>> = (0..25)
            .map(|k| Vec2::new(0.3 + 0.1 * k as f64, 1.0 - 0.2 * k as f64))
            .collect();
        let c = collinearity(&set(pts));
        assert!((c.ratio - 1.0).abs() < 1e-12);
        let expected = (-2.0f64).atan2(1.0).rem_euclid(PI);
        assert!((c.bearing - expected).abs() < 1e-9);
    }

    #[test]
    fn isotropic_cloud_has_balanced_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let pts: Vec<Vec2<f64>> = (0..100)
                .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let c = collinearity(&set(pts));
            assert!(c.ratio < 0.7, "ratio = {}", c.ratio);
        }
    }

    #[test]
    fn slightly_jittered_line_is_nearly_collinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<Vec2<f64>> = (0..50)
            .map(|k| Vec2::new(k as f64, rng.gen_range(-0.01..0.01)))
            .collect();
        let c = collinearity(&set(pts));
        assert!(c.ratio > 0.999, "ratio = {}", c.ratio);
        assert!(c.bearing < 0.01 || PI - c.bearing < 0.01);
    }

    #[test]
    fn collinearity_is_invariant_under_rotation_and_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let pts: Vec<Vec2<f64>> = (0..40)
            .map(|_| Vec2::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..1.0)))
            .collect();
        let base = collinearity(&set(pts.clone()));
        let angle = 1.1f64;
        let moved: Vec<Vec2<f64>> = pts
            .iter()
            .map(|p| p.rotated(angle) + Vec2::new(5.0, -2.0))
            .collect();
        let other = collinearity(&set(moved));
        assert!((base.ratio - other.ratio).abs() < 1e-9);
        let expected = (base.bearing + angle).rem_euclid(PI);
        let gap = (other.bearing - expected).abs();
        assert!(gap < 1e-9 || (PI - gap).abs() < 1e-9);
    }

    fn grid_pair(ny: usize) -> (GridMeasure<f64>, GridMeasure<f64>) {
        let bounds = Rect::from_corners(0.0f64, 0.0, 1.0, 1.0).unwrap();
        let spec = GridSpec::cover(&bounds, ny, ny).unwrap();
        let domain = Domain::walled(bounds);
        (
            GridMeasure::zeros(spec, &domain),
            GridMeasure::zeros(spec, &domain),
        )
    }

    #[test]
    fn equal_densities_make_a_flat_profile() {
        let (mut a, mut b) = grid_pair(16);
        a.set_rho(vec![1.0; 256]);
        b.set_rho(vec![1.0; 256]);
        let lanes = lane_profile(&a, &b, 4..12).unwrap();
        assert!(lanes.profile.iter().all(|&v| v == 0.0));
        assert_eq!(lanes.alternation_count, 0);
    }

    #[test]
    fn two_stripes_alternate_once() {
        let (mut a, mut b) = grid_pair(16);
        for j in 0..16 {
            for i in 0..16 {
                if j < 8 {
                    b.set_density(i, j, 2.0);
                } else {
                    a.set_density(i, j, 2.0);
                }
            }
        }
        let lanes = lane_profile(&a, &b, 0..16).unwrap();
        assert_eq!(lanes.alternation_count, 1);
    }

    #[test]
    fn four_stripes_alternate_three_times() {
        let (mut a, mut b) = grid_pair(16);
        for j in 0..16 {
            for i in 0..16 {
                if (j / 4) % 2 == 0 {
                    a.set_density(i, j, 1.0);
                } else {
                    b.set_density(i, j, 1.0);
                }
            }
        }
        let lanes = lane_profile(&a, &b, 0..16).unwrap();
        assert_eq!(lanes.alternation_count, 3);
    }

    #[test]
    fn weak_bands_are_suppressed() {
        let (mut a, b) = grid_pair(16);
        for j in 0..16 {
            let v = if j < 8 { 10.0 } else { 0.01 };
            for i in 0..16 {
                a.set_density(i, j, v);
            }
        }
        // Without suppression the profile would still be single-signed.
        let lanes = lane_profile(&a, &b, 0..16).unwrap();
        assert_eq!(lanes.alternation_count, 0);
        let kept = lanes
            .profile
            .iter()
            .filter(|v| v.abs() > 0.05 * 10.0)
            .count();
        assert_eq!(kept, 8);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let (a, _) = grid_pair(16);
        let (_, b) = grid_pair(8);
        assert_eq!(
            lane_profile(&a, &b, 0..8).unwrap_err(),
            MetricsError::GridMismatch
        );
    }

    #[test]
    fn separated_blobs_are_counted_and_merge_into_one() {
        let (mut a, _) = grid_pair(16);
        let blob = |m: &mut GridMeasure<f64>, i0: usize, j0: usize| {
            for j in j0..j0 + 3 {
                for i in i0..i0 + 3 {
                    m.set_density(i, j, 1.0);
                }
            }
        };
        blob(&mut a, 1, 1);
        blob(&mut a, 8, 1);
        blob(&mut a, 1, 10);
        assert_eq!(density_components(&a, 0.1), 3);
        // Bridge two blobs; diagonal contact alone must not connect.
        for i in 4..8 {
            a.set_density(i, 2, 0.5);
        }
        assert_eq!(density_components(&a, 0.1), 2);
        a.set_density(4, 4, 1.0);
        assert_eq!(density_components(&a, 0.1), 3, "diagonal touch stays separate");
    }

    #[test]
    fn faint_cells_fall_under_the_component_threshold() {
        let (mut a, _) = grid_pair(16);
        a.set_density(2, 2, 1.0);
        a.set_density(2, 3, 0.05);
        a.set_density(2, 4, 1.0);
        assert_eq!(density_components(&a, 0.1), 2);
        assert_eq!(density_components(&a, 0.01), 1);
        let (empty, _) = grid_pair(16);
        assert_eq!(density_components(&empty, 0.1), 0);
    }

    #[test]
    fn dirac_pair_distance_is_their_gap() {
        let d = wasserstein_1d(&[(0.0f64, 1.0)], &[(0.25, 1.0)]).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_have_zero_distance() {
        let mu = [(0.1, 0.5), (0.9, 1.5)];
        assert_eq!(wasserstein_1d(&mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn split_diracs_cost_matches_hand_enumeration() {
        let mu1 = [(0.0f64, 1.0), (1.0, 1.0)];
        let mu2 = [(0.5f64, 1.0), (0.5, 1.0)];
        let d = wasserstein_1d(&mu1, &mu2).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        assert_eq!(
            wasserstein_1d(&[(0.0, 1.0)], &[(0.0, 2.0)]).unwrap_err(),
            MetricsError::MassMismatch
        );
    }

    #[test]
    fn transport_distance_satisfies_metric_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64)> {
                let n = rng.gen_range(2..6);
                let mut mu: Vec<(f64, f64)> =
                    (0..n).map(|_| (rng.gen_range(-1.0..1.0), 1.0)).collect();
                let total: f64 = mu.iter().map(|m| m.1).sum();
                for m in &mut mu {
                    m.1 /= total;
                }
                mu
            };
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let dab = wasserstein_1d(&a, &b).unwrap();
            let dba = wasserstein_1d(&b, &a).unwrap();
            let dac = wasserstein_1d(&a, &c).unwrap();
            let dcb = wasserstein_1d(&c, &b).unwrap();
            assert!((dab - dba).abs() <= 1e-9);
            assert!(dab <= dac + dcb + 1e-9, "triangle violated");
            assert!(wasserstein_1d(&a, &a).unwrap() <= 1e-12);
            assert!(dab >= 0.0);
        }
    }

    #[test]
    fn translation_moves_mass_by_the_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let mu: Vec<(f64, f64)> = (0..5)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0)))
                .collect();
            let c = rng.gen_range(-2.0..2.0);
            let shifted: Vec<(f64, f64)> = mu.iter().map(|&(x, w)| (x + c, w)).collect();
            let total: f64 = mu.iter().map(|m| m.1).sum();
            let d = wasserstein_1d(&mu, &shifted).unwrap();
            assert!((d - c.abs() * total).abs() < 1e-9);
        }
    }

    #[test]
    fn thin_offset_densities_have_tiny_transport_but_large_l1() {
        // Two unit-mass densities of width 0.01, offset by 0.1.
        let eps = 0.01;
        let delta = 0.1;
        let cells = 100;
        let dx = eps / cells as f64;
        let mu1: Vec<(f64, f64)> = (0..cells)
            .map(|k| ((k as f64 + 0.5) * dx, 1.0 / cells as f64))
            .collect();
        let mu2: Vec<(f64, f64)> = mu1.iter().map(|&(x, w)| (x + delta, w)).collect();
        let w = wasserstein_1d(&mu1, &mu2).unwrap();
        assert!((w - delta).abs() < 1e-6);
        // Disjoint supports: the L1 distance of the densities is 2.
        let l1 = 2.0 * mu1.iter().map(|m| m.1).sum::<f64>();
        assert!((l1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn planar_oracle_matches_line_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let xs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ys: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a: Vec<Vec2<f64>> = xs.iter().map(|&x| Vec2::new(x, 0.0)).collect();
            let b: Vec<Vec2<f64>> = ys.iter().map(|&y| Vec2::new(y, 0.0)).collect();
            let planar = wasserstein_2d_exact(&a, &b).unwrap();
            let mu1: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 1.0)).collect();
            let mu2: Vec<(f64, f64)> = ys.iter().map(|&y| (y, 1.0)).collect();
            let line = wasserstein_1d(&mu1, &mu2).unwrap();
            assert!((planar - line).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_oracle_picks_the_cheaper_assignment() {
        let a = vec![Vec2::new(0.0f64, 0.0), Vec2::new(1.0, 0.0)];
        let b = vec![Vec2::new(1.0f64, 1.0), Vec2::new(0.0, 1.0)];
        // Crossing assignment costs 2*sqrt(2); parallel costs 2.
        let d = wasserstein_2d_exact(&a, &b).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }
}
