//! Nonlocal interaction velocities: anisotropic sector repulsion and
//! topologically capped cohesion, for agent sets and density grids.
//!
//! Both solvers share one sensing model. An individual at `x` with heading
//! axis `a` is attracted by neighbours in a vision cone of opening angle
//! `alpha_c` and repelled by neighbours in a sector of opening angle
//! `alpha_r` and radius `r_r`. The cohesion radius is the smaller of the
//! metric cap `r_c_max` and the distance at which the sensed crowd exceeds
//! the capacity `p` (a head count for agents, a mass for densities), so a
//! sparse crowd is sensed far away and a dense one only nearby. Sector and
//! ball memberships are closed; the capacity cut is strict and drops ties
//! at the cutoff distance all-or-none.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::macro_engine::{GridMeasure, GridSpec};
use crate::micro_engine::AgentSet;
use crate::scalar::Scalar;

/// Errors raised while evaluating interaction velocities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("sensing config invalid: {0}")]
    InvalidConfig(&'static str),
    #[error("agents {i} and {j} nearly coincide (distance {dist:e})")]
    SingularPair { i: usize, j: usize, dist: f64 },
}

/// Encodes the capacity as a plain number when finite and as the string
/// `"inf"` otherwise, so formats without infinities (JSON) round-trip.
mod capacity_encoding {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Scalar;

    pub fn serialize<S: Scalar, Ser: Serializer>(v: &S, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        if v.is_finite() {
            v.to_f64().unwrap().serialize(ser)
        } else {
            "inf".serialize(ser)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(d: D) -> Result<S, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(S::from_f64c(x)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(S::infinity()),
                other => other
                    .parse::<f64>()
                    .map(S::from_f64c)
                    .map_err(serde::de::Error::custom),
            },
        }
    }
}

/// Interaction parameters shared by the agent and density solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: serde::Serialize + Scalar",
    deserialize = "S: serde::Deserialize<'de> + Scalar"
))]
pub struct SensingConfig<S> {
    /// Opening angle of the cohesion cone, in (0, 2*pi].
    pub alpha_c: S,
    /// Opening angle of the repulsion sector, in (0, 2*pi].
    pub alpha_r: S,
    /// Metric cap on the cohesion radius.
    pub r_c_max: S,
    /// Repulsion radius.
    pub r_r: S,
    /// Topological capacity: head count (agents) or mass (densities).
    /// May be infinite to disable the cut.
    #[serde(with = "capacity_encoding")]
    pub p: S,
    /// Cohesion strength, nonnegative.
    pub f_c: S,
    /// Repulsion strength, nonpositive.
    pub f_r: S,
    /// Hard body diameter `ell`; zero disables contact handling.
    pub body_size: S,
}

impl<S: Scalar> SensingConfig<S> {
    pub fn validate(&self) -> Result<(), KernelError> {
        let two_pi = S::PI() + S::PI();
        let angle_ok = |a: S| a.is_finite() && a > S::zero() && a <= two_pi;
        if !angle_ok(self.alpha_c) {
            return Err(KernelError::InvalidConfig(
                "alpha_c must lie in (0, 2*pi]",
            ));
        }
        if !angle_ok(self.alpha_r) {
            return Err(KernelError::InvalidConfig(
                "alpha_r must lie in (0, 2*pi]",
            ));
        }
        if !(self.r_c_max.is_finite() && self.r_c_max > S::zero()) {
            return Err(KernelError::InvalidConfig("r_c_max must be positive"));
        }
        if !(self.r_r.is_finite() && self.r_r > S::zero()) {
            return Err(KernelError::InvalidConfig("r_r must be positive"));
        }
        if self.p.is_nan() || self.p < S::zero() {
            return Err(KernelError::InvalidConfig("p must be nonnegative"));
        }
        if !(self.f_c.is_finite() && self.f_c >= S::zero()) {
            return Err(KernelError::InvalidConfig("f_c must be nonnegative"));
        }
        if !(self.f_r.is_finite() && self.f_r <= S::zero()) {
            return Err(KernelError::InvalidConfig("f_r must be nonpositive"));
        }
        if !(self.body_size.is_finite() && self.body_size >= S::zero()) {
            return Err(KernelError::InvalidConfig("body_size must be nonnegative"));
        }
        Ok(())
    }
}

/// Closed angular membership: zero axes sense isotropically.
#[derive(Debug, Clone, Copy)]
struct AngularTest<S> {
    cos_half: S,
    full: bool,
}

impl<S: Scalar> AngularTest<S> {
    fn new(angle: S) -> Self {
        let two_pi = S::PI() + S::PI();
        // sin((pi - angle)/2) equals cos(angle/2) but is exactly zero at
        // angle = pi, keeping the half-plane boundary closed.
        Self {
            cos_half: ((S::PI() - angle) * S::from_f64c(0.5)).sin(),
            full: angle >= two_pi,
        }
    }

    /// Membership of an offset `delta` with `|delta| = d > 0`.
    #[inline]
    fn contains(&self, axis: Vec2<S>, delta: Vec2<S>, d: S) -> bool {
        if self.full || (axis.x == S::zero() && axis.y == S::zero()) {
            return true;
        }
        axis.dot(delta) >= self.cos_half * d
    }
}

/// Cohesion radius seen by one agent: the metric cap shrunk to the distance
/// of the `(floor(p)+1)`-th nearest agent in the infinite vision cone.
pub fn cohesion_radius_micro<S: Scalar>(
    x: Vec2<S>,
    axis: Vec2<S>,
    others: &[Vec2<S>],
    cfg: &SensingConfig<S>,
) -> S {
    if !self_counts_finite(cfg.p, others.len()) {
        return cfg.r_c_max;
    }
    let k = cfg.p.floor().to_usize().unwrap_or(usize::MAX);
    let cone = AngularTest::new(cfg.alpha_c);
    let mut dists: Vec<S> = others
        .iter()
        .filter_map(|&y| {
            let delta = y - x;
            let d2 = delta.norm_sq();
            let d = d2.sqrt();
            (d2 > S::zero() && cone.contains(axis, delta, d)).then_some(d)
        })
        .collect();
    if dists.len() <= k {
        return cfg.r_c_max;
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    cfg.r_c_max.min(dists[k])
}

fn self_counts_finite<S: Scalar>(p: S, n: usize) -> bool {
    p.is_finite() && p < S::from_count(n)
}

/// Interaction velocity of agent `j` against all other agents.
pub fn intelligent_velocity_micro<S: Scalar>(
    j: usize,
    agents: &AgentSet<S>,
    cfg: &SensingConfig<S>,
) -> Result<Vec2<S>, KernelError> {
    let x = agents.position(j);
    let axis = agents.axis(j);
    let cone = AngularTest::new(cfg.alpha_c);
    let sector = AngularTest::new(cfg.alpha_r);
    let r_r2 = cfg.r_r * cfg.r_r;
    let rc_max2 = cfg.r_c_max * cfg.r_c_max;
    let ell = cfg.body_size;
    let ell2 = ell * ell;
    let singular2 = ell2 * S::from_f64c(0.01);
    let want_cohesion = cfg.f_c > S::zero();

    let mut repulsion = Vec2::zero();
    let mut candidates: Vec<(S, Vec2<S>)> = Vec::new();
    for (k, &y) in agents.positions().iter().enumerate() {
        if k == j {
            continue;
        }
        let delta = y - x;
        let d2 = delta.norm_sq();
        if d2 == S::zero() || (ell > S::zero() && d2 < singular2) {
            return Err(KernelError::SingularPair {
                i: j.min(k),
                j: j.max(k),
                dist: d2.sqrt().to_f64().unwrap_or(f64::NAN),
            });
        }
        let near = d2 <= r_r2 || d2 <= ell2 || (want_cohesion && d2 <= rc_max2);
        if !near {
            continue;
        }
        let d = d2.sqrt();
        let in_sector = d2 <= r_r2 && sector.contains(axis, delta, d);
        let in_contact = ell > S::zero() && d2 <= ell2;
        if in_sector || in_contact {
            repulsion += delta / d2;
        }
        if want_cohesion && d2 <= rc_max2 && cone.contains(axis, delta, d) {
            candidates.push((d2, delta));
        }
    }

    let mut nu = repulsion * cfg.f_r;
    if want_cohesion {
        nu += cohesion_sum(&mut candidates, cfg.p) * cfg.f_c;
    }
    Ok(nu)
}

/// Sums candidate offsets subject to the capacity `p`, dropping ties at the
/// cutoff distance all-or-none. Candidates each count one head.
fn cohesion_sum<S: Scalar>(candidates: &mut [(S, Vec2<S>)], p: S) -> Vec2<S> {
    let mut sum = Vec2::zero();
    if self_counts_finite(p, candidates.len()) {
        let k = p.floor().to_usize().unwrap_or(usize::MAX);
        candidates.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let cut = candidates[k].0;
        for &(d2, delta) in candidates.iter() {
            if d2 >= cut {
                break;
            }
            sum += delta;
        }
    } else {
        for &(_, delta) in candidates.iter() {
            sum += delta;
        }
    }
    sum
}

/// Interaction velocity felt at `x` from a density grid. Cell masses act at
/// cell centers; the cell containing `x` is excluded from repulsion but its
/// mass still counts against the cohesion capacity.
pub fn intelligent_velocity_macro<S: Scalar>(
    x: Vec2<S>,
    axis: Vec2<S>,
    density: &GridMeasure<S>,
    cfg: &SensingConfig<S>,
) -> Vec2<S> {
    let spec = density.spec;
    let area = spec.cell_area();
    let rho = density.rho();
    let own_cell = spec.cell_of(x);
    let cone = AngularTest::new(cfg.alpha_c);
    let sector = AngularTest::new(cfg.alpha_r);
    let r_r2 = cfg.r_r * cfg.r_r;
    let rc_max2 = cfg.r_c_max * cfg.r_c_max;
    let want_cohesion = cfg.f_c > S::zero();
    let reach = if want_cohesion {
        cfg.r_r.max(cfg.r_c_max)
    } else {
        cfg.r_r
    };

    let (i_lo, i_hi) = axis_range(x.x - spec.origin.x, reach, spec.h, spec.nx);
    let (j_lo, j_hi) = axis_range(x.y - spec.origin.y, reach, spec.h, spec.ny);

    let mut repulsion = Vec2::zero();
    let mut candidates: Vec<(S, Vec2<S>, S)> = Vec::new();
    for j in j_lo..=j_hi {
        for i in i_lo..=i_hi {
            let mass = rho[spec.index(i, j)] * area;
            if mass == S::zero() {
                continue;
            }
            let delta = spec.cell_center(i, j) - x;
            let d2 = delta.norm_sq();
            let d = d2.sqrt();
            if own_cell != Some((i, j)) && d2 <= r_r2 && sector.contains(axis, delta, d) {
                repulsion += delta / d2 * mass;
            }
            if want_cohesion && d2 <= rc_max2 && cone.contains(axis, delta, d) {
                candidates.push((d2, delta, mass));
            }
        }
    }

    let mut nu = repulsion * cfg.f_r;
    if want_cohesion {
        candidates.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        nu += cohesion_mass_sum(&candidates, cfg.p) * cfg.f_c;
    }
    nu
}

/// Walks distance groups in ascending order, including each group only if
/// its whole mass still fits within the capacity, and stops at the first
/// group that does not fit.
fn cohesion_mass_sum<S: Scalar>(sorted: &[(S, Vec2<S>, S)], p: S) -> Vec2<S> {
    let mut sum = Vec2::zero();
    if !p.is_finite() {
        for &(_, delta, mass) in sorted {
            sum += delta * mass;
        }
        return sum;
    }
    let mut used = S::zero();
    let mut g = 0;
    while g < sorted.len() {
        let d2 = sorted[g].0;
        let mut end = g;
        let mut group_mass = S::zero();
        let mut group_sum = Vec2::zero();
        while end < sorted.len() && sorted[end].0 == d2 {
            group_mass += sorted[end].2;
            group_sum += sorted[end].1 * sorted[end].2;
            end += 1;
        }
        if used + group_mass <= p {
            used += group_mass;
            sum += group_sum;
        } else {
            break;
        }
        g = end;
    }
    sum
}

fn axis_range<S: Scalar>(rel: S, reach: S, h: S, n: usize) -> (usize, usize) {
    let lo = ((rel - reach) / h - S::from_f64c(0.5)).ceil();
    let hi = ((rel + reach) / h - S::from_f64c(0.5)).floor();
    let lo = lo.to_isize().unwrap_or(0).max(0) as usize;
    let hi = hi.to_isize().unwrap_or(-1).min(n as isize - 1);
    if hi < 0 {
        (1, 0)
    } else {
        (lo.min(n), hi as usize)
    }
}

/// Precomputed offset tables for evaluating the interaction velocity at
/// every cell center of a fixed grid.
#[derive(Debug, Clone)]
pub struct MacroKernel<S> {
    nx: usize,
    ny: usize,
    area: S,
    f_c: S,
    f_r: S,
    p: S,
    cone: AngularTest<S>,
    sector: AngularTest<S>,
    rep: Vec<Offset<S>>,
    coh: Vec<Offset<S>>,
    coh_groups: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Copy)]
struct Offset<S> {
    di: i32,
    dj: i32,
    delta: Vec2<S>,
    d: S,
    kern: Vec2<S>,
}

impl<S: Scalar> MacroKernel<S> {
    pub fn new(spec: &GridSpec<S>, cfg: &SensingConfig<S>) -> Self {
        let h = spec.h;
        let want_cohesion = cfg.f_c > S::zero();
        let build = |radius: S, include_center: bool| -> Vec<Offset<S>> {
            let span = (radius / h).ceil().to_i32().unwrap_or(0) + 1;
            let r2 = radius * radius;
            let mut out = Vec::new();
            for dj in -span..=span {
                for di in -span..=span {
                    if di == 0 && dj == 0 && !include_center {
                        continue;
                    }
                    let delta = Vec2::new(S::from_f64c(di as f64) * h, S::from_f64c(dj as f64) * h);
                    let d2 = delta.norm_sq();
                    if d2 > r2 {
                        continue;
                    }
                    let kern = if d2 > S::zero() {
                        delta / d2
                    } else {
                        Vec2::zero()
                    };
                    out.push(Offset {
                        di,
                        dj,
                        delta,
                        d: d2.sqrt(),
                        kern,
                    });
                }
            }
            out
        };

        let rep = build(cfg.r_r, false);
        let mut coh = if want_cohesion {
            build(cfg.r_c_max, true)
        } else {
            Vec::new()
        };
        coh.sort_unstable_by_key(|o| (o.di as i64 * o.di as i64 + o.dj as i64 * o.dj as i64, o.dj, o.di));
        let mut coh_groups = Vec::new();
        let mut g = 0;
        while g < coh.len() {
            let key = coh[g].di as i64 * coh[g].di as i64 + coh[g].dj as i64 * coh[g].dj as i64;
            let mut end = g;
            while end < coh.len()
                && coh[end].di as i64 * coh[end].di as i64 + coh[end].dj as i64 * coh[end].dj as i64
                    == key
            {
                end += 1;
            }
            coh_groups.push((g as u32, end as u32));
            g = end;
        }

        Self {
            nx: spec.nx,
            ny: spec.ny,
            area: spec.cell_area(),
            f_c: cfg.f_c,
            f_r: cfg.f_r,
            p: cfg.p,
            cone: AngularTest::new(cfg.alpha_c),
            sector: AngularTest::new(cfg.alpha_r),
            rep,
            coh,
            coh_groups,
        }
    }

    /// Scaled repulsion term at cell `(i, j)` against the given density.
    pub fn repulsion(&self, rho: &[S], i: usize, j: usize, axis: Vec2<S>) -> Vec2<S> {
        let mut acc = Vec2::zero();
        for off in &self.rep {
            let ii = i as i32 + off.di;
            let jj = j as i32 + off.dj;
            if ii < 0 || jj < 0 || ii >= self.nx as i32 || jj >= self.ny as i32 {
                continue;
            }
            let r = rho[jj as usize * self.nx + ii as usize];
            if r == S::zero() || !self.sector.contains(axis, off.delta, off.d) {
                continue;
            }
            acc += off.kern * r;
        }
        acc * (self.f_r * self.area)
    }

    /// Scaled cohesion term at cell `(i, j)` against the given density.
    pub fn cohesion(&self, rho: &[S], i: usize, j: usize, axis: Vec2<S>) -> Vec2<S> {
        if self.f_c <= S::zero() {
            return Vec2::zero();
        }
        let mut sum = Vec2::zero();
        let mut used = S::zero();
        let finite = self.p.is_finite();
        for &(start, end) in &self.coh_groups {
            let mut group_mass = S::zero();
            let mut group_sum = Vec2::zero();
            for off in &self.coh[start as usize..end as usize] {
                let ii = i as i32 + off.di;
                let jj = j as i32 + off.dj;
                if ii < 0 || jj < 0 || ii >= self.nx as i32 || jj >= self.ny as i32 {
                    continue;
                }
                let r = rho[jj as usize * self.nx + ii as usize];
                if r == S::zero() {
                    continue;
                }
                if off.d > S::zero() && !self.cone.contains(axis, off.delta, off.d) {
                    continue;
                }
                let mass = r * self.area;
                group_mass += mass;
                group_sum += off.delta * mass;
            }
            if !finite || used + group_mass <= self.p {
                used += group_mass;
                sum += group_sum;
            } else {
                break;
            }
        }
        sum * self.f_c
    }

    /// Full interaction velocity from a single density acting on itself.
    pub fn velocity(&self, rho: &[S], i: usize, j: usize, axis: Vec2<S>) -> Vec2<S> {
        self.repulsion(rho, i, j, axis) + self.cohesion(rho, i, j, axis)
    }
}

#[cfg(test)]
pub mod tests_support {
    use super::SensingConfig;
    use std::f64::consts::PI;

    /// Walker parameters: half-plane repulsion ahead, cohesion disabled.
    pub fn pedestrian_cfg() -> SensingConfig<f64> {
        SensingConfig {
            alpha_c: PI,
            alpha_r: PI,
            r_c_max: 1.0,
            r_r: 0.1,
            p: f64::INFINITY,
            f_c: 0.0,
            f_r: -1.0,
            body_size: 0.05,
        }
    }
}
