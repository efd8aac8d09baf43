//! One transport step: evaluate per-cell velocities from the frozen state,
//! verify the CFL bound, then translate each cell's mass and deposit it by
//! exact rectangle overlap.

use rayon::prelude::*;

use crate::field::PotentialField;
use crate::geometry::{BoundaryLabel, Domain, Side, Vec2};
use crate::kernel::{KernelError, MacroKernel, SensingConfig};
use crate::macro_engine::{GridMeasure, GridSpec, MacroError};
use crate::scalar::Scalar;

/// External drive of one population: a fixed vector or a solved potential.
#[derive(Debug, Clone)]
pub enum PopulationField<S> {
    Uniform(Vec2<S>),
    Potential(PotentialField<S>),
}

impl<S: Scalar> PopulationField<S> {
    pub fn drive_at(&self, i: usize, j: usize) -> Vec2<S> {
        match self {
            PopulationField::Uniform(w) => *w,
            PopulationField::Potential(f) => f.velocity_at(i, j),
        }
    }
}

/// Which density a population is repelled by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepulsionSource {
    Own,
    Other(usize),
}

/// Time gate of an injection profile, evaluated at step-start times.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InflowSchedule<S> {
    Constant,
    SquareWave { period: S, duty: S },
}

impl<S: Scalar> InflowSchedule<S> {
    pub fn active(&self, t: S) -> bool {
        match *self {
            InflowSchedule::Constant => true,
            InflowSchedule::SquareWave { period, duty } => {
                let phase = t - (t / period).floor() * period;
                phase < duty * period
            }
        }
    }
}

/// Multiplicative density modulation along an injection edge, used to seed
/// transverse structure in otherwise uniform inflows.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpatialModulation<S> {
    pub amplitude: S,
    /// Sine modes as (wavenumber, phase); evaluated on the unit span.
    pub modes: Vec<(S, S)>,
}

impl<S: Scalar> SpatialModulation<S> {
    /// Factor at normalized edge coordinate `s` in [0, 1], clamped to >= 0.
    pub fn factor(&self, s: S) -> S {
        let two_pi = S::PI() + S::PI();
        let mut m = S::zero();
        for &(k, phase) in &self.modes {
            m += (two_pi * k * s + phase).sin();
        }
        (S::one() + self.amplitude * m).max(S::zero())
    }
}

/// Boundary injection: density added to inflow-adjacent cells while the
/// schedule is active.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowProfile<S> {
    pub side: Side,
    /// Restriction along the side; `None` covers every inflow-labeled cell.
    pub span: Option<(S, S)>,
    /// Density added per injection event.
    pub density: S,
    pub schedule: InflowSchedule<S>,
    pub modulation: Option<SpatialModulation<S>>,
}

impl<S: Scalar> InflowProfile<S> {
    pub fn constant(side: Side, density: S) -> Self {
        Self {
            side,
            span: None,
            density,
            schedule: InflowSchedule::Constant,
            modulation: None,
        }
    }
}

/// Running mass accounts of one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassLedger<S> {
    pub initial: S,
    pub injected: S,
    pub absorbed: S,
}

impl<S: Scalar> MassLedger<S> {
    pub fn new(initial: S) -> Self {
        Self {
            initial,
            injected: S::zero(),
            absorbed: S::zero(),
        }
    }

    pub fn record_injection(&mut self, mass: S) {
        self.injected += mass;
    }

    pub fn record_absorption(&mut self, mass: S) {
        self.absorbed += mass;
    }

    /// Signed balance error `interior + absorbed - injected - initial`.
    pub fn residual(&self, interior: S) -> S {
        interior + self.absorbed - self.injected - self.initial
    }

    /// Balance error relative to all mass that ever entered the system.
    pub fn relative_residual(&self, interior: S) -> S {
        let scale = (self.initial + self.injected).max(S::one());
        self.residual(interior).abs() / scale
    }
}

/// Per-population outcome of one transport step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<S> {
    /// Largest cell speed before wall projection.
    pub max_speed: S,
    /// Mass that left the grid through open (target or inflow) faces.
    pub outflow: S,
}

/// One density population: measure, drive, sensing, and coupling.
#[derive(Debug, Clone)]
pub struct Population<S> {
    measure: GridMeasure<S>,
    field: PopulationField<S>,
    sensing: SensingConfig<S>,
    kernel: MacroKernel<S>,
    repel_from: Vec<RepulsionSource>,
    inflow: Option<InflowProfile<S>>,
}

impl<S: Scalar> Population<S> {
    pub fn new(
        measure: GridMeasure<S>,
        field: PopulationField<S>,
        sensing: SensingConfig<S>,
    ) -> Result<Self, KernelError> {
        sensing.validate()?;
        let kernel = MacroKernel::new(&measure.spec, &sensing);
        Ok(Self {
            measure,
            field,
            sensing,
            kernel,
            repel_from: vec![RepulsionSource::Own],
            inflow: None,
        })
    }

    pub fn with_repulsion_sources(mut self, sources: Vec<RepulsionSource>) -> Self {
        self.repel_from = sources;
        self
    }

    pub fn with_inflow(mut self, profile: InflowProfile<S>) -> Self {
        self.inflow = Some(profile);
        self
    }

    pub fn measure(&self) -> &GridMeasure<S> {
        &self.measure
    }

    pub fn measure_mut(&mut self) -> &mut GridMeasure<S> {
        &mut self.measure
    }

    pub fn field(&self) -> &PopulationField<S> {
        &self.field
    }

    pub fn sensing(&self) -> &SensingConfig<S> {
        &self.sensing
    }

    pub fn inflow(&self) -> Option<&InflowProfile<S>> {
        self.inflow.as_ref()
    }

    pub fn total_mass(&self) -> S {
        self.measure.total_mass()
    }

    /// Transport velocity of cell `(i, j)` given the frozen densities of
    /// every population. The sensing axis follows the drive direction; a
    /// vanishing drive senses isotropically.
    fn velocity_at(&self, all_rho: &[&[S]], own: usize, i: usize, j: usize) -> Vec2<S> {
        let w = self.field.drive_at(i, j);
        let axis = w.normalized().unwrap_or(Vec2::zero());
        let mut v = w + self.kernel.cohesion(all_rho[own], i, j, axis);
        for src in &self.repel_from {
            let rho = match *src {
                RepulsionSource::Own => all_rho[own],
                RepulsionSource::Other(q) => all_rho[q],
            };
            v += self.kernel.repulsion(rho, i, j, axis);
        }
        v
    }
}

/// Advances every population by one synchronized transport step.
///
/// All velocities are evaluated from the step-start densities, so the update
/// is independent of population order. Velocity components pointing into a
/// wall face or an obstacle cell are zeroed (the mass slides along the
/// blocking face); components pointing across target or inflow faces carry
/// mass off the grid and are reported as outflow.
pub fn step<S: Scalar>(
    populations: &mut [Population<S>],
    domain: &Domain<S>,
    dt: S,
) -> Result<Vec<StepReport<S>>, MacroError> {
    if populations.is_empty() {
        return Ok(Vec::new());
    }
    let spec = populations[0].measure.spec;
    for pop in populations.iter() {
        if pop.measure.spec != spec {
            return Err(MacroError::PopulationGridMismatch);
        }
        for src in &pop.repel_from {
            if let RepulsionSource::Other(q) = *src {
                assert!(q < populations.len(), "repulsion source out of range");
            }
        }
    }

    let all_rho: Vec<&[S]> = populations.iter().map(|p| p.measure.rho()).collect();
    let n = spec.n_cells();
    let mut velocities: Vec<Vec<Vec2<S>>> = Vec::with_capacity(populations.len());
    let mut max_speeds: Vec<S> = Vec::with_capacity(populations.len());
    for (p, pop) in populations.iter().enumerate() {
        let rho = all_rho[p];
        let vel: Vec<Vec2<S>> = (0..n)
            .into_par_iter()
            .map(|idx| {
                if rho[idx] == S::zero() {
                    Vec2::zero()
                } else {
                    pop.velocity_at(&all_rho, p, idx % spec.nx, idx / spec.nx)
                }
            })
            .collect();
        let max_speed = vel
            .iter()
            .zip(rho)
            .filter(|(_, r)| **r > S::zero())
            .map(|(v, _)| v.norm())
            .fold(S::zero(), S::max);
        velocities.push(vel);
        max_speeds.push(max_speed);
    }

    let overall = max_speeds.iter().copied().fold(S::zero(), S::max);
    if overall * dt > spec.h {
        return Err(MacroError::CflViolation {
            speed_dt: (overall * dt).to_f64().unwrap_or(f64::NAN),
            h: spec.h.to_f64().unwrap_or(f64::NAN),
            admissible_dt: (spec.h / overall).to_f64().unwrap_or(f64::NAN),
        });
    }

    let mut reports = Vec::with_capacity(populations.len());
    for (p, pop) in populations.iter_mut().enumerate() {
        let outflow = transport(&mut pop.measure, &velocities[p], domain, dt);
        reports.push(StepReport {
            max_speed: max_speeds[p],
            outflow,
        });
    }
    Ok(reports)
}

/// Advances a single measure under a prescribed per-cell velocity field.
///
/// Fails the CFL check against cells that carry mass; otherwise transports
/// the measure exactly as [`step`] does for population-derived velocities.
pub fn push_forward<S: Scalar>(
    measure: &mut GridMeasure<S>,
    velocities: &[Vec2<S>],
    domain: &Domain<S>,
    dt: S,
) -> Result<StepReport<S>, MacroError> {
    let spec = measure.spec;
    assert_eq!(velocities.len(), spec.n_cells(), "one velocity per cell");
    let max_speed = velocities
        .iter()
        .zip(measure.rho())
        .filter(|(_, r)| **r > S::zero())
        .map(|(v, _)| v.norm())
        .fold(S::zero(), S::max);
    if max_speed * dt > spec.h {
        return Err(MacroError::CflViolation {
            speed_dt: (max_speed * dt).to_f64().unwrap_or(f64::NAN),
            h: spec.h.to_f64().unwrap_or(f64::NAN),
            admissible_dt: (spec.h / max_speed).to_f64().unwrap_or(f64::NAN),
        });
    }
    let outflow = transport(measure, velocities, domain, dt);
    Ok(StepReport { max_speed, outflow })
}

/// Moves each cell's mass by its projected displacement and deposits it into
/// the up-to-four overlapped cells. Returns the mass leaving the grid.
fn transport<S: Scalar>(
    measure: &mut GridMeasure<S>,
    velocities: &[Vec2<S>],
    domain: &Domain<S>,
    dt: S,
) -> S {
    let spec = measure.spec;
    let (nx, ny) = (spec.nx, spec.ny);
    let mut next = vec![S::zero(); spec.n_cells()];
    let mut outflow = S::zero();
    for j in 0..ny {
        for i in 0..nx {
            let idx = spec.index(i, j);
            let rho = measure.rho()[idx];
            if rho == S::zero() {
                continue;
            }
            let shift = project_shift(measure, domain, i, j, velocities[idx] * dt);
            let fx = (shift.x / spec.h).max(-S::one()).min(S::one());
            let fy = (shift.y / spec.h).max(-S::one()).min(S::one());
            let di = if fx >= S::zero() { 1i32 } else { -1 };
            let dj = if fy >= S::zero() { 1i32 } else { -1 };
            let (wx1, wy1) = (fx.abs(), fy.abs());
            let (wx0, wy0) = (S::one() - wx1, S::one() - wy1);
            for (ci, wx) in [(i as i32, wx0), (i as i32 + di, wx1)] {
                for (cj, wy) in [(j as i32, wy0), (j as i32 + dj, wy1)] {
                    let weight = wx * wy;
                    if weight == S::zero() {
                        continue;
                    }
                    if ci < 0 || cj < 0 || ci >= nx as i32 || cj >= ny as i32 {
                        outflow += rho * weight * spec.cell_area();
                    } else {
                        let dest = spec.index(ci as usize, cj as usize);
                        debug_assert!(!measure.obstacle_mask()[dest], "mass deposited in obstacle");
                        next[dest] += rho * weight;
                    }
                }
            }
        }
    }
    measure.set_rho(next);
    outflow
}

/// Zeroes displacement components pointing into walls or obstacle cells.
fn project_shift<S: Scalar>(
    measure: &GridMeasure<S>,
    domain: &Domain<S>,
    i: usize,
    j: usize,
    mut shift: Vec2<S>,
) -> Vec2<S> {
    let spec = measure.spec;
    let center = spec.cell_center(i, j);
    let blocked_x = |step: i32| -> bool {
        let ii = i as i32 + step;
        if ii < 0 {
            domain.label_at(Side::Left, center.y) == BoundaryLabel::Wall
        } else if ii >= spec.nx as i32 {
            domain.label_at(Side::Right, center.y) == BoundaryLabel::Wall
        } else {
            measure.is_obstacle(ii as usize, j)
        }
    };
    let blocked_y = |step: i32| -> bool {
        let jj = j as i32 + step;
        if jj < 0 {
            domain.label_at(Side::Bottom, center.x) == BoundaryLabel::Wall
        } else if jj >= spec.ny as i32 {
            domain.label_at(Side::Top, center.x) == BoundaryLabel::Wall
        } else {
            measure.is_obstacle(i, jj as usize)
        }
    };
    if shift.x > S::zero() && blocked_x(1) || shift.x < S::zero() && blocked_x(-1) {
        shift.x = S::zero();
    }
    if shift.y > S::zero() && blocked_y(1) || shift.y < S::zero() && blocked_y(-1) {
        shift.y = S::zero();
    }
    if shift.x != S::zero() && shift.y != S::zero() {
        let ii = i as i32 + if shift.x > S::zero() { 1 } else { -1 };
        let jj = j as i32 + if shift.y > S::zero() { 1 } else { -1 };
        let inside = ii >= 0 && jj >= 0 && ii < spec.nx as i32 && jj < spec.ny as i32;
        if inside && measure.is_obstacle(ii as usize, jj as usize) {
            shift.y = S::zero();
        }
    }
    shift
}

/// Adds the profile density to inflow-adjacent cells if the schedule is
/// active at time `t`. Returns the injected mass.
pub fn inject_boundary<S: Scalar>(
    pop: &mut Population<S>,
    profile: &InflowProfile<S>,
    domain: &Domain<S>,
    t: S,
) -> Result<S, MacroError> {
    let spec = pop.measure.spec;
    let cells = boundary_cells(&spec, profile.side);
    let (lo, hi) = side_window(domain, profile.side, profile.span);
    let mut selected = Vec::new();
    for (i, j, s_abs) in cells {
        if s_abs < lo || s_abs > hi {
            continue;
        }
        if domain.label_at(profile.side, s_abs) != BoundaryLabel::Inflow {
            if profile.span.is_some() {
                return Err(MacroError::UnknownSegment);
            }
            continue;
        }
        selected.push((i, j, s_abs));
    }
    if selected.is_empty() {
        return Err(MacroError::UnknownSegment);
    }
    if !profile.schedule.active(t) {
        return Ok(S::zero());
    }
    let width = hi - lo;
    let mut added = S::zero();
    for (i, j, s_abs) in selected {
        let s_norm = if width > S::zero() {
            (s_abs - lo) / width
        } else {
            S::zero()
        };
        let factor = profile
            .modulation
            .as_ref()
            .map_or(S::one(), |m| m.factor(s_norm));
        let value = profile.density * factor;
        let idx = pop.measure.spec.index(i, j);
        if !pop.measure.obstacle_mask()[idx] {
            let old = pop.measure.rho()[idx];
            pop.measure.set_density(i, j, old + value);
            added += value * spec.cell_area();
        }
    }
    Ok(added)
}

/// Removes all mass in cells adjacent to target-labeled boundary faces and
/// returns it.
pub fn absorb_at_target<S: Scalar>(pop: &mut Population<S>, domain: &Domain<S>) -> S {
    let spec = pop.measure.spec;
    let mut removed = S::zero();
    for side in Side::ALL {
        for (i, j, s_abs) in boundary_cells(&spec, side) {
            if domain.label_at(side, s_abs) != BoundaryLabel::Target {
                continue;
            }
            let rho = pop.measure.density_at(i, j);
            if rho > S::zero() {
                removed += rho * spec.cell_area();
                pop.measure.set_density(i, j, S::zero());
            }
        }
    }
    removed
}

/// Cells lining one side of the grid, with the along-side coordinate of each
/// cell center.
fn boundary_cells<S: Scalar>(spec: &GridSpec<S>, side: Side) -> Vec<(usize, usize, S)> {
    match side {
        Side::Left => (0..spec.ny)
            .map(|j| (0, j, spec.cell_center(0, j).y))
            .collect(),
        Side::Right => (0..spec.ny)
            .map(|j| (spec.nx - 1, j, spec.cell_center(spec.nx - 1, j).y))
            .collect(),
        Side::Bottom => (0..spec.nx)
            .map(|i| (i, 0, spec.cell_center(i, 0).x))
            .collect(),
        Side::Top => (0..spec.nx)
            .map(|i| (i, spec.ny - 1, spec.cell_center(i, spec.ny - 1).x))
            .collect(),
    }
}

fn side_window<S: Scalar>(domain: &Domain<S>, side: Side, span: Option<(S, S)>) -> (S, S) {
    let bounds = domain.bounds();
    let (lo, hi) = match side {
        Side::Left | Side::Right => (bounds.min.y, bounds.max.y),
        Side::Bottom | Side::Top => (bounds.min.x, bounds.max.x),
    };
    match span {
        Some((a, b)) => (a.max(lo), b.min(hi)),
        None => (lo, hi),
    }
}
