//! Built-in experiment definitions: declarative descriptions of domains,
//! populations, and schedules that the runner materializes into simulations.
//! Every definition can be dumped to and rebuilt from a TOML file.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::geometry::{
    BoundaryLabel, BoundarySegment, Domain, GeometryError, Rect, Side, Vec2,
};
use crate::kernel::{KernelError, SensingConfig};
use crate::macro_engine::{GridSpec, InflowSchedule};

/// Names of all built-in experiments, in presentation order.
pub const SCENARIO_NAMES: [&str; 8] = [
    "crossing_lanes",
    "crowd_expansion",
    "cohesion_merge",
    "bottleneck",
    "globular_metric",
    "crystal_topological",
    "micro_expansion",
    "line_formation",
];

/// Metric identifiers the runner knows how to evaluate.
pub const KNOWN_METRICS: [&str; 6] = [
    "mass_ledger",
    "lane_profile",
    "density_components",
    "crystal_score",
    "collinearity",
    "angle_distribution",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unstable time step: dt * speed bound = {lhs} exceeds the cell size {h}")]
    UnstableTimeStep { lhs: f64, h: f64 },
    #[error("invalid scenario file: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Macro,
    Micro,
}

/// Time discretization and output cadence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    /// Stop early once the agent set satisfies the equilibrium criterion.
    #[serde(default)]
    pub stop_at_equilibrium: bool,
}

/// Domain geometry plus boundary labeling, in buildable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub bounds: Rect<f64>,
    #[serde(default)]
    pub obstacles: Vec<Rect<f64>>,
    pub boundary: Vec<BoundarySegment<f64>>,
}

impl DomainSpec {
    pub fn walled(bounds: Rect<f64>) -> Self {
        let boundary = Side::ALL
            .iter()
            .map(|&side| BoundarySegment::full_side(side, &bounds, BoundaryLabel::Wall))
            .collect();
        Self {
            bounds,
            obstacles: Vec::new(),
            boundary,
        }
    }

    pub fn relabel_side(&mut self, side: Side, label: BoundaryLabel) {
        self.boundary.retain(|s| s.side != side);
        self.boundary
            .push(BoundarySegment::full_side(side, &self.bounds, label));
    }

    pub fn build(&self) -> Result<Domain<f64>, GeometryError> {
        Domain::new(self.bounds, self.obstacles.clone(), self.boundary.clone())
    }

    fn has_label(&self, side: Side, label: BoundaryLabel) -> bool {
        self.boundary
            .iter()
            .any(|s| s.side == side && s.label == label)
    }
}

/// Macro grid dimensions; the cell size follows from the domain bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
}

/// Environment-driven velocity component of a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drive {
    /// Fixed direction everywhere.
    Uniform { v: Vec2<f64> },
    /// Normalized gradient of the harmonic potential of the domain labels.
    Potential,
}

/// One homogeneous density block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub region: Rect<f64>,
    pub density: f64,
}

/// Initial condition of a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Macro: homogeneous blocks of density.
    Blocks { blocks: Vec<BlockSpec> },
    /// Macro: start empty (mass arrives through inflow).
    Empty,
    /// Micro: rectangular lattice of agents, optionally jittered by a
    /// uniform offset of up to `jitter` times the lattice spacing per axis.
    Lattice {
        region: Rect<f64>,
        nx: usize,
        ny: usize,
        #[serde(default)]
        jitter: f64,
    },
    /// Micro: hexagonal patch of `count` agents around `center`, sites taken
    /// closest to the center first, optionally jittered by a uniform offset
    /// of up to `jitter` times `spacing` per axis.
    HexPatch {
        center: (f64, f64),
        spacing: f64,
        count: usize,
        #[serde(default)]
        jitter: f64,
    },
    /// Micro: uniform random draws over a region, separated to body size.
    Random { region: Rect<f64>, count: usize },
}

impl Placement {
    fn is_macro(&self) -> bool {
        matches!(self, Placement::Blocks { .. } | Placement::Empty)
    }
}

/// Boundary injection in buildable form; sine phases are drawn from the run
/// seed at materialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflowSpec {
    pub side: Side,
    #[serde(default)]
    pub span: Option<(f64, f64)>,
    /// Density added per active step.
    pub density: f64,
    pub schedule: InflowSchedule<f64>,
    /// Amplitude of the multiplicative edge modulation (0 disables it).
    #[serde(default)]
    pub modulation_amplitude: f64,
    /// Number of seeded sine modes along the edge.
    #[serde(default)]
    pub modulation_modes: usize,
}

/// One population: who they are, what drives them, where they start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub sensing: SensingConfig<f64>,
    pub drive: Drive,
    pub placement: Placement,
    #[serde(default)]
    pub inflow: Option<InflowSpec>,
    /// Population indices whose density repels this one; own index means
    /// self-repulsion. Defaults to self.
    #[serde(default)]
    pub repel_from: Option<Vec<usize>>,
}

/// A complete, runnable experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub scale: ScaleKind,
    pub domain: DomainSpec,
    #[serde(default)]
    pub grid: Option<GridDims>,
    pub schedule: Schedule,
    /// Declared bound on the transport speed, used for the CFL check.
    pub speed_bound: f64,
    pub populations: Vec<PopulationSpec>,
    #[serde(default)]
    pub metrics: Vec<String>,
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>, ScenarioError> {
        let dims = self
            .grid
            .ok_or_else(|| ScenarioError::Invalid("macro scenario without a grid".into()))?;
        GridSpec::cover(&self.domain.bounds, dims.nx, dims.ny)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: &str| Err(ScenarioError::Invalid(msg.into()));
        if self.name.is_empty() {
            return invalid("empty name");
        }
        if !(self.schedule.dt.is_finite() && self.schedule.dt > 0.0) {
            return invalid("dt must be positive");
        }
        if self.schedule.n_steps == 0 || self.schedule.snapshot_stride == 0 {
            return invalid("schedule needs at least one step and a positive stride");
        }
        if self.populations.is_empty() {
            return invalid("no populations");
        }
        self.domain.build()?;
        for m in &self.metrics {
            if !KNOWN_METRICS.contains(&m.as_str()) {
                return Err(ScenarioError::Invalid(format!("unknown metric `{m}`")));
            }
        }
        for pop in &self.populations {
            pop.sensing.validate()?;
            if let Some(sources) = &pop.repel_from {
                if sources.iter().any(|&q| q >= self.populations.len()) {
                    return invalid("repulsion source out of range");
                }
            }
            match self.scale {
                ScaleKind::Macro => {
                    if !pop.placement.is_macro() {
                        return invalid("macro scenario with agent placement");
                    }
                    if matches!(pop.drive, Drive::Potential) && !self.has_target() {
                        return invalid("potential drive needs a target boundary");
                    }
                    if let Some(inflow) = &pop.inflow {
                        if !self.domain.has_label(inflow.side, BoundaryLabel::Inflow) {
                            return invalid("inflow on a side without inflow labeling");
                        }
                        if !(inflow.density > 0.0) {
                            return invalid("inflow density must be positive");
                        }
                    }
                }
                ScaleKind::Micro => {
                    if pop.placement.is_macro() {
                        return invalid("micro scenario with density placement");
                    }
                    if pop.inflow.is_some() {
                        return invalid("micro scenarios have no boundary inflow");
                    }
                    if matches!(pop.drive, Drive::Potential) {
                        return invalid("micro scenarios use a uniform drive");
                    }
                }
            }
        }
        if self.scale == ScaleKind::Macro {
            let spec = self.grid_spec()?;
            if !(self.speed_bound > 0.0) {
                return invalid("macro scenarios need a positive speed bound");
            }
            if self.schedule.dt * self.speed_bound > spec.h * (1.0 + 1e-12) {
                return Err(ScenarioError::UnstableTimeStep {
                    lhs: self.schedule.dt * self.speed_bound,
                    h: spec.h,
                });
            }
        }
        Ok(())
    }

    fn has_target(&self) -> bool {
        self.domain
            .boundary
            .iter()
            .any(|s| s.label == BoundaryLabel::Target)
    }
}

/// Builds a named built-in experiment.
pub fn build(name: &str) -> Result<Scenario, ScenarioError> {
    let scenario = match name {
        "crossing_lanes" => crossing_lanes(),
        "crowd_expansion" => crowd_expansion(),
        "cohesion_merge" => cohesion_merge(),
        "bottleneck" => bottleneck(),
        "globular_metric" => globular_cluster("globular_metric", 100.0),
        "crystal_topological" => globular_cluster("crystal_topological", 7.0),
        "micro_expansion" => micro_expansion(),
        "line_formation" => line_formation(),
        other => return Err(ScenarioError::UnknownScenario(other.into())),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn unit_square() -> Rect<f64> {
    Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap()
}

fn pedestrian_sensing() -> SensingConfig<f64> {
    SensingConfig {
        alpha_c: PI,
        alpha_r: PI,
        r_c_max: 1.0,
        r_r: 0.1,
        p: f64::INFINITY,
        f_c: 0.0,
        f_r: -1.0,
        body_size: 0.0,
    }
}

fn animal_sensing() -> SensingConfig<f64> {
    SensingConfig {
        alpha_c: 2.0 * PI,
        alpha_r: 2.0 * PI,
        r_c_max: 2.0,
        r_r: 0.2,
        p: 100.0,
        f_c: 0.045,
        f_r: -0.045,
        body_size: 0.05,
    }
}

fn macro_schedule(nx: usize, speed_bound: f64, n_steps: usize, stride: usize) -> Schedule {
    Schedule {
        dt: 0.8 / (nx as f64 * speed_bound),
        n_steps,
        snapshot_stride: stride,
        stop_at_equilibrium: false,
    }
}

fn crossing_lanes() -> Scenario {
    let bounds = unit_square();
    let mut domain = DomainSpec::walled(bounds);
    domain.relabel_side(Side::Left, BoundaryLabel::Inflow);
    domain.relabel_side(Side::Right, BoundaryLabel::Inflow);
    let inflow = |side| InflowSpec {
        side,
        span: None,
        density: 0.3,
        schedule: InflowSchedule::Constant,
        modulation_amplitude: 0.5,
        modulation_modes: 3,
    };
    let walker = |direction: f64, opponent: usize, side| PopulationSpec {
        sensing: pedestrian_sensing(),
        drive: Drive::Uniform {
            v: Vec2::new(direction, 0.0),
        },
        placement: Placement::Empty,
        inflow: Some(inflow(side)),
        repel_from: Some(vec![opponent]),
    };
    Scenario {
        name: "crossing_lanes".into(),
        scale: ScaleKind::Macro,
        domain,
        grid: Some(GridDims { nx: 128, ny: 128 }),
        schedule: macro_schedule(128, 2.5, 1500, 25),
        speed_bound: 2.5,
        populations: vec![
            walker(1.0, 1, Side::Left),
            walker(-1.0, 0, Side::Right),
        ],
        metrics: vec!["lane_profile".into(), "mass_ledger".into()],
    }
}

fn crowd_expansion() -> Scenario {
    let bounds = unit_square();
    let mut domain = DomainSpec::walled(bounds);
    domain.relabel_side(Side::Right, BoundaryLabel::Target);
    Scenario {
        name: "crowd_expansion".into(),
        scale: ScaleKind::Macro,
        domain,
        grid: Some(GridDims { nx: 128, ny: 128 }),
        schedule: macro_schedule(128, 3.0, 600, 20),
        speed_bound: 3.0,
        populations: vec![PopulationSpec {
            sensing: pedestrian_sensing(),
            drive: Drive::Uniform {
                v: Vec2::new(1.0, 0.0),
            },
            placement: Placement::Blocks {
                blocks: vec![BlockSpec {
                    region: Rect::from_corners(0.10, 0.35, 0.35, 0.65).unwrap(),
                    density: 4.0,
                }],
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["mass_ledger".into()],
    }
}

fn cohesion_merge() -> Scenario {
    let bounds = unit_square();
    let mut domain = DomainSpec::walled(bounds);
    domain.relabel_side(Side::Right, BoundaryLabel::Target);
    let h = 1.0 / 64.0;
    // Three equal clusters on the left, grid-aligned so each carries mass
    // exactly 0.03125; two are close, the third clearly separated.
    let cluster = |y0: f64| BlockSpec {
        region: Rect::from_corners(6.0 * h, y0 * h, 14.0 * h, (y0 + 8.0) * h).unwrap(),
        density: 2.0,
    };
    let mut sensing = pedestrian_sensing();
    sensing.alpha_c = 2.0 * PI;
    sensing.r_c_max = 2.0;
    sensing.f_c = 100.0;
    // Two thirds of the total initial mass 0.09375.
    sensing.p = 0.0625;
    Scenario {
        name: "cohesion_merge".into(),
        scale: ScaleKind::Macro,
        domain,
        grid: Some(GridDims { nx: 64, ny: 64 }),
        schedule: macro_schedule(64, 10.0, 800, 20),
        speed_bound: 10.0,
        populations: vec![PopulationSpec {
            sensing,
            drive: Drive::Uniform {
                v: Vec2::new(1.0, 0.0),
            },
            placement: Placement::Blocks {
                blocks: vec![cluster(12.0), cluster(24.0), cluster(46.0)],
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["density_components".into(), "mass_ledger".into()],
    }
}

fn bottleneck() -> Scenario {
    let bounds = unit_square();
    let mut domain = DomainSpec::walled(bounds);
    domain.relabel_side(Side::Right, BoundaryLabel::Target);
    let h = 1.0 / 128.0;
    // Two slabs across the middle leaving a 10-cell central gap; the tiny
    // inset keeps them strictly inside while the cell-center mask closes the
    // sliver against the walls.
    domain.obstacles = vec![
        Rect::from_corners(0.45, 0.001, 0.55, 59.0 * h).unwrap(),
        Rect::from_corners(0.45, 69.0 * h, 0.55, 0.999).unwrap(),
    ];
    let mut sensing = pedestrian_sensing();
    sensing.f_r = -10.0;
    Scenario {
        name: "bottleneck".into(),
        scale: ScaleKind::Macro,
        domain,
        grid: Some(GridDims { nx: 128, ny: 128 }),
        schedule: macro_schedule(128, 6.0, 6000, 50),
        speed_bound: 6.0,
        populations: vec![PopulationSpec {
            sensing,
            drive: Drive::Potential,
            placement: Placement::Blocks {
                blocks: vec![BlockSpec {
                    region: Rect::from_corners(0.05, 0.25, 0.40, 0.75).unwrap(),
                    density: 1.0,
                }],
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["density_components".into(), "mass_ledger".into()],
    }
}

fn globular_cluster(name: &str, p: f64) -> Scenario {
    let bounds = Rect::from_corners(0.0, 0.0, 10.0, 10.0).unwrap();
    let mut sensing = animal_sensing();
    sensing.p = p;
    Scenario {
        name: name.into(),
        scale: ScaleKind::Micro,
        domain: DomainSpec::walled(bounds),
        grid: None,
        schedule: Schedule {
            dt: 0.01,
            n_steps: 5000,
            snapshot_stride: 100,
            stop_at_equilibrium: true,
        },
        speed_bound: 10.0,
        populations: vec![PopulationSpec {
            sensing,
            drive: Drive::Uniform { v: Vec2::zero() },
            placement: Placement::Lattice {
                region: Rect::from_corners(4.55, 4.55, 5.45, 5.45).unwrap(),
                nx: 10,
                ny: 10,
                jitter: 0.1,
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["crystal_score".into(), "angle_distribution".into()],
    }
}

fn micro_expansion() -> Scenario {
    let bounds = Rect::from_corners(0.0, 0.0, 10.0, 10.0).unwrap();
    let mut sensing = animal_sensing();
    sensing.alpha_r = PI;
    sensing.alpha_c = PI;
    sensing.r_c_max = 1.0;
    sensing.r_r = 0.25;
    sensing.p = f64::INFINITY;
    sensing.f_c = 0.0;
    sensing.f_r = -0.05;
    sensing.body_size = 0.05;
    Scenario {
        name: "micro_expansion".into(),
        scale: ScaleKind::Micro,
        domain: DomainSpec::walled(bounds),
        grid: None,
        schedule: Schedule {
            dt: 0.01,
            n_steps: 1500,
            snapshot_stride: 50,
            stop_at_equilibrium: false,
        },
        speed_bound: 10.0,
        populations: vec![PopulationSpec {
            sensing,
            drive: Drive::Uniform {
                v: Vec2::new(1.0, 0.0),
            },
            placement: Placement::Lattice {
                region: Rect::from_corners(4.5, 4.5, 5.5, 5.5).unwrap(),
                nx: 10,
                ny: 10,
                jitter: 0.0,
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["angle_distribution".into()],
    }
}

fn line_formation() -> Scenario {
    let bounds = Rect::from_corners(0.0, 0.0, 50.0, 50.0).unwrap();
    let mut sensing = animal_sensing();
    sensing.alpha_r = PI / 4.0;
    sensing.alpha_c = PI;
    sensing.r_c_max = 1.0;
    sensing.r_r = 0.5;
    sensing.p = 7.0;
    sensing.f_c = 0.1;
    sensing.f_r = -0.05;
    sensing.body_size = 0.1;
    Scenario {
        name: "line_formation".into(),
        scale: ScaleKind::Micro,
        domain: DomainSpec::walled(bounds),
        grid: None,
        schedule: Schedule {
            dt: 0.01,
            n_steps: 3000,
            snapshot_stride: 50,
            stop_at_equilibrium: false,
        },
        speed_bound: 10.0,
        populations: vec![PopulationSpec {
            sensing,
            drive: Drive::Uniform {
                v: Vec2::new(1.0, 0.0),
            },
            placement: Placement::Lattice {
                region: Rect::from_corners(3.0, 24.2, 10.6, 25.8).unwrap(),
                nx: 20,
                ny: 5,
                jitter: 0.1,
            },
            inflow: None,
            repel_from: None,
        }],
        metrics: vec!["collinearity".into(), "angle_distribution".into()],
    }
}
