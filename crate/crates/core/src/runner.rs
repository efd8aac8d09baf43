//! Executes scenario descriptions end to end: materializes populations from
//! a seeded RNG, advances the engines, writes frame CSVs, metric series, and
//! a JSON manifest, and drives multi-seed batches with aggregated angle
//! histograms.

use std::fs;
use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{solve_potential, FieldError, SolverOptions};
use crate::geometry::{Domain, Vec2};
use crate::kernel::KernelError;
use crate::macro_engine::{
    absorb_at_target, inject_boundary, step, GridMeasure, GridSpec, InflowProfile, MacroError,
    MassLedger, Population, PopulationField, RepulsionSource, SpatialModulation,
};
use crate::metrics::{
    angle_distribution, collinearity, crystal_score, density_components, lane_profile,
    AngleHistogram,
};
use crate::micro_engine::{
    enforce_separation, max_displacement, step_agents, AgentSet, EquilibriumDetector,
    ExternalDrive, MicroError,
};
use crate::scenarios::{Drive, Placement, ScaleKind, Scenario, ScenarioError};

/// Failure modes of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("time step violates the transport stability bound: {0}")]
    Cfl(String),
    #[error("field solver failed: {0}")]
    Solver(String),
    #[error("agent separation failed: {0}")]
    Separation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Cfl(_) => 3,
            RunError::Solver(_) => 4,
            RunError::Separation(_) => 5,
        }
    }
}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnstableTimeStep { .. } => RunError::Cfl(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<MacroError> for RunError {
    fn from(e: MacroError) -> Self {
        match e {
            MacroError::CflViolation { .. } => RunError::Cfl(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<FieldError> for RunError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::NonConvergence { .. } => RunError::Solver(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<MicroError> for RunError {
    fn from(e: MicroError) -> Self {
        match e {
            MicroError::SeparationFailure { .. } => RunError::Separation(e.to_string()),
            MicroError::Kernel(KernelError::SingularPair { .. }) => {
                RunError::Separation(e.to_string())
            }
            MicroError::Kernel(other) => RunError::Config(other.to_string()),
        }
    }
}

impl From<KernelError> for RunError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::SingularPair { .. } => RunError::Separation(e.to_string()),
            other => RunError::Config(other.to_string()),
        }
    }
}

/// How to execute one run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Dotted-path assignments applied to the scenario before the run.
    pub overrides: Vec<(String, String)>,
    /// Replaces the scenario's snapshot stride.
    pub stride: Option<usize>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            out_dir: out_dir.into(),
            seed,
            overrides: Vec::new(),
            stride: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub step: usize,
    pub time: f64,
    pub file: String,
}

/// Mass accounts of every population at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub step: usize,
    pub interior: Vec<f64>,
    pub injected: Vec<f64>,
    pub absorbed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    /// Fully resolved description, overrides included.
    pub parameters: Scenario,
    pub frames: Vec<FrameRecord>,
    pub mass_ledger: Vec<LedgerRecord>,
    pub metrics_file: Option<String>,
    pub equilibrium_step: Option<usize>,
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub name: String,
    pub value: f64,
}

/// Everything a completed run leaves behind, in memory and on disk.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub metric_rows: Vec<MetricRow>,
    pub histogram: Option<AngleHistogram>,
    pub final_agents: Option<AgentSet<f64>>,
    pub final_densities: Vec<GridMeasure<f64>>,
}

/// Runs one scenario to completion or first error. A manifest is written in
/// either case; failures carry a machine-readable error record.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    fs::create_dir_all(&opts.out_dir)?;
    fs::create_dir_all(opts.out_dir.join("frames"))?;
    let mut manifest = RunManifest {
        scenario: scenario.name.clone(),
        seed: opts.seed,
        parameters: scenario.clone(),
        frames: Vec::new(),
        mass_ledger: Vec::new(),
        metrics_file: None,
        equilibrium_step: None,
        error: None,
    };
    let manifest_path = opts.out_dir.join("manifest.json");

    let prepared = prepare(scenario, opts);
    let result = match prepared {
        Ok(resolved) => {
            manifest.parameters = resolved.clone();
            execute(&resolved, opts, &mut manifest)
        }
        Err(e) => Err(e),
    };
    match result {
        Ok(mut outcome) => {
            write_manifest(&manifest_path, &manifest)?;
            outcome.manifest = manifest;
            outcome.manifest_path = manifest_path;
            Ok(outcome)
        }
        Err(e) => {
            manifest.error = Some(ErrorRecord {
                exit_code: e.exit_code(),
                message: e.to_string(),
            });
            write_manifest(&manifest_path, &manifest)?;
            Err(e)
        }
    }
}

fn prepare(scenario: &Scenario, opts: &RunOptions) -> Result<Scenario, RunError> {
    let mut resolved = apply_overrides(scenario, &opts.overrides)?;
    if let Some(stride) = opts.stride {
        if stride == 0 {
            return Err(RunError::Config("stride must be positive".into()));
        }
        resolved.schedule.snapshot_stride = stride;
    }
    resolved.validate()?;
    Ok(resolved)
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| RunError::Config(format!("manifest serialization: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Applies `key=value` assignments along dotted paths (table keys and array
/// indices) to a scenario.
pub fn apply_overrides(
    scenario: &Scenario,
    overrides: &[(String, String)],
) -> Result<Scenario, RunError> {
    if overrides.is_empty() {
        return Ok(scenario.clone());
    }
    let mut root = toml::Value::try_from(scenario)
        .map_err(|e| RunError::Config(format!("scenario encoding: {e}")))?;
    for (path, raw) in overrides {
        let value = parse_override_value(raw);
        set_path(&mut root, path, value)?;
    }
    root.try_into()
        .map_err(|e| RunError::Config(format!("override produced an invalid scenario: {e}")))
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(table) => table["v"].clone(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), RunError> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = root;
    for (k, seg) in segments.iter().enumerate() {
        let last = k + 1 == segments.len();
        if let Ok(index) = seg.parse::<usize>() {
            let arr = cursor.as_array_mut().ok_or_else(|| {
                RunError::Config(format!("override path `{path}`: `{seg}` indexes a non-array"))
            })?;
            let slot = arr.get_mut(index).ok_or_else(|| {
                RunError::Config(format!("override path `{path}`: index {index} out of range"))
            })?;
            if last {
                *slot = value;
                return Ok(());
            }
            cursor = slot;
        } else {
            let table = cursor.as_table_mut().ok_or_else(|| {
                RunError::Config(format!("override path `{path}`: `{seg}` keys a non-table"))
            })?;
            if last {
                table.insert(seg.to_string(), value);
                return Ok(());
            }
            cursor = table.get_mut(*seg).ok_or_else(|| {
                RunError::Config(format!("override path `{path}`: unknown key `{seg}`"))
            })?;
        }
    }
    Ok(())
}

struct Recorder {
    frames_dir: PathBuf,
    metric_rows: Vec<MetricRow>,
    metrics_text: String,
}

impl Recorder {
    fn new(out_dir: &Path) -> Self {
        Self {
            frames_dir: out_dir.join("frames"),
            metric_rows: Vec::new(),
            metrics_text: String::from("step,metric_name,value\n"),
        }
    }

    fn record(&mut self, step: usize, name: &str, value: f64) {
        self.metrics_text
            .push_str(&format!("{step},{name},{value}\n"));
        self.metric_rows.push(MetricRow {
            step,
            name: name.to_string(),
            value,
        });
    }

    fn frame_path(&self, step: usize) -> (PathBuf, String) {
        let rel = format!("frames/step_{step:06}.csv");
        (self.frames_dir.join(format!("step_{step:06}.csv")), rel)
    }
}

fn execute(
    scenario: &Scenario,
    opts: &RunOptions,
    manifest: &mut RunManifest,
) -> Result<RunOutcome, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut recorder = Recorder::new(&opts.out_dir);
    let outcome = match scenario.scale {
        ScaleKind::Macro => execute_macro(scenario, opts, manifest, &mut rng, &mut recorder)?,
        ScaleKind::Micro => execute_micro(scenario, opts, manifest, &mut rng, &mut recorder)?,
    };
    Ok(outcome)
}

/// Builds the ready-to-step populations of a density-scale scenario:
/// initial measures, drives (solving the potential where required),
/// repulsion wiring, and inflow profiles with seeded modulation phases.
pub fn bind_macro_populations(
    scenario: &Scenario,
    domain: &Domain<f64>,
    spec: GridSpec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Population<f64>>, RunError> {
    let mut populations: Vec<Population<f64>> = Vec::new();
    for (idx, pspec) in scenario.populations.iter().enumerate() {
        let mut measure = GridMeasure::zeros(spec, domain);
        if let Placement::Blocks { blocks } = &pspec.placement {
            for b in blocks {
                measure.fill_rect(&b.region, b.density);
            }
        }
        let field = match &pspec.drive {
            Drive::Uniform { v } => PopulationField::Uniform(*v),
            Drive::Potential => PopulationField::Potential(solve_potential(
                domain,
                &spec,
                &SolverOptions::default(),
            )?),
        };
        let mut pop = Population::new(measure, field, pspec.sensing)?;
        if let Some(sources) = &pspec.repel_from {
            pop = pop.with_repulsion_sources(
                sources
                    .iter()
                    .map(|&q| {
                        if q == idx {
                            RepulsionSource::Own
                        } else {
                            RepulsionSource::Other(q)
                        }
                    })
                    .collect(),
            );
        }
        if let Some(inflow) = &pspec.inflow {
            let modulation = if inflow.modulation_amplitude > 0.0 && inflow.modulation_modes > 0 {
                Some(SpatialModulation {
                    amplitude: inflow.modulation_amplitude,
                    modes: (1..=inflow.modulation_modes)
                        .map(|k| (k as f64, rng.gen_range(0.0..std::f64::consts::TAU)))
                        .collect(),
                })
            } else {
                None
            };
            pop = pop.with_inflow(InflowProfile {
                side: inflow.side,
                span: inflow.span,
                density: inflow.density,
                schedule: inflow.schedule,
                modulation,
            });
        }
        populations.push(pop);
    }
    Ok(populations)
}

fn execute_macro(
    scenario: &Scenario,
    opts: &RunOptions,
    manifest: &mut RunManifest,
    rng: &mut ChaCha8Rng,
    recorder: &mut Recorder,
) -> Result<RunOutcome, RunError> {
    let domain = scenario.domain.build().map_err(ScenarioError::from)?;
    let spec = scenario.grid_spec()?;
    let mut populations = bind_macro_populations(scenario, &domain, spec, rng)?;

    let mut ledgers: Vec<MassLedger<f64>> = populations
        .iter()
        .map(|p| MassLedger::new(p.total_mass()))
        .collect();
    let schedule = scenario.schedule;
    let dt = schedule.dt;

    snapshot_macro(scenario, manifest, recorder, &populations, &ledgers, 0)?;
    for n in 0..schedule.n_steps {
        let t = n as f64 * dt;
        for (k, pop) in populations.iter_mut().enumerate() {
            if let Some(profile) = pop.inflow().cloned() {
                let added = inject_boundary(pop, &profile, &domain, t)?;
                ledgers[k].record_injection(added);
            }
        }
        let reports = step(&mut populations, &domain, dt)?;
        for (k, report) in reports.iter().enumerate() {
            ledgers[k].record_absorption(report.outflow);
        }
        for (k, pop) in populations.iter_mut().enumerate() {
            ledgers[k].record_absorption(absorb_at_target(pop, &domain));
        }
        let completed = n + 1;
        if completed % schedule.snapshot_stride == 0 || completed == schedule.n_steps {
            snapshot_macro(scenario, manifest, recorder, &populations, &ledgers, completed)?;
        }
    }

    let metrics_file = finish_metrics(scenario, opts, manifest, recorder)?;
    manifest.metrics_file = metrics_file;
    Ok(RunOutcome {
        manifest: manifest.clone(),
        manifest_path: PathBuf::new(),
        metric_rows: std::mem::take(&mut recorder.metric_rows),
        histogram: None,
        final_agents: None,
        final_densities: populations.iter().map(|p| p.measure().clone()).collect(),
    })
}

fn snapshot_macro(
    scenario: &Scenario,
    manifest: &mut RunManifest,
    recorder: &mut Recorder,
    populations: &[Population<f64>],
    ledgers: &[MassLedger<f64>],
    step: usize,
) -> Result<(), RunError> {
    let (path, rel) = recorder.frame_path(step);
    write_density_frame(&path, populations)?;
    manifest.frames.push(FrameRecord {
        step,
        time: step as f64 * scenario.schedule.dt,
        file: rel,
    });
    manifest.mass_ledger.push(LedgerRecord {
        step,
        interior: populations.iter().map(|p| p.total_mass()).collect(),
        injected: ledgers.iter().map(|l| l.injected).collect(),
        absorbed: ledgers.iter().map(|l| l.absorbed).collect(),
    });
    for metric in &scenario.metrics {
        match metric.as_str() {
            "lane_profile" if populations.len() >= 2 => {
                let spec = populations[0].measure().spec;
                let columns = spec.nx / 4..(3 * spec.nx) / 4;
                let lanes = lane_profile(
                    populations[0].measure(),
                    populations[1].measure(),
                    columns,
                )
                .map_err(|e| RunError::Config(e.to_string()))?;
                recorder.record(step, "lane_alternation", lanes.alternation_count as f64);
            }
            "density_components" => {
                let count = density_components(populations[0].measure(), 0.1);
                recorder.record(step, "density_components", count as f64);
            }
            "mass_ledger" => {
                for (k, (pop, ledger)) in populations.iter().zip(ledgers).enumerate() {
                    let residual = ledger.relative_residual(pop.total_mass());
                    recorder.record(step, &format!("mass_residual_rel_{k}"), residual);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Materializes the initial agents of an agent-scale scenario: placement
/// (seeded for random regions), contact separation, and heading axes.
pub fn place_agents(
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<AgentSet<f64>, RunError> {
    if scenario.populations.len() != 1 {
        return Err(RunError::Config(
            "agent-scale runs use a single population".into(),
        ));
    }
    let pspec = &scenario.populations[0];
    let sensing = pspec.sensing;
    let drive_v = match pspec.drive {
        Drive::Uniform { v } => v,
        Drive::Potential => unreachable!("rejected by validation"),
    };
    let mut positions = match &pspec.placement {
        Placement::Lattice {
            region,
            nx,
            ny,
            jitter,
        } => {
            let sx = if *nx > 1 {
                (region.max.x - region.min.x) / (*nx as f64 - 1.0)
            } else {
                0.0
            };
            let sy = if *ny > 1 {
                (region.max.y - region.min.y) / (*ny as f64 - 1.0)
            } else {
                0.0
            };
            let mut pts = Vec::with_capacity(nx * ny);
            for jy in 0..*ny {
                for jx in 0..*nx {
                    let mut p = Vec2::new(
                        if *nx > 1 {
                            region.min.x + jx as f64 * sx
                        } else {
                            region.min.x + 0.5 * (region.max.x - region.min.x)
                        },
                        if *ny > 1 {
                            region.min.y + jy as f64 * sy
                        } else {
                            region.min.y + 0.5 * (region.max.y - region.min.y)
                        },
                    );
                    if *jitter > 0.0 {
                        p.x += rng.gen_range(-jitter * sx..=jitter * sx);
                        p.y += rng.gen_range(-jitter * sy..=jitter * sy);
                    }
                    pts.push(p);
                }
            }
            pts
        }
        Placement::HexPatch {
            center,
            spacing,
            count,
            jitter,
        } => {
            let c = Vec2::new(center.0, center.1);
            let reach = (*count as f64).sqrt() as i64 + 2;
            let mut sites = Vec::new();
            for row in -reach..=reach {
                for col in -reach..=reach {
                    sites.push(Vec2::new(
                        c.x + spacing * (col as f64 + 0.5 * row as f64),
                        c.y + spacing * (0.75f64).sqrt() * row as f64,
                    ));
                }
            }
            sites.sort_by(|a, b| {
                (*a - c)
                    .norm_sq()
                    .total_cmp(&(*b - c).norm_sq())
                    .then(a.y.total_cmp(&b.y))
                    .then(a.x.total_cmp(&b.x))
            });
            sites.truncate(*count);
            if *jitter > 0.0 {
                for p in &mut sites {
                    p.x += rng.gen_range(-jitter * spacing..=jitter * spacing);
                    p.y += rng.gen_range(-jitter * spacing..=jitter * spacing);
                }
            }
            sites
        }
        Placement::Random { region, count } => (0..*count)
            .map(|_| {
                Vec2::new(
                    rng.gen_range(region.min.x..region.max.x),
                    rng.gen_range(region.min.y..region.max.y),
                )
            })
            .collect(),
        _ => unreachable!("rejected by validation"),
    };
    if sensing.body_size > 0.0 {
        enforce_separation(&mut positions, sensing.body_size)?;
    }
    let axis = drive_v.normalized().unwrap_or(Vec2::zero());
    Ok(AgentSet::with_uniform_axis(positions, axis))
}

fn execute_micro(
    scenario: &Scenario,
    opts: &RunOptions,
    manifest: &mut RunManifest,
    rng: &mut ChaCha8Rng,
    recorder: &mut Recorder,
) -> Result<RunOutcome, RunError> {
    let mut agents = place_agents(scenario, rng)?;
    let pspec = &scenario.populations[0];
    let sensing = pspec.sensing;
    let drive_v = match pspec.drive {
        Drive::Uniform { v } => v,
        Drive::Potential => unreachable!("rejected by validation"),
    };

    let schedule = scenario.schedule;
    let mut detector = (sensing.body_size > 0.0)
        .then(|| EquilibriumDetector::for_body_size(sensing.body_size));
    snapshot_micro(scenario, manifest, recorder, &agents, 0)?;
    for n in 0..schedule.n_steps {
        let next = step_agents(&agents, &sensing, ExternalDrive::Constant(drive_v), schedule.dt)?;
        let displacement = max_displacement(&agents, &next);
        agents = next;
        let completed = n + 1;
        let settled = detector
            .as_mut()
            .map(|d| d.observe(displacement))
            .unwrap_or(false);
        if settled && manifest.equilibrium_step.is_none() {
            manifest.equilibrium_step = Some(completed);
        }
        let last = completed == schedule.n_steps
            || (settled && schedule.stop_at_equilibrium);
        if completed % schedule.snapshot_stride == 0 || last {
            snapshot_micro(scenario, manifest, recorder, &agents, completed)?;
        }
        if last {
            break;
        }
    }

    let histogram = if scenario.metrics.iter().any(|m| m == "angle_distribution") {
        let hist = angle_distribution(&agents, 6);
        let mut text = String::from("bin_start_deg,count\n");
        for (b, count) in hist.counts.iter().enumerate() {
            text.push_str(&format!("{},{count}\n", b as f64 * hist.bin_width));
        }
        fs::write(opts.out_dir.join("angle_histogram.csv"), text)?;
        Some(hist)
    } else {
        None
    };

    let metrics_file = finish_metrics(scenario, opts, manifest, recorder)?;
    manifest.metrics_file = metrics_file;
    Ok(RunOutcome {
        manifest: manifest.clone(),
        manifest_path: PathBuf::new(),
        metric_rows: std::mem::take(&mut recorder.metric_rows),
        histogram,
        final_agents: Some(agents),
        final_densities: Vec::new(),
    })
}

fn snapshot_micro(
    scenario: &Scenario,
    manifest: &mut RunManifest,
    recorder: &mut Recorder,
    agents: &AgentSet<f64>,
    step: usize,
) -> Result<(), RunError> {
    let (path, rel) = recorder.frame_path(step);
    write_agent_frame(&path, agents)?;
    manifest.frames.push(FrameRecord {
        step,
        time: step as f64 * scenario.schedule.dt,
        file: rel,
    });
    for metric in &scenario.metrics {
        match metric.as_str() {
            "crystal_score" => {
                if let Ok(score) = crystal_score(agents) {
                    recorder.record(step, "crystal_interior_fraction", score.interior_fraction);
                    recorder.record(step, "crystal_nn_cv", score.nn_distance_cv);
                }
            }
            "collinearity" => {
                let c = collinearity(agents);
                recorder.record(step, "collinearity_ratio", c.ratio);
                recorder.record(step, "collinearity_bearing", c.bearing);
            }
            _ => {}
        }
    }
    Ok(())
}

fn finish_metrics(
    scenario: &Scenario,
    opts: &RunOptions,
    _manifest: &mut RunManifest,
    recorder: &mut Recorder,
) -> Result<Option<String>, RunError> {
    if scenario.metrics.is_empty() {
        return Ok(None);
    }
    let name = "metrics.csv";
    fs::write(opts.out_dir.join(name), &recorder.metrics_text)?;
    Ok(Some(name.to_string()))
}

fn write_density_frame(path: &Path, populations: &[Population<f64>]) -> Result<(), RunError> {
    let spec = populations[0].measure().spec;
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    let mut header = String::from("i,j,x,y,rho");
    for k in 1..populations.len() {
        header.push_str(&format!(",rho{}", k + 1));
    }
    writeln!(file, "{header}")?;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_center(i, j);
            let mut line = format!("{i},{j},{},{}", c.x, c.y);
            for pop in populations {
                line.push_str(&format!(",{}", pop.measure().density_at(i, j)));
            }
            writeln!(file, "{line}")?;
        }
    }
    Ok(())
}

fn write_agent_frame(path: &Path, agents: &AgentSet<f64>) -> Result<(), RunError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "agent_id,x,y")?;
    for (id, p) in agents.positions().iter().enumerate() {
        writeln!(file, "{id},{},{}", p.x, p.y)?;
    }
    Ok(())
}

/// Result of a multi-seed batch.
#[derive(Debug)]
pub struct BatchOutcome {
    pub outcomes: Vec<RunOutcome>,
    pub aggregate: Option<AngleHistogram>,
    pub aggregate_path: Option<PathBuf>,
}

/// Runs one scenario once per seed, writing each run under `seed_<n>/` and
/// aggregating angle histograms across runs in seed order.
pub fn batch(
    scenario: &Scenario,
    out_dir: &Path,
    seeds: RangeInclusive<u64>,
    overrides: &[(String, String)],
    stride: Option<usize>,
) -> Result<BatchOutcome, RunError> {
    if seeds.is_empty() {
        return Err(RunError::Config("empty seed range".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut outcomes = Vec::new();
    let mut aggregate: Option<AngleHistogram> = None;
    for seed in seeds {
        let opts = RunOptions {
            out_dir: out_dir.join(format!("seed_{seed}")),
            seed,
            overrides: overrides.to_vec(),
            stride,
        };
        let outcome = run(scenario, &opts)?;
        if let Some(hist) = &outcome.histogram {
            match &mut aggregate {
                Some(total) => total.merge(hist),
                None => aggregate = Some(hist.clone()),
            }
        }
        outcomes.push(outcome);
    }
    let aggregate_path = if let Some(hist) = &aggregate {
        let mut text = String::from("bin_start_deg,count\n");
        for (b, count) in hist.counts.iter().enumerate() {
            text.push_str(&format!("{},{count}\n", b as f64 * hist.bin_width));
        }
        let path = out_dir.join("angle_histogram_aggregate.csv");
        fs::write(&path, text)?;
        Some(path)
    } else {
        None
    };
    Ok(BatchOutcome {
        outcomes,
        aggregate,
        aggregate_path,
    })
}
