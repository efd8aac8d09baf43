//! Microscopic agent dynamics: explicit Euler steps of the intelligent
//! velocity plus a hard body-size separation constraint.

use thiserror::Error;

use crate::field::PotentialField;
use crate::geometry::Vec2;
use crate::kernel::{intelligent_velocity_micro, KernelError, SensingConfig};
use crate::scalar::Scalar;

/// Errors raised by the microscopic engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MicroError {
    #[error("separation enforcement did not converge after {sweeps} sweeps")]
    SeparationFailure { sweeps: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Finite set of agents with per-agent sensing axes.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSet<S> {
    positions: Vec<Vec2<S>>,
    axes: Vec<Vec2<S>>,
}

impl<S: Scalar> AgentSet<S> {
    pub fn new(positions: Vec<Vec2<S>>, axes: Vec<Vec2<S>>) -> Self {
        assert_eq!(positions.len(), axes.len());
        Self { positions, axes }
    }

    /// All agents share one sensing axis.
    pub fn with_uniform_axis(positions: Vec<Vec2<S>>, axis: Vec2<S>) -> Self {
        let axes = vec![axis; positions.len()];
        Self { positions, axes }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec2<S>] {
        &self.positions
    }

    pub fn axes(&self) -> &[Vec2<S>] {
        &self.axes
    }

    pub fn position(&self, j: usize) -> Vec2<S> {
        self.positions[j]
    }

    pub fn axis(&self, j: usize) -> Vec2<S> {
        self.axes[j]
    }

    pub fn centroid(&self) -> Vec2<S> {
        let mut c = Vec2::zero();
        for &p in &self.positions {
            c += p;
        }
        c / S::from_count(self.positions.len().max(1))
    }

    pub fn min_pairwise_distance(&self) -> S {
        let mut best = S::infinity();
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                best = best.min((self.positions[i] - self.positions[j]).norm());
            }
        }
        best
    }
}

/// External drive sampled at agent positions.
#[derive(Debug, Clone, Copy)]
pub enum ExternalDrive<'a, S> {
    Constant(Vec2<S>),
    Field(&'a PotentialField<S>),
}

impl<S: Scalar> ExternalDrive<'_, S> {
    pub fn at(&self, p: Vec2<S>) -> Vec2<S> {
        match self {
            ExternalDrive::Constant(w) => *w,
            ExternalDrive::Field(f) => match f.spec.cell_of(p) {
                Some((i, j)) => f.velocity_at(i, j),
                None => Vec2::zero(),
            },
        }
    }
}

/// Advances all agents synchronously by one explicit Euler step and then
/// enforces the body-size separation.
pub fn step_agents<S: Scalar>(
    agents: &AgentSet<S>,
    cfg: &SensingConfig<S>,
    drive: ExternalDrive<'_, S>,
    dt: S,
) -> Result<AgentSet<S>, MicroError> {
    let mut next = Vec::with_capacity(agents.len());
    for j in 0..agents.len() {
        let nu = intelligent_velocity_micro(j, agents, cfg)?;
        let v = drive.at(agents.position(j)) + nu;
        next.push(agents.position(j) + v * dt);
    }
    if cfg.body_size > S::zero() {
        enforce_separation(&mut next, cfg.body_size)?;
    }
    Ok(AgentSet::new(next, agents.axes.clone()))
}

/// Pushes every violating pair apart symmetrically to distance `ell`,
/// sweeping in index order until no pair is closer than `ell*(1 - 1e-9)`.
pub fn enforce_separation<S: Scalar>(positions: &mut [Vec2<S>], ell: S) -> Result<(), MicroError> {
    if ell <= S::zero() {
        return Ok(());
    }
    let act_below = ell * (S::one() - S::from_f64c(1e-9));
    let half = S::from_f64c(0.5);
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut any = false;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let delta = positions[j] - positions[i];
                let d = delta.norm();
                if d >= act_below {
                    continue;
                }
                any = true;
                let dir = delta.normalized().unwrap_or(Vec2::new(S::one(), S::zero()));
                let push = dir * ((ell - d) * half);
                positions[i] -= push;
                positions[j] += push;
            }
        }
        if !any {
            return Ok(());
        }
    }
    Err(MicroError::SeparationFailure { sweeps: MAX_SWEEPS })
}

/// Declares equilibrium once the per-step maximum displacement stays below a
/// threshold for a run of consecutive steps.
#[derive(Debug, Clone)]
pub struct EquilibriumDetector<S> {
    pub threshold: S,
    pub required: usize,
    streak: usize,
}

impl<S: Scalar> EquilibriumDetector<S> {
    /// Displacement threshold `1e-6 * ell` held for 50 consecutive steps.
    pub fn for_body_size(ell: S) -> Self {
        Self {
            threshold: ell * S::from_f64c(1e-6),
            required: 50,
            streak: 0,
        }
    }

    /// Feeds one step's maximum displacement; true once equilibrium holds.
    pub fn observe(&mut self, max_displacement: S) -> bool {
        if max_displacement < self.threshold {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.required
    }
}

/// Largest per-agent displacement between two configurations.
pub fn max_displacement<S: Scalar>(before: &AgentSet<S>, after: &AgentSet<S>) -> S {
    before
        .positions()
        .iter()
        .zip(after.positions())
        .map(|(a, b)| (*b - *a).norm())
        .fold(S::zero(), S::max)
}
