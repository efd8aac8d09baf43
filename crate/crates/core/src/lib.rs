//! Two-scale simulation engine for self-organizing groups of intelligent
//! particles (pedestrian crowds, animal groups).
//!
//! The same first-order dynamics drive both scales: every particle moves with
//! a velocity `v = w + nu`, where `w` is an external desired velocity (either
//! a constant drift or the normalized gradient of a harmonic potential) and
//! `nu` is a nonlocal interaction velocity built from anisotropic cohesion
//! and repulsion kernels. At the macroscopic scale the crowd is a density on
//! a uniform grid advanced by a finite-volume push-forward scheme; at the
//! microscopic scale it is a finite set of agents advanced by explicit Euler
//! steps with a hard body-size separation constraint.
//!
//! All numerical modules are generic over the floating-point scalar through
//! the [`Scalar`] trait; [`Real`] is the concrete type used by the shipped
//! scenarios and the command line runner.

pub mod field;
pub mod geometry;
pub mod kernel;
pub mod macro_engine;
pub mod metrics;
pub mod micro_engine;
pub mod runner;
pub mod scalar;
pub mod scenarios;

pub use scalar::Scalar;

/// Scalar type used by the built-in scenarios and the CLI.
pub type Real = f64;

/// Two-dimensional vector over the default scalar.
pub type Vec2r = geometry::Vec2<Real>;

/// Axis-aligned rectangle over the default scalar.
pub type Rectr = geometry::Rect<Real>;
