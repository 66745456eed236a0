//! Finite-difference solvers for a family of dissipative nonlinear wave
//! equations (sine-Gordon / Klein-Gordon / Landau-Ginzburg class) on the
//! first-octant cube and in radial symmetry.
//!
//! The schemes come with discrete energy functionals whose step-to-step
//! rate of change satisfies an exact algebraic identity; [`energy3d`]
//! evaluates both sides of that identity so a simulation can certify its
//! own energy bookkeeping at every step.

pub mod damping;
pub mod driving;
pub mod energy3d;
pub mod error;
pub mod exec;
pub mod field;
pub mod grid;
pub mod medium;
pub mod radial;
pub mod solver3d;
pub mod stability;

pub use damping::DampingProfile;
pub use driving::DrivingSignal;
pub use error::Error;
pub use exec::Parallelism;
pub use field::FieldLevel;
pub use grid::{Grid3, TimeGrid};
pub use medium::{dispersion_omega_sq, MediumParams, PotentialKind};
pub use solver3d::{NewtonSettings, SimState3D, Solver3D};
