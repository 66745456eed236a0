//! Necessary stability conditions for both schemes.
//!
//! The conditions are necessary, not sufficient: a violated report
//! guarantees instability of the linearized scheme, a satisfied one does
//! not certify stability. Callers should warn, not refuse, unless running
//! in strict mode.

use crate::grid::Grid3;
use crate::medium::MediumParams;

#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Strict inequality lhs < rhs; the equality case reports false.
    pub satisfied: bool,
    pub margin: f64,
    /// R^2 = 1/dx^2 + 1/dy^2 + 1/dz^2 (Cartesian check only).
    pub r_sq: Option<f64>,
    /// True when lhs = rhs exactly, the boundary of the condition.
    pub boundary_case: bool,
}

/// Cartesian scheme: 4 R^2 [(dt)^2 - beta dt] - [gamma + m^2 dt] dt < 4,
/// with V treated as zero and J ignored (the proposition's hypothesis).
pub fn check_cartesian(params: &MediumParams, grid: &Grid3, dt: f64) -> StabilityReport {
    let r_sq = grid.r_sq();
    let lhs = 4.0 * r_sq * (dt * dt - params.beta * dt) - (params.gamma + params.mass_sq * dt) * dt;
    let rhs = 4.0;
    report(lhs, rhs, Some(r_sq))
}

/// Radial scheme: (dt/dr)^2 < 1 + gamma dt/4 + beta dt/dr^2 + m^2 dt^2/4.
/// With an absorbing profile, pass the profile maximum as `params.gamma`.
pub fn check_radial(params: &MediumParams, dr: f64, dt: f64) -> StabilityReport {
    let lhs = (dt / dr) * (dt / dr);
    let rhs = 1.0 + params.gamma * dt / 4.0 + params.beta * dt / (dr * dr)
        + params.mass_sq * dt * dt / 4.0;
    report(lhs, rhs, None)
}

fn report(lhs: f64, rhs: f64, r_sq: Option<f64>) -> StabilityReport {
    let margin = rhs - lhs;
    StabilityReport { lhs, rhs, satisfied: margin > 0.0, margin, r_sq, boundary_case: margin == 0.0 }
}
