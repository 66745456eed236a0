//! Physical parameters of the medium and the nonlinear potentials.

use crate::error::{Error, Result};

/// Selects the on-site potential V(u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// V(u) = 1 - cos u
    SineGordon,
    /// V(u) = u^2/2! - u^4/4!
    KleinGordon,
    /// V(u) = lambda * u^4, lambda > 0
    LandauGinzburg { lambda: f64 },
    /// V = 0
    Zero,
}

impl PotentialKind {
    pub fn validate(&self) -> Result<()> {
        if let PotentialKind::LandauGinzburg { lambda } = self {
            if !(lambda.is_finite() && *lambda > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "LandauGinzburg requires lambda > 0 (got {lambda})"
                )));
            }
        }
        Ok(())
    }

    /// V(u)
    pub fn value(&self, u: f64) -> f64 {
        match self {
            PotentialKind::SineGordon => 1.0 - u.cos(),
            PotentialKind::KleinGordon => u * u / 2.0 - u.powi(4) / 24.0,
            PotentialKind::LandauGinzburg { lambda } => lambda * u.powi(4),
            PotentialKind::Zero => 0.0,
        }
    }

    /// V'(u)
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            PotentialKind::SineGordon => u.sin(),
            PotentialKind::KleinGordon => u - u.powi(3) / 6.0,
            PotentialKind::LandauGinzburg { lambda } => 4.0 * lambda * u.powi(3),
            PotentialKind::Zero => 0.0,
        }
    }

    /// V''(u)
    pub fn second_deriv(&self, u: f64) -> f64 {
        match self {
            PotentialKind::SineGordon => u.cos(),
            PotentialKind::KleinGordon => 1.0 - u * u / 2.0,
            PotentialKind::LandauGinzburg { lambda } => 12.0 * lambda * u * u,
            PotentialKind::Zero => 0.0,
        }
    }

    /// Strauss-Vazquez difference quotient (V(a) - V(b)) / (a - b).
    ///
    /// Falls back to the analytic limit V'((a+b)/2) when |a - b| is below
    /// `tol * max(1, |a|, |b|)`, which is where the raw quotient loses all
    /// its digits to cancellation.
    pub fn quotient(&self, a: f64, b: f64, tol: f64) -> f64 {
        if (a - b).abs() > tol * max3(1.0, a.abs(), b.abs()) {
            (self.value(a) - self.value(b)) / (a - b)
        } else {
            self.deriv(0.5 * (a + b))
        }
    }

    /// d/da of `quotient(a, b)`, with the matching analytic limit V''/2.
    pub fn quotient_deriv(&self, a: f64, b: f64, tol: f64) -> f64 {
        let d = a - b;
        if d.abs() > tol * max3(1.0, a.abs(), b.abs()) {
            (d * self.deriv(a) - (self.value(a) - self.value(b))) / (d * d)
        } else {
            0.5 * self.second_deriv(0.5 * (a + b))
        }
    }
}

fn max3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).max(c)
}

/// Default relative switch point for the difference quotients.
pub const QUOTIENT_TOL: f64 = 1e-12;

/// Coefficients of the wave equation. `mass_sq` may be negative (the mass
/// term comes squared and the underlying constant may be pure-imaginary);
/// everything else is sign-constrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Internal damping (acts through the Laplacian of the velocity).
    pub beta: f64,
    /// External damping baseline (acts on the velocity).
    pub gamma: f64,
    /// Squared relativistic mass.
    pub mass_sq: f64,
    /// Generalized Josephson current.
    pub josephson: f64,
    /// Lattice coupling coefficient c; 1.0 in continuum mode.
    pub coupling: f64,
    pub potential: PotentialKind,
}

impl MediumParams {
    pub fn new(
        beta: f64,
        gamma: f64,
        mass_sq: f64,
        josephson: f64,
        coupling: f64,
        potential: PotentialKind,
    ) -> Result<Self> {
        let p = Self { beta, gamma, mass_sq, josephson, coupling, potential };
        p.validate()?;
        Ok(p)
    }

    /// Undamped sine-Gordon medium with unit coupling.
    pub fn sine_gordon() -> Self {
        Self {
            beta: 0.0,
            gamma: 0.0,
            mass_sq: 0.0,
            josephson: 0.0,
            coupling: 1.0,
            potential: PotentialKind::SineGordon,
        }
    }

    /// Linear medium (V = 0) with the given squared mass.
    pub fn linear(mass_sq: f64) -> Self {
        Self {
            beta: 0.0,
            gamma: 0.0,
            mass_sq,
            josephson: 0.0,
            coupling: 1.0,
            potential: PotentialKind::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be >= 0 (got {})", self.beta)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0 (got {})", self.gamma)));
        }
        if !self.mass_sq.is_finite() {
            return Err(Error::InvalidParameter(format!("mass_sq must be finite (got {})", self.mass_sq)));
        }
        if !(self.josephson.is_finite() && self.josephson >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "josephson must be >= 0 (got {})",
                self.josephson
            )));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be > 0 (got {})",
                self.coupling
            )));
        }
        self.potential.validate()
    }
}

/// Squared frequency of the linear dispersion relation at wavenumbers
/// (xi, zeta, eta): m^2 + 1 + 4(sin^2(xi/2) + sin^2(zeta/2) + sin^2(eta/2)).
/// The forbidden band-gap is omega < sqrt(m^2 + 1).
pub fn dispersion_omega_sq(xi: f64, zeta: f64, eta: f64, mass_sq: f64) -> f64 {
    let s = |x: f64| (x / 2.0).sin().powi(2);
    mass_sq + 1.0 + 4.0 * (s(xi) + s(zeta) + s(eta))
}
