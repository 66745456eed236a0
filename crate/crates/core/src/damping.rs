//! Spatial damping profiles, including the absorbing boundary layers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingProfile {
    /// gamma everywhere.
    Uniform,
    /// Absorbing layer on the cubic lattice: the farthest ~n0/2 layers from
    /// the origin ramp from gamma to gamma + 1 along each axis,
    ///   gamma + (1/6) [3 + sum_axis tanh((2q - 2N + n0) / 6)].
    LatticeAbsorbing { n0: usize },
    /// Radial absorbing layer  gamma + (1/2){1 + tanh[width (r - center)]}
    /// on onset <= r <= outer, plain gamma below onset.
    RadialAbsorbing { onset: f64, center: f64, width: f64, outer: f64 },
}

impl DampingProfile {
    /// The paper-standard radial layer: onset 5, center 5.5, width 8, outer 6.
    pub fn radial_absorbing_default() -> Self {
        DampingProfile::RadialAbsorbing { onset: 5.0, center: 5.5, width: 8.0, outer: 6.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DampingProfile::Uniform => Ok(()),
            DampingProfile::LatticeAbsorbing { n0 } => {
                if *n0 == 0 {
                    Err(Error::InvalidParameter("lattice absorbing layer needs n0 >= 1".into()))
                } else {
                    Ok(())
                }
            }
            DampingProfile::RadialAbsorbing { onset, center, width, outer } => {
                if !(onset.is_finite() && center.is_finite() && width.is_finite() && outer.is_finite()) {
                    return Err(Error::InvalidParameter("radial profile parameters must be finite".into()));
                }
                if *outer <= *onset || *width <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "radial profile needs outer > onset and width > 0 (got onset {onset}, outer {outer}, width {width})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Site-local gamma on the (N+2)^3 grid. `gamma` is the baseline from
    /// the medium; indices range over [0, N+1].
    pub fn gamma_at_site(&self, gamma: f64, n: usize, m: usize, nn: usize, p: usize) -> Result<f64> {
        let max = n + 1;
        if m > max || nn > max || p > max {
            return Err(Error::SiteOutOfRange { m, n: nn, p, max_n: n });
        }
        Ok(match self {
            DampingProfile::Uniform => gamma,
            DampingProfile::LatticeAbsorbing { n0 } => {
                let ramp = |q: usize| {
                    ((2.0 * q as f64 - 2.0 * n as f64 + *n0 as f64) / 6.0).tanh()
                };
                gamma + (3.0 + ramp(m) + ramp(nn) + ramp(p)) / 6.0
            }
            DampingProfile::RadialAbsorbing { .. } => {
                return Err(Error::InvalidParameter(
                    "radial absorbing profile is evaluated by radius, not by lattice site".into(),
                ))
            }
        })
    }

    /// Radius-local gamma; r must lie in [0, outer] for the radial profile.
    pub fn gamma_at_radius(&self, gamma: f64, r: f64) -> Result<f64> {
        match self {
            DampingProfile::Uniform => Ok(gamma),
            DampingProfile::RadialAbsorbing { onset, center, width, outer } => {
                if r < 0.0 || r > *outer + 1e-12 {
                    return Err(Error::RadiusOutOfRange { r, limit: *outer });
                }
                if r < *onset {
                    Ok(gamma)
                } else {
                    Ok(gamma + 0.5 * (1.0 + (width * (r - center)).tanh()))
                }
            }
            DampingProfile::LatticeAbsorbing { .. } => Err(Error::InvalidParameter(
                "lattice absorbing profile is evaluated by site, not by radius".into(),
            )),
        }
    }

    /// Supremum of the profile over its domain (used by stability checks).
    pub fn max_gamma(&self, gamma: f64) -> f64 {
        match self {
            DampingProfile::Uniform => gamma,
            // All three tanh terms approach 1 at the far corner.
            DampingProfile::LatticeAbsorbing { .. } => gamma + 1.0,
            DampingProfile::RadialAbsorbing { center, width, outer, .. } => {
                gamma + 0.5 * (1.0 + (width * (outer - center)).tanh())
            }
        }
    }
}

/// Precomputed site-local gamma over the interior of an (N+2)^3 grid,
/// indexed by (m-1, n-1, p-1).
#[derive(Debug, Clone)]
pub struct DampingField {
    n: usize,
    values: Vec<f64>,
}

impl DampingField {
    pub fn build(profile: &DampingProfile, gamma: f64, n: usize) -> Result<Self> {
        let mut values = vec![0.0; n * n * n];
        for m in 1..=n {
            for nn in 1..=n {
                for p in 1..=n {
                    values[((m - 1) * n + (nn - 1)) * n + (p - 1)] =
                        profile.gamma_at_site(gamma, n, m, nn, p)?;
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn uniform(gamma: f64, n: usize) -> Self {
        Self { n, values: vec![gamma; n * n * n] }
    }

    #[inline]
    pub fn at(&self, m: usize, nn: usize, p: usize) -> f64 {
        debug_assert!(m >= 1 && m <= self.n && nn >= 1 && nn <= self.n && p >= 1 && p <= self.n);
        self.values[((m - 1) * self.n + (nn - 1)) * self.n + (p - 1)]
    }
}
