//! Spatial and temporal discretization parameters.

use crate::error::{Error, Result};

/// Cubic grid with N interior nodes per axis plus boundary layers at
/// indices 0 and N+1; the implied domain is [0, (N+1) dx] per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub n: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Grid3 {
    pub fn new(n: usize, dx: f64, dy: f64, dz: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs n >= 1 interior nodes".into()));
        }
        for (name, v) in [("dx", dx), ("dy", dy), ("dz", dz)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0 (got {v})")));
            }
        }
        Ok(Self { n, dx, dy, dz })
    }

    /// Unit spatial steps, the lattice-mode convention.
    pub fn lattice(n: usize) -> Result<Self> {
        Self::new(n, 1.0, 1.0, 1.0)
    }

    /// Nodes per axis including both boundary layers.
    #[inline]
    pub fn ext(&self) -> usize {
        self.n + 2
    }

    /// Total storage per field level.
    pub fn total_nodes(&self) -> usize {
        self.ext().pow(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// R^2 = 1/dx^2 + 1/dy^2 + 1/dz^2.
    pub fn r_sq(&self) -> f64 {
        1.0 / (self.dx * self.dx) + 1.0 / (self.dy * self.dy) + 1.0 / (self.dz * self.dz)
    }

    pub fn is_unit_steps(&self) -> bool {
        self.dx == 1.0 && self.dy == 1.0 && self.dz == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0 (got {dt})")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        Ok(Self { dt, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }
}
