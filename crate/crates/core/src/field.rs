//! One time level of the scalar field on the (N+2)^3 grid.
//!
//! Index convention per axis: 0 is the driven (Dirichlet) layer adjacent
//! to the origin, 1..=N are interior, N+1 is the Neumann ghost layer that
//! mirrors layer N.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldLevel {
    n: usize,
    ext: usize,
    data: Vec<f64>,
}

impl FieldLevel {
    pub fn zeros(n: usize) -> Self {
        let ext = n + 2;
        Self { n, ext, data: vec![0.0; ext * ext * ext] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn ext(&self) -> usize {
        self.ext
    }

    #[inline]
    pub fn idx(&self, m: usize, nn: usize, p: usize) -> usize {
        (m * self.ext + nn) * self.ext + p
    }

    #[inline]
    pub fn at(&self, m: usize, nn: usize, p: usize) -> f64 {
        self.data[self.idx(m, nn, p)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, nn: usize, p: usize, v: f64) {
        let i = self.idx(m, nn, p);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &FieldLevel) -> bool {
        self.n == other.n
    }

    pub fn check_same_shape(&self, other: &FieldLevel, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {} vs {} interior nodes",
                self.n, other.n
            )))
        }
    }

    /// Write `value` onto the three driven faces m = 0, n = 0, p = 0
    /// (shared edges and corners included; the faces carry one signal).
    pub fn apply_dirichlet(&mut self, value: f64) {
        let e = self.ext;
        for a in 0..e {
            for b in 0..e {
                let i0 = self.idx(0, a, b);
                self.data[i0] = value;
                let i1 = self.idx(a, 0, b);
                self.data[i1] = value;
                let i2 = self.idx(a, b, 0);
                self.data[i2] = value;
            }
        }
    }

    /// Copy layer N onto ghost layer N+1 along each axis (discrete Neumann).
    pub fn apply_neumann_ghosts(&mut self) {
        let e = self.ext;
        let n = self.n;
        for a in 0..e {
            for b in 0..e {
                let v = self.at(n, a, b);
                self.set(n + 1, a, b, v);
                let v = self.at(a, n, b);
                self.set(a, n + 1, b, v);
                let v = self.at(a, b, n);
                self.set(a, b, n + 1, v);
            }
        }
    }

    /// Dirichlet faces then Neumann ghosts, the per-step boundary pass.
    pub fn apply_boundary(&mut self, dirichlet_value: f64) {
        self.apply_dirichlet(dirichlet_value);
        self.apply_neumann_ghosts();
    }

    /// Check the ghost-layer mirror equalities hold exactly.
    pub fn neumann_ghosts_hold(&self) -> bool {
        let n = self.n;
        for a in 1..=n {
            for b in 1..=n {
                if self.at(n + 1, a, b) != self.at(n, a, b)
                    || self.at(a, n + 1, b) != self.at(a, n, b)
                    || self.at(a, b, n + 1) != self.at(a, b, n)
                {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Fill interior nodes from a function of the node coordinates.
    pub fn fill_interior(&mut self, dx: f64, dy: f64, dz: f64, f: impl Fn(f64, f64, f64) -> f64) {
        for m in 1..=self.n {
            for nn in 1..=self.n {
                for p in 1..=self.n {
                    let v = f(m as f64 * dx, nn as f64 * dy, p as f64 * dz);
                    self.set(m, nn, p, v);
                }
            }
        }
    }
}
