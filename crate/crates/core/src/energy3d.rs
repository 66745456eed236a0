//! Discrete site Hamiltonian, total energy, and the exact step-to-step
//! energy-rate identity for the 3D scheme.
//!
//! The energy at step k is built from levels k and k+1. For every triple
//! of levels that satisfies the scheme and the boundary conditions,
//! (E^k - E^{k-1})/dt equals, to rounding, the sum of a driven-face flux
//! term, two beta dissipation sums, and a gamma dissipation sum; see
//! [`energy_rate_report`]. That equality is this crate's central
//! correctness check.

use crate::damping::DampingField;
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Parallelism};
use crate::field::FieldLevel;
use crate::grid::Grid3;
use crate::medium::MediumParams;
use crate::solver3d;

/// Both sides of the discrete energy-rate identity at one step.
#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    /// E^k, from levels (curr, next).
    pub e_curr: f64,
    /// E^{k-1}, from levels (prev, curr).
    pub e_prev: f64,
    /// (E^k - E^{k-1}) / dt.
    pub rate_lhs: f64,
    /// Flux + dissipation sums evaluated on the same triple.
    pub rate_rhs: f64,
    /// |rate_lhs - rate_rhs|.
    pub residual: f64,
}

/// History of the local Hamiltonian at one monitored site.
#[derive(Debug, Clone)]
pub struct SiteSeries {
    pub site: (usize, usize, usize),
    pub times: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    /// Left-endpoint Riemann sum of H over the recorded steps.
    pub integral: f64,
}

impl SiteSeries {
    pub fn new(site: (usize, usize, usize)) -> Self {
        Self { site, times: Vec::new(), hamiltonian: Vec::new(), integral: 0.0 }
    }

    pub fn record(&mut self, t: f64, h: f64, dt: f64) {
        self.times.push(t);
        self.hamiltonian.push(h);
        self.integral += h * dt;
    }
}

/// H^k at one interior site, from levels u^k (`curr`) and u^{k+1} (`next`).
/// The three spatial products carry c^2, which is 1 in continuum mode.
pub fn site_hamiltonian(
    curr: &FieldLevel,
    next: &FieldLevel,
    site: (usize, usize, usize),
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
) -> Result<f64> {
    let (m, n, p) = site;
    if m < 1 || m > grid.n || n < 1 || n > grid.n || p < 1 || p > grid.n {
        return Err(Error::SiteOutOfRange { m, n, p, max_n: grid.n });
    }
    curr.check_same_shape(next, "site_hamiltonian levels")?;
    Ok(site_hamiltonian_unchecked(curr, next, m, n, p, params, grid, dt))
}

#[inline]
fn site_hamiltonian_unchecked(
    curr: &FieldLevel,
    next: &FieldLevel,
    m: usize,
    n: usize,
    p: usize,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
) -> f64 {
    let c2 = params.coupling * params.coupling;
    let u0 = curr.at(m, n, p);
    let u1 = next.at(m, n, p);
    let kinetic = 0.5 * ((u1 - u0) / dt).powi(2);
    let gx = (next.at(m + 1, n, p) - u1) * (curr.at(m + 1, n, p) - u0) / (grid.dx * grid.dx);
    let gy = (next.at(m, n + 1, p) - u1) * (curr.at(m, n + 1, p) - u0) / (grid.dy * grid.dy);
    let gz = (next.at(m, n, p + 1) - u1) * (curr.at(m, n, p + 1) - u0) / (grid.dz * grid.dz);
    let gradient = 0.5 * c2 * (gx + gy + gz);
    let mass = 0.25 * params.mass_sq * (u1 * u1 + u0 * u0);
    let pot = 0.5 * (params.potential.value(u1) + params.potential.value(u0));
    let jterm = -0.5 * params.josephson * (u1 + u0);
    kinetic + gradient + mass + pot + jterm
}

/// E^k: interior Hamiltonian sum plus the three driven-face coupling sums,
/// all scaled by the cell volume.
pub fn total_energy(
    curr: &FieldLevel,
    next: &FieldLevel,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
    exec: Parallelism,
) -> Result<f64> {
    curr.check_same_shape(next, "total_energy levels")?;
    if curr.n() != grid.n {
        return Err(Error::DimensionMismatch("levels do not match the grid".into()));
    }
    let n = grid.n;
    let vol = grid.cell_volume();
    let interior = exec.sum_slabs(n, |mi| {
        let m = mi + 1;
        let mut acc = 0.0;
        for nn in 1..=n {
            for p in 1..=n {
                acc += site_hamiltonian_unchecked(curr, next, m, nn, p, params, grid, dt);
            }
        }
        acc
    });
    let c2 = params.coupling * params.coupling;
    let mut face = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            face += (next.at(1, i, j) - next.at(0, i, j)) * (curr.at(1, i, j) - curr.at(0, i, j))
                / (grid.dx * grid.dx);
            face += (next.at(i, 1, j) - next.at(i, 0, j)) * (curr.at(i, 1, j) - curr.at(i, 0, j))
                / (grid.dy * grid.dy);
            face += (next.at(i, j, 1) - next.at(i, j, 0)) * (curr.at(i, j, 1) - curr.at(i, j, 0))
                / (grid.dz * grid.dz);
        }
    }
    Ok((interior + 0.5 * c2 * face) * vol)
}

/// Right-hand side of the discrete rate identity on the triple
/// (prev, curr, next) = (u^{k-1}, u^k, u^{k+1}).
pub fn rate_rhs(
    prev: &FieldLevel,
    curr: &FieldLevel,
    next: &FieldLevel,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
    gamma: &DampingField,
) -> f64 {
    let n = grid.n;
    let c2 = params.coupling * params.coupling;
    let (dx2, dy2, dz2) = (grid.dx * grid.dx, grid.dy * grid.dy, grid.dz * grid.dz);
    let half_idt = 0.5 / dt;
    let dtv = |m: usize, nn: usize, p: usize| next.at(m, nn, p) - prev.at(m, nn, p);

    // Driven-face flux, with the coupling factor of the lattice energy.
    let mut flux = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            flux += (curr.at(1, i, j) - curr.at(0, i, j)) / dx2 * dtv(0, i, j) * half_idt;
            flux += (curr.at(i, 1, j) - curr.at(i, 0, j)) / dy2 * dtv(i, 0, j) * half_idt;
            flux += (curr.at(i, j, 1) - curr.at(i, j, 0)) / dz2 * dtv(i, j, 0) * half_idt;
        }
    }
    flux *= -c2;

    // Interior beta sum: squared mixed differences on a backward stencil.
    let mut beta_interior = Vec::with_capacity(n);
    let mut gamma_sum = Vec::with_capacity(n);
    for m in 1..=n {
        let mut bacc = 0.0;
        let mut gacc = 0.0;
        for nn in 1..=n {
            for p in 1..=n {
                let d = dtv(m, nn, p);
                let ddx = (d - dtv(m - 1, nn, p)) / (2.0 * grid.dx * dt);
                let ddy = (d - dtv(m, nn - 1, p)) / (2.0 * grid.dy * dt);
                let ddz = (d - dtv(m, nn, p - 1)) / (2.0 * grid.dz * dt);
                bacc += ddx * ddx + ddy * ddy + ddz * ddz;
                let v = d * half_idt;
                gacc += gamma.at(m, nn, p) * v * v;
            }
        }
        beta_interior.push(bacc);
        gamma_sum.push(gacc);
    }
    let beta_interior = pairwise_sum(&beta_interior);
    let gamma_sum = pairwise_sum(&gamma_sum);

    // Face beta sum over the driven layers.
    let mut beta_face = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            beta_face += (dtv(1, i, j) - dtv(0, i, j)) * dtv(0, i, j) / (2.0 * grid.dx * dt).powi(2);
            beta_face += (dtv(i, 1, j) - dtv(i, 0, j)) * dtv(i, 0, j) / (2.0 * grid.dy * dt).powi(2);
            beta_face += (dtv(i, j, 1) - dtv(i, j, 0)) * dtv(i, j, 0) / (2.0 * grid.dz * dt).powi(2);
        }
    }

    (flux - params.beta * (beta_interior + beta_face) - gamma_sum) * grid.cell_volume()
}

/// Evaluate both sides of the rate identity on a scheme-satisfying triple.
/// `tol` is the Newton residual tolerance the levels were solved to; a
/// triple whose interior residual exceeds 100 * tol is rejected, since the
/// identity only certifies solutions of the scheme.
#[allow(clippy::too_many_arguments)]
pub fn energy_rate_report(
    prev: &FieldLevel,
    curr: &FieldLevel,
    next: &FieldLevel,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
    gamma: &DampingField,
    tol: f64,
    exec: Parallelism,
) -> Result<EnergyReport> {
    let res = solver3d::scheme_residual(prev, curr, next, params, grid, dt, gamma)?;
    let max_res = solver3d::max_abs(&res);
    let limit = 100.0 * tol;
    if max_res > limit {
        return Err(Error::IdentityNotApplicable { max_residual: max_res, limit });
    }
    let e_curr = total_energy(curr, next, params, grid, dt, exec)?;
    let e_prev = total_energy(prev, curr, params, grid, dt, exec)?;
    let rate_lhs = (e_curr - e_prev) / dt;
    let rhs = rate_rhs(prev, curr, next, params, grid, dt, gamma);
    Ok(EnergyReport { e_curr, e_prev, rate_lhs, rate_rhs: rhs, residual: (rate_lhs - rhs).abs() })
}

/// Rate right-hand side of the semi-discrete lattice identity, with time
/// derivatives replaced by centered differences over 2 dt. Requires unit
/// spatial steps; used as a consistency diagnostic against
/// [`energy_rate_report`].
pub fn lattice_rate_rhs(
    prev: &FieldLevel,
    curr: &FieldLevel,
    next: &FieldLevel,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
    gamma: &DampingField,
) -> Result<f64> {
    if !grid.is_unit_steps() {
        return Err(Error::NotLatticeMode { dx: grid.dx, dy: grid.dy, dz: grid.dz });
    }
    prev.check_same_shape(curr, "lattice_rate_rhs levels")?;
    curr.check_same_shape(next, "lattice_rate_rhs levels")?;
    let n = grid.n;
    let c2 = params.coupling * params.coupling;
    let half_idt = 0.5 / dt;
    let dtv = |m: usize, nn: usize, p: usize| next.at(m, nn, p) - prev.at(m, nn, p);

    let mut flux = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            flux += (curr.at(1, i, j) - curr.at(0, i, j)) * dtv(0, i, j) * half_idt;
            flux += (curr.at(i, 1, j) - curr.at(i, 0, j)) * dtv(i, 0, j) * half_idt;
            flux += (curr.at(i, j, 1) - curr.at(i, j, 0)) * dtv(i, j, 0) * half_idt;
        }
    }

    let mut beta_interior = 0.0;
    let mut gamma_sum = 0.0;
    for m in 1..=n {
        for nn in 1..=n {
            for p in 1..=n {
                let d = dtv(m, nn, p);
                let ddx = (d - dtv(m - 1, nn, p)) * half_idt;
                let ddy = (d - dtv(m, nn - 1, p)) * half_idt;
                let ddz = (d - dtv(m, nn, p - 1)) * half_idt;
                beta_interior += ddx * ddx + ddy * ddy + ddz * ddz;
                let v = d * half_idt;
                gamma_sum += gamma.at(m, nn, p) * v * v;
            }
        }
    }

    let mut beta_face = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            beta_face += (dtv(1, i, j) - dtv(0, i, j)) * half_idt * dtv(0, i, j) * half_idt;
            beta_face += (dtv(i, 1, j) - dtv(i, 0, j)) * half_idt * dtv(i, 0, j) * half_idt;
            beta_face += (dtv(i, j, 1) - dtv(i, j, 0)) * half_idt * dtv(i, j, 0) * half_idt;
        }
    }

    Ok(-c2 * flux - params.beta * (beta_interior + beta_face) - gamma_sum)
}
