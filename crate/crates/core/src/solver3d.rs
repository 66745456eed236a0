//! Time stepping for the 3D scheme on the first-octant cube.
//!
//! One step advances levels (u^{k-1}, u^k) to u^{k+1} by zeroing, at every
//! interior site, the residual
//!
//!   (u+ - 2u0 + u-)/dt^2  -  c^2 L(u0)  -  (beta/(2 dt)) [L(u+) - L(u-)]
//!   + gamma_s (u+ - u-)/(2 dt)  +  (m^2/2)(u+ + u-)
//!   + (V(u+) - V(u-))/(u+ - u-)  -  J
//!
//! where L is the 7-point Laplacian divided by the squared steps and
//! gamma_s is the site-local damping. With beta = 0 the sites decouple and
//! each solves a scalar nonlinear equation (the explicit path); with
//! beta > 0 a global Newton iteration couples nearest neighbors through
//! the beta term only (the implicit path).

use crate::damping::{DampingField, DampingProfile};
use crate::driving::DrivingSignal;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::FieldLevel;
use crate::grid::{Grid3, TimeGrid};
use crate::medium::{MediumParams, PotentialKind, QUOTIENT_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub linear_tol: f64,
    pub linear_max_iters: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol_residual: 1e-12, max_iters: 50, linear_tol: 1e-14, linear_max_iters: 500 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.linear_tol > 0.0) {
            return Err(Error::InvalidParameter("Newton tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.linear_max_iters == 0 {
            return Err(Error::InvalidParameter("Newton iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Flatten (m, n, p) on the (N+2)^3 grid to the 1-based linear index
/// m (N+2)^2 + n (N+2) + p + 1.
pub fn index_map(m: usize, n: usize, p: usize, big_n: usize) -> Result<usize> {
    let e = big_n + 2;
    if m > big_n + 1 || n > big_n + 1 || p > big_n + 1 {
        return Err(Error::SiteOutOfRange { m, n, p, max_n: big_n });
    }
    Ok(m * e * e + n * e + p + 1)
}

/// Two rolling time levels plus everything needed to advance them.
#[derive(Debug, Clone)]
pub struct SimState3D {
    pub prev: FieldLevel,
    pub curr: FieldLevel,
    /// Index k of `curr`; `prev` sits at k-1.
    pub step_index: usize,
    pub params: MediumParams,
    pub grid: Grid3,
    pub time: TimeGrid,
    pub damping: DampingProfile,
    pub signal: DrivingSignal,
}

impl SimState3D {
    /// Start from rest: u^0 = 0, u^1 = 0 interior, boundaries driven at
    /// t_0 and t_1. The clock runs t_k = k dt - warmup.
    pub fn from_rest(
        params: MediumParams,
        grid: Grid3,
        time: TimeGrid,
        damping: DampingProfile,
        signal: DrivingSignal,
    ) -> Result<Self> {
        Self::from_initial(params, grid, time, damping, signal, |_, _, _| 0.0, |_, _, _| 0.0)
    }

    /// Start from an initial displacement and velocity field; the second
    /// level is the first-order start u^1 = u^0 + dt * velocity.
    pub fn from_initial(
        params: MediumParams,
        grid: Grid3,
        time: TimeGrid,
        damping: DampingProfile,
        signal: DrivingSignal,
        displacement: impl Fn(f64, f64, f64) -> f64,
        velocity: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        params.validate()?;
        damping.validate()?;
        signal.validate()?;
        let mut prev = FieldLevel::zeros(grid.n);
        prev.fill_interior(grid.dx, grid.dy, grid.dz, &displacement);
        let mut curr = prev.clone();
        for m in 1..=grid.n {
            for n in 1..=grid.n {
                for p in 1..=grid.n {
                    let (x, y, z) = (m as f64 * grid.dx, n as f64 * grid.dy, p as f64 * grid.dz);
                    let v = curr.at(m, n, p) + time.dt * velocity(x, y, z);
                    curr.set(m, n, p, v);
                }
            }
        }
        let warmup = signal.warmup();
        prev.apply_boundary(signal.eval(-warmup));
        curr.apply_boundary(signal.eval(time.dt - warmup));
        Ok(Self { prev, curr, step_index: 1, params, grid, time, damping, signal })
    }

    /// Adopt two explicitly built levels (boundaries are applied here).
    pub fn from_levels(
        prev: FieldLevel,
        curr: FieldLevel,
        params: MediumParams,
        grid: Grid3,
        time: TimeGrid,
        damping: DampingProfile,
        signal: DrivingSignal,
    ) -> Result<Self> {
        if prev.n() != grid.n || curr.n() != grid.n {
            return Err(Error::DimensionMismatch("levels do not match the grid".into()));
        }
        params.validate()?;
        Ok(Self { prev, curr, step_index: 1, params, grid, time, damping, signal })
    }

    /// Physical time of level k (warmup shifts the origin).
    pub fn t_at(&self, k: usize) -> f64 {
        k as f64 * self.time.dt - self.signal.warmup()
    }

    pub fn t_curr(&self) -> f64 {
        self.t_at(self.step_index)
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub newton_iters: usize,
    pub linear_iters: usize,
    /// Smallest diagonal-dominance margin seen while assembling the
    /// implicit Jacobian; negative values are reported, not fatal.
    pub min_dominance_margin: f64,
}

/// Owns the scratch buffers and the per-site damping cache for one grid.
pub struct Solver3D {
    pub newton: NewtonSettings,
    pub exec: Parallelism,
    gamma: DampingField,
    next: FieldLevel,
    // implicit workspace, sized lazily
    fvec: Vec<f64>,
    bvec: Vec<f64>,
    qw: Vec<f64>,
    delta: FieldLevel,
    jv: Vec<f64>,
    /// Count of steps whose Jacobian lost strict diagonal dominance.
    pub dominance_warnings: usize,
}

impl Solver3D {
    pub fn new(state: &SimState3D, newton: NewtonSettings, exec: Parallelism) -> Result<Self> {
        newton.validate()?;
        let n = state.grid.n;
        let gamma = match state.damping {
            DampingProfile::RadialAbsorbing { .. } => {
                return Err(Error::InvalidParameter(
                    "radial absorbing damping does not apply to the cubic solver".into(),
                ))
            }
            ref profile => DampingField::build(profile, state.params.gamma, n)?,
        };
        Ok(Self {
            newton,
            exec,
            gamma,
            next: FieldLevel::zeros(n),
            fvec: Vec::new(),
            bvec: Vec::new(),
            qw: Vec::new(),
            delta: FieldLevel::zeros(n),
            jv: Vec::new(),
            dominance_warnings: 0,
        })
    }

    pub fn gamma_field(&self) -> &DampingField {
        &self.gamma
    }

    /// Explicit path if beta = 0, implicit otherwise.
    pub fn step_auto(&mut self, state: &mut SimState3D) -> Result<StepStats> {
        if state.params.beta == 0.0 {
            self.step_explicit(state)
        } else {
            self.step_implicit(state)
        }
    }

    /// Advance one level with the decoupled per-site scalar Newton solve.
    /// Requires beta = 0.
    pub fn step_explicit(&mut self, state: &mut SimState3D) -> Result<StepStats> {
        if state.params.beta != 0.0 {
            return Err(Error::ExplicitNeedsZeroBeta(state.params.beta));
        }
        let n = state.grid.n;
        let ext = state.grid.ext();
        let plane = ext * ext;
        let (dx2, dy2, dz2) = (
            state.grid.dx * state.grid.dx,
            state.grid.dy * state.grid.dy,
            state.grid.dz * state.grid.dz,
        );
        let dt = state.time.dt;
        let idt2 = 1.0 / (dt * dt);
        let half_idt = 0.5 / dt;
        let c2 = state.params.coupling * state.params.coupling;
        let mass_half = 0.5 * state.params.mass_sq;
        let j_cur = state.params.josephson;
        let pot = state.params.potential;
        let tol = self.newton.tol_residual;
        let max_iters = self.newton.max_iters;

        let prev = &state.prev;
        let curr = &state.curr;
        let gamma = &self.gamma;

        let results: Vec<std::result::Result<usize, Error>> =
            run_planes(self.exec, self.next.data_mut(), plane, |m, out| {
                if m < 1 || m > n {
                    return Ok(0);
                }
                let pd = prev.data();
                let cd = curr.data();
                let mut iters_used = 0usize;
                for nn in 1..=n {
                    for p in 1..=n {
                        let i = (m * ext + nn) * ext + p;
                        let u0 = cd[i];
                        let um = pd[i];
                        let lap = c2
                            * ((cd[i + plane] - 2.0 * u0 + cd[i - plane]) / dx2
                                + (cd[i + ext] - 2.0 * u0 + cd[i - ext]) / dy2
                                + (cd[i + 1] - 2.0 * u0 + cd[i - 1]) / dz2);
                        let g = gamma.at(m, nn, p);
                        let a_coef = idt2 + g * half_idt + mass_half;
                        let b_coef = (um - 2.0 * u0) * idt2 - lap - g * um * half_idt
                            + mass_half * um
                            - j_cur;
                        let vb = pot.value(um);
                        let mut w = 2.0 * u0 - um;
                        let mut ok = false;
                        for it in 0..max_iters {
                            let (q, dq) = quotient_pair(pot, w, um, vb);
                            let f = a_coef * w + b_coef + q;
                            if f.abs() <= tol {
                                ok = true;
                                iters_used = iters_used.max(it);
                                break;
                            }
                            w -= f / (a_coef + dq);
                        }
                        if !ok {
                            let (q, _) = quotient_pair(pot, w, um, vb);
                            let f = a_coef * w + b_coef + q;
                            return Err(Error::NewtonDiverged {
                                m,
                                n: nn,
                                p,
                                iters: max_iters,
                                residual: f.abs(),
                            });
                        }
                        out[nn * ext + p] = w;
                    }
                }
                Ok(iters_used)
            });

        let mut max_iters_used = 0;
        for r in results {
            max_iters_used = max_iters_used.max(r?);
        }
        self.finish_step(state);
        Ok(StepStats { newton_iters: max_iters_used + 1, ..Default::default() })
    }

    /// Advance one level with global Newton over the interior unknowns;
    /// the sparse Jacobian is applied matrix-free and each correction is
    /// solved by diagonally preconditioned Jacobi iteration.
    pub fn step_implicit(&mut self, state: &mut SimState3D) -> Result<StepStats> {
        let n = state.grid.n;
        let ext = state.grid.ext();
        let plane = ext * ext;
        let interior = n * n * n;
        let (dx2, dy2, dz2) = (
            state.grid.dx * state.grid.dx,
            state.grid.dy * state.grid.dy,
            state.grid.dz * state.grid.dz,
        );
        let dt = state.time.dt;
        let idt2 = 1.0 / (dt * dt);
        let half_idt = 0.5 / dt;
        let beta_c = state.params.beta * half_idt; // beta / (2 dt)
        let c2 = state.params.coupling * state.params.coupling;
        let mass_half = 0.5 * state.params.mass_sq;
        let j_cur = state.params.josephson;
        let pot = state.params.potential;

        self.fvec.resize(interior, 0.0);
        self.bvec.resize(interior, 0.0);
        self.qw.resize(interior, 0.0);
        self.jv.resize(interior, 0.0);

        let phi_next = state.signal.eval(state.t_at(state.step_index + 1));

        // Everything in the residual that does not involve u^{k+1}.
        {
            let pd = state.prev.data();
            let cd = state.curr.data();
            let gamma = &self.gamma;
            let bvec = &mut self.bvec;
            for m in 1..=n {
                for nn in 1..=n {
                    for p in 1..=n {
                        let i = (m * ext + nn) * ext + p;
                        let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                        let u0 = cd[i];
                        let um = pd[i];
                        let lap_c = c2
                            * ((cd[i + plane] - 2.0 * u0 + cd[i - plane]) / dx2
                                + (cd[i + ext] - 2.0 * u0 + cd[i - ext]) / dy2
                                + (cd[i + 1] - 2.0 * u0 + cd[i - 1]) / dz2);
                        let lap_p = (pd[i + plane] - 2.0 * um + pd[i - plane]) / dx2
                            + (pd[i + ext] - 2.0 * um + pd[i - ext]) / dy2
                            + (pd[i + 1] - 2.0 * um + pd[i - 1]) / dz2;
                        let g = gamma.at(m, nn, p);
                        bvec[s] = (um - 2.0 * u0) * idt2 - lap_c + beta_c * lap_p
                            - g * um * half_idt
                            + mass_half * um
                            - j_cur;
                    }
                }
            }
        }

        // Predictor with boundaries for the next time.
        {
            let next = &mut self.next;
            let cd = state.curr.data();
            let pd = state.prev.data();
            let nd = next.data_mut();
            for m in 1..=n {
                for nn in 1..=n {
                    for p in 1..=n {
                        let i = (m * ext + nn) * ext + p;
                        nd[i] = 2.0 * cd[i] - pd[i];
                    }
                }
            }
            next.apply_boundary(phi_next);
        }

        let mut stats = StepStats { min_dominance_margin: f64::INFINITY, ..Default::default() };

        for newton_it in 0..self.newton.max_iters {
            // Residual and the w-derivative of the quotient at the iterate.
            let mut fmax = 0.0f64;
            let mut fmax_site = (0usize, 0usize, 0usize);
            {
                let wd = self.next.data();
                let pd = state.prev.data();
                for m in 1..=n {
                    for nn in 1..=n {
                        for p in 1..=n {
                            let i = (m * ext + nn) * ext + p;
                            let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                            let w = wd[i];
                            let um = pd[i];
                            let lap_w = (wd[i + plane] - 2.0 * w + wd[i - plane]) / dx2
                                + (wd[i + ext] - 2.0 * w + wd[i - ext]) / dy2
                                + (wd[i + 1] - 2.0 * w + wd[i - 1]) / dz2;
                            let g = self.gamma.at(m, nn, p);
                            let vb = pot.value(um);
                            let (q, dq) = quotient_pair(pot, w, um, vb);
                            let f = w * idt2 - beta_c * lap_w + g * w * half_idt
                                + mass_half * w
                                + q
                                + self.bvec[s];
                            self.fvec[s] = f;
                            self.qw[s] = dq;
                            if f.abs() > fmax {
                                fmax = f.abs();
                                fmax_site = (m, nn, p);
                            }
                        }
                    }
                }
            }
            if fmax <= self.newton.tol_residual {
                stats.newton_iters = newton_it;
                if stats.min_dominance_margin <= 0.0 {
                    self.dominance_warnings += 1;
                }
                self.finish_step(state);
                return Ok(stats);
            }
            if newton_it + 1 == self.newton.max_iters {
                return Err(Error::NewtonDiverged {
                    m: fmax_site.0,
                    n: fmax_site.1,
                    p: fmax_site.2,
                    iters: self.newton.max_iters,
                    residual: fmax,
                });
            }

            // Jacobi solve of J delta = -F.
            let lin_iters = self.jacobi_solve(n, ext, plane, (dx2, dy2, dz2), idt2, half_idt, beta_c, mass_half, &mut stats)?;
            stats.linear_iters += lin_iters;

            // w += delta; refresh ghosts (Dirichlet faces untouched: delta is 0 there).
            {
                let nd = self.next.data_mut();
                let dd = self.delta.data();
                for m in 1..=n {
                    for nn in 1..=n {
                        for p in 1..=n {
                            let i = (m * ext + nn) * ext + p;
                            nd[i] += dd[i];
                        }
                    }
                }
                self.next.apply_neumann_ghosts();
            }
        }
        // The loop either converges or errors out at its last iteration.
        unreachable!("implicit Newton loop exited without a verdict")
    }

    #[allow(clippy::too_many_arguments)]
    fn jacobi_solve(
        &mut self,
        n: usize,
        ext: usize,
        plane: usize,
        d2: (f64, f64, f64),
        idt2: f64,
        half_idt: f64,
        beta_c: f64,
        mass_half: f64,
        stats: &mut StepStats,
    ) -> Result<usize> {
        let (dx2, dy2, dz2) = d2;
        // Diagonal with the Neumann ghost folded in on the far layers, and
        // the strict-dominance margin check the inner iteration relies on.
        let mut diag = vec![0.0; self.fvec.len()];
        let mut min_margin = f64::INFINITY;
        for m in 1..=n {
            for nn in 1..=n {
                for p in 1..=n {
                    let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                    let g = self.gamma.at(m, nn, p);
                    let base = idt2 + g * half_idt + mass_half + self.qw[s];
                    let fold = |at_far: bool, d2: f64| if at_far { 1.0 / d2 } else { 2.0 / d2 };
                    let dlap = fold(m == n, dx2) + fold(nn == n, dy2) + fold(p == n, dz2);
                    diag[s] = base + beta_c * dlap;
                    // Off-diagonal row sum counts only true unknowns.
                    let count = |q: usize, d2: f64| {
                        let lo = if q > 1 { 1.0 } else { 0.0 };
                        let hi = if q < n { 1.0 } else { 0.0 };
                        (lo + hi) / d2
                    };
                    let off = beta_c * (count(m, dx2) + count(nn, dy2) + count(p, dz2));
                    min_margin = min_margin.min(diag[s] - off);
                }
            }
        }
        stats.min_dominance_margin = stats.min_dominance_margin.min(min_margin);

        // delta_0 = D^{-1} (-F)
        {
            let dd = self.delta.data_mut();
            dd.iter_mut().for_each(|v| *v = 0.0);
            for m in 1..=n {
                for nn in 1..=n {
                    for p in 1..=n {
                        let i = (m * ext + nn) * ext + p;
                        let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                        dd[i] = -self.fvec[s] / diag[s];
                    }
                }
            }
            self.delta.apply_neumann_ghosts();
        }

        let rhs_norm = self.fvec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if rhs_norm == 0.0 {
            return Ok(0);
        }
        let mut history: Vec<f64> = Vec::with_capacity(self.newton.linear_max_iters);
        for it in 0..self.newton.linear_max_iters {
            // r = -F - J delta
            let mut rmax = 0.0f64;
            {
                let dd = self.delta.data();
                for m in 1..=n {
                    for nn in 1..=n {
                        for p in 1..=n {
                            let i = (m * ext + nn) * ext + p;
                            let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                            let v = dd[i];
                            let lap_v = (dd[i + plane] - 2.0 * v + dd[i - plane]) / dx2
                                + (dd[i + ext] - 2.0 * v + dd[i - ext]) / dy2
                                + (dd[i + 1] - 2.0 * v + dd[i - 1]) / dz2;
                            let g = self.gamma.at(m, nn, p);
                            let jv = (idt2 + g * half_idt + mass_half + self.qw[s]) * v - beta_c * lap_v;
                            let r = -self.fvec[s] - jv;
                            self.jv[s] = r;
                            rmax = rmax.max(r.abs());
                        }
                    }
                }
            }
            if rmax <= self.newton.linear_tol * rhs_norm {
                return Ok(it + 1);
            }
            history.push(rmax);
            // Stagnation: relative residual not halved over 50 sweeps.
            if it >= 50 && history[it] > 0.5 * history[it - 50] {
                return Err(Error::LinearSolveStagnated { iters: it + 1, relative: rmax / rhs_norm });
            }
            // delta += D^{-1} r
            {
                let dd = self.delta.data_mut();
                for m in 1..=n {
                    for nn in 1..=n {
                        for p in 1..=n {
                            let i = (m * ext + nn) * ext + p;
                            let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                            dd[i] += self.jv[s] / diag[s];
                        }
                    }
                }
                self.delta.apply_neumann_ghosts();
            }
        }
        Ok(self.newton.linear_max_iters)
    }

    /// Boundary application on the solved level, then rotate the levels.
    fn finish_step(&mut self, state: &mut SimState3D) {
        let phi = state.signal.eval(state.t_at(state.step_index + 1));
        self.next.apply_boundary(phi);
        std::mem::swap(&mut state.prev, &mut state.curr);
        std::mem::swap(&mut state.curr, &mut self.next);
        state.step_index += 1;
    }
}

/// Fused difference quotient and its w-derivative with V(b) precomputed;
/// identical branch and formulas to `PotentialKind::quotient` /
/// `quotient_deriv`.
#[inline]
fn quotient_pair(pot: PotentialKind, a: f64, b: f64, vb: f64) -> (f64, f64) {
    let d = a - b;
    if d.abs() > QUOTIENT_TOL * 1.0f64.max(a.abs()).max(b.abs()) {
        let va = pot.value(a);
        let da = pot.deriv(a);
        let q = (va - vb) / d;
        (q, (d * da - (va - vb)) / (d * d))
    } else {
        let mid = 0.5 * (a + b);
        (pot.deriv(mid), 0.5 * pot.second_deriv(mid))
    }
}

fn run_planes<T: Send, F>(
    exec: Parallelism,
    out: &mut [f64],
    plane: usize,
    f: F,
) -> Vec<std::result::Result<T, Error>>
where
    F: Fn(usize, &mut [f64]) -> std::result::Result<T, Error> + Sync + Send,
{
    match exec {
        Parallelism::Sequential => out.chunks_mut(plane).enumerate().map(|(i, c)| f(i, c)).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            out.par_chunks_mut(plane).enumerate().map(|(i, c)| f(i, c)).collect()
        }
    }
}

/// Left-hand side of the scheme at every interior site; a zero array
/// certifies that `next` solves the step from (`prev`, `curr`).
pub fn scheme_residual(
    prev: &FieldLevel,
    curr: &FieldLevel,
    next: &FieldLevel,
    params: &MediumParams,
    grid: &Grid3,
    dt: f64,
    gamma: &DampingField,
) -> Result<Vec<f64>> {
    prev.check_same_shape(curr, "scheme_residual levels")?;
    curr.check_same_shape(next, "scheme_residual levels")?;
    if prev.n() != grid.n {
        return Err(Error::DimensionMismatch("levels do not match the grid".into()));
    }
    let n = grid.n;
    let ext = grid.ext();
    let plane = ext * ext;
    let (dx2, dy2, dz2) = (grid.dx * grid.dx, grid.dy * grid.dy, grid.dz * grid.dz);
    let idt2 = 1.0 / (dt * dt);
    let half_idt = 0.5 / dt;
    let beta_c = params.beta * half_idt;
    let c2 = params.coupling * params.coupling;
    let pot = params.potential;
    let (pd, cd, nd) = (prev.data(), curr.data(), next.data());
    let mut out = vec![0.0; n * n * n];
    for m in 1..=n {
        for nn in 1..=n {
            for p in 1..=n {
                let i = (m * ext + nn) * ext + p;
                let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                let lap = |d: &[f64], u: f64| {
                    (d[i + plane] - 2.0 * u + d[i - plane]) / dx2
                        + (d[i + ext] - 2.0 * u + d[i - ext]) / dy2
                        + (d[i + 1] - 2.0 * u + d[i - 1]) / dz2
                };
                let (um, u0, up) = (pd[i], cd[i], nd[i]);
                out[s] = (up - 2.0 * u0 + um) * idt2 - c2 * lap(cd, u0)
                    - beta_c * (lap(nd, up) - lap(pd, um))
                    + gamma.at(m, nn, p) * (up - um) * half_idt
                    + 0.5 * params.mass_sq * (up + um)
                    + pot.quotient(up, um, QUOTIENT_TOL)
                    - params.josephson;
            }
        }
    }
    Ok(out)
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Compare the analytic Jacobian-vector product of the implicit system
/// against central finite differences of the residual (step 1e-6); returns
/// the largest absolute deviation over a few fixed probe directions.
/// Diagnostic only; restricted to N <= 4.
pub fn jacobian_check(state: &SimState3D, newton: &NewtonSettings) -> Result<f64> {
    let n = state.grid.n;
    if n > 4 {
        return Err(Error::InvalidParameter(format!("jacobian_check is limited to N <= 4 (got {n})")));
    }
    newton.validate()?;
    let gamma = DampingField::build(&state.damping, state.params.gamma, n)?;
    let grid = &state.grid;
    let dt = state.time.dt;
    let params = &state.params;
    let pot = params.potential;
    let idt2 = 1.0 / (dt * dt);
    let half_idt = 0.5 / dt;
    let beta_c = params.beta * half_idt;
    let (dx2, dy2, dz2) = (grid.dx * grid.dx, grid.dy * grid.dy, grid.dz * grid.dz);

    // Evaluation point: the Newton predictor with boundaries applied.
    let mut w = FieldLevel::zeros(n);
    for m in 1..=n {
        for nn in 1..=n {
            for p in 1..=n {
                w.set(m, nn, p, 2.0 * state.curr.at(m, nn, p) - state.prev.at(m, nn, p));
            }
        }
    }
    w.apply_boundary(state.signal.eval(state.t_at(state.step_index + 1)));

    let eps = 1e-6;
    let mut worst = 0.0f64;
    for probe in 0..3 {
        // Deterministic probe pattern; interior only, ghosts mirrored.
        let mut dir = FieldLevel::zeros(n);
        for m in 1..=n {
            for nn in 1..=n {
                for p in 1..=n {
                    let t = (m * 7 + nn * 13 + p * 29 + probe * 41) % 17;
                    dir.set(m, nn, p, (t as f64 / 17.0) - 0.5);
                }
            }
        }
        dir.apply_neumann_ghosts();

        let mut wp = w.clone();
        let mut wm = w.clone();
        for i in 0..wp.data().len() {
            wp.data_mut()[i] = w.data()[i] + eps * dir.data()[i];
            wm.data_mut()[i] = w.data()[i] - eps * dir.data()[i];
        }
        let fp = scheme_residual(&state.prev, &state.curr, &wp, params, grid, dt, &gamma)?;
        let fm = scheme_residual(&state.prev, &state.curr, &wm, params, grid, dt, &gamma)?;

        let (wd, dd) = (w.data(), dir.data());
        let ext = grid.ext();
        let plane = ext * ext;
        for m in 1..=n {
            for nn in 1..=n {
                for p in 1..=n {
                    let i = (m * ext + nn) * ext + p;
                    let s = ((m - 1) * n + (nn - 1)) * n + (p - 1);
                    let v = dd[i];
                    let lap_v = (dd[i + plane] - 2.0 * v + dd[i - plane]) / dx2
                        + (dd[i + ext] - 2.0 * v + dd[i - ext]) / dy2
                        + (dd[i + 1] - 2.0 * v + dd[i - 1]) / dz2;
                    let qw = pot.quotient_deriv(wd[i], state.prev.at(m, nn, p), QUOTIENT_TOL);
                    let g = gamma.at(m, nn, p);
                    let analytic = (idt2 + g * half_idt + 0.5 * params.mass_sq + qw) * v - beta_c * lap_v;
                    let fd = (fp[s] - fm[s]) / (2.0 * eps);
                    worst = worst.max((analytic - fd).abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_state(n: usize, params: MediumParams, dt: f64) -> SimState3D {
        SimState3D::from_rest(
            params,
            Grid3::lattice(n).unwrap(),
            TimeGrid::new(dt, 100).unwrap(),
            DampingProfile::Uniform,
            DrivingSignal::quiet(),
        )
        .unwrap()
    }

    #[test]
    fn index_map_examples() {
        assert_eq!(index_map(0, 0, 0, 1).unwrap(), 1);
        assert_eq!(index_map(1, 0, 0, 1).unwrap(), 10);
        assert_eq!(index_map(2, 2, 2, 1).unwrap(), 27);
        assert!(index_map(3, 0, 0, 1).is_err());
    }

    #[test]
    fn index_map_is_bijective() {
        let n = 3;
        let mut seen = vec![false; (n + 2) * (n + 2) * (n + 2)];
        for m in 0..=n + 1 {
            for nn in 0..=n + 1 {
                for p in 0..=n + 1 {
                    let i = index_map(m, nn, p, n).unwrap();
                    assert!((1..=seen.len()).contains(&i));
                    assert!(!seen[i - 1], "index {i} hit twice");
                    seen[i - 1] = true;
                }
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn zero_field_stays_zero() {
        let mut state = quiet_state(3, MediumParams::sine_gordon(), 0.05);
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        for _ in 0..20 {
            solver.step_explicit(&mut state).unwrap();
        }
        assert_eq!(state.curr.max_abs(), 0.0);
    }

    #[test]
    fn residual_of_constant_levels_is_mass_term() {
        // All levels u0, V = 0, m^2 = 1, gamma = beta = J = 0: only the
        // (m^2/2)(u+ + u-) term survives, giving u0 at every interior site.
        let n = 3;
        let grid = Grid3::lattice(n).unwrap();
        let params = MediumParams::linear(1.0);
        let mut level = FieldLevel::zeros(n);
        for i in 0..level.data().len() {
            level.data_mut()[i] = 0.7;
        }
        let gamma = DampingField::uniform(0.0, n);
        let r = scheme_residual(&level, &level, &level, &params, &grid, 0.1, &gamma).unwrap();
        for v in r {
            assert!((v - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_step_satisfies_scheme_residual() {
        let n = 3;
        let params =
            MediumParams::new(0.0, 0.1, 0.3, 0.05, 1.0, PotentialKind::SineGordon).unwrap();
        let grid = Grid3::new(n, 0.4, 0.5, 0.6).unwrap();
        let time = TimeGrid::new(0.03, 10).unwrap();
        let signal = DrivingSignal::ramped_sine(0.8, 0.9, 5.0).unwrap();
        let mut prev = FieldLevel::zeros(n);
        let mut curr = FieldLevel::zeros(n);
        // Deterministic scrambled start.
        prev.fill_interior(grid.dx, grid.dy, grid.dz, |x, y, z| (3.0 * x).sin() * (2.0 * y).cos() + 0.3 * z);
        curr.fill_interior(grid.dx, grid.dy, grid.dz, |x, y, z| (2.5 * x + y).cos() * 0.8 + 0.1 * z * z);
        prev.apply_boundary(signal.eval(0.0));
        curr.apply_boundary(signal.eval(time.dt));
        let mut state = SimState3D::from_levels(prev, curr, params, grid, time, DampingProfile::Uniform, signal).unwrap();
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        let prev_copy = state.prev.clone();
        let curr_copy = state.curr.clone();
        solver.step_explicit(&mut state).unwrap();
        let r = scheme_residual(&prev_copy, &curr_copy, &state.curr, &state.params, &state.grid, state.time.dt, solver.gamma_field()).unwrap();
        assert!(max_abs(&r) <= 1e-12, "max residual {:.3e}", max_abs(&r));
        assert!(state.curr.neumann_ghosts_hold());
    }

    #[test]
    fn explicit_linear_matches_closed_form() {
        // V = 0: the per-site equation is linear, solvable in closed form.
        let n = 4;
        let params = MediumParams::new(0.0, 0.2, 0.5, 0.0, 1.0, PotentialKind::Zero).unwrap();
        let grid = Grid3::new(n, 0.5, 0.5, 0.5).unwrap();
        let time = TimeGrid::new(0.05, 10).unwrap();
        let signal = DrivingSignal::ramped_sine(0.5, 0.9, 2.0).unwrap();
        let mut state = SimState3D::from_rest(params, grid, time, DampingProfile::Uniform, signal).unwrap();
        // Push a couple of steps so the field is nontrivial.
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        for _ in 0..3 {
            solver.step_explicit(&mut state).unwrap();
        }
        let prev = state.prev.clone();
        let curr = state.curr.clone();
        solver.step_explicit(&mut state).unwrap();

        // Closed-form update per site.
        let dt = time.dt;
        let (idt2, half_idt) = (1.0 / (dt * dt), 0.5 / dt);
        for m in 1..=n {
            for nn in 1..=n {
                for p in 1..=n {
                    let u0 = curr.at(m, nn, p);
                    let um = prev.at(m, nn, p);
                    let lap = (curr.at(m + 1, nn, p) - 2.0 * u0 + curr.at(m - 1, nn, p)) / 0.25
                        + (curr.at(m, nn + 1, p) - 2.0 * u0 + curr.at(m, nn - 1, p)) / 0.25
                        + (curr.at(m, nn, p + 1) - 2.0 * u0 + curr.at(m, nn, p - 1)) / 0.25;
                    let a = idt2 + 0.2 * half_idt + 0.25;
                    let b = (um - 2.0 * u0) * idt2 - lap - 0.2 * um * half_idt + 0.25 * um;
                    let w = -b / a;
                    assert!((state.curr.at(m, nn, p) - w).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn implicit_equals_explicit_at_zero_beta() {
        let n = 3;
        let params = MediumParams::sine_gordon();
        let grid = Grid3::lattice(n).unwrap();
        let time = TimeGrid::new(0.05, 40).unwrap();
        let signal = DrivingSignal::ramped_sine(1.0, 0.9, 10.0).unwrap();
        let mk = || SimState3D::from_rest(params, grid, time, DampingProfile::Uniform, signal.clone()).unwrap();
        let mut s1 = mk();
        let mut s2 = mk();
        let mut e1 = Solver3D::new(&s1, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        let mut e2 = Solver3D::new(&s2, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        for _ in 0..40 {
            e1.step_explicit(&mut s1).unwrap();
            e2.step_implicit(&mut s2).unwrap();
        }
        let diff = s1
            .curr
            .data()
            .iter()
            .zip(s2.curr.data())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-10, "paths diverged by {diff:.3e}");
    }

    #[test]
    fn implicit_step_satisfies_scheme_residual() {
        let n = 3;
        let params =
            MediumParams::new(0.1, 0.05, 0.2, 0.01, 1.0, PotentialKind::SineGordon).unwrap();
        let grid = Grid3::new(n, 0.5, 0.5, 0.5).unwrap();
        let time = TimeGrid::new(0.04, 10).unwrap();
        let signal = DrivingSignal::ramped_sine(0.9, 0.9, 3.0).unwrap();
        let mut state = SimState3D::from_rest(params, grid, time, DampingProfile::Uniform, signal).unwrap();
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        for _ in 0..3 {
            solver.step_implicit(&mut state).unwrap();
        }
        let prev = state.prev.clone();
        let curr = state.curr.clone();
        solver.step_implicit(&mut state).unwrap();
        let r = scheme_residual(&prev, &curr, &state.curr, &state.params, &state.grid, state.time.dt, solver.gamma_field()).unwrap();
        assert!(max_abs(&r) <= 1e-12, "max residual {:.3e}", max_abs(&r));
    }

    #[test]
    fn time_reversal_of_conservative_linear_scheme() {
        // beta = gamma = 0, V = 0, J = 0: the scheme is symmetric in
        // k+1 <-> k-1, so stepping forward, swapping levels and stepping
        // again recovers the original level.
        let n = 4;
        let params = MediumParams::linear(0.4);
        let grid = Grid3::new(n, 0.5, 0.5, 0.5).unwrap();
        let time = TimeGrid::new(0.05, 10).unwrap();
        let mut prev = FieldLevel::zeros(n);
        let mut curr = FieldLevel::zeros(n);
        prev.fill_interior(grid.dx, grid.dy, grid.dz, |x, y, z| (x + 2.0 * y - z).sin());
        curr.fill_interior(grid.dx, grid.dy, grid.dz, |x, y, z| (2.0 * x - y + 0.5 * z).cos() * 0.3);
        prev.apply_boundary(0.0);
        curr.apply_boundary(0.0);
        let signal = DrivingSignal::quiet();
        let mut state = SimState3D::from_levels(prev.clone(), curr, params, grid, time, DampingProfile::Uniform, signal).unwrap();
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        solver.step_explicit(&mut state).unwrap();
        // Reverse: swap roles so prev becomes the future level.
        std::mem::swap(&mut state.prev, &mut state.curr);
        solver.step_explicit(&mut state).unwrap();
        let diff = state
            .curr
            .data()
            .iter()
            .zip(prev.data())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-10, "time reversal error {diff:.3e}");
    }

    #[test]
    fn jacobian_check_linear_and_sine_gordon() {
        let params = MediumParams::new(0.1, 0.05, 0.0, 0.0, 1.0, PotentialKind::Zero).unwrap();
        let state = quiet_state(2, params, 0.05);
        let dev = jacobian_check(&state, &NewtonSettings::default()).unwrap();
        assert!(dev <= 1e-8, "linear deviation {dev:.3e}");

        let params = MediumParams::new(0.1, 0.0, 0.0, 0.0, 1.0, PotentialKind::SineGordon).unwrap();
        let grid = Grid3::lattice(2).unwrap();
        let time = TimeGrid::new(0.05, 5).unwrap();
        let mut prev = FieldLevel::zeros(2);
        let mut curr = FieldLevel::zeros(2);
        prev.fill_interior(1.0, 1.0, 1.0, |x, y, z| (x * y + z).sin());
        curr.fill_interior(1.0, 1.0, 1.0, |x, y, z| (x - y * z).cos() * 0.5);
        prev.apply_boundary(0.1);
        curr.apply_boundary(0.1);
        let state = SimState3D::from_levels(prev, curr, params, grid, time, DampingProfile::Uniform, DrivingSignal::quiet()).unwrap();
        let dev = jacobian_check(&state, &NewtonSettings::default()).unwrap();
        assert!(dev <= 1e-6, "sine-Gordon deviation {dev:.3e}");

        let big = quiet_state(5, MediumParams::sine_gordon(), 0.05);
        assert!(jacobian_check(&big, &NewtonSettings::default()).is_err());
    }

    #[test]
    fn neighbor_jacobian_entry_probe() {
        // Probing J e_unit at a neighbor site recovers -beta/(2 dt dx^2).
        let beta = 0.1;
        let dt = 0.05;
        let params = MediumParams::new(beta, 0.0, 0.0, 0.0, 1.0, PotentialKind::Zero).unwrap();
        let n = 3;
        let grid = Grid3::lattice(n).unwrap();
        let gamma = DampingField::uniform(0.0, n);
        let zero = FieldLevel::zeros(n);
        let mut e_unit = FieldLevel::zeros(n);
        e_unit.set(2, 2, 2, 1.0);
        // With V = 0 the residual is linear in `next`, so J v = F(v) - F(0).
        let f0 = scheme_residual(&zero, &zero, &zero, &params, &grid, dt, &gamma).unwrap();
        let f1 = scheme_residual(&zero, &zero, &e_unit, &params, &grid, dt, &gamma).unwrap();
        let s_neighbor = ((1 - 1) * n + (2 - 1)) * n + (2 - 1); // site (1, 2, 2)
        let coeff = f1[s_neighbor] - f0[s_neighbor];
        let expect = -beta / (2.0 * dt * 1.0);
        assert!((coeff - expect).abs() < 1e-12, "probe {coeff} vs {expect}");
    }

    #[test]
    fn dirichlet_faces_track_the_signal() {
        let params = MediumParams::sine_gordon();
        let grid = Grid3::lattice(3).unwrap();
        let time = TimeGrid::new(0.05, 10).unwrap();
        let signal = DrivingSignal::ramped_sine(1.3, 0.9, 1.0).unwrap();
        let mut state = SimState3D::from_rest(params, grid, time, DampingProfile::Uniform, signal.clone()).unwrap();
        let mut solver = Solver3D::new(&state, NewtonSettings::default(), Parallelism::Sequential).unwrap();
        for _ in 0..5 {
            solver.step_explicit(&mut state).unwrap();
        }
        let expect = signal.eval(state.t_curr());
        assert_eq!(state.curr.at(0, 2, 3), expect);
        assert_eq!(state.curr.at(2, 0, 3), expect);
        assert_eq!(state.curr.at(2, 3, 0), expect);
    }
}
