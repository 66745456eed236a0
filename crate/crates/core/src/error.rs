use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index ({m}, {n}, {p}) out of range for N = {max_n}")]
    SiteOutOfRange { m: usize, n: usize, p: usize, max_n: usize },

    #[error("radius {r} outside [0, {limit}]")]
    RadiusOutOfRange { r: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Newton failed to converge at site ({m}, {n}, {p}) after {iters} iterations (|residual| = {residual:.3e})")]
    NewtonDiverged { m: usize, n: usize, p: usize, iters: usize, residual: f64 },

    #[error("Newton failed to converge at radial node {j} after {iters} iterations (|residual| = {residual:.3e})")]
    RadialNewtonDiverged { j: usize, iters: usize, residual: f64 },

    #[error("inner linear solve stagnated (relative residual {relative:.3e} after {iters} iterations); a smaller time step usually restores diagonal dominance")]
    LinearSolveStagnated { iters: usize, relative: f64 },

    #[error("zero pivot in tridiagonal factorization at row {row}")]
    SingularTridiagonal { row: usize },

    #[error("explicit path requires beta = 0 (got beta = {0})")]
    ExplicitNeedsZeroBeta(f64),

    #[error("energy-rate identity not applicable: interior scheme residual {max_residual:.3e} exceeds {limit:.3e}")]
    IdentityNotApplicable { max_residual: f64, limit: f64 },

    #[error("operation requires lattice mode (unit spatial steps); got dx = {dx}, dy = {dy}, dz = {dz}")]
    NotLatticeMode { dx: f64, dy: f64, dz: f64 },

    #[error("non-finite value produced at step {step}: {what}")]
    NonFinite { step: usize, what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
