use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ellipticity violated at nu = [{:.6}, {:.6}, {:.6}]: smallest eigenvalue {min_eig:.3e}", nu[0], nu[1], nu[2])]
    Ellipticity { nu: [f64; 3], min_eig: f64 },
    #[error("mesh level {0} out of range [{1}, {2}]")]
    LevelOutOfRange(usize, usize, usize),
    #[error("band limit {requested} exceeds resolution limit {limit}")]
    OverBand { requested: usize, limit: usize },
    #[error("exponent p = {0} must satisfy 1 < p < inf")]
    InvalidExponent(f64),
    #[error("degenerate stencil at vertex {vertex}: {reason}")]
    DegenerateStencil { vertex: usize, reason: String },
    #[error("radius leaves the tubular neighborhood: max |u| = {max_abs_u:.4e}, reach = {reach:.4e}")]
    Tubular { max_abs_u: f64, reach: f64 },
    #[error("graph certificate failed: margin {margin:.4e} (threshold {threshold})")]
    Certificate { margin: f64, threshold: f64 },
    #[error("projection failed at node {node}: {reason}")]
    Projection { node: usize, reason: String },
    #[error("degenerate Gram matrix: conditioning {0:.3e}")]
    DegenerateGram(f64),
    #[error("centering failed after {iterations} iterations (last c = {last_c:?}): {reason}")]
    Centering { iterations: usize, last_c: [f64; 3], reason: String },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
