use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("msh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("hole placement error: {0}")]
    Placement(String),

    #[error("hole {hole} produces a non-simple boundary; the mesh needs remeshing around it")]
    RemeshingNeeded { hole: usize },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),

    #[error("incompatible Neumann data: sources integrate to {sources:.12}, boundary flux to {flux:.12}")]
    Incompatible { sources: f64, flux: f64 },

    #[error("topologically infeasible configuration: target {target}, placed {placed}")]
    Infeasible { target: i64, placed: i64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("linear solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
