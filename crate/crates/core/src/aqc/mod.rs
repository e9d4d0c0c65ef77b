//! Hamiltonian-coloured schedules: interpolation fusions on time frames and
//! the spectral gaps that set their computation times.

mod operator;
mod problems;
mod schedule;

use thiserror::Error;

pub use operator::{
    basis_state, embed, or_projector, overlap, pauli_x, pauli_z, product_state, projector_x,
    projector_z, HermitianOperator, HERMITIAN_TOL, MAX_QUBITS,
};
pub use problems::{
    build_entanglement_problem, build_twosat_problem, default_lambdas, entanglement_entropy,
    entanglement_sweep, EntanglementProblem, SweepRow, TwoSatProblem, TWOSAT_SOLUTIONS,
};
pub use schedule::{
    eval_schedule, fuse_h, gap_profile, parse_schedule, spectral_gap, FrameClock, FuseRule,
    GapPoint, GapProfile, ScheduleExpr, DEFAULT_DEGENERACY_TOL, DEFAULT_GRID, MIN_GRID,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AqcError {
    #[error("matrix is {0}x{1}, not square")]
    NotSquare(usize, usize),
    #[error("dimension {0} is not a power of two")]
    DimensionNotPowerOfTwo(usize),
    #[error("{0} qubits exceeds the dense cap of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("state vector has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("site {site} out of range for {qubits} qubits")]
    SiteOutOfRange { site: usize, qubits: usize },
    #[error("projector bit must be 0 or 1, got {0}")]
    InvalidBit(u8),
    #[error("interpolation weight {0} outside [0,1]")]
    WeightOutOfRange(f64),
    #[error("time {0} outside [0,1]")]
    TimeOutOfRange(f64),
    #[error("deformation parameter alpha = {0} outside (0,1)")]
    AlphaOutOfRange(f64),
    #[error("frame scale {0} outside (0,1]")]
    ScaleOutOfRange(f64),
    #[error("clock needs at least one frame")]
    NoFrames,
    #[error("frame {frame} out of range ({frames} frames)")]
    FrameOutOfRange { frame: usize, frames: usize },
    #[error("malformed schedule: {0}")]
    Malformed(String),
    #[error("schedule parse error: {0}")]
    Parse(String),
    #[error("grid of {0} points is below the minimum of {MIN_GRID}")]
    GridTooSmall(usize),
    #[error("parameter {0} = {1} outside (0,1)")]
    ParameterOutOfRange(&'static str, f64),
}
