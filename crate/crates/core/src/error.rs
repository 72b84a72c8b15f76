use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh quality failure: {reason} (min angle {min_angle_deg:.2} deg, h = {h:.4})")]
    MeshQuality {
        reason: String,
        min_angle_deg: f64,
        h: f64,
    },

    #[error("newton iteration did not converge after {} iterations (residual {:.3e})", .report.iterations, .report.final_residual_norm)]
    SolverFailure { report: Box<SolveReport> },

    #[error("linear solve failed: {0}")]
    LinearFailure(String),

    #[error("infeasible neumann data: flux demand {demand:.6} exceeds bound {bound:.6}")]
    Infeasible { demand: f64, bound: f64 },

    #[error("point ({x:.6}, {y:.6}) is outside the domain of the comparison function")]
    OutOfDomain { x: f64, y: f64 },

    #[error("ill-conditioned loop: gradient magnitude {magnitude:.3e} below {threshold:.3e}")]
    IllConditionedLoop { magnitude: f64, threshold: f64 },

    #[error("field magnitude {magnitude:.3e} too small to fit a power law")]
    UnderflowFit { magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
