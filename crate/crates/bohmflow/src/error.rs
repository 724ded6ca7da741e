//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The density at an evaluation point is below the node floor, so the
    /// velocity field v = J/rho is singular or numerically meaningless there.
    #[error("density {rho:.3e} below node floor {floor:.3e} at x={x}, t={t}")]
    NodeProximity { x: f64, t: f64, rho: f64, floor: f64 },

    /// A grid point sits on (or too close to) a wave-function node, so phase
    /// unwrapping across the grid is ill-defined.
    #[error("node on grid at index {index} (x={x}); phase unwrapping is ill-defined")]
    NodeOnGrid { index: usize, x: f64 },

    /// Temporal phase alignment could not keep increments below pi.
    #[error("phase branch mismatch at x={x}: temporal increment {increment} exceeds pi")]
    BranchMismatch { x: f64, increment: f64 },

    /// A finite-difference stencil would leave the evaluator's stated domain.
    #[error("stencil at x={x} (half-width {half_width}) exits domain [{lo}, {hi}]")]
    DomainBounds { x: f64, half_width: f64, lo: f64, hi: f64 },

    /// The density tabulated for sampling carries (numerically) no mass.
    #[error("degenerate density: total mass {mass:.3e} below threshold")]
    DegenerateDensity { mass: f64 },

    /// Adaptive step size fell below the minimum while keeping the local
    /// error bounded.
    #[error("step size underflow at t={t} (h={h:.3e} < h_min={h_min:.3e})")]
    StepUnderflow { t: f64, h: f64, h_min: f64 },

    /// Grid too coarse to resolve the structure being searched for.
    #[error("grid resolution too coarse: adjacent extrema at {x_a} and {x_b} closer than {min_spacing}")]
    ResolutionError { x_a: f64, x_b: f64, min_spacing: f64 },

    /// Parameter validation failure.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
