use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A probability coordinate fell below the interior floor.
    #[error("point too close to the simplex boundary: rho[{index}] = {value:e}")]
    Boundary { index: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    Param(String),

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("normalization precondition violated: {0}")]
    Normalization(String),

    /// The Hamiltonian function picked up an imaginary part.
    #[error("hamiltonian is not real-valued: imaginary residue {residue:e}")]
    NotReal { residue: f64 },

    #[error("operator is not Hermitian: max deviation {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("implicit midpoint iteration did not converge at step {step} (last increment {increment:e})")]
    Convergence { step: usize, increment: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
