//! Pseudo-multipliers of the quantum harmonic oscillator, realized as finite
//! sections in the Hermite basis.
//!
//! A symbol m(x, ν) defines T_m f = Σ_ν m(x, ν) f̂(φ_ν) φ_ν. This crate
//! assembles P_N T_m P_N, computes its singular values and Schatten sums,
//! evaluates membership criteria for the Schatten classes S_r as truncated
//! sums with convergence diagnostics, and compares the trace formula
//! Σ_ν ∫ m(x, ν) φ_ν(x)² dx against the eigenvalue sum.
//!
//! Eigenvalues of the oscillator H = −Δ + |x|² are taken as λ_ν = 2|ν| + n.

pub mod cli;
pub mod criteria;
pub mod error;
pub mod hermite;
pub mod multiindex;
pub mod operator;
pub mod schatten;
pub mod sum;
pub mod symbol;

pub use error::{Error, Result};
pub use multiindex::{MultiIndex, TruncationSpec};
pub use operator::{assemble_matrix, CoefficientVector, OperatorMatrix};
pub use schatten::SchattenReport;
pub use symbol::SymbolSpec;

/// Crate version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
