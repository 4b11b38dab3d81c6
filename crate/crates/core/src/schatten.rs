//! Singular values, Schatten sums and the two routes to the trace.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiindex::TruncationSpec;
use crate::operator::{Entries, OperatorMatrix, Sampling};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::symbol::SymbolSpec;

/// Imaginary parts of the eigenvalue sum must cancel to this fraction of ‖M‖_F.
pub const IMAGINARY_CANCELLATION_TOL: f64 = 1e-8;

const SVD_MAX_ITER: usize = 10_000;

fn sort_descending(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Singular values of a dense matrix by SVD, descending.
pub fn singular_values_dense(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    Ok(sort_descending(svd.singular_values.iter().map(|s| s.abs()).collect()))
}

/// Singular values of M, descending. Diagonal (multiplier) matrices return
/// the sorted |m(ν)| without any decomposition.
pub fn singular_values(m: &OperatorMatrix) -> Result<Vec<f64>> {
    match m.entries() {
        Entries::Diagonal(d) => Ok(sort_descending(d.iter().map(|v| v.abs()).collect())),
        Entries::Dense(mat) => singular_values_dense(mat),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchattenSum {
    pub r: f64,
    /// Σ σ_i^r.
    pub raw_sum: f64,
    /// (Σ σ_i^r)^(1/r).
    pub norm: f64,
}

pub fn schatten_norm(sv: &[f64], r: f64) -> Result<SchattenSum> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("Schatten exponent r={r} must be positive")));
    }
    let raw_sum = compensated_sum(sv.iter().map(|s| s.powf(r)));
    Ok(SchattenSum {
        r,
        raw_sum,
        norm: raw_sum.powf(r.recip()),
    })
}

/// Per-column integrals ∫ m(x,ν) φ_ν² dx and ∫ m(x,ν)² φ_ν² dx, in rank order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnIntegrals {
    pub diagonal: f64,
    pub squared: f64,
}

pub fn column_integrals(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    quad_order: usize,
) -> Result<Vec<ColumnIntegrals>> {
    if s.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: s.dim(),
        });
    }
    if s.is_multiplier() {
        return spec
            .indices()
            .iter()
            .map(|nu| {
                let m = s.multiplier_value(nu)?;
                Ok(ColumnIntegrals {
                    diagonal: m,
                    squared: m * m,
                })
            })
            .collect();
    }
    if quad_order < spec.level() + 1 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {quad_order} below level + 1 = {}",
            spec.level() + 1
        )));
    }
    let sampling = Sampling::new(spec, quad_order)?;
    (0..spec.size())
        .into_par_iter()
        .map(|col| {
            let nu = &spec.indices()[col];
            let mut diag = NeumaierSum::new();
            let mut sq = NeumaierSum::new();
            for ((x, &w), &phi) in sampling
                .points
                .iter()
                .zip(&sampling.weights)
                .zip(&sampling.basis[col])
            {
                let m = s.eval(x, nu)?;
                let wp = w * phi * phi;
                diag.add(wp * m);
                sq.add(wp * m * m);
            }
            Ok(ColumnIntegrals {
                diagonal: diag.value(),
                squared: sq.value(),
            })
        })
        .collect()
}

/// Σ_{|ν|≤N} ∫ m(x, ν) φ_ν(x)² dx.
pub fn trace_formula(s: &SymbolSpec, spec: &TruncationSpec, quad_order: usize) -> Result<f64> {
    Ok(compensated_sum(
        column_integrals(s, spec, quad_order)?
            .iter()
            .map(|c| c.diagonal),
    ))
}

/// Σ_{|ν|≤N} ∫ |m(x, ν)|² φ_ν(x)² dx, the squared Hilbert–Schmidt norm of
/// T_m P_N.
pub fn hilbert_schmidt_direct(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    quad_order: usize,
) -> Result<f64> {
    Ok(compensated_sum(
        column_integrals(s, spec, quad_order)?
            .iter()
            .map(|c| c.squared),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Diagonal,
    Symmetric,
    Schur,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralTrace {
    /// Σ Re λ_i.
    pub value: f64,
    /// |Σ Im λ_i|.
    pub imaginary_residual: f64,
    /// Imaginary parts failed to cancel.
    pub flagged: bool,
    pub method: EigenMethod,
    #[serde(skip)]
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Eigenvalues (re, im) of a dense matrix; symmetric input takes the
/// symmetric solver, everything else a Hessenberg–Schur QR (faer).
pub fn eigenvalues_dense(m: &DMatrix<f64>) -> Result<(Vec<(f64, f64)>, EigenMethod)> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if m == &m.transpose() {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| Error::Numerical("symmetric eigensolve did not converge".into()))?;
        return Ok((
            eig.eigenvalues.iter().map(|&v| (v, 0.0)).collect(),
            EigenMethod::Symmetric,
        ));
    }
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let eig = f
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("nonsymmetric eigensolve failed: {e:?}")))?;
    Ok((
        eig.iter().map(|c| (c.re, c.im)).collect(),
        EigenMethod::Schur,
    ))
}

/// Sum of all eigenvalues of M, multiplicities included.
pub fn spectral_trace(m: &OperatorMatrix) -> Result<SpectralTrace> {
    let (eigenvalues, method) = match m.entries() {
        Entries::Diagonal(d) => (d.iter().map(|&v| (v, 0.0)).collect(), EigenMethod::Diagonal),
        Entries::Dense(mat) => eigenvalues_dense(mat)?,
    };
    let value = compensated_sum(eigenvalues.iter().map(|e| e.0));
    let imaginary_residual = compensated_sum(eigenvalues.iter().map(|e| e.1)).abs();
    let scale = m.frobenius_sq().sqrt();
    Ok(SpectralTrace {
        value,
        imaginary_residual,
        flagged: imaginary_residual > IMAGINARY_CANCELLATION_TOL * scale,
        method,
        eigenvalues,
    })
}

/// Smallest eigenvalue of the symmetric part (M + Mᵀ)/2.
pub fn min_symmetric_eigenvalue(m: &OperatorMatrix) -> Result<f64> {
    match m.entries() {
        Entries::Diagonal(d) => Ok(d.iter().copied().fold(f64::INFINITY, f64::min)),
        Entries::Dense(mat) => {
            let sym = (mat + mat.transpose()) * 0.5;
            let eig = SymmetricEigen::try_new(sym, f64::EPSILON, SVD_MAX_ITER)
                .ok_or_else(|| Error::Numerical("symmetric eigensolve did not converge".into()))?;
            Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub level: usize,
    pub value: f64,
}

/// Spectral summary of one assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchattenReport {
    pub singular_values: Vec<f64>,
    pub schatten_norms: Vec<SchattenSum>,
    pub frobenius_sq: f64,
    pub matrix_trace: f64,
    pub formula_trace: f64,
    pub eigenvalue_sum: f64,
    pub eigenvalue_imaginary_residual: f64,
    pub eigenvalue_flagged: bool,
    pub eigen_method: EigenMethod,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergencePoint>,
}

impl SchattenReport {
    pub fn compute(s: &SymbolSpec, m: &OperatorMatrix, rs: &[f64]) -> Result<Self> {
        let singular_values = singular_values(m)?;
        let schatten_norms = rs
            .iter()
            .map(|&r| schatten_norm(&singular_values, r))
            .collect::<Result<_>>()?;
        let spectral = spectral_trace(m)?;
        let quad = m.quad_order().max(m.spec().level() + 1);
        Ok(Self {
            frobenius_sq: m.frobenius_sq(),
            matrix_trace: m.trace(),
            formula_trace: trace_formula(s, m.spec(), quad)?,
            eigenvalue_sum: spectral.value,
            eigenvalue_imaginary_residual: spectral.imaginary_residual,
            eigenvalue_flagged: spectral.flagged,
            eigen_method: spectral.method,
            singular_values,
            schatten_norms,
            convergence: Vec::new(),
        })
    }
}
