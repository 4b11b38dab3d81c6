//! Schatten-class membership criteria for pseudo-multipliers, evaluated as
//! truncated shell sums with a tail diagnostic.
//!
//! | criterion        | terms per ν                              | statement            |
//! |------------------|------------------------------------------|----------------------|
//! | `HS-iff`         | ∫ m² φ_ν²                                | S_2 iff finite       |
//! | `TraceClass-iff` | ∫ m φ_ν² (T_m positive, self-adjoint)    | S_1 iff finite       |
//! | `Sr-sufficient`  | (∫ m² φ_ν²)^(r/2), 0 < r ≤ 1              | S_r if finite        |
//! | `Sr-sigma`       | λ_ν^(2σ) ∫ m² φ_ν², 1 < r < 2             | S_r if finite, σ > n(1/r − 1/2) |
//!
//! A finite tool cannot decide convergence of an infinite sum, so each
//! verdict carries the shell sums S_s = Σ_{|ν|=s} term(ν) and a power-law fit
//! of log S_s against log(2s + n) over the upper shells. A fitted slope
//! α ≥ −1 reads as diverging, α ≤ −1.2 as converging, anything between as
//! inconclusive.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::lambda_of_order;
use crate::multiindex::TruncationSpec;
use crate::operator::{assemble_matrix_with, AssemblyOptions, OperatorMatrix};
use crate::schatten::{column_integrals, min_symmetric_eigenvalue};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::symbol::SymbolSpec;

/// Slopes at or above this value are read as a divergent tail.
pub const DIVERGENCE_SLOPE: f64 = -1.0;
/// Slopes at or below this value are read as a convergent tail.
pub const CONVERGENCE_SLOPE: f64 = -1.2;
/// Rounding allowance on the inclusive convergence boundary.
const SLOPE_ROUNDING: f64 = 1e-9;
/// Relative tolerance for the symmetry and positivity checks.
pub const SELFADJOINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriterionKind {
    #[serde(rename = "HS-iff")]
    HilbertSchmidt,
    #[serde(rename = "TraceClass-iff")]
    TraceClass,
    #[serde(rename = "Sr-sufficient")]
    SrSmall,
    #[serde(rename = "Sr-sigma")]
    SrSigma,
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionKind::HilbertSchmidt => "HS-iff",
            CriterionKind::TraceClass => "TraceClass-iff",
            CriterionKind::SrSmall => "Sr-sufficient",
            CriterionKind::SrSigma => "Sr-sigma",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailFlag {
    Converging,
    Diverging,
    Inconclusive,
}

impl fmt::Display for TailFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailFlag::Converging => "converging",
            TailFlag::Diverging => "diverging",
            TailFlag::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellSum {
    pub shell: usize,
    pub sum: f64,
}

/// Least-squares fit of log S_s = c + α log(2s + n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellFit {
    pub slope: f64,
    /// α + 1: the power with which partial sums grow when positive.
    pub growth_exponent: f64,
    pub first_shell: usize,
    pub last_shell: usize,
    /// Shells with a positive sum that entered the fit.
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    /// ‖P_N T_m P_N‖_F².
    pub frobenius_sq: f64,
    /// |‖M‖_F² − partial_sum| / partial_sum.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionKind,
    pub partial_sum: f64,
    pub last_shell: f64,
    pub shells: Vec<ShellSum>,
    pub tail_flag: TailFlag,
    /// "satisfied", "violated" or "inconclusive" for the criterion's sum.
    pub evidence: &'static str,
    pub fit: Option<ShellFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Exponent p = 2r/(2 − r) with H^(−σ) ∈ S_p in the factorization argument.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriterionOptions {
    pub quad_order: usize,
    /// Inclusive shell range for the tail fit; defaults to the upper half.
    pub fit_window: Option<(usize, usize)>,
    /// Assemble the matrix for cross-checks (HS only).
    pub cross_check: bool,
}

impl CriterionOptions {
    pub fn new(quad_order: usize) -> Self {
        Self {
            quad_order,
            fit_window: None,
            cross_check: true,
        }
    }
}

/// Shell sums of per-rank terms, in graded order.
pub fn shell_sums(spec: &TruncationSpec, terms: &[f64]) -> Vec<ShellSum> {
    (0..=spec.level())
        .map(|s| ShellSum {
            shell: s,
            sum: compensated_sum(terms[spec.shell_range(s)].iter().copied()),
        })
        .collect()
}

/// Fits the tail of `shells` and classifies it.
pub fn classify_tail(
    shells: &[ShellSum],
    dim: usize,
    window: Option<(usize, usize)>,
) -> (TailFlag, Option<ShellFit>) {
    let Some(last) = shells.last().map(|s| s.shell) else {
        return (TailFlag::Inconclusive, None);
    };
    let (lo, hi) = window.unwrap_or((last.div_ceil(2), last));
    let in_window: Vec<&ShellSum> = shells
        .iter()
        .filter(|s| s.shell >= lo && s.shell <= hi)
        .collect();
    if in_window.len() >= 2 && in_window.iter().all(|s| s.sum == 0.0) {
        return (TailFlag::Converging, None);
    }
    let pts: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|s| s.sum > 0.0)
        .map(|s| (lambda_of_order(s.shell, dim).ln(), s.sum.ln()))
        .collect();
    if pts.len() < 2 {
        return (TailFlag::Inconclusive, None);
    }
    let k = pts.len() as f64;
    let mx = compensated_sum(pts.iter().map(|p| p.0)) / k;
    let my = compensated_sum(pts.iter().map(|p| p.1)) / k;
    let sxy = compensated_sum(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let sxx = compensated_sum(pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    let slope = sxy / sxx;
    let fit = ShellFit {
        slope,
        growth_exponent: slope + 1.0,
        first_shell: lo,
        last_shell: hi.min(last),
        points: pts.len(),
    };
    let flag = if slope >= DIVERGENCE_SLOPE {
        TailFlag::Diverging
    } else if slope <= CONVERGENCE_SLOPE + SLOPE_ROUNDING {
        TailFlag::Converging
    } else {
        TailFlag::Inconclusive
    };
    (flag, Some(fit))
}

fn build_verdict(
    criterion: CriterionKind,
    spec: &TruncationSpec,
    terms: &[f64],
    window: Option<(usize, usize)>,
) -> CriterionVerdict {
    let shells = shell_sums(spec, terms);
    let mut total = NeumaierSum::new();
    total.extend(shells.iter().map(|s| s.sum));
    let (tail_flag, fit) = classify_tail(&shells, spec.dim(), window);
    CriterionVerdict {
        criterion,
        partial_sum: total.value(),
        last_shell: shells.last().map_or(0.0, |s| s.sum),
        shells,
        tail_flag,
        evidence: match tail_flag {
            TailFlag::Converging => "satisfied",
            TailFlag::Diverging => "violated",
            TailFlag::Inconclusive => "inconclusive",
        },
        fit,
        r: None,
        sigma: None,
        companion_exponent: None,
        cross_check: None,
    }
}

fn assemble_for_checks(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    quad_order: usize,
) -> Result<OperatorMatrix> {
    assemble_matrix_with(
        s,
        spec,
        AssemblyOptions {
            quad_order,
            doubling_check: false,
        },
    )
}

/// Σ_ν ∫ |m(x, ν)|² φ_ν(x)² dx < ∞  ⇔  T_m ∈ S_2.
pub fn check_hilbert_schmidt(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    opts: CriterionOptions,
) -> Result<CriterionVerdict> {
    let terms: Vec<f64> = column_integrals(s, spec, opts.quad_order)?
        .iter()
        .map(|c| c.squared)
        .collect();
    let mut v = build_verdict(CriterionKind::HilbertSchmidt, spec, &terms, opts.fit_window);
    v.r = Some(2.0);
    if opts.cross_check {
        let m = assemble_for_checks(s, spec, opts.quad_order)?;
        let frobenius_sq = m.frobenius_sq();
        let gap = (frobenius_sq - v.partial_sum).abs();
        v.cross_check = Some(CrossCheck {
            frobenius_sq,
            relative_gap: if v.partial_sum > 0.0 { gap / v.partial_sum } else { gap },
        });
    }
    Ok(v)
}

/// For positive self-adjoint T_m: Σ_ν ∫ m(x, ν) φ_ν(x)² dx < ∞  ⇔  T_m ∈ S_1.
///
/// Refuses unless the symbol carries the positivity claim and the assembled
/// matrix is symmetric and positive semidefinite to relative 1e−8.
pub fn check_trace_class_positive(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    opts: CriterionOptions,
) -> Result<CriterionVerdict> {
    if !s.claims_positive_selfadjoint() {
        return Err(Error::Refused(
            "trace-class criterion needs the positive self-adjoint claim on the symbol".into(),
        ));
    }
    let m = assemble_for_checks(s, spec, opts.quad_order)?;
    let norm = m.norm_inf();
    let asym = m.asymmetry_inf();
    if asym > SELFADJOINT_TOL * norm {
        return Err(Error::Refused(format!(
            "symmetry check failed: ||M - M^T||_inf = {asym:e} > {SELFADJOINT_TOL:e} * ||M||_inf = {:e}",
            SELFADJOINT_TOL * norm
        )));
    }
    let min_eig = min_symmetric_eigenvalue(&m)?;
    if min_eig < -SELFADJOINT_TOL * norm {
        return Err(Error::Refused(format!(
            "positivity check failed: smallest eigenvalue {min_eig:e} < -{SELFADJOINT_TOL:e} * ||M||_inf"
        )));
    }
    let terms: Vec<f64> = column_integrals(s, spec, opts.quad_order)?
        .iter()
        .map(|c| c.diagonal)
        .collect();
    let mut v = build_verdict(CriterionKind::TraceClass, spec, &terms, opts.fit_window);
    v.r = Some(1.0);
    Ok(v)
}

/// Σ_ν (∫ |m(x, ν)|² φ_ν(x)² dx)^(r/2) < ∞  ⇒  T_m ∈ S_r, for 0 < r ≤ 1.
pub fn check_sr_small(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    r: f64,
    opts: CriterionOptions,
) -> Result<CriterionVerdict> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Sr-sufficient criterion needs 0 < r <= 1, got r={r}"
        )));
    }
    let terms: Vec<f64> = if s.is_multiplier() {
        // singular values of a multiplier are exactly |m(ν)|
        spec.indices()
            .iter()
            .map(|nu| Ok(s.multiplier_value(nu)?.abs().powf(r)))
            .collect::<Result<_>>()?
    } else {
        column_integrals(s, spec, opts.quad_order)?
            .iter()
            .map(|c| c.squared.powf(r / 2.0))
            .collect()
    };
    let mut v = build_verdict(CriterionKind::SrSmall, spec, &terms, opts.fit_window);
    v.r = Some(r);
    Ok(v)
}

/// n(1/r − 1/2): σ must exceed this in the 1 < r < 2 criterion.
pub fn sigma_lower_bound(dim: usize, r: f64) -> f64 {
    dim as f64 * (1.0 / r - 0.5)
}

/// σ used when none is given: n(1/r − 1/2) + 1/2.
pub fn default_sigma(dim: usize, r: f64) -> f64 {
    sigma_lower_bound(dim, r) + 0.5
}

/// Σ_ν λ_ν^(2σ) ∫ |m(x, ν)|² φ_ν(x)² dx < ∞ with σ > n(1/r − 1/2)
/// ⇒  T_m ∈ S_r, for 1 < r < 2.
pub fn check_sr_sigma(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    r: f64,
    sigma: f64,
    opts: CriterionOptions,
) -> Result<CriterionVerdict> {
    if !(r > 1.0 && r < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "Sr-sigma criterion needs 1 < r < 2, got r={r}"
        )));
    }
    let bound = sigma_lower_bound(spec.dim(), r);
    if sigma.is_nan() || sigma <= bound || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma={sigma} must exceed n(1/r - 1/2) = {bound} for n={}, r={r}",
            spec.dim()
        )));
    }
    let terms: Vec<f64> = column_integrals(s, spec, opts.quad_order)?
        .iter()
        .zip(spec.indices())
        .map(|(c, nu)| lambda_of_order(nu.order(), spec.dim()).powf(2.0 * sigma) * c.squared)
        .collect();
    let mut v = build_verdict(CriterionKind::SrSigma, spec, &terms, opts.fit_window);
    v.r = Some(r);
    v.sigma = Some(sigma);
    v.companion_exponent = Some(2.0 * r / (2.0 - r));
    Ok(v)
}
