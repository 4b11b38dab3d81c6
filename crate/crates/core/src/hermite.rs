//! Normalized Hermite functions, the oscillator eigenvalues and Gauss–Hermite rules.
//!
//! φ_k(x) = (2^k k! √π)^(−1/2) H_k(x) e^(−x²/2) is never built from the raw
//! polynomial H_k. The normalized three-term recurrence
//!
//! ```text
//! φ_{k+1} = x √(2/(k+1)) φ_k − √(k/(k+1)) φ_{k−1}
//! ```
//!
//! is run on the weight-free values ĥ_k = φ_k e^(x²/2) with a running
//! logarithmic scale, and the Gaussian factor is applied once at the end.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, TruncationSpec};
use crate::sum::compensated_sum;

/// Extra quadrature nodes per dimension added on top of the level cutoff.
pub const DEFAULT_QUAD_MARGIN: usize = 32;

/// Relative change under quadrature doubling above which a result is flagged.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;

const RESCALE_THRESHOLD: f64 = 1e150;

/// Default quadrature order per dimension for a level cutoff N: Q = N + 32.
pub fn default_quad_order(level: usize) -> usize {
    level + DEFAULT_QUAD_MARGIN
}

/// π^(−1/4).
pub fn ground_state_peak() -> f64 {
    PI.powf(-0.25)
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Hermite function evaluated at non-finite point {x}"
        )))
    }
}

/// φ_0(x), …, φ_max(x) at one point.
pub fn hermite_functions(max_degree: usize, x: f64) -> Result<Vec<f64>> {
    check_finite(x)?;
    let mut out = Vec::with_capacity(max_degree + 1);
    let gauss = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = ground_state_peak();
    let mut log_scale = 0.0;
    out.push(cur * gauss.exp());
    for k in 0..max_degree {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            log_scale += RESCALE_THRESHOLD.ln();
        }
        out.push(cur * (log_scale + gauss).exp());
    }
    Ok(out)
}

/// φ_k(x).
pub fn eval_hermite_1d(k: usize, x: f64) -> Result<f64> {
    Ok(hermite_functions(k, x)?[k])
}

/// φ_ν(x) = Π_j φ_{ν_j}(x_j).
pub fn eval_hermite_multi(nu: &MultiIndex, x: &[f64]) -> Result<f64> {
    if x.len() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            got: x.len(),
        });
    }
    let mut prod = 1.0;
    for (&k, &xj) in nu.entries().iter().zip(x) {
        prod *= eval_hermite_1d(k, xj)?;
    }
    Ok(prod)
}

/// Eigenvalue of the harmonic oscillator on φ_ν: 2|ν| + n.
pub fn lambda(nu: &MultiIndex) -> f64 {
    lambda_of_order(nu.order(), nu.dim())
}

pub fn lambda_of_order(order: usize, dim: usize) -> f64 {
    (2 * order + dim) as f64
}

/// Evaluates tensor-product Hermite functions with per-coordinate degree at
/// most `max_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermiteEvaluator {
    pub dim: usize,
    pub max_degree: usize,
}

impl HermiteEvaluator {
    pub fn new(dim: usize, max_degree: usize) -> Self {
        Self { dim, max_degree }
    }

    pub fn for_spec(spec: &TruncationSpec) -> Self {
        Self::new(spec.dim(), spec.level())
    }

    /// Per-coordinate tables: `out[j][k] = φ_k(x_j)`.
    pub fn tables(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        x.iter()
            .map(|&xj| hermite_functions(self.max_degree, xj))
            .collect()
    }

    pub fn eval(&self, nu: &MultiIndex, x: &[f64]) -> Result<f64> {
        if nu.entries().iter().any(|&k| k > self.max_degree) {
            return Err(Error::OutOfRange(format!(
                "multi-index {nu} exceeds evaluator degree {}",
                self.max_degree
            )));
        }
        eval_hermite_multi(nu, x)
    }
}

/// Product of table entries for one multi-index.
pub(crate) fn tensor_value(tables: &[Vec<f64>], nu: &MultiIndex) -> f64 {
    nu.entries()
        .iter()
        .zip(tables)
        .map(|(&k, t)| t[k])
        .product()
}

/// Gauss–Hermite rule for the weight e^(−x²).
///
/// `scaled_weights[q] = weights[q] · e^(x_q²)` is stored directly (computed
/// as 1/(Q φ_{Q−1}(x_q)²)), so integrands of the form g(x)φ_ν(x)φ_μ(x) are
/// integrated as Σ_q scaled_weights[q] g φ_ν φ_μ without ever forming e^(x²).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scaled_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights against e^(−x²). Underflow to zero for very large orders.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled_weights(&self) -> &[f64] {
        &self.scaled_weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫ f(x) e^(−x²) dx.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }

    /// ∫ g(x) dx for g with Gaussian decay.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        compensated_sum(
            self.nodes
                .iter()
                .zip(&self.scaled_weights)
                .map(|(&x, &w)| w * g(x)),
        )
    }
}

/// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix with
/// off-diagonals √(k/2), polished by Newton steps on φ_Q.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    let q = order;
    let jacobi = DMatrix::from_fn(q, q, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(jacobi, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numerical(format!("Jacobi eigenproblem for order {q} did not converge"))
    })?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let phi = hermite_functions(q, *x)?;
            let deriv = (2.0 * q as f64).sqrt() * phi[q - 1] - *x * phi[q];
            if deriv == 0.0 {
                break;
            }
            let step = phi[q] / deriv;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // enforce exact symmetry about the origin
    for i in 0..q / 2 {
        let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[q - 1 - i] = m;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }

    let mut scaled_weights = Vec::with_capacity(q);
    for &x in &nodes {
        let p = hermite_functions(q - 1, x)?[q - 1];
        scaled_weights.push(1.0 / (q as f64 * p * p));
    }
    for i in 0..q / 2 {
        let w = 0.5 * (scaled_weights[i] + scaled_weights[q - 1 - i]);
        scaled_weights[i] = w;
        scaled_weights[q - 1 - i] = w;
    }
    if !scaled_weights.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive Gauss-Hermite weight at order {q}"
        )));
    }
    let weights = nodes
        .iter()
        .zip(&scaled_weights)
        .map(|(&x, &w)| w * (-x * x).exp())
        .collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        scaled_weights,
    })
}

/// Tensor product of a 1-D rule in `dim` dimensions, with the 1-D Hermite
/// tables precomputed at every node.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    dim: usize,
    rule: QuadratureRule,
    node_tables: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(dim: usize, order: usize, max_degree: usize) -> Result<Self> {
        let rule = gauss_hermite_rule(order)?;
        let node_tables = rule
            .nodes()
            .iter()
            .map(|&x| hermite_functions(max_degree, x))
            .collect::<Result<_>>()?;
        Ok(Self {
            dim,
            rule,
            node_tables,
        })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Q^n.
    pub fn len(&self) -> usize {
        self.rule.order().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-coordinate node indices of grid point `p` (last coordinate fastest).
    pub fn node_indices(&self, mut p: usize, out: &mut [usize]) {
        let q = self.rule.order();
        for j in (0..self.dim).rev() {
            out[j] = p % q;
            p /= q;
        }
    }

    pub fn point(&self, idx: &[usize], out: &mut [f64]) {
        for (o, &i) in out.iter_mut().zip(idx) {
            *o = self.rule.nodes()[i];
        }
    }

    pub fn scaled_weight(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.rule.scaled_weights()[i]).product()
    }

    /// φ_ν at the grid point with node indices `idx`.
    pub fn basis_value(&self, nu: &MultiIndex, idx: &[usize]) -> f64 {
        nu.entries()
            .iter()
            .zip(idx)
            .map(|(&k, &i)| self.node_tables[i][k])
            .product()
    }
}

/// max |G − I| for the Gram matrix of the truncated basis under the tensor rule.
pub fn orthonormality_residual(spec: &TruncationSpec, order: usize) -> Result<f64> {
    let grid = TensorGrid::new(spec.dim(), order, spec.level())?;
    let d = spec.size();
    let npts = grid.len();
    let mut basis = DMatrix::<f64>::zeros(d, npts);
    let mut idx = vec![0usize; spec.dim()];
    for p in 0..npts {
        grid.node_indices(p, &mut idx);
        let sw = grid.scaled_weight(&idx).sqrt();
        for (i, nu) in spec.indices().iter().enumerate() {
            basis[(i, p)] = sw * grid.basis_value(nu, &idx);
        }
    }
    let gram = &basis * basis.transpose();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    Ok(worst)
}
