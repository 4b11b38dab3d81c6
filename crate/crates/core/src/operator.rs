//! Finite sections P_N T_m P_N of pseudo-multipliers in the Hermite basis.
//!
//! Column ν of the matrix holds the coefficients of m(·, ν)φ_ν, i.e.
//! M[μ, ν] = ∫ m(x, ν) φ_ν(x) φ_μ(x) dx, computed with a tensor Gauss–Hermite
//! rule. Multipliers skip quadrature entirely and store the diagonal m(ν).

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::{tensor_value, HermiteEvaluator, TensorGrid};
use crate::multiindex::TruncationSpec;
use crate::sum::{compensated_sum, NeumaierSum};
use crate::symbol::SymbolSpec;

/// Relative change under quadrature doubling above which an assembled
/// matrix carries a warning.
pub const ASSEMBLY_WARNING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    /// x-independent symbols: M = diag(m(ν)).
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    spec: TruncationSpec,
    entries: Entries,
    quad_order: usize,
    assembly_residual: Option<f64>,
}

impl OperatorMatrix {
    pub fn from_dense(spec: TruncationSpec, m: DMatrix<f64>, quad_order: usize) -> Result<Self> {
        if m.nrows() != spec.size() || m.ncols() != spec.size() {
            return Err(Error::DimensionMismatch {
                expected: spec.size(),
                got: m.nrows(),
            });
        }
        Ok(Self {
            spec,
            entries: Entries::Dense(m),
            quad_order,
            assembly_residual: None,
        })
    }

    pub fn from_diagonal(spec: TruncationSpec, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != spec.size() {
            return Err(Error::DimensionMismatch {
                expected: spec.size(),
                got: diag.len(),
            });
        }
        Ok(Self {
            spec,
            entries: Entries::Diagonal(diag),
            quad_order: 0,
            assembly_residual: Some(0.0),
        })
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    /// D.
    pub fn size(&self) -> usize {
        self.spec.size()
    }

    /// Quadrature order per dimension; 0 when no quadrature was needed.
    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn assembly_residual(&self) -> Option<f64> {
        self.assembly_residual
    }

    pub fn residual_warning(&self) -> bool {
        self.assembly_residual
            .is_some_and(|r| r > ASSEMBLY_WARNING_THRESHOLD)
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.entries, Entries::Diagonal(_))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => {
                if row == col {
                    d[row]
                } else {
                    0.0
                }
            }
            Entries::Dense(m) => m[(row, col)],
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match &self.entries {
            Entries::Diagonal(d) => d.clone(),
            Entries::Dense(m) => m.diagonal().iter().copied().collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.entries {
            Entries::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Entries::Dense(m) => m.clone(),
        }
    }

    /// Σ_i M[i, i], compensated, in rank order.
    pub fn trace(&self) -> f64 {
        compensated_sum(self.diagonal())
    }

    /// Σ_{i,j} M[i, j]², column-major order.
    pub fn frobenius_sq(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => compensated_sum(d.iter().map(|v| v * v)),
            Entries::Dense(m) => compensated_sum(m.iter().map(|v| v * v)),
        }
    }

    /// max_i Σ_j |M[i, j]|.
    pub fn norm_inf(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => d.iter().fold(0.0, |a, v| a.max(v.abs())),
            Entries::Dense(m) => m
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// ‖M − Mᵀ‖_∞.
    pub fn asymmetry_inf(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(_) => 0.0,
            Entries::Dense(m) => (m - m.transpose())
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Top-left block for a smaller cutoff (a prefix in the graded ordering).
    pub fn restrict(&self, level: usize) -> Result<OperatorMatrix> {
        if level > self.spec.level() {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict level {} matrix to level {level}",
                self.spec.level()
            )));
        }
        let spec = TruncationSpec::new(self.spec.dim(), level)?;
        let d = spec.size();
        let entries = match &self.entries {
            Entries::Diagonal(v) => Entries::Diagonal(v[..d].to_vec()),
            Entries::Dense(m) => Entries::Dense(m.view((0, 0), (d, d)).into_owned()),
        };
        Ok(Self {
            spec,
            entries,
            quad_order: self.quad_order,
            assembly_residual: self.assembly_residual,
        })
    }

    /// Row-major CSV with a `# n=..,N=..,Q=..` header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# n={},N={},Q={}",
            self.spec.dim(),
            self.spec.level(),
            self.quad_order
        )?;
        let d = self.size();
        for i in 0..d {
            let row: Vec<String> = (0..d).map(|j| format!("{:?}", self.get(i, j))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn metadata(&self, symbol: &SymbolSpec) -> MatrixMetadata {
        MatrixMetadata {
            schema: "hspec.matrix/1",
            dim: self.spec.dim(),
            level: self.spec.level(),
            size: self.size(),
            quad_order: self.quad_order,
            storage: if self.is_diagonal() { "diagonal" } else { "dense" },
            assembly_residual: self.assembly_residual,
            residual_warning: self.residual_warning(),
            symbol: symbol.to_document(),
            layout: "row-major; entry (mu, nu) = <T_m phi_nu, phi_mu>; ranks in graded order",
        }
    }
}

/// Sidecar metadata for an exported matrix.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixMetadata {
    pub schema: &'static str,
    pub dim: usize,
    pub level: usize,
    pub size: usize,
    pub quad_order: usize,
    pub storage: &'static str,
    pub assembly_residual: Option<f64>,
    pub residual_warning: bool,
    pub symbol: crate::symbol::SymbolDocument,
    pub layout: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    pub quad_order: usize,
    /// Reassemble at 2Q and record the relative change.
    pub doubling_check: bool,
}

fn check_inputs(s: &SymbolSpec, spec: &TruncationSpec, quad_order: usize) -> Result<()> {
    if s.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: s.dim(),
        });
    }
    if quad_order < spec.level() + 1 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {quad_order} below level + 1 = {}",
            spec.level() + 1
        )));
    }
    Ok(())
}

/// m(ν) for every ν of the truncation, in rank order.
pub fn multiplier_diagonal(s: &SymbolSpec, spec: &TruncationSpec) -> Result<Vec<f64>> {
    spec.indices().iter().map(|nu| s.multiplier_value(nu)).collect()
}

/// Quadrature points together with the unweighted basis table B[i][p] = φ_i(x_p).
pub(crate) struct Sampling {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Row i holds φ_{unrank(i)} at every grid point.
    pub basis: Vec<Vec<f64>>,
}

impl Sampling {
    pub fn new(spec: &TruncationSpec, quad_order: usize) -> Result<Self> {
        let grid = TensorGrid::new(spec.dim(), quad_order, spec.level())?;
        let npts = grid.len();
        let mut idx = vec![0usize; spec.dim()];
        let mut points = Vec::with_capacity(npts);
        let mut weights = Vec::with_capacity(npts);
        let mut node_idx = Vec::with_capacity(npts);
        for p in 0..npts {
            grid.node_indices(p, &mut idx);
            let mut x = vec![0.0; spec.dim()];
            grid.point(&idx, &mut x);
            points.push(x);
            weights.push(grid.scaled_weight(&idx));
            node_idx.push(idx.clone());
        }
        let basis = spec
            .indices()
            .par_iter()
            .map(|nu| node_idx.iter().map(|ix| grid.basis_value(nu, ix)).collect())
            .collect();
        Ok(Self {
            points,
            weights,
            basis,
        })
    }

    /// Samples w̃_p m(x_p, ν) φ_ν(x_p) for the column of rank `col`.
    pub fn weighted_column_samples(
        &self,
        s: &SymbolSpec,
        spec: &TruncationSpec,
        col: usize,
    ) -> Result<Vec<f64>> {
        let nu = &spec.indices()[col];
        let phi = &self.basis[col];
        self.points
            .iter()
            .zip(&self.weights)
            .zip(phi)
            .map(|((x, &w), &b)| Ok(w * s.eval(x, nu)? * b))
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assemble_dense(s: &SymbolSpec, spec: &TruncationSpec, quad_order: usize) -> Result<DMatrix<f64>> {
    let sampling = Sampling::new(spec, quad_order)?;
    let d = spec.size();
    let columns: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|col| {
            let g = sampling.weighted_column_samples(s, spec, col)?;
            Ok(sampling.basis.iter().map(|row| dot(row, &g)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(d, d, |i, j| columns[j][i]))
}

/// Assembles P_N T_m P_N at quadrature order `quad_order` per dimension,
/// recording the relative change against order 2Q for x-dependent symbols.
pub fn assemble_matrix(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    quad_order: usize,
) -> Result<OperatorMatrix> {
    assemble_matrix_with(
        s,
        spec,
        AssemblyOptions {
            quad_order,
            doubling_check: true,
        },
    )
}

pub fn assemble_matrix_with(
    s: &SymbolSpec,
    spec: &TruncationSpec,
    opts: AssemblyOptions,
) -> Result<OperatorMatrix> {
    if s.is_multiplier() {
        if s.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: s.dim(),
            });
        }
        let mut m = OperatorMatrix::from_diagonal(spec.clone(), multiplier_diagonal(s, spec)?)?;
        m.quad_order = opts.quad_order;
        return Ok(m);
    }
    check_inputs(s, spec, opts.quad_order)?;
    let m = assemble_dense(s, spec, opts.quad_order)?;
    let residual = if opts.doubling_check {
        let fine = assemble_dense(s, spec, 2 * opts.quad_order)?;
        let scale = fine.norm();
        let diff = (&m - &fine).norm();
        Some(if scale > 0.0 { diff / scale } else { diff })
    } else {
        None
    };
    let mut out = OperatorMatrix::from_dense(spec.clone(), m, opts.quad_order)?;
    out.assembly_residual = residual;
    Ok(out)
}

/// Truncated kernel K_m(x, y) = Σ_{|ν|≤N} m(x, ν) φ_ν(x) φ_ν(y).
pub fn kernel_eval(s: &SymbolSpec, spec: &TruncationSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if s.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: s.dim(),
        });
    }
    let ev = HermiteEvaluator::for_spec(spec);
    let tx = ev.tables(x)?;
    let ty = ev.tables(y)?;
    let mut acc = NeumaierSum::new();
    for nu in spec.indices() {
        let m = s.eval(x, nu)?;
        acc.add(m * tensor_value(&tx, nu) * tensor_value(&ty, nu));
    }
    Ok(acc.value())
}

/// Fourier–Hermite coefficients f̂(φ_ν) of a truncated expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    spec: TruncationSpec,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(spec: TruncationSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.size() {
            return Err(Error::DimensionMismatch {
                expected: spec.size(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn unit(spec: TruncationSpec, rank: usize) -> Result<Self> {
        let mut values = vec![0.0; spec.size()];
        *values
            .get_mut(rank)
            .ok_or_else(|| Error::OutOfRange(format!("rank {rank} outside basis")))? = 1.0;
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &TruncationSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Points of the tensor Gauss–Hermite grid in the order [`analyze`] expects samples.
pub fn quadrature_points(dim: usize, quad_order: usize) -> Result<Vec<Vec<f64>>> {
    let grid = TensorGrid::new(dim, quad_order, 0)?;
    let mut idx = vec![0usize; dim];
    Ok((0..grid.len())
        .map(|p| {
            grid.node_indices(p, &mut idx);
            let mut x = vec![0.0; dim];
            grid.point(&idx, &mut x);
            x
        })
        .collect())
}

/// f̂(φ_ν) ≈ Σ_p w̃_p f(x_p) φ_ν(x_p) from samples of f at [`quadrature_points`].
pub fn analyze(samples: &[f64], spec: &TruncationSpec, quad_order: usize) -> Result<CoefficientVector> {
    if quad_order < spec.level() + 1 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {quad_order} below level + 1 = {}",
            spec.level() + 1
        )));
    }
    let sampling = Sampling::new(spec, quad_order)?;
    if samples.len() != sampling.points.len() {
        return Err(Error::DimensionMismatch {
            expected: sampling.points.len(),
            got: samples.len(),
        });
    }
    if let Some(p) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite sample at quadrature point {:?}",
            sampling.points[p]
        )));
    }
    let weighted: Vec<f64> = samples
        .iter()
        .zip(&sampling.weights)
        .map(|(f, w)| f * w)
        .collect();
    let values = sampling
        .basis
        .iter()
        .map(|row| compensated_sum(row.iter().zip(&weighted).map(|(a, b)| a * b)))
        .collect();
    CoefficientVector::new(spec.clone(), values)
}

/// [`analyze`] for a function given as a closure.
pub fn analyze_fn<F: Fn(&[f64]) -> f64>(
    f: F,
    spec: &TruncationSpec,
    quad_order: usize,
) -> Result<CoefficientVector> {
    let samples: Vec<f64> = quadrature_points(spec.dim(), quad_order)?
        .iter()
        .map(|x| f(x))
        .collect();
    analyze(&samples, spec, quad_order)
}

/// Σ_i c_i φ_{unrank(i)}(x).
pub fn synthesize(c: &CoefficientVector, x: &[f64]) -> Result<f64> {
    let ev = HermiteEvaluator::for_spec(&c.spec);
    let t = ev.tables(x)?;
    Ok(compensated_sum(
        c.spec
            .indices()
            .iter()
            .zip(&c.values)
            .map(|(nu, v)| v * tensor_value(&t, nu)),
    ))
}

/// M c.
pub fn apply_matrix(m: &OperatorMatrix, c: &CoefficientVector) -> Result<CoefficientVector> {
    if m.spec != c.spec {
        return Err(Error::InvalidArgument(format!(
            "matrix truncation (n={}, N={}) differs from vector truncation (n={}, N={})",
            m.spec.dim(),
            m.spec.level(),
            c.spec.dim(),
            c.spec.level()
        )));
    }
    let values = match &m.entries {
        Entries::Diagonal(d) => d.iter().zip(&c.values).map(|(a, b)| a * b).collect(),
        Entries::Dense(mat) => (0..m.size())
            .map(|i| compensated_sum((0..m.size()).map(|j| mat[(i, j)] * c.values[j])))
            .collect(),
    };
    CoefficientVector::new(m.spec.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{eval_hermite_1d, gauss_hermite_rule};
    use crate::symbol::{parse_symbol, Builtin};

    fn spec(n: usize, level: usize) -> TruncationSpec {
        TruncationSpec::new(n, level).unwrap()
    }

    #[test]
    fn unit_symbol_gives_identity() {
        let s = parse_symbol("1 + 0 * x1 * x2", 2).unwrap();
        let sp = spec(2, 4);
        let m = assemble_matrix(&s, &sp, 20).unwrap();
        assert!(!m.is_diagonal());
        for i in 0..m.size() {
            for j in 0..m.size() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((m.get(i, j) - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_diagonal() {
        let s = SymbolSpec::builtin(Builtin::Power { sigma: 1.0 }, 1).unwrap();
        let m = assemble_matrix(&s, &spec(1, 3), 35).unwrap();
        assert!(m.is_diagonal());
        assert_eq!(m.diagonal(), vec![1.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0]);
    }

    /// Independent oracle: M[j, k] = ∫ x φ_k φ_j by a separate high-order rule.
    fn position_entry(j: usize, k: usize) -> f64 {
        let rule = gauss_hermite_rule(80).unwrap();
        rule.integrate(|x| x * eval_hermite_1d(k, x).unwrap() * eval_hermite_1d(j, x).unwrap())
    }

    #[test]
    fn position_symbol_is_tridiagonal() {
        let s = parse_symbol("x1", 1).unwrap();
        let m = assemble_matrix(&s, &spec(1, 2), 10).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expected = if j == k + 1 {
                    ((k + 1) as f64 / 2.0).sqrt()
                } else if k == j + 1 {
                    ((j + 1) as f64 / 2.0).sqrt()
                } else {
                    0.0
                };
                assert!((m.get(j, k) - expected).abs() < 1e-13);
                assert!((position_entry(j, k) - expected).abs() < 1e-13);
            }
        }
        assert!(m.assembly_residual().unwrap() < 1e-12);
        assert!(!m.residual_warning());
    }

    #[test]
    fn rejects_low_quadrature() {
        let s = parse_symbol("x1", 1).unwrap();
        assert!(assemble_matrix(&s, &spec(1, 10), 10).is_err());
        assert!(assemble_matrix(&s, &spec(2, 1), 10).is_err());
    }

    #[test]
    fn evaluation_failure_propagates() {
        let s = parse_symbol("log(x1)", 1).unwrap();
        assert!(matches!(
            assemble_matrix(&s, &spec(1, 2), 5),
            Err(Error::Evaluation { .. })
        ));
    }

    #[test]
    fn nested_truncations_agree() {
        let s = parse_symbol("exp(-absnu/2)/(1+x1^2)", 1).unwrap();
        let opts = AssemblyOptions { quad_order: 60, doubling_check: false };
        let big = assemble_matrix_with(&s, &spec(1, 20), opts).unwrap();
        let small = assemble_matrix_with(&s, &spec(1, 10), opts).unwrap();
        let block = big.restrict(10).unwrap();
        for i in 0..small.size() {
            for j in 0..small.size() {
                assert!((block.get(i, j) - small.get(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bandlimit_zero_kernel_is_rank_one() {
        let s = SymbolSpec::builtin(Builtin::Bandlimit { cutoff: 0 }, 1).unwrap();
        let sp = spec(1, 8);
        for &(x, y) in &[(0.0, 0.0), (0.3, -1.2), (2.0, 1.0)] {
            let k = kernel_eval(&s, &sp, &[x], &[y]).unwrap();
            let expected = eval_hermite_1d(0, x).unwrap() * eval_hermite_1d(0, y).unwrap();
            assert!((k - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn reproducing_kernel_projects() {
        let s = parse_symbol("1", 1).unwrap();
        let sp = spec(1, 10);
        let rule = gauss_hermite_rule(60).unwrap();
        for &x in &[-1.5, 0.2, 0.9] {
            let v = rule.integrate(|y| {
                kernel_eval(&s, &sp, &[x], &[y]).unwrap() * eval_hermite_1d(0, y).unwrap()
            });
            assert!((v - eval_hermite_1d(0, x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn analysis_of_basis_functions() {
        let sp = spec(1, 5);
        let c = analyze_fn(|x| eval_hermite_1d(2, x[0]).unwrap(), &sp, 37).unwrap();
        for (i, v) in c.values().iter().enumerate() {
            let target = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - target).abs() < 1e-10);
        }
        let c = analyze_fn(
            |x| eval_hermite_1d(0, x[0]).unwrap() + 2.0 * eval_hermite_1d(3, x[0]).unwrap(),
            &sp,
            37,
        )
        .unwrap();
        let expected = [1.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        for (v, e) in c.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-10);
        }
    }

    #[test]
    fn analysis_of_gaussian() {
        // 40-digit quadrature of ⟨e^(−x²), φ_k⟩; k = 0 equals π^(1/4)√(2/3)
        let expected = [
            1.087_030_772_611_188_5,
            0.0,
            -0.256_215_610_223_941_1,
            0.0,
            0.073_963_075_766_688_32,
            0.0,
            -0.022_506_247_233_266_056,
        ];
        let c = analyze_fn(|x| (-x[0] * x[0]).exp(), &spec(1, 6), 38).unwrap();
        for (v, e) in c.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-13, "{v} vs {e}");
        }
    }

    #[test]
    fn analysis_rejects_non_finite() {
        let sp = spec(1, 2);
        let mut samples = vec![0.0; 5];
        samples[3] = f64::NAN;
        assert!(analyze(&samples, &sp, 5).is_err());
        assert!(analyze(&[0.0; 4], &sp, 5).is_err());
    }

    #[test]
    fn synthesis_roundtrip() {
        let sp = spec(1, 6);
        let c = CoefficientVector::unit(sp.clone(), 0).unwrap();
        assert!((synthesize(&c, &[0.4]).unwrap() - eval_hermite_1d(0, 0.4).unwrap()).abs() < 1e-16);
        let c = analyze_fn(|x| eval_hermite_1d(1, x[0]).unwrap(), &sp, 40).unwrap();
        for &x in &[-2.0, -0.1, 0.0, 0.7, 3.0] {
            assert!((synthesize(&c, &[x]).unwrap() - eval_hermite_1d(1, x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn apply_examples() {
        let sp = spec(1, 4);
        let id = assemble_matrix(&parse_symbol("1", 1).unwrap(), &sp, 10).unwrap();
        let c = CoefficientVector::new(sp.clone(), vec![1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        assert_eq!(apply_matrix(&id, &c).unwrap(), c);

        let heat = SymbolSpec::builtin(Builtin::Heat { t: 0.5 }, 1).unwrap();
        let m = assemble_matrix(&heat, &sp, 10).unwrap();
        let u = CoefficientVector::unit(sp.clone(), 3).unwrap();
        let out = apply_matrix(&m, &u).unwrap();
        assert_eq!(out.values()[3], (-0.5f64 * 7.0).exp());
        assert_eq!(out.values().iter().filter(|v| **v != 0.0).count(), 1);

        let x = assemble_matrix(&parse_symbol("x1", 1).unwrap(), &sp, 10).unwrap();
        let out = apply_matrix(&x, &CoefficientVector::unit(sp.clone(), 0).unwrap()).unwrap();
        assert!((out.values()[1] - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(out.values().iter().enumerate().all(|(i, v)| i == 1 || v.abs() < 1e-14));

        let other = CoefficientVector::unit(spec(1, 3), 0).unwrap();
        assert!(apply_matrix(&x, &other).is_err());
    }

    #[test]
    fn heat_matches_direct_sum() {
        // direct Σ_k m(x, k) f̂_k φ_k(x) against apply-then-synthesize
        let sp = spec(1, 20);
        let heat = SymbolSpec::builtin(Builtin::Heat { t: 1.0 }, 1).unwrap();
        let m = assemble_matrix(&heat, &sp, 52).unwrap();
        let coeffs: Vec<f64> = (0..21).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let c = CoefficientVector::new(sp.clone(), coeffs.clone()).unwrap();
        let via_matrix = synthesize(&apply_matrix(&m, &c).unwrap(), &[0.3]).unwrap();
        let direct: f64 = (0..21)
            .map(|k| (-(2.0 * k as f64 + 1.0)).exp() * coeffs[k] * eval_hermite_1d(k, 0.3).unwrap())
            .sum();
        assert!((via_matrix - direct).abs() < 1e-10);
    }

    #[test]
    fn csv_export() {
        let s = SymbolSpec::builtin(Builtin::Power { sigma: 1.0 }, 1).unwrap();
        let m = assemble_matrix(&s, &spec(1, 1), 33).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# n=1,N=1,Q=33\n1.0,0.0\n0.0,0.3333333333333333\n");
        let meta = serde_json::to_value(m.metadata(&s)).unwrap();
        assert_eq!(meta["storage"], "diagonal");
        assert_eq!(meta["symbol"]["family"], "power");
    }
}
