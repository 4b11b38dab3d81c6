//! Command-line front end: argument model, dispatch and report rendering.
//!
//! Exit codes are part of the contract: 0 on success, 2 for usage, config or
//! input errors, 3 for numerical failures.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::criteria::{
    check_hilbert_schmidt, check_sr_sigma, check_sr_small, check_trace_class_positive,
    default_sigma, CriterionKind, CriterionOptions, CriterionVerdict,
};
use crate::error::{Error, Result};
use crate::hermite::{default_quad_order, orthonormality_residual, DOUBLING_TOLERANCE};
use crate::multiindex::TruncationSpec;
use crate::operator::{assemble_matrix_with, AssemblyOptions};
use crate::schatten::{
    hilbert_schmidt_direct, schatten_norm, singular_values, spectral_trace, trace_formula,
    SchattenReport, SpectralTrace,
};
use crate::symbol::{parse_symbol, SymbolDocument, SymbolSpec};

pub const REPORT_SCHEMA: &str = "hspec.report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Gram-matrix residual accepted by `basis-check`.
pub const BASIS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "hspec", version, about = "Hermite pseudo-multipliers: Schatten norms, criteria and traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble the truncated operator and report its spectral summary.
    Analyze(AnalyzeArgs),
    /// Evaluate the Schatten-class membership criteria for the requested r.
    Criteria(CriteriaArgs),
    /// Compare the trace formula, the matrix trace and the eigenvalue sum.
    Trace(TraceArgs),
    /// Sweep the level cutoff and report values with successive differences.
    Converge(ConvergeArgs),
    /// Check orthonormality of the truncated basis under quadrature.
    BasisCheck(BasisArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SymbolArgs {
    /// Symbol file (JSON).
    #[arg(long, conflicts_with_all = ["builtin", "expr"])]
    pub symbol: Option<PathBuf>,
    /// Builtin family: power, heat or bandlimit.
    #[arg(long, conflicts_with = "expr")]
    pub builtin: Option<String>,
    /// Builtin parameter as key=value (repeatable), e.g. sigma=1, t=0.5, M=4.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Symbol expression, e.g. "x1 * exp(-absnu)".
    #[arg(long)]
    pub expr: Option<String>,
    /// Dimension n (taken from the file when --symbol is used).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Assert that T_m is positive and self-adjoint (verified numerically).
    #[arg(long)]
    pub positive_selfadjoint: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    /// Level cutoff N (|ν| ≤ N).
    #[arg(long)]
    pub level: usize,
    /// Quadrature order per dimension (default N + 32).
    #[arg(long)]
    pub quad: Option<usize>,
    /// Schatten exponents.
    #[arg(long = "r", value_delimiter = ',', default_value = "1,2")]
    pub r: Vec<f64>,
    /// Also write the matrix as CSV here, with a `.meta.json` sidecar.
    #[arg(long)]
    pub export_matrix: Option<PathBuf>,
    /// Skip the reassembly at twice the quadrature order.
    #[arg(long)]
    pub no_doubling: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CriteriaArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long)]
    pub level: usize,
    #[arg(long)]
    pub quad: Option<usize>,
    #[arg(long = "r", value_delimiter = ',', default_value = "2")]
    pub r: Vec<f64>,
    /// σ for 1 < r < 2 (default n(1/r − 1/2) + 1/2).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Shell range for the tail fit as LO:HI (default: upper half).
    #[arg(long, value_name = "LO:HI")]
    pub fit_window: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long)]
    pub level: usize,
    #[arg(long)]
    pub quad: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Σ ∫ m φ_ν².
    Trace,
    /// Eigenvalue sum of the matrix.
    SpectralTrace,
    /// Σ ∫ |m|² φ_ν².
    Hs,
    /// ‖M‖_F².
    Frobenius,
    /// Raw Schatten sums for every --r.
    Schatten,
    /// Gram-matrix residual of the basis.
    Basis,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub symbol: SymbolArgs,
    /// Ascending level cutoffs.
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<usize>,
    /// Fixed quadrature order (default N + 32 at each level).
    #[arg(long)]
    pub quad: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "trace,hs")]
    pub quantity: Vec<Quantity>,
    #[arg(long = "r", value_delimiter = ',', default_value = "1,2")]
    pub r: Vec<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BasisArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long)]
    pub level: usize,
    #[arg(long)]
    pub quad: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_usage() {
        EXIT_USAGE
    } else {
        EXIT_NUMERICAL
    }
}

impl SymbolArgs {
    pub fn resolve(&self) -> Result<SymbolSpec> {
        let spec = if let Some(path) = &self.symbol {
            let s = SymbolSpec::from_file(path)?;
            if let Some(d) = self.dim {
                if d != s.dim() {
                    return Err(usage(format!(
                        "--dim {d} disagrees with dim {} in {}",
                        s.dim(),
                        path.display()
                    )));
                }
            }
            if !self.params.is_empty() {
                return Err(usage("--param only applies to --builtin"));
            }
            s
        } else {
            let dim = self.dim.unwrap_or(1);
            if dim == 0 {
                return Err(usage("--dim must be at least 1"));
            }
            if let Some(name) = &self.builtin {
                let params = parse_params(&self.params)?;
                SymbolSpec::builtin_named(name, &params, dim)?
            } else if let Some(text) = &self.expr {
                if !self.params.is_empty() {
                    return Err(usage("--param only applies to --builtin"));
                }
                parse_symbol(text, dim)?
            } else {
                return Err(usage("one of --symbol, --builtin or --expr is required"));
            }
        };
        Ok(if self.positive_selfadjoint {
            spec.with_positive_selfadjoint_claim(true)
        } else {
            spec
        })
    }
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for p in raw {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| usage(format!("--param `{p}` is not KEY=VALUE")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("--param `{p}`: `{v}` is not a number")))?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(usage(format!("--param `{k}` given twice")));
        }
    }
    Ok(out)
}

fn parse_window(raw: &Option<String>) -> Result<Option<(usize, usize)>> {
    let Some(text) = raw else { return Ok(None) };
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("--fit-window `{text}` is not LO:HI")))?;
    let lo: usize = a.trim().parse().map_err(|_| usage(format!("bad --fit-window `{text}`")))?;
    let hi: usize = b.trim().parse().map_err(|_| usage(format!("bad --fit-window `{text}`")))?;
    if lo >= hi {
        return Err(usage(format!("--fit-window `{text}` needs LO < HI")));
    }
    Ok(Some((lo, hi)))
}

/// Validated run configuration, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolDocument>,
    pub dim: usize,
    pub levels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub r: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub format: Format,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(usage("dimension must be at least 1"));
        }
        if let Some(r) = self.r.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(usage(format!("every r must be positive, got {r}")));
        }
        if let Some(q) = self.quad_order {
            if let Some(&n) = self.levels.iter().max() {
                if q < n + 1 {
                    return Err(usage(format!("--quad {q} must be at least level + 1 = {}", n + 1)));
                }
            }
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(usage("levels must be strictly ascending"));
        }
        Ok(())
    }

    fn quad_for(&self, level: usize) -> usize {
        self.quad_order.unwrap_or_else(|| default_quad_order(level))
    }
}

#[derive(Debug, Serialize)]
struct Software {
    name: &'static str,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    software: Software,
    config: &'a RunConfig,
    result: T,
}

/// Rendered command output.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub path: Option<PathBuf>,
}

fn render<T: Serialize>(
    cfg: &RunConfig,
    result: &T,
    csv: impl FnOnce() -> String,
    path: Option<PathBuf>,
) -> Result<Output> {
    let text = match cfg.format {
        Format::Json => {
            let env = Envelope {
                schema: REPORT_SCHEMA,
                software: Software {
                    name: "hspec",
                    version: crate::VERSION,
                },
                config: cfg,
                result,
            };
            let mut s = serde_json::to_string_pretty(&env)?;
            s.push('\n');
            s
        }
        Format::Csv => csv(),
    };
    Ok(Output { text, path })
}

#[derive(Debug, Serialize)]
struct Quadrature {
    order: usize,
    assembly_residual: Option<f64>,
    residual_warning: bool,
}

#[derive(Debug, Serialize)]
struct AnalyzeResult {
    size: usize,
    storage: &'static str,
    quadrature: Quadrature,
    report: SchattenReport,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<Output> {
    let symbol = args.symbol.resolve()?;
    let cfg = RunConfig {
        command: "analyze",
        symbol: Some(symbol.to_document()),
        dim: symbol.dim(),
        levels: vec![args.level],
        quad_order: args.quad,
        r: args.r.clone(),
        sigma: None,
        format: args.out.format,
    };
    cfg.validate()?;
    let spec = TruncationSpec::new(symbol.dim(), args.level)?;
    let quad = cfg.quad_for(args.level);
    let m = assemble_matrix_with(
        &symbol,
        &spec,
        AssemblyOptions {
            quad_order: quad,
            doubling_check: !args.no_doubling,
        },
    )?;
    if let Some(path) = &args.export_matrix {
        let file = std::fs::File::create(path)?;
        m.write_csv(std::io::BufWriter::new(file))?;
        let meta_path = path.with_extension("meta.json");
        let mut meta = serde_json::to_string_pretty(&m.metadata(&symbol))?;
        meta.push('\n');
        std::fs::write(meta_path, meta)?;
    }
    let report = SchattenReport::compute(&symbol, &m, &args.r)?;
    let result = AnalyzeResult {
        size: m.size(),
        storage: if m.is_diagonal() { "diagonal" } else { "dense" },
        quadrature: Quadrature {
            order: quad,
            assembly_residual: m.assembly_residual(),
            residual_warning: m.residual_warning(),
        },
        report,
    };
    render(
        &cfg,
        &result,
        || {
            let mut s = String::from("index,singular_value\n");
            for (i, v) in result.report.singular_values.iter().enumerate() {
                let _ = writeln!(s, "{i},{v:?}");
            }
            s
        },
        args.out.output.clone(),
    )
}

#[derive(Debug, Serialize)]
struct Refusal {
    criterion: CriterionKind,
    r: f64,
    reason: String,
}

#[derive(Debug, Serialize)]
struct CriteriaResult {
    verdicts: Vec<CriterionVerdict>,
    refusals: Vec<Refusal>,
}

pub fn cmd_criteria(args: &CriteriaArgs) -> Result<Output> {
    let symbol = args.symbol.resolve()?;
    let needs_sigma = args.r.iter().any(|&r| r > 1.0 && r < 2.0);
    let sigma = match (args.sigma, needs_sigma) {
        (Some(s), _) => Some(s),
        (None, true) => None,
        (None, false) => None,
    };
    let mut cfg = RunConfig {
        command: "criteria",
        symbol: Some(symbol.to_document()),
        dim: symbol.dim(),
        levels: vec![args.level],
        quad_order: args.quad,
        r: args.r.clone(),
        sigma,
        format: args.out.format,
    };
    cfg.validate()?;
    if let Some(r) = args.r.iter().find(|&&r| r > 2.0) {
        return Err(usage(format!("no criterion applies to r={r} > 2")));
    }
    let spec = TruncationSpec::new(symbol.dim(), args.level)?;
    let opts = CriterionOptions {
        quad_order: cfg.quad_for(args.level),
        fit_window: parse_window(&args.fit_window)?,
        cross_check: true,
    };
    let mut verdicts = Vec::new();
    let mut refusals = Vec::new();
    for &r in &args.r {
        if r == 2.0 {
            verdicts.push(check_hilbert_schmidt(&symbol, &spec, opts)?);
        } else if r <= 1.0 {
            if r == 1.0 {
                match check_trace_class_positive(&symbol, &spec, opts) {
                    Ok(v) => verdicts.push(v),
                    Err(Error::Refused(reason)) => refusals.push(Refusal {
                        criterion: CriterionKind::TraceClass,
                        r,
                        reason,
                    }),
                    Err(e) => return Err(e),
                }
            }
            verdicts.push(check_sr_small(&symbol, &spec, r, opts)?);
        } else {
            let s = args.sigma.unwrap_or_else(|| default_sigma(symbol.dim(), r));
            verdicts.push(check_sr_sigma(&symbol, &spec, r, s, opts)?);
        }
    }
    if cfg.sigma.is_none() && needs_sigma {
        cfg.sigma = verdicts.iter().find_map(|v| v.sigma);
    }
    let result = CriteriaResult { verdicts, refusals };
    render(
        &cfg,
        &result,
        || {
            let mut s = String::from("criterion,r,shell,sum\n");
            for v in &result.verdicts {
                for sh in &v.shells {
                    let _ = writeln!(s, "{},{:?},{},{:?}", v.criterion, v.r.unwrap_or(f64::NAN), sh.shell, sh.sum);
                }
            }
            s
        },
        args.out.output.clone(),
    )
}

#[derive(Debug, Serialize)]
struct TraceResult {
    formula_trace: f64,
    matrix_trace: f64,
    spectral_trace: SpectralTrace,
    formula_vs_matrix: f64,
    spectral_vs_matrix: f64,
    quadrature: Quadrature,
}

pub fn cmd_trace(args: &TraceArgs) -> Result<Output> {
    let symbol = args.symbol.resolve()?;
    let cfg = RunConfig {
        command: "trace",
        symbol: Some(symbol.to_document()),
        dim: symbol.dim(),
        levels: vec![args.level],
        quad_order: args.quad,
        r: Vec::new(),
        sigma: None,
        format: args.out.format,
    };
    cfg.validate()?;
    let spec = TruncationSpec::new(symbol.dim(), args.level)?;
    let quad = cfg.quad_for(args.level);
    let m = assemble_matrix_with(
        &symbol,
        &spec,
        AssemblyOptions {
            quad_order: quad,
            doubling_check: true,
        },
    )?;
    let formula_trace = trace_formula(&symbol, &spec, quad)?;
    let matrix_trace = m.trace();
    let spectral = spectral_trace(&m)?;
    let result = TraceResult {
        formula_trace,
        matrix_trace,
        formula_vs_matrix: (formula_trace - matrix_trace).abs(),
        spectral_vs_matrix: (spectral.value - matrix_trace).abs(),
        spectral_trace: spectral,
        quadrature: Quadrature {
            order: quad,
            assembly_residual: m.assembly_residual(),
            residual_warning: m.residual_warning(),
        },
    };
    render(
        &cfg,
        &result,
        || {
            format!(
                "quantity,value\nformula_trace,{:?}\nmatrix_trace,{:?}\nspectral_trace,{:?}\nimaginary_residual,{:?}\n",
                result.formula_trace,
                result.matrix_trace,
                result.spectral_trace.value,
                result.spectral_trace.imaginary_residual
            )
        },
        args.out.output.clone(),
    )
}

#[derive(Debug, Serialize)]
struct SweepPoint {
    level: usize,
    quad_order: usize,
    value: f64,
    difference: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Series {
    quantity: String,
    points: Vec<SweepPoint>,
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<Output> {
    let symbol = args.symbol.resolve()?;
    let needs_r = args.quantity.contains(&Quantity::Schatten);
    let cfg = RunConfig {
        command: "converge",
        symbol: Some(symbol.to_document()),
        dim: symbol.dim(),
        levels: args.levels.clone(),
        quad_order: args.quad,
        r: if needs_r { args.r.clone() } else { Vec::new() },
        sigma: None,
        format: args.out.format,
    };
    cfg.validate()?;

    let mut names: Vec<String> = Vec::new();
    for q in &args.quantity {
        match q {
            Quantity::Schatten => names.extend(args.r.iter().map(|r| format!("schatten:{r}"))),
            other => names.push(
                other
                    .to_possible_value()
                    .map(|v| v.get_name().to_string())
                    .unwrap_or_default(),
            ),
        }
    }
    let mut values: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); names.len()];
    for &level in &args.levels {
        let spec = TruncationSpec::new(symbol.dim(), level)?;
        let quad = cfg.quad_for(level);
        let needs_matrix = args.quantity.iter().any(|q| {
            matches!(q, Quantity::SpectralTrace | Quantity::Frobenius | Quantity::Schatten)
        });
        let matrix = if needs_matrix {
            Some(assemble_matrix_with(
                &symbol,
                &spec,
                AssemblyOptions {
                    quad_order: quad,
                    doubling_check: false,
                },
            )?)
        } else {
            None
        };
        let mut slot = 0;
        for q in &args.quantity {
            let mut push = |v: f64| {
                values[slot].push((level, quad, v));
                slot += 1;
            };
            match q {
                Quantity::Trace => push(trace_formula(&symbol, &spec, quad)?),
                Quantity::SpectralTrace => push(spectral_trace(matrix.as_ref().unwrap())?.value),
                Quantity::Hs => push(hilbert_schmidt_direct(&symbol, &spec, quad)?),
                Quantity::Frobenius => push(matrix.as_ref().unwrap().frobenius_sq()),
                Quantity::Schatten => {
                    let sv = singular_values(matrix.as_ref().unwrap())?;
                    for &r in &args.r {
                        push(schatten_norm(&sv, r)?.raw_sum);
                    }
                }
                Quantity::Basis => push(orthonormality_residual(&spec, quad)?),
            }
        }
    }
    let series: Vec<Series> = names
        .into_iter()
        .zip(values)
        .map(|(quantity, pts)| {
            let mut prev: Option<f64> = None;
            let points = pts
                .into_iter()
                .map(|(level, quad_order, value)| {
                    let difference = prev.map(|p| value - p);
                    prev = Some(value);
                    SweepPoint {
                        level,
                        quad_order,
                        value,
                        difference,
                    }
                })
                .collect();
            Series { quantity, points }
        })
        .collect();
    render(
        &cfg,
        &series,
        || {
            let mut s = String::from("quantity,level,value,difference\n");
            for ser in &series {
                for p in &ser.points {
                    let diff = p.difference.map(|d| format!("{d:?}")).unwrap_or_default();
                    let _ = writeln!(s, "{},{},{:?},{}", ser.quantity, p.level, p.value, diff);
                }
            }
            s
        },
        args.out.output.clone(),
    )
}

#[derive(Debug, Serialize)]
struct BasisResult {
    size: usize,
    quad_order: usize,
    residual: f64,
    doubled_quad_order: usize,
    doubled_residual: f64,
    tolerance: f64,
    doubling_flag: bool,
    pass: bool,
}

pub fn cmd_basis_check(args: &BasisArgs) -> Result<Output> {
    let cfg = RunConfig {
        command: "basis-check",
        symbol: None,
        dim: args.dim,
        levels: vec![args.level],
        quad_order: args.quad,
        r: Vec::new(),
        sigma: None,
        format: args.out.format,
    };
    cfg.validate()?;
    let spec = TruncationSpec::new(args.dim, args.level)?;
    let quad = cfg.quad_for(args.level);
    let residual = orthonormality_residual(&spec, quad)?;
    let doubled_residual = orthonormality_residual(&spec, 2 * quad)?;
    let result = BasisResult {
        size: spec.size(),
        quad_order: quad,
        residual,
        doubled_quad_order: 2 * quad,
        doubled_residual,
        tolerance: BASIS_TOLERANCE,
        doubling_flag: (residual - doubled_residual).abs() > DOUBLING_TOLERANCE,
        pass: residual <= BASIS_TOLERANCE,
    };
    render(
        &cfg,
        &result,
        || {
            format!(
                "level,quad_order,residual\n{},{},{:?}\n{},{},{:?}\n",
                args.level, quad, residual, args.level, 2 * quad, doubled_residual
            )
        },
        args.out.output.clone(),
    )
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Criteria(a) => cmd_criteria(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Converge(a) => cmd_converge(a),
        Command::BasisCheck(a) => cmd_basis_check(a),
    }
}

/// Writes an output to its destination (stdout when no path is set).
pub fn emit(out: &Output) -> Result<()> {
    match &out.path {
        Some(p) => std::fs::write(p, &out.text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Applies `HSPEC_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("HSPEC_THREADS=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot size thread pool: {e}")))
}
