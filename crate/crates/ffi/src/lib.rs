//! C ABI over `hspec`.
//!
//! Every function returns an [`HspecStatus`]; on failure the message is kept
//! in a thread-local slot readable through [`hspec_last_error_message`].
//! Handles are opaque and must be released with the matching `_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hspec::criteria::{
    check_hilbert_schmidt, check_sr_sigma, check_sr_small, check_trace_class_positive,
    CriterionOptions, CriterionVerdict, TailFlag,
};
use hspec::hermite::{default_quad_order, eval_hermite_multi, lambda};
use hspec::operator::{assemble_matrix, OperatorMatrix};
use hspec::schatten::{schatten_norm, singular_values, spectral_trace, trace_formula};
use hspec::symbol::{parse_symbol, SymbolSpec};
use hspec::{Error, MultiIndex, TruncationSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HspecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Evaluation = 4,
    Numerical = 5,
    Refused = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HspecCriterion {
    HilbertSchmidt = 0,
    TraceClass = 1,
    SrSmall = 2,
    SrSigma = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HspecTailFlag {
    Converging = 0,
    Diverging = 1,
    Inconclusive = 2,
}

/// Summary of a criterion verdict. `slope` and `growth_exponent` are NaN
/// when `has_fit` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HspecVerdict {
    pub partial_sum: f64,
    pub last_shell: f64,
    pub tail_flag: HspecTailFlag,
    pub has_fit: bool,
    pub slope: f64,
    pub growth_exponent: f64,
    pub shell_count: usize,
}

/// Opaque symbol handle.
pub struct HspecSymbol {
    inner: SymbolSpec,
}

/// Opaque handle to an assembled truncated operator.
pub struct HspecOperator {
    inner: OperatorMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HspecStatus {
    match e {
        Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::Arity { .. }
        | Error::SymbolFile(_)
        | Error::Json(_) => HspecStatus::Parse,
        Error::Evaluation { .. } => HspecStatus::Evaluation,
        Error::Numerical(_) => HspecStatus::Numerical,
        Error::Refused(_) => HspecStatus::Refused,
        _ => HspecStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> HspecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HspecStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            HspecStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HspecStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Core(Error::InvalidArgument(format!("{what} is not valid UTF-8"))))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn quad_or_default(quad_order: usize, level: usize) -> usize {
    if quad_order == 0 {
        default_quad_order(level)
    } else {
        quad_order
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hspec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hspec_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Parses an expression symbol in `dim` variables.
#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_parse(
    expr: *const c_char,
    dim: usize,
    out: *mut *mut HspecSymbol,
) -> HspecStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let text = c_str(expr, "expr")?;
        *out = boxed(HspecSymbol {
            inner: parse_symbol(text, dim)?,
        });
        Ok(())
    })
}

/// Builds a builtin symbol ("power", "heat", "bandlimit") from parallel
/// arrays of parameter names and values.
#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_builtin(
    family: *const c_char,
    param_names: *const *const c_char,
    param_values: *const f64,
    param_count: usize,
    dim: usize,
    out: *mut *mut HspecSymbol,
) -> HspecStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let family = c_str(family, "family")?;
        let names = slice(param_names, param_count, "param_names")?;
        let values = slice(param_values, param_count, "param_values")?;
        let mut params = BTreeMap::new();
        for (&n, &v) in names.iter().zip(values) {
            params.insert(c_str(n, "param name")?.to_string(), v);
        }
        *out = boxed(HspecSymbol {
            inner: SymbolSpec::builtin_named(family, &params, dim)?,
        });
        Ok(())
    })
}

/// Loads a symbol from the JSON symbol-file format.
#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_from_json(
    json: *const c_char,
    out: *mut *mut HspecSymbol,
) -> HspecStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let text = c_str(json, "json")?;
        *out = boxed(HspecSymbol {
            inner: SymbolSpec::from_json_str(text)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_free(symbol: *mut HspecSymbol) {
    if !symbol.is_null() {
        drop(Box::from_raw(symbol));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_dim(symbol: *const HspecSymbol, out: *mut usize) -> HspecStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(symbol, "symbol")?.inner.dim();
        Ok(())
    })
}

/// Sets or clears the positive self-adjoint claim required by the
/// trace-class criterion.
#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_set_positive_selfadjoint(
    symbol: *mut HspecSymbol,
    claim: bool,
) -> HspecStatus {
    guard(|| {
        let s = out_ref(symbol, "symbol")?;
        s.inner = s.inner.clone().with_positive_selfadjoint_claim(claim);
        Ok(())
    })
}

/// Evaluates m(x, ν); `x` and `nu` both hold `dim` entries.
#[no_mangle]
pub unsafe extern "C" fn hspec_symbol_eval(
    symbol: *const HspecSymbol,
    x: *const f64,
    nu: *const usize,
    dim: usize,
    out: *mut f64,
) -> HspecStatus {
    guard(|| {
        let s = deref(symbol, "symbol")?;
        let out = out_ref(out, "out")?;
        let x = slice(x, dim, "x")?;
        let nu = MultiIndex::new(slice(nu, dim, "nu")?.to_vec())?;
        *out = s.inner.eval(x, &nu)?;
        Ok(())
    })
}

/// Assembles P_N T_m P_N at level `level`. `quad_order` 0 selects N + 32.
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_assemble(
    symbol: *const HspecSymbol,
    level: usize,
    quad_order: usize,
    out: *mut *mut HspecOperator,
) -> HspecStatus {
    guard(|| {
        let s = deref(symbol, "symbol")?;
        let out = out_ref(out, "out")?;
        let spec = TruncationSpec::new(s.inner.dim(), level)?;
        let m = assemble_matrix(&s.inner, &spec, quad_or_default(quad_order, level))?;
        *out = boxed(HspecOperator { inner: m });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hspec_operator_free(op: *mut HspecOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Matrix dimension (number of multi-indices with |ν| ≤ N).
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_size(op: *const HspecOperator, out: *mut usize) -> HspecStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(op, "op")?.inner.size();
        Ok(())
    })
}

/// Copies the matrix row-major into `buf`, which must hold size² values.
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_entries(
    op: *const HspecOperator,
    buf: *mut f64,
    len: usize,
) -> HspecStatus {
    guard(|| {
        let m = &deref(op, "op")?.inner;
        let n = m.size();
        if len < n * n {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", n * n)).into());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = m.get(i, j);
            }
        }
        Ok(())
    })
}

/// Writes the singular values in descending order; `buf` must hold size values.
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_singular_values(
    op: *const HspecOperator,
    buf: *mut f64,
    len: usize,
) -> HspecStatus {
    guard(|| {
        let m = &deref(op, "op")?.inner;
        if len < m.size() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, need {}", m.size())).into());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let sv = singular_values(m)?;
        std::slice::from_raw_parts_mut(buf, sv.len()).copy_from_slice(&sv);
        Ok(())
    })
}

/// Schatten r-norm (Σσ^r)^(1/r); the raw sum goes to `raw_sum` when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_schatten_norm(
    op: *const HspecOperator,
    r: f64,
    norm: *mut f64,
    raw_sum: *mut f64,
) -> HspecStatus {
    guard(|| {
        let m = &deref(op, "op")?.inner;
        let norm = out_ref(norm, "norm")?;
        let s = schatten_norm(&singular_values(m)?, r)?;
        *norm = s.norm;
        if let Some(raw) = raw_sum.as_mut() {
            *raw = s.raw_sum;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hspec_operator_matrix_trace(op: *const HspecOperator, out: *mut f64) -> HspecStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(op, "op")?.inner.trace();
        Ok(())
    })
}

/// Sum of eigenvalues. `imaginary_residual` (optional) receives |Σ Im λ|.
#[no_mangle]
pub unsafe extern "C" fn hspec_operator_spectral_trace(
    op: *const HspecOperator,
    out: *mut f64,
    imaginary_residual: *mut f64,
) -> HspecStatus {
    guard(|| {
        let m = &deref(op, "op")?.inner;
        let out = out_ref(out, "out")?;
        let t = spectral_trace(m)?;
        *out = t.value;
        if let Some(im) = imaginary_residual.as_mut() {
            *im = t.imaginary_residual;
        }
        Ok(())
    })
}

/// Σ_{|ν|≤N} ∫ m(x,ν) φ_ν(x)² dx. `quad_order` 0 selects N + 32.
#[no_mangle]
pub unsafe extern "C" fn hspec_trace_formula(
    symbol: *const HspecSymbol,
    level: usize,
    quad_order: usize,
    out: *mut f64,
) -> HspecStatus {
    guard(|| {
        let s = deref(symbol, "symbol")?;
        let out = out_ref(out, "out")?;
        let spec = TruncationSpec::new(s.inner.dim(), level)?;
        *out = trace_formula(&s.inner, &spec, quad_or_default(quad_order, level))?;
        Ok(())
    })
}

fn summarize(v: &CriterionVerdict) -> HspecVerdict {
    HspecVerdict {
        partial_sum: v.partial_sum,
        last_shell: v.last_shell,
        tail_flag: match v.tail_flag {
            TailFlag::Converging => HspecTailFlag::Converging,
            TailFlag::Diverging => HspecTailFlag::Diverging,
            TailFlag::Inconclusive => HspecTailFlag::Inconclusive,
        },
        has_fit: v.fit.is_some(),
        slope: v.fit.as_ref().map_or(f64::NAN, |f| f.slope),
        growth_exponent: v.fit.as_ref().map_or(f64::NAN, |f| f.growth_exponent),
        shell_count: v.shells.len(),
    }
}

/// Runs one criterion. `r` is ignored for HilbertSchmidt and TraceClass and
/// `sigma` is used only by SrSigma. A refused trace-class check returns
/// `HSPEC_STATUS_REFUSED` with the reason in the last-error slot.
#[no_mangle]
pub unsafe extern "C" fn hspec_check_criterion(
    symbol: *const HspecSymbol,
    level: usize,
    quad_order: usize,
    criterion: HspecCriterion,
    r: f64,
    sigma: f64,
    out: *mut HspecVerdict,
) -> HspecStatus {
    guard(|| {
        let s = &deref(symbol, "symbol")?.inner;
        let out = out_ref(out, "out")?;
        let spec = TruncationSpec::new(s.dim(), level)?;
        let opts = CriterionOptions::new(quad_or_default(quad_order, level));
        let v = match criterion {
            HspecCriterion::HilbertSchmidt => check_hilbert_schmidt(s, &spec, opts)?,
            HspecCriterion::TraceClass => check_trace_class_positive(s, &spec, opts)?,
            HspecCriterion::SrSmall => check_sr_small(s, &spec, r, opts)?,
            HspecCriterion::SrSigma => check_sr_sigma(s, &spec, r, sigma, opts)?,
        };
        *out = summarize(&v);
        Ok(())
    })
}

/// Normalized Hermite function φ_ν(x) in `dim` variables.
#[no_mangle]
pub unsafe extern "C" fn hspec_hermite_eval(
    nu: *const usize,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> HspecStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let nu = MultiIndex::new(slice(nu, dim, "nu")?.to_vec())?;
        *out = eval_hermite_multi(&nu, slice(x, dim, "x")?)?;
        Ok(())
    })
}

/// Oscillator eigenvalue λ_ν = 2|ν| + n.
#[no_mangle]
pub unsafe extern "C" fn hspec_lambda(nu: *const usize, dim: usize, out: *mut f64) -> HspecStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let nu = MultiIndex::new(slice(nu, dim, "nu")?.to_vec())?;
        *out = lambda(&nu);
        Ok(())
    })
}
