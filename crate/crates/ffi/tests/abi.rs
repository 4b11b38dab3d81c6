use std::ffi::{CStr, CString};
use std::ptr;

use hspec_ffi::*;

fn last_error() -> String {
    let p = hspec_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn builtin(family: &str, key: &str, value: f64, dim: usize) -> *mut HspecSymbol {
    let family = CString::new(family).unwrap();
    let key = CString::new(key).unwrap();
    let names = [key.as_ptr()];
    let values = [value];
    let mut out = ptr::null_mut();
    let st = unsafe { hspec_symbol_builtin(family.as_ptr(), names.as_ptr(), values.as_ptr(), 1, dim, &mut out) };
    assert_eq!(st, HspecStatus::Ok);
    out
}

fn expr(text: &str, dim: usize) -> *mut HspecSymbol {
    let text = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hspec_symbol_parse(text.as_ptr(), dim, &mut out) }, HspecStatus::Ok);
    out
}

#[test]
fn power_operator_round_trip() {
    let sym = builtin("power", "sigma", 1.0, 1);
    let mut op = ptr::null_mut();
    unsafe {
        assert_eq!(hspec_operator_assemble(sym, 3, 0, &mut op), HspecStatus::Ok);
        let mut n = 0usize;
        assert_eq!(hspec_operator_size(op, &mut n), HspecStatus::Ok);
        assert_eq!(n, 4);

        let mut sv = [0.0; 4];
        assert_eq!(hspec_operator_singular_values(op, sv.as_mut_ptr(), 4), HspecStatus::Ok);
        assert_eq!(sv, [1.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0]);

        let mut entries = [f64::NAN; 16];
        assert_eq!(hspec_operator_entries(op, entries.as_mut_ptr(), 16), HspecStatus::Ok);
        assert_eq!(entries[5], 1.0 / 3.0);
        assert_eq!(entries[1], 0.0);

        let (mut norm, mut raw) = (0.0, 0.0);
        assert_eq!(hspec_operator_schatten_norm(op, 2.0, &mut norm, &mut raw), HspecStatus::Ok);
        let expect = 1.0 + 1.0 / 9.0 + 1.0 / 25.0 + 1.0 / 49.0;
        assert!((raw - expect).abs() < 1e-15);
        assert!((norm - expect.sqrt()).abs() < 1e-15);

        let (mut tr, mut st, mut im) = (0.0, 0.0, 1.0);
        assert_eq!(hspec_operator_matrix_trace(op, &mut tr), HspecStatus::Ok);
        assert_eq!(hspec_operator_spectral_trace(op, &mut st, &mut im), HspecStatus::Ok);
        assert!((tr - st).abs() < 1e-15);
        assert_eq!(im, 0.0);

        let mut small = [0.0; 2];
        assert_eq!(hspec_operator_singular_values(op, small.as_mut_ptr(), 2), HspecStatus::InvalidArgument);

        hspec_operator_free(op);
        hspec_symbol_free(sym);
    }
}

#[test]
fn heat_trace_formula() {
    let sym = builtin("heat", "t", 1.0, 1);
    let mut tr = 0.0;
    unsafe {
        assert_eq!(hspec_trace_formula(sym, 30, 64, &mut tr), HspecStatus::Ok);
        hspec_symbol_free(sym);
    }
    assert!((tr - 0.5 / 1f64.sinh()).abs() < 1e-10);
}

#[test]
fn criteria_and_refusal() {
    let heat = builtin("heat", "t", 1.0, 1);
    let mut v = HspecVerdict {
        partial_sum: 0.0,
        last_shell: 0.0,
        tail_flag: HspecTailFlag::Inconclusive,
        has_fit: false,
        slope: 0.0,
        growth_exponent: 0.0,
        shell_count: 0,
    };
    unsafe {
        assert_eq!(
            hspec_check_criterion(heat, 30, 0, HspecCriterion::TraceClass, 1.0, 0.0, &mut v),
            HspecStatus::Ok
        );
        assert_eq!(v.tail_flag, HspecTailFlag::Converging);
        assert_eq!(v.shell_count, 31);
        assert!((v.partial_sum - 0.5 / 1f64.sinh()).abs() < 1e-12);

        assert_eq!(
            hspec_check_criterion(heat, 30, 0, HspecCriterion::SrSigma, 1.5, 0.1, &mut v),
            HspecStatus::InvalidArgument
        );
        assert!(last_error().contains("0.1666"));
        hspec_symbol_free(heat);

        let e = expr("exp(-lam)", 1);
        assert_eq!(
            hspec_check_criterion(e, 10, 0, HspecCriterion::TraceClass, 1.0, 0.0, &mut v),
            HspecStatus::Refused
        );
        assert_eq!(hspec_symbol_set_positive_selfadjoint(e, true), HspecStatus::Ok);
        assert_eq!(
            hspec_check_criterion(e, 10, 0, HspecCriterion::TraceClass, 1.0, 0.0, &mut v),
            HspecStatus::Ok
        );
        hspec_symbol_free(e);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let bad = CString::new("exp(x1 +").unwrap();
    unsafe {
        assert_eq!(hspec_symbol_parse(bad.as_ptr(), 1, &mut out), HspecStatus::Parse);
        assert!(out.is_null());
        assert!(last_error().contains("column"));

        assert_eq!(hspec_symbol_parse(ptr::null(), 1, &mut out), HspecStatus::NullPointer);
        assert!(last_error().contains("expr"));

        let json = CString::new(r#"{"kind": "expression", "dim": 1, "expr": "1", "bogus": 1}"#).unwrap();
        assert_eq!(hspec_symbol_from_json(json.as_ptr(), &mut out), HspecStatus::Parse);

        let sym = expr("log(x1)", 1);
        let mut val = 0.0;
        let x = [-1.0];
        let nu = [0usize];
        assert_eq!(hspec_symbol_eval(sym, x.as_ptr(), nu.as_ptr(), 1, &mut val), HspecStatus::Evaluation);
        let mut op = ptr::null_mut();
        assert_eq!(hspec_operator_assemble(sym, 3, 0, &mut op), HspecStatus::Evaluation);
        assert!(op.is_null());
        hspec_symbol_free(sym);

        hspec_symbol_free(ptr::null_mut());
        hspec_operator_free(ptr::null_mut());
    }
}

#[test]
fn json_symbol_and_eval() {
    let json = CString::new(r#"{"kind": "expression", "dim": 2, "expr": "x1 * x2 + nu2"}"#).unwrap();
    let mut sym = ptr::null_mut();
    unsafe {
        assert_eq!(hspec_symbol_from_json(json.as_ptr(), &mut sym), HspecStatus::Ok);
        let mut dim = 0;
        assert_eq!(hspec_symbol_dim(sym, &mut dim), HspecStatus::Ok);
        assert_eq!(dim, 2);
        let mut v = 0.0;
        let x = [2.0, 3.0];
        let nu = [1usize, 4];
        assert_eq!(hspec_symbol_eval(sym, x.as_ptr(), nu.as_ptr(), 2, &mut v), HspecStatus::Ok);
        assert_eq!(v, 10.0);
        hspec_symbol_free(sym);
    }
}

#[test]
fn hermite_and_lambda() {
    let nu = [4usize];
    let x = [0.7];
    let mut v = 0.0;
    unsafe {
        assert_eq!(hspec_hermite_eval(nu.as_ptr(), x.as_ptr(), 1, &mut v), HspecStatus::Ok);
        assert!((v - -0.230_364_473_798_035_46).abs() < 1e-14);
        let nu = [2usize, 3];
        assert_eq!(hspec_lambda(nu.as_ptr(), 2, &mut v), HspecStatus::Ok);
        assert_eq!(v, 12.0);
    }
    let version = unsafe { CStr::from_ptr(hspec_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
