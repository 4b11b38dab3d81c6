use hspec::criteria::{check_hilbert_schmidt, check_sr_small, CriterionOptions};
use hspec::hermite::gauss_hermite_rule;
use hspec::operator::{apply_matrix, assemble_matrix, kernel_eval, synthesize, Entries};
use hspec::schatten::{schatten_norm, singular_values, spectral_trace, trace_formula};
use hspec::symbol::{parse_expr, parse_symbol, SymbolSpec};
use hspec::{CoefficientVector, MultiIndex, TruncationSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;

const CORPUS: &[(&str, usize)] = &[
    ("1", 1),
    ("0.5", 1),
    ("1e-3", 1),
    ("2.5E+2", 1),
    ("x1", 1),
    ("nu1", 1),
    ("absnu", 1),
    ("lam", 1),
    ("n", 1),
    ("pi", 1),
    ("e", 1),
    ("-x1", 1),
    ("--x1", 1),
    ("-x1^2", 1),
    ("(-x1)^2", 1),
    ("2^-1", 1),
    ("x1^-nu1", 1),
    ("1 + 2 * 3", 1),
    ("(1 + 2) * 3", 1),
    ("1 - 2 - 3", 1),
    ("1 / 2 / 3", 1),
    ("1 - (2 - 3)", 1),
    ("x1 * exp(-absnu)", 1),
    ("exp(-x1^2)*exp(-absnu)", 1),
    ("exp(-absnu/2)/(1+x1^2)", 1),
    ("exp(-lam)", 1),
    ("lam^(-1.5)", 1),
    ("pow(lam, -2)", 1),
    ("min(1, absnu)", 1),
    ("max(x1, -x1)", 1),
    ("abs(x1) * sqrt(lam)", 1),
    ("log(1 + x1^2)", 1),
    ("sin(x1) + cos(x1)", 1),
    ("sin(pi * x1) / (1 + absnu)", 1),
    ("exp(-(x1^2 + x2^2)) * exp(-absnu)", 2),
    ("x1 * x2", 2),
    ("nu1 - nu2", 2),
    ("pow(x1, 2) + pow(x2, 2)", 2),
    ("exp(-absnu/4) * cos(x1 - x2)", 2),
    ("1 / (1 + x1^2 + x2^2)", 2),
    ("min(nu1, nu2) + max(nu1, nu2)", 2),
    ("lam / n", 2),
    ("sqrt(abs(x1 * x2 * x3))", 3),
    ("exp(-lam) * (1 + x3)", 3),
    ("nu1 + nu2 + nu3 - absnu", 3),
    ("((((x1))))", 1),
    ("-(-(-x1))", 1),
    ("2 * -x1", 1),
    ("-2 ^ 2 * 3", 1),
    ("e ^ (pi / 4)", 1),
    ("0.125 * lam ^ 2 - 3 * absnu", 1),
    ("exp(-0.5 * x1^2 - 0.25 * absnu)", 1),
    ("max(0, 1 - absnu / 10)", 1),
];

#[test]
fn parser_round_trip_corpus() {
    assert!(CORPUS.len() >= 50);
    for &(text, dim) in CORPUS {
        let tree = parse_expr(text, dim).unwrap_or_else(|e| panic!("{text}: {e}"));
        let printed = tree.to_string();
        let again = parse_expr(&printed, dim).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(tree, again, "{text} -> {printed}");
        assert_eq!(printed, again.to_string());
    }
}

fn arb_expr(dim: usize) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|v| format!("{}", v as f64 / 8.0)),
        (1..=dim).prop_map(|j| format!("x{j}")),
        (1..=dim).prop_map(|j| format!("nu{j}")),
        Just("absnu".to_string()),
        Just("lam".to_string()),
        Just("pi".to_string()),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), prop::sample::select(vec!["exp", "sin", "cos", "abs"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    })
}

proptest! {
    #[test]
    fn generated_expressions_round_trip(text in arb_expr(2)) {
        let tree = parse_expr(&text, 2).unwrap();
        prop_assert_eq!(&parse_expr(&tree.to_string(), 2).unwrap(), &tree);
    }

    #[test]
    fn multiplier_ignores_x(
        text in arb_expr(1).prop_filter("x-free", |t| !t.contains('x')),
        x in -5.0f64..5.0, y in -5.0f64..5.0, k in 0usize..20,
    ) {
        let s = parse_symbol(&text, 1).unwrap();
        prop_assert!(s.is_multiplier());
        let nu = MultiIndex::new(vec![k]).unwrap();
        match (s.eval(&[x], &nu), s.eval(&[y], &nu)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "inconsistent {:?}", other),
        }
    }

    #[test]
    fn builtins_positive_and_monotone(sigma in 0.01f64..4.0, t in 0.01f64..4.0, dim in 1usize..4) {
        let power = SymbolSpec::builtin_named("power", &param("sigma", sigma), dim).unwrap();
        let heat = SymbolSpec::builtin_named("heat", &param("t", t), dim).unwrap();
        let x = vec![0.3; dim];
        let mut prev = f64::INFINITY;
        for s in 0..30 {
            let mut e = vec![0; dim];
            e[0] = s;
            let nu = MultiIndex::new(e).unwrap();
            let p = power.eval(&x, &nu).unwrap();
            prop_assert!(p > 0.0 && p < prev);
            prev = p;
            prop_assert!(heat.eval(&x, &nu).unwrap() > 0.0);
        }
    }

    #[test]
    fn frobenius_matches_schatten_two(text in arb_expr(1), level in 0usize..12) {
        let Ok(s) = parse_symbol(&text, 1) else { return Ok(()) };
        let spec = TruncationSpec::new(1, level).unwrap();
        let Ok(m) = assemble_matrix(&s, &spec, level + 20) else { return Ok(()) };
        let fro = m.frobenius_sq();
        prop_assume!(fro.is_finite() && fro > 1e-200 && fro < 1e200);
        let s2 = schatten_norm(&singular_values(&m).unwrap(), 2.0).unwrap().raw_sum;
        prop_assert!((s2 - fro).abs() <= 1e-10 * fro, "{s2} vs {fro}");
    }

    #[test]
    fn trace_identity(text in arb_expr(1), level in 0usize..12) {
        let Ok(s) = parse_symbol(&text, 1) else { return Ok(()) };
        let spec = TruncationSpec::new(1, level).unwrap();
        let Ok(m) = assemble_matrix(&s, &spec, level + 20) else { return Ok(()) };
        let norm = m.norm_inf();
        prop_assume!(norm.is_finite() && norm < 1e100);
        let st = spectral_trace(&m).unwrap();
        prop_assert!((st.value - m.trace()).abs() <= 1e-8 * norm.max(1e-300), "{} vs {}", st.value, m.trace());
    }

    #[test]
    fn holder_on_diagonals(seed in any::<u64>()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let a: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        for (p, q) in [(2.0, 2.0), (4.0, 4.0)] {
            let r = 1.0 / (1.0 / p + 1.0 / q);
            let lhs = schatten_norm(&ab, r).unwrap().raw_sum;
            let rhs = schatten_norm(&a, p).unwrap().raw_sum.powf(r / p)
                * schatten_norm(&b, q).unwrap().raw_sum.powf(r / q);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
        // q = ∞ proxy: r = p and ‖B‖_∞ = max b.
        let bmax = b.iter().cloned().fold(0.0, f64::max);
        let lhs = schatten_norm(&ab, 2.0).unwrap().raw_sum;
        let rhs = schatten_norm(&a, 2.0).unwrap().raw_sum * bmax * bmax;
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn schatten_sums_monotone_in_r(t in 0.05f64..3.0, level in 1usize..40) {
        let heat = SymbolSpec::builtin_named("heat", &param("t", t), 1).unwrap();
        let spec = TruncationSpec::new(1, level).unwrap();
        let sv = singular_values(&assemble_matrix(&heat, &spec, level + 1).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let s = schatten_norm(&sv, r).unwrap().raw_sum;
            prop_assert!(s <= prev);
            prev = s;
        }
    }
}

fn param(k: &str, v: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([(k.to_string(), v)])
}

#[test]
fn multiplier_matrices_are_diagonal() {
    for (text, dim) in [("exp(-absnu)", 2), ("lam^(-1)", 1), ("sin(absnu) + nu1", 3)] {
        let s = parse_symbol(text, dim).unwrap();
        let spec = TruncationSpec::new(dim, 6).unwrap();
        let m = assemble_matrix(&s, &spec, 40).unwrap();
        assert!(matches!(m.entries(), Entries::Diagonal(_)));
        let mut sv: Vec<f64> = spec.indices().iter().map(|nu| s.multiplier_value(nu).unwrap().abs()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(singular_values(&m).unwrap(), sv);
    }
}

/// Matrix pathway vs kernel pathway; exact when m(·,ν)φ_ν stays in the span.
fn two_pathways(text: &str, level: usize, support: usize, seed: u64) {
    let s = parse_symbol(text, 1).unwrap();
    let spec = TruncationSpec::new(1, level).unwrap();
    let q = level + 40;
    let m = assemble_matrix(&s, &spec, q).unwrap();
    let rule = gauss_hermite_rule(q).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    for _ in 0..20 {
        let values: Vec<f64> = (0..spec.size())
            .map(|i| if i <= support { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let c = CoefficientVector::new(spec.clone(), values).unwrap();
        let mc = apply_matrix(&m, &c).unwrap();
        for x in [-1.7, -0.2, 0.0, 0.9, 2.4] {
            let direct = synthesize(&mc, &[x]).unwrap();
            let kernel: f64 = rule
                .nodes()
                .iter()
                .zip(rule.scaled_weights())
                .map(|(&y, &w)| w * kernel_eval(&s, &spec, &[x], &[y]).unwrap() * synthesize(&c, &[y]).unwrap())
                .sum();
            assert!((direct - kernel).abs() < 1e-8, "{text} x={x}: {direct} vs {kernel}");
        }
    }
}

#[test]
fn two_pathways_multiplier() {
    two_pathways("exp(-absnu/3)", 20, 20, 7);
}

#[test]
fn two_pathways_position_symbol() {
    two_pathways("x1", 20, 19, 11);
}

#[test]
fn nesting_prefix_blocks() {
    let s = parse_symbol("exp(-absnu/2)/(1+x1^2)", 1).unwrap();
    let big = assemble_matrix(&s, &TruncationSpec::new(1, 20).unwrap(), 80).unwrap();
    let small = assemble_matrix(&s, &TruncationSpec::new(1, 10).unwrap(), 80).unwrap();
    for i in 0..small.size() {
        for j in 0..small.size() {
            assert!((big.get(i, j) - small.get(i, j)).abs() < 1e-12);
        }
    }
    let s2 = parse_symbol("x1 * x2 * exp(-absnu)", 2).unwrap();
    let big = assemble_matrix(&s2, &TruncationSpec::new(2, 8).unwrap(), 40).unwrap();
    let small = assemble_matrix(&s2, &TruncationSpec::new(2, 4).unwrap(), 40).unwrap();
    assert_eq!(big.restrict(4).unwrap().to_dense(), small.to_dense());
}

#[test]
fn trace_formula_is_matrix_diagonal() {
    for text in ["x1 * exp(-absnu)", "exp(-absnu/2)/(1+x1^2)", "cos(x1) * lam^(-2)"] {
        let s = parse_symbol(text, 1).unwrap();
        let spec = TruncationSpec::new(1, 25).unwrap();
        let m = assemble_matrix(&s, &spec, 57).unwrap();
        let f = trace_formula(&s, &spec, 57).unwrap();
        assert!((f - m.trace()).abs() <= 1e-10 * (1.0 + f.abs()), "{text}");
    }
}

#[test]
fn hs_partial_sums_non_decreasing() {
    let s = parse_symbol("exp(-absnu/4)/(1+x1^2)", 1).unwrap();
    let mut prev = 0.0;
    for level in [2, 5, 10, 20, 40] {
        let v = check_hilbert_schmidt(&s, &TruncationSpec::new(1, level).unwrap(), CriterionOptions::new(level + 40)).unwrap();
        assert!(v.partial_sum >= prev);
        prev = v.partial_sum;
    }
}

#[test]
fn sr_small_on_multiplier_is_exact_sum() {
    let s = SymbolSpec::builtin_named("power", &param("sigma", 1.5), 2).unwrap();
    let spec = TruncationSpec::new(2, 30).unwrap();
    for r in [0.25, 0.5, 1.0] {
        let v = check_sr_small(&s, &spec, r, CriterionOptions::new(31)).unwrap();
        let mut acc = hspec::sum::NeumaierSum::new();
        for nu in spec.indices() {
            acc.add(s.multiplier_value(nu).unwrap().abs().powf(r));
        }
        assert_eq!(v.partial_sum.to_bits(), acc.value().to_bits());
    }
}

#[test]
fn verdicts_bitwise_reproducible() {
    let s = parse_symbol("exp(-absnu/2) * cos(x1) / (1 + x2^2)", 2).unwrap();
    let spec = TruncationSpec::new(2, 10).unwrap();
    let a = check_hilbert_schmidt(&s, &spec, CriterionOptions::new(42)).unwrap();
    let b = check_hilbert_schmidt(&s, &spec, CriterionOptions::new(42)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
