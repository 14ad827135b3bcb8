mod common;

use std::collections::BTreeMap;

use falsify_kit::mtl::{
    parse_formula, robustness, robustness_signal, satisfaction_signal, Affine, Formula, Interval, Trace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_robustness, brute_satisfies, random_formula, random_trace, SIGNALS};

fn corpus(seed: u64) -> (Formula, Trace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_formula(&mut rng, 4), random_trace(&mut rng, 20))
}

/// Negation-free formula whose atoms are `signal - k > 0`.
fn monotone_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.25) {
        let k = rng.random_range(-8..=8) as f64 * 0.25;
        let name = SIGNALS[rng.random_range(0..3)];
        return Formula::atom(Affine::signal(name).add(&Affine::constant(k), -1.0));
    }
    let d = depth - 1;
    let iv = Interval::new(rng.random_range(0..3) as f64, [1.0, 3.0, f64::INFINITY][rng.random_range(0..3)] + 2.0)
        .unwrap();
    match rng.random_range(0..5) {
        0 => Formula::and(monotone_formula(rng, d), monotone_formula(rng, d)),
        1 => Formula::or(monotone_formula(rng, d), monotone_formula(rng, d)),
        2 => Formula::globally(iv, monotone_formula(rng, d)),
        3 => Formula::eventually(iv, monotone_formula(rng, d)),
        _ => Formula::until(iv, monotone_formula(rng, d), monotone_formula(rng, d)),
    }
}

fn shifted(trace: &Trace, c: f64) -> Trace {
    let signals: BTreeMap<String, Vec<f64>> = trace
        .signals()
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().map(|x| x + c).collect()))
        .collect();
    Trace::new(trace.times().to_vec(), signals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_brute_force_evaluator(seed in any::<u64>()) {
        let (f, tr) = corpus(seed);
        let rho = robustness_signal(&f, &tr).unwrap();
        let sat = satisfaction_signal(&f, &tr).unwrap();
        for i in 0..tr.len() {
            prop_assert_eq!(rho[i], brute_robustness(&f, &tr, i), "formula {} at {}", f, i);
            prop_assert_eq!(sat[i], brute_satisfies(&f, &tr, i), "formula {} at {}", f, i);
        }
    }

    #[test]
    fn robustness_sign_agrees_with_verdict(seed in any::<u64>()) {
        let (f, tr) = corpus(seed);
        let rho = robustness_signal(&f, &tr).unwrap();
        let sat = satisfaction_signal(&f, &tr).unwrap();
        for i in 0..tr.len() {
            if rho[i] > 0.0 {
                prop_assert!(sat[i]);
            }
            if rho[i] < 0.0 {
                prop_assert!(!sat[i]);
            }
        }
    }

    #[test]
    fn negation_and_de_morgan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_formula(&mut rng, 3);
        let b = random_formula(&mut rng, 3);
        let tr = random_trace(&mut rng, 20);
        let lhs = robustness_signal(&Formula::not(Formula::and(a.clone(), b.clone())), &tr).unwrap();
        let rhs = robustness_signal(&Formula::or(Formula::not(a.clone()), Formula::not(b)), &tr).unwrap();
        prop_assert_eq!(lhs, rhs);
        let neg = robustness_signal(&Formula::not(a.clone()), &tr).unwrap();
        let pos = robustness_signal(&a, &tr).unwrap();
        for (n, p) in neg.iter().zip(&pos) {
            prop_assert_eq!(*n, -*p);
        }
    }

    #[test]
    fn shifting_signals_shifts_robustness(seed in any::<u64>(), steps in -16i32..=16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = monotone_formula(&mut rng, 4);
        let tr = random_trace(&mut rng, 20);
        // Quarter-grid values keep every sum exact.
        let c = steps as f64 * 0.25;
        let base = robustness_signal(&f, &tr).unwrap();
        let moved = robustness_signal(&f, &shifted(&tr, c)).unwrap();
        for (m, b) in moved.iter().zip(&base) {
            prop_assert_eq!(*m, b + c);
        }
    }

    #[test]
    fn widening_windows_is_monotone(
        seed in any::<u64>(),
        lo in 0u8..4,
        len in 0u8..4,
        widen_lo in 0u8..3,
        widen_hi in 0u8..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = random_formula(&mut rng, 2);
        let tr = random_trace(&mut rng, 20);
        let narrow = Interval::new(lo as f64, (lo + len) as f64).unwrap();
        let wide_lo = lo.saturating_sub(widen_lo) as f64;
        let wide_hi = if widen_hi == 3 { f64::INFINITY } else { (lo + len + widen_hi) as f64 };
        let wide = Interval::new(wide_lo, wide_hi).unwrap();
        let g_n = robustness_signal(&Formula::globally(narrow, inner.clone()), &tr).unwrap();
        let g_w = robustness_signal(&Formula::globally(wide, inner.clone()), &tr).unwrap();
        let f_n = robustness_signal(&Formula::eventually(narrow, inner.clone()), &tr).unwrap();
        let f_w = robustness_signal(&Formula::eventually(wide, inner), &tr).unwrap();
        for i in 0..tr.len() {
            prop_assert!(g_w[i] <= g_n[i]);
            prop_assert!(f_w[i] >= f_n[i]);
        }
    }

    #[test]
    fn display_parses_back(seed in any::<u64>()) {
        let (f, _) = corpus(seed);
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), f, "{}", text);
    }
}

#[test]
fn thousand_pair_corpus_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let f = random_formula(&mut rng, 4);
        let tr = random_trace(&mut rng, 20);
        assert!(f.depth() <= 4 && tr.len() <= 20);
        let rho = robustness(&f, &tr, 0).unwrap();
        assert_eq!(rho, brute_robustness(&f, &tr, 0), "{f}");
    }
}

#[test]
fn cartpole_property_parses_to_four_atoms() {
    let f = parse_formula("G (abs(x) <= 2.4 & abs(theta_deg) <= 12)").unwrap();
    let tr = Trace::uniform(0.02, [("x", vec![0.0, 2.0, -2.5]), ("theta_deg", vec![0.0, -11.0, 3.0])]).unwrap();
    let rho = robustness(&f, &tr, 0).unwrap();
    assert!((rho - (-0.1)).abs() < 1e-12, "{rho}");
}
