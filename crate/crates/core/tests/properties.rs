use dixlab_core::spectral::CMatrix;
use dixlab_core::*;
use proptest::prelude::*;

fn log_value() -> impl Strategy<Value = LogValue> {
    prop_oneof![
        1 => Just(LogValue::ZERO),
        9 => (-700.0..700.0f64).prop_map(LogValue::from_ln),
    ]
}

fn ln_eq(a: LogValue, b: LogValue, tol: f64) -> bool {
    match (a.ln(), b.ln()) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).to_f64().abs() <= tol * (1.0 + y.to_f64().abs()),
        _ => false,
    }
}

/// Blocks as `(ln length, ln value)`.
fn blocks(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, -8.0..4.0f64), 1..=max)
}

fn step(blocks: &[(f64, f64)]) -> StepFunction {
    let b: Vec<(LogValue, LogValue)> = blocks
        .iter()
        .map(|&(l, v)| (LogValue::from_ln(l), LogValue::from_ln(v)))
        .collect();
    StepFunction::from_blocks(&b).unwrap()
}

fn decreasing(mut blocks: Vec<(f64, f64)>) -> StepFunction {
    blocks.sort_by(|a, b| b.1.total_cmp(&a.1));
    step(&blocks)
}

proptest! {
    #[test]
    fn log_add_is_commutative(a in log_value(), b in log_value()) {
        prop_assert_eq!(log_add(a, b), log_add(b, a));
    }

    #[test]
    fn log_add_is_associative(a in log_value(), b in log_value(), c in log_value()) {
        let left = log_add(log_add(a, b), c);
        let right = log_add(a, log_add(b, c));
        prop_assert!(ln_eq(left, right, 1e-15), "{left} vs {right}");
    }

    #[test]
    fn log_add_is_monotone(a in log_value(), b in log_value(), c in log_value()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(log_add(lo, c) <= log_add(hi, c));
    }

    #[test]
    fn log_sub_inverts_log_add(a in log_value(), b in log_value()) {
        let s = log_add(a, b);
        let back = log_sub(s, b).unwrap();
        // cancellation leaves only an absolute error relative to the sum
        let err = if s.is_zero() { 0.0 } else { (back.to_f64() - a.to_f64()).abs() / s.to_f64() };
        prop_assert!(s.is_infinite() || err <= 1e-14 || !err.is_finite(), "{err}");
    }

    #[test]
    fn rearrangement_is_nonincreasing_and_equimeasurable(b in blocks(12), levels in prop::collection::vec(-9.0..5.0f64, 5)) {
        let f = step(&b);
        let r = f.rearrangement().unwrap();
        prop_assert!(r.is_nonincreasing());
        prop_assert!(ln_eq(r.total_integral().unwrap(), f.total_integral().unwrap(), 1e-14));
        for l in levels {
            let level = LogValue::from_ln(l);
            prop_assert!(ln_eq(r.distribution(level), f.distribution(level), 1e-14));
        }
        // idempotent
        prop_assert_eq!(r.rearrangement().unwrap(), r);
    }

    #[test]
    fn jump_sum_matches_partial_integral(b in blocks(16), l in -10.0..5.0f64) {
        let f = step(&b);
        let (lhs, rhs) = check_eq3(&f, LogValue::from_ln(l)).unwrap();
        prop_assert!(ln_eq(lhs, rhs, 1e-13), "{lhs} vs {rhs}");
    }

    #[test]
    fn fixed_cutoff_dominates_adjusted(b in blocks(16), u in 1.0..40.0f64) {
        let x = decreasing(b).rearranged().unwrap();
        let psi = WeightFunction::Log;
        let fixed = lidskii_cutoff_at(&x, &psi, CutoffMode::Fixed, Dd::new(u));
        let adjusted = lidskii_cutoff_at(&x, &psi, CutoffMode::Adjusted, Dd::new(u));
        prop_assert!(fixed >= adjusted, "{fixed} < {adjusted}");
    }

    #[test]
    fn upper_estimates_hold(b in blocks(16), n in 1u32..64) {
        let x = decreasing(b).rearranged().unwrap();
        let grid = Grid::geometric(0.01, 100.0, 16).unwrap();
        let r = check_upper_estimate_lemmas(&x, &WeightFunction::Log, n, &grid).unwrap();
        prop_assert_eq!(r.simple_violation, 0.0);
        prop_assert_eq!(r.adjusted_violation, 0.0);
    }

    #[test]
    fn cesaro_is_regular(limit in -5.0..5.0f64, amp in -3.0..3.0f64, p in 0.25..1.0f64) {
        let grid = Grid::geometric(1.0, 1e4, 64).unwrap();
        let g = WindowSeries::from_fn("g", &grid, |u| Ok(limit + amp / (1.0 + u).powf(p))).unwrap();
        let m = cesaro(&g).unwrap();
        let (lo, hi) = g.tail_envelope(0.25);
        let deviation = (lo - limit).abs().max((hi - limit).abs());
        let err = (m.last_value().unwrap() - limit).abs();
        prop_assert!(err <= 10.0 * deviation, "{err} vs {deviation}");
    }

    #[test]
    fn constant_window_is_one(u in 1.0001..1e12f64) {
        let one = StepFunction::new(vec![LogValue::ZERO], vec![], LogValue::ONE).unwrap();
        prop_assert_eq!(pi_window_step(&one, Dd::new(u)).unwrap(), 1.0);
    }

    #[test]
    fn step_text_round_trips(b in blocks(10)) {
        let f = step(&b);
        prop_assert_eq!(StepFunction::parse_text(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn weyl_majorisation(seed in any::<u64>(), n in 1usize..9) {
        let t = MatrixSpec::random_batch(1, n, seed).unwrap().remove(0);
        let r = weyl_check(&spectrum(&t).unwrap());
        prop_assert!(r.holds, "{}", r.max_slack_violation);
    }

    #[test]
    fn matrix_text_round_trips(seed in any::<u64>(), n in 1usize..6) {
        let t = MatrixSpec::random_batch(1, n, seed).unwrap().remove(0);
        prop_assert_eq!(MatrixSpec::parse_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn cutoff_sum_is_similarity_invariant(seed in any::<u64>(), n in 2usize..8, scales in prop::collection::vec(0.5..2.0f64, 8)) {
        let mut batch = MatrixSpec::random_batch(2, n, seed).unwrap();
        let t = batch.remove(0);
        let q = triangularize(&batch.remove(0)).unwrap().unitary;
        let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(scales[i], 0.0) } else { C64::new(0.0, 0.0) });
        let d_inv = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0 / scales[i], 0.0) } else { C64::new(0.0, 0.0) });
        let v = &q * &d;
        let v_inv = &d_inv * q.adjoint();
        let similar = MatrixSpec::dense(&v * t.to_dense() * &v_inv).unwrap();

        let a = spectrum(&t).unwrap();
        let b = spectrum(&similar).unwrap();
        let mut moduli: Vec<f64> = a.eigenvalues.iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        // cutoffs halfway between well separated moduli, so rounding cannot move an eigenvalue across
        for w in moduli.windows(2).filter(|w| w[1] - w[0] > 1e-3) {
            let c = 0.5 * (w[0] + w[1]);
            let diff = (eigen_cutoff_sum(&a, c).unwrap() - eigen_cutoff_sum(&b, c).unwrap()).norm();
            prop_assert!(diff <= 1e-8 * (1.0 + t.max_abs()) * n as f64, "{diff}");
        }
    }

    #[test]
    fn dilation_defect_is_bounded(b in blocks(20), n in 2u32..20, u in 2.0..200.0f64) {
        let x = step(&b).dilate(1, Dilation::Expand).unwrap();
        let sup = x.sup_norm().to_f64();
        let y = x.dilate(n, Dilation::Expand).unwrap();
        let u = Dd::new(u);
        let defect = (pi_window_step(&x, u).unwrap() - pi_window_step(&y, u).unwrap()).abs();
        prop_assert!(defect <= 2.0 * sup * (n as f64).ln() / u.ln() + 1e-12);
    }
}

#[test]
fn series_document_round_trips() {
    let grid = Grid::geometric(1.0, 1e3, 8).unwrap();
    let s = partial_sum_ratio(
        &DecreasingFunction::Reciprocal { scale: 1.0 },
        &WeightFunction::Log,
        &grid,
    )
    .unwrap();
    let doc = SeriesDocument::new(vec![s.clone(), cesaro(&s).unwrap()]);
    assert_eq!(SeriesDocument::from_json(&doc.to_json()).unwrap(), doc);
    assert_eq!(SeriesDocument::from_csv(&doc.to_csv()).unwrap(), doc);
}
