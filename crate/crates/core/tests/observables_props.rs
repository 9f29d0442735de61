use cycleweights::exact::{CycleType, HTable};
use cycleweights::observables::{self, Scaling};
use cycleweights::sampler::SamplerState;
use cycleweights::WeightModel;
use proptest::prelude::*;

#[test]
fn w_infinity_solves_its_ode() {
    let h = 1e-5;
    let mut x = 0.2;
    while x <= 5.0 {
        let d = (observables::w_infinity(x + h).unwrap() - observables::w_infinity(x - h).unwrap()) / (2.0 * h);
        assert!((d + (-x).exp() / x).abs() < 1e-8, "x={x}");
        x += 0.05;
    }
}

#[test]
fn e1_reference_values() {
    // mpmath.expint(1, x)
    let table = [
        (0.1, 1.822_923_958_419_390_7),
        (1.0, 0.219_383_934_395_520_27),
        (3.0, 0.013_048_381_094_197_04),
        (10.0, 4.156_968_929_685_324e-6),
    ];
    for (x, v) in table {
        assert!(
            (observables::w_infinity(x).unwrap() - v).abs() < 1e-12 * v.max(1.0),
            "x={x}"
        );
    }
}

#[test]
fn exact_moments_match_sampling() {
    let n = 400;
    let model = WeightModel::log_power(1).unwrap();
    let table = HTable::new(&model, n).unwrap();
    let state = SamplerState::with_table(model, table.clone(), n, 9).unwrap();
    let samples = state.sample_batch(40_000, 4).unwrap();
    let iv = [(1, 30), (30, n + 1)];
    let m = observables::exact_interval_moments(&table, n, &iv).unwrap();
    let count = |ct: &CycleType, (lo, hi): (usize, usize)| -> f64 { (lo..hi).map(|j| ct.count(j) as f64).sum() };
    for (i, &a) in iv.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|ct| count(ct, a)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (m.cov[i][i] / xs.len() as f64).sqrt();
        assert!(
            (mean - m.means[i]).abs() < 5.0 * se,
            "interval {a:?}: {mean} vs {}",
            m.means[i]
        );
    }
    // the two counts partition K_0n
    let total = table.expected_cycles(n).unwrap();
    assert!((m.means[0] + m.means[1] - total).abs() < 1e-10);
}

#[test]
fn report_errors() {
    let state = SamplerState::new(WeightModel::log_power(1).unwrap(), 64, 1).unwrap();
    assert!(observables::k0n_clt_check(&state, 0, 1).is_err());
    let custom = SamplerState::new(WeightModel::constant(1.0).unwrap(), 64, 1).unwrap();
    assert!(observables::k0n_clt_check(&custom, 10, 1).is_err());
}

proptest! {
    #[test]
    fn profile_is_nonincreasing_and_area_is_n(lengths in prop::collection::vec(1usize..50, 1..30), r in 1.5f64..6.0) {
        let ct = CycleType::from_lengths(&lengths).unwrap();
        let n = ct.n();
        let scaling = Scaling::from_saddle(n as f64, r, 2);
        prop_assert!((scaling.n_star * scaling.n_bar / n as f64 - 1.0).abs() < 1e-9);
        let xs: Vec<f64> = (1..=60).map(|i| i as f64 * 0.05).collect();
        let curve = observables::young_profile(&ct, &xs, &scaling).unwrap();
        prop_assert!(curve.values.windows(2).all(|w| w[1] <= w[0]));
        // unscaled area: Σ_{m>=1} #{cycles of length >= m} = Σ m c_m
        let area: usize = (1..=n).map(|m| ct.counts().range(m..).map(|(_, c)| c).sum::<usize>()).sum();
        prop_assert_eq!(area, n);
    }
}
