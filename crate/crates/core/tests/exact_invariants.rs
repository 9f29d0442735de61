mod common;

use std::collections::BTreeMap;

use cycleweights::exact::{self, CycleType, HTable};
use cycleweights::series::TruncatedSeries;
use cycleweights::WeightModel;
use proptest::prelude::*;

fn ln_pow(k: i32) -> impl Fn(usize) -> f64 {
    move |m| (m as f64).ln().powi(k)
}

#[test]
fn recurrence_matches_series_exp() {
    let n = 4096;
    for k in 1..=3u32 {
        let model = WeightModel::log_power(k).unwrap();
        let g: Vec<f64> = (0..=n)
            .map(|m| {
                if m == 0 {
                    0.0
                } else {
                    (m as f64).ln().powi(k as i32) / m as f64
                }
            })
            .collect();
        let via_series = TruncatedSeries::new(g).exp().unwrap();
        let h = exact::h_sequence(&model, n).unwrap();
        for i in 0..=n {
            let (a, b) = (h[i], via_series.coeff(i));
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "k={k} n={i}: {a} vs {b}");
        }
    }
}

#[test]
fn recurrence_matches_naive_oracle() {
    for k in 1..=3 {
        let model = WeightModel::log_power(k as u32).unwrap();
        let h = exact::h_sequence(&model, 300).unwrap();
        let oracle = common::naive_h(ln_pow(k), 300);
        for (a, b) in h.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-11 * b.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn brute_force_agrees_for_small_n() {
    for model in [
        WeightModel::log_power(1).unwrap(),
        WeightModel::log_power(2).unwrap(),
        WeightModel::constant(0.7).unwrap(),
    ] {
        let h = exact::h_sequence(&model, 14).unwrap();
        for n in 1..=14 {
            let b = exact::brute_force_hn(&model, n).unwrap();
            assert!((h[n] - b).abs() <= 1e-12 * b.abs().max(1e-300), "{n}: {} vs {b}", h[n]);
        }
    }
}

#[test]
fn cycle_type_probabilities_match_enumeration() {
    let n = 9;
    let model = WeightModel::log_power(2).unwrap();
    let table = HTable::new(&model, n).unwrap();
    let weights = common::partition_weight_table(ln_pow(2), n);
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    for (counts, w) in weights {
        let map: BTreeMap<usize, usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(m, c)| (m, *c))
            .collect();
        let p = exact::cycle_type_prob(&CycleType::new(map).unwrap(), &table).unwrap();
        assert!((p - w / z).abs() < 1e-13);
    }
}

#[test]
fn l1_is_size_biased_marginal() {
    // P[L_1 = m] = E[m C_m] / n
    let n = 10;
    let model = WeightModel::log_power(1).unwrap();
    let table = HTable::new(&model, n).unwrap();
    let law = exact::l1_distribution(&table, n).unwrap();
    let weights = common::partition_weight_table(ln_pow(1), n);
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    for m in 1..=n {
        let expect: f64 = weights.iter().map(|(c, w)| (m * c[m]) as f64 * w / z).sum::<f64>() / n as f64;
        assert!((law.prob_of(&m) - expect).abs() < 1e-13, "m={m}");
    }
    assert!((law.total() - 1.0).abs() < 1e-13);
}

#[test]
fn joint_counts_marginal_matches_enumeration() {
    let n = 12;
    let model = WeightModel::log_power(1).unwrap();
    let joint = exact::joint_counts_distribution(&model, n, 3, n).unwrap();
    let weights = common::partition_weight_table(ln_pow(1), n);
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    for (a, p) in joint.iter() {
        let expect: f64 = weights
            .iter()
            .filter(|(c, _)| (1..=3).all(|m| c[m] == a[m - 1]))
            .map(|(_, w)| w / z)
            .sum();
        assert!((p - expect).abs() < 1e-13, "{a:?}");
    }
    assert!(joint.deficit.abs() < 1e-12);
}

#[test]
fn k0n_law_matches_enumeration() {
    let n = 11;
    let model = WeightModel::log_power(2).unwrap();
    let table = HTable::new(&model, n).unwrap();
    let law = exact::k0n_distribution(&table, n).unwrap();
    let weights = common::partition_weight_table(ln_pow(2), n);
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    for j in 1..=n {
        let expect: f64 = weights
            .iter()
            .filter(|(c, _)| c.iter().sum::<usize>() == j)
            .map(|(_, w)| w / z)
            .sum();
        assert!((law.prob_of(&j) - expect).abs() < 1e-13, "j={j}");
    }
    assert!((law.mean() - table.expected_cycles(n).unwrap()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn closed_forms_for_constant_weights(theta in 0.1f64..4.0, n in 1usize..60) {
        // h_n = binom(θ + n - 1, n)
        let h = exact::h_sequence(&WeightModel::constant(theta).unwrap(), n).unwrap();
        let mut expect = 1.0;
        for i in 1..=n {
            expect *= (theta + i as f64 - 1.0) / i as f64;
        }
        prop_assert!((h[n] - expect).abs() <= 1e-11 * expect);
    }

    #[test]
    fn probabilities_sum_to_one(k in 1u32..4, n in 2usize..13) {
        let model = WeightModel::log_power(k).unwrap();
        let table = HTable::new(&model, n).unwrap();
        let total: f64 = exact::partitions(n).iter().map(|ct| exact::cycle_type_prob(ct, &table).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
