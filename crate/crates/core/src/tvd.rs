//! Total-variation distance between small-cycle counts and their Poisson limit.
//!
//! With independent `Y_m ~ Poi(θ_m/m)` and `T_{b1,b2} = Σ_{m=b1+1}^{b2} m Y_m`,
//! the law of `(C_1..C_b)` is that of `(Y_1..Y_b)` conditioned on
//! `T_{0n} = n`, which gives
//!
//! ```text
//! d_b(n) = Σ_ℓ P[T_{0b} = ℓ] (1 - P[T_{bn} = n-ℓ] / P[T_{0n} = n])_+
//! ```

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::exact::{self, DistributionTable, HTable};
use crate::series::LogSpaceSeries;
use crate::weights::WeightModel;

/// Initial outer-sum cutoff in standard deviations of `T_{0b}`.
pub const TAIL_SDS: f64 = 12.0;

/// The cutoff doubles until the neglected mass of `T_{0b}` is below this.
pub const TAIL_TOL: f64 = 1e-15;

/// Law of `T_{b1,b2}` on `0..=lmax`; `tail` is the mass above `lmax`.
#[derive(Debug, Clone)]
pub struct PoissonWeightedSum {
    pub b1: usize,
    pub b2: usize,
    pub pmf: DistributionTable<usize>,
    pub tail: f64,
}

/// A total-variation value with a certified upper bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub upper: f64,
}

pub fn t_pmf(model: &WeightModel, b1: usize, b2: usize, lmax: usize) -> Result<PoissonWeightedSum> {
    if b1 >= b2 {
        return Err(Error::Usage(format!("need b1 < b2, got {b1} >= {b2}")));
    }
    let thetas = model.thetas(b2)?;
    let total_rate: f64 = (b1 + 1..=b2).map(|m| thetas[m] / m as f64).sum();
    let mut weighted = vec![0.0; lmax + 1];
    let top = b2.min(lmax);
    if b1 < top {
        weighted[b1 + 1..=top].copy_from_slice(&thetas[b1 + 1..=top]);
    }
    let series = LogSpaceSeries::exp_nonneg(&weighted, lmax)?;
    let probs: Vec<f64> = series.logabs().iter().map(|l| (l - total_rate).exp()).collect();
    let mass: f64 = probs.iter().sum();
    Ok(PoissonWeightedSum {
        b1,
        b2,
        pmf: DistributionTable {
            support: (0..=lmax).collect(),
            probs,
            deficit: 0.0,
        },
        tail: (1.0 - mass).max(0.0),
    })
}

/// `d_b(n)` from the conditioning-relation formula.
///
/// The outer sum starts at `ℓ_cap = min(n, E T_{0b} + 12 SD)` and doubles the
/// cap while the neglected mass exceeds [`TAIL_TOL`]. Above `n` each term
/// equals its probability, so a cap of `n` is exact; otherwise the neglected
/// mass bounds the error and is added to `upper`.
pub fn dtv_via_formula(model: &WeightModel, n: usize, b: usize) -> Result<TvEstimate> {
    if b == 0 || b > n {
        return Err(Error::Usage(format!("need 1 <= b <= n, got b = {b}, n = {n}")));
    }
    let full = HTable::new(model, n)?;
    if full.require_positive(n).is_err() {
        return Err(Error::MeasureUndefined { n });
    }
    let thetas = full.thetas();
    let mean: f64 = thetas[1..=b].iter().sum();
    let var: f64 = thetas[1..=b].iter().enumerate().map(|(i, t)| (i + 1) as f64 * t).sum();
    let cap_f = (mean + TAIL_SDS * var.sqrt()).ceil();
    let mut l_cap = if cap_f >= n as f64 { n } else { cap_f as usize };
    let mut small = t_pmf(model, 0, b, l_cap)?;
    while l_cap < n && small.tail > TAIL_TOL {
        l_cap = (2 * l_cap.max(1)).min(n);
        small = t_pmf(model, 0, b, l_cap)?;
    }
    let excluded: BTreeSet<usize> = (1..=b).collect();
    let rest = HTable::restricted(model, n, &excluded)?;
    let shift: f64 = (1..=b).map(|m| thetas[m] / m as f64).sum::<f64>() - full.log_h()[n];

    let mut value = 0.0;
    for (l, p) in small.pmf.iter() {
        if p == 0.0 {
            continue;
        }
        let ratio = (shift + rest.log_h()[n - l]).exp();
        value += p * (1.0 - ratio).max(0.0);
    }
    let (value, upper) = if l_cap == n {
        (value + small.tail, value + small.tail)
    } else {
        (value, value + small.tail)
    };
    Ok(TvEstimate {
        value: value.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
    })
}

fn poisson_product(rates: &[f64], a: &[usize]) -> f64 {
    let mut q = 1.0;
    for (lambda, &c) in rates.iter().zip(a) {
        let mut p = (-lambda).exp();
        for i in 1..=c {
            p *= lambda / i as f64;
        }
        q *= p;
    }
    q
}

/// `d_b(n)` straight from its definition, marginalizing the enumerated law
/// of all cycle types of `n`.
pub fn dtv_direct(model: &WeightModel, n: usize, b: usize) -> Result<f64> {
    if n > 16 || b > 5 {
        return Err(Error::Usage(format!(
            "direct TV limited to n <= 16, b <= 5 (got n = {n}, b = {b})"
        )));
    }
    if b == 0 || b > n {
        return Err(Error::Usage(format!("need 1 <= b <= n, got b = {b}, n = {n}")));
    }
    let weights = exact::partition_weights(model, n)?;
    let hn: f64 = weights.iter().map(|(_, w)| w).sum();
    if hn == 0.0 {
        return Err(Error::MeasureUndefined { n });
    }
    let mut marginal: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    for (ct, w) in &weights {
        let key: Vec<usize> = (1..=b).map(|m| ct.count(m)).collect();
        *marginal.entry(key).or_insert(0.0) += w / hn;
    }
    let rates: Vec<f64> = (1..=b)
        .map(|m| model.theta(m).map(|t| t / m as f64))
        .collect::<Result<_>>()?;
    Ok(tv_against_poisson(marginal.iter().map(|(a, p)| (a.as_slice(), *p)), &rates, 0.0).value)
}

/// TV between a finitely supported law and the Poisson product with the
/// given rates. The Poisson mass off the support enters in closed form;
/// `dropped` (mass of the first law missing from `law`) widens `upper`.
pub fn tv_against_poisson<'a>(
    law: impl IntoIterator<Item = (&'a [usize], f64)>,
    rates: &[f64],
    dropped: f64,
) -> TvEstimate {
    let mut diff = 0.0;
    let mut q_on = 0.0;
    for (a, p) in law {
        let q = poisson_product(rates, a);
        diff += (p - q).abs();
        q_on += q;
    }
    let value = 0.5 * (diff + (1.0 - q_on).max(0.0));
    TvEstimate {
        value: value.clamp(0.0, 1.0),
        upper: (value + dropped).clamp(0.0, 1.0),
    }
}

/// `d_b(n)` from the enumerated joint law of `(C_1..C_b)`.
pub fn dtv_from_joint(model: &WeightModel, n: usize, b: usize, cap: usize) -> Result<TvEstimate> {
    let joint = exact::joint_counts_distribution(model, n, b, cap)?;
    let rates: Vec<f64> = (1..=b)
        .map(|m| model.theta(m).map(|t| t / m as f64))
        .collect::<Result<_>>()?;
    Ok(tv_against_poisson(
        joint.iter().map(|(a, p)| (a.as_slice(), p)),
        &rates,
        joint.deficit,
    ))
}

/// `(3k + 3)^{-1/(k+1)}`: `b(n) = o(n^c)` below this exponent keeps `d_b(n) → 0`.
pub fn threshold_c(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("threshold defined for k >= 1".into()));
    }
    let k = k as f64;
    Ok((3.0 * k + 3.0).powf(-1.0 / (k + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn log1() -> WeightModel {
        WeightModel::log_power(1).unwrap()
    }

    #[test]
    fn t_pmf_examples() {
        let zero = WeightModel::custom(vec![0.0; 5]).unwrap();
        let d = t_pmf(&zero, 1, 4, 6).unwrap();
        assert_eq!(d.pmf.probs[0], 1.0);
        assert!(d.pmf.probs[1..].iter().all(|p| *p == 0.0));

        let d = t_pmf(&log1(), 1, 2, 6).unwrap();
        assert_relative_eq!(d.pmf.probs[0], 0.5f64.sqrt(), max_relative = 1e-12);
        // e^{-λ} λ with λ = ln 2 / 2
        assert!((d.pmf.probs[2] - 0.2450645).abs() < 1e-7);
        assert!(d.pmf.probs[1] == 0.0 && d.pmf.probs[3] == 0.0 && d.pmf.probs[5] == 0.0);

        let uni = WeightModel::constant(1.0).unwrap();
        for n in [3usize, 8, 20] {
            let d = t_pmf(&uni, 0, n, n).unwrap();
            let harmonic: f64 = (1..=n).map(|m| 1.0 / m as f64).sum();
            assert_relative_eq!(d.pmf.probs[n], (-harmonic).exp(), max_relative = 1e-12);
        }
        assert!(t_pmf(&uni, 3, 3, 5).is_err());
    }

    #[test]
    fn formula_examples() {
        let d = dtv_via_formula(&log1(), 3, 2).unwrap();
        assert_relative_eq!(d.value, 1.0 - 0.5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(d.value, d.upper);
        let d = dtv_via_formula(&log1(), 500, 1).unwrap();
        assert!(d.value.abs() < 1e-12);
        assert!(matches!(
            dtv_via_formula(&log1(), 1, 1),
            Err(Error::MeasureUndefined { n: 1 })
        ));
        assert!(dtv_via_formula(&log1(), 5, 6).is_err());
    }

    #[test]
    fn direct_examples() {
        let d = dtv_direct(&log1(), 3, 2).unwrap();
        assert_relative_eq!(d, 1.0 - 0.5f64.sqrt(), epsilon = 1e-12);
        assert!(dtv_direct(&log1(), 10, 1).unwrap().abs() < 1e-15);
        // S_4: C_1 takes 0,1,2,4 with counts 9,8,6,1 out of 24
        let uni = WeightModel::constant(1.0).unwrap();
        let law = [(0usize, 9.0 / 24.0), (1, 8.0 / 24.0), (2, 6.0 / 24.0), (4, 1.0 / 24.0)];
        let e = (-1.0f64).exp();
        let poi = |a: usize| e / (1..=a).map(|i| i as f64).product::<f64>();
        let mut want = 0.0;
        let mut q_on = 0.0;
        for (a, p) in law {
            want += (p - poi(a)).abs();
            q_on += poi(a);
        }
        want = 0.5 * (want + 1.0 - q_on);
        assert_relative_eq!(dtv_direct(&uni, 4, 1).unwrap(), want, epsilon = 1e-14);
        assert!(dtv_direct(&uni, 17, 1).is_err());
    }

    #[test]
    fn formula_matches_direct_for_uniform() {
        let uni = WeightModel::constant(1.0).unwrap();
        let a = dtv_via_formula(&uni, 8, 3).unwrap().value;
        let b = dtv_direct(&uni, 8, 3).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn threshold_values() {
        assert!((threshold_c(1).unwrap() - 0.408248).abs() < 5e-7);
        assert!((threshold_c(2).unwrap() - 0.480750).abs() < 5e-7);
        let mut prev = 0.0;
        for k in 1..200 {
            let c = threshold_c(k).unwrap();
            assert!(c > prev && c < 1.0);
            prev = c;
        }
        assert!(threshold_c(0).is_err());
    }
}
