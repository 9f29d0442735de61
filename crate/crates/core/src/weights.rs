//! Cycle-weight models `θ_m` and partial sums of `g(t) = Σ θ_m t^m / m`.
//!
//! Every other module reads weights through [`WeightModel::thetas`], so this is
//! the only place where `θ_m` is computed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default horizon scanned for negative weights when lower-order
/// coefficients are supplied.
pub const DEFAULT_VALIDATION_HORIZON: usize = 1 << 20;

/// A sequence of nonnegative cycle weights `θ_1, θ_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightModel {
    /// `θ_m = ln^k m + Σ_{j<k} a_j ln^j m`.
    LogPower { k: u32, lower_coeffs: Vec<f64> },
    /// `θ_m = θ` for every `m` (Ewens measure; `θ = 1` is uniform).
    Constant { theta: f64 },
    /// Explicit finite list `θ_1..θ_L`; `θ_m = 0` for `m > L`.
    Custom { seq: Vec<f64> },
}

impl WeightModel {
    /// Pure `θ_m = ln^k m`.
    pub fn log_power(k: u32) -> Result<Self> {
        Self::log_power_with(k, Vec::new(), 1)
    }

    /// `ln^k m` plus lower powers; `lower_coeffs[j]` multiplies `ln^j m`.
    /// Nonnegativity is checked for `m = 1..=horizon`.
    pub fn log_power_with(k: u32, lower_coeffs: Vec<f64>, horizon: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("log-power weights need k >= 1".into()));
        }
        if lower_coeffs.len() > k as usize {
            return Err(Error::Usage(format!(
                "{} lower coefficients given, at most k = {k} allowed",
                lower_coeffs.len()
            )));
        }
        if lower_coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("lower coefficients must be finite".into()));
        }
        let model = WeightModel::LogPower { k, lower_coeffs };
        if let WeightModel::LogPower { lower_coeffs, .. } = &model {
            if lower_coeffs.iter().any(|&a| a < 0.0) {
                for m in 1..=horizon.max(1) {
                    let t = model.theta_unchecked(m);
                    if t < 0.0 {
                        return Err(Error::Domain(format!("θ_{m} = {t} is negative")));
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn constant(theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Domain(format!(
                "constant weight {theta} must be finite and >= 0"
            )));
        }
        Ok(WeightModel::Constant { theta })
    }

    pub fn custom(seq: Vec<f64>) -> Result<Self> {
        if let Some((i, t)) = seq.iter().enumerate().find(|(_, t)| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::Domain(format!("custom weight θ_{} = {t} invalid", i + 1)));
        }
        Ok(WeightModel::Custom { seq })
    }

    /// The log exponent `k`, if this is a log-power model.
    pub fn log_exponent(&self) -> Option<u32> {
        match self {
            WeightModel::LogPower { k, .. } => Some(*k),
            _ => None,
        }
    }

    fn theta_unchecked(&self, m: usize) -> f64 {
        match self {
            WeightModel::LogPower { k, lower_coeffs } => {
                if m == 1 {
                    // every power of ln 1 vanishes except the constant term
                    return lower_coeffs.first().copied().unwrap_or(0.0);
                }
                let x = (m as f64).ln();
                let mut acc = x.powi(*k as i32);
                let mut xp = 1.0;
                for a in lower_coeffs {
                    acc += a * xp;
                    xp *= x;
                }
                acc
            }
            WeightModel::Constant { theta } => *theta,
            WeightModel::Custom { seq } => seq.get(m - 1).copied().unwrap_or(0.0),
        }
    }

    /// `θ_m` for `m >= 1`.
    pub fn theta(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("cycle length m must be >= 1".into()));
        }
        Ok(self.theta_unchecked(m))
    }

    /// `θ_0..θ_n` with the unused slot `θ_0 = 0`. Negative entries (a model
    /// evaluated past its validation horizon) are reported as domain errors.
    pub fn thetas(&self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for m in 1..=n {
            let t = self.theta_unchecked(m);
            if t < 0.0 {
                return Err(Error::Domain(format!("θ_{m} = {t} is negative")));
            }
            out.push(t);
        }
        Ok(out)
    }

    /// `Σ_{m=1}^{terms} θ_m t^m / m` for `0 <= t < 1`.
    pub fn g_partial(&self, t: f64, terms: usize) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Domain(format!("g is a series in t; need 0 <= t < 1, got {t}")));
        }
        if terms == 0 {
            return Err(Error::Usage("need at least one term".into()));
        }
        let mut sum = 0.0;
        let mut tp = 1.0;
        for m in 1..=terms {
            tp *= t;
            if tp == 0.0 {
                break;
            }
            sum += self.theta_unchecked(m) * tp / m as f64;
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    #[allow(clippy::approx_constant)]
    fn theta_values() {
        let m1 = WeightModel::log_power(1).unwrap();
        assert_eq!(m1.theta(1).unwrap(), 0.0);
        assert_relative_eq!(m1.theta(2).unwrap(), 0.693147, epsilon = 1e-6);
        let shifted = WeightModel::log_power_with(1, vec![0.5], 100).unwrap();
        assert_eq!(shifted.theta(1).unwrap(), 0.5);
        assert!(matches!(m1.theta(0), Err(Error::Domain(_))));
    }

    #[test]
    fn negative_lower_coeffs_rejected_at_construction() {
        // ln m - 1 < 0 for m = 1, 2
        assert!(WeightModel::log_power_with(1, vec![-1.0], 100).is_err());
        assert!(WeightModel::log_power_with(2, vec![0.0, -1.0], 100).is_err());
        assert!(WeightModel::log_power_with(1, vec![1.0, 2.0], 100).is_err());
        assert!(WeightModel::log_power(0).is_err());
    }

    #[test]
    fn g_partial_examples() {
        let m1 = WeightModel::log_power(1).unwrap();
        let c1 = WeightModel::constant(1.0).unwrap();
        assert_eq!(m1.g_partial(0.0, 100).unwrap(), 0.0);
        assert_relative_eq!(c1.g_partial(0.5, 200).unwrap(), 2f64.ln(), epsilon = 1e-6);
        let want = 2f64.ln() * 0.25 / 2.0 + 3f64.ln() * 0.125 / 3.0;
        assert_relative_eq!(m1.g_partial(0.5, 3).unwrap(), want, epsilon = 1e-15);
        assert_relative_eq!(want, 0.132418, epsilon = 1e-6);
        assert!(m1.g_partial(1.0, 3).is_err());
    }

    #[test]
    fn theta_root_recovers_log() {
        for k in 1..=4u32 {
            let model = WeightModel::log_power(k).unwrap();
            for m in [2usize, 3, 10, 1000, 123_457, 1_000_000] {
                let t = model.theta(m).unwrap();
                let back = t.powf(1.0 / k as f64);
                assert_relative_eq!(back, (m as f64).ln(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn g_partial_telescopes() {
        let model = WeightModel::log_power_with(2, vec![0.3, 0.1], 1000).unwrap();
        let t = 0.9;
        for n in [1usize, 5, 40] {
            let a = model.g_partial(t, n).unwrap();
            let b = model.g_partial(t, n + 1).unwrap();
            let term = model.theta(n + 1).unwrap() * t.powi(n as i32 + 1) / (n + 1) as f64;
            assert_relative_eq!(b - a, term, max_relative = 1e-9);
            assert!(b >= a);
        }
    }
}
