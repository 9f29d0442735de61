//! Truncated formal power series.
//!
//! All products are plain `O(N²)` Cauchy convolutions. [`LogSpaceSeries`]
//! stores `(sign, ln|a_n|)` pairs for coefficients far outside `f64` range.

use crate::error::{Error, Result};

/// Coefficients `a_0..a_N` of a power series truncated after `t^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Builds a series from `a_0..a_N`; an empty vector is treated as `0` of order 0.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = 1.0;
        s
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `[t^n]` of the series, zero above the truncation order.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::Usage(format!(
                "truncation orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order();
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..=n)
            .map(|i| a[..=i].iter().zip(b[..=i].iter().rev()).map(|(x, y)| x * y).sum())
            .collect();
        Ok(Self { coeffs })
    }

    /// `exp(a)` via `n e_n = Σ_{m=1}^n m a_m e_{n-m}`. Requires `a_0 = 0`.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::Domain(format!(
                "series exp needs a zero constant term, got {}",
                self.coeffs[0]
            )));
        }
        let n = self.order();
        let weighted: Vec<f64> = self.coeffs.iter().enumerate().map(|(m, a)| m as f64 * a).collect();
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        for i in 1..=n {
            let s: f64 = weighted[1..=i]
                .iter()
                .zip(e[..i].iter().rev())
                .map(|(w, x)| w * x)
                .sum();
            e[i] = s / i as f64;
        }
        Ok(Self { coeffs: e })
    }

    /// `log(a)` via `n l_n = n a_n - Σ_{m=1}^{n-1} m l_m a_{n-m}`. Requires `a_0 = 1`.
    pub fn log(&self) -> Result<Self> {
        if self.coeffs[0] != 1.0 {
            return Err(Error::Domain(format!(
                "series log needs constant term 1, got {}",
                self.coeffs[0]
            )));
        }
        let n = self.order();
        let a = &self.coeffs;
        let mut l = vec![0.0; n + 1];
        for i in 1..=n {
            let s: f64 = (1..i).map(|m| m as f64 * l[m] * a[i - m]).sum();
            l[i] = a[i] - s / i as f64;
        }
        Ok(Self { coeffs: l })
    }
}

/// Sign/log-magnitude representation of series coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSpaceSeries {
    signs: Vec<i8>,
    logabs: Vec<f64>,
}

impl LogSpaceSeries {
    pub fn from_parts(signs: Vec<i8>, logabs: Vec<f64>) -> Result<Self> {
        if signs.len() != logabs.len() || signs.is_empty() {
            return Err(Error::Usage(
                "sign and magnitude vectors must be nonempty and equal length".into(),
            ));
        }
        for (s, l) in signs.iter().zip(&logabs) {
            if (*s == 0) != (*l == f64::NEG_INFINITY) || !matches!(s, -1..=1) {
                return Err(Error::Usage("sign 0 must pair with the -inf magnitude".into()));
            }
        }
        Ok(Self { signs, logabs })
    }

    /// Nonnegative coefficients given by their natural logs (`-inf` for zero).
    pub fn from_logs(logabs: Vec<f64>) -> Self {
        let signs = logabs
            .iter()
            .map(|l| if *l == f64::NEG_INFINITY { 0 } else { 1 })
            .collect();
        Self { signs, logabs }
    }

    pub fn order(&self) -> usize {
        self.logabs.len() - 1
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn logabs(&self) -> &[f64] {
        &self.logabs
    }

    /// Back to plain doubles; entries beyond `f64` range become `±inf` or `0`.
    pub fn to_series(&self) -> TruncatedSeries {
        TruncatedSeries::new(
            self.signs
                .iter()
                .zip(&self.logabs)
                .map(|(s, l)| *s as f64 * l.exp())
                .collect(),
        )
    }

    /// Coefficients of `exp(Σ_{m>=1} a_m t^m)` where `weighted[m] = m a_m >= 0`
    /// (`weighted[0]` is ignored), computed in log space.
    ///
    /// The recurrence `n e_n = Σ_m weighted[m] e_{n-m}` is evaluated against a
    /// scale `e^{pivot}`: scaled values `exp(log e_j - pivot)` are cached and
    /// rebuilt whenever the running maximum drifts more than `REPIVOT` nats,
    /// so the inner loop is an ordinary dot product.
    pub fn exp_nonneg(weighted: &[f64], order: usize) -> Result<Self> {
        const REPIVOT: f64 = 256.0;
        if let Some((m, w)) = weighted
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
        {
            return Err(Error::Domain(format!(
                "log-space exp needs m·a_m >= 0, entry {m} is {w}"
            )));
        }
        let w = |m: usize| weighted.get(m).copied().unwrap_or(0.0);
        let wv: Vec<f64> = (0..=order).map(w).collect();
        let mut logs = vec![f64::NEG_INFINITY; order + 1];
        logs[0] = 0.0;
        let mut pivot = 0.0f64;
        let mut scaled = vec![0.0; order + 1];
        scaled[0] = 1.0;
        let mut running_max = 0.0f64;
        for i in 1..=order {
            if running_max - pivot > REPIVOT {
                pivot = running_max;
                for j in 0..i {
                    scaled[j] = (logs[j] - pivot).exp();
                }
            }
            let s: f64 = wv[1..=i].iter().zip(scaled[..i].iter().rev()).map(|(a, b)| a * b).sum();
            if s > 0.0 {
                let l = s.ln() + pivot - (i as f64).ln();
                logs[i] = l;
                running_max = running_max.max(l);
                scaled[i] = (l - pivot).exp();
            } else if s.is_infinite() || s.is_nan() {
                return Err(Error::Numerical(format!("log-space exp overflowed at index {i}")));
            }
        }
        Ok(Self::from_logs(logs))
    }
}

impl From<&TruncatedSeries> for LogSpaceSeries {
    fn from(a: &TruncatedSeries) -> Self {
        let signs = a
            .coeffs()
            .iter()
            .map(|x| {
                if *x > 0.0 {
                    1
                } else if *x < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        let logabs = a.coeffs().iter().map(|x| x.abs().ln()).collect();
        Self { signs, logabs }
    }
}
