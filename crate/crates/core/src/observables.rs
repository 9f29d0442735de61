//! Statistics of sampled and exact cycle structures: Young-diagram profiles
//! and their limit shape, the total cycle count, and the first lexicographic
//! cycle length.
//!
//! Profiles are rescaled with `n* = n / r^k` horizontally and `n̄ = r^k`
//! vertically, where `r` solves `P'(r) = n e^{-r}`.

use crate::asympt::{self, SaddlePoint, SingularPolynomial};
use crate::error::{Error, Result};
use crate::exact::{CycleType, HTable};
use crate::sampler::SamplerState;
use crate::stats;

/// Constant `C` of the `C / ln n` allowance for the unknown centering shift.
pub const SHIFT_ALLOWANCE_CONST: f64 = 5.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub n_star: f64,
    pub n_bar: f64,
}

impl Scaling {
    pub fn from_saddle(n: f64, r: f64, k: u32) -> Self {
        let n_bar = r.powi(k as i32);
        Self {
            n_star: n / n_bar,
            n_bar,
        }
    }
}

/// Scaling built from the `v = 1` saddle point of `poly`.
pub fn saddle_scaling(poly: &SingularPolynomial, n: usize) -> Result<(Scaling, SaddlePoint)> {
    let sp = asympt::solve_saddle(poly, n as f64, 1.0)?;
    Ok((Scaling::from_saddle(n as f64, sp.r, poly.k()), sp))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub scaling: Scaling,
}

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::Domain("profile grid must be positive and finite".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("profile grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Smallest cycle length counted at rescaled position `x`.
fn threshold(x: f64, scaling: &Scaling) -> usize {
    (x * scaling.n_star).ceil().max(1.0) as usize
}

/// `(1/n̄) · #{cycles of length >= x n*}` at each grid point.
pub fn young_profile(ct: &CycleType, xs: &[f64], scaling: &Scaling) -> Result<ShapeCurve> {
    check_grid(xs)?;
    let values = xs
        .iter()
        .map(|&x| {
            ct.counts()
                .range(threshold(x, scaling)..)
                .map(|(_, c)| *c as f64)
                .sum::<f64>()
                / scaling.n_bar
        })
        .collect();
    Ok(ShapeCurve {
        xs: xs.to_vec(),
        values,
        scaling: *scaling,
    })
}

/// `E_1(x)` by its power series; accurate for `0 < x <= 2`.
pub fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// `E_1(x)` by its continued fraction (modified Lentz); accurate for `x >= 0.5`.
pub fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// Limit shape `w_∞(x) = ∫_x^∞ e^{-u}/u du = E_1(x)`.
pub fn w_infinity(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("w_inf(x) needs x > 0, got {x}")));
    }
    Ok(if x <= 1.0 {
        e1_series(x)
    } else {
        e1_continued_fraction(x)
    })
}

/// `e^{-2x} + w_∞(x)`.
pub fn sigma_infinity2(x: f64) -> Result<f64> {
    Ok((-2.0 * x).exp() + w_infinity(x)?)
}

/// `(e^{-x_j} - e^{-x_{j+1}})(e^{-x_i} - e^{-x_{i+1}})`; `x_{i+1}` may be `+inf`.
pub fn increment_cov_theory(xj: f64, xj1: f64, xi: f64, xi1: f64) -> Result<f64> {
    if !(0.0 <= xj && xj <= xj1 && xj1 <= xi && xi <= xi1) {
        return Err(Error::Domain(format!(
            "need 0 <= x_j <= x_j+1 <= x_i <= x_i+1, got {xj}, {xj1}, {xi}, {xi1}"
        )));
    }
    Ok(((-xj).exp() - (-xj1).exp()) * ((-xi).exp() - (-xi1).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationReport {
    pub x: f64,
    pub mean_profile: f64,
    pub w_inf: f64,
    /// `mean_profile - w_∞(x)`
    pub mean_shift: f64,
    /// `n̄ · Var(profile(x))`, the variance of the standardized fluctuation
    pub variance_emp: f64,
    /// `e^{-2x} + w_∞(x)`
    pub variance_theory: f64,
    /// `C / ln n`
    pub z_n_allowance: f64,
}

/// Per-point mean and fluctuation variance of rescaled profiles.
pub fn profile_statistics(samples: &[CycleType], xs: &[f64], scaling: &Scaling) -> Result<Vec<FluctuationReport>> {
    if samples.len() < 2 {
        return Err(Error::Usage("need at least two samples".into()));
    }
    let n = samples[0].n();
    let curves = samples
        .iter()
        .map(|ct| young_profile(ct, xs, scaling))
        .collect::<Result<Vec<_>>>()?;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let vals: Vec<f64> = curves.iter().map(|c| c.values[i]).collect();
            let (mean, var) = stats::mean_var(&vals);
            let w = w_infinity(x)?;
            Ok(FluctuationReport {
                x,
                mean_profile: mean,
                w_inf: w,
                mean_shift: mean - w,
                variance_emp: var * scaling.n_bar,
                variance_theory: sigma_infinity2(x)?,
                z_n_allowance: SHIFT_ALLOWANCE_CONST / (n as f64).ln(),
            })
        })
        .collect()
}

/// Exact first and second moments of interval counts `W_I = Σ_{m ∈ I} C_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMoments {
    pub means: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Moments of `W_I` for half-open length intervals `[lo, hi)`, from
/// `E[C_m] = a_m h_{n-m}/h_n` and `E[C_m C_l] = a_m a_l h_{n-m-l}/h_n + [m = l] E[C_m]`
/// with `a_m = θ_m/m`. Cost is `O(|I|·|J|)` per pair.
pub fn exact_interval_moments(table: &HTable, n: usize, intervals: &[(usize, usize)]) -> Result<IntervalMoments> {
    table.require_positive(n)?;
    let log_h = table.log_h();
    let ratio: Vec<f64> = (0..=n).map(|s| (log_h[n - s] - log_h[n]).exp()).collect();
    let a: Vec<f64> = (0..=n)
        .map(|m| if m == 0 { 0.0 } else { table.thetas()[m] / m as f64 })
        .collect();
    let clip = |(lo, hi): (usize, usize)| (lo.max(1), hi.min(n + 1));
    let means: Vec<f64> = intervals
        .iter()
        .map(|&iv| {
            let (lo, hi) = clip(iv);
            (lo..hi.max(lo)).map(|m| a[m] * ratio[m]).sum()
        })
        .collect();
    let mut cov = vec![vec![0.0; intervals.len()]; intervals.len()];
    for i in 0..intervals.len() {
        for j in i..intervals.len() {
            let (alo, ahi) = clip(intervals[i]);
            let (blo, bhi) = clip(intervals[j]);
            let mut second = 0.0;
            for m in alo..ahi.max(alo) {
                if a[m] == 0.0 {
                    continue;
                }
                let top = bhi.min(n - m + 1);
                let mut inner = 0.0;
                for l in blo..top.max(blo) {
                    inner += a[l] * ratio[m + l];
                }
                second += a[m] * inner;
            }
            let (olo, ohi) = (alo.max(blo), ahi.min(bhi));
            for m in olo..ohi.max(olo) {
                second += a[m] * ratio[m];
            }
            let c = second - means[i] * means[j];
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    Ok(IntervalMoments { means, cov })
}

/// Covariance of two standardized profile increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementCovReport {
    pub theory: f64,
    /// Sample covariance (centered at sample means), divided by `n̄`.
    pub sample_centered: f64,
    /// Centered at the exact finite-`n` means, divided by `n̄`.
    pub exact_centered: f64,
    /// Exact finite-`n` covariance divided by `n̄`.
    pub exact: f64,
}

fn interval_of(lo: f64, hi: f64, scaling: &Scaling) -> (usize, usize) {
    let a = threshold(lo, scaling);
    let b = if hi.is_infinite() {
        usize::MAX
    } else {
        threshold(hi, scaling)
    };
    (a, b)
}

/// Increments `w(x_j) - w(x_{j+1})` and `w(x_i) - w(x_{i+1})` (with
/// `w(∞) = 0`), compared against the limiting product form.
pub fn increment_covariance(
    samples: &[CycleType],
    table: &HTable,
    scaling: &Scaling,
    (xj, xj1): (f64, f64),
    (xi, xi1): (f64, f64),
) -> Result<IncrementCovReport> {
    let theory = increment_cov_theory(xj, xj1, xi, xi1)?;
    if samples.len() < 2 {
        return Err(Error::Usage("need at least two samples".into()));
    }
    let n = samples[0].n();
    let ia = interval_of(xj, xj1, scaling);
    let ib = interval_of(xi, xi1, scaling);
    let count_in = |ct: &CycleType, (lo, hi): (usize, usize)| -> f64 {
        ct.counts()
            .range(lo..)
            .take_while(|(m, _)| **m < hi)
            .map(|(_, c)| *c as f64)
            .sum()
    };
    let xs: Vec<f64> = samples.iter().map(|ct| count_in(ct, ia)).collect();
    let ys: Vec<f64> = samples.iter().map(|ct| count_in(ct, ib)).collect();
    let len = samples.len() as f64;
    let (mx, _) = stats::mean_var(&xs);
    let (my, _) = stats::mean_var(&ys);
    let sample_cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (len - 1.0);
    let moments = exact_interval_moments(table, n, &[ia, ib])?;
    let (ex, ey) = (moments.means[0], moments.means[1]);
    let exact_centered = xs.iter().zip(&ys).map(|(x, y)| (x - ex) * (y - ey)).sum::<f64>() / len;
    Ok(IncrementCovReport {
        theory,
        sample_centered: sample_cov / scaling.n_bar,
        exact_centered: exact_centered / scaling.n_bar,
        exact: moments.cov[0][1] / scaling.n_bar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K0nReport {
    pub n: usize,
    pub samples: usize,
    pub mean_emp: f64,
    pub mean_exact: f64,
    pub var_emp: f64,
    /// `ln^{k+1}(n) / (k+1)`
    pub var_scale: f64,
    /// KS distance of `(K - E K)/sqrt(var_scale)` to the standard normal
    pub ks_stat: f64,
}

/// Total cycle count `K_0n` against its Gaussian limit.
pub fn k0n_clt_check(state: &SamplerState, samples: usize, workers: usize) -> Result<K0nReport> {
    if samples == 0 {
        return Err(Error::Usage("K_0n check needs at least one sample".into()));
    }
    let k = state
        .model()
        .log_exponent()
        .ok_or_else(|| Error::Domain("K_0n scaling needs a log-power model".into()))?;
    let n = state.n();
    let mean_exact = state.table().expected_cycles(n)?;
    let var_scale = (n as f64).ln().powi(k as i32 + 1) / (k as f64 + 1.0);
    let ks: Vec<f64> = state
        .sample_batch(samples, workers)?
        .iter()
        .map(|ct| ct.num_cycles() as f64)
        .collect();
    let (mean_emp, var_emp) = stats::mean_var(&ks);
    let sd = var_scale.sqrt();
    let z: Vec<f64> = ks.iter().map(|x| (x - mean_exact) / sd).collect();
    let ks_stat = stats::ks_statistic(&z, stats::standard_normal_cdf)?;
    Ok(K0nReport {
        n,
        samples,
        mean_emp,
        mean_exact,
        var_emp,
        var_scale,
        ks_stat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Report {
    pub r: f64,
    /// Empirical mean of `L_1 r^k / n`.
    pub mean_scaled: f64,
    /// Exact mean of `L_1 r^k / n`.
    pub exact_mean_scaled: f64,
    pub ks_vs_exp1: f64,
}

/// `L_1 r^k / n` against the unit exponential.
pub fn l1_scaling_check(
    state: &SamplerState,
    poly: &SingularPolynomial,
    samples: usize,
    workers: usize,
) -> Result<L1Report> {
    if samples == 0 {
        return Err(Error::Usage("L_1 check needs at least one sample".into()));
    }
    let n = state.n();
    let sp = asympt::solve_saddle(poly, n as f64, 1.0)?;
    let scale = sp.r.powi(poly.k() as i32) / n as f64;
    let exact_mean = crate::exact::l1_distribution(state.table(), n)?.mean();
    let xs: Vec<f64> = state
        .l1_batch(samples, workers)?
        .into_iter()
        .map(|m| m as f64 * scale)
        .collect();
    let (mean, _) = stats::mean_var(&xs);
    Ok(L1Report {
        r: sp.r,
        mean_scaled: mean,
        exact_mean_scaled: exact_mean * scale,
        ks_vs_exp1: stats::ks_statistic(&xs, stats::exp1_cdf)?,
    })
}
