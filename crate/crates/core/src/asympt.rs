//! Saddle-point asymptotics of `[t^n] exp(v g(t))`.
//!
//! Near `t = 1`, `g(e^{-w}) = P(-ln w) + O(w)` for a polynomial
//! `P(r) = r^{k+1}/(k+1) + Σ_{j<=k} c_j r^j`. The `c_j` are fitted
//! numerically from partial sums of `g`; the saddle `r` solves
//! `v P'(r) = n e^{-r}`, and
//!
//! ```text
//! [t^n] exp(v g) ≈ exp(v P(r) + n e^{-r}) / (e^r sqrt(2π v P''(r) + 2π n e^{-r}))
//! ```
//!
//! All coefficient estimates are returned as [`LogValue`]s.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::weights::WeightModel;

/// Maximum accepted condition number of the column-scaled fit matrix.
pub const MAX_FIT_CONDITION: f64 = 1e10;

/// Target for `|ln(v P'(r)) + r - ln n|` in the saddle solver.
pub const SADDLE_TOL: f64 = 1e-12;

/// A real number stored as `sign · exp(logabs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub sign: i8,
    pub logabs: f64,
}

impl LogValue {
    pub fn positive(logabs: f64) -> Self {
        Self { sign: 1, logabs }
    }

    pub fn zero() -> Self {
        Self {
            sign: 0,
            logabs: f64::NEG_INFINITY,
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.logabs.exp()
        }
    }

    /// `self · c`.
    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 || self.sign == 0 {
            return Self::zero();
        }
        Self {
            sign: self.sign * c.signum() as i8,
            logabs: self.logabs + c.abs().ln(),
        }
    }
}

/// `P(r) = r^{k+1}/(k+1) + Σ_{j=0}^{k} c_j r^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPolynomial {
    k: u32,
    c: Vec<f64>,
    r_min: f64,
}

impl SingularPolynomial {
    /// `c` holds `c_0..c_k`.
    pub fn new(k: u32, c: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("singular polynomial needs k >= 1".into()));
        }
        if c.len() != k as usize + 1 {
            return Err(Error::Usage(format!(
                "expected {} coefficients c_0..c_k, got {}",
                k + 1,
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite coefficient".into()));
        }
        let mut p = Self {
            k,
            c,
            r_min: f64::NEG_INFINITY,
        };
        p.r_min = p.largest_root_of_derivative();
        Ok(p)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// `P'(r) > 0` for every `r > r_min`.
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn eval(&self, r: f64) -> f64 {
        let lead = r.powi(self.k as i32 + 1) / (self.k as f64 + 1.0);
        lead + self.c.iter().rev().fold(0.0, |acc, cj| acc * r + cj)
    }

    pub fn d1(&self, r: f64) -> f64 {
        let lead = r.powi(self.k as i32);
        let mut acc = 0.0;
        for j in (1..self.c.len()).rev() {
            acc = acc * r + j as f64 * self.c[j];
        }
        lead + acc
    }

    pub fn d2(&self, r: f64) -> f64 {
        let lead = self.k as f64 * r.powi(self.k as i32 - 1);
        let mut acc = 0.0;
        for j in (2..self.c.len()).rev() {
            acc = acc * r + (j * (j - 1)) as f64 * self.c[j];
        }
        lead + acc
    }

    fn largest_root_of_derivative(&self) -> f64 {
        // Cauchy bound on the roots of the monic polynomial P'
        let bound = 1.0
            + (1..self.c.len())
                .map(|j| (j as f64 * self.c[j]).abs())
                .fold(0.0, f64::max);
        const STEPS: usize = 20_000;
        let h = 2.0 * bound / STEPS as f64;
        let mut hi = bound;
        for i in 1..=STEPS {
            let lo = bound - i as f64 * h;
            if self.d1(lo) <= 0.0 {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if self.d1(mid) <= 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return b;
            }
            hi = lo;
        }
        f64::NEG_INFINITY
    }
}

/// Fitted polynomial plus fit diagnostics.
#[derive(Debug, Clone)]
pub struct CjFit {
    pub poly: SingularPolynomial,
    /// Root-mean-square residual of the least-squares fit.
    pub residual_rms: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
    /// Fitted coefficients of the `w` and `w²` correction columns.
    pub correction: Vec<f64>,
}

/// Twelve log-spaced points from `1e-2` down to `1e-4`.
pub fn default_w_grid() -> Vec<f64> {
    (0..12).map(|i| 10f64.powf(-2.0 - 2.0 * i as f64 / 11.0)).collect()
}

/// Enough terms for the series tail at `w_min` to fall below double precision.
pub fn default_truncation(w_grid: &[f64]) -> usize {
    let w_min = w_grid.iter().copied().fold(f64::INFINITY, f64::min);
    (60.0 / w_min).ceil() as usize
}

/// Least-squares fit of `g(e^{-w}) - L^{k+1}/(k+1)`, `L = -ln w`, against
/// `{L^j}_{j=0..k}`. When the grid allows it, `w` and `w²` are added as
/// nuisance columns: the remainder of the singular expansion is a power series
/// in `w`, so absorbing its first terms removes the fit bias.
pub fn estimate_cj(model: &WeightModel, w_grid: &[f64], n_trunc: usize) -> Result<CjFit> {
    let k = model
        .log_exponent()
        .ok_or_else(|| Error::Domain("coefficient fit needs a log-power model with k >= 1".into()))?;
    let ku = k as usize;
    if w_grid.len() < ku + 2 {
        return Err(Error::Usage(format!(
            "need at least {} grid points, got {}",
            ku + 2,
            w_grid.len()
        )));
    }
    if let Some(w) = w_grid.iter().find(|w| !(**w > 0.0 && **w <= 0.05)) {
        return Err(Error::Domain(format!("grid value {w} outside (0, 0.05]")));
    }
    let thetas = model.thetas(n_trunc)?;
    let w_min = w_grid.iter().copied().fold(f64::INFINITY, f64::min);
    // tail Σ_{m>N} θ_m t^m/m <= θ_N t^N / (N (1-t)) once θ_m/m is decreasing
    let nf = n_trunc as f64;
    let tail = thetas[n_trunc].max(1.0) * (-w_min * nf).exp() / (nf * (1.0 - (-w_min).exp()));
    if tail > 1e-12 {
        return Err(Error::Numerical(format!(
            "truncation {n_trunc} leaves tail {tail:e} at w = {w_min}; raise it"
        )));
    }

    let nuisance = if w_grid.len() >= ku + 4 { 2 } else { 0 };
    let cols = ku + 1 + nuisance;
    let rows = w_grid.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for (i, &w) in w_grid.iter().enumerate() {
        let t = (-w).exp();
        let mut g = 0.0;
        let mut tp = 1.0;
        for (m, th) in thetas.iter().enumerate().skip(1) {
            tp *= t;
            g += th * tp / m as f64;
        }
        let l = -w.ln();
        y[i] = g - l.powi(k as i32 + 1) / (k as f64 + 1.0);
        for j in 0..=ku {
            a[(i, j)] = l.powi(j as i32);
        }
        for q in 0..nuisance {
            a[(i, ku + 1 + q)] = w.powi(q as i32 + 1);
        }
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !condition.is_finite() || condition > MAX_FIT_CONDITION {
        return Err(Error::Numerical(format!(
            "fit condition number {condition:e} too large; widen the w grid"
        )));
    }
    let x = svd.solve(&y, 0.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let resid = &a * &x - &y;
    let residual_rms = (resid.norm_squared() / rows as f64).sqrt();
    let coeffs: Vec<f64> = (0..cols).map(|j| x[j] / scales[j]).collect();
    let poly = SingularPolynomial::new(k, coeffs[..=ku].to_vec())?;
    Ok(CjFit {
        poly,
        residual_rms,
        condition,
        correction: coeffs[ku + 1..].to_vec(),
    })
}

/// Fit on the default grid and truncation.
pub fn fit_default(model: &WeightModel) -> Result<CjFit> {
    let grid = default_w_grid();
    estimate_cj(model, &grid, default_truncation(&grid))
}

/// Solution of `v P'(r) = n e^{-r}` and the quantities evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub r: f64,
    pub n: f64,
    pub v: f64,
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
    /// `n e^{-r}`
    pub n_exp: f64,
}

impl SaddlePoint {
    /// `v P'(r) e^r / n - 1`.
    pub fn relative_residual(&self) -> f64 {
        (self.v * self.dp).ln() + self.r - self.n.ln()
    }
}

/// First-order saddle location `ln(n/v) - k ln ln(n/v)`.
pub fn saddle_initial_guess(n: f64, v: f64, k: u32) -> f64 {
    let l = (n / v).ln();
    if l > 1.0 {
        l - k as f64 * l.ln()
    } else {
        l
    }
}

/// Solves `ln(v P'(r)) + r = ln n` by Newton steps safeguarded with bisection.
/// If several roots exist, the one bracketed nearest the first-order guess
/// is returned.
pub fn solve_saddle(poly: &SingularPolynomial, n: f64, v: f64) -> Result<SaddlePoint> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain(format!("n must be positive, got {n}")));
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("v must be positive, got {v}")));
    }
    let ln_n = n.ln();
    let f = |r: f64| {
        let d = v * poly.d1(r);
        if d > 0.0 {
            d.ln() + r - ln_n
        } else {
            f64::NEG_INFINITY
        }
    };
    let r_min = poly.r_min();
    let floor = if r_min.is_finite() { r_min } else { -1e6 };
    let gap = |r: f64| 1e-9 * (1.0 + r.abs());
    let mut r0 = saddle_initial_guess(n, v, poly.k());
    if r0 <= floor {
        r0 = floor + 1.0;
    }
    let f0 = f(r0);
    let (mut lo, mut hi) = if f0 == 0.0 {
        (r0, r0)
    } else if f0 < 0.0 {
        let mut step = 0.5;
        let mut b = r0 + step;
        let mut a = r0;
        while f(b) < 0.0 {
            a = b;
            step *= 2.0;
            b += step;
            if b > 1e6 {
                return Err(Error::Convergence("no saddle bracket found to the right".into()));
            }
        }
        (a, b)
    } else {
        let mut step = 0.5;
        let mut a = r0 - step;
        let mut b = r0;
        loop {
            if a <= floor {
                a = floor + gap(floor);
                if f(a) >= 0.0 {
                    return Err(Error::Convergence("no saddle bracket found to the left".into()));
                }
                break;
            }
            if f(a) < 0.0 {
                break;
            }
            b = a;
            step *= 2.0;
            a -= step;
        }
        (a, b)
    };
    let mut r = r0.clamp(lo, hi);
    let mut converged = lo == hi;
    for _ in 0..200 {
        if converged {
            break;
        }
        let fr = f(r);
        if fr.abs() <= SADDLE_TOL {
            converged = true;
            break;
        }
        if fr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let slope = poly.d2(r) / poly.d1(r) + 1.0;
        let newton = r - fr / slope;
        r = if fr.is_finite() && slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * r.abs().max(1.0) {
            converged = f(r).abs() <= 1e-10;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "saddle iteration did not converge for n = {n}, v = {v}"
        )));
    }
    if r <= 0.0 {
        return Err(Error::Convergence(format!(
            "saddle r = {r} <= 0: n = {n} is below the asymptotic regime"
        )));
    }
    let sp = SaddlePoint {
        r,
        n,
        v,
        p: poly.eval(r),
        dp: poly.d1(r),
        ddp: poly.d2(r),
        n_exp: n * (-r).exp(),
    };
    Ok(sp)
}

fn log_core(sp: &SaddlePoint) -> Result<f64> {
    let var = 2.0 * std::f64::consts::PI * (sp.v * sp.ddp + sp.n_exp);
    if !(var > 0.0) {
        return Err(Error::Numerical(format!(
            "non-positive saddle variance {var} at r = {}",
            sp.r
        )));
    }
    Ok(sp.v * sp.p + sp.n_exp - sp.r - 0.5 * var.ln())
}

/// `[t^n] exp(v g(t))` from the saddle formula, with the saddle point used.
pub fn hn_asymptotic_at(poly: &SingularPolynomial, n: f64, v: f64) -> Result<(LogValue, SaddlePoint)> {
    let sp = solve_saddle(poly, n, v)?;
    Ok((LogValue::positive(log_core(&sp)?), sp))
}

pub fn hn_asymptotic(poly: &SingularPolynomial, n: f64, v: f64) -> Result<LogValue> {
    hn_asymptotic_at(poly, n, v).map(|(x, _)| x)
}

/// `[t^n] f(t) exp(v g(t))` for `f` analytic beyond the unit disc: `f(1)`
/// times the plain estimate.
pub fn coeff_asympt_regular_prefactor(poly: &SingularPolynomial, n: f64, v: f64, f1: f64) -> Result<LogValue> {
    if f1 == 0.0 || !f1.is_finite() {
        return Err(Error::Domain(format!(
            "prefactor value f(1) = {f1} must be finite and nonzero"
        )));
    }
    Ok(hn_asymptotic(poly, n, v)?.scaled(f1))
}

/// `[t^n] f(t) exp(g(t))` when `f(e^{-w}) ~ c_f (-ln w)^{kf} / w^j`:
/// the plain estimate times `c_f r^{kf} e^{j r}`.
pub fn coeff_asympt_singular_prefactor(
    poly: &SingularPolynomial,
    n: f64,
    c_f: f64,
    j: u32,
    kf: u32,
) -> Result<LogValue> {
    let (base, sp) = hn_asymptotic_at(poly, n, 1.0)?;
    if c_f == 0.0 {
        return Ok(LogValue::zero());
    }
    let extra = kf as f64 * sp.r.ln() + j as f64 * sp.r;
    Ok(LogValue {
        sign: base.sign,
        logabs: base.logabs + extra,
    }
    .scaled(c_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic() -> SingularPolynomial {
        SingularPolynomial::new(1, vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn polynomial_derivatives() {
        let p = SingularPolynomial::new(3, vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let r = 1.7;
        let h = 1e-5;
        assert_relative_eq!(
            p.d1(r),
            (p.eval(r + h) - p.eval(r - h)) / (2.0 * h),
            max_relative = 1e-8
        );
        assert_relative_eq!(p.d2(r), (p.d1(r + h) - p.d1(r - h)) / (2.0 * h), max_relative = 1e-8);
        assert!(p.d1(p.r_min() + 1e-6) > 0.0);
        assert!(SingularPolynomial::new(2, vec![0.0]).is_err());
    }

    #[test]
    fn r_min_for_linear_derivative() {
        let p = SingularPolynomial::new(1, vec![0.9, -0.577]).unwrap();
        assert_relative_eq!(p.r_min(), 0.577, epsilon = 1e-12);
    }

    #[test]
    fn saddle_quadratic_examples() {
        let sp = solve_saddle(&quadratic(), 100.0, 1.0).unwrap();
        assert!((sp.r - 3.385630).abs() < 5e-7);
        let sp = solve_saddle(&quadratic(), std::f64::consts::E, 1.0).unwrap();
        assert_relative_eq!(sp.r, 1.0, epsilon = 1e-12);
        assert!(sp.relative_residual().abs() < 1e-12);
    }

    #[test]
    fn saddle_rejects_bad_input() {
        assert!(solve_saddle(&quadratic(), -1.0, 1.0).is_err());
        assert!(solve_saddle(&quadratic(), 10.0, 0.0).is_err());
        // (r + 2) e^r = 0.5 has its root below zero
        let shifted = SingularPolynomial::new(1, vec![0.0, 2.0]).unwrap();
        assert!(matches!(solve_saddle(&shifted, 0.5, 1.0), Err(Error::Convergence(_))));
    }

    #[test]
    fn log_value_arithmetic() {
        let x = LogValue::positive(2f64.ln()).scaled(-3.0);
        assert_eq!(x.sign, -1);
        assert_relative_eq!(x.value(), -6.0, max_relative = 1e-14);
        assert_eq!(LogValue::positive(1.0).scaled(0.0).value(), 0.0);
    }

    #[test]
    fn regular_prefactor_requires_nonzero() {
        assert!(coeff_asympt_regular_prefactor(&quadratic(), 100.0, 1.0, 0.0).is_err());
        let a = coeff_asympt_regular_prefactor(&quadratic(), 100.0, 1.0, 1.0).unwrap();
        let b = hn_asymptotic(&quadratic(), 100.0, 1.0).unwrap();
        assert_eq!(a, b);
        let u = coeff_asympt_singular_prefactor(&quadratic(), 100.0, 1.0, 0, 0).unwrap();
        assert_eq!(u, b);
    }

    #[test]
    fn fit_rejects_constant_and_bad_grids() {
        let c = WeightModel::constant(1.0).unwrap();
        assert!(matches!(fit_default(&c), Err(Error::Domain(_))));
        let m = WeightModel::log_power(1).unwrap();
        assert!(estimate_cj(&m, &[0.01, 0.005], 10_000).is_err());
        assert!(estimate_cj(&m, &[0.2, 0.01, 0.005, 0.001], 100_000).is_err());
        assert!(matches!(
            estimate_cj(&m, &default_w_grid(), 1000),
            Err(Error::Numerical(_))
        ));
        // nearly identical points make the basis collinear
        let tight: Vec<f64> = (0..12).map(|i| 0.01 * (1.0 + 1e-9 * i as f64)).collect();
        assert!(matches!(estimate_cj(&m, &tight, 10_000), Err(Error::Numerical(_))));
    }
}
