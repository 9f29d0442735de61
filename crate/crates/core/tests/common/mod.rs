//! Oracles shared by the integration tests. Nothing here calls into the
//! crate's own numerical routines.
#![allow(dead_code)]

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Stieltjes constants γ_0..γ_4.
pub const STIELTJES: [f64; 5] = [
    0.577_215_664_901_532_9,
    -0.072_815_845_483_676_7,
    -0.009_690_363_192_872_32,
    0.002_053_834_420_303_35,
    0.002_325_370_065_467_3,
];
/// ζ(2)..ζ(5).
pub const ZETA: [f64; 4] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_37,
];

/// Taylor coefficients g_0..g_len-1 of Γ(1+s) = exp(-γ s + Σ_{j>=2} (-1)^j ζ(j) s^j / j).
pub fn gamma1p_taylor(len: usize) -> Vec<f64> {
    let mut a = vec![0.0; len];
    if len > 1 {
        a[1] = -EULER_GAMMA;
    }
    for j in 2..len {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        a[j] = sign * ZETA[j - 2] / j as f64;
    }
    // exp by the power-sum recurrence, written out independently of the crate
    let mut e = vec![0.0; len];
    e[0] = 1.0;
    for n in 1..len {
        let mut s = 0.0;
        for m in 1..=n {
            s += m as f64 * a[m] * e[n - m];
        }
        e[n] = s / n as f64;
    }
    e
}

/// c_0..c_k of the singular polynomial of θ_m = ln^k m from the Laurent
/// product (-1)^k ζ^(k)(s+1) Γ(s) at s = 0: the s^{-j-1} coefficient is
/// d_j = k! g_{k+1-j} + [j = 0] γ_k, and c_j = d_j / j!.
pub fn laurent_cj(k: usize) -> Vec<f64> {
    assert!((1..=3).contains(&k));
    let g = gamma1p_taylor(k + 2);
    let kfact: f64 = (1..=k).map(|i| i as f64).product();
    (0..=k)
        .map(|j| {
            let mut d = kfact * g[k + 1 - j];
            if j == 0 {
                d += STIELTJES[k];
            }
            let jfact: f64 = (1..=j).map(|i| i as f64).product();
            d / jfact
        })
        .collect()
}

/// Plain `n h_n = Σ θ_m h_{n-m}` in doubles, with θ supplied as a closure.
pub fn naive_h(theta: impl Fn(usize) -> f64, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n + 1];
    h[0] = 1.0;
    for i in 1..=n {
        let mut s = 0.0;
        for m in 1..=i {
            s += theta(m) * h[i - m];
        }
        h[i] = s / i as f64;
    }
    h
}

/// Poisson pmf by direct product.
pub fn poisson_pmf(lambda: f64, a: usize) -> f64 {
    let mut p = (-lambda).exp();
    for i in 1..=a {
        p *= lambda / i as f64;
    }
    p
}

/// Unnormalized partition weights for n by a separate enumeration.
pub fn partition_weight_table(theta: impl Fn(usize) -> f64, n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(rest: usize, max: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(parts.clone());
            return;
        }
        for p in 1..=max.min(rest) {
            parts.push(p);
            rec(rest - p, p, parts, out);
            parts.pop();
        }
    }
    let mut all = Vec::new();
    rec(n, n, &mut Vec::new(), &mut all);
    all.into_iter()
        .map(|parts| {
            let mut counts = vec![0usize; n + 1];
            for &p in &parts {
                counts[p] += 1;
            }
            let mut w = 1.0;
            for (m, &c) in counts.iter().enumerate().skip(1) {
                for i in 1..=c {
                    w *= theta(m) / m as f64 / i as f64;
                }
            }
            (counts, w)
        })
        .collect()
}
