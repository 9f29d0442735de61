//! Exact finite-`n` laws under the weighted measure.
//!
//! Everything here is driven by the normalization sequence `h_n`, the
//! coefficients of `exp(g(t))`. Tables keep `ln h_n` so that probabilities are
//! formed as differences of logs and never overflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::LogSpaceSeries;
use crate::weights::WeightModel;

/// Largest `n` accepted by [`brute_force_hn`].
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// Probabilities below this are dropped from enumerated joint laws.
pub const JOINT_PROB_FLOOR: f64 = 1e-15;

/// Multiset of cycle lengths `{m -> c_m}` with `Σ m c_m = n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    n: usize,
    counts: BTreeMap<usize, usize>,
}

impl CycleType {
    /// Zero counts are dropped; `n` is derived from the counts.
    pub fn new(counts: BTreeMap<usize, usize>) -> Result<Self> {
        if counts.contains_key(&0) {
            return Err(Error::Domain("cycle length 0 is not allowed".into()));
        }
        let counts: BTreeMap<usize, usize> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let n = counts.iter().map(|(m, c)| m * c).sum();
        if n == 0 {
            return Err(Error::Domain("a cycle type needs n >= 1".into()));
        }
        Ok(Self { n, counts })
    }

    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &m in lengths {
            *counts.entry(m).or_insert(0) += 1;
        }
        Self::new(counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn count(&self, m: usize) -> usize {
        self.counts.get(&m).copied().unwrap_or(0)
    }

    /// Total number of cycles `K_0n`.
    pub fn num_cycles(&self) -> usize {
        self.counts.values().sum()
    }
}

/// `"n: m1^c1 m2^c2 ..."` with `m` ascending.
impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.n)?;
        for (m, c) in &self.counts {
            write!(f, " {m}^{c}")?;
        }
        Ok(())
    }
}

impl FromStr for CycleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("malformed cycle type line {s:?}"));
        let (head, tail) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = head.trim().parse().map_err(|_| bad())?;
        let mut counts = BTreeMap::new();
        for tok in tail.split_whitespace() {
            let (m, c) = tok.split_once('^').ok_or_else(bad)?;
            let m: usize = m.parse().map_err(|_| bad())?;
            let c: usize = c.parse().map_err(|_| bad())?;
            if counts.insert(m, c).is_some() {
                return Err(bad());
            }
        }
        let ct = CycleType::new(counts)?;
        if ct.n != n {
            return Err(Error::Usage(format!(
                "line {s:?} declares n = {n} but sums to {}",
                ct.n
            )));
        }
        Ok(ct)
    }
}

/// Finite support with probabilities; `deficit` is the mass not represented.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable<T> {
    pub support: Vec<T>,
    pub probs: Vec<f64>,
    pub deficit: f64,
}

impl<T: PartialEq> DistributionTable<T> {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob_of(&self, x: &T) -> f64 {
        self.support.iter().position(|s| s == x).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }
}

impl DistributionTable<usize> {
    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| *x as f64 * p).sum()
    }
}

/// `θ_0..θ_N` together with `ln h_0..ln h_N` (`-inf` where `h_n = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct HTable {
    thetas: Vec<f64>,
    log_h: Vec<f64>,
}

impl HTable {
    /// Normalization constants of `model` up to `n`.
    pub fn new(model: &WeightModel, n: usize) -> Result<Self> {
        Self::from_thetas(model.thetas(n)?)
    }

    /// Coefficients of `exp(Σ_{m ∉ excluded} θ_m t^m / m)`. The stored
    /// weights are the unrestricted ones.
    pub fn restricted(model: &WeightModel, n: usize, excluded: &BTreeSet<usize>) -> Result<Self> {
        let thetas = model.thetas(n)?;
        let mut active = thetas.clone();
        for &m in excluded {
            if m <= n {
                active[m] = 0.0;
            }
        }
        let log_h = LogSpaceSeries::exp_nonneg(&active, n)?.logabs().to_vec();
        Ok(Self { thetas, log_h })
    }

    /// `thetas[0]` is ignored.
    pub fn from_thetas(thetas: Vec<f64>) -> Result<Self> {
        let n = thetas.len().saturating_sub(1);
        let log_h = LogSpaceSeries::exp_nonneg(&thetas, n)?.logabs().to_vec();
        Ok(Self { thetas, log_h })
    }

    /// Largest index held.
    pub fn max_n(&self) -> usize {
        self.log_h.len() - 1
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn log_h(&self) -> &[f64] {
        &self.log_h
    }

    pub fn h(&self, n: usize) -> f64 {
        self.log_h[n].exp()
    }

    /// `h_0..h_N` as doubles (may overflow to `inf` for large `N`).
    pub fn values(&self) -> Vec<f64> {
        self.log_h.iter().map(|l| l.exp()).collect()
    }

    pub(crate) fn check_index(&self, n: usize) -> Result<()> {
        if n > self.max_n() {
            return Err(Error::Usage(format!(
                "table holds h up to {}, asked for {n}",
                self.max_n()
            )));
        }
        Ok(())
    }

    /// Errors unless `h_n > 0`.
    pub fn require_positive(&self, n: usize) -> Result<()> {
        self.check_index(n)?;
        if self.log_h[n] == f64::NEG_INFINITY {
            return Err(Error::MeasureUndefined { n });
        }
        Ok(())
    }

    /// `P[L_1 = m]` at size `n`: `θ_m h_{n-m} / (n h_n)`. No bounds checks.
    #[inline]
    pub(crate) fn first_cycle_prob(&self, n: usize, m: usize) -> f64 {
        let t = self.thetas[m];
        if t == 0.0 {
            return 0.0;
        }
        t * (self.log_h[n - m] - self.log_h[n]).exp() / n as f64
    }

    /// `E[C_m]` at size `n`: `(θ_m/m) h_{n-m}/h_n`.
    pub fn expected_count(&self, n: usize, m: usize) -> Result<f64> {
        self.require_positive(n)?;
        if m == 0 || m > n {
            return Ok(0.0);
        }
        Ok(self.first_cycle_prob(n, m) * n as f64 / m as f64)
    }

    /// `E[K_0n] = Σ_m (θ_m/m) h_{n-m}/h_n`.
    pub fn expected_cycles(&self, n: usize) -> Result<f64> {
        self.require_positive(n)?;
        Ok((1..=n).map(|m| self.first_cycle_prob(n, m) * n as f64 / m as f64).sum())
    }
}

/// `h_0..h_N` via the log-space recurrence `n h_n = Σ_m θ_m h_{n-m}`.
pub fn h_sequence(model: &WeightModel, n: usize) -> Result<Vec<f64>> {
    Ok(HTable::new(model, n)?.values())
}

/// Coefficients of `exp(Σ_{m ∉ excluded} θ_m t^m/m)` up to `t^N`.
pub fn restricted_h(model: &WeightModel, n: usize, excluded: &BTreeSet<usize>) -> Result<Vec<f64>> {
    Ok(HTable::restricted(model, n, excluded)?.values())
}

fn ln_factorial(c: usize) -> f64 {
    (2..=c).map(|i| (i as f64).ln()).sum()
}

/// `ln Π_m (θ_m/m)^{c_m} / c_m!`, `-inf` when some used `θ_m` vanishes.
fn log_type_weight(ct: &CycleType, theta: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (&m, &c) in ct.counts() {
        let t = theta(m);
        if t == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += c as f64 * (t / m as f64).ln() - ln_factorial(c);
    }
    acc
}

/// `P_Θ[cycle type]` = `(1/h_n) Π_m (θ_m/m)^{c_m}/c_m!`.
pub fn cycle_type_prob(ct: &CycleType, table: &HTable) -> Result<f64> {
    let n = ct.n();
    table.require_positive(n)?;
    let lw = log_type_weight(ct, |m| table.thetas()[m]);
    Ok((lw - table.log_h()[n]).exp())
}

/// All integer partitions of `n`, as cycle types, in reverse-lexicographic
/// order of their descending part lists.
pub fn partitions(n: usize) -> Vec<CycleType> {
    fn rec(rest: usize, max: usize, parts: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if rest == 0 {
            out.push(CycleType::from_lengths(parts).expect("nonempty partition"));
            return;
        }
        for p in (1..=max.min(rest)).rev() {
            parts.push(p);
            rec(rest - p, p, parts, out);
            parts.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Unnormalized weights `Π_m (θ_m/m)^{c_m}/c_m!` of every partition of `n`.
pub fn partition_weights(model: &WeightModel, n: usize) -> Result<Vec<(CycleType, f64)>> {
    let thetas = model.thetas(n)?;
    Ok(partitions(n)
        .into_iter()
        .map(|ct| {
            let w = log_type_weight(&ct, |m| thetas[m]).exp();
            (ct, w)
        })
        .collect())
}

/// `h_n` summed directly over integer partitions; independent of the recurrence.
pub fn brute_force_hn(model: &WeightModel, n: usize) -> Result<f64> {
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Usage(format!(
            "brute force enumeration limited to n <= {BRUTE_FORCE_MAX_N}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    Ok(partition_weights(model, n)?.iter().map(|(_, w)| w).sum())
}

/// Law of the length of the cycle containing element 1.
pub fn l1_distribution(table: &HTable, n: usize) -> Result<DistributionTable<usize>> {
    table.require_positive(n)?;
    let support: Vec<usize> = (1..=n).collect();
    let probs = support.iter().map(|&m| table.first_cycle_prob(n, m)).collect();
    Ok(DistributionTable {
        support,
        probs,
        deficit: 0.0,
    })
}

/// Joint law of `(C_1, .., C_b)` via the conditioning relation
/// `P[C = a] = Π_{m<=b} (θ_m/m)^{a_m}/a_m! · ĥ_{n - Σ m a_m} / h_n`, with `ĥ`
/// the normalization excluding cycle lengths `1..=b`. Outcomes with
/// probability below [`JOINT_PROB_FLOOR`] are dropped into `deficit`.
pub fn joint_counts_distribution(
    model: &WeightModel,
    n: usize,
    b: usize,
    cap: usize,
) -> Result<DistributionTable<Vec<usize>>> {
    if b == 0 || b > n {
        return Err(Error::Usage(format!("need 1 <= b <= n, got b = {b}, n = {n}")));
    }
    let full = HTable::new(model, n)?;
    full.require_positive(n)?;
    let excluded: BTreeSet<usize> = (1..=b).collect();
    let rest = HTable::restricted(model, n, &excluded)?;
    let log_hn = full.log_h()[n];

    // per-length log weights of a_m copies
    let thetas = full.thetas();
    let term_logs: Vec<Vec<f64>> = (1..=b)
        .map(|m| {
            let limit = if thetas[m] == 0.0 { 0 } else { cap.min(n / m) };
            let lt = (thetas[m] / m as f64).ln();
            (0..=limit)
                .map(|a| if a == 0 { 0.0 } else { a as f64 * lt - ln_factorial(a) })
                .collect()
        })
        .collect();

    let mut walk = TupleWalk {
        n,
        term_logs: &term_logs,
        rest_log_h: rest.log_h(),
        log_hn,
        current: vec![0; b],
        support: Vec::new(),
        probs: Vec::new(),
    };
    walk.visit(0, 0, 0.0);
    let kept: f64 = walk.probs.iter().sum();
    let (support, probs) = (walk.support, walk.probs);
    Ok(DistributionTable {
        support,
        probs,
        deficit: (1.0 - kept).max(0.0),
    })
}

struct TupleWalk<'a> {
    n: usize,
    term_logs: &'a [Vec<f64>],
    rest_log_h: &'a [f64],
    log_hn: f64,
    current: Vec<usize>,
    support: Vec<Vec<usize>>,
    probs: Vec<f64>,
}

impl TupleWalk<'_> {
    fn visit(&mut self, idx: usize, used: usize, logw: f64) {
        if idx == self.current.len() {
            let p = (logw + self.rest_log_h[self.n - used] - self.log_hn).exp();
            if p >= JOINT_PROB_FLOOR {
                self.support.push(self.current.clone());
                self.probs.push(p);
            }
            return;
        }
        let m = idx + 1;
        for c in 0..self.term_logs[idx].len() {
            if used + c * m > self.n {
                break;
            }
            self.current[idx] = c;
            self.visit(idx + 1, used + c * m, logw + self.term_logs[idx][c]);
        }
        self.current[idx] = 0;
    }
}

/// Law of the total number of cycles `K_0n`.
///
/// Uses `P_i[K = j] = Σ_m P_i[L_1 = m] · P_{i-m}[K = j-1]`, the ratio form of
/// `i h_{i,j} = Σ_m θ_m h_{i-m,j-1}`, on a dense table with `j` capped well
/// above the exact mean; truncated mass lands in `deficit`.
pub fn k0n_distribution(table: &HTable, n: usize) -> Result<DistributionTable<usize>> {
    table.require_positive(n)?;
    let mean = table.expected_cycles(n)?;
    let jmax = n.min((mean + 20.0 * mean.sqrt() + 50.0).ceil() as usize);
    let width = jmax + 1;
    // q[i*width + j] = P_i[K = j]
    let mut q = vec![0.0f64; (n + 1) * width];
    q[0] = 1.0;
    let log_h = table.log_h();
    for i in 1..=n {
        if log_h[i] == f64::NEG_INFINITY {
            continue;
        }
        let (done, row) = q.split_at_mut(i * width);
        let row = &mut row[..width];
        for m in 1..=i {
            let p = table.first_cycle_prob(i, m);
            if p == 0.0 {
                continue;
            }
            let prev = &done[(i - m) * width..(i - m + 1) * width];
            for (dst, src) in row[1..].iter_mut().zip(&prev[..jmax]) {
                *dst += p * src;
            }
        }
    }
    let row = &q[n * width..(n + 1) * width];
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            support.push(j);
            probs.push(p);
        }
    }
    let total: f64 = probs.iter().sum();
    Ok(DistributionTable {
        support,
        probs,
        deficit: (1.0 - total).max(0.0),
    })
}
