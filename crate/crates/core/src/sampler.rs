//! Exact sampling of cycle types.
//!
//! Given `n' ` elements still unassigned, the cycle through the smallest of
//! them has length `m` with probability `θ_m h_{n'-m} / (n' h_{n'})`.
//! Drawing these lengths until nothing is left yields the lexicographic cycle
//! lengths `L_1, L_2, ...` and a cycle type with exactly the weighted law.
//!
//! Sample `i` of a batch always uses ChaCha8 seeded from the batch seed with
//! stream number `i`, so results do not depend on how work is split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{CycleType, HTable};
use crate::weights::WeightModel;

#[derive(Debug, Clone)]
pub struct SamplerState {
    model: WeightModel,
    table: HTable,
    n: usize,
    seed: u64,
}

impl SamplerState {
    pub fn new(model: WeightModel, n: usize, seed: u64) -> Result<Self> {
        let table = HTable::new(&model, n)?;
        Self::with_table(model, table, n, seed)
    }

    /// Reuses a precomputed table, which must cover `n` and belong to `model`.
    pub fn with_table(model: WeightModel, table: HTable, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("cannot sample permutations of size 0".into()));
        }
        table.require_positive(n)?;
        // every state entered afterwards has h > 0: a move to n' - m has
        // probability proportional to h_{n'-m}
        Ok(Self { model, table, n, seed })
    }

    pub fn model(&self) -> &WeightModel {
        &self.model
    }

    pub fn table(&self) -> &HTable {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same model and table, different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn draw_first(&self, remaining: usize, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for m in 1..=remaining {
            let p = self.table.first_cycle_prob(remaining, m);
            if p > 0.0 {
                acc += p;
                last = m;
                if u < acc {
                    return m;
                }
            }
        }
        // rounding left the cumulative sum just below u
        assert!(last > 0, "state {remaining} has no admissible cycle length");
        last
    }

    /// Lexicographic cycle lengths `L_1, L_2, ...` of sample number `index`.
    pub fn draw_lengths(&self, index: u64) -> Vec<usize> {
        let mut rng = self.rng_for(index);
        let mut remaining = self.n;
        let mut out = Vec::new();
        while remaining > 0 {
            let m = self.draw_first(remaining, &mut rng);
            out.push(m);
            remaining -= m;
        }
        out
    }

    /// Only `L_1` of sample number `index`; agrees with `draw_lengths(index)[0]`.
    pub fn draw_l1(&self, index: u64) -> usize {
        self.draw_first(self.n, &mut self.rng_for(index))
    }

    pub fn sample_cycle_type(&self, index: u64) -> CycleType {
        let ct = CycleType::from_lengths(&self.draw_lengths(index)).expect("n >= 1");
        assert_eq!(ct.n(), self.n);
        ct
    }

    /// Lexicographic lengths for samples `0..count`, in index order.
    pub fn lengths_batch(&self, count: usize, workers: usize) -> Result<Vec<Vec<usize>>> {
        self.run_batch(count, workers, |i| self.draw_lengths(i))
    }

    pub fn l1_batch(&self, count: usize, workers: usize) -> Result<Vec<usize>> {
        self.run_batch(count, workers, |i| self.draw_l1(i))
    }

    /// Cycle types for samples `0..count`, in index order.
    pub fn sample_batch(&self, count: usize, workers: usize) -> Result<Vec<CycleType>> {
        self.run_batch(count, workers, |i| self.sample_cycle_type(i))
    }

    fn run_batch<T: Send>(&self, count: usize, workers: usize, f: impl Fn(u64) -> T + Sync) -> Result<Vec<T>> {
        if workers <= 1 {
            return Ok((0..count as u64).map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(pool.install(|| (0..count as u64).into_par_iter().map(&f).collect()))
    }
}

/// One cycle type per line in canonical (sorted) order.
pub fn serialize_samples(samples: &[CycleType]) -> String {
    let mut sorted: Vec<&CycleType> = samples.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for ct in sorted {
        out.push_str(&ct.to_string());
        out.push('\n');
    }
    out
}

/// Inverse of [`serialize_samples`]; blank lines and `#` comments are skipped.
pub fn parse_samples(text: &str) -> Result<Vec<CycleType>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_three_cycle() {
        let s = SamplerState::new(WeightModel::log_power(1).unwrap(), 3, 7).unwrap();
        for i in 0..200 {
            assert_eq!(s.sample_cycle_type(i).to_string(), "3: 3^1");
        }
    }

    #[test]
    fn undefined_measure_rejected() {
        let err = SamplerState::new(WeightModel::log_power(1).unwrap(), 1, 7).unwrap_err();
        assert_eq!(err, Error::MeasureUndefined { n: 1 });
    }

    #[test]
    fn workers_do_not_change_results() {
        let s = SamplerState::new(WeightModel::log_power(2).unwrap(), 200, 99).unwrap();
        let a = s.sample_batch(300, 1).unwrap();
        let b = s.sample_batch(300, 8).unwrap();
        assert_eq!(a, b);
        assert!(s.sample_batch(0, 4).unwrap().is_empty());
        let c = s.reseeded(100).sample_batch(300, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn serialization_round_trip() {
        let s = SamplerState::new(WeightModel::constant(1.0).unwrap(), 12, 3).unwrap();
        let batch = s.sample_batch(50, 2).unwrap();
        let text = serialize_samples(&batch);
        let mut back = parse_samples(&text).unwrap();
        let mut orig = batch.clone();
        back.sort();
        orig.sort();
        assert_eq!(back, orig);
        assert_eq!(serialize_samples(&back), text);
    }

    #[test]
    fn l1_shortcut_matches_full_draw() {
        let s = SamplerState::new(WeightModel::log_power(1).unwrap(), 300, 5).unwrap();
        for i in 0..100 {
            assert_eq!(s.draw_l1(i), s.draw_lengths(i)[0]);
        }
    }

    #[test]
    fn every_sample_has_size_n() {
        let s = SamplerState::new(WeightModel::log_power_with(1, vec![0.3], 100).unwrap(), 97, 1).unwrap();
        for i in 0..500 {
            let lengths = s.draw_lengths(i);
            assert_eq!(lengths.iter().sum::<usize>(), 97);
        }
    }
}
