//! Monte Carlo for scales beyond the exact DPs: simulate the ergodic chain
//! from the conditioned start law and reweight each path by `1/phi_c` at the
//! endpoint, so self-normalized ratio estimates target the uniform measure
//! on fixed-length decompositions.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::ChainModel;

/// Per-trial summary extracted from a sampled path.
#[derive(Debug, Clone)]
pub struct TrialStats {
    /// Number of nonzero digits (summand count for the default functional).
    pub nonzero_digits: u64,
    /// Sum of digit values (summands with multiplicity).
    pub digit_sum: u64,
    pub gap_hist: BTreeMap<usize, u64>,
    pub max_gap: usize,
}

/// A reproducible batch of sampled paths with importance weights.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// `1 / phi_c(Z_n)` per trial.
    pub weights: Vec<f64>,
    pub stats: Vec<TrialStats>,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub ess: f64,
}

/// Statistics the ratio estimator evaluates on a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatistic {
    /// Nonzero-digit count.
    SummandCount,
    /// Digit sum (summands with multiplicity).
    DigitSum,
    /// Indicator that the maximal gap is `<= m`.
    MaxGapAtMost(usize),
    /// Number of gaps of one size.
    GapCount(usize),
    /// Total number of gaps.
    TotalGaps,
}

/// O(1) categorical sampler over a fixed support (alias method).
struct AliasTable {
    targets: Vec<usize>,
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    fn new(targets: Vec<usize>, weights: &[f64]) -> Self {
        let k = targets.len();
        assert!(k > 0);
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut prob = vec![0.0; k];
        let mut alias = vec![0usize; k];
        let mut small: Vec<usize> = (0..k).filter(|&i| scaled[i] < 1.0).collect();
        let mut large: Vec<usize> = (0..k).filter(|&i| scaled[i] >= 1.0).collect();
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        AliasTable {
            targets,
            prob,
            alias,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let i = rng.gen_range(0..self.targets.len());
        if rng.gen::<f64>() < self.prob[i] {
            self.targets[i]
        } else {
            self.targets[self.alias[i]]
        }
    }
}

/// Samples `trials` independent paths of length `n+1`. Trials are keyed by
/// `(seed, trial index)` through separate generator streams, so the batch is
/// bit-identical under any parallel schedule.
pub fn sample_paths(model: &ChainModel, n: usize, trials: usize, seed: u64) -> SampleBatch {
    assert!(trials >= 1);
    let start_targets: Vec<usize> = model.space.start_indices().to_vec();
    let start_weights: Vec<f64> = start_targets.iter().map(|&i| model.tilde_phi_c[i]).collect();
    let start_table = AliasTable::new(start_targets, &start_weights);
    let row_tables: Vec<AliasTable> = (0..model.num_states())
        .map(|i| {
            let targets: Vec<usize> = model.space.successors(i).to_vec();
            let weights: Vec<f64> = targets.iter().map(|&j| model.q[(i, j)]).collect();
            AliasTable::new(targets, &weights)
        })
        .collect();

    let results: Vec<(f64, TrialStats)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut state = start_table.draw(&mut rng);
            let mut stats = TrialStats {
                nonzero_digits: 0,
                digit_sum: 0,
                gap_hist: BTreeMap::new(),
                max_gap: 0,
            };
            let mut last_nonzero: Option<usize> = None;
            let mut absorb = |stats: &mut TrialStats, pos: usize, x: u64| {
                if x == 0 {
                    return;
                }
                stats.nonzero_digits += 1;
                stats.digit_sum += x;
                if x >= 2 {
                    *stats.gap_hist.entry(0).or_insert(0) += x - 1;
                }
                if let Some(prev) = last_nonzero {
                    let gap = pos - prev;
                    *stats.gap_hist.entry(gap).or_insert(0) += 1;
                    stats.max_gap = stats.max_gap.max(gap);
                }
                last_nonzero = Some(pos);
            };
            absorb(&mut stats, 0, model.space.states()[state].x);
            for pos in 1..=n {
                state = row_tables[state].draw(&mut rng);
                absorb(&mut stats, pos, model.space.states()[state].x);
            }
            (1.0 / model.phi_c[state], stats)
        })
        .collect();

    let (weights, stats): (Vec<f64>, Vec<TrialStats>) = results.into_iter().unzip();
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    SampleBatch {
        n,
        trials,
        seed,
        weights,
        stats,
        ess: sw * sw / sw2,
    }
}

fn stat_value(stats: &TrialStats, stat: SampleStatistic) -> f64 {
    match stat {
        SampleStatistic::SummandCount => stats.nonzero_digits as f64,
        SampleStatistic::DigitSum => stats.digit_sum as f64,
        SampleStatistic::MaxGapAtMost(m) => {
            if stats.max_gap <= m {
                1.0
            } else {
                0.0
            }
        }
        SampleStatistic::GapCount(k) => stats.gap_hist.get(&k).copied().unwrap_or(0) as f64,
        SampleStatistic::TotalGaps => stats.gap_hist.values().sum::<u64>() as f64,
    }
}

/// Self-normalized ratio estimate with its delta-method standard error.
pub fn estimate(batch: &SampleBatch, stat: SampleStatistic) -> (f64, f64) {
    assert!(!batch.weights.is_empty());
    let sw: f64 = batch.weights.iter().sum();
    let est: f64 = batch
        .weights
        .iter()
        .zip(&batch.stats)
        .map(|(w, s)| w * stat_value(s, stat))
        .sum::<f64>()
        / sw;
    let var: f64 = batch
        .weights
        .iter()
        .zip(&batch.stats)
        .map(|(w, s)| {
            let d = stat_value(s, stat) - est;
            w * w * d * d
        })
        .sum();
    (est, var.sqrt() / sw)
}

/// Weighted empirical gap distribution of a batch.
pub fn batch_gap_distribution(batch: &SampleBatch) -> BTreeMap<usize, f64> {
    let hists: Vec<(BTreeMap<usize, u64>, f64)> = batch
        .stats
        .iter()
        .zip(&batch.weights)
        .map(|(s, &w)| (s.gap_hist.clone(), w))
        .collect();
    crate::gaps::empirical_from_histograms(&hists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::functionals::conditioned_mean_counting;
    use crate::oracle::summand_indicator_exact;
    use crate::recurrence::{Recurrence, DEFAULT_ROOT_TOL};
    use crate::report::ratio_to_f64;

    fn fib_model() -> ChainModel {
        build_chain(&Recurrence::fibonacci(), DEFAULT_ROOT_TOL).unwrap()
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let model = fib_model();
        let a = sample_paths(&model, 50, 200, 42);
        let b = sample_paths(&model, 50, 200, 42);
        assert_eq!(a.weights, b.weights);
        for (x, y) in a.stats.iter().zip(&b.stats) {
            assert_eq!(x.gap_hist, y.gap_hist);
            assert_eq!(x.nonzero_digits, y.nonzero_digits);
        }
        let c = sample_paths(&model, 50, 200, 43);
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn weights_bounded_and_ess_sane() {
        let model = fib_model();
        let batch = sample_paths(&model, 100, 500, 7);
        let lo = 1.0 / model.phi_c.max();
        let hi = 1.0 / model.phi_c.min();
        for &w in &batch.weights {
            assert!((lo - 1e-12..=hi + 1e-12).contains(&w));
        }
        assert!(batch.ess <= batch.trials as f64 + 1e-9);
        assert!(batch.ess >= batch.trials as f64 * 0.5);
    }

    #[test]
    fn constant_statistic_has_zero_stderr() {
        let model = fib_model();
        let batch = sample_paths(&model, 30, 100, 1);
        // Total gaps equals digit sum minus one on every path, so the
        // difference of the two estimates is exactly 1 with stderr equality.
        let (est, se) = estimate(&batch, SampleStatistic::MaxGapAtMost(30));
        assert_eq!((est, se), (1.0, 0.0));
    }

    #[test]
    fn estimator_matches_exact_mean() {
        let model = fib_model();
        let rec = Recurrence::fibonacci();
        let g = summand_indicator_exact(&model.space);
        for n in [5usize, 12] {
            let exact = ratio_to_f64(&conditioned_mean_counting(&rec, &g, n).unwrap());
            let batch = sample_paths(&model, n, 40_000, 9);
            let (est, se) = estimate(&batch, SampleStatistic::SummandCount);
            assert!(
                (est - exact).abs() <= 4.0 * se.max(1e-12),
                "n={n}: {est} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn total_gaps_identity_on_paths() {
        let model = fib_model();
        let batch = sample_paths(&model, 40, 300, 3);
        for s in &batch.stats {
            let total: u64 = s.gap_hist.values().sum();
            assert_eq!(total, s.digit_sum - 1);
        }
    }
}
