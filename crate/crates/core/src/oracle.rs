//! Ground-truth statistics of the uniform measure on fixed-length legal
//! strings: explicit enumeration for small lengths and exact big-integer
//! transfer DPs for moderate ones. Everything here is exact rational
//! arithmetic; the closed forms elsewhere are judged against these numbers.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::chain::{build_state_space, StateSpace};
use crate::decomposer::for_each_legal;
use crate::error::{Error, Result};
use crate::gaps::gap_counts_digits;
use crate::recurrence::{scale_sequence, Recurrence};

/// Length guard for the transfer DPs.
pub const TRANSFER_GUARD: usize = 10_000;

/// Exact moments of an additive functional `S_n = sum_j g(Z_j)` under the
/// uniform measure on legal strings of length `n+1`.
#[derive(Debug, Clone)]
pub struct AdditiveMoments {
    /// Number of legal strings of this length.
    pub count: BigInt,
    pub mean: BigRational,
    /// Raw second moment `E S_n^2`.
    pub second_moment: BigRational,
    /// Central second moment.
    pub variance: BigRational,
}

/// Big-integer transfer DP over the allowed-transition graph carrying
/// `(path count, sum of S, sum of S^2)` per state. `g` is a rational value
/// per chain state (same order as the state space).
pub fn additive_moments(rec: &Recurrence, g: &[BigRational], n: usize) -> Result<AdditiveMoments> {
    let space = build_state_space(rec);
    assert_eq!(g.len(), space.len(), "g must assign a value to every state");
    if n > TRANSFER_GUARD {
        return Err(Error::Budget(format!(
            "transfer DP length {n} exceeds the {TRANSFER_GUARD} guard"
        )));
    }
    // Scale g to integers by the common denominator.
    let denom = g
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let gi: Vec<BigInt> = g.iter().map(|v| v.numer() * (&denom / v.denom())).collect();

    let m = space.len();
    let mut count = vec![BigInt::zero(); m];
    let mut sum = vec![BigInt::zero(); m];
    let mut ss = vec![BigInt::zero(); m];
    for &i in space.start_indices() {
        count[i] = BigInt::one();
        sum[i] = gi[i].clone();
        ss[i] = &gi[i] * &gi[i];
    }
    for _ in 0..n {
        let mut nc = vec![BigInt::zero(); m];
        let mut ns = vec![BigInt::zero(); m];
        let mut nss = vec![BigInt::zero(); m];
        for i in 0..m {
            if count[i].is_zero() {
                continue;
            }
            for &j in space.successors(i) {
                nc[j] += &count[i];
                ns[j] += &sum[i] + &count[i] * &gi[j];
                nss[j] += &ss[i] + 2 * &sum[i] * &gi[j] + &count[i] * &gi[j] * &gi[j];
            }
        }
        count = nc;
        sum = ns;
        ss = nss;
    }
    let total: BigInt = count.iter().sum();
    let s: BigInt = sum.iter().sum();
    let s2: BigInt = ss.iter().sum();
    let mean = BigRational::new(s, &denom * &total);
    let second_moment = BigRational::new(s2, &denom * &denom * &total);
    let variance = &second_moment - &mean * &mean;
    Ok(AdditiveMoments {
        count: total,
        mean,
        second_moment,
        variance,
    })
}

/// Statistics the transfer DP can evaluate exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferStatistic {
    /// `E k(N)`, summands counted with multiplicity (`sum_j a_j`).
    MeanSummands,
    /// Raw second moment of the summand count.
    SecondMomentSummands,
    /// Expected number of gaps of the given size.
    GapCount(usize),
    /// Expected total number of gaps (`E sum_j a_j - 1`).
    TotalGaps,
    /// Number of legal strings of the length class.
    StringCount,
}

impl TransferStatistic {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("gap-count:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Input(format!("bad gap size in '{s}'")))?;
            return Ok(TransferStatistic::GapCount(k));
        }
        match s {
            "mean-summands" => Ok(TransferStatistic::MeanSummands),
            "second-moment-summands" => Ok(TransferStatistic::SecondMomentSummands),
            "total-gaps" => Ok(TransferStatistic::TotalGaps),
            "string-count" => Ok(TransferStatistic::StringCount),
            _ => Err(Error::Input(format!("unknown statistic '{s}'"))),
        }
    }
}

/// Exact value of a statistic under the uniform measure on legal strings of
/// length `n+1`.
pub fn transfer_stats(rec: &Recurrence, n: usize, stat: TransferStatistic) -> Result<BigRational> {
    match stat {
        TransferStatistic::MeanSummands => {
            let g = digit_value_g(rec);
            Ok(additive_moments(rec, &g, n)?.mean)
        }
        TransferStatistic::SecondMomentSummands => {
            let g = digit_value_g(rec);
            Ok(additive_moments(rec, &g, n)?.second_moment)
        }
        TransferStatistic::TotalGaps => {
            let g = digit_value_g(rec);
            Ok(additive_moments(rec, &g, n)?.mean - BigRational::one())
        }
        TransferStatistic::GapCount(k) => expected_gap_count(rec, n, k),
        TransferStatistic::StringCount => {
            if n > TRANSFER_GUARD {
                return Err(Error::Budget(format!(
                    "transfer DP length {n} exceeds the {TRANSFER_GUARD} guard"
                )));
            }
            let seq = scale_sequence(rec, n + 2);
            Ok(BigRational::from(seq.term(n + 2) - seq.term(n + 1)))
        }
    }
}

fn digit_value_g(rec: &Recurrence) -> Vec<BigRational> {
    build_state_space(rec)
        .states()
        .iter()
        .map(|s| BigRational::from(BigInt::from(s.x)))
        .collect()
}

/// Exact `E N_n(k)` via the run-length-augmented automaton: chain state
/// crossed with the number of zeros since the last nonzero digit, capped at
/// `k` (longer runs can no longer close a size-`k` gap).
fn expected_gap_count(rec: &Recurrence, n: usize, k: usize) -> Result<BigRational> {
    if n > TRANSFER_GUARD {
        return Err(Error::Budget(format!(
            "transfer DP length {n} exceeds the {TRANSFER_GUARD} guard"
        )));
    }
    let space = build_state_space(rec);
    let m = space.len();
    let cap = k.max(1); // run values 0..=cap
    let idx = |i: usize, r: usize| i * (cap + 1) + r;
    let size = m * (cap + 1);

    // Gap increments happen on nonzero digits: a digit x closes a size-(r+1)
    // gap when some summand precedes it, and repeats of the digit itself are
    // x-1 gaps of size zero.
    let increment = |x: u64, r: usize| -> BigInt {
        let mut inc = BigInt::zero();
        if k == 0 && x >= 1 {
            inc += BigInt::from(x - 1);
        }
        if k >= 1 && r == k - 1 {
            inc += BigInt::one();
        }
        inc
    };

    let mut count = vec![BigInt::zero(); size];
    let mut sum = vec![BigInt::zero(); size];
    for &i in space.start_indices() {
        let x = space.states()[i].x;
        count[idx(i, 0)] = BigInt::one();
        // The first digit closes no inter-summand gap.
        if k == 0 {
            sum[idx(i, 0)] = BigInt::from(x - 1);
        }
    }
    for _ in 0..n {
        let mut nc = vec![BigInt::zero(); size];
        let mut ns = vec![BigInt::zero(); size];
        for i in 0..m {
            for r in 0..=cap {
                let a = idx(i, r);
                if count[a].is_zero() {
                    continue;
                }
                for &j in space.successors(i) {
                    let x = space.states()[j].x;
                    let (r2, inc) = if x == 0 {
                        ((r + 1).min(cap), BigInt::zero())
                    } else {
                        (0, increment(x, r))
                    };
                    let b = idx(j, r2);
                    nc[b] += &count[a];
                    ns[b] += &sum[a] + &count[a] * inc;
                }
            }
        }
        count = nc;
        sum = ns;
    }
    let total: BigInt = count.iter().sum();
    let s: BigInt = sum.iter().sum();
    Ok(BigRational::new(s, total))
}

/// Exact enumeration statistics over every legal string of length `n+1`.
#[derive(Debug, Clone)]
pub struct ExhaustiveStats {
    pub n: usize,
    pub count: u64,
    /// Mean and variance of the summand count `k(N) = sum_j a_j`.
    pub mean_summands: BigRational,
    pub variance_summands: BigRational,
    /// Total gap counts summed over all strings, by gap size.
    pub gap_histogram: BTreeMap<usize, u64>,
    /// Distribution of the maximal gap (string counts by max-gap value).
    pub max_gap_histogram: BTreeMap<usize, u64>,
}

pub fn exhaustive_stats(rec: &Recurrence, n: usize) -> Result<ExhaustiveStats> {
    let mut count = 0u64;
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;
    let mut gap_histogram = BTreeMap::new();
    let mut max_gap_histogram = BTreeMap::new();
    for_each_legal(rec, n, |digits| {
        count += 1;
        let k: u64 = digits.iter().sum();
        sum += k as u128;
        sum_sq += (k as u128) * (k as u128);
        let gaps = gap_counts_digits(digits);
        let max = gaps.keys().next_back().copied().unwrap_or(0);
        *max_gap_histogram.entry(max).or_insert(0u64) += 1;
        for (size, c) in gaps {
            *gap_histogram.entry(size).or_insert(0u64) += c;
        }
    })?;
    let c = BigInt::from(count);
    let mean = BigRational::new(BigInt::from(sum), c.clone());
    let second = BigRational::new(BigInt::from(sum_sq), c);
    let variance = &second - &mean * &mean;
    Ok(ExhaustiveStats {
        n,
        count,
        mean_summands: mean,
        variance_summands: variance,
        gap_histogram,
        max_gap_histogram,
    })
}

/// Per-state summand indicator (`1` on nonzero digit) as exact rationals —
/// the default additive functional.
pub fn summand_indicator_exact(space: &StateSpace) -> Vec<BigRational> {
    space
        .states()
        .iter()
        .map(|s| {
            if s.x > 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect()
}
