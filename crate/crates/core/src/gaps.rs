//! Gap statistics of decompositions: per-string gap extraction, the limiting
//! gap law of the conditioned chain, empirical gap measures, and the
//! double-exponential maximal-gap law with its exact-DP oracle.
//!
//! A gap is the index distance between consecutive summands; a digit `x >= 2`
//! contributes `x - 1` gaps of size zero, and trailing zeros close nothing.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::chain::{build_state_space, ChainModel};
use crate::decomposer::DigitString;
use crate::error::{Error, Result};
use crate::oracle::TRANSFER_GUARD;
use crate::recurrence::{scale_sequence, Recurrence};

/// Gap counts of a raw digit list (most significant first).
pub fn gap_counts_digits(a: &[u64]) -> BTreeMap<usize, u64> {
    let mut counts = BTreeMap::new();
    let mut last_nonzero: Option<usize> = None;
    for (j, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        if x >= 2 {
            *counts.entry(0).or_insert(0) += x - 1;
        }
        if let Some(prev) = last_nonzero {
            *counts.entry(j - prev).or_insert(0) += 1;
        }
        last_nonzero = Some(j);
    }
    counts
}

/// Gap counts of a digit string, by gap size.
pub fn gap_counts(ds: &DigitString) -> BTreeMap<usize, u64> {
    gap_counts_digits(ds.digits())
}

/// Largest gap size present; 0 for a string with no gaps.
pub fn max_gap(ds: &DigitString) -> usize {
    gap_counts(ds).keys().next_back().copied().unwrap_or(0)
}

/// One zero-coefficient-run contribution to the gap law: the state
/// `(0, b+1, b+2)` where `c_b > 0` starts a run of `r` zero coefficients.
#[derive(Debug, Clone)]
pub struct H2Entry {
    /// Index of the state in the model's state space.
    pub state: usize,
    /// The coefficient index just before the zero run.
    pub b: usize,
    /// Zero-run length `r(b)`.
    pub r: usize,
    /// Escape probability `phi_C(1) / (lambda_C phi_C(b + r + 1))`.
    pub rho: f64,
    /// Stationary weight of the state.
    pub weight: f64,
}

/// The limiting distribution of a typical gap.
///
/// Masses at 0 and 1 are explicit; for `k >= 2` the law mixes a geometric
/// tail (weight from the digit-0 reset states) with the forced-gap
/// corrections from zero-coefficient runs.
#[derive(Debug, Clone)]
pub struct GapLaw {
    /// Mean digit value `M` under the stationary digit marginal.
    pub mean_digit: f64,
    pub mass0: f64,
    pub mass1: f64,
    /// Stationary mass of the reset states `(0, b, 1)`.
    pub h1_mass: f64,
    pub h2: Vec<H2Entry>,
    /// Perron root of the companion matrix.
    pub lambda: f64,
    /// Stationary probability of digit 0.
    pub pi1_zero: f64,
}

impl GapLaw {
    /// Geometric factor `nu(k) = lambda^{-(k-1)} (1 - 1/lambda)`, `k >= 1`.
    pub fn geometric(&self, k: usize) -> f64 {
        assert!(k >= 1);
        self.lambda.powi(-(k as i32 - 1)) * (1.0 - 1.0 / self.lambda)
    }

    /// The forced-gap kernel for a zero run of length `r` with escape
    /// probability `rho`: zero below `r + 1`, a point mass at `r + 1`, and a
    /// shifted geometric above it.
    fn h(&self, entry: &H2Entry, k: usize) -> f64 {
        if k < entry.r + 1 {
            0.0
        } else if k == entry.r + 1 {
            1.0 - entry.rho
        } else {
            entry.rho
                * self.lambda.powi(-((k - entry.r - 2) as i32))
                * (1.0 - 1.0 / self.lambda)
        }
    }

    /// Limiting probability of a gap of size `k`.
    pub fn mass(&self, k: usize) -> f64 {
        match k {
            0 => self.mass0,
            1 => self.mass1,
            _ => {
                let nu = self.geometric(k - 1);
                let mut v = (1.0 - 1.0 / self.lambda) * self.h1_mass * nu;
                for e in &self.h2 {
                    v += e.weight * (self.h(e, k) - e.rho * nu);
                }
                v / self.mean_digit
            }
        }
    }

    /// Total mass with the `k >= 2` tail summed in closed form (the
    /// geometric pieces telescope to 1).
    pub fn total_mass(&self) -> f64 {
        let tail: f64 = ((1.0 - 1.0 / self.lambda) * self.h1_mass
            + self
                .h2
                .iter()
                .map(|e| e.weight * (1.0 - e.rho))
                .sum::<f64>())
            / self.mean_digit;
        self.mass0 + self.mass1 + tail
    }
}

/// Builds the limiting gap law from the conditioned-chain model.
pub fn limit_gap_law(model: &ChainModel) -> GapLaw {
    let rec = model.rec();
    let lambda = model.spectral.lambda;
    let pi1_zero = model.pi_q1[0];
    let mean_digit: f64 = model
        .pi_q1
        .iter()
        .enumerate()
        .map(|(x, &p)| x as f64 * p)
        .sum();

    let mut h1_mass = 0.0;
    let mut h2 = Vec::new();
    for (i, s) in model.space.states().iter().enumerate() {
        if s.x == 0 && s.b_next == 1 {
            h1_mass += model.pi_q[i];
        }
        // (0, b+1, b+2) with c_b > 0 and c_{b+1} = 0.
        if s.x == 0 && s.b_next == s.b + 1 && s.b >= 2 && rec.coeff(s.b) == 0 && rec.coeff(s.b - 1) > 0
        {
            let b = s.b - 1;
            let mut r = 0;
            while b + r + 1 <= rec.length() && rec.coeff(b + r + 1) == 0 {
                r += 1;
            }
            let rho = model.spectral.phi(1) / (lambda * model.spectral.phi(b + r + 1));
            h2.push(H2Entry {
                state: i,
                b,
                r,
                rho,
                weight: model.pi_q[i],
            });
        }
    }

    let mass0 = 1.0 - (1.0 - pi1_zero) / mean_digit;
    let h2_escape: f64 = h2.iter().map(|e| e.weight * (1.0 - e.rho)).sum();
    let mass1 = ((1.0 - pi1_zero) - (1.0 - 1.0 / lambda) * h1_mass - h2_escape) / mean_digit;
    GapLaw {
        mean_digit,
        mass0,
        mass1,
        h1_mass,
        h2,
        lambda,
        pi1_zero,
    }
}

/// Weighted empirical gap distribution from per-string gap histograms.
pub fn empirical_from_histograms(hists: &[(BTreeMap<usize, u64>, f64)]) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (hist, w) in hists {
        for (&k, &c) in hist {
            *acc.entry(k).or_insert(0.0) += w * c as f64;
            total += w * c as f64;
        }
    }
    if total > 0.0 {
        for v in acc.values_mut() {
            *v /= total;
        }
    }
    acc
}

/// Empirical gap distribution of a string collection, optionally weighted
/// (for importance sampling).
pub fn empirical_gap_distribution(
    strings: &[DigitString],
    weights: Option<&[f64]>,
) -> BTreeMap<usize, f64> {
    assert!(!strings.is_empty(), "empty collection");
    if let Some(w) = weights {
        assert_eq!(w.len(), strings.len());
    }
    let hists: Vec<(BTreeMap<usize, u64>, f64)> = strings
        .iter()
        .enumerate()
        .map(|(i, s)| (gap_counts(s), weights.map_or(1.0, |w| w[i])))
        .collect();
    empirical_from_histograms(&hists)
}

/// Parameters of the maximal-gap limit (longest-run-type) law.
#[derive(Debug, Clone)]
pub struct MaxGapLaw {
    /// `alpha = pi^Q_1(0) (1 - 1/lambda_C)`.
    pub alpha: f64,
    /// `q = 1 / lambda_C`.
    pub q: f64,
}

impl MaxGapLaw {
    /// Centering sequence `floor(ln(n alpha) / ln(1/q))`.
    pub fn centering(&self, n: usize) -> i64 {
        ((n as f64 * self.alpha).ln() / (1.0 / self.q).ln()).floor() as i64
    }

    /// Limiting CDF value at `centering(n) + k`: `exp(-q^{k-2})`.
    pub fn cdf_offset(&self, k: i64) -> f64 {
        (-self.q.powi(k as i32 - 2)).exp()
    }
}

/// The maximal-gap law; requires every coefficient positive.
pub fn maxgap_law(model: &ChainModel) -> Result<MaxGapLaw> {
    let rec = model.rec();
    if rec.coeffs().iter().any(|&c| c == 0) {
        return Err(Error::Model(format!(
            "maximal-gap law needs all coefficients positive; {} violates c_1 c_2 ... c_L > 0",
            rec.to_compact()
        )));
    }
    let q = 1.0 / model.spectral.lambda;
    let alpha = model.pi_q1[0] * (1.0 - q);
    Ok(MaxGapLaw { alpha, q })
}

/// Distance of `ln(n alpha)/ln(1/q)` to the nearest integer. The max-gap
/// limit is clean only along subsequences where this stays bounded away
/// from 0.
pub fn spacing_margin(n: usize, alpha: f64, q: f64) -> f64 {
    let t = (n as f64 * alpha).ln() / (1.0 / q).ln();
    (t - t.round()).abs()
}

fn maxgap_automaton(rec: &Recurrence, m: usize) -> (crate::chain::StateSpace, usize) {
    (build_state_space(rec), m)
}

/// Exact `Q_n(M_n <= m)`: big-integer count of legal strings of length
/// `n+1` whose gaps are all `<= m`, over the total count. The automaton
/// tracks the zero run since the last nonzero digit, capped at `m`; a
/// nonzero arrival with a full run would close a gap of size `> m` and is
/// dropped.
pub fn maxgap_exact_cdf(rec: &Recurrence, n: usize, m: usize) -> Result<BigRational> {
    if n > TRANSFER_GUARD {
        return Err(Error::Budget(format!(
            "max-gap DP length {n} exceeds the {TRANSFER_GUARD} guard"
        )));
    }
    let (space, cap) = maxgap_automaton(rec, m);
    let ns = space.len();
    let idx = |i: usize, r: usize| i * (cap + 1) + r;
    let mut count = vec![BigInt::zero(); ns * (cap + 1)];
    for &i in space.start_indices() {
        count[idx(i, 0)] = BigInt::one();
    }
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); ns * (cap + 1)];
        for i in 0..ns {
            for r in 0..=cap {
                let a = idx(i, r);
                if count[a].is_zero() {
                    continue;
                }
                for &j in space.successors(i) {
                    let x = space.states()[j].x;
                    if x == 0 {
                        next[idx(j, (r + 1).min(cap))] += &count[a];
                    } else if r < m {
                        next[idx(j, 0)] += &count[a];
                    }
                }
            }
        }
        count = next;
    }
    let good: BigInt = count.iter().sum();
    let seq = scale_sequence(rec, n + 2);
    let total = seq.term(n + 2) - seq.term(n + 1);
    Ok(BigRational::new(good, total))
}

/// Per-step-renormalized floating version of [`maxgap_exact_cdf`] for
/// lengths where exact integers are wasteful; the two are compared in tests
/// at the hand-over scale.
pub fn maxgap_cdf_float(rec: &Recurrence, n: usize, m: usize) -> Result<f64> {
    let run = |constrained: bool| -> f64 {
        let (space, cap) = maxgap_automaton(rec, m);
        let ns = space.len();
        let idx = |i: usize, r: usize| i * (cap + 1) + r;
        let mut w = vec![0.0f64; ns * (cap + 1)];
        for &i in space.start_indices() {
            w[idx(i, 0)] = 1.0;
        }
        let mut log_scale = 0.0f64;
        for _ in 0..n {
            let mut next = vec![0.0f64; ns * (cap + 1)];
            for i in 0..ns {
                for r in 0..=cap {
                    let a = idx(i, r);
                    if w[a] == 0.0 {
                        continue;
                    }
                    for &j in space.successors(i) {
                        let x = space.states()[j].x;
                        if x == 0 {
                            next[idx(j, (r + 1).min(cap))] += w[a];
                        } else if !constrained || r < m {
                            next[idx(j, 0)] += w[a];
                        }
                    }
                }
            }
            let s: f64 = next.iter().sum();
            for v in &mut next {
                *v /= s;
            }
            log_scale += s.ln();
            w = next;
        }
        log_scale
    };
    Ok((run(true) - run(false)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::recurrence::DEFAULT_ROOT_TOL;
    use num_traits::ToPrimitive;

    const PHI: f64 = 1.618033988749894848;

    fn fib_model() -> ChainModel {
        build_chain(&Recurrence::fibonacci(), DEFAULT_ROOT_TOL).unwrap()
    }

    fn l4_model() -> ChainModel {
        build_chain(&Recurrence::new(4, vec![1, 0, 0, 2]).unwrap(), DEFAULT_ROOT_TOL).unwrap()
    }

    #[test]
    fn gap_count_examples() {
        assert_eq!(gap_counts_digits(&[1, 0, 1]), BTreeMap::from([(2, 1)]));
        assert_eq!(
            gap_counts_digits(&[2, 0, 0, 1]),
            BTreeMap::from([(0, 1), (3, 1)])
        );
        assert_eq!(gap_counts_digits(&[1, 0, 0, 0, 0]), BTreeMap::new());
    }

    #[test]
    fn max_gap_examples() {
        let fib = Recurrence::fibonacci();
        assert_eq!(max_gap(&DigitString::new(fib.clone(), vec![1, 0, 1])), 2);
        assert_eq!(max_gap(&DigitString::new(fib.clone(), vec![1])), 0);
        assert_eq!(
            max_gap(&DigitString::new(fib, vec![1, 0, 0, 1, 0])),
            3
        );
    }

    #[test]
    fn fibonacci_gap_law_is_pure_geometric() {
        let law = limit_gap_law(&fib_model());
        assert!(law.mass0.abs() < 1e-12);
        assert!(law.mass1.abs() < 1e-12);
        assert!(law.h2.is_empty());
        for k in 2..=30usize {
            assert!(
                (law.mass(k) - PHI.powi(-(k as i32))).abs() < 1e-12,
                "mass({k})"
            );
        }
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
        // Gap production rate: mean digit mass is 1/(phi+2).
        assert!((law.mean_digit - 1.0 / (PHI + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_run_gap_law() {
        let model = l4_model();
        let law = limit_gap_law(&model);
        let lam = model.spectral.lambda;
        assert_eq!(law.h2.len(), 1);
        let e = &law.h2[0];
        assert_eq!((e.b, e.r), (1, 2));
        assert!((e.rho - 0.5).abs() < 1e-10);

        assert!(law.mass0.abs() < 1e-12);
        assert!((law.mass1 - (lam - 1.0) / (3.0 * lam)).abs() < 1e-10);
        // mass(k >= 2) = nu(k-1)/(3 lambda) + (2/3) h(k) where h has a point
        // mass 1/2 at k = 3 and a shifted geometric above.
        for k in 2..=20usize {
            let nu = law.geometric(k - 1);
            let h = match k.cmp(&3) {
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Greater => {
                    0.5 * lam.powi(-((k - 4) as i32)) * (1.0 - 1.0 / lam)
                }
            };
            assert!(
                (law.mass(k) - (nu / (3.0 * lam) + 2.0 / 3.0 * h)).abs() < 1e-10,
                "mass({k})"
            );
        }
        assert!((law.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_distribution_examples() {
        let fib = Recurrence::fibonacci();
        let one = DigitString::new(fib.clone(), vec![1, 0, 1]);
        let got = empirical_gap_distribution(&[one.clone()], None);
        assert_eq!(got, BTreeMap::from([(2, 1.0)]));

        let gapless = DigitString::new(fib, vec![1, 0, 0]);
        let got = empirical_gap_distribution(&[one, gapless], None);
        assert_eq!(got, BTreeMap::from([(2, 1.0)]));
    }

    #[test]
    fn maxgap_law_parameters() {
        let law = maxgap_law(&fib_model()).unwrap();
        assert!((law.alpha - 1.0 / (PHI + 2.0)).abs() < 1e-12);
        assert!((law.q - 1.0 / PHI).abs() < 1e-12);
        for k in -3..6i64 {
            assert!((law.cdf_offset(k) - (-PHI.powi(-(k as i32 - 2))).exp()).abs() < 1e-12);
            assert!(law.cdf_offset(k) < law.cdf_offset(k + 1));
        }
        assert!(matches!(maxgap_law(&l4_model()), Err(Error::Model(_))));
    }

    #[test]
    fn spacing_margin_examples() {
        // ln(n alpha)/ln(1/q) = 7.5 when n alpha = (1/q)^7.5.
        let q: f64 = 0.5;
        let alpha = 2f64.powf(7.5) / 1000.0;
        assert!((spacing_margin(1000, alpha, q) - 0.5).abs() < 1e-9);
        let alpha = 2f64.powi(7) / 1000.0;
        assert!(spacing_margin(1000, alpha, q) < 1e-9);
    }

    #[test]
    fn maxgap_cdf_small_cases() {
        let fib = Recurrence::fibonacci();
        assert!(maxgap_exact_cdf(&fib, 2, 2).unwrap().is_one());
        // Of the five length-5 strings only 10000 has max gap <= 1.
        let got = maxgap_exact_cdf(&fib, 4, 1).unwrap();
        assert_eq!(got, BigRational::new(BigInt::from(1), BigInt::from(5)));
        assert!(maxgap_exact_cdf(&fib, 7, 9).unwrap().is_one());
    }

    #[test]
    fn maxgap_cdf_matches_enumeration() {
        for rec in [
            Recurrence::fibonacci(),
            Recurrence::new(4, vec![1, 0, 0, 2]).unwrap(),
            Recurrence::new(2, vec![2, 1]).unwrap(),
        ] {
            for n in 0..=9usize {
                let stats = crate::oracle::exhaustive_stats(&rec, n).unwrap();
                for m in 0..=n {
                    let want: u64 = stats
                        .max_gap_histogram
                        .iter()
                        .filter(|(&g, _)| g <= m)
                        .map(|(_, &c)| c)
                        .sum();
                    let got = maxgap_exact_cdf(&rec, n, m).unwrap();
                    let want = BigRational::new(BigInt::from(want), BigInt::from(stats.count));
                    assert_eq!(got, want, "{} n={n} m={m}", rec.to_compact());
                }
            }
        }
    }

    #[test]
    fn float_cdf_matches_exact_at_handover() {
        let fib = Recurrence::fibonacci();
        for m in [6usize, 10, 14] {
            let exact = maxgap_exact_cdf(&fib, 300, m).unwrap();
            let float = maxgap_cdf_float(&fib, 300, m).unwrap();
            assert!(
                (report_f64(&exact) - float).abs() < 1e-9,
                "m={m}: {} vs {float}",
                report_f64(&exact)
            );
        }
    }

    fn report_f64(r: &BigRational) -> f64 {
        crate::report::ratio_to_f64(r)
    }

    #[test]
    fn exact_cdf_budget() {
        assert!(matches!(
            maxgap_exact_cdf(&Recurrence::fibonacci(), TRANSFER_GUARD + 1, 3),
            Err(Error::Budget(_))
        ));
    }
}
