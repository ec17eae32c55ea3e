//! Positive linear recurrences, their integer scale sequences, and the
//! companion-matrix spectral data in closed form.
//!
//! A recurrence of length `L` with coefficients `c_1..c_L` (where
//! `c_1, c_L >= 1`) drives everything else in the crate: the scale sequence
//! `G_1, G_2, ...` against which integers are decomposed, and the companion
//! matrix whose Perron root governs growth, gap tails, and the conditioned
//! chain.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecurrenceDefect, Result};

/// Default relative tolerance for the Perron root solver.
pub const DEFAULT_ROOT_TOL: f64 = 1e-13;

/// A positive linear recurrence: length `L` and non-negative coefficients
/// `c_1..c_L` with `c_1 >= 1` and `c_L >= 1`.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRecurrence", into = "RawRecurrence")]
pub struct Recurrence {
    length: usize,
    coeffs: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawRecurrence {
    #[serde(rename = "L")]
    length: usize,
    #[serde(rename = "c")]
    coeffs: Vec<i64>,
}

impl TryFrom<RawRecurrence> for Recurrence {
    type Error = RecurrenceDefect;
    fn try_from(raw: RawRecurrence) -> std::result::Result<Self, RecurrenceDefect> {
        Recurrence::new(raw.length, raw.coeffs)
    }
}

impl From<Recurrence> for RawRecurrence {
    fn from(rec: Recurrence) -> Self {
        RawRecurrence {
            length: rec.length,
            coeffs: rec.coeffs.iter().map(|&c| c as i64).collect(),
        }
    }
}

impl Recurrence {
    pub fn new(length: usize, coeffs: Vec<i64>) -> std::result::Result<Self, RecurrenceDefect> {
        if length == 0 {
            return Err(RecurrenceDefect::ZeroLength);
        }
        if coeffs.len() != length {
            return Err(RecurrenceDefect::CoefficientCountMismatch);
        }
        if coeffs.iter().any(|&c| c < 0) {
            return Err(RecurrenceDefect::NegativeCoefficient);
        }
        if coeffs[0] == 0 {
            return Err(RecurrenceDefect::LeadingCoefficientZero);
        }
        if coeffs[length - 1] == 0 {
            return Err(RecurrenceDefect::TrailingCoefficientZero);
        }
        Ok(Recurrence {
            length,
            coeffs: coeffs.into_iter().map(|c| c as u64).collect(),
        })
    }

    /// The Fibonacci recurrence `G_{n+2} = G_{n+1} + G_n` (L=2, c=[1,1]).
    pub fn fibonacci() -> Self {
        Recurrence::new(2, vec![1, 1]).expect("fibonacci is valid")
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// `c_j`, 1-based; panics if `j` is out of `1..=L`.
    pub fn coeff(&self, j: usize) -> u64 {
        self.coeffs[j - 1]
    }

    pub fn max_coeff(&self) -> u64 {
        *self.coeffs.iter().max().expect("non-empty")
    }

    /// Parses the compact text form `"L=4;c=1,0,0,2"`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Input(format!("bad recurrence '{s}': {msg}"));
        let mut parts = s.trim().splitn(2, ';');
        let l_part = parts.next().ok_or_else(|| bad("missing L"))?;
        let c_part = parts.next().ok_or_else(|| bad("missing c"))?;
        let length: usize = l_part
            .strip_prefix("L=")
            .ok_or_else(|| bad("expected 'L=<n>'"))?
            .parse()
            .map_err(|_| bad("unparsable L"))?;
        let coeffs: Vec<i64> = c_part
            .strip_prefix("c=")
            .ok_or_else(|| bad("expected 'c=<list>'"))?
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| bad("unparsable coefficient")))
            .collect::<Result<_>>()?;
        Recurrence::new(length, coeffs).map_err(Error::from)
    }

    /// Renders the compact text form `"L=4;c=1,0,0,2"`.
    pub fn to_compact(&self) -> String {
        let c: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("L={};c={}", self.length, c.join(","))
    }
}

/// The exact scale sequence `G_1..G_m` of a recurrence.
///
/// `G_1 = 1`; for `n < L` the inhomogeneous rule
/// `G_{n+1} = c_1 G_n + ... + c_n G_1 + 1` applies, and for `n >= L` the
/// homogeneous rule `G_{n+1} = sum_j c_j G_{n+1-j}`.
#[derive(Debug, Clone)]
pub struct ScaleSequence {
    rec: Recurrence,
    terms: Vec<BigInt>,
}

impl ScaleSequence {
    pub fn rec(&self) -> &Recurrence {
        &self.rec
    }

    /// `G_n`, 1-based.
    pub fn term(&self, n: usize) -> &BigInt {
        &self.terms[n - 1]
    }

    pub fn terms(&self) -> &[BigInt] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Extends the sequence in place until it has at least `m` terms.
    pub fn extend_to(&mut self, m: usize) {
        let l = self.rec.length();
        while self.terms.len() < m {
            let n = self.terms.len(); // about to compute G_{n+1}
            let mut next = BigInt::zero();
            if n < l {
                for j in 1..=n {
                    next += BigInt::from(self.rec.coeff(j)) * &self.terms[n - j];
                }
                next += BigInt::one();
            } else {
                for j in 1..=l {
                    next += BigInt::from(self.rec.coeff(j)) * &self.terms[n - j];
                }
            }
            self.terms.push(next);
        }
    }
}

/// Computes `G_1..G_m` exactly.
pub fn scale_sequence(rec: &Recurrence, m: usize) -> ScaleSequence {
    let mut seq = ScaleSequence {
        rec: rec.clone(),
        terms: vec![BigInt::one()],
    };
    seq.extend_to(m);
    seq
}

/// Coefficients of the characteristic polynomial
/// `lambda^L - sum_j c_j lambda^{L-j}`, highest degree first.
pub fn charpoly(rec: &Recurrence) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(rec.length() + 1);
    coeffs.push(1.0);
    for &c in rec.coeffs() {
        coeffs.push(-(c as f64));
    }
    coeffs
}

fn charpoly_eval(rec: &Recurrence, x: f64) -> (f64, f64) {
    // Horner with derivative.
    let coeffs = charpoly(rec);
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in &coeffs {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// The Perron root of the companion matrix: the unique root of the
/// characteristic polynomial in `[1, 1 + max_j c_j]`.
///
/// Bisection bracket refined by Newton steps (bisection fallback when a step
/// leaves the bracket). Deterministic: identical inputs give bit-identical
/// output.
pub fn perron_root(rec: &Recurrence, tol: f64) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut lo = 1.0;
    let mut hi = 1.0 + rec.max_coeff() as f64;
    let (p_lo, _) = charpoly_eval(rec, lo);
    if p_lo == 0.0 {
        // Degenerate L=1, c=[1]: root exactly 1.
        return lo;
    }
    debug_assert!(p_lo < 0.0);
    let mut x = hi;
    for _ in 0..200 {
        let (p, dp) = charpoly_eval(rec, x);
        if p > 0.0 {
            hi = x;
        } else if p < 0.0 {
            lo = x;
        } else {
            return x;
        }
        let newton = x - p / dp;
        let next = if dp > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    // Polish to the f64 fixed point; the requested tolerance is an upper
    // bound, downstream closed forms want every available bit.
    for _ in 0..6 {
        let (p, dp) = charpoly_eval(rec, x);
        if p == 0.0 || dp <= 0.0 {
            break;
        }
        let next = x - p / dp;
        if next == x || !(lo..=hi).contains(&next) {
            break;
        }
        x = next;
    }
    x
}

/// Spectral data of the companion matrix, from the closed forms:
/// `nu(b) = lambda^{-b}` and
/// `phi(b') = lambda^{b'} - sum_{j<b'} c_j lambda^{b'-j}`.
///
/// Normalization is exactly the closed form: `phi(1) = lambda`,
/// `nu(1) = 1/lambda`. Downstream formulas quote these scalings.
#[derive(Debug, Clone)]
pub struct CompanionSpectral {
    pub lambda: f64,
    /// Right eigenvector, entry `b'` at index `b'-1`.
    pub phi: Vec<f64>,
    /// Left eigenvector, entry `b` at index `b-1`.
    pub nu: Vec<f64>,
    /// Characteristic polynomial coefficients, highest degree first.
    pub charpoly: Vec<f64>,
}

impl CompanionSpectral {
    /// `phi(b')`, 1-based.
    pub fn phi(&self, b: usize) -> f64 {
        self.phi[b - 1]
    }

    /// `nu(b)`, 1-based.
    pub fn nu(&self, b: usize) -> f64 {
        self.nu[b - 1]
    }
}

pub fn companion_spectral(rec: &Recurrence, tol: f64) -> Result<CompanionSpectral> {
    let lambda = perron_root(rec, tol);
    let l = rec.length();
    // phi(1) = lambda; phi(b+1) = lambda * (phi(b) - c_b).
    let mut phi = Vec::with_capacity(l);
    phi.push(lambda);
    for b in 1..l {
        let prev = phi[b - 1];
        phi.push(lambda * (prev - rec.coeff(b) as f64));
    }
    let nu: Vec<f64> = (1..=l).map(|b| lambda.powi(-(b as i32))).collect();
    if phi.iter().chain(nu.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::Internal(format!(
            "non-positive eigenvector entry for {}; root solve failed",
            rec.to_compact()
        )));
    }
    Ok(CompanionSpectral {
        lambda,
        phi,
        nu,
        charpoly: charpoly(rec),
    })
}

/// Materializes the companion matrix `C` (`C[i][0] = c_{i+1}`,
/// `C[i][i+1] = 1`), row-major.
pub fn companion_matrix(rec: &Recurrence) -> Vec<Vec<f64>> {
    let l = rec.length();
    let mut c = vec![vec![0.0; l]; l];
    for i in 0..l {
        c[i][0] = rec.coeff(i + 1) as f64;
        if i + 1 < l {
            c[i][i + 1] = 1.0;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rec(l: usize, c: &[i64]) -> Recurrence {
        Recurrence::new(l, c.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert_eq!(
            Recurrence::new(0, vec![]).unwrap_err(),
            RecurrenceDefect::ZeroLength
        );
        assert_eq!(
            Recurrence::new(2, vec![1]).unwrap_err(),
            RecurrenceDefect::CoefficientCountMismatch
        );
        assert_eq!(
            Recurrence::new(2, vec![0, 1]).unwrap_err(),
            RecurrenceDefect::LeadingCoefficientZero
        );
        assert_eq!(
            Recurrence::new(2, vec![1, 0]).unwrap_err(),
            RecurrenceDefect::TrailingCoefficientZero
        );
        assert_eq!(
            Recurrence::new(2, vec![1, -1]).unwrap_err(),
            RecurrenceDefect::NegativeCoefficient
        );
        assert!(Recurrence::new(1, vec![1]).is_ok());
        assert!(Recurrence::new(4, vec![1, 0, 0, 2]).is_ok());
    }

    #[test]
    fn compact_and_json_round_trip() {
        let r = rec(4, &[1, 0, 0, 2]);
        assert_eq!(r.to_compact(), "L=4;c=1,0,0,2");
        assert_eq!(Recurrence::parse_compact("L=4;c=1,0,0,2").unwrap(), r);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"L":4,"c":[1,0,0,2]}"#);
        let back: Recurrence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        // Validation runs on deserialization too.
        assert!(serde_json::from_str::<Recurrence>(r#"{"L":2,"c":[0,1]}"#).is_err());
    }

    #[test]
    fn scale_sequence_known_values() {
        let fib = scale_sequence(&Recurrence::fibonacci(), 6);
        let got: Vec<i64> = fib.terms().iter().map(|g| g.to_i64().unwrap()).collect();
        assert_eq!(got, vec![1, 2, 3, 5, 8, 13]);

        let s = scale_sequence(&rec(4, &[1, 0, 0, 2]), 6);
        let got: Vec<i64> = s.terms().iter().map(|g| g.to_i64().unwrap()).collect();
        assert_eq!(got, vec![1, 2, 3, 4, 6, 10]);

        let s = scale_sequence(&rec(1, &[2]), 4);
        let got: Vec<i64> = s.terms().iter().map(|g| g.to_i64().unwrap()).collect();
        assert_eq!(got, vec![1, 2, 4, 8]);

        let s = scale_sequence(&rec(3, &[1, 1, 1]), 7);
        let got: Vec<i64> = s.terms().iter().map(|g| g.to_i64().unwrap()).collect();
        assert_eq!(got, vec![1, 2, 4, 7, 13, 24, 44]);
    }

    #[test]
    fn perron_root_known_values() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let got = perron_root(&Recurrence::fibonacci(), DEFAULT_ROOT_TOL);
        assert!((got - phi).abs() < 1e-12);

        assert_eq!(perron_root(&rec(1, &[5]), DEFAULT_ROOT_TOL), 5.0);
        assert_eq!(perron_root(&rec(1, &[1]), DEFAULT_ROOT_TOL), 1.0);

        let got = perron_root(&rec(4, &[1, 0, 0, 2]), DEFAULT_ROOT_TOL);
        assert_eq!(format!("{got:.4}"), "1.5437");
    }

    #[test]
    fn perron_root_is_deterministic() {
        let r = rec(5, &[3, 1, 0, 2, 4]);
        let a = perron_root(&r, DEFAULT_ROOT_TOL);
        let b = perron_root(&r, DEFAULT_ROOT_TOL);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn spectral_closed_forms() {
        let phi_golden = (1.0 + 5f64.sqrt()) / 2.0;
        let s = companion_spectral(&Recurrence::fibonacci(), DEFAULT_ROOT_TOL).unwrap();
        // nu(b) = phi^{-b}, phi(b') = phi^{2-b'}.
        assert!((s.nu(1) - 1.0 / phi_golden).abs() < 1e-12);
        assert!((s.nu(2) - phi_golden.powi(-2)).abs() < 1e-12);
        assert!((s.phi(1) - phi_golden).abs() < 1e-12);
        assert!((s.phi(2) - 1.0).abs() < 1e-12);

        let s = companion_spectral(&rec(1, &[5]), DEFAULT_ROOT_TOL).unwrap();
        assert_eq!(s.nu, vec![0.2]);
        assert_eq!(s.phi, vec![5.0]);

        // phi(4) = lambda^4 - lambda^3 = 2 by the charpoly identity.
        let s = companion_spectral(&rec(4, &[1, 0, 0, 2]), DEFAULT_ROOT_TOL).unwrap();
        assert!((s.phi(4) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvectors_satisfy_companion_matrix() {
        // Explicitly materialize C and check C phi = lambda phi, nu C = lambda nu.
        let cases = [
            rec(2, &[1, 1]),
            rec(1, &[2]),
            rec(3, &[1, 1, 1]),
            rec(4, &[1, 0, 0, 2]),
            rec(2, &[2, 1]),
            rec(6, &[5, 0, 3, 0, 1, 2]),
            rec(5, &[1, 2, 3, 4, 5]),
        ];
        for r in &cases {
            let s = companion_spectral(r, DEFAULT_ROOT_TOL).unwrap();
            let c = companion_matrix(r);
            let l = r.length();
            for i in 0..l {
                let row: f64 = (0..l).map(|j| c[i][j] * s.phi[j]).sum();
                assert!(
                    (row - s.lambda * s.phi[i]).abs() < 1e-10,
                    "C phi residual for {}",
                    r.to_compact()
                );
                let col: f64 = (0..l).map(|j| s.nu[j] * c[j][i]).sum();
                assert!(
                    (col - s.lambda * s.nu[i]).abs() < 1e-10,
                    "nu C residual for {}",
                    r.to_compact()
                );
            }
        }
    }

    #[test]
    fn scale_ratio_converges_to_perron_root() {
        let cases = [
            rec(2, &[1, 1]),
            rec(1, &[2]),
            rec(3, &[1, 1, 1]),
            rec(4, &[1, 0, 0, 2]),
            rec(2, &[2, 1]),
        ];
        for r in &cases {
            let lambda = perron_root(r, DEFAULT_ROOT_TOL);
            let s = scale_sequence(r, 61);
            for w in s.terms().windows(2) {
                assert!(w[1] > w[0], "not strictly increasing for {}", r.to_compact());
            }
            let ratio = num_rational::BigRational::new(s.term(61).clone(), s.term(60).clone())
                .to_f64()
                .unwrap();
            assert!(
                (ratio - lambda).abs() < 1e-6,
                "ratio {ratio} vs lambda {lambda} for {}",
                r.to_compact()
            );
        }
    }
}
