//! Additive-functional machinery on the conditioned chain: the group
//! inverse (deviation matrix), closed-form mean/variance constants of the
//! summand count and other per-state functionals, and two exact evaluators
//! of conditioned expectations at finite length.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;

use crate::chain::{ChainModel, StateSpace};
use crate::error::{Error, Result};
use crate::oracle::additive_moments;
use crate::recurrence::Recurrence;
use crate::report::{Method, StatReport};

/// The group inverse of `I - Q`, extended by `Q^# 1 = 0`.
#[derive(Debug, Clone)]
pub struct GroupInverse {
    pub qsharp: DMatrix<f64>,
}

impl GroupInverse {
    pub fn apply(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.qsharp * g
    }
}

/// Computes `Q^# = (I - Q + 1 pi^T)^{-1} - 1 pi^T` by a dense solve; for an
/// ergodic chain the resolvent there is always invertible.
pub fn group_inverse(model: &ChainModel) -> Result<GroupInverse> {
    let m = model.num_states();
    let ones = DVector::from_element(m, 1.0);
    let one_pi = &ones * model.pi_q.transpose();
    let a = DMatrix::identity(m, m) - &model.q + &one_pi;
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Internal("fundamental matrix is singular".into()))?;
    Ok(GroupInverse {
        qsharp: inv - one_pi,
    })
}

/// Default per-state functional: indicator of a nonzero digit, whose running
/// sum is the summand count.
pub fn summand_indicator(space: &StateSpace) -> Vec<f64> {
    space
        .states()
        .iter()
        .map(|s| if s.x > 0 { 1.0 } else { 0.0 })
        .collect()
}

/// Linear-growth constants of `E^{Q_n} sum_j g(Z_j) ~ C (n+1) + d`:
/// `C = E_pi g` and the intercept combines the start-law correction with the
/// endpoint-reweighting correction through the group inverse.
pub fn lekkerkerker_constants(model: &ChainModel, g: &[f64]) -> Result<StatReport> {
    let m = model.num_states();
    assert_eq!(g.len(), m);
    let gv = DVector::from_column_slice(g);
    let c_lek = model.pi_q.dot(&gv);
    let gi = group_inverse(model)?;

    let qg = gi.apply(&gv);
    let start_term = model.tilde_phi_c.dot(&qg);

    let inv_phi = DVector::from_fn(m, |i, _| 1.0 / model.phi_c[i]);
    let q_invphi = gi.apply(&inv_phi);
    let g_tilde = &gv - DVector::from_element(m, c_lek);
    let end_term: f64 = (0..m)
        .map(|i| model.pi_q[i] * g_tilde[i] * q_invphi[i])
        .sum::<f64>()
        / model.nu_c.iter().sum::<f64>();

    let mut rep = StatReport::new(Method::ClosedForm);
    rep.c_lek = Some(c_lek);
    rep.d = Some(start_term + end_term);
    Ok(rep)
}

/// Asymptotic variance rate `sigma^2 = E_pi[g~ (2Q^# - I) g~]` of the
/// running sum, `g~` the centered functional.
pub fn asymptotic_variance(model: &ChainModel, g: &[f64]) -> Result<StatReport> {
    let m = model.num_states();
    assert_eq!(g.len(), m);
    let gv = DVector::from_column_slice(g);
    let mean = model.pi_q.dot(&gv);
    let g_tilde = &gv - DVector::from_element(m, mean);
    let gi = group_inverse(model)?;
    let transformed = 2.0 * gi.apply(&g_tilde) - &g_tilde;
    let mut sigma2: f64 = (0..m)
        .map(|i| model.pi_q[i] * g_tilde[i] * transformed[i])
        .sum();
    if sigma2 < 0.0 {
        if sigma2 > -1e-12 {
            sigma2 = 0.0;
        } else {
            return Err(Error::Internal(format!(
                "variance rate {sigma2} is negative beyond rounding noise"
            )));
        }
    }
    let mut rep = StatReport::new(Method::ClosedForm);
    rep.sigma2 = Some(sigma2);
    Ok(rep)
}

/// Exact `E^{Q_n} sum_{j=0..n} g(Z_j)` under the uniform measure on legal
/// strings of length `n+1`, by the exact-integer transfer DP.
pub fn conditioned_mean_counting(
    rec: &Recurrence,
    g: &[BigRational],
    n: usize,
) -> Result<BigRational> {
    Ok(additive_moments(rec, g, n)?.mean)
}

/// Exact central second moment of the same running sum.
pub fn conditioned_variance_counting(
    rec: &Recurrence,
    g: &[BigRational],
    n: usize,
) -> Result<BigRational> {
    Ok(additive_moments(rec, g, n)?.variance)
}

/// The same conditioned mean evaluated through the chain identity: a forward
/// float DP under `Q` started from the conditioned start law, with the
/// endpoint reweighted by `1/phi_c(Z_n)`. Exactness of the agreement with
/// the counting DP is the structural content of the model.
pub fn conditioned_mean_chain_identity(model: &ChainModel, g: &[f64], n: usize) -> f64 {
    let m = model.num_states();
    assert_eq!(g.len(), m);
    // w[z] = probability of being at z; s[z] = E[1{Z_j = z} * partial sum].
    let mut w: Vec<f64> = model.tilde_phi_c.iter().copied().collect();
    let mut s: Vec<f64> = (0..m).map(|i| w[i] * g[i]).collect();
    for _ in 0..n {
        let mut nw = vec![0.0; m];
        let mut ns = vec![0.0; m];
        for i in 0..m {
            if w[i] == 0.0 && s[i] == 0.0 {
                continue;
            }
            for &j in model.space.successors(i) {
                let q = model.q[(i, j)];
                nw[j] += w[i] * q;
                ns[j] += s[i] * q;
            }
        }
        for j in 0..m {
            ns[j] += g[j] * nw[j];
        }
        w = nw;
        s = ns;
    }
    let num: f64 = (0..m).map(|i| s[i] / model.phi_c[i]).sum();
    let den: f64 = (0..m).map(|i| w[i] / model.phi_c[i]).sum();
    num / den
}
