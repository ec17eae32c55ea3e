//! The legality state space, the restricted uniform kernel, and the
//! conditioned (Doob-transformed) ergodic chain.
//!
//! A digit process is tracked through triples `z = (x, b, b')` where `x` is
//! the current digit, `b` the current bookkeeping index, and `b'` the next
//! one. The legal triples form the set `L`; the admissible starts (`b = 1`,
//! `x > 0`) form `L_0`. Restricting the uniform product kernel to `L` gives a
//! substochastic matrix whose Perron data (in closed form from the companion
//! matrix) yields a genuinely stochastic chain `Q` with explicit stationary
//! law — the engine behind every asymptotic in this crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::recurrence::{companion_spectral, CompanionSpectral, Recurrence};

/// One legality triple `(x, b, b_next)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChainState {
    pub x: u64,
    pub b: usize,
    pub b_next: usize,
}

impl ChainState {
    pub fn new(x: u64, b: usize, b_next: usize) -> Self {
        ChainState { x, b, b_next }
    }

    /// Membership in `L`.
    pub fn is_legal(&self, rec: &Recurrence) -> bool {
        let l = rec.length();
        if self.b < 1 || self.b > l || self.b_next < 1 || self.b_next > l {
            return false;
        }
        let c = rec.coeff(self.b);
        (self.x < c && self.b_next == 1) || (self.b < l && self.x == c && self.b_next == self.b + 1)
    }

    /// Membership in the start set `L_0`.
    pub fn is_start(&self, rec: &Recurrence) -> bool {
        self.is_legal(rec) && self.b == 1 && self.x > 0
    }
}

/// All of `L` in a fixed order, with the start subset and adjacency.
///
/// Ordering is lexicographic by `(b, b_next, x)`, so matrices are
/// reproducible across runs.
#[derive(Debug, Clone)]
pub struct StateSpace {
    rec: Recurrence,
    states: Vec<ChainState>,
    /// Indices (into `states`) of the members of `L_0`, ascending.
    start: Vec<usize>,
    /// `succ[i]` = indices reachable in one step: `z -> z'` iff
    /// `z'.b == z.b_next`.
    succ: Vec<Vec<usize>>,
}

impl StateSpace {
    pub fn rec(&self) -> &Recurrence {
        &self.rec
    }

    pub fn states(&self) -> &[ChainState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn start_indices(&self) -> &[usize] {
        &self.start
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn index_of(&self, s: &ChainState) -> Option<usize> {
        self.states.iter().position(|t| t == s)
    }

    /// The unique state with bookkeeping index `b` that consumes digit `x`,
    /// if legal.
    pub fn state_for_digit(&self, b: usize, x: u64) -> Option<usize> {
        let c = self.rec.coeff(b);
        let target = if x < c {
            ChainState::new(x, b, 1)
        } else if x == c && b < self.rec.length() {
            ChainState::new(x, b, b + 1)
        } else {
            return None;
        };
        self.index_of(&target)
    }

    /// Digits consumable from bookkeeping index `b`, ascending.
    pub fn digits_from(&self, b: usize) -> impl Iterator<Item = u64> {
        let c = self.rec.coeff(b);
        let hi = if b < self.rec.length() { c } else { c.saturating_sub(1) };
        0..=hi
    }
}

/// Enumerates `L` for a recurrence. `|L| = sum_b c_b + (L - 1)`.
pub fn build_state_space(rec: &Recurrence) -> StateSpace {
    let l = rec.length();
    let mut states = Vec::new();
    for b in 1..=l {
        for x in 0..rec.coeff(b) {
            states.push(ChainState::new(x, b, 1));
        }
        if b < l {
            states.push(ChainState::new(rec.coeff(b), b, b + 1));
        }
    }
    states.sort_by_key(|s| (s.b, s.b_next, s.x));
    debug_assert_eq!(
        states.len(),
        rec.coeffs().iter().sum::<u64>() as usize + (l - 1)
    );
    let start = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_start(rec))
        .map(|(i, _)| i)
        .collect();
    let succ = states
        .iter()
        .map(|s| {
            states
                .iter()
                .enumerate()
                .filter(|(_, t)| t.b == s.b_next)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    StateSpace {
        rec: rec.clone(),
        states,
        start,
        succ,
    }
}

/// The full conditioned-chain model.
///
/// `p_sub` is the uniform kernel restricted to `L` (entries `0` or `gamma`);
/// `q` is its Doob transform by the Perron right eigenvector, a stochastic
/// matrix with stationary law `pi_q = nu_c * phi_c` entrywise.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub space: StateSpace,
    pub spectral: CompanionSpectral,
    /// Uniform entry `1 / ((max c + 1) L)`.
    pub gamma: f64,
    pub p_sub: DMatrix<f64>,
    /// Perron root of `p_sub`: `gamma * lambda_C`.
    pub lambda_c: f64,
    /// Right Perron vector, normalized to a probability vector.
    pub phi_c: DVector<f64>,
    /// Left Perron vector, normalized so `sum nu_c * phi_c = 1`.
    pub nu_c: DVector<f64>,
    pub q: DMatrix<f64>,
    pub pi_q: DVector<f64>,
    /// First-coordinate (digit) marginal of `pi_q`, indexed by digit value.
    pub pi_q1: Vec<f64>,
    /// `phi_c` conditioned on the start set, zero elsewhere.
    pub tilde_phi_c: DVector<f64>,
    /// Product of the two normalization constants; equals
    /// `1 / (lambda_C * sum_b nu_C(b) phi_C(b))`.
    pub norm_k1k2: f64,
}

impl ChainModel {
    pub fn rec(&self) -> &Recurrence {
        self.space.rec()
    }

    pub fn num_states(&self) -> usize {
        self.space.len()
    }
}

pub fn build_chain(rec: &Recurrence, tol: f64) -> Result<ChainModel> {
    let space = build_state_space(rec);
    if space.start_indices().is_empty() {
        return Err(Error::Model(format!(
            "no admissible start states for {}: decompositions longer than L-1 do not exist \
             (L = 1 needs a leading coefficient of at least 2)",
            rec.to_compact()
        )));
    }
    let spectral = companion_spectral(rec, tol)?;
    let m = space.len();
    let l = rec.length();
    let gamma = 1.0 / ((rec.max_coeff() as f64 + 1.0) * l as f64);
    let lambda = spectral.lambda;
    let lambda_c = gamma * lambda;

    let mut p_sub = DMatrix::zeros(m, m);
    for i in 0..m {
        for &j in space.successors(i) {
            p_sub[(i, j)] = gamma;
        }
    }

    // phi_c(z) ~ phi_C(b_next(z)), nu_c(z) ~ nu_C(b(z)).
    let phi_raw: Vec<f64> = space.states().iter().map(|s| spectral.phi(s.b_next)).collect();
    let k1 = 1.0 / phi_raw.iter().sum::<f64>();
    let phi_c = DVector::from_iterator(m, phi_raw.iter().map(|v| v * k1));
    let nu_raw: Vec<f64> = space.states().iter().map(|s| spectral.nu(s.b)).collect();
    let k2 = 1.0
        / nu_raw
            .iter()
            .zip(phi_c.iter())
            .map(|(n, p)| n * p)
            .sum::<f64>();
    let nu_c = DVector::from_iterator(m, nu_raw.iter().map(|v| v * k2));

    let mut q = DMatrix::zeros(m, m);
    for i in 0..m {
        let bi = space.states()[i].b_next;
        for &j in space.successors(i) {
            let bj = space.states()[j].b_next;
            q[(i, j)] = spectral.phi(bj) / (lambda * spectral.phi(bi));
        }
    }

    let pi_q = DVector::from_fn(m, |i, _| nu_c[i] * phi_c[i]);
    let mut pi_q1 = vec![0.0; rec.max_coeff() as usize + 1];
    for (i, s) in space.states().iter().enumerate() {
        pi_q1[s.x as usize] += pi_q[i];
    }

    let start_mass: f64 = space.start_indices().iter().map(|&i| phi_c[i]).sum();
    let mut tilde_phi_c = DVector::zeros(m);
    for &i in space.start_indices() {
        tilde_phi_c[i] = phi_c[i] / start_mass;
    }

    let norm_k1k2 = k1 * k2;
    Ok(ChainModel {
        space,
        spectral,
        gamma,
        p_sub,
        lambda_c,
        phi_c,
        nu_c,
        q,
        pi_q,
        pi_q1,
        tilde_phi_c,
        norm_k1k2,
    })
}

/// One named residual in a [`SpectralReport`].
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub pass: bool,
}

/// Residuals of every model invariant; `pass` iff all checks pass.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SpectralReport {
    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Evaluates every closed-form invariant of the model against direct
/// numerics: eigen residuals, row sums, stationarity (including an
/// independent linear-system re-solve of the stationary law), the
/// transition-split reconstruction, the normalization-product identity, and
/// irreducibility/aperiodicity of the support graph.
pub fn verify_spectral(model: &ChainModel, tol: f64) -> SpectralReport {
    let m = model.num_states();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, residual: f64, bound: f64| {
        checks.push(Check {
            name,
            residual,
            pass: residual.abs() <= bound,
        });
    };

    // charpoly(lambda_C) = 0.
    let lam = model.spectral.lambda;
    let horner = model
        .spectral
        .charpoly
        .iter()
        .fold(0.0, |acc, &a| acc * lam + a);
    push("charpoly-root", horner / lam.powi(model.rec().length() as i32 - 1), tol);

    // P_L phi_c = lambda_c phi_c and nu_c P_L = lambda_c nu_c.
    let r = &model.p_sub * &model.phi_c - model.lambda_c * &model.phi_c;
    push("right-eigenvector", r.amax(), tol);
    let r = model.p_sub.transpose() * &model.nu_c - model.lambda_c * &model.nu_c;
    push("left-eigenvector", r.amax(), tol);

    // lambda_c = lambda_C / ((max c + 1) L).
    push(
        "perron-scaling",
        model.lambda_c - model.gamma * model.spectral.lambda,
        tol,
    );

    // Q rows sum to 1.
    let worst = (0..m)
        .map(|i| (model.q.row(i).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    push("q-row-sums", worst, tol);

    // Q agrees with the Doob transform of p_sub.
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let doob = model.p_sub[(i, j)] * model.phi_c[j] / (model.lambda_c * model.phi_c[i]);
            worst = worst.max((doob - model.q[(i, j)]).abs());
        }
    }
    push("doob-transform", worst, tol);

    // pi stationarity and positivity.
    let r = model.q.transpose() * &model.pi_q - &model.pi_q;
    push("pi-stationarity", r.amax(), tol);
    push("pi-total-mass", model.pi_q.sum() - 1.0, tol);
    push(
        "pi-positivity",
        if model.pi_q.iter().all(|&p| p > 0.0) { 0.0 } else { 1.0 },
        0.5,
    );

    // Independent re-solve of pi from the stationarity linear system.
    let mut a = model.q.transpose() - DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    match a.lu().solve(&b) {
        Some(pi2) => push("pi-linear-solve", (pi2 - &model.pi_q).amax(), 10.0 * tol),
        None => push("pi-linear-solve", f64::INFINITY, tol),
    }

    // Normalizations: sum phi_c = 1, sum nu_c phi_c = 1, product constant.
    push("phi-normalization", model.phi_c.sum() - 1.0, tol);
    push(
        "nu-phi-normalization",
        model.nu_c.dot(&model.phi_c) - 1.0,
        tol,
    );
    let closed = 1.0
        / (model.spectral.lambda
            * model
                .spectral
                .phi
                .iter()
                .zip(model.spectral.nu.iter())
                .map(|(p, n)| p * n)
                .sum::<f64>());
    push("normalization-product", model.norm_k1k2 - closed, tol);

    // Transition split: from bookkeeping index b', each reset transition
    // carries phi_C(1)/(lambda phi_C(b')) and the carry transition the
    // complement 1 - c_{b'} phi_C(1)/(lambda phi_C(b')).
    let mut worst = 0.0f64;
    for i in 0..m {
        let bp = model.space.states()[i].b_next;
        let reset = model.spectral.phi(1) / (model.spectral.lambda * model.spectral.phi(bp));
        for &j in model.space.successors(i) {
            let t = model.space.states()[j];
            let expect = if t.b_next == 1 {
                reset
            } else {
                1.0 - model.rec().coeff(bp) as f64 * reset
            };
            worst = worst.max((model.q[(i, j)] - expect).abs());
        }
    }
    push("transition-split", worst, tol);

    // pi_q = nu_c phi_c entrywise.
    let worst = (0..m)
        .map(|i| (model.pi_q[i] - model.nu_c[i] * model.phi_c[i]).abs())
        .fold(0.0, f64::max);
    push("pi-product-form", worst, tol);

    // Irreducibility + aperiodicity of the support graph.
    push(
        "irreducible-aperiodic",
        if support_is_ergodic(model) { 0.0 } else { 1.0 },
        0.5,
    );

    let pass = checks.iter().all(|c| c.pass);
    SpectralReport { checks, pass }
}

fn support_is_ergodic(model: &ChainModel) -> bool {
    let m = model.num_states();
    let reach = |start: usize, forward: bool| -> Vec<Option<usize>> {
        let mut dist = vec![None; m];
        dist[start] = Some(0);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in 0..m {
                let edge = if forward {
                    model.q[(u, v)] > 0.0
                } else {
                    model.q[(v, u)] > 0.0
                };
                if edge && dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    };
    let fwd = reach(0, true);
    if fwd.iter().any(Option::is_none) || reach(0, false).iter().any(Option::is_none) {
        return false;
    }
    // Aperiodicity: gcd over edges (u,v) of dist(u) + 1 - dist(v) is 1.
    let mut g: i64 = 0;
    for u in 0..m {
        for v in 0..m {
            if model.q[(u, v)] > 0.0 {
                let d = fwd[u].unwrap() as i64 + 1 - fwd[v].unwrap() as i64;
                g = num_integer::gcd(g, d.abs());
            }
        }
    }
    g == 1
}
