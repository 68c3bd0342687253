//! Variational EM for the logistic-normal topic model with prevalence covariates.
//!
//! Document proportions are `θ_d = softmax(η_d, 0)` with
//! `η_d ~ N(γ₀ + Γᵀx_d, Σ)`, and words are drawn from `Σ_k θ_dk β_k`.
//! Each document posterior is summarised by its mode `η̂_d` and the Laplace
//! covariance `ν_d = (−∇²)⁻¹` at that mode.
//!
//! The monitored objective is the Laplace approximation of the marginal
//! likelihood of the words given β, Γ and Σ, with η_d integrated out:
//!
//! ```text
//! J = Σ_d [ Σ_v c_dv log Σ_k θ_dk β_kv − ½ r_dᵀ Σ⁻¹ r_d − ½ log|Σ| − ½ log|Σ⁻¹ + A_d| ]
//!     − ½ (P + ν₀) log|Σ| − ½ tr(Σ⁻¹ (λ ΓᵀΓ + s₀ I)) + ε Σ_kv log β_kv
//! ```
//!
//! with `r_d = η_d − γ₀ − Γᵀx_d` and `A_d` the negative Hessian of the word
//! log likelihood at `η_d`. The determinant term is what keeps Σ from
//! collapsing onto a single shared mode. Document modes and β come from the
//! usual Newton and expected-count steps, Σ from a minorise-maximise step
//! that adds `Σ_d ν_d` to the residual scatter, Γ from ridge least squares.
//! Steps that would lower `J` are shortened by backtracking, so the trace
//! never decreases.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::design::CovariateDesign;
use crate::corpus::ProcessedCorpus;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, spd_log_det};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Seeded Dirichlet draws centred on the corpus word frequencies.
    Random,
    /// Anchor-word recovery from the word co-occurrence matrix.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative change of the objective that ends the EM loop.
    pub tolerance: f64,
    pub seed: u64,
    pub init: InitMode,
    /// Ridge weight λ of the matrix-normal prior on Γ.
    pub gamma_ridge: f64,
    /// Scale s₀ of the inverse-Wishart-type prior keeping Σ away from singularity.
    pub sigma_prior_scale: f64,
    pub sigma_prior_dof: f64,
    /// Pseudo-count ε added to every expected topic-word count.
    pub beta_smoothing: f64,
    /// Parallel E-step; results are identical to the sequential path.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 75,
            tolerance: 1e-5,
            seed: 0,
            init: InitMode::Random,
            gamma_ridge: 1.0,
            sigma_prior_scale: 0.01,
            sigma_prior_dof: 1.0,
            beta_smoothing: 1e-8,
            parallel: true,
        }
    }
}

impl FitOptions {
    pub fn config_hash(&self, k: usize, corpus: &ProcessedCorpus) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("options serialize"));
        h.update(k.to_le_bytes());
        h.update(corpus.num_docs().to_le_bytes());
        h.update(corpus.num_terms().to_le_bytes());
        h.update(corpus.num_tokens().to_le_bytes());
        to_hex(&h.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelFit {
    pub k: usize,
    /// `K × V`, rows sum to one.
    pub beta: DMatrix<f64>,
    /// `D × K`, rows sum to one.
    pub theta: DMatrix<f64>,
    /// `D × (K−1)` document modes.
    pub eta: DMatrix<f64>,
    /// Laplace covariance of each document mode, `(K−1) × (K−1)`.
    pub nu: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    /// `P × (K−1)`.
    pub gamma: DMatrix<f64>,
    /// `(K−1) × (K−1)`.
    pub sigma: DMatrix<f64>,
    pub covariate_names: Vec<String>,
    pub bound_trace: Vec<f64>,
    pub seed: u64,
    pub iterations_used: usize,
    pub converged: bool,
    pub config_hash: String,
}

pub const FIT_ARCHIVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FitArchive {
    version: u32,
    fit: TopicModelFit,
}

impl TopicModelFit {
    pub fn num_docs(&self) -> usize {
        self.theta.nrows()
    }

    pub fn num_terms(&self) -> usize {
        self.beta.ncols()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FitArchive {
            version: FIT_ARCHIVE_VERSION,
            fit: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let archive: FitArchive = serde_json::from_str(s)?;
        if archive.version != FIT_ARCHIVE_VERSION {
            return Err(Error::Parse(format!(
                "unsupported fit archive version {}",
                archive.version
            )));
        }
        Ok(archive.fit)
    }
}

/// `softmax(η, 0)`.
pub fn softmax_with_reference(eta: &[f64]) -> Vec<f64> {
    let max = eta.iter().copied().fold(0.0f64, f64::max);
    let mut out: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
    out.push((-max).exp());
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// Fixed quantities of one E-step.
struct Prior<'a> {
    beta: &'a DMatrix<f64>,
    siginv: &'a DMatrix<f64>,
    sigma_log_det: f64,
}

struct DocEval {
    value: f64,
    theta: Vec<f64>,
}

fn eval_doc(eta: &DVector<f64>, mu: &DVector<f64>, prior: &Prior, row: &[(usize, u32)]) -> DocEval {
    let theta = softmax_with_reference(eta.as_slice());
    let loglik: f64 = row
        .iter()
        .map(|&(v, c)| {
            let col = prior.beta.column(v);
            let s: f64 = theta.iter().zip(col.iter()).map(|(t, b)| t * b).sum();
            c as f64 * s.ln()
        })
        .sum();
    let r = eta - mu;
    let quad = (prior.siginv * &r).dot(&r);
    DocEval {
        value: loglik - 0.5 * quad,
        theta,
    }
}

/// Gradient and Hessian of the document objective over the K−1 free coordinates.
fn doc_derivatives(
    eta: &DVector<f64>,
    mu: &DVector<f64>,
    theta: &[f64],
    prior: &Prior,
    row: &[(usize, u32)],
) -> (DVector<f64>, DMatrix<f64>) {
    let m = eta.len();
    let k = m + 1;
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    let mut n = 0.0;
    let mut phi = vec![0.0; k];
    for &(v, c) in row {
        let c = c as f64;
        n += c;
        let col = prior.beta.column(v);
        let mut s = 0.0;
        for j in 0..k {
            phi[j] = theta[j] * col[j];
            s += phi[j];
        }
        for p in phi.iter_mut() {
            *p /= s;
        }
        for a in 0..m {
            grad[a] += c * phi[a];
            hess[(a, a)] += c * phi[a];
            for b in 0..m {
                hess[(a, b)] -= c * phi[a] * phi[b];
            }
        }
    }
    for a in 0..m {
        grad[a] -= n * theta[a];
        hess[(a, a)] -= n * theta[a];
        for b in 0..m {
            hess[(a, b)] += n * theta[a] * theta[b];
        }
    }
    let r = eta - mu;
    grad -= prior.siginv * r;
    hess -= prior.siginv;
    (grad, hess)
}

/// Ascent from the warm start: damped Newton with an Armijo line search,
/// falling back to the gradient where the Hessian is not negative definite.
fn optimize_doc(
    eta0: DVector<f64>,
    mu: &DVector<f64>,
    prior: &Prior,
    row: &[(usize, u32)],
) -> DVector<f64> {
    let mut eta = eta0;
    let mut current = eval_doc(&eta, mu, prior, row);
    let n: f64 = row.iter().map(|&(_, c)| c as f64).sum();
    for _ in 0..100 {
        let (grad, hess) = doc_derivatives(&eta, mu, &current.theta, prior, row);
        if grad.amax() < 1e-9 * (1.0 + n) {
            break;
        }
        let neg = -hess;
        let step = match neg.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => &grad / (1.0 + n),
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand = &eta + &step * t;
            let ev = eval_doc(&cand, mu, prior, row);
            if ev.value.is_finite() && ev.value >= current.value + 1e-4 * t * slope {
                accepted = Some((cand, ev));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, ev)) = accepted else { break };
        let gain = ev.value - current.value;
        eta = cand;
        current = ev;
        if gain <= 1e-13 * current.value.abs().max(1.0) {
            break;
        }
    }
    eta
}

/// Expected counts `c_v φ_vk`, `row.len() × K` row-major.
fn expected_counts(eta: &DVector<f64>, beta: &DMatrix<f64>, row: &[(usize, u32)]) -> Vec<f64> {
    let theta = softmax_with_reference(eta.as_slice());
    let k = theta.len();
    let mut expected = vec![0.0; row.len() * k];
    for (i, &(v, c)) in row.iter().enumerate() {
        let col = beta.column(v);
        let s: f64 = (0..k).map(|j| theta[j] * col[j]).sum();
        for j in 0..k {
            expected[i * k + j] = c as f64 * theta[j] * col[j] / s;
        }
    }
    expected
}

/// Laplace covariance `(−H)⁻¹`, with diagonal jitter if `−H` is not positive definite.
fn laplace_covariance(
    eta: &DVector<f64>,
    mu: &DVector<f64>,
    prior: &Prior,
    row: &[(usize, u32)],
) -> DMatrix<f64> {
    let theta = softmax_with_reference(eta.as_slice());
    let (_, hess) = doc_derivatives(eta, mu, &theta, prior, row);
    let mut neg = -hess;
    neg = (&neg + neg.transpose()) * 0.5;
    let mut jitter = 0.0;
    loop {
        let mut m = neg.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(inv) = spd_inverse(&m) {
            return (&inv + inv.transpose()) * 0.5;
        }
        jitter = if jitter == 0.0 { 1e-8 } else { jitter * 10.0 };
    }
}

fn validate(corpus: &ProcessedCorpus, design: &CovariateDesign, k: usize) -> Result<()> {
    let v = corpus.num_terms();
    let d = corpus.num_docs();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "K = {k}: at least two topics are required"
        )));
    }
    if k > v {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds vocabulary size {v}")));
    }
    if d < k {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds document count {d}")));
    }
    if design.num_docs() != d {
        return Err(Error::InvalidInput(format!(
            "design has {} rows for {d} documents",
            design.num_docs()
        )));
    }
    design.check_rank()
}

pub(crate) fn random_beta(corpus: &ProcessedCorpus, k: usize, seed: u64) -> DMatrix<f64> {
    let totals = corpus.term_totals();
    let n = corpus.num_tokens() as f64;
    let v = corpus.num_terms();
    let mut beta = DMatrix::zeros(k, v);
    for (w, term) in corpus.vocabulary.iter().enumerate() {
        // Per-term substreams keep the draw attached to the word, not its column.
        let mut rng = substream(seed, &format!("topic-init/{term}"));
        let shape = (totals[w] as f64 / n * v as f64).max(0.05);
        let gamma = Gamma::new(shape, 1.0).expect("positive shape");
        for j in 0..k {
            beta[(j, w)] = gamma.sample(&mut rng).max(1e-300);
        }
    }
    normalize_rows(&mut beta);
    beta
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
}

/// Anchor-word initialisation: greedy anchor selection on the row-normalised
/// co-occurrence matrix, then simplex-constrained recovery of every word.
pub(crate) fn spectral_beta(corpus: &ProcessedCorpus, k: usize) -> DMatrix<f64> {
    let v = corpus.num_terms();
    let mut q = DMatrix::<f64>::zeros(v, v);
    for row in &corpus.rows {
        let n: f64 = row.iter().map(|&(_, c)| c as f64).sum();
        if n < 2.0 {
            continue;
        }
        let norm = n * (n - 1.0);
        for &(a, ca) in row {
            for &(b, cb) in row {
                let mut val = ca as f64 * cb as f64;
                if a == b {
                    val -= ca as f64;
                }
                q[(a, b)] += val / norm;
            }
        }
    }
    let total = q.sum();
    if total <= 0.0 {
        return DMatrix::from_element(k, v, 1.0 / v as f64);
    }
    q /= total;
    let p: Vec<f64> = (0..v).map(|i| q.row(i).sum()).collect();
    let mut qbar = q;
    for i in 0..v {
        if p[i] > 0.0 {
            let mut r = qbar.row_mut(i);
            r /= p[i];
        }
    }
    let df = corpus.document_frequencies();
    let min_df = 2.min(df.iter().copied().max().unwrap_or(0));
    let mut candidates: Vec<usize> = (0..v).filter(|&i| df[i] >= min_df && p[i] > 0.0).collect();
    if candidates.len() < k {
        candidates = (0..v).collect();
    }
    // Greedy farthest-point selection with Gram-Schmidt deflation.
    let mut residual: Vec<DVector<f64>> = candidates
        .iter()
        .map(|&i| qbar.row(i).transpose().into_owned())
        .collect();
    let mut anchors = Vec::with_capacity(k);
    let mut chosen = vec![false; candidates.len()];
    for _ in 0..k {
        let (best, _) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen[*i])
            .map(|(i, r)| (i, r.norm_squared()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX {
            break;
        }
        chosen[best] = true;
        anchors.push(candidates[best]);
        let norm = residual[best].norm();
        if norm <= 0.0 {
            continue;
        }
        let basis = &residual[best] / norm;
        for r in residual.iter_mut() {
            let proj = r.dot(&basis);
            r.axpy(-proj, &basis, 1.0);
        }
    }
    if anchors.len() < k {
        return DMatrix::from_element(k, v, 1.0 / v as f64);
    }
    let a = DMatrix::from_fn(k, v, |r, c| qbar[(anchors[r], c)]);
    let aat = &a * a.transpose();
    let lipschitz = 2.0 * aat.clone().symmetric_eigenvalues().amax().max(1e-300);
    let mut beta = DMatrix::zeros(k, v);
    for i in 0..v {
        let b = &a * qbar.row(i).transpose();
        let mut c = DVector::from_element(k, 1.0 / k as f64);
        for _ in 0..200 {
            let grad = (&aat * &c - &b) * 2.0;
            c = project_simplex(&(&c - grad / lipschitz));
        }
        for j in 0..k {
            beta[(j, i)] = c[j] * p[i];
        }
    }
    // Keep every entry positive so the EM can move mass anywhere.
    for mut row in beta.row_iter_mut() {
        let s = row.sum().max(1e-300);
        row /= s;
        row.iter_mut().for_each(|x| *x = 0.99 * *x + 0.01 / v as f64);
    }
    beta
}

fn project_simplex(y: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = y.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    y.map(|x| (x - tau).max(0.0))
}

#[derive(Clone)]
struct State {
    beta: DMatrix<f64>,
    eta: DMatrix<f64>,
    intercept: DVector<f64>,
    gamma: DMatrix<f64>,
    sigma: DMatrix<f64>,
}

impl State {
    fn mu(&self, design: &CovariateDesign, d: usize) -> DVector<f64> {
        let mut mu = self.intercept.clone();
        if design.num_covariates() > 0 {
            mu += self.gamma.tr_mul(&design.rows.row(d).transpose());
        }
        mu
    }
}

/// One document's share of `J`, or −∞ where `Σ⁻¹ + A_d` is not positive definite.
fn doc_bound(eta: &DVector<f64>, mu: &DVector<f64>, prior: &Prior, row: &[(usize, u32)]) -> f64 {
    let ev = eval_doc(eta, mu, prior, row);
    let (_, hess) = doc_derivatives(eta, mu, &ev.theta, prior, row);
    let neg = -hess;
    match spd_log_det(&((&neg + neg.transpose()) * 0.5)) {
        Some(ld) if ev.value.is_finite() => ev.value - 0.5 * (prior.sigma_log_det + ld),
        _ => f64::NEG_INFINITY,
    }
}

/// Terms of `J` outside the document sums.
fn global_terms(state: &State, siginv: &DMatrix<f64>, sigma_log_det: f64, p: usize, opts: &FitOptions) -> f64 {
    let m = state.sigma.nrows();
    let mut penalty = state.gamma.tr_mul(&state.gamma) * opts.gamma_ridge;
    for i in 0..m {
        penalty[(i, i)] += opts.sigma_prior_scale;
    }
    let smoothing = if opts.beta_smoothing > 0.0 {
        opts.beta_smoothing * state.beta.iter().map(|b| b.ln()).sum::<f64>()
    } else {
        0.0
    };
    -0.5 * (p as f64 + opts.sigma_prior_dof) * sigma_log_det - 0.5 * (siginv * penalty).trace() + smoothing
}

fn objective(state: &State, corpus: &ProcessedCorpus, design: &CovariateDesign, opts: &FitOptions) -> f64 {
    let (Some(siginv), Some(sigma_log_det)) = (spd_inverse(&state.sigma), spd_log_det(&state.sigma)) else {
        return f64::NEG_INFINITY;
    };
    let prior = Prior {
        beta: &state.beta,
        siginv: &siginv,
        sigma_log_det,
    };
    let run = |d: usize| doc_bound(&state.eta.row(d).transpose(), &state.mu(design, d), &prior, &corpus.rows[d]);
    let per_doc: Vec<f64> = if opts.parallel {
        (0..corpus.num_docs()).into_par_iter().map(run).collect()
    } else {
        (0..corpus.num_docs()).map(run).collect()
    };
    per_doc.iter().sum::<f64>() + global_terms(state, &siginv, sigma_log_det, design.num_covariates(), opts)
}

/// Halves the step from `old` towards `new` until `J` does not fall below
/// `baseline`; gives up (keeping `old`) after a fixed number of halvings.
fn backtrack<T>(
    baseline: f64,
    mut candidate: impl FnMut(f64) -> (T, f64),
) -> Option<(T, f64)> {
    let mut t = 1.0;
    for _ in 0..30 {
        let (value, score) = candidate(t);
        if score >= baseline {
            return Some((value, score));
        }
        t *= 0.5;
    }
    None
}

pub fn fit(corpus: &ProcessedCorpus, design: &CovariateDesign, k: usize, opts: &FitOptions) -> Result<TopicModelFit> {
    validate(corpus, design, k)?;
    let d = corpus.num_docs();
    let v = corpus.num_terms();
    let m = k - 1;
    let p = design.num_covariates();
    let beta = match opts.init {
        InitMode::Random => random_beta(corpus, k, opts.seed),
        InitMode::Spectral => spectral_beta(corpus, k),
    };
    let mut state = State {
        beta,
        eta: DMatrix::zeros(d, m),
        intercept: DVector::zeros(m),
        gamma: DMatrix::zeros(p, m),
        sigma: DMatrix::identity(m, m),
    };
    let x = &design.rows;
    // Ridge solve operator for Γ; X is centered so the intercept decouples.
    let ridge_op = if p > 0 {
        let mut xtx = x.tr_mul(x);
        for i in 0..p {
            xtx[(i, i)] += opts.gamma_ridge;
        }
        Some(
            spd_inverse(&xtx)
                .ok_or_else(|| Error::RankDeficient("covariate cross-product".into()))?
                * x.transpose(),
        )
    } else {
        None
    };

    let sigma_parts = |sigma: &DMatrix<f64>, iteration: usize| -> Result<(DMatrix<f64>, f64)> {
        match (spd_inverse(sigma), spd_log_det(sigma)) {
            (Some(inv), Some(ld)) => Ok((inv, ld)),
            _ => Err(Error::NonFinite { iteration }),
        }
    };
    let par_map = |f: &(dyn Fn(usize) -> (DVector<f64>, f64) + Sync)| -> Vec<(DVector<f64>, f64)> {
        if opts.parallel {
            (0..d).into_par_iter().map(f).collect()
        } else {
            (0..d).map(f).collect()
        }
    };

    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=opts.max_iterations {
        let (siginv, sigma_log_det) = sigma_parts(&state.sigma, iteration)?;
        // E-step: Newton on each document mode, shortened if the document's
        // share of J would drop.
        let docs = {
            let prior = Prior {
                beta: &state.beta,
                siginv: &siginv,
                sigma_log_det,
            };
            let run = |doc: usize| {
                let row = &corpus.rows[doc];
                let mu = state.mu(design, doc);
                let old = state.eta.row(doc).transpose();
                let base = doc_bound(&old, &mu, &prior, row);
                let new = optimize_doc(old.clone(), &mu, &prior, row);
                backtrack(base, |t| {
                    let cand = &old + (&new - &old) * t;
                    let score = doc_bound(&cand, &mu, &prior, row);
                    (cand, score)
                })
                .unwrap_or((old, base))
            };
            par_map(&run)
        };
        let mut doc_sum = 0.0;
        for (doc, (eta, score)) in docs.iter().enumerate() {
            state.eta.set_row(doc, &eta.transpose());
            doc_sum += score;
        }
        let mut current = doc_sum + global_terms(&state, &siginv, sigma_log_det, p, opts);

        // β from expected counts, reduced in document order.
        let mut counts = DMatrix::from_element(k, v, opts.beta_smoothing);
        for doc in 0..d {
            let row = &corpus.rows[doc];
            let expected = expected_counts(&state.eta.row(doc).transpose(), &state.beta, row);
            for (i, &(w, _)) in row.iter().enumerate() {
                for j in 0..k {
                    counts[(j, w)] += expected[i * k + j];
                }
            }
        }
        normalize_rows(&mut counts);
        let old_beta = state.beta.clone();
        let accepted = backtrack(current, |t| {
            let beta = &old_beta + (&counts - &old_beta) * t;
            let trial = State { beta, ..state.clone() };
            let score = objective(&trial, corpus, design, opts);
            (trial.beta, score)
        });
        if let Some((beta, score)) = accepted {
            state.beta = beta;
            current = score;
        }

        // Γ and intercept: exact ridge solution for the current Σ; the check
        // only guards against rounding.
        let mut trial = state.clone();
        trial.intercept = DVector::from_fn(m, |j, _| state.eta.column(j).mean());
        if let Some(op) = &ridge_op {
            trial.gamma = op * &state.eta;
        }
        let score = objective(&trial, corpus, design, opts);
        if score >= current {
            state = trial;
            current = score;
        }

        // Σ: residual scatter plus the Laplace covariances at the old Σ.
        let nus = {
            let prior = Prior {
                beta: &state.beta,
                siginv: &siginv,
                sigma_log_det,
            };
            let nu_of = |doc: usize| laplace_covariance(&state.eta.row(doc).transpose(), &state.mu(design, doc), &prior, &corpus.rows[doc]);
            // Summed in document order so both modes agree bitwise.
            let parts: Vec<DMatrix<f64>> = if opts.parallel {
                (0..d).into_par_iter().map(nu_of).collect()
            } else {
                (0..d).map(nu_of).collect()
            };
            parts.into_iter().fold(DMatrix::zeros(m, m), |a, b| a + b)
        };
        let mut resid = state.eta.clone();
        for doc in 0..d {
            let mu = state.mu(design, doc);
            let mut row = resid.row_mut(doc);
            row -= mu.transpose();
        }
        let mut scatter = resid.tr_mul(&resid) + nus + state.gamma.tr_mul(&state.gamma) * opts.gamma_ridge;
        for i in 0..m {
            scatter[(i, i)] += opts.sigma_prior_scale;
        }
        let target = scatter / (d as f64 + p as f64 + opts.sigma_prior_dof);
        let target = (&target + target.transpose()) * 0.5;
        let old_sigma = state.sigma.clone();
        let accepted = backtrack(current, |t| {
            let sigma = &old_sigma + (&target - &old_sigma) * t;
            let trial = State { sigma, ..state.clone() };
            let score = objective(&trial, corpus, design, opts);
            (trial.sigma, score)
        });
        if let Some((sigma, score)) = accepted {
            state.sigma = sigma;
            current = score;
        }

        let value = current;
        if !value.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        debug_assert!(state
            .beta
            .row_iter()
            .all(|r| (r.sum() - 1.0).abs() < 1e-8));
        let previous = trace.last().copied();
        trace.push(value);
        if let Some(prev) = previous {
            if ((value - prev) / prev.abs().max(1e-300)).abs() < opts.tolerance {
                converged = true;
                break;
            }
        }
    }

    let (siginv, sigma_log_det) = sigma_parts(&state.sigma, trace.len())?;
    let prior = Prior {
        beta: &state.beta,
        siginv: &siginv,
        sigma_log_det,
    };
    let nu_of = |doc: usize| {
        laplace_covariance(
            &state.eta.row(doc).transpose(),
            &state.mu(design, doc),
            &prior,
            &corpus.rows[doc],
        )
    };
    let nu: Vec<DMatrix<f64>> = if opts.parallel {
        (0..d).into_par_iter().map(nu_of).collect()
    } else {
        (0..d).map(nu_of).collect()
    };
    let mut theta = DMatrix::zeros(d, k);
    for doc in 0..d {
        let t = softmax_with_reference(state.eta.row(doc).transpose().as_slice());
        for j in 0..k {
            theta[(doc, j)] = t[j];
        }
    }
    Ok(TopicModelFit {
        k,
        beta: state.beta,
        theta,
        eta: state.eta,
        nu,
        intercept: state.intercept,
        gamma: state.gamma,
        sigma: state.sigma,
        covariate_names: design.names.clone(),
        iterations_used: trace.len(),
        bound_trace: trace,
        seed: opts.seed,
        converged,
        config_hash: opts.config_hash(k, corpus),
    })
}

/// Draws `η ~ N(mode, ν)` and maps through the softmax.
pub(crate) fn sample_theta<R: Rng>(eta: &DVector<f64>, nu: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let m = eta.len();
    let chol = nu
        .clone()
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::from_diagonal(&nu.diagonal().map(|x| x.max(0.0).sqrt())));
    let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let draw = eta + chol * z;
    softmax_with_reference(draw.as_slice())
}
