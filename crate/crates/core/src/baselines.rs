//! Per-document inference baselines conditioned on a fixed topic matrix:
//! variational Bayes and collapsed Gibbs sampling. Also the common
//! [`LocalInference`] interface the learners are generic over.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use statrs::function::gamma::{digamma as statrs_digamma, ln_gamma};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::model::TopicMatrix;
use crate::ope::{ope_infer, OpeConfig, TopicMixture};
use crate::rng::rng_for;

/// Floor applied to topic entries before VB or Gibbs use them.
pub const BETA_FLOOR: f64 = 1e-12;

const DIGAMMA_MIN_ARG: f64 = 1e-6;

/// Digamma with its argument clamped to `[1e-6, ∞)`.
pub fn digamma(x: f64) -> f64 {
    statrs_digamma(x.max(DIGAMMA_MIN_ARG))
}

/// Columns of `β` for the document's terms, term-major, floored.
fn gather_columns(doc: &Document, beta: &TopicMatrix) -> Result<Vec<f64>> {
    let k = beta.k();
    let mut cols = Vec::with_capacity(doc.num_terms() * k);
    for term in doc.terms() {
        let j = *term as usize;
        if j >= beta.v() {
            return Err(Error::InvalidArgument(format!(
                "term {term} outside vocabulary of size {}",
                beta.v()
            )));
        }
        cols.extend((0..k).map(|r| beta.get(r, j).max(BETA_FLOOR)));
    }
    Ok(cols)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbConfig {
    pub max_iter: usize,
    /// Stop when the relative lower-bound improvement falls below this.
    pub tol: f64,
}

impl Default for VbConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-4,
        }
    }
}

/// Coordinate-ascent state for one document.
#[derive(Debug, Clone)]
pub struct VbLocalState {
    k: usize,
    alpha: f64,
    counts: Vec<f64>,
    log_beta: Vec<f64>,
    /// Variational Dirichlet parameters over `θ`.
    pub gamma: Vec<f64>,
    /// Responsibilities, `phi[j*K + k]` for the document's `j`-th distinct term.
    pub phi: Vec<f64>,
    /// Lower bound after each completed iteration.
    pub elbo_history: Vec<f64>,
}

impl VbLocalState {
    /// Starts from `γ_k = α + n_d / K` and uniform responsibilities.
    pub fn new(doc: &Document, beta: &TopicMatrix, alpha: f64) -> Result<Self> {
        let k = beta.k();
        let log_beta = gather_columns(doc, beta)?.into_iter().map(f64::ln).collect();
        let counts: Vec<f64> = doc.counts().iter().map(|&c| c as f64).collect();
        let n: f64 = counts.iter().sum();
        Ok(Self {
            k,
            alpha,
            phi: vec![1.0 / k as f64; counts.len() * k],
            counts,
            log_beta,
            gamma: vec![alpha + n / k as f64; k],
            elbo_history: Vec::new(),
        })
    }

    /// One sweep: responsibilities given `γ`, then `γ` given responsibilities.
    /// Returns the new lower bound.
    pub fn step(&mut self) -> f64 {
        let k = self.k;
        let psi: Vec<f64> = self.gamma.iter().map(|&g| digamma(g)).collect();
        let mut new_gamma = vec![self.alpha; k];
        for (j, &c) in self.counts.iter().enumerate() {
            let lb = &self.log_beta[j * k..(j + 1) * k];
            let row = &mut self.phi[j * k..(j + 1) * k];
            let mut max = f64::NEG_INFINITY;
            for i in 0..k {
                row[i] = lb[i] + psi[i];
                max = max.max(row[i]);
            }
            let mut s = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                s += *x;
            }
            for (i, x) in row.iter_mut().enumerate() {
                *x /= s;
                new_gamma[i] += c * *x;
            }
        }
        self.gamma = new_gamma;
        let elbo = self.elbo();
        self.elbo_history.push(elbo);
        elbo
    }

    /// Evidence lower bound of the document given the fixed topics.
    pub fn elbo(&self) -> f64 {
        let k = self.k;
        let kf = k as f64;
        let gsum: f64 = self.gamma.iter().sum();
        let psi_sum = digamma(gsum);
        let e_log_theta: Vec<f64> = self.gamma.iter().map(|&g| digamma(g) - psi_sum).collect();

        let mut l = ln_gamma(kf * self.alpha) - kf * ln_gamma(self.alpha);
        l += (self.alpha - 1.0) * e_log_theta.iter().sum::<f64>();
        for (j, &c) in self.counts.iter().enumerate() {
            let lb = &self.log_beta[j * k..(j + 1) * k];
            let row = &self.phi[j * k..(j + 1) * k];
            let mut s = 0.0;
            for i in 0..k {
                let p = row[i];
                if p > 0.0 {
                    s += p * (e_log_theta[i] + lb[i] - p.ln());
                }
            }
            l += c * s;
        }
        l -= ln_gamma(gsum);
        for (i, &g) in self.gamma.iter().enumerate() {
            l += ln_gamma(g) - (g - 1.0) * e_log_theta[i];
        }
        l
    }

    /// `E[θ] = γ / Σγ`.
    pub fn mean_theta(&self) -> TopicMixture {
        let s: f64 = self.gamma.iter().sum();
        TopicMixture::new(self.gamma.iter().map(|g| g / s).collect())
    }

    pub fn iterations(&self) -> usize {
        self.elbo_history.len()
    }
}

/// Runs VB to convergence and returns the final state.
pub fn vb_infer_state(doc: &Document, beta: &TopicMatrix, alpha: f64, cfg: &VbConfig) -> Result<VbLocalState> {
    let mut state = VbLocalState::new(doc, beta, alpha)?;
    if doc.is_empty() {
        return Ok(state);
    }
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..cfg.max_iter {
        let l = state.step();
        if prev.is_finite() && (l - prev) / prev.abs() < cfg.tol {
            break;
        }
        prev = l;
    }
    Ok(state)
}

pub fn vb_infer(doc: &Document, beta: &TopicMatrix, alpha: f64, cfg: &VbConfig) -> Result<TopicMixture> {
    Ok(vb_infer_state(doc, beta, alpha, cfg)?.mean_theta())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgsConfig {
    /// Total sweeps, burn-in included.
    pub samples: usize,
    pub burn_in: usize,
}

impl Default for CgsConfig {
    fn default() -> Self {
        Self {
            samples: 50,
            burn_in: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsLocalState {
    /// Tokens per topic in the current assignment.
    pub topic_counts: Vec<u64>,
    /// Running sum of `(n_k + α) / (ℓ_d + Kα)` over kept sweeps.
    pub tally: Vec<f64>,
    pub kept: usize,
}

/// Collapsed Gibbs sampling of the document's topic assignments with `β`
/// held fixed: `z ∝ β_{k,w} (n_k^{−token} + α)`.
pub fn cgs_infer_state(
    doc: &Document,
    beta: &TopicMatrix,
    alpha: f64,
    cfg: &CgsConfig,
    seed: u64,
) -> Result<GibbsLocalState> {
    if cfg.burn_in >= cfg.samples {
        return Err(Error::InvalidArgument(format!(
            "burn-in ({}) must be smaller than the sample count ({})",
            cfg.burn_in, cfg.samples
        )));
    }
    let k = beta.k();
    let cols = gather_columns(doc, beta)?;
    let tokens: Vec<usize> = doc
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
        .collect();
    let len = tokens.len() as f64;
    let denom = len + k as f64 * alpha;

    let mut rng = rng_for(seed, &[]);
    let mut z: Vec<usize> = tokens.iter().map(|_| rng.random_range(0..k)).collect();
    let mut counts = vec![0u64; k];
    for &zi in &z {
        counts[zi] += 1;
    }
    let mut cumulative = vec![0.0; k];
    let mut tally = vec![0.0; k];
    let mut kept = 0;

    for sweep in 0..cfg.samples {
        for (pos, &j) in tokens.iter().enumerate() {
            counts[z[pos]] -= 1;
            let col = &cols[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for i in 0..k {
                acc += col[i] * (counts[i] as f64 + alpha);
                cumulative[i] = acc;
            }
            let u = rng.random::<f64>() * acc;
            let new = cumulative.partition_point(|&c| c <= u).min(k - 1);
            z[pos] = new;
            counts[new] += 1;
        }
        if sweep >= cfg.burn_in {
            for i in 0..k {
                tally[i] += (counts[i] as f64 + alpha) / denom;
            }
            kept += 1;
        }
    }
    Ok(GibbsLocalState {
        topic_counts: counts,
        tally,
        kept,
    })
}

pub fn cgs_infer(doc: &Document, beta: &TopicMatrix, alpha: f64, cfg: &CgsConfig, seed: u64) -> Result<TopicMixture> {
    let state = cgs_infer_state(doc, beta, alpha, cfg, seed)?;
    let kept = state.kept as f64;
    Ok(TopicMixture::new(state.tally.iter().map(|t| t / kept).collect()))
}

/// Per-document inference of a topic mixture given fixed topics.
pub trait LocalInference: Sync {
    fn infer(&self, doc: &Document, beta: &TopicMatrix, alpha: f64, seed: u64) -> Result<TopicMixture>;

    fn name(&self) -> &str;
}

/// The built-in inference methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InferenceMethod {
    Ope(OpeConfig),
    Vb(VbConfig),
    Cgs(CgsConfig),
}

impl InferenceMethod {
    pub fn ope() -> Self {
        Self::Ope(OpeConfig::default())
    }

    pub fn vb() -> Self {
        Self::Vb(VbConfig::default())
    }

    pub fn cgs() -> Self {
        Self::Cgs(CgsConfig::default())
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            InferenceMethod::Ope(_) => "ope",
            InferenceMethod::Vb(_) => "vb",
            InferenceMethod::Cgs(_) => "cgs",
        }
    }
}

impl FromStr for InferenceMethod {
    type Err = Error;

    /// `"ope" | "vb" | "cgs"` with default settings.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ope" => Ok(Self::ope()),
            "vb" => Ok(Self::vb()),
            "cgs" => Ok(Self::cgs()),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

impl fmt::Display for InferenceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl LocalInference for InferenceMethod {
    fn infer(&self, doc: &Document, beta: &TopicMatrix, alpha: f64, seed: u64) -> Result<TopicMixture> {
        infer_dispatch(self, doc, beta, alpha, seed)
    }

    fn name(&self) -> &str {
        self.as_str()
    }
}

/// Routes to the chosen method. VB ignores `seed`.
pub fn infer_dispatch(
    method: &InferenceMethod,
    doc: &Document,
    beta: &TopicMatrix,
    alpha: f64,
    seed: u64,
) -> Result<TopicMixture> {
    match method {
        InferenceMethod::Ope(cfg) => ope_infer(doc, beta, alpha, cfg, seed),
        InferenceMethod::Vb(cfg) => vb_infer(doc, beta, alpha, cfg),
        InferenceMethod::Cgs(cfg) => cgs_infer(doc, beta, alpha, cfg, seed),
    }
}
