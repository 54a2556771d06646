//! Synthetic corpora drawn from the LDA generative process.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Gamma;

use crate::corpus::{Corpus, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{LdaHyper, Snapshot, TopicMatrix};
use crate::rng::{rng_for, Rng};

pub const CORPUS_FILE: &str = "corpus.uci";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const TRUE_BETA_FILE: &str = "true_beta.snapshot";

/// Draw from a symmetric or asymmetric Dirichlet. Works in log space so
/// tiny concentrations do not underflow every component to zero: for
/// shape `a`, `ln G = ln G' + ln(U)/a` with `G' ~ Gamma(a + 1)`.
pub fn sample_dirichlet(concentration: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(Error::InvalidArgument("Dirichlet needs at least one component".into()));
    }
    if concentration.len() == 1 {
        return Ok(vec![1.0]);
    }
    let mut logs = Vec::with_capacity(concentration.len());
    for &a in concentration {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Dirichlet concentration must be positive, got {a}"
            )));
        }
        let g = Gamma::new(a + 1.0, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        logs.push(g.sample(rng).ln() + u.ln() / a);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= s);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub k: usize,
    pub v: usize,
    pub d: usize,
    pub doc_length: usize,
    pub alpha: f64,
    /// Concentration of the true topics.
    pub eta: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Desk-scale defaults with `α = η = 1/K`.
    pub fn new(k: usize, v: usize, d: usize, doc_length: usize) -> Self {
        let inv = 1.0 / k.max(1) as f64;
        Self {
            k,
            v,
            d,
            doc_length,
            alpha: inv,
            eta: inv,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.v == 0 || self.d == 0 || self.doc_length == 0 {
            return Err(Error::InvalidArgument(
                "K, V, D and doc length must all be positive".into(),
            ));
        }
        LdaHyper::new(self.k, self.alpha, self.eta).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub beta: TopicMatrix,
    pub thetas: Vec<Vec<f64>>,
    pub hyper: LdaHyper,
}

/// Draws `β_k ~ Dir(η)`, then per document `θ_d ~ Dir(α)`, and for each
/// token a topic `z ~ θ_d` and a term `w ~ β_z`.
pub fn synthesize(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let hyper = LdaHyper::new(cfg.k, cfg.alpha, cfg.eta)?;
    let mut rng = rng_for(cfg.seed, &[0x5e7a]);
    let mut beta = Vec::with_capacity(cfg.k * cfg.v);
    for _ in 0..cfg.k {
        beta.extend(sample_dirichlet(&vec![cfg.eta; cfg.v], &mut rng)?);
    }
    let beta = TopicMatrix::from_raw(cfg.k, cfg.v, beta);
    let term_tables = (0..cfg.k)
        .map(|k| WeightedAliasIndex::new(beta.row(k).to_vec()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("cannot sample from a topic: {e}")))?;

    let mut docs = Vec::with_capacity(cfg.d);
    let mut thetas = Vec::with_capacity(cfg.d);
    let mut tokens = Vec::with_capacity(cfg.doc_length);
    for _ in 0..cfg.d {
        let theta = sample_dirichlet(&vec![cfg.alpha; cfg.k], &mut rng)?;
        let topic_table = WeightedAliasIndex::new(theta.clone())
            .map_err(|e| Error::InvalidArgument(format!("cannot sample from a topic mixture: {e}")))?;
        tokens.clear();
        for _ in 0..cfg.doc_length {
            let z = topic_table.sample(&mut rng);
            tokens.push(term_tables[z].sample(&mut rng) as u32);
        }
        docs.push(Document::from_tokens(&tokens));
        thetas.push(theta);
    }
    let corpus = Corpus::new(docs, cfg.v)?.with_vocabulary(Vocabulary::synthetic(cfg.v))?;
    Ok(SynthCorpus {
        corpus,
        beta,
        thetas,
        hyper,
    })
}

/// Paths of the files written by [`write_synth`].
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub vocab: PathBuf,
    pub true_beta: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            corpus: dir.join(CORPUS_FILE),
            vocab: dir.join(VOCAB_FILE),
            true_beta: dir.join(TRUE_BETA_FILE),
        }
    }
}

pub fn write_synth(synth: &SynthCorpus, dir: &Path) -> Result<SynthFiles> {
    std::fs::create_dir_all(dir)?;
    let files = SynthFiles::in_dir(dir);
    let mut out = BufWriter::new(File::create(&files.corpus)?);
    synth.corpus.write_uci(&mut out)?;
    out.flush()?;
    let mut out = BufWriter::new(File::create(&files.vocab)?);
    Vocabulary::synthetic(synth.beta.v()).write(&mut out)?;
    out.flush()?;
    let mut out = BufWriter::new(File::create(&files.true_beta)?);
    Snapshot::from_beta(&synth.beta, synth.hyper, 0).write(&mut out)?;
    out.flush()?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_small_concentration_is_finite() {
        let mut rng = rng_for(1, &[]);
        for _ in 0..100 {
            let x = sample_dirichlet(&[1e-3; 20], &mut rng).unwrap();
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn dirichlet_mean_matches() {
        let mut rng = rng_for(2, &[]);
        let a = [1.0, 2.0, 3.0];
        let n = 20_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            for (m, x) in mean.iter_mut().zip(sample_dirichlet(&a, &mut rng).unwrap()) {
                *m += x / n as f64;
            }
        }
        for (m, e) in mean.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((m - e).abs() < 0.01, "{m} vs {e}");
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = SynthConfig::new(3, 20, 10, 15);
        let (a, b) = (synthesize(&cfg).unwrap(), synthesize(&cfg).unwrap());
        assert_eq!(a.corpus.documents(), b.corpus.documents());
        assert_eq!(a.beta, b.beta);
        assert!(a.corpus.documents().iter().all(|d| d.token_count() == 15));
    }
}
