#![allow(dead_code)]

use std::collections::BTreeSet;

use ope_core::corpus::split_holdout;
use ope_core::eval::{log_predictive_probability, LppConfig, LppResult};
use ope_core::rng::{derive_seed, rng_for, Rng};
use ope_core::{Corpus, Document, LocalInference, Result, TopicMatrix, TopicMixture, Workers};
use rand::Rng as _;

/// Brute-force objective written independently of the library.
pub fn lda_objective(theta: &[f64], doc: &Document, beta: &TopicMatrix, alpha: f64) -> f64 {
    let mut f = 0.0;
    for (j, c) in doc.iter() {
        let mut dot = 0.0;
        for (k, t) in theta.iter().enumerate() {
            dot += t * beta.row(k)[j as usize];
        }
        f += c as f64 * dot.ln();
    }
    for t in theta {
        f += (alpha - 1.0) * t.ln();
    }
    f
}

/// Every strictly interior point of the 3-simplex on a grid of step `h`.
pub fn grid3(h: f64) -> Vec<[f64; 3]> {
    let n = (1.0 / h).round() as usize;
    let mut pts = Vec::new();
    for i in 1..n {
        for j in 1..n - i {
            let k = n - i - j;
            pts.push([i as f64 * h, j as f64 * h, k as f64 * h]);
        }
    }
    pts
}

/// `(argmax, max)` of `f` over [`grid3`].
pub fn grid_max(h: f64, f: impl Fn(&[f64]) -> f64) -> ([f64; 3], f64) {
    let mut best = ([0.0; 3], f64::NEG_INFINITY);
    for p in grid3(h) {
        let v = f(&p);
        if v > best.1 {
            best = (p, v);
        }
    }
    best
}

pub fn random_beta(k: usize, v: usize, rng: &mut Rng) -> TopicMatrix {
    let mut data = Vec::with_capacity(k * v);
    for _ in 0..k {
        let row: Vec<f64> = (0..v).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = row.iter().sum();
        data.extend(row.into_iter().map(|x| x / s));
    }
    TopicMatrix::from_rows(k, v, data).unwrap()
}

pub fn random_doc(v: usize, tokens: usize, rng: &mut Rng) -> Document {
    let toks: Vec<u32> = (0..tokens).map(|_| rng.random_range(0..v as u32)).collect();
    Document::from_tokens(&toks)
}

pub fn rng(seed: u64) -> Rng {
    rng_for(seed, &[0x7e57])
}

/// Peaked topics: entries `u^4` normalized, so rows are well separated.
pub fn sharp_beta(k: usize, v: usize, rng: &mut Rng) -> TopicMatrix {
    let mut data = Vec::with_capacity(k * v);
    for _ in 0..k {
        let row: Vec<f64> = (0..v).map(|_| rng.random_range(0.0f64..1.0).powi(4) + 1e-3).collect();
        let s: f64 = row.iter().sum();
        data.extend(row.into_iter().map(|x| x / s));
    }
    TopicMatrix::from_rows(k, v, data).unwrap()
}

/// Returns a fixed mixture per document length, so the fixture can hand-set
/// `θ` per document.
pub struct ByLength(pub Vec<(u64, Vec<f64>)>);

impl LocalInference for ByLength {
    fn infer(&self, doc: &Document, _: &TopicMatrix, _: f64, _: u64) -> Result<TopicMixture> {
        let n = doc.token_count();
        let th = self
            .0
            .iter()
            .find(|(len, _)| *len == n)
            .expect("fixture length")
            .1
            .clone();
        Ok(TopicMixture::new(th))
    }

    fn name(&self) -> &str {
        "by-length"
    }
}

pub fn lpp_fixture() -> (Corpus, TopicMatrix) {
    let docs = vec![
        Document::from_pairs([(0, 3), (1, 2), (2, 5)]),
        Document::from_pairs([(0, 1), (2, 6)]),
    ];
    let beta = TopicMatrix::from_rows(2, 3, vec![0.5, 0.3, 0.2, 0.1, 0.2, 0.7]).unwrap();
    (Corpus::new(docs, 3).unwrap(), beta)
}

/// Scalar re-computation: for each split, re-draw the held-out tokens with
/// the documented seed scheme, score them token by token, average.
pub fn brute_lpp(corpus: &Corpus, beta: &TopicMatrix, thetas: &dyn Fn(usize) -> Vec<f64>, cfg: &LppConfig) -> f64 {
    let mut total = 0.0;
    for s in 0..cfg.splits {
        let mut per_split = 0.0;
        let mut n = 0.0;
        for (i, doc) in corpus.documents().iter().enumerate() {
            if doc.token_count() < 2 {
                continue;
            }
            let split = split_holdout(doc, cfg.ratio, derive_seed(cfg.seed, &[s as u64, i as u64, 0])).unwrap();
            let th = thetas(split.observed.token_count() as usize);
            let mut lp = 0.0;
            for &w in &split.heldout {
                let mut p = 0.0;
                for (k, t) in th.iter().enumerate() {
                    p += t * beta.row(k)[w as usize];
                }
                lp += p.ln();
            }
            per_split += lp / split.heldout.len() as f64;
            n += 1.0;
        }
        total += per_split / n;
    }
    total / cfg.splits as f64
}

/// Two documents, two topics, hand-set mixtures; returns the library value
/// and the scalar re-computation.
pub fn lpp_fixture_check() -> (LppResult, f64) {
    let (corpus, beta) = lpp_fixture();
    let cfg = LppConfig {
        seed: 42,
        ..LppConfig::default()
    };
    // Observed parts: ceil(0.7 * 10) = 7 and ceil(0.7 * 7) = 5 tokens.
    let th7 = vec![0.8, 0.2];
    let th5 = vec![0.25, 0.75];
    let stub = ByLength(vec![(7, th7.clone()), (5, th5.clone())]);
    let got = log_predictive_probability(&beta, 0.5, &corpus, &stub, &cfg, &Workers::sequential()).unwrap();
    let pick = |n: usize| if n == 7 { th7.clone() } else { th5.clone() };
    (got, brute_lpp(&corpus, &beta, &pick, &cfg))
}

/// NPMI recomputed from raw document sets.
pub fn brute_npmi(topics: &TopicMatrix, docs: &[Document], n: usize) -> f64 {
    let sets: Vec<BTreeSet<u32>> = docs.iter().map(|d| d.terms().iter().copied().collect()).collect();
    let d = docs.len() as f64;
    let p1 = |w: u32| sets.iter().filter(|s| s.contains(&w)).count() as f64 / d;
    let p2 = |a: u32, b: u32| sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count() as f64 / d;
    let mut total = 0.0;
    for k in 0..topics.k() {
        let row = topics.row(k);
        let mut ids: Vec<u32> = (0..topics.v() as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].partial_cmp(&row[a as usize]).unwrap().then(a.cmp(&b)));
        let top = &ids[..n];
        let mut s = 0.0;
        for j in 1..n {
            for i in 0..j {
                let pij = p2(top[j], top[i]);
                s += if pij == 0.0 {
                    -1.0
                } else if pij == 1.0 {
                    0.0
                } else {
                    (pij / (p1(top[j]) * p1(top[i]))).ln() / -pij.ln()
                };
            }
        }
        total += 2.0 * s / (n * (n - 1)) as f64;
    }
    total / topics.k() as f64
}

pub fn npmi_fixture() -> (Corpus, TopicMatrix) {
    let docs = vec![
        Document::from_pairs([(0, 1), (1, 2), (3, 1)]),
        Document::from_pairs([(0, 4), (2, 1)]),
        Document::from_pairs([(1, 1), (2, 1), (3, 2), (4, 1)]),
        Document::from_pairs([(0, 1), (1, 1), (4, 5)]),
    ];
    let topics = TopicMatrix::from_rows(2, 5, vec![0.4, 0.3, 0.1, 0.1, 0.1, 0.05, 0.05, 0.3, 0.3, 0.3]).unwrap();
    (Corpus::new(docs, 5).unwrap(), topics)
}
