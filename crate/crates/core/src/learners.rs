//! Stochastic learners for the global topics: ML-OPE (direct blending of
//! `β`), Online-OPE (natural-gradient style blending of `λ`) and
//! Streaming-OPE (additive accumulation into `λ`). Each is generic over the
//! per-document inference method, so the same code yields the VB and Gibbs
//! variants used for comparison.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::baselines::LocalInference;
use crate::corpus::{sample_minibatch, Corpus, DocBatch, Document};
use crate::error::{Error, Result};
use crate::eval::{self, LppConfig};
use crate::model::{
    normalize_rows, topics_from_lambda, LdaHyper, Schedule, Snapshot, StepSchedule, TopicMatrix, VariationalTopics,
};
use crate::ope::TopicMixture;
use crate::rng::{derive_seed, rng_for};
use crate::workers::Workers;

const INIT_STREAM: u64 = 0x1417;
const ORDER_STREAM: u64 = 0x0dde;

/// Responsibilities `φ_dj·` for every distinct term of one document,
/// stored term-major (`K` values per term).
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    k: usize,
    terms: Vec<u32>,
    values: Vec<f64>,
}

impl Phi {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    /// Responsibilities of the `i`-th distinct term.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[f64])> + '_ {
        self.terms.iter().copied().zip(self.values.chunks_exact(self.k))
    }
}

/// `φ_djk = θ_k β_kj / Σ_l θ_l β_lj` for each term of `doc`.
pub fn compute_phi(theta: &[f64], beta: &TopicMatrix, doc: &Document) -> Result<Phi> {
    let k = beta.k();
    if theta.len() != k {
        return Err(Error::DimensionMismatch {
            what: "topic mixture length",
            expected: k,
            found: theta.len(),
        });
    }
    let mut values = Vec::with_capacity(doc.num_terms() * k);
    for &j in doc.terms() {
        if j as usize >= beta.v() {
            return Err(Error::DimensionMismatch {
                what: "term id bound",
                expected: beta.v(),
                found: j as usize + 1,
            });
        }
        let start = values.len();
        let mut total = 0.0;
        for (kk, &t) in theta.iter().enumerate() {
            let p = t * beta.get(kk, j as usize);
            total += p;
            values.push(p);
        }
        if total.is_nan() || total <= 0.0 {
            return Err(Error::DegenerateSupport { term: j });
        }
        values[start..].iter_mut().for_each(|p| *p /= total);
    }
    Ok(Phi {
        k,
        terms: doc.terms().to_vec(),
        values,
    })
}

/// Timing and volume of one global step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: u64,
    pub docs: usize,
    pub tokens: u64,
    pub inference_seconds: f64,
}

impl StepStats {
    pub fn avg_infer_seconds_per_doc(&self) -> f64 {
        self.inference_seconds / self.docs.max(1) as f64
    }
}

/// Common interface of the three learners.
pub trait Learner {
    fn kind(&self) -> LearnerKind;

    fn hyper(&self) -> LdaHyper;

    /// Number of completed steps.
    fn steps(&self) -> u64;

    fn step(&mut self, batch: &DocBatch<'_>, infer: &dyn LocalInference) -> Result<StepStats>;

    /// Current point estimate of the topics (`β` or normalized `λ`).
    fn topics(&self) -> TopicMatrix;

    fn snapshot(&self) -> Snapshot;
}

/// Infers `θ_d` for the batch against `beta`, in corpus-index order.
fn infer_batch(
    batch: &DocBatch<'_>,
    beta: &TopicMatrix,
    alpha: f64,
    infer: &dyn LocalInference,
    seed: u64,
    t: u64,
    workers: &Workers,
) -> Result<(Vec<(usize, TopicMixture)>, f64)> {
    let entries = batch.sorted();
    let start = Instant::now();
    let thetas = workers.map(entries.len(), |i| {
        let (idx, doc) = entries[i];
        infer.infer(doc, beta, alpha, derive_seed(seed, &[t, idx as u64]))
    })?;
    let secs = start.elapsed().as_secs_f64();
    Ok((entries.iter().map(|e| e.0).zip(thetas).collect(), secs))
}

/// `Σ_d d_j φ_djk` accumulated into a dense `K x V` buffer, in corpus-index
/// order.
fn sufficient_statistics(
    batch: &DocBatch<'_>,
    thetas: &[(usize, TopicMixture)],
    beta: &TopicMatrix,
) -> Result<Vec<f64>> {
    let (k, v) = (beta.k(), beta.v());
    let mut suff = vec![0.0; k * v];
    for ((_, doc), (_, theta)) in batch.sorted().iter().zip(thetas) {
        let phi = compute_phi(theta.as_slice(), beta, doc)?;
        for ((j, row), &c) in phi.rows().zip(doc.counts()) {
            for (kk, &p) in row.iter().enumerate() {
                suff[kk * v + j as usize] += c as f64 * p;
            }
        }
    }
    Ok(suff)
}

fn check_batch(batch: &DocBatch<'_>, v: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for (_, d) in batch.entries() {
        if let Some(m) = d.max_term() {
            if m as usize >= v {
                return Err(Error::DimensionMismatch {
                    what: "term id bound",
                    expected: v,
                    found: m as usize + 1,
                });
            }
        }
    }
    Ok(())
}

/// Blends `β` directly toward the row-normalized expected counts of each
/// minibatch.
#[derive(Debug, Clone)]
pub struct MlOpe<S: Schedule = StepSchedule> {
    beta: TopicMatrix,
    t: u64,
    schedule: S,
    hyper: LdaHyper,
    seed: u64,
    workers: Workers,
}

impl<S: Schedule> MlOpe<S> {
    /// Random initial topics derived from `seed`.
    pub fn new(hyper: LdaHyper, v: usize, schedule: S, seed: u64) -> Result<Self> {
        let beta = TopicMatrix::random(hyper.k, v, &mut rng_for(seed, &[INIT_STREAM]))?;
        Self::from_beta(beta, hyper, schedule, seed)
    }

    pub fn from_beta(beta: TopicMatrix, hyper: LdaHyper, schedule: S, seed: u64) -> Result<Self> {
        if beta.k() != hyper.k {
            return Err(Error::DimensionMismatch {
                what: "topic count",
                expected: hyper.k,
                found: beta.k(),
            });
        }
        Ok(Self {
            beta,
            t: 0,
            schedule,
            hyper,
            seed,
            workers: Workers::sequential(),
        })
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_count(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    pub fn beta(&self) -> &TopicMatrix {
        &self.beta
    }
}

impl<S: Schedule> Learner for MlOpe<S> {
    fn kind(&self) -> LearnerKind {
        LearnerKind::MlOpe
    }

    fn hyper(&self) -> LdaHyper {
        self.hyper
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn step(&mut self, batch: &DocBatch<'_>, infer: &dyn LocalInference) -> Result<StepStats> {
        let (k, v) = (self.beta.k(), self.beta.v());
        check_batch(batch, v)?;
        let t = self.t + 1;
        let (thetas, secs) = infer_batch(batch, &self.beta, self.hyper.alpha, infer, self.seed, t, &self.workers)?;

        let mut raw = vec![0.0; k * v];
        for ((_, doc), (_, theta)) in batch.sorted().iter().zip(&thetas) {
            for (j, c) in doc.iter() {
                for (kk, &th) in theta.as_slice().iter().enumerate() {
                    raw[kk * v + j as usize] += c as f64 * th;
                }
            }
        }
        let target = normalize_rows(k, v, raw)?;
        let rho = self.schedule.step_size(t);
        let data = self
            .beta
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(&b, &h)| (1.0 - rho) * b + rho * h)
            .collect();
        self.beta = TopicMatrix::from_raw(k, v, data);
        self.t = t;
        Ok(StepStats {
            step: t,
            docs: batch.len(),
            tokens: batch.token_count(),
            inference_seconds: secs,
        })
    }

    fn topics(&self) -> TopicMatrix {
        self.beta.clone()
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::from_beta(&self.beta, self.hyper, self.t)
    }
}

/// Blends `λ` toward `η + (D/S)·(minibatch sufficient statistics)`.
#[derive(Debug, Clone)]
pub struct OnlineOpe<S: Schedule = StepSchedule> {
    lambda: VariationalTopics,
    t: u64,
    schedule: S,
    hyper: LdaHyper,
    corpus_size: usize,
    seed: u64,
    workers: Workers,
}

impl<S: Schedule> OnlineOpe<S> {
    pub fn new(hyper: LdaHyper, v: usize, corpus_size: usize, schedule: S, seed: u64) -> Result<Self> {
        let lambda = VariationalTopics::random(hyper.k, v, &mut rng_for(seed, &[INIT_STREAM]))?;
        Self::from_lambda(lambda, hyper, corpus_size, schedule, seed)
    }

    pub fn from_lambda(
        lambda: VariationalTopics,
        hyper: LdaHyper,
        corpus_size: usize,
        schedule: S,
        seed: u64,
    ) -> Result<Self> {
        if corpus_size == 0 {
            return Err(Error::InvalidArgument("Online-OPE needs the corpus size D >= 1".into()));
        }
        if lambda.k() != hyper.k {
            return Err(Error::DimensionMismatch {
                what: "topic count",
                expected: hyper.k,
                found: lambda.k(),
            });
        }
        Ok(Self {
            lambda,
            t: 0,
            schedule,
            hyper,
            corpus_size,
            seed,
            workers: Workers::sequential(),
        })
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_count(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    pub fn lambda(&self) -> &VariationalTopics {
        &self.lambda
    }
}

impl<S: Schedule> Learner for OnlineOpe<S> {
    fn kind(&self) -> LearnerKind {
        LearnerKind::OnlineOpe
    }

    fn hyper(&self) -> LdaHyper {
        self.hyper
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn step(&mut self, batch: &DocBatch<'_>, infer: &dyn LocalInference) -> Result<StepStats> {
        check_batch(batch, self.lambda.v())?;
        let t = self.t + 1;
        let beta = topics_from_lambda(&self.lambda);
        let (thetas, secs) = infer_batch(batch, &beta, self.hyper.alpha, infer, self.seed, t, &self.workers)?;
        let suff = sufficient_statistics(batch, &thetas, &beta)?;

        let rho = self.schedule.step_size(t);
        let scale = self.corpus_size as f64 / batch.len() as f64;
        let eta = self.hyper.eta;
        for (l, s) in self.lambda.as_mut_slice().iter_mut().zip(suff) {
            *l = (1.0 - rho) * *l + rho * (eta + scale * s);
        }
        self.t = t;
        Ok(StepStats {
            step: t,
            docs: batch.len(),
            tokens: batch.token_count(),
            inference_seconds: secs,
        })
    }

    fn topics(&self) -> TopicMatrix {
        topics_from_lambda(&self.lambda)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::from_lambda(&self.lambda, self.hyper, self.t)
    }
}

/// Adds each minibatch's sufficient statistics to `λ`. Needs neither the
/// corpus size nor a step-size schedule.
#[derive(Debug, Clone)]
pub struct StreamingOpe {
    lambda: VariationalTopics,
    t: u64,
    hyper: LdaHyper,
    seed: u64,
    workers: Workers,
}

impl StreamingOpe {
    pub fn new(hyper: LdaHyper, v: usize, seed: u64) -> Result<Self> {
        let lambda = VariationalTopics::random(hyper.k, v, &mut rng_for(seed, &[INIT_STREAM]))?;
        Self::from_lambda(lambda, hyper, seed)
    }

    pub fn from_lambda(lambda: VariationalTopics, hyper: LdaHyper, seed: u64) -> Result<Self> {
        if lambda.k() != hyper.k {
            return Err(Error::DimensionMismatch {
                what: "topic count",
                expected: hyper.k,
                found: lambda.k(),
            });
        }
        Ok(Self {
            lambda,
            t: 0,
            hyper,
            seed,
            workers: Workers::sequential(),
        })
    }

    pub fn with_workers(mut self, workers: Workers) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_count(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    pub fn lambda(&self) -> &VariationalTopics {
        &self.lambda
    }
}

impl Learner for StreamingOpe {
    fn kind(&self) -> LearnerKind {
        LearnerKind::StreamingOpe
    }

    fn hyper(&self) -> LdaHyper {
        self.hyper
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn step(&mut self, batch: &DocBatch<'_>, infer: &dyn LocalInference) -> Result<StepStats> {
        check_batch(batch, self.lambda.v())?;
        let t = self.t + 1;
        let beta = topics_from_lambda(&self.lambda);
        let (thetas, secs) = infer_batch(batch, &beta, self.hyper.alpha, infer, self.seed, t, &self.workers)?;
        let suff = sufficient_statistics(batch, &thetas, &beta)?;
        for (l, s) in self.lambda.as_mut_slice().iter_mut().zip(suff) {
            *l += s;
        }
        self.t = t;
        Ok(StepStats {
            step: t,
            docs: batch.len(),
            tokens: batch.token_count(),
            inference_seconds: secs,
        })
    }

    fn topics(&self) -> TopicMatrix {
        topics_from_lambda(&self.lambda)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::from_lambda(&self.lambda, self.hyper, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    MlOpe,
    OnlineOpe,
    StreamingOpe,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::MlOpe, LearnerKind::OnlineOpe, LearnerKind::StreamingOpe];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::MlOpe => "ml-ope",
            LearnerKind::OnlineOpe => "online-ope",
            LearnerKind::StreamingOpe => "streaming-ope",
        }
    }

    /// Whether the update uses `η`, `τ` and `κ`.
    pub fn uses_schedule(&self) -> bool {
        matches!(self, LearnerKind::MlOpe | LearnerKind::OnlineOpe)
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml-ope" => Ok(LearnerKind::MlOpe),
            "online-ope" => Ok(LearnerKind::OnlineOpe),
            "streaming-ope" => Ok(LearnerKind::StreamingOpe),
            _ => Err(Error::UnknownLearner(s.to_string())),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Builds a freshly initialized learner. Online-OPE requires `corpus_size`.
pub fn build_learner(
    kind: LearnerKind,
    hyper: LdaHyper,
    v: usize,
    schedule: StepSchedule,
    corpus_size: Option<usize>,
    seed: u64,
    workers: Workers,
) -> Result<Box<dyn Learner>> {
    Ok(match kind {
        LearnerKind::MlOpe => Box::new(MlOpe::new(hyper, v, schedule, seed)?.with_workers(workers)),
        LearnerKind::OnlineOpe => {
            let d = corpus_size.ok_or_else(|| {
                Error::InvalidArgument(
                    "online-ope needs the corpus size D; use streaming-ope or ml-ope for unbounded streams".into(),
                )
            })?;
            Box::new(OnlineOpe::new(hyper, v, d, schedule, seed)?.with_workers(workers))
        }
        LearnerKind::StreamingOpe => Box::new(StreamingOpe::new(hyper, v, seed)?.with_workers(workers)),
    })
}

/// Resumes a learner from a snapshot. The snapshot kind must match the
/// learner (`β` for ML-OPE, `λ` otherwise).
pub fn learner_from_snapshot(
    kind: LearnerKind,
    snapshot: &Snapshot,
    schedule: StepSchedule,
    corpus_size: Option<usize>,
    seed: u64,
    workers: Workers,
) -> Result<Box<dyn Learner>> {
    let hyper = snapshot.hyper;
    let t = snapshot.step;
    Ok(match kind {
        LearnerKind::MlOpe => Box::new(
            MlOpe::from_beta(snapshot.topics()?, hyper, schedule, seed)?
                .with_workers(workers)
                .with_step_count(t),
        ),
        LearnerKind::OnlineOpe => {
            let d = corpus_size.ok_or_else(|| Error::InvalidArgument("online-ope needs the corpus size D".into()))?;
            Box::new(
                OnlineOpe::from_lambda(snapshot.lambda()?, hyper, d, schedule, seed)?
                    .with_workers(workers)
                    .with_step_count(t),
            )
        }
        LearnerKind::StreamingOpe => Box::new(
            StreamingOpe::from_lambda(snapshot.lambda()?, hyper, seed)?
                .with_workers(workers)
                .with_step_count(t),
        ),
    })
}

/// How minibatches are drawn from the training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchOrder {
    /// Each pass visits a fresh permutation in consecutive chunks.
    #[default]
    Shuffled,
    /// Each pass visits documents in corpus order, as a stream would.
    Sequential,
    /// Every step draws an independent uniform sample of `S` documents.
    Sampled,
}

impl FromStr for BatchOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "shuffled" => Ok(BatchOrder::Shuffled),
            "sequential" => Ok(BatchOrder::Sequential),
            "sampled" => Ok(BatchOrder::Sampled),
            _ => Err(Error::InvalidArgument(format!("unknown batch order '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learner: LearnerKind,
    pub hyper: LdaHyper,
    pub schedule: StepSchedule,
    pub batch_size: usize,
    pub passes: usize,
    pub order: BatchOrder,
    /// Evaluate after every this many steps; 0 disables evaluation.
    pub eval_every: usize,
    pub seed: u64,
    pub workers: usize,
    /// `D` for Online-OPE; defaults to the training corpus size.
    pub corpus_size: Option<usize>,
}

impl TrainConfig {
    pub fn new(learner: LearnerKind, hyper: LdaHyper) -> Self {
        Self {
            learner,
            hyper,
            schedule: StepSchedule::default(),
            batch_size: 500,
            passes: 1,
            order: BatchOrder::default(),
            eval_every: 10,
            seed: 0,
            workers: 1,
            corpus_size: None,
        }
    }
}

/// Held-out data and settings for the periodic evaluation.
pub struct EvalSetup<'a> {
    pub test: &'a Corpus,
    /// Source of the co-occurrence statistics for NPMI.
    pub reference: &'a Corpus,
    pub lpp: LppConfig,
    pub npmi_top: usize,
    /// Inference used for evaluation; the training method when `None`.
    pub infer: Option<&'a dyn LocalInference>,
}

impl<'a> EvalSetup<'a> {
    pub fn new(test: &'a Corpus, reference: &'a Corpus) -> Self {
        Self {
            test,
            reference,
            lpp: LppConfig::default(),
            npmi_top: 10,
            infer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    pub docs_seen: u64,
    /// Cumulative learning time, evaluation excluded.
    pub elapsed_seconds: f64,
    pub log_predictive_probability: f64,
    pub npmi: f64,
    pub avg_infer_seconds_per_doc: f64,
    /// Held-out tokens whose probability hit the floor.
    pub floored_tokens: usize,
}

pub const METRICS_HEADER: &str = "step,docs_seen,elapsed_seconds,log_predictive_probability,npmi";

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?}",
            self.step, self.docs_seen, self.elapsed_seconds, self.log_predictive_probability, self.npmi
        )
    }
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    pub steps: Vec<StepStats>,
    pub learner: Box<dyn Learner>,
}

impl TrainOutcome {
    pub fn topics(&self) -> TopicMatrix {
        self.learner.topics()
    }

    pub fn snapshot(&self) -> Snapshot {
        self.learner.snapshot()
    }
}

/// Minibatch index lists for all passes.
fn schedule_batches(d: usize, cfg: &TrainConfig) -> Result<Vec<Vec<usize>>> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let s = cfg.batch_size;
    let per_pass = d.div_ceil(s);
    let mut out = Vec::with_capacity(per_pass * cfg.passes);
    for pass in 0..cfg.passes {
        match cfg.order {
            BatchOrder::Sequential | BatchOrder::Shuffled => {
                let mut idx: Vec<usize> = (0..d).collect();
                if cfg.order == BatchOrder::Shuffled {
                    idx.shuffle(&mut rng_for(cfg.seed, &[ORDER_STREAM, pass as u64]));
                }
                out.extend(idx.chunks(s).map(<[usize]>::to_vec));
            }
            BatchOrder::Sampled => {
                for _ in 0..per_pass {
                    out.push(Vec::new());
                }
            }
        }
    }
    Ok(out)
}

/// Trains from scratch over `train`, evaluating every `cfg.eval_every`
/// steps when `eval` is given.
pub fn run_learner(
    train: &Corpus,
    cfg: &TrainConfig,
    infer: &dyn LocalInference,
    eval: Option<&EvalSetup<'_>>,
) -> Result<TrainOutcome> {
    run_learner_with(train, cfg, infer, eval, &mut |_| Ok(()))
}

/// [`run_learner`] with a callback invoked on each record as it is made.
pub fn run_learner_with(
    train: &Corpus,
    cfg: &TrainConfig,
    infer: &dyn LocalInference,
    eval: Option<&EvalSetup<'_>>,
    on_record: &mut dyn FnMut(&MetricsRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let workers = Workers::new(cfg.workers)?;
    let corpus_size = cfg.corpus_size.or(Some(train.len()));
    let learner = build_learner(
        cfg.learner,
        cfg.hyper,
        train.vocab_size(),
        cfg.schedule,
        corpus_size,
        cfg.seed,
        workers.clone(),
    )?;
    continue_learner(learner, train, cfg, infer, eval, on_record)
}

/// Drives an existing learner over `train` as configured by `cfg` (the
/// learner-construction fields of `cfg` are ignored).
pub fn continue_learner(
    mut learner: Box<dyn Learner>,
    train: &Corpus,
    cfg: &TrainConfig,
    infer: &dyn LocalInference,
    eval: Option<&EvalSetup<'_>>,
    on_record: &mut dyn FnMut(&MetricsRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let workers = Workers::new(cfg.workers)?;
    let plan = schedule_batches(train.len(), cfg)?;
    let mut records = Vec::new();
    let mut steps = Vec::with_capacity(plan.len());
    let mut elapsed = 0.0;
    let mut docs_seen = 0u64;

    for (i, indices) in plan.iter().enumerate() {
        let start = Instant::now();
        let batch = if cfg.order == BatchOrder::Sampled {
            sample_minibatch(train, cfg.batch_size, cfg.seed, learner.steps() + 1)?
        } else {
            DocBatch::new(indices.iter().map(|&j| (j, train.doc(j))).collect())?
        };
        let stats = learner.step(&batch, infer).map_err(|e| Error::AtStep {
            step: i as u64 + 1,
            source: Box::new(e),
        })?;
        elapsed += start.elapsed().as_secs_f64();
        docs_seen += stats.docs as u64;
        steps.push(stats);

        if let Some(setup) = eval {
            if cfg.eval_every > 0 && (i + 1) % cfg.eval_every == 0 {
                let topics = learner.topics();
                let method = setup.infer.unwrap_or(infer);
                let lpp = eval::log_predictive_probability(
                    &topics,
                    learner.hyper().alpha,
                    setup.test,
                    method,
                    &setup.lpp,
                    &workers,
                )?;
                let npmi = eval::npmi_on(&topics, setup.reference, setup.npmi_top)?;
                let record = MetricsRecord {
                    step: stats.step,
                    docs_seen,
                    elapsed_seconds: elapsed,
                    log_predictive_probability: lpp.value,
                    npmi,
                    avg_infer_seconds_per_doc: stats.avg_infer_seconds_per_doc(),
                    floored_tokens: lpp.floored_tokens,
                };
                on_record(&record)?;
                records.push(record);
            }
        }
    }
    Ok(TrainOutcome {
        records,
        steps,
        learner,
    })
}
