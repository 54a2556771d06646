use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ope_core::baselines::{CgsConfig, VbConfig};
use ope_core::learners::BatchOrder;
use ope_core::ope::{Init, OpeConfig, DEFAULT_EPSILON, DEFAULT_ITERATIONS};
use ope_core::{InferenceMethod, LearnerKind};

#[derive(Debug, Parser)]
#[command(name = "ope", version, about = "Topic-mixture inference and stochastic LDA learning")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a corpus from the LDA generative process.
    Synth(SynthArgs),
    /// Train a learner and write its final snapshot and metrics.
    Train(TrainArgs),
    /// Infer per-document topic mixtures under a snapshot.
    Infer(InferArgs),
    /// Held-out log predictive probability and NPMI of a snapshot.
    Eval(EvalArgs),
    /// Run a grid of learner x inference cells on one split.
    Bench(BenchArgs),
    /// Spread of the OPE objective over repeated random-init runs.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Center,
    Random,
}

impl From<InitArg> for Init {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Center => Init::Center,
            InitArg::Random => Init::Random,
        }
    }
}

/// A corpus in UCI bag-of-words format with an optional vocabulary.
#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// One term per line; must match W of the corpus.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferenceArgs {
    /// Local inference method: ope, vb or cgs.
    #[arg(long = "infer", default_value = "ope")]
    pub method: String,
    /// T: OPE iterations, VB maximum iterations, CGS sweeps.
    #[arg(long = "iterations", default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// OPE starting point.
    #[arg(long, value_enum, default_value_t = InitArg::Center)]
    pub init: InitArg,
    /// VB stopping tolerance on the relative bound improvement.
    #[arg(long, default_value_t = VbConfig::default().tol)]
    pub vb_tol: f64,
}

impl InferenceArgs {
    pub fn method(&self) -> ope_core::Result<InferenceMethod> {
        Ok(match self.method.parse::<InferenceMethod>()? {
            InferenceMethod::Ope(_) => InferenceMethod::Ope(
                OpeConfig::default()
                    .with_iterations(self.iterations)
                    .with_epsilon(self.epsilon)
                    .with_init(self.init.into()),
            ),
            InferenceMethod::Vb(_) => InferenceMethod::Vb(VbConfig {
                max_iter: self.iterations,
                tol: self.vb_tol,
            }),
            InferenceMethod::Cgs(_) => InferenceMethod::Cgs(CgsConfig {
                samples: self.iterations,
                burn_in: self.iterations / 2,
            }),
        })
    }
}

#[derive(Debug, Args)]
pub struct LppArgs {
    #[arg(long, default_value_t = 5)]
    pub lpp_splits: usize,
    /// Observed fraction of each test document.
    #[arg(long, default_value_t = 0.7)]
    pub lpp_ratio: f64,
    #[arg(long, default_value_t = 10)]
    pub npmi_top: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub v: usize,
    #[arg(long, default_value_t = 5000)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub doc_length: usize,
    /// Document-topic concentration; 1/K when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-term concentration of the true topics; 1/K when omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: CorpusArgs,
    #[arg(long, default_value = "online-ope")]
    pub learner: LearnerKind,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// 1/K when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-term prior (Online-OPE); 1/K when omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Schedule delay τ of ρ_t = (t + τ)^(−κ); 1 when omitted.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Forgetting rate κ in (0.5, 1]; 0.9 when omitted.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Minibatch size S.
    #[arg(long, default_value_t = 500)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    /// shuffled, sequential or sampled.
    #[arg(long, default_value = "shuffled")]
    pub order: BatchOrder,
    /// Evaluate every this many steps; 0 turns evaluation off.
    #[arg(long, default_value_t = 10)]
    pub eval_every: usize,
    /// Held-out corpus for evaluation.
    #[arg(long, conflicts_with = "test_size")]
    pub test: Option<PathBuf>,
    /// Hold out this many training documents for evaluation instead.
    #[arg(long, default_value_t = 0)]
    pub test_size: usize,
    #[command(flatten)]
    pub lpp: LppArgs,
    /// Treat the corpus as a stream: corpus order, total size unknown.
    #[arg(long)]
    pub stream: bool,
    /// D for Online-OPE; the corpus size when omitted (required with --stream).
    #[arg(long)]
    pub corpus_size: Option<usize>,
    /// Continue from this snapshot instead of a random start.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Top terms per topic in topics.csv (needs --vocab).
    #[arg(long, default_value_t = 20)]
    pub top_terms: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[command(flatten)]
    pub data: CorpusArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Dirichlet prior α; the snapshot's when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Per-iteration OPE trace, one block of rows per document.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Held-out documents for log predictive probability.
    #[arg(long)]
    pub test: PathBuf,
    /// Co-occurrence source for NPMI; the test corpus when omitted.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[command(flatten)]
    pub lpp: LppArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: CorpusArgs,
    /// Learners to run; all three when omitted.
    #[arg(long, value_delimiter = ',')]
    pub learners: Vec<LearnerKind>,
    /// Inference methods to run; ope and vb when omitted.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.9)]
    pub kappa: f64,
    #[arg(long, default_value_t = 500)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, default_value_t = 1)]
    pub eval_every: usize,
    #[arg(long, default_value_t = 500)]
    pub test_size: usize,
    #[command(flatten)]
    pub lpp: LppArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[command(flatten)]
    pub data: CorpusArgs,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Iteration budgets T to compare.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub iterations: Vec<usize>,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    pub init: InitArg,
    /// Reuse the base seed for every run.
    #[arg(long)]
    pub same_seed: bool,
    /// Only the first N documents.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
