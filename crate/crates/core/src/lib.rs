//! Topic-mixture inference and stochastic learning for latent Dirichlet
//! allocation.
//!
//! The centerpiece is [`ope`], a stochastic vertex-stepping maximizer for
//! the per-document MAP problem over the truncated simplex. The learners in
//! [`learners`] (ML-OPE, Online-OPE, Streaming-OPE) build on it, and
//! [`baselines`] provides variational Bayes and collapsed Gibbs inference
//! behind the same [`LocalInference`] interface. [`eval`] measures held-out
//! predictiveness, topic coherence and inference stability.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod harness;
pub mod learners;
pub mod model;
pub mod ope;
pub mod rng;
pub mod synth;
pub mod workers;

pub use baselines::{InferenceMethod, LocalInference};
pub use corpus::{Corpus, DocBatch, Document, Vocabulary};
pub use error::{Error, Result};
pub use learners::{Learner, LearnerKind, MetricsRecord, TrainConfig};
pub use model::{LdaHyper, Snapshot, StepSchedule, TopicMatrix, VariationalTopics};
pub use ope::{OpeConfig, TopicMixture, TruncatedSimplex};
pub use workers::Workers;
