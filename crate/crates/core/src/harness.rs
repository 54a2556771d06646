//! Benchmark matrix: every (learner, inference) cell trained on the same
//! split with the same seeds, reported as one combined metrics table and a
//! per-document inference timing table.

use std::io::Write;

use crate::baselines::InferenceMethod;
use crate::corpus::{train_test_split, Corpus};
use crate::error::Result;
use crate::eval::LppConfig;
use crate::learners::{run_learner, EvalSetup, LearnerKind, MetricsRecord, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCell {
    pub learner: LearnerKind,
    pub method: InferenceMethod,
}

impl BenchCell {
    pub fn new(learner: LearnerKind, method: InferenceMethod) -> Self {
        Self { learner, method }
    }

    /// `online-ope`, `online-vb`, `streaming-cgs`, ...
    pub fn label(&self) -> String {
        let family = match self.learner {
            LearnerKind::MlOpe => "ml",
            LearnerKind::OnlineOpe => "online",
            LearnerKind::StreamingOpe => "streaming",
        };
        format!("{family}-{}", self.method.as_str())
    }
}

/// The default matrix: every learner with OPE, plus the online and
/// streaming learners with VB.
pub fn default_cells() -> Vec<BenchCell> {
    vec![
        BenchCell::new(LearnerKind::MlOpe, InferenceMethod::ope()),
        BenchCell::new(LearnerKind::OnlineOpe, InferenceMethod::ope()),
        BenchCell::new(LearnerKind::StreamingOpe, InferenceMethod::ope()),
        BenchCell::new(LearnerKind::OnlineOpe, InferenceMethod::vb()),
        BenchCell::new(LearnerKind::StreamingOpe, InferenceMethod::vb()),
    ]
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cells: Vec<BenchCell>,
    /// Learner settings shared by every cell; `learner` is overridden.
    pub train: TrainConfig,
    pub test_size: usize,
    pub split_seed: u64,
    pub lpp: LppConfig,
    pub npmi_top: usize,
}

#[derive(Debug, Clone)]
pub struct CellReport {
    pub cell: BenchCell,
    pub records: Vec<MetricsRecord>,
    pub steps: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub cells: Vec<CellReport>,
    pub train_docs: usize,
    pub test_docs: usize,
}

impl BenchReport {
    pub fn write_combined_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "method,learner,inference,step,docs_seen,elapsed_seconds,log_predictive_probability,npmi,avg_infer_seconds_per_doc"
        )?;
        for c in &self.cells {
            for r in &c.records {
                writeln!(
                    out,
                    "{},{},{},{},{},{:?},{:?},{:?},{:?}",
                    c.cell.label(),
                    c.cell.learner,
                    c.cell.method,
                    r.step,
                    r.docs_seen,
                    r.elapsed_seconds,
                    r.log_predictive_probability,
                    r.npmi,
                    r.avg_infer_seconds_per_doc
                )?;
            }
        }
        Ok(())
    }

    /// One row per evaluated step and cell.
    pub fn write_timing_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,method,avg_infer_seconds_per_doc")?;
        for c in &self.cells {
            for r in &c.records {
                writeln!(out, "{},{},{:?}", r.step, c.cell.label(), r.avg_infer_seconds_per_doc)?;
            }
        }
        Ok(())
    }

    /// `label,status,steps,message` per cell.
    pub fn write_status_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,status,steps,message")?;
        for c in &self.cells {
            let (status, msg) = match &c.error {
                None => ("ok", String::new()),
                Some(e) => ("failed", e.replace([',', '\n'], ";")),
            };
            writeln!(out, "{},{status},{},{msg}", c.cell.label(), c.steps)?;
        }
        Ok(())
    }

    /// Mean of the per-step inference time over every evaluated step of
    /// every successful cell using `method`.
    pub fn mean_infer_seconds(&self, method: &str) -> Option<f64> {
        let xs: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.error.is_none() && c.cell.method.as_str() == method)
            .flat_map(|c| c.records.iter().map(|r| r.avg_infer_seconds_per_doc))
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Runs every cell. A failing cell is recorded and the rest still run.
pub fn run_bench(corpus: &Corpus, cfg: &BenchConfig) -> Result<BenchReport> {
    let (train, test) = train_test_split(corpus, cfg.test_size, cfg.split_seed)?;
    let mut setup = EvalSetup::new(&test, &train);
    setup.lpp = cfg.lpp;
    setup.npmi_top = cfg.npmi_top;
    let mut cells = Vec::with_capacity(cfg.cells.len());
    for cell in &cfg.cells {
        let mut train_cfg = cfg.train.clone();
        train_cfg.learner = cell.learner;
        log::info!("bench cell {}", cell.label());
        let report = match run_learner(&train, &train_cfg, &cell.method, Some(&setup)) {
            Ok(out) => CellReport {
                cell: *cell,
                steps: out.steps.len(),
                records: out.records,
                error: None,
            },
            Err(e) => {
                log::error!("bench cell {} failed: {e}", cell.label());
                CellReport {
                    cell: *cell,
                    records: Vec::new(),
                    steps: 0,
                    error: Some(e.to_string()),
                }
            }
        };
        cells.push(report);
    }
    Ok(BenchReport {
        cells,
        train_docs: train.len(),
        test_docs: test.len(),
    })
}
