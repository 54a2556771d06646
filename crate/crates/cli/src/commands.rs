use std::io::Write;

use anyhow::{bail, Context, Result};
use ope_core::corpus::train_test_split;
use ope_core::eval::{log_predictive_probability, npmi_on, stability_report, LppConfig, StabilityConfig};
use ope_core::harness::{run_bench, BenchCell, BenchConfig};
use ope_core::learners::{
    build_learner, continue_learner, learner_from_snapshot, EvalSetup, MetricsRecord, METRICS_HEADER,
};
use ope_core::model::SnapshotKind;
use ope_core::ope::{ope_infer_traced, Init};
use ope_core::rng::derive_seed;
use ope_core::synth::{synthesize, write_synth, SynthConfig};
use ope_core::{
    Corpus, InferenceMethod, LdaHyper, LearnerKind, LocalInference, Snapshot, StepSchedule, TopicMatrix, TrainConfig,
    Workers,
};

use crate::args::{BenchArgs, EvalArgs, InferArgs, LppArgs, StabilityArgs, SynthArgs, TrainArgs};
use crate::io::{create, load_corpus, load_snapshot, output};
use crate::usage;

pub const SNAPSHOT_FILE: &str = "model.snapshot";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TOPICS_FILE: &str = "topics.csv";
pub const COMBINED_FILE: &str = "bench.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const STATUS_FILE: &str = "status.csv";

fn workers(n: usize) -> Result<Workers> {
    Workers::new(n).map_err(|e| usage(e.to_string()))
}

fn method(args: &crate::args::InferenceArgs) -> Result<InferenceMethod> {
    args.method().map_err(|e| usage(e.to_string()))
}

fn hyper(k: usize, alpha: Option<f64>, eta: Option<f64>) -> Result<LdaHyper> {
    let inv = 1.0 / k.max(1) as f64;
    LdaHyper::new(k, alpha.unwrap_or(inv), eta.unwrap_or(inv)).map_err(|e| usage(e.to_string()))
}

fn lpp_config(a: &LppArgs, seed: u64) -> LppConfig {
    LppConfig {
        splits: a.lpp_splits,
        ratio: a.lpp_ratio,
        seed,
    }
}

fn check_width(snapshot: &Snapshot, corpus: &Corpus) -> Result<()> {
    if snapshot.v != corpus.vocab_size() {
        bail!(
            "snapshot has {} terms but the corpus has {}",
            snapshot.v,
            corpus.vocab_size()
        );
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(a.k, a.v, a.d, a.doc_length);
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(eta) = a.eta {
        cfg.eta = eta;
    }
    cfg.seed = a.seed;
    let s = synthesize(&cfg).map_err(|e| usage(e.to_string()))?;
    let files = write_synth(&s, &a.out).with_context(|| format!("writing to {}", a.out.display()))?;
    log::info!(
        "wrote {}, {}, {}",
        files.corpus.display(),
        files.vocab.display(),
        files.true_beta.display()
    );
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let infer = method(&a.inference)?;
    let pool = workers(a.workers)?;
    if a.learner == LearnerKind::StreamingOpe {
        for (flag, set) in [
            ("--eta", a.eta.is_some()),
            ("--tau", a.tau.is_some()),
            ("--kappa", a.kappa.is_some()),
        ] {
            if set {
                log::warn!("streaming-ope takes only K and alpha; ignoring {flag}");
            }
        }
    }
    if a.stream && a.learner == LearnerKind::OnlineOpe && a.corpus_size.is_none() {
        return Err(usage(
            "online-ope on a stream needs the corpus size: pass --corpus-size",
        ));
    }
    let hyper = hyper(a.k, a.alpha, a.eta)?;
    let default = StepSchedule::default();
    let schedule = StepSchedule::new(a.tau.unwrap_or(default.tau()), a.kappa.unwrap_or(default.kappa()))
        .map_err(|e| usage(e.to_string()))?;

    let corpus = load_corpus(&a.data.corpus, a.data.vocab.as_deref())?;
    let (train, test) = match (&a.test, a.test_size) {
        (Some(path), _) => (corpus, Some(load_corpus(path, None)?)),
        (None, 0) => (corpus, None),
        (None, n) => {
            let (tr, te) = train_test_split(&corpus, n, a.seed).map_err(|e| usage(e.to_string()))?;
            (tr, Some(te))
        }
    };
    if test.is_none() && a.eval_every > 0 {
        log::warn!("no held-out documents (--test or --test-size); metrics will be empty");
    }

    let mut cfg = TrainConfig::new(a.learner, hyper);
    cfg.schedule = schedule;
    cfg.batch_size = a.batch_size;
    cfg.passes = a.passes;
    cfg.order = if a.stream {
        ope_core::learners::BatchOrder::Sequential
    } else {
        a.order
    };
    cfg.eval_every = if test.is_some() { a.eval_every } else { 0 };
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    cfg.corpus_size = a.corpus_size.or((!a.stream).then_some(train.len()));

    let learner = match &a.resume {
        Some(path) => {
            let snap = load_snapshot(path)?;
            check_width(&snap, &train)?;
            let want = if a.learner == LearnerKind::MlOpe {
                SnapshotKind::Beta
            } else {
                SnapshotKind::Lambda
            };
            if snap.kind != want {
                return Err(usage(format!(
                    "{} cannot resume from a {} snapshot",
                    a.learner,
                    snap.kind.as_str()
                )));
            }
            learner_from_snapshot(a.learner, &snap, schedule, cfg.corpus_size, a.seed, pool)?
        }
        None => build_learner(
            a.learner,
            hyper,
            train.vocab_size(),
            schedule,
            cfg.corpus_size,
            a.seed,
            pool,
        )
        .map_err(|e| usage(e.to_string()))?,
    };

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut metrics = create(&a.out.join(METRICS_FILE))?;
    writeln!(metrics, "{METRICS_HEADER}")?;
    let mut on_record = |r: &MetricsRecord| -> ope_core::Result<()> {
        log::info!(
            "step {}: lpp {:.4}, npmi {:.4}",
            r.step,
            r.log_predictive_probability,
            r.npmi
        );
        writeln!(metrics, "{}", r.csv_row())?;
        metrics.flush()?;
        Ok(())
    };

    let setup = test.as_ref().map(|t| {
        let mut s = EvalSetup::new(t, &train);
        s.lpp = lpp_config(&a.lpp, a.seed);
        s.npmi_top = a.lpp.npmi_top;
        s
    });
    let outcome = continue_learner(learner, &train, &cfg, &infer, setup.as_ref(), &mut on_record)?;
    metrics.flush()?;

    let mut out = create(&a.out.join(SNAPSHOT_FILE))?;
    outcome.snapshot().write(&mut out)?;
    out.flush()?;
    if let Some(vocab) = train.vocabulary() {
        let mut out = create(&a.out.join(TOPICS_FILE))?;
        outcome
            .topics()
            .write_top_terms(vocab, a.top_terms.min(train.vocab_size()), &mut out)?;
        out.flush()?;
    }
    log::info!("{} steps; wrote {}", outcome.steps.len(), a.out.display());
    Ok(())
}

pub fn infer(a: InferArgs) -> Result<()> {
    let infer = method(&a.inference)?;
    let ope_cfg = match (&infer, &a.trace) {
        (InferenceMethod::Ope(cfg), _) => Some(*cfg),
        (_, Some(_)) => return Err(usage("--trace is only available with --infer ope")),
        _ => None,
    };
    let pool = workers(a.workers)?;
    let snap = load_snapshot(&a.snapshot)?;
    let corpus = load_corpus(&a.data.corpus, a.data.vocab.as_deref())?;
    check_width(&snap, &corpus)?;
    let beta = snap.topics()?;
    let alpha = a.alpha.unwrap_or(snap.hyper.alpha);

    let docs = corpus.documents();
    let results = if a.trace.is_some() {
        let cfg = ope_cfg.expect("checked above");
        pool.map(docs.len(), |i| {
            let (th, tr) = ope_infer_traced(&docs[i], &beta, alpha, &cfg, derive_seed(a.seed, &[i as u64]))?;
            Ok((th, Some(tr)))
        })?
    } else {
        pool.map(docs.len(), |i| {
            Ok((
                infer.infer(&docs[i], &beta, alpha, derive_seed(a.seed, &[i as u64]))?,
                None,
            ))
        })?
    };

    if let Some(path) = &a.trace {
        let mut t = create(path)?;
        writeln!(t, "doc_id,t,pick,vertex,objective")?;
        for (i, (_, trace)) in results.iter().enumerate() {
            if let Some(trace) = trace {
                trace.write_csv(Some(i), &mut t)?;
            }
        }
        t.flush()?;
    }
    let mut out = output(a.out.as_deref())?;
    write!(out, "doc_id")?;
    for k in 1..=beta.k() {
        write!(out, ",theta_{k}")?;
    }
    writeln!(out)?;
    for (i, (theta, _)) in results.iter().enumerate() {
        write!(out, "{i}")?;
        for x in theta.as_slice() {
            write!(out, ",{x:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let infer = method(&a.inference)?;
    let pool = workers(a.workers)?;
    let snap = load_snapshot(&a.snapshot)?;
    let test = load_corpus(&a.test, None)?;
    check_width(&snap, &test)?;
    let reference = match &a.reference {
        Some(p) => {
            let r = load_corpus(p, None)?;
            check_width(&snap, &r)?;
            Some(r)
        }
        None => None,
    };
    let beta = snap.topics()?;
    let alpha = a.alpha.unwrap_or(snap.hyper.alpha);
    let lpp = log_predictive_probability(&beta, alpha, &test, &infer, &lpp_config(&a.lpp, a.seed), &pool)?;
    let coherence = npmi_on(&beta, reference.as_ref().unwrap_or(&test), a.lpp.npmi_top)?;

    let mut out = output(a.out.as_deref())?;
    writeln!(
        out,
        "log_predictive_probability,npmi,evaluated_docs,skipped_docs,floored_tokens"
    )?;
    writeln!(
        out,
        "{:?},{:?},{},{},{}",
        lpp.value, coherence, lpp.evaluated_docs, lpp.skipped_docs, lpp.floored_tokens
    )?;
    out.flush()?;
    Ok(())
}

fn bench_method(name: &str, iterations: usize) -> Result<InferenceMethod> {
    let m: InferenceMethod = name.parse().map_err(|e: ope_core::Error| usage(e.to_string()))?;
    Ok(match m {
        InferenceMethod::Ope(cfg) => InferenceMethod::Ope(cfg.with_iterations(iterations)),
        InferenceMethod::Vb(mut cfg) => {
            cfg.max_iter = iterations;
            InferenceMethod::Vb(cfg)
        }
        InferenceMethod::Cgs(_) => InferenceMethod::Cgs(ope_core::baselines::CgsConfig {
            samples: iterations,
            burn_in: iterations / 2,
        }),
    })
}

pub fn bench(a: BenchArgs) -> Result<()> {
    workers(a.workers)?;
    let hyper = hyper(a.k, a.alpha, a.eta)?;
    let schedule = StepSchedule::new(a.tau, a.kappa).map_err(|e| usage(e.to_string()))?;
    let cells: Vec<BenchCell> = if a.learners.is_empty() && a.methods.is_empty() {
        ope_core::harness::default_cells()
            .into_iter()
            .map(|c| {
                Ok(BenchCell::new(
                    c.learner,
                    bench_method(c.method.as_str(), a.iterations)?,
                ))
            })
            .collect::<Result<_>>()?
    } else {
        let learners = if a.learners.is_empty() {
            LearnerKind::ALL.to_vec()
        } else {
            a.learners.clone()
        };
        let methods = if a.methods.is_empty() {
            vec!["ope".to_string(), "vb".to_string()]
        } else {
            a.methods.clone()
        };
        let mut cells = Vec::new();
        for &l in &learners {
            for m in &methods {
                cells.push(BenchCell::new(l, bench_method(m, a.iterations)?));
            }
        }
        cells
    };

    let corpus = load_corpus(&a.data.corpus, a.data.vocab.as_deref())?;
    let mut train = TrainConfig::new(LearnerKind::OnlineOpe, hyper);
    train.schedule = schedule;
    train.batch_size = a.batch_size;
    train.passes = a.passes;
    train.eval_every = a.eval_every;
    train.seed = a.seed;
    train.workers = a.workers;
    let cfg = BenchConfig {
        cells,
        train,
        test_size: a.test_size,
        split_seed: a.seed,
        lpp: lpp_config(&a.lpp, a.seed),
        npmi_top: a.lpp.npmi_top,
    };
    let report = run_bench(&corpus, &cfg).map_err(|e| usage(e.to_string()))?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut f = create(&a.out.join(COMBINED_FILE))?;
    report.write_combined_csv(&mut f)?;
    f.flush()?;
    let mut f = create(&a.out.join(TIMING_FILE))?;
    report.write_timing_csv(&mut f)?;
    f.flush()?;
    let mut f = create(&a.out.join(STATUS_FILE))?;
    report.write_status_csv(&mut f)?;
    f.flush()?;

    for method in ["ope", "vb", "cgs"] {
        if let Some(s) = report.mean_infer_seconds(method) {
            log::info!("{method}: {:.3e} s per document", s);
        }
    }
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    if failed == report.cells.len() {
        bail!("every bench cell failed; see {}", a.out.join(STATUS_FILE).display());
    }
    if failed > 0 {
        log::warn!("{failed} of {} cells failed; see {STATUS_FILE}", report.cells.len());
    }
    Ok(())
}

pub fn stability(a: StabilityArgs) -> Result<()> {
    let pool = workers(a.workers)?;
    let snap = load_snapshot(&a.snapshot)?;
    let mut corpus = load_corpus(&a.data.corpus, a.data.vocab.as_deref())?;
    check_width(&snap, &corpus)?;
    if let Some(n) = a.limit {
        corpus = corpus.subset(&(0..n.min(corpus.len())).collect::<Vec<_>>());
    }
    let beta: TopicMatrix = snap.topics()?;
    let cfg = StabilityConfig {
        runs: a.runs,
        iterations: a.iterations.clone(),
        init: Init::from(a.init),
        distinct_seeds: !a.same_seed,
        seed: a.seed,
        epsilon: a.epsilon,
    };
    let report =
        stability_report(&corpus, &beta, a.alpha.unwrap_or(snap.hyper.alpha), &cfg, &pool).map_err(|e| match e {
            ope_core::Error::InvalidArgument(m) => usage(m),
            other => other.into(),
        })?;
    let mut out = output(a.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    log::info!(
        "{}/{} rows with std <= 1% of |mean|",
        report.count_within(0.01),
        report.rows.len()
    );
    Ok(())
}
