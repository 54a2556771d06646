mod common;

use common::{random_beta, random_doc, rng, sharp_beta};
use ope_core::learners::{compute_phi, learner_from_snapshot, run_learner, BatchOrder, Learner, MlOpe, StreamingOpe};
use ope_core::model::Schedule;
use ope_core::synth::{synthesize, SynthConfig};
use ope_core::{
    Corpus, DocBatch, Document, InferenceMethod, LdaHyper, LearnerKind, Snapshot, StepSchedule, TrainConfig,
    VariationalTopics, Workers,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn corpus(seed: u64, d: usize, v: usize) -> Corpus {
    let mut r = rng(seed);
    let docs = (0..d).map(|_| random_doc(v, r.random_range(1..30), &mut r)).collect();
    Corpus::new(docs, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_rows_normalize_and_conserve_tokens(seed in any::<u64>(), k in 1usize..8) {
        let mut r = rng(seed);
        let beta = random_beta(k, 20, &mut r);
        let doc = random_doc(20, 35, &mut r);
        let mut theta: Vec<f64> = (0..k).map(|_| r.random_range(1e-6..1.0)).collect();
        let s: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|x| *x /= s);
        let phi = compute_phi(&theta, &beta, &doc).unwrap();
        let mut mass = 0.0;
        for ((_, row), &c) in phi.rows().zip(doc.counts()) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            mass += c as f64 * row.iter().sum::<f64>();
        }
        prop_assert!((mass - doc.token_count() as f64).abs() <= 1e-9);
    }

    #[test]
    fn ml_ope_rows_stay_stochastic(seed in any::<u64>()) {
        let c = corpus(seed, 30, 15);
        let mut m = MlOpe::new(LdaHyper::new(3, 0.3, 0.1).unwrap(), 15, StepSchedule::default(), seed).unwrap();
        let method = InferenceMethod::ope();
        for t in 0..6u64 {
            let batch = ope_core::corpus::sample_minibatch(&c, 7, seed, t).unwrap();
            m.step(&batch, &method).unwrap();
            for k in 0..3 {
                let row = m.beta().row(k);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(row.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn streaming_mass_grows_by_tokens_consumed(seed in any::<u64>()) {
        let c = corpus(seed, 25, 12);
        let mut s = StreamingOpe::new(LdaHyper::new(4, 0.2, 0.1).unwrap(), 12, seed).unwrap();
        let start = s.lambda().total();
        let mut consumed = 0u64;
        let method = InferenceMethod::ope();
        for t in 0..5u64 {
            let before = s.lambda().clone();
            let batch = ope_core::corpus::sample_minibatch(&c, 6, seed, t).unwrap();
            consumed += batch.token_count();
            s.step(&batch, &method).unwrap();
            for (a, b) in s.lambda().as_slice().iter().zip(before.as_slice()) {
                prop_assert!(a >= b);
            }
            let grown = s.lambda().total() - start;
            prop_assert!((grown - consumed as f64).abs() <= 1e-8 * consumed as f64);
        }
    }

    #[test]
    fn steps_ignore_document_order(seed in any::<u64>()) {
        let c = corpus(seed, 12, 10);
        let mut entries: Vec<(usize, &Document)> = c.documents().iter().enumerate().collect();
        let forward = DocBatch::new(entries.clone()).unwrap();
        entries.shuffle(&mut rng(seed ^ 1));
        let shuffled = DocBatch::new(entries).unwrap();
        for kind in LearnerKind::ALL {
            for method in [InferenceMethod::ope(), InferenceMethod::cgs()] {
                let mk = || ope_core::learners::build_learner(
                    kind, LdaHyper::new(3, 0.2, 0.1).unwrap(), 10, StepSchedule::default(), Some(12), seed, Workers::sequential(),
                ).unwrap();
                let (mut a, mut b) = (mk(), mk());
                a.step(&forward, &method).unwrap();
                b.step(&shuffled, &method).unwrap();
                prop_assert_eq!(a.snapshot(), b.snapshot());
            }
        }
    }
}

#[test]
fn online_lambda_keeps_positive_floor() {
    let c = corpus(4, 40, 10);
    let hyper = LdaHyper::new(3, 0.2, 0.05).unwrap();
    let mut o = ope_core::learners::OnlineOpe::new(hyper, 10, 40, StepSchedule::default(), 1).unwrap();
    let method = InferenceMethod::ope();
    for t in 0..10 {
        let prev_min = o.lambda().as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        let batch = ope_core::corpus::sample_minibatch(&c, 8, 3, t).unwrap();
        o.step(&batch, &method).unwrap();
        let min = o.lambda().as_slice().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= prev_min.min(0.05) - 1e-15);
    }
}

#[test]
fn ml_ope_state_bounded_while_streaming_grows_linearly() {
    let c = corpus(5, 200, 20);
    let hyper = LdaHyper::new(3, 0.2, 0.1).unwrap();
    let method = InferenceMethod::ope();
    let mut ml = MlOpe::new(hyper, 20, StepSchedule::default(), 0).unwrap();
    let mut st = StreamingOpe::new(hyper, 20, 0).unwrap();
    let init = st.lambda().total();
    let mut tokens = 0u64;
    for t in 0..20 {
        let batch = DocBatch::from_range(&c, t * 10..(t + 1) * 10).unwrap();
        tokens += batch.token_count();
        ml.step(&batch, &method).unwrap();
        st.step(&batch, &method).unwrap();
        let ml_total: f64 = ml.beta().as_slice().iter().sum();
        assert!((ml_total - 3.0).abs() <= 1e-9);
        assert!((st.lambda().total() - init - tokens as f64).abs() <= 1e-8 * tokens as f64);
    }
}

#[test]
fn resuming_from_snapshot_continues_identically() {
    let c = corpus(8, 60, 15);
    let hyper = LdaHyper::new(3, 0.2, 0.1).unwrap();
    let method = InferenceMethod::ope();
    for kind in LearnerKind::ALL {
        let mut straight = ope_core::learners::build_learner(
            kind,
            hyper,
            15,
            StepSchedule::default(),
            Some(60),
            2,
            Workers::sequential(),
        )
        .unwrap();
        let batches: Vec<DocBatch> = (0..4)
            .map(|t| DocBatch::from_range(&c, t * 15..(t + 1) * 15).unwrap())
            .collect();
        straight.step(&batches[0], &method).unwrap();
        straight.step(&batches[1], &method).unwrap();
        let mut buf = Vec::new();
        straight.snapshot().write(&mut buf).unwrap();
        let snap = Snapshot::read(&buf[..]).unwrap();
        let mut resumed =
            learner_from_snapshot(kind, &snap, StepSchedule::default(), Some(60), 2, Workers::sequential()).unwrap();
        for b in &batches[2..] {
            straight.step(b, &method).unwrap();
            resumed.step(b, &method).unwrap();
        }
        assert_eq!(straight.snapshot(), resumed.snapshot(), "{kind}");
    }
}

#[test]
fn vb_and_cgs_variants_train() {
    let c = corpus(10, 50, 12);
    for method in [InferenceMethod::vb(), InferenceMethod::cgs()] {
        for kind in LearnerKind::ALL {
            let mut cfg = TrainConfig::new(kind, LdaHyper::new(3, 0.3, 0.1).unwrap());
            cfg.batch_size = 10;
            cfg.eval_every = 0;
            let out = run_learner(&c, &cfg, &method, None).unwrap();
            assert_eq!(out.steps.len(), 5);
        }
    }
}

#[test]
fn sequential_single_pass_step_count() {
    let c = corpus(12, 103, 8);
    let mut cfg = TrainConfig::new(LearnerKind::StreamingOpe, LdaHyper::new(2, 0.5, 0.1).unwrap());
    cfg.order = BatchOrder::Sequential;
    cfg.batch_size = 10;
    cfg.eval_every = 0;
    let out = run_learner(&c, &cfg, &InferenceMethod::ope(), None).unwrap();
    assert_eq!(out.steps.len(), 11);
    assert_eq!(out.steps.iter().map(|s| s.docs).sum::<usize>(), 103);
}

#[test]
fn custom_schedule_plugs_in() {
    struct Half;
    impl Schedule for Half {
        fn step_size(&self, _: u64) -> f64 {
            0.5
        }
    }
    let mut r = rng(1);
    let beta = sharp_beta(2, 6, &mut r);
    let doc = random_doc(6, 10, &mut r);
    let batch = DocBatch::new(vec![(0, &doc)]).unwrap();
    let hyper = LdaHyper::new(2, 0.5, 0.1).unwrap();
    let mut m = MlOpe::from_beta(beta, hyper, Half, 0).unwrap();
    m.step(&batch, &InferenceMethod::ope()).unwrap();
    assert_eq!(m.steps(), 1);
    let lambda = VariationalTopics::new(2, 6, vec![1.0; 12]).unwrap();
    let mut o = ope_core::learners::OnlineOpe::from_lambda(lambda, hyper, 10, Half, 0).unwrap();
    o.step(&batch, &InferenceMethod::ope()).unwrap();
    assert_eq!(o.steps(), 1);
}

#[test]
fn single_topic_synthetic_frequencies_estimate_the_topic() {
    let mut cfg = SynthConfig::new(1, 50, 10_000, 100);
    cfg.seed = 3;
    let s = synthesize(&cfg).unwrap();
    let mut freq = vec![0.0; 50];
    let mut total = 0.0;
    for d in s.corpus.documents() {
        for (j, c) in d.iter() {
            freq[j as usize] += c as f64;
            total += c as f64;
        }
    }
    assert!(total >= 1e6);
    let l1: f64 = freq.iter().zip(s.beta.row(0)).map(|(f, b)| (f / total - b).abs()).sum();
    assert!(l1 <= 0.01, "L1 {l1}");
}

#[test]
fn large_alpha_gives_near_uniform_mixtures() {
    let mut cfg = SynthConfig::new(5, 30, 200, 10);
    cfg.alpha = 1e4;
    let s = synthesize(&cfg).unwrap();
    let mean_l1: f64 = s
        .thetas
        .iter()
        .map(|t| t.iter().map(|x| (x - 0.2).abs()).sum::<f64>())
        .sum::<f64>()
        / s.thetas.len() as f64;
    assert!(mean_l1 < 0.02, "mean L1 {mean_l1}");
}
