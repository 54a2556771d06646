//! Online MAP estimation (OPE).
//!
//! OPE maximizes an objective of the form `f(x) = g1(x) + g2(x)` over the
//! truncated simplex `{x : Σx = 1, x ≥ ε}`. At iteration `t` one of the two
//! components is picked uniformly at random; with `a_t` and `b_t` counting
//! the picks so far, the averaged surrogate `F_t = (2/t)(a_t g1 + b_t g2)`
//! supplies the gradient. The iterate moves toward the vertex maximizing
//! `<F'_t(x_t), ·>` with step `1/t`.
//!
//! For LDA, `g1(θ) = Σ_j d_j log Σ_k θ_k β_kj` and
//! `g2(θ) = (α − 1) Σ_k log θ_k`, which is MAP inference of the topic
//! mixture of one document.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use crate::corpus::Document;
use crate::error::{Component, Error, Result};
use crate::model::TopicMatrix;
use crate::rng::{rng_for, Rng};

pub const DEFAULT_ITERATIONS: usize = 50;
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// `{x ∈ R^K : Σx = 1, x ≥ ε}` with `K·ε < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSimplex {
    k: usize,
    epsilon: f64,
}

impl TruncatedSimplex {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("simplex dimension must be at least 1".into()));
        }
        if epsilon.is_nan() || epsilon <= 0.0 || k as f64 * epsilon >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must satisfy 0 < epsilon and K*epsilon < 1 (K={k}, epsilon={epsilon})"
            )));
        }
        Ok(Self { k, epsilon })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Value of the dominant coordinate of a vertex, `1 − (K−1)ε`.
    pub fn vertex_peak(&self) -> f64 {
        1.0 - (self.k - 1) as f64 * self.epsilon
    }

    pub fn vertex(&self, index: usize) -> Vec<f64> {
        let mut v = vec![self.epsilon; self.k];
        v[index] = self.vertex_peak();
        v
    }

    pub fn center(&self) -> Vec<f64> {
        vec![1.0 / self.k as f64; self.k]
    }

    /// Maps a point of the full simplex into the truncated one.
    pub fn shrink(&self, x: &[f64]) -> Vec<f64> {
        let scale = 1.0 - self.k as f64 * self.epsilon;
        x.iter().map(|&v| self.epsilon + scale * v).collect()
    }

    pub fn contains(&self, x: &[f64], sum_tol: f64) -> bool {
        x.len() == self.k && x.iter().all(|&v| v >= self.epsilon) && (x.iter().sum::<f64>() - 1.0).abs() <= sum_tol
    }
}

/// A point of the topic simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMixture(Vec<f64>);

impl TopicMixture {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for TopicMixture {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_lowest(g: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in g.iter().enumerate().skip(1) {
        if x > g[best] {
            best = k;
        }
    }
    best
}

/// The vertex of `domain` solving `max <g, x>`.
pub fn vertex_argmax(g: &[f64], domain: &TruncatedSimplex) -> TopicMixture {
    TopicMixture(domain.vertex(argmax_lowest(g)))
}

/// Starting point `x_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// The center `(1/K, …, 1/K)`.
    #[default]
    Center,
    /// A uniform draw from the simplex, shrunk into the truncated simplex.
    Random,
}

/// Weight given to the new vertex at iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// `1/(t+1)`: the starting point counts as the first averaged point,
    /// so `x_{T+1} = (x_1 + e_1 + … + e_T) / (T+1)`.
    #[default]
    Anchored,
    /// `1/t`: `x_2 = e_1` and the starting point is forgotten after one step.
    Harmonic,
}

impl StepRule {
    #[inline]
    fn weight(self, t: usize) -> f64 {
        match self {
            StepRule::Anchored => 1.0 / (t + 1) as f64,
            StepRule::Harmonic => 1.0 / t as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpeConfig {
    /// Iteration budget `T`; there is no convergence test.
    pub iterations: usize,
    pub epsilon: f64,
    pub init: Init,
    pub step: StepRule,
}

impl Default for OpeConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            init: Init::Center,
            step: StepRule::Anchored,
        }
    }
}

impl OpeConfig {
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_step(mut self, step: StepRule) -> Self {
        self.step = step;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// An objective `f = g1 + g2` on the truncated simplex.
pub trait TwoTermObjective {
    fn dim(&self) -> usize;
    fn g1(&self, x: &[f64]) -> f64;
    fn g2(&self, x: &[f64]) -> f64;
    fn grad_g1(&self, x: &[f64], out: &mut [f64]);
    fn grad_g2(&self, x: &[f64], out: &mut [f64]);

    fn value(&self, x: &[f64]) -> f64 {
        self.g1(x) + self.g2(x)
    }
}

/// A [`TwoTermObjective`] assembled from closures.
pub struct FnObjective<G1, D1, G2, D2> {
    pub dim: usize,
    pub g1: G1,
    pub grad_g1: D1,
    pub g2: G2,
    pub grad_g2: D2,
}

impl<G1, D1, G2, D2> TwoTermObjective for FnObjective<G1, D1, G2, D2>
where
    G1: Fn(&[f64]) -> f64,
    D1: Fn(&[f64]) -> Vec<f64>,
    G2: Fn(&[f64]) -> f64,
    D2: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn g1(&self, x: &[f64]) -> f64 {
        (self.g1)(x)
    }
    fn g2(&self, x: &[f64]) -> f64 {
        (self.g2)(x)
    }
    fn grad_g1(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&(self.grad_g1)(x));
    }
    fn grad_g2(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&(self.grad_g2)(x));
    }
}

/// One iteration of a traced run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub pick: Component,
    /// `a_t`: g1 picks in iterations `1..=t`.
    pub g1_picks: u64,
    /// `b_t`: g2 picks in iterations `1..=t`.
    pub g2_picks: u64,
    pub vertex: usize,
    /// `‖x_{t+1} − x_t‖₁`.
    pub step_l1: f64,
    /// `f(x_{t+1})`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpeTrace {
    pub initial_objective: f64,
    pub steps: Vec<TraceStep>,
}

impl OpeTrace {
    /// Rows `t,pick,vertex,objective`. With `doc_id`, a leading `doc_id`
    /// column is added and no header is written.
    pub fn write_csv<W: Write>(&self, doc_id: Option<usize>, mut out: W) -> Result<()> {
        match doc_id {
            None => {
                writeln!(out, "t,pick,vertex,objective")?;
                for s in &self.steps {
                    writeln!(out, "{},{},{},{:?}", s.t, s.pick, s.vertex, s.objective)?;
                }
            }
            Some(d) => {
                for s in &self.steps {
                    writeln!(out, "{d},{},{},{},{:?}", s.t, s.pick, s.vertex, s.objective)?;
                }
            }
        }
        Ok(())
    }
}

fn initial_point(domain: &TruncatedSimplex, init: Init, rng: &mut Rng) -> Vec<f64> {
    match init {
        Init::Center => domain.center(),
        Init::Random => {
            let draws: Vec<f64> = (0..domain.k()).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = draws.iter().sum();
            let u: Vec<f64> = draws.iter().map(|x| x / s).collect();
            domain.shrink(&u)
        }
    }
}

fn check_finite(component: Component, grad: &[f64], x: &[f64]) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            component,
            point: x.to_vec(),
        })
    }
}

fn run<O: TwoTermObjective + ?Sized>(
    objective: &O,
    domain: &TruncatedSimplex,
    cfg: &OpeConfig,
    seed: u64,
    mut trace: Option<&mut OpeTrace>,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let k = domain.k();
    if objective.dim() != k {
        return Err(Error::DimensionMismatch {
            what: "objective dimension",
            expected: k,
            found: objective.dim(),
        });
    }
    let mut rng = rng_for(seed, &[]);
    let mut x = initial_point(domain, cfg.init, &mut rng);
    if let Some(tr) = trace.as_deref_mut() {
        tr.initial_objective = objective.value(&x);
        tr.steps.reserve(cfg.iterations);
    }
    let eps = domain.epsilon();
    let peak = domain.vertex_peak();
    let mut grad1 = vec![0.0; k];
    let mut grad2 = vec![0.0; k];
    let mut surrogate = vec![0.0; k];
    let (mut a, mut b) = (0u64, 0u64);

    for t in 1..=cfg.iterations {
        let pick = if rng.random::<bool>() {
            a += 1;
            Component::G1
        } else {
            b += 1;
            Component::G2
        };
        if a > 0 {
            objective.grad_g1(&x, &mut grad1);
            check_finite(Component::G1, &grad1, &x)?;
        }
        if b > 0 {
            objective.grad_g2(&x, &mut grad2);
            check_finite(Component::G2, &grad2, &x)?;
        }
        let scale = 2.0 / t as f64;
        let (wa, wb) = (a as f64, b as f64);
        for i in 0..k {
            let mut s = 0.0;
            if a > 0 {
                s += wa * grad1[i];
            }
            if b > 0 {
                s += wb * grad2[i];
            }
            surrogate[i] = scale * s;
        }
        let vertex = argmax_lowest(&surrogate);

        let w = cfg.step.weight(t);
        let mut moved = 0.0;
        for (i, xi) in x.iter_mut().enumerate() {
            let e = if i == vertex { peak } else { eps };
            let next = (*xi + (e - *xi) * w).max(eps);
            moved += (next - *xi).abs();
            *xi = next;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.steps.push(TraceStep {
                t,
                pick,
                g1_picks: a,
                g2_picks: b,
                vertex,
                step_l1: moved,
                objective: objective.value(&x),
            });
        }
    }
    Ok(x)
}

/// Maximizes `g1 + g2` over `domain` with OPE. Deterministic given `seed`.
pub fn two_term_maximize<O: TwoTermObjective + ?Sized>(
    objective: &O,
    domain: &TruncatedSimplex,
    cfg: &OpeConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    run(objective, domain, cfg, seed, None)
}

pub fn two_term_maximize_traced<O: TwoTermObjective + ?Sized>(
    objective: &O,
    domain: &TruncatedSimplex,
    cfg: &OpeConfig,
    seed: u64,
) -> Result<(Vec<f64>, OpeTrace)> {
    let mut trace = OpeTrace::default();
    let x = run(objective, domain, cfg, seed, Some(&mut trace))?;
    Ok((x, trace))
}

/// The per-document MAP objective with the document's columns of `β`
/// gathered term-major for locality.
#[derive(Debug, Clone)]
pub struct LdaObjective {
    k: usize,
    alpha: f64,
    counts: Vec<f64>,
    /// `cols[j*K + k] = β_{k, term_j}`.
    cols: Vec<f64>,
}

impl LdaObjective {
    pub fn new(doc: &Document, beta: &TopicMatrix, alpha: f64) -> Result<Self> {
        let k = beta.k();
        let mut cols = Vec::with_capacity(doc.num_terms() * k);
        let mut counts = Vec::with_capacity(doc.num_terms());
        for (term, count) in doc.iter() {
            let j = term as usize;
            if j >= beta.v() {
                return Err(Error::InvalidArgument(format!(
                    "term {term} outside vocabulary of size {}",
                    beta.v()
                )));
            }
            let start = cols.len();
            cols.extend((0..k).map(|r| beta.get(r, j)));
            if cols[start..].iter().all(|&x| x == 0.0) {
                return Err(Error::DegenerateSupport { term });
            }
            counts.push(count as f64);
        }
        Ok(Self { k, alpha, counts, cols })
    }

    #[inline]
    fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.k..(j + 1) * self.k]
    }

    #[inline]
    fn dot(col: &[f64], x: &[f64]) -> f64 {
        col.iter().zip(x).map(|(b, t)| b * t).sum()
    }

    /// `g1(θ)`, or the term whose probability vanishes at `θ`.
    pub fn try_g1(&self, x: &[f64]) -> Result<f64, u32> {
        let mut s = 0.0;
        for (j, &c) in self.counts.iter().enumerate() {
            let p = Self::dot(self.column(j), x);
            if p <= 0.0 {
                return Err(j as u32);
            }
            s += c * p.ln();
        }
        Ok(s)
    }
}

impl TwoTermObjective for LdaObjective {
    fn dim(&self) -> usize {
        self.k
    }

    fn g1(&self, x: &[f64]) -> f64 {
        self.try_g1(x).unwrap_or(f64::NEG_INFINITY)
    }

    fn g2(&self, x: &[f64]) -> f64 {
        (self.alpha - 1.0) * x.iter().map(|v| v.ln()).sum::<f64>()
    }

    fn grad_g1(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &c) in self.counts.iter().enumerate() {
            let col = self.column(j);
            let w = c / Self::dot(col, x);
            for (o, b) in out.iter_mut().zip(col) {
                *o += w * b;
            }
        }
    }

    fn grad_g2(&self, x: &[f64], out: &mut [f64]) {
        let a = self.alpha - 1.0;
        for (o, v) in out.iter_mut().zip(x) {
            *o = a / v;
        }
    }
}

fn check_theta(theta: &[f64], beta: &TopicMatrix) -> Result<()> {
    if theta.len() != beta.k() {
        return Err(Error::DimensionMismatch {
            what: "topic mixture length",
            expected: beta.k(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// `f(θ) = Σ_j d_j log <θ, β_·j> + (α − 1) Σ_k log θ_k`.
pub fn objective(theta: &[f64], doc: &Document, beta: &TopicMatrix, alpha: f64) -> Result<f64> {
    check_theta(theta, beta)?;
    let obj = LdaObjective::new(doc, beta, alpha)?;
    let g1 = obj.try_g1(theta).map_err(|j| Error::DegenerateSupport {
        term: doc.terms()[j as usize],
    })?;
    Ok(g1 + obj.g2(theta))
}

/// `∂g1/∂θ_k = Σ_j d_j β_kj / <θ, β_·j>`.
pub fn grad_g1(theta: &[f64], doc: &Document, beta: &TopicMatrix) -> Result<Vec<f64>> {
    check_theta(theta, beta)?;
    let obj = LdaObjective::new(doc, beta, 1.0)?;
    if let Err(j) = obj.try_g1(theta) {
        return Err(Error::DegenerateSupport {
            term: doc.terms()[j as usize],
        });
    }
    let mut out = vec![0.0; beta.k()];
    obj.grad_g1(theta, &mut out);
    Ok(out)
}

/// `∂g2/∂θ_k = (α − 1) / θ_k`.
pub fn grad_g2(theta: &[f64], alpha: f64) -> Vec<f64> {
    theta.iter().map(|t| (alpha - 1.0) / t).collect()
}

fn trivial_mixture(doc: &Document, k: usize) -> Option<TopicMixture> {
    if k == 1 {
        Some(TopicMixture(vec![1.0]))
    } else if doc.is_empty() {
        Some(TopicMixture::uniform(k))
    } else {
        None
    }
}

/// MAP estimate of the topic mixture of `doc`. Never modifies `beta`.
pub fn ope_infer(doc: &Document, beta: &TopicMatrix, alpha: f64, cfg: &OpeConfig, seed: u64) -> Result<TopicMixture> {
    if let Some(m) = trivial_mixture(doc, beta.k()) {
        cfg.validate()?;
        return Ok(m);
    }
    let domain = TruncatedSimplex::new(beta.k(), cfg.epsilon)?;
    let obj = LdaObjective::new(doc, beta, alpha)?;
    run(&obj, &domain, cfg, seed, None).map(TopicMixture)
}

/// [`ope_infer`] with a per-iteration trace. Documents that need no
/// iterations (`K = 1` or empty) return an empty trace.
pub fn ope_infer_traced(
    doc: &Document,
    beta: &TopicMatrix,
    alpha: f64,
    cfg: &OpeConfig,
    seed: u64,
) -> Result<(TopicMixture, OpeTrace)> {
    if let Some(m) = trivial_mixture(doc, beta.k()) {
        cfg.validate()?;
        return Ok((m, OpeTrace::default()));
    }
    let domain = TruncatedSimplex::new(beta.k(), cfg.epsilon)?;
    let obj = LdaObjective::new(doc, beta, alpha)?;
    let mut trace = OpeTrace::default();
    let x = run(&obj, &domain, cfg, seed, Some(&mut trace))?;
    Ok((TopicMixture(x), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn beta2() -> TopicMatrix {
        TopicMatrix::from_rows(2, 2, vec![0.6, 0.4, 0.2, 0.8]).unwrap()
    }

    #[test]
    fn objective_examples() {
        let d = Document::from_pairs([(0, 1), (1, 1)]);
        let f = objective(&[0.5, 0.5], &d, &beta2(), 1.0).unwrap();
        assert_abs_diff_eq!(f, 0.4f64.ln() + 0.6f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f, -1.42712, epsilon = 1e-5);

        assert_eq!(
            objective(&[0.5, 0.5], &Document::default(), &beta2(), 1.0).unwrap(),
            0.0
        );

        let d = Document::from_pairs([(0, 2)]);
        let f = objective(&[0.5, 0.5], &d, &beta2(), 0.5).unwrap();
        assert_abs_diff_eq!(f, 2.0 * 0.4f64.ln() - 0.5 * 2.0 * 0.5f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f, -1.13943, epsilon = 1e-5);
    }

    #[test]
    fn degenerate_support() {
        let beta = TopicMatrix::from_rows(2, 3, vec![0.5, 0.5, 0.0, 0.5, 0.5, 0.0]).unwrap();
        let d = Document::from_pairs([(2, 1)]);
        assert!(matches!(
            objective(&[0.5, 0.5], &d, &beta, 1.0),
            Err(Error::DegenerateSupport { term: 2 })
        ));
        assert!(matches!(
            ope_infer(&d, &beta, 0.5, &OpeConfig::default(), 0),
            Err(Error::DegenerateSupport { term: 2 })
        ));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(grad_g2(&[0.5, 0.5], 0.5), vec![-1.0, -1.0]);
        let d = Document::from_pairs([(0, 1)]);
        let g = grad_g1(&[0.5, 0.5], &d, &beta2()).unwrap();
        assert_abs_diff_eq!(g[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn vertex_examples() {
        let dom = TruncatedSimplex::new(3, 0.01).unwrap();
        let v = vertex_argmax(&[3.0, 1.0, 2.0], &dom);
        assert_abs_diff_eq!(v[0], 0.98, epsilon = 1e-15);
        assert_eq!(&v.as_slice()[1..], &[0.01, 0.01]);
        assert_eq!(vertex_argmax(&[2.0, 2.0, 0.0], &dom), v);
        let one = TruncatedSimplex::new(1, 0.01).unwrap();
        assert_eq!(vertex_argmax(&[-5.0], &one).as_slice(), &[1.0]);
    }

    #[test]
    fn simplex_validation() {
        assert!(TruncatedSimplex::new(0, 0.1).is_err());
        assert!(TruncatedSimplex::new(10, 0.1).is_err());
        assert!(TruncatedSimplex::new(10, 0.0).is_err());
        assert!(TruncatedSimplex::new(10, 0.09).is_ok());
    }

    #[test]
    fn single_topic_is_trivial() {
        let beta = TopicMatrix::uniform(1, 4).unwrap();
        let d = Document::from_pairs([(0, 3), (2, 1)]);
        for t in [1, 10, 100] {
            let cfg = OpeConfig::default().with_iterations(t);
            assert_eq!(ope_infer(&d, &beta, 0.3, &cfg, 9).unwrap().as_slice(), &[1.0]);
        }
    }

    #[test]
    fn empty_document_is_uniform() {
        let beta = TopicMatrix::uniform(4, 4).unwrap();
        let m = ope_infer(&Document::default(), &beta, 0.1, &OpeConfig::default(), 0).unwrap();
        assert_eq!(m.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn zero_iterations_rejected() {
        let cfg = OpeConfig::default().with_iterations(0);
        let d = Document::from_pairs([(0, 1)]);
        assert!(ope_infer(&d, &beta2(), 0.5, &cfg, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let d = Document::from_pairs([(0, 3), (1, 1)]);
        let cfg = OpeConfig::default().with_init(Init::Random);
        let a = ope_infer(&d, &beta2(), 0.3, &cfg, 42).unwrap();
        let b = ope_infer(&d, &beta2(), 0.3, &cfg, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_pick_counts() {
        let d = Document::from_pairs([(0, 3), (1, 1)]);
        let (_, trace) = ope_infer_traced(&d, &beta2(), 0.3, &OpeConfig::default().with_iterations(200), 5).unwrap();
        assert_eq!(trace.steps.len(), 200);
        for s in &trace.steps {
            assert_eq!(s.g1_picks + s.g2_picks, s.t as u64);
        }
        let mut out = Vec::new();
        trace.write_csv(None, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("t,pick,vertex,objective\n1,g"));
        assert_eq!(text.lines().count(), 201);
    }

    #[test]
    fn non_finite_component_reported() {
        let obj = FnObjective {
            dim: 2,
            g1: |_: &[f64]| 0.0,
            grad_g1: |_: &[f64]| vec![0.0, 0.0],
            g2: |_: &[f64]| 0.0,
            grad_g2: |_: &[f64]| vec![f64::NAN, 0.0],
        };
        let dom = TruncatedSimplex::new(2, 1e-6).unwrap();
        let cfg = OpeConfig::default().with_iterations(20);
        match two_term_maximize(&obj, &dom, &cfg, 1) {
            Err(Error::NonFinite { component, point }) => {
                assert_eq!(component, Component::G2);
                assert_eq!(point.len(), 2);
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }
}
