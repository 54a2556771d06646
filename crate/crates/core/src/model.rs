//! Global model state: hyperparameters, topic matrices, the step-size
//! schedule and the plain-text snapshot format.

use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::corpus::Vocabulary;
use crate::error::{format_err, Error, Result};
use crate::rng::Rng;

/// Rows whose mass falls below this are replaced by the uniform row.
pub const ROW_SUM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaHyper {
    pub k: usize,
    pub alpha: f64,
    pub eta: f64,
}

impl LdaHyper {
    pub fn new(k: usize, alpha: f64, eta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { k, alpha, eta })
    }

    /// `alpha = eta = 1/K`.
    pub fn symmetric(k: usize) -> Result<Self> {
        let inv = 1.0 / k.max(1) as f64;
        Self::new(k, inv, inv)
    }
}

/// Dense `K x V` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
struct Dense {
    k: usize,
    v: usize,
    data: Vec<f64>,
}

impl Dense {
    fn new(k: usize, v: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || v == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {k}x{v}"
            )));
        }
        if data.len() != k * v {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: k * v,
                found: data.len(),
            });
        }
        Ok(Self { k, v, data })
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.v..(k + 1) * self.v]
    }
}

/// `K` topics, each a probability distribution over `V` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatrix(Dense);

impl TopicMatrix {
    /// Wraps already row-stochastic data. Rows must be nonnegative and sum
    /// to one within `1e-9`.
    pub fn from_rows(k: usize, v: usize, data: Vec<f64>) -> Result<Self> {
        let dense = Dense::new(k, v, data)?;
        for r in 0..k {
            let row = dense.row(r);
            if row.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "topic {r} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("topic {r} sums to {s}, not 1")));
            }
        }
        Ok(Self(dense))
    }

    /// Caller guarantees rows are already stochastic.
    pub(crate) fn from_raw(k: usize, v: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), k * v);
        Self(Dense { k, v, data })
    }

    pub fn uniform(k: usize, v: usize) -> Result<Self> {
        Self::from_rows(k, v, vec![1.0 / v as f64; k * v])
    }

    /// Random point of `Δ_V` per row: i.i.d. `Uniform(0.01, 1.01)` entries,
    /// normalized.
    pub fn random(k: usize, v: usize, rng: &mut Rng) -> Result<Self> {
        let data = (0..k * v).map(|_| rng.random_range(0.01..1.01)).collect();
        normalize_rows(k, v, data)
    }

    pub fn k(&self) -> usize {
        self.0.k
    }

    pub fn v(&self) -> usize {
        self.0.v
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.0.row(k)
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.0.data[k * self.0.v + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0.data
    }

    /// Term ids of the `n` most probable terms of topic `k`; ties go to the
    /// lower term id.
    pub fn top_terms(&self, k: usize, n: usize) -> Vec<u32> {
        let row = self.row(k);
        let mut ids: Vec<u32> = (0..self.v() as u32).collect();
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// Writes `topic_id,rank,term,probability` rows for the top `n` terms
    /// of every topic.
    pub fn write_top_terms<W: Write>(&self, vocab: &Vocabulary, n: usize, mut out: W) -> Result<()> {
        if vocab.len() != self.v() {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: self.v(),
                found: vocab.len(),
            });
        }
        writeln!(out, "topic_id,rank,term,probability")?;
        for k in 0..self.k() {
            for (rank, t) in self.top_terms(k, n).into_iter().enumerate() {
                let term = vocab.term(t as usize).unwrap_or_default();
                writeln!(out, "{k},{},{},{}", rank + 1, csv_field(term), self.get(k, t as usize))?;
            }
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Divides every row by its sum. A row with sum below [`ROW_SUM_FLOOR`]
/// becomes uniform.
pub fn normalize_rows(k: usize, v: usize, mut data: Vec<f64>) -> Result<TopicMatrix> {
    if k == 0 || v == 0 || data.len() != k * v {
        return Err(Error::DimensionMismatch {
            what: "matrix entries",
            expected: k * v,
            found: data.len(),
        });
    }
    let uniform = 1.0 / v as f64;
    for row in data.chunks_exact_mut(v) {
        if row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "cannot normalize negative or non-finite entries".into(),
            ));
        }
        let s: f64 = row.iter().sum();
        if s < ROW_SUM_FLOOR {
            row.fill(uniform);
        } else {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    Ok(TopicMatrix(Dense { k, v, data }))
}

/// Strictly positive `K x V` variational Dirichlet parameters over topics.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalTopics(Dense);

impl VariationalTopics {
    pub fn new(k: usize, v: usize, data: Vec<f64>) -> Result<Self> {
        let dense = Dense::new(k, v, data)?;
        if dense.data.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidArgument(
                "variational topics must be strictly positive".into(),
            ));
        }
        Ok(Self(dense))
    }

    /// i.i.d. `Uniform(0.01, 1.01)` entries.
    pub fn random(k: usize, v: usize, rng: &mut Rng) -> Result<Self> {
        let data = (0..k * v).map(|_| rng.random_range(0.01..1.01)).collect();
        Self::new(k, v, data)
    }

    pub fn k(&self) -> usize {
        self.0.k
    }

    pub fn v(&self) -> usize {
        self.0.v
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.0.row(k)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0.data
    }

    pub fn total(&self) -> f64 {
        self.0.data.iter().sum()
    }
}

/// Expected topics `E[β_k] ∝ λ_k`.
pub fn topics_from_lambda(lambda: &VariationalTopics) -> TopicMatrix {
    normalize_rows(lambda.k(), lambda.v(), lambda.as_slice().to_vec())
        .expect("positive finite entries always normalize")
}

/// Step size of a global update at step `t >= 1`.
pub trait Schedule {
    fn step_size(&self, t: u64) -> f64;
}

/// `ρ_t = (t + τ)^(−κ)` with `τ > 0` and `κ ∈ (0.5, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    tau: f64,
    kappa: f64,
}

impl StepSchedule {
    pub fn new(tau: f64, kappa: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        if !(kappa > 0.5 && kappa <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be in (0.5, 1], got {kappa}"
            )));
        }
        Ok(Self { tau, kappa })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { tau: 1.0, kappa: 0.9 }
    }
}

impl Schedule for StepSchedule {
    fn step_size(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        (t as f64 + self.tau).powf(-self.kappa)
    }
}

pub fn step_size(t: u64, schedule: &StepSchedule) -> f64 {
    schedule.step_size(t)
}

pub const SNAPSHOT_MAGIC: &str = "OPE-LDA-SNAPSHOT";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Which global matrix a snapshot stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    /// Row-stochastic topics (ML-OPE, synthetic ground truth).
    Beta,
    /// Variational parameters (Online-OPE, Streaming-OPE).
    Lambda,
}

impl SnapshotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SnapshotKind::Beta => "beta",
            SnapshotKind::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub hyper: LdaHyper,
    pub v: usize,
    /// Learner step count when the snapshot was taken.
    pub step: u64,
    /// `K x V` row-major entries.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_beta(beta: &TopicMatrix, hyper: LdaHyper, step: u64) -> Self {
        Self {
            kind: SnapshotKind::Beta,
            hyper,
            v: beta.v(),
            step,
            values: beta.as_slice().to_vec(),
        }
    }

    pub fn from_lambda(lambda: &VariationalTopics, hyper: LdaHyper, step: u64) -> Self {
        Self {
            kind: SnapshotKind::Lambda,
            hyper,
            v: lambda.v(),
            step,
            values: lambda.as_slice().to_vec(),
        }
    }

    /// Expected topics: `β` itself, or row-normalized `λ`.
    /// Stored topics as-is for `Beta` snapshots, row-normalized `λ` otherwise.
    pub fn topics(&self) -> Result<TopicMatrix> {
        match self.kind {
            SnapshotKind::Beta => TopicMatrix::from_rows(self.hyper.k, self.v, self.values.clone()),
            SnapshotKind::Lambda => normalize_rows(self.hyper.k, self.v, self.values.clone()),
        }
    }

    pub fn lambda(&self) -> Result<VariationalTopics> {
        VariationalTopics::new(self.hyper.k, self.v, self.values.clone())
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.len() != self.v {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: self.v,
                found: vocab.len(),
            });
        }
        Ok(())
    }

    /// Plain-text encoding. Values use Rust's shortest round-trip decimal
    /// representation, so reading back is bit-exact.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SNAPSHOT_MAGIC}")?;
        writeln!(out, "version {SNAPSHOT_VERSION}")?;
        writeln!(out, "kind {}", self.kind.as_str())?;
        writeln!(out, "K {}", self.hyper.k)?;
        writeln!(out, "V {}", self.v)?;
        writeln!(out, "alpha {:?}", self.hyper.alpha)?;
        writeln!(out, "eta {:?}", self.hyper.eta)?;
        writeln!(out, "t {}", self.step)?;
        for row in self.values.chunks_exact(self.v) {
            let mut first = true;
            for x in row {
                if !first {
                    out.write_all(b" ")?;
                }
                write!(out, "{x:?}")?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((no, l)) => Ok((no, l?)),
                None => Err(format_err(0, format!("truncated snapshot: missing {what}"))),
            }
        };
        let (no, magic) = next("magic")?;
        if magic.trim() != SNAPSHOT_MAGIC {
            return Err(format_err(no, "not a snapshot file"));
        }
        fn field<T: std::str::FromStr>(no: usize, line: &str, key: &str) -> Result<T> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(format_err(no, format!("expected field {key:?}")));
            }
            let value = parts
                .next()
                .ok_or_else(|| format_err(no, format!("missing value for {key:?}")))?;
            value
                .parse()
                .map_err(|_| format_err(no, format!("bad value for {key:?}: {value:?}")))
        }
        let (no, l) = next("version")?;
        let version: u32 = field(no, &l, "version")?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let (no, l) = next("kind")?;
        let kind = match field::<String>(no, &l, "kind")?.as_str() {
            "beta" => SnapshotKind::Beta,
            "lambda" => SnapshotKind::Lambda,
            other => return Err(format_err(no, format!("unknown snapshot kind {other:?}"))),
        };
        let (no, l) = next("K")?;
        let k: usize = field(no, &l, "K")?;
        let (no, l) = next("V")?;
        let v: usize = field(no, &l, "V")?;
        let (no, l) = next("alpha")?;
        let alpha: f64 = field(no, &l, "alpha")?;
        let (no, l) = next("eta")?;
        let eta: f64 = field(no, &l, "eta")?;
        let (no, l) = next("t")?;
        let step: u64 = field(no, &l, "t")?;
        let hyper = LdaHyper::new(k, alpha, eta)?;
        if v == 0 {
            return Err(format_err(no, "V must be positive"));
        }

        let mut values = Vec::with_capacity(k * v);
        for _ in 0..k {
            let (no, l) = next("topic row")?;
            let before = values.len();
            for tok in l.split_whitespace() {
                let x: f64 = tok.parse().map_err(|_| format_err(no, format!("bad value {tok:?}")))?;
                values.push(x);
            }
            if values.len() - before != v {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: v,
                    found: values.len() - before,
                });
            }
        }
        let snapshot = Self {
            kind,
            hyper,
            v,
            step,
            values,
        };
        match kind {
            SnapshotKind::Beta => {
                TopicMatrix::from_rows(k, v, snapshot.values.clone())?;
            }
            SnapshotKind::Lambda => {
                snapshot.lambda()?;
            }
        }
        Ok(snapshot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn step_size_values() {
        let s = StepSchedule::new(1.0, 0.9).unwrap();
        assert_abs_diff_eq!(step_size(1, &s), 2f64.powf(-0.9), epsilon = 1e-15);
        assert_abs_diff_eq!(step_size(1, &s), 0.535887, epsilon = 1e-6);
        let s = StepSchedule::new(1.0, 1.0).unwrap();
        assert_eq!(step_size(3, &s), 0.25);
    }

    #[test]
    fn schedule_validation() {
        assert!(StepSchedule::new(0.0, 0.9).is_err());
        assert!(StepSchedule::new(1.0, 0.5).is_err());
        assert!(StepSchedule::new(1.0, 1.01).is_err());
        assert!(StepSchedule::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn normalize_examples() {
        let m = normalize_rows(1, 2, vec![1.0, 3.0]).unwrap();
        assert_eq!(m.row(0), &[0.25, 0.75]);
        let m = normalize_rows(1, 4, vec![0.0; 4]).unwrap();
        assert_eq!(m.row(0), &[0.25; 4]);
        let row = vec![0.2, 0.3, 0.5];
        let m = normalize_rows(1, 3, row.clone()).unwrap();
        for (a, b) in m.row(0).iter().zip(&row) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_normalization() {
        let l = VariationalTopics::new(1, 3, vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(topics_from_lambda(&l).row(0), &[0.25, 0.25, 0.5]);
        let l = VariationalTopics::new(1, 4, vec![0.3, 7.0, 1.0, 2.5]).unwrap();
        let s: f64 = topics_from_lambda(&l).row(0).iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert!(VariationalTopics::new(1, 2, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn top_terms_tie_break() {
        let m = TopicMatrix::from_rows(1, 4, vec![0.3, 0.2, 0.3, 0.2]).unwrap();
        assert_eq!(m.top_terms(0, 3), vec![0, 2, 1]);
    }

    #[test]
    fn top_terms_csv() {
        let m = TopicMatrix::from_rows(2, 2, vec![0.9, 0.1, 0.4, 0.6]).unwrap();
        let vocab = Vocabulary::new(vec!["x".into(), "y,z".into()]).unwrap();
        let mut out = Vec::new();
        m.write_top_terms(&vocab, 1, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "topic_id,rank,term,probability\n0,1,x,0.9\n1,1,\"y,z\",0.6\n"
        );
    }

    fn sample_snapshot() -> Snapshot {
        let mut rng = rng_for(3, &[]);
        let lambda = VariationalTopics::random(3, 5, &mut rng).unwrap();
        Snapshot::from_lambda(&lambda, LdaHyper::new(3, 1.0 / 3.0, 0.01).unwrap(), 17)
    }

    #[test]
    fn snapshot_round_trip_bitwise() {
        let s = sample_snapshot();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = Snapshot::read(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.values.iter().zip(&s.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.hyper.alpha.to_bits(), s.hyper.alpha.to_bits());
    }

    #[test]
    fn snapshot_truncated() {
        let s = sample_snapshot();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(Snapshot::read(cut.as_bytes()).is_err());
        assert!(Snapshot::read(&b"OPE-LDA-SNAPSHOT\nversion 1\n"[..]).is_err());
    }

    #[test]
    fn snapshot_version_and_vocab_mismatch() {
        let s = sample_snapshot();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("version 1", "version 9");
        assert!(matches!(
            Snapshot::read(text.as_bytes()),
            Err(Error::Version { found: 9, .. })
        ));
        let vocab = Vocabulary::synthetic(4);
        assert!(s.check_vocabulary(&vocab).is_err());
        assert!(s.check_vocabulary(&Vocabulary::synthetic(5)).is_ok());
    }

    proptest! {
        #[test]
        fn normalized_rows_are_stochastic(data in proptest::collection::vec(0.0f64..10.0, 12)) {
            let m = normalize_rows(3, 4, data).unwrap();
            for k in 0..3 {
                let s: f64 = m.row(k).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
            }
        }

        #[test]
        fn lambda_scale_invariance(
            data in proptest::collection::vec(0.01f64..10.0, 6),
            c in 1e-3f64..1e3,
        ) {
            let a = topics_from_lambda(&VariationalTopics::new(2, 3, data.clone()).unwrap());
            let scaled: Vec<f64> = data.iter().map(|x| x * c).collect();
            let b = topics_from_lambda(&VariationalTopics::new(2, 3, scaled).unwrap());
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn step_size_decreasing(tau in 1.0f64..100.0, kappa in 0.51f64..1.0, t in 1u64..10_000) {
            let s = StepSchedule::new(tau, kappa).unwrap();
            prop_assert!(s.step_size(t + 1) < s.step_size(t));
            prop_assert!(s.step_size(t) <= s.step_size(1));
            prop_assert!(s.step_size(1) < 1.0);
        }
    }
}
