//! Bag-of-words corpora: vocabulary files, the UCI `docword` format,
//! train/test splitting, minibatch sampling and token-level holdout splits.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;

use crate::error::{format_err, Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty vocabulary".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), i).is_some() {
                return Err(format_err(i + 1, format!("duplicate term {term:?}")));
            }
        }
        Ok(Self { terms, index })
    }

    /// Synthetic vocabulary `term0 .. term{V-1}`.
    pub fn synthetic(size: usize) -> Self {
        Self::new((0..size).map(|i| format!("term{i}")).collect()).expect("synthetic terms are unique and non-empty")
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for term in &self.terms {
            writeln!(out, "{term}")?;
        }
        Ok(())
    }
}

/// One term per line, in id order.
pub fn parse_vocab<R: BufRead>(reader: R) -> Result<Vocabulary> {
    let mut terms = Vec::new();
    for line in reader.lines() {
        let line = line?;
        terms.push(line.trim_end_matches('\r').to_string());
    }
    if terms.is_empty() {
        return Err(format_err(1, "empty vocabulary file"));
    }
    Vocabulary::new(terms)
}

/// Sparse term-frequency vector. Entries are sorted by term id, ids are
/// unique and every count is at least one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    terms: Vec<u32>,
    counts: Vec<u32>,
}

impl Document {
    /// Builds a document from `(term, count)` pairs. Repeated terms are
    /// merged; zero counts are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
        for (term, count) in pairs {
            if count > 0 {
                *merged.entry(term).or_default() += count;
            }
        }
        let (terms, counts) = merged.into_iter().unzip();
        Self { terms, counts }
    }

    /// Builds a document from a list of token term ids.
    pub fn from_tokens(tokens: &[u32]) -> Self {
        Self::from_pairs(tokens.iter().map(|&t| (t, 1)))
    }

    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.terms.iter().copied().zip(self.counts.iter().copied())
    }

    /// Number of distinct terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Number of tokens, the sum of all counts.
    pub fn token_count(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn count(&self, term: u32) -> u32 {
        match self.terms.binary_search(&term) {
            Ok(i) => self.counts[i],
            Err(_) => 0,
        }
    }

    /// Expands the document into one term id per token, in term order.
    pub fn tokens(&self) -> Vec<u32> {
        self.iter()
            .flat_map(|(t, c)| std::iter::repeat_n(t, c as usize))
            .collect()
    }

    pub fn max_term(&self) -> Option<u32> {
        self.terms.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocab_size: usize,
    vocabulary: Option<Vocabulary>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, vocab_size: usize) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidArgument("vocabulary size must be positive".into()));
        }
        for (i, doc) in documents.iter().enumerate() {
            if let Some(t) = doc.max_term() {
                if t as usize >= vocab_size {
                    return Err(Error::InvalidArgument(format!(
                        "document {i} uses term {t} outside vocabulary of size {vocab_size}"
                    )));
                }
            }
        }
        Ok(Self {
            documents,
            vocab_size,
            vocabulary: None,
        })
    }

    pub fn with_vocabulary(mut self, vocabulary: Vocabulary) -> Result<Self> {
        if vocabulary.len() != self.vocab_size {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: self.vocab_size,
                found: vocabulary.len(),
            });
        }
        self.vocabulary = Some(vocabulary);
        Ok(self)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn doc(&self, i: usize) -> &Document {
        &self.documents[i]
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.vocabulary.as_ref()
    }

    pub fn token_count(&self) -> u64 {
        self.documents.iter().map(Document::token_count).sum()
    }

    /// Corpus made of the documents at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            vocab_size: self.vocab_size,
            vocabulary: self.vocabulary.clone(),
        }
    }

    /// Writes the corpus in UCI bag-of-words format (1-based ids).
    pub fn write_uci<W: Write>(&self, mut out: W) -> Result<()> {
        let nnz: usize = self.documents.iter().map(Document::num_terms).sum();
        writeln!(out, "{}", self.documents.len())?;
        writeln!(out, "{}", self.vocab_size)?;
        writeln!(out, "{nnz}")?;
        for (d, doc) in self.documents.iter().enumerate() {
            for (t, c) in doc.iter() {
                writeln!(out, "{} {} {}", d + 1, t + 1, c)?;
            }
        }
        Ok(())
    }
}

/// Outcome of [`parse_uci_bow`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    /// Documents declared in the header that had no entries and were dropped.
    pub dropped_empty: usize,
}

fn header_value(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>, name: &str) -> Result<usize> {
    loop {
        let Some((no, line)) = lines.next() else {
            return Err(format_err(0, format!("missing header value {name}")));
        };
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        return trimmed.parse::<usize>().map_err(|_| {
            format_err(
                no + 1,
                format!("header {name} is not a non-negative integer: {trimmed:?}"),
            )
        });
    }
}

/// Reads a UCI bag-of-words corpus: three header lines `D`, `W`, `NNZ`
/// followed by exactly `NNZ` lines `docId wordId count` with 1-based ids.
/// Repeated `(docId, wordId)` entries are summed.
pub fn parse_uci_bow<R: BufRead>(reader: R, vocabulary: Option<&Vocabulary>) -> Result<ParsedCorpus> {
    let mut lines = reader.lines().enumerate();
    let num_docs = header_value(&mut lines, "D")?;
    let num_words = header_value(&mut lines, "W")?;
    let nnz = header_value(&mut lines, "NNZ")?;
    if num_words == 0 {
        return Err(format_err(2, "W must be positive"));
    }
    if let Some(v) = vocabulary {
        if v.len() != num_words {
            return Err(Error::DimensionMismatch {
                what: "vocabulary size",
                expected: num_words,
                found: v.len(),
            });
        }
    }

    let mut pairs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); num_docs];
    let mut seen = 0usize;
    for (no, line) in lines {
        let line = line?;
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        seen += 1;
        if seen > nnz {
            return Err(format_err(line_no, format!("more than NNZ={nnz} entries")));
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(format_err(line_no, "expected `docId wordId count`"));
        }
        let parse = |s: &str, what: &str| -> Result<i64> {
            s.parse::<i64>()
                .map_err(|_| format_err(line_no, format!("{what} is not an integer: {s:?}")))
        };
        let doc_id = parse(fields[0], "docId")?;
        let word_id = parse(fields[1], "wordId")?;
        let count = parse(fields[2], "count")?;
        if doc_id < 1 || doc_id as usize > num_docs {
            return Err(format_err(line_no, format!("docId {doc_id} outside 1..={num_docs}")));
        }
        if word_id < 1 || word_id as usize > num_words {
            return Err(format_err(line_no, format!("wordId {word_id} outside 1..={num_words}")));
        }
        if count < 1 {
            return Err(format_err(line_no, format!("count must be positive, got {count}")));
        }
        let count = u32::try_from(count).map_err(|_| format_err(line_no, "count too large"))?;
        pairs[doc_id as usize - 1].push((word_id as u32 - 1, count));
    }
    if seen != nnz {
        return Err(format_err(
            0,
            format!("header declares NNZ={nnz} but found {seen} entries"),
        ));
    }

    let total = pairs.len();
    let documents: Vec<Document> = pairs
        .into_iter()
        .map(Document::from_pairs)
        .filter(|d| !d.is_empty())
        .collect();
    let dropped_empty = total - documents.len();
    if dropped_empty > 0 {
        log::warn!("dropped {dropped_empty} empty documents");
    }
    let mut corpus = Corpus::new(documents, num_words)?;
    if let Some(v) = vocabulary {
        corpus = corpus.with_vocabulary(v.clone())?;
    }
    Ok(ParsedCorpus { corpus, dropped_empty })
}

/// Random disjoint partition into `(train, test)` with `n_test` test documents.
/// Both parts keep the original relative document order.
pub fn train_test_split(corpus: &Corpus, n_test: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    let d = corpus.len();
    if n_test == 0 || n_test >= d {
        return Err(Error::InvalidArgument(format!(
            "test size must be in 1..{d}, got {n_test}"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng_for(seed, &[0x7e57]));
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((corpus.subset(&train), corpus.subset(&test)))
}

/// A minibatch: documents paired with their index in the source corpus.
/// The index keys each document's random stream, so results do not depend
/// on the order of documents inside the batch.
#[derive(Debug, Clone)]
pub struct DocBatch<'a> {
    entries: Vec<(usize, &'a Document)>,
}

impl<'a> DocBatch<'a> {
    pub fn new(entries: Vec<(usize, &'a Document)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(Self { entries })
    }

    /// Batch of consecutive documents `range` of `corpus`.
    pub fn from_range(corpus: &'a Corpus, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(range.map(|i| (i, corpus.doc(i))).collect())
    }

    pub fn entries(&self) -> &[(usize, &'a Document)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn token_count(&self) -> u64 {
        self.entries.iter().map(|(_, d)| d.token_count()).sum()
    }

    /// Entries sorted by corpus index; the fixed reduction order.
    pub(crate) fn sorted(&self) -> Vec<(usize, &'a Document)> {
        let mut e = self.entries.clone();
        e.sort_by_key(|&(i, _)| i);
        e
    }
}

/// Draws `size` distinct documents uniformly at random. Batches for
/// different `t` are independent. A batch size of at least `D` returns
/// the whole corpus.
pub fn sample_minibatch(corpus: &Corpus, size: usize, seed: u64, t: u64) -> Result<DocBatch<'_>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let d = corpus.len();
    if size >= d {
        return DocBatch::from_range(corpus, 0..d);
    }
    let mut rng = rng_for(seed, &[0xba7c, t]);
    let picked = rand::seq::index::sample(&mut rng, d, size);
    DocBatch::new(picked.into_iter().map(|i| (i, corpus.doc(i))).collect())
}

/// A document divided into an observed part and held-out tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub observed: Document,
    pub heldout: Vec<u32>,
}

/// Shuffles the token multiset and keeps the first `⌈ratio·n⌉` tokens as
/// observed, the rest held out. Both sides are non-empty.
pub fn split_holdout(doc: &Document, ratio: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout ratio must be in (0, 1), got {ratio}"
        )));
    }
    let n = doc.token_count() as usize;
    if n < 2 {
        return Err(Error::EmptyDocument(n));
    }
    let mut tokens = doc.tokens();
    tokens.shuffle(&mut rng_for(seed, &[0x401d]));
    // Tolerance absorbs products like 0.7 * 10 landing just above an integer.
    let observed = ((ratio * n as f64) - 1e-9).ceil().clamp(1.0, (n - 1) as f64) as usize;
    let heldout = tokens.split_off(observed);
    Ok(HoldoutSplit {
        observed: Document::from_tokens(&tokens),
        heldout,
    })
}
