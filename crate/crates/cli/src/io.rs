use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use ope_core::corpus::{parse_uci_bow, parse_vocab};
use ope_core::{Corpus, Snapshot};

pub fn load_corpus(path: &Path, vocab: Option<&Path>) -> Result<Corpus> {
    let vocabulary = match vocab {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening vocabulary {}", p.display()))?;
            Some(parse_vocab(BufReader::new(f)).with_context(|| format!("reading vocabulary {}", p.display()))?)
        }
        None => None,
    };
    let f = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    let parsed = parse_uci_bow(BufReader::new(f), vocabulary.as_ref())
        .with_context(|| format!("reading corpus {}", path.display()))?;
    if parsed.dropped_empty > 0 {
        log::warn!("{}: dropped {} empty documents", path.display(), parsed.dropped_empty);
    }
    let mut corpus = parsed.corpus;
    if let Some(v) = vocabulary {
        corpus = corpus.with_vocabulary(v)?;
    }
    log::info!(
        "{}: {} documents, {} terms, {} tokens",
        path.display(),
        corpus.len(),
        corpus.vocab_size(),
        corpus.token_count()
    );
    Ok(corpus)
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let f = File::open(path).with_context(|| format!("opening snapshot {}", path.display()))?;
    Snapshot::read(BufReader::new(f)).with_context(|| format!("reading snapshot {}", path.display()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// A file when a path is given, stdout otherwise.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}
