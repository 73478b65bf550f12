use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::vocab::{is_ngram, Vocabulary};

/// Dense vectors for a set of words, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    /// Row-major `words.len() × dim`.
    data: Vec<f64>,
    index: HashMap<String, usize>,
    source: PathBuf,
    /// Vocabulary unigrams that had no vector.
    dropped: Vec<String>,
}

impl EmbeddingTable {
    pub fn from_vectors(words: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if words.len() != vectors.len() {
            return Err(Error::invalid("word and vector counts differ"));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let mut data = Vec::with_capacity(dim * vectors.len());
        for (w, v) in words.iter().zip(&vectors) {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "vector for {w:?} has length {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("vector for {w:?} is not finite")));
            }
            data.extend_from_slice(v);
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(EmbeddingTable {
            dim,
            words,
            data,
            index,
            source: PathBuf::new(),
            dropped: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vector(i))
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    /// Same table with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|x| *x *= factor);
        t
    }
}

/// Read a word2vec text file (`.gz` is decompressed) keeping only the
/// vocabulary's unigrams.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_embeddings(BufReader::new(reader), path, vocab)
}

pub fn parse_embeddings(
    reader: impl BufRead,
    source: &Path,
    vocab: &Vocabulary,
) -> Result<EmbeddingTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.into(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(source, e))?
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let dim = match fields.as_slice() {
        [count, dim] => match (count.parse::<usize>(), dim.parse::<usize>()) {
            (Ok(_), Ok(d)) if d >= 1 => d,
            _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
        },
        _ => return Err(parse_err(1, format!("malformed header {header:?}"))),
    };

    let mut found: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(source, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                path: source.into(),
                line: lineno,
                expected: dim,
                found: values.len(),
            });
        }
        if !vocab.contains(word) || is_ngram(word) || found.contains_key(word) {
            continue;
        }
        let vector = values
            .iter()
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(lineno, format!("bad vector component {v:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        found.insert(word.to_string(), vector);
    }

    let mut words = Vec::new();
    let mut vectors = Vec::new();
    let mut dropped = Vec::new();
    for term in vocab.terms().iter().filter(|t| !is_ngram(t)) {
        match found.remove(term) {
            Some(v) => {
                words.push(term.clone());
                vectors.push(v);
            }
            None => dropped.push(term.clone()),
        }
    }
    if words.is_empty() {
        return Err(Error::NoOverlap(source.into()));
    }
    let mut table = EmbeddingTable::from_vectors(words, vectors)?;
    table.source = source.into();
    table.dropped = dropped;
    Ok(table)
}
