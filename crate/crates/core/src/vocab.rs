use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator used when joining n-gram components into a single term.
pub const NGRAM_JOINER: char = '_';

/// A post after preprocessing: its id and the surviving terms in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDocument {
    pub id: String,
    pub tokens: Vec<String>,
}

impl TokenDocument {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenDocument {
            id: id.into(),
            tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Bidirectional term/index map with per-term document frequencies.
///
/// Terms are indexed in order of first occurrence over the documents they were
/// built from, so the same document list always gives the same indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        let index = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            index,
        }
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    pub fn from_documents(docs: &[TokenDocument]) -> Self {
        let mut terms = Vec::new();
        let mut doc_freq: Vec<usize> = Vec::new();
        let mut index = HashMap::new();
        let mut last_seen: Vec<usize> = Vec::new();
        for (d, doc) in docs.iter().enumerate() {
            for tok in &doc.tokens {
                let id = *index.entry(tok.clone()).or_insert_with(|| {
                    terms.push(tok.clone());
                    doc_freq.push(0);
                    last_seen.push(usize::MAX);
                    terms.len() - 1
                });
                if last_seen[id] != d {
                    last_seen[id] = d;
                    doc_freq[id] += 1;
                }
            }
        }
        Vocabulary {
            terms,
            doc_freq,
            index,
        }
    }

    /// Vocabulary size (`n_w`).
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    /// Map every token of `doc` to its term id.
    pub fn encode(&self, doc: &TokenDocument) -> Result<Vec<usize>> {
        doc.tokens
            .iter()
            .map(|t| self.id(t).ok_or_else(|| Error::UnknownTerm(t.clone())))
            .collect()
    }
}

pub fn is_ngram(term: &str) -> bool {
    term.contains(NGRAM_JOINER)
}

/// Drop n-gram terms from every document and rebuild the vocabulary over what is left.
pub fn restrict_to_unigrams(docs: &[TokenDocument]) -> (Vec<TokenDocument>, Vocabulary) {
    let docs: Vec<TokenDocument> = docs
        .iter()
        .map(|d| TokenDocument {
            id: d.id.clone(),
            tokens: d.tokens.iter().filter(|t| !is_ngram(t)).cloned().collect(),
        })
        .collect();
    let vocab = Vocabulary::from_documents(&docs);
    (docs, vocab)
}
