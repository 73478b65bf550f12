//! Text cleanup pipeline: tokenization, stopword and name removal,
//! document-frequency filtering and n-gram extension.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::RawCorpus;
use crate::error::{Error, Result};
use crate::vocab::{TokenDocument, Vocabulary, NGRAM_JOINER};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Stopword list; `None` uses the built-in English list.
    pub stopword_path: Option<PathBuf>,
    pub min_token_len: usize,
    pub max_token_len: usize,
    pub max_doc_freq_fraction: f64,
    pub min_doc_freq: usize,
    pub ngram_min_count: usize,
    pub enable_ngrams: bool,
    pub name_blocklist_path: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopword_path: None,
            min_token_len: 3,
            max_token_len: 15,
            max_doc_freq_fraction: 0.10,
            min_doc_freq: 2,
            ngram_min_count: 5,
            enable_ngrams: true,
            name_blocklist_path: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len < 1 {
            return Err(Error::invalid("min_token_len must be at least 1"));
        }
        if self.max_token_len < self.min_token_len {
            return Err(Error::invalid("max_token_len must be >= min_token_len"));
        }
        if !(self.max_doc_freq_fraction > 0.0 && self.max_doc_freq_fraction <= 1.0) {
            return Err(Error::invalid("max_doc_freq_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    fn tokenizer(&self) -> Tokenizer {
        Tokenizer {
            min_len: self.min_token_len,
            max_len: self.max_token_len,
        }
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap())
}

fn roman_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^M*(CM|CD|D?C{0,3})(XC|XL|L?X{0,3})(IX|IV|V?I{0,3})$").unwrap())
}

#[derive(Debug, Clone, Copy)]
pub struct Tokenizer {
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            min_len: 3,
            max_len: 15,
        }
    }
}

impl Tokenizer {
    /// Split `text` into lowercase alphabetic tokens.
    ///
    /// URLs are blanked first; digits, punctuation and non-breaking spaces act
    /// as separators. Fully uppercase roman numerals (two or more letters) are
    /// dropped, as is anything outside the length bounds.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let cleaned = url_re().replace_all(text, " ");
        let mut out = Vec::new();
        let mut run = String::new();
        for c in cleaned.chars().chain(std::iter::once(' ')) {
            if c.is_alphabetic() {
                run.push(c);
            } else if !run.is_empty() {
                if let Some(tok) = self.accept(&run) {
                    out.push(tok);
                }
                run.clear();
            }
        }
        out
    }

    fn accept(&self, run: &str) -> Option<String> {
        if run.chars().count() >= 2
            && run.chars().all(char::is_uppercase)
            && roman_re().is_match(run)
        {
            return None;
        }
        let lower: String = run
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphabetic())
            .collect();
        let len = lower.chars().count();
        (self.min_len..=self.max_len)
            .contains(&len)
            .then_some(lower)
    }
}

/// Tokenize with the default length bounds (3..=15).
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

pub fn filter_stopwords(tokens: Vec<String>, stopwords: &HashSet<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect()
}

/// Gazetteer-based removal of person names and titles; identity without a blocklist.
pub fn filter_names(tokens: Vec<String>, blocklist: Option<&HashSet<String>>) -> Vec<String> {
    match blocklist {
        Some(names) => filter_stopwords(tokens, names),
        None => tokens,
    }
}

/// Append all consecutive bigrams, then all trigrams, joined with `_`.
pub fn extend_ngrams(tokens: &[String]) -> Vec<String> {
    let n = tokens.len();
    let mut out = Vec::with_capacity(n + n.saturating_sub(1) + n.saturating_sub(2));
    out.extend_from_slice(tokens);
    let join = |w: &[String]| w.join(&NGRAM_JOINER.to_string());
    out.extend(tokens.windows(2).map(join));
    out.extend(tokens.windows(3).map(join));
    out
}

/// Parse a word-list file: one entry per line, `#` starts a comment.
pub fn parse_word_list(body: &str) -> HashSet<String> {
    body.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<HashSet<String>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&body))
}

pub fn builtin_stopwords() -> HashSet<String> {
    parse_word_list(BUILTIN_STOPWORDS)
}

/// Run the full pipeline, loading the stopword and blocklist files named in `config`.
pub fn build_documents(
    corpus: &RawCorpus,
    config: &PreprocessConfig,
) -> Result<(Vec<TokenDocument>, Vocabulary)> {
    config.validate()?;
    let stopwords = match &config.stopword_path {
        Some(p) => load_word_list(p)?,
        None => builtin_stopwords(),
    };
    let names = config
        .name_blocklist_path
        .as_deref()
        .map(load_word_list)
        .transpose()?;
    Ok(build_documents_with(
        corpus,
        config,
        &stopwords,
        names.as_ref(),
    ))
}

/// Pipeline body with the word lists already in memory.
pub fn build_documents_with(
    corpus: &RawCorpus,
    config: &PreprocessConfig,
    stopwords: &HashSet<String>,
    names: Option<&HashSet<String>>,
) -> (Vec<TokenDocument>, Vocabulary) {
    let tokenizer = config.tokenizer();
    let mut docs: Vec<Vec<String>> = corpus
        .iter()
        .map(|post| {
            let toks = filter_stopwords(tokenizer.tokenize(&post.text), stopwords);
            filter_names(toks, names)
        })
        .collect();

    let num_docs = docs.len();
    let ceiling = config.max_doc_freq_fraction * num_docs as f64;
    let df = document_frequencies(&docs);
    let keep: HashSet<&str> = df
        .iter()
        .filter(|(_, &n)| n >= config.min_doc_freq && n as f64 <= ceiling)
        .map(|(t, _)| t.as_str())
        .collect();
    for doc in &mut docs {
        doc.retain(|t| keep.contains(t.as_str()));
    }

    if config.enable_ngrams {
        let extended: Vec<Vec<String>> = docs.iter().map(|d| extend_ngrams(d)).collect();
        let mut count: HashMap<&str, usize> = HashMap::new();
        for doc in &extended {
            for t in doc.iter().filter(|t| t.contains(NGRAM_JOINER)) {
                *count.entry(t).or_default() += 1;
            }
        }
        let ngram_df = document_frequencies(&extended);
        let dropped: HashSet<String> = count
            .into_iter()
            .filter(|(t, c)| *c < config.ngram_min_count || ngram_df[*t] < config.min_doc_freq)
            .map(|(t, _)| t.to_string())
            .collect();
        docs = extended
            .into_iter()
            .map(|mut d| {
                d.retain(|t| !dropped.contains(t));
                d
            })
            .collect();
    }

    let docs: Vec<TokenDocument> = corpus
        .iter()
        .zip(docs)
        .map(|(post, tokens)| TokenDocument::new(post.id.clone(), tokens))
        .collect();
    let vocab = Vocabulary::from_documents(&docs);
    (docs, vocab)
}

fn document_frequencies(docs: &[Vec<String>]) -> HashMap<String, usize> {
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let uniq: HashSet<&String> = doc.iter().collect();
        for t in uniq {
            *df.entry(t.clone()).or_default() += 1;
        }
    }
    df
}
