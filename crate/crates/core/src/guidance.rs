//! Instructor keyword guidance: one line per intended code.

use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub const DEFAULT_KEYWORDS_TOTAL_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSpec {
    /// Keyword sets in file order; line `t` steers topic (or cluster) `t`.
    pub lines: Vec<Vec<String>>,
    /// Prior mass a guided topic reserves for its keywords.
    pub keywords_total_probability: f64,
}

impl GuidanceSpec {
    pub fn new(lines: Vec<Vec<String>>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::invalid("guidance has no lines"));
        }
        if let Some(i) = lines.iter().position(Vec::is_empty) {
            return Err(Error::invalid(format!("guidance line {} is empty", i + 1)));
        }
        let lines = lines
            .into_iter()
            .map(|l| l.into_iter().map(|k| k.to_lowercase()).collect())
            .collect();
        Ok(GuidanceSpec {
            lines,
            keywords_total_probability: DEFAULT_KEYWORDS_TOTAL_PROBABILITY,
        })
    }

    pub fn with_keywords_total_probability(mut self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!(
                "keywords_total_probability must be in (0, 1), got {p}"
            )));
        }
        self.keywords_total_probability = p;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Parse guidance text. Blank lines and `#` comments are skipped.
    pub fn parse(body: &str, source: &Path) -> Result<Self> {
        let mut lines = Vec::new();
        for raw in body.lines() {
            let content = raw.split('#').next().unwrap_or("");
            let keywords: Vec<String> = content.split_whitespace().map(str::to_lowercase).collect();
            if !keywords.is_empty() {
                lines.push(keywords);
            }
        }
        if lines.is_empty() {
            return Err(Error::NoGuidance(source.into()));
        }
        GuidanceSpec::new(lines)
    }

    /// Resolve keywords to vocabulary ids, dropping (and logging) unknown ones.
    ///
    /// Fails if any line loses all of its keywords.
    pub fn resolve(&self, vocab: &Vocabulary) -> Result<Vec<Vec<usize>>> {
        self.resolve_with(|k| vocab.id(k), "vocabulary")
    }

    pub(crate) fn resolve_with(
        &self,
        lookup: impl Fn(&str) -> Option<usize>,
        context: &'static str,
    ) -> Result<Vec<Vec<usize>>> {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, line)| {
                let mut ids = Vec::with_capacity(line.len());
                for kw in line {
                    match lookup(kw) {
                        Some(id) if !ids.contains(&id) => ids.push(id),
                        Some(_) => {}
                        None => warn!(
                            "guidance line {}: keyword {kw:?} not in {context}, dropped",
                            i + 1
                        ),
                    }
                }
                if ids.is_empty() {
                    Err(Error::GuidanceUnmatched {
                        line: i + 1,
                        context,
                    })
                } else {
                    Ok(ids)
                }
            })
            .collect()
    }
}

pub fn load_guidance(path: &Path) -> Result<GuidanceSpec> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GuidanceSpec::parse(&body, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::TokenDocument;

    fn parse(s: &str) -> Result<GuidanceSpec> {
        GuidanceSpec::parse(s, Path::new("g.txt"))
    }

    #[test]
    fn two_lines() {
        let g = parse("retrieval practice testing\nelaboration connections").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.lines[0].len(), 3);
        assert_eq!(g.lines[1].len(), 2);
        assert_eq!(g.keywords_total_probability, 0.5);
    }

    #[test]
    fn comments_only() {
        let err = parse("# nothing\n\n   # here\n").unwrap_err();
        assert!(matches!(err, Error::NoGuidance(_)));
        assert!(err.to_string().contains("no guidance lines"));
    }

    #[test]
    fn ngram_keywords_and_case() {
        let g = parse("Interleaved_Practice spacing # comment\n").unwrap();
        assert_eq!(g.lines[0], ["interleaved_practice", "spacing"]);
    }

    #[test]
    fn probability_bounds() {
        let g = parse("a").unwrap();
        assert!(g.clone().with_keywords_total_probability(1.0).is_err());
        assert!(g.clone().with_keywords_total_probability(0.0).is_err());
        assert!(g.with_keywords_total_probability(0.3).is_ok());
    }

    #[test]
    fn resolve_drops_unknown_and_errors_on_empty_line() {
        let vocab = Vocabulary::from_documents(&[TokenDocument::new(
            "d",
            vec!["aaa".into(), "bbb".into()],
        )]);
        let g = parse("aaa zzz bbb aaa").unwrap();
        assert_eq!(g.resolve(&vocab).unwrap(), vec![vec![0, 1]]);
        let g = parse("aaa\nzzz yyy").unwrap();
        assert!(matches!(
            g.resolve(&vocab),
            Err(Error::GuidanceUnmatched { line: 2, .. })
        ));
    }

    #[test]
    fn load_missing_file() {
        assert!(matches!(
            load_guidance(Path::new("/no/such")),
            Err(Error::Io { .. })
        ));
    }
}
