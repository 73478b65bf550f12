//! Raw discussion posts: ingest from CSV or JSONL and persist as canonical JSONL.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One discussion-board posting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl RawPost {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawPost {
            id: id.into(),
            text: text.into(),
            meta: BTreeMap::new(),
        }
    }
}

/// Posts in input order. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCorpus {
    posts: Vec<RawPost>,
}

impl RawCorpus {
    /// Build a corpus, rejecting empty or duplicate ids.
    pub fn new(posts: Vec<RawPost>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(posts.len());
        for post in &posts {
            if post.id.is_empty() {
                return Err(Error::MissingField("id".into()));
            }
            if !seen.insert(post.id.as_str()) {
                return Err(Error::DuplicateId(post.id.clone()));
            }
        }
        Ok(RawCorpus { posts })
    }

    pub fn posts(&self) -> &[RawPost] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RawPost> {
        self.posts.iter()
    }
}

impl<'a> IntoIterator for &'a RawCorpus {
    type Item = &'a RawPost;
    type IntoIter = std::slice::Iter<'a, RawPost>;

    fn into_iter(self) -> Self::IntoIter {
        self.posts.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CorpusFormat::Csv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Generate `row-<n>` ids (1-based) for rows that lack one.
    pub synthesize_ids: bool,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<RawCorpus> {
    load_corpus_with(path, format, LoadOptions::default())
}

pub fn load_corpus_with(path: &Path, format: CorpusFormat, opts: LoadOptions) -> Result<RawCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let posts = match format {
        CorpusFormat::Csv => read_csv(path, BufReader::new(file), opts)?,
        CorpusFormat::Jsonl => read_jsonl(path, BufReader::new(file), opts)?,
    };
    RawCorpus::new(posts)
}

fn read_csv(path: &Path, reader: impl std::io::Read, opts: LoadOptions) -> Result<Vec<RawPost>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, 1, e))?.clone();
    let id_col = headers.iter().position(|h| h == "id");
    let text_col = headers
        .iter()
        .position(|h| h == "text")
        .ok_or_else(|| Error::MissingField("text".into()))?;
    if id_col.is_none() && !opts.synthesize_ids {
        return Err(Error::MissingField("id".into()));
    }

    let mut posts = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_error(path, line, e))?;
        let id = match id_col.map(|c| &record[c]) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ if opts.synthesize_ids => format!("row-{}", row + 1),
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: "empty id".into(),
                })
            }
        };
        let meta = headers
            .iter()
            .zip(record.iter())
            .enumerate()
            .filter(|(i, _)| Some(*i) != id_col && *i != text_col)
            .map(|(_, (h, v))| (h.to_string(), v.to_string()))
            .collect();
        posts.push(RawPost {
            id,
            text: record[text_col].to_string(),
            meta,
        });
    }
    Ok(posts)
}

fn csv_error(path: &Path, line: usize, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
    Error::Parse {
        path: path.into(),
        line,
        message: e.to_string(),
    }
}

#[derive(Deserialize)]
struct JsonPost {
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

fn read_jsonl(path: &Path, reader: impl BufRead, opts: LoadOptions) -> Result<Vec<RawPost>> {
    let mut posts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonPost = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.into(),
            line: lineno,
            message: e.to_string(),
        })?;
        let text = parsed.text.ok_or_else(|| Error::Parse {
            path: path.into(),
            line: lineno,
            message: "missing field \"text\"".into(),
        })?;
        let id = match parsed.id {
            Some(id) if !id.is_empty() => id,
            _ if opts.synthesize_ids => format!("row-{}", posts.len() + 1),
            _ => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno,
                    message: "missing field \"id\"".into(),
                })
            }
        };
        posts.push(RawPost {
            id,
            text,
            meta: parsed.meta,
        });
    }
    Ok(posts)
}

/// Write the corpus as JSONL, one post per line.
pub fn save_corpus(corpus: &RawCorpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_jsonl(corpus, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_jsonl(corpus: &RawCorpus, out: &mut impl Write) -> std::io::Result<()> {
    for post in corpus {
        serde_json::to_writer(&mut *out, post)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_single_post() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,text\np1,\"hello world\"");
        let c = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.posts()[0].id, "p1");
        assert_eq!(c.posts()[0].text, "hello world");
    }

    #[test]
    fn csv_extra_columns_become_meta() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,text,semester\np1,hi,F17\n");
        let c = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(
            c.posts()[0].meta.get("semester").map(String::as_str),
            Some("F17")
        );
    }

    #[test]
    fn csv_quoting_keeps_commas_and_newlines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,text\na,\"x, \"\"y\"\"\nz\"\n");
        let c = load_corpus(&p, CorpusFormat::Csv).unwrap();
        assert_eq!(c.posts()[0].text, "x, \"y\"\nz");
    }

    #[test]
    fn csv_missing_text_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,body\na,b\n");
        assert!(matches!(
            load_corpus(&p, CorpusFormat::Csv),
            Err(Error::MissingField(f)) if f == "text"
        ));
    }

    #[test]
    fn csv_ragged_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "id,text\na,b\nc,d,e\n");
        match load_corpus(&p, CorpusFormat::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_duplicate_id_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.jsonl",
            "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n",
        );
        match load_corpus(&p, CorpusFormat::Jsonl) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_malformed_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{oops\n");
        match load_corpus(&p, CorpusFormat::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_missing_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.jsonl", "{\"id\":\"a\"}\n");
        assert!(matches!(
            load_corpus(&p, CorpusFormat::Jsonl),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus(Path::new("/nonexistent/x.jsonl"), CorpusFormat::Jsonl),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn synthesized_ids() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.csv", "text\nfoo\nbar\n");
        assert!(load_corpus(&p, CorpusFormat::Csv).is_err());
        let c = load_corpus_with(
            &p,
            CorpusFormat::Csv,
            LoadOptions {
                synthesize_ids: true,
            },
        )
        .unwrap();
        let ids: Vec<_> = c.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["row-1", "row-2"]);
    }

    #[test]
    fn empty_corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        save_corpus(&RawCorpus::default(), &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"");
        assert!(load_corpus(&p, CorpusFormat::Jsonl).unwrap().is_empty());
    }

    #[test]
    fn unicode_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.jsonl");
        let c = RawCorpus::new(vec![RawPost::new("x", "café\u{a0}naïve")]).unwrap();
        save_corpus(&c, &p).unwrap();
        assert_eq!(load_corpus(&p, CorpusFormat::Jsonl).unwrap(), c);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn post() -> impl Strategy<Value = RawPost> {
            (
                "[a-z0-9-]{1,8}",
                any::<String>(),
                proptest::collection::btree_map("[a-z]{1,5}", any::<String>(), 0..3),
            )
                .prop_map(|(id, text, meta)| RawPost { id, text, meta })
        }

        proptest! {
            #[test]
            fn save_then_load_is_identity(posts in proptest::collection::vec(post(), 0..12)) {
                let mut seen = HashSet::new();
                let posts: Vec<_> = posts.into_iter().filter(|p| seen.insert(p.id.clone())).collect();
                let corpus = RawCorpus::new(posts).unwrap();
                let dir = tempfile::tempdir().unwrap();
                let p = dir.path().join("c.jsonl");
                save_corpus(&corpus, &p).unwrap();
                let back = load_corpus(&p, CorpusFormat::Jsonl).unwrap();
                prop_assert_eq!(&back, &corpus);
                prop_assert_eq!(load_corpus(&p, CorpusFormat::Jsonl).unwrap(), back);
            }
        }
    }
}
