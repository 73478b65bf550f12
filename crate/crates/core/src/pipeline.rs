//! End-to-end orchestration: ingest, preprocess, run an engine, report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::coherence::{coherence_scan, CoherenceReport, ScanConfig};
use crate::corpus::{load_corpus_with, CorpusFormat, LoadOptions, RawCorpus};
use crate::embed::{
    cluster_topics, cluster_words, load_embeddings, ClusterModel, DEFAULT_RESTARTS,
};
use crate::error::{Error, Result};
use crate::export::write_matrix;
use crate::guidance::{load_guidance, GuidanceSpec, DEFAULT_KEYWORDS_TOTAL_PROBABILITY};
use crate::lda::{build_eta, fit_lda, lda_topics, LdaModel, LdaParams, DEFAULT_ETA_STRENGTH};
use crate::lsa::{build_term_doc_matrix, fit_lsa_with, lsa_topics, LsaConfig, LsaModel};
use crate::preprocess::{build_documents, PreprocessConfig};
use crate::report::{canonical_json, render, OutputFormat, Provenance, TopicReport};
use crate::topic::Topic;
use crate::vocab::{restrict_to_unigrams, TokenDocument, Vocabulary};

pub const DEFAULT_SEED: u64 = 20_220_707;
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Lsa,
    Lda,
    Cluster,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Lsa => "lsa",
            Engine::Lda => "lda",
            Engine::Cluster => "cluster",
        }
    }

    fn default_top_n(self) -> usize {
        match self {
            Engine::Cluster => crate::embed::DEFAULT_TOP_N,
            _ => 10,
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsa" => Ok(Engine::Lsa),
            "lda" => Ok(Engine::Lda),
            "cluster" | "kmeans" => Ok(Engine::Cluster),
            other => Err(Error::invalid(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSource {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    pub format: Option<CorpusFormat>,
    pub synthesize_ids: bool,
}

impl CorpusSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        CorpusSource {
            path: path.into(),
            format: None,
            synthesize_ids: false,
        }
    }

    pub fn load(&self) -> Result<RawCorpus> {
        let format = self
            .format
            .unwrap_or_else(|| CorpusFormat::from_path(&self.path));
        load_corpus_with(
            &self.path,
            format,
            LoadOptions {
                synthesize_ids: self.synthesize_ids,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    pub engine: Engine,
    pub preprocess: PreprocessConfig,
    pub k: usize,
    /// Terms per topic; engine default when absent.
    pub top_n: Option<usize>,
    pub seed: u64,
    pub guidance: Option<PathBuf>,
    pub keywords_total_probability: f64,
    /// LSA: drop bigrams and trigrams before building the matrix.
    pub unigrams_only: bool,
    pub alpha: Option<f64>,
    pub eta_strength: f64,
    pub iterations: usize,
    pub embeddings: Option<PathBuf>,
    pub restarts: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Engine-specific model summary as JSON.
    pub model_out: Option<PathBuf>,
    /// Directory for full factor matrices.
    pub matrices_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, engine: Engine) -> Self {
        RunConfig {
            corpus: CorpusSource::new(corpus),
            engine,
            preprocess: PreprocessConfig::default(),
            k: DEFAULT_K,
            top_n: None,
            seed: DEFAULT_SEED,
            guidance: None,
            keywords_total_probability: DEFAULT_KEYWORDS_TOTAL_PROBABILITY,
            unigrams_only: false,
            alpha: None,
            eta_strength: DEFAULT_ETA_STRENGTH,
            iterations: crate::lda::DEFAULT_ITERATIONS,
            embeddings: None,
            restarts: DEFAULT_RESTARTS,
            output: None,
            format: OutputFormat::Markdown,
            model_out: None,
            matrices_out: None,
        }
    }

    pub fn top_n(&self) -> usize {
        self.top_n.unwrap_or_else(|| self.engine.default_top_n())
    }

    /// Check parameters and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        if self.k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.top_n() < 1 {
            return Err(Error::invalid("top-n must be at least 1"));
        }
        if self.engine == Engine::Cluster && self.embeddings.is_none() {
            return Err(Error::invalid("the cluster engine needs --embeddings"));
        }
        let mut inputs: Vec<&Path> = vec![&self.corpus.path];
        inputs.extend(self.guidance.as_deref());
        inputs.extend(self.embeddings.as_deref());
        inputs.extend(self.preprocess.stopword_path.as_deref());
        inputs.extend(self.preprocess.name_blocklist_path.as_deref());
        for p in inputs {
            if !p.is_file() {
                return Err(Error::invalid(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of this configuration.
    pub fn hash(&self) -> String {
        let canon = canonical_json(&serde_json::to_value(self).expect("config serializes"));
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    fn load_guidance(&self) -> Result<Option<GuidanceSpec>> {
        self.guidance
            .as_deref()
            .map(|p| {
                load_guidance(p)?.with_keywords_total_probability(self.keywords_total_probability)
            })
            .transpose()
    }
}

/// Ingest and preprocess a corpus.
pub fn prepare(
    source: &CorpusSource,
    config: &PreprocessConfig,
) -> Result<(Vec<TokenDocument>, Vocabulary)> {
    let corpus = source.load().map_err(|e| e.in_stage("ingest"))?;
    let (docs, vocab) = build_documents(&corpus, config).map_err(|e| e.in_stage("preprocess"))?;
    if vocab.is_empty() {
        return Err(Error::EmptyInput("preprocess produced no terms".into()).in_stage("preprocess"));
    }
    Ok((docs, vocab))
}

struct EngineOutput {
    topics: Vec<Topic>,
    vocab_size: usize,
    diagnostics: BTreeMap<String, Value>,
    model: Value,
    matrices: Vec<(&'static str, crate::linalg::DenseMatrix)>,
}

/// Execute the configured pipeline, write any requested outputs and return the report.
pub fn run(config: &RunConfig) -> Result<TopicReport> {
    config.validate()?;
    let guidance = config.load_guidance().map_err(|e| e.in_stage("guidance"))?;
    let (docs, vocab) = prepare(&config.corpus, &config.preprocess)?;
    let top_n = config.top_n();
    let stage = config.engine.name();
    let out = match config.engine {
        Engine::Lsa => run_lsa(config, &docs, &vocab, top_n),
        Engine::Lda => run_lda(config, guidance.as_ref(), &docs, &vocab, top_n),
        Engine::Cluster => run_cluster(config, guidance.as_ref(), &vocab, top_n),
    }
    .map_err(|e| e.in_stage(stage))?;

    let report = TopicReport {
        engine: stage.to_string(),
        k: config.k,
        top_n,
        topics: out.topics,
        provenance: Provenance {
            config_hash: config.hash(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed: config.seed,
            vocab_size: out.vocab_size,
            num_docs: docs.len(),
            diagnostics: out.diagnostics,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };

    let write = |path: &Path, bytes: &[u8]| {
        fs::write(path, bytes).map_err(|e| Error::io(path, e).in_stage("report"))
    };
    if let Some(path) = &config.output {
        write(path, &render(&report, config.format))?;
    }
    if let Some(path) = &config.model_out {
        write(path, canonical_json(&out.model).as_bytes())?;
    }
    if let Some(dir) = &config.matrices_out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("report"))?;
        for (name, m) in &out.matrices {
            write_matrix(&dir.join(format!("{name}.f64")), m).map_err(|e| e.in_stage("report"))?;
        }
    }
    Ok(report)
}

fn topics_json(topics: &[Topic]) -> Value {
    serde_json::to_value(topics).expect("topics serialize")
}

fn run_lsa(
    config: &RunConfig,
    docs: &[TokenDocument],
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<EngineOutput> {
    let (docs, vocab) = if config.unigrams_only {
        restrict_to_unigrams(docs)
    } else {
        (docs.to_vec(), vocab.clone())
    };
    let matrix = build_term_doc_matrix(&docs, &vocab)?;
    let lsa_config = LsaConfig {
        seed: config.seed,
        ..Default::default()
    };
    let model: LsaModel = fit_lsa_with(&matrix, config.k, &lsa_config)?;
    let topics = lsa_topics(&model, &vocab, top_n);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("singular_values".into(), json!(model.singular_values));
    Ok(EngineOutput {
        model: json!({
            "k": model.k,
            "singular_values": model.singular_values,
            "topics": topics_json(&topics),
        }),
        topics,
        vocab_size: vocab.len(),
        diagnostics,
        matrices: vec![
            ("term_vectors", model.term_vectors),
            ("doc_vectors", model.doc_vectors),
        ],
    })
}

fn run_lda(
    config: &RunConfig,
    guidance: Option<&GuidanceSpec>,
    docs: &[TokenDocument],
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<EngineOutput> {
    let eta = build_eta(guidance, vocab, config.k)?.with_strength(config.eta_strength)?;
    let params = LdaParams {
        alpha: config.alpha,
        iterations: config.iterations,
        seed: config.seed,
        ..Default::default()
    };
    let model: LdaModel = fit_lda(docs, vocab, &eta, &params)?;
    let topics = lda_topics(&model, vocab, top_n);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("alpha".into(), json!(model.alpha));
    diagnostics.insert("guided_topics".into(), json!(eta.guided_rows));
    diagnostics.insert(
        "final_log_likelihood".into(),
        json!(model.log_likelihood_trace.last()),
    );
    let doc_topic: BTreeMap<&str, &[f64]> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| (doc.id.as_str(), model.doc_topic.row(d)))
        .collect();
    Ok(EngineOutput {
        model: json!({
            "k": model.k,
            "alpha": model.alpha,
            "eta_strength": eta.strength,
            "topics": topics_json(&topics),
            "doc_topic": doc_topic,
            "log_likelihood_trace": model.log_likelihood_trace,
        }),
        topics,
        vocab_size: vocab.len(),
        diagnostics,
        matrices: vec![
            ("topic_word", model.topic_word),
            ("doc_topic", model.doc_topic),
        ],
    })
}

fn run_cluster(
    config: &RunConfig,
    guidance: Option<&GuidanceSpec>,
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<EngineOutput> {
    let path = config
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::invalid("the cluster engine needs --embeddings"))?;
    let table = load_embeddings(path, vocab)?;
    if !table.dropped().is_empty() {
        log::warn!(
            "{} vocabulary words have no vector and were dropped",
            table.dropped().len()
        );
    }
    let model: ClusterModel =
        cluster_words(&table, config.k, guidance, config.restarts, config.seed)?;
    let topics = cluster_topics(&model, &table, top_n);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("inertia".into(), json!(model.inertia));
    diagnostics.insert("seeded".into(), json!(model.seeded));
    diagnostics.insert("dropped_words".into(), json!(table.dropped().len()));
    let assignment: BTreeMap<&str, usize> = table
        .words()
        .iter()
        .map(String::as_str)
        .zip(model.assignment.iter().copied())
        .collect();
    Ok(EngineOutput {
        model: json!({
            "k": model.k,
            "inertia": model.inertia,
            "seeded": model.seeded,
            "iterations": model.iterations,
            "topics": topics_json(&topics),
            "assignment": assignment,
            "dropped": table.dropped(),
        }),
        topics,
        vocab_size: table.len(),
        diagnostics,
        matrices: vec![("centroids", model.centroids)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRunConfig {
    pub corpus: CorpusSource,
    pub preprocess: PreprocessConfig,
    pub scan: ScanConfig,
}

/// Ingest, preprocess and scan topic counts.
pub fn run_scan(config: &ScanRunConfig) -> Result<CoherenceReport> {
    if !config.corpus.path.is_file() {
        return Err(Error::invalid(format!(
            "input file {} does not exist",
            config.corpus.path.display()
        )));
    }
    let (docs, vocab) = prepare(&config.corpus, &config.preprocess)?;
    coherence_scan(&docs, &vocab, &config.scan).map_err(|e| e.in_stage("coherence-scan"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_round_trip() {
        for e in [Engine::Lsa, Engine::Lda, Engine::Cluster] {
            assert_eq!(e.name().parse::<Engine>().unwrap(), e);
        }
        assert!("svd".parse::<Engine>().is_err());
    }

    #[test]
    fn hash_tracks_config() {
        let a = RunConfig::new("c.jsonl", Engine::Lda);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new("/no/such/corpus.jsonl", Engine::Lda);
        assert!(matches!(c.validate(), Err(Error::InvalidParameter(_))));
        c.engine = Engine::Cluster;
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("--embeddings"));
    }

    #[test]
    fn cluster_top_n_defaults_to_five() {
        assert_eq!(RunConfig::new("x", Engine::Cluster).top_n(), 5);
        assert_eq!(RunConfig::new("x", Engine::Lda).top_n(), 10);
    }
}
