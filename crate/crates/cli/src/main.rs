mod config_file;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use discode_core::coherence::{CoherenceMeasure, ScanConfig};
use discode_core::corpus::{write_jsonl, CorpusFormat};
use discode_core::pipeline::{
    prepare, run, run_scan, CorpusSource, Engine, RunConfig, ScanRunConfig,
};
use discode_core::report::{canonical_json, render, OutputFormat};
use discode_core::vocab::is_ngram;
use discode_core::{Error, ErrorKind, PreprocessConfig, TokenDocument};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "discode",
    version,
    about = "Topic extraction for discussion-board corpora"
)]
struct Cli {
    /// key = value settings file; defaults to $DISCODE_CONFIG, then ./discode.conf
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a CSV or JSONL corpus and rewrite it as JSONL.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output JSONL path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tokenize and filter a corpus, writing one token list per post.
    Preprocess {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        pre: PreprocessArgs,
        /// Output JSONL of {id, tokens}; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the vocabulary as JSON.
        #[arg(long, value_name = "FILE")]
        vocab_out: Option<PathBuf>,
    },
    /// Run a topic engine and emit a topic report.
    Run(Box<RunArgs>),
    /// Score LDA fits over a range of topic counts.
    CoherenceScan(Box<ScanArgs>),
    /// Summarize the vocabulary produced by preprocessing.
    InspectVocab {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        pre: PreprocessArgs,
        /// Number of terms to list, by document frequency.
        #[arg(long, default_value_t = 20)]
        top: usize,
        #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
        format: TextOrJson,
    },
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Corpus file (.csv or .jsonl).
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Override the format inferred from the extension.
    #[arg(long, value_name = "csv|jsonl")]
    input_format: Option<CorpusFormat>,
    /// Generate row-<n> ids for posts without one.
    #[arg(long)]
    synthesize_ids: bool,
}

impl CorpusArgs {
    fn source(&self) -> Result<CorpusSource, Error> {
        let path = self
            .corpus
            .clone()
            .ok_or_else(|| Error::invalid("--corpus is required"))?;
        if !path.is_file() {
            return Err(Error::invalid(format!(
                "input file {} does not exist",
                path.display()
            )));
        }
        Ok(CorpusSource {
            path,
            format: self.input_format,
            synthesize_ids: self.synthesize_ids,
        })
    }
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Stopword list; the built-in English list when absent.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Names to remove, one per line.
    #[arg(long, value_name = "FILE")]
    names: Option<PathBuf>,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    max_token_len: Option<usize>,
    /// Drop terms found in more than this fraction of posts.
    #[arg(long, value_name = "FRACTION")]
    max_doc_freq: Option<f64>,
    /// Drop terms found in fewer posts than this.
    #[arg(long)]
    min_doc_freq: Option<usize>,
    /// Minimum corpus count for a bigram or trigram.
    #[arg(long)]
    ngram_min_count: Option<usize>,
    /// Skip bigram and trigram extension.
    #[arg(long)]
    no_ngrams: bool,
}

impl PreprocessArgs {
    fn config(&self) -> PreprocessConfig {
        let mut c = PreprocessConfig {
            stopword_path: self.stopwords.clone(),
            name_blocklist_path: self.names.clone(),
            enable_ngrams: !self.no_ngrams,
            ..Default::default()
        };
        if let Some(v) = self.min_token_len {
            c.min_token_len = v;
        }
        if let Some(v) = self.max_token_len {
            c.max_token_len = v;
        }
        if let Some(v) = self.max_doc_freq {
            c.max_doc_freq_fraction = v;
        }
        if let Some(v) = self.min_doc_freq {
            c.min_doc_freq = v;
        }
        if let Some(v) = self.ngram_min_count {
            c.ngram_min_count = v;
        }
        c
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    pre: PreprocessArgs,
    #[arg(long, value_name = "lsa|lda|cluster")]
    engine: Option<Engine>,
    /// Number of topics or clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Terms listed per topic.
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Keyword lines, one topic per line.
    #[arg(long, value_name = "FILE")]
    guidance: Option<PathBuf>,
    #[arg(long)]
    keywords_total_probability: Option<f64>,
    /// LSA: use unigram terms only.
    #[arg(long)]
    unigrams_only: bool,
    /// LDA document-topic prior; 1/K when absent.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta_strength: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Word vectors in word2vec text format, optionally gzipped.
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// K-means restarts when no guidance is given.
    #[arg(long)]
    restarts: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_name = "markdown|json|csv")]
    format: Option<OutputFormat>,
    /// Write a JSON model summary.
    #[arg(long, value_name = "FILE")]
    model_out: Option<PathBuf>,
    /// Write full factor matrices (little-endian f64 plus JSON sidecar) here.
    #[arg(long, value_name = "DIR")]
    matrices_out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let engine = self
            .engine
            .ok_or_else(|| Error::invalid("--engine is required"))?;
        let mut c = RunConfig::new(PathBuf::new(), engine);
        c.corpus = self.corpus.source()?;
        c.preprocess = self.pre.config();
        c.top_n = self.top_n;
        c.guidance = self.guidance.clone();
        c.unigrams_only = self.unigrams_only;
        c.alpha = self.alpha;
        c.embeddings = self.embeddings.clone();
        c.output = self.output.clone();
        c.model_out = self.model_out.clone();
        c.matrices_out = self.matrices_out.clone();
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.keywords_total_probability {
            c.keywords_total_probability = v;
        }
        if let Some(v) = self.eta_strength {
            c.eta_strength = v;
        }
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.restarts {
            c.restarts = v;
        }
        if let Some(v) = self.format {
            c.format = v;
        }
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    pre: PreprocessArgs,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, value_name = "c_v|u_mass")]
    measure: Option<CoherenceMeasure>,
    /// C_v sliding window width in tokens.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    runs_per_k: Option<usize>,
    /// Topic words scored per topic.
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta_strength: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the full scan as JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    format: TextOrJson,
}

impl ScanArgs {
    fn config(&self) -> Result<ScanRunConfig, Error> {
        let mut s = ScanConfig {
            alpha: self.alpha,
            ..Default::default()
        };
        if let Some(v) = self.k_min {
            s.k_min = v;
        }
        if let Some(v) = self.k_max {
            s.k_max = v;
        }
        if let Some(v) = self.measure {
            s.measure = v;
        }
        if let Some(v) = self.window {
            s.window = v;
        }
        if let Some(v) = self.runs_per_k {
            s.runs_per_k = v;
        }
        if let Some(v) = self.top_n {
            s.top_n = v;
        }
        if let Some(v) = self.iterations {
            s.iterations = v;
        }
        if let Some(v) = self.eta_strength {
            s.eta_strength = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        Ok(ScanRunConfig {
            corpus: self.corpus.source()?,
            preprocess: self.pre.config(),
            scan: s,
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TextOrJson {
    Text,
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

fn jsonl(docs: &[TokenDocument]) -> Vec<u8> {
    let mut out = Vec::new();
    for doc in docs {
        serde_json::to_writer(&mut out, doc).expect("serializes");
        out.push(b'\n');
    }
    out
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Ingest { corpus, output } => {
            let corpus = corpus.source()?.load().map_err(|e| e.in_stage("ingest"))?;
            let mut buf = Vec::new();
            write_jsonl(&corpus, &mut buf).map_err(|e| Error::io(Path::new("<buffer>"), e))?;
            write_out(output.as_deref(), &buf)?;
            log::info!("ingested {} posts", corpus.len());
        }
        Command::Preprocess {
            corpus,
            pre,
            output,
            vocab_out,
        } => {
            let cfg = pre.config();
            cfg.validate()?;
            let (docs, vocab) = prepare(&corpus.source()?, &cfg)?;
            write_out(output.as_deref(), &jsonl(&docs))?;
            if let Some(p) = vocab_out {
                let v = serde_json::to_value(&vocab).expect("vocabulary serializes");
                write_out(Some(&p), canonical_json(&v).as_bytes())?;
            }
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            let report = run(&cfg)?;
            if cfg.output.is_none() {
                write_out(None, &render(&report, cfg.format))?;
            }
        }
        Command::CoherenceScan(args) => {
            let cfg = args.config()?;
            let report = run_scan(&cfg)?;
            let value = json!({
                "measure": report.measure,
                "scores": report.scores,
                "runs": report.runs,
                "best_k": report.best_k,
                "config": cfg,
            });
            let json_text = canonical_json(&value);
            if let Some(p) = &args.output {
                write_out(Some(p), json_text.as_bytes())?;
            }
            match args.format {
                TextOrJson::Json => write_out(None, json_text.as_bytes())?,
                TextOrJson::Text => {
                    let text = format!("{}\nbest K: {}\n", report.to_table(), report.best_k);
                    write_out(None, text.as_bytes())?
                }
            }
        }
        Command::InspectVocab {
            corpus,
            pre,
            top,
            format,
        } => {
            let cfg = pre.config();
            cfg.validate()?;
            let (docs, vocab) = prepare(&corpus.source()?, &cfg)?;
            let mut order: Vec<usize> = (0..vocab.len()).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(vocab.doc_freq(i)), i));
            order.truncate(top);
            let ngrams = vocab.terms().iter().filter(|t| is_ngram(t)).count();
            let empty = docs.iter().filter(|d| d.is_empty()).count();
            match format {
                TextOrJson::Json => {
                    let top_terms: Vec<_> = order
                        .iter()
                        .map(|&i| json!({"term": vocab.term(i), "doc_freq": vocab.doc_freq(i)}))
                        .collect();
                    let v = json!({
                        "vocab_size": vocab.len(),
                        "ngrams": ngrams,
                        "num_docs": docs.len(),
                        "empty_docs": empty,
                        "top_terms": top_terms,
                    });
                    write_out(None, canonical_json(&v).as_bytes())?;
                }
                TextOrJson::Text => {
                    let mut s = format!(
                        "terms: {} ({} n-grams)\nposts: {} ({} empty after filtering)\n\n",
                        vocab.len(),
                        ngrams,
                        docs.len(),
                        empty
                    );
                    for &i in &order {
                        s.push_str(&format!("{:>6}  {}\n", vocab.doc_freq(i), vocab.term(i)));
                    }
                    write_out(None, s.as_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn command() -> clap::Command {
    Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true))
}

fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    Cli::from_arg_matches(&command().try_get_matches_from(argv)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    let first = match parse(argv.clone()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let cli = match config_file::locate(first.config.as_deref()) {
        None => first,
        Some((path, explicit)) => {
            if explicit && !path.is_file() {
                eprintln!("error: config file {} does not exist", path.display());
                return ExitCode::from(2);
            }
            let name = command()
                .try_get_matches_from(argv.clone())
                .ok()
                .and_then(|m| m.subcommand_name().map(str::to_string))
                .expect("first parse succeeded");
            let extra = config_file::load(&path)
                .and_then(|entries| config_file::to_args(&command(), &name, &entries, &path));
            let extra = match extra {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match parse(config_file::splice(&argv, &name, extra)) {
                Ok(c) => c,
                Err(e) => e.exit(),
            }
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
