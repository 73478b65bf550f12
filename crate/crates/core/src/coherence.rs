//! Topic coherence (C_v and U_Mass) and the topic-count scan built on it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::{build_eta, fit_lda, lda_topics, LdaParams, DEFAULT_ETA_STRENGTH};
use crate::seed::derive_seed;
use crate::vocab::{TokenDocument, Vocabulary};

pub const DEFAULT_WINDOW: usize = 110;
pub const NPMI_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceMeasure {
    #[serde(rename = "c_v")]
    CV,
    #[serde(rename = "u_mass")]
    UMass,
}

impl CoherenceMeasure {
    pub fn name(self) -> &'static str {
        match self {
            CoherenceMeasure::CV => "c_v",
            CoherenceMeasure::UMass => "u_mass",
        }
    }
}

impl FromStr for CoherenceMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_v" | "cv" => Ok(CoherenceMeasure::CV),
            "u_mass" | "umass" => Ok(CoherenceMeasure::UMass),
            other => Err(Error::invalid(format!(
                "unknown coherence measure {other:?}"
            ))),
        }
    }
}

fn check_topics(topics: &[Vec<String>]) -> Result<()> {
    if topics.iter().any(Vec::is_empty) {
        return Err(Error::invalid("every topic needs at least one term"));
    }
    Ok(())
}

/// Index of every distinct topic word.
fn topic_index(topics: &[Vec<String>]) -> HashMap<&str, usize> {
    let mut index = HashMap::new();
    for w in topics.iter().flatten() {
        let next = index.len();
        index.entry(w.as_str()).or_insert(next);
    }
    index
}

/// Occurrence and co-occurrence counts of tracked words over a set of segments.
struct CoCounts {
    segments: usize,
    single: Vec<usize>,
    /// Upper triangle keyed by `(min, max)`.
    pair: HashMap<(usize, usize), usize>,
}

impl CoCounts {
    fn new(n: usize) -> Self {
        CoCounts {
            segments: 0,
            single: vec![0; n],
            pair: HashMap::new(),
        }
    }

    fn observe(&mut self, present: &[usize]) {
        self.segments += 1;
        for (a, &i) in present.iter().enumerate() {
            self.single[i] += 1;
            for &j in &present[a + 1..] {
                *self.pair.entry((i.min(j), i.max(j))).or_default() += 1;
            }
        }
    }

    fn joint(&self, i: usize, j: usize) -> usize {
        if i == j {
            self.single[i]
        } else {
            self.pair.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
        }
    }
}

fn document_counts(index: &HashMap<&str, usize>, docs: &[TokenDocument]) -> CoCounts {
    let mut counts = CoCounts::new(index.len());
    let mut seen = vec![false; index.len()];
    for doc in docs {
        let mut present = Vec::new();
        for t in &doc.tokens {
            if let Some(&i) = index.get(t.as_str()) {
                if !seen[i] {
                    seen[i] = true;
                    present.push(i);
                }
            }
        }
        for &i in &present {
            seen[i] = false;
        }
        present.sort_unstable();
        counts.observe(&present);
    }
    counts
}

/// Boolean sliding windows: a document no longer than `window` is one
/// segment, otherwise every run of `window` consecutive tokens is.
fn window_counts(index: &HashMap<&str, usize>, docs: &[TokenDocument], window: usize) -> CoCounts {
    let mut counts = CoCounts::new(index.len());
    let mut in_window = vec![0usize; index.len()];
    for doc in docs {
        if doc.tokens.is_empty() {
            continue;
        }
        let ids: Vec<Option<usize>> = doc
            .tokens
            .iter()
            .map(|t| index.get(t.as_str()).copied())
            .collect();
        let width = window.min(ids.len());
        for id in ids[..width].iter().flatten() {
            in_window[*id] += 1;
        }
        // Only words of the current document can be present.
        let mut local: Vec<usize> = ids.iter().flatten().copied().collect();
        local.sort_unstable();
        local.dedup();
        let snapshot = |in_window: &[usize]| -> Vec<usize> {
            local
                .iter()
                .copied()
                .filter(|&i| in_window[i] > 0)
                .collect()
        };
        counts.observe(&snapshot(&in_window));
        for start in 1..=ids.len() - width {
            if let Some(out) = ids[start - 1] {
                in_window[out] -= 1;
            }
            if let Some(inc) = ids[start + width - 1] {
                in_window[inc] += 1;
            }
            counts.observe(&snapshot(&in_window));
        }
        for id in ids[ids.len() - width..].iter().flatten() {
            in_window[*id] -= 1;
        }
    }
    counts
}

/// U_Mass: mean over ordered pairs `i > j` of `log((D(w_i, w_j) + 1) / D(w_j))`,
/// averaged over topics. A one-word topic scores 0.
pub fn coherence_umass(topics: &[Vec<String>], docs: &[TokenDocument]) -> Result<f64> {
    check_topics(topics)?;
    let index = topic_index(topics);
    let counts = document_counts(&index, docs);
    let mut total = 0.0;
    for topic in topics {
        let ids: Vec<usize> = topic.iter().map(|w| index[w.as_str()]).collect();
        for (w, &i) in topic.iter().zip(&ids) {
            if counts.single[i] == 0 {
                return Err(Error::TermNeverOccurs(w.clone()));
            }
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 1..ids.len() {
            for b in 0..a {
                let joint = counts.joint(ids[a], ids[b]) as f64;
                sum += ((joint + 1.0) / counts.single[ids[b]] as f64).ln();
                pairs += 1;
            }
        }
        total += if pairs == 0 { 0.0 } else { sum / pairs as f64 };
    }
    Ok(total / topics.len() as f64)
}

/// C_v over boolean sliding windows of `window` tokens.
///
/// Each top word is described by its NPMI against every word of the topic; a
/// topic scores the mean cosine between those vectors and their sum.
pub fn coherence_cv(topics: &[Vec<String>], docs: &[TokenDocument], window: usize) -> Result<f64> {
    check_topics(topics)?;
    if window < 2 {
        return Err(Error::invalid("coherence window must be at least 2"));
    }
    let index = topic_index(topics);
    let counts = window_counts(&index, docs, window);
    cv_from_counts(topics, &index, &counts)
}

fn cv_from_counts(
    topics: &[Vec<String>],
    index: &HashMap<&str, usize>,
    counts: &CoCounts,
) -> Result<f64> {
    let n = counts.segments as f64;
    let mut total = 0.0;
    for topic in topics {
        let ids: Vec<usize> = topic.iter().map(|w| index[w.as_str()]).collect();
        for (w, &i) in topic.iter().zip(&ids) {
            if counts.single[i] == 0 {
                return Err(Error::TermNeverOccurs(w.clone()));
            }
        }
        let vectors: Vec<Vec<f64>> = ids
            .iter()
            .map(|&i| {
                ids.iter()
                    .map(|&j| {
                        let pi = counts.single[i] as f64 / n;
                        let pj = counts.single[j] as f64 / n;
                        let pij = counts.joint(i, j) as f64 / n + NPMI_EPSILON;
                        (pij / (pi * pj)).ln() / -pij.ln()
                    })
                    .collect()
            })
            .collect();
        let mut sum = vec![0.0; ids.len()];
        for v in &vectors {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        let score: f64 = vectors.iter().map(|v| cosine(v, &sum)).sum::<f64>() / ids.len() as f64;
        total += score;
    }
    Ok(total / topics.len() as f64)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn score(
    measure: CoherenceMeasure,
    topics: &[Vec<String>],
    docs: &[TokenDocument],
    window: usize,
) -> Result<f64> {
    match measure {
        CoherenceMeasure::CV => coherence_cv(topics, docs, window),
        CoherenceMeasure::UMass => coherence_umass(topics, docs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanEngine {
    Lda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub engine: ScanEngine,
    pub measure: CoherenceMeasure,
    pub window: usize,
    pub runs_per_k: usize,
    /// Topic words scored per topic.
    pub top_n: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub eta_strength: f64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            k_min: 2,
            k_max: 10,
            engine: ScanEngine::Lda,
            measure: CoherenceMeasure::CV,
            window: DEFAULT_WINDOW,
            runs_per_k: 3,
            top_n: 10,
            iterations: crate::lda::DEFAULT_ITERATIONS,
            alpha: None,
            eta_strength: DEFAULT_ETA_STRENGTH,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub measure: CoherenceMeasure,
    /// `(K, median score)` for every K in the scanned range.
    pub scores: Vec<(usize, f64)>,
    /// Individual run scores per K, in run order.
    pub runs: Vec<Vec<f64>>,
    pub best_k: usize,
}

impl CoherenceReport {
    /// Two-column text table, one row per K.
    pub fn to_table(&self) -> String {
        let mut s = String::from("No. Topics | Coherence Score\n---------- | ---------------\n");
        for (k, v) in &self.scores {
            let _ = writeln!(s, "{k:>10} | {v:.4}");
        }
        s
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Fit the engine `runs_per_k` times per K and keep the median coherence of
/// each K's top words. The best K maximizes the median; ties go to the smaller K.
pub fn coherence_scan(
    docs: &[TokenDocument],
    vocab: &Vocabulary,
    config: &ScanConfig,
) -> Result<CoherenceReport> {
    if config.k_min < 2 || config.k_min > config.k_max {
        return Err(Error::invalid(format!(
            "topic range {}..={} must satisfy 2 <= k_min <= k_max",
            config.k_min, config.k_max
        )));
    }
    if config.runs_per_k == 0 || config.top_n == 0 {
        return Err(Error::invalid("runs_per_k and top_n must be positive"));
    }
    let mut scores = Vec::new();
    let mut runs = Vec::new();
    for k in config.k_min..=config.k_max {
        let eta = build_eta(None, vocab, k)?.with_strength(config.eta_strength)?;
        let mut per_run = Vec::with_capacity(config.runs_per_k);
        for r in 0..config.runs_per_k {
            let params = LdaParams {
                alpha: config.alpha,
                iterations: config.iterations,
                seed: derive_seed(config.seed, &[k as u64, r as u64]),
                log_likelihood_every: config.iterations,
            };
            let model = match config.engine {
                ScanEngine::Lda => fit_lda(docs, vocab, &eta, &params)?,
            };
            let topics: Vec<Vec<String>> = lda_topics(&model, vocab, config.top_n)
                .into_iter()
                .map(|t| t.terms.into_iter().map(|(w, _)| w).collect())
                .collect();
            per_run.push(score(config.measure, &topics, docs, config.window)?);
        }
        scores.push((k, median(&per_run)));
        runs.push(per_run);
    }
    let best_k = scores
        .iter()
        .fold(None::<(usize, f64)>, |best, &(k, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((k, s)),
        })
        .map(|(k, _)| k)
        .expect("non-empty range");
    Ok(CoherenceReport {
        measure: config.measure,
        scores,
        runs,
        best_k,
    })
}
