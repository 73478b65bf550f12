//! LDA trained by collapsed Gibbs sampling, with an optional keyword-guided
//! asymmetric topic-word prior.
//!
//! A guided topic `t` with `n_t` in-vocabulary keywords puts prior probability
//! `q / n_t` on each keyword and `(1 - q) / (n_w - n_t)` on every other word,
//! where `q` is the keywords' total probability and `n_w` the vocabulary size.
//! Unguided topics are uniform, `1 / n_w`. The per-topic Dirichlet parameters
//! are these probabilities times a concentration `strength`.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::guidance::GuidanceSpec;
use crate::linalg::DenseMatrix;
use crate::topic::{rank_indices, Topic};
use crate::vocab::{TokenDocument, Vocabulary};

pub const DEFAULT_ETA_STRENGTH: f64 = 200.0;
pub const DEFAULT_ITERATIONS: usize = 1000;

/// Per-topic Dirichlet base measure over the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPrior {
    /// `K × n_w`, each row a probability distribution.
    pub matrix: DenseMatrix,
    /// Concentration multiplier applied to `matrix`.
    pub strength: f64,
    /// Number of leading rows built from guidance lines.
    pub guided_rows: usize,
}

impl EtaPrior {
    pub fn num_topics(&self) -> usize {
        self.matrix.rows()
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        if !(strength > 0.0 && strength.is_finite()) {
            return Err(Error::invalid(format!(
                "eta strength must be positive, got {strength}"
            )));
        }
        self.strength = strength;
        Ok(self)
    }

    /// Dirichlet parameter for `(topic, word)`.
    pub fn param(&self, topic: usize, word: usize) -> f64 {
        self.matrix[(topic, word)] * self.strength
    }
}

pub fn build_eta(
    guidance: Option<&GuidanceSpec>,
    vocab: &Vocabulary,
    k: usize,
) -> Result<EtaPrior> {
    let n_w = vocab.len();
    if n_w == 0 {
        return Err(Error::EmptyInput("vocabulary is empty".into()));
    }
    if k == 0 {
        return Err(Error::invalid("number of topics must be positive"));
    }
    let mut matrix = DenseMatrix::from_row_major(k, n_w, vec![1.0 / n_w as f64; k * n_w]);
    let mut guided_rows = 0;
    if let Some(g) = guidance {
        if g.len() > k {
            return Err(Error::invalid(format!(
                "{} guidance lines exceed the {k} topics",
                g.len()
            )));
        }
        let q = g.keywords_total_probability;
        for (t, ids) in g.resolve(vocab)?.into_iter().enumerate() {
            let n_kt = ids.len();
            if n_kt == n_w {
                return Err(Error::invalid(format!(
                    "guidance line {} covers the whole vocabulary",
                    t + 1
                )));
            }
            let background = (1.0 - q) / (n_w - n_kt) as f64;
            let row = matrix.row_mut(t);
            row.fill(background);
            let keyword = q / n_kt as f64;
            for id in ids {
                row[id] = keyword;
            }
        }
        guided_rows = g.len();
    }
    Ok(EtaPrior {
        matrix,
        strength: DEFAULT_ETA_STRENGTH,
        guided_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    /// Symmetric document-topic prior; `None` means `1 / K`.
    pub alpha: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
    /// Record the log-likelihood every this many sweeps (and after the last).
    pub log_likelihood_every: usize,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            alpha: None,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            log_likelihood_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    /// `K × n_w`, rows sum to one.
    pub topic_word: DenseMatrix,
    /// `num_docs × K`, rows sum to one.
    pub doc_topic: DenseMatrix,
    pub log_likelihood_trace: Vec<f64>,
    pub alpha: f64,
    pub seed: u64,
}

struct Sampler<'a> {
    k: usize,
    alpha: f64,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    /// Word-major `n_w × K` counts.
    word_topic: Vec<u32>,
    doc_topic: Vec<Vec<u32>>,
    topic_total: Vec<u64>,
    /// Word-major `n_w × K` Dirichlet parameters.
    beta: Vec<f64>,
    beta_sum: Vec<f64>,
    eta: &'a EtaPrior,
}

impl<'a> Sampler<'a> {
    fn new(docs: Vec<Vec<usize>>, eta: &'a EtaPrior, alpha: f64, rng: &mut impl Rng) -> Self {
        let k = eta.num_topics();
        let n_w = eta.matrix.cols();
        let mut beta = vec![0.0; n_w * k];
        let mut beta_sum = vec![0.0; k];
        for t in 0..k {
            for w in 0..n_w {
                let b = eta.param(t, w);
                beta[w * k + t] = b;
                beta_sum[t] += b;
            }
        }
        let mut s = Sampler {
            k,
            alpha,
            assignments: docs.iter().map(|d| vec![0; d.len()]).collect(),
            word_topic: vec![0; n_w * k],
            doc_topic: vec![vec![0; k]; docs.len()],
            topic_total: vec![0; k],
            docs,
            beta,
            beta_sum,
            eta,
        };
        // Initial topics are drawn from the prior alone, p(t | w) ∝ η_tw / Σ_w η_tw,
        // which is uniform when no topic is guided.
        let mut weights = vec![0.0; k];
        for d in 0..s.docs.len() {
            for i in 0..s.docs[d].len() {
                let w = s.docs[d][i];
                let prior = &s.beta[w * k..(w + 1) * k];
                let mut total = 0.0;
                for ((slot, b), b_sum) in weights.iter_mut().zip(prior).zip(&s.beta_sum) {
                    total += b / b_sum;
                    *slot = total;
                }
                let u = rng.random::<f64>() * total;
                let z = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                s.assignments[d][i] = z;
                s.add(d, w, z);
            }
        }
        s
    }

    /// Sample a topic for word `w` in document `d` from the collapsed conditional.
    fn draw(&self, d: usize, w: usize, rng: &mut impl Rng, weights: &mut [f64]) -> usize {
        let k = self.k;
        let counts = &self.word_topic[w * k..(w + 1) * k];
        let betas = &self.beta[w * k..(w + 1) * k];
        let dt = &self.doc_topic[d];
        let mut total = 0.0;
        for t in 0..k {
            total += (dt[t] as f64 + self.alpha) * (counts[t] as f64 + betas[t])
                / (self.topic_total[t] as f64 + self.beta_sum[t]);
            weights[t] = total;
        }
        let u = rng.random::<f64>() * total;
        weights.iter().position(|&c| u < c).unwrap_or(k - 1)
    }

    fn add(&mut self, d: usize, w: usize, z: usize) {
        self.word_topic[w * self.k + z] += 1;
        self.doc_topic[d][z] += 1;
        self.topic_total[z] += 1;
    }

    fn remove(&mut self, d: usize, w: usize, z: usize) {
        self.word_topic[w * self.k + z] -= 1;
        self.doc_topic[d][z] -= 1;
        self.topic_total[z] -= 1;
    }

    fn sweep(&mut self, rng: &mut impl Rng, weights: &mut [f64]) {
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.remove(d, w, old);
                let z = self.draw(d, w, rng, weights);
                self.assignments[d][i] = z;
                self.add(d, w, z);
            }
        }
    }

    /// Collapsed joint log-likelihood `log p(w, z)`.
    fn log_likelihood(&self) -> f64 {
        let k = self.k;
        let n_w = self.beta.len() / k;
        let mut ll = 0.0;
        for t in 0..k {
            ll += ln_gamma(self.beta_sum[t])
                - ln_gamma(self.topic_total[t] as f64 + self.beta_sum[t]);
        }
        for w in 0..n_w {
            for t in 0..k {
                let c = self.word_topic[w * k + t];
                if c > 0 {
                    let b = self.beta[w * k + t];
                    ll += ln_gamma(c as f64 + b) - ln_gamma(b);
                }
            }
        }
        let ka = k as f64 * self.alpha;
        let lg_alpha = ln_gamma(self.alpha);
        for (d, doc) in self.docs.iter().enumerate() {
            ll += ln_gamma(ka) - ln_gamma(doc.len() as f64 + ka);
            for &c in &self.doc_topic[d] {
                if c > 0 {
                    ll += ln_gamma(c as f64 + self.alpha) - lg_alpha;
                }
            }
        }
        ll
    }

    fn into_model(self, seed: u64, trace: Vec<f64>) -> LdaModel {
        let k = self.k;
        let n_w = self.beta.len() / k;
        let mut topic_word = DenseMatrix::zeros(k, n_w);
        for t in 0..k {
            let denom = self.topic_total[t] as f64 + self.beta_sum[t];
            for w in 0..n_w {
                topic_word[(t, w)] =
                    (self.word_topic[w * k + t] as f64 + self.beta[w * k + t]) / denom;
            }
        }
        let mut doc_topic = DenseMatrix::zeros(self.docs.len(), k);
        let ka = k as f64 * self.alpha;
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.len() as f64 + ka;
            for t in 0..k {
                doc_topic[(d, t)] = (self.doc_topic[d][t] as f64 + self.alpha) / denom;
            }
        }
        debug!("lda: eta strength {}", self.eta.strength);
        LdaModel {
            k,
            topic_word,
            doc_topic,
            log_likelihood_trace: trace,
            alpha: self.alpha,
            seed,
        }
    }
}

/// Fit LDA with `eta.num_topics()` topics.
pub fn fit_lda(
    docs: &[TokenDocument],
    vocab: &Vocabulary,
    eta: &EtaPrior,
    params: &LdaParams,
) -> Result<LdaModel> {
    let k = eta.num_topics();
    if k < 2 {
        return Err(Error::invalid(format!(
            "LDA needs at least 2 topics, got {k}"
        )));
    }
    if k > vocab.len() {
        return Err(Error::invalid(format!(
            "{k} topics exceed the vocabulary size {}",
            vocab.len()
        )));
    }
    if eta.matrix.cols() != vocab.len() {
        return Err(Error::invalid("eta prior does not match the vocabulary"));
    }
    if params.iterations < 1 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    let alpha = params.alpha.unwrap_or(1.0 / k as f64);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let encoded = docs
        .iter()
        .map(|d| vocab.encode(d))
        .collect::<Result<Vec<_>>>()?;
    if encoded.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInput("all documents are empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut sampler = Sampler::new(encoded, eta, alpha, &mut rng);
    let mut weights = vec![0.0; k];
    let every = params.log_likelihood_every.max(1);
    let mut trace = Vec::new();
    for it in 1..=params.iterations {
        sampler.sweep(&mut rng, &mut weights);
        if it % every == 0 || it == params.iterations {
            trace.push(sampler.log_likelihood());
        }
    }
    if !tail_is_stable(&trace) {
        warn!("lda: log-likelihood still falling over the last 20% of sweeps");
    }
    Ok(sampler.into_model(params.seed, trace))
}

/// Whether the last 20% of a log-likelihood trace is flat or rising, allowing
/// a relative noise band of 0.5%.
pub fn tail_is_stable(trace: &[f64]) -> bool {
    let start = trace.len() - trace.len() / 5;
    let tail = &trace[start.min(trace.len())..];
    if tail.len() < 2 {
        return true;
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let band = 5e-3 * mean.abs();
    let first_half = &tail[..tail.len() / 2];
    let second_half = &tail[tail.len() / 2..];
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
    first_half.is_empty() || avg(second_half) + band >= avg(first_half)
}

pub fn lda_topics(model: &LdaModel, vocab: &Vocabulary, top_n: usize) -> Vec<Topic> {
    (0..model.k)
        .map(|t| {
            let row = model.topic_word.row(t);
            let terms = rank_indices(row, top_n)
                .into_iter()
                .map(|w| (vocab.term(w).to_string(), row[w]))
                .collect();
            Topic { id: t, terms }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn vocab_of(n: usize) -> (Vec<TokenDocument>, Vocabulary) {
        let docs = vec![TokenDocument::new(
            "d",
            (0..n).map(|i| format!("w{i:04}")).collect(),
        )];
        let v = Vocabulary::from_documents(&docs);
        (docs, v)
    }

    #[test]
    fn eta_guided_values() {
        let (_, vocab) = vocab_of(1000);
        let g = GuidanceSpec::parse("w0000 w0001 w0002 w0003 w0004\n", Path::new("g")).unwrap();
        let eta = build_eta(Some(&g), &vocab, 3).unwrap();
        assert_eq!(eta.matrix[(0, 0)], 0.1);
        assert_eq!(eta.matrix[(0, 4)], 0.1);
        assert_eq!(eta.matrix[(0, 5)], 0.5 / 995.0);
        assert!((eta.matrix[(0, 999)] - 5.0251e-4).abs() < 1e-8);
        assert_eq!(eta.matrix[(1, 0)], 1e-3);
        assert_eq!(eta.matrix[(2, 500)], 1e-3);
        assert_eq!(eta.guided_rows, 1);
        assert_eq!(eta.param(1, 0), 0.2);
    }

    #[test]
    fn eta_unguided_uniform() {
        let (_, vocab) = vocab_of(1000);
        let eta = build_eta(None, &vocab, 4).unwrap();
        assert!(eta.matrix.as_slice().iter().all(|&x| x == 1e-3));
    }

    #[test]
    fn eta_errors() {
        let (_, vocab) = vocab_of(10);
        let g = GuidanceSpec::parse("w0000\nzzz\n", Path::new("g")).unwrap();
        assert!(matches!(
            build_eta(Some(&g), &vocab, 3),
            Err(Error::GuidanceUnmatched { line: 2, .. })
        ));
        let g = GuidanceSpec::parse("w0000\nw0001\nw0002\n", Path::new("g")).unwrap();
        assert!(matches!(
            build_eta(Some(&g), &vocab, 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn rejects_single_topic_and_empty_corpus() {
        let (docs, vocab) = vocab_of(10);
        let eta = build_eta(None, &vocab, 1).unwrap();
        assert!(matches!(
            fit_lda(&docs, &vocab, &eta, &LdaParams::default()),
            Err(Error::InvalidParameter(_))
        ));
        let eta = build_eta(None, &vocab, 2).unwrap();
        let empty = vec![TokenDocument::new("e", vec![])];
        assert!(matches!(
            fit_lda(&empty, &vocab, &eta, &LdaParams::default()),
            Err(Error::EmptyInput(_))
        ));
        let eta = build_eta(None, &vocab, 11).unwrap();
        assert!(fit_lda(&docs, &vocab, &eta, &LdaParams::default()).is_err());
    }

    #[test]
    fn rows_normalized_and_empty_doc_uniform() {
        let (mut docs, vocab) = vocab_of(30);
        docs.push(TokenDocument::new("empty", vec![]));
        let eta = build_eta(None, &vocab, 3).unwrap();
        let params = LdaParams {
            iterations: 20,
            seed: 9,
            ..Default::default()
        };
        let m = fit_lda(&docs, &vocab, &eta, &params).unwrap();
        for t in 0..3 {
            assert!((m.topic_word.row(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for d in 0..2 {
            assert!((m.doc_topic.row(d).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for t in 0..3 {
            assert!((m.doc_topic[(1, t)] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(m.log_likelihood_trace.len(), 2);
        let again = fit_lda(&docs, &vocab, &eta, &params).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn topics_and_tiebreak() {
        let (_, vocab) = vocab_of(3);
        let model = LdaModel {
            k: 2,
            topic_word: DenseMatrix::from_rows(&[vec![0.5, 0.3, 0.2], vec![1.0 / 3.0; 3]]),
            doc_topic: DenseMatrix::zeros(0, 2),
            log_likelihood_trace: vec![],
            alpha: 0.5,
            seed: 0,
        };
        let t = lda_topics(&model, &vocab, 2);
        assert_eq!(
            t[0].terms,
            vec![("w0000".into(), 0.5), ("w0001".into(), 0.3)]
        );
        assert_eq!(t[1].words(), ["w0000", "w0001"]);
    }

    #[test]
    fn stability_check() {
        assert!(tail_is_stable(&[
            -100.0, -90.0, -80.0, -79.0, -79.5, -79.2, -79.1, -79.3, -79.0, -79.3
        ]));
        assert!(!tail_is_stable(&[
            -100.0, -100.0, -100.0, -100.0, -100.0, -100.0, -100.0, -100.0, -100.0, -100.0, -10.0,
            -10.0, -10.0, -10.0, -10.0, -10.0, -10.0, -10.0, -1000.0, -1000.0,
        ]));
    }
}
