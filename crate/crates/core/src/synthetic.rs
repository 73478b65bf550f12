//! Planted-structure generators for validation and benchmarking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::EmbeddingTable;
use crate::vocab::{TokenDocument, Vocabulary};

/// Alphabetic name for a non-negative integer: 0 -> "a", 25 -> "z", 26 -> "ba".
fn letters(mut n: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (n % 26) as u8);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub doc_len: usize,
    /// Share of each document's tokens drawn from its own topic block.
    pub purity: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            topics: 5,
            words_per_topic: 40,
            docs: 200,
            doc_len: 50,
            purity: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<TokenDocument>,
    pub vocab: Vocabulary,
    /// Words of each planted topic.
    pub blocks: Vec<Vec<String>>,
    /// Planted topic of each document.
    pub doc_topic: Vec<usize>,
}

/// Documents cycle through the topics; each token comes from the document's
/// block with probability `purity`, otherwise from a uniformly chosen other block.
pub fn planted_corpus(spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let blocks: Vec<Vec<String>> = (0..spec.topics)
        .map(|t| {
            (0..spec.words_per_topic)
                .map(|w| format!("{}{}", letters(t), letters(w + 26 * 26)))
                .collect()
        })
        .collect();
    let mut docs = Vec::with_capacity(spec.docs);
    let mut doc_topic = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let topic = d % spec.topics;
        let tokens = (0..spec.doc_len)
            .map(|_| {
                let block = if spec.topics == 1 || rng.random::<f64>() < spec.purity {
                    topic
                } else {
                    let other = rng.random_range(0..spec.topics - 1);
                    if other >= topic {
                        other + 1
                    } else {
                        other
                    }
                };
                blocks[block][rng.random_range(0..spec.words_per_topic)].clone()
            })
            .collect();
        docs.push(TokenDocument::new(format!("doc-{d}"), tokens));
        doc_topic.push(topic);
    }
    let vocab = Vocabulary::from_documents(&docs);
    PlantedCorpus {
        docs,
        vocab,
        blocks,
        doc_topic,
    }
}

#[derive(Debug, Clone)]
pub struct Blobs {
    pub table: EmbeddingTable,
    /// Words of each blob; blob `b` is centered on the `b`-th unit axis.
    pub groups: Vec<Vec<String>>,
}

/// Isotropic Gaussian blobs around orthogonal unit vectors.
pub fn gaussian_blobs(blobs: usize, per_blob: usize, dim: usize, sd: f64, seed: u64) -> Blobs {
    assert!(blobs <= dim, "need one axis per blob");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).expect("valid standard deviation");
    let mut words = Vec::new();
    let mut vectors = Vec::new();
    let mut groups = Vec::new();
    for b in 0..blobs {
        let mut group = Vec::new();
        for i in 0..per_blob {
            let word = format!("{}{}", letters(b), letters(i + 26 * 26));
            let v: Vec<f64> = (0..dim)
                .map(|j| if j == b { 1.0 } else { 0.0 } + noise.sample(&mut rng))
                .collect();
            group.push(word.clone());
            words.push(word);
            vectors.push(v);
        }
        groups.push(group);
    }
    Blobs {
        table: EmbeddingTable::from_vectors(words, vectors).expect("finite vectors"),
        groups,
    }
}
