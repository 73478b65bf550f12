//! Word-vector clustering: load pre-trained vectors for the unigram
//! vocabulary, run K-means (optionally seeded from guidance keywords), and
//! describe each cluster by the words closest to its centroid.

mod kmeans;
mod table;

pub use kmeans::{
    cluster_topics, cluster_words, fit_kmeans, init_centroids, kmeans_plus_plus, ClusterModel,
    DEFAULT_RESTARTS, DEFAULT_TOP_N, MAX_LLOYD_ITERATIONS,
};
pub use table::{load_embeddings, parse_embeddings, EmbeddingTable};
