//! Topic extraction for small discussion-board corpora.
//!
//! Three engines share one preprocessing pipeline: latent semantic analysis
//! ([`lsa`]), LDA with an optional keyword-guided prior ([`lda`]) and K-means
//! clustering of pre-trained word vectors ([`embed`]). [`coherence`] scores
//! topic lists and scans topic counts; [`pipeline`] and [`report`] tie the
//! stages together for the command-line tool.

pub mod coherence;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod export;
pub mod guidance;
pub mod lda;
pub mod linalg;
pub mod lsa;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod seed;
pub mod synthetic;
pub mod topic;
pub mod vocab;

pub use corpus::{load_corpus, save_corpus, CorpusFormat, RawCorpus, RawPost};
pub use error::{Error, ErrorKind, Result};
pub use guidance::{load_guidance, GuidanceSpec};
pub use linalg::DenseMatrix;
pub use preprocess::{build_documents, PreprocessConfig};
pub use topic::Topic;
pub use vocab::{TokenDocument, Vocabulary};
