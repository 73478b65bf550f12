//! Latent semantic analysis: raw-count term-document matrix and its truncated SVD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, norm, orthonormalize_columns, DenseMatrix};
use crate::topic::{rank_indices, Topic};
use crate::vocab::{TokenDocument, Vocabulary};

/// Sparse terms x documents matrix of raw occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermDocMatrix {
    num_docs: usize,
    /// Per term, `(document, count)` pairs sorted by document.
    rows: Vec<Vec<(usize, u32)>>,
}

impl TermDocMatrix {
    pub fn from_triplets(
        num_terms: usize,
        num_docs: usize,
        entries: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, u32)>> = vec![Vec::new(); num_terms];
        for (t, d, c) in entries {
            assert!(t < num_terms && d < num_docs, "entry out of bounds");
            if c > 0 {
                rows[t].push((d, c));
            }
        }
        for row in &mut rows {
            row.sort_unstable();
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        TermDocMatrix { num_docs, rows }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let entries = (0..m.rows()).flat_map(|i| {
            (0..m.cols()).filter_map(move |j| {
                let v = m[(i, j)];
                assert!(
                    v >= 0.0 && v.fract() == 0.0,
                    "counts must be nonnegative integers"
                );
                (v > 0.0).then_some((i, j, v as u32))
            })
        });
        TermDocMatrix::from_triplets(m.rows(), m.cols(), entries)
    }

    pub fn num_terms(&self) -> usize {
        self.rows.len()
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn get(&self, term: usize, doc: usize) -> u32 {
        self.rows[term]
            .binary_search_by_key(&doc, |&(d, _)| d)
            .map_or(0, |i| self.rows[term][i].1)
    }

    pub fn row(&self, term: usize) -> &[(usize, u32)] {
        &self.rows[term]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.num_terms(), self.num_docs);
        for (t, row) in self.rows.iter().enumerate() {
            for &(d, c) in row {
                m[(t, d)] = c as f64;
            }
        }
        m
    }

    /// `A · B` for a dense `B` with `num_docs` rows.
    fn mul_dense(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.num_terms(), b.cols());
        for (t, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(t);
            for &(d, c) in row {
                let c = c as f64;
                for (o, &x) in dst.iter_mut().zip(b.row(d)) {
                    *o += c * x;
                }
            }
        }
        out
    }

    /// `Aᵀ · B` for a dense `B` with `num_terms` rows.
    fn tmul_dense(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.num_docs, b.cols());
        for (t, row) in self.rows.iter().enumerate() {
            let src = b.row(t);
            for &(d, c) in row {
                let c = c as f64;
                for (o, &x) in out.row_mut(d).iter_mut().zip(src) {
                    *o += c * x;
                }
            }
        }
        out
    }
}

pub fn build_term_doc_matrix(docs: &[TokenDocument], vocab: &Vocabulary) -> Result<TermDocMatrix> {
    let mut entries = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        for t in vocab.encode(doc)? {
            entries.push((t, d, 1));
        }
    }
    Ok(TermDocMatrix::from_triplets(
        vocab.len(),
        docs.len(),
        entries,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMethod {
    /// Dense Jacobi for small matrices, subspace iteration otherwise.
    Auto,
    Dense,
    Subspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaConfig {
    pub method: SvdMethod,
    /// Extra basis vectors carried by subspace iteration.
    pub oversample: usize,
    pub max_iterations: usize,
    /// Residual bound `‖A v − σ u‖ ≤ tol · σ₁` for every kept triplet.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LsaConfig {
    fn default() -> Self {
        LsaConfig {
            method: SvdMethod::Auto,
            oversample: 10,
            max_iterations: 1000,
            tolerance: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Matrices with a short side at most this long go to the dense solver under `Auto`.
const DENSE_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsaModel {
    pub k: usize,
    pub singular_values: Vec<f64>,
    /// Left singular vectors, `n_w × k`.
    pub term_vectors: DenseMatrix,
    /// Right singular vectors, `num_docs × k`.
    pub doc_vectors: DenseMatrix,
    /// Subspace iterations used; 0 for the dense solver.
    pub iterations: usize,
}

impl LsaModel {
    /// `U_k Σ_k V_kᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.term_vectors.clone();
        for i in 0..us.rows() {
            for (j, s) in self.singular_values.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.doc_vectors.transpose())
    }
}

pub fn fit_lsa(matrix: &TermDocMatrix, k: usize) -> Result<LsaModel> {
    fit_lsa_with(matrix, k, &LsaConfig::default())
}

pub fn fit_lsa_with(matrix: &TermDocMatrix, k: usize, config: &LsaConfig) -> Result<LsaModel> {
    let (m, n) = (matrix.num_terms(), matrix.num_docs());
    let short = m.min(n);
    if k < 1 || k > short {
        return Err(Error::invalid(format!(
            "rank k={k} must be in 1..={short} for a {m}x{n} matrix"
        )));
    }
    let width = (k + config.oversample).min(short);
    let dense = match config.method {
        SvdMethod::Dense => true,
        SvdMethod::Subspace => false,
        SvdMethod::Auto => short <= DENSE_LIMIT || width == short,
    };
    let (mut u, s, mut v, iterations) = if dense {
        let svd = jacobi_svd(&matrix.to_dense());
        (
            svd.u.truncate_cols(k),
            svd.s[..k].to_vec(),
            svd.v.truncate_cols(k),
            0,
        )
    } else {
        subspace_svd(matrix, k, width, config)?
    };
    fix_signs(&mut u, &mut v);
    Ok(LsaModel {
        k,
        singular_values: s,
        term_vectors: u,
        doc_vectors: v,
        iterations,
    })
}

/// Block subspace iteration with Rayleigh-Ritz extraction through a small dense SVD.
fn subspace_svd(
    a: &TermDocMatrix,
    k: usize,
    width: usize,
    config: &LsaConfig,
) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = a.num_docs();
    let omega = DenseMatrix::from_row_major(
        n,
        width,
        (0..n * width).map(|_| rng.sample(StandardNormal)).collect(),
    );
    let mut q = a.mul_dense(&omega);
    orthonormalize_columns(&mut q, &mut rng);

    for iter in 1..=config.max_iterations {
        let mut z = a.tmul_dense(&q);
        orthonormalize_columns(&mut z, &mut rng);
        q = a.mul_dense(&z);
        orthonormalize_columns(&mut q, &mut rng);

        // B = Qᵀ A, factored through Bᵀ = Aᵀ Q = W S Xᵀ so A ≈ (Q X) S Wᵀ.
        let bt = a.tmul_dense(&q);
        let small = jacobi_svd(&bt);
        let u = q.matmul(&small.v).truncate_cols(k);
        let v = small.u.truncate_cols(k);
        let s = small.s[..k].to_vec();

        let av = a.mul_dense(&v);
        let scale = s[0].max(f64::MIN_POSITIVE);
        let converged = (0..k).all(|j| {
            let r: Vec<f64> = (0..u.rows())
                .map(|i| av[(i, j)] - s[j] * u[(i, j)])
                .collect();
            norm(&r) <= config.tolerance * scale
        });
        if converged {
            return Ok((u, s, v, iter));
        }
    }
    Err(Error::NotConverged {
        iterations: config.max_iterations,
    })
}

/// Make each left vector's largest-magnitude entry positive, flipping the paired right vector.
fn fix_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for j in 0..u.cols() {
        let col = u.column(j);
        let pivot = rank_indices(&col.iter().map(|x| x.abs()).collect::<Vec<_>>(), 1);
        if let Some(&p) = pivot.first() {
            if col[p] < 0.0 {
                for i in 0..u.rows() {
                    u[(i, j)] = -u[(i, j)];
                }
                for i in 0..v.rows() {
                    v[(i, j)] = -v[(i, j)];
                }
            }
        }
    }
}

/// Top terms of each left singular vector by absolute loading, reported with sign.
pub fn lsa_topics(model: &LsaModel, vocab: &Vocabulary, top_n: usize) -> Vec<Topic> {
    (0..model.k)
        .map(|j| {
            let col = model.term_vectors.column(j);
            let mags: Vec<f64> = col.iter().map(|x| x.abs()).collect();
            let terms = rank_indices(&mags, top_n)
                .into_iter()
                .map(|i| (vocab.term(i).to_string(), col[i]))
                .collect();
            Topic { id: j, terms }
        })
        .collect()
}
