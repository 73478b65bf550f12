//! Small dense linear algebra used by the LSA engine.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape does not match data length");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DenseMatrix::from_row_major(rows.len(), cols, data)
    }

    pub(crate) fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = DenseMatrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Keep the leading `k` columns.
    pub fn truncate_cols(&self, k: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, k);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Thin SVD `a = U diag(s) Vᵀ` with singular values in descending order.
pub(crate) struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Returns `min(m, n)` triplets. Left vectors belonging to zero singular
/// values are completed to an orthonormal set.
pub(crate) fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.rows() < a.cols() {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.columns();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let s_max = order.first().map_or(0.0, |&i| sigma[i]);
    let cutoff = s_max * f64::EPSILON * m.max(n) as f64;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for &i in &order {
        if sigma[i] > cutoff && sigma[i] > 0.0 {
            u_cols.push(w[i].iter().map(|x| x / sigma[i]).collect());
            s.push(sigma[i]);
        } else {
            deficient.push(u_cols.len());
            u_cols.push(vec![0.0; m]);
            s.push(0.0);
        }
        v_cols.push(v[i].clone());
    }
    complete_basis(&mut u_cols, &deficient);

    Svd {
        u: DenseMatrix::from_columns(m, &u_cols),
        s,
        v: DenseMatrix::from_columns(n, &v_cols),
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fill the listed (zeroed) columns with unit vectors orthogonal to all others,
/// drawn from the standard basis.
fn complete_basis(cols: &mut [Vec<f64>], slots: &[usize]) {
    let m = cols.first().map_or(0, Vec::len);
    let mut candidate = 0;
    for &slot in slots {
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (j, c) in cols.iter().enumerate() {
                    if j == slot {
                        continue;
                    }
                    let proj = dot(&e, c);
                    e.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-6 {
                cols[slot] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Orthonormalize the columns of `a` in place with twice-applied modified
/// Gram-Schmidt. Columns that collapse are replaced by random directions.
pub(crate) fn orthonormalize_columns(a: &mut DenseMatrix, rng: &mut impl Rng) {
    let rows = a.rows();
    let mut cols = a.columns();
    for j in 0..cols.len() {
        let mut attempts = 0;
        loop {
            let before = norm(&cols[j]);
            for _ in 0..2 {
                for i in 0..j {
                    let proj = dot(&cols[j], &cols[i]);
                    let (done, cur) = cols.split_at_mut(j);
                    cur[0]
                        .iter_mut()
                        .zip(&done[i])
                        .for_each(|(x, y)| *x -= proj * y);
                }
            }
            let nrm = norm(&cols[j]);
            if nrm > 0.0 && nrm > 1e-10 * before {
                cols[j].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            if attempts >= 8 {
                break;
            }
            attempts += 1;
            cols[j] = (0..rows).map(|_| rng.random::<f64>() - 0.5).collect();
        }
    }
    *a = DenseMatrix::from_columns(rows, &cols);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-3..=3) as f64)
            .collect();
        DenseMatrix::from_row_major(rows, cols, data)
    }

    fn reconstruct(svd: &Svd) -> DenseMatrix {
        let mut us = svd.u.clone();
        for i in 0..us.rows() {
            for (j, s) in svd.s.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&svd.v.transpose())
    }

    fn max_off_identity(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q);
        let mut worst: f64 = 0.0;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    #[test]
    fn diagonal() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        let svd = jacobi_svd(&a);
        assert_eq!(svd.s, vec![3.0, 1.0]);
    }

    #[test]
    fn reconstruction_both_orientations() {
        for (r, c, seed) in [(7, 4, 1), (4, 7, 2), (6, 6, 3)] {
            let a = random(r, c, seed);
            let svd = jacobi_svd(&a);
            let mut diff = reconstruct(&svd);
            for (x, y) in diff.data.iter_mut().zip(&a.data) {
                *x -= y;
            }
            assert!(diff.frobenius_norm() < 1e-10);
            assert!(max_off_identity(&svd.u) < 1e-12);
            assert!(max_off_identity(&svd.v) < 1e-12);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_completes_left_basis() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![1.0, 2.0, 3.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let svd = jacobi_svd(&a);
        assert!(svd.s[1] == 0.0 && svd.s[2] == 0.0);
        assert!(max_off_identity(&svd.u) < 1e-12);
    }

    #[test]
    fn gram_schmidt_handles_dependent_columns() {
        let mut a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![1.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        orthonormalize_columns(&mut a, &mut rng);
        assert!(max_off_identity(&a) < 1e-12);
    }
}
