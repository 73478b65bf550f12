use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingTable;
use crate::error::{Error, Result};
use crate::guidance::GuidanceSpec;
use crate::linalg::{dot, norm, DenseMatrix};
use crate::seed::derive_seed;
use crate::topic::Topic;

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_TOP_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// `K × dim`.
    pub centroids: DenseMatrix,
    /// Cluster of each table word, by table index.
    pub assignment: Vec<usize>,
    /// Sum of squared Euclidean distances to the assigned centroids.
    pub inertia: f64,
    /// Whether the centroids were initialized from guidance keywords.
    pub seeded: bool,
    /// Lloyd iterations of the kept run.
    pub iterations: usize,
    /// Inertia after each assignment step of the kept run.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Extend `centers` to `k` rows with k-means++ draws over the table.
pub fn kmeans_plus_plus(
    table: &EmbeddingTable,
    k: usize,
    mut centers: Vec<Vec<f64>>,
    rng: &mut impl Rng,
) -> DenseMatrix {
    let n = table.len();
    if centers.is_empty() && k > 0 {
        centers.push(table.vector(rng.random_range(0..n)).to_vec());
    }
    let mut closest: Vec<f64> = (0..n)
        .map(|i| {
            centers
                .iter()
                .map(|c| sq_dist(table.vector(i), c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            closest
                .iter()
                .position(|&d| {
                    acc += d;
                    u < acc && d > 0.0
                })
                .unwrap_or_else(|| closest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = table.vector(pick).to_vec();
        for (i, d) in closest.iter_mut().enumerate() {
            *d = d.min(sq_dist(table.vector(i), &c));
        }
        centers.push(c);
    }
    DenseMatrix::from_rows(&centers)
}

/// Initial centroids: one keyword mean per guidance line, the rest by k-means++.
pub fn init_centroids(
    guidance: Option<&GuidanceSpec>,
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
) -> Result<DenseMatrix> {
    check_k(table, k)?;
    let mut centers = Vec::new();
    if let Some(g) = guidance {
        if g.len() > k {
            return Err(Error::invalid(format!(
                "{} guidance lines exceed the {k} clusters",
                g.len()
            )));
        }
        for ids in g.resolve_with(|w| table.id(w), "embedding table")? {
            let mut mean = vec![0.0; table.dim()];
            for &i in &ids {
                mean.iter_mut()
                    .zip(table.vector(i))
                    .for_each(|(m, x)| *m += x);
            }
            mean.iter_mut().for_each(|m| *m /= ids.len() as f64);
            centers.push(mean);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(kmeans_plus_plus(table, k, centers, &mut rng))
}

fn check_k(table: &EmbeddingTable, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("number of clusters must be positive"));
    }
    if k > table.len() {
        return Err(Error::invalid(format!(
            "{k} clusters exceed the {} embedded words",
            table.len()
        )));
    }
    Ok(())
}

/// K-means with Lloyd iterations.
///
/// With `init` the run starts from those centroids and runs once. Without it,
/// `restarts` k-means++ runs are made and the lowest-inertia one is kept.
pub fn fit_kmeans(
    table: &EmbeddingTable,
    k: usize,
    init: Option<&DenseMatrix>,
    restarts: usize,
    seed: u64,
) -> Result<ClusterModel> {
    check_k(table, k)?;
    if let Some(c) = init {
        if c.rows() != k || c.cols() != table.dim() {
            return Err(Error::invalid(format!(
                "initial centroids are {}x{}, expected {k}x{}",
                c.rows(),
                c.cols(),
                table.dim()
            )));
        }
        let mut model = lloyd(table, c.clone());
        model.seeded = true;
        return Ok(model);
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let mut best: Option<ClusterModel> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[r as u64]));
        let start = kmeans_plus_plus(table, k, Vec::new(), &mut rng);
        let model = lloyd(table, start);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Nearest centroid for every word (lowest index wins ties) and the total cost.
fn assign(table: &EmbeddingTable, centroids: &DenseMatrix) -> (Vec<usize>, Vec<f64>) {
    (0..table.len())
        .map(|i| {
            let v = table.vector(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..centroids.rows() {
                let d = sq_dist(v, centroids.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn lloyd(table: &EmbeddingTable, mut centroids: DenseMatrix) -> ClusterModel {
    let k = centroids.rows();
    let dim = table.dim();
    let (mut assignment, mut dists) = assign(table, &centroids);
    let mut trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;

    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sums = DenseMatrix::zeros(k, dim);
        let mut sizes = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            sizes[c] += 1;
            sums.row_mut(c)
                .iter_mut()
                .zip(table.vector(i))
                .for_each(|(s, x)| *s += x);
        }
        for (c, &size) in sizes.iter().enumerate() {
            if size > 0 {
                let n = size as f64;
                centroids
                    .row_mut(c)
                    .iter_mut()
                    .zip(sums.row(c))
                    .for_each(|(m, s)| *m = s / n);
            }
        }
        for c in 0..k {
            if sizes[c] == 0 {
                repair_empty(table, &mut centroids, &mut assignment, &mut sizes, c);
            }
        }
        let (next, next_dists) = assign(table, &centroids);
        trace.push(next_dists.iter().sum());
        dists = next_dists;
        if next == assignment {
            break;
        }
        assignment = next;
    }

    ClusterModel {
        k,
        centroids,
        assignment,
        inertia: dists.iter().sum(),
        seeded: false,
        iterations,
        inertia_trace: trace,
    }
}

/// Move the point farthest from its centroid (among clusters with more than one
/// member) into the empty cluster `empty`.
fn repair_empty(
    table: &EmbeddingTable,
    centroids: &mut DenseMatrix,
    assignment: &mut [usize],
    sizes: &mut [usize],
    empty: usize,
) {
    let mut far: Option<(usize, f64)> = None;
    for (i, &c) in assignment.iter().enumerate() {
        if sizes[c] < 2 {
            continue;
        }
        let d = sq_dist(table.vector(i), centroids.row(c));
        if far.is_none_or(|(_, best)| d > best) {
            far = Some((i, d));
        }
    }
    if let Some((i, _)) = far {
        sizes[assignment[i]] -= 1;
        sizes[empty] += 1;
        assignment[i] = empty;
        centroids.row_mut(empty).copy_from_slice(table.vector(i));
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        -1.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// The `top_n` table words most cosine-similar to each centroid.
pub fn cluster_topics(model: &ClusterModel, table: &EmbeddingTable, top_n: usize) -> Vec<Topic> {
    (0..model.k)
        .map(|c| {
            let centroid = model.centroids.row(c);
            let mut scored: Vec<(usize, f64)> = (0..table.len())
                .map(|i| (i, cosine(table.vector(i), centroid)))
                .collect();
            scored.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| table.word(a.0).cmp(table.word(b.0)))
            });
            scored.truncate(top_n);
            Topic {
                id: c,
                terms: scored
                    .into_iter()
                    .map(|(i, s)| (table.word(i).to_string(), s))
                    .collect(),
            }
        })
        .collect()
}

/// Seed from guidance when given (one run), otherwise k-means++ restarts.
pub fn cluster_words(
    table: &EmbeddingTable,
    k: usize,
    guidance: Option<&GuidanceSpec>,
    restarts: usize,
    seed: u64,
) -> Result<ClusterModel> {
    match guidance {
        Some(g) => {
            let init = init_centroids(Some(g), table, k, seed)?;
            fit_kmeans(table, k, Some(&init), 1, seed)
        }
        None => fit_kmeans(table, k, None, restarts, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::Path;

    fn table(points: &[&[f64]]) -> EmbeddingTable {
        EmbeddingTable::from_vectors(
            (0..points.len()).map(|i| format!("p{}", i + 1)).collect(),
            points.iter().map(|p| p.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn seeded_centroid_is_keyword_mean() {
        let t = EmbeddingTable::from_vectors(
            vec!["aa".into(), "bb".into(), "cc".into()],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 5.0],
            ],
        )
        .unwrap();
        let g = GuidanceSpec::parse("aa bb\n", Path::new("g")).unwrap();
        let c = init_centroids(Some(&g), &t, 1, 0).unwrap();
        assert_eq!(c.row(0), [0.5, 0.5, 0.0]);
        let c3 = init_centroids(Some(&g), &t, 3, 4).unwrap();
        assert_eq!(c3.row(0), [0.5, 0.5, 0.0]);
        let mut rest = [c3.row(1).to_vec(), c3.row(2).to_vec()];
        rest.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(rest
            .iter()
            .all(|r| (0..3).any(|i| t.vector(i) == r.as_slice())));
        assert_ne!(rest[0], rest[1]);
    }

    #[test]
    fn plus_plus_picks_both_points() {
        let t = table(&[&[0.0, 0.0], &[3.0, 4.0]]);
        for seed in 0..10 {
            let c = init_centroids(None, &t, 2, seed).unwrap();
            let mut rows = vec![c.row(0).to_vec(), c.row(1).to_vec()];
            rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(rows, vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        }
    }

    #[test]
    fn guidance_errors() {
        let t = table(&[&[0.0], &[1.0]]);
        let g = GuidanceSpec::parse("zz\n", Path::new("g")).unwrap();
        assert!(matches!(
            init_centroids(Some(&g), &t, 2, 0),
            Err(Error::GuidanceUnmatched { .. })
        ));
        let g = GuidanceSpec::parse("p1\np2\n", Path::new("g")).unwrap();
        assert!(init_centroids(Some(&g), &t, 1, 0).is_err());
    }

    #[test]
    fn separated_blocks() {
        let t = table(&[&[0.0, 0.0], &[0.0, 1.0], &[10.0, 10.0], &[10.0, 11.0]]);
        let m = fit_kmeans(&t, 2, None, DEFAULT_RESTARTS, 1).unwrap();
        assert_eq!(m.assignment[0], m.assignment[1]);
        assert_eq!(m.assignment[2], m.assignment[3]);
        assert_ne!(m.assignment[0], m.assignment[2]);
        let mut cs = vec![m.centroids.row(0).to_vec(), m.centroids.row(1).to_vec()];
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, vec![vec![0.0, 0.5], vec![10.0, 10.5]]);
        assert!((m.inertia - 1.0).abs() < 1e-12);
        assert!(!m.seeded);
    }

    #[test]
    fn one_cluster_per_point() {
        let t = table(&[&[0.0], &[1.0], &[5.0], &[9.0]]);
        let m = fit_kmeans(&t, 4, None, 3, 2).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut a = m.assignment.clone();
        a.sort();
        assert_eq!(a, [0, 1, 2, 3]);
    }

    #[test]
    fn too_many_clusters() {
        let t = table(&[&[0.0], &[1.0]]);
        assert!(matches!(
            fit_kmeans(&t, 3, None, 1, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(fit_kmeans(&t, 1, None, 0, 0).is_err());
    }

    #[test]
    fn empty_cluster_repaired() {
        let t = table(&[&[0.0], &[1.0], &[2.0], &[10.0]]);
        let init = DenseMatrix::from_rows(&[vec![1.0], vec![100.0]]);
        let m = fit_kmeans(&t, 2, Some(&init), 1, 0).unwrap();
        assert!(m.seeded);
        assert_eq!(m.members(1).count() + m.members(0).count(), 4);
        assert!(m.members(0).count() > 0 && m.members(1).count() > 0);
        assert!(m.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn cosine_retrieval_order() {
        let t = EmbeddingTable::from_vectors(
            vec!["a".into(), "b".into(), "c".into(), "z".into()],
            vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.9, 0.1],
                vec![0.0, 0.0],
            ],
        )
        .unwrap();
        let model = ClusterModel {
            k: 1,
            centroids: DenseMatrix::from_rows(&[vec![1.0, 0.0]]),
            assignment: vec![0; 4],
            inertia: 0.0,
            seeded: false,
            iterations: 0,
            inertia_trace: vec![],
        };
        let topics = cluster_topics(&model, &t, 4);
        assert_eq!(topics[0].words(), ["a", "c", "b", "z"]);
        assert_eq!(topics[0].terms[3].1, -1.0);
    }

    fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 3..25)
    }

    proptest! {
        #[test]
        fn lloyd_invariants(pts in points(), k in 1usize..4, seed in any::<u64>()) {
            let k = k.min(pts.len());
            let t = EmbeddingTable::from_vectors(
                (0..pts.len()).map(|i| format!("w{i}")).collect(),
                pts.clone(),
            ).unwrap();
            let m = fit_kmeans(&t, k, None, 2, seed).unwrap();
            prop_assert!(m.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
            let mut recomputed = 0.0;
            for (i, &c) in m.assignment.iter().enumerate() {
                let own = sq_dist(t.vector(i), m.centroids.row(c));
                recomputed += own;
                for other in 0..k {
                    prop_assert!(own <= sq_dist(t.vector(i), m.centroids.row(other)) + 1e-9);
                }
            }
            prop_assert!((recomputed - m.inertia).abs() <= 1e-6 * m.inertia.max(1e-12));
        }

        #[test]
        fn seeded_runs_are_bit_identical(pts in points(), seed in any::<u64>()) {
            let t = EmbeddingTable::from_vectors(
                (0..pts.len()).map(|i| format!("w{i}")).collect(),
                pts,
            ).unwrap();
            let g = GuidanceSpec::parse("w0 w1\n", Path::new("g")).unwrap();
            let a = cluster_words(&t, 2, Some(&g), 1, seed).unwrap();
            let b = cluster_words(&t, 2, Some(&g), 1, seed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn retrieval_order_scale_invariant(pts in points(), factor in 0.01f64..100.0) {
            let t = EmbeddingTable::from_vectors(
                (0..pts.len()).map(|i| format!("w{i}")).collect(),
                pts,
            ).unwrap();
            let m = fit_kmeans(&t, 2.min(t.len()), None, 1, 3).unwrap();
            let scaled_table = t.scaled(factor);
            let mut scaled_model = m.clone();
            for c in 0..m.k {
                scaled_model.centroids.row_mut(c).iter_mut().for_each(|x| *x *= factor);
            }
            let a: Vec<Vec<String>> = cluster_topics(&m, &t, 5).iter().map(|t| t.words().iter().map(|s| s.to_string()).collect()).collect();
            let b: Vec<Vec<String>> = cluster_topics(&scaled_model, &scaled_table, 5).iter().map(|t| t.words().iter().map(|s| s.to_string()).collect()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
