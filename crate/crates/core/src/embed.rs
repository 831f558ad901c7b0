//! Laplacian eigenmaps and the scores used to compare them.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rayon::prelude::*;

use crate::datasets::Circle;
use crate::echometric::{AffinityFromDistance, DistanceMatrix};
use crate::eigen::{graph_basis, EigenBasis, Solver};
use crate::error::{Error, Result};
use crate::graph::{LaplacianVariant, WeightedGraph};
use crate::seeds::stratum_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingSource {
    RawEigenmap,
    RefinedMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Array2<f64>,
    pub source: EmbeddingSource,
    /// Multiplicity of the zero eigenvalue; above 1 the input was disconnected.
    pub zero_multiplicity: usize,
}

impl Embedding {
    pub fn is_disconnected(&self) -> bool {
        self.zero_multiplicity > 1
    }

    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }
}

/// First `m` nontrivial eigenvectors of the affinity `w` (its diagonal is
/// ignored) as coordinates.
pub fn eigenmap(w: &Array2<f64>, m: usize, variant: LaplacianVariant) -> Result<Embedding> {
    let n = w.nrows();
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!("embedding dimension {m} must lie in [1, {n})")));
    }
    let mut stripped = w.clone();
    for i in 0..n {
        stripped[[i, i]] = 0.0;
    }
    let graph = WeightedGraph::new(stripped, true)?;
    let basis = graph_basis(&graph, variant, m + 1, Solver::Auto)?;
    basis_embedding(&basis, m)
}

/// Raw eigenmap from an already computed basis of the graph.
pub fn basis_embedding(basis: &EigenBasis, m: usize) -> Result<Embedding> {
    if m == 0 || m >= basis.len() {
        return Err(Error::InvalidInput(format!("embedding dimension {m} must lie in [1, {})", basis.len())));
    }
    let coords = basis.phi().slice(ndarray::s![.., 1..=m]).to_owned();
    Ok(Embedding { coords, source: EmbeddingSource::RawEigenmap, zero_multiplicity: basis.zero_multiplicity() })
}

/// Eigenmap of the Gaussian affinity `exp(-d^2 / eps_w)` of a refined metric.
pub fn refined_eigenmap(d: &DistanceMatrix, epsilon_w: f64, m: usize, variant: LaplacianVariant) -> Result<Embedding> {
    let w = AffinityFromDistance::new(d, epsilon_w)?;
    let mut e = eigenmap(w.matrix(), m, variant)?;
    e.source = EmbeddingSource::RefinedMetric;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 300;

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: each new center drawn with probability proportional
/// to the squared distance from the closest chosen center.
fn plus_plus_init(x: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, slot) in closest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(x.row(i), centers.row(c)));
        }
    }
    centers
}

fn lloyd(x: &Array2<f64>, mut centers: Array2<f64>) -> KMeansResult {
    let (n, k) = (x.nrows(), centers.nrows());
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|c| (c, sq_dist(x.row(i), centers.row(c))))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centers.dim());
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            sums.row_mut(a).scaled_add(1.0, &x.row(i));
            counts[a] += 1;
        }
        for c in 0..k {
            // an empty cluster keeps its previous center
            if counts[c] > 0 {
                centers.row_mut(c).assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
    }
    let inertia = assignments.iter().enumerate().map(|(i, &a)| sq_dist(x.row(i), centers.row(a))).sum();
    KMeansResult { assignments, inertia }
}

/// Best of `restarts` seeded k-means++ / Lloyd runs. Ties go to the
/// earliest restart.
pub fn kmeans(x: &Array2<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} clusters for {n} points")));
    }
    let runs: Vec<KMeansResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = stratum_rng(seed, r as u64);
            lloyd(x, plus_plus_init(x, k, &mut rng))
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.inertia < runs[best].inertia {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}

/// Fraction of points whose cluster maps to their label under the best
/// one-to-one relabeling (maximum-weight matching on the contingency table).
pub fn matched_accuracy(assignments: &[usize], labels: &[i64], k: usize) -> Result<f64> {
    if assignments.len() != labels.len() {
        return Err(Error::DimensionMismatch("assignments and labels differ in length".into()));
    }
    let classes: Vec<i64> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let size = k.max(classes.len()).max(assignments.iter().map(|a| a + 1).max().unwrap_or(0));
    let mut counts = Matrix::new(size, size, 0i64);
    for (&a, l) in assignments.iter().zip(labels) {
        let c = classes.binary_search(l).unwrap();
        counts[(a, c)] += 1;
    }
    let (hits, _) = kuhn_munkres(&counts);
    Ok(hits as f64 / labels.len() as f64)
}

/// k-means on the embedding followed by optimal label matching.
pub fn clustering_accuracy(emb: &Embedding, labels: &[i64], k: usize, seed: u64) -> Result<f64> {
    let n = emb.coords.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} points", labels.len())));
    }
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds {n} points")));
    }
    let distinct = labels.iter().collect::<BTreeSet<_>>().len();
    if distinct != k {
        return Err(Error::InvalidInput(format!("k = {k} but labels have {distinct} classes")));
    }
    let km = kmeans(&emb.coords, k, KMEANS_RESTARTS, seed)?;
    matched_accuracy(&km.assignments, labels, k)
}

/// Least-squares `(a, b)` minimizing `|a v + b - t|`. A constant `v` gets
/// `a = 0`.
pub fn affine_fit(values: &[f64], targets: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mv = values.iter().sum::<f64>() / n;
    let mt = targets.iter().sum::<f64>() / n;
    let svv: f64 = values.iter().map(|v| (v - mv) * (v - mv)).sum();
    let svt: f64 = values.iter().zip(targets).map(|(v, t)| (v - mv) * (t - mt)).sum();
    let scale = mv.abs().max(values.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(1e-300);
    if svv <= (1e-14 * scale).powi(2) * n {
        return (0.0, mt);
    }
    let a = svt / svv;
    (a, mt - a * mv)
}

/// RMS deviation of the best affine rescaling of `values` from `targets`.
pub fn step_fit_score(values: &[f64], targets: &[f64]) -> Result<f64> {
    if values.len() != targets.len() || values.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} values for {} targets", values.len(), targets.len())));
    }
    let (a, b) = affine_fit(values, targets);
    let ss: f64 = values.iter().zip(targets).map(|(v, t)| (a * v + b - t).powi(2)).sum();
    Ok((ss / values.len() as f64).sqrt())
}

/// Variance of the affinely fitted values over the points carrying `label`.
pub fn fitted_variance_on(values: &[f64], targets: &[f64], labels: &[i64], label: i64) -> f64 {
    let (a, b) = affine_fit(values, targets);
    let sel: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == label)
        .map(|(v, _)| a * v + b)
        .collect();
    if sel.is_empty() {
        return 0.0;
    }
    let mean = sel.iter().sum::<f64>() / sel.len() as f64;
    sel.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / sel.len() as f64
}

/// Edges of `graph` induced inside each of the `limit` largest circles.
pub fn circle_edge_counts(graph: &WeightedGraph, circles: &[Circle], limit: usize) -> Vec<usize> {
    let mut order: Vec<&Circle> = circles.iter().collect();
    order.sort_by_key(|c| std::cmp::Reverse(c.members.len()));
    order
        .into_iter()
        .take(limit)
        .map(|c| {
            let m = &c.members;
            let mut count = 0;
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a + 1..] {
                    if graph.weight(i, j) != 0.0 {
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}

/// First coordinate of an embedding as a plain vector.
pub fn first_coordinate(emb: &Embedding) -> Array1<f64> {
    emb.coords.column(0).to_owned()
}
