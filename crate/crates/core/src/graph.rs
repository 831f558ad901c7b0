//! Weighted graphs built from point clouds, and their Laplacians.
//!
//! The affinity stored in a [`WeightedGraph`] is the symmetric Gaussian kernel
//! `exp(-|x_i - x_j|^2 / eps)` with a zero diagonal. Markov normalization is
//! never baked in; the normalized Laplacians are derived on demand.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Above this many points the default affinity switches to kNN truncation.
pub const DENSE_AFFINITY_LIMIT: usize = 3000;
/// Neighbor count used by the default truncation for large clouds.
pub const DEFAULT_KNN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    labels: Option<Vec<i64>>,
}

impl PointCloud {
    /// Rows of `points` are the samples.
    pub fn new(points: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        let (n, d) = points.dim();
        if n < 2 {
            return Err(Error::InvalidInput(format!("point cloud needs at least 2 points, got {n}")));
        }
        if d == 0 {
            return Err(Error::InvalidInput("points must have dimension >= 1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("point coordinates must be finite".into()));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!("{} labels for {n} points", l.len())));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    None,
    /// Keep the `k` nearest neighbors of every vertex.
    Knn(usize),
    /// Keep pairs at Euclidean distance at most `r`.
    Radius(f64),
}

/// How a kNN selection is turned into an undirected edge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetrization {
    /// Edge kept when either endpoint selects it.
    #[default]
    Max,
    /// Edge kept only when both endpoints select each other.
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityConfig {
    pub epsilon: f64,
    pub truncation: Truncation,
    pub symmetrization: Symmetrization,
    pub allow_isolated: bool,
}

impl AffinityConfig {
    /// Untruncated kernel with bandwidth `epsilon`.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            truncation: Truncation::None,
            symmetrization: Symmetrization::Max,
            allow_isolated: false,
        }
    }

    /// Size-dependent default: dense up to [`DENSE_AFFINITY_LIMIT`] points,
    /// [`DEFAULT_KNN`]-nearest neighbors above.
    pub fn for_size(n: usize, epsilon: f64) -> Self {
        let mut cfg = Self::new(epsilon);
        if n > DENSE_AFFINITY_LIMIT {
            cfg.truncation = Truncation::Knn(DEFAULT_KNN);
        }
        cfg
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        match self.truncation {
            Truncation::Knn(0) => Err(Error::InvalidInput("k_nn must be >= 1".into())),
            Truncation::Radius(r) if !(r > 0.0) => {
                Err(Error::InvalidInput(format!("radius must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

/// Symmetric non-negative affinity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: Array2<f64>,
}

impl WeightedGraph {
    /// Validates the invariants. Isolated vertices are rejected unless
    /// `allow_isolated` is set.
    pub fn new(weights: Array2<f64>, allow_isolated: bool) -> Result<Self> {
        let (n, m) = weights.dim();
        if n != m {
            return Err(Error::DimensionMismatch(format!("weight matrix is {n}x{m}")));
        }
        if n == 0 {
            return Err(Error::Empty("graph has no vertices"));
        }
        for i in 0..n {
            if weights[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero self-weight at vertex {i}")));
            }
            for j in (i + 1)..n {
                let w = weights[[i, j]];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::InvalidInput(format!("weight ({i}, {j}) = {w} is not a finite non-negative number")));
                }
                if w != weights[[j, i]] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        let g = Self { weights };
        if !allow_isolated {
            if let Some(v) = g.first_isolated() {
                return Err(Error::IsolatedVertex(v));
            }
        }
        Ok(g)
    }

    /// Builds a graph from undirected weighted edges. Self-loops are dropped;
    /// a repeated pair keeps the last weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], allow_isolated: bool) -> Result<Self> {
        let mut w = Array2::zeros((n, n));
        for &(u, v, x) in edges {
            for idx in [u, v] {
                if idx >= n {
                    return Err(Error::IndexOutOfBounds { index: idx, n });
                }
            }
            if u != v {
                w[[u, v]] = x;
                w[[v, u]] = x;
            }
        }
        Self::new(w, allow_isolated)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    pub fn degrees(&self) -> Array1<f64> {
        self.weights.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn first_isolated(&self) -> Option<usize> {
        self.weights.rows().into_iter().position(|r| r.iter().all(|&w| w == 0.0))
    }

    /// Number of nonzero off-diagonal entries (each undirected edge counted twice).
    pub fn nnz(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    pub fn into_weights(self) -> Array2<f64> {
        self.weights
    }
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dense matrix of squared Euclidean distances. Only the upper triangle is
/// computed; the lower one is a copy, so the result is bitwise symmetric.
pub fn squared_distances(cloud: &PointCloud) -> Array2<f64> {
    let n = cloud.len();
    let pts = cloud.points();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| squared_distance(pts.row(i), pts.row(j))).collect())
        .collect();
    let mut d2 = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d2[[i, j]] = v;
            d2[[j, i]] = v;
        }
    }
    d2
}

/// Gaussian affinity `exp(-|x_i - x_j|^2 / eps)` after optional truncation.
pub fn build_affinity(cloud: &PointCloud, config: &AffinityConfig) -> Result<WeightedGraph> {
    config.validate()?;
    let n = cloud.len();
    let d2 = squared_distances(cloud);
    let mut w = d2.mapv(|v| (-v / config.epsilon).exp());
    for i in 0..n {
        w[[i, i]] = 0.0;
    }

    match config.truncation {
        Truncation::None => {}
        Truncation::Radius(r) => {
            let r2 = r * r;
            w.zip_mut_with(&d2, |wij, &dij| {
                if dij > r2 {
                    *wij = 0.0;
                }
            });
        }
        Truncation::Knn(k) => {
            let k = k.min(n - 1);
            let selected: Vec<Vec<usize>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                    // distance first, index as tie-break, so the selection is deterministic
                    idx.sort_by(|&a, &b| d2[[i, a]].total_cmp(&d2[[i, b]]).then(a.cmp(&b)));
                    idx.truncate(k);
                    idx
                })
                .collect();
            let mut picks = Array2::<u8>::zeros((n, n));
            for (i, sel) in selected.iter().enumerate() {
                for &j in sel {
                    picks[[i, j]] = 1;
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let keep = match config.symmetrization {
                        Symmetrization::Max => picks[[i, j]] == 1 || picks[[j, i]] == 1,
                        Symmetrization::Min => picks[[i, j]] == 1 && picks[[j, i]] == 1,
                    };
                    if !keep {
                        w[[i, j]] = 0.0;
                        w[[j, i]] = 0.0;
                    }
                }
            }
        }
    }

    WeightedGraph::new(w, config.allow_isolated)
}

/// Adds `weight` to both entries of every listed pair.
pub fn add_noise_edges(graph: &WeightedGraph, pairs: &[(usize, usize)], weight: f64) -> Result<WeightedGraph> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::InvalidInput(format!("noise weight must be positive, got {weight}")));
    }
    let n = graph.n();
    let mut w = graph.weights().clone();
    for &(u, v) in pairs {
        for idx in [u, v] {
            if idx >= n {
                return Err(Error::IndexOutOfBounds { index: idx, n });
            }
        }
        if u == v {
            return Err(Error::InvalidInput(format!("noise edge ({u}, {v}) is a self-loop")));
        }
        w[[u, v]] += weight;
        w[[v, u]] = w[[u, v]];
    }
    WeightedGraph::new(w, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianVariant {
    /// `D - W`
    Unnormalized,
    /// `I - D^{-1/2} W D^{-1/2}`
    #[default]
    SymNormalized,
    /// `I - D^{-1} W`
    RandomWalk,
}

impl LaplacianVariant {
    pub fn name(self) -> &'static str {
        match self {
            LaplacianVariant::Unnormalized => "unnorm",
            LaplacianVariant::SymNormalized => "sym",
            LaplacianVariant::RandomWalk => "rw",
        }
    }
}

impl fmt::Display for LaplacianVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LaplacianVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnorm" | "unnormalized" => Ok(Self::Unnormalized),
            "sym" | "symmetric" => Ok(Self::SymNormalized),
            "rw" | "random-walk" => Ok(Self::RandomWalk),
            other => Err(Error::InvalidInput(format!("unknown laplacian variant '{other}'"))),
        }
    }
}

/// Dense Laplacian of `graph`. The random-walk variant is not symmetric.
pub fn laplacian(graph: &WeightedGraph, variant: LaplacianVariant) -> Result<Array2<f64>> {
    let n = graph.n();
    let w = graph.weights();
    let deg = graph.degrees();
    if variant != LaplacianVariant::Unnormalized {
        if let Some(v) = deg.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree(v));
        }
    }
    let mut l = match variant {
        LaplacianVariant::Unnormalized => w.mapv(|x| -x),
        LaplacianVariant::SymNormalized => {
            let s: Array1<f64> = deg.mapv(|d| 1.0 / d.sqrt());
            let mut l = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    // s_i * w_ij * s_j evaluated in the same order for (i,j) and (j,i)
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    l[[i, j]] = -(s[a] * w[[a, b]] * s[b]);
                }
            }
            l
        }
        LaplacianVariant::RandomWalk => {
            let mut l = w.mapv(|x| -x);
            for (i, mut row) in l.rows_mut().into_iter().enumerate() {
                row /= deg[i];
            }
            l
        }
    };
    for i in 0..n {
        l[[i, i]] = match variant {
            LaplacianVariant::Unnormalized => deg[i],
            _ => 1.0,
        };
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(xs: &[f64]) -> PointCloud {
        let pts = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap();
        PointCloud::new(pts, None).unwrap()
    }

    #[test]
    fn kernel_values() {
        let g = build_affinity(&line(&[0.0, 0.0]), &AffinityConfig::new(0.3)).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(0, 0), 0.0);

        let g = build_affinity(&line(&[0.0, 1.0]), &AffinityConfig::new(1.0)).unwrap();
        assert!((g.weight(0, 1) - 0.367_879_441_171_442_3).abs() < 1e-15);

        let g = build_affinity(&line(&[0.0, 1.0, 2.0]), &AffinityConfig::new(1.0)).unwrap();
        assert!((g.weight(0, 2) - (-4.0f64).exp()).abs() < 1e-16);
        assert!((g.weight(0, 2) - 0.018_315_638_888_734_18).abs() < 1e-15);
        assert_eq!(g.weight(0, 1), (-1.0f64).exp());
        assert_eq!(g.weight(1, 2), (-1.0f64).exp());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::new(Array2::zeros((1, 2)), None).is_err());
        assert!(PointCloud::new(Array2::zeros((3, 0)), None).is_err());
        assert!(PointCloud::new(Array2::zeros((3, 2)), Some(vec![0, 1])).is_err());
    }

    #[test]
    fn truncation_can_isolate() {
        let cloud = line(&[0.0, 0.1, 5.0]);
        let cfg = AffinityConfig::new(1.0).with_truncation(Truncation::Radius(1.0));
        assert!(matches!(build_affinity(&cloud, &cfg), Err(Error::IsolatedVertex(2))));
        let cfg = AffinityConfig { allow_isolated: true, ..cfg };
        let g = build_affinity(&cloud, &cfg).unwrap();
        assert_eq!(g.first_isolated(), Some(2));
    }

    #[test]
    fn knn_symmetrization_rules() {
        // 0 and 1 are mutual neighbors; 2 picks 1 but 1 prefers 0.
        let cloud = line(&[0.0, 1.0, 3.0]);
        let base = AffinityConfig::new(10.0).with_truncation(Truncation::Knn(1));
        let g = build_affinity(&cloud, &base).unwrap();
        assert!(g.weight(1, 2) > 0.0);
        assert_eq!(g.weight(0, 2), 0.0);
        let mutual = AffinityConfig { symmetrization: Symmetrization::Min, allow_isolated: true, ..base };
        let g = build_affinity(&cloud, &mutual).unwrap();
        assert_eq!(g.weight(1, 2), 0.0);
        assert!(g.weight(0, 1) > 0.0);
    }

    #[test]
    fn default_truncation_threshold() {
        assert_eq!(AffinityConfig::for_size(3000, 1.0).truncation, Truncation::None);
        assert_eq!(AffinityConfig::for_size(3001, 1.0).truncation, Truncation::Knn(50));
        assert!(AffinityConfig::new(0.0).validate().is_err());
        assert!(AffinityConfig::new(1.0).with_truncation(Truncation::Knn(0)).validate().is_err());
    }

    #[test]
    fn noise_edges() {
        let g = build_affinity(&line(&[0.0, 1.0, 2.0]), &AffinityConfig::new(1.0)).unwrap();
        assert_eq!(add_noise_edges(&g, &[], 1.0).unwrap(), g);

        let w = Array2::from_shape_fn((10, 10), |(i, j)| if i != j && (i < 5) == (j < 5) { 1.0 } else { 0.0 });
        let g = WeightedGraph::new(w, false).unwrap();
        let h = add_noise_edges(&g, &[(0, 5)], 0.5).unwrap();
        let changed: Vec<_> = g
            .weights()
            .indexed_iter()
            .filter(|&((i, j), &v)| h.weight(i, j) != v)
            .map(|((i, j), _)| (i, j))
            .collect();
        assert_eq!(changed, vec![(0, 5), (5, 0)]);
        assert!(h.weight(0, 5) >= 0.5 && h.weight(5, 0) >= 0.5);
        assert!(matches!(add_noise_edges(&g, &[(0, 10)], 0.5), Err(Error::IndexOutOfBounds { index: 10, .. })));
    }

    #[test]
    fn laplacian_variants() {
        let g = WeightedGraph::new(array![[0.0, 1.0], [1.0, 0.0]], false).unwrap();
        let l = laplacian(&g, LaplacianVariant::Unnormalized).unwrap();
        assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);

        let g = WeightedGraph::new(array![[0.0, 2.0, 0.0], [2.0, 0.0, 1.0], [0.0, 1.0, 0.0]], false).unwrap();
        let l = laplacian(&g, LaplacianVariant::Unnormalized).unwrap();
        for row in l.rows() {
            assert!(row.sum().abs() < 1e-12);
        }
        let ls = laplacian(&g, LaplacianVariant::SymNormalized).unwrap();
        assert_eq!(ls, ls.t());
        assert!((ls[[0, 1]] + 2.0 / (2.0f64 * 3.0).sqrt()).abs() < 1e-15);
        let lrw = laplacian(&g, LaplacianVariant::RandomWalk).unwrap();
        for row in lrw.rows() {
            assert!(row.sum().abs() < 1e-15);
        }
    }

    #[test]
    fn zero_degree_rejected_for_normalized() {
        let g = WeightedGraph::new(Array2::zeros((2, 2)), true).unwrap();
        assert!(laplacian(&g, LaplacianVariant::Unnormalized).is_ok());
        assert!(matches!(laplacian(&g, LaplacianVariant::SymNormalized), Err(Error::ZeroDegree(0))));
        assert!(matches!(laplacian(&g, LaplacianVariant::RandomWalk), Err(Error::ZeroDegree(0))));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("unnorm".parse::<LaplacianVariant>().unwrap(), LaplacianVariant::Unnormalized);
        assert_eq!("rw".parse::<LaplacianVariant>().unwrap(), LaplacianVariant::RandomWalk);
        assert!("foo".parse::<LaplacianVariant>().is_err());
    }
}
