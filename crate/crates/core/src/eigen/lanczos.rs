//! Lanczos iteration with full reorthogonalization for the low end of a
//! symmetric spectrum.
//!
//! The iteration runs on `sigma I - L`, where `sigma` is a Gershgorin bound
//! on the spectrum of `L`, so the wanted eigenvalues become the largest ones.
//! Breakdown (an invariant subspace) restarts from a fresh vector orthogonal
//! to the current basis, which also picks up repeated eigenvalues.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense_eigenpairs;
use crate::error::{Error, Result};

const START_SEED: u64 = 0x1a2c_05ee_d5ee_d000;
const RITZ_TOL: f64 = 1e-11;

enum Operator<'a> {
    Dense(&'a Array2<f64>),
    Csr { indptr: Vec<usize>, indices: Vec<usize>, data: Vec<f64> },
}

impl<'a> Operator<'a> {
    fn new(l: &'a Array2<f64>) -> Self {
        let n = l.nrows();
        let nnz = l.iter().filter(|&&v| v != 0.0).count();
        if nnz * 4 > n * n {
            return Operator::Dense(l);
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in l.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Operator::Csr { indptr, indices, data }
    }

    fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        match self {
            Operator::Dense(l) => l.dot(x),
            Operator::Csr { indptr, indices, data } => (0..indptr.len() - 1)
                .map(|i| (indptr[i]..indptr[i + 1]).map(|p| data[p] * x[indices[p]]).sum())
                .collect(),
        }
    }
}

fn orthogonalize(w: &mut Array1<f64>, basis: &[Array1<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.scaled_add(-c, q);
        }
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng, basis: &[Array1<f64>]) -> Option<Array1<f64>> {
    for _ in 0..8 {
        let mut v: Array1<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, basis);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            return Some(v / norm);
        }
    }
    None
}

pub(super) fn smallest_eigenpairs(l: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.nrows();
    let sigma = l
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let op = Operator::new(l);
    let max_dim = n.min((30 * k).max(1500));
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);

    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(max_dim);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    basis.push(random_unit(n, &mut rng, &[]).ok_or_else(|| Error::Numerical("lanczos start vector".into()))?);
    let mut next_check = (2 * k + 20).min(max_dim);

    loop {
        let j = basis.len() - 1;
        let q = &basis[j];
        let mut w = q * sigma - op.apply(q);
        let a = q.dot(&w);
        alpha.push(a);
        w.scaled_add(-a, q);
        if j > 0 {
            w.scaled_add(-beta[j - 1], &basis[j - 1]);
        }
        orthogonalize(&mut w, &basis);
        let b = w.dot(&w).sqrt();
        let m = basis.len();

        let exhausted = m == max_dim;
        if m >= next_check || exhausted {
            next_check = (m + (m / 4).max(20)).min(max_dim);
            if let Some(result) = ritz_pairs(&basis, &alpha, &beta, b, k, sigma)? {
                return Ok(result);
            }
            if exhausted {
                return Err(Error::Numerical(format!(
                    "lanczos did not converge within {max_dim} iterations"
                )));
            }
        }

        if b <= 1e-10 * sigma {
            beta.push(0.0);
            match random_unit(n, &mut rng, &basis) {
                Some(v) => basis.push(v),
                None => {
                    return ritz_pairs(&basis, &alpha, &beta, 0.0, k, sigma)?
                        .ok_or_else(|| Error::Numerical("lanczos breakdown without convergence".into()));
                }
            }
        } else {
            beta.push(b);
            basis.push(w / b);
        }
    }
}

/// Ritz pairs of the current tridiagonal projection, if the top `k` have
/// converged. Eigenvalues are returned for `L`, ascending.
fn ritz_pairs(
    basis: &[Array1<f64>],
    alpha: &[f64],
    beta: &[f64],
    last_beta: f64,
    k: usize,
    sigma: f64,
) -> Result<Option<(Vec<f64>, Array2<f64>)>> {
    let m = alpha.len();
    if m < k {
        return Ok(None);
    }
    let t = Array2::from_shape_fn((m, m), |(i, j)| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (theta, s) = dense_eigenpairs(&t, m)?;
    // largest theta of sigma I - L are the smallest eigenvalues of L
    let wanted: Vec<usize> = (m - k..m).rev().collect();
    let converged = wanted
        .iter()
        .all(|&i| (last_beta * s[[m - 1, i]]).abs() <= RITZ_TOL * sigma);
    if !converged {
        return Ok(None);
    }
    let n = basis[0].len();
    let mut phi = Array2::zeros((n, k));
    for (col, &i) in wanted.iter().enumerate() {
        let mut v = Array1::zeros(n);
        for (row, q) in basis.iter().enumerate().take(m) {
            v.scaled_add(s[[row, i]], q);
        }
        let norm = v.dot(&v).sqrt();
        phi.column_mut(col).assign(&(v / norm));
    }
    // one more orthonormalization pass removes the drift of near-degenerate Ritz vectors
    for c in 0..k {
        let mut v = phi.column(c).to_owned();
        for p in 0..c {
            let q = phi.column(p).to_owned();
            let d = q.dot(&v);
            v.scaled_add(-d, &q);
        }
        let norm = v.dot(&v).sqrt();
        phi.column_mut(c).assign(&(v / norm));
    }
    let mu = wanted.iter().map(|&i| sigma - theta[i]).collect();
    Ok(Some((mu, phi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{compute_basis_with, Solver};
    use crate::graph::{build_affinity, laplacian, AffinityConfig, LaplacianVariant, PointCloud, Truncation};

    fn ring_cloud(n: usize) -> PointCloud {
        let pts = Array2::from_shape_fn((n, 2), |(i, c)| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.01 * ((i * 37 % 11) as f64);
            if c == 0 { t.cos() * (1.0 + 0.2 * (3.0 * t).sin()) } else { t.sin() }
        });
        PointCloud::new(pts, None).unwrap()
    }

    #[test]
    fn matches_dense_solver() {
        let cloud = ring_cloud(400);
        let cfg = AffinityConfig::new(0.01).with_truncation(Truncation::Knn(10));
        let g = build_affinity(&cloud, &cfg).unwrap();
        for variant in [LaplacianVariant::SymNormalized, LaplacianVariant::Unnormalized] {
            let l = laplacian(&g, variant).unwrap();
            let dense = compute_basis_with(&l, 12, Solver::Dense).unwrap();
            let lan = compute_basis_with(&l, 12, Solver::Lanczos).unwrap();
            for (a, b) in dense.mu().iter().zip(lan.mu()) {
                assert!((a - b).abs() < 1e-9, "{variant}: {a} vs {b}");
            }
            assert!(lan.max_relative_residual(&l) < 1e-8);
            assert!(lan.orthonormality_error() < 1e-10);
        }
    }

    #[test]
    fn handles_repeated_zero_eigenvalue() {
        // two disjoint 30-cycles: the kernel of L is two-dimensional
        let n = 60;
        let mut w = Array2::zeros((n, n));
        for block in [0, 30] {
            for i in 0..30 {
                let (a, b) = (block + i, block + (i + 1) % 30);
                w[[a, b]] = 1.0;
                w[[b, a]] = 1.0;
            }
        }
        let g = crate::graph::WeightedGraph::new(w, false).unwrap();
        let l = laplacian(&g, LaplacianVariant::Unnormalized).unwrap();
        let lan = compute_basis_with(&l, 4, Solver::Lanczos).unwrap();
        let dense = compute_basis_with(&l, 4, Solver::Dense).unwrap();
        assert_eq!(lan.zero_multiplicity(), 2);
        for (a, b) in dense.mu().iter().zip(lan.mu()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
