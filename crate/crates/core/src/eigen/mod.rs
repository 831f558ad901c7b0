//! Low end of the Laplacian spectrum.
//!
//! Eigenvalues are stored as `mu`, and the oscillation frequencies used by
//! every propagator are `lambda = sqrt(mu)`. Columns of `phi` are sign
//! normalized so that the entry of largest magnitude is positive (lowest
//! index wins ties), which makes outputs reproducible across solvers.

pub mod cache;
mod lanczos;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::graph::{laplacian, LaplacianVariant, WeightedGraph};

/// Dense solver is used up to this size, Lanczos above.
pub const DENSE_SOLVER_LIMIT: usize = 3000;
/// Eigenvalues within this distance of zero are snapped to zero.
pub const ZERO_CLAMP: f64 = 1e-10;
/// `lambda_1` at or below this is treated as a disconnected graph.
pub const GAP_THRESHOLD: f64 = 1e-6;

const SYMMETRY_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dense for `n <= DENSE_SOLVER_LIMIT`, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// First `N` eigenpairs of a Laplacian.
///
/// When `measure` is present the columns of `phi` are orthonormal in the
/// weighted inner product `<f, g> = sum_x m_x f_x g_x` (random-walk
/// Laplacian, `m` = degrees); otherwise in the plain dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    mu: Vec<f64>,
    lambda: Vec<f64>,
    phi: Array2<f64>,
    measure: Option<Vec<f64>>,
}

impl EigenBasis {
    /// Assembles a basis from ascending eigenvalues and matching columns.
    /// Eigenvalues within [`ZERO_CLAMP`] of zero are snapped to zero.
    pub fn new(mu: Vec<f64>, phi: Array2<f64>, measure: Option<Vec<f64>>) -> Result<Self> {
        if mu.len() != phi.ncols() || mu.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for {} eigenvectors",
                mu.len(),
                phi.ncols()
            )));
        }
        if let Some(m) = &measure {
            if m.len() != phi.nrows() {
                return Err(Error::DimensionMismatch("measure length differs from vertex count".into()));
            }
        }
        let mut mu = mu;
        for v in mu.iter_mut() {
            if v.abs() <= ZERO_CLAMP {
                *v = 0.0;
            }
        }
        if let Some(&bad) = mu.iter().find(|&&v| v < -ZERO_CLAMP || !v.is_finite()) {
            return Err(Error::Numerical(format!("eigenvalue {bad:e} is negative")));
        }
        if mu.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("eigenvalues must be ascending".into()));
        }
        let lambda = mu.iter().map(|&m| m.max(0.0).sqrt()).collect();
        Ok(Self { mu, lambda, phi, measure })
    }

    /// Number of retained eigenpairs.
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    pub fn column(&self, k: usize) -> ArrayView1<'_, f64> {
        self.phi.column(k)
    }

    pub fn measure(&self) -> Option<&[f64]> {
        self.measure.as_deref()
    }

    /// Expansion coefficients `<f, phi_k>` in the basis inner product.
    pub fn coefficients(&self, f: ArrayView1<'_, f64>) -> Array1<f64> {
        match &self.measure {
            None => self.phi.t().dot(&f),
            Some(m) => {
                let weighted: Array1<f64> = f.iter().zip(m).map(|(a, b)| a * b).collect();
                self.phi.t().dot(&weighted)
            }
        }
    }

    /// Largest `|L phi_k - mu_k phi_k|_2 / max(1, mu_k)` over the basis.
    pub fn max_relative_residual(&self, l: &Array2<f64>) -> f64 {
        let lphi = l.dot(&self.phi);
        (0..self.len())
            .map(|k| {
                let r = &lphi.column(k) - &(&self.phi.column(k) * self.mu[k]);
                r.dot(&r).sqrt() / self.mu[k].max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = match &self.measure {
            None => self.phi.t().dot(&self.phi),
            Some(m) => {
                let mut scaled = self.phi.clone();
                for (mut row, &w) in scaled.axis_iter_mut(Axis(0)).zip(m) {
                    row *= w;
                }
                self.phi.t().dot(&scaled)
            }
        };
        gram.indexed_iter()
            .map(|((i, j), &v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues that are exactly zero after clamping.
    pub fn zero_multiplicity(&self) -> usize {
        self.mu.iter().take_while(|&&m| m == 0.0).count()
    }
}

/// `lambda_1`, the first nonzero frequency of a connected graph.
pub fn spectral_gap(basis: &EigenBasis) -> Result<f64> {
    if basis.len() < 2 {
        return Err(Error::InvalidInput("spectral gap needs at least 2 eigenpairs".into()));
    }
    let l1 = basis.lambda()[1];
    if l1 <= GAP_THRESHOLD {
        return Err(Error::Disconnected { lambda1: l1 });
    }
    Ok(l1)
}

/// First `n_eigs` eigenpairs of the symmetric matrix `l`.
pub fn compute_basis(l: &Array2<f64>, n_eigs: usize) -> Result<EigenBasis> {
    compute_basis_with(l, n_eigs, Solver::Auto)
}

pub fn compute_basis_with(l: &Array2<f64>, n_eigs: usize, solver: Solver) -> Result<EigenBasis> {
    let n = check_symmetric(l)?;
    if n_eigs == 0 || n_eigs > n {
        return Err(Error::InvalidInput(format!("requested {n_eigs} eigenpairs of a {n}x{n} matrix")));
    }
    let (mu, mut phi) = match solver {
        Solver::Dense => dense_eigenpairs(l, n_eigs)?,
        Solver::Lanczos => lanczos::smallest_eigenpairs(l, n_eigs)?,
        Solver::Auto if n <= DENSE_SOLVER_LIMIT => dense_eigenpairs(l, n_eigs)?,
        Solver::Auto => match lanczos::smallest_eigenpairs(l, n_eigs) {
            Ok(pairs) => pairs,
            Err(Error::Numerical(_)) => dense_eigenpairs(l, n_eigs)?,
            Err(e) => return Err(e),
        },
    };
    normalize_signs(&mut phi);
    let basis = EigenBasis::new(mu, phi, None)?;
    check_quality(&basis, l)?;
    Ok(basis)
}

/// Eigenbasis of the requested Laplacian of `graph`.
///
/// The random-walk basis is recovered from the symmetric-normalized one as
/// `psi = D^{-1/2} phi`, which is orthonormal in the degree-weighted inner
/// product.
pub fn graph_basis(graph: &WeightedGraph, variant: LaplacianVariant, n_eigs: usize, solver: Solver) -> Result<EigenBasis> {
    match variant {
        LaplacianVariant::Unnormalized | LaplacianVariant::SymNormalized => {
            compute_basis_with(&laplacian(graph, variant)?, n_eigs, solver)
        }
        LaplacianVariant::RandomWalk => {
            let sym = compute_basis_with(&laplacian(graph, LaplacianVariant::SymNormalized)?, n_eigs, solver)?;
            let deg = graph.degrees();
            let mut psi = sym.phi().clone();
            for (mut row, &d) in psi.axis_iter_mut(Axis(0)).zip(deg.iter()) {
                row /= d.sqrt();
            }
            normalize_signs(&mut psi);
            let basis = EigenBasis::new(sym.mu().to_vec(), psi, Some(deg.to_vec()))?;
            check_quality(&basis, &laplacian(graph, LaplacianVariant::RandomWalk)?)?;
            Ok(basis)
        }
    }
}

fn check_symmetric(l: &Array2<f64>) -> Result<usize> {
    let (n, m) = l.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!("matrix is {n}x{m}")));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (l[[i, j]], l[[j, i]]);
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotSymmetric { i, j });
            }
        }
    }
    Ok(n)
}

fn check_quality(basis: &EigenBasis, l: &Array2<f64>) -> Result<()> {
    let res = basis.max_relative_residual(l);
    if res.is_nan() || res > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("eigenpair residual {res:e} exceeds {RESIDUAL_TOL:e}")));
    }
    let ortho = basis.orthonormality_error();
    if ortho.is_nan() || ortho > ORTHO_TOL {
        return Err(Error::Numerical(format!("eigenvector orthonormality error {ortho:e} exceeds {ORTHO_TOL:e}")));
    }
    Ok(())
}

/// Makes each column's largest-magnitude entry positive.
pub(crate) fn normalize_signs(phi: &mut Array2<f64>) {
    for mut col in phi.axis_iter_mut(Axis(1)) {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Full dense symmetric eigendecomposition, sequential so results do not
/// depend on the thread pool.
pub(crate) fn dense_eigenpairs(l: &Array2<f64>, n_eigs: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = l.nrows();
    let a = Mat::<f64>::from_fn(n, n, |i, j| l[[i, j]]);
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
    let sv = s.column_vector();
    let mu: Vec<f64> = (0..n_eigs).map(|k| sv[k]).collect();
    let phi = Array2::from_shape_fn((n, n_eigs), |(i, k)| u[(i, k)]);
    Ok((mu, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Characteristic-polynomial roots of a symmetric 3x3 by the
    /// trigonometric closed form; independent of any library solver.
    fn sym3_eigenvalues(a: &Array2<f64>) -> [f64; 3] {
        let p1 = a[[0, 1]].powi(2) + a[[0, 2]].powi(2) + a[[1, 2]].powi(2);
        let q = (a[[0, 0]] + a[[1, 1]] + a[[2, 2]]) / 3.0;
        let p2 = (a[[0, 0]] - q).powi(2) + (a[[1, 1]] - q).powi(2) + (a[[2, 2]] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (a - &(Array2::<f64>::eye(3) * q)) / p;
        let det = b[[0, 0]] * (b[[1, 1]] * b[[2, 2]] - b[[1, 2]] * b[[2, 1]])
            - b[[0, 1]] * (b[[1, 0]] * b[[2, 2]] - b[[1, 2]] * b[[2, 0]])
            + b[[0, 2]] * (b[[1, 0]] * b[[2, 1]] - b[[1, 1]] * b[[2, 0]]);
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut e = [e1, e2, e3];
        e.sort_by(f64::total_cmp);
        e
    }

    fn unit_graph(edges: &[(usize, usize)], n: usize) -> WeightedGraph {
        let e: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        WeightedGraph::from_edges(n, &e, true).unwrap()
    }

    #[test]
    fn two_vertex_basis() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let b = compute_basis(&l, 2).unwrap();
        assert_eq!(b.mu()[0], 0.0);
        assert!((b.mu()[1] - 2.0).abs() < 1e-14);
        assert_eq!(b.lambda()[0], 0.0);
        assert!((b.lambda()[1] - 2f64.sqrt()).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (got, want) in b.column(0).iter().zip([h, h]) {
            assert!((got - want).abs() < 1e-14);
        }
        // tie in magnitude: the first entry is made positive
        for (got, want) in b.column(1).iter().zip([h, -h]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((spectral_gap(&b).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn path_and_triangle_against_closed_form() {
        let p3 = laplacian(&unit_graph(&[(0, 1), (1, 2)], 3), LaplacianVariant::Unnormalized).unwrap();
        let oracle = sym3_eigenvalues(&p3);
        assert!((oracle[0]).abs() < 1e-12 && (oracle[1] - 1.0).abs() < 1e-12 && (oracle[2] - 3.0).abs() < 1e-12);
        let b = compute_basis(&p3, 3).unwrap();
        for (got, want) in b.mu().iter().zip(oracle) {
            assert!((got - want).abs() < 1e-12);
        }

        let k3 = laplacian(&unit_graph(&[(0, 1), (1, 2), (0, 2)], 3), LaplacianVariant::Unnormalized).unwrap();
        let oracle = sym3_eigenvalues(&k3);
        let b = compute_basis(&k3, 3).unwrap();
        for (got, want) in b.mu().iter().zip(oracle) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((spectral_gap(&b).unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn disconnected_gap() {
        let g = unit_graph(&[(0, 1), (2, 3)], 4);
        let b = compute_basis(&laplacian(&g, LaplacianVariant::Unnormalized).unwrap(), 3).unwrap();
        assert_eq!(b.zero_multiplicity(), 2);
        assert!(matches!(spectral_gap(&b), Err(Error::Disconnected { .. })));
        let one = compute_basis(&laplacian(&g, LaplacianVariant::Unnormalized).unwrap(), 1).unwrap();
        assert!(matches!(spectral_gap(&one), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_requests() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        assert!(compute_basis(&l, 3).is_err());
        assert!(compute_basis(&l, 0).is_err());
        let asym = array![[1.0, -1.0], [-0.5, 1.0]];
        assert!(matches!(compute_basis(&asym, 1), Err(Error::NotSymmetric { i: 0, j: 1 })));
    }

    #[test]
    fn constant_sign_ground_state() {
        let g = unit_graph(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 4);
        for variant in [LaplacianVariant::Unnormalized, LaplacianVariant::SymNormalized, LaplacianVariant::RandomWalk] {
            let b = graph_basis(&g, variant, 4, Solver::Dense).unwrap();
            assert_eq!(b.lambda()[0], 0.0);
            assert!(b.column(0).iter().all(|&v| v > 0.0), "{variant}");
        }
    }

    #[test]
    fn random_walk_basis_is_degree_orthonormal() {
        let g = unit_graph(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)], 5);
        let b = graph_basis(&g, LaplacianVariant::RandomWalk, 5, Solver::Dense).unwrap();
        assert!(b.orthonormality_error() < 1e-12);
        let lrw = laplacian(&g, LaplacianVariant::RandomWalk).unwrap();
        assert!(b.max_relative_residual(&lrw) < 1e-12);
        // constant vector is the ground state of L_rw
        let c0 = b.column(0);
        assert!(c0.iter().all(|&v| (v - c0[0]).abs() < 1e-12));
    }
}
