//! Refined metrics from simulated fields.
//!
//! A field started at source `i` induces
//! `d_i(a, b) = |u_i(., a) - u_i(., b)|_X^alpha + |du_i(., a) - du_i(., b)|_Y^beta`
//! where the norms run over the time grid (trapezoid rule, complex values
//! reduced by modulus first). The per-source matrices are combined by an
//! entrywise min or mean.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigen::{spectral_gap, EigenBasis};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::propagator::{dirac_datum, evolve, SymbolSpec, TimeGrid, WaveField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeNorm {
    #[default]
    L1,
    L2,
}

impl FromStr for TimeNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(TimeNorm::L1),
            "l2" => Ok(TimeNorm::L2),
            other => Err(Error::InvalidInput(format!("unknown time norm '{other}'"))),
        }
    }
}

impl fmt::Display for TimeNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeNorm::L1 => "l1",
            TimeNorm::L2 => "l2",
        })
    }
}

/// Norms and exponents of the position and velocity terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub x_norm: TimeNorm,
    /// `None` drops the velocity term.
    pub y_norm: Option<TimeNorm>,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { x_norm: TimeNorm::L1, y_norm: Some(TimeNorm::L1), alpha: 1.0, beta: 1.0 }
    }
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidInput(format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }

    fn velocity_norm(&self) -> Option<TimeNorm> {
        if self.beta == 0.0 {
            None
        } else {
            self.y_norm
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisRule {
    Min,
    Mean,
}

impl FromStr for SynthesisRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(SynthesisRule::Min),
            "mean" => Ok(SynthesisRule::Mean),
            other => Err(Error::InvalidInput(format!("unknown synthesis rule '{other}'"))),
        }
    }
}

impl fmt::Display for SynthesisRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthesisRule::Min => "min",
            SynthesisRule::Mean => "mean",
        })
    }
}

/// Symmetric, non-negative, zero-diagonal matrix. The triangle inequality
/// is not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(d: Array2<f64>) -> Result<Self> {
        let (n, m) = d.dim();
        if n != m {
            return Err(Error::DimensionMismatch(format!("distance matrix is {n}x{m}")));
        }
        for i in 0..n {
            if d[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = d[[i, j]];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Numerical(format!("distance ({i}, {j}) = {v}")));
                }
                if v != d[[j, i]] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { d })
    }

    /// Builds the matrix from a function evaluated on `i < j` only.
    pub fn from_upper<F>(n: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut d = Array2::zeros((n, n));
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                d[[i, i + 1 + off]] = v;
                d[[i + 1 + off, i]] = v;
            }
        }
        Self::new(d)
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.d
    }

    pub fn into_array(self) -> Array2<f64> {
        self.d
    }

    /// Median of the off-diagonal entries.
    pub fn median_off_diagonal(&self) -> f64 {
        let n = self.n();
        let mut v: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| self.d[[i, j]]).collect();
        if v.is_empty() {
            return 0.0;
        }
        let mid = v.len() / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    }

    /// Copy scaled so the off-diagonal median is 1 (unchanged if the median is 0).
    pub fn median_normalized(&self) -> DistanceMatrix {
        let med = self.median_off_diagonal();
        if med > 0.0 {
            DistanceMatrix { d: &self.d / med }
        } else {
            self.clone()
        }
    }
}

/// Per-vertex time series, laid out vertex-major for contiguous pair sweeps.
enum Series {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl Series {
    fn new(values: &Array2<Complex64>, real: bool) -> Self {
        if real {
            Series::Real(values.t().mapv(|z| z.re))
        } else {
            Series::Complex(values.t().to_owned())
        }
    }

    fn norm(&self, a: usize, b: usize, weights: &[f64], norm: TimeNorm) -> f64 {
        match self {
            Series::Real(s) => {
                let (x, y) = (s.row(a), s.row(b));
                let diffs = x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs());
                reduce(diffs, weights, norm)
            }
            Series::Complex(s) => {
                let (x, y) = (s.row(a), s.row(b));
                let diffs = x.iter().zip(y.iter()).map(|(p, q)| (p - q).norm());
                reduce(diffs, weights, norm)
            }
        }
    }
}

fn reduce(diffs: impl Iterator<Item = f64>, weights: &[f64], norm: TimeNorm) -> f64 {
    match norm {
        TimeNorm::L1 => diffs.zip(weights).map(|(d, w)| d * w).sum(),
        TimeNorm::L2 => diffs.zip(weights).map(|(d, w)| d * d * w).sum::<f64>().sqrt(),
    }
}

/// Distance induced by a single source's field.
pub fn per_source_distance(field: &WaveField, norms: &NormSpec, grid: &TimeGrid) -> Result<DistanceMatrix> {
    norms.validate()?;
    if field.samples() != grid.samples() {
        return Err(Error::DimensionMismatch(format!(
            "field has {} time samples, grid has {}",
            field.samples(),
            grid.samples()
        )));
    }
    let weights = grid.trapezoid_weights();
    let real = field.is_real();
    let pos = Series::new(field.u(), real);
    let vel = norms.velocity_norm().map(|y| (Series::new(field.ut(), real), y));
    DistanceMatrix::from_upper(field.n(), |a, b| {
        let mut d = pos.norm(a, b, &weights, norms.x_norm).powf(norms.alpha);
        if let Some((s, y)) = &vel {
            d += s.norm(a, b, &weights, *y).powf(norms.beta);
        }
        d
    })
}

/// Entrywise min or mean of the per-source distances.
pub fn synthesize(distances: &[DistanceMatrix], rule: SynthesisRule) -> Result<DistanceMatrix> {
    let first = distances.first().ok_or(Error::Empty("no distance matrices to synthesize"))?;
    let n = first.n();
    if let Some(bad) = distances.iter().find(|d| d.n() != n) {
        return Err(Error::DimensionMismatch(format!("distance matrices of size {n} and {}", bad.n())));
    }
    let mut acc = first.as_array().clone();
    for d in &distances[1..] {
        match rule {
            SynthesisRule::Min => acc.zip_mut_with(d.as_array(), |a, &b| *a = a.min(b)),
            SynthesisRule::Mean => acc += d.as_array(),
        }
    }
    if rule == SynthesisRule::Mean {
        acc /= distances.len() as f64;
    }
    DistanceMatrix::new(acc)
}

fn check_vertex(basis: &EigenBasis, v: usize) -> Result<()> {
    if v >= basis.n() {
        return Err(Error::IndexOutOfBounds { index: v, n: basis.n() });
    }
    Ok(())
}

/// `d_N(x0, y0)`: Euclidean distance between the rows of modes `1..N`.
pub fn spectral_distance(basis: &EigenBasis, x0: usize, y0: usize) -> Result<f64> {
    check_vertex(basis, x0)?;
    check_vertex(basis, y0)?;
    let phi = basis.phi();
    let s: f64 = (1..basis.len()).map(|k| (phi[[x0, k]] - phi[[y0, k]]).powi(2)).sum();
    Ok(s.sqrt())
}

/// Brute-force `(1/T) int_0^T sum_x (u_x0 - u_y0)^2 dt` for Dirac data under
/// the undamped wave, with the constant mode removed.
pub fn time_averaged_distance(basis: &EigenBasis, x0: usize, y0: usize, grid: &TimeGrid) -> Result<f64> {
    check_vertex(basis, x0)?;
    check_vertex(basis, y0)?;
    if basis.measure().is_some() {
        return Err(Error::InvalidInput("time averaging needs a basis orthonormal under counting measure".into()));
    }
    if x0 == y0 {
        return Ok(0.0);
    }
    let n = basis.n();
    let symbol = SymbolSpec::wave(0.0);
    let source_coeffs = |v: usize| -> Result<Array1<f64>> {
        let mut c = basis.coefficients(dirac_datum(n, v)?.values().view());
        c[0] = 0.0;
        Ok(c)
    };
    let (ca, cb) = (source_coeffs(x0)?, source_coeffs(y0)?);
    let weights = grid.trapezoid_weights();
    let times = grid.times();
    let chunk = ((1 << 20) / n).max(1);
    let mut total = 0.0;
    for (ts, ws) in times.chunks(chunk).zip(weights.chunks(chunk)) {
        let (a, _) = evolve(basis, ca.as_slice().unwrap(), &symbol, ts);
        let (b, _) = evolve(basis, cb.as_slice().unwrap(), &symbol, ts);
        for (m, w) in ws.iter().enumerate() {
            let s: f64 = a.row(m).iter().zip(b.row(m)).map(|(p, q)| (p - q).norm_sqr()).sum();
            total += w * s;
        }
    }
    Ok(total / grid.horizon())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCheck {
    pub time_average: f64,
    /// `d_N(x0, y0)^2 / 2`
    pub target: f64,
}

impl TheoremCheck {
    /// `time_average / target`; 1 for the trivial pair.
    pub fn ratio(&self) -> f64 {
        if self.target == 0.0 && self.time_average == 0.0 {
            1.0
        } else {
            self.time_average / self.target
        }
    }
}

/// Time-averaged wave distance against half the squared spectral distance.
/// Requires a connected graph.
pub fn verify_theorem(basis: &EigenBasis, x0: usize, y0: usize, horizon: f64, samples: usize) -> Result<TheoremCheck> {
    spectral_gap(basis)?;
    let grid = TimeGrid::new(horizon, samples)?;
    let d = spectral_distance(basis, x0, y0)?;
    let time_average = time_averaged_distance(basis, x0, y0, &grid)?;
    Ok(TheoremCheck { time_average, target: 0.5 * d * d })
}

/// Two-sided bound `d_N^2 / 2 <= average <= d_N^2` for graphs with several
/// components, where zero-frequency modes do not oscillate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub time_average: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BoundCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * self.upper.max(f64::MIN_POSITIVE);
        self.time_average >= self.lower - slack && self.time_average <= self.upper + slack
    }
}

pub fn component_bound_check(basis: &EigenBasis, x0: usize, y0: usize, horizon: f64, samples: usize) -> Result<BoundCheck> {
    let grid = TimeGrid::new(horizon, samples)?;
    let d = spectral_distance(basis, x0, y0)?;
    let time_average = time_averaged_distance(basis, x0, y0, &grid)?;
    Ok(BoundCheck { time_average, lower: 0.5 * d * d, upper: d * d })
}

/// Gaussian affinity of a distance matrix, `exp(-d^2 / eps_w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityFromDistance {
    epsilon_w: f64,
    w: Array2<f64>,
}

impl AffinityFromDistance {
    pub fn new(d: &DistanceMatrix, epsilon_w: f64) -> Result<Self> {
        if !(epsilon_w > 0.0 && epsilon_w.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon_w must be positive, got {epsilon_w}")));
        }
        let w = d.as_array().mapv(|x| (-x * x / epsilon_w).exp());
        Ok(Self { epsilon_w, w })
    }

    pub fn epsilon_w(&self) -> f64 {
        self.epsilon_w
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.w
    }

    /// Mean affinity over unordered off-diagonal pairs, or over all ordered
    /// pairs including the diagonal.
    pub fn chance_level(&self, include_diagonal: bool) -> f64 {
        let n = self.w.nrows();
        if include_diagonal {
            return self.w.mean().unwrap_or(0.0);
        }
        if n < 2 {
            return 0.0;
        }
        let s: f64 = (0..n).map(|i| self.w.row(i).iter().skip(i + 1).sum::<f64>()).sum();
        s / (n * (n - 1) / 2) as f64
    }
}

/// 0/1 graph of pairs whose affinity exceeds `factor` times the chance level.
pub fn threshold_graph(w: &AffinityFromDistance, factor: f64, include_diagonal: bool) -> Result<WeightedGraph> {
    if !(factor > 0.0) {
        return Err(Error::InvalidInput(format!("threshold factor must be positive, got {factor}")));
    }
    let level = factor * w.chance_level(include_diagonal);
    let n = w.matrix().nrows();
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        if i != j && w.matrix()[[i, j]] > level {
            1.0
        } else {
            0.0
        }
    });
    WeightedGraph::new(a, true)
}

/// Mean of `d` over the `rows x cols` block, skipping diagonal entries.
pub fn block_mean(d: &DistanceMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let mut s = 0.0;
    let mut c = 0usize;
    for &i in rows {
        for &j in cols {
            if i != j {
                s += d.get(i, j);
                c += 1;
            }
        }
    }
    if c == 0 {
        0.0
    } else {
        s / c as f64
    }
}

/// Coordinates of `x` in the spectral embedding over modes `1..N`.
pub fn spectral_coordinates(basis: &EigenBasis, x: usize) -> Array1<f64> {
    basis.phi().row(x).iter().skip(1).copied().collect()
}
