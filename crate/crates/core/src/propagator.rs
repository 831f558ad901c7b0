//! Spectrally truncated evolution of linear PDEs on a graph.
//!
//! Every solution is an eigen-expansion over the retained basis, evaluated
//! in closed form on a time grid. Two families are supported:
//!
//! * the attenuated wave equation,
//!   `u(t) = sum_n cos(l_n t) exp(-eps l_n t) c_n phi_n`;
//! * first-order equations given by a symbol `p`,
//!   `u(t) = sum_n exp(p(l_n) t) c_n phi_n`.
//!
//! Time derivatives are the exact derivatives of these sums.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Largest admissible `Re p(lambda) * T` before a symbol is rejected.
pub const MAX_GROWTH_EXPONENT: f64 = 50.0;

/// A user-supplied first-order symbol `lambda -> p(lambda)`.
#[derive(Clone)]
pub struct CustomSymbol {
    pub name: String,
    pub p: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for CustomSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSymbol").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum FirstOrderSymbol {
    /// `p(lambda) = -lambda^2`
    Heat,
    /// `p(lambda) = i lambda^3`
    Airy,
    /// `p(lambda) = i lambda`
    Schrodinger,
    Custom(CustomSymbol),
}

impl FirstOrderSymbol {
    pub fn eval(&self, lambda: f64) -> Complex64 {
        match self {
            FirstOrderSymbol::Heat => Complex64::new(-lambda * lambda, 0.0),
            FirstOrderSymbol::Airy => Complex64::new(0.0, lambda.powi(3)),
            FirstOrderSymbol::Schrodinger => Complex64::new(0.0, lambda),
            FirstOrderSymbol::Custom(c) => (c.p)(lambda),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            FirstOrderSymbol::Heat => "heat",
            FirstOrderSymbol::Airy => "airy",
            FirstOrderSymbol::Schrodinger => "schrodinger",
            FirstOrderSymbol::Custom(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SymbolSpec {
    WaveAttenuated { epsilon: f64 },
    FirstOrder(FirstOrderSymbol),
}

impl SymbolSpec {
    pub fn wave(epsilon: f64) -> Self {
        SymbolSpec::WaveAttenuated { epsilon }
    }

    pub fn heat() -> Self {
        SymbolSpec::FirstOrder(FirstOrderSymbol::Heat)
    }

    pub fn airy() -> Self {
        SymbolSpec::FirstOrder(FirstOrderSymbol::Airy)
    }

    pub fn schrodinger() -> Self {
        SymbolSpec::FirstOrder(FirstOrderSymbol::Schrodinger)
    }

    pub fn name(&self) -> &str {
        match self {
            SymbolSpec::WaveAttenuated { .. } => "wave",
            SymbolSpec::FirstOrder(s) => s.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolSpec::WaveAttenuated { epsilon } if !(*epsilon >= 0.0 && epsilon.is_finite()) => Err(
                Error::InvalidInput(format!("attenuation must be finite and non-negative, got {epsilon}")),
            ),
            _ => Ok(()),
        }
    }

    /// Solution and time-derivative multipliers of a single mode at time `t`.
    pub fn mode_factors(&self, lambda: f64, t: f64) -> (Complex64, Complex64) {
        match self {
            SymbolSpec::WaveAttenuated { epsilon } => {
                let damp = (-epsilon * lambda * t).exp();
                let (s, c) = (lambda * t).sin_cos();
                let u = c * damp;
                let ut = (-lambda * s - epsilon * lambda * c) * damp;
                (Complex64::new(u, 0.0), Complex64::new(ut, 0.0))
            }
            SymbolSpec::FirstOrder(sym) => {
                let p = sym.eval(lambda);
                let e = (p * t).exp();
                (e, p * e)
            }
        }
    }

    /// Largest `Re p(lambda_n) * T` over the retained frequencies.
    fn growth(&self, lambdas: &[f64], horizon: f64) -> Option<(usize, f64)> {
        match self {
            SymbolSpec::WaveAttenuated { .. } => None,
            SymbolSpec::FirstOrder(sym) => lambdas
                .iter()
                .enumerate()
                .map(|(k, &l)| (k, sym.eval(l).re * horizon))
                .max_by(|a, b| a.1.total_cmp(&b.1)),
        }
    }
}

/// Symbol family selector used by configuration and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolKind {
    #[default]
    Wave,
    Heat,
    Airy,
    Schrodinger,
}

impl SymbolKind {
    /// Concrete symbol; `epsilon` is only used by the wave family.
    pub fn to_spec(self, epsilon: f64) -> SymbolSpec {
        match self {
            SymbolKind::Wave => SymbolSpec::wave(epsilon),
            SymbolKind::Heat => SymbolSpec::heat(),
            SymbolKind::Airy => SymbolSpec::airy(),
            SymbolKind::Schrodinger => SymbolSpec::schrodinger(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::Wave => "wave",
            SymbolKind::Heat => "heat",
            SymbolKind::Airy => "airy",
            SymbolKind::Schrodinger => "schrodinger",
        }
    }
}

impl FromStr for SymbolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wave" => Ok(SymbolKind::Wave),
            "heat" => Ok(SymbolKind::Heat),
            "airy" => Ok(SymbolKind::Airy),
            "schrodinger" => Ok(SymbolKind::Schrodinger),
            other => Err(Error::InvalidInput(format!("unknown symbol '{other}'"))),
        }
    }
}

/// Uniform samples `t_m = m T / (M - 1)`, `m = 0..M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, samples: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if samples < 2 {
            return Err(Error::InvalidInput(format!("time grid needs at least 2 samples, got {samples}")));
        }
        Ok(Self { horizon, samples })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn step(&self) -> f64 {
        self.horizon / (self.samples - 1) as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m + 1 == self.samples {
            self.horizon
        } else {
            self.horizon * m as f64 / (self.samples - 1) as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|m| self.time(m)).collect()
    }

    /// Trapezoid quadrature weights over `[0, T]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.samples];
        w[0] = h / 2.0;
        w[self.samples - 1] = h / 2.0;
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDatum {
    source: usize,
    values: Array1<f64>,
}

impl InitialDatum {
    pub fn new(source: usize, values: Array1<f64>) -> Result<Self> {
        if source >= values.len() {
            return Err(Error::IndexOutOfBounds { index: source, n: values.len() });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("initial datum contains NaN".into()));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("initial datum is identically zero".into()));
        }
        Ok(Self { source, values })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }
}

/// Value placed at the source vertex of a mollified datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfWeight {
    /// Kernel value at distance zero, `exp(0) = 1`.
    #[default]
    Unit,
    /// The literal (zero) diagonal of the affinity matrix.
    Zero,
}

/// Mollified indicator of `v`: the affinity row `f(x) = w_{v,x}`.
pub fn initial_datum(graph: &WeightedGraph, v: usize, self_weight: SelfWeight) -> Result<InitialDatum> {
    let n = graph.n();
    if v >= n {
        return Err(Error::IndexOutOfBounds { index: v, n });
    }
    let mut values = graph.weights().row(v).to_owned();
    if values.iter().all(|&w| w == 0.0) {
        return Err(Error::IsolatedSource(v));
    }
    values[v] = match self_weight {
        SelfWeight::Unit => 1.0,
        SelfWeight::Zero => 0.0,
    };
    InitialDatum::new(v, values)
}

/// Indicator vector of `v` under counting measure.
pub fn dirac_datum(n: usize, v: usize) -> Result<InitialDatum> {
    if v >= n {
        return Err(Error::IndexOutOfBounds { index: v, n });
    }
    let mut values = Array1::zeros(n);
    values[v] = 1.0;
    InitialDatum::new(v, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PropagationOptions {
    /// Remove mode 0 (the constant mode of a connected graph) from the expansion.
    pub drop_constant_mode: bool,
}

/// Time samples of the solution and its time derivative; rows are times,
/// columns are vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    source: usize,
    u: Array2<Complex64>,
    ut: Array2<Complex64>,
}

impl WaveField {
    pub fn new(source: usize, u: Array2<Complex64>, ut: Array2<Complex64>) -> Result<Self> {
        if u.dim() != ut.dim() {
            return Err(Error::DimensionMismatch("u and ut shapes differ".into()));
        }
        if u.iter().chain(ut.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("wave field has non-finite entries".into()));
        }
        Ok(Self { source, u, ut })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn samples(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &Array2<Complex64> {
        &self.u
    }

    pub fn ut(&self) -> &Array2<Complex64> {
        &self.ut
    }

    pub fn is_real(&self) -> bool {
        self.u.iter().chain(self.ut.iter()).all(|z| z.im == 0.0)
    }
}

/// Evolves `datum` under `symbol`, sampled on `grid`.
pub fn propagate(
    basis: &EigenBasis,
    datum: &InitialDatum,
    symbol: &SymbolSpec,
    grid: &TimeGrid,
    options: PropagationOptions,
) -> Result<WaveField> {
    symbol.validate()?;
    if datum.values().len() != basis.n() {
        return Err(Error::DimensionMismatch(format!(
            "datum has {} entries, basis has {} vertices",
            datum.values().len(),
            basis.n()
        )));
    }
    if let Some((mode, growth)) = symbol.growth(basis.lambda(), grid.horizon()) {
        if growth > MAX_GROWTH_EXPONENT {
            return Err(Error::UnstableSymbol { mode, growth });
        }
    }
    let mut coeffs = basis.coefficients(datum.values().view());
    if options.drop_constant_mode {
        coeffs[0] = 0.0;
    }
    let (u, ut) = evolve(basis, coeffs.as_slice().unwrap(), symbol, &grid.times());
    WaveField::new(datum.source(), u, ut)
}

/// `u[m] = sum_k a_k(t_m) c_k phi_k` and the same for the derivative factors.
pub(crate) fn evolve(
    basis: &EigenBasis,
    coeffs: &[f64],
    symbol: &SymbolSpec,
    times: &[f64],
) -> (Array2<Complex64>, Array2<Complex64>) {
    let (m, k) = (times.len(), basis.len());
    let mut a_re = Array2::zeros((m, k));
    let mut a_im = Array2::zeros((m, k));
    let mut b_re = Array2::zeros((m, k));
    let mut b_im = Array2::zeros((m, k));
    for (i, &t) in times.iter().enumerate() {
        for (j, (&l, &c)) in basis.lambda().iter().zip(coeffs).enumerate() {
            let (a, b) = symbol.mode_factors(l, t);
            a_re[[i, j]] = a.re * c;
            a_im[[i, j]] = a.im * c;
            b_re[[i, j]] = b.re * c;
            b_im[[i, j]] = b.im * c;
        }
    }
    let phi_t = basis.phi().t();
    let combine = |re: &Array2<f64>, im: &Array2<f64>| {
        let r = re.dot(&phi_t);
        let mut out = Array2::<Complex64>::zeros(r.dim());
        if im.iter().all(|&v| v == 0.0) {
            Zip::from(&mut out).and(&r).for_each(|o, &x| *o = Complex64::new(x, 0.0));
        } else {
            let i = im.dot(&phi_t);
            Zip::from(&mut out).and(&r).and(&i).for_each(|o, &x, &y| *o = Complex64::new(x, y));
        }
        out
    };
    (combine(&a_re, &a_im), combine(&b_re, &b_im))
}
