//! End-to-end echolocation: basis, sources, propagation, per-source
//! distances and synthesis.

use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::echometric::{per_source_distance, DistanceMatrix, NormSpec, SynthesisRule};
use crate::eigen::{graph_basis, spectral_gap, EigenBasis, Solver};
use crate::error::{Error, Result};
use crate::graph::{LaplacianVariant, WeightedGraph};
use crate::manifest::Manifest;
use crate::propagator::{initial_datum, propagate, PropagationOptions, SelfWeight, SymbolKind, TimeGrid};
use crate::seeds::{derive, Purpose};

pub const DEFAULT_N_EIGS: usize = 50;
pub const DEFAULT_K_SOURCES: usize = 10;
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EchoConfig {
    pub laplacian: LaplacianVariant,
    pub n_eigs: usize,
    pub k_sources: usize,
    pub symbol: SymbolKind,
    /// Wave attenuation; `None` means `1 / lambda_1`.
    pub epsilon_atten: Option<f64>,
    /// Horizon `T`; `None` means `1 / lambda_1` (or `2 pi / lambda_1` with `full_period`).
    pub horizon: Option<f64>,
    pub full_period: bool,
    pub samples: usize,
    pub norms: NormSpec,
    pub rule: SynthesisRule,
    pub drop_constant_mode: bool,
    pub self_weight: SelfWeight,
    pub seed: u64,
    pub solver: Solver,
}

impl EchoConfig {
    /// Defaults everywhere except the synthesis rule, which has none.
    pub fn new(rule: SynthesisRule) -> Self {
        Self {
            laplacian: LaplacianVariant::default(),
            n_eigs: DEFAULT_N_EIGS,
            k_sources: DEFAULT_K_SOURCES,
            symbol: SymbolKind::Wave,
            epsilon_atten: None,
            horizon: None,
            full_period: false,
            samples: DEFAULT_SAMPLES,
            norms: NormSpec::default(),
            rule,
            drop_constant_mode: false,
            self_weight: SelfWeight::Unit,
            seed: 0,
            solver: Solver::Auto,
        }
    }

    pub fn record(&self, m: &mut Manifest) {
        m.set("laplacian", self.laplacian.name())
            .set("n-eigs", self.n_eigs)
            .set("k-sources", self.k_sources)
            .set("symbol", self.symbol.name())
            .set("full-period", self.full_period)
            .set("samples", self.samples)
            .set("norm-x", self.norms.x_norm)
            .set("norm-y", self.norms.y_norm.map_or("none".to_string(), |y| y.to_string()))
            .set("alpha", format!("{:?}", self.norms.alpha))
            .set("beta", format!("{:?}", self.norms.beta))
            .set("rule", self.rule)
            .set("drop-constant-mode", self.drop_constant_mode)
            .set("zero-self-weight", self.self_weight == SelfWeight::Zero)
            .set("seed", self.seed);
        if let Some(e) = self.epsilon_atten {
            m.set("epsilon-atten", format!("{e:?}"));
        }
        if let Some(t) = self.horizon {
            m.set("horizon", format!("{t:?}"));
        }
    }
}

#[derive(Debug, Clone)]
pub struct EchoRun {
    pub basis: EigenBasis,
    pub lambda1: f64,
    pub horizon: f64,
    pub epsilon_atten: f64,
    pub sources: Vec<usize>,
    pub distance: DistanceMatrix,
}

impl EchoRun {
    pub fn record(&self, m: &mut Manifest) {
        m.set("lambda1", format!("{:?}", self.lambda1))
            .set("resolved-horizon", format!("{:?}", self.horizon))
            .set("resolved-epsilon-atten", format!("{:?}", self.epsilon_atten))
            .set("sources", self.sources.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
    }
}

/// `k` distinct vertices drawn from the source stream of `seed`, in draw order.
pub fn choose_sources(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot choose {k} sources among {n} vertices")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, Purpose::Sources));
    Ok(sample(&mut rng, n, k).into_vec())
}

/// Runs the full echolocation procedure on `graph`.
pub fn run_echo(graph: &WeightedGraph, config: &EchoConfig) -> Result<EchoRun> {
    config.norms.validate()?;
    let basis = graph_basis(graph, config.laplacian, config.n_eigs, config.solver)?;
    echo_with_basis(graph, basis, config)
}

/// Same as [`run_echo`] with a precomputed basis of `graph`.
pub fn echo_with_basis(graph: &WeightedGraph, basis: EigenBasis, config: &EchoConfig) -> Result<EchoRun> {
    if basis.n() != graph.n() {
        return Err(Error::DimensionMismatch(format!("basis has {} vertices, graph has {}", basis.n(), graph.n())));
    }
    let lambda1 = spectral_gap(&basis)?;
    let horizon = config.horizon.unwrap_or(if config.full_period { TAU / lambda1 } else { 1.0 / lambda1 });
    let epsilon_atten = config.epsilon_atten.unwrap_or(1.0 / lambda1);
    let symbol = config.symbol.to_spec(epsilon_atten);
    let grid = TimeGrid::new(horizon, config.samples)?;
    let sources = choose_sources(graph.n(), config.k_sources, config.seed)?;
    let opts = PropagationOptions { drop_constant_mode: config.drop_constant_mode };

    // fold sources one at a time so only two n x n matrices are live
    let mut acc: Option<ndarray::Array2<f64>> = None;
    for &s in &sources {
        let datum = initial_datum(graph, s, config.self_weight)?;
        let field = propagate(&basis, &datum, &symbol, &grid, opts)?;
        let d = per_source_distance(&field, &config.norms, &grid)?.into_array();
        acc = Some(match acc {
            None => d,
            Some(mut a) => {
                match config.rule {
                    SynthesisRule::Min => a.zip_mut_with(&d, |x, &y| *x = x.min(y)),
                    SynthesisRule::Mean => a += &d,
                }
                a
            }
        });
    }
    let mut d = acc.expect("at least one source");
    if config.rule == SynthesisRule::Mean {
        d /= sources.len() as f64;
    }
    Ok(EchoRun { basis, lambda1, horizon, epsilon_atten, sources, distance: DistanceMatrix::new(d)? })
}
