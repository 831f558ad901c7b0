//! Synthetic geometries and the SNAP ego-network loader.
//!
//! Every generator is a pure function of its parameters and seed. Each
//! stratum (a disk, a sphere, the bridge, ...) draws from its own ChaCha
//! stream, so strata never share random state.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{add_noise_edges, build_affinity, AffinityConfig, PointCloud, WeightedGraph};
use crate::seeds::stratum_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDisksParams {
    pub n_per: usize,
    /// Distance between the disk centers.
    pub separation: f64,
    /// Probability that a given cross-cluster pair is joined.
    pub cross_rate: f64,
    /// Gaussian kernel bandwidth.
    pub epsilon: f64,
    /// Weight of injected edges; `None` uses the median intra-cluster affinity.
    pub cross_weight: Option<f64>,
}

impl Default for TwoDisksParams {
    fn default() -> Self {
        Self { n_per: 1000, separation: 4.0, cross_rate: 0.04, epsilon: 0.25, cross_weight: None }
    }
}

#[derive(Debug, Clone)]
pub struct TwoDisks {
    pub cloud: PointCloud,
    pub graph: WeightedGraph,
    pub cross_pairs: Vec<(usize, usize)>,
    pub cross_weight: f64,
}

fn sample_unit_disk<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let x = rng.random_range(-1.0..=1.0);
        let y = rng.random_range(-1.0..=1.0);
        if x * x + y * y <= 1.0 {
            return (x, y);
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Two uniform unit disks joined by random cross-cluster edges.
/// Labels: the first `n_per` points are 0, the rest 1.
pub fn gen_two_disks(params: &TwoDisksParams, seed: u64) -> Result<TwoDisks> {
    let p = params;
    if p.n_per < 1 {
        return Err(Error::InvalidInput("n_per must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p.cross_rate) {
        return Err(Error::InvalidInput(format!("cross_rate must lie in [0, 1], got {}", p.cross_rate)));
    }
    let n = 2 * p.n_per;
    let mut pts = Array2::zeros((n, 2));
    for (disk, cx) in [(0u64, 0.0), (1, p.separation)] {
        let mut rng = stratum_rng(seed, disk);
        for i in 0..p.n_per {
            let (x, y) = sample_unit_disk(&mut rng);
            let row = disk as usize * p.n_per + i;
            pts[[row, 0]] = cx + x;
            pts[[row, 1]] = y;
        }
    }
    let labels = (0..n).map(|i| (i >= p.n_per) as i64).collect();
    let cloud = PointCloud::new(pts, Some(labels))?;
    let base = build_affinity(&cloud, &AffinityConfig { allow_isolated: true, ..AffinityConfig::for_size(n, p.epsilon) })?;

    let cross_weight = match p.cross_weight {
        Some(w) => w,
        None => {
            let intra: Vec<f64> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter(|&(i, j)| (i < p.n_per) == (j < p.n_per))
                .map(|(i, j)| base.weight(i, j))
                .collect();
            if intra.is_empty() { 1.0 } else { median(intra) }
        }
    };

    let mut rng = stratum_rng(seed, 2);
    let mut cross_pairs = Vec::new();
    for i in 0..p.n_per {
        for j in p.n_per..n {
            if rng.random_bool(p.cross_rate) {
                cross_pairs.push((i, j));
            }
        }
    }
    let graph = if cross_pairs.is_empty() || cross_weight <= 0.0 {
        base
    } else {
        add_noise_edges(&base, &cross_pairs, cross_weight)?
    };
    Ok(TwoDisks { cloud, graph, cross_pairs, cross_weight })
}

/// Default kernel bandwidth for dumbbell point clouds.
pub const DUMBBELL_KERNEL_EPS: f64 = 0.2;
/// Default kernel bandwidth for sphere-bridge point clouds.
pub const SPHERES_BRIDGE_KERNEL_EPS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumbbellParams {
    pub n: usize,
    pub neck_width: f64,
    /// Height of both boxes; the neck must not be wider.
    pub box_height: f64,
}

impl Default for DumbbellParams {
    fn default() -> Self {
        Self { n: 1500, neck_width: 0.1, box_height: 1.0 }
    }
}

/// Piecewise-linear step the first nontrivial eigenvector should resemble:
/// -1 left of the neck, `2 x1` across it, +1 right of it.
pub fn dumbbell_target(x1: f64) -> f64 {
    if x1 <= -0.5 {
        -1.0
    } else if x1 >= 0.5 {
        1.0
    } else {
        2.0 * x1
    }
}

#[derive(Debug, Clone)]
pub struct Dumbbell {
    /// Labels: -1 left box, 0 neck, +1 right box.
    pub cloud: PointCloud,
    pub targets: Vec<f64>,
}

/// Two unit boxes `[-1.5, -0.5]` and `[0.5, 1.5]` (in `x1`) joined by a
/// centered neck across `(-0.5, 0.5)`, sampled uniformly over the union.
pub fn gen_dumbbell(params: &DumbbellParams, seed: u64) -> Result<Dumbbell> {
    let p = params;
    if p.n < 2 {
        return Err(Error::InvalidInput("dumbbell needs at least 2 points".into()));
    }
    if !(p.neck_width > 0.0 && p.neck_width <= p.box_height) {
        return Err(Error::InvalidInput(format!(
            "neck width must lie in (0, {}], got {}",
            p.box_height, p.neck_width
        )));
    }
    let (hh, hw) = (p.box_height / 2.0, p.neck_width / 2.0);
    let mut rng = stratum_rng(seed, 0);
    let mut pts = Array2::zeros((p.n, 2));
    let mut labels = Vec::with_capacity(p.n);
    let mut targets = Vec::with_capacity(p.n);
    let mut i = 0;
    while i < p.n {
        let x = rng.random_range(-1.5..=1.5);
        let y = rng.random_range(-hh..=hh);
        let in_neck = x > -0.5 && x < 0.5;
        if in_neck && y.abs() > hw {
            continue;
        }
        pts[[i, 0]] = x;
        pts[[i, 1]] = y;
        labels.push(if x <= -0.5 { -1 } else if x >= 0.5 { 1 } else { 0 });
        targets.push(dumbbell_target(x));
        i += 1;
    }
    Ok(Dumbbell { cloud: PointCloud::new(pts, Some(labels))?, targets })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpheresBridgeParams {
    pub dim_a: usize,
    pub dim_b: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_bridge: usize,
    /// 1 for a segment, 2 for a flat strip.
    pub bridge_dim: usize,
    pub bridge_length: f64,
    pub bridge_width: f64,
}

impl Default for SpheresBridgeParams {
    fn default() -> Self {
        Self {
            dim_a: 6,
            dim_b: 6,
            n_a: 300,
            n_b: 300,
            n_bridge: 60,
            bridge_dim: 1,
            bridge_length: 2.0,
            bridge_width: 0.5,
        }
    }
}

/// Unit spheres `S^dim_a` and `S^dim_b` in `R^(max+1)`, centered on the
/// first axis at `-(1 + L/2)` and `+(1 + L/2)`, with a bridge spanning the
/// gap `[-L/2, L/2]` between their nearest points.
/// Labels: 0 sphere A, 1 sphere B, 2 bridge.
pub fn gen_spheres_bridge(params: &SpheresBridgeParams, seed: u64) -> Result<PointCloud> {
    let p = params;
    if p.dim_a < 1 || p.dim_b < 1 {
        return Err(Error::InvalidInput("sphere dimensions must be >= 1".into()));
    }
    if !(1..=2).contains(&p.bridge_dim) {
        return Err(Error::InvalidInput(format!("bridge_dim must be 1 or 2, got {}", p.bridge_dim)));
    }
    if !(p.bridge_length > 0.0) {
        return Err(Error::InvalidInput("bridge length must be positive".into()));
    }
    let ambient = p.dim_a.max(p.dim_b) + 1;
    let n = p.n_a + p.n_b + p.n_bridge;
    let offset = 1.0 + p.bridge_length / 2.0;
    let mut pts = Array2::zeros((n, ambient));
    let mut labels = Vec::with_capacity(n);

    let spheres = [(p.dim_a, p.n_a, -offset), (p.dim_b, p.n_b, offset)];
    let mut row = 0;
    for (stratum, &(dim, count, center)) in spheres.iter().enumerate() {
        let mut rng = stratum_rng(seed, stratum as u64);
        for _ in 0..count {
            let v: Vec<f64> = loop {
                let v: Vec<f64> = (0..=dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| x / norm).collect();
                }
            };
            for (c, x) in v.into_iter().enumerate() {
                pts[[row, c]] = x;
            }
            pts[[row, 0]] += center;
            labels.push(stratum as i64);
            row += 1;
        }
    }
    let mut rng = stratum_rng(seed, 2);
    let half = p.bridge_length / 2.0;
    for _ in 0..p.n_bridge {
        pts[[row, 0]] = rng.random_range(-half..=half);
        if p.bridge_dim == 2 {
            pts[[row, 1]] = rng.random_range(-p.bridge_width / 2.0..=p.bridge_width / 2.0);
        }
        labels.push(2);
        row += 1;
    }
    PointCloud::new(pts, Some(labels))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Hole {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        dx * dx + dy * dy < self.radius * self.radius
    }
}

/// Uniform points in the unit square with the listed open disks removed.
pub fn gen_plane_with_holes(n: usize, holes: &[Hole], seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidInput("plane needs at least 2 points".into()));
    }
    let admissible = |x: f64, y: f64| !holes.iter().any(|h| h.contains(x, y));
    // a coarse lattice test catches fully covered squares before sampling
    let lattice = 256;
    let any_free = (0..=lattice).any(|a| {
        (0..=lattice).any(|b| admissible(a as f64 / lattice as f64, b as f64 / lattice as f64))
    });
    if !any_free {
        return Err(Error::EmptySupport);
    }
    let mut rng = stratum_rng(seed, 0);
    let mut pts = Array2::zeros((n, 2));
    let mut i = 0;
    let mut misses = 0usize;
    while i < n {
        let x = rng.random_range(0.0..=1.0);
        let y = rng.random_range(0.0..=1.0);
        if admissible(x, y) {
            pts[[i, 0]] = x;
            pts[[i, 1]] = y;
            i += 1;
            misses = 0;
        } else {
            misses += 1;
            if misses > 10_000_000 {
                return Err(Error::EmptySupport);
            }
        }
    }
    PointCloud::new(pts, Some(vec![0; n]))
}

/// A named friendship circle, members as compact vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circle {
    pub name: String,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SnapNetwork {
    pub graph: WeightedGraph,
    /// Sorted by size, largest first.
    pub circles: Vec<Circle>,
    /// `original_ids[v]` is the file id of compact vertex `v`.
    pub original_ids: Vec<u64>,
    /// Circle members that do not occur in the edge list.
    pub dropped_members: usize,
}

fn data_lines<R: Read>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.parse::<u64>()
        .map_err(|_| Error::Parse { line, msg: format!("invalid vertex id '{tok}'") })
}

/// Reads whitespace-separated `u v` pairs; `#` starts a comment line.
pub fn parse_snap_edges<R: Read>(reader: R) -> Result<Vec<(u64, u64)>> {
    let mut edges = Vec::new();
    for (line, text) in data_lines(reader) {
        let text = text?;
        let t = text.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 2 fields, found {}", toks.len()) });
        }
        edges.push((parse_id(toks[0], line)?, parse_id(toks[1], line)?));
    }
    Ok(edges)
}

/// Reads `name<TAB>v1<TAB>v2...` lines.
pub fn parse_circles<R: Read>(reader: R) -> Result<Vec<(String, Vec<u64>)>> {
    let mut out = Vec::new();
    for (line, text) in data_lines(reader) {
        let text = text?;
        let t = text.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let name = toks.next().unwrap().to_string();
        let members = toks.map(|s| parse_id(s, line)).collect::<Result<Vec<_>>>()?;
        out.push((name, members));
    }
    Ok(out)
}

/// Unit-weight graph over the compacted ids of `edges` plus its circles.
pub fn build_snap_network(edges: &[(u64, u64)], circles: Vec<(String, Vec<u64>)>) -> Result<SnapNetwork> {
    let mut index: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v) in edges {
        index.insert(u, 0);
        index.insert(v, 0);
    }
    for (k, slot) in index.values_mut().enumerate() {
        *slot = k;
    }
    let original_ids: Vec<u64> = index.keys().copied().collect();
    let n = original_ids.len();
    if n < 2 {
        return Err(Error::Empty("edge list has fewer than 2 vertices"));
    }
    let compact: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v)| (index[&u], index[&v], 1.0)).collect();
    let graph = WeightedGraph::from_edges(n, &compact, true)?;

    let mut dropped_members = 0;
    let mut circles: Vec<Circle> = circles
        .into_iter()
        .map(|(name, members)| {
            let mut m: Vec<usize> = members
                .iter()
                .filter_map(|id| {
                    let v = index.get(id).copied();
                    if v.is_none() {
                        dropped_members += 1;
                    }
                    v
                })
                .collect();
            m.sort_unstable();
            m.dedup();
            Circle { name, members: m }
        })
        .collect();
    circles.sort_by_key(|c| std::cmp::Reverse(c.members.len()));
    Ok(SnapNetwork { graph, circles, original_ids, dropped_members })
}

/// Loads an ego-network edge list together with any number of circle files.
pub fn load_snap_network(edge_file: &Path, circle_files: &[&Path]) -> Result<SnapNetwork> {
    let edges = parse_snap_edges(File::open(edge_file)?)?;
    let mut circles = Vec::new();
    for path in circle_files {
        circles.extend(parse_circles(File::open(path)?)?);
    }
    build_snap_network(&edges, circles)
}

pub fn load_snap_circles(edge_file: &Path, circles_file: &Path) -> Result<SnapNetwork> {
    load_snap_network(edge_file, &[circles_file])
}
