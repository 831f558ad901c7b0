//! File formats.
//!
//! - points: CSV with header `x0,x1,...` plus optional `label` and `target`
//!   columns, one row per point.
//! - edges: whitespace-separated `u v [w]`, 0-based, weight 1 when omitted,
//!   `#` starts a comment.
//! - matrices: CSV with a `v0,v1,...` header, or binary (`n: u64` then
//!   row-major `f64`, little-endian).
//! - fields: `M: u64`, `n: u64`, `complex: u8`, then row-major samples; a
//!   complex sample is an `(re, im)` pair.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{PointCloud, WeightedGraph};

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Points with their optional per-point scalar target.
#[derive(Debug, Clone)]
pub struct PointTable {
    pub cloud: PointCloud,
    pub targets: Option<Vec<f64>>,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, msg: format!("{kind:?}") },
    }
}

pub fn write_points<W: Write>(w: W, cloud: &PointCloud, targets: Option<&[f64]>) -> Result<()> {
    if let Some(t) = targets {
        if t.len() != cloud.len() {
            return Err(Error::DimensionMismatch(format!("{} targets for {} points", t.len(), cloud.len())));
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..cloud.dim()).map(|k| format!("x{k}")).collect();
    if cloud.labels().is_some() {
        header.push("label".into());
    }
    if targets.is_some() {
        header.push("target".into());
    }
    out.write_record(&header).map_err(csv_error)?;
    for i in 0..cloud.len() {
        let mut row: Vec<String> = cloud.point(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = cloud.labels() {
            row.push(l[i].to_string());
        }
        if let Some(t) = targets {
            row.push(format!("{:?}", t[i]));
        }
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(r: R) -> Result<PointTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let mut coord_cols = Vec::new();
    let (mut label_col, mut target_col) = (None, None);
    for (c, name) in header.iter().enumerate() {
        match name {
            "label" => label_col = Some(c),
            "target" => target_col = Some(c),
            s if s.starts_with('x') && s[1..].parse::<usize>().is_ok() => coord_cols.push(c),
            other => return Err(Error::Parse { line: 1, msg: format!("unknown column '{other}'") }),
        }
    }
    if coord_cols.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no coordinate columns".into() });
    }
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut targets = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|_| Error::Parse { line, msg: format!("bad number '{}'", &rec[c]) })
        };
        for &c in &coord_cols {
            coords.push(num(c)?);
        }
        if let Some(c) = label_col {
            labels.push(rec[c].parse::<i64>().map_err(|_| Error::Parse { line, msg: format!("bad label '{}'", &rec[c]) })?);
        }
        if let Some(c) = target_col {
            targets.push(num(c)?);
        }
        rows += 1;
    }
    let points = Array2::from_shape_vec((rows, coord_cols.len()), coords).expect("row lengths checked");
    let cloud = PointCloud::new(points, label_col.map(|_| labels))?;
    Ok(PointTable { cloud, targets: target_col.map(|_| targets) })
}

pub fn read_points_file(path: &Path) -> Result<PointTable> {
    read_points(File::open(path)?)
}

/// Parses an edge list. Repeated edges keep the last weight; the vertex
/// count is one past the largest index unless `n` is given.
pub fn read_edges<R: Read>(r: R, n: Option<usize>, allow_isolated: bool) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut max = None::<usize>;
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::Parse { line: k + 1, msg: format!("expected 'u v [w]', got '{body}'") });
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad vertex '{s}'") });
        let (u, v) = (idx(fields[0])?, idx(fields[1])?);
        let w = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad weight '{s}'") })?,
            None => 1.0,
        };
        if u == v {
            return Err(Error::Parse { line: k + 1, msg: format!("self-loop at {u}") });
        }
        max = Some(max.unwrap_or(0).max(u).max(v));
        edges.push((u, v, w));
    }
    let n = match (n, max) {
        (Some(n), Some(m)) if m >= n => return Err(Error::IndexOutOfBounds { index: m, n }),
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(Error::Empty("edge list has no edges")),
    };
    WeightedGraph::from_edges(n, &edges, allow_isolated)
}

pub fn read_edges_file(path: &Path, n: Option<usize>, allow_isolated: bool) -> Result<WeightedGraph> {
    read_edges(File::open(path)?, n, allow_isolated)
}

/// Writes each undirected edge once, `u < v`. The header comment records
/// the vertex count so isolated trailing vertices survive a round trip.
pub fn write_edges<W: Write>(mut w: W, graph: &WeightedGraph) -> Result<()> {
    writeln!(w, "# n={}", graph.n())?;
    let n = graph.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let x = graph.weight(i, j);
            if x != 0.0 {
                writeln!(w, "{i} {j} {x:?}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the `# n=...` header written by [`write_edges`], if present.
pub fn edge_list_vertex_count(path: &Path) -> Result<Option<usize>> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    Ok(first.trim().strip_prefix("# n=").and_then(|s| s.trim().parse().ok()))
}

/// Dense CSV with a `v0,v1,...` header.
pub fn write_matrix_csv<W: Write>(w: W, m: &Array2<f64>) -> Result<()> {
    write_table(w, &(0..m.ncols()).map(|k| format!("v{k}")).collect::<Vec<_>>(), m)
}

fn write_table<W: Write>(w: W, header: &[String], m: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_error)?;
    for row in m.rows() {
        out.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_bin<W: Write>(mut w: W, m: &Array2<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("binary matrices are square, got {:?}", m.dim())));
    }
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_matrix_bin<R: Read>(r: R) -> Result<Array2<f64>> {
    let mut r = BufReader::new(r);
    let n = read_u64(&mut r)? as usize;
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        data.push(read_f64(&mut r)?);
    }
    Ok(Array2::from_shape_vec((n, n), data).expect("n*n entries read"))
}

pub fn write_field<W: Write>(mut w: W, values: &Array2<Complex64>) -> Result<()> {
    let complex = values.iter().any(|z| z.im != 0.0);
    w.write_all(&(values.nrows() as u64).to_le_bytes())?;
    w.write_all(&(values.ncols() as u64).to_le_bytes())?;
    w.write_all(&[complex as u8])?;
    for z in values.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        if complex {
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<Array2<Complex64>> {
    let mut r = BufReader::new(r);
    let m = read_u64(&mut r)? as usize;
    let n = read_u64(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        let re = read_f64(&mut r)?;
        let im = if flag[0] != 0 { read_f64(&mut r)? } else { 0.0 };
        data.push(Complex64::new(re, im));
    }
    Ok(Array2::from_shape_vec((m, n), data).expect("m*n entries read"))
}

pub fn write_embedding<W: Write>(w: W, coords: &Array2<f64>) -> Result<()> {
    write_table(w, &(1..=coords.ncols()).map(|k| format!("phi{k}")).collect::<Vec<_>>(), coords)
}
