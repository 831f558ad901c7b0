//! Flat binary cache of an [`EigenBasis`].
//!
//! Layout, all little-endian: `n: u64`, `N: u64`, `mu: [f64; N]`, then
//! `phi` column-major as `[f64; n * N]`. Files are named by a SHA-256 of the
//! Laplacian bytes, `N` and the variant name. Bases with a non-counting
//! measure (random-walk) are not cached.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use super::EigenBasis;
use crate::error::{Error, Result};

pub fn cache_key(l: &Array2<f64>, n_eigs: usize, variant: &str) -> String {
    let mut h = Sha256::new();
    h.update((l.nrows() as u64).to_le_bytes());
    for v in l.iter() {
        h.update(v.to_le_bytes());
    }
    h.update((n_eigs as u64).to_le_bytes());
    h.update(variant.as_bytes());
    hex::encode(h.finalize())
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("eigen-{key}.bin"))
}

pub fn write_basis<W: Write>(mut w: W, basis: &EigenBasis) -> Result<()> {
    if basis.measure().is_some() {
        return Err(Error::InvalidInput("bases with a vertex measure are not cacheable".into()));
    }
    w.write_all(&(basis.n() as u64).to_le_bytes())?;
    w.write_all(&(basis.len() as u64).to_le_bytes())?;
    for m in basis.mu() {
        w.write_all(&m.to_le_bytes())?;
    }
    for k in 0..basis.len() {
        for v in basis.column(k) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_basis<R: Read>(mut r: R) -> Result<EigenBasis> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < 16 {
        return Err(Error::InvalidInput("eigen cache file is truncated".into()));
    }
    let word = |i: usize| u64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().unwrap());
    let (n, k) = (word(0) as usize, word(1) as usize);
    let expected = 16 + 8 * (k + n * k);
    if buf.len() != expected {
        return Err(Error::InvalidInput(format!(
            "eigen cache file has {} bytes, expected {expected}",
            buf.len()
        )));
    }
    let float = |i: usize| f64::from_le_bytes(buf[16 + 8 * i..24 + 8 * i].try_into().unwrap());
    let mu = (0..k).map(float).collect();
    let phi = Array2::from_shape_fn((n, k), |(i, c)| float(k + c * n + i));
    EigenBasis::new(mu, phi, None)
}

pub fn load(dir: &Path, key: &str) -> Result<Option<EigenBasis>> {
    let path = cache_path(dir, key);
    if !path.exists() {
        return Ok(None);
    }
    read_basis(fs::File::open(path)?).map(Some)
}

pub fn store(dir: &Path, key: &str, basis: &EigenBasis) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::new();
    write_basis(&mut bytes, basis)?;
    fs::write(cache_path(dir, key), bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::compute_basis;
    use ndarray::array;

    #[test]
    fn layout_and_roundtrip() {
        let l = array![[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        let b = compute_basis(&l, 2).unwrap();
        let mut bytes = Vec::new();
        write_basis(&mut bytes, &b).unwrap();
        assert_eq!(bytes.len(), 16 + 8 * (2 + 3 * 2));
        assert_eq!(&bytes[0..8], &3u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        // phi is column-major: the first column follows the eigenvalues
        let first = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
        assert_eq!(first, b.phi()[[0, 0]]);
        let back = read_basis(&bytes[..]).unwrap();
        assert_eq!(back, b);
        assert!(read_basis(&bytes[..20]).is_err());
    }

    #[test]
    fn key_depends_on_inputs() {
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let k = cache_key(&l, 2, "sym");
        assert_eq!(k.len(), 64);
        assert_ne!(k, cache_key(&l, 1, "sym"));
        assert_ne!(k, cache_key(&l, 2, "unnorm"));
        assert_eq!(k, cache_key(&l.clone(), 2, "sym"));
    }

    #[test]
    fn store_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let l = array![[1.0, -1.0], [-1.0, 1.0]];
        let b = compute_basis(&l, 2).unwrap();
        let key = cache_key(&l, 2, "unnorm");
        assert!(load(dir.path(), &key).unwrap().is_none());
        store(dir.path(), &key, &b).unwrap();
        assert_eq!(load(dir.path(), &key).unwrap().unwrap(), b);
    }
}
