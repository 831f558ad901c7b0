//! `key=value` text files: run manifests and configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are written in
//! sorted order so identical runs produce identical manifests.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let v = value.to_string();
        assert!(!key.contains('=') && !key.contains('\n') && !v.contains('\n'), "bad manifest entry {key}");
        self.entries.insert(key.to_string(), v);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parses the value under `key`, if present.
    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Error::InvalidInput(format!("config key '{key}': {e}"))),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut m = Manifest::new();
        for (k, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| Error::Parse { line: k + 1, msg: format!("expected key=value, got '{t}'") })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse { line: k + 1, msg: "empty key".into() });
            }
            m.entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(m)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write(crate::io::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_sorted() {
        let mut m = Manifest::new();
        m.set("z", 1).set("a", "x y").set("n-eigs", 50);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a=x y\nn-eigs=50\nz=1\n");
        assert_eq!(Manifest::read(buf.as_slice()).unwrap(), m);
        assert_eq!(m.parse::<usize>("n-eigs").unwrap(), Some(50));
        assert!(m.parse::<usize>("a").is_err());
    }

    #[test]
    fn comments_and_errors() {
        let m = Manifest::read("# c\n\n k = v \n".as_bytes()).unwrap();
        assert_eq!(m.get("k"), Some("v"));
        assert!(matches!(Manifest::read("a=1\nnope\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
