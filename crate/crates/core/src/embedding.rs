//! Keyed embedding tables and the word2vec text format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense vectors with a key per row (token, sentence id, node label).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    vectors: Array2<T>,
    keys: Vec<String>,
    key_map: HashMap<String, usize>,
}

impl<T: Real> EmbeddingTable<T> {
    pub fn new(keys: Vec<String>, vectors: Array2<T>) -> Result<Self> {
        if keys.len() != vectors.nrows() {
            return Err(Error::shape("embedding table", keys.len(), vectors.nrows()));
        }
        if vectors.ncols() == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        let mut key_map = HashMap::with_capacity(keys.len());
        for (i, k) in keys.iter().enumerate() {
            if key_map.insert(k.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate embedding key {k:?}")));
            }
        }
        Ok(EmbeddingTable {
            vectors,
            keys,
            key_map,
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn vectors(&self) -> &Array2<T> {
        &self.vectors
    }

    pub fn index(&self, key: &str) -> Option<usize> {
        self.key_map.get(key).copied()
    }

    pub fn get(&self, key: &str) -> Option<ArrayView1<'_, T>> {
        self.index(key).map(|i| self.vectors.row(i))
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.vectors.row(i)
    }

    pub fn cast<U: Real>(&self) -> EmbeddingTable<U> {
        EmbeddingTable {
            vectors: self.vectors.mapv(|v| U::of(v.as_f64())),
            keys: self.keys.clone(),
            key_map: self.key_map.clone(),
        }
    }

    /// Serializes in word2vec text format: a `count dim` header line, then
    /// `key v1 ... vK` per row. Values use shortest round-trip formatting.
    pub fn to_word2vec_string(&self) -> Result<String> {
        let mut out = String::new();
        writeln!(out, "{} {}", self.len(), self.dim()).unwrap();
        for (key, row) in self.keys.iter().zip(self.vectors.rows()) {
            if key.is_empty() || key.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "key {key:?} cannot be written in word2vec format"
                )));
            }
            out.push_str(key);
            for v in row {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_word2vec(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_word2vec_string()?)?;
        Ok(())
    }

    pub fn parse_word2vec(content: &str) -> Result<Self> {
        let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format("word2vec file", "missing header"))?;
        let mut parts = header.split_whitespace();
        let parse_usize = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format("word2vec file", "header must be `count dim`"))
        };
        let count = parse_usize(parts.next())?;
        let dim = parse_usize(parts.next())?;
        let mut keys = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap().to_owned();
            let before = data.len();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad number {f:?}"),
                })?;
                data.push(T::of(v));
            }
            if data.len() - before != dim {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", data.len() - before),
                });
            }
            keys.push(key);
        }
        if keys.len() != count {
            return Err(Error::format(
                "word2vec file",
                format!("header announces {count} rows, found {}", keys.len()),
            ));
        }
        let vectors = Array2::from_shape_vec((count, dim), data)
            .map_err(|e| Error::format("word2vec file", e.to_string()))?;
        Self::new(keys, vectors)
    }

    pub fn read_word2vec(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_word2vec(&fs::read_to_string(path)?)
    }
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == T::zero() || nb == T::zero() {
        T::zero()
    } else {
        a.dot(&b) / (na * nb)
    }
}
