use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::GraphKind;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::SparseMatrix;

/// Contents of a `tg1` graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile<T> {
    pub kind: GraphKind,
    pub matrix: SparseMatrix<T>,
}

impl<T: Real> GraphFile<T> {
    /// Header `tg1 <kind> <n_rows> <n_cols> <nnz> <symmetric>` followed by
    /// sorted `row col weight` lines, weights with 17 significant digits.
    pub fn to_tg1_string(&self) -> String {
        let m = &self.matrix;
        let mut out = String::with_capacity(32 + m.nnz() * 32);
        writeln!(
            out,
            "tg1 {} {} {} {} {}",
            self.kind,
            m.n_rows(),
            m.n_cols(),
            m.nnz(),
            u8::from(m.is_symmetric())
        )
        .unwrap();
        for (r, c, w) in m.triplets() {
            writeln!(out, "{r} {c} {:.16e}", w.as_f64()).unwrap();
        }
        out
    }
}

pub fn write_graph_file<T: Real>(path: impl AsRef<Path>, kind: GraphKind, matrix: &SparseMatrix<T>) -> Result<()> {
    let file = GraphFile {
        kind,
        matrix: matrix.clone(),
    };
    fs::write(path, file.to_tg1_string())?;
    Ok(())
}

pub fn read_graph_file<T: Real>(path: impl AsRef<Path>) -> Result<GraphFile<T>> {
    parse_graph_file(&fs::read_to_string(path)?)
}

pub fn parse_graph_file<T: Real>(content: &str) -> Result<GraphFile<T>> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::format("graph file", "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "tg1" {
        return Err(Error::format(
            "graph file",
            "header must be `tg1 <kind> <n_rows> <n_cols> <nnz> <symmetric>`",
        ));
    }
    let kind: GraphKind = fields[1].parse()?;
    let num = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::format("graph file", format!("bad header number {s:?}")))
    };
    let (n_rows, n_cols, nnz) = (num(fields[2])?, num(fields[3])?, num(fields[4])?);
    let symmetric = match fields[5] {
        "0" => false,
        "1" => true,
        other => return Err(Error::format("graph file", format!("bad symmetric flag {other:?}"))),
    };
    let mut indptr = vec![0usize; n_rows + 1];
    let mut indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut last: Option<(usize, usize)> = None;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line: i + 1,
            message: msg.to_owned(),
        };
        let mut parts = line.split_whitespace();
        let r: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad row"))?;
        let c: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad column"))?;
        let w: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad weight"))?;
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        if r >= n_rows {
            return Err(bad("row out of range"));
        }
        if last.is_some_and(|l| l >= (r, c)) {
            return Err(bad("entries must be sorted by (row, col) without duplicates"));
        }
        last = Some((r, c));
        indptr[r + 1] += 1;
        indices.push(c);
        values.push(T::of(w));
    }
    if indices.len() != nnz {
        return Err(Error::format(
            "graph file",
            format!("header announces {nnz} entries, found {}", indices.len()),
        ));
    }
    for r in 0..n_rows {
        indptr[r + 1] += indptr[r];
    }
    let matrix = SparseMatrix::from_csr(n_rows, n_cols, indptr, indices, values)?;
    if matrix.is_symmetric() != symmetric {
        return Err(Error::format("graph file", "symmetric flag disagrees with entries"));
    }
    Ok(GraphFile { kind, matrix })
}
