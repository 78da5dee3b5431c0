//! Matrix Market I/O for dense matrices and low-rank factors. Output is
//! always array format; input may also be coordinate format.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LowRankFactor};

const HEADER: &str = "%%MatrixMarket matrix array real general";

/// Serializes `a` in array format. Each entry of `comments` becomes a `%` line.
pub fn to_string(a: &DenseMatrix, comments: &[String]) -> String {
    let mut out = String::with_capacity(32 + 24 * a.rows() * a.cols());
    out.push_str(HEADER);
    out.push('\n');
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "% {line}");
        }
    }
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            // `{:e}` gives the shortest representation that round-trips.
            let _ = writeln!(out, "{:e}", a.get(i, j));
        }
    }
    out
}

pub fn write(path: impl AsRef<Path>, a: &DenseMatrix, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(a, comments)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// Parses array or coordinate text; `origin` only labels diagnostics.
/// Coordinate files may be `general` or `symmetric`; repeated entries add up.
pub fn parse(text: &str, origin: &Path) -> Result<DenseMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(err(1, "missing %%MatrixMarket banner".into()));
    }
    if fields.len() != 5 || fields[1] != "matrix" {
        return Err(err(1, format!("malformed banner {header:?}")));
    }
    let coordinate = match fields[2].as_str() {
        "array" => false,
        "coordinate" => true,
        f => return Err(err(1, format!("unsupported format {f:?}"))),
    };
    if fields[3] != "real" && fields[3] != "double" && fields[3] != "integer" {
        return Err(err(1, format!("unsupported field {:?}", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" if coordinate => true,
        f => return Err(err(1, format!("unsupported symmetry {f:?}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('%')
    });
    let last_line = text.lines().count().max(1);
    let (no, line) = body.next().ok_or_else(|| err(last_line, "missing size line".into()))?;
    let dims: Vec<&str> = line.split_whitespace().collect();
    let want = if coordinate { 3 } else { 2 };
    if dims.len() != want {
        let shape = if coordinate { "'rows cols entries'" } else { "'rows cols'" };
        return Err(err(no, format!("expected {shape}, found {:?}", line.trim())));
    }
    let count = |k: usize, what: &str| -> Result<usize> {
        dims[k].parse().map_err(|_| err(no, format!("bad {what} {:?}", dims[k])))
    };
    let (r, c) = (count(0, "row count")?, count(1, "column count")?);
    let value = |no: usize, tok: &str| -> Result<f64> {
        let v: f64 = tok.parse().map_err(|_| err(no, format!("bad value {tok:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(no, format!("non-finite value {tok:?}")))
        }
    };

    if coordinate {
        let nnz = count(2, "entry count")?;
        let mut a = DenseMatrix::zeros(r, c);
        let mut seen = 0;
        for (no, line) in body {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(no, format!("expected 'row col value', found {:?}", line.trim())));
            }
            if seen == nnz {
                return Err(err(no, format!("more than {nnz} entries")));
            }
            let index = |tok: &str, n: usize| -> Result<usize> {
                match tok.parse::<usize>() {
                    Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
                    _ => Err(err(no, format!("index {tok:?} outside 1..={n}"))),
                }
            };
            let (i, j, v) = (index(t[0], r)?, index(t[1], c)?, value(no, t[2])?);
            a.set(i, j, a.get(i, j) + v);
            if symmetric && i != j {
                a.set(j, i, a.get(j, i) + v);
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(last_line, format!("expected {nnz} entries, found {seen}")));
        }
        return Ok(a);
    }

    let mut values = Vec::with_capacity(r * c);
    for (no, line) in body {
        for tok in line.split_whitespace() {
            if values.len() == r * c {
                return Err(err(no, format!("more than {} values", r * c)));
            }
            values.push(value(no, tok)?);
        }
    }
    if values.len() != r * c {
        return Err(err(last_line, format!("expected {} values, found {}", r * c, values.len())));
    }
    DenseMatrix::from_col_major(r, c, &values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorMeta {
    schema_version: u32,
    tol: f64,
    rows: usize,
    cols: usize,
    rank: usize,
}

/// Writes `f` as `U.mtx`, `sigma.mtx`, `V.mtx` and `meta.json` under `dir`.
pub fn write_lowrank(dir: impl AsRef<Path>, f: &LowRankFactor) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("U.mtx"), &f.u_dense(), &[])?;
    let sigma = DenseMatrix::from_col_major(f.rank(), 1, f.sigma())?;
    write(dir.join("sigma.mtx"), &sigma, &[])?;
    write(dir.join("V.mtx"), &f.v_dense(), &[])?;
    let meta = FactorMeta {
        schema_version: 1,
        tol: f.tol(),
        rows: f.rows(),
        cols: f.cols(),
        rank: f.rank(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_lowrank(dir: impl AsRef<Path>) -> Result<LowRankFactor> {
    let dir = dir.as_ref();
    let path: PathBuf = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: FactorMeta = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    let u = read(dir.join("U.mtx"))?;
    let sigma = read(dir.join("sigma.mtx"))?;
    let v = read(dir.join("V.mtx"))?;
    if u.shape() != (meta.rows, meta.rank) || v.shape() != (meta.cols, meta.rank) || sigma.rows() != meta.rank {
        return Err(Error::InvalidArgument(format!(
            "{}: factor files disagree with meta.json",
            dir.display()
        )));
    }
    let sigma: Vec<f64> = (0..sigma.rows()).map(|i| sigma.get(i, 0)).collect();
    LowRankFactor::from_parts(u, sigma, v, meta.tol)
}
