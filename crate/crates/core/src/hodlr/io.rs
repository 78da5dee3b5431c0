use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{child_path, ArithmeticConfig, HMatrix, Kind};
use crate::error::{Error, Result};
use crate::linalg::mm;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    size: usize,
    config: ArithmeticConfig,
    tree: Tree,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Tree {
    Leaf {
        size: usize,
        file: String,
    },
    Node {
        size: usize,
        a11: Box<Tree>,
        a22: Box<Tree>,
        a21: String,
        a12: String,
    },
}

/// Writes `manifest.json` plus one Matrix Market file per leaf and one
/// factor directory per off-diagonal block.
pub fn save(dir: impl AsRef<Path>, h: &HMatrix, cfg: &ArithmeticConfig) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tree = save_rec(dir, h, "root")?;
    let manifest = Manifest {
        schema_version: 1,
        size: h.size(),
        config: *cfg,
        tree,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn save_rec(dir: &Path, h: &HMatrix, path: &str) -> Result<Tree> {
    match h.kind() {
        Kind::Leaf(d) => {
            let file = format!("{path}.mtx");
            mm::write(dir.join(&file), d, &[])?;
            Ok(Tree::Leaf { size: h.size(), file })
        }
        Kind::Node(n) => {
            let a21 = child_path(path, "21");
            let a12 = child_path(path, "12");
            mm::write_lowrank(dir.join(&a21), &n.a21)?;
            mm::write_lowrank(dir.join(&a12), &n.a12)?;
            Ok(Tree::Node {
                size: h.size(),
                a11: Box::new(save_rec(dir, &n.a11, &child_path(path, "11"))?),
                a22: Box::new(save_rec(dir, &n.a22, &child_path(path, "22"))?),
                a21,
                a12,
            })
        }
    }
}

pub fn load(dir: impl AsRef<Path>) -> Result<(HMatrix, ArithmeticConfig)> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    manifest.config.validate()?;
    let h = load_rec(dir, &manifest.tree, &manifest.config, "root")?;
    if h.size() != manifest.size {
        return Err(Error::PartitionMismatch { path: "root".into() });
    }
    Ok((h, manifest.config))
}

fn load_rec(dir: &Path, t: &Tree, cfg: &ArithmeticConfig, path: &str) -> Result<HMatrix> {
    match t {
        Tree::Leaf { size, file } => {
            let d = mm::read(dir.join(file))?;
            if d.shape() != (*size, *size) || *size > cfg.leaf_size {
                return Err(Error::PartitionMismatch { path: path.into() });
            }
            Ok(HMatrix::leaf(d, cfg.leaf_size))
        }
        Tree::Node { size, a11, a22, a21, a12 } => {
            let a11 = load_rec(dir, a11, cfg, &child_path(path, "11"))?;
            let a22 = load_rec(dir, a22, cfg, &child_path(path, "22"))?;
            let f21 = mm::read_lowrank(dir.join(a21))?;
            let f12 = mm::read_lowrank(dir.join(a12))?;
            let (n1, n2) = (size / 2, size - size / 2);
            if *size <= cfg.leaf_size
                || a11.size() != n1
                || a22.size() != n2
                || (f21.rows(), f21.cols()) != (n2, n1)
                || (f12.rows(), f12.cols()) != (n1, n2)
            {
                return Err(Error::PartitionMismatch { path: path.into() });
            }
            Ok(HMatrix::node(a11, a22, f21, f12))
        }
    }
}
