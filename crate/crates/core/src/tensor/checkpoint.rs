//! Named-tensor checkpoint container.
//!
//! ```text
//! clickbait-tensors 1
//! meta <key> <json string>
//! tensor <name> <rank> <dim>...
//! <values, space separated>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "clickbait-tensors";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub params: ParamStore,
}

pub fn save_checkpoint(path: &Path, params: &ParamStore, meta: &BTreeMap<String, String>) -> Result<()> {
    let mut out = format!("{MAGIC} {CHECKPOINT_VERSION}\n");
    for (k, v) in meta {
        let _ = writeln!(out, "meta {k} {}", serde_json::to_string(v).expect("string encodes"));
    }
    for (name, t) in params.iter() {
        let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        let _ = writeln!(out, "tensor {name} {} {}", t.shape().len(), dims.join(" "));
        let vals: Vec<String> = t.data().iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().parse::<u32>().ok())
        .ok_or_else(|| Error::Checkpoint(format!("{}: not a tensor checkpoint", path.display())))?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: format version {version}, expected {CHECKPOINT_VERSION}",
            path.display()
        )));
    }

    let mut ckpt = Checkpoint::default();
    while let Some((i, line)) = lines.next() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| parse(lineno, "meta line needs a key and a value".into()))?;
            let v: String = serde_json::from_str(v).map_err(|e| parse(lineno, e.to_string()))?;
            ckpt.meta.insert(k.to_string(), v);
        } else if let Some(rest) = line.strip_prefix("tensor ") {
            let mut parts = rest.split(' ');
            let name = parts
                .next()
                .filter(|n| !n.is_empty())
                .ok_or_else(|| parse(lineno, "tensor line needs a name".into()))?;
            let nums: Vec<usize> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse(lineno, format!("bad shape: {e}")))?;
            let (&rank, dims) = nums
                .split_first()
                .ok_or_else(|| parse(lineno, "tensor line needs a rank".into()))?;
            if dims.len() != rank {
                return Err(parse(lineno, format!("rank {rank} with {} dims", dims.len())));
            }
            let (vi, values) = lines
                .next()
                .ok_or_else(|| parse(lineno, format!("tensor {name} has no values")))?;
            let data: Vec<f64> = if values.is_empty() {
                Vec::new()
            } else {
                values
                    .split(' ')
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse(vi + 1, format!("bad value: {e}")))?
            };
            let t = Tensor::new(dims.to_vec(), data).map_err(|e| parse(vi + 1, e.to_string()))?;
            if ckpt.params.id(name).is_some() {
                return Err(parse(lineno, format!("duplicate tensor {name}")));
            }
            ckpt.params.add(name, t);
        } else {
            return Err(parse(lineno, format!("unexpected line {line:?}")));
        }
    }
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::super::seeded_rng;
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = seeded_rng(3);
        let mut s = ParamStore::new();
        s.add_uniform("emb", &[4, 3], &mut rng);
        s.add("bias", Tensor::new(vec![2], vec![1e-300, -0.1]).unwrap());
        s.add("empty", Tensor::zeros(&[0, 3]));
        let meta = BTreeMap::from([("kind".to_string(), "bilstm \"x\"".to_string())]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tensors");
        save_checkpoint(&p, &s, &meta).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(back.params, s);
        assert_eq!(back.meta, meta);
    }

    #[test]
    fn version_mismatch_is_a_checkpoint_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tensors");
        std::fs::write(&p, "clickbait-tensors 99\n").unwrap();
        assert!(matches!(load_checkpoint(&p), Err(Error::Checkpoint(_))));
        std::fs::write(&p, "garbage\n").unwrap();
        assert!(matches!(load_checkpoint(&p), Err(Error::Checkpoint(_))));
        std::fs::write(&p, "clickbait-tensors 1\ntensor w 2 2 2\n1 2 3\n").unwrap();
        assert!(matches!(load_checkpoint(&p), Err(Error::Parse { line: 3, .. })));
    }
}
