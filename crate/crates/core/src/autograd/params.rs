//! Named parameter sets, Adam, and the binary checkpoint format.
//!
//! Checkpoint layout (all integers little-endian):
//!
//! ```text
//! 8 bytes   magic "SSDCKPT\0"
//! u32       format version (1)
//! u64       header length in bytes
//! header    UTF-8 JSON: {"spec": .., "meta": .., "params": [{"name", "shape"}, ..]}
//! payload   every parameter's values as f64 LE, in header order
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SSDCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Ordered collection of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        let name = name.into();
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = t,
            None => self.entries.push((name, t)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar values.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Zero-filled gradient buffers aligned with the entries.
    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|(_, t)| vec![0.0; t.len()]).collect()
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Applies one update. Gradients must align with `params` entry order.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Vec<f64>]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::invalid(format!(
                "{} gradient buffers for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for ((name, t), g) in params.iter().zip(grads) {
            if g.len() != t.len() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    lhs: t.shape().to_vec(),
                    rhs: vec![g.len()],
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(name.to_string()));
            }
        }
        if self.m.is_empty() {
            self.m = params.zero_grads();
            self.v = params.zero_grads();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, t) in params.tensors_mut().enumerate() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], &grads[i]);
            for (j, p) in t.data_mut().iter_mut().enumerate() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ParamHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader<S, M> {
    spec: S,
    meta: M,
    params: Vec<ParamHeader>,
}

/// Writes a checkpoint; `spec` and `meta` travel in the JSON header.
pub fn save_checkpoint<S: Serialize, M: Serialize>(
    path: impl AsRef<Path>,
    spec: &S,
    meta: &M,
    params: &ParamSet,
) -> Result<()> {
    let path = path.as_ref();
    let header = CheckpointHeader {
        spec,
        meta,
        params: params
            .iter()
            .map(|(n, t)| ParamHeader {
                name: n.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(20 + header.len() + params.numel() * 8);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header);
    for t in params.tensors() {
        for x in t.data() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<S: DeserializeOwned, M: DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<(S, M, ParamSet)> {
    let path = path.as_ref();
    let bad = |message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing checkpoint magic header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let body = &bytes[20..];
    if body.len() < hlen {
        return Err(bad("truncated header".into()));
    }
    let header: CheckpointHeader<S, M> =
        serde_json::from_slice(&body[..hlen]).map_err(|e| bad(format!("header: {e}")))?;
    let mut payload = body[hlen..].chunks_exact(8);
    let mut params = ParamSet::new();
    for p in header.params {
        let n: usize = p.shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let chunk = payload
                .next()
                .ok_or_else(|| bad(format!("payload ends inside `{}`", p.name)))?;
            data.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
        params.insert(p.name, Tensor::new(p.shape, data)?);
    }
    if payload.next().is_some() || !payload.remainder().is_empty() {
        return Err(bad("trailing bytes after payload".into()));
    }
    Ok((header.spec, header.meta, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(values: Vec<f64>) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::vector(values));
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = one_param(vec![1.0, -2.0]);
        let before = p.clone();
        let mut adam = Adam::new(1e-3);
        adam.step(&mut p, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        let mut p = one_param(vec![0.0, 0.0, 0.0]);
        let mut adam = Adam::new(0.01);
        adam.step(&mut p, &[vec![0.5, -3.0, 1e-3]]).unwrap();
        let w = p.get("w").unwrap().data();
        let expect = |g: f64| -0.01 * g / (g.abs() + 1e-8);
        for (x, g) in w.iter().zip([0.5, -3.0, 1e-3]) {
            assert!((x - expect(g)).abs() < 1e-15);
            assert!((x.abs() - 0.01).abs() < 1e-7);
        }
    }

    #[test]
    fn alternating_gradients_keep_positive_second_moment() {
        let mut p = one_param(vec![0.0]);
        let mut adam = Adam::new(0.01);
        adam.step(&mut p, &[vec![1.0]]).unwrap();
        adam.step(&mut p, &[vec![-1.0]]).unwrap();
        assert!(adam.second_moments()[0][0] > 0.0);
    }

    #[test]
    fn nonfinite_gradient_names_parameter() {
        let mut p = one_param(vec![0.0]);
        let err = Adam::new(0.01).step(&mut p, &[vec![f64::NAN]]).unwrap_err();
        assert!(err.to_string().contains("`w`"));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ckpt");
        let mut p = ParamSet::new();
        p.insert("a", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 0.1]).unwrap());
        p.insert("b", Tensor::vector(vec![-0.5]));
        save_checkpoint(&path, &"spec", &7u32, &p).unwrap();
        let (spec, meta, q): (String, u32, ParamSet) = load_checkpoint(&path).unwrap();
        assert_eq!(spec, "spec");
        assert_eq!(meta, 7);
        assert_eq!(q, p);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint::<String, u32>(&path).is_err());
        std::fs::write(&path, b"not a checkpoint at all").unwrap();
        assert!(load_checkpoint::<String, u32>(&path).is_err());
    }
}
