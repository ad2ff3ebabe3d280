//! A tiny next-token model: mean of the last `window` context embeddings,
//! one tanh hidden layer, softmax over the vocabulary. Parameters live in a
//! single flat vector so gradients, checksums and finite differences can
//! treat them uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{TokenId, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub window: usize,
}

impl ModelDims {
    pub fn new(vocab: usize) -> Self {
        ModelDims { vocab, embed: 16, hidden: 32, window: 8 }
    }

    pub fn param_count(&self) -> usize {
        let (v, d, h) = (self.vocab, self.embed, self.hidden);
        v * d + h * d + h + v * h + v
    }

    fn offsets(&self) -> Offsets {
        let (v, d, h) = (self.vocab, self.embed, self.hidden);
        let w1 = v * d;
        let b1 = w1 + h * d;
        let w2 = b1 + h;
        let b2 = w2 + v * h;
        Offsets { w1, b1, w2, b2 }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.vocab == 0 || self.embed == 0 || self.hidden == 0 || self.window == 0 {
            return Err(TrainError::Invalid(format!("degenerate dims {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Forward {
    pub window: Vec<TokenId>,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl Forward {
    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub dims: ModelDims,
    pub params: Vec<f64>,
}

impl ToyModel {
    /// Uniform init; biases start at zero. The input-side scales are large
    /// enough that a single token still moves the window average.
    pub fn random(dims: ModelDims, seed: u64) -> Result<Self, TrainError> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = dims.offsets();
        let mut params = vec![0.0; dims.param_count()];
        let embed_scale = 2.0;
        let w1_scale = 4.0 / (dims.embed as f64).sqrt();
        let w2_scale = 0.3;
        for (i, p) in params.iter_mut().enumerate() {
            let scale = if i < o.w1 {
                embed_scale
            } else if i < o.b1 {
                w1_scale
            } else if i < o.w2 {
                0.0
            } else if i < o.b2 {
                w2_scale
            } else {
                0.0
            };
            if scale > 0.0 {
                *p = rng.random_range(-scale..scale);
            }
        }
        Ok(ToyModel { dims, params })
    }

    /// All-zero parameters; every output distribution is uniform.
    pub fn zeros(dims: ModelDims) -> Result<Self, TrainError> {
        dims.validate()?;
        Ok(ToyModel { dims, params: vec![0.0; dims.param_count()] })
    }

    pub fn from_params(dims: ModelDims, params: Vec<f64>) -> Result<Self, TrainError> {
        dims.validate()?;
        if params.len() != dims.param_count() {
            return Err(TrainError::Shape(format!(
                "expected {} parameters, got {}",
                dims.param_count(),
                params.len()
            )));
        }
        Ok(ToyModel { dims, params })
    }

    pub fn forward(&self, context: &[TokenId]) -> Result<Forward, TrainError> {
        let ModelDims { vocab, embed, hidden, window } = self.dims;
        let o = self.dims.offsets();
        let win = &context[context.len().saturating_sub(window)..];
        if let Some(&t) = win.iter().find(|&&t| t as usize >= vocab) {
            return Err(TrainError::Shape(format!("token {t} outside vocabulary of {vocab}")));
        }
        let mut x = vec![0.0; embed];
        for &t in win {
            let row = &self.params[t as usize * embed..(t as usize + 1) * embed];
            for (xi, r) in x.iter_mut().zip(row) {
                *xi += r;
            }
        }
        if !win.is_empty() {
            let n = win.len() as f64;
            x.iter_mut().for_each(|xi| *xi /= n);
        }
        let h: Vec<f64> = (0..hidden)
            .map(|j| {
                let row = &self.params[o.w1 + j * embed..o.w1 + (j + 1) * embed];
                let a: f64 = row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + self.params[o.b1 + j];
                a.tanh()
            })
            .collect();
        let z: Vec<f64> = (0..vocab)
            .map(|k| {
                let row = &self.params[o.w2 + k * hidden..o.w2 + (k + 1) * hidden];
                row.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>() + self.params[o.b2 + k]
            })
            .collect();
        Ok(Forward { window: win.to_vec(), x, h, log_probs: log_softmax(&z) })
    }

    /// Accumulate `d loss / d params` into `grad` given `dz = d loss / d logits`.
    pub fn backward(&self, fwd: &Forward, dz: &[f64], grad: &mut [f64]) {
        let ModelDims { vocab, embed, hidden, .. } = self.dims;
        let o = self.dims.offsets();
        let mut dh = vec![0.0; hidden];
        for k in 0..vocab {
            let g = dz[k];
            if g == 0.0 {
                continue;
            }
            grad[o.b2 + k] += g;
            let base = o.w2 + k * hidden;
            for j in 0..hidden {
                grad[base + j] += g * fwd.h[j];
                dh[j] += g * self.params[base + j];
            }
        }
        let mut dx = vec![0.0; embed];
        for j in 0..hidden {
            let da = dh[j] * (1.0 - fwd.h[j] * fwd.h[j]);
            grad[o.b1 + j] += da;
            let base = o.w1 + j * embed;
            for i in 0..embed {
                grad[base + i] += da * fwd.x[i];
                dx[i] += da * self.params[base + i];
            }
        }
        if fwd.window.is_empty() {
            return;
        }
        let n = fwd.window.len() as f64;
        for &t in &fwd.window {
            let base = t as usize * embed;
            for i in 0..embed {
                grad[base + i] += dx[i] / n;
            }
        }
    }

    /// Hex SHA-256 over the dimensions and the little-endian parameter bytes.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        let d = self.dims;
        for v in [d.vocab, d.embed, d.hidden, d.window] {
            h.update((v as u64).to_le_bytes());
        }
        for p in &self.params {
            h.update(p.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

pub const CHECKPOINT_FORMAT: &str = "kgrat-toy-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dims: ModelDims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<Vec<String>>,
    pub checksum: String,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: &ToyModel, vocab: Option<Vec<String>>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            dims: model.dims,
            vocab,
            checksum: model.checksum(),
            params: model.params.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    /// Parse and verify format, shape and checksum.
    pub fn from_json(text: &str) -> Result<(ToyModel, Option<Vec<String>>), TrainError> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| TrainError::Checkpoint(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT || c.version != 1 {
            return Err(TrainError::Checkpoint(format!("unsupported format {} v{}", c.format, c.version)));
        }
        if let Some(v) = &c.vocab {
            if v.len() != c.dims.vocab {
                return Err(TrainError::Checkpoint("vocabulary size does not match dims".into()));
            }
        }
        let model = ToyModel::from_params(c.dims, c.params)?;
        if model.checksum() != c.checksum {
            return Err(TrainError::Checkpoint("checksum mismatch".into()));
        }
        Ok((model, c.vocab))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ToyModel {
        ToyModel::random(ModelDims { vocab: 7, embed: 3, hidden: 4, window: 2 }, 1).unwrap()
    }

    #[test]
    fn forward_is_a_distribution() {
        let m = small();
        let f = m.forward(&[0, 4, 5, 6]).unwrap();
        assert_eq!(f.window, vec![5, 6]);
        let s: f64 = f.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(m.forward(&[9]).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ToyModel::zeros(ModelDims::new(5)).unwrap();
        for p in m.forward(&[0, 4]).unwrap().probs() {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn log_softmax_is_stable() {
        let l = log_softmax(&[1000.0, 1000.0]);
        assert!((l[0] - (0.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let m = small();
        let text = Checkpoint::new(&m, None).to_json();
        let (back, vocab) = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert!(vocab.is_none());
        let tampered = text.replacen("\"params\":[", "\"params\":[1.5,", 1);
        assert!(Checkpoint::from_json(&tampered).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let d = ModelDims::new(10);
        assert_eq!(ToyModel::random(d, 3).unwrap(), ToyModel::random(d, 3).unwrap());
        assert_ne!(ToyModel::random(d, 3).unwrap(), ToyModel::random(d, 4).unwrap());
    }
}
