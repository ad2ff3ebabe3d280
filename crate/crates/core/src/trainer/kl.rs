use serde::{Deserialize, Serialize};

use super::TrainError;

/// Floor applied to `q` before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLReport {
    pub per_position: Vec<f64>,
    pub mean: f64,
    pub grad_norm: f64,
    pub step: usize,
}

/// `KL(p || q)` with `0 log 0 = 0` and `q` floored at [`PROB_FLOOR`].
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, TrainError> {
    if p.len() != q.len() {
        return Err(TrainError::Shape(format!("p has {} entries, q has {}", p.len(), q.len())));
    }
    let mut kl = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if !(pk.is_finite() && qk.is_finite()) || pk < 0.0 || qk < 0.0 {
            return Err(TrainError::Invalid("distributions must be finite and non-negative".into()));
        }
        if pk > 0.0 {
            kl += pk * (pk.ln() - qk.max(PROB_FLOOR).ln());
        }
    }
    // Rounding can leave a tiny negative value when p == q.
    Ok(kl.max(0.0))
}

/// Mean token-level divergence over aligned position lists.
pub fn kl_loss(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<KLReport, TrainError> {
    if p.len() != q.len() {
        return Err(TrainError::Shape(format!("{} p positions, {} q positions", p.len(), q.len())));
    }
    if p.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let per_position = p
        .iter()
        .zip(q)
        .map(|(pp, qq)| kl_divergence(pp, qq))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = per_position.iter().sum::<f64>() / per_position.len() as f64;
    Ok(KLReport { per_position, mean, grad_norm: 0.0, step: 0 })
}
