//! Full-batch gradient descent on the knowledge-aware objective, plus the
//! cross-entropy pretraining used to build the frozen rationale-conditioned
//! model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kl::{kl_loss, KLReport, PROB_FLOOR};
use super::model::{Forward, ToyModel};
use super::{TokenId, TrainError, TrainingExample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    /// Recorded for reproducibility; gradient descent itself draws no
    /// randomness, so the seed matters only where models are initialized.
    pub seed: u64,
    /// Optimize `KL(q || p)` instead. Experimental.
    pub reverse: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 500, lr: 0.1, seed: 7, reverse: false }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(TrainError::Invalid(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ToyModel,
    /// Loss before each update, then one final row after the last update.
    pub trace: Vec<TraceRow>,
    pub initial: KLReport,
    pub last: KLReport,
}

impl TrainOutcome {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,loss,grad_norm\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{}\n", r.step, r.loss, r.grad_norm));
        }
        out
    }
}

fn positions(data: &[TrainingExample]) -> impl Iterator<Item = (&TrainingExample, usize)> {
    data.iter().flat_map(|ex| (0..ex.out.len()).map(move |t| (ex, t)))
}

/// `q`'s distributions at every output position, in dataset order.
pub fn q_targets(q: &ToyModel, data: &[TrainingExample]) -> Result<Vec<Vec<f64>>, TrainError> {
    positions(data).map(|(ex, t)| Ok(q.forward(&ex.q_context(t))?.probs())).collect()
}

pub fn p_outputs(p: &ToyModel, data: &[TrainingExample]) -> Result<Vec<Forward>, TrainError> {
    positions(data).map(|(ex, t)| p.forward(&ex.p_context(t))).collect()
}

fn check_shapes(p: &ToyModel, q: &ToyModel, data: &[TrainingExample]) -> Result<(), TrainError> {
    if p.dims.vocab != q.dims.vocab {
        return Err(TrainError::Shape(format!(
            "vocabulary sizes differ: {} vs {}",
            p.dims.vocab, q.dims.vocab
        )));
    }
    if positions(data).next().is_none() {
        return Err(TrainError::EmptyDataset);
    }
    Ok(())
}

/// Mean `KL(p || q)` and its gradient with respect to `p`'s parameters.
///
/// Per position, `d KL / d z_k = p_k (log p_k - log q_k - KL)`. With
/// `reverse` the loss is `KL(q || p)` and the logit gradient is `p_k - q_k`.
pub fn kl_loss_and_grad(
    p: &ToyModel,
    targets: &[Vec<f64>],
    data: &[TrainingExample],
    reverse: bool,
) -> Result<(KLReport, Vec<f64>), TrainError> {
    let fwds = p_outputs(p, data)?;
    if fwds.len() != targets.len() {
        return Err(TrainError::Shape(format!("{} positions, {} targets", fwds.len(), targets.len())));
    }
    let n = fwds.len() as f64;
    let mut grad = vec![0.0; p.params.len()];
    let mut per_position = Vec::with_capacity(fwds.len());
    for (f, q) in fwds.iter().zip(targets) {
        let log_q: Vec<f64> = q.iter().map(|v| v.max(PROB_FLOOR).ln()).collect();
        let probs = f.probs();
        if reverse {
            let kl: f64 = q
                .iter()
                .zip(log_q.iter().zip(&f.log_probs))
                .filter(|(qk, _)| **qk > 0.0)
                .map(|(qk, (lq, lp))| qk * (lq - lp))
                .sum();
            let dz: Vec<f64> = probs.iter().zip(q).map(|(pk, qk)| (pk - qk) / n).collect();
            p.backward(f, &dz, &mut grad);
            per_position.push(kl.max(0.0));
            continue;
        }
        let kl: f64 = probs
            .iter()
            .zip(f.log_probs.iter().zip(&log_q))
            .filter(|(pk, _)| **pk > 0.0)
            .map(|(pk, (lp, lq))| pk * (lp - lq))
            .sum();
        let dz: Vec<f64> = probs
            .iter()
            .zip(f.log_probs.iter().zip(&log_q))
            .map(|(pk, (lp, lq))| pk * (lp - lq - kl) / n)
            .collect();
        p.backward(f, &dz, &mut grad);
        per_position.push(kl.max(0.0));
    }
    let mean = per_position.iter().sum::<f64>() / n;
    let grad_norm = norm(&grad);
    Ok((KLReport { per_position, mean, grad_norm, step: 0 }, grad))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

fn ensure_finite(loss: f64, grad: &[f64], step: usize) -> Result<(), TrainError> {
    if !loss.is_finite() {
        return Err(TrainError::NonFinite { what: "loss", step });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(TrainError::NonFinite { what: "gradient", step });
    }
    Ok(())
}

/// Minimize mean `KL(p || q)` over `data`; `q` stays frozen.
pub fn train(
    p: &ToyModel,
    q: &ToyModel,
    data: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    check_shapes(p, q, data)?;
    let targets = q_targets(q, data)?;
    let mut model = p.clone();
    let mut trace = Vec::with_capacity(cfg.steps + 1);
    let mut initial = None;
    for step in 0..=cfg.steps {
        let (mut report, grad) = kl_loss_and_grad(&model, &targets, data, cfg.reverse)?;
        ensure_finite(report.mean, &grad, step)?;
        report.step = step;
        trace.push(TraceRow { step, loss: report.mean, grad_norm: report.grad_norm });
        if step == 0 {
            initial = Some(report.clone());
        }
        if step == cfg.steps {
            return Ok(TrainOutcome {
                model,
                trace,
                initial: initial.expect("step 0 recorded"),
                last: report,
            });
        }
        for (w, g) in model.params.iter_mut().zip(&grad) {
            *w -= cfg.lr * g;
        }
        log::debug!("step {step}: loss {:.6}", report.mean);
    }
    unreachable!("loop returns on its final step")
}

/// Which context cross-entropy pretraining conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    WithRationale,
    Plain,
}

/// Mean next-token cross-entropy and its gradient.
pub fn ce_loss_and_grad(
    m: &ToyModel,
    data: &[TrainingExample],
    cond: Conditioning,
) -> Result<(f64, Vec<f64>), TrainError> {
    let n = positions(data).count();
    if n == 0 {
        return Err(TrainError::EmptyDataset);
    }
    let mut grad = vec![0.0; m.params.len()];
    let mut loss = 0.0;
    for (ex, t) in positions(data) {
        let ctx = match cond {
            Conditioning::WithRationale => ex.q_context(t),
            Conditioning::Plain => ex.p_context(t),
        };
        let f = m.forward(&ctx)?;
        let target = ex.out[t] as usize;
        if target >= m.dims.vocab {
            return Err(TrainError::Shape(format!("target {target} outside vocabulary")));
        }
        loss -= f.log_probs[target];
        let mut dz = f.probs();
        dz[target] -= 1.0;
        dz.iter_mut().for_each(|d| *d /= n as f64);
        m.backward(&f, &dz, &mut grad);
    }
    Ok((loss / n as f64, grad))
}

/// Cross-entropy gradient descent; returns the model and the loss before each
/// step followed by the final loss.
pub fn pretrain_ce(
    m: &ToyModel,
    data: &[TrainingExample],
    cond: Conditioning,
    steps: usize,
    lr: f64,
) -> Result<(ToyModel, Vec<f64>), TrainError> {
    let mut model = m.clone();
    let mut losses = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let (loss, grad) = ce_loss_and_grad(&model, data, cond)?;
        ensure_finite(loss, &grad, step)?;
        losses.push(loss);
        if step == steps {
            break;
        }
        for (w, g) in model.params.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
    }
    Ok((model, losses))
}

/// Largest relative error between analytic and central-difference gradients
/// of the KL objective over `samples` seeded parameter indices.
pub fn grad_check(
    p: &ToyModel,
    q: &ToyModel,
    data: &[TrainingExample],
    samples: usize,
    eps: f64,
    seed: u64,
) -> Result<f64, TrainError> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(TrainError::Invalid(format!("epsilon {eps} outside [1e-6, 1e-3]")));
    }
    check_shapes(p, q, data)?;
    let targets = q_targets(q, data)?;
    let (_, analytic) = kl_loss_and_grad(p, &targets, data, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = p.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.random_range(0..p.params.len());
        let w = p.params[i];
        probe.params[i] = w + eps;
        let plus = kl_loss_and_grad(&probe, &targets, data, false)?.0.mean;
        probe.params[i] = w - eps;
        let minus = kl_loss_and_grad(&probe, &targets, data, false)?.0.mean;
        probe.params[i] = w;
        let numeric = (plus - minus) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

fn argmax(v: &[f64]) -> TokenId {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best as TokenId
}

/// Fraction of output positions where `p` (plain context) and `q`
/// (rationale context) pick the same most likely token; ties go to the lower
/// id.
pub fn argmax_agreement(p: &ToyModel, q: &ToyModel, data: &[TrainingExample]) -> Result<f64, TrainError> {
    check_shapes(p, q, data)?;
    let mut total = 0usize;
    let mut agree = 0usize;
    for (ex, t) in positions(data) {
        let a = argmax(&p.forward(&ex.p_context(t))?.log_probs);
        let b = argmax(&q.forward(&ex.q_context(t))?.log_probs);
        total += 1;
        agree += usize::from(a == b);
    }
    Ok(agree as f64 / total as f64)
}

/// KL report for `p` against frozen `q` without a gradient step.
pub fn evaluate(p: &ToyModel, q: &ToyModel, data: &[TrainingExample]) -> Result<KLReport, TrainError> {
    check_shapes(p, q, data)?;
    let ps: Vec<Vec<f64>> = p_outputs(p, data)?.iter().map(Forward::probs).collect();
    kl_loss(&ps, &q_targets(q, data)?)
}
