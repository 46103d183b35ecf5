//! Self-supervised training of dual proxies (DLL), the DC3-on-the-dual
//! baseline, and evaluation against reference optima.

mod config;
pub mod dc3;
mod eval;
mod model;

use serde::{Deserialize, Serialize};

pub use config::{Dc3Config, Method, TrainConfig};
pub use eval::{evaluate, EvalReport, EvalRow, Predictor, WEAK_DUALITY_TOL};
pub use model::{Normalizer, TrainedModel, MODEL_FORMAT};

use crate::completion::{completion_bound, completion_vjp, knapsack_dual, prodplan_dual, CompletionInput, DualSolution};
use crate::error::{Error, Result};
use crate::neural::{adam_step, Activation, AdamState, LrSchedule, Mlp, MlpGradients};
use crate::problems::rng::SplitMix64;
use crate::problems::{Dataset, Instance, Split};

const TAG_SHUFFLE: u64 = 0x5348_5546;
const INFER_CHUNK: usize = 512;

fn completion_input(inst: &Instance) -> CompletionInput<'_> {
    match inst {
        Instance::Knapsack(k) => CompletionInput::Knapsack(k),
        Instance::Prodplan(p) => CompletionInput::Prodplan(p),
    }
}

/// Dual-feasible solution obtained by completing `y ≤ 0`.
pub fn complete_from_y(inst: &Instance, y: &[f64]) -> Result<DualSolution> {
    match inst {
        Instance::Knapsack(k) => knapsack_dual(k, y),
        Instance::Prodplan(p) => {
            crate::error::check_len("prodplan y", 1, y.len())?;
            prodplan_dual(p, y[0])
        }
    }
}

/// Output width of the network for `method` on `inst`.
fn output_dim(method: Method, inst: &Instance) -> usize {
    match method {
        Method::Dll => inst.dims().0,
        Method::Dc3 => dc3::dc3_dim(inst),
    }
}

/// Fresh network for `config` with Glorot initialization from its seed.
pub fn build_network(config: &TrainConfig, input_dim: usize, output_dim: usize) -> Result<Mlp> {
    let mut dims = vec![input_dim];
    dims.extend(&config.hidden);
    dims.push(output_dim);
    let mut acts = vec![Activation::Sigmoid; config.hidden.len()];
    acts.push(match config.method {
        Method::Dll => Activation::NegatedSoftplus,
        Method::Dc3 => Activation::Linear,
    });
    Mlp::new(&dims, &acts, config.seed)
}

fn normalized_features(norm: &Normalizer, instances: &[&Instance]) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(instances.len() * norm.dim());
    for inst in instances {
        norm.apply_into(&inst.features(), &mut x)?;
    }
    Ok(x)
}

/// Per-sample loss and head cotangent (unscaled by batch size).
fn sample_loss(config: &TrainConfig, inst: &Instance, head: &[f64]) -> Result<(f64, Vec<f64>)> {
    let s = config.output_scale;
    let v: Vec<f64> = head.iter().map(|h| s * h).collect();
    match config.method {
        Method::Dll => {
            let input = completion_input(inst);
            let bound = completion_bound(&input, &v)?;
            let g = completion_vjp(&input, &v, -s)?;
            Ok((-bound, g))
        }
        Method::Dc3 => {
            let d = &config.dc3;
            let (loss, g) = dc3::soft_loss_and_grad(inst, &v, d.correction_steps, d.correction_rate, d.penalty);
            Ok((loss, g.into_iter().map(|gi| s * gi).collect()))
        }
    }
}

/// Mean training loss over `batch` and its gradient with respect to the
/// network parameters. For DLL the loss is `−mean L(ŷ, ẑ)`.
pub fn batch_loss_and_grad(
    config: &TrainConfig,
    net: &Mlp,
    norm: &Normalizer,
    batch: &[&Instance],
) -> Result<(f64, MlpGradients)> {
    let x = normalized_features(norm, batch)?;
    batch_loss_and_grad_features(config, net, &x, batch)
}

fn batch_loss_and_grad_features(
    config: &TrainConfig,
    net: &Mlp,
    x: &[f64],
    batch: &[&Instance],
) -> Result<(f64, MlpGradients)> {
    let bs = batch.len();
    let (out, cache) = net.forward(x, bs)?;
    let k = net.output_dim();
    let mut cot = vec![0.0; out.len()];
    let mut total = 0.0;
    for (i, inst) in batch.iter().enumerate() {
        let (loss, g) = sample_loss(config, inst, &out[i * k..(i + 1) * k])?;
        total += loss;
        for (c, gi) in cot[i * k..(i + 1) * k].iter_mut().zip(g) {
            *c = gi / bs as f64;
        }
    }
    let grads = net.backward(&cache, &cot)?;
    Ok((total / bs as f64, grads))
}

/// Mean loss without gradients.
pub fn mean_loss(config: &TrainConfig, net: &Mlp, norm: &Normalizer, instances: &[&Instance]) -> Result<f64> {
    let mut total = 0.0;
    let k = net.output_dim();
    for chunk in instances.chunks(INFER_CHUNK) {
        let x = normalized_features(norm, chunk)?;
        let out = net.predict(&x, chunk.len())?;
        for (i, inst) in chunk.iter().enumerate() {
            total += sample_loss(config, inst, &out[i * k..(i + 1) * k])?.0;
        }
    }
    Ok(total / instances.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation loss.
    pub model: TrainedModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        s.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.lr));
    }
    s
}

pub fn train(ds: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(ds, config, |_| {})
}

pub fn dll_train(ds: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.method != Method::Dll {
        return Err(Error::validation("dll_train needs method = dll"));
    }
    train(ds, config)
}

pub fn dc3_train(ds: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    if config.method != Method::Dc3 {
        return Err(Error::validation("dc3_train needs method = dc3"));
    }
    train(ds, config)
}

/// Mini-batch Adam with the patience schedule; calls `on_epoch` after every
/// epoch.
pub fn train_with(ds: &Dataset, config: &TrainConfig, mut on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainOutcome> {
    config.validate()?;
    if ds.family != config.family {
        return Err(Error::validation(format!(
            "config is for {} but the dataset holds {}",
            config.family, ds.family
        )));
    }
    let train_set: Vec<&Instance> = ds.require_split(Split::Train)?.into_iter().map(|r| &r.instance).collect();
    let val_set: Vec<&Instance> = ds
        .require_split(Split::Validation)?
        .into_iter()
        .map(|r| &r.instance)
        .collect();
    let (m, n) = ds.dims();

    let feats: Vec<Vec<f64>> = train_set.iter().map(|i| i.features()).collect();
    let norm = Normalizer::fit(feats.iter().map(|f| f.as_slice()))?;
    let train_x = normalized_features(&norm, &train_set)?;
    let d_in = norm.dim();

    let mut net = build_network(config, d_in, output_dim(config.method, train_set[0]))?;
    let mut adam = AdamState::new(net.params().len());
    let mut sched = LrSchedule::new(config.lr, config.patience, config.max_epochs);
    sched.warmup = config.warmup;

    let mut best_params = net.params().to_vec();
    let mut best_epoch = 0;
    let mut best_val = mean_loss(config, &net, &norm, &val_set)?;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut xb = Vec::new();
    let mut batch: Vec<&Instance> = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.max_epochs {
        let mut rng = SplitMix64::for_field(config.seed, epoch as u64, TAG_SHUFFLE);
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            xb.clear();
            batch.clear();
            for &i in idx {
                xb.extend_from_slice(&train_x[i * d_in..(i + 1) * d_in]);
                batch.push(train_set[i]);
            }
            let (loss, grads) = batch_loss_and_grad_features(config, &net, &xb, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: b,
                    reason: format!("loss is {loss}"),
                });
            }
            loss_sum += loss * idx.len() as f64;
            adam_step(net.params_mut(), &grads.params, &mut adam, sched.lr, epoch, b)?;
        }
        let val_loss = mean_loss(config, &net, &norm, &val_set)?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: 0,
                reason: format!("validation loss is {val_loss}"),
            });
        }
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
            lr: sched.lr,
        };
        on_epoch(&rec);
        history.push(rec);
        let (_, stop) = sched.update(val_loss, epoch);
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(net.params());
        }
        if stop {
            break;
        }
    }
    net.params_mut().copy_from_slice(&best_params);
    Ok(TrainOutcome {
        model: TrainedModel::new(config, m, n, norm, &net),
        history,
        best_epoch,
        best_val_loss: best_val,
    })
}

/// Multipliers `ŷ ≤ 0` predicted for each instance. DC3 outputs are
/// corrected and then clamped with `min(y, 0)`.
pub fn predict_y(model: &TrainedModel, instances: &[&Instance]) -> Result<Vec<Vec<f64>>> {
    let net = model.mlp()?;
    let k = net.output_dim();
    let s = model.config.output_scale;
    let mut ys = Vec::with_capacity(instances.len());
    for chunk in instances.chunks(INFER_CHUNK) {
        for inst in chunk {
            model.check_instance(inst)?;
        }
        let x = normalized_features(&model.normalizer, chunk)?;
        let out = net.predict(&x, chunk.len())?;
        for (i, inst) in chunk.iter().enumerate() {
            let v: Vec<f64> = out[i * k..(i + 1) * k].iter().map(|h| s * h).collect();
            ys.push(match model.method {
                Method::Dll => v[..inst.dims().0].to_vec(),
                Method::Dc3 => {
                    let d = &model.config.dc3;
                    dc3::repaired_y(inst, &v, d.correction_steps, d.correction_rate)
                }
            });
        }
    }
    Ok(ys)
}

pub fn dll_infer(model: &TrainedModel, inst: &Instance) -> Result<DualSolution> {
    if model.method != Method::Dll {
        return Err(Error::validation("dll_infer needs a DLL model"));
    }
    let y = predict_y(model, &[inst])?.remove(0);
    complete_from_y(inst, &y)
}

/// DC3 prediction repaired through the optimal completion.
pub fn dc3_infer(model: &TrainedModel, inst: &Instance) -> Result<DualSolution> {
    if model.method != Method::Dc3 {
        return Err(Error::validation("dc3_infer needs a DC3 model"));
    }
    let y = predict_y(model, &[inst])?.remove(0);
    complete_from_y(inst, &y)
}
