//! Adversarial fine-tuning loop: alternate adversarial-example generation
//! with SGD updates under the chosen objective, for full-encoder
//! fine-tuning or visual-prompt adaptation.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attack::{pgd_attack, AttackConfig};
use crate::datasets::TensorDataset;
use crate::error::{Error, Result};
use crate::evalsuite::relative_drift;
use crate::losses::{objective_graph, LossSpec};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::snapshot::ParameterSnapshot;
use crate::zeroshot::{
    build_text_matrix, classify, encode_images, EmbeddingBatch, OneHotLabels, ProbabilityMatrix,
    TwoTowerModel,
};

pub use crate::zeroshot::{AdaptationMode, VisualPrompt};

/// Fine-tuning objective variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Robust term plus pre-trained-model anchor plus clean regularizer.
    PmgAft,
    /// Robust term only (the α = β = 0 reduction).
    FtTecoa,
    /// Plain cross-entropy on clean inputs; ignores the attack config.
    FtStandard,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PmgAft => "pmg_aft",
            Method::FtTecoa => "ft_tecoa",
            Method::FtStandard => "ft_standard",
        }
    }
}

/// Available optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
}

/// Full training-run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub adaptation: AdaptationMode,
    pub epochs: usize,
    pub learning_rate: f64,
    /// SGD momentum; plain SGD by default.
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    pub attack: AttackConfig,
    pub loss: LossSpec,
    pub seed: u64,
    /// Snapshot every n epochs (0 = final snapshot only).
    #[serde(default)]
    pub snapshot_every: usize,
    /// In-memory snapshot cap; later snapshots spill to `snapshot_dir`.
    #[serde(default = "default_snapshot_cap")]
    pub snapshot_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_dir: Option<PathBuf>,
}

fn default_snapshot_cap() -> usize {
    64
}

impl TrainConfig {
    pub fn new(method: Method, epochs: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            method,
            adaptation: AdaptationMode::FullFinetune,
            epochs,
            learning_rate,
            momentum: 0.0,
            optimizer: OptimizerKind::Sgd,
            batch_size: 128,
            attack: AttackConfig::train_default(1.0 / 255.0, seed),
            loss: LossSpec::default(),
            seed,
            snapshot_every: 0,
            snapshot_cap: default_snapshot_cap(),
            snapshot_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        // The zero learning rate is allowed as the documented no-update
        // limit; only negative rates are rejected.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(Error::config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        self.attack.validate()?;
        self.loss.validate()?;
        Ok(())
    }

    /// The loss weights the method actually trains with.
    fn effective_loss(&self) -> LossSpec {
        match self.method {
            Method::PmgAft => self.loss.clone(),
            Method::FtTecoa | Method::FtStandard => LossSpec {
                alpha: 0.0,
                beta: 0.0,
                ..self.loss.clone()
            },
        }
    }
}

/// Batch-mean loss terms as plain numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LossMeans {
    pub robust: f64,
    pub general: f64,
    pub clean: f64,
    pub total: f64,
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossMeans,
    /// Accuracy on the inputs the update step saw (adversarial for the
    /// adversarial methods, clean for ft_standard).
    pub train_robust_accuracy: f64,
    pub relative_drift: f64,
    pub wall_time_s: f64,
}

impl EpochRecord {
    /// Equality up to the wall-clock field.
    pub fn equivalent(&self, other: &Self) -> bool {
        self.epoch == other.epoch
            && self.loss == other.loss
            && self.train_robust_accuracy == other.train_robust_accuracy
            && self.relative_drift == other.relative_drift
    }
}

/// Everything a training run produced besides the updated model.
#[derive(Debug, Clone)]
pub struct TrainHistory<S> {
    pub records: Vec<EpochRecord>,
    pub snapshots: Vec<ParameterSnapshot<S>>,
    /// Snapshots that exceeded the in-memory cap and were written out.
    pub spilled_snapshots: Vec<PathBuf>,
}

impl<S: Scalar> TrainHistory<S> {
    /// The final parameter snapshot (always recorded).
    pub fn final_snapshot(&self) -> &ParameterSnapshot<S> {
        self.snapshots.last().expect("training always records a final snapshot")
    }

    /// The initial parameter snapshot (always recorded).
    pub fn initial_snapshot(&self) -> &ParameterSnapshot<S> {
        self.snapshots.first().expect("training always records an initial snapshot")
    }

    /// Record-level equality ignoring wall time.
    pub fn equivalent_records(&self, other: &Self) -> bool {
        self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.equivalent(b))
    }
}

/// Observation points for instrumentation tests.
pub trait TrainHooks {
    /// Called right before adversarial generation for a batch, with the
    /// current trainable checksum and the name of the inner loss.
    fn on_attack(&mut self, _epoch: usize, _batch: usize, _params_checksum: u64, _inner_loss: &str) {
    }

    /// Called right after the parameter update for a batch.
    fn on_update(&mut self, _epoch: usize, _batch: usize, _params_checksum: u64) {}
}

struct NoHooks;
impl TrainHooks for NoHooks {}

struct Sgd<S> {
    lr: S,
    momentum: S,
    velocity: Vec<Mat<S>>,
}

impl<S: Scalar> Sgd<S> {
    fn new(lr: f64, momentum: f64) -> Self {
        Sgd { lr: S::of(lr), momentum: S::of(momentum), velocity: Vec::new() }
    }

    fn step(&mut self, model: &mut TwoTowerModel<S>, grads: &[(String, Mat<S>)]) {
        if self.momentum > S::zero() && self.velocity.is_empty() {
            self.velocity = grads
                .iter()
                .map(|(_, g)| Mat::zeros(g.rows(), g.cols()))
                .collect();
        }
        let mut idx = 0usize;
        let lr = self.lr;
        let momentum = self.momentum;
        let velocity = &mut self.velocity;
        model.update_trainable(&mut |name: &str, values: &mut [S]| {
            let (gname, grad) = &grads[idx];
            debug_assert_eq!(gname, name);
            if momentum > S::zero() {
                let v = &mut velocity[idx];
                for (vi, &gi) in v.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                    *vi = momentum * *vi + gi;
                }
                for (p, &vi) in values.iter_mut().zip(v.as_slice()) {
                    *p = *p - lr * vi;
                }
            } else {
                for (p, &gi) in values.iter_mut().zip(grad.as_slice()) {
                    *p = *p - lr * gi;
                }
            }
            idx += 1;
        });
        debug_assert_eq!(idx, grads.len());
    }
}

/// Copies all trainable parameters into an independent snapshot.
pub fn snapshot_parameters<S: Scalar>(model: &TwoTowerModel<S>) -> ParameterSnapshot<S> {
    ParameterSnapshot::new("snapshot", model.trainable_segments())
}

/// Runs the prompted forward pass: images shifted by the image prompt,
/// clamped to pixel bounds, then encoded by the (frozen) backbone.
pub fn apply_visual_prompt<S: Scalar>(
    model: &TwoTowerModel<S>,
    prompt: &VisualPrompt<S>,
    images: &crate::mat::ImageBatch<S>,
) -> Result<EmbeddingBatch<S>> {
    let mut prompted = model.clone();
    prompted.set_visual_prompt(prompt.clone())?;
    encode_images(&prompted, images)
}

/// Adversarially fine-tunes `model` against `pretrained`, its frozen
/// initial copy. See [`finetune_with_hooks`] for the instrumented variant.
pub fn finetune<S: Scalar>(
    model: &mut TwoTowerModel<S>,
    pretrained: &TwoTowerModel<S>,
    dataset: &TensorDataset<S>,
    cfg: &TrainConfig,
) -> Result<TrainHistory<S>> {
    finetune_with_hooks(model, pretrained, dataset, cfg, &mut NoHooks)
}

/// The training loop. Per batch: generate adversarial examples against
/// the text-supervised cross-entropy (the inner problem — never the full
/// objective), evaluate the method's objective, then take one SGD step on
/// the trainable parameters. The text matrix is built once up front; the
/// text tower and the pre-trained copy are never touched.
pub fn finetune_with_hooks<S: Scalar>(
    model: &mut TwoTowerModel<S>,
    pretrained: &TwoTowerModel<S>,
    dataset: &TensorDataset<S>,
    cfg: &TrainConfig,
    hooks: &mut dyn TrainHooks,
) -> Result<TrainHistory<S>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::validation("training dataset is empty"));
    }
    if model.backbone_checksum() != pretrained.backbone_checksum()
        || model.text_checksum() != pretrained.text_checksum()
    {
        return Err(Error::validation(
            "pretrained must be a deep frozen copy of the model's initial state",
        ));
    }

    if cfg.adaptation == AdaptationMode::VisualPrompt
        && model.adaptation() != AdaptationMode::VisualPrompt
    {
        let token_width = model.image_encoder().token_width();
        if token_width.is_none() {
            log::info!("visual prompt degrades to image-level only (encoder has no token layer)");
        }
        let prompt = VisualPrompt::zeros(model.input_shape(), token_width);
        model.set_visual_prompt(prompt)?;
    }

    let text = build_text_matrix(model, &dataset.class_names)?;
    let text_checksum_before = model.text_checksum();
    let spec = cfg.effective_loss();
    let mut sgd = Sgd::new(cfg.learning_rate, cfg.momentum);

    let initial = {
        let mut s = snapshot_parameters(model);
        s.set_source_tag("init");
        s
    };
    let mut history = TrainHistory {
        records: Vec::with_capacity(cfg.epochs),
        snapshots: vec![initial.clone()],
        spilled_snapshots: Vec::new(),
    };

    let n = dataset.len();
    let num_classes = dataset.num_classes();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut shuffle_rng = SeedStreamed::shuffle_rng(cfg.seed, epoch);
        let order = crate::seeding::shuffled_indices(&mut shuffle_rng, n);

        let mut sums = LossMeans::default();
        let mut correct = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let images = dataset.images.select(chunk);
            let classes: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i] as usize).collect();
            let labels = OneHotLabels::from_classes(&classes, num_classes)?;

            let adversarial = if cfg.method == Method::FtStandard {
                images.clone()
            } else {
                hooks.on_attack(epoch, batch_idx, model.trainable_checksum(), "cross_entropy");
                let attack_cfg = cfg.attack.clone().with_seed(
                    crate::seeding::SeedStream::new(cfg.seed)
                        .with_label("attack")
                        .with_index(epoch as u64)
                        .with_index(batch_idx as u64)
                        .seed(),
                );
                pgd_attack(model, &text, &images, &labels, &attack_cfg)?.adversarial
            };

            let graph = objective_graph(model, pretrained, &text, &images, &adversarial, &labels, &spec)?;
            let breakdown = graph.breakdown.as_f64();
            if !breakdown.total.is_finite() {
                return Err(Error::TrainAbort {
                    epoch,
                    batch: batch_idx,
                    reason: format!("non-finite loss {}", breakdown.total),
                });
            }

            let preds = classify(&ProbabilityMatrix::new(
                graph.tape.value(graph.p_adv).clone(),
            )?);
            correct += preds
                .iter()
                .zip(&classes)
                .filter(|(p, c)| *p == *c)
                .count();

            let weight = chunk.len() as f64;
            sums.robust += breakdown.robust * weight;
            sums.general += breakdown.general * weight;
            sums.clean += breakdown.clean * weight;
            sums.total += breakdown.total * weight;

            let grads = graph.parameter_gradients()?;
            sgd.step(model, &grads);
            hooks.on_update(epoch, batch_idx, model.trainable_checksum());
        }

        let current = snapshot_parameters(model);
        let drift = if initial_norm_is_zero(&initial) {
            0.0
        } else {
            relative_drift(&current, &initial)?
        };
        history.records.push(EpochRecord {
            epoch,
            loss: LossMeans {
                robust: sums.robust / n as f64,
                general: sums.general / n as f64,
                clean: sums.clean / n as f64,
                total: sums.total / n as f64,
            },
            train_robust_accuracy: correct as f64 / n as f64,
            relative_drift: drift,
            wall_time_s: started.elapsed().as_secs_f64(),
        });

        if cfg.snapshot_every > 0 && (epoch + 1) % cfg.snapshot_every == 0 && epoch + 1 < cfg.epochs
        {
            let mut snap = current;
            snap.set_source_tag(format!("epoch_{}", epoch + 1));
            push_snapshot(&mut history, snap, cfg)?;
        }
    }

    let mut final_snap = snapshot_parameters(model);
    final_snap.set_source_tag("final");
    push_snapshot(&mut history, final_snap, cfg)?;

    debug_assert_eq!(model.text_checksum(), text_checksum_before);
    Ok(history)
}

/// Prompt-mode runs start from an all-zero prompt whose norm is zero, so
/// relative drift is undefined; report zero drift instead of erroring.
fn initial_norm_is_zero<S: Scalar>(snapshot: &ParameterSnapshot<S>) -> bool {
    snapshot.values().all(|v| v == S::zero())
}

fn push_snapshot<S: Scalar>(
    history: &mut TrainHistory<S>,
    snap: ParameterSnapshot<S>,
    cfg: &TrainConfig,
) -> Result<()> {
    if history.snapshots.len() < cfg.snapshot_cap {
        history.snapshots.push(snap);
        return Ok(());
    }
    match &cfg.snapshot_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.pmga", snap.source_tag()));
            crate::checkpoint::save_checkpoint(&path, &snap)?;
            history.spilled_snapshots.push(path);
            Ok(())
        }
        None => {
            // Keep the invariant that the final snapshot is in memory by
            // dropping the oldest intermediate one instead.
            if history.snapshots.len() > 1 {
                history.snapshots.remove(1);
            }
            history.snapshots.push(snap);
            log::warn!("snapshot cap reached without a spill directory; dropped oldest snapshot");
            Ok(())
        }
    }
}

struct SeedStreamed;
impl SeedStreamed {
    fn shuffle_rng(seed: u64, epoch: usize) -> rand_chacha::ChaCha8Rng {
        crate::seeding::SeedStream::new(seed)
            .with_label("shuffle")
            .with_index(epoch as u64)
            .rng()
    }
}
