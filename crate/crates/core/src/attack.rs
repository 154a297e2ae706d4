//! L∞-bounded PGD adversarial examples against the text-supervised
//! cross-entropy loss, plus projection/initialization primitives and the
//! attack plug-in interface used by the evaluation harness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Operand, Tape};
use crate::mat::{ImageBatch, Mat};
use crate::scalar::Scalar;
use crate::seeding::SeedStream;
use crate::zeroshot::{OneHotLabels, TextEmbeddingMatrix, TwoTowerModel};

/// Probability floor used inside the attack's cross-entropy objective.
const ATTACK_PROB_FLOOR: f64 = 1e-12;

/// How perturbations are initialized before the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Start exactly at the clean input.
    Zero,
    /// Elementwise uniform on `[-ε, ε]` (standard PGD).
    UniformSymmetric,
    /// Elementwise uniform on `[0, ε]`.
    UniformNonneg,
}

/// Whether steps follow the gradient sign or the raw gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Sign,
    Raw,
}

/// PGD configuration: radius, step schedule, init and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// L∞ radius in pixel units (e.g. 1/255).
    pub epsilon: f64,
    /// Per-step magnitude in pixel units.
    pub step_size: f64,
    /// Number of gradient steps.
    pub steps: usize,
    pub init_mode: InitMode,
    /// Valid pixel interval `[lo, hi]`.
    pub pixel_bounds: (f64, f64),
    pub seed: u64,
    pub step_rule: StepRule,
}

impl AttackConfig {
    /// Standard signed-gradient PGD with symmetric init and the common
    /// `2.5 ε / K` step size.
    pub fn pgd(epsilon: f64, steps: usize, seed: u64) -> Self {
        let step_size = if steps > 0 { 2.5 * epsilon / steps as f64 } else { epsilon };
        AttackConfig {
            epsilon,
            step_size,
            steps,
            init_mode: InitMode::UniformSymmetric,
            pixel_bounds: (0.0, 1.0),
            seed,
            step_rule: StepRule::Sign,
        }
    }

    /// Training default: PGD-2.
    pub fn train_default(epsilon: f64, seed: u64) -> Self {
        Self::pgd(epsilon, 2, seed)
    }

    /// Evaluation default: PGD-10 at ε = 1/255.
    pub fn eval_default(seed: u64) -> Self {
        Self::pgd(1.0 / 255.0, 10, seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::config(format!(
                "step size must be >= 0, got {}",
                self.step_size
            )));
        }
        if !(self.pixel_bounds.0 < self.pixel_bounds.1) {
            return Err(Error::config(format!(
                "pixel bounds ({}, {}) must be an interval",
                self.pixel_bounds.0, self.pixel_bounds.1
            )));
        }
        if self.steps > 0 && self.step_size == 0.0 {
            log::warn!("degenerate attack config: {} steps with step size 0", self.steps);
        }
        Ok(())
    }
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self::eval_default(0)
    }
}

/// Adversarial batch together with its originals and the config used.
#[derive(Debug, Clone)]
pub struct PerturbedBatch<S> {
    pub adversarial: ImageBatch<S>,
    pub original: ImageBatch<S>,
    pub config: AttackConfig,
}

impl<S: Scalar> PerturbedBatch<S> {
    /// Checks the containment invariants: `‖X_a − X‖∞ ≤ ε + 1e-7` and
    /// pixel bounds.
    pub fn validate(&self) -> Result<()> {
        let eps = S::of(self.config.epsilon + 1e-7);
        let lo = S::of(self.config.pixel_bounds.0);
        let hi = S::of(self.config.pixel_bounds.1);
        let adv = self.adversarial.pixels();
        let orig = self.original.pixels();
        if adv.shape() != orig.shape() {
            return Err(Error::shape("adversarial and original batches differ in shape"));
        }
        for (i, (&a, &o)) in adv.as_slice().iter().zip(orig.as_slice()).enumerate() {
            if (a - o).abs() > eps {
                return Err(Error::validation(format!(
                    "perturbation {} exceeds epsilon at element {i}",
                    (a - o).abs()
                )));
            }
            if a < lo || a > hi {
                return Err(Error::validation(format!(
                    "adversarial pixel {a} outside bounds at element {i}"
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute perturbation.
    pub fn linf_norm(&self) -> S {
        self.adversarial
            .pixels()
            .as_slice()
            .iter()
            .zip(self.original.pixels().as_slice())
            .map(|(&a, &o)| (a - o).abs())
            .fold(S::zero(), |acc, v| if v > acc { v } else { acc })
    }
}

/// Clamps `x_adv` into the L∞ ball around `x` intersected with pixel bounds.
pub fn project_linf<S: Scalar>(
    x_adv: &ImageBatch<S>,
    x: &ImageBatch<S>,
    epsilon: f64,
    pixel_bounds: (f64, f64),
) -> Result<ImageBatch<S>> {
    if x_adv.pixels().shape() != x.pixels().shape() || x_adv.shape() != x.shape() {
        return Err(Error::shape("projection operands differ in shape"));
    }
    let eps = S::of(epsilon);
    let lo = S::of(pixel_bounds.0);
    let hi = S::of(pixel_bounds.1);
    let mut out = x_adv.pixels().clone();
    for (o, &center) in out.as_mut_slice().iter_mut().zip(x.pixels().as_slice()) {
        let lo_i = {
            let l = center - eps;
            if l > lo { l } else { lo }
        };
        let hi_i = {
            let h = center + eps;
            if h < hi { h } else { hi }
        };
        if *o < lo_i {
            *o = lo_i;
        } else if *o > hi_i {
            *o = hi_i;
        }
    }
    ImageBatch::new(x.shape(), out)
}

/// Gradient of the text-supervised cross-entropy w.r.t. the input pixels.
///
/// Model parameters enter as constants, so the attack cannot touch them.
fn input_gradient<S: Scalar>(
    model: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    images: &ImageBatch<S>,
    labels: &OneHotLabels<S>,
) -> Result<Mat<S>> {
    let mut tape = Tape::new();
    let x = tape.leaf(images.pixels().clone());
    let fwd = model.forward_on_tape(&mut tape, Operand::Node(x), None)?;
    let sim = tape.matmul_nt(fwd.embeddings, Operand::constant(text.matrix().clone()))?;
    let probs = tape.softmax_rows(sim, model.logit_scale());
    let loss = tape.ce_onehot(
        probs,
        Arc::new(labels.matrix().clone()),
        S::of(ATTACK_PROB_FLOOR),
    )?;
    tape.backward(loss)?;
    Ok(tape.grad_or_zeros(x))
}

/// Multi-step signed-gradient ascent on the cross-entropy of the inner
/// problem, projected into the ε-ball after every step.
///
/// The maximized loss is always the plain text-supervised cross-entropy,
/// never the full fine-tuning objective.
pub fn pgd_attack<S: Scalar>(
    model: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    images: &ImageBatch<S>,
    labels: &OneHotLabels<S>,
    cfg: &AttackConfig,
) -> Result<PerturbedBatch<S>> {
    cfg.validate()?;
    if labels.len() != images.len() {
        return Err(Error::shape(format!(
            "{} labels for {} images",
            labels.len(),
            images.len()
        )));
    }
    if labels.matrix().cols() != text.num_classes() {
        return Err(Error::shape("label width does not match class count"));
    }

    let mut rng = SeedStream::new(cfg.seed).with_label("pgd_init").rng();
    let mut current = images.pixels().clone();
    if cfg.epsilon > 0.0 {
        use rand::Rng;
        match cfg.init_mode {
            InitMode::Zero => {}
            InitMode::UniformSymmetric => {
                for v in current.as_mut_slice() {
                    *v += S::of(rng.gen_range(-cfg.epsilon..cfg.epsilon));
                }
            }
            InitMode::UniformNonneg => {
                for v in current.as_mut_slice() {
                    *v += S::of(rng.gen_range(0.0..cfg.epsilon));
                }
            }
        }
    }
    let mut adv = project_linf(
        &ImageBatch::new(images.shape(), current)?,
        images,
        cfg.epsilon,
        cfg.pixel_bounds,
    )?;

    let step = S::of(cfg.step_size);
    for _ in 0..cfg.steps {
        let grad = input_gradient(model, text, &adv, labels)?;
        if let Some(row) = grad.first_non_finite_row() {
            return Err(Error::AttackFailure {
                batch_index: row,
                reason: "non-finite input gradient".into(),
            });
        }
        let mut next = adv.pixels().clone();
        match cfg.step_rule {
            StepRule::Sign => {
                for (v, &g) in next.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                    *v += step * g.sign();
                }
            }
            StepRule::Raw => {
                for (v, &g) in next.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                    *v += step * g;
                }
            }
        }
        adv = project_linf(
            &ImageBatch::new(images.shape(), next)?,
            images,
            cfg.epsilon,
            cfg.pixel_bounds,
        )?;
    }

    Ok(PerturbedBatch {
        adversarial: adv,
        original: images.clone(),
        config: cfg.clone(),
    })
}

/// Attack plug-in interface: anything that perturbs a batch white-box
/// against the given model may substitute for PGD in evaluation (e.g. an
/// external AutoAttack binding).
pub trait Attack<S: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Runs the attack with an externally derived seed (evaluation seeds
    /// come from the run seed, dataset id and batch index).
    fn attack(
        &self,
        model: &TwoTowerModel<S>,
        text: &TextEmbeddingMatrix<S>,
        images: &ImageBatch<S>,
        labels: &OneHotLabels<S>,
        seed: u64,
    ) -> Result<PerturbedBatch<S>>;

    /// Serializable description for reports.
    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({ "name": self.name() })
    }
}

/// The in-repo PGD attack as a plug-in.
#[derive(Debug, Clone)]
pub struct PgdAttack(pub AttackConfig);

impl<S: Scalar> Attack<S> for PgdAttack {
    fn name(&self) -> &str {
        "pgd"
    }

    fn attack(
        &self,
        model: &TwoTowerModel<S>,
        text: &TextEmbeddingMatrix<S>,
        images: &ImageBatch<S>,
        labels: &OneHotLabels<S>,
        seed: u64,
    ) -> Result<PerturbedBatch<S>> {
        let cfg = self.0.clone().with_seed(seed);
        pgd_attack(model, text, images, labels, &cfg)
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({ "name": "pgd", "config": self.0 })
    }
}
