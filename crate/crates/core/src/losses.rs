//! The fine-tuning objective: cross-entropy on adversarial inputs, a KL
//! branch anchoring the model to its frozen pre-trained copy, an
//! adversarial-vs-clean KL regularizer, the ablation distance metrics,
//! and the entropy-decomposition identity check.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{kernels, NodeId, Operand, Tape};
use crate::mat::{ImageBatch, Mat};
use crate::scalar::Scalar;
use crate::zeroshot::{
    BoundParams, OneHotLabels, ProbabilityMatrix, TextEmbeddingMatrix, TwoTowerModel,
};

/// Floor applied inside every log; keeps KL defined when a probability
/// underflows and bounds all gradients by `1/floor`.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;

/// Which activations feed the generalization branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralLayer {
    Output,
    Penultimate,
}

/// Distance used by the generalization branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralMetric {
    Kl,
    L2,
    Cosine,
}

/// Objective weights and generalization-branch configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Weight on the generalization branch.
    pub alpha: f64,
    /// Weight on the adversarial-vs-clean regularizer.
    pub beta: f64,
    pub general_layer: GeneralLayer,
    pub general_metric: GeneralMetric,
    pub prob_floor: f64,
    /// Stops gradient flow through the clean branch when set; default off
    /// (gradients flow through both arguments of the regularizer).
    #[serde(default)]
    pub detach_clean: bool,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            alpha: 1.0,
            beta: 1.0,
            general_layer: GeneralLayer::Output,
            general_metric: GeneralMetric::Kl,
            prob_floor: DEFAULT_PROB_FLOOR,
            detach_clean: false,
        }
    }
}

impl LossSpec {
    /// The baseline objective: cross-entropy on adversarial inputs only.
    pub fn tecoa() -> Self {
        LossSpec { alpha: 0.0, beta: 0.0, ..LossSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1.0) {
            return Err(Error::config(format!(
                "prob floor must be in (0, 1), got {}",
                self.prob_floor
            )));
        }
        // Output distributions take KL or L2; feature activations take L2
        // or cosine. The remaining pairings are rejected.
        match (self.general_layer, self.general_metric) {
            (GeneralLayer::Output, GeneralMetric::Cosine) => Err(Error::config(
                "cosine distance is not used at the output layer",
            )),
            (GeneralLayer::Penultimate, GeneralMetric::Kl) => Err(Error::config(
                "KL divergence is not defined on raw feature activations",
            )),
            _ => Ok(()),
        }
    }
}

/// Per-term values of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<S> {
    pub robust: S,
    pub general: S,
    pub clean: S,
    pub total: S,
}

impl<S: Scalar> LossBreakdown<S> {
    /// Checks `total = robust + α·general + β·clean` to 1e-9.
    pub fn check(&self, spec: &LossSpec) -> Result<()> {
        let expect = self.robust + S::of(spec.alpha) * self.general + S::of(spec.beta) * self.clean;
        if (self.total - expect).abs() > S::of(1e-9) {
            return Err(Error::validation(format!(
                "loss breakdown violated: total {} vs recomposed {}",
                self.total, expect
            )));
        }
        Ok(())
    }

    pub fn as_f64(&self) -> LossBreakdown<f64> {
        LossBreakdown {
            robust: self.robust.as_f64(),
            general: self.general.as_f64(),
            clean: self.clean.as_f64(),
            total: self.total.as_f64(),
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar loss functions on probability matrices
// ---------------------------------------------------------------------------

/// Batch-mean negative log-likelihood of the true class.
pub fn cross_entropy<S: Scalar>(
    p: &ProbabilityMatrix<S>,
    y: &OneHotLabels<S>,
    prob_floor: f64,
) -> Result<S> {
    if p.matrix().shape() != y.matrix().shape() {
        return Err(Error::shape("probabilities and labels differ in shape"));
    }
    Ok(kernels::cross_entropy(p.matrix(), y.matrix(), S::of(prob_floor)))
}

/// Batch-mean KL divergence `(1/N) Σ KL(Pᵢ ‖ Qᵢ)`, both sides floored.
pub fn kl_divergence<S: Scalar>(
    p: &ProbabilityMatrix<S>,
    q: &ProbabilityMatrix<S>,
    prob_floor: f64,
) -> Result<S> {
    if p.matrix().shape() != q.matrix().shape() {
        return Err(Error::shape("KL operands differ in shape"));
    }
    Ok(kernels::kl_mean(p.matrix(), q.matrix(), S::of(prob_floor)))
}

/// Generalization term: KL from the target model's adversarial output to
/// the frozen pre-trained model's output on the same inputs. The right
/// argument is a fixed reference; no gradients flow into it.
pub fn general_loss<S: Scalar>(
    p_adv: &ProbabilityMatrix<S>,
    p_ori_adv: &ProbabilityMatrix<S>,
    prob_floor: f64,
) -> Result<S> {
    kl_divergence(p_adv, p_ori_adv, prob_floor)
}

/// Regularizer: KL between the target model's adversarial and clean
/// output distributions on the same batch.
pub fn clean_loss<S: Scalar>(
    p_adv: &ProbabilityMatrix<S>,
    p_clean: &ProbabilityMatrix<S>,
    prob_floor: f64,
) -> Result<S> {
    kl_divergence(p_adv, p_clean, prob_floor)
}

/// Batch-mean per-row distance between feature matrices.
pub fn feature_distance<S: Scalar>(a: &Mat<S>, b: &Mat<S>, metric: GeneralMetric) -> Result<S> {
    if a.shape() != b.shape() {
        return Err(Error::shape("feature matrices differ in shape"));
    }
    match metric {
        GeneralMetric::L2 => Ok(kernels::l2_rows_mean(a, b)),
        GeneralMetric::Cosine => kernels::cosine_rows_mean(a, b),
        GeneralMetric::Kl => Err(Error::config(
            "KL divergence is not a feature distance; use it at the output layer",
        )),
    }
}

/// Cross-entropy of the model's predictions on adversarial inputs.
pub fn robust_loss<S: Scalar>(
    model: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    x_adv: &ImageBatch<S>,
    y: &OneHotLabels<S>,
    prob_floor: f64,
) -> Result<S> {
    let probs = model.predict(x_adv, text)?;
    cross_entropy(&probs, y, prob_floor)
}

/// Batch-mean entropy `-(1/N) ΣΣ P ln P⌊` with the shared flooring.
pub fn entropy<S: Scalar>(p: &ProbabilityMatrix<S>, prob_floor: f64) -> S {
    kernels::entropy_mean(p.matrix(), S::of(prob_floor))
}

/// Batch-mean cross-entropy between distributions `-(1/N) ΣΣ P ln Q⌊`.
pub fn cross_entropy_between<S: Scalar>(
    p: &ProbabilityMatrix<S>,
    q: &ProbabilityMatrix<S>,
    prob_floor: f64,
) -> Result<S> {
    if p.matrix().shape() != q.matrix().shape() {
        return Err(Error::shape("cross-entropy operands differ in shape"));
    }
    Ok(kernels::cross_entropy_between(p.matrix(), q.matrix(), S::of(prob_floor)))
}

/// Residual of the entropy decomposition
/// `CE(Y,P) + KL(P ‖ Q)  =  −H(P) + H(P,Q) + H(Y,P)`,
/// evaluated with one shared probability floor on both sides.
pub fn decomposition_residual<S: Scalar>(
    p_adv: &ProbabilityMatrix<S>,
    p_ori_adv: &ProbabilityMatrix<S>,
    y: &OneHotLabels<S>,
    prob_floor: f64,
) -> Result<S> {
    let lhs = cross_entropy(p_adv, y, prob_floor)? + kl_divergence(p_adv, p_ori_adv, prob_floor)?;
    let rhs = -entropy(p_adv, prob_floor)
        + cross_entropy_between(p_adv, p_ori_adv, prob_floor)?
        + cross_entropy(p_adv, y, prob_floor)?;
    Ok((lhs - rhs).abs())
}

// ---------------------------------------------------------------------------
// Differentiable objective
// ---------------------------------------------------------------------------

/// A built objective graph, ready for backward.
pub struct ObjectiveGraph<S: Scalar> {
    pub tape: Tape<S>,
    pub bound: BoundParams,
    pub breakdown: LossBreakdown<S>,
    pub total: NodeId,
    /// Target-model class probabilities on the (adversarial) inputs.
    pub p_adv: NodeId,
}

impl<S: Scalar> ObjectiveGraph<S> {
    /// Runs backward and returns the named parameter gradients, in the
    /// model's canonical trainable order.
    pub fn parameter_gradients(mut self) -> Result<Vec<(String, Mat<S>)>> {
        self.tape.backward(self.total)?;
        Ok(self
            .bound
            .nodes()
            .iter()
            .map(|(name, id)| (name.clone(), self.tape.grad_or_zeros(*id)))
            .collect())
    }
}

/// Builds the full objective on a tape:
///
/// * robust term — cross-entropy of the target model on `x_adv`;
/// * generalization term (weight α) — distance between the target and the
///   frozen pre-trained model on the same `x_adv`, at the configured layer
///   and metric; the pre-trained side enters as a constant;
/// * clean term (weight β) — KL between the target's adversarial and clean
///   outputs, gradients through both unless `detach_clean`.
///
/// Zero-weight branches are skipped entirely, so the α = β = 0 objective
/// is bit-identical to the plain robust loss.
pub fn objective_graph<S: Scalar>(
    model: &TwoTowerModel<S>,
    pretrained: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    x: &ImageBatch<S>,
    x_adv: &ImageBatch<S>,
    y: &OneHotLabels<S>,
    spec: &LossSpec,
) -> Result<ObjectiveGraph<S>> {
    spec.validate()?;
    if x.len() != x_adv.len() || x.len() != y.len() {
        return Err(Error::shape(format!(
            "batch sizes differ: {} clean, {} adversarial, {} labels",
            x.len(),
            x_adv.len(),
            y.len()
        )));
    }
    let floor = S::of(spec.prob_floor);
    let labels = Arc::new(y.matrix().clone());

    let mut tape = Tape::new();
    let bound = model.bind_trainable(&mut tape);
    let fwd_adv = model.forward_on_tape(
        &mut tape,
        Operand::constant(x_adv.pixels().clone()),
        Some(&bound),
    )?;
    let sim_adv = tape.matmul_nt(fwd_adv.embeddings, Operand::constant(text.matrix().clone()))?;
    let p_adv = tape.softmax_rows(sim_adv, model.logit_scale());
    let robust = tape.ce_onehot(p_adv, labels, floor)?;

    let mut terms: Vec<(NodeId, S)> = vec![(robust, S::one())];
    let mut general_value = S::zero();
    let mut clean_value = S::zero();

    if spec.alpha > 0.0 {
        let general = match spec.general_layer {
            GeneralLayer::Output => {
                let q = pretrained.predict(x_adv, text)?;
                match spec.general_metric {
                    GeneralMetric::Kl => {
                        tape.kl_mean(p_adv, Operand::constant(q.matrix().clone()), floor)?
                    }
                    GeneralMetric::L2 => {
                        tape.l2_rows_mean(p_adv, Operand::constant(q.matrix().clone()))?
                    }
                    GeneralMetric::Cosine => unreachable!("rejected by validate"),
                }
            }
            GeneralLayer::Penultimate => {
                let feat = fwd_adv.penultimate.ok_or_else(|| {
                    Error::UnsupportedTap(
                        "generalization at the penultimate layer needs a feature tap".into(),
                    )
                })?;
                let ref_feat = pretrained.eval_penultimate(x_adv)?;
                match spec.general_metric {
                    GeneralMetric::L2 => {
                        tape.l2_rows_mean(feat, Operand::constant(ref_feat))?
                    }
                    GeneralMetric::Cosine => {
                        tape.cosine_rows_mean(feat, Operand::constant(ref_feat))?
                    }
                    GeneralMetric::Kl => unreachable!("rejected by validate"),
                }
            }
        };
        general_value = tape.value(general)[(0, 0)];
        terms.push((general, S::of(spec.alpha)));
    }

    if spec.beta > 0.0 {
        let fwd_clean = model.forward_on_tape(
            &mut tape,
            Operand::constant(x.pixels().clone()),
            Some(&bound),
        )?;
        let sim_clean =
            tape.matmul_nt(fwd_clean.embeddings, Operand::constant(text.matrix().clone()))?;
        let p_clean = tape.softmax_rows(sim_clean, model.logit_scale());
        let clean = if spec.detach_clean {
            let detached = tape.value(p_clean).clone();
            tape.kl_mean(p_adv, Operand::constant(detached), floor)?
        } else {
            tape.kl_mean(p_adv, p_clean, floor)?
        };
        clean_value = tape.value(clean)[(0, 0)];
        terms.push((clean, S::of(spec.beta)));
    }

    let total = tape.weighted_sum(&terms);
    let breakdown = LossBreakdown {
        robust: tape.value(robust)[(0, 0)],
        general: general_value,
        clean: clean_value,
        total: tape.value(total)[(0, 0)],
    };
    Ok(ObjectiveGraph { tape, bound, breakdown, total, p_adv })
}

/// Evaluates the objective without keeping the graph.
pub fn total_loss<S: Scalar>(
    model: &TwoTowerModel<S>,
    pretrained: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    x: &ImageBatch<S>,
    x_adv: &ImageBatch<S>,
    y: &OneHotLabels<S>,
    spec: &LossSpec,
) -> Result<LossBreakdown<S>> {
    Ok(objective_graph(model, pretrained, text, x, x_adv, y, spec)?.breakdown)
}

/// Evaluates the objective and its gradients w.r.t. trainable parameters.
pub fn total_loss_param_grads<S: Scalar>(
    model: &TwoTowerModel<S>,
    pretrained: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    x: &ImageBatch<S>,
    x_adv: &ImageBatch<S>,
    y: &OneHotLabels<S>,
    spec: &LossSpec,
) -> Result<(LossBreakdown<S>, Vec<(String, Mat<S>)>)> {
    let graph = objective_graph(model, pretrained, text, x, x_adv, y, spec)?;
    let breakdown = graph.breakdown;
    let grads = graph.parameter_gradients()?;
    Ok((breakdown, grads))
}

/// Gradients of the plain robust loss w.r.t. trainable parameters.
pub fn robust_loss_param_grads<S: Scalar>(
    model: &TwoTowerModel<S>,
    text: &TextEmbeddingMatrix<S>,
    x_adv: &ImageBatch<S>,
    y: &OneHotLabels<S>,
    prob_floor: f64,
) -> Result<(S, Vec<(String, Mat<S>)>)> {
    let spec = LossSpec { prob_floor, ..LossSpec::tecoa() };
    let graph = objective_graph(model, model, text, x_adv, x_adv, y, &spec)?;
    let value = graph.breakdown.robust;
    let grads = graph.parameter_gradients()?;
    Ok((value, grads))
}
