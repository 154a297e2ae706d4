//! Two-tower zero-shot classifier: trainable image tower, frozen text
//! tower, similarity scores and class probabilities.

use crate::error::{Error, Result};
use crate::graph::kernels;
use crate::graph::{Activation, NodeId, Operand, Tape};
use crate::mat::{ImageBatch, ImageShape, Mat};
use crate::scalar::Scalar;
use crate::seeding::{gaussian_mat, SeedStream};
use crate::snapshot::{checksum_values, ParameterSnapshot, Segment};

/// Default pixel bounds for valid images.
pub const PIXEL_BOUNDS: (f64, f64) = (0.0, 1.0);

/// Default prompt template fed to the text tower.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "This is a photo of a {}";

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// N×dim image embeddings, one row per input image.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch<S> {
    mat: Mat<S>,
}

impl<S: Scalar> EmbeddingBatch<S> {
    pub fn new(mat: Mat<S>) -> Result<Self> {
        if !mat.all_finite() {
            return Err(Error::validation("embedding batch contains non-finite values"));
        }
        Ok(EmbeddingBatch { mat })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn len(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }
}

/// c×dim text embeddings, one row per class, fixed once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbeddingMatrix<S> {
    mat: Mat<S>,
    class_names: Vec<String>,
    prompt_template: String,
}

impl<S: Scalar> TextEmbeddingMatrix<S> {
    pub fn new(mat: Mat<S>, class_names: Vec<String>, prompt_template: String) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::validation("a text matrix needs at least two classes"));
        }
        if mat.rows() != class_names.len() {
            return Err(Error::shape("one text embedding row per class required"));
        }
        Ok(TextEmbeddingMatrix { mat, class_names, prompt_template })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn prompt_template(&self) -> &str {
        &self.prompt_template
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }
}

/// N×c similarity scores `S = I · Tᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<S> {
    mat: Mat<S>,
}

impl<S: Scalar> SimilarityMatrix<S> {
    pub fn from_matrix(mat: Mat<S>) -> Self {
        SimilarityMatrix { mat }
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }
}

/// N×c class probabilities; rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix<S> {
    mat: Mat<S>,
}

impl<S: Scalar> ProbabilityMatrix<S> {
    /// Validates row sums and entry range. Entries may touch 0 or 1 from
    /// rounding; strict positivity is restored by flooring inside the losses.
    pub fn new(mat: Mat<S>) -> Result<Self> {
        let tol = S::of(1e-6);
        for i in 0..mat.rows() {
            let mut sum = S::zero();
            for &v in mat.row(i) {
                if !v.is_finite() || v < S::zero() || v > S::one() {
                    return Err(Error::validation(format!(
                        "probability entry {v} out of range in row {i}"
                    )));
                }
                sum += v;
            }
            if (sum - S::one()).abs() > tol {
                return Err(Error::validation(format!(
                    "probability row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(ProbabilityMatrix { mat })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn len(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.rows() == 0
    }

    pub fn num_classes(&self) -> usize {
        self.mat.cols()
    }
}

/// N×c one-hot ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotLabels<S> {
    mat: Mat<S>,
    classes: Vec<usize>,
}

impl<S: Scalar> OneHotLabels<S> {
    /// Builds from class indices.
    pub fn from_classes(classes: &[usize], num_classes: usize) -> Result<Self> {
        let mut mat = Mat::zeros(classes.len(), num_classes);
        for (i, &c) in classes.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::validation(format!(
                    "label {c} out of range for {num_classes} classes"
                )));
            }
            mat[(i, c)] = S::one();
        }
        Ok(OneHotLabels { mat, classes: classes.to_vec() })
    }

    /// Builds from a {0,1} matrix, validating exactly one 1 per row.
    pub fn from_matrix(mat: Mat<S>) -> Result<Self> {
        let mut classes = Vec::with_capacity(mat.rows());
        for i in 0..mat.rows() {
            let mut hot = None;
            for (j, &v) in mat.row(i).iter().enumerate() {
                if v == S::one() {
                    if hot.is_some() {
                        return Err(Error::validation(format!("row {i} has multiple 1 entries")));
                    }
                    hot = Some(j);
                } else if v != S::zero() {
                    return Err(Error::validation(format!(
                        "row {i} contains non-binary value {v}"
                    )));
                }
            }
            classes.push(hot.ok_or_else(|| Error::validation(format!("row {i} has no 1 entry")))?);
        }
        Ok(OneHotLabels { mat, classes })
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.mat
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.mat.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.mat.rows() == 0
    }
}

// ---------------------------------------------------------------------------
// Encoder adapter interfaces
// ---------------------------------------------------------------------------

/// Named parameter leaves registered on a tape, in canonical order.
pub struct BoundParams {
    nodes: Vec<(String, NodeId)>,
}

impl BoundParams {
    pub fn new(nodes: Vec<(String, NodeId)>) -> Self {
        BoundParams { nodes }
    }

    pub fn nodes(&self) -> &[(String, NodeId)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tape handles produced by an encoder forward pass.
pub struct EncoderForward {
    pub embeddings: NodeId,
    pub penultimate: Option<NodeId>,
}

/// Image tower adapter: forward pass on the tape, named parameter
/// segments, and an optional penultimate-layer tap.
pub trait ImageEncoder<S: Scalar>: Send + Sync {
    fn input_shape(&self) -> ImageShape;
    fn embed_dim(&self) -> usize;

    /// Clones current parameter values onto the tape as gradient leaves,
    /// in the same order as [`ImageEncoder::segments`].
    fn bind(&self, tape: &mut Tape<S>) -> BoundParams;

    /// Builds the forward computation. With `params = None` the current
    /// parameter values are baked in as constants (frozen forward).
    fn forward(
        &self,
        tape: &mut Tape<S>,
        images: Operand<S>,
        params: Option<&BoundParams>,
    ) -> Result<EncoderForward>;

    /// Named parameter segments (copies), in canonical order.
    fn segments(&self) -> Vec<Segment<S>>;

    /// Replaces parameters from segments with a matching layout.
    fn load_segments(&mut self, segments: &[Segment<S>]) -> Result<()>;

    /// Applies an in-place update to each parameter, in canonical order.
    fn update_params(&mut self, f: &mut dyn FnMut(&str, &mut [S]));

    fn clone_box(&self) -> Box<dyn ImageEncoder<S>>;

    /// Width of the encoder's token layer, when it has one.
    fn token_width(&self) -> Option<usize> {
        None
    }
}

/// Frozen text tower adapter.
pub trait TextEncoder<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Encodes prompts into a rows-per-prompt embedding matrix.
    fn encode(&self, prompts: &[String]) -> Result<Mat<S>>;

    /// Digest of the encoder's defining state; must never change.
    fn checksum(&self) -> u64;

    fn clone_box(&self) -> Box<dyn TextEncoder<S>>;
}

fn load_matching_segments<S: Scalar>(
    targets: &mut [(&str, &mut Mat<S>)],
    segments: &[Segment<S>],
) -> Result<()> {
    if segments.len() != targets.len() {
        return Err(Error::shape(format!(
            "expected {} segments, got {}",
            targets.len(),
            segments.len()
        )));
    }
    for ((name, mat), seg) in targets.iter_mut().zip(segments) {
        if seg.name != *name || seg.data.len() != mat.len() {
            return Err(Error::shape(format!(
                "segment {} (len {}) does not match parameter {} (len {})",
                seg.name,
                seg.data.len(),
                name,
                mat.len()
            )));
        }
        mat.as_mut_slice().copy_from_slice(&seg.data);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Toy encoders
// ---------------------------------------------------------------------------

/// Two-layer MLP image tower; penultimate tap is the hidden activation.
#[derive(Debug, Clone)]
pub struct MlpEncoder<S> {
    shape: ImageShape,
    pub w1: Mat<S>,
    pub b1: Mat<S>,
    pub w2: Mat<S>,
    pub b2: Mat<S>,
    activation: Activation,
}

impl<S: Scalar> MlpEncoder<S> {
    pub fn new(
        shape: ImageShape,
        w1: Mat<S>,
        b1: Mat<S>,
        w2: Mat<S>,
        b2: Mat<S>,
        activation: Activation,
    ) -> Result<Self> {
        let d = shape.len();
        let hidden = w1.rows();
        let emb = w2.rows();
        if w1.cols() != d
            || b1.shape() != (1, hidden)
            || w2.cols() != hidden
            || b2.shape() != (1, emb)
        {
            return Err(Error::shape("MLP encoder parameter shapes are inconsistent"));
        }
        Ok(MlpEncoder { shape, w1, b1, w2, b2, activation })
    }

    /// Random small-weight initialization.
    pub fn random(shape: ImageShape, hidden: usize, emb: usize, seed: u64) -> Self {
        let mut rng = SeedStream::new(seed).with_label("mlp_init").rng();
        let d = shape.len();
        let w1 = gaussian_mat(&mut rng, hidden, d, 1.0 / (d as f64).sqrt());
        let b1 = Mat::zeros(1, hidden);
        let w2 = gaussian_mat(&mut rng, emb, hidden, 1.0 / (hidden as f64).sqrt());
        let b2 = Mat::zeros(1, emb);
        MlpEncoder { shape, w1, b1, w2, b2, activation: Activation::Tanh }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }
}

impl<S: Scalar> ImageEncoder<S> for MlpEncoder<S> {
    fn input_shape(&self) -> ImageShape {
        self.shape
    }

    fn embed_dim(&self) -> usize {
        self.w2.rows()
    }

    fn bind(&self, tape: &mut Tape<S>) -> BoundParams {
        BoundParams::new(vec![
            ("w1".into(), tape.leaf(self.w1.clone())),
            ("b1".into(), tape.leaf(self.b1.clone())),
            ("w2".into(), tape.leaf(self.w2.clone())),
            ("b2".into(), tape.leaf(self.b2.clone())),
        ])
    }

    fn forward(
        &self,
        tape: &mut Tape<S>,
        images: Operand<S>,
        params: Option<&BoundParams>,
    ) -> Result<EncoderForward> {
        let (w1, b1, w2, b2) = match params {
            Some(bound) => {
                let ids = bound.nodes();
                (
                    Operand::Node(ids[0].1),
                    Operand::Node(ids[1].1),
                    Operand::Node(ids[2].1),
                    Operand::Node(ids[3].1),
                )
            }
            None => (
                Operand::constant(self.w1.clone()),
                Operand::constant(self.b1.clone()),
                Operand::constant(self.w2.clone()),
                Operand::constant(self.b2.clone()),
            ),
        };
        let z1 = tape.matmul_nt(images, w1)?;
        let pre = tape.add_row(z1, b1)?;
        let hidden = tape.activation(pre, self.activation);
        let z2 = tape.matmul_nt(hidden, w2)?;
        let emb = tape.add_row(z2, b2)?;
        Ok(EncoderForward { embeddings: emb, penultimate: Some(hidden) })
    }

    fn segments(&self) -> Vec<Segment<S>> {
        vec![
            Segment::new("w1", vec![self.w1.rows(), self.w1.cols()], self.w1.as_slice().to_vec()),
            Segment::new("b1", vec![self.b1.cols()], self.b1.as_slice().to_vec()),
            Segment::new("w2", vec![self.w2.rows(), self.w2.cols()], self.w2.as_slice().to_vec()),
            Segment::new("b2", vec![self.b2.cols()], self.b2.as_slice().to_vec()),
        ]
    }

    fn load_segments(&mut self, segments: &[Segment<S>]) -> Result<()> {
        let mut targets: Vec<(&str, &mut Mat<S>)> = vec![
            ("w1", &mut self.w1),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", &mut self.b2),
        ];
        load_matching_segments(&mut targets, segments)
    }

    fn update_params(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        f("w1", self.w1.as_mut_slice());
        f("b1", self.b1.as_mut_slice());
        f("w2", self.w2.as_mut_slice());
        f("b2", self.b2.as_mut_slice());
    }

    fn clone_box(&self) -> Box<dyn ImageEncoder<S>> {
        Box::new(self.clone())
    }
}

/// Single linear layer image tower; has no penultimate layer.
#[derive(Debug, Clone)]
pub struct LinearEncoder<S> {
    shape: ImageShape,
    pub w: Mat<S>,
    pub b: Mat<S>,
}

impl<S: Scalar> LinearEncoder<S> {
    pub fn new(shape: ImageShape, w: Mat<S>, b: Mat<S>) -> Result<Self> {
        if w.cols() != shape.len() || b.shape() != (1, w.rows()) {
            return Err(Error::shape("linear encoder parameter shapes are inconsistent"));
        }
        Ok(LinearEncoder { shape, w, b })
    }

    pub fn from_weights(shape: ImageShape, w: Mat<S>) -> Result<Self> {
        let b = Mat::zeros(1, w.rows());
        Self::new(shape, w, b)
    }
}

impl<S: Scalar> ImageEncoder<S> for LinearEncoder<S> {
    fn input_shape(&self) -> ImageShape {
        self.shape
    }

    fn embed_dim(&self) -> usize {
        self.w.rows()
    }

    fn bind(&self, tape: &mut Tape<S>) -> BoundParams {
        BoundParams::new(vec![
            ("w".into(), tape.leaf(self.w.clone())),
            ("b".into(), tape.leaf(self.b.clone())),
        ])
    }

    fn forward(
        &self,
        tape: &mut Tape<S>,
        images: Operand<S>,
        params: Option<&BoundParams>,
    ) -> Result<EncoderForward> {
        let (w, b) = match params {
            Some(bound) => {
                let ids = bound.nodes();
                (Operand::Node(ids[0].1), Operand::Node(ids[1].1))
            }
            None => (
                Operand::constant(self.w.clone()),
                Operand::constant(self.b.clone()),
            ),
        };
        let z = tape.matmul_nt(images, w)?;
        let emb = tape.add_row(z, b)?;
        Ok(EncoderForward { embeddings: emb, penultimate: None })
    }

    fn segments(&self) -> Vec<Segment<S>> {
        vec![
            Segment::new("w", vec![self.w.rows(), self.w.cols()], self.w.as_slice().to_vec()),
            Segment::new("b", vec![self.b.cols()], self.b.as_slice().to_vec()),
        ]
    }

    fn load_segments(&mut self, segments: &[Segment<S>]) -> Result<()> {
        let mut targets: Vec<(&str, &mut Mat<S>)> = vec![("w", &mut self.w), ("b", &mut self.b)];
        load_matching_segments(&mut targets, segments)
    }

    fn update_params(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        f("w", self.w.as_mut_slice());
        f("b", self.b.as_mut_slice());
    }

    fn clone_box(&self) -> Box<dyn ImageEncoder<S>> {
        Box::new(self.clone())
    }
}

/// Seeded hash-based text tower: each prompt maps to a fixed unit vector.
#[derive(Debug, Clone)]
pub struct HashTextEncoder {
    seed: u64,
    dim: usize,
}

impl HashTextEncoder {
    pub fn new(seed: u64, dim: usize) -> Self {
        HashTextEncoder { seed, dim }
    }
}

impl<S: Scalar> TextEncoder<S> for HashTextEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, prompts: &[String]) -> Result<Mat<S>> {
        let mut out = Mat::zeros(prompts.len(), self.dim);
        for (i, prompt) in prompts.iter().enumerate() {
            let mut rng = SeedStream::new(self.seed)
                .with_label("text")
                .with_label(prompt)
                .rng();
            let row: Mat<S> = gaussian_mat(&mut rng, 1, self.dim, 1.0);
            let norm = row.frobenius_norm();
            let norm = if norm > S::zero() { norm } else { S::one() };
            for (j, &v) in row.row(0).iter().enumerate() {
                out[(i, j)] = v / norm;
            }
        }
        Ok(out)
    }

    fn checksum(&self) -> u64 {
        SeedStream::new(self.seed).with_index(self.dim as u64).seed()
    }

    fn clone_box(&self) -> Box<dyn TextEncoder<S>> {
        Box::new(self.clone())
    }
}

// ---------------------------------------------------------------------------
// Visual prompt
// ---------------------------------------------------------------------------

/// How the trainer adapts the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMode {
    FullFinetune,
    VisualPrompt,
}

/// Learnable input-level (and, where supported, token-level) prompts
/// trained while the backbone stays frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualPrompt<S> {
    /// Additive perturbation with the input image's shape, broadcast over
    /// the batch.
    pub image_prompt: Mat<S>,
    /// Learnable token-layer vector; ignored (with a log notice) by
    /// encoders without a token layer.
    pub token_prompt: Option<Mat<S>>,
}

impl<S: Scalar> VisualPrompt<S> {
    /// Zero-initialized prompt for the given input shape.
    pub fn zeros(shape: ImageShape, token_width: Option<usize>) -> Self {
        VisualPrompt {
            image_prompt: Mat::zeros(1, shape.len()),
            token_prompt: token_width.map(|w| Mat::zeros(1, w)),
        }
    }
}

// ---------------------------------------------------------------------------
// The model
// ---------------------------------------------------------------------------

/// Construction options for [`TwoTowerModel`].
#[derive(Debug, Clone)]
pub struct ModelOptions {
    pub logit_scale: f64,
    pub normalize_embeddings: bool,
    pub prompt_template: String,
}

impl Default for ModelOptions {
    /// Raw inner products with unit scale.
    fn default() -> Self {
        ModelOptions {
            logit_scale: 1.0,
            normalize_embeddings: false,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
        }
    }
}

impl ModelOptions {
    /// CLIP-convention path: unit-normalized embeddings, fixed scale 100.
    pub fn clip_convention() -> Self {
        ModelOptions {
            logit_scale: 100.0,
            normalize_embeddings: true,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
        }
    }
}

/// Result of a model forward pass on a tape.
pub struct ModelForward {
    pub embeddings: NodeId,
    pub penultimate: Option<NodeId>,
}

/// Trainable image encoder + frozen text encoder + similarity scale.
pub struct TwoTowerModel<S: Scalar> {
    image_encoder: Box<dyn ImageEncoder<S>>,
    text_encoder: Box<dyn TextEncoder<S>>,
    logit_scale: S,
    normalize_embeddings: bool,
    prompt_template: String,
    adaptation: AdaptationMode,
    visual_prompt: Option<VisualPrompt<S>>,
}

impl<S: Scalar> Clone for TwoTowerModel<S> {
    fn clone(&self) -> Self {
        TwoTowerModel {
            image_encoder: self.image_encoder.clone_box(),
            text_encoder: self.text_encoder.clone_box(),
            logit_scale: self.logit_scale,
            normalize_embeddings: self.normalize_embeddings,
            prompt_template: self.prompt_template.clone(),
            adaptation: self.adaptation,
            visual_prompt: self.visual_prompt.clone(),
        }
    }
}

impl<S: Scalar> TwoTowerModel<S> {
    pub fn new(
        image_encoder: Box<dyn ImageEncoder<S>>,
        text_encoder: Box<dyn TextEncoder<S>>,
        options: ModelOptions,
    ) -> Result<Self> {
        if !(options.logit_scale > 0.0) {
            return Err(Error::config(format!(
                "logit scale must be positive, got {}",
                options.logit_scale
            )));
        }
        if text_encoder.dim() != image_encoder.embed_dim() {
            return Err(Error::shape(format!(
                "text dim {} != image embedding dim {}",
                text_encoder.dim(),
                image_encoder.embed_dim()
            )));
        }
        Ok(TwoTowerModel {
            image_encoder,
            text_encoder,
            logit_scale: S::of(options.logit_scale),
            normalize_embeddings: options.normalize_embeddings,
            prompt_template: options.prompt_template,
            adaptation: AdaptationMode::FullFinetune,
            visual_prompt: None,
        })
    }

    pub fn logit_scale(&self) -> S {
        self.logit_scale
    }

    pub fn normalize_embeddings(&self) -> bool {
        self.normalize_embeddings
    }

    pub fn prompt_template(&self) -> &str {
        &self.prompt_template
    }

    pub fn input_shape(&self) -> ImageShape {
        self.image_encoder.input_shape()
    }

    pub fn embed_dim(&self) -> usize {
        self.image_encoder.embed_dim()
    }

    pub fn image_encoder(&self) -> &dyn ImageEncoder<S> {
        self.image_encoder.as_ref()
    }

    pub fn text_encoder(&self) -> &dyn TextEncoder<S> {
        self.text_encoder.as_ref()
    }

    pub fn adaptation(&self) -> AdaptationMode {
        self.adaptation
    }

    pub fn visual_prompt(&self) -> Option<&VisualPrompt<S>> {
        self.visual_prompt.as_ref()
    }

    /// Switches to visual-prompt adaptation: backbone frozen, prompt
    /// parameters trainable. Encoders without a token layer fall back to
    /// the image-level prompt only.
    pub fn set_visual_prompt(&mut self, prompt: VisualPrompt<S>) -> Result<()> {
        if prompt.image_prompt.shape() != (1, self.input_shape().len()) {
            return Err(Error::shape(format!(
                "image prompt of width {} does not match input shape {}",
                prompt.image_prompt.cols(),
                self.input_shape()
            )));
        }
        if prompt.token_prompt.is_some() && self.image_encoder.token_width().is_none() {
            log::warn!("encoder has no token layer; visual prompt degrades to image-level only");
        }
        self.adaptation = AdaptationMode::VisualPrompt;
        self.visual_prompt = Some(prompt);
        Ok(())
    }

    /// Builds the (possibly prompted) image-tower forward pass.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape<S>,
        images: Operand<S>,
        bound: Option<&BoundParams>,
    ) -> Result<ModelForward> {
        let (lo, hi) = (S::of(PIXEL_BOUNDS.0), S::of(PIXEL_BOUNDS.1));
        let (encoder_input, encoder_params) = match self.adaptation {
            AdaptationMode::FullFinetune => (images, bound),
            AdaptationMode::VisualPrompt => {
                let prompt = self
                    .visual_prompt
                    .as_ref()
                    .ok_or_else(|| Error::config("visual prompt mode without a prompt"))?;
                let prompt_op: Operand<S> = match bound {
                    // image prompt is always the first bound parameter
                    Some(b) => Operand::Node(b.nodes()[0].1),
                    None => Operand::constant(prompt.image_prompt.clone()),
                };
                let shifted = tape.add_row(images, prompt_op)?;
                let clamped = tape.clamp(shifted, lo, hi);
                // Backbone parameters stay constant in prompt mode.
                (Operand::Node(clamped), None)
            }
        };
        let fwd = self.image_encoder.forward(tape, encoder_input, encoder_params)?;
        let embeddings = if self.normalize_embeddings {
            tape.row_normalize(fwd.embeddings)
        } else {
            fwd.embeddings
        };
        Ok(ModelForward { embeddings, penultimate: fwd.penultimate })
    }

    /// Registers the trainable parameters on the tape:
    /// the encoder's in full-finetune mode, the prompt's in prompt mode.
    pub fn bind_trainable(&self, tape: &mut Tape<S>) -> BoundParams {
        match self.adaptation {
            AdaptationMode::FullFinetune => self.image_encoder.bind(tape),
            AdaptationMode::VisualPrompt => {
                let prompt = self.visual_prompt.as_ref().expect("prompt mode has a prompt");
                let mut nodes =
                    vec![("image_prompt".to_string(), tape.leaf(prompt.image_prompt.clone()))];
                if let (Some(tp), Some(_)) = (&prompt.token_prompt, self.image_encoder.token_width())
                {
                    nodes.push(("token_prompt".to_string(), tape.leaf(tp.clone())));
                }
                BoundParams::new(nodes)
            }
        }
    }

    /// Copies of the trainable parameters as named flat segments.
    pub fn trainable_segments(&self) -> Vec<Segment<S>> {
        match self.adaptation {
            AdaptationMode::FullFinetune => self.image_encoder.segments(),
            AdaptationMode::VisualPrompt => {
                let prompt = self.visual_prompt.as_ref().expect("prompt mode has a prompt");
                let mut segs = vec![Segment::new(
                    "image_prompt",
                    vec![prompt.image_prompt.cols()],
                    prompt.image_prompt.as_slice().to_vec(),
                )];
                if let (Some(tp), Some(_)) = (&prompt.token_prompt, self.image_encoder.token_width())
                {
                    segs.push(Segment::new("token_prompt", vec![tp.cols()], tp.as_slice().to_vec()));
                }
                segs
            }
        }
    }

    /// Loads trainable parameters from a snapshot with a matching layout.
    pub fn load_trainable(&mut self, snapshot: &ParameterSnapshot<S>) -> Result<()> {
        match self.adaptation {
            AdaptationMode::FullFinetune => self.image_encoder.load_segments(snapshot.segments()),
            AdaptationMode::VisualPrompt => {
                let prompt = self
                    .visual_prompt
                    .as_mut()
                    .ok_or_else(|| Error::config("visual prompt mode without a prompt"))?;
                let segs = snapshot.segments();
                if segs.is_empty() || segs[0].name != "image_prompt" {
                    return Err(Error::shape("snapshot does not carry an image_prompt segment"));
                }
                if segs[0].data.len() != prompt.image_prompt.len() {
                    return Err(Error::shape("image_prompt segment length mismatch"));
                }
                prompt.image_prompt.as_mut_slice().copy_from_slice(&segs[0].data);
                if let (Some(tp), Some(seg)) = (&mut prompt.token_prompt, segs.get(1)) {
                    if seg.data.len() != tp.len() {
                        return Err(Error::shape("token_prompt segment length mismatch"));
                    }
                    tp.as_mut_slice().copy_from_slice(&seg.data);
                }
                Ok(())
            }
        }
    }

    /// Applies an in-place update to each trainable parameter buffer, in
    /// the canonical (bind) order.
    pub fn update_trainable(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        match self.adaptation {
            AdaptationMode::FullFinetune => self.image_encoder.update_params(f),
            AdaptationMode::VisualPrompt => {
                let has_token = self.image_encoder.token_width().is_some();
                let prompt = self.visual_prompt.as_mut().expect("prompt mode has a prompt");
                f("image_prompt", prompt.image_prompt.as_mut_slice());
                if let (Some(tp), true) = (&mut prompt.token_prompt, has_token) {
                    f("token_prompt", tp.as_mut_slice());
                }
            }
        }
    }

    /// Digest of the trainable parameters.
    pub fn trainable_checksum(&self) -> u64 {
        checksum_values(
            self.trainable_segments()
                .iter()
                .flat_map(|s| s.data.iter().copied()),
        )
    }

    /// Digest of the full image tower (backbone, ignoring any prompt).
    pub fn backbone_checksum(&self) -> u64 {
        checksum_values(
            self.image_encoder
                .segments()
                .iter()
                .flat_map(|s| s.data.iter().copied()),
        )
    }

    /// Digest of the frozen text tower.
    pub fn text_checksum(&self) -> u64 {
        self.text_encoder.checksum()
    }

    fn validate_images(&self, images: &ImageBatch<S>) -> Result<()> {
        if images.shape() != self.input_shape() {
            return Err(Error::shape(format!(
                "image batch shaped {} does not match encoder input {}",
                images.shape(),
                self.input_shape()
            )));
        }
        if let Some(row) = images.pixels().first_non_finite_row() {
            return Err(Error::validation(format!(
                "non-finite pixel values in image {row}"
            )));
        }
        Ok(())
    }

    /// Frozen forward pass producing the (normalized) embedding matrix.
    pub fn eval_embeddings(&self, images: &ImageBatch<S>) -> Result<Mat<S>> {
        self.validate_images(images)?;
        let mut tape = Tape::new();
        let fwd =
            self.forward_on_tape(&mut tape, Operand::constant(images.pixels().clone()), None)?;
        Ok(tape.value(fwd.embeddings).clone())
    }

    /// Frozen forward pass producing the penultimate features.
    pub fn eval_penultimate(&self, images: &ImageBatch<S>) -> Result<Mat<S>> {
        self.validate_images(images)?;
        let mut tape = Tape::new();
        let fwd =
            self.forward_on_tape(&mut tape, Operand::constant(images.pixels().clone()), None)?;
        let node = fwd.penultimate.ok_or_else(|| {
            Error::UnsupportedTap("single-layer encoder has no penultimate layer".into())
        })?;
        Ok(tape.value(node).clone())
    }

    /// Class probabilities for an image batch against a text matrix.
    pub fn predict(
        &self,
        images: &ImageBatch<S>,
        text: &TextEmbeddingMatrix<S>,
    ) -> Result<ProbabilityMatrix<S>> {
        let emb = encode_images(self, images)?;
        let sim = similarity(&emb, text)?;
        predict_probs(&sim, self.logit_scale)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Encodes an image batch into embeddings (rows unit-normalized when the
/// model is configured to normalize).
pub fn encode_images<S: Scalar>(
    model: &TwoTowerModel<S>,
    images: &ImageBatch<S>,
) -> Result<EmbeddingBatch<S>> {
    EmbeddingBatch::new(model.eval_embeddings(images)?)
}

/// Encodes class prompts into the fixed text embedding matrix.
pub fn build_text_matrix<S: Scalar>(
    model: &TwoTowerModel<S>,
    class_names: &[String],
) -> Result<TextEmbeddingMatrix<S>> {
    if class_names.is_empty() {
        return Err(Error::validation("class name list is empty"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for name in class_names {
        if !seen.insert(name.as_str()) {
            return Err(Error::validation(format!("duplicate class name: {name}")));
        }
    }
    let template = model.prompt_template().to_string();
    let prompts: Vec<String> = class_names
        .iter()
        .map(|name| crate::datasets::render_prompt(&template, name))
        .collect::<Result<_>>()?;
    let mat = model.text_encoder().encode(&prompts)?;
    TextEmbeddingMatrix::new(mat, class_names.to_vec(), template)
}

/// Similarity scores `S = I · Tᵀ`.
pub fn similarity<S: Scalar>(
    embeddings: &EmbeddingBatch<S>,
    text: &TextEmbeddingMatrix<S>,
) -> Result<SimilarityMatrix<S>> {
    if embeddings.dim() != text.dim() {
        return Err(Error::shape(format!(
            "embedding dim {} != text dim {}",
            embeddings.dim(),
            text.dim()
        )));
    }
    Ok(SimilarityMatrix { mat: embeddings.matrix().matmul_nt(text.matrix())? })
}

/// Row-softmax of scaled similarity scores; max-subtracted for stability.
pub fn predict_probs<S: Scalar>(
    scores: &SimilarityMatrix<S>,
    logit_scale: S,
) -> Result<ProbabilityMatrix<S>> {
    if !scores.mat.all_finite() {
        return Err(Error::validation("similarity matrix contains non-finite values"));
    }
    if !(logit_scale >= S::zero() && logit_scale.is_finite()) {
        return Err(Error::validation(format!(
            "logit scale must be finite and non-negative, got {logit_scale}"
        )));
    }
    ProbabilityMatrix::new(kernels::softmax_rows(&scores.mat, logit_scale))
}

/// Per-row argmax; ties break to the lowest class index.
pub fn classify<S: Scalar>(probs: &ProbabilityMatrix<S>) -> Vec<usize> {
    let m = probs.matrix();
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Activations of the layer immediately preceding the final projection.
pub fn penultimate_features<S: Scalar>(
    model: &TwoTowerModel<S>,
    images: &ImageBatch<S>,
) -> Result<Mat<S>> {
    model.eval_penultimate(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::uniform_mat;

    fn linear_model(w: Mat<f64>, normalize: bool) -> TwoTowerModel<f64> {
        let shape = ImageShape::new(1, 1, w.cols());
        let enc = LinearEncoder::from_weights(shape, w).unwrap();
        let dim = enc.embed_dim();
        TwoTowerModel::new(
            Box::new(enc),
            Box::new(HashTextEncoder::new(7, dim)),
            ModelOptions { normalize_embeddings: normalize, ..ModelOptions::default() },
        )
        .unwrap()
    }

    fn batch(shape: ImageShape, rows: &[Vec<f64>]) -> ImageBatch<f64> {
        ImageBatch::new(shape, Mat::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn linear_encoder_matches_direct_matrix_product() {
        let w = Mat::from_rows(&[vec![1.0, 2.0, -1.0], vec![0.5, 0.0, 3.0]]).unwrap();
        let model = linear_model(w.clone(), false);
        let x = batch(model.input_shape(), &[vec![0.1, 0.9, 0.4], vec![1.0, 0.0, 0.3]]);
        let emb = encode_images(&model, &x).unwrap();
        let direct = x.pixels().matmul_nt(&w).unwrap();
        assert!(emb.matrix().bit_eq(&direct));
    }

    #[test]
    fn zero_images_through_bias_free_encoder_embed_to_zero() {
        let w = Mat::from_rows(&[vec![1.5, -2.0], vec![0.3, 0.7], vec![2.0, 0.0]]).unwrap();
        let model = linear_model(w, false);
        let x = ImageBatch::constant(model.input_shape(), 4, 0.0);
        let emb = encode_images(&model, &x).unwrap();
        assert!(emb.matrix().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalized_embeddings_have_unit_rows() {
        let w = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.2]]).unwrap();
        let model = linear_model(w, true);
        let x = batch(model.input_shape(), &[vec![0.3, 0.8, 0.1], vec![0.9, 0.9, 0.9]]);
        let emb = encode_images(&model, &x).unwrap();
        for n in emb.matrix().row_norms() {
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn encode_rejects_bad_shapes_and_non_finite_pixels() {
        let w = Mat::from_rows(&[vec![1.0, 0.0]]).unwrap();
        // single-class text towers are fine for encoding; build manually
        let shape = ImageShape::new(1, 1, 2);
        let enc = LinearEncoder::from_weights(shape, w).unwrap();
        let model = TwoTowerModel::new(
            Box::new(enc),
            Box::new(HashTextEncoder::new(7, 1)),
            ModelOptions::default(),
        )
        .unwrap();
        let wrong = ImageBatch::new(ImageShape::new(1, 1, 3), Mat::zeros(2, 3)).unwrap();
        assert!(matches!(encode_images(&model, &wrong), Err(Error::Shape(_))));

        let mut bad = Mat::zeros(1, 2);
        bad[(0, 1)] = f64::NAN;
        let nan_batch = ImageBatch::new(shape, bad).unwrap();
        assert!(matches!(encode_images(&model, &nan_batch), Err(Error::Validation(_))));
    }

    #[test]
    fn text_matrix_renders_prompts_and_is_deterministic() {
        let model = linear_model(Mat::identity(4), false);
        let names = vec!["cat".to_string(), "dog".to_string()];
        let a = build_text_matrix(&model, &names).unwrap();
        let b = build_text_matrix(&model, &names).unwrap();
        assert!(a.matrix().bit_eq(b.matrix()));
        assert_eq!(a.prompt_template(), DEFAULT_PROMPT_TEMPLATE);

        // the encoder saw the rendered prompt, not the raw class name
        let raw = model
            .text_encoder()
            .encode(&["cat".to_string(), "dog".to_string()])
            .unwrap();
        let rendered = model
            .text_encoder()
            .encode(&[
                "This is a photo of a cat".to_string(),
                "This is a photo of a dog".to_string(),
            ])
            .unwrap();
        assert!(a.matrix().bit_eq(&rendered));
        assert!(!a.matrix().bit_eq(&raw));
    }

    #[test]
    fn text_matrix_rejects_duplicates_and_empty_lists() {
        let model = linear_model(Mat::identity(3), false);
        assert!(matches!(
            build_text_matrix(&model, &["a".into(), "a".into()]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(build_text_matrix(&model, &[]), Err(Error::Validation(_))));
    }

    #[test]
    fn ten_class_text_matrix_matches_reencoding_oracle() {
        let model = linear_model(Mat::identity(16), false);
        let names: Vec<String> = (0..10).map(|i| format!("thing_{i}")).collect();
        let t = build_text_matrix(&model, &names).unwrap();
        assert_eq!(t.matrix().shape(), (10, 16));
        for (i, name) in names.iter().enumerate() {
            let prompt = crate::datasets::render_prompt(DEFAULT_PROMPT_TEMPLATE, name).unwrap();
            let row = model.text_encoder().encode(&[prompt]).unwrap();
            assert_eq!(t.matrix().row(i), row.row(0));
        }
    }

    #[test]
    fn similarity_identity_zero_and_random_oracle() {
        let i = EmbeddingBatch::new(
            Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let t = TextEmbeddingMatrix::new(
            Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            vec!["a".into(), "b".into()],
            "{}".into(),
        )
        .unwrap();
        let s = similarity(&i, &t).unwrap();
        assert_eq!(s.matrix()[(0, 0)], 1.0);
        assert_eq!(s.matrix()[(0, 1)], 0.0);
        assert_eq!(s.matrix()[(1, 1)], 1.0);

        let zero = EmbeddingBatch::new(Mat::zeros(3, 2)).unwrap();
        let s0 = similarity(&zero, &t).unwrap();
        assert!(s0.matrix().as_slice().iter().all(|&v| v == 0.0));

        let mut rng = crate::seeding::SeedStream::new(3).rng();
        let i = EmbeddingBatch::new(uniform_mat::<f64>(&mut rng, 3, 4, -1.0, 1.0)).unwrap();
        let tm = uniform_mat(&mut rng, 5, 4, -1.0, 1.0);
        let names: Vec<String> = (0..5).map(|k| format!("c{k}")).collect();
        let t = TextEmbeddingMatrix::new(tm.clone(), names, "{}".into()).unwrap();
        let s = similarity(&i, &t).unwrap();
        for r in 0..3 {
            for c in 0..5 {
                let mut dot = 0.0;
                for k in 0..4 {
                    dot += i.matrix()[(r, k)] * tm[(c, k)];
                }
                assert!((s.matrix()[(r, c)] - dot).abs() < 1e-6);
            }
        }

        // dim mismatch
        let narrow = EmbeddingBatch::new(Mat::zeros(2, 3)).unwrap();
        assert!(matches!(similarity(&narrow, &t), Err(Error::Shape(_))));
    }

    #[test]
    fn predict_probs_uniform_scale_limits_and_hand_softmax() {
        // constant rows are uniform at any scale
        let s = SimilarityMatrix::from_matrix(Mat::<f64>::full(2, 4, 3.25));
        let p = predict_probs(&s, 7.0).unwrap();
        for &v in p.matrix().as_slice() {
            assert!((v - 0.25).abs() < 1e-12);
        }

        // zero scale degenerates to uniform rows
        let s = SimilarityMatrix::from_matrix(
            Mat::from_rows(&[vec![5.0f64, -3.0, 0.5]]).unwrap(),
        );
        let p = predict_probs(&s, 0.0).unwrap();
        for &v in p.matrix().as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }

        // hand-computed softmax: [ln 2, 0] at scale 1 -> [2/3, 1/3]
        let s = SimilarityMatrix::from_matrix(
            Mat::from_rows(&[vec![std::f64::consts::LN_2, 0.0]]).unwrap(),
        );
        let p = predict_probs(&s, 1.0).unwrap();
        assert!((p.matrix()[(0, 0)] - 2.0 / 3.0).abs() < 1e-9);
        assert!((p.matrix()[(0, 1)] - 1.0 / 3.0).abs() < 1e-9);

        // non-finite scores are rejected
        let mut bad = Mat::zeros(1, 2);
        bad[(0, 0)] = f64::INFINITY;
        assert!(predict_probs(&SimilarityMatrix::from_matrix(bad), 1.0).is_err());
    }

    #[test]
    fn softmax_is_stable_for_huge_scores() {
        let s = SimilarityMatrix::from_matrix(
            Mat::from_rows(&[vec![1.0e4, -1.0e4, 3.0], vec![-9.0e3, 9.5e3, 0.0]]).unwrap(),
        );
        let p = predict_probs(&s, 1.0).unwrap();
        assert!(p.matrix().all_finite());
        for i in 0..2 {
            let sum: f64 = p.matrix().row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn classify_argmax_tiebreak_and_brute_force() {
        let p = ProbabilityMatrix::new(
            Mat::from_rows(&[vec![0.1, 0.7, 0.2], vec![0.5, 0.5, 0.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(classify(&p), vec![1, 0]);

        let mut rng = crate::seeding::SeedStream::new(15).rng();
        let logits = uniform_mat(&mut rng, 20, 6, -2.0, 2.0);
        let p = predict_probs(&SimilarityMatrix::from_matrix(logits), 1.0).unwrap();
        let preds = classify(&p);
        for (i, &pred) in preds.iter().enumerate() {
            let row = p.matrix().row(i);
            for &v in row {
                assert!(row[pred] >= v);
            }
        }
    }

    #[test]
    fn classification_is_invariant_to_the_logit_scale() {
        let mut rng = crate::seeding::SeedStream::new(25).rng();
        let scores = SimilarityMatrix::from_matrix(uniform_mat(&mut rng, 16, 5, -1.0, 1.0));
        let base = classify(&predict_probs(&scores, 1.0).unwrap());
        for tau in [0.01, 0.5, 10.0, 100.0] {
            assert_eq!(classify(&predict_probs(&scores, tau).unwrap()), base);
        }
    }

    #[test]
    fn penultimate_features_match_manual_forward() {
        let shape = ImageShape::new(1, 1, 2);
        let w1 = Mat::from_rows(&[vec![0.5, -0.3], vec![1.0, 0.2], vec![-0.7, 0.4]]).unwrap();
        let b1 = Mat::from_rows(&[vec![0.1, -0.2, 0.0]]).unwrap();
        let w2 = Mat::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, -0.5]]).unwrap();
        let b2 = Mat::zeros(1, 2);
        let enc = MlpEncoder::new(shape, w1.clone(), b1.clone(), w2, b2, Activation::Tanh).unwrap();
        let model = TwoTowerModel::new(
            Box::new(enc),
            Box::new(HashTextEncoder::new(0, 2)),
            ModelOptions::default(),
        )
        .unwrap();
        let x = batch(shape, &[vec![0.4, 0.9]]);
        let feats = penultimate_features(&model, &x).unwrap();

        // manual layer-by-layer forward
        for j in 0..3 {
            let pre = 0.4 * w1[(j, 0)] + 0.9 * w1[(j, 1)] + b1[(0, j)];
            assert!((feats[(0, j)] - pre.tanh()).abs() < 1e-15);
        }

        // determinism and zero case
        let again = penultimate_features(&model, &x).unwrap();
        assert!(feats.bit_eq(&again));

        let enc0 = MlpEncoder::new(
            shape,
            Mat::from_rows(&[vec![0.5, -0.3], vec![1.0, 0.2]]).unwrap(),
            Mat::zeros(1, 2),
            Mat::zeros(2, 2),
            Mat::zeros(1, 2),
            Activation::Tanh,
        )
        .unwrap();
        let model0 = TwoTowerModel::new(
            Box::new(enc0),
            Box::new(HashTextEncoder::new(0, 2)),
            ModelOptions::default(),
        )
        .unwrap();
        let zero = ImageBatch::constant(shape, 2, 0.0);
        let f0 = penultimate_features(&model0, &zero).unwrap();
        assert!(f0.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_encoder_has_no_penultimate_tap() {
        let model = linear_model(Mat::identity(2), false);
        let x = ImageBatch::constant(model.input_shape(), 1, 0.5);
        assert!(matches!(
            penultimate_features(&model, &x),
            Err(Error::UnsupportedTap(_))
        ));
    }

    #[test]
    fn similarity_is_bilinear() {
        let mut rng = crate::seeding::SeedStream::new(33).rng();
        let e1 = uniform_mat::<f64>(&mut rng, 3, 4, -1.0, 1.0);
        let e2 = uniform_mat::<f64>(&mut rng, 3, 4, -1.0, 1.0);
        let tm = uniform_mat::<f64>(&mut rng, 5, 4, -1.0, 1.0);
        let names: Vec<String> = (0..5).map(|k| format!("c{k}")).collect();
        let t = TextEmbeddingMatrix::new(tm, names, "{}".into()).unwrap();
        let (a, b) = (2.5, -1.25);

        let combo = EmbeddingBatch::new(e1.scale(a).add(&e2.scale(b)).unwrap()).unwrap();
        let lhs = similarity(&combo, &t).unwrap();
        let s1 = similarity(&EmbeddingBatch::new(e1).unwrap(), &t).unwrap();
        let s2 = similarity(&EmbeddingBatch::new(e2).unwrap(), &t).unwrap();
        let rhs = s1.matrix().scale(a).add(&s2.matrix().scale(b)).unwrap();
        for (x, y) in lhs.matrix().as_slice().iter().zip(rhs.as_slice()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn text_tower_checksum_survives_training_like_mutation() {
        let mut model = linear_model(Mat::identity(3), false);
        let before = model.text_checksum();
        model.update_trainable(&mut |_, values| {
            for v in values {
                *v += 0.1;
            }
        });
        assert_eq!(model.text_checksum(), before);
    }

    #[test]
    fn trainable_segment_layout_is_stable() {
        let spec_names: Vec<String> = linear_model(Mat::identity(3), false)
            .trainable_segments()
            .iter()
            .map(|s| s.name.clone())
            .collect();
        assert_eq!(spec_names, vec!["w", "b"]);
    }
}
