//! Synthetic two-tower universe: class patterns derived from the text
//! tower's geometry, and a matching "pretrained" toy model.
//!
//! Class images are rendered from a fixed linear map of the class's text
//! embedding, so a model whose image tower approximately inverts that map
//! classifies *any* class of the universe zero-shot — including classes
//! never seen during fine-tuning. That mirrors the role of a large
//! pretrained two-tower model at desk scale without shipping real weights.

use crate::datasets::SyntheticSpec;
use crate::error::{Error, Result};
use crate::graph::Activation;
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::seeding::{gaussian_mat, SeedStream};
use crate::zeroshot::{
    HashTextEncoder, MlpEncoder, ModelOptions, TextEncoder, TwoTowerModel,
};

/// Embedding width shared by the universe's text tower and toy models.
/// Narrow on purpose: class directions must be crowded enough that small
/// L∞ pixel budgets can actually flip predictions.
pub const UNIVERSE_EMBED_DIM: usize = 8;

/// Default hidden width of the toy image tower (parameter budget ~4e4).
pub const DEFAULT_HIDDEN_DIM: usize = 48;

/// The universe's frozen text tower.
pub fn universe_text_encoder(spec: &SyntheticSpec) -> HashTextEncoder {
    HashTextEncoder::new(
        SeedStream::new(spec.seed).with_label("universe_text").seed(),
        UNIVERSE_EMBED_DIM,
    )
}

/// Pattern map `G` (pixels × embed dim) shared by every class of a universe.
fn pattern_map(spec: &SyntheticSpec) -> Mat<f64> {
    let mut rng = SeedStream::new(spec.seed).with_label("patterns").rng();
    gaussian_mat(&mut rng, spec.image_shape.len(), UNIVERSE_EMBED_DIM, 1.0)
}

/// Prompt embeddings for all universe classes (num_classes × embed dim).
pub fn universe_class_embeddings(spec: &SyntheticSpec) -> Result<Mat<f64>> {
    let text = universe_text_encoder(spec);
    let prompts: Vec<String> = (0..spec.num_classes)
        .map(|k| {
            crate::datasets::render_prompt(
                crate::zeroshot::DEFAULT_PROMPT_TEMPLATE,
                &SyntheticSpec::class_name(k),
            )
        })
        .collect::<Result<_>>()?;
    TextEncoder::<f64>::encode(&text, &prompts)
}

/// Noise-free class images: `clip(0.5 + signal · G·t_k, 0, 1)` per class.
pub fn class_patterns(spec: &SyntheticSpec) -> Result<Mat<f64>> {
    let g = pattern_map(spec);
    let t = universe_class_embeddings(spec)?;
    let d = spec.image_shape.len();
    let mut patterns = Mat::zeros(spec.num_classes, d);
    for k in 0..spec.num_classes {
        let tk = t.row(k);
        for i in 0..d {
            let gi = g.row(i);
            let mut raw = 0.0;
            for (j, &tv) in tk.iter().enumerate() {
                raw += gi[j] * tv;
            }
            patterns[(k, i)] = (0.5 + spec.signal_strength * raw).clamp(0.0, 1.0);
        }
    }
    Ok(patterns)
}

/// Architecture knobs for the toy image tower.
#[derive(Debug, Clone)]
pub struct ToyModelConfig {
    pub hidden: usize,
    /// Relative jitter on the analytic construction; larger values leave
    /// the "pretrained" model imperfect, with headroom for fine-tuning.
    pub init_jitter: f64,
    pub options: ModelOptions,
}

impl Default for ToyModelConfig {
    fn default() -> Self {
        ToyModelConfig {
            hidden: DEFAULT_HIDDEN_DIM,
            init_jitter: 0.05,
            options: ModelOptions::default(),
        }
    }
}

/// Builds the universe's "pretrained" model: a 2-layer tanh MLP whose
/// first layer projects along `Gᵀ` (undoing the pattern map) and whose
/// second layer reads out the recovered text-embedding coordinates.
///
/// Layer scales are kept near standard initialization magnitudes so a
/// single SGD learning rate moves both layers comparably; the output
/// scale itself is irrelevant under embedding normalization. Small
/// seeded jitter keeps the construction from being exactly low-rank.
pub fn pretrained_toy_model<S: Scalar>(
    spec: &SyntheticSpec,
    cfg: &ToyModelConfig,
) -> Result<TwoTowerModel<S>> {
    spec.validate()?;
    let dim = UNIVERSE_EMBED_DIM;
    if cfg.hidden < dim {
        return Err(Error::config(format!(
            "toy hidden width {} must be at least the embedding dim {dim}",
            cfg.hidden
        )));
    }
    let d = spec.image_shape.len();
    let g = pattern_map(spec);
    let mut rng = SeedStream::new(spec.seed).with_label("pretrained_init").rng();

    // First-layer gain: pre-activations land near the class embedding
    // coordinates (|t| <= 1), inside tanh's useful range.
    let gain = 1.0 / (spec.signal_strength * d as f64);
    // w1: first `dim` rows recover embedding coordinates, the rest are
    // low-amplitude auxiliary directions.
    let jitter: Mat<f64> = gaussian_mat(&mut rng, cfg.hidden, d, gain * cfg.init_jitter);
    let mut w1 = Mat::<S>::zeros(cfg.hidden, d);
    for r in 0..cfg.hidden {
        for i in 0..d {
            let base = if r < dim { gain * g[(i, r)] } else { 0.0 };
            w1[(r, i)] = S::of(base + jitter[(r, i)]);
        }
    }
    // b1 centers pre-activations for mid-gray input.
    let mut b1 = Mat::<S>::zeros(1, cfg.hidden);
    for r in 0..cfg.hidden {
        let mut row_sum = S::zero();
        for i in 0..d {
            row_sum += w1[(r, i)];
        }
        b1[(0, r)] = -S::of(0.5) * row_sum;
    }

    // w2 reads the recovered coordinates at a standard fan-in scale.
    let readout = 1.0 / (cfg.hidden as f64).sqrt();
    let jitter2: Mat<f64> = gaussian_mat(&mut rng, dim, cfg.hidden, readout * cfg.init_jitter);
    let mut w2 = Mat::<S>::zeros(dim, cfg.hidden);
    for r in 0..dim {
        for cidx in 0..cfg.hidden {
            let base = if r == cidx { readout } else { 0.0 };
            w2[(r, cidx)] = S::of(base + jitter2[(r, cidx)]);
        }
    }
    let b2 = Mat::<S>::zeros(1, dim);

    let encoder = MlpEncoder::new(spec.image_shape, w1, b1, w2, b2, Activation::Tanh)?;
    let text = universe_text_encoder(spec);
    TwoTowerModel::new(Box::new(encoder), Box::new(text), cfg.options.clone())
}
