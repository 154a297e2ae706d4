//! Dataset registry: prompt templating, synthetic desk-scale generation
//! with seen/held-out class splits, and the on-disk tensor format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::archive::{read_archive, write_archive, NamedTensor, TensorPayload};
use crate::error::{Error, Result};
use crate::mat::{ImageBatch, ImageShape, Mat};
use crate::scalar::Scalar;
use crate::seeding::{next_gaussian, SeedStream};
use crate::synthetic;
use crate::zeroshot::DEFAULT_PROMPT_TEMPLATE;

/// Input shape expected by real CLIP backbones; adapters for real
/// datasets are expected to resize to this. No downloader ships here.
pub const CLIP_INPUT_SHAPE: ImageShape = ImageShape { channels: 3, height: 224, width: 224 };

/// Default toy image shape; attacks at 224×224 are out of desk budget
/// and the math is shape-agnostic.
pub const TOY_IMAGE_SHAPE: ImageShape = ImageShape { channels: 3, height: 16, width: 16 };

/// Replaces the single `{}` placeholder in `template` with `class_name`.
pub fn render_prompt(template: &str, class_name: &str) -> Result<String> {
    let count = template.matches("{}").count();
    if count != 1 {
        return Err(Error::validation(format!(
            "template must contain exactly one {{}} placeholder, found {count}: {template:?}"
        )));
    }
    Ok(template.replacen("{}", class_name, 1))
}

/// Adapter interface for external dataset sources (e.g. real benchmark
/// sets preprocessed to [`CLIP_INPUT_SHAPE`]). The crate ships only the
/// synthetic source.
pub trait DatasetSource<S: Scalar> {
    fn manifest(&self) -> &DatasetManifest;
    fn load_split(&self, split: Split) -> Result<TensorDataset<S>>;
}

/// Which half of a dataset to load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Generation parameters for the synthetic class-conditional universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub image_shape: ImageShape,
    /// Standard deviation of the class pattern around mid-gray, in pixel units.
    pub signal_strength: f64,
    /// Standard deviation of per-sample pixel noise.
    pub noise_level: f64,
    /// Class indices reserved for zero-shot evaluation.
    pub held_out_classes: Vec<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 0,
            num_classes: 14,
            samples_per_class: 200,
            image_shape: TOY_IMAGE_SHAPE,
            signal_strength: 0.25,
            noise_level: 0.08,
            held_out_classes: vec![10, 11, 12, 13],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::validation("need at least two classes"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::validation("need at least one sample per class"));
        }
        if self.image_shape.len() == 0 {
            return Err(Error::validation("image shape has zero pixels"));
        }
        let mut sorted = self.held_out_classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.held_out_classes.len() {
            return Err(Error::validation("held-out class list contains duplicates"));
        }
        if sorted.iter().any(|&c| c >= self.num_classes) {
            return Err(Error::validation("held-out class index out of range"));
        }
        if self.held_out_classes.len() == 1 {
            return Err(Error::validation(
                "a single held-out class cannot form a zero-shot dataset (need >= 2)",
            ));
        }
        if self.num_classes - self.held_out_classes.len() < 2 {
            return Err(Error::validation("need at least two training classes"));
        }
        if !(self.signal_strength.is_finite() && self.signal_strength > 0.0) {
            return Err(Error::validation("signal strength must be positive"));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::validation("noise level must be non-negative"));
        }
        if self.image_shape.len() < self.num_classes {
            log::warn!(
                "image shape {} may be too small to carry {} distinguishable class patterns",
                self.image_shape,
                self.num_classes
            );
        }
        Ok(())
    }

    /// Indices of the classes that participate in training.
    pub fn train_classes(&self) -> Vec<usize> {
        (0..self.num_classes)
            .filter(|c| !self.held_out_classes.contains(c))
            .collect()
    }

    /// Canonical class name for a universe class index.
    pub fn class_name(index: usize) -> String {
        format!("class_{index:02}")
    }
}

/// Metadata describing a stored dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub id: String,
    pub class_names: Vec<String>,
    pub prompt_template: String,
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    pub image_shape: ImageShape,
    pub train_samples: usize,
    pub test_samples: usize,
    /// Hex sha-256 over class names and both splits' payload bytes.
    pub content_hash: String,
    /// Present when the dataset was synthesized in-repo.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_source: Option<SyntheticSpec>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::validation(format!("duplicate class name {name}")));
            }
        }
        if self.class_names.len() < 2 {
            return Err(Error::validation("dataset needs at least two classes"));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// An in-memory dataset split: images, labels and class metadata.
#[derive(Debug, Clone)]
pub struct TensorDataset<S> {
    pub id: String,
    pub class_names: Vec<String>,
    pub prompt_template: String,
    pub images: ImageBatch<S>,
    pub labels: Vec<u32>,
}

impl<S: Scalar> TensorDataset<S> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    fn validate(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::validation(format!("dataset {} is empty", self.id)));
        }
        if self.images.len() != self.labels.len() {
            return Err(Error::shape(format!(
                "dataset {}: {} images vs {} labels",
                self.id,
                self.images.len(),
                self.labels.len()
            )));
        }
        let c = self.class_names.len() as u32;
        if let Some(bad) = self.labels.iter().find(|&&l| l >= c) {
            return Err(Error::validation(format!(
                "dataset {}: label {bad} out of range for {c} classes",
                self.id
            )));
        }
        Ok(())
    }

    /// Per-sample digests of the pixel payload (f32 precision).
    pub fn sample_hashes(&self) -> Vec<[u8; 32]> {
        (0..self.len())
            .map(|i| {
                let mut hasher = Sha256::new();
                for &v in self.images.pixels().row(i) {
                    hasher.update(v.as_f32().to_le_bytes());
                }
                hasher.finalize().into()
            })
            .collect()
    }

    fn to_tensors(&self) -> Result<Vec<NamedTensor>> {
        let shape = self.images.shape();
        let pixels: Vec<f32> = self
            .images
            .pixels()
            .as_slice()
            .iter()
            .map(|&v| v.as_f32())
            .collect();
        Ok(vec![
            NamedTensor::new(
                "images",
                vec![
                    self.len() as u32,
                    shape.channels as u32,
                    shape.height as u32,
                    shape.width as u32,
                ],
                TensorPayload::F32(pixels),
            )?,
            NamedTensor::new("labels", vec![self.len() as u32], TensorPayload::U32(self.labels.clone()))?,
        ])
    }
}

/// Writes a dataset split as a tensor archive.
pub fn save_split<S: Scalar>(dataset: &TensorDataset<S>, path: &Path) -> Result<()> {
    write_archive(path, &dataset.to_tensors()?)
}

/// Loads a dataset split from a tensor archive, attaching manifest metadata.
pub fn load_split<S: Scalar>(
    manifest: &DatasetManifest,
    split: Split,
) -> Result<TensorDataset<S>> {
    let path = match split {
        Split::Train => &manifest.train_path,
        Split::Test => &manifest.test_path,
    };
    let tensors = read_archive(path)?;
    let images_t = tensors
        .iter()
        .find(|t| t.name == "images")
        .ok_or_else(|| Error::Format("archive has no 'images' tensor".into()))?;
    let labels_t = tensors
        .iter()
        .find(|t| t.name == "labels")
        .ok_or_else(|| Error::Format("archive has no 'labels' tensor".into()))?;

    if images_t.dims.len() != 4 {
        return Err(Error::Format(format!(
            "'images' tensor must be rank 4, got {}",
            images_t.dims.len()
        )));
    }
    let n = images_t.dims[0] as usize;
    let shape = ImageShape::new(
        images_t.dims[1] as usize,
        images_t.dims[2] as usize,
        images_t.dims[3] as usize,
    );
    if shape != manifest.image_shape {
        return Err(Error::shape(format!(
            "archive image shape {shape} differs from manifest {}",
            manifest.image_shape
        )));
    }
    let TensorPayload::F32(pix) = &images_t.payload else {
        return Err(Error::Format("'images' tensor must be f32".into()));
    };
    let TensorPayload::U32(labels) = &labels_t.payload else {
        return Err(Error::Format("'labels' tensor must be u32".into()));
    };
    let pixels: Vec<S> = pix.iter().map(|&v| S::of_f32(v)).collect();
    let dataset = TensorDataset {
        id: manifest.id.clone(),
        class_names: manifest.class_names.clone(),
        prompt_template: manifest.prompt_template.clone(),
        images: ImageBatch::new(shape, Mat::from_vec(n, shape.len(), pixels)?)?,
        labels: labels.clone(),
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Loads a split and verifies the manifest content hash over both splits.
pub fn load_split_verified<S: Scalar>(
    manifest: &DatasetManifest,
    split: Split,
) -> Result<TensorDataset<S>> {
    let train: TensorDataset<f32> = load_split(manifest, Split::Train)?;
    let test: TensorDataset<f32> = load_split(manifest, Split::Test)?;
    let actual = content_hash(&manifest.class_names, &train, &test);
    if actual != manifest.content_hash {
        return Err(Error::Corruption {
            offset: 0,
            reason: format!(
                "dataset {} content hash mismatch: manifest {}, payload {}",
                manifest.id, manifest.content_hash, actual
            ),
        });
    }
    load_split(manifest, split)
}

/// Hex sha-256 over class names, labels and pixel payloads of both splits.
pub fn content_hash<S: Scalar>(
    class_names: &[String],
    train: &TensorDataset<S>,
    test: &TensorDataset<S>,
) -> String {
    let mut hasher = Sha256::new();
    for name in class_names {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
    }
    for ds in [train, test] {
        for &v in ds.images.pixels().as_slice() {
            hasher.update(v.as_f32().to_le_bytes());
        }
        for &l in &ds.labels {
            hasher.update(l.to_le_bytes());
        }
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A synthesized dataset kept in memory: both splits plus metadata.
#[derive(Debug, Clone)]
pub struct SyntheticDataset<S> {
    pub id: String,
    pub class_names: Vec<String>,
    pub train: TensorDataset<S>,
    pub test: TensorDataset<S>,
    pub content_hash: String,
}

/// Everything `synthesize` produces: the training dataset plus the
/// held-out zero-shot dataset (when the spec reserves classes).
#[derive(Debug, Clone)]
pub struct SynthesizedUniverse<S> {
    pub spec: SyntheticSpec,
    pub train: SyntheticDataset<S>,
    pub heldout: Vec<SyntheticDataset<S>>,
}

/// Generates the class-conditional Gaussian-pattern universe.
///
/// Pixels are produced at f32 precision (the archive payload type) so the
/// in-memory data always equals what a save/load round trip would yield.
pub fn synthesize<S: Scalar>(spec: &SyntheticSpec) -> Result<SynthesizedUniverse<S>> {
    spec.validate()?;
    let patterns = synthetic::class_patterns(spec)?;

    let build = |classes: &[usize], tag: &str| -> Result<SyntheticDataset<S>> {
        let class_names: Vec<String> =
            classes.iter().map(|&c| SyntheticSpec::class_name(c)).collect();
        let mut splits = Vec::new();
        for split in ["train", "test"] {
            let n = classes.len() * spec.samples_per_class;
            let mut pixels: Vec<S> = Vec::with_capacity(n * spec.image_shape.len());
            let mut labels = Vec::with_capacity(n);
            for (local_idx, &class) in classes.iter().enumerate() {
                let mut rng = SeedStream::new(spec.seed)
                    .with_label("samples")
                    .with_label(split)
                    .with_index(class as u64)
                    .rng();
                for _ in 0..spec.samples_per_class {
                    for &p in patterns.row(class) {
                        let noisy =
                            p.as_f64() + spec.noise_level * next_gaussian(&mut rng);
                        // f32 is the storage precision; quantize at source.
                        pixels.push(S::of_f32(noisy.clamp(0.0, 1.0) as f32));
                    }
                    labels.push(local_idx as u32);
                }
            }
            let images = ImageBatch::new(
                spec.image_shape,
                Mat::from_vec(n, spec.image_shape.len(), pixels.clone())?,
            )?;
            splits.push(TensorDataset {
                id: format!("synth{}-{tag}", spec.seed),
                class_names: class_names.clone(),
                prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
                images,
                labels: labels.clone(),
            });
        }
        let test = splits.pop().expect("two splits");
        let train = splits.pop().expect("two splits");
        let content_hash = content_hash(&class_names, &train, &test);
        Ok(SyntheticDataset {
            id: train.id.clone(),
            class_names,
            train,
            test,
            content_hash,
        })
    };

    let train = build(&spec.train_classes(), "train")?;
    let heldout = if spec.held_out_classes.is_empty() {
        Vec::new()
    } else {
        vec![build(&spec.held_out_classes, "heldout")?]
    };
    Ok(SynthesizedUniverse { spec: spec.clone(), train, heldout })
}

/// Synthesizes and writes manifests plus archives under `dir`.
pub fn synthesize_to_dir(
    spec: &SyntheticSpec,
    dir: &Path,
) -> Result<(DatasetManifest, Vec<DatasetManifest>)> {
    let universe: SynthesizedUniverse<f32> = synthesize(spec)?;
    std::fs::create_dir_all(dir)?;

    let write_one = |ds: &SyntheticDataset<f32>| -> Result<DatasetManifest> {
        let train_path = dir.join(format!("{}_train.pmgt", ds.id));
        let test_path = dir.join(format!("{}_test.pmgt", ds.id));
        save_split(&ds.train, &train_path)?;
        save_split(&ds.test, &test_path)?;
        let manifest = DatasetManifest {
            id: ds.id.clone(),
            class_names: ds.class_names.clone(),
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
            train_path,
            test_path,
            image_shape: spec.image_shape,
            train_samples: ds.train.len(),
            test_samples: ds.test.len(),
            content_hash: ds.content_hash.clone(),
            synthetic_source: Some(spec.clone()),
        };
        manifest.save(&dir.join(format!("{}_manifest.json", ds.id)))?;
        Ok(manifest)
    };

    let train_manifest = write_one(&universe.train)?;
    let heldout_manifests: Vec<DatasetManifest> =
        universe.heldout.iter().map(write_one).collect::<Result<_>>()?;
    Ok((train_manifest, heldout_manifests))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_prompt_substitutes_single_placeholder() {
        assert_eq!(
            render_prompt("This is a photo of a {}", "dog").unwrap(),
            "This is a photo of a dog"
        );
        assert_eq!(render_prompt("{}", "x").unwrap(), "x");
        assert_eq!(render_prompt("a {} b", "cat").unwrap(), "a cat b");
    }

    #[test]
    fn render_prompt_rejects_zero_or_multiple_placeholders() {
        assert!(matches!(
            render_prompt("no placeholder", "x"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            render_prompt("{} and {}", "x"),
            Err(Error::Validation(_))
        ));
    }

    fn tiny_spec() -> SyntheticSpec {
        SyntheticSpec {
            seed: 42,
            num_classes: 6,
            samples_per_class: 20,
            image_shape: ImageShape::new(1, 8, 8),
            signal_strength: 0.25,
            noise_level: 0.05,
            held_out_classes: vec![4, 5],
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let a: SynthesizedUniverse<f64> = synthesize(&tiny_spec()).unwrap();
        let b: SynthesizedUniverse<f64> = synthesize(&tiny_spec()).unwrap();
        assert_eq!(a.train.content_hash, b.train.content_hash);
        assert_eq!(a.heldout[0].content_hash, b.heldout[0].content_hash);
        assert!(a.train.train.images.pixels().bit_eq(b.train.train.images.pixels()));
    }

    #[test]
    fn zero_noise_makes_same_class_images_identical() {
        let mut spec = tiny_spec();
        spec.noise_level = 0.0;
        let u: SynthesizedUniverse<f64> = synthesize(&spec).unwrap();
        let imgs = &u.train.train.images;
        let labels = &u.train.train.labels;
        for i in 1..imgs.len() {
            if labels[i] == labels[0] {
                assert_eq!(imgs.pixels().row(i), imgs.pixels().row(0));
            }
        }
    }

    #[test]
    fn heldout_classes_never_appear_in_train_manifest() {
        let u: SynthesizedUniverse<f64> = synthesize(&tiny_spec()).unwrap();
        for heldout in &u.heldout {
            for name in &heldout.class_names {
                assert!(!u.train.class_names.contains(name));
            }
        }
    }

    #[test]
    fn split_and_heldout_sample_hashes_are_disjoint() {
        let u: SynthesizedUniverse<f64> = synthesize(&tiny_spec()).unwrap();
        let train_hashes: std::collections::BTreeSet<_> =
            u.train.train.sample_hashes().into_iter().collect();
        for h in u.train.test.sample_hashes() {
            assert!(!train_hashes.contains(&h), "test sample leaked into train split");
        }
        for h in u.heldout[0].train.sample_hashes() {
            assert!(!train_hashes.contains(&h), "held-out sample leaked into train split");
        }
        for h in u.heldout[0].test.sample_hashes() {
            assert!(!train_hashes.contains(&h), "held-out sample leaked into train split");
        }
    }

    /// Least-squares probe fit in the test as an independent check that the
    /// generated classes are linearly separable at default signal strength.
    #[test]
    fn linear_probe_separates_classes() {
        let spec = SyntheticSpec {
            seed: 3,
            num_classes: 4,
            samples_per_class: 100,
            image_shape: ImageShape::new(1, 8, 8),
            signal_strength: 0.25,
            noise_level: 0.08,
            held_out_classes: vec![],
        };
        let u: SynthesizedUniverse<f64> = synthesize(&spec).unwrap();
        let ds = &u.train.train;
        let d = spec.image_shape.len();
        let n = ds.len();
        let c = ds.num_classes();

        // Ridge-regularized normal equations: (XᵀX + λI) W = Xᵀ Y.
        let x = ds.images.pixels();
        let mut xtx = vec![vec![0.0f64; d + 1]; d + 1];
        let mut xty = vec![vec![0.0f64; c]; d + 1];
        let feature = |row: &[f64], j: usize| if j < d { row[j] } else { 1.0 };
        for i in 0..n {
            let row = x.row(i);
            for a in 0..=d {
                let fa = feature(row, a);
                for b in 0..=d {
                    xtx[a][b] += fa * feature(row, b);
                }
                xty[a][ds.labels[i] as usize] += fa;
            }
        }
        for (a, row) in xtx.iter_mut().enumerate() {
            row[a] += 1e-3;
        }
        // Gaussian elimination with partial pivoting.
        let m = d + 1;
        for col in 0..m {
            let pivot = (col..m)
                .max_by(|&a, &b| xtx[a][col].abs().partial_cmp(&xtx[b][col].abs()).unwrap())
                .unwrap();
            xtx.swap(col, pivot);
            xty.swap(col, pivot);
            let diag = xtx[col][col];
            for r in 0..m {
                if r != col && xtx[r][col] != 0.0 {
                    let f = xtx[r][col] / diag;
                    for k in col..m {
                        xtx[r][k] -= f * xtx[col][k];
                    }
                    for k in 0..c {
                        xty[r][k] -= f * xty[col][k];
                    }
                }
            }
        }
        let weights: Vec<Vec<f64>> = (0..m)
            .map(|r| (0..c).map(|k| xty[r][k] / xtx[r][r]).collect())
            .collect();

        let mut correct = 0usize;
        for i in 0..n {
            let row = x.row(i);
            let mut best = (0usize, f64::NEG_INFINITY);
            for k in 0..c {
                let mut score = weights[d][k];
                for j in 0..d {
                    score += row[j] * weights[j][k];
                }
                if score > best.1 {
                    best = (k, score);
                }
            }
            if best.0 == ds.labels[i] as usize {
                correct += 1;
            }
        }
        let acc = correct as f64 / n as f64;
        assert!(acc > 0.9, "linear probe accuracy {acc}");
    }

    #[test]
    fn archive_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec();
        let (train_manifest, heldout_manifests) = synthesize_to_dir(&spec, dir.path()).unwrap();
        assert_eq!(heldout_manifests.len(), 1);

        let mem: SynthesizedUniverse<f64> = synthesize(&spec).unwrap();
        let loaded: TensorDataset<f64> =
            load_split_verified(&train_manifest, Split::Train).unwrap();
        assert!(loaded.images.pixels().bit_eq(mem.train.train.images.pixels()));
        assert_eq!(loaded.labels, mem.train.train.labels);
    }

    #[test]
    fn flipped_payload_byte_is_detected_via_content_hash() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, _) = synthesize_to_dir(&tiny_spec(), dir.path()).unwrap();
        let mut bytes = std::fs::read(&manifest.train_path).unwrap();
        // flip a mantissa bit well inside the f32 pixel payload: the file
        // stays structurally valid and only the hash can tell
        bytes[64] ^= 0x01;
        std::fs::write(&manifest.train_path, bytes).unwrap();
        match load_split_verified::<f64>(&manifest, Split::Train) {
            Err(Error::Corruption { .. }) => {}
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.pmgt");
        let tensors = vec![
            NamedTensor::new("images", vec![0, 1, 2, 2], TensorPayload::F32(vec![])).unwrap(),
            NamedTensor::new("labels", vec![0], TensorPayload::U32(vec![])).unwrap(),
        ];
        write_archive(&path, &tensors).unwrap();
        let manifest = DatasetManifest {
            id: "empty".into(),
            class_names: vec!["a".into(), "b".into()],
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
            train_path: path.clone(),
            test_path: path.clone(),
            image_shape: ImageShape::new(1, 2, 2),
            train_samples: 0,
            test_samples: 0,
            content_hash: String::new(),
            synthetic_source: None,
        };
        assert!(matches!(
            load_split::<f64>(&manifest, Split::Train),
            Err(Error::Validation(_))
        ));
    }
}
