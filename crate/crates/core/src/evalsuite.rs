//! Evaluation harness: clean/robust zero-shot accuracy, attack-strength
//! sweeps, parameter drift, and weight-interpolation trade-off curves.

use serde::{Deserialize, Serialize};

use crate::attack::Attack;
use crate::datasets::TensorDataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeding::SeedStream;
use crate::snapshot::ParameterSnapshot;
use crate::zeroshot::{build_text_matrix, classify, OneHotLabels, TwoTowerModel};

/// Evaluation batch size; results are row-independent so this only
/// affects attack seed derivation, never clean accuracy.
pub const EVAL_BATCH: usize = 256;

/// The perturbation bounds swept by default: 1/255, 2/255, 4/255.
pub const DEFAULT_SWEEP_EPSILONS: [f64; 3] = [1.0 / 255.0, 2.0 / 255.0, 4.0 / 255.0];

/// Rounds to the 4 decimal places used in reports.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Fraction of correctly classified clean inputs.
pub fn evaluate_clean<S: Scalar>(model: &TwoTowerModel<S>, dataset: &TensorDataset<S>) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::validation(format!("dataset {} is empty", dataset.id)));
    }
    let text = build_text_matrix(model, &dataset.class_names)?;
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..dataset.len()).collect();
    for chunk in indices.chunks(EVAL_BATCH) {
        let images = dataset.images.select(chunk);
        let probs = model.predict(&images, &text)?;
        for (pred, &idx) in classify(&probs).iter().zip(chunk) {
            if *pred == dataset.labels[idx] as usize {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Fraction of correctly classified inputs after a white-box attack on
/// this model with this dataset's text matrix. Attack seeds derive from
/// (run seed, dataset id, batch index).
pub fn evaluate_robust<S: Scalar>(
    model: &TwoTowerModel<S>,
    dataset: &TensorDataset<S>,
    attack: &dyn Attack<S>,
    seed: u64,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::validation(format!("dataset {} is empty", dataset.id)));
    }
    let text = build_text_matrix(model, &dataset.class_names)?;
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..dataset.len()).collect();
    for (batch_idx, chunk) in indices.chunks(EVAL_BATCH).enumerate() {
        let images = dataset.images.select(chunk);
        let classes: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i] as usize).collect();
        let labels = OneHotLabels::from_classes(&classes, dataset.num_classes())?;
        let batch_seed = SeedStream::new(seed)
            .with_label("eval_attack")
            .with_label(&dataset.id)
            .with_index(batch_idx as u64)
            .seed();
        let perturbed = attack.attack(model, &text, &images, &labels, batch_seed)?;
        let probs = model.predict(&perturbed.adversarial, &text)?;
        for (pred, cls) in classify(&probs).iter().zip(&classes) {
            if pred == cls {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// One dataset's results within a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub dataset_id: String,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
    pub attack: serde_json::Value,
    pub sample_count: usize,
    /// False for the training dataset (not a strict zero-shot test).
    pub zero_shot: bool,
}

/// Unweighted means over the rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalAggregate {
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
}

/// Where a report came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalProvenance {
    pub model_tag: String,
    pub seed: u64,
    /// Unix timestamp in seconds.
    pub timestamp: u64,
}

/// Full multi-dataset evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: EvalAggregate,
    pub provenance: EvalProvenance,
}

/// Options for [`zero_shot_suite`].
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub model_tag: String,
    /// Dataset id flagged as non-zero-shot (the training set, if present).
    pub train_dataset_id: Option<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, model_tag: "model".into(), train_dataset_id: None }
    }
}

/// Evaluates clean and robust accuracy per dataset plus unweighted
/// averages. Text matrices are rebuilt per dataset from that dataset's
/// own class names (the zero-shot protocol).
pub fn zero_shot_suite<S: Scalar>(
    model: &TwoTowerModel<S>,
    datasets: &[&TensorDataset<S>],
    attack: &dyn Attack<S>,
    opts: &SuiteOptions,
) -> Result<EvalReport> {
    if datasets.is_empty() {
        return Err(Error::validation("no datasets to evaluate"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for ds in datasets {
        if !seen.insert(ds.id.as_str()) {
            return Err(Error::validation(format!("duplicate dataset id {}", ds.id)));
        }
    }

    let mut rows = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let clean = evaluate_clean(model, ds)?;
        let robust = evaluate_robust(model, ds, attack, opts.seed)?;
        rows.push(EvalRow {
            dataset_id: ds.id.clone(),
            clean_accuracy: round4(clean),
            robust_accuracy: round4(robust),
            attack: attack.config_json(),
            sample_count: ds.len(),
            zero_shot: opts.train_dataset_id.as_deref() != Some(ds.id.as_str()),
        });
    }
    let aggregate = aggregate_rows(&rows);
    Ok(EvalReport {
        rows,
        aggregate,
        provenance: EvalProvenance {
            model_tag: opts.model_tag.clone(),
            seed: opts.seed,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    })
}

/// Unweighted arithmetic mean of the rows, exactly as stored.
pub fn aggregate_rows(rows: &[EvalRow]) -> EvalAggregate {
    let n = rows.len() as f64;
    EvalAggregate {
        clean_accuracy: rows.iter().map(|r| r.clean_accuracy).sum::<f64>() / n,
        robust_accuracy: rows.iter().map(|r| r.robust_accuracy).sum::<f64>() / n,
    }
}

/// Relative parameter drift `‖θ − θ₀‖₂ / ‖θ₀‖₂` over the concatenated
/// trainable segments, accumulated in f64.
pub fn relative_drift<S: Scalar>(
    current: &ParameterSnapshot<S>,
    reference: &ParameterSnapshot<S>,
) -> Result<f64> {
    current.check_same_layout(reference)?;
    let mut diff2 = 0.0f64;
    let mut ref2 = 0.0f64;
    for (c, r) in current.values().zip(reference.values()) {
        let (c, r) = (c.as_f64(), r.as_f64());
        diff2 += (c - r) * (c - r);
        ref2 += r * r;
    }
    if ref2 == 0.0 {
        return Err(Error::validation("reference snapshot has zero norm"));
    }
    Ok((diff2 / ref2).sqrt())
}

/// Elementwise `(1−λ)·θ₀ + λ·θ_ft` for λ in [0, 1].
pub fn interpolate<S: Scalar>(
    theta0: &ParameterSnapshot<S>,
    theta_ft: &ParameterSnapshot<S>,
    lambda: f64,
) -> Result<ParameterSnapshot<S>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::validation(format!("lambda {lambda} outside [0, 1]")));
    }
    theta0.check_same_layout(theta_ft)?;
    let l = S::of(lambda);
    let one_minus = S::one() - l;
    let segments = theta0
        .segments()
        .iter()
        .zip(theta_ft.segments())
        .map(|(a, b)| {
            let data = a
                .data
                .iter()
                .zip(&b.data)
                .map(|(&x, &y)| one_minus * x + l * y)
                .collect();
            crate::snapshot::Segment::new(a.name.clone(), a.dims.clone(), data)
        })
        .collect();
    Ok(ParameterSnapshot::new(format!("interp_{lambda}"), segments))
}

/// One point of the interpolation trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub lambda: f64,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
}

/// Average clean/robust accuracy over `datasets` for a model carrying the
/// given trainable parameters (per-dataset accuracies rounded like report
/// rows, then averaged).
pub fn evaluate_snapshot<S: Scalar>(
    template: &TwoTowerModel<S>,
    snapshot: &ParameterSnapshot<S>,
    datasets: &[&TensorDataset<S>],
    attack: &dyn Attack<S>,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut model = template.clone();
    model.load_trainable(snapshot)?;
    let mut clean_sum = 0.0;
    let mut robust_sum = 0.0;
    for ds in datasets {
        clean_sum += round4(evaluate_clean(&model, ds)?);
        robust_sum += round4(evaluate_robust(&model, ds, attack, seed)?);
    }
    let n = datasets.len() as f64;
    Ok((clean_sum / n, robust_sum / n))
}

/// Evaluates interpolated parameter sets along a λ grid.
pub fn tradeoff_curve<S: Scalar>(
    template: &TwoTowerModel<S>,
    theta0: &ParameterSnapshot<S>,
    theta_ft: &ParameterSnapshot<S>,
    lambdas: &[f64],
    datasets: &[&TensorDataset<S>],
    attack: &dyn Attack<S>,
    seed: u64,
) -> Result<Vec<TradeoffPoint>> {
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let snap = interpolate(theta0, theta_ft, lambda)?;
        let (clean, robust) = evaluate_snapshot(template, &snap, datasets, attack, seed)?;
        points.push(TradeoffPoint { lambda, clean_accuracy: clean, robust_accuracy: robust });
    }
    Ok(points)
}

/// The default λ grid 0.0, 0.1, …, 1.0.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// One row of an attack-strength sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
}

/// For each ε, obtains a model from `train` (which may fine-tune at that
/// ε or return a fixed model for eval-only sweeps) and evaluates it with
/// `eval` at the same ε — the matched train/test protocol.
pub fn strength_sweep<M, TF, EF>(
    mut train: TF,
    mut eval: EF,
    epsilons: &[f64],
) -> Result<Vec<SweepPoint>>
where
    TF: FnMut(f64) -> Result<M>,
    EF: FnMut(&M, f64) -> Result<(f64, f64)>,
{
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let model = train(eps)?;
        let (clean, robust) = eval(&model, eps)?;
        rows.push(SweepPoint { epsilon: eps, clean_accuracy: clean, robust_accuracy: robust });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// CSV plot tables
// ---------------------------------------------------------------------------

/// Header shared by trade-off and sweep tables.
pub const CURVE_CSV_HEADER: &str = "lambda_or_epsilon,method,clean_acc,robust_acc";

/// One row of a plottable curve table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub x: f64,
    pub method: String,
    pub clean_acc: f64,
    pub robust_acc: f64,
}

/// Ordered plot table with the shared 4-column layout.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn from_tradeoff(method: &str, points: &[TradeoffPoint]) -> Self {
        CurveTable {
            rows: points
                .iter()
                .map(|p| CurveRow {
                    x: p.lambda,
                    method: method.to_string(),
                    clean_acc: p.clean_accuracy,
                    robust_acc: p.robust_accuracy,
                })
                .collect(),
        }
    }

    pub fn from_sweep(method: &str, points: &[SweepPoint]) -> Self {
        CurveTable {
            rows: points
                .iter()
                .map(|p| CurveRow {
                    x: p.epsilon,
                    method: method.to_string(),
                    clean_acc: p.clean_accuracy,
                    robust_acc: p.robust_accuracy,
                })
                .collect(),
        }
    }

    pub fn extend(&mut self, other: CurveTable) {
        self.rows.extend(other.rows);
    }

    /// Renders the table; accuracies at 4 decimal places, x at full
    /// round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.4},{:.4}\n",
                row.x, row.method, row.clean_acc, row.robust_acc
            ));
        }
        out
    }

    /// Parses a table rendered by [`CurveTable::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == CURVE_CSV_HEADER => {}
            other => {
                return Err(Error::Format(format!(
                    "bad curve CSV header: {other:?}, expected {CURVE_CSV_HEADER:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Format(format!("line {}: expected 4 columns", i + 2)));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", i + 2)))
            };
            rows.push(CurveRow {
                x: parse(parts[0])?,
                method: parts[1].to_string(),
                clean_acc: parse(parts[2])?,
                robust_acc: parse(parts[3])?,
            });
        }
        Ok(CurveTable { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{AttackConfig, PgdAttack};
    use crate::datasets::{synthesize, SyntheticSpec};
    use crate::mat::{ImageBatch, ImageShape, Mat};
    use crate::snapshot::Segment;
    use crate::synthetic::{pretrained_toy_model, ToyModelConfig};
    use crate::zeroshot::{HashTextEncoder, LinearEncoder, ModelOptions};

    fn snap(values: &[f64]) -> ParameterSnapshot<f64> {
        ParameterSnapshot::new(
            "t",
            vec![Segment::new("w", vec![values.len()], values.to_vec())],
        )
    }

    #[test]
    fn relative_drift_identity_scaling_and_oracle() {
        let theta0 = snap(&[1.0, 2.0, -2.0]);
        assert_eq!(relative_drift(&theta0, &theta0).unwrap(), 0.0);

        let doubled = snap(&[2.0, 4.0, -4.0]);
        assert!((relative_drift(&doubled, &theta0).unwrap() - 1.0).abs() < 1e-12);

        let mut rng = SeedStream::new(2).rng();
        let a = crate::seeding::uniform_mat::<f64>(&mut rng, 1, 20, -1.0, 1.0);
        let b = crate::seeding::uniform_mat::<f64>(&mut rng, 1, 20, -1.0, 1.0);
        let sa = snap(a.as_slice());
        let sb = snap(b.as_slice());
        let mut diff2 = 0.0;
        let mut ref2 = 0.0;
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            diff2 += (x - y) * (x - y);
            ref2 += y * y;
        }
        let expect = (diff2 / ref2).sqrt();
        assert!((relative_drift(&sa, &sb).unwrap() - expect).abs() < 1e-6);

        let zero = snap(&[0.0, 0.0]);
        assert!(matches!(
            relative_drift(&snap(&[1.0, 1.0]), &zero),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn interpolation_endpoints_midpoint_and_layout() {
        let a = snap(&[0.0, 1.0, -3.0]);
        let b = snap(&[1.0, -1.0, 5.0]);
        assert!(interpolate(&a, &b, 0.0).unwrap().bit_eq(&a));
        assert!(interpolate(&a, &b, 1.0).unwrap().bit_eq(&b));
        let mid = interpolate(&a, &b, 0.5).unwrap();
        assert_eq!(
            mid.segments()[0].data,
            vec![0.5, 0.0, 1.0]
        );
        assert!(mid.same_layout(&a));
        assert!(interpolate(&a, &b, 1.5).is_err());
        assert!(interpolate(&a, &b, -0.1).is_err());
    }

    #[test]
    fn interpolation_drift_is_nondecreasing_along_the_path() {
        let mut rng = SeedStream::new(12).rng();
        let a = crate::seeding::uniform_mat::<f64>(&mut rng, 1, 30, 0.5, 1.5);
        let b = crate::seeding::uniform_mat::<f64>(&mut rng, 1, 30, -1.5, -0.5);
        let sa = snap(a.as_slice());
        let sb = snap(b.as_slice());
        let mut last = -1.0;
        for l in default_lambda_grid() {
            let p = interpolate(&sa, &sb, l).unwrap();
            let d = relative_drift(&p, &sa).unwrap();
            assert!(d >= last - 1e-12, "drift not monotone at lambda={l}");
            last = d;
        }
    }

    /// Basis-aligned toy: images are one-hot class indicators, the linear
    /// encoder is identity-like, and the text tower returns basis rows, so
    /// classification is perfect by construction.
    fn oracle_setup(n_per_class: usize) -> (TwoTowerModel<f64>, TensorDataset<f64>) {
        #[derive(Debug, Clone)]
        struct BasisText;
        impl TextEncoder<f64> for BasisText {
            fn dim(&self) -> usize {
                3
            }
            fn encode(&self, prompts: &[String]) -> Result<Mat<f64>> {
                // prompt order == class order in these tests
                let mut m = Mat::zeros(prompts.len(), 3);
                for i in 0..prompts.len() {
                    m[(i, i % 3)] = 1.0;
                }
                Ok(m)
            }
            fn checksum(&self) -> u64 {
                42
            }
            fn clone_box(&self) -> Box<dyn TextEncoder<f64>> {
                Box::new(self.clone())
            }
        }
        use crate::zeroshot::TextEncoder;

        let shape = ImageShape::new(1, 1, 3);
        let enc = LinearEncoder::from_weights(shape, Mat::identity(3)).unwrap();
        let model =
            TwoTowerModel::new(Box::new(enc), Box::new(BasisText), ModelOptions::default())
                .unwrap();
        let n = 3 * n_per_class;
        let mut pixels = Mat::zeros(n, 3);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 3;
            pixels[(i, class)] = 1.0;
            labels.push(class as u32);
        }
        let ds = TensorDataset {
            id: "oracle".into(),
            class_names: vec!["a".into(), "b".into(), "c".into()],
            prompt_template: "{}".into(),
            images: ImageBatch::new(shape, pixels).unwrap(),
            labels,
        };
        (model, ds)
    }

    #[test]
    fn perfect_classifier_scores_one() {
        let (model, ds) = oracle_setup(5);
        assert_eq!(evaluate_clean(&model, &ds).unwrap(), 1.0);
    }

    #[test]
    fn constant_model_scores_chance_on_balanced_sets() {
        let (_, ds) = oracle_setup(4);
        let shape = ImageShape::new(1, 1, 3);
        // zero weights: every image maps to the same embedding
        let enc = LinearEncoder::from_weights(shape, Mat::zeros(3, 3)).unwrap();
        let model = TwoTowerModel::new(
            Box::new(enc),
            Box::new(HashTextEncoder::new(1, 3)),
            ModelOptions::default(),
        )
        .unwrap();
        let acc = evaluate_clean(&model, &ds).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn clean_accuracy_matches_per_sample_count() {
        let spec = SyntheticSpec {
            seed: 31,
            num_classes: 4,
            samples_per_class: 12,
            image_shape: ImageShape::new(1, 6, 6),
            signal_strength: 0.25,
            noise_level: 0.2,
            held_out_classes: vec![],
        };
        let universe = synthesize::<f64>(&spec).unwrap();
        let ds = &universe.train.test;
        assert!(ds.len() <= 100);
        let model = pretrained_toy_model::<f64>(&spec, &ToyModelConfig::default()).unwrap();

        // brute-force oracle: classify one sample at a time and count
        let text = build_text_matrix(&model, &ds.class_names).unwrap();
        let mut correct = 0usize;
        for i in 0..ds.len() {
            let one = ds.images.select(&[i]);
            let probs = model.predict(&one, &text).unwrap();
            if classify(&probs)[0] == ds.labels[i] as usize {
                correct += 1;
            }
        }
        let oracle = correct as f64 / ds.len() as f64;
        assert_eq!(evaluate_clean(&model, ds).unwrap(), oracle);
    }

    #[test]
    fn zero_radius_attack_equals_clean_accuracy() {
        let (model, ds) = oracle_setup(3);
        let attack = PgdAttack(AttackConfig::pgd(0.0, 10, 5));
        let clean = evaluate_clean(&model, &ds).unwrap();
        let robust = evaluate_robust(&model, &ds, &attack, 5).unwrap();
        assert_eq!(clean, robust);
    }

    #[test]
    fn robust_evaluation_is_deterministic() {
        let spec = SyntheticSpec {
            seed: 8,
            num_classes: 3,
            samples_per_class: 10,
            image_shape: ImageShape::new(1, 5, 5),
            signal_strength: 0.25,
            noise_level: 0.05,
            held_out_classes: vec![],
        };
        let universe = synthesize::<f64>(&spec).unwrap();
        let model = pretrained_toy_model::<f64>(&spec, &ToyModelConfig::default()).unwrap();
        let attack = PgdAttack(AttackConfig::pgd(4.0 / 255.0, 5, 0));
        let a = evaluate_robust(&model, &universe.train.test, &attack, 7).unwrap();
        let b = evaluate_robust(&model, &universe.train.test, &attack, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn suite_aggregates_are_exact_row_means() {
        let spec = SyntheticSpec {
            seed: 23,
            num_classes: 6,
            samples_per_class: 8,
            image_shape: ImageShape::new(1, 5, 5),
            signal_strength: 0.25,
            noise_level: 0.05,
            held_out_classes: vec![4, 5],
        };
        let universe = synthesize::<f64>(&spec).unwrap();
        let model = pretrained_toy_model::<f64>(&spec, &ToyModelConfig::default()).unwrap();
        let attack = PgdAttack(AttackConfig::pgd(2.0 / 255.0, 3, 0));

        // singleton: aggregate equals the row
        let single = zero_shot_suite(
            &model,
            &[&universe.train.test],
            &attack,
            &SuiteOptions::default(),
        )
        .unwrap();
        assert_eq!(single.aggregate.clean_accuracy, single.rows[0].clean_accuracy);
        assert_eq!(single.aggregate.robust_accuracy, single.rows[0].robust_accuracy);

        // multiple datasets: recompute the mean from rows
        let opts = SuiteOptions {
            train_dataset_id: Some(universe.train.train.id.clone()),
            ..SuiteOptions::default()
        };
        let report = zero_shot_suite(
            &model,
            &[&universe.train.train, &universe.heldout[0].test],
            &attack,
            &opts,
        )
        .unwrap();
        let recomputed = aggregate_rows(&report.rows);
        assert_eq!(report.aggregate, recomputed);
        assert!(!report.rows[0].zero_shot);
        assert!(report.rows[1].zero_shot);

        // duplicate ids are rejected
        assert!(zero_shot_suite(
            &model,
            &[&universe.train.test, &universe.train.test],
            &attack,
            &SuiteOptions::default(),
        )
        .is_err());
    }

    #[test]
    fn curve_table_round_trips_through_csv() {
        let mut table = CurveTable::from_tradeoff(
            "pmg_aft",
            &[
                TradeoffPoint { lambda: 0.0, clean_accuracy: 0.9125, robust_accuracy: 0.5 },
                TradeoffPoint { lambda: 0.5, clean_accuracy: 0.8, robust_accuracy: 0.625 },
            ],
        );
        table.extend(CurveTable::from_sweep(
            "ft_tecoa",
            &[SweepPoint {
                epsilon: 1.0 / 255.0,
                clean_accuracy: 0.7004,
                robust_accuracy: 0.1231,
            }],
        ));
        let csv = table.to_csv();
        let back = CurveTable::parse_csv(&csv).unwrap();
        assert_eq!(table, back);
    }
}
