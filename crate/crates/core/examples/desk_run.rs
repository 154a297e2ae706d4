//! End-to-end desk-scale demo: synthesize a toy universe, fine-tune with
//! each method, and print drift plus zero-shot clean/robust accuracy.
//!
//! ```sh
//! cargo run --release -p pmgaft-core --example desk_run [seed] [lr] [epochs]
//! ```

use pmgaft_core::attack::{AttackConfig, PgdAttack};
use pmgaft_core::datasets::{synthesize, SyntheticSpec};
use pmgaft_core::evalsuite::{evaluate_clean, evaluate_robust};
use pmgaft_core::synthetic::{pretrained_toy_model, ToyModelConfig};
use pmgaft_core::trainer::{finetune, Method, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let tau: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let normalize: bool = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(false);
    let noise: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.08);
    let signal: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let eps: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(4.0 / 255.0);
    let alpha: f64 = args.get(9).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let beta: f64 = args.get(10).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let jitter: f64 = args.get(11).and_then(|s| s.parse().ok()).unwrap_or(0.05);

    let spec = SyntheticSpec {
        seed,
        noise_level: noise,
        signal_strength: signal,
        ..SyntheticSpec::default()
    };
    let universe = synthesize::<f64>(&spec).expect("synthesis");
    let toy_cfg = ToyModelConfig {
        init_jitter: jitter,
        options: pmgaft_core::zeroshot::ModelOptions {
            logit_scale: tau,
            normalize_embeddings: normalize,
            ..Default::default()
        },
        ..ToyModelConfig::default()
    };
    let pretrained = pretrained_toy_model::<f64>(&spec, &toy_cfg).expect("model");

    let eval_attack = PgdAttack(AttackConfig::pgd(eps, 10, 0));
    let heldout = &universe.heldout[0].test;
    let train_test = &universe.train.test;

    let base_clean = evaluate_clean(&pretrained, heldout).unwrap();
    let base_robust = evaluate_robust(&pretrained, heldout, &eval_attack, seed).unwrap();
    println!("pretrained   heldout clean {base_clean:.4} robust {base_robust:.4}");
    let tc = evaluate_clean(&pretrained, train_test).unwrap();
    let tr = evaluate_robust(&pretrained, train_test, &eval_attack, seed).unwrap();
    println!("pretrained   train   clean {tc:.4} robust {tr:.4}");

    for method in [Method::FtStandard, Method::FtTecoa, Method::PmgAft] {
        let started = std::time::Instant::now();
        let mut model = pretrained.clone();
        let mut cfg = TrainConfig::new(method, epochs, lr, seed);
        cfg.loss.prob_floor = 1e-12;
        cfg.loss.alpha = alpha;
        cfg.loss.beta = beta;
        cfg.batch_size = 128;
        cfg.attack = AttackConfig::train_default(eps, seed);
        let history = finetune(&mut model, &pretrained, &universe.train.train, &cfg).unwrap();
        if std::env::var("DESK_EPOCHS").is_ok() {
            for r in &history.records {
                println!(
                    "  {} epoch {:>2} loss {:>8.4} (r {:.4} g {:.4} c {:.4}) acc {:.3} drift {:.5}",
                    method.as_str(), r.epoch, r.loss.total, r.loss.robust, r.loss.general,
                    r.loss.clean, r.train_robust_accuracy, r.relative_drift
                );
            }
        }
        let drift = history.records.last().unwrap().relative_drift;
        let clean = evaluate_clean(&model, heldout).unwrap();
        let robust = evaluate_robust(&model, heldout, &eval_attack, seed).unwrap();
        let t_clean = evaluate_clean(&model, train_test).unwrap();
        let t_robust = evaluate_robust(&model, train_test, &eval_attack, seed).unwrap();
        println!(
            "{:<12} drift {drift:.5} heldout clean {clean:.4} robust {robust:.4} | train clean {t_clean:.4} robust {t_robust:.4} | loss {:.4} -> {:.4} | {:.1}s",
            method.as_str(),
            history.records.first().unwrap().loss.total,
            history.records.last().unwrap().loss.total,
            started.elapsed().as_secs_f64(),
        );
    }
}
