use sgn_core::layers::{load_checkpoint, save_checkpoint, SgnParams};
use sgn_core::training::{gradient_check, train_regression};
use sgn_core::{BlockShape, Dataset, Model, Sgn, SgnConfig, SpectralMode, TrainConfig};

fn wave(n: usize) -> Dataset<f64> {
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() + 0.5 * x).collect();
    Dataset::from_scalar(&xs, &ys).unwrap()
}

fn config(mode: SpectralMode) -> SgnConfig {
    let mut cfg = SgnConfig::new(BlockShape { d_in: 1, d_ff: 16, d_out: 1 }, 8);
    cfg.mode = mode;
    cfg.seed = 5;
    cfg
}

#[test]
fn training_reduces_loss_and_keeps_gradients_exact() {
    let data = wave(64);
    for mode in [SpectralMode::Gated, SpectralMode::FixedGate(0.1), SpectralMode::Additive, SpectralMode::PureSpectral] {
        let mut model = Sgn::from_config(&config(mode)).unwrap();
        let cfg = TrainConfig {
            epochs: 300,
            learning_rate: 1e-2,
            eval_every: 50,
            ..TrainConfig::default()
        };
        let report = train_regression(&mut model, &data, &data, &cfg, None).unwrap();
        let first = report.train_loss[0];
        assert!(report.final_train_mse < 0.1 * first, "{}: {first} -> {}", mode.name(), report.final_train_mse);
        assert_eq!(report.train_loss.len(), 301);
        let small = Dataset::from_scalar(&[-0.4, 0.1, 0.7], &[0.2, -0.1, 0.5]).unwrap();
        let check = gradient_check(&model, &small, 1e-5).unwrap();
        assert!(check.passed, "{}: {:e}", mode.name(), check.max_rel_error);
    }
}

#[test]
fn training_is_deterministic() {
    let data = wave(32);
    let cfg = TrainConfig {
        epochs: 40,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = Sgn::from_config(&config(SpectralMode::Gated)).unwrap();
        train_regression(&mut m, &data, &data, &cfg, None).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn single_precision_tracks_double() {
    let cfg = config(SpectralMode::Gated);
    let p64 = Sgn::from_config(&cfg).unwrap();
    let p32: SgnParams<f32> = SgnParams::from_config(&cfg).unwrap();
    for i in 0..21 {
        let x = -1.0 + 0.1 * i as f64;
        let a = p64.predict(&[x]).unwrap()[0];
        let b = p32.predict(&[x as f32]).unwrap()[0] as f64;
        assert!((a - b).abs() < 1e-4 * a.abs().max(1.0), "x={x}: {a} vs {b}");
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let mut model = Sgn::from_config(&config(SpectralMode::Gated)).unwrap();
    let data = wave(32);
    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    train_regression(&mut model, &data, &data, &cfg, None).unwrap();
    let path = std::env::temp_dir().join(format!("sgn-core-ckpt-{}.json", std::process::id()));
    save_checkpoint(&path, &model).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    std::fs::remove_file(&path).ok();
    for x in &data.inputs {
        assert_eq!(model.predict(x).unwrap(), loaded.predict(x).unwrap());
    }
}
