mod common;

use marginal_lds::error::Error;
use marginal_lds::harness::{
    choose_mu, exponent_fit, regret_full, regret_partial, steady_state_for, Experiment, ExperimentConfig, MuRule,
    Setting, StructuralConstants,
};
use marginal_lds::kalman::steady_state_predict;
use marginal_lds::linalg::Matrix;
use marginal_lds::systems::Trajectory;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SMALL: &str = r#"{
  "setting": "full-stochastic",
  "system": {
    "kind": "jordan",
    "spec": { "blocks": [{ "magnitude": 1.0, "phase": 1.0, "size": 1 }], "condition": 1.0, "seed": 0 },
    "noise": { "kind": "bounded-iid", "bound": 1.0, "distribution": "uniform-ball", "seed": 11 },
    "initial_state": { "kind": "random-sphere" }
  },
  "horizons": [64, 128, 256],
  "trials": 3,
  "seed": 4
}"#;

fn scalar_walk(states: Vec<f64>) -> Trajectory {
    let n = states.len() - 1;
    Trajectory {
        process_noise: states.windows(2).map(|w| vec![w[1] - w[0]]).collect(),
        states: states.into_iter().map(|x| vec![x]).collect(),
        inputs: vec![vec![]; n],
        observations: None,
        observation_noise: None,
    }
}

#[test]
fn full_regret_by_hand() {
    let traj = scalar_walk(vec![1.0, 2.0, 2.0, 3.0]);
    let preds = vec![vec![1.5], vec![2.5], vec![2.0]];
    let rec = regret_full(&traj, &preds, &Matrix::identity(1), &Matrix::zeros(1, 0)).unwrap();
    assert_eq!(rec.learner_losses, vec![0.25, 0.25, 1.0]);
    assert_eq!(rec.comparator_losses, vec![1.0, 0.0, 1.0]);
    assert_eq!(rec.cumulative, vec![-0.75, -0.5, -0.5]);
    assert_eq!(rec.regret, -0.5);
    assert_eq!(rec.max_pred_err, 1.0);
    assert!(regret_full(&traj, &preds[..2], &Matrix::identity(1), &Matrix::zeros(1, 0)).is_err());
}

#[test]
fn partial_regret_of_the_comparator_is_zero() {
    let cfg = ExperimentConfig::load(&common::config_path("partial-golden-ratio.json")).unwrap();
    let run = Experiment::new(&cfg).unwrap().predict(256, 1).unwrap();
    let kf = steady_state_for(&run.system).unwrap();
    let own = steady_state_predict(&kf, &run.trajectory, &[0.0]).unwrap();
    let rec = regret_partial(&run.trajectory, &own, &kf, &[0.0], 3).unwrap();
    assert_eq!(rec.regret, 0.0);
    assert_eq!(rec.start, 4);
    let empty = regret_partial(&run.trajectory, &run.predictions, &kf, &[0.0], 256).unwrap();
    assert!(empty.is_empty());
    assert_eq!(empty.regret, 0.0);
}

#[test]
fn regularizer_rules() {
    let m = |rule, s, t, r| choose_mu(rule, s, t, r, 2, None).unwrap();
    assert!((m(MuRule::Theorem, Setting::FullAdversarial, 65536, 1) - 65536f64.powf(0.75)).abs() < 1e-9);
    assert_eq!(m(MuRule::Theorem, Setting::FullStochastic, 65536, 3), 1.0);
    assert_eq!(m(MuRule::Explicit { value: 7.5 }, Setting::FullAdversarial, 10, 1), 7.5);
    assert!(choose_mu(MuRule::OlsRegret, Setting::OlsLowerBound, 100, 1, 1, None).is_err());
    let k = StructuralConstants {
        c1: 1.0,
        c2: 1.0,
        alpha: 0.0,
    };
    // α = 0, c1 = c2 = 1 gives m² T.
    let mu = choose_mu(MuRule::OlsRegret, Setting::OlsLowerBound, 100, 1, 3, Some(&k)).unwrap();
    assert!((mu - 900.0).abs() < 1e-9);
}

#[test]
fn config_errors_name_the_field() {
    let field_of = |text: &str| match ExperimentConfig::from_json(text) {
        Err(Error::Config { field, .. }) => field,
        other => panic!("expected a config error, got {other:?}"),
    };
    assert_eq!(field_of(&SMALL.replace("[64, 128, 256]", "[128, 64]")), "horizons");
    assert_eq!(field_of(&SMALL.replace("\"trials\": 3", "\"trials\": 0")), "trials");
    assert_eq!(field_of(&SMALL.replace("\"trials\": 3", "\"trials\": \"many\"")), "trials");
    assert_eq!(field_of(&SMALL.replace("\"seed\": 4", "\"seed\": 4, \"delta\": 2.0")), "delta");
    assert!(field_of(&SMALL.replace("uniform-ball", "hexagon")).starts_with("system"));
    assert_eq!(
        field_of(&SMALL.replace("\"seed\": 4", "\"seed\": 4, \"ell\": { \"rule\": \"explicit\", \"value\": 3 }")),
        "ell"
    );
}

#[test]
fn config_hash_ignores_output_directory() {
    let cfg = ExperimentConfig::from_json(SMALL).unwrap();
    let mut moved = cfg.clone();
    moved.out_dir = Some("elsewhere".into());
    assert_eq!(cfg.hash(), moved.hash());
    assert_eq!(cfg.hash().len(), 16);
    let mut reseeded = cfg.clone();
    reseeded.seed += 1;
    assert_ne!(cfg.hash(), reseeded.hash());
}

#[test]
fn experiment_runs_are_reproducible() {
    let cfg = ExperimentConfig::from_json(SMALL).unwrap();
    let a = Experiment::new(&cfg).unwrap().run().unwrap();
    let b = Experiment::new(&cfg).unwrap().run().unwrap();
    assert_eq!(a.runs_csv(), b.runs_csv());
    assert_eq!(a.cells.len(), 9);
    assert_eq!(a.exit_code(), 0);
    assert!(a.summary.fit.is_some());
    let csv = a.runs_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "config_hash,setting,T,trial,mu,ell,regret,max_pred_err,slope_group");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with(&format!("{},full-stochastic,64,0,", cfg.hash())));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_fit_recovers_noisy_power_laws(seed in any::<u64>(), slope in 0.0f64..1.5, scale in 0.1f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(f64, f64)> = (10..=14)
            .map(|k| {
                let t = 2f64.powi(k);
                (t, scale * t.powf(slope) * (1.0 + rng.random_range(-0.05..0.05)))
            })
            .collect();
        let fit = exponent_fit(&pairs).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 0.05, "fit {} vs {}", fit.slope, slope);
        prop_assert!(!fit.substituted);
    }
}
