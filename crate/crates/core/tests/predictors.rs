use marginal_lds::linalg::Matrix;
use marginal_lds::predictors::{
    ar_features, ols_batch_solve, orr_regret_bound, run_online, ArConfig, ArLearner, OlsCheckpoint, OlsState,
};
use marginal_lds::systems::Trajectory;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn scalar_ridge_examples() {
    let mut st = OlsState::new(1, 1, 1.0).unwrap();
    st.update(&[1.0], &[1.0]).unwrap();
    assert_eq!(st.coefficients()[(0, 0)], 0.5);
    assert_eq!(st.predict(&[2.0]).unwrap(), vec![1.0]);
    st.update(&[1.0], &[1.0]).unwrap();
    st.update(&[1.0], &[1.0]).unwrap();
    assert!((st.coefficients()[(0, 0)] - 0.75).abs() < 1e-15);
}

#[test]
fn noiseless_scalar_stream_converges_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut st = OlsState::new(1, 1, 1.0).unwrap();
    let (mut prev, mut energy) = (0.0, 0.0);
    for t in 1..=100 {
        let x = if rng.random_bool(0.5) { 3.0 } else { -3.0 };
        st.update(&[x], &[0.5 * x]).unwrap();
        energy += x * x;
        let a = st.coefficients()[(0, 0)];
        let oracle = 0.5 * energy / (1.0 + energy);
        assert!((a - oracle).abs() < 1e-14, "t={t}");
        assert!(a >= prev);
        prev = a;
    }
    assert!((prev - 0.5).abs() < 1e-3);
}

#[test]
fn ar_feature_stacking() {
    let us: Vec<Vec<f64>> = (0..8).map(|t| vec![t as f64]).collect();
    let ys: Vec<Vec<f64>> = (0..8).map(|t| vec![(t * t) as f64]).collect();
    let cfg = ArConfig {
        ell: 3,
        input_dim: 1,
        obs_dim: 1,
    };
    assert_eq!(ar_features(&us, &ys, 5, &cfg).unwrap(), vec![5.0, 4.0, 3.0, 25.0, 16.0, 9.0]);
    let two = ArConfig { ell: 2, ..cfg };
    assert_eq!(ar_features(&us, &ys, 0, &two).unwrap(), vec![0.0, 0.0, 0.0, 0.0]);
}

fn observed(ys: Vec<Vec<f64>>) -> Trajectory {
    let n = ys.len() - 1;
    Trajectory {
        states: ys.clone(),
        inputs: vec![vec![]; n],
        process_noise: vec![vec![0.0]; n],
        observations: Some(ys),
        observation_noise: None,
    }
}

#[test]
fn lag_one_autoregression_is_plain_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ys: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
    let traj = observed(ys.clone());
    let cfg = ArConfig {
        ell: 1,
        input_dim: 0,
        obs_dim: 1,
    };
    let mut ar = ArLearner::new(cfg, 1.0).unwrap();
    let mut plain = OlsState::new(1, 1, 1.0).unwrap();
    for t in 0..199 {
        let p = ar.step(&traj, t).unwrap();
        assert_eq!(p, plain.predict(&ys[t]).unwrap());
        plain.update(&ys[t], &ys[t + 1]).unwrap();
    }
}

#[test]
fn rows_decompose() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut joint = OlsState::new(3, 2, 2.0).unwrap();
    let mut rows = [OlsState::new(3, 1, 2.0).unwrap(), OlsState::new(3, 1, 2.0).unwrap()];
    for _ in 0..300 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        joint.update(&x, &y).unwrap();
        for (i, r) in rows.iter_mut().enumerate() {
            r.update(&x, &y[i..=i]).unwrap();
        }
    }
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.coefficients().row(0), joint.coefficients().row(i));
    }
}

#[test]
fn checkpoint_resumes_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..600)
        .map(|_| {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            (x.clone(), vec![x[0] - 0.5 * x[1] + rng.random_range(-0.1..0.1)])
        })
        .collect();
    let mut st = OlsState::new(2, 1, 1.0).unwrap();
    for (x, y) in &data[..300] {
        st.update(x, y).unwrap();
    }
    let text = serde_json::to_string(&st.checkpoint()).unwrap();
    let cp: OlsCheckpoint = serde_json::from_str(&text).unwrap();
    let mut resumed = OlsState::restore(&cp).unwrap();
    for (x, y) in &data[300..] {
        st.update(x, y).unwrap();
        resumed.update(x, y).unwrap();
    }
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(st.coefficients()), bits(resumed.coefficients()));
    assert_eq!(st.t(), resumed.t());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orr_bound_holds_for_any_sequence(
        seed in any::<u64>(),
        m in 1usize..4,
        n in 1usize..3,
        horizon in 1usize..120,
        mu in 1.0f64..50.0,
        scale in 0.1f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..horizon).map(|_| (0..m).map(|_| rng.random_range(-scale..scale)).collect()).collect();
        let ys: Vec<Vec<f64>> = (0..horizon).map(|_| (0..n).map(|_| rng.random_range(-scale..scale)).collect()).collect();
        let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let comparator = Matrix::from_row_major(n, m, data).unwrap();
        let run = run_online(&xs, &ys, mu, Some(&comparator)).unwrap();
        let fro = comparator.frobenius_norm();
        let bound = orr_regret_bound(mu, fro * fro, run.max_err_sq, m, horizon, run.max_x_norm);
        prop_assert!(run.regret().unwrap() <= bound * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn recursive_equals_batch(seed in any::<u64>(), m in 1usize..7, mu in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = OlsState::new(m, m, mu).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..300 {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
            st.update(&x, &y).unwrap();
            xs.push(x);
            ys.push(y);
        }
        let batch = ols_batch_solve(&xs, &ys, m, m, mu).unwrap();
        prop_assert!(st.coefficients().max_abs_diff(&batch) <= 1e-8);
    }
}
