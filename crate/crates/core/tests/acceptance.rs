//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::time::Instant;

use marginal_lds::harness::{diagnose, DiagnoseOptions, Experiment, ExperimentConfig, ExperimentOutput};
use marginal_lds::kalman::{solve_dare, sufficient_length, tail_l1, time_varying_kf, unroll_filter};
use marginal_lds::linalg::Matrix;
use marginal_lds::predictors::{ols_batch_solve, orr_regret_bound, residual_closed_form, run_online, OlsState};
use marginal_lds::structural::{
    ch_noise_bound, ch_recurrence_residual, char_poly, check_volume_doubling, jordan_power_check, VolumeOptions,
};
use marginal_lds::systems::{
    simulate_full, simulate_partial, InitialState, InputPolicy, NoiseKind, SystemSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-8;
const BATCH_TOL: f64 = 1e-8;
const LOWER_BOUND_REL_TOL: f64 = 1e-9;
const DARE_TOL: f64 = 1e-10;
const RHO_TOL: f64 = 1e-6;
const GAIN_TOL: f64 = 1e-8;
const NOISELESS_CH_REL: f64 = 1e-6;
const SLOPE_ADVERSARIAL: f64 = 0.85;
const SLOPE_STOCHASTIC: f64 = 0.30;
const SLOPE_PARTIAL: f64 = 0.30;

struct Suite {
    failed: usize,
    /// `(checked, violated)` orr inequality counts across criteria 1, 2, 9.
    orr: (usize, usize),
}

impl Suite {
    fn report(&mut self, id: &str, pass: bool, detail: String, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        println!("{} {id}: {detail} ({secs:.2}s)", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }

    fn orr_check(&mut self, zs: &[Vec<f64>], ys: &[Vec<f64>], mu: f64, comparator: &Matrix) {
        let run = run_online(zs, ys, mu, Some(comparator)).unwrap();
        let fro = comparator.frobenius_norm();
        let bound = orr_regret_bound(mu, fro * fro, run.max_err_sq, zs[0].len(), zs.len(), run.max_x_norm);
        self.orr.0 += 1;
        if run.regret().unwrap() > bound * (1.0 + 1e-9) + 1e-9 {
            self.orr.1 += 1;
        }
    }

    fn orr_sweep(&mut self, out: &ExperimentOutput) {
        self.orr.0 += out.summary.orr.checked;
        self.orr.1 += out.summary.orr.violations;
    }
}

fn comparator(sys: &SystemSpec) -> Matrix {
    Matrix::hstack(&sys.a, &sys.b).unwrap()
}

fn residual_identity(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = rng.random_range(1..=4);
        let m = rng.random_range(0..=2);
        let horizon = rng.random_range(20..=300);
        let mu = rng.random_range(1.0..10.0);
        let sys = common::random_system(d, m, common::noise_kind(i, 0.5, d), &mut rng);
        let inputs = if m > 0 { InputPolicy::UniformBall { bound: 1.0 } } else { InputPolicy::Zero };
        let traj = simulate_full(&sys, &inputs, horizon, rng.random()).unwrap();
        let (zs, ys, xis) = common::regression_data(&traj);
        let ab = comparator(&sys);
        let mut st = OlsState::new(d + m, d, mu).unwrap();
        for t in 0..horizon {
            let direct: Vec<f64> = st.predict(&zs[t]).unwrap().iter().zip(&ys[t]).map(|(p, y)| p - y).collect();
            let closed = residual_closed_form(&zs[..t], &ys[..t], mu, &ab, &xis[..t], &zs[t], &xis[t]).unwrap();
            for (a, b) in direct.iter().zip(&closed) {
                worst = worst.max((a - b).abs());
            }
            st.update(&zs[t], &ys[t]).unwrap();
        }
        suite.orr_check(&zs, &ys, mu, &ab);
    }
    let elapsed = start.elapsed().as_secs_f64();
    suite.report(
        "1 residual identity",
        worst <= RESIDUAL_TOL && elapsed < 10.0,
        format!("max elementwise gap {worst:.3e} (tol {RESIDUAL_TOL:e}) over 100 instances, limit 10s"),
        start,
    );
}

fn recursive_batch(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let d = 1 + seed % 6;
        let sys = common::random_system(d, 0, common::noise_kind(seed + 1, 0.5, d), &mut rng);
        let traj = simulate_full(&sys, &InputPolicy::Zero, 500, rng.random()).unwrap();
        let (zs, ys, _) = common::regression_data(&traj);
        let mut st = OlsState::new(d, d, 1.0).unwrap();
        for t in 0..500 {
            st.update(&zs[t], &ys[t]).unwrap();
            let batch = ols_batch_solve(&zs[..=t], &ys[..=t], d, d, 1.0).unwrap();
            worst = worst.max(st.coefficients().max_abs_diff(&batch));
        }
        suite.orr_check(&zs, &ys, 1.0, &comparator(&sys));
    }
    let elapsed = start.elapsed().as_secs_f64();
    suite.report(
        "2 recursive/batch equivalence",
        worst <= BATCH_TOL && elapsed < 30.0,
        format!("max |A_rec - A_batch| {worst:.3e} (tol {BATCH_TOL:e}) over 20 seeds, t <= 500, limit 30s"),
        start,
    );
}

fn lower_bound(suite: &mut Suite) {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&common::config_path("lower-bound.json")).unwrap();
    let out = Experiment::new(&cfg).unwrap().run().unwrap();
    suite.orr_sweep(&out);
    let mut worst: f64 = 0.0;
    let mut seen = Vec::new();
    for h in &out.summary.horizons {
        let t2 = (h.horizon * h.horizon) as f64;
        worst = worst.max((h.mean_regret - t2).abs() / t2);
        seen.push(format!("T={} mean {}", h.horizon, h.mean_regret));
    }
    let horizons: Vec<usize> = out.summary.horizons.iter().map(|h| h.horizon).collect();
    suite.report(
        "4 lower bound",
        horizons == [1, 10, 100] && worst <= LOWER_BOUND_REL_TOL,
        format!("{}; max relative gap to T^2 {worst:.1e}", seen.join(", ")),
        start,
    );
}

fn golden_system() -> SystemSpec {
    let cfg = ExperimentConfig::load(&common::config_path("partial-golden-ratio.json")).unwrap();
    cfg.system.unwrap().build().unwrap()
}

fn noise_covariances(sys: &SystemSpec) -> (Matrix, Matrix) {
    match &sys.noise.kind {
        NoiseKind::Gaussian { sigma_x, sigma_y } => (sigma_x.clone(), sigma_y.clone().unwrap()),
        other => panic!("golden-ratio system has {other:?}"),
    }
}

fn kalman_golden(suite: &mut Suite) {
    let start = Instant::now();
    let one = Matrix::from_rows(&[[1.0]]);
    let kf = solve_dare(&one, &Matrix::zeros(1, 0), &one, &one, &one).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let rho_exact = (3.0 - 5f64.sqrt()) / 2.0;
    let p_err = (kf.p[(0, 0)] - phi).abs();
    let rho_err = (kf.rho - rho_exact).abs();

    let sys = golden_system();
    let (sx, sy) = noise_covariances(&sys);
    let traj = simulate_partial(&sys, &InputPolicy::Zero, 500, 5).unwrap();
    let run = time_varying_kf(&sys.a, &sys.b, sys.c.as_ref().unwrap(), &sx, &sy, &sx, &[0.0], &traj).unwrap();
    let gain_err = run.gains[500].max_abs_diff(&kf.k);
    suite.report(
        "5 kalman golden ratio",
        p_err <= DARE_TOL && rho_err <= RHO_TOL && gain_err <= GAIN_TOL,
        format!(
            "P = {} (err {p_err:.1e}), rho = {} (err {rho_err:.1e}), |K_500 - K| = {gain_err:.1e}",
            kf.p[(0, 0)],
            kf.rho
        ),
        start,
    );
}

fn sufficient_lengths(suite: &mut Suite) {
    let start = Instant::now();
    let one = Matrix::from_rows(&[[1.0]]);
    let kf = solve_dare(&one, &Matrix::zeros(1, 0), &one, &one, &one).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for eps in [1e-2, 1e-4] {
        let len = sufficient_length(&kf, eps).unwrap().length;
        let filter = unroll_filter(&kf, len + 200).unwrap();
        let tail = tail_l1(&filter, len);
        let analytic = (1.0 / eps).ln() / (1.0 / 0.382f64).ln();
        let ratio = len as f64 / analytic;
        pass &= tail <= eps && (1.0 / 3.0..=3.0).contains(&ratio);
        detail.push(format!("eps {eps:e}: R = {len}, tail {tail:.2e}, R/analytic {ratio:.2}"));
    }
    suite.report("6 sufficient length", pass, detail.join("; "), start);
}

fn structural_config(i: usize) -> String {
    let block = if i.is_multiple_of(2) {
        serde_json::json!({ "magnitude": 1.0, "phase": 0.3 + 0.25 * i as f64, "size": 1 })
    } else {
        serde_json::json!({ "magnitude": 1.0, "phase": 0.0, "size": 2 })
    };
    serde_json::json!({
        "setting": "full-stochastic",
        "horizons": [512],
        "seed": 40 + i,
        "system": {
            "kind": "jordan",
            "spec": { "blocks": [block], "condition": 1.0 + 0.1 * i as f64, "seed": i },
            "noise": { "kind": "bounded-iid", "bound": 1.0 + 2.0 * i as f64, "distribution": "uniform-ball", "seed": 100 + i },
            "initial_state": { "kind": if i % 4 < 2 { "random-sphere" } else { "zero" } }
        }
    })
    .to_string()
}

fn structural_suite(suite: &mut Suite) {
    let start = Instant::now();
    let mut problems = Vec::new();
    let (mut outliers, mut triggered, mut worst_ratio) = (0, 0, f64::INFINITY);
    for i in 0..20 {
        let cfg = ExperimentConfig::from_json(&structural_config(i)).unwrap();
        let exp = Experiment::new(&cfg).unwrap();
        let rep = diagnose(&exp, 512, 0, &DiagnoseOptions::default()).unwrap();
        problems.extend(rep.violations.iter().map(|v| format!("trajectory {i}: {v}")));
        if rep.char_poly.abs_sum > 4.0 * (1.0 + 1e-9) {
            problems.push(format!("trajectory {i}: coefficient sum {}", rep.char_poly.abs_sum));
        }
        let run = exp.predict(512, 0).unwrap();
        let jordan = jordan_power_check(&run.system.a, run.system.r, run.system.c_a, 10_000).unwrap();
        if !jordan.holds() {
            problems.push(format!("trajectory {i}: power ratio {}", jordan.worst_ratio));
        }
        let states = &run.trajectory.states;
        match &rep.outliers {
            Some(o) => {
                outliers += o.indices.len();
                for &s in &o.indices {
                    let rec = check_volume_doubling(&states[..s], &states[s], VolumeOptions::default()).unwrap();
                    if rec.exact && rec.doubling_triggered {
                        triggered += 1;
                        worst_ratio = worst_ratio.min(rec.ratio);
                        if rec.ratio < 2.0 {
                            problems.push(format!("trajectory {i}: doubling ratio {} at s={s}", rec.ratio));
                        }
                    }
                }
            }
            None if rep.max_state_norm >= 2.0 => problems.push(format!("trajectory {i}: outliers not computed")),
            None => {}
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        problems.push(format!("runtime {elapsed:.1}s"));
    }
    suite.report(
        "7 structural suite",
        problems.is_empty(),
        format!(
            "20 trajectories, {outliers} outliers, {triggered} triggered doublings (min ratio {worst_ratio:.3}), limit 300s{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
        start,
    );
}

fn cayley_hamilton(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut worst_clean, mut worst_noisy): (f64, f64) = (0.0, 0.0);
    for seed in 0..20 {
        let d = 1 + seed % 4;
        for noisy in [false, true] {
            let kind = if noisy { common::noise_kind(2, 1.0, d) } else { NoiseKind::Zero };
            let mut sys = common::random_system(d, 0, kind, &mut rng);
            sys.initial_state = InitialState::RandomSphere;
            let traj = simulate_full(&sys, &InputPolicy::Zero, 300, rng.random()).unwrap();
            let cp = char_poly(&sys.a).unwrap();
            let res = ch_recurrence_residual(&traj.states, cp.recurrence()).unwrap();
            let max_res = res.iter().copied().fold(0.0, f64::max);
            if noisy {
                worst_noisy = worst_noisy.max(max_res / ch_noise_bound(d, sys.c_a, 1.0));
            } else {
                worst_clean = worst_clean.max(max_res / traj.max_state_norm());
            }
        }
    }
    suite.report(
        "8 cayley-hamilton",
        worst_clean <= NOISELESS_CH_REL && worst_noisy <= 1.0,
        format!(
            "noiseless residual/max|x| {worst_clean:.2e} (tol {NOISELESS_CH_REL:e}), noisy residual/bound {worst_noisy:.3}"
        ),
        start,
    );
}

fn sweep(name: &str) -> ExperimentOutput {
    let cfg = ExperimentConfig::load(&common::config_path(name)).unwrap();
    Experiment::new(&cfg).unwrap().run().unwrap()
}

fn regret_exponents(suite: &mut Suite) {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, label, limit) in [
        ("full-adversarial-rotation.json", "a", SLOPE_ADVERSARIAL),
        ("full-stochastic-rotation.json", "b", SLOPE_STOCHASTIC),
        ("partial-golden-ratio.json", "c", SLOPE_PARTIAL),
    ] {
        let out = sweep(name);
        suite.orr_sweep(&out);
        let slope = out.summary.fit.map_or(f64::NAN, |f| f.slope);
        let ok = slope <= limit;
        pass &= ok;
        detail.push(format!("({label}) slope {slope:.3} (limit {limit})"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    suite.report(
        "9 regret exponents",
        pass && elapsed < 900.0,
        format!("{}, limit 900s", detail.join(", ")),
        start,
    );
}

fn orr_inequality(suite: &mut Suite) {
    let start = Instant::now();
    let structural = sweep("structural-rotation.json");
    suite.orr_sweep(&structural);
    let (checked, violated) = suite.orr;
    suite.report(
        "3 online least squares bound",
        checked > 0 && violated == 0,
        format!("{violated} violations in {checked} runs and sweep cells"),
        start,
    );
}

fn determinism(suite: &mut Suite) {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let mut differing = Vec::new();
    let configs = [
        "lower-bound.json",
        "full-adversarial-rotation.json",
        "full-stochastic-rotation.json",
        "partial-golden-ratio.json",
        "structural-rotation.json",
    ];
    for name in configs {
        let first = sweep(name).runs_csv();
        let second = pool.install(|| sweep(name).runs_csv());
        if first != second {
            differing.push(name);
        }
    }
    let cfg = ExperimentConfig::from_json(&structural_config(1)).unwrap();
    let diag = || {
        let exp = Experiment::new(&cfg).unwrap();
        diagnose(&exp, 512, 0, &DiagnoseOptions::default()).unwrap().anomaly.unwrap().to_csv()
    };
    if diag() != pool.install(diag) {
        differing.push("diagnostics");
    }
    suite.report(
        "10 determinism",
        differing.is_empty(),
        format!("{} configs and one diagnostics run rerun, differing: {differing:?}", configs.len()),
        start,
    );
}

fn main() {
    let mut suite = Suite { failed: 0, orr: (0, 0) };
    residual_identity(&mut suite);
    recursive_batch(&mut suite);
    lower_bound(&mut suite);
    kalman_golden(&mut suite);
    sufficient_lengths(&mut suite);
    structural_suite(&mut suite);
    cayley_hamilton(&mut suite);
    regret_exponents(&mut suite);
    orr_inequality(&mut suite);
    determinism(&mut suite);
    if suite.failed > 0 {
        println!("{} criteria failed", suite.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
