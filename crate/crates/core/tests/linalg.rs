use marginal_lds::linalg::{
    operator_norm, rank_one_inverse_update, solve_spd, spectral_radius_estimate, sym_eig, Lu, Matrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = random_matrix(n, n, rng);
    let mut s = &g.transpose() * &g;
    s.add_scaled(0.5, &Matrix::identity(n));
    s
}

#[test]
fn spd_solve_multiplies_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let m = random_spd(5, &mut rng);
        let b: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = solve_spd(&m, &b).unwrap();
        let back = m.mul_vec(&x).unwrap();
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }
    let x = solve_spd(&Matrix::from_diag(&[2.0, 2.0]), &[2.0, 4.0]).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
}

#[test]
fn rank_one_update_matches_direct_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let sigma = random_spd(4, &mut rng);
        let p = Lu::new(&sigma).unwrap().inverse();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut bumped = sigma.clone();
        bumped.add_outer(1.0, &x, &x);
        let direct = Lu::new(&bumped).unwrap().inverse();
        assert!(rank_one_inverse_update(&p, &x).max_abs_diff(&direct) < 1e-9);
    }
    let p = rank_one_inverse_update(&Matrix::identity(2), &[1.0, 0.0]);
    assert!(p.max_abs_diff(&Matrix::from_diag(&[0.5, 1.0])) < 1e-15);
}

/// Largest singular value of a 2×2 matrix from its Gram invariants.
fn svd2_max(m: &Matrix) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let fro = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    ((fro + (fro * fro - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

#[test]
fn operator_norm_against_closed_form() {
    let j3 = Matrix::from_rows(&[[1.0, 3.0], [0.0, 1.0]]);
    assert!((operator_norm(&j3) - svd2_max(&j3)).abs() < 1e-12);
    assert!((operator_norm(&j3) - 3.3028).abs() < 1e-4);
    assert!((operator_norm(&Matrix::from_rows(&[[0.0, 3.0], [0.0, 0.0]])) - 3.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let m = random_matrix(2, 2, &mut rng);
        assert!((operator_norm(&m) - svd2_max(&m)).abs() < 1e-12);
    }
}

#[test]
fn symmetric_eigen_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let g = random_matrix(6, 6, &mut rng);
        let mut s = &g + &g.transpose();
        s.symmetrize();
        let eig = sym_eig(&s).unwrap();
        assert!(eig.reconstruct().max_abs_diff(&s) < 1e-9);
    }
    let swap = sym_eig(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
    let mut vals = swap.values.clone();
    vals.sort_by(f64::total_cmp);
    assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
}

#[test]
fn spectral_radius_examples() {
    let r = spectral_radius_estimate(&Matrix::from_diag(&[0.5, 0.2]), 256).unwrap();
    assert!((r - 0.5).abs() < 1e-3);
    let (s, c) = std::f64::consts::FRAC_PI_4.sin_cos();
    let rot = Matrix::from_rows(&[[c, -s], [s, c]]);
    assert!((spectral_radius_estimate(&rot, 256).unwrap() - 1.0).abs() < 1e-6);
    let scalar = spectral_radius_estimate(&Matrix::from_rows(&[[0.382]]), 512).unwrap();
    assert!((scalar - 0.382).abs() < 1e-6);
}

proptest! {
    #[test]
    fn operator_norm_between_column_and_frobenius(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(n, n, &mut rng);
        let nrm = operator_norm(&m);
        let max_col = (0..n).map(|j| m.col(j).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!(nrm >= max_col * (1.0 - 1e-10));
        prop_assert!(nrm <= m.frobenius_norm() * (1.0 + 1e-10));
    }

    #[test]
    fn rank_one_update_stays_symmetric(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Lu::new(&random_spd(n, &mut rng)).unwrap().inverse();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let q = rank_one_inverse_update(&p, &x);
        prop_assert!(q.max_asymmetry() <= 1e-9 * (1.0 + q.max_abs()));
        prop_assert!(rank_one_inverse_update(&p, &vec![0.0; n]).max_abs_diff(&p) <= 1e-15 * p.max_abs());
    }

    #[test]
    fn eigenvectors_are_orthonormal(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_spd(n, &mut rng);
        let eig = sym_eig(&s).unwrap();
        let v = &eig.vectors;
        prop_assert!((&v.transpose() * v).max_abs_diff(&Matrix::identity(n)) < 1e-9);
        prop_assert!(eig.values.iter().all(|&l| l > 0.0));
    }
}
