use divbench_core::pca::{fit_pca, project, reconstruct};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Anisotropic columns so eigenvalues are well separated.
    (0..n)
        .map(|_| (0..d).map(|j| rng.gen_range(-1.0..1.0) * (d - j) as f64).collect())
        .collect()
}

fn covariance_eigen(x: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let d = x[0].len();
    let m = DMatrix::from_fn(n, d, |i, j| x[i][j]);
    let means = m.row_mean();
    let c = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - means[j]);
    let cov = c.transpose() * &c / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn agrees_with_covariance_eigendecomposition() {
    for seed in 0..20 {
        let x = random_matrix(seed, 20, 5);
        let model = fit_pca(&x, 5).unwrap();
        let (vals, vecs) = covariance_eigen(&x);
        for k in 0..5 {
            assert!((model.explained_variance[k] - vals[k]).abs() < 1e-8 * vals[0]);
            // Directions agree up to sign.
            assert!((dot(&model.components[k], &vecs[k]).abs() - 1.0).abs() < 1e-8);
        }
        let total: f64 = model.explained_variance.iter().sum();
        assert!((total - model.total_variance).abs() < 1e-8 * total);
    }
}

#[test]
fn wide_matrix_uses_same_directions() {
    // More columns than rows.
    let x = random_matrix(99, 6, 12);
    let model = fit_pca(&x, 5).unwrap();
    let (vals, vecs) = covariance_eigen(&x);
    for k in 0..5 {
        assert!((model.explained_variance[k] - vals[k]).abs() < 1e-8 * vals[0]);
        assert!((dot(&model.components[k], &vecs[k]).abs() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn sign_convention_is_stable() {
    let x = random_matrix(5, 30, 4);
    let model = fit_pca(&x, 4).unwrap();
    for c in &model.components {
        let big = c.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(big > 0.0);
    }
}

proptest! {
    #[test]
    fn orthonormal_reconstructs_and_centers(seed in 0u64..1000, n in 3usize..25, d in 2usize..8) {
        let x = random_matrix(seed, n, d);
        let k = (n - 1).min(d);
        let model = fit_pca(&x, k).unwrap();
        for i in 0..k {
            for j in 0..k {
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(&model.components[i], &model.components[j]) - e).abs() < 1e-8);
            }
        }
        let z = project(&model, &x).unwrap();
        for c in 0..k {
            let m: f64 = z.iter().map(|r| r[c]).sum::<f64>() / n as f64;
            prop_assert!(m.abs() < 1e-8);
        }
        // Rank of centered data is at most n - 1, so k components suffice.
        let back = reconstruct(&model, &z);
        for (r, b) in x.iter().zip(&back) {
            for (a, bb) in r.iter().zip(b) {
                prop_assert!((a - bb).abs() < 1e-7);
            }
        }
        let ratio: f64 = model.explained_variance_ratio().iter().sum();
        prop_assert!(ratio <= 1.0 + 1e-9);
    }
}
