use ctrex_core::cnum::{center, child_rng, sample_complex_gaussian_matrix, standardize_columns};
use ctrex_core::{Complex64, ComplexMatrix, LarsState};
use ctrex_testkit::{real_lars_order, standardize};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Runs the complex path on data with zero imaginary parts and returns the
/// entrance order.
fn complex_order(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<usize> {
    let (n, p) = x.shape();
    let xc = ComplexMatrix::from_fn(n, p, |i, j| Complex64::new(x[(i, j)], 0.0));
    let yc: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut state = LarsState::new(&xc, yc, []).unwrap();
    while state.active().len() < p.min(n) {
        state.step().unwrap();
    }
    state.active().to_vec()
}

#[test]
fn real_embedding_matches_reference_lars() {
    let (n, p) = (30, 10);
    for seed in 0..50 {
        let mut rng = child_rng(1234, seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = DVector::from_fn(p, |j, _| if j % 3 == 0 { 1.0 + j as f64 * 0.2 } else { 0.0 });
        let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &x * beta + noise;

        let xs = standardize(&x);
        let yc = ctrex_testkit::center(&y);
        let reference = real_lars_order(&xs, &yc, p);
        assert_eq!(reference.len(), p, "seed {seed}");
        assert_eq!(complex_order(&xs, &yc), reference, "seed {seed}");
    }
}

#[test]
fn equal_correlation_holds_after_every_step() {
    let (n, p) = (30, 10);
    for seed in 0..50 {
        let mut rng = child_rng(99, seed);
        let x = standardize_columns(&sample_complex_gaussian_matrix(&mut rng, n, p)).unwrap();
        let y = center(&ctrex_core::cnum::sample_complex_gaussian(&mut rng, n));
        let mut state = LarsState::new(&x, y, []).unwrap();
        let mut prev_c = f64::INFINITY;
        while state.active().len() < p {
            let info = state.step().unwrap();
            assert!(info.max_corr < prev_c, "seed {seed}: maximal correlation must decrease");
            prev_c = info.max_corr;
            let corr = state.correlations();
            let c_hat = corr.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if state.active().len() == p {
                // the last step lands on the least-squares fit, where every
                // correlation vanishes up to round-off
                assert!(c_hat <= 1e-10 * info.max_corr, "seed {seed}: {c_hat}");
                break;
            }
            for &j in state.active() {
                let dev = (corr[j].norm() - c_hat).abs();
                assert!(dev <= 1e-8 * c_hat, "seed {seed}, column {j}: {dev} vs {c_hat}");
            }
        }
    }
}
