//! Independent real-valued reference code for checking the complex solvers.
//!
//! Everything here works on `nalgebra` matrices of `f64` and shares no code
//! with the library under test.

use nalgebra::{DMatrix, DVector};

/// Centers every column and scales it to unit Euclidean norm.
pub fn standardize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        col /= norm;
    }
    out
}

pub fn center(y: &DVector<f64>) -> DVector<f64> {
    y.add_scalar(-y.mean())
}

/// One step of the textbook real LARS path.
#[derive(Debug, Clone)]
pub struct RealLarsStep {
    pub entered: usize,
    /// Largest absolute correlation before the step.
    pub max_corr: f64,
    pub gamma: f64,
}

/// Textbook LARS on a real design with columns assumed standardized. Runs
/// until `steps` variables are active or the path ends and returns the
/// steps in entrance order.
///
/// The step length comes from the classical two-sided formula
/// `min+ {(C - c_j)/(A - a_j), (C + c_j)/(A + a_j)}`.
pub fn real_lars(x: &DMatrix<f64>, y: &DVector<f64>, steps: usize) -> Vec<RealLarsStep> {
    let (n, p) = x.shape();
    let steps = steps.min(p).min(n);
    let mut mu = DVector::<f64>::zeros(n);
    let mut active: Vec<usize> = Vec::new();
    let mut out = Vec::new();

    let c0 = x.tr_mul(y);
    let first = (0..p)
        .max_by(|&a, &b| c0[a].abs().total_cmp(&c0[b].abs()).then(b.cmp(&a)))
        .expect("non-empty design");
    let mut next = first;

    while active.len() < steps {
        active.push(next);
        let c = x.tr_mul(&(y - &mu));
        let big_c = active.iter().map(|&j| c[j].abs()).fold(0.0, f64::max);

        let k = active.len();
        let mut xa = DMatrix::<f64>::zeros(n, k);
        for (col, &j) in active.iter().enumerate() {
            let s = c[j].signum();
            xa.set_column(col, &(x.column(j) * s));
        }
        let gram = xa.tr_mul(&xa);
        let ones = DVector::<f64>::from_element(k, 1.0);
        let ginv1 = gram
            .clone()
            .cholesky()
            .expect("active Gram is positive definite")
            .solve(&ones);
        let a_norm = 1.0 / ones.dot(&ginv1).sqrt();
        let w = ginv1 * a_norm;
        let u = &xa * w;
        let a = x.tr_mul(&u);

        let mut gamma = big_c / a_norm;
        let mut enter = None;
        for j in 0..p {
            if active.contains(&j) {
                continue;
            }
            for cand in [
                (big_c - c[j]) / (a_norm - a[j]),
                (big_c + c[j]) / (a_norm + a[j]),
            ] {
                if cand > 1e-12 && cand < gamma {
                    gamma = cand;
                    enter = Some(j);
                }
            }
        }
        out.push(RealLarsStep {
            entered: *active.last().unwrap(),
            max_corr: big_c,
            gamma,
        });
        mu += u * gamma;
        match enter {
            Some(j) => next = j,
            None => break,
        }
    }
    out
}

/// Entrance order of [`real_lars`].
pub fn real_lars_order(x: &DMatrix<f64>, y: &DVector<f64>, steps: usize) -> Vec<usize> {
    real_lars(x, y, steps).into_iter().map(|s| s.entered).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_design_enters_by_correlation() {
        // Orthonormal columns: LARS enters in decreasing |x_j' y|.
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![0.5, -3.0, 1.0, 7.0]);
        assert_eq!(real_lars_order(&x, &y, 3), vec![1, 2, 0]);
    }

    #[test]
    fn max_corr_decreases_along_path() {
        let x = DMatrix::from_fn(8, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + (i * j) as f64 * 0.1);
        let x = standardize(&x);
        let y = center(&DVector::from_fn(8, |i, _| (i as f64).sin()));
        let steps = real_lars(&x, &y, 3);
        assert_eq!(steps.len(), 3);
        assert!(steps.windows(2).all(|w| w[1].max_corr <= w[0].max_corr + 1e-12));
    }
}
