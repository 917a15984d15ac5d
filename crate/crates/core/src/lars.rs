//! Complex terminating least angle regression.
//!
//! The selector walks the LARS path on a complex design: at every iteration
//! the inactive column with the largest correlation modulus joins the active
//! set, and the fit moves along the direction that keeps all active
//! correlation moduli equal. The walk terminates once a given number of
//! dummy columns has entered, and can later be resumed with a larger budget.

use std::sync::Arc;

use num_complex::Complex64;

use crate::cnum::{csign, dot_h, norm2, Cholesky, ComplexMatrix};
use crate::{Error, Result};

/// Leading coefficients below this are treated as a linear equation.
const QUADRATIC_EPS: f64 = 1e-14;

/// Inactive correlations this far below the initial maximum count as zero.
const EXHAUSTED_RTOL: f64 = 1e-12;

/// Column access to a design matrix.
pub trait Design: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn column(&self, j: usize) -> &[Complex64];

    /// `Xᴴ v`
    fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.ncols()).map(|j| dot_h(self.column(j), v)).collect()
    }
}

impl Design for ComplexMatrix {
    fn nrows(&self) -> usize {
        ComplexMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        ComplexMatrix::ncols(self)
    }

    fn column(&self, j: usize) -> &[Complex64] {
        self.col(j)
    }
}

impl<D: Design + ?Sized> Design for Arc<D> {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn column(&self, j: usize) -> &[Complex64] {
        (**self).column(j)
    }
}

impl<D: Design + ?Sized> Design for &D {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn column(&self, j: usize) -> &[Complex64] {
        (**self).column(j)
    }
}

/// Outcome of a terminated run: the original variables that entered, with
/// dummies stripped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateSet {
    /// Sorted indices of non-dummy variables in the active set.
    pub original_indices: Vec<usize>,
    /// `(index, is_dummy)` in order of entrance.
    pub entrance_order: Vec<(usize, bool)>,
    /// Number of dummies in the active set.
    pub terminal_t: usize,
}

/// Diagnostics of a single LARS iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub entered: usize,
    pub is_dummy: bool,
    /// Maximal correlation modulus at the start of the iteration.
    pub max_corr: f64,
    pub gamma: f64,
    /// Equiangular normalisation `(1ᵀ G⁻¹ 1)^(-1/2)`.
    pub equiangular_norm: f64,
}

/// Resumable state of one forward-selection path.
#[derive(Debug, Clone)]
pub struct LarsState<D> {
    design: D,
    y: Vec<Complex64>,
    is_dummy: Vec<bool>,
    beta: Vec<Complex64>,
    active: Vec<usize>,
    is_active: Vec<bool>,
    /// `x_aᴴ x_b` for active columns, in entrance order (lower triangle).
    gram: Vec<Vec<Complex64>>,
    residual: Vec<Complex64>,
    dummy_count: usize,
    iteration: usize,
    max_active: usize,
    initial_max_corr: Option<f64>,
    exhausted: bool,
}

impl<D: Design> LarsState<D> {
    /// Fresh state: zero coefficients, empty active set, residual `y`.
    ///
    /// `design` is expected to have standardized columns and `y` to be
    /// centered; neither is re-checked here.
    pub fn new(
        design: D,
        y: Vec<Complex64>,
        dummy_indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let (n, m) = (design.nrows(), design.ncols());
        if n != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has length {}",
                y.len()
            )));
        }
        let mut is_dummy = vec![false; m];
        for d in dummy_indices {
            if d >= m {
                return Err(Error::DimensionMismatch(format!(
                    "dummy index {d} out of range for {m} columns"
                )));
            }
            is_dummy[d] = true;
        }
        Ok(Self {
            residual: y.clone(),
            y,
            is_dummy,
            beta: vec![Complex64::new(0.0, 0.0); m],
            active: Vec::new(),
            is_active: vec![false; m],
            gram: Vec::new(),
            dummy_count: 0,
            iteration: 0,
            max_active: n.min(m),
            initial_max_corr: None,
            exhausted: false,
            design,
        })
    }

    /// Caps the active set size below `min(n, p + L)`, e.g. at `n - 1` for
    /// centered data whose rank is at most `n - 1`.
    pub fn with_max_active(mut self, limit: usize) -> Self {
        self.max_active = self.max_active.min(limit);
        self
    }

    pub fn design(&self) -> &D {
        &self.design
    }

    pub fn response(&self) -> &[Complex64] {
        &self.y
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.beta
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn residual(&self) -> &[Complex64] {
        &self.residual
    }

    pub fn dummy_count(&self) -> usize {
        self.dummy_count
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_dummy(&self, j: usize) -> bool {
        self.is_dummy[j]
    }

    /// No further iteration is possible.
    pub fn is_saturated(&self) -> bool {
        self.exhausted || self.active.len() >= self.max_active
    }

    /// Ends the path where it stands; later runs return the current candidates.
    pub fn halt(&mut self) {
        self.exhausted = true;
    }

    /// Current correlations `Xᴴ r`.
    pub fn correlations(&self) -> Vec<Complex64> {
        self.design.adjoint_mul_vec(&self.residual)
    }

    pub fn candidates(&self) -> CandidateSet {
        let mut original_indices: Vec<usize> = self
            .active
            .iter()
            .copied()
            .filter(|&j| !self.is_dummy[j])
            .collect();
        original_indices.sort_unstable();
        CandidateSet {
            original_indices,
            entrance_order: self.active.iter().map(|&j| (j, self.is_dummy[j])).collect(),
            terminal_t: self.dummy_count,
        }
    }

    /// One LARS iteration. On error the state is left untouched.
    pub fn step(&mut self) -> Result<StepInfo> {
        if self.is_saturated() {
            return Err(Error::PathSaturated);
        }
        let corr = self.correlations();

        // lowest index wins ties
        let mut entrant = None;
        let mut best = f64::NEG_INFINITY;
        for (j, c) in corr.iter().enumerate() {
            if !self.is_active[j] && c.norm() > best {
                best = c.norm();
                entrant = Some(j);
            }
        }
        let initial = *self.initial_max_corr.get_or_insert(best);
        let entrant = match entrant {
            Some(j) if best > EXHAUSTED_RTOL * initial && best > 0.0 => j,
            _ => {
                self.exhausted = true;
                return Err(Error::PathSaturated);
            }
        };
        let max_corr = self
            .active
            .iter()
            .map(|&j| corr[j].norm())
            .fold(best, f64::max);

        // raw inner products of the entrant with the active columns
        let x_new = self.design.column(entrant);
        let mut new_row: Vec<Complex64> = self
            .active
            .iter()
            .map(|&a| dot_h(x_new, self.design.column(a)))
            .collect();
        new_row.push(Complex64::new(norm2(x_new).powi(2), 0.0));

        let mut active = self.active.clone();
        active.push(entrant);
        let k = active.len();
        let signs: Vec<Complex64> = active.iter().map(|&j| csign(corr[j])).collect();

        // Gram of the sign-aligned active columns: conj(s_a) s_b x_aᴴ x_b
        let raw = |a: usize, b: usize| -> Complex64 {
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let v = if hi == k - 1 { new_row[lo] } else { self.gram[hi][lo] };
            if a >= b {
                v
            } else {
                v.conj()
            }
        };
        let aligned = ComplexMatrix::from_fn(k, k, |a, b| signs[a].conj() * signs[b] * raw(a, b));
        let chol = Cholesky::new(&aligned).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::SingularActiveSet { column: entrant },
            other => other,
        })?;
        let mut weights = vec![Complex64::new(1.0, 0.0); k];
        chol.solve_in_place(&mut weights);
        let ones_gram_ones: f64 = weights.iter().map(|w| w.re).sum();
        if !(ones_gram_ones > 0.0) || !ones_gram_ones.is_finite() {
            return Err(Error::SingularActiveSet { column: entrant });
        }
        let equiangular_norm = ones_gram_ones.powf(-0.5);

        // direction in user coordinates: d_j = s_j w_j
        let direction: Vec<Complex64> = weights
            .iter()
            .zip(&signs)
            .map(|(w, s)| s * w * equiangular_norm)
            .collect();
        let mut u = vec![Complex64::new(0.0, 0.0); self.y.len()];
        for (&j, &d) in active.iter().zip(&direction) {
            crate::cnum::axpy(d, self.design.column(j), &mut u);
        }
        let g = self.design.adjoint_mul_vec(&u);

        let mut in_active = self.is_active.clone();
        in_active[entrant] = true;
        let inactive: Vec<usize> = (0..in_active.len()).filter(|&j| !in_active[j]).collect();
        let gamma = compute_step_size(&corr, &g, max_corr, equiangular_norm, &inactive);

        // commit
        for (&j, &d) in active.iter().zip(&direction) {
            self.beta[j] += gamma * d;
        }
        for (r, ui) in self.residual.iter_mut().zip(&u) {
            *r -= gamma * ui;
        }
        self.gram.push(new_row);
        self.active = active;
        self.is_active = in_active;
        let is_dummy = self.is_dummy[entrant];
        if is_dummy {
            self.dummy_count += 1;
        }
        self.iteration += 1;

        Ok(StepInfo {
            entered: entrant,
            is_dummy,
            max_corr,
            gamma,
            equiangular_norm,
        })
    }

    /// Steps until `budget` dummies are active or the path saturates, then
    /// reports the candidate set. Calling again with a larger budget
    /// continues the same path.
    pub fn run(&mut self, budget: usize) -> Result<CandidateSet> {
        assert!(budget >= 1, "dummy budget must be at least 1");
        while !self.is_saturated() && self.dummy_count < budget {
            match self.step() {
                Ok(_) | Err(Error::PathSaturated) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(self.candidates())
    }
}

/// LARS step length along the equiangular direction.
///
/// For each inactive `j`, finds the smallest positive root of
/// `|c_j - γ g_j|² = (c_max - γ L)²`, i.e. the point where its correlation
/// modulus catches up with the shrinking active one, and returns the
/// minimum. Falls back to the full-fit step `c_max / L`.
pub fn compute_step_size(
    corr: &[Complex64],
    g: &[Complex64],
    max_corr: f64,
    equiangular_norm: f64,
    inactive: &[usize],
) -> f64 {
    let cap = max_corr / equiangular_norm;
    inactive
        .iter()
        .filter_map(|&j| {
            let (c, gj) = (corr[j], g[j]);
            let quad = gj.norm_sqr() - equiangular_norm * equiangular_norm;
            let half_lin = (c.conj() * gj).re - max_corr * equiangular_norm;
            let constant = c.norm_sqr() - max_corr * max_corr;
            smallest_positive_root(quad, half_lin, constant)
        })
        .filter(|&root| root <= cap)
        .fold(cap, f64::min)
}

/// Smallest positive root of `a γ² - 2 b γ + c = 0`.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let positive = |r: f64| (r > 0.0 && r.is_finite()).then_some(r);
    if a.abs() < QUADRATIC_EPS {
        return if b == 0.0 { None } else { positive(c / (2.0 * b)) };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let q = b + b.signum() * disc.sqrt();
    let r1 = positive(q / a);
    let r2 = if q != 0.0 { positive(c / q) } else { None };
    match (r1, r2) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}
