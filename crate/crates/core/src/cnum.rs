//! Dense complex linear algebra and sampling kernel.
//!
//! Matrices are stored column-major so that a predictor column is a
//! contiguous slice; everything the selectors do is column oriented.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Deterministic, seedable generator used everywhere randomness is drawn.
pub type Rng = ChaCha8Rng;

/// Relative pivot floor of the Hermitian factorization.
pub const PIVOT_EPS: f64 = 1e-12;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `index` of `master_seed`. Distinct indices select
/// distinct ChaCha streams, so children never overlap with each other or
/// with `seeded_rng(master_seed)`, which owns stream 0.
pub fn child_rng(master_seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// 64-bit seed derived from `(master_seed, index)`.
pub fn child_seed(master_seed: u64, index: u64) -> u64 {
    child_rng(master_seed, index).next_u64()
}

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Wraps column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns<C: AsRef<[Complex64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has {} rows, expected {rows}",
                    col.len()
                )));
            }
            data.extend_from_slice(col);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Builds a matrix from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "mul_vec: length mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (col, &vj) in self.columns().zip(v) {
            axpy(vj, col, &mut out);
        }
        out
    }

    /// `selfᴴ · v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows, "adjoint_mul_vec: length mismatch");
        self.columns().map(|col| dot_h(col, v)).collect()
    }

    /// `self · other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for col in other.columns() {
            data.extend(self.mul_vec(col));
        }
        ComplexMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        norm2(&self.data)
    }
}

/// `aᴴ b`.
#[inline]
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// `y += alpha · x`.
#[inline]
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mean(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}

/// i.i.d. circularly symmetric standard complex Gaussian draws,
/// `(g1 + i g2) / sqrt(2)`.
pub fn sample_complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    assert!(n >= 1, "sample_complex_gaussian: n must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// `n x cols` matrix of standard complex Gaussian entries, drawn column by column.
pub fn sample_complex_gaussian_matrix<R: rand::Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> ComplexMatrix {
    let data = sample_complex_gaussian(rng, rows * cols);
    ComplexMatrix { rows, cols, data }
}

/// `y - mean(y)`.
pub fn center(y: &[Complex64]) -> Vec<Complex64> {
    assert!(!y.is_empty(), "center: empty vector");
    let mu = mean(y);
    y.iter().map(|&v| v - mu).collect()
}

/// Centers every column and scales it to unit Euclidean norm.
pub fn standardize_columns(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        let col = out.col_mut(j);
        let magnitude = max_abs(col);
        let mu = mean(col);
        col.iter_mut().for_each(|v| *v -= mu);
        scale_to_unit(col, j, magnitude)?;
    }
    Ok(out)
}

/// Scales every column to unit Euclidean norm without centering.
pub fn normalize_columns(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    for j in 0..out.ncols() {
        let col = out.col_mut(j);
        let magnitude = max_abs(col);
        scale_to_unit(col, j, magnitude)?;
    }
    Ok(out)
}

fn max_abs(col: &[Complex64]) -> f64 {
    col.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn scale_to_unit(col: &mut [Complex64], index: usize, magnitude: f64) -> Result<()> {
    let norm = norm2(col);
    // spread at rounding level of the raw magnitude means the column was constant
    if !(norm > 0.0) || norm <= 1e-14 * magnitude * (col.len() as f64).sqrt() {
        return Err(Error::ConstantColumn { column: index });
    }
    col.iter_mut().for_each(|v| *v /= norm);
    Ok(())
}

/// Complex signum: `c / |c|`, and `0` at the origin.
pub fn csign(c: Complex64) -> Complex64 {
    let r = c.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        c / r
    }
}

/// Lower-triangular factor `L` of a Hermitian positive definite `G = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: ComplexMatrix,
}

impl Cholesky {
    /// Factorizes `g`. Only the lower triangle is read; a pivot at or below
    /// `PIVOT_EPS · trace(g) / dim` is rejected.
    pub fn new(g: &ComplexMatrix) -> Result<Self> {
        let dim = g.nrows();
        if g.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of a {}x{} matrix",
                dim,
                g.ncols()
            )));
        }
        let trace: f64 = (0..dim).map(|i| g.get(i, i).re).sum();
        let floor = PIVOT_EPS * trace.abs() / dim.max(1) as f64;
        let mut l = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut pivot = g.get(j, j).re;
            for k in 0..j {
                pivot -= l.get(j, k).norm_sqr();
            }
            if !(pivot > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let ljj = pivot.sqrt();
            l.set(j, j, Complex64::new(ljj, 0.0));
            for i in j + 1..dim {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(Self { factor: l })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Solves `L Lᴴ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let l = &self.factor;
        let n = self.dim();
        assert_eq!(b.len(), n, "cholesky solve: length mismatch");
        // forward: L z = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l.get(i, k) * b[k];
            }
            b[i] = s / l.get(i, i).re;
        }
        // backward: Lᴴ x = z
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l.get(k, i).conj() * b[k];
            }
            b[i] = s / l.get(i, i).re;
        }
    }
}

/// Solves `G X = B` for Hermitian positive definite `G` via its Cholesky
/// factor; `G` is never inverted explicitly.
pub fn hermitian_solve(g: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if g.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "system matrix has {} rows, right-hand side {}",
            g.nrows(),
            b.nrows()
        )));
    }
    let chol = Cholesky::new(g)?;
    let mut x = b.clone();
    for j in 0..x.ncols() {
        chol.solve_in_place(x.col_mut(j));
    }
    Ok(x)
}
