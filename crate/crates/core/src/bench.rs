//! Benchmark scenarios: complex sparse linear regression and single-snapshot
//! compressed-beamforming DOA estimation, plus per-trial metrics and a seeded
//! Monte-Carlo driver.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnum::{child_seed, sample_complex_gaussian, sample_complex_gaussian_matrix, seeded_rng, ComplexMatrix};
use crate::trex::{select_with, Preprocessing, TRexConfig};
use crate::{Error, Result};

/// Relative tolerance for grid arithmetic in degrees.
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScenario {
    pub p: usize,
    pub n: usize,
    /// Number of non-zero coefficients.
    pub s: usize,
    /// Linear signal-to-noise ratio.
    pub snr: f64,
    pub seed: u64,
    /// Replaces the SNR-derived noise variance when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
}

impl RegressionScenario {
    pub fn new(p: usize, n: usize, s: usize, snr: f64, seed: u64) -> Self {
        Self {
            p,
            n,
            s,
            snr,
            seed,
            noise_variance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s >= self.p {
            return Err(Error::InvalidConfig(format!(
                "sparsity must satisfy 0 < s < p, got s = {}, p = {}",
                self.s, self.p
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("need n >= 2, got {}", self.n)));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::InvalidConfig(format!("SNR must be positive, got {}", self.snr)));
        }
        if let Some(v) = self.noise_variance {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig(format!("noise variance {v} is negative")));
            }
        }
        Ok(())
    }

    /// `sigma² = s / snr`: unit-variance predictors and unit-modulus
    /// coefficients give a per-sample signal power of `s`.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance.unwrap_or(self.s as f64 / self.snr)
    }
}

#[derive(Debug, Clone)]
pub struct RegressionData {
    pub x: ComplexMatrix,
    pub y: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    /// Sorted indices of the non-zero coefficients.
    pub support: Vec<usize>,
    pub noise: Vec<Complex64>,
}

/// Draws `y = X β + ε` with i.i.d. standard complex Gaussian `X`, `s`
/// unit-modulus coefficients with uniform phase at uniformly drawn
/// positions, and complex Gaussian noise.
pub fn gen_sparse_regression(sc: &RegressionScenario) -> Result<RegressionData> {
    sc.validate()?;
    let mut rng = seeded_rng(sc.seed);
    let x = sample_complex_gaussian_matrix(&mut rng, sc.n, sc.p);
    let mut support = sample_indices(&mut rng, sc.p, sc.s).into_vec();
    support.sort_unstable();
    let mut beta = vec![Complex64::new(0.0, 0.0); sc.p];
    for &j in &support {
        beta[j] = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    }
    let sigma = sc.noise_variance().sqrt();
    let noise: Vec<Complex64> = sample_complex_gaussian(&mut rng, sc.n)
        .into_iter()
        .map(|e| e * sigma)
        .collect();
    let mut y = x.mul_vec(&beta);
    for (v, e) in y.iter_mut().zip(&noise) {
        *v += e;
    }
    Ok(RegressionData {
        x,
        y,
        beta,
        support,
        noise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaScenario {
    /// Number of array elements.
    pub sensors: usize,
    /// Angular grid spacing in degrees.
    pub grid_resolution: f64,
    /// Source directions in degrees, on the grid.
    pub source_angles: Vec<f64>,
    pub source_powers: Vec<f64>,
    pub snr_db: f64,
    pub seed: u64,
}

impl DoaScenario {
    pub fn validate(&self) -> Result<()> {
        let q = self.source_angles.len();
        if q != self.source_powers.len() {
            return Err(Error::InvalidConfig(format!(
                "{q} source angles but {} powers",
                self.source_powers.len()
            )));
        }
        if q == 0 || q >= self.sensors {
            return Err(Error::InvalidConfig(format!(
                "need 0 < sources < sensors, got {q} sources and {} sensors",
                self.sensors
            )));
        }
        if self.source_powers.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("source powers must be positive".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig("SNR must be finite".into()));
        }
        let grid_len = grid_size(self.grid_resolution)?;
        let mut seen = BTreeSet::new();
        for &theta in &self.source_angles {
            if !seen.insert(grid_index(theta, self.grid_resolution, grid_len)?) {
                return Err(Error::InvalidConfig(format!("duplicate source direction {theta}")));
            }
        }
        Ok(())
    }

    /// `sigma² = (Σ η_q / M) / 10^(snr_db / 10)`: with unit-norm steering
    /// vectors each sensor receives `Σ η_q / M` signal power.
    pub fn noise_variance(&self) -> f64 {
        let total: f64 = self.source_powers.iter().sum();
        total / self.sensors as f64 / 10f64.powf(self.snr_db / 10.0)
    }
}

/// Unit-norm ULA steering vector with half-wavelength spacing:
/// `a_m = exp(i π m sin θ) / sqrt(M)`.
pub fn steering_vector(theta_deg: f64, sensors: usize) -> Vec<Complex64> {
    let scale = 1.0 / (sensors as f64).sqrt();
    let phase = PI * theta_deg.to_radians().sin();
    (0..sensors)
        .map(|m| Complex64::from_polar(scale, phase * m as f64))
        .collect()
}

fn grid_size(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidGrid(resolution));
    }
    let g = (180.0 / resolution).round();
    if g < 1.0 || (g * resolution - 180.0).abs() > GRID_TOL * 180.0 {
        return Err(Error::InvalidGrid(resolution));
    }
    Ok(g as usize)
}

fn grid_index(theta_deg: f64, resolution: f64, grid_len: usize) -> Result<usize> {
    let pos = (theta_deg + 90.0) / resolution;
    let idx = pos.round();
    if !(-90.0..90.0).contains(&theta_deg)
        || (idx - pos).abs() > GRID_TOL * pos.abs().max(1.0)
        || idx < 0.0
        || idx as usize >= grid_len
    {
        return Err(Error::OffGridSource(theta_deg));
    }
    Ok(idx as usize)
}

/// Grid column of a source direction on the grid of the given resolution.
pub fn grid_index_of(theta_deg: f64, resolution: f64) -> Result<usize> {
    grid_index(theta_deg, resolution, grid_size(resolution)?)
}

/// Angle of grid point `g`.
pub fn grid_angle(g: usize, resolution: f64) -> f64 {
    -90.0 + g as f64 * resolution
}

/// CBF measurement matrix over the uniform grid on `[-90°, 90°)`; column
/// `g` is the steering vector of `-90° + g · resolution`.
pub fn build_cbf_matrix(sensors: usize, resolution: f64) -> Result<(ComplexMatrix, Vec<f64>)> {
    let g = grid_size(resolution)?;
    let angles: Vec<f64> = (0..g).map(|i| grid_angle(i, resolution)).collect();
    let cols: Vec<Vec<Complex64>> = angles.iter().map(|&t| steering_vector(t, sensors)).collect();
    Ok((ComplexMatrix::from_columns(&cols)?, angles))
}

#[derive(Debug, Clone)]
pub struct DoaData {
    pub phi: ComplexMatrix,
    pub grid_angles: Vec<f64>,
    pub y: Vec<Complex64>,
    /// Sorted grid indices of the sources.
    pub support: Vec<usize>,
    /// Complex source amplitudes in the order of `source_angles`.
    pub amplitudes: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// Single array snapshot `y = A(θ) s + ε` with `s_q = sqrt(η_q) e^{iφ_q}`,
/// `φ_q ~ U(0, 2π)`.
pub fn gen_doa_snapshot(sc: &DoaScenario) -> Result<DoaData> {
    sc.validate()?;
    let (phi, grid_angles) = build_cbf_matrix(sc.sensors, sc.grid_resolution)?;
    let indices: Vec<usize> = sc
        .source_angles
        .iter()
        .map(|&t| grid_index(t, sc.grid_resolution, grid_angles.len()))
        .collect::<Result<_>>()?;

    let mut rng = seeded_rng(sc.seed);
    let amplitudes: Vec<Complex64> = sc
        .source_powers
        .iter()
        .map(|&eta| Complex64::from_polar(eta.sqrt(), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let sigma = sc.noise_variance().sqrt();
    let noise: Vec<Complex64> = sample_complex_gaussian(&mut rng, sc.sensors)
        .into_iter()
        .map(|e| e * sigma)
        .collect();

    let mut y = noise.clone();
    for (&g, &amp) in indices.iter().zip(&amplitudes) {
        crate::cnum::axpy(amp, phi.col(g), &mut y);
    }
    let mut support = indices;
    support.sort_unstable();
    Ok(DoaData {
        phi,
        grid_angles,
        y,
        support,
        amplitudes,
        noise,
    })
}

/// Largest normalised inner product between two distinct columns.
pub fn mutual_coherence(m: &ComplexMatrix) -> f64 {
    let norms: Vec<f64> = m.columns().map(crate::cnum::norm2).collect();
    let mut worst: f64 = 0.0;
    for i in 0..m.ncols() {
        for j in i + 1..m.ncols() {
            let v = crate::cnum::dot_h(m.col(i), m.col(j)).norm() / (norms[i] * norms[j]);
            worst = worst.max(v);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub fdp: f64,
    pub tpr: f64,
    /// Selection equals the truth.
    pub exact: bool,
}

pub fn trial_metrics(selected: &[usize], truth: &[usize]) -> TrialMetrics {
    let sel: BTreeSet<usize> = selected.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    let hits = sel.intersection(&tru).count();
    let false_hits = sel.len() - hits;
    TrialMetrics {
        fdp: false_hits as f64 / sel.len().max(1) as f64,
        tpr: hits as f64 / tru.len().max(1) as f64,
        exact: sel == tru,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scenario {
    Regression(RegressionScenario),
    Doa(DoaScenario),
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Regression(sc) => sc.validate(),
            Scenario::Doa(sc) => sc.validate(),
        }
    }

    /// Regression data get an intercept-free centered model; the CBF
    /// dictionary is already unit-norm and contains the constant broadside
    /// column, so it is only normalised.
    pub fn preprocessing(&self) -> Preprocessing {
        match self {
            Scenario::Regression(_) => Preprocessing::Standardize,
            Scenario::Doa(_) => Preprocessing::Normalize,
        }
    }

    fn with_seed(&self, seed: u64) -> Scenario {
        let mut sc = self.clone();
        match &mut sc {
            Scenario::Regression(r) => r.seed = seed,
            Scenario::Doa(d) => d.seed = seed,
        }
        sc
    }

    /// Design, response and true support of one draw.
    pub fn generate(&self) -> Result<(ComplexMatrix, Vec<Complex64>, Vec<usize>)> {
        match self {
            Scenario::Regression(sc) => {
                let d = gen_sparse_regression(sc)?;
                Ok((d.x, d.y, d.support))
            }
            Scenario::Doa(sc) => {
                let d = gen_doa_snapshot(sc)?;
                Ok((d.phi, d.y, d.support))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub metrics: TrialMetrics,
    pub selected: Vec<usize>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub trials: usize,
    /// Mean FDP.
    pub empirical_fdr: f64,
    pub mean_tpr: f64,
    pub exact_recoveries: usize,
    /// Mean wall time per trial.
    pub mean_runtime_ms: f64,
    pub outcomes: Vec<TrialOutcome>,
}

/// Runs `trials` independent draws of `scenario`, each with a fresh data
/// seed and selector seed derived from `(seed, trial)`, selecting with
/// `selector` at target FDR `alpha`. The preprocessing is taken from the
/// scenario. Everything except the timings is a function of the inputs.
pub fn run_monte_carlo(
    scenario: &Scenario,
    trials: usize,
    alpha: f64,
    seed: u64,
    selector: &TRexConfig,
) -> Result<AggregateReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    scenario.validate()?;
    let mut config = selector.clone();
    config.alpha = alpha;
    config.preprocessing = scenario.preprocessing();
    config.validate()?;

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial_seed = child_seed(seed, i as u64);
            let (x, y, truth) = scenario.with_seed(child_seed(trial_seed, 0)).generate()?;
            let mut cfg = config.clone();
            cfg.master_seed = child_seed(trial_seed, 1);
            let start = Instant::now();
            let result = select_with(&x, &y, &cfg)?;
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(TrialOutcome {
                metrics: trial_metrics(&result.active_set, &truth),
                selected: result.active_set,
                runtime_ms,
            })
        })
        .collect::<Result<_>>()?;

    let n = trials as f64;
    Ok(AggregateReport {
        trials,
        empirical_fdr: outcomes.iter().map(|o| o.metrics.fdp).sum::<f64>() / n,
        mean_tpr: outcomes.iter().map(|o| o.metrics.tpr).sum::<f64>() / n,
        exact_recoveries: outcomes.iter().filter(|o| o.metrics.exact).count(),
        mean_runtime_ms: outcomes.iter().map(|o| o.runtime_ms).sum::<f64>() / n,
        outcomes,
    })
}
