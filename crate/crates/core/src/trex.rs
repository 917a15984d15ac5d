//! Terminating random experiments selector for complex data.
//!
//! `K` random experiments each append their own block of `L` complex
//! Gaussian dummy columns to the design and run the terminating LARS path
//! until `T` dummies are active. The fraction of experiments in which an
//! original variable was picked up is its relative occurrence. The dummy
//! budget `T` grows until the estimated false discovery proportion at the
//! reference voting level exceeds the target, and the final voting level
//! and budget are chosen to maximise the number of selected variables while
//! keeping the estimate below the target.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnum::{
    center, child_rng, normalize_columns, sample_complex_gaussian_matrix, standardize_columns,
    ComplexMatrix,
};
use crate::lars::{CandidateSet, Design, LarsState};
use crate::{Error, Result};

pub const DEFAULT_EXPERIMENTS: usize = 20;

/// Voting level at which the dummy budget loop checks the FDP estimate.
pub const STOP_VOTING_LEVEL: f64 = 0.75;

/// Upper bound of the automatic dummy count, in multiples of `p`.
pub const MAX_DUMMY_FACTOR: usize = 10;

/// How many dummies each experiment appends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DummyPolicy {
    /// Exactly this many.
    Fixed(usize),
    /// Start at `p` and add `p` more until the estimate at `T = 1` is below
    /// the target, up to `MAX_DUMMY_FACTOR * p`.
    Auto,
}

/// Column preprocessing applied to the design and to every dummy block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    /// Center and scale columns to unit norm, center the response.
    Standardize,
    /// Scale columns to unit norm only; model without intercept.
    Normalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TRexConfig {
    /// Number of random experiments `K`.
    pub experiments: usize,
    pub dummies: DummyPolicy,
    /// Target FDR.
    pub alpha: f64,
    /// Maximal dummy budget; defaults to `min(L, ceil(n / 2))`.
    pub max_dummies: Option<usize>,
    /// Voting levels; defaults to [`default_voting_grid`].
    pub voting_grid: Option<Vec<f64>>,
    pub master_seed: u64,
    pub preprocessing: Preprocessing,
}

impl TRexConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            experiments: DEFAULT_EXPERIMENTS,
            dummies: DummyPolicy::Auto,
            alpha,
            max_dummies: None,
            voting_grid: None,
            master_seed: 0,
            preprocessing: Preprocessing::Standardize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiments < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least two random experiments, got {}",
                self.experiments
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "target FDR {} outside [0, 1]",
                self.alpha
            )));
        }
        if let DummyPolicy::Fixed(0) = self.dummies {
            return Err(Error::InvalidConfig("dummy count must be positive".into()));
        }
        if self.max_dummies == Some(0) {
            return Err(Error::InvalidConfig("maximal dummy budget must be positive".into()));
        }
        if let (DummyPolicy::Fixed(l), Some(t)) = (self.dummies, self.max_dummies) {
            if t > l {
                return Err(Error::InvalidConfig(format!(
                    "maximal dummy budget {t} exceeds the dummy count {l}"
                )));
            }
        }
        if let Some(grid) = &self.voting_grid {
            if grid.is_empty() {
                return Err(Error::InvalidConfig("empty voting grid".into()));
            }
            if grid.iter().any(|v| !(0.5..1.0).contains(v)) {
                return Err(Error::InvalidConfig("voting levels must lie in [0.5, 1)".into()));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(
                    "voting grid must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `{0.5, 0.55, ..., 0.95} ∪ {1 - 1/(2K)}`.
pub fn default_voting_grid(experiments: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (10..20).map(|i| i as f64 / 20.0).collect();
    let top = 1.0 - 1.0 / (2.0 * experiments as f64);
    if top >= 0.5 {
        grid.push(top);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Settings a selection actually ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub experiments: usize,
    pub num_dummies: usize,
    pub alpha: f64,
    pub max_dummies: usize,
    pub voting_grid: Vec<f64>,
    pub master_seed: u64,
    pub preprocessing: Preprocessing,
}

/// Per-budget vote counts: how many experiments picked each variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceTable {
    experiments: usize,
    num_vars: usize,
    /// `counts[t - 1][j]`
    counts: Vec<Vec<u32>>,
}

impl OccurrenceTable {
    pub fn new(experiments: usize, num_vars: usize) -> Self {
        Self {
            experiments,
            num_vars,
            counts: Vec::new(),
        }
    }

    /// Appends the candidate sets of the next budget.
    pub fn push(&mut self, candidates: &[CandidateSet]) {
        assert_eq!(candidates.len(), self.experiments, "one candidate set per experiment");
        let mut row = vec![0u32; self.num_vars];
        for cand in candidates {
            for &j in &cand.original_indices {
                row[j] += 1;
            }
        }
        self.counts.push(row);
    }

    pub fn experiments(&self) -> usize {
        self.experiments
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Largest budget recorded.
    pub fn max_budget(&self) -> usize {
        self.counts.len()
    }

    /// Vote counts at budget `t`; all zero at `t = 0`.
    pub fn counts(&self, t: usize) -> Vec<u32> {
        if t == 0 {
            vec![0; self.num_vars]
        } else {
            self.counts[t - 1].clone()
        }
    }

    /// Relative occurrences at budget `t`.
    pub fn phi(&self, t: usize) -> Vec<f64> {
        let k = self.experiments as f64;
        self.counts(t).iter().map(|&c| c as f64 / k).collect()
    }

    /// `{j : phi_t(j) > v}`
    pub fn selected(&self, v: f64, t: usize) -> Vec<usize> {
        self.phi(t)
            .iter()
            .enumerate()
            .filter(|(_, &phi)| phi > v)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Relative occurrence of each of the `num_vars` original variables across
/// the candidate sets; identically zero for `t = 0`.
pub fn relative_occurrences(candidates: &[CandidateSet], t: usize, num_vars: usize) -> Vec<f64> {
    let mut phi = vec![0.0; num_vars];
    if t == 0 || candidates.is_empty() {
        return phi;
    }
    for cand in candidates {
        for &j in &cand.original_indices {
            phi[j] += 1.0;
        }
    }
    let k = candidates.len() as f64;
    phi.iter_mut().for_each(|v| *v /= k);
    phi
}

/// Deflated relative occurrences up to budget `t`.
///
/// Each budget increment contributes the variables it newly picked up,
/// weighted by one minus the estimated share of null variables among them.
/// With `L - t' + 1` dummies still out, the expected number of nulls entering
/// alongside the `t'`-th dummy is at most `(p - Σ phi_t') / (L - t' + 1)`.
pub fn deflated_occurrences(table: &OccurrenceTable, t: usize, num_dummies: usize) -> Vec<f64> {
    assert!(t <= num_dummies, "budget exceeds the dummy count");
    let p = table.num_vars() as f64;
    let mut deflated = vec![0.0; table.num_vars()];
    let mut prev = table.phi(0);
    for tt in 1..=t {
        let phi = table.phi(tt);
        let total: f64 = phi.iter().sum();
        let delta_total: f64 = phi.iter().zip(&prev).map(|(a, b)| a - b).sum();
        if delta_total > 0.0 {
            let nulls = (p - total) / (num_dummies - tt + 1) as f64;
            let weight = 1.0 - nulls / delta_total;
            for ((d, a), b) in deflated.iter_mut().zip(&phi).zip(&prev) {
                *d += weight * (a - b);
            }
        }
        prev = phi;
    }
    deflated
}

/// Smallest vote count `c` with `c / K > v`; `K + 1` if none.
pub fn min_votes(v: f64, experiments: usize) -> usize {
    let k = experiments as f64;
    (0..=experiments)
        .find(|&c| c as f64 / k > v)
        .unwrap_or(experiments + 1)
}

/// FDP estimates for every budget and vote threshold of a table.
///
/// The raw estimate at `(t, c)` is `min(1, Σ_{j ∈ S} (1 - phi'_t(j)) / |S|)`
/// over `S = {j : count_t(j) ≥ c}` (zero for empty `S`). The stored surface
/// is its running maximum over smaller budgets and higher thresholds, which
/// makes it non-decreasing in `t` and non-increasing in the voting level.
#[derive(Debug, Clone)]
pub struct FdpSurface {
    experiments: usize,
    /// `mono[t][c]` for `t` in `0..=T`, `c` in `0..=K+1`.
    mono: Vec<Vec<f64>>,
}

impl FdpSurface {
    pub fn new(table: &OccurrenceTable, num_dummies: usize) -> Self {
        let k = table.experiments();
        let max_t = table.max_budget();
        let mut mono = vec![vec![0.0; k + 2]; max_t + 1];
        for t in 1..=max_t {
            let counts = table.counts(t);
            let deflated = deflated_occurrences(table, t, num_dummies);
            // per-threshold sums, accumulated from the top
            let mut sel = vec![0usize; k + 2];
            let mut excess = vec![0.0; k + 2];
            for (&c, d) in counts.iter().zip(&deflated) {
                sel[c as usize] += 1;
                excess[c as usize] += 1.0 - d;
            }
            for c in (1..=k).rev() {
                sel[c] += sel[c + 1];
                excess[c] += excess[c + 1];
            }
            for c in (1..=k).rev() {
                let raw = if sel[c] == 0 {
                    0.0
                } else {
                    (excess[c] / sel[c] as f64).clamp(0.0, 1.0)
                };
                mono[t][c] = raw.max(mono[t - 1][c]).max(mono[t][c + 1]);
            }
            // c = 0 selects everything including never-picked variables;
            // voting levels are >= 0.5 so it is never queried
            mono[t][0] = mono[t][1];
        }
        Self {
            experiments: k,
            mono,
        }
    }

    pub fn max_budget(&self) -> usize {
        self.mono.len() - 1
    }

    /// Estimate at voting level `v` and budget `t`.
    pub fn estimate(&self, v: f64, t: usize) -> f64 {
        self.mono[t][min_votes(v, self.experiments)]
    }
}

/// Conservative FDP estimate of the selection `{j : phi_t(j) > v}`.
pub fn estimate_fdp(table: &OccurrenceTable, v: f64, t: usize, num_dummies: usize) -> f64 {
    assert!(t >= 1 && t <= table.max_budget(), "budget outside the table");
    FdpSurface::new(table, num_dummies).estimate(v, t)
}

/// Original design with one experiment's dummy block appended.
#[derive(Debug, Clone)]
pub struct AugmentedDesign {
    base: Arc<ComplexMatrix>,
    dummies: ComplexMatrix,
}

impl AugmentedDesign {
    pub fn new(base: Arc<ComplexMatrix>, dummies: ComplexMatrix) -> Result<Self> {
        if base.nrows() != dummies.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows, dummies {}",
                base.nrows(),
                dummies.nrows()
            )));
        }
        Ok(Self { base, dummies })
    }

    pub fn num_original(&self) -> usize {
        self.base.ncols()
    }

    pub fn dummies(&self) -> &ComplexMatrix {
        &self.dummies
    }
}

impl Design for AugmentedDesign {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }

    fn ncols(&self) -> usize {
        self.base.ncols() + self.dummies.ncols()
    }

    fn column(&self, j: usize) -> &[Complex64] {
        let p = self.base.ncols();
        if j < p {
            self.base.col(j)
        } else {
            self.dummies.col(j - p)
        }
    }
}

pub type ExperimentState = LarsState<AugmentedDesign>;

/// `n x L` i.i.d. standard complex Gaussian dummies of experiment `k`.
pub fn generate_dummy_matrix(master_seed: u64, k: usize, n: usize, num_dummies: usize) -> ComplexMatrix {
    assert!(num_dummies >= 1, "at least one dummy required");
    sample_complex_gaussian_matrix(&mut child_rng(master_seed, k as u64), n, num_dummies)
}

fn preprocess_columns(m: &ComplexMatrix, mode: Preprocessing) -> Result<ComplexMatrix> {
    match mode {
        Preprocessing::Standardize => standardize_columns(m),
        Preprocessing::Normalize => normalize_columns(m),
    }
}

/// Shared inputs of the random experiments.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub design: Arc<ComplexMatrix>,
    pub response: Vec<Complex64>,
    pub num_dummies: usize,
    pub master_seed: u64,
    pub preprocessing: Preprocessing,
}

impl ExperimentSetup {
    /// Fresh path of experiment `k`.
    pub fn init_experiment(&self, k: usize) -> Result<ExperimentState> {
        let n = self.design.nrows();
        let p = self.design.ncols();
        let dummies = preprocess_columns(
            &generate_dummy_matrix(self.master_seed, k, n, self.num_dummies),
            self.preprocessing,
        )?;
        let design = AugmentedDesign::new(self.design.clone(), dummies)?;
        let state = LarsState::new(design, self.response.clone(), p..p + self.num_dummies)?;
        Ok(match self.preprocessing {
            // centered columns span at most n - 1 dimensions
            Preprocessing::Standardize => state.with_max_active(n.saturating_sub(1)),
            Preprocessing::Normalize => state,
        })
    }

    /// Runs (or, given `cache`, resumes) experiment `k` up to budget `t`.
    pub fn run_experiment(
        &self,
        k: usize,
        t: usize,
        cache: Option<ExperimentState>,
    ) -> Result<(CandidateSet, ExperimentState)> {
        let mut state = match cache {
            Some(state) => state,
            None => self.init_experiment(k)?,
        };
        let cand = match state.run(t) {
            Ok(cand) => cand,
            // a collinear active set ends the path like saturation does
            Err(Error::SingularActiveSet { .. }) => {
                state.halt();
                state.candidates()
            }
            Err(e) => return Err(e),
        };
        Ok((cand, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected original variables, ascending.
    pub active_set: Vec<usize>,
    pub v_star: f64,
    pub t_star: usize,
    pub fdp_hat: f64,
    /// Budget at which the dummy loop stopped.
    pub t_stop: usize,
    pub occurrences: OccurrenceTable,
    pub config: ResolvedConfig,
    /// Total LARS iterations over all experiments of the final dummy count.
    pub lars_steps: usize,
}

impl SelectionResult {
    /// Relative occurrences at the chosen budget.
    pub fn phi_star(&self) -> Vec<f64> {
        self.occurrences.phi(self.t_star)
    }
}

fn run_all(
    setup: &ExperimentSetup,
    states: Vec<Option<ExperimentState>>,
    t: usize,
) -> Result<(Vec<CandidateSet>, Vec<ExperimentState>)> {
    let results: Vec<(CandidateSet, ExperimentState)> = states
        .into_par_iter()
        .enumerate()
        .map(|(k, cache)| setup.run_experiment(k, t, cache))
        .collect::<Result<_>>()?;
    Ok(results.into_iter().unzip())
}

/// Runs the calibrated selection on a design and response that are already
/// preprocessed according to `config.preprocessing`.
pub fn calibrate_and_select(
    x: &ComplexMatrix,
    y: &[Complex64],
    config: &TRexConfig,
) -> Result<SelectionResult> {
    config.validate()?;
    let (n, p) = (x.nrows(), x.ncols());
    if n < 2 {
        return Err(Error::DimensionMismatch(format!("need at least two samples, got {n}")));
    }
    if p == 0 {
        return Err(Error::DimensionMismatch("design has no columns".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows but response has length {}",
            y.len()
        )));
    }
    let k = config.experiments;
    let alpha = config.alpha;
    let grid = config
        .voting_grid
        .clone()
        .unwrap_or_else(|| default_voting_grid(k));

    let (mut num_dummies, dummy_cap) = match config.dummies {
        DummyPolicy::Fixed(l) => (l, l),
        DummyPolicy::Auto => (p, MAX_DUMMY_FACTOR * p),
    };
    let mut setup = ExperimentSetup {
        design: Arc::new(x.clone()),
        response: y.to_vec(),
        num_dummies,
        master_seed: config.master_seed,
        preprocessing: config.preprocessing,
    };

    // dummy count calibration at T = 1
    let (mut table, mut states) = loop {
        setup.num_dummies = num_dummies;
        let (cands, states) = run_all(&setup, vec![None; k], 1)?;
        let mut table = OccurrenceTable::new(k, p);
        table.push(&cands);
        let fdp = FdpSurface::new(&table, num_dummies).estimate(STOP_VOTING_LEVEL, 1);
        if fdp <= alpha || num_dummies >= dummy_cap {
            break (table, states);
        }
        num_dummies = (num_dummies + p).min(dummy_cap);
    };

    let max_dummies = config
        .max_dummies
        .unwrap_or_else(|| num_dummies.min(n.div_ceil(2)))
        .min(num_dummies);

    let mut t = 1;
    let surface = loop {
        let surface = FdpSurface::new(&table, num_dummies);
        if surface.estimate(STOP_VOTING_LEVEL, t) > alpha || t >= max_dummies {
            break surface;
        }
        t += 1;
        let (cands, next) = run_all(&setup, states.into_iter().map(Some).collect(), t)?;
        table.push(&cands);
        states = next;
    };

    // maximise |selection|; ties go to the larger voting level, then the smaller budget
    let mut best: Option<(usize, f64, usize)> = None;
    for tt in 1..=t {
        let counts = table.counts(tt);
        for &v in &grid {
            if surface.estimate(v, tt) > alpha {
                continue;
            }
            let c = min_votes(v, k);
            let size = counts.iter().filter(|&&n| n as usize >= c).count();
            let better = match best {
                None => true,
                Some((bs, bv, _)) => size > bs || (size == bs && v > bv),
            };
            if better {
                best = Some((size, v, tt));
            }
        }
    }
    let (v_star, t_star, fdp_hat) = match best {
        Some((_, v, tt)) => (v, tt, surface.estimate(v, tt)),
        // nothing passes; voting level 1 selects nothing
        None => (1.0, 1, 0.0),
    };

    Ok(SelectionResult {
        active_set: table.selected(v_star, t_star),
        v_star,
        t_star,
        fdp_hat,
        t_stop: t,
        lars_steps: states.iter().map(|s| s.iteration()).sum(),
        occurrences: table,
        config: ResolvedConfig {
            experiments: k,
            num_dummies,
            alpha,
            max_dummies,
            voting_grid: grid,
            master_seed: config.master_seed,
            preprocessing: config.preprocessing,
        },
    })
}

/// Preprocesses raw data according to the configuration and selects.
pub fn select_with(
    x_raw: &ComplexMatrix,
    y_raw: &[Complex64],
    config: &TRexConfig,
) -> Result<SelectionResult> {
    if x_raw.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least two samples, got {}",
            x_raw.nrows()
        )));
    }
    if x_raw.nrows() != y_raw.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows but response has length {}",
            x_raw.nrows(),
            y_raw.len()
        )));
    }
    let x = preprocess_columns(x_raw, config.preprocessing)?;
    let y = match config.preprocessing {
        Preprocessing::Standardize => center(y_raw),
        Preprocessing::Normalize => y_raw.to_vec(),
    };
    calibrate_and_select(&x, &y, config)
}

/// Selection with default settings and target FDR `alpha`.
pub fn select(x_raw: &ComplexMatrix, y_raw: &[Complex64], alpha: f64) -> Result<SelectionResult> {
    select_with(x_raw, y_raw, &TRexConfig::new(alpha))
}
