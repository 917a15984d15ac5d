use std::sync::Arc;

use ctrex_core::bench::{gen_sparse_regression, RegressionScenario};
use ctrex_core::cnum::{
    center, child_rng, sample_complex_gaussian, sample_complex_gaussian_matrix, seeded_rng,
    standardize_columns,
};
use ctrex_core::lars::CandidateSet;
use ctrex_core::trex::{ExperimentSetup, FdpSurface, OccurrenceTable, Preprocessing};
use ctrex_core::{select_with, ComplexMatrix, TRexConfig};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn instance(seed: u64, snr: f64) -> (ComplexMatrix, Vec<ctrex_core::Complex64>) {
    let data = gen_sparse_regression(&RegressionScenario::new(80, 40, 4, snr, seed)).unwrap();
    (data.x, data.y)
}

fn config(seed: u64) -> TRexConfig {
    let mut c = TRexConfig::new(0.1);
    c.master_seed = seed;
    c
}

#[test]
fn selected_set_is_recomputable_from_stored_occurrences() {
    for seed in 0..8 {
        let (x, y) = instance(seed, 2.0);
        let res = select_with(&x, &y, &config(seed)).unwrap();
        let k = res.config.experiments as f64;
        let counts = res.occurrences.counts(res.t_star);
        let recomputed: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c as f64 / k > res.v_star)
            .map(|(j, _)| j)
            .collect();
        assert_eq!(recomputed, res.active_set, "seed {seed}");
        let phi = res.phi_star();
        let from_phi: Vec<usize> = (0..phi.len()).filter(|&j| phi[j] > res.v_star).collect();
        assert_eq!(from_phi, res.active_set, "seed {seed}");
        assert!(res.fdp_hat <= res.config.alpha);
    }
}

#[test]
fn warm_restarts_cost_no_more_than_fresh_runs_at_final_budget() {
    for seed in 0..4 {
        let (x, y) = instance(seed, 5.0);
        let cfg = config(seed);
        let res = select_with(&x, &y, &cfg).unwrap();
        let setup = ExperimentSetup {
            design: Arc::new(standardize_columns(&x).unwrap()),
            response: center(&y),
            num_dummies: res.config.num_dummies,
            master_seed: cfg.master_seed,
            preprocessing: Preprocessing::Standardize,
        };
        let fresh: usize = (0..res.config.experiments)
            .map(|k| setup.run_experiment(k, res.t_stop, None).unwrap().1.iteration())
            .sum();
        assert_eq!(res.lars_steps, fresh, "seed {seed}");
        assert!(res.t_stop >= 1);
    }
}

#[test]
fn selection_does_not_depend_on_thread_count() {
    let (x, y) = instance(5, 1.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| select_with(&x, &y, &config(17)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(5));
}

/// Null data with the given dummy count: standardized noise design and an
/// independent centered noise response.
fn null_setup(seed: u64, n: usize, p: usize, num_dummies: usize) -> ExperimentSetup {
    let mut rng = seeded_rng(seed);
    let x = standardize_columns(&sample_complex_gaussian_matrix(&mut rng, n, p)).unwrap();
    let y = center(&sample_complex_gaussian(&mut rng, n));
    ExperimentSetup {
        design: Arc::new(x),
        response: y,
        num_dummies,
        master_seed: seed,
        preprocessing: Preprocessing::Standardize,
    }
}

#[test]
fn first_entrant_is_a_dummy_half_the_time_under_the_null() {
    let reps = 200;
    let mut dummy_first = 0;
    for rep in 0..reps {
        let setup = null_setup(10_000 + rep, 100, 50, 50);
        let mut state = setup.init_experiment(0).unwrap();
        let info = state.step().unwrap();
        dummy_first += info.is_dummy as usize;
    }
    let rate = dummy_first as f64 / reps as f64;
    assert!((rate - 0.5).abs() <= 0.1, "dummy-first rate {rate}");
}

#[test]
fn first_dummy_identity_is_uniform_under_the_null() {
    let (n, p, l) = (50, 10, 10);
    let reps = 400;
    let mut bins = vec![0u32; l];
    for rep in 0..reps {
        let setup = null_setup(20_000 + rep, n, p, l);
        let (cand, _) = setup.run_experiment(rep as usize % 20, 1, None).unwrap();
        let &(first, _) = cand.entrance_order.iter().find(|(_, d)| *d).unwrap();
        bins[first - p] += 1;
    }
    let expected = reps as f64 / l as f64;
    let stat: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new((l - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 0.01, "chi-square {stat}, p = {p_value}, bins {bins:?}");
}

/// Nested candidate sets from per-(experiment, variable) entrance budgets;
/// budget `t_max + 1` means the variable never enters.
fn table_from_entries(entries: &[Vec<usize>], p: usize, t_max: usize) -> OccurrenceTable {
    let mut table = OccurrenceTable::new(entries.len(), p);
    for t in 1..=t_max {
        let cands: Vec<CandidateSet> = entries
            .iter()
            .map(|e| CandidateSet {
                original_indices: (0..p).filter(|&j| e[j] <= t).collect(),
                entrance_order: Vec::new(),
                terminal_t: t,
            })
            .collect();
        table.push(&cands);
    }
    table
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fdp_estimate_is_monotone_and_bounded(
        p in 2usize..15,
        k in 2usize..12,
        t_max in 1usize..6,
        extra_dummies in 0usize..10,
        seed in any::<u64>(),
    ) {
        let mut rng = child_rng(seed, 0);
        let entries: Vec<Vec<usize>> = (0..k)
            .map(|_| (0..p).map(|_| rand::Rng::random_range(&mut rng, 1..=t_max + 1)).collect())
            .collect();
        let table = table_from_entries(&entries, p, t_max);
        let num_dummies = t_max + extra_dummies;
        let surface = FdpSurface::new(&table, num_dummies);
        let grid: Vec<f64> = (10..20).map(|i| i as f64 / 20.0).collect();
        for t in 1..=t_max {
            for w in grid.windows(2) {
                let (lo, hi) = (surface.estimate(w[0], t), surface.estimate(w[1], t));
                prop_assert!(hi <= lo, "t {}: {} at {} > {} at {}", t, hi, w[1], lo, w[0]);
            }
            for &v in &grid {
                let e = surface.estimate(v, t);
                prop_assert!((0.0..=1.0).contains(&e));
                if t > 1 {
                    prop_assert!(surface.estimate(v, t - 1) <= e);
                }
            }
        }
    }
}
