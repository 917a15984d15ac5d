use std::path::Path;
use std::process::{Command, Output};

use ctrex_cli::report::{BenchReport, Format, SelectReport};
use ctrex_cli::table::save_complex_csv;
use ctrex_core::bench::{gen_sparse_regression, RegressionScenario};
use ctrex_core::ComplexMatrix;

fn ctrex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrex"))
        .args(args)
        .env_remove("CTREX_THREADS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a noiseless 5-sparse instance and returns the planted support.
fn planted_instance(dir: &Path) -> Vec<usize> {
    let mut sc = RegressionScenario::new(60, 50, 5, 1.0, 11);
    sc.noise_variance = Some(0.0);
    let data = gen_sparse_regression(&sc).unwrap();
    let names: Vec<String> = (0..sc.p).map(|j| format!("x{j}")).collect();
    save_complex_csv(dir.join("x.csv"), &names, &data.x).unwrap();
    let y = ComplexMatrix::from_columns(std::slice::from_ref(&data.y)).unwrap();
    save_complex_csv(dir.join("y.csv"), &["y".to_string()], &y).unwrap();
    data.support
}

#[test]
fn select_recovers_noiseless_support_and_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let support = planted_instance(dir.path());
    let out = dir.path().join("result.json");
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    let res = ctrex(&[
        "select", "--x", path_str(&x), "--y", path_str(&y), "--alpha", "0.1", "--seed", "3", "--out",
        path_str(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let text = std::fs::read(&out).unwrap();
    let report = SelectReport::read(text.as_slice(), Format::Json).unwrap();
    assert_eq!(report.selected, support);

    // The selected set is exactly the variables whose occurrence exceeds v*.
    let recomputed: Vec<usize> = report
        .phi
        .iter()
        .enumerate()
        .filter(|(_, &phi)| phi > report.v_star)
        .map(|(j, _)| j)
        .collect();
    assert_eq!(recomputed, report.selected);
    assert_eq!(report.phi.len(), 60);
    assert!(report.fdp_hat <= 0.1);
    assert_eq!(report.config.k, 20);
    assert_eq!(report.config.l_policy, "auto");
    assert_eq!(report.config.seed, 3);

    // Same run in CSV carries the same content.
    let out_csv = dir.path().join("result.csv");
    let res = ctrex(&[
        "select", "--x", path_str(&x), "--y", path_str(&y), "--seed", "3", "--out", path_str(&out_csv),
    ]);
    assert!(res.status.success());
    let csv_text = std::fs::read(&out_csv).unwrap();
    assert_eq!(SelectReport::read(csv_text.as_slice(), Format::Csv).unwrap(), report);
}

#[test]
fn malformed_csv_exits_2_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    std::fs::write(&x, "a.re,a.im,b.re,c.im\n1,2,3,4\n5,6,7,8\n").unwrap();
    std::fs::write(&y, "y.re,y.im\n1,0\n0,1\n").unwrap();
    let res = ctrex(&["select", "--x", path_str(&x), "--y", path_str(&y)]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("c.im"), "{msg}");
    assert!(msg.contains("x.csv"), "{msg}");

    std::fs::write(&x, "a.re,a.im\n1,2\n3,oops\n").unwrap();
    let res = ctrex(&["select", "--x", path_str(&x), "--y", path_str(&y)]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("a.im") && msg.contains("oops"), "{msg}");
}

#[test]
fn mismatched_rows_and_multi_column_response_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    std::fs::write(&x, "a.re,a.im,b.re,b.im\n1,2,3,4\n5,6,7,9\n2,1,0,3\n").unwrap();
    std::fs::write(&y, "y.re,y.im\n1,0\n0,1\n").unwrap();
    let res = ctrex(&["select", "--x", path_str(&x), "--y", path_str(&y)]);
    assert_eq!(res.status.code(), Some(2));

    std::fs::write(&y, "y.re,y.im,z.re,z.im\n1,0,1,1\n0,1,1,1\n3,3,3,3\n").unwrap();
    let res = ctrex(&["select", "--x", path_str(&x), "--y", path_str(&y)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("y.csv"));
}

#[test]
fn regression_bench_default_snr_set_gives_six_rows() {
    let res = ctrex(&[
        "regression-bench", "--p", "30", "--n", "20", "--s", "3", "--trials", "2", "--no-timing",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = BenchReport::read(res.stdout.as_slice(), Format::Csv).unwrap();
    let snrs: Vec<f64> = report.rows.iter().map(|r| r.snr).collect();
    assert_eq!(snrs, [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]);
    assert_eq!(report.config.snr, snrs);
    let header = String::from_utf8_lossy(&res.stdout)
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .to_string();
    assert_eq!(header, "snr,trials,fdr,tpr,exact,runtime_ms");
}

#[test]
fn bench_bad_config_exits_2() {
    let res = ctrex(&["regression-bench", "--p", "30", "--n", "20", "--trials", "0"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ctrex(&["regression-bench", "--p", "5", "--n", "20", "--s", "5", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ctrex(&["doa-bench", "--angles", "35.5,40", "--powers", "1,1", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("35.5"));
    let res = ctrex(&["doa-bench", "--resolution", "7", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ctrex(&["doa-bench", "--powers", "1,1", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
    let res = ctrex(&["regression-bench", "--alpha", "1.5", "--trials", "1"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn fixed_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let res = ctrex(&[
            "--threads", threads, "regression-bench", "--p", "40", "--n", "30", "--snr", "1,5",
            "--trials", "4", "--seed", "9", "--no-timing", "--out", path_str(&out),
        ]);
        assert!(res.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn doa_bench_rows_and_presets() {
    let res = ctrex(&[
        "doa-bench", "--m", "24", "--resolution", "2", "--angles", "30,40,50", "--trials", "2",
        "--no-timing", "--format", "json",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = BenchReport::read(res.stdout.as_slice(), Format::Json).unwrap();
    assert_eq!(report.rows.len(), 6);
    let snrs: Vec<f64> = report.rows.iter().map(|r| r.snr).collect();
    assert_eq!(snrs, [0.0, 5.0, 10.0, 15.0, 20.0, 25.0]);
    assert!(report.rows.iter().all(|r| r.exact <= r.trials));
    match &report.config.scenario {
        ctrex_cli::report::ScenarioParams::Doa { powers, source_grid_indices, .. } => {
            assert_eq!(powers, &[1.0, 1.0, 1.0]);
            assert_eq!(source_grid_indices, &[60, 65, 70]);
        }
        other => panic!("unexpected scenario {other:?}"),
    }

    let res = ctrex(&[
        "doa-bench", "--m", "24", "--resolution", "2", "--angles", "30,40,50", "--preset",
        "heterogeneous", "--snr-db", "20", "--trials", "2", "--format", "json",
    ]);
    assert!(res.status.success());
    let report = BenchReport::read(res.stdout.as_slice(), Format::Json).unwrap();
    match &report.config.scenario {
        ctrex_cli::report::ScenarioParams::Doa { powers, .. } => assert_eq!(powers, &[0.3, 1.0, 0.04]),
        other => panic!("unexpected scenario {other:?}"),
    }
    assert!(report.rows.iter().all(|r| r.exact <= r.trials));
}
