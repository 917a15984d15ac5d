//! Subcommand arguments and their implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ctrex_core::bench::{grid_index_of, run_monte_carlo, DoaScenario, RegressionScenario, Scenario};
use ctrex_core::trex::{default_voting_grid, DummyPolicy, Preprocessing};
use ctrex_core::TRexConfig;

use crate::report::{
    BenchConfig, BenchReport, BenchRow, Format, ScenarioParams, SelectConfig, SelectReport,
    SelectorSettings,
};
use crate::table::parse_complex_csv;
use crate::CliError;

fn parse_dummies(s: &str) -> Result<DummyPolicy, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(DummyPolicy::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected 'auto' or a positive integer, got '{s}'")),
        Ok(l) => Ok(DummyPolicy::Fixed(l)),
    }
}

fn parse_preprocessing(s: &str) -> Result<Preprocessing, String> {
    match s.to_ascii_lowercase().as_str() {
        "standardize" => Ok(Preprocessing::Standardize),
        "normalize" => Ok(Preprocessing::Normalize),
        _ => Err(format!("expected 'standardize' or 'normalize', got '{s}'")),
    }
}

/// Selector options shared by all subcommands.
#[derive(Debug, Clone, Args)]
pub struct SelectorArgs {
    /// Random experiments per selection.
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Dummies per experiment: `auto` or a fixed count.
    #[arg(long, default_value = "auto", value_parser = parse_dummies)]
    pub l: DummyPolicy,
    /// Maximal dummy budget [default: min(L, ceil(n/2))].
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Comma-separated voting levels in [0.5, 1).
    #[arg(long, value_delimiter = ',')]
    pub v_grid: Option<Vec<f64>>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SelectorArgs {
    fn config(&self, alpha: f64, preprocessing: Preprocessing) -> TRexConfig {
        TRexConfig {
            experiments: self.k,
            dummies: self.l,
            alpha,
            max_dummies: self.t_max,
            voting_grid: self.v_grid.clone(),
            master_seed: self.seed,
            preprocessing,
        }
    }

    fn settings(&self) -> SelectorSettings {
        SelectorSettings {
            k: self.k,
            l: match self.l {
                DummyPolicy::Auto => "auto".into(),
                DummyPolicy::Fixed(l) => l.to_string(),
            },
            t_max: self.t_max,
            v_grid: self.v_grid.clone().unwrap_or_else(|| default_voting_grid(self.k)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: from the file extension].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OutputArgs {
    fn resolve_format(&self, fallback: Format) -> Format {
        self.format.unwrap_or_else(|| {
            let ext = self
                .out
                .as_deref()
                .and_then(Path::extension)
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            match ext.as_deref() {
                Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                _ => fallback,
            }
        })
    }

    fn emit(
        &self,
        fallback: Format,
        write: impl FnOnce(&mut dyn Write, Format) -> Result<(), crate::report::ReportError>,
    ) -> Result<(), CliError> {
        let format = self.resolve_format(fallback);
        let io_err = |e: &dyn std::fmt::Display| CliError::Input(format!("cannot write output: {e}"));
        match &self.out {
            Some(path) => {
                let file = File::create(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                write(&mut w, format).map_err(|e| io_err(&e))?;
                w.flush().map_err(|e| io_err(&e))
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = stdout.lock();
                write(&mut w, format).map_err(|e| io_err(&e))?;
                w.flush().map_err(|e| io_err(&e))
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// Design matrix as a complex CSV table.
    #[arg(long)]
    pub x: PathBuf,
    /// Response as a complex CSV table with one column.
    #[arg(long)]
    pub y: PathBuf,
    /// Target FDR.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// `standardize` (center and scale) or `normalize` (scale only).
    #[arg(long, default_value = "standardize", value_parser = parse_preprocessing)]
    pub preprocessing: Preprocessing,
    #[command(flatten)]
    pub selector: SelectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn cmd_select(args: &SelectArgs) -> Result<SelectReport, CliError> {
    let x = parse_complex_csv(&args.x)?;
    let y = parse_complex_csv(&args.y)?;
    if y.data.ncols() != 1 {
        return Err(CliError::Input(format!(
            "{}: response table must have exactly one complex column, found {}",
            args.y.display(),
            y.data.ncols()
        )));
    }
    let config = args.selector.config(args.alpha, args.preprocessing);
    let result = ctrex_core::select_with(&x.data, y.data.col(0), &config)?;
    let report = SelectReport {
        config: SelectConfig {
            command: "select".into(),
            x: args.x.display().to_string(),
            y: args.y.display().to_string(),
            alpha: args.alpha,
            k: result.config.experiments,
            l_policy: match args.selector.l {
                DummyPolicy::Auto => "auto".into(),
                DummyPolicy::Fixed(_) => "fixed".into(),
            },
            l: result.config.num_dummies,
            t_max: result.config.max_dummies,
            v_grid: result.config.voting_grid.clone(),
            seed: result.config.master_seed,
            preprocessing: result.config.preprocessing,
        },
        phi: result.phi_star(),
        selected: result.active_set,
        v_star: result.v_star,
        t_star: result.t_star,
        fdp_hat: result.fdp_hat,
    };
    args.output.emit(Format::Json, |w, f| report.write(w, f))?;
    Ok(report)
}

/// Options shared by the benchmark commands.
#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Monte-Carlo trials per SNR level.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Target FDR.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Report zero run times so that output depends on the inputs only.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub selector: SelectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl BenchArgs {
    fn run(&self, scenarios: &[(f64, Scenario)]) -> Result<Vec<BenchRow>, CliError> {
        if self.trials == 0 {
            return Err(CliError::Input("--trials must be at least 1".into()));
        }
        // Fail on bad parameters before spending time on any level.
        for (_, sc) in scenarios {
            sc.validate()?;
        }
        let config = self.selector.config(self.alpha, Preprocessing::Standardize);
        config.validate()?;
        scenarios
            .iter()
            .map(|(snr, sc)| {
                let agg = run_monte_carlo(sc, self.trials, self.alpha, self.selector.seed, &config)?;
                Ok(BenchRow {
                    snr: *snr,
                    trials: agg.trials,
                    fdr: agg.empirical_fdr,
                    tpr: agg.mean_tpr,
                    exact: agg.exact_recoveries,
                    runtime_ms: if self.no_timing { 0.0 } else { agg.mean_runtime_ms },
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct RegressionBenchArgs {
    /// Number of candidate predictors.
    #[arg(long, default_value_t = 1000)]
    pub p: usize,
    /// Number of samples.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Number of active predictors.
    #[arg(long, default_value_t = 5)]
    pub s: usize,
    /// Comma-separated linear SNR levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,5,10")]
    pub snr: Vec<f64>,
    #[command(flatten)]
    pub bench: BenchArgs,
}

pub fn cmd_regression_bench(args: &RegressionBenchArgs) -> Result<BenchReport, CliError> {
    let scenarios: Vec<(f64, Scenario)> = args
        .snr
        .iter()
        .map(|&snr| (snr, Scenario::Regression(RegressionScenario::new(args.p, args.n, args.s, snr, 0))))
        .collect();
    let rows = args.bench.run(&scenarios)?;
    let report = BenchReport {
        config: BenchConfig {
            command: "regression-bench".into(),
            scenario: ScenarioParams::Regression {
                p: args.p,
                n: args.n,
                s: args.s,
            },
            snr_unit: "linear".into(),
            snr: args.snr.clone(),
            trials: args.bench.trials,
            alpha: args.bench.alpha,
            seed: args.bench.selector.seed,
            selector: args.bench.selector.settings(),
            timing: !args.bench.no_timing,
        },
        rows,
    };
    args.bench.output.emit(Format::Csv, |w, f| report.write(w, f))?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PowerPreset {
    /// Equal unit powers.
    Homogeneous,
    /// Powers 0.3, 1.0 and 0.04.
    Heterogeneous,
}

impl PowerPreset {
    fn powers(self) -> Vec<f64> {
        match self {
            PowerPreset::Homogeneous => vec![1.0, 1.0, 1.0],
            PowerPreset::Heterogeneous => vec![0.3, 1.0, 0.04],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DoaBenchArgs {
    /// Number of array sensors.
    #[arg(long, default_value_t = 80)]
    pub m: usize,
    /// Grid spacing in degrees; must divide 180.
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    /// Comma-separated source directions in degrees, on the grid.
    #[arg(long, value_delimiter = ',', default_value = "35,40,45")]
    pub angles: Vec<f64>,
    /// Source power profile for the default three sources.
    #[arg(long, value_enum, default_value_t = PowerPreset::Homogeneous)]
    pub preset: PowerPreset,
    /// Comma-separated source powers; overrides --preset.
    #[arg(long, value_delimiter = ',')]
    pub powers: Option<Vec<f64>>,
    /// Comma-separated SNR levels in dB.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20,25", allow_negative_numbers = true)]
    pub snr_db: Vec<f64>,
    #[command(flatten)]
    pub bench: BenchArgs,
}

pub fn cmd_doa_bench(args: &DoaBenchArgs) -> Result<BenchReport, CliError> {
    let powers = args.powers.clone().unwrap_or_else(|| args.preset.powers());
    let source_grid_indices = args
        .angles
        .iter()
        .map(|&a| grid_index_of(a, args.resolution))
        .collect::<Result<Vec<_>, _>>()?;
    let scenarios: Vec<(f64, Scenario)> = args
        .snr_db
        .iter()
        .map(|&db| {
            let sc = DoaScenario {
                sensors: args.m,
                grid_resolution: args.resolution,
                source_angles: args.angles.clone(),
                source_powers: powers.clone(),
                snr_db: db,
                seed: 0,
            };
            (db, Scenario::Doa(sc))
        })
        .collect();
    let rows = args.bench.run(&scenarios)?;
    let report = BenchReport {
        config: BenchConfig {
            command: "doa-bench".into(),
            scenario: ScenarioParams::Doa {
                m: args.m,
                resolution: args.resolution,
                angles: args.angles.clone(),
                powers,
                source_grid_indices,
            },
            snr_unit: "dB".into(),
            snr: args.snr_db.clone(),
            trials: args.bench.trials,
            alpha: args.bench.alpha,
            seed: args.bench.selector.seed,
            selector: args.bench.selector.settings(),
            timing: !args.bench.no_timing,
        },
        rows,
    };
    args.bench.output.emit(Format::Csv, |w, f| report.write(w, f))?;
    Ok(report)
}
