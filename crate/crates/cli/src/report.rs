//! Result documents and their JSON / CSV encodings.
//!
//! Every document carries the fully resolved configuration. In CSV the
//! configuration (and, for `select`, the scalar results) sit in leading
//! `# key: <json>` comment lines ahead of the header row.

use std::io::{BufRead, Write};

use ctrex_core::trex::Preprocessing;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing '# {0}:' line")]
    MissingMeta(&'static str),
}

/// Effective settings of a `select` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub command: String,
    pub x: String,
    pub y: String,
    pub alpha: f64,
    pub k: usize,
    /// `"auto"` or `"fixed"`.
    pub l_policy: String,
    /// Dummy count the selection ended up with.
    pub l: usize,
    pub t_max: usize,
    pub v_grid: Vec<f64>,
    pub seed: u64,
    pub preprocessing: Preprocessing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub config: SelectConfig,
    /// 0-based input column indices.
    pub selected: Vec<usize>,
    pub v_star: f64,
    #[serde(rename = "T_star")]
    pub t_star: usize,
    pub fdp_hat: f64,
    /// Relative occurrence of every input column at `T_star`.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SelectScalars {
    v_star: f64,
    #[serde(rename = "T_star")]
    t_star: usize,
    fdp_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PhiRow {
    index: usize,
    phi: f64,
    selected: bool,
}

/// Selector settings shared by the benchmark commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorSettings {
    pub k: usize,
    /// `"auto"` or the fixed dummy count.
    pub l: String,
    pub t_max: Option<usize>,
    pub v_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioParams {
    Regression {
        p: usize,
        n: usize,
        s: usize,
    },
    Doa {
        m: usize,
        resolution: f64,
        angles: Vec<f64>,
        powers: Vec<f64>,
        /// Grid column of each source, in the order of `angles`.
        source_grid_indices: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub command: String,
    pub scenario: ScenarioParams,
    /// `"linear"` or `"dB"`.
    pub snr_unit: String,
    pub snr: Vec<f64>,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    pub selector: SelectorSettings,
    pub timing: bool,
}

/// One Monte-Carlo aggregate per SNR level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub snr: f64,
    pub trials: usize,
    pub fdr: f64,
    pub tpr: f64,
    pub exact: usize,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

fn write_meta<W: Write, T: Serialize>(w: &mut W, key: &str, value: &T) -> Result<(), ReportError> {
    writeln!(w, "# {key}: {}", serde_json::to_string(value)?)?;
    Ok(())
}

/// Splits leading `# key: value` lines from the CSV body.
fn split_meta<R: BufRead>(r: R) -> Result<(Vec<(String, String)>, String), ReportError> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        match line.strip_prefix("# ").and_then(|l| l.split_once(": ")) {
            Some((k, v)) if body.is_empty() => meta.push((k.to_string(), v.to_string())),
            _ => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    Ok((meta, body))
}

fn take_meta<T: DeserializeOwned>(meta: &[(String, String)], key: &'static str) -> Result<T, ReportError> {
    let (_, v) = meta
        .iter()
        .find(|(k, _)| k == key)
        .ok_or(ReportError::MissingMeta(key))?;
    Ok(serde_json::from_str(v)?)
}

fn write_json<W: Write, T: Serialize>(mut w: W, doc: &T) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    Ok(())
}

impl SelectReport {
    pub fn write<W: Write>(&self, mut w: W, format: Format) -> Result<(), ReportError> {
        match format {
            Format::Json => write_json(w, self),
            Format::Csv => {
                write_meta(&mut w, "config", &self.config)?;
                write_meta(
                    &mut w,
                    "result",
                    &SelectScalars {
                        v_star: self.v_star,
                        t_star: self.t_star,
                        fdp_hat: self.fdp_hat,
                    },
                )?;
                let mut cw = csv::Writer::from_writer(&mut w);
                for (index, &phi) in self.phi.iter().enumerate() {
                    cw.serialize(PhiRow {
                        index,
                        phi,
                        selected: self.selected.binary_search(&index).is_ok(),
                    })?;
                }
                cw.flush()?;
                Ok(())
            }
        }
    }

    pub fn read<R: BufRead>(r: R, format: Format) -> Result<Self, ReportError> {
        match format {
            Format::Json => Ok(serde_json::from_reader(r)?),
            Format::Csv => {
                let (meta, body) = split_meta(r)?;
                let config: SelectConfig = take_meta(&meta, "config")?;
                let scalars: SelectScalars = take_meta(&meta, "result")?;
                let rows: Vec<PhiRow> = csv::Reader::from_reader(body.as_bytes())
                    .deserialize()
                    .collect::<Result<_, _>>()?;
                Ok(SelectReport {
                    config,
                    selected: rows.iter().filter(|r| r.selected).map(|r| r.index).collect(),
                    v_star: scalars.v_star,
                    t_star: scalars.t_star,
                    fdp_hat: scalars.fdp_hat,
                    phi: rows.iter().map(|r| r.phi).collect(),
                })
            }
        }
    }
}

impl BenchReport {
    pub fn write<W: Write>(&self, mut w: W, format: Format) -> Result<(), ReportError> {
        match format {
            Format::Json => write_json(w, self),
            Format::Csv => {
                write_meta(&mut w, "config", &self.config)?;
                let mut cw = csv::Writer::from_writer(&mut w);
                for row in &self.rows {
                    cw.serialize(row)?;
                }
                cw.flush()?;
                Ok(())
            }
        }
    }

    pub fn read<R: BufRead>(r: R, format: Format) -> Result<Self, ReportError> {
        match format {
            Format::Json => Ok(serde_json::from_reader(r)?),
            Format::Csv => {
                let (meta, body) = split_meta(r)?;
                let config = take_meta(&meta, "config")?;
                let rows = csv::Reader::from_reader(body.as_bytes())
                    .deserialize()
                    .collect::<Result<_, _>>()?;
                Ok(BenchReport { config, rows })
            }
        }
    }
}
