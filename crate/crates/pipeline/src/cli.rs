//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use marsmc_core::select::{bic, estimate, select_model};
use marsmc_core::simulate::simulate;
use marsmc_core::{Mat, Series};
use serde_json::json;

use crate::config::{monthly_dates, RunConfig, StudyMode};
use crate::detrend::{detrend, trend_values};
use crate::error::{PipelineError, Result};
use crate::io::{cell, load_csv, write_cloud, write_csv, write_table};
use crate::manifest::{deviations, write_json, InputSummary, PosteriorRow, RunManifest, TIMING_FILE};
use crate::mc::mc_study;

/// Bayesian estimation of mixed causal–noncausal (V)MAR models by
/// sequential Monte Carlo.
#[derive(Debug, Parser)]
#[command(name = "marsmc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path from the configured process.
    Simulate(Common),
    /// Estimate one model on the input series.
    Estimate(Common),
    /// Estimate every candidate in the grid and rank them.
    Select(Common),
    /// Repeated simulation and estimation from a known process.
    Mc(Common),
    /// Remove a polynomial trend from each input series.
    Detrend(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one configuration field, e.g. `--set smc.particles=2000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Input CSV (same as `--set input=PATH`).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output directory (same as `--set output=DIR`).
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Estimate(_) => "estimate",
            Command::Select(_) => "select",
            Command::Mc(_) => "mc",
            Command::Detrend(_) => "detrend",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Estimate(c) | Command::Select(c) | Command::Mc(c) | Command::Detrend(c) => {
                c
            }
        }
    }

    /// Resolves the configuration: file, then `--set`, then the path flags.
    pub fn config(&self) -> Result<RunConfig> {
        let c = self.common();
        let mut overrides = c.overrides.clone();
        let quote = |p: &Path| toml::Value::String(p.display().to_string()).to_string();
        if let Some(p) = &c.input {
            overrides.push(format!("input={}", quote(p)));
        }
        if let Some(p) = &c.output {
            overrides.push(format!("output={}", quote(p)));
        }
        RunConfig::load(c.config.as_deref(), &overrides)
    }
}

/// Runs the CLI and returns the process exit code. Failures print a JSON
/// record `{"error": {"kind", "message"}}` on stderr.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = worker_pool()
        .and_then(|pool| pool.install(|| cli.command.config().and_then(|cfg| execute(&cli.command, &cfg))));
    match outcome {
        Ok(dir) => {
            println!("{}", dir.join(crate::manifest::MANIFEST_FILE).display());
            0
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            1
        }
    }
}

/// Worker pool sized by `MARSMC_THREADS` (unset or 0: one per core).
fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("MARSMC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| PipelineError::Config(format!("MARSMC_THREADS=`{v}` is not a non-negative integer")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))
}

/// Executes `command` with a resolved configuration and returns the output
/// directory.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let start = Instant::now();
    let mut manifest = RunManifest::new(command.name(), cfg);
    let mut timing = serde_json::Map::new();
    match command {
        Command::Simulate(_) => run_simulate(cfg, &dir, &mut manifest)?,
        Command::Estimate(_) => run_estimate(cfg, &dir, &mut manifest)?,
        Command::Select(_) => run_select(cfg, &dir, &mut manifest, &mut timing)?,
        Command::Mc(_) => run_mc(cfg, &dir, &mut manifest)?,
        Command::Detrend(_) => run_detrend(cfg, &dir, &mut manifest)?,
    }
    std::fs::write(dir.join("config.toml"), cfg.to_toml())
        .map_err(|e| PipelineError::io(dir.join("config.toml"), e))?;
    manifest.outputs.push("config.toml".into());
    manifest.outputs.push(TIMING_FILE.into());
    manifest.write(&dir)?;
    timing.insert("wall_secs".into(), json!(start.elapsed().as_secs_f64()));
    write_json(&dir.join(TIMING_FILE), &timing)?;
    Ok(dir)
}

fn input(cfg: &RunConfig) -> Result<(Series, InputSummary)> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::Config("this command needs an input file (--input PATH)".into()))?;
    let data = load_csv(path)?;
    let summary = InputSummary {
        path: path.display().to_string(),
        observations: data.len(),
        series: data.names().to_vec(),
    };
    Ok((data, summary))
}

fn run_simulate(cfg: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let sim = &cfg.simulate;
    let dgp = sim.dgp()?;
    let path = simulate(&dgp)?;
    let (len, n) = (path.len(), path.dim());
    let mut values = path.values().as_slice().to_vec();
    if let Some(trend) = &sim.trend {
        if trend.len() != n {
            return Err(PipelineError::Config(format!(
                "simulate.trend has {} rows for {n} series",
                trend.len()
            )));
        }
        for (j, coefs) in trend.iter().enumerate() {
            for (t, v) in trend_values(coefs, len).into_iter().enumerate() {
                values[t * n + j] += v;
            }
        }
    }
    let dates = sim.start_month.as_deref().map(|m| monthly_dates(m, len)).transpose()?;
    let names = path.names().to_vec();
    let data = Series::with_labels(Mat::from_row_major(len, n, values)?, names, dates)?;
    write_csv(&data, &dir.join("data.csv"))?;
    manifest.outputs.push("data.csv".into());
    manifest.model = Some(dgp.spec().label());
    let names = dgp.spec().layout().param_names();
    manifest.results = json!({
        "true_parameters": names.iter().zip(dgp.params().as_slice()).map(|(k, v)| json!({"name": k, "value": v})).collect::<Vec<_>>(),
        "burn": dgp.burn(),
        "seed": dgp.seed(),
    });
    Ok(())
}

fn run_estimate(cfg: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let (data, summary) = input(cfg)?;
    let spec = cfg.model.spec(data.dim())?;
    let (kernel, res) = estimate(spec, &data, &cfg.smc, &cfg.prior)?;
    let names = spec.layout().param_names();
    let rows: Vec<PosteriorRow> = names
        .iter()
        .enumerate()
        .map(|(j, name)| PosteriorRow {
            name: name.clone(),
            mean: res.posterior_mean[j],
            sd: res.posterior_sd[j],
            map: res.map[j],
        })
        .collect();
    write_table(
        &dir.join("posterior.csv"),
        &["parameter", "mean", "sd", "map"],
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    format!("{}", r.mean),
                    format!("{}", r.sd),
                    format!("{}", r.map),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    write_diagnostics(&dir.join("diagnostics.csv"), &res.diagnostics)?;
    manifest
        .outputs
        .extend(["posterior.csv".into(), "diagnostics.csv".into()]);
    if cfg.dump_cloud {
        write_cloud(&res.cloud, &dir.join("cloud.bin"))?;
        manifest.outputs.push("cloud.bin".into());
    }
    manifest.input = Some(summary);
    manifest.model = Some(spec.label());
    manifest.log_mdd = Some(res.log_mdd);
    manifest.bic = Some(bic(&kernel, &res));
    manifest.map_log_likelihood = Some(res.map_log_likelihood);
    manifest.posterior = rows;
    manifest.diagnostics = res.diagnostics;
    manifest.deviations = deviations(Some(data.dim()), true, false);
    Ok(())
}

fn write_diagnostics(path: &Path, diags: &[marsmc_core::StageDiagnostics]) -> Result<()> {
    let rows: Vec<Vec<String>> = diags
        .iter()
        .map(|d| {
            vec![
                d.stage.to_string(),
                format!("{}", d.rho),
                format!("{}", d.ess),
                d.resampled.to_string(),
                cell(d.acceptance),
                format!("{}", d.scale),
                format!("{}", d.log_increment),
            ]
        })
        .collect();
    write_table(
        path,
        &[
            "stage",
            "rho",
            "ess",
            "resampled",
            "acceptance",
            "scale",
            "log_increment",
        ],
        &rows,
    )
}

fn run_select(
    cfg: &RunConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    timing: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let (data, summary) = input(cfg)?;
    let report = select_model(&data, &cfg.grid, &cfg.smc, &cfg.prior)?;
    let order = report.rank_by_mdd();
    let rows: Vec<Vec<String>> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let c = &report.candidates[i];
            vec![
                (rank + 1).to_string(),
                c.spec.label(),
                c.spec.r().to_string(),
                c.spec.s().to_string(),
                c.spec.dist().to_string(),
                c.k.to_string(),
                c.seed.to_string(),
                cell(c.log_mdd),
                cell(c.bic),
                cell(c.map_log_likelihood),
                (i == report.best_by_mdd).to_string(),
                (i == report.best_by_bic).to_string(),
                c.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_table(
        &dir.join("selection.csv"),
        &[
            "rank",
            "model",
            "r",
            "s",
            "dist",
            "k",
            "seed",
            "log_mdd",
            "bic",
            "map_log_likelihood",
            "best_by_mdd",
            "best_by_bic",
            "error",
        ],
        &rows,
    )?;
    manifest.outputs.push("selection.csv".into());
    timing.insert(
        "candidates".into(),
        json!(report
            .candidates
            .iter()
            .map(|c| json!({"model": c.spec.label(), "runtime_secs": c.runtime_secs}))
            .collect::<Vec<_>>()),
    );
    // runtimes live in the timing sidecar so the manifest is reproducible
    let mut stable = report.clone();
    stable.candidates.iter_mut().for_each(|c| c.runtime_secs = 0.0);
    let best = &report.candidates[report.best_by_bic];
    manifest.input = Some(summary);
    manifest.model = Some(report.best_spec_by_mdd().label());
    manifest.log_mdd = report.candidates[report.best_by_mdd].log_mdd;
    manifest.bic = best.bic;
    manifest.results = json!({
        "best_by_mdd": report.best_spec_by_mdd().label(),
        "best_by_bic": report.best_spec_by_bic().label(),
        "failed": report.num_failed(),
        "report": stable,
    });
    manifest.deviations = deviations(Some(data.dim()), false, true);
    Ok(())
}

fn run_mc(cfg: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let dgp = cfg.simulate.dgp()?;
    let report = mc_study(&dgp, cfg.mc.replications, cfg.mc.mode, &cfg.grid, &cfg.smc, &cfg.prior)?;
    match cfg.mc.mode {
        StudyMode::Estimation => {
            let rows: Vec<Vec<String>> = report
                .params
                .iter()
                .map(|p| {
                    [
                        p.truth,
                        p.mean_estimate,
                        p.variance,
                        p.mean_posterior_sd,
                        p.bias,
                        p.rmse,
                    ]
                    .iter()
                    .map(|v| format!("{v}"))
                    .fold(vec![p.name.clone()], |mut acc, v| {
                        acc.push(v);
                        acc
                    })
                })
                .collect();
            write_table(
                &dir.join("mc_summary.csv"),
                &[
                    "parameter",
                    "truth",
                    "mean_estimate",
                    "variance",
                    "mean_posterior_sd",
                    "bias",
                    "rmse",
                ],
                &rows,
            )?;
            manifest.outputs.push("mc_summary.csv".into());
        }
        StudyMode::Identification => {
            let ok = (report.replications - report.failures) as f64;
            let rows: Vec<Vec<String>> = report
                .frequencies
                .iter()
                .map(|c| {
                    vec![
                        c.candidate.clone(),
                        c.by_mdd.to_string(),
                        c.by_bic.to_string(),
                        format!("{}", 100.0 * c.by_mdd as f64 / ok),
                        format!("{}", 100.0 * c.by_bic as f64 / ok),
                    ]
                })
                .collect();
            write_table(
                &dir.join("mc_frequencies.csv"),
                &["model", "by_mdd", "by_bic", "pct_mdd", "pct_bic"],
                &rows,
            )?;
            manifest.outputs.push("mc_frequencies.csv".into());
        }
    }
    let rep_rows: Vec<Vec<String>> = report
        .records
        .iter()
        .map(|r| {
            vec![
                r.replication.to_string(),
                r.data_seed.to_string(),
                r.smc_seed.to_string(),
                cell(r.log_mdd),
                r.best_by_mdd.clone().unwrap_or_default(),
                r.best_by_bic.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_table(
        &dir.join("replications.csv"),
        &[
            "replication",
            "data_seed",
            "smc_seed",
            "log_mdd",
            "best_by_mdd",
            "best_by_bic",
            "error",
        ],
        &rep_rows,
    )?;
    manifest.outputs.push("replications.csv".into());
    manifest.model = Some(dgp.spec().label());
    manifest.deviations = deviations(Some(dgp.spec().n()), true, cfg.mc.mode == StudyMode::Identification);
    manifest.results = serde_json::to_value(&report).map_err(|e| PipelineError::Format(e.to_string()))?;
    Ok(())
}

fn run_detrend(cfg: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let (data, summary) = input(cfg)?;
    let degree = cfg.detrend.degree;
    let (resid, coefs) = detrend(&data, degree)?;
    write_csv(&resid, &dir.join("detrended.csv"))?;
    let mut header = vec!["series".to_string()];
    header.extend((0..=degree).map(|k| format!("c{k}")));
    let rows: Vec<Vec<String>> = data
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut r = vec![name.clone()];
            r.extend(coefs.row(j).iter().map(|v| format!("{v}")));
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&dir.join("trend.csv"), &header_refs, &rows)?;
    manifest.outputs.extend(["detrended.csv".into(), "trend.csv".into()]);
    manifest.input = Some(summary);
    manifest.results = json!({"degree": degree, "time_index": "t/(T-1) in [0, 1]"});
    Ok(())
}
