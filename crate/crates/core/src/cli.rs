//! `lifnet` command-line interface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{compare_cell, ensemble};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::meanfield::{
    death_threshold, fixed_points_forward, fixed_points_simple, predict_isi, run_meanfield,
};
use crate::simulator::run_simulation;

#[derive(Debug, Parser)]
#[command(
    name = "lifnet",
    version,
    about = "Mean-field prediction and simulation of random LIF networks"
)]
pub struct Cli {
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-field trajectory: columns t,x_pred.
    Predict(ConfigArgs),
    /// Ensemble simulation: columns t,mean_activity,std_activity.
    Simulate(SimulateArgs),
    /// Prediction against simulation for every (phi, gamma) cell.
    Compare(ConfigArgs),
    /// Fixed points, stability, death threshold and network frequency.
    FixedPoint(ConfigArgs),
}

/// Config sources. Flags override the file. `sparsity_p` is the
/// probability that a weight is exactly zero.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// key=value config file, or a CSV previously written by lifnet.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    #[arg(long = "N", value_name = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Leak, or comma list.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Coupling factor, or comma list.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long = "sparsity-p")]
    pub sparsity_p: Option<String>,
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long = "v-min", allow_hyphen_values = true)]
    pub v_min: Option<String>,
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<String>,
    #[arg(long)]
    pub runs: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, short = 'o')]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Raster of network 0: one line per neuron, firing times.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    /// Spike counts of network 0 as CSV (t,X_t).
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            config.merge_text(&text)?;
        }
        let flags = [
            ("N", &self.n),
            ("theta", &self.theta),
            ("gamma", &self.gamma),
            ("phi", &self.phi),
            ("mu", &self.mu),
            ("sparsity_p", &self.sparsity_p),
            ("x0", &self.x0),
            ("v_min", &self.v_min),
            ("T", &self.horizon),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("output_path", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

fn emit(config: &ExperimentConfig, body: &str, stdout: &mut dyn Write) -> Result<()> {
    match &config.output_path {
        Some(path) => std::fs::write(path, body).map_err(|e| io_err(path, e)),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| Error::Config(format!("cannot write output: {e}"))),
    }
}

pub fn cmd_predict(config: &ExperimentConfig) -> Result<String> {
    let (phi, gamma) = config.single_cell()?;
    let trace = run_meanfield(&config.meanfield_params(phi, gamma)?)?;
    let mut out = config.header("predict");
    out.push_str("t,x_pred\n");
    for (t, x) in trace.x.iter().enumerate() {
        out.push_str(&format!("{t},{x}\n"));
    }
    Ok(out)
}

pub fn cmd_simulate(config: &ExperimentConfig) -> Result<String> {
    let (phi, gamma) = config.single_cell()?;
    let stats = ensemble(&config.sim_config(phi, gamma)?, config.runs)?;
    let mut out = config.header("simulate");
    out.push_str("t,mean_activity,std_activity\n");
    for (t, (m, s)) in stats
        .mean_activity
        .iter()
        .zip(&stats.std_activity)
        .enumerate()
    {
        out.push_str(&format!("{t},{m},{s}\n"));
    }
    Ok(out)
}

pub fn cmd_compare(config: &ExperimentConfig) -> Result<String> {
    let mut out = config.header("compare");
    out.push_str("phi,gamma,t,x_pred,x_sim_mean,x_sim_std,comment\n");
    for (phi, gamma) in config.cells() {
        let cell = compare_cell(&config.sim_config(phi, gamma)?, config.runs)?;
        for row in &cell.transient {
            out.push_str(&format!(
                "{phi},{gamma},{},{},{},{},\n",
                row.t, row.predicted, row.simulated_mean, row.simulated_std
            ));
        }
        let a = cell.asymptote;
        let mut comment = format!("abs_error={}", a.abs_error);
        if let Some(fit) = cell.isi_fit {
            comment.push_str(&format!(
                ";isi_geometric_p={};isi_tv={}",
                fit.geometric_param, fit.tv_distance
            ));
        }
        if cell.in_failure_band {
            comment.push_str(";failure_band");
        }
        out.push_str(&format!(
            "{phi},{gamma},asymptote,{},{},{},{comment}\n",
            a.predicted, a.simulated_mean, a.simulated_std
        ));
    }
    Ok(out)
}

pub fn cmd_fixed_point(config: &ExperimentConfig) -> Result<String> {
    let (phi, gamma) = config.single_cell()?;
    let model = config.weight_model(phi)?;
    let (report, method) = if gamma == 0.0 && config.mu == 0.0 {
        (fixed_points_simple(&model)?, "roots of p(x) = x")
    } else {
        (
            fixed_points_forward(&config.meanfield_params(phi, gamma)?)?,
            "forward iteration",
        )
    };
    let mut out = String::new();
    out.push_str(&format!(
        "phi = {phi}, gamma = {gamma}, theta = {}, mu = {}, sparsity_p = {}\n",
        config.theta, config.mu, config.sparsity_p
    ));
    out.push_str(&format!(
        "death threshold (2e/3)^(3/4) pi^(1/4) theta = {}\n",
        death_threshold(config.theta)
    ));
    out.push_str(&format!("method: {method}\n"));
    for fp in &report.fixed_points {
        let kind = if fp.stable { "stable" } else { "unstable" };
        out.push_str(&format!("fixed point x* = {} ({kind})\n", fp.value));
    }
    if report.death_only {
        out.push_str("death only: neural death is the only steady state\n");
    }
    match predict_isi(&report, &model) {
        Ok(isi) => {
            out.push_str(&format!(
                "network frequency f* = p(x*) = {}\n",
                isi.frequency
            ));
            out.push_str(&format!(
                "ISI law: geometric with parameter {}\n",
                isi.geometric_param
            ));
            if !isi.bound_holds {
                out.push_str("note: p(x*) > x* at these parameters\n");
            }
        }
        Err(Error::DeathOnly) => out.push_str("network frequency f* = 0\n"),
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(threads) = cli.threads {
        // Fails only if a pool was already installed, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match &cli.command {
        Command::Predict(args) => {
            let config = args.resolve()?;
            emit(&config, &cmd_predict(&config)?, stdout)
        }
        Command::Simulate(args) => {
            let config = args.config.resolve()?;
            emit(&config, &cmd_simulate(&config)?, stdout)?;
            if args.raster.is_some() || args.counts.is_some() {
                let (phi, gamma) = config.single_cell()?;
                let trace = run_simulation(&config.sim_config(phi, gamma)?, 0);
                if let Some(path) = &args.raster {
                    let file = File::create(path).map_err(|e| io_err(path, e))?;
                    trace
                        .write_raster(BufWriter::new(file))
                        .map_err(|e| io_err(path, e))?;
                }
                if let Some(path) = &args.counts {
                    let file = File::create(path).map_err(|e| io_err(path, e))?;
                    trace
                        .write_counts_csv(BufWriter::new(file))
                        .map_err(|e| io_err(path, e))?;
                }
            }
            Ok(())
        }
        Command::Compare(args) => {
            let config = args.resolve()?;
            emit(&config, &cmd_compare(&config)?, stdout)
        }
        Command::FixedPoint(args) => {
            let config = args.resolve()?;
            emit(&config, &cmd_fixed_point(&config)?, stdout)
        }
    }
}
