//! Flat `key=value` experiment configuration.
//!
//! A config file holds one `key=value` per line; blank lines and lines
//! starting with `#` are ignored. Every CSV written by the CLI starts with a
//! `# lifnet <command> <version>` line followed by `# key=value` lines for
//! the resolved config, and such a file is itself accepted as a config.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::analysis::meanfield_params_for;
use crate::error::{Error, Result};
use crate::meanfield::MeanFieldParams;
use crate::prob::WeightModel;
use crate::simulator::SimConfig;

/// Marker opening the self-describing header of every output file.
pub const HEADER_MARKER: &str = "# lifnet ";

pub const KEYS: [&str; 12] = [
    "N",
    "theta",
    "gamma",
    "phi",
    "mu",
    "sparsity_p",
    "x0",
    "v_min",
    "T",
    "runs",
    "seed",
    "output_path",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub theta: f64,
    /// Leak values; a comma list in the file.
    pub gamma: Vec<f64>,
    /// Coupling values; a comma list in the file.
    pub phi: Vec<f64>,
    pub mu: f64,
    /// Probability that a weight is zero.
    pub sparsity_p: f64,
    pub x0: f64,
    pub v_min: f64,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    /// Output file; standard output when absent.
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            theta: 1.0,
            gamma: vec![0.0],
            phi: vec![5.0],
            mu: 0.0,
            sparsity_p: 0.0,
            x0: 0.15,
            v_min: 0.0,
            horizon: 50,
            runs: 100,
            seed: 1,
            output_path: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{key}` value `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let list = value
        .split(',')
        .map(|v| parse_num::<f64>(key, v))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(Error::Config(format!("`{key}` grid is empty")));
    }
    Ok(list)
}

fn join(list: &[f64]) -> String {
    list.iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" => self.n = parse_num(key, value)?,
            "theta" => self.theta = parse_num(key, value)?,
            "gamma" => self.gamma = parse_list(key, value)?,
            "phi" => self.phi = parse_list(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "sparsity_p" => self.sparsity_p = parse_num(key, value)?,
            "x0" => self.x0 = parse_num(key, value)?,
            "v_min" => self.v_min = parse_num(key, value)?,
            "T" => self.horizon = parse_num(key, value)?,
            "runs" => self.runs = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "output_path" => self.output_path = Some(PathBuf::from(value.trim())),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn apply_line(&mut self, line: &str, lineno: usize) -> Result<()> {
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {lineno}: expected key=value, got `{line}`"))
        })?;
        self.set(key.trim(), value.trim())
    }

    /// Parses a config file or the header of an output file over the
    /// defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.merge_text(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies the entries of `text` without validating.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        let mut lines = text.lines().enumerate();
        if text.starts_with(HEADER_MARKER) {
            lines.next();
            for (i, line) in lines {
                let Some(entry) = line.strip_prefix("# ") else {
                    break;
                };
                self.apply_line(entry, i + 1)?;
            }
            return Ok(());
        }
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.apply_line(line, i + 1)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("`runs` must be >= 1".into()));
        }
        for (phi, gamma) in self.cells() {
            self.sim_config(phi, gamma)?;
        }
        Ok(())
    }

    /// Cross product of the `phi` and `gamma` grids, `phi` major.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.phi
            .iter()
            .flat_map(|&p| self.gamma.iter().map(move |&g| (p, g)))
            .collect()
    }

    /// The only cell; errors for grids.
    pub fn single_cell(&self) -> Result<(f64, f64)> {
        match self.cells().as_slice() {
            [cell] => Ok(*cell),
            cells => Err(Error::Config(format!(
                "this command takes a single (phi, gamma) cell, the grid has {}",
                cells.len()
            ))),
        }
    }

    pub fn weight_model(&self, phi: f64) -> Result<WeightModel> {
        WeightModel::new(phi, self.mu, self.sparsity_p, self.theta)
    }

    pub fn sim_config(&self, phi: f64, gamma: f64) -> Result<SimConfig> {
        let config = SimConfig {
            n: self.n,
            model: self.weight_model(phi)?,
            gamma,
            x0: self.x0,
            v_min: self.v_min,
            horizon: self.horizon,
            seed: self.seed,
            self_connections: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn meanfield_params(&self, phi: f64, gamma: f64) -> Result<MeanFieldParams> {
        meanfield_params_for(&self.sim_config(phi, gamma)?)
    }

    /// Self-describing header; the output path is left out so that the
    /// same experiment written to two places is byte-identical.
    pub fn header(&self, command: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{HEADER_MARKER}{command} {}",
            env!("CARGO_PKG_VERSION")
        );
        let entries = [
            ("N", self.n.to_string()),
            ("theta", self.theta.to_string()),
            ("gamma", join(&self.gamma)),
            ("phi", join(&self.phi)),
            ("mu", self.mu.to_string()),
            ("sparsity_p", self.sparsity_p.to_string()),
            ("x0", self.x0.to_string()),
            ("v_min", self.v_min.to_string()),
            ("T", self.horizon.to_string()),
            ("runs", self.runs.to_string()),
            ("seed", self.seed.to_string()),
        ];
        for (k, v) in entries {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}
