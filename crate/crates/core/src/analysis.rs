//! Ensembles of simulated networks and their comparison with the mean-field
//! prediction.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::meanfield::{
    fixed_points_forward, predict_isi, run_meanfield, MeanFieldParams, VminMode,
};
use crate::prob::{gaussian_tail, WeightModel};
use crate::simulator::{run_simulation, SimConfig, SimTrace};

pub const DEFAULT_RUNS: usize = 100;
/// First step of the steady-state window used for ISI statistics.
pub const STEADY_STATE_START: usize = 20;
/// Number of final steps averaged into a simulated asymptote.
pub const ASYMPTOTE_WINDOW: usize = 20;
/// Coupling band (open interval) where finite networks break the
/// independence assumption.
pub const FAILURE_BAND: (f64, f64) = (1.5, 2.0);
pub const RANDOM_SUM_SAMPLES: usize = 100_000;

pub fn in_failure_band(phi: f64) -> bool {
    phi > FAILURE_BAND.0 && phi < FAILURE_BAND.1
}

/// Mean-field recursion matching a simulation: potentials floored at zero
/// use the halved decay, any other floor the full one.
pub fn meanfield_params_for(config: &SimConfig) -> Result<MeanFieldParams> {
    let mode = if config.v_min == 0.0 {
        VminMode::ClampAtZero
    } else {
        VminMode::Unclamped
    };
    MeanFieldParams::new(config.model, config.gamma, config.x0, mode, config.horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub runs: usize,
    pub n: usize,
    /// Across-network mean of `X_t / N`.
    pub mean_activity: Vec<f64>,
    /// Across-network sample standard deviation of `X_t / N` (0 for a
    /// single run).
    pub std_activity: Vec<f64>,
    /// Per-network average activity over the last [`ASYMPTOTE_WINDOW`] steps.
    pub network_asymptotes: Vec<f64>,
    /// Pooled interspike intervals with both spikes inside the window.
    pub isi_histogram: BTreeMap<u32, u64>,
    /// Inclusive steady-state window.
    pub window: (usize, usize),
    /// Spikes per neuron per step inside the window, averaged over neurons
    /// and networks.
    pub mean_frequency: f64,
}

impl EnsembleStats {
    pub fn standard_error(&self, t: usize) -> f64 {
        self.std_activity[t] / (self.runs as f64).sqrt()
    }

    /// Mean activity averaged over the last [`ASYMPTOTE_WINDOW`] steps.
    pub fn asymptote(&self) -> f64 {
        mean(&self.network_asymptotes)
    }

    pub fn asymptote_std(&self) -> f64 {
        sample_std(&self.network_asymptotes)
    }

    /// Average of `mean_activity` over the steady-state window.
    pub fn window_average(&self) -> f64 {
        let (a, b) = self.window;
        self.mean_activity[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
    }

    pub fn isi_count(&self) -> u64 {
        self.isi_histogram.values().sum()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

struct NetworkSummary {
    activity: Vec<f64>,
    isis: Vec<u32>,
    window_spikes: u64,
}

fn summarize(trace: &SimTrace, window: (usize, usize)) -> NetworkSummary {
    let (a, b) = (window.0 as u32, window.1 as u32);
    let mut isis = Vec::new();
    let mut window_spikes = 0u64;
    for times in &trace.raster {
        let inside: Vec<u32> = times
            .iter()
            .copied()
            .filter(|&t| t >= a && t <= b)
            .collect();
        window_spikes += inside.len() as u64;
        isis.extend(inside.windows(2).map(|w| w[1] - w[0]));
    }
    NetworkSummary {
        activity: trace.activity(),
        isis,
        window_spikes,
    }
}

/// Simulates `runs` networks (indices `0..runs`) with the default
/// steady-state window `[20, T]`.
pub fn ensemble(config: &SimConfig, runs: usize) -> Result<EnsembleStats> {
    ensemble_with_window(config, runs, STEADY_STATE_START)
}

/// [`ensemble`] with a custom window start; the window ends at the horizon
/// and starts at 0 when the horizon is shorter than `window_start`.
pub fn ensemble_with_window(
    config: &SimConfig,
    runs: usize,
    window_start: usize,
) -> Result<EnsembleStats> {
    config.validate()?;
    if runs == 0 {
        return Err(invalid("runs", "must be >= 1"));
    }
    let horizon = config.horizon;
    let window = (
        if window_start <= horizon {
            window_start
        } else {
            0
        },
        horizon,
    );
    // Networks run in parallel; the reduction below is in index order.
    let summaries: Vec<NetworkSummary> = (0..runs as u64)
        .into_par_iter()
        .map(|idx| summarize(&run_simulation(config, idx), window))
        .collect();

    let steps = horizon + 1;
    let mut mean_activity = vec![0.0; steps];
    for s in &summaries {
        for (m, a) in mean_activity.iter_mut().zip(&s.activity) {
            *m += a;
        }
    }
    for m in &mut mean_activity {
        *m /= runs as f64;
    }
    let std_activity = (0..steps)
        .map(|t| {
            let column: Vec<f64> = summaries.iter().map(|s| s.activity[t]).collect();
            sample_std(&column)
        })
        .collect();
    let tail_start = steps.saturating_sub(ASYMPTOTE_WINDOW);
    let network_asymptotes = summaries
        .iter()
        .map(|s| mean(&s.activity[tail_start..]))
        .collect();
    let mut isi_histogram = BTreeMap::new();
    for s in &summaries {
        for &u in &s.isis {
            *isi_histogram.entry(u).or_insert(0) += 1;
        }
    }
    let window_len = (window.1 - window.0 + 1) as f64;
    let mean_frequency = summaries
        .iter()
        .map(|s| s.window_spikes as f64 / (config.n as f64 * window_len))
        .sum::<f64>()
        / runs as f64;

    Ok(EnsembleStats {
        runs,
        n: config.n,
        mean_activity,
        std_activity,
        network_asymptotes,
        isi_histogram,
        window,
        mean_frequency,
    })
}

/// Total-variation distance between the pooled ISI histogram and
/// `Geometric(predicted_param)` on `{1, 2, ...}`, both restricted to the
/// observed support `[1, max ISI]` and normalized there.
pub fn isi_geometric_fit(stats: &EnsembleStats, predicted_param: f64) -> Result<f64> {
    isi_tv_distance(&stats.isi_histogram, predicted_param)
}

pub fn isi_tv_distance(histogram: &BTreeMap<u32, u64>, p: f64) -> Result<f64> {
    let total: u64 = histogram.values().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(
            "predicted_param",
            format!("must lie in (0, 1], got {p}"),
        ));
    }
    let max = *histogram.keys().next_back().unwrap_or(&1);
    let geo: Vec<f64> = (1..=max)
        .map(|u| p * (1.0 - p).powi(u as i32 - 1))
        .collect();
    let geo_mass: f64 = geo.iter().sum();
    let distance = (1..=max)
        .zip(&geo)
        .map(|(u, g)| {
            let emp = histogram.get(&u).copied().unwrap_or(0) as f64 / total as f64;
            (emp - g / geo_mass).abs()
        })
        .sum::<f64>();
    Ok(0.5 * distance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteRow {
    pub phi: f64,
    pub gamma: f64,
    pub predicted: f64,
    pub simulated_mean: f64,
    pub simulated_std: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientRow {
    pub t: usize,
    pub predicted: f64,
    pub simulated_mean: f64,
    pub simulated_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiFit {
    pub geometric_param: f64,
    pub tv_distance: f64,
}

/// Comparison for one `(phi, gamma)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub asymptote: AsymptoteRow,
    pub transient: Vec<TransientRow>,
    /// Absent when either side predicts death or no ISI was observed.
    pub isi_fit: Option<IsiFit>,
    pub in_failure_band: bool,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub cells: Vec<CellReport>,
}

impl ComparisonReport {
    pub fn asymptote_rows(&self) -> impl Iterator<Item = &AsymptoteRow> {
        self.cells.iter().map(|c| &c.asymptote)
    }
}

/// Prediction and ensemble for one cell.
pub fn compare_cell(config: &SimConfig, runs: usize) -> Result<CellReport> {
    let params = meanfield_params_for(config)?;
    let trace = run_meanfield(&params)?;
    let stats = ensemble(config, runs)?;
    let predicted = trace.last();
    let simulated_mean = stats.asymptote();
    let asymptote = AsymptoteRow {
        phi: config.model.phi,
        gamma: config.gamma,
        predicted,
        simulated_mean,
        simulated_std: stats.asymptote_std(),
        abs_error: (predicted - simulated_mean).abs(),
    };
    let transient = (0..=config.horizon)
        .map(|t| TransientRow {
            t,
            predicted: trace.x[t],
            simulated_mean: stats.mean_activity[t],
            simulated_std: stats.std_activity[t],
        })
        .collect();
    let isi_fit = match predict_isi(&fixed_points_forward(&params)?, &config.model) {
        Ok(isi) if stats.isi_count() > 0 => Some(IsiFit {
            geometric_param: isi.geometric_param,
            tv_distance: isi_geometric_fit(&stats, isi.geometric_param)?,
        }),
        _ => None,
    };
    Ok(CellReport {
        asymptote,
        transient,
        isi_fit,
        in_failure_band: in_failure_band(config.model.phi),
        runs,
    })
}

/// Runs every cell of the `phi_grid x gamma_list` cross product, in
/// row-major order.
pub fn sweep(
    phi_grid: &[f64],
    gamma_list: &[f64],
    base: &SimConfig,
    runs: usize,
) -> Result<ComparisonReport> {
    if phi_grid.is_empty() {
        return Err(invalid("phi", "grid is empty"));
    }
    if gamma_list.is_empty() {
        return Err(invalid("gamma", "grid is empty"));
    }
    let mut cells = Vec::with_capacity(phi_grid.len() * gamma_list.len());
    for &phi in phi_grid {
        for &gamma in gamma_list {
            let config = SimConfig {
                model: WeightModel { phi, ..base.model },
                gamma,
                ..*base
            };
            config.validate()?;
            cells.push(compare_cell(&config, runs)?);
        }
    }
    Ok(ComparisonReport { cells })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSumRow {
    pub n: usize,
    /// Monte Carlo estimate of `E f(X)`.
    pub mean_of_f: f64,
    /// `f(E X)`.
    pub f_of_mean: f64,
    pub error: f64,
    /// Standard error of `mean_of_f`.
    pub std_error: f64,
}

/// Gap between `E f(X)` and `f(E X)` for `X ~ Binomial(N, x0)` and
/// `f(k) = P(Normal(0, k sigma^2) > theta)` with `sigma = phi / sqrt(N)`.
pub fn randomsum_approx_check(
    n_list: &[usize],
    x0: f64,
    model: &WeightModel,
    seed: u64,
) -> Result<Vec<RandomSumRow>> {
    model.validate()?;
    if n_list.is_empty() {
        return Err(invalid("N_list", "must not be empty"));
    }
    if n_list.windows(2).any(|w| w[0] > w[1]) || n_list[0] == 0 {
        return Err(invalid("N_list", "must be ascending and >= 1"));
    }
    if !(0.0..=1.0).contains(&x0) {
        return Err(invalid("x0", format!("must lie in [0, 1], got {x0}")));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sigma = model.phi / (n as f64).sqrt();
        let f = |k: f64| {
            if k == 0.0 || sigma == 0.0 {
                0.0
            } else {
                gaussian_tail(model.theta / (sigma * k.sqrt()))
            }
        };
        let binomial = Binomial::new(n as u64, x0).map_err(|e| invalid("x0", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
        let samples: Vec<f64> = (0..RANDOM_SUM_SAMPLES)
            .map(|_| f(binomial.sample(&mut rng) as f64))
            .collect();
        let count = RANDOM_SUM_SAMPLES as f64;
        let mean_of_f = samples.iter().sum::<f64>() / count;
        let var = samples.iter().map(|v| (v - mean_of_f).powi(2)).sum::<f64>() / (count - 1.0);
        let f_of_mean = f(n as f64 * x0);
        rows.push(RandomSumRow {
            n,
            mean_of_f,
            f_of_mean,
            error: (mean_of_f - f_of_mean).abs(),
            std_error: (var / count).sqrt(),
        });
    }
    Ok(rows)
}
