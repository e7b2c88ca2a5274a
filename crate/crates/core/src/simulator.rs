//! Discrete-time leaky integrate-and-fire network with random weights.
//!
//! Potentials evolve as
//! `V_i(t+1) = gamma * V_i(t) + sum_{j fired at t} W_ij`, where a neuron that
//! fired at `t` enters the leak term with potential 0. The result is floored
//! at `v_min` and the neuron fires when it reaches `theta`. Only step 0
//! receives external input: each neuron is stimulated with probability `x0`.
//!
//! Randomness is drawn from ChaCha streams keyed by `(seed, network_index)`.
//! Column `j` of the weight matrix (the outgoing weights of neuron `j`) has
//! its own stream, and the stimulus another, so any subset of columns can be
//! realized on its own and agrees bit for bit with the full matrix.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::prob::WeightModel;

const STREAM_WEIGHTS: u64 = 0;
const STREAM_STIMULUS: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub model: WeightModel,
    pub gamma: f64,
    /// Probability that a neuron is stimulated at step 0.
    pub x0: f64,
    /// Potential floor, `<= 0`. `-inf` disables it.
    pub v_min: f64,
    pub horizon: usize,
    pub seed: u64,
    /// Whether `W_ii` is sampled like any other weight.
    pub self_connections: bool,
}

impl SimConfig {
    /// Defaults: `v_min = 0`, horizon 50, seed 0, self-connections on.
    pub fn new(n: usize, model: WeightModel, gamma: f64, x0: f64) -> Result<Self> {
        let config = Self {
            n,
            model,
            gamma,
            x0,
            v_min: 0.0,
            horizon: 50,
            seed: 0,
            self_connections: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_v_min(mut self, v_min: f64) -> Self {
        self.v_min = v_min;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n == 0 {
            return Err(invalid("N", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid(
                "gamma",
                format!("must lie in [0, 1], got {}", self.gamma),
            ));
        }
        if !(0.0..=1.0).contains(&self.x0) {
            return Err(invalid(
                "x0",
                format!("must lie in [0, 1], got {}", self.x0),
            ));
        }
        if self.v_min.is_nan() || self.v_min > 0.0 {
            return Err(invalid(
                "v_min",
                format!("must be <= 0, got {}", self.v_min),
            ));
        }
        if self.horizon == 0 {
            return Err(invalid("T", "must be >= 1"));
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, network_index: u64, stream: u64, sub: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&network_index.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((stream << 48) | sub);
    rng
}

/// Dense weight matrix of one realized network, stored column-major:
/// `weight(i, j)` is the input of neuron `i` from neuron `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    n: usize,
    weights: Vec<f64>,
}

impl NetworkRealization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.n + i]
    }

    /// Outgoing weights of neuron `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.weights[j * self.n..(j + 1) * self.n]
    }

    fn fill_column(&mut self, config: &SimConfig, network_index: u64, j: usize) {
        let n = self.n;
        let model = &config.model;
        let mean = model.mu / n as f64;
        let std = model.phi / (n as f64).sqrt();
        let sparse = model.sparsity_p > 0.0;
        let mut rng = stream_rng(config.seed, network_index, STREAM_WEIGHTS, j as u64);
        let column = &mut self.weights[j * n..(j + 1) * n];
        for (i, w) in column.iter_mut().enumerate() {
            let zero = sparse && rng.random::<f64>() < model.sparsity_p;
            let z: f64 = rng.sample(StandardNormal);
            *w = if zero || (!config.self_connections && i == j) {
                0.0
            } else {
                mean + std * z
            };
        }
    }
}

/// Samples the full weight matrix of network `network_index`.
pub fn realize_network(config: &SimConfig, network_index: u64) -> NetworkRealization {
    let n = config.n;
    let mut net = NetworkRealization {
        n,
        weights: vec![0.0; n * n],
    };
    for j in 0..n {
        net.fill_column(config, network_index, j);
    }
    net
}

/// Samples only the listed columns; the others read as zero. The sampled
/// columns are identical to those of [`realize_network`], so a step in which
/// only these neurons fired gives the same result as with the full matrix.
pub fn realize_network_columns(
    config: &SimConfig,
    network_index: u64,
    columns: &[usize],
) -> NetworkRealization {
    let n = config.n;
    let mut net = NetworkRealization {
        n,
        weights: vec![0.0; n * n],
    };
    for &j in columns {
        net.fill_column(config, network_index, j);
    }
    net
}

/// Step-0 stimulus of network `network_index`: each neuron independently
/// with probability `x0`.
pub fn stimulus(config: &SimConfig, network_index: u64) -> Vec<bool> {
    let mut rng = stream_rng(config.seed, network_index, STREAM_STIMULUS, 0);
    (0..config.n)
        .map(|_| rng.random::<f64>() < config.x0)
        .collect()
}

/// Advances the network by one step in place.
///
/// On entry `fired` marks the neurons that fired at the previous step; on
/// exit it marks those firing now. Returns the number of firing neurons.
pub fn step_network(
    potentials: &mut [f64],
    fired: &mut [bool],
    realization: &NetworkRealization,
    config: &SimConfig,
) -> usize {
    debug_assert_eq!(potentials.len(), realization.n);
    debug_assert_eq!(fired.len(), realization.n);
    let active: Vec<usize> = fired
        .iter()
        .enumerate()
        .filter_map(|(j, &f)| f.then_some(j))
        .collect();
    for (v, &f) in potentials.iter_mut().zip(fired.iter()) {
        *v = if f { 0.0 } else { config.gamma * *v };
    }
    for &j in &active {
        for (v, w) in potentials.iter_mut().zip(realization.column(j)) {
            *v += w;
        }
    }
    let theta = config.model.theta;
    let mut count = 0;
    for (v, f) in potentials.iter_mut().zip(fired.iter_mut()) {
        *v = v.max(config.v_min);
        *f = *v >= theta;
        count += *f as usize;
    }
    count
}

/// Record of one simulated network.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// `X_t` for `t = 0..=horizon`.
    pub spike_counts: Vec<usize>,
    /// Firing times of each neuron, ascending. Step-0 stimulation counts.
    pub raster: Vec<Vec<u32>>,
    pub final_potentials: Vec<f64>,
    /// Smallest potential seen after any update.
    pub min_potential: f64,
}

impl SimTrace {
    pub fn n(&self) -> usize {
        self.raster.len()
    }

    pub fn activity(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.spike_counts.iter().map(|&x| x as f64 / n).collect()
    }

    /// One line per neuron, firing times separated by spaces.
    pub fn write_raster<W: Write>(&self, mut out: W) -> io::Result<()> {
        for times in &self.raster {
            let line: Vec<String> = times.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// CSV with columns `t,X_t`.
    pub fn write_counts_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,X_t")?;
        for (t, x) in self.spike_counts.iter().enumerate() {
            writeln!(out, "{t},{x}")?;
        }
        Ok(())
    }
}

/// Runs a realized network from a given step-0 firing pattern, with all
/// potentials starting at zero.
pub fn simulate_realization(
    config: &SimConfig,
    realization: &NetworkRealization,
    initial: Vec<bool>,
) -> SimTrace {
    let n = config.n;
    let mut fired = initial;
    let mut potentials = vec![0.0; n];
    let mut raster: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut spike_counts = Vec::with_capacity(config.horizon + 1);
    let record = |fired: &[bool], t: u32, raster: &mut Vec<Vec<u32>>| {
        let mut count = 0;
        for (i, _) in fired.iter().enumerate().filter(|(_, &f)| f) {
            raster[i].push(t);
            count += 1;
        }
        count
    };
    spike_counts.push(record(&fired, 0, &mut raster));
    let mut min_potential = 0.0f64;
    for t in 1..=config.horizon {
        step_network(&mut potentials, &mut fired, realization, config);
        min_potential = potentials.iter().copied().fold(min_potential, f64::min);
        spike_counts.push(record(&fired, t as u32, &mut raster));
    }
    SimTrace {
        spike_counts,
        raster,
        final_potentials: potentials,
        min_potential,
    }
}

/// Simulates network `network_index` from its seeded stimulus.
pub fn run_simulation(config: &SimConfig, network_index: u64) -> SimTrace {
    let realization = realize_network(config, network_index);
    simulate_realization(config, &realization, stimulus(config, network_index))
}
