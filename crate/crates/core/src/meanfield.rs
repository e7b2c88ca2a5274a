//! Mean-field dynamics of the expected spiking activity.
//!
//! A neuron reset at step `k` (it fired, or `k = 0` when every potential
//! starts at zero) accumulates the discounted charge
//! `u_t^k = sum_{i=k}^{t} g^{t-i} x_i`, with `g` the effective decay. Its
//! probability of firing next at `t + 1` is
//! `P(k, t+1) = p(u_t^k) * prod_{m=k+1}^{t} (1 - p(u_{m-1}^k))`, and the
//! activity is `x_{t+1} = sum_k xhat_k P(k, t+1)` with `xhat_0 = 1` and
//! `xhat_k = x_k` otherwise.
//!
//! Every reset cohort is a [`Branch`] carrying its charge and the logarithm
//! of its running survival product, so a step costs one charge-probability
//! evaluation per live cohort. Cohorts whose survival falls below
//! [`SURVIVAL_CUTOFF`] are dropped.

use crate::error::{invalid, Error, Result};
use crate::prob::{p_phi_deriv, WeightModel};

/// Survival below which a reset cohort is dropped from the recursion.
pub const SURVIVAL_CUTOFF: f64 = 1e-15;
/// Per-step change under which the trajectory counts as settled.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Number of consecutive settled steps required for convergence.
pub const CONVERGENCE_WINDOW: usize = 5;
/// Default horizon.
pub const DEFAULT_HORIZON: usize = 50;
/// Largest step accepted by [`pgf_eval`]; the recursion tree has `2^t` nodes.
pub const PGF_MAX_STEP: usize = 20;
/// Grid resolution of the fixed-point scan.
pub const FIXED_POINT_GRID: usize = 10_000;

const PROB_SLACK: f64 = 1e-9;

/// How the potential floor enters the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VminMode {
    /// Potentials floored at zero: previous charge is halved at every step,
    /// so the decay becomes `gamma / 2`.
    ClampAtZero,
    /// Unbounded potentials: decay `gamma`.
    Unclamped,
}

impl VminMode {
    pub fn effective_decay(self, gamma: f64) -> f64 {
        match self {
            VminMode::ClampAtZero => gamma / 2.0,
            VminMode::Unclamped => gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldParams {
    pub model: WeightModel,
    /// Leak factor in `[0, 1]`.
    pub gamma: f64,
    /// Initially stimulated fraction.
    pub x0: f64,
    pub vmin_mode: VminMode,
    pub horizon: usize,
}

impl MeanFieldParams {
    pub fn new(
        model: WeightModel,
        gamma: f64,
        x0: f64,
        vmin_mode: VminMode,
        horizon: usize,
    ) -> Result<Self> {
        let params = Self {
            model,
            gamma,
            x0,
            vmin_mode,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Clamp-at-zero recursion with the default horizon.
    pub fn clamped(model: WeightModel, gamma: f64, x0: f64) -> Result<Self> {
        Self::new(model, gamma, x0, VminMode::ClampAtZero, DEFAULT_HORIZON)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
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
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be >= 1"));
        }
        Ok(())
    }

    fn decay(&self) -> f64 {
        self.vmin_mode.effective_decay(self.gamma)
    }
}

/// One entry of the survival table: the cohort reset at `origin` fires
/// next at the table's step with probability `fire_prob`, having
/// accumulated `charge` just before.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEntry {
    pub origin: usize,
    pub charge: f64,
    pub fire_prob: f64,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    origin: usize,
    weight: f64,
    charge: f64,
    log_survival: f64,
}

/// Trajectory of the mean-field recursion together with its survival table.
#[derive(Debug, Clone)]
pub struct MeanFieldTrace {
    /// `x[t]` for `t = 0..=horizon`.
    pub x: Vec<f64>,
    /// `survival[t]` lists `P(k, t)` for every live cohort `k < t`.
    /// Cohorts with zero weight or dropped survival are omitted; their
    /// probability is 0 or contributes nothing.
    pub survival: Vec<Vec<SurvivalEntry>>,
    pub converged_at: Option<usize>,
    branches: Vec<Branch>,
}

impl MeanFieldTrace {
    /// Trace holding only `x_0`.
    pub fn start(params: &MeanFieldParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            x: vec![params.x0],
            survival: vec![Vec::new()],
            converged_at: None,
            branches: vec![Branch {
                origin: 0,
                weight: 1.0,
                charge: params.x0,
                log_survival: 0.0,
            }],
        })
    }

    /// Index of the latest computed step.
    pub fn t(&self) -> usize {
        self.x.len() - 1
    }

    pub fn last(&self) -> f64 {
        self.x[self.t()]
    }

    /// `P(k, t)`; zero when the cohort is absent from the table.
    pub fn fire_prob(&self, k: usize, t: usize) -> f64 {
        self.survival
            .get(t)
            .and_then(|row| row.iter().find(|e| e.origin == k))
            .map_or(0.0, |e| e.fire_prob)
    }

    /// Probability that the cohort reset at `k` has not fired since, if the
    /// cohort is still tracked.
    pub fn survival_of(&self, k: usize) -> Option<f64> {
        self.branches
            .iter()
            .find(|b| b.origin == k)
            .map(|b| b.log_survival.exp())
    }

    /// Weighted mass of the not-yet-fired cohorts, `sum_k xhat_k S_k(t)`.
    /// Equals 1 up to the dropped cohorts.
    pub fn live_mass(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight * b.log_survival.exp())
            .sum()
    }

    /// Appends `x_{t+1}` and the row `P(., t+1)`.
    pub fn step_general(&mut self, params: &MeanFieldParams) -> Result<()> {
        let next_t = self.x.len();
        let log_cutoff = SURVIVAL_CUTOFF.ln();
        let mut row = Vec::with_capacity(self.branches.len());
        let mut next = 0.0;
        for b in &mut self.branches {
            let p = params.model.fire_prob(b.charge)?;
            let fire = p * b.log_survival.exp();
            if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&fire) {
                return Err(Error::NumericalBreakdown {
                    step: next_t,
                    what: "P(k,t)",
                    value: fire,
                });
            }
            row.push(SurvivalEntry {
                origin: b.origin,
                charge: b.charge,
                fire_prob: fire,
            });
            next += b.weight * fire;
            b.log_survival += (-p).ln_1p();
        }
        if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&next) {
            return Err(Error::NumericalBreakdown {
                step: next_t,
                what: "x_t",
                value: next,
            });
        }
        let next = next.clamp(0.0, 1.0);

        let decay = params.decay();
        self.branches.retain(|b| b.log_survival >= log_cutoff);
        for b in &mut self.branches {
            b.charge = decay * b.charge + next;
        }
        if next > 0.0 {
            self.branches.push(Branch {
                origin: next_t,
                weight: next,
                charge: next,
                log_survival: 0.0,
            });
        }
        self.x.push(next);
        self.survival.push(row);
        Ok(())
    }

    fn detect_convergence(&mut self) {
        let diffs: Vec<bool> = self
            .x
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() < CONVERGENCE_TOL)
            .collect();
        self.converged_at = diffs
            .windows(CONVERGENCE_WINDOW)
            .position(|w| w.iter().all(|&settled| settled));
    }
}

/// Iterates the recursion to the horizon.
pub fn run_meanfield(params: &MeanFieldParams) -> Result<MeanFieldTrace> {
    let mut trace = MeanFieldTrace::start(params)?;
    for _ in 0..params.horizon {
        trace.step_general(params)?;
    }
    trace.detect_convergence();
    Ok(trace)
}

/// Memoryless map `x -> p(x)`, exact when the leak is zero.
pub fn step_simple(x: f64, model: &WeightModel) -> Result<f64> {
    model.fire_prob(x)
}

/// Expectation and variance of the spike count `X_t`.
#[derive(Debug, Clone)]
pub struct MomentTrace {
    pub expectation: Vec<f64>,
    pub variance: Vec<f64>,
    pub n: usize,
}

/// Moments of `X_t` for an `n`-neuron network.
pub fn moments(params: &MeanFieldParams, n: usize) -> Result<MomentTrace> {
    let trace = run_meanfield(params)?;
    moments_from_trace(&trace, params.x0, n)
}

/// Moments computed from an existing trace. `X_0` is the Bernoulli
/// stimulation count, while the recursion uses the deterministic
/// `Xhat_0 = n`.
pub fn moments_from_trace(trace: &MeanFieldTrace, x0: f64, n: usize) -> Result<MomentTrace> {
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    let nf = n as f64;
    let mut expectation = Vec::with_capacity(trace.x.len());
    let mut variance = Vec::with_capacity(trace.x.len());
    expectation.push(nf * x0);
    variance.push(nf * x0 * (1.0 - x0));
    for t in 1..trace.x.len() {
        let mut var = 0.0;
        for e in &trace.survival[t] {
            let k = e.origin;
            let (mean_hat, var_hat) = if k == 0 {
                (nf, 0.0)
            } else {
                (expectation[k], variance[k])
            };
            let p = e.fire_prob;
            var += mean_hat * p * (1.0 - p) + var_hat * p * p;
        }
        expectation.push(nf * trace.x[t]);
        variance.push(var.max(0.0));
    }
    Ok(MomentTrace {
        expectation,
        variance,
        n,
    })
}

/// Probability generating function `G_{X_t}(s)`.
pub fn pgf_eval(t: usize, s: f64, params: &MeanFieldParams, n: usize) -> Result<f64> {
    if t > PGF_MAX_STEP {
        return Err(Error::RecursionTooDeep {
            requested: t,
            cap: PGF_MAX_STEP,
        });
    }
    let horizon = MeanFieldParams {
        horizon: t.max(1),
        ..*params
    };
    let trace = run_meanfield(&horizon)?;
    pgf_from_trace(&trace, t, s, params.x0, n)
}

/// [`pgf_eval`] on an existing trace.
pub fn pgf_from_trace(trace: &MeanFieldTrace, t: usize, s: f64, x0: f64, n: usize) -> Result<f64> {
    if t > PGF_MAX_STEP {
        return Err(Error::RecursionTooDeep {
            requested: t,
            cap: PGF_MAX_STEP,
        });
    }
    if t > trace.t() {
        return Err(invalid(
            "t",
            format!("trace only reaches step {}", trace.t()),
        ));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid("s", format!("must lie in [0, 1], got {s}")));
    }
    if n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    if t == 0 {
        return Ok((1.0 - x0 + x0 * s).powi(n as i32));
    }
    Ok(pgf_rec(trace, t, s, n))
}

fn pgf_rec(trace: &MeanFieldTrace, t: usize, s: f64, n: usize) -> f64 {
    trace.survival[t]
        .iter()
        .map(|e| {
            let arg = 1.0 - e.fire_prob * (1.0 - s);
            if e.origin == 0 {
                arg.powi(n as i32)
            } else {
                pgf_rec(trace, e.origin, arg, n)
            }
        })
        .product()
}

/// A fixed point of the activity map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    /// Ascending; always starts with the death point `0`.
    pub fixed_points: Vec<FixedPoint>,
    /// No positive fixed point exists.
    pub death_only: bool,
    /// Converged forward iterate, when obtained by iteration.
    pub asymptote: Option<f64>,
    /// `p(x*)` of the selected stable point (0 for death).
    pub predicted_network_frequency: f64,
}

impl FixedPointReport {
    /// The nonzero steady state: the asymptote when present, otherwise the
    /// largest stable positive root.
    pub fn stable_nonzero(&self) -> Option<f64> {
        if let Some(a) = self.asymptote {
            return (a > 0.0).then_some(a);
        }
        self.fixed_points
            .iter()
            .rev()
            .find(|f| f.stable && f.value > 0.0)
            .map(|f| f.value)
    }
}

fn fire_prob_deriv(x: f64, model: &WeightModel) -> Result<f64> {
    let keep = 1.0 - model.sparsity_p;
    if keep == 0.0 || model.phi == 0.0 {
        return Ok(0.0);
    }
    Ok(keep * p_phi_deriv(keep * x, model)?)
}

fn bisect_root(model: &WeightModel, mut lo: f64, mut hi: f64) -> Result<f64> {
    let h = |x: f64| -> Result<f64> { Ok(model.fire_prob(x)? - x) };
    let mut h_lo = h(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h_mid = h(mid)?;
        if h_mid == 0.0 || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (h_mid < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of `p(x) = x` for the memoryless map on `(0, 1]`, by sign-change
/// scanning of a uniform grid followed by bisection.
///
/// Requires a zero weight mean.
pub fn fixed_points_simple(model: &WeightModel) -> Result<FixedPointReport> {
    model.validate()?;
    if model.mu != 0.0 {
        return Err(invalid(
            "mu",
            "root enumeration requires mu = 0; iterate forward instead",
        ));
    }
    let mut roots = Vec::new();
    let mut prev_x = 1.0 / FIXED_POINT_GRID as f64;
    let mut prev_h = model.fire_prob(prev_x)? - prev_x;
    if prev_h == 0.0 {
        roots.push(prev_x);
    }
    for i in 2..=FIXED_POINT_GRID {
        let x = i as f64 / FIXED_POINT_GRID as f64;
        let h = model.fire_prob(x)? - x;
        if h == 0.0 {
            roots.push(x);
        } else if prev_h != 0.0 && (h < 0.0) != (prev_h < 0.0) {
            roots.push(bisect_root(model, prev_x, x)?);
        }
        prev_x = x;
        prev_h = h;
    }

    let mut fixed_points = vec![FixedPoint {
        value: 0.0,
        stable: true,
    }];
    for r in roots {
        fixed_points.push(FixedPoint {
            value: r,
            stable: fire_prob_deriv(r, model)? < 1.0,
        });
    }
    let death_only = fixed_points.len() == 1;
    let mut report = FixedPointReport {
        fixed_points,
        death_only,
        asymptote: None,
        predicted_network_frequency: 0.0,
    };
    if let Some(x) = report.stable_nonzero() {
        report.predicted_network_frequency = model.fire_prob(x)?;
    }
    Ok(report)
}

/// Steady state obtained by iterating the full recursion; used when roots
/// cannot be enumerated (leak, nonzero mean).
pub fn fixed_points_forward(params: &MeanFieldParams) -> Result<FixedPointReport> {
    let trace = run_meanfield(params)?;
    let x_star = trace.last();
    let death_only = x_star == 0.0;
    let mut fixed_points = vec![FixedPoint {
        value: 0.0,
        stable: true,
    }];
    if !death_only {
        fixed_points.push(FixedPoint {
            value: x_star,
            stable: trace.converged_at.is_some(),
        });
    }
    Ok(FixedPointReport {
        fixed_points,
        death_only,
        asymptote: Some(x_star),
        predicted_network_frequency: params.model.fire_prob(x_star)?,
    })
}

/// Coupling below which zero is the only fixed point of the memoryless map:
/// `(2e/3)^{3/4} pi^{1/4} theta`.
pub fn death_threshold(theta: f64) -> f64 {
    let e = std::f64::consts::E;
    (2.0 * e / 3.0).powf(0.75) * std::f64::consts::PI.powf(0.25) * theta
}

/// Predicted steady-state interspike-interval law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiPrediction {
    /// Steady-state activity `x*`.
    pub activity: f64,
    /// Success probability of the geometric ISI law, `p(x*)`.
    pub geometric_param: f64,
    /// Network frequency `f* = 1 / E(ISI) = p(x*)`.
    pub frequency: f64,
    /// Whether `p(x*) <= x*` holds (it need not at extreme parameters).
    pub bound_holds: bool,
}

pub fn predict_isi(report: &FixedPointReport, model: &WeightModel) -> Result<IsiPrediction> {
    let x_star = report.stable_nonzero().ok_or(Error::DeathOnly)?;
    let p = model.fire_prob(x_star)?;
    Ok(IsiPrediction {
        activity: x_star,
        geometric_param: p,
        frequency: p,
        bound_holds: p <= x_star + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::p_phi;
    use proptest::prelude::*;

    fn centered(phi: f64) -> WeightModel {
        WeightModel::centered(phi, 1.0).unwrap()
    }

    /// Direct evaluation of the halved-decay recursion, O(t^3), without any
    /// cohort bookkeeping.
    fn halved_decay_oracle(model: &WeightModel, gamma: f64, x0: f64, horizon: usize) -> Vec<f64> {
        let g = gamma / 2.0;
        let p = |y: f64| model.fire_prob(y).unwrap();
        let mut x = vec![x0];
        for t in 0..horizon {
            let mut next = 0.0;
            for m in 0..=t {
                let xhat = if m == 0 { 1.0 } else { x[m] };
                let charge: f64 = (0..=t - m).map(|i| g.powi(i as i32) * x[t - i]).sum();
                let mut survive = 1.0;
                for j in 0..t - m {
                    let c: f64 = (0..=j).map(|k| g.powi(k as i32) * x[j - k + m]).sum();
                    survive *= 1.0 - p(c);
                }
                next += xhat * p(charge) * survive;
            }
            x.push(next);
        }
        x
    }

    #[test]
    fn incremental_recursion_matches_direct_expansion() {
        let model = centered(5.0);
        let params = MeanFieldParams::clamped(model, 0.5, 0.15).unwrap();
        let trace = run_meanfield(&params).unwrap();
        let oracle = halved_decay_oracle(&model, 0.5, 0.15, 50);
        assert_eq!(trace.x.len(), oracle.len());
        for (t, (a, b)) in trace.x.iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-12, "t = {t}");
        }
        let sparse = WeightModel::new(4.0, 0.8, 0.3, 1.0).unwrap();
        let params = MeanFieldParams::clamped(sparse, 0.9, 0.2).unwrap();
        let trace = run_meanfield(&params).unwrap();
        let oracle = halved_decay_oracle(&sparse, 0.9, 0.2, 50);
        assert_eq!(trace.x.len(), oracle.len());
        for (t, (a, b)) in trace.x.iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn unclamped_mode_uses_full_decay() {
        let model = centered(5.0);
        let params = MeanFieldParams::new(model, 0.5, 0.15, VminMode::Unclamped, 30).unwrap();
        let trace = run_meanfield(&params).unwrap();
        // The full-decay recursion is the halved one at twice the leak.
        let oracle = halved_decay_oracle(&model, 1.0, 0.15, 30);
        assert_eq!(trace.x.len(), oracle.len());
        for (a, b) in trace.x.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_leak_telescopes_to_simple_map() {
        let model = centered(5.0);
        let params = MeanFieldParams::clamped(model, 0.0, 0.15).unwrap();
        let mut trace = MeanFieldTrace::start(&params).unwrap();
        for _ in 0..10 {
            let before = trace.last();
            trace.step_general(&params).unwrap();
            assert!((trace.last() - p_phi(before, &model).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_stimulus_stays_dead() {
        let params = MeanFieldParams::clamped(centered(5.0), 0.7, 0.0).unwrap();
        let trace = run_meanfield(&params).unwrap();
        assert!(trace.x.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn full_stimulus_single_step() {
        let model = centered(5.0);
        let params = MeanFieldParams::new(model, 0.0, 1.0, VminMode::ClampAtZero, 1).unwrap();
        let trace = run_meanfield(&params).unwrap();
        assert_eq!(trace.x[1], p_phi(1.0, &model).unwrap());
    }

    #[test]
    fn weak_coupling_dies() {
        let params = MeanFieldParams::clamped(centered(1.0), 0.0, 0.5).unwrap();
        let trace = run_meanfield(&params).unwrap();
        assert!(trace.last() < 1e-12);
        assert!(trace.converged_at.is_some());
    }

    #[test]
    fn strong_coupling_convergence_step() {
        let params = MeanFieldParams::clamped(centered(5.0), 0.0, 0.15).unwrap();
        let trace = run_meanfield(&params).unwrap();
        // Frozen from an independent iteration of x -> p(x): the step change
        // first stays below 1e-10 for five steps from t = 13 on.
        assert_eq!(trace.converged_at, Some(13));
        assert!((trace.x[10] - trace.x[50]).abs() < 1e-8);
    }

    #[test]
    fn mass_is_conserved_and_cohort_sums_bounded() {
        let model = centered(3.5);
        for gamma in [0.0, 0.5, 1.0] {
            let params =
                MeanFieldParams::new(model, gamma, 0.3, VminMode::ClampAtZero, 200).unwrap();
            let mut trace = MeanFieldTrace::start(&params).unwrap();
            for _ in 0..200 {
                trace.step_general(&params).unwrap();
                assert!((trace.live_mass() - 1.0).abs() < 1e-9);
            }
            for k in [0, 1, 5, 20] {
                let total: f64 = (k + 1..=200).map(|t| trace.fire_prob(k, t)).sum();
                assert!(total <= 1.0 + 1e-9);
                // Horizon long enough that every cohort has fired.
                assert!(total > 1.0 - 1e-9, "gamma {gamma} k {k}: {total}");
            }
        }
    }

    #[test]
    fn activity_stays_below_half_for_centered_weights() {
        for gamma in [0.0, 0.3, 1.0] {
            for phi in [2.5, 5.0, 50.0] {
                let params = MeanFieldParams::clamped(centered(phi), gamma, 1.0).unwrap();
                let trace = run_meanfield(&params).unwrap();
                assert!(trace.x[1..].iter().all(|&x| x < 0.5 + 1e-9));
            }
        }
    }

    #[test]
    fn asymptote_monotone_in_coupling() {
        let mut prev = 0.0;
        for phi in [2.5, 3.0, 3.5, 4.0, 4.5, 5.0] {
            let params = MeanFieldParams::clamped(centered(phi), 0.0, 0.15).unwrap();
            let x = run_meanfield(&params).unwrap().last();
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn step_simple_limits() {
        let model = centered(5.0);
        assert_eq!(step_simple(0.0, &model).unwrap(), 0.0);
        let mut x = 0.5;
        let mut prev_gap = f64::INFINITY;
        for _ in 0..60 {
            x = step_simple(x, &model).unwrap();
            let gap = (x - 0.371_386_386_091_206_16).abs();
            assert!(gap <= prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-12);

        let weak = centered(2.0);
        let first = step_simple(0.5, &weak).unwrap();
        assert!(first < 0.5);
        let mut x = first;
        for _ in 0..1000 {
            x = step_simple(x, &weak).unwrap();
        }
        assert!(x < 1e-12);
    }

    #[test]
    fn first_step_variance_is_binomial() {
        let params = MeanFieldParams::clamped(centered(5.0), 0.0, 0.15).unwrap();
        let m = moments(&params, 1000).unwrap();
        let p = p_phi(0.15, &centered(5.0)).unwrap();
        assert!((m.expectation[1] - 1000.0 * p).abs() < 1e-9);
        assert!((m.variance[1] - 1000.0 * p * (1.0 - p)).abs() < 1e-9);
        assert!(m.variance.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dead_network_has_no_variance() {
        let params = MeanFieldParams::clamped(centered(5.0), 0.5, 0.0).unwrap();
        let m = moments(&params, 1000).unwrap();
        assert!(m.variance[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pgf_normalization_and_single_factor() {
        let params =
            MeanFieldParams::new(centered(5.0), 0.5, 0.15, VminMode::ClampAtZero, 10).unwrap();
        let trace = run_meanfield(&params).unwrap();
        for t in 0..=10 {
            let g = pgf_from_trace(&trace, t, 1.0, 0.15, 1000).unwrap();
            assert!((g - 1.0).abs() < 1e-12);
        }
        let p = trace.fire_prob(0, 1);
        let s = 0.7;
        let want = (p * s + 1.0 - p).powi(1000);
        assert_eq!(pgf_from_trace(&trace, 1, s, 0.15, 1000).unwrap(), want);
        assert!(matches!(
            pgf_eval(21, 0.5, &params, 10),
            Err(Error::RecursionTooDeep { .. })
        ));
    }

    #[test]
    fn pgf_derivative_is_mean() {
        for gamma in [0.0, 0.5] {
            let params =
                MeanFieldParams::new(centered(5.0), gamma, 0.15, VminMode::ClampAtZero, 5).unwrap();
            let trace = run_meanfield(&params).unwrap();
            let m = moments_from_trace(&trace, 0.15, 1000).unwrap();
            let h = 1e-6;
            for t in 1..=5 {
                let g = |s: f64| pgf_from_trace(&trace, t, s, 0.15, 1000).unwrap();
                // Second-order one-sided stencil.
                let d = (3.0 * g(1.0) - 4.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (2.0 * h);
                let rel = (d - m.expectation[t]).abs() / m.expectation[t];
                assert!(
                    rel < 1e-6,
                    "gamma {gamma} t {t}: {d} vs {}",
                    m.expectation[t]
                );
            }
        }
    }

    /// Plain bisection on a fine grid, independent of the library scan.
    fn oracle_roots(phi: f64) -> Vec<f64> {
        let h = |x: f64| p_phi(x, &centered(phi)).unwrap() - x;
        let mut roots = Vec::new();
        let n = 200_000;
        for i in 1..n {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            if h(a) * h(b) < 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if h(mid) * h(lo) > 0.0 {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        roots
    }

    #[test]
    fn fixed_points_match_bisection_oracle() {
        let oracle = oracle_roots(5.0);
        assert_eq!(oracle.len(), 2);
        let report = fixed_points_simple(&centered(5.0)).unwrap();
        assert!(!report.death_only);
        assert_eq!(report.fixed_points.len(), 3);
        let (low, high) = (report.fixed_points[1], report.fixed_points[2]);
        assert!((low.value - oracle[0]).abs() < 1e-12);
        assert!((high.value - oracle[1]).abs() < 1e-12);
        assert!((high.value - 0.371_386_386_091_206_16).abs() < 1e-12);
        assert!(!low.stable && high.stable);
        assert!(high.value > 0.3 && high.value < 0.5);
        assert!(report.fixed_points[0].stable);

        let weak = fixed_points_simple(&centered(1.0)).unwrap();
        assert!(weak.death_only);
        assert_eq!(weak.predicted_network_frequency, 0.0);
    }

    #[test]
    fn fixed_points_near_threshold_coupling() {
        let report = fixed_points_simple(&centered(2.08)).unwrap();
        let positive: Vec<f64> = report.fixed_points[1..].iter().map(|f| f.value).collect();
        assert!(positive.is_empty() || (positive.len() == 2 && positive[1] - positive[0] < 1e-3));
        let r25 = fixed_points_simple(&centered(2.5)).unwrap();
        let stable = r25.stable_nonzero().unwrap();
        assert!((stable - 0.154_147_019_821_364_77).abs() < 1e-12);
        assert!(fixed_points_simple(&WeightModel::new(5.0, 0.5, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn death_threshold_value_and_scaling() {
        assert!((death_threshold(1.0) - 2.079_408_837_093_433_8).abs() < 1e-13);
        assert!((death_threshold(2.0) - 2.0 * death_threshold(1.0)).abs() < 1e-14);
        let model = centered(death_threshold(1.0) * (1.0 - 1e-3));
        let mut peak: f64 = 0.0;
        let mut y = 1e-4;
        while y <= 1.0 {
            peak = peak.max(p_phi_deriv(y, &model).unwrap());
            y += 1e-5;
        }
        assert!(peak < 1.0);
        // Above the threshold the slope exceeds one somewhere.
        let model = centered(death_threshold(1.0) * 1.01);
        let arg = crate::prob::p_phi_deriv_argmax(&model).unwrap();
        assert!(p_phi_deriv(arg, &model).unwrap() > 1.0);
    }

    #[test]
    fn isi_prediction() {
        let model = centered(5.0);
        let report = fixed_points_simple(&model).unwrap();
        let isi = predict_isi(&report, &model).unwrap();
        assert!((isi.geometric_param - isi.activity).abs() < 1e-12);
        assert!((isi.geometric_param - 0.371_386_386_091_206_16).abs() < 1e-11);
        assert!(isi.bound_holds);
        let dead = fixed_points_simple(&centered(1.0)).unwrap();
        assert_eq!(predict_isi(&dead, &centered(1.0)), Err(Error::DeathOnly));

        let leaky = MeanFieldParams::clamped(model, 1.0, 0.15).unwrap();
        let report = fixed_points_forward(&leaky).unwrap();
        let isi = predict_isi(&report, &model).unwrap();
        assert!(isi.bound_holds && isi.geometric_param < isi.activity);
    }

    #[test]
    fn rejects_bad_params() {
        let m = centered(1.0);
        assert!(MeanFieldParams::clamped(m, 1.5, 0.1).is_err());
        assert!(MeanFieldParams::clamped(m, 0.5, -0.1).is_err());
        assert!(MeanFieldParams::new(m, 0.5, 0.1, VminMode::Unclamped, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn zero_leak_equals_simple_iteration(phi in 0.5f64..8.0, x0 in 0.0f64..=1.0) {
            let model = centered(phi);
            let params = MeanFieldParams::clamped(model, 0.0, x0).unwrap();
            let trace = run_meanfield(&params).unwrap();
            let mut x = x0;
            for t in 1..=50 {
                x = step_simple(x, &model).unwrap();
                prop_assert!((trace.x[t] - x).abs() <= 1e-12);
            }
        }

        #[test]
        fn sparse_run_equals_rescaled_dense_run(phi in 1.0f64..8.0, sp in 0.0f64..0.9,
                                                mu in -1.0f64..2.0, x0 in 0.01f64..1.0) {
            let sparse = WeightModel::new(phi, mu, sp, 1.0).unwrap();
            let keep = 1.0 - sp;
            let dense = WeightModel::new(phi * keep.sqrt(), mu * keep, 0.0, 1.0).unwrap();
            let a = run_meanfield(&MeanFieldParams::clamped(sparse, 0.5, x0).unwrap()).unwrap();
            let b = run_meanfield(&MeanFieldParams::clamped(dense, 0.5, x0).unwrap()).unwrap();
            for t in 0..=50 {
                prop_assert!((a.x[t] - b.x[t]).abs() <= 1e-12);
            }
        }
    }
}
