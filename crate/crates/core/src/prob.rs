//! Scalar charge probabilities built on the Gaussian tail.
//!
//! Every charge argument `y` is a population fraction: a neuron that received
//! input from `y * N` firing neurons carries a potential distributed as
//! `Normal(mu * y, phi^2 * y)`, because each weight has mean `mu / N` and
//! standard deviation `phi / sqrt(N)`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};

/// Synaptic weight law of an `N`-neuron network.
///
/// A weight is exactly zero with probability `sparsity_p`, otherwise it is
/// drawn from `Normal(mu / N, phi / sqrt(N))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightModel {
    /// Coupling factor, `sigma * sqrt(N)`.
    pub phi: f64,
    /// Scaled weight mean; the per-weight mean is `mu / N`.
    pub mu: f64,
    /// Probability that a weight is exactly zero.
    pub sparsity_p: f64,
    /// Firing threshold.
    pub theta: f64,
}

impl WeightModel {
    pub fn new(phi: f64, mu: f64, sparsity_p: f64, theta: f64) -> Result<Self> {
        let model = Self {
            phi,
            mu,
            sparsity_p,
            theta,
        };
        model.validate()?;
        Ok(model)
    }

    /// Zero-mean dense weights.
    pub fn centered(phi: f64, theta: f64) -> Result<Self> {
        Self::new(phi, 0.0, 0.0, theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.is_finite() && self.phi >= 0.0) {
            return Err(invalid(
                "phi",
                format!("must be finite and >= 0, got {}", self.phi),
            ));
        }
        if !self.mu.is_finite() {
            return Err(invalid("mu", format!("must be finite, got {}", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.sparsity_p) {
            return Err(invalid(
                "sparsity_p",
                format!("must lie in [0, 1], got {}", self.sparsity_p),
            ));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and > 0, got {}", self.theta),
            ));
        }
        Ok(())
    }

    /// The charge-to-firing probability used by the mean-field recursion:
    /// the sparse, mean-aware law.
    pub fn fire_prob(&self, y: f64) -> Result<f64> {
        p_sparse(y, self)
    }
}

/// Upper tail of the standard normal, `P(Z > z)`.
///
/// Evaluated through `erfc`; the result underflows to exactly 0 for
/// `z` beyond about 38.5 and saturates at 1 below about -8.3.
pub fn gaussian_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

fn check_charge(y: f64) -> Result<()> {
    if y.is_nan() || y < 0.0 {
        return Err(invalid(
            "y",
            format!("charge fraction must be >= 0, got {y}"),
        ));
    }
    Ok(())
}

// Shared by p_phi and p_phi_mu so that mu = 0 gives bit-identical results.
#[inline]
fn tail_above(threshold: f64, mean_slope: f64, y: f64, phi: f64) -> f64 {
    gaussian_tail((threshold - mean_slope * y) / (y.sqrt() * phi))
}

/// Probability that a zero-mean charge of fraction `y` exceeds the threshold.
/// `model.mu` and `model.sparsity_p` are ignored.
pub fn p_phi(y: f64, model: &WeightModel) -> Result<f64> {
    check_charge(y)?;
    if y == 0.0 || model.phi == 0.0 {
        return Ok(0.0);
    }
    Ok(tail_above(model.theta, 0.0, y, model.phi))
}

/// Probability that a charge of fraction `y` exceeds the threshold when the
/// weights have scaled mean `mu`.
///
/// For `phi = 0` the law is degenerate and the result is the step
/// 0 / 1/2 / 1 according to the sign of `mu * y - theta`.
pub fn p_phi_mu(y: f64, model: &WeightModel) -> Result<f64> {
    check_charge(y)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    if model.phi == 0.0 {
        let drive = model.mu * y - model.theta;
        return Ok(if drive > 0.0 {
            1.0
        } else if drive == 0.0 {
            0.5
        } else {
            0.0
        });
    }
    Ok(tail_above(model.theta, model.mu, y, model.phi))
}

/// Sparse variant: only a fraction `1 - sparsity_p` of the firing inputs
/// carries a nonzero weight.
pub fn p_sparse(y: f64, model: &WeightModel) -> Result<f64> {
    check_charge(y)?;
    p_phi_mu((1.0 - model.sparsity_p) * y, model)
}

/// Closed-form derivative of [`p_phi`] with respect to `y`.
pub fn p_phi_deriv(y: f64, model: &WeightModel) -> Result<f64> {
    if y.is_nan() || y <= 0.0 {
        return Err(invalid("y", format!("must be > 0, got {y}")));
    }
    if model.phi == 0.0 {
        return Err(invalid("phi", "derivative undefined for phi = 0"));
    }
    let (theta, phi) = (model.theta, model.phi);
    let scale = theta / (2.0 * (2.0 * PI).sqrt() * phi * y.powf(1.5));
    Ok(scale * (-(theta * theta) / (2.0 * y * phi * phi)).exp())
}

/// Location of the global maximum of [`p_phi_deriv`] over `y > 0`,
/// `theta^2 / (3 phi^2)`.
pub fn p_phi_deriv_argmax(model: &WeightModel) -> Result<f64> {
    if model.phi == 0.0 {
        return Err(invalid("phi", "derivative undefined for phi = 0"));
    }
    Ok(model.theta * model.theta / (3.0 * model.phi * model.phi))
}

/// Firing probability of a neuron whose potential is floored at `v_min`.
///
/// The neuron carries an earlier charge `prior` and receives `new_charge`.
/// With probability `p = P(Normal(0, phi^2 prior) < v_min)` the earlier
/// potential sits at the floor, otherwise it is the free Gaussian. The two
/// branches are merged into `Normal(p v_min + mu y, phi^2 y)` with
/// `y = (1 - p) prior + new_charge`, and the tail above `theta` is returned.
/// For `v_min = 0`, `p` is exactly 1/2.
pub fn charge_prob_vmin(
    prior: f64,
    new_charge: f64,
    v_min: f64,
    model: &WeightModel,
) -> Result<f64> {
    check_charge(prior)?;
    check_charge(new_charge)?;
    if v_min.is_nan() || v_min > 0.0 {
        return Err(invalid("v_min", format!("must be <= 0, got {v_min}")));
    }
    if prior == 0.0 {
        return p_phi_mu(new_charge, model);
    }
    let clamped = if v_min == 0.0 {
        0.5
    } else if model.phi == 0.0 {
        0.0
    } else {
        gaussian_tail(-v_min / (model.phi * prior.sqrt()))
    };
    let y = (1.0 - clamped) * prior + new_charge;
    let shifted = WeightModel {
        theta: model.theta - clamped * v_min,
        ..*model
    };
    p_phi_mu(y, &shifted)
}
