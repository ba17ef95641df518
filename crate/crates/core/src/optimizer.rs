//! RMSprop with L2 weight decay on hidden-layer kernels.

use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::network::{Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    /// Coefficient of the `lambda * sum(W^2)` penalty on each hidden kernel.
    pub weight_decay_lambda: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr: 0.001,
            rho: 0.9,
            eps: 1e-7,
            weight_decay_lambda: 0.01,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(DevNetError::InvalidConfig(what.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.weight_decay_lambda >= 0.0 && self.weight_decay_lambda.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        Ok(())
    }
}

/// Running mean of squared gradients, one accumulator per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsState {
    mean_square: Parameters,
}

impl RmsState {
    pub fn new(params: &Parameters) -> Result<Self> {
        Ok(RmsState {
            mean_square: Parameters::zeros(params.architecture())?,
        })
    }

    pub fn accumulators(&self) -> &Parameters {
        &self.mean_square
    }
}

/// The L2 penalty `lambda * sum ||W_i||^2` over hidden kernels.
pub fn l2_penalty(params: &Parameters, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda
        * params
            .hidden()
            .iter()
            .map(|layer| layer.weights.iter().map(|w| w * w).sum::<f64>())
            .sum::<f64>()
}

/// Adds `2 lambda W` to each hidden kernel's gradient. Biases and the output
/// unit are not regularized.
pub fn regularized_gradient(params: &Parameters, grads: &mut Gradients, lambda: f64) -> Result<()> {
    params.check_layout(grads)?;
    if lambda == 0.0 {
        return Ok(());
    }
    for (g, p) in grads.hidden_mut().iter_mut().zip(params.hidden()) {
        g.weights.scaled_add(2.0 * lambda, &p.weights);
    }
    Ok(())
}

/// One RMSprop update, in place:
/// `s <- rho s + (1 - rho) g^2`, `theta <- theta - lr g / (sqrt(s) + eps)`.
///
/// Nothing is modified if any gradient entry is non-finite.
pub fn rmsprop_step(
    params: &mut Parameters,
    grads: &Gradients,
    state: &mut RmsState,
    cfg: &OptimizerConfig,
) -> Result<()> {
    params.check_layout(grads)?;
    params.check_layout(&state.mean_square)?;
    for (id, g) in grads.tensors() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(DevNetError::Divergence {
                tensor: id.to_string(),
            });
        }
    }
    let grad_tensors = grads.tensors();
    for (((_, theta), (_, s)), (_, g)) in params
        .tensors_mut()
        .into_iter()
        .zip(state.mean_square.tensors_mut())
        .zip(grad_tensors)
    {
        for ((theta, s), &g) in theta.iter_mut().zip(s.iter_mut()).zip(g) {
            *s = cfg.rho * *s + (1.0 - cfg.rho) * g * g;
            *theta -= cfg.lr * g / (s.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
