//! Step-decayed stochastic gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorNetError};
use crate::net::NetworkState;

/// Learning-rate schedule: the effective rate at iteration `k` is
/// `base_rate * decay_factor^floor(k / decay_period)`, scaled per layer by
/// its multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdSchedule {
    pub base_rate: f64,
    pub decay_factor: f64,
    pub decay_period: usize,
    pub total_iterations: usize,
    /// Batch size N_i.
    pub batch_size: usize,
    /// Classical momentum; 0 disables it.
    pub momentum: f64,
}

impl SgdSchedule {
    pub fn new(
        base_rate: f64,
        decay_factor: f64,
        decay_period: usize,
        total_iterations: usize,
        batch_size: usize,
    ) -> Result<Self> {
        let s = SgdSchedule {
            base_rate,
            decay_factor,
            decay_period,
            total_iterations,
            batch_size,
            momentum: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_momentum(mut self, momentum: f64) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TensorNetError::InvalidSchedule(m.into()));
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return bad("base rate must be positive");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return bad("decay factor must be in (0,1)");
        }
        if self.decay_period == 0 {
            return bad("decay period must be positive");
        }
        if self.total_iterations == 0 {
            return bad("total iterations must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0,1)");
        }
        Ok(())
    }

    pub fn rate_at(&self, iteration: usize) -> f64 {
        self.base_rate
            * self
                .decay_factor
                .powi((iteration / self.decay_period) as i32)
    }
}

/// Applies one SGD update: every parameter is decremented by
/// `rate_at(iteration) * lr_mult * gradient`, then gradients are cleared.
pub fn sgd_step(net: &mut NetworkState, schedule: &SgdSchedule, iteration: usize) -> Result<()> {
    schedule.validate()?;
    net.sgd_apply(schedule.rate_at(iteration), schedule.momentum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{LayerKind, LayerSpec};
    use crate::net::NetworkSpec;
    use crate::tensor::Tensor;

    fn schedule() -> SgdSchedule {
        SgdSchedule::new(1e-3, 0.1, 20_000, 50_000, 50).unwrap()
    }

    #[test]
    fn rate_decays_by_factor_every_period() {
        let s = schedule();
        assert_eq!(s.rate_at(0), 1e-3);
        assert_eq!(s.rate_at(19_999), 1e-3);
        assert!((s.rate_at(25_000) - 1e-4).abs() < 1e-19);
        assert!((s.rate_at(40_000) - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn head_multiplier_scales_the_rate() {
        // A head layer with multiplier 10 at base 1e-3 trains at 1e-2.
        let spec = NetworkSpec {
            input_shape: vec![2],
            layers: vec![
                LayerSpec::new("head", LayerKind::Dense { width: 1 }).with_lr_mult(10.0),
            ],
        };
        let mut net = NetworkState::init(spec, 3).unwrap();
        let before = net.flat_params();
        let x = Tensor::from_vec(&[2], vec![1.0, 0.0]).unwrap();
        let acts = net.forward(&x).unwrap();
        net.backward(&acts, &Tensor::scalar(1.0)).unwrap();
        sgd_step(&mut net, &schedule(), 0).unwrap();
        let after = net.flat_params();
        // dW[0][0] = 1 * x[0] = 1, so the update is exactly 1e-2.
        assert!((before[0] - after[0] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let spec = NetworkSpec {
            input_shape: vec![3],
            layers: vec![LayerSpec::new("d", LayerKind::Dense { width: 2 })],
        };
        let mut net = NetworkState::init(spec, 1).unwrap();
        let before = net.flat_params();
        sgd_step(&mut net, &schedule(), 0).unwrap();
        assert_eq!(before, net.flat_params());
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(SgdSchedule::new(0.0, 0.1, 1, 1, 1).is_err());
        assert!(SgdSchedule::new(1e-3, 1.0, 1, 1, 1).is_err());
        assert!(SgdSchedule::new(1e-3, 0.1, 0, 1, 1).is_err());
    }
}
