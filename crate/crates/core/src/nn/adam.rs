use super::{LstmParams, TrainConfig};
use crate::{Error, Result};

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn for_params(params: &LstmParams) -> Self {
        Self::new(params.len())
    }

    /// One bias-corrected Adam update of `theta` in place.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], config: &TrainConfig) -> Result<()> {
        assert!(
            theta.len() == grad.len() && grad.len() == self.m.len(),
            "parameter, gradient and moment lengths differ"
        );
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Training(format!("non-finite gradient at parameter {k}")));
        }
        let (b1, b2) = (config.beta1, config.beta2);
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((th, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *th -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(params: &mut LstmParams, grads: &LstmParams, state: &mut AdamState, config: &TrainConfig) -> Result<()> {
    assert!(params.same_shape(grads), "gradient shape does not match parameters");
    state.step(params.as_mut_slice(), grads.as_slice(), config)
}
