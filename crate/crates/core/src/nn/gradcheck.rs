use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backward_sequence, forward_sequence, LstmParams};

/// Central-difference step.
const FD_STEP: f64 = 1e-5;
/// Magnitude below which gradient errors are measured absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub input_size: usize,
    pub hidden_size: usize,
    pub steps: usize,
    /// Largest relative error over all parameters.
    pub max_rel_error: f64,
    /// Largest relative error per named tensor.
    pub per_tensor: Vec<(String, f64)>,
}

/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub(crate) fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares backpropagated gradients of the prediction against central
/// finite differences on a random instance with D ≤ 3, H ≤ 4 and at most
/// 5 steps, all drawn from `seed`.
pub fn gradient_check(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=3);
    let h = rng.random_range(1..=4);
    let steps = rng.random_range(1..=5);
    let mut params = LstmParams::zeros(d, h);
    for v in params.as_mut_slice() {
        *v = rng.random_range(-0.8..0.8);
    }
    let xs: Vec<f64> = (0..steps * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    check_instance(&params, &xs)
}

pub(crate) fn check_instance(params: &LstmParams, xs: &[f64]) -> GradCheckReport {
    let (d, h) = (params.input_size(), params.hidden_size());
    let (_, cache) = forward_sequence(xs, params).expect("non-empty instance");
    let mut analytic = LstmParams::zeros(d, h);
    backward_sequence(&cache, 1.0, params, &mut analytic);

    let mut numeric = LstmParams::zeros(d, h);
    let mut probe = params.clone();
    for k in 0..params.len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + FD_STEP;
        let plus = forward_sequence(xs, &probe).unwrap().0;
        probe.as_mut_slice()[k] = orig - FD_STEP;
        let minus = forward_sequence(xs, &probe).unwrap().0;
        probe.as_mut_slice()[k] = orig;
        numeric.as_mut_slice()[k] = (plus - minus) / (2.0 * FD_STEP);
    }

    let per_tensor: Vec<(String, f64)> = analytic
        .tensors()
        .into_iter()
        .zip(numeric.tensors())
        .map(|((name, _, _, a), (_, _, _, n))| {
            let worst = a.iter().zip(n).map(|(a, n)| relative_error(*a, *n)).fold(0.0, f64::max);
            (name, worst)
        })
        .collect();
    let max_rel_error = per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    GradCheckReport {
        input_size: d,
        hidden_size: h,
        steps: xs.len() / d,
        max_rel_error,
        per_tensor,
    }
}
