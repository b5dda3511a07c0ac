use std::fmt;

use crate::{Error, Result};

/// Flow regimes used to condition probabilistic verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlowCategory {
    /// Threshold at non-exceedance probability 0.50.
    LowModerate,
    /// Threshold at non-exceedance probability 0.90.
    High,
}

impl FlowCategory {
    pub const ALL: [FlowCategory; 2] = [FlowCategory::LowModerate, FlowCategory::High];

    pub fn non_exceedance(self) -> f64 {
        match self {
            FlowCategory::LowModerate => 0.5,
            FlowCategory::High => 0.9,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FlowCategory::LowModerate => "low_moderate",
            FlowCategory::High => "high",
        }
    }
}

impl fmt::Display for FlowCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Empirical quantile of `sample` at non-exceedance probability `p`.
///
/// Linear interpolation between order statistics, the k-th (1-based) of `n`
/// sitting at plotting position (k−1)/(n−1).
pub fn flow_threshold(sample: &[f64], p: f64) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::input(format!(
            "threshold needs at least 2 observations, got {}",
            sample.len()
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::input(format!("non-exceedance probability {p} outside (0, 1)")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p * (sorted.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    Ok(sorted[k] + frac * (sorted[k + 1] - sorted[k]))
}

/// The two category thresholds computed from one climatology sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowThresholds {
    pub low_moderate: f64,
    pub high: f64,
}

impl FlowThresholds {
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        Ok(FlowThresholds {
            low_moderate: flow_threshold(sample, FlowCategory::LowModerate.non_exceedance())?,
            high: flow_threshold(sample, FlowCategory::High.non_exceedance())?,
        })
    }

    pub fn get(&self, category: FlowCategory) -> f64 {
        match category {
            FlowCategory::LowModerate => self.low_moderate,
            FlowCategory::High => self.high,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(flow_threshold(&[7.0, 7.0, 7.0], 0.5).unwrap(), 7.0);
        let one_to_ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((flow_threshold(&one_to_ten, 0.5).unwrap() - 5.5).abs() < 1e-12);
        assert!((flow_threshold(&one_to_ten, 0.9).unwrap() - 9.1).abs() < 1e-12);
        // Order of the input does not matter.
        let mut shuffled = one_to_ten.clone();
        shuffled.reverse();
        assert!((flow_threshold(&shuffled, 0.9).unwrap() - 9.1).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(flow_threshold(&[], 0.5), Err(Error::Input(_))));
        assert!(flow_threshold(&[1.0], 0.5).is_err());
        assert!(flow_threshold(&[1.0, 2.0], 0.0).is_err());
        assert!(flow_threshold(&[1.0, 2.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(
            sample in proptest::collection::vec(0.0f64..500.0, 2..60),
            p1 in 0.001f64..0.999,
            p2 in 0.001f64..0.999,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let q_lo = flow_threshold(&sample, lo).unwrap();
            let q_hi = flow_threshold(&sample, hi).unwrap();
            prop_assert!(q_lo <= q_hi);
            let min = sample.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min <= q_lo && q_hi <= max);
        }
    }
}
