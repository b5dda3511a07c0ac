use crate::{Error, Result};

/// Probability forecasts of one event `{flow > z}` with their outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbForecastSet {
    probs: Vec<f64>,
    outcomes: Vec<bool>,
}

impl ProbForecastSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>) -> Result<Self> {
        let mut set = Self::new();
        for (p, y) in pairs {
            set.push(p, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, prob: f64, outcome: bool) -> Result<()> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::input(format!("forecast probability {prob} outside [0, 1]")));
        }
        self.probs.push(prob);
        self.outcomes.push(outcome);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.probs.iter().copied().zip(self.outcomes.iter().copied())
    }
}

fn indicator(outcome: bool) -> f64 {
    if outcome {
        1.0
    } else {
        0.0
    }
}

pub fn brier_score(set: &ProbForecastSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::input("Brier score of an empty forecast set"));
    }
    let sum: f64 = set.iter().map(|(p, y)| (p - indicator(y)).powi(2)).sum();
    Ok(sum / set.len() as f64)
}

/// `1 − BS_main / BS_reference` over matching forecast sets.
pub fn brier_skill_score(main: &ProbForecastSet, reference: &ProbForecastSet) -> Result<f64> {
    if main.len() != reference.len() || main.outcomes != reference.outcomes {
        return Err(Error::input("main and reference forecasts cover different events"));
    }
    let bs_ref = brier_score(reference)?;
    if bs_ref == 0.0 {
        return Err(Error::UndefinedScore("reference Brier score is 0".into()));
    }
    Ok(1.0 - brier_score(main)? / bs_ref)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean forecast probability; `None` for an empty bin.
    pub fcst_prob_avg: Option<f64>,
    /// Observed relative frequency; `None` for an empty bin.
    pub obs_freq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurve {
    pub bins: Vec<ReliabilityBin>,
}

impl ReliabilityCurve {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Non-empty bins as (mean probability, observed frequency, count).
    pub fn points(&self) -> Vec<(f64, f64, usize)> {
        self.bins
            .iter()
            .filter_map(|b| Some((b.fcst_prob_avg?, b.obs_freq?, b.count)))
            .collect()
    }

    /// Count-weighted squared distance from the diagonal, the reliability
    /// term of the Brier score decomposition.
    pub fn reliability_term(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        self.points().iter().map(|(p, o, c)| *c as f64 * (p - o).powi(2)).sum::<f64>() / n as f64
    }
}

/// Equal-width probability bins; the top bin is closed at 1.
pub fn reliability_diagram(set: &ProbForecastSet, bins: usize) -> Result<ReliabilityCurve> {
    if set.is_empty() {
        return Err(Error::input("reliability diagram of an empty forecast set"));
    }
    if bins == 0 {
        return Err(Error::input("reliability diagram needs at least one bin"));
    }
    let mut sums = vec![(0usize, 0.0f64, 0usize); bins];
    for (p, y) in set.iter() {
        let k = ((p * bins as f64).floor() as usize).min(bins - 1);
        sums[k].0 += 1;
        sums[k].1 += p;
        sums[k].2 += usize::from(y);
    }
    let width = 1.0 / bins as f64;
    let bins = sums
        .into_iter()
        .enumerate()
        .map(|(k, (count, psum, hits))| ReliabilityBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
            fcst_prob_avg: (count > 0).then(|| psum / count as f64),
            obs_freq: (count > 0).then(|| hits as f64 / count as f64),
        })
        .collect();
    Ok(ReliabilityCurve { bins })
}
