use crate::{Error, Result};

/// Min–max range of one feature, in original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl MinMax {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("cannot fit a scaler on an empty feature"));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::input("scaler input contains non-finite values"));
        }
        Ok(MinMax { min, max })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    /// `(x − min)/(max − min)`; out-of-range values map outside [0, 1].
    pub fn forward(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn inverse(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }

    pub fn map(&self, x: f64, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.forward(x),
            Direction::Inverse => self.inverse(x),
        }
    }
}

/// Independent min–max ranges for each input feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub features: Vec<MinMax>,
}

impl ScalerParams {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Scales a time-major window (`steps × features`) in place.
    pub fn forward_window(&self, window: &mut [f64]) {
        let d = self.features.len();
        for (k, v) in window.iter_mut().enumerate() {
            *v = self.features[k % d].forward(*v);
        }
    }
}

/// Fits one range per feature from that feature's training values.
pub fn scaler_fit(training_values: &[Vec<f64>]) -> Result<ScalerParams> {
    let features = training_values
        .iter()
        .enumerate()
        .map(|(k, vals)| MinMax::fit(vals).map_err(|e| Error::input(format!("feature {k}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalerParams { features })
}

pub fn scaler_map(params: &MinMax, value: f64, direction: Direction) -> f64 {
    params.map(value, direction)
}
