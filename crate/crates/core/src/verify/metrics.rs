use crate::{Error, Result};

fn check_lengths(forecast: &[f64], obs: &[f64]) -> Result<()> {
    if forecast.len() != obs.len() {
        return Err(Error::input(format!(
            "{} forecasts for {} observations",
            forecast.len(),
            obs.len()
        )));
    }
    if obs.is_empty() {
        return Err(Error::input("no forecast-observation pairs"));
    }
    Ok(())
}

/// Nash–Sutcliffe efficiency, `1 − Σ(f−y)² / Σ(y−ȳ)²`.
pub fn nse(forecast: &[f64], obs: &[f64]) -> Result<f64> {
    check_lengths(forecast, obs)?;
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let spread: f64 = obs.iter().map(|y| (y - mean).powi(2)).sum();
    if spread == 0.0 {
        return Err(Error::UndefinedScore("NSE needs observations that vary".into()));
    }
    let sse: f64 = forecast.iter().zip(obs).map(|(f, y)| (f - y).powi(2)).sum();
    Ok(1.0 - sse / spread)
}

pub fn rmse(forecast: &[f64], obs: &[f64]) -> Result<f64> {
    check_lengths(forecast, obs)?;
    let sse: f64 = forecast.iter().zip(obs).map(|(f, y)| (f - y).powi(2)).sum();
    Ok((sse / obs.len() as f64).sqrt())
}

/// Percent bias, `100·Σ(f−y)/Σy`; positive means overforecasting.
pub fn pbias(forecast: &[f64], obs: &[f64]) -> Result<f64> {
    check_lengths(forecast, obs)?;
    let total: f64 = obs.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedScore("Pbias needs a non-zero observed total".into()));
    }
    let diff: f64 = forecast.iter().zip(obs).map(|(f, y)| f - y).sum();
    Ok(100.0 * diff / total)
}

/// Fraction of members strictly above `z`.
pub fn exceedance_probability(ensemble: &[f64], z: f64) -> f64 {
    assert!(!ensemble.is_empty(), "exceedance probability of an empty ensemble");
    ensemble.iter().filter(|v| **v > z).count() as f64 / ensemble.len() as f64
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nse_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(nse(&y, &y).unwrap(), 1.0);
        assert_eq!(nse(&[2.0; 3], &y).unwrap(), 0.0);
        assert_eq!(nse(&[1.0, 2.0, 4.0], &y).unwrap(), 0.5);
        assert!(matches!(nse(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::UndefinedScore(_))));
        assert!(matches!(nse(&[1.0], &[1.0, 2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 5.0], &[1.0, 5.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[5.0], &[3.0]).unwrap(), 2.0);
        assert!((rmse(&[3.0, -4.0], &[0.0, 0.0]).unwrap() - 3.5355339).abs() < 1e-7);
        assert_eq!(rmse(&[3.0, -4.0], &[0.0, 0.0]).unwrap(), 12.5f64.sqrt());
        assert!(matches!(rmse(&[], &[]), Err(Error::Input(_))));
    }

    #[test]
    fn pbias_examples() {
        let y = [2.0, 4.0, 6.0];
        assert_eq!(pbias(&y, &y).unwrap(), 0.0);
        let scaled: Vec<f64> = y.iter().map(|v| 1.1 * v).collect();
        let direct = 100.0 * scaled.iter().zip(&y).map(|(f, o)| f - o).sum::<f64>() / y.iter().sum::<f64>();
        assert_eq!(pbias(&scaled, &y).unwrap(), direct);
        assert!((direct - 10.0).abs() < 1e-12);
        assert_eq!(pbias(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), -50.0);
        assert!(matches!(pbias(&[1.0], &[0.0]), Err(Error::UndefinedScore(_))));
    }

    #[test]
    fn exceedance_examples() {
        let members: Vec<f64> = (1..=11).map(f64::from).collect();
        assert_eq!(exceedance_probability(&members, 0.5), 1.0);
        assert_eq!(exceedance_probability(&members, 11.0), 0.0);
        assert_eq!(exceedance_probability(&members, 5.0), 6.0 / 11.0);
    }

    proptest! {
        #[test]
        fn nse_and_rmse_properties(
            pairs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 2..60),
            rot in 0usize..60,
        ) {
            let (f, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            if let Ok(v) = nse(&f, &y) {
                prop_assert!(v <= 1.0);
                prop_assert_eq!(nse(&y, &y).unwrap(), 1.0);
            }
            let r = rmse(&f, &y).unwrap();
            prop_assert!(r >= 0.0);
            let mut rotated = pairs.clone();
            rotated.rotate_left(rot % pairs.len());
            let (f2, y2): (Vec<f64>, Vec<f64>) = rotated.into_iter().unzip();
            prop_assert!((rmse(&f2, &y2).unwrap() - r).abs() <= 1e-12 * r.max(1.0));
        }

        #[test]
        fn exceedance_is_monotone(
            members in prop::collection::vec(0.0f64..50.0, 11),
            z1 in -5.0f64..55.0,
            z2 in -5.0f64..55.0,
        ) {
            let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
            prop_assert!(exceedance_probability(&members, hi) <= exceedance_probability(&members, lo));
        }
    }
}
