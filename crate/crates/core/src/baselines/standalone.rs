use chrono::NaiveDate;

use crate::hydro::{DailySeries, DateRange, ForcingSeries, ForecastArchive};
use crate::nn::{Dataset, LstmModel};
use crate::{Error, Result, MAX_LEAD, MEMBERS};

/// Precipitation and temperature per step.
pub const STANDALONE_FEATURES: usize = 2;

/// Windows of observed forcing ending on each date in `range` with an
/// observation, paired with that day's flow.
pub fn standalone_dataset(
    forcing: &ForcingSeries,
    obs: &DailySeries,
    range: DateRange,
    lookback: usize,
) -> Result<Dataset> {
    if lookback == 0 {
        return Err(Error::input("lookback must be positive"));
    }
    let mut ds = Dataset::new(STANDALONE_FEATURES, lookback);
    let mut window = Vec::with_capacity(lookback * STANDALONE_FEATURES);
    for (date, flow) in obs.iter().filter(|(d, _)| range.contains(*d)) {
        let Some(end) = forcing.index_of(date) else { continue };
        if end + 1 < lookback {
            continue;
        }
        window.clear();
        for k in end + 1 - lookback..=end {
            window.push(forcing.precip()[k]);
            window.push(forcing.temperature()[k]);
        }
        ds.push(&window, flow)?;
    }
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandaloneForecast {
    pub archive: ForecastArchive,
    /// Cells without enough forcing history or forecast forcing.
    pub skipped: usize,
}

/// Runs a model trained on observed forcing with each member's forecast
/// precipitation.
///
/// The window ends on the valid date. Days up to the issue date use
/// observed forcing; later days use the member's forecast precipitation
/// and observed temperature. Outputs are floored at zero.
pub fn standalone_lstm_forecast(
    model: &LstmModel,
    forcing: &ForcingSeries,
    precip_forecast: &ForecastArchive,
    issues: &[NaiveDate],
) -> Result<StandaloneForecast> {
    if model.input_size() != STANDALONE_FEATURES {
        return Err(Error::input(format!(
            "standalone model must take {STANDALONE_FEATURES} features, it takes {}",
            model.input_size()
        )));
    }
    let lookback = model.lookback;
    let mut archive = ForecastArchive::empty(issues.to_vec());
    let mut skipped = 0;
    let mut window = Vec::with_capacity(lookback * STANDALONE_FEATURES);
    let mut scaled = Vec::new();
    let mut cache = model.new_cache();
    for &issue in archive.issue_dates().to_vec().iter() {
        let fc_idx = precip_forecast.issue_index(issue);
        for lead in 1..=MAX_LEAD {
            let valid = ForecastArchive::valid_date(issue, lead);
            let span = forcing.index_of(valid).filter(|&end| end + 1 >= lookback);
            for member in 0..MEMBERS {
                let Some(end) = span else {
                    skipped += 1;
                    continue;
                };
                window.clear();
                let mut complete = true;
                for k in end + 1 - lookback..=end {
                    let date = forcing.date_at(k);
                    let precip = if date <= issue {
                        Some(forcing.precip()[k])
                    } else {
                        let day = (date - issue).num_days() as u32;
                        fc_idx.and_then(|i| precip_forecast.get_at(i, day, member))
                    };
                    let Some(p) = precip else {
                        complete = false;
                        break;
                    };
                    window.push(p);
                    window.push(forcing.temperature()[k]);
                }
                if !complete {
                    skipped += 1;
                    continue;
                }
                let flow = model.predict_with(&window, &mut scaled, &mut cache);
                if !flow.is_finite() {
                    return Err(Error::Training(format!(
                        "standalone model produced {flow} for {issue} lead {lead} member {member}"
                    )));
                }
                archive.set(issue, lead, member, flow.max(0.0))?;
            }
        }
    }
    Ok(StandaloneForecast { archive, skipped })
}

/// Issue dates with at least one lead valid inside `range`.
pub fn issues_verifying_in(archive: &ForecastArchive, range: DateRange) -> Vec<NaiveDate> {
    archive
        .issue_dates()
        .iter()
        .copied()
        .filter(|&i| (1..=MAX_LEAD).any(|l| range.contains(ForecastArchive::valid_date(i, l))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LstmParams, MinMax, ScalerParams, TrainMeta};

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn forcing(n: usize) -> ForcingSeries {
        let p = (0..n).map(|k| ((k * 7) % 5) as f64).collect();
        let t = (0..n).map(|k| (k as f64 * 0.1).cos() * 10.0).collect();
        ForcingSeries::new(d(2004, 1, 1), p, t).unwrap()
    }

    fn readout_only(bias: f64, lookback: usize) -> LstmModel {
        let mut params = LstmParams::zeros(2, 3);
        *params.readout_bias_mut() = bias;
        LstmModel {
            params,
            scaler_in: ScalerParams {
                features: vec![MinMax { min: 0.0, max: 5.0 }, MinMax { min: -10.0, max: 10.0 }],
            },
            scaler_out: MinMax { min: 2.0, max: 12.0 },
            lookback,
            meta: TrainMeta {
                seed: 0,
                epochs: 0,
                samples: 0,
            },
        }
    }

    fn observed_as_forecast(f: &ForcingSeries, first: NaiveDate, last: NaiveDate) -> ForecastArchive {
        let mut a = ForecastArchive::daily(first, last);
        for &issue in a.issue_dates().to_vec().iter() {
            for lead in 1..=MAX_LEAD {
                let k = f.index_of(ForecastArchive::valid_date(issue, lead)).unwrap();
                for m in 0..MEMBERS {
                    a.set(issue, lead, m, f.precip()[k]).unwrap();
                }
            }
        }
        a
    }

    #[test]
    fn dataset_windows_are_time_major() {
        let f = forcing(40);
        let obs = DailySeries::from_values(d(2004, 1, 1), (0..40).map(f64::from).collect()).unwrap();
        let ds = standalone_dataset(&f, &obs, DateRange::new(d(2004, 1, 1), d(2004, 2, 9)), 5).unwrap();
        assert_eq!(ds.len(), 36);
        assert_eq!(ds.targets()[0], 4.0);
        let w = ds.window(0);
        assert_eq!(w[0], f.precip()[0]);
        assert_eq!(w[1], f.temperature()[0]);
        assert_eq!(w[9], f.temperature()[4]);
    }

    #[test]
    fn untrained_readout_gives_inverse_scaled_bias() {
        let f = forcing(60);
        let fc = observed_as_forecast(&f, d(2004, 1, 10), d(2004, 2, 1));
        let model = readout_only(0.3, 10);
        let out = standalone_lstm_forecast(&model, &f, &fc, fc.issue_dates()).unwrap();
        let expected = model.scaler_out.inverse(0.3);
        let mut seen = 0;
        for (_, _, _, v) in out.archive.iter() {
            assert_eq!(v, expected);
            seen += 1;
        }
        assert!(seen > 0);
        // issues too early for a 10-day window at lead 1 are skipped
        assert_eq!(out.skipped, 0);
    }

    #[test]
    fn identical_forcing_gives_identical_members() {
        let f = forcing(80);
        let fc = observed_as_forecast(&f, d(2004, 1, 5), d(2004, 3, 1));
        let mut model = readout_only(0.1, 8);
        for (k, v) in model.params.as_mut_slice().iter_mut().enumerate() {
            *v = ((k * 37) % 11) as f64 / 11.0 - 0.5;
        }
        let out = standalone_lstm_forecast(&model, &f, &fc, fc.issue_dates()).unwrap();
        let mut cells = 0;
        for &issue in out.archive.issue_dates() {
            for lead in 1..=MAX_LEAD {
                if let Some(ens) = out.archive.ensemble(issue, lead) {
                    assert!(ens.iter().all(|v| *v == ens[0]));
                    cells += 1;
                }
            }
        }
        assert!(cells > 0);
        assert!(out.skipped > 0, "the earliest issues lack 8 days of history");
    }

    #[test]
    fn wrong_feature_count_is_rejected() {
        let f = forcing(30);
        let fc = observed_as_forecast(&f, d(2004, 1, 5), d(2004, 1, 10));
        let mut model = readout_only(0.0, 3);
        model.params = LstmParams::zeros(1, 3);
        assert!(standalone_lstm_forecast(&model, &f, &fc, fc.issue_dates()).is_err());
    }
}
