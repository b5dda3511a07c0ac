use chrono::NaiveDate;

use crate::hydro::{day_of_year, DailySeries, DAYS_PER_CLIM_YEAR};
use crate::{Error, Result};

pub const DEFAULT_WINDOW_DAYS: u32 = 15;

/// Day-of-year pooled samples of training observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOfYearClimatology {
    window_days: u32,
    means: Vec<f64>,
    /// Sorted ascending per day of year.
    samples: Vec<Vec<f64>>,
}

fn circular_distance(a: u32, b: u32) -> u32 {
    let d = a.abs_diff(b);
    d.min(DAYS_PER_CLIM_YEAR - d)
}

/// Pools every training observation whose day of year lies within
/// `window_days` (circularly) of each calendar day.
pub fn build_climatology(training_obs: &DailySeries, window_days: u32) -> Result<DayOfYearClimatology> {
    if training_obs.len() < DAYS_PER_CLIM_YEAR as usize {
        return Err(Error::input(format!(
            "climatology needs at least one full year of observations, got {} days",
            training_obs.len()
        )));
    }
    let mut by_day: Vec<Vec<f64>> = vec![Vec::new(); DAYS_PER_CLIM_YEAR as usize];
    for (date, v) in training_obs.iter() {
        by_day[day_of_year(date) as usize - 1].push(v);
    }
    let reach = window_days.min(DAYS_PER_CLIM_YEAR / 2);
    let mut means = Vec::with_capacity(by_day.len());
    let mut samples = Vec::with_capacity(by_day.len());
    for doy in 1..=DAYS_PER_CLIM_YEAR {
        let mut pooled: Vec<f64> = (1..=DAYS_PER_CLIM_YEAR)
            .filter(|&other| circular_distance(doy, other) <= reach)
            .flat_map(|other| by_day[other as usize - 1].iter().copied())
            .collect();
        if pooled.is_empty() {
            return Err(Error::input(format!("no training observations near day of year {doy}")));
        }
        means.push(pooled.iter().sum::<f64>() / pooled.len() as f64);
        pooled.sort_by(f64::total_cmp);
        samples.push(pooled);
    }
    Ok(DayOfYearClimatology {
        window_days,
        means,
        samples,
    })
}

impl DayOfYearClimatology {
    pub fn window_days(&self) -> u32 {
        self.window_days
    }

    /// Climatological mean for a day of year in `1..=365`.
    pub fn mean_for_day(&self, doy: u32) -> f64 {
        self.means[doy as usize - 1]
    }

    pub fn mean(&self, date: NaiveDate) -> f64 {
        self.mean_for_day(day_of_year(date))
    }

    /// Sorted pooled sample for a day of year in `1..=365`.
    pub fn sample_for_day(&self, doy: u32) -> &[f64] {
        &self.samples[doy as usize - 1]
    }

    pub fn sample(&self, date: NaiveDate) -> &[f64] {
        self.sample_for_day(day_of_year(date))
    }
}

/// Fraction of the valid date's pooled sample strictly above `z`.
pub fn climatology_prob_forecast(clim: &DayOfYearClimatology, valid_date: NaiveDate, z: f64) -> f64 {
    let sample = clim.sample(valid_date);
    let at_or_below = sample.partition_point(|v| *v <= z);
    (sample.len() - at_or_below) as f64 / sample.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn series(start: NaiveDate, n: usize, f: impl Fn(NaiveDate) -> f64) -> DailySeries {
        DailySeries::from_values(start, (0..n).map(|k| f(start + Days::new(k as u64))).collect()).unwrap()
    }

    #[test]
    fn constant_observations() {
        let obs = series(d(2004, 1, 1), 3 * 365, |_| 4.5);
        let clim = build_climatology(&obs, 15).unwrap();
        for doy in 1..=365 {
            assert_eq!(clim.mean_for_day(doy), 4.5);
            assert!(clim.sample_for_day(doy).iter().all(|v| *v == 4.5));
        }
    }

    #[test]
    fn zero_window_single_year() {
        let obs = series(d(2005, 1, 1), 365, |t| f64::from(day_of_year(t)));
        let clim = build_climatology(&obs, 0).unwrap();
        for doy in 1..=365 {
            assert_eq!(clim.sample_for_day(doy), &[f64::from(doy)]);
        }
    }

    #[test]
    fn window_wraps_the_year_end() {
        let obs = series(d(2005, 1, 1), 365, |t| f64::from(day_of_year(t)));
        let clim = build_climatology(&obs, 2).unwrap();
        assert_eq!(clim.sample_for_day(1), &[1.0, 2.0, 3.0, 364.0, 365.0]);
    }

    #[test]
    fn sinusoid_matches_direct_pooling() {
        let amp = 5.0;
        let f = |t: NaiveDate| 10.0 + amp * (2.0 * std::f64::consts::PI * f64::from(day_of_year(t)) / 365.0).sin();
        let obs = series(d(2004, 1, 1), 6 * 365 + 1, f);
        let w = 15;
        let clim = build_climatology(&obs, w).unwrap();
        let bound = amp * 2.0 * (std::f64::consts::PI * f64::from(w) / 365.0).sin();
        for doy in 1..=365u32 {
            let mut sum = 0.0;
            let mut n = 0;
            for (date, v) in obs.iter() {
                let o = day_of_year(date);
                let dist = doy.abs_diff(o).min(365 - doy.abs_diff(o));
                if dist <= w {
                    sum += v;
                    n += 1;
                }
            }
            let oracle = sum / n as f64;
            assert!((clim.mean_for_day(doy) - oracle).abs() <= 1e-12 * oracle.abs());
            let exact = 10.0 + amp * (2.0 * std::f64::consts::PI * f64::from(doy) / 365.0).sin();
            assert!((clim.mean_for_day(doy) - exact).abs() <= bound);
        }
    }

    #[test]
    fn equal_sample_sizes_without_gaps() {
        let obs = series(d(2001, 1, 1), 3 * 365, |_| 1.0);
        let clim = build_climatology(&obs, 15).unwrap();
        assert!((1..=365).all(|doy| clim.sample_for_day(doy).len() == 3 * 31));

        // a leap day adds one value to the pools around day 59 only
        let leap = series(d(2004, 1, 1), 366, |_| 1.0);
        let clim = build_climatology(&leap, 15).unwrap();
        for doy in 1..=365u32 {
            let near = doy.abs_diff(59).min(365 - doy.abs_diff(59)) <= 15;
            assert_eq!(clim.sample_for_day(doy).len(), 31 + usize::from(near));
        }
    }

    #[test]
    fn short_span_is_rejected() {
        let obs = series(d(2004, 1, 1), 200, |_| 1.0);
        assert!(matches!(build_climatology(&obs, 15), Err(Error::Input(_))));
    }

    #[test]
    fn probability_examples() {
        let obs = series(d(2005, 1, 1), 365, |t| f64::from((day_of_year(t) - 1) % 10 + 1));
        let clim = build_climatology(&obs, DAYS_PER_CLIM_YEAR).unwrap();
        let date = d(2010, 6, 1);
        let sample = clim.sample(date);
        let (lo, hi) = (sample[0], sample[sample.len() - 1]);
        assert_eq!(climatology_prob_forecast(&clim, date, lo - 1.0), 1.0);
        assert_eq!(climatology_prob_forecast(&clim, date, hi), 0.0);

        let ten = series(d(2005, 1, 1), 365, |t| f64::from((day_of_year(t) - 1) % 10 + 1));
        let zero_window = build_climatology(&ten, 0).unwrap();
        assert_eq!(zero_window.sample_for_day(5), &[5.0]);
        let pooled: Vec<f64> = (1..=10).map(f64::from).collect();
        let over_five = pooled.iter().filter(|v| **v > 5.0).count() as f64 / pooled.len() as f64;
        let manual = DayOfYearClimatology {
            window_days: 0,
            means: vec![5.5; 365],
            samples: vec![pooled; 365],
        };
        assert_eq!(climatology_prob_forecast(&manual, date, 5.0), over_five);
        assert_eq!(over_five, 0.5);
    }

    proptest! {
        #[test]
        fn probability_is_monotone_in_threshold(
            values in prop::collection::vec(0.0f64..50.0, 365),
            z1 in -1.0f64..60.0,
            z2 in -1.0f64..60.0,
        ) {
            let obs = DailySeries::from_values(d(2005, 1, 1), values).unwrap();
            let clim = build_climatology(&obs, 15).unwrap();
            let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
            for date in [d(2011, 1, 1), d(2011, 7, 15), d(2012, 2, 29)] {
                let p_lo = climatology_prob_forecast(&clim, date, lo);
                let p_hi = climatology_prob_forecast(&clim, date, hi);
                prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
                prop_assert!(p_hi <= p_lo);
            }
        }
    }
}
