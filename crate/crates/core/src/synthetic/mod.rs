//! Seeded stand-in catchment: a linear-reservoir truth, observed forcing,
//! and an 11-member forecast ensemble from a structurally biased reservoir
//! driven by perturbed forcing.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::hydro::{day_of_year, DailySeries, DateRange, ForcingSeries, ForecastArchive};
use crate::seed::derive_seed;
use crate::{Error, Result, MAX_LEAD, MEMBERS};

const STREAM_PRECIP: u64 = 1;
const STREAM_TEMPERATURE: u64 = 2;
const STREAM_FORECAST: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CatchmentConfig {
    pub seed: u64,
    pub start_year: i32,
    pub years: u32,
    /// Leading years used for training; the rest are held out.
    pub train_years: u32,
    /// Recession constant of the truth reservoir (1/day).
    pub k_true: f64,
    /// Recession constant of the forecast reservoir (1/day).
    pub k_forecast: f64,
    pub wet_day_prob: f64,
    /// Mean precipitation on wet days (mm/day) before seasonal modulation.
    pub precip_mean: f64,
    pub precip_amplitude: f64,
    pub precip_phase_days: f64,
    /// Forcing log-error standard deviation per √day of forecast horizon.
    pub forcing_error_growth: f64,
    /// Multiplier on the forcing error of the perturbed members.
    pub member_spread: f64,
    /// Truth storage before the first day; `None` starts at the
    /// long-run equilibrium.
    pub initial_storage: Option<f64>,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_noise: f64,
}

impl Default for CatchmentConfig {
    fn default() -> Self {
        CatchmentConfig {
            seed: 2004,
            start_year: 2004,
            years: 9,
            train_years: 6,
            k_true: 0.2,
            k_forecast: 0.3,
            wet_day_prob: 0.4,
            precip_mean: 6.0,
            precip_amplitude: 0.5,
            precip_phase_days: 0.0,
            forcing_error_growth: 0.15,
            member_spread: 1.0,
            initial_storage: None,
            temp_mean: 10.0,
            temp_amplitude: 12.0,
            temp_noise: 2.0,
        }
    }
}

impl CatchmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("k_true", self.k_true), ("k_forecast", self.k_forecast)] {
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::input(format!("{name} must lie in (0, 1), got {k}")));
            }
        }
        if !(self.wet_day_prob > 0.0 && self.wet_day_prob < 1.0) {
            return Err(Error::input("wet_day_prob must lie in (0, 1)"));
        }
        if !(self.precip_mean > 0.0) {
            return Err(Error::input("precip_mean must be positive"));
        }
        if !(self.precip_amplitude.abs() < 1.0) {
            return Err(Error::input("precip_amplitude must lie in (-1, 1)"));
        }
        if !(self.forcing_error_growth >= 0.0) || !(self.member_spread >= 0.0) || !(self.temp_noise >= 0.0) {
            return Err(Error::input("forcing_error_growth, member_spread and temp_noise must be non-negative"));
        }
        if self.years == 0 || self.train_years == 0 || self.train_years >= self.years {
            return Err(Error::input(format!(
                "need 0 < train_years < years, got {} of {}",
                self.train_years, self.years
            )));
        }
        if let Some(s) = self.initial_storage {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::input("initial_storage must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("valid start year")
    }

    pub fn last_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start_year + self.years as i32 - 1, 12, 31).expect("valid end year")
    }

    pub fn train_range(&self) -> DateRange {
        let end = NaiveDate::from_ymd_opt(self.start_year + self.train_years as i32 - 1, 12, 31).unwrap();
        DateRange::new(self.first_day(), end)
    }

    pub fn verify_range(&self) -> DateRange {
        let start = NaiveDate::from_ymd_opt(self.start_year + self.train_years as i32, 1, 1).unwrap();
        DateRange::new(start, self.last_day())
    }

    /// Storage at which mean inflow and outflow balance.
    pub fn equilibrium_storage(&self) -> f64 {
        self.wet_day_prob * self.precip_mean * (1.0 - self.k_true) / self.k_true
    }

    fn forcing_sigma(&self, member: usize, forecast_day: u32) -> f64 {
        if member == 0 {
            0.0
        } else {
            self.member_spread * self.forcing_error_growth * f64::from(forecast_day).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: CatchmentConfig,
    pub forcing: ForcingSeries,
    pub truth: DailySeries,
    pub initial_storage: f64,
    /// Truth storage at the end of each day.
    pub storage: Vec<f64>,
    pub raw: ForecastArchive,
    /// Forecast precipitation per (issue, forecast day, member).
    pub precip_forecast: ForecastArchive,
}

impl SyntheticDataset {
    /// Σ outflow + final storage − (initial storage + Σ precipitation),
    /// relative to the inflow total.
    pub fn mass_balance_residual(&self) -> f64 {
        let outflow: f64 = self.truth.present_values().iter().sum();
        let precip: f64 = self.forcing.precip().iter().sum();
        let final_storage = self.storage.last().copied().unwrap_or(self.initial_storage);
        let inflow = self.initial_storage + precip;
        (outflow + final_storage - inflow) / inflow.max(f64::MIN_POSITIVE)
    }
}

/// Generates the synthetic catchment for `config`.
///
/// Forecasts start from a state of the biased reservoir whose issue-day
/// outflow equals the observed flow, then run `lead` days on forcing
/// `p·exp(η)`, `η ~ N(−σ²/2, σ²)` with `σ = spread·σ₁·√day`, and η ≡ 0 for
/// member 0. Each (issue, forecast day, member) draws from its own stream.
pub fn generate(config: &CatchmentConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let first = config.first_day();
    let n_days = (config.last_day() - first).num_days() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_PRECIP]));
    let mut precip = Vec::with_capacity(n_days);
    for t in 0..n_days {
        let doy = f64::from(day_of_year(first + Days::new(t as u64)));
        let mean = config.precip_mean
            * (1.0 + config.precip_amplitude * (2.0 * std::f64::consts::PI * (doy - config.precip_phase_days) / 365.25).sin());
        let wet = rng.random::<f64>() < config.wet_day_prob;
        let amount = Exp::new(1.0 / mean).expect("positive mean").sample(&mut rng);
        precip.push(if wet { amount } else { 0.0 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_TEMPERATURE]));
    let noise = Normal::new(0.0, config.temp_noise).expect("finite noise");
    let temperature: Vec<f64> = (0..n_days)
        .map(|t| {
            let doy = f64::from(day_of_year(first + Days::new(t as u64)));
            config.temp_mean
                + config.temp_amplitude * (2.0 * std::f64::consts::PI * (doy - 105.0) / 365.25).sin()
                + noise.sample(&mut rng)
        })
        .collect();

    let initial_storage = config.initial_storage.unwrap_or_else(|| config.equilibrium_storage());
    let mut storage = Vec::with_capacity(n_days);
    let mut flow = Vec::with_capacity(n_days);
    let mut s = initial_storage;
    for &p in &precip {
        let wet = s + p;
        flow.push(config.k_true * wet);
        s = (1.0 - config.k_true) * wet;
        storage.push(s);
    }

    let last_issue = config.last_day() - Days::new(u64::from(MAX_LEAD));
    let mut raw = ForecastArchive::daily(first, last_issue);
    let mut precip_forecast = ForecastArchive::daily(first, last_issue);
    let k_fc = config.k_forecast;
    for (ii, &issue) in raw.issue_dates().to_vec().iter().enumerate() {
        let start_storage = (1.0 - k_fc) / k_fc * flow[ii];
        for member in 0..MEMBERS {
            let mut s = start_storage;
            for day in 1..=MAX_LEAD {
                let p = precip[ii + day as usize];
                let sigma = config.forcing_sigma(member, day);
                let p_hat = if sigma > 0.0 {
                    let mut cell = ChaCha8Rng::seed_from_u64(derive_seed(
                        config.seed,
                        &[STREAM_FORECAST, ii as u64, u64::from(day), member as u64],
                    ));
                    let eta = Normal::new(-0.5 * sigma * sigma, sigma).expect("finite sigma").sample(&mut cell);
                    p * eta.exp()
                } else {
                    p
                };
                let wet = s + p_hat;
                s = (1.0 - k_fc) * wet;
                raw.set(issue, day, member, k_fc * wet)?;
                precip_forecast.set(issue, day, member, p_hat)?;
            }
        }
    }

    Ok(SyntheticDataset {
        config: config.clone(),
        forcing: ForcingSeries::new(first, precip, temperature)?,
        truth: DailySeries::from_values(first, flow)?,
        initial_storage,
        storage,
        raw,
        precip_forecast,
    })
}

/// Per-lead sanity statistics of a generated ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadAudit {
    pub lead: u32,
    /// RMSE of the unperturbed member against truth.
    pub control_rmse: f64,
    /// Mean over issues of the across-member standard deviation.
    pub ensemble_std: f64,
    /// Mean ratio of forecast to observed precipitation, perturbed
    /// members on wet days.
    pub forcing_bias: f64,
    /// Mean of `ln(p̂/p) + σ²/2` over the same cells; zero in expectation.
    pub log_ratio_offset: f64,
    /// Standard deviation σ of the forcing log-error at this lead.
    pub log_sigma: f64,
    /// Perturbed wet cells behind the forcing statistics.
    pub wet_cells: usize,
}

pub fn ensemble_spread_audit(dataset: &SyntheticDataset) -> Vec<LeadAudit> {
    let forcing_first = dataset.forcing.start();
    (1..=MAX_LEAD)
        .map(|lead| {
            let sigma = dataset.config.forcing_sigma(1, lead);
            let mut sq_err = 0.0;
            let mut n = 0usize;
            let mut std_sum = 0.0;
            let mut ratio_sum = 0.0;
            let mut log_sum = 0.0;
            let mut wet = 0usize;
            for (ii, &issue) in dataset.raw.issue_dates().iter().enumerate() {
                let valid = ForecastArchive::valid_date(issue, lead);
                let Some(ens) = dataset.raw.ensemble_at(ii, lead) else { continue };
                let Some(obs) = dataset.truth.get(valid) else { continue };
                sq_err += (ens[0] - obs).powi(2);
                n += 1;
                let dev: Vec<f64> = ens.iter().map(|v| v - ens[0]).collect();
                let mean = dev.iter().sum::<f64>() / MEMBERS as f64;
                let var = dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (MEMBERS - 1) as f64;
                std_sum += var.sqrt();
                let p = dataset.forcing.precip()[(valid - forcing_first).num_days() as usize];
                if p > 0.0 {
                    for m in 1..MEMBERS {
                        let p_hat = dataset.precip_forecast.get_at(ii, lead, m).unwrap_or(p);
                        ratio_sum += p_hat / p;
                        log_sum += (p_hat / p).ln() + 0.5 * sigma * sigma;
                        wet += 1;
                    }
                }
            }
            let nf = n.max(1) as f64;
            let wf = wet.max(1) as f64;
            LeadAudit {
                lead,
                control_rmse: (sq_err / nf).sqrt(),
                ensemble_std: std_sum / nf,
                forcing_bias: ratio_sum / wf,
                log_ratio_offset: log_sum / wf,
                log_sigma: sigma,
                wet_cells: wet,
            }
        })
        .collect()
}
