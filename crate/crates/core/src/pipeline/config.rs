use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::hydro::DateRange;
use crate::nn::TrainConfig;
use crate::synthetic::CatchmentConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Synthetic,
    Files,
}

/// Input files for file-based runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputPaths {
    pub observations: Option<PathBuf>,
    pub forecasts: Option<PathBuf>,
    pub forecasts_subdaily: bool,
    /// Observed forcing; needed for the standalone LSTM.
    pub forcing: Option<PathBuf>,
    /// Forecast precipitation per member; needed for the standalone LSTM.
    pub precip_forecasts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub catchment: CatchmentConfig,
    pub inputs: InputPaths,
    pub train_range: Option<DateRange>,
    pub verify_range: Option<DateRange>,
    pub train: TrainConfig,
    pub bins: usize,
    pub window_days: u32,
    pub quantile_levels: usize,
    pub p_low_moderate: f64,
    pub p_high: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut c = ExperimentConfig {
            mode: Mode::Synthetic,
            seed: 2004,
            catchment: CatchmentConfig::default(),
            inputs: InputPaths::default(),
            train_range: None,
            verify_range: None,
            train: TrainConfig::default(),
            bins: 10,
            window_days: 15,
            quantile_levels: crate::MEMBERS,
            p_low_moderate: 0.5,
            p_high: 0.9,
            out_dir: PathBuf::from("out"),
        };
        c.apply_seed();
        c
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::input(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::input(format!("invalid value {value:?} for {key}, expected true or false"))),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl ExperimentConfig {
    /// Every recognized key.
    pub const KEYS: &'static [&'static str] = &[
        "mode",
        "seed",
        "out",
        "start_year",
        "years",
        "train_years",
        "k_true",
        "k_forecast",
        "wet_day_prob",
        "precip_mean",
        "precip_amplitude",
        "precip_phase_days",
        "forcing_error_growth",
        "member_spread",
        "initial_storage",
        "temp_mean",
        "temp_amplitude",
        "temp_noise",
        "obs_path",
        "forecast_path",
        "forecast_subdaily",
        "forcing_path",
        "precip_forecast_path",
        "train_start",
        "train_end",
        "verify_start",
        "verify_end",
        "hidden_size",
        "lookback",
        "batch_size",
        "epochs",
        "learning_rate",
        "beta1",
        "beta2",
        "epsilon",
        "grad_clip_norm",
        "bins",
        "window_days",
        "quantile_levels",
        "p_low_moderate",
        "p_high",
    ];

    /// The base seed drives both the synthetic catchment and training.
    fn apply_seed(&mut self) {
        self.catchment.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let c = &mut self.catchment;
        match key {
            "mode" => {
                self.mode = match value {
                    "synthetic" => Mode::Synthetic,
                    "files" | "file" => Mode::Files,
                    _ => return Err(Error::input(format!("mode must be synthetic or files, got {value:?}"))),
                }
            }
            "seed" => {
                self.seed = parse(key, value)?;
                self.apply_seed();
            }
            "out" => self.out_dir = PathBuf::from(value),
            "start_year" => c.start_year = parse(key, value)?,
            "years" => c.years = parse(key, value)?,
            "train_years" => c.train_years = parse(key, value)?,
            "k_true" => c.k_true = parse(key, value)?,
            "k_forecast" => c.k_forecast = parse(key, value)?,
            "wet_day_prob" => c.wet_day_prob = parse(key, value)?,
            "precip_mean" => c.precip_mean = parse(key, value)?,
            "precip_amplitude" => c.precip_amplitude = parse(key, value)?,
            "precip_phase_days" => c.precip_phase_days = parse(key, value)?,
            "forcing_error_growth" => c.forcing_error_growth = parse(key, value)?,
            "member_spread" => c.member_spread = parse(key, value)?,
            "initial_storage" => {
                c.initial_storage = match value {
                    "" | "equilibrium" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "temp_mean" => c.temp_mean = parse(key, value)?,
            "temp_amplitude" => c.temp_amplitude = parse(key, value)?,
            "temp_noise" => c.temp_noise = parse(key, value)?,
            "obs_path" => self.inputs.observations = opt_path(value),
            "forecast_path" => self.inputs.forecasts = opt_path(value),
            "forecast_subdaily" => self.inputs.forecasts_subdaily = parse_bool(key, value)?,
            "forcing_path" => self.inputs.forcing = opt_path(value),
            "precip_forecast_path" => self.inputs.precip_forecasts = opt_path(value),
            "train_start" | "train_end" | "verify_start" | "verify_end" => {
                let date: NaiveDate = parse(key, value)?;
                let slot = if key.starts_with("train") {
                    &mut self.train_range
                } else {
                    &mut self.verify_range
                };
                let mut r = slot.unwrap_or(DateRange { start: date, end: date });
                if key.ends_with("start") {
                    r.start = date;
                } else {
                    r.end = date;
                }
                *slot = Some(r);
            }
            "bins" => self.bins = parse(key, value)?,
            "window_days" => self.window_days = parse(key, value)?,
            "quantile_levels" => self.quantile_levels = parse(key, value)?,
            "p_low_moderate" => self.p_low_moderate = parse(key, value)?,
            "p_high" => self.p_high = parse(key, value)?,
            k if TrainConfig::KEYS.contains(&k) && k != "seed" => self.train.set(k, value)?,
            _ => return Err(Error::input(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("line {}: expected key = value, got {raw:?}", no + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::input(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    /// Training dates: the configured range, else the synthetic split.
    pub fn train_range(&self) -> Result<DateRange> {
        match (self.train_range, self.mode) {
            (Some(r), _) => Ok(r),
            (None, Mode::Synthetic) => Ok(self.catchment.train_range()),
            (None, Mode::Files) => Err(Error::input("file-based runs need train_start and train_end")),
        }
    }

    pub fn verify_range(&self) -> Result<DateRange> {
        match (self.verify_range, self.mode) {
            (Some(r), _) => Ok(r),
            (None, Mode::Synthetic) => Ok(self.catchment.verify_range()),
            (None, Mode::Files) => Err(Error::input("file-based runs need verify_start and verify_end")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.mode == Mode::Synthetic {
            self.catchment.validate()?;
        }
        let (train, verify) = (self.train_range()?, self.verify_range()?);
        for (name, r) in [("training", train), ("verification", verify)] {
            if r.start > r.end {
                return Err(Error::input(format!("{name} range {} .. {} is reversed", r.start, r.end)));
            }
        }
        if train.overlaps(&verify) {
            return Err(Error::input(format!("training range {train} overlaps verification range {verify}")));
        }
        if self.bins == 0 {
            return Err(Error::input("bins must be positive"));
        }
        if self.quantile_levels != crate::MEMBERS {
            return Err(Error::input(format!(
                "quantile_levels must be {} to rebuild the ensemble",
                crate::MEMBERS
            )));
        }
        if !(0.0 < self.p_low_moderate && self.p_low_moderate < self.p_high && self.p_high < 1.0) {
            return Err(Error::input("need 0 < p_low_moderate < p_high < 1"));
        }
        if self.mode == Mode::Files {
            let required = [
                ("obs_path", &self.inputs.observations),
                ("forecast_path", &self.inputs.forecasts),
            ];
            for (key, path) in required {
                match path {
                    None => return Err(Error::input(format!("file-based runs need {key}"))),
                    Some(p) if !p.exists() => {
                        return Err(Error::input(format!("{key} {} does not exist", p.display())))
                    }
                    _ => {}
                }
            }
            for (key, path) in [("forcing_path", &self.inputs.forcing), ("precip_forecast_path", &self.inputs.precip_forecasts)] {
                if let Some(p) = path {
                    if !p.exists() {
                        return Err(Error::input(format!("{key} {} does not exist", p.display())));
                    }
                }
            }
        }
        Ok(())
    }

    /// The effective configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        let c = &self.catchment;
        let t = &self.train;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", if self.mode == Mode::Synthetic { "synthetic" } else { "files" }.into());
        kv("seed", self.seed.to_string());
        kv("out", self.out_dir.display().to_string());
        kv("start_year", c.start_year.to_string());
        kv("years", c.years.to_string());
        kv("train_years", c.train_years.to_string());
        kv("k_true", c.k_true.to_string());
        kv("k_forecast", c.k_forecast.to_string());
        kv("wet_day_prob", c.wet_day_prob.to_string());
        kv("precip_mean", c.precip_mean.to_string());
        kv("precip_amplitude", c.precip_amplitude.to_string());
        kv("precip_phase_days", c.precip_phase_days.to_string());
        kv("forcing_error_growth", c.forcing_error_growth.to_string());
        kv("member_spread", c.member_spread.to_string());
        kv("initial_storage", c.initial_storage.map_or("equilibrium".into(), |v| v.to_string()));
        kv("temp_mean", c.temp_mean.to_string());
        kv("temp_amplitude", c.temp_amplitude.to_string());
        kv("temp_noise", c.temp_noise.to_string());
        kv("obs_path", path(&self.inputs.observations));
        kv("forecast_path", path(&self.inputs.forecasts));
        kv("forecast_subdaily", self.inputs.forecasts_subdaily.to_string());
        kv("forcing_path", path(&self.inputs.forcing));
        kv("precip_forecast_path", path(&self.inputs.precip_forecasts));
        if let Some(r) = self.train_range {
            kv("train_start", r.start.to_string());
            kv("train_end", r.end.to_string());
        }
        if let Some(r) = self.verify_range {
            kv("verify_start", r.start.to_string());
            kv("verify_end", r.end.to_string());
        }
        kv("hidden_size", t.hidden_size.to_string());
        kv("lookback", t.lookback.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("epochs", t.epochs.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("beta1", t.beta1.to_string());
        kv("beta2", t.beta2.to_string());
        kv("epsilon", t.epsilon.to_string());
        kv("grad_clip_norm", t.grad_clip_norm.to_string());
        kv("bins", self.bins.to_string());
        kv("window_days", self.window_days.to_string());
        kv("quantile_levels", self.quantile_levels.to_string());
        kv("p_low_moderate", self.p_low_moderate.to_string());
        kv("p_high", self.p_high.to_string());
        s
    }
}
