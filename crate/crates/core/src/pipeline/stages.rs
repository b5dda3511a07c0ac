use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::config::{ExperimentConfig, Mode};
use super::format::{data, report};
use super::io::{
    ingest_forecasts, ingest_forcing, ingest_observations, ingest_precip_forecasts, write_rows,
};
use super::output::StagedDir;
use crate::baselines::{
    build_climatology, issues_verifying_in, persistence_forecasts, standalone_dataset, standalone_lstm_forecast,
    DayOfYearClimatology, StandaloneForecast,
};
use crate::hydro::{align_pairs, flow_threshold, DailySeries, FlowThresholds, ForcingSeries, ForecastArchive, PointForecasts};
use crate::nn::{train, LstmModel, TrainConfig};
use crate::postprocess::{
    apply_quantile_regression, apply_residual_bank, default_quantile_levels, fit_quantile_regression, fit_residual_bank,
    CorrectedArchive, QrOptions, QuantileFit, QuantileRegressionModel, ResidualModelBank,
};
use crate::seed::derive_seed;
use crate::synthetic::{generate, SyntheticDataset};
use crate::verify::{conditional_verify, System, SystemForecasts, VerificationReport, VerifySettings};
use crate::{Error, Result, MAX_LEAD};

pub const SYS_CLIMATOLOGY: &str = "climatology";
pub const SYS_SIMPLE_PERSISTENCE: &str = "simple_persistence";
pub const SYS_ANOMALY_PERSISTENCE: &str = "anomaly_persistence";
pub const SYS_DETERMINISTIC: &str = "deterministic";
pub const SYS_RAW: &str = "raw_ensemble";
pub const SYS_STANDALONE: &str = "standalone_lstm";
pub const SYS_QR: &str = "qr_postprocessed";
pub const SYS_LSTM: &str = "lstm_postprocessed";

/// Every verified system, in report order.
pub const SYSTEMS: [&str; 8] = [
    SYS_ANOMALY_PERSISTENCE,
    SYS_CLIMATOLOGY,
    SYS_DETERMINISTIC,
    SYS_LSTM,
    SYS_QR,
    SYS_RAW,
    SYS_SIMPLE_PERSISTENCE,
    SYS_STANDALONE,
];

pub const METRICS_FILE: &str = "metrics.csv";
pub const RELIABILITY_FILE: &str = "reliability.csv";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const RUN_RECORD_FILE: &str = "run.txt";
pub const MODELS_DIR: &str = "models";
pub const RESIDUAL_DIR: &str = "residual";
pub const STANDALONE_MODEL_FILE: &str = "standalone_lstm.txt";
pub const QR_MODEL_FILE: &str = "qr_model.txt";
pub const LSTM_OUTPUT_FILE: &str = "lstm_postprocessed.csv";
pub const QR_OUTPUT_FILE: &str = "qr_postprocessed.csv";
pub const STANDALONE_OUTPUT_FILE: &str = "standalone_lstm.csv";

pub const METRICS_HEADER: [&str; 7] = ["system", "lead", "season", "category", "metric", "value", "n"];
pub const RELIABILITY_HEADER: [&str; 8] =
    ["system", "lead", "category", "bin_lo", "bin_hi", "fcst_prob_avg", "obs_freq", "count"];
pub const LOSS_HEADER: [&str; 3] = ["model", "epoch", "loss"];

/// Runs `f`, tagging any error with the stage name.
pub fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    f().map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: name,
            source: Box::new(other),
        },
    })
}

#[derive(Debug, Clone)]
pub struct Inputs {
    pub obs: DailySeries,
    pub raw: ForecastArchive,
    pub forcing: Option<ForcingSeries>,
    pub precip_forecasts: Option<ForecastArchive>,
    pub synthetic: Option<SyntheticDataset>,
    pub gaps: Vec<NaiveDate>,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    match cfg.mode {
        Mode::Synthetic => {
            let ds = generate(&cfg.catchment)?;
            Ok(Inputs {
                obs: ds.truth.clone(),
                raw: ds.raw.clone(),
                forcing: Some(ds.forcing.clone()),
                precip_forecasts: Some(ds.precip_forecast.clone()),
                synthetic: Some(ds),
                gaps: Vec::new(),
            })
        }
        Mode::Files => {
            let p = &cfg.inputs;
            let obs = ingest_observations(p.observations.as_ref().ok_or_else(|| Error::input("obs_path not set"))?)?;
            let raw = ingest_forecasts(
                p.forecasts.as_ref().ok_or_else(|| Error::input("forecast_path not set"))?,
                p.forecasts_subdaily,
            )?;
            let forcing = p.forcing.as_ref().map(ingest_forcing).transpose()?;
            let precip_forecasts = p.precip_forecasts.as_ref().map(ingest_precip_forecasts).transpose()?;
            Ok(Inputs {
                obs: obs.series,
                raw,
                forcing,
                precip_forecasts,
                synthetic: None,
                gaps: obs.gaps,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub bank: ResidualModelBank,
    pub qr: QuantileRegressionModel,
    /// Model and per-epoch loss; absent without forcing inputs.
    pub standalone: Option<(LstmModel, Vec<f64>)>,
}

fn standalone_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(cfg.train.seed, &[0, 0]),
        ..cfg.train.clone()
    }
}

pub fn train_models(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<TrainedModels> {
    let range = cfg.train_range()?;
    let bank = stage("residual_training", || fit_residual_bank(&inputs.raw, &inputs.obs, range, &cfg.train))?;
    let qr = stage("quantile_regression", || {
        let sets: Vec<_> = (1..=MAX_LEAD)
            .map(|lead| align_pairs(&inputs.raw, &inputs.obs, lead).filter(|p| range.contains(p.valid)))
            .collect();
        fit_quantile_regression(&sets, &default_quantile_levels(cfg.quantile_levels), &QrOptions::default())
    })?;
    let standalone = stage("standalone_training", || match (&inputs.forcing, &inputs.precip_forecasts) {
        (Some(forcing), Some(_)) => {
            let ds = standalone_dataset(forcing, &inputs.obs, range, cfg.train.lookback)?;
            train(&ds, &standalone_config(cfg)).map(Some)
        }
        _ => {
            log::warn!("no forcing inputs; the standalone LSTM is skipped");
            Ok(None)
        }
    })?;
    Ok(TrainedModels { bank, qr, standalone })
}

impl TrainedModels {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        self.bank.save(dir.join(RESIDUAL_DIR))?;
        if let Some((model, _)) = &self.standalone {
            model.save(dir.join(STANDALONE_MODEL_FILE))?;
        }
        let path = dir.join(QR_MODEL_FILE);
        fs::write(&path, qr_to_text(&self.qr)).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Loss histories are not stored with the models and load empty.
    pub fn load(dir: &Path) -> Result<Self> {
        let bank = ResidualModelBank::load(dir.join(RESIDUAL_DIR))?;
        let standalone_path = dir.join(STANDALONE_MODEL_FILE);
        let standalone = if standalone_path.exists() {
            Some((LstmModel::load(&standalone_path)?, Vec::new()))
        } else {
            None
        };
        let path = dir.join(QR_MODEL_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(TrainedModels {
            bank,
            qr: qr_from_text(&text)?,
            standalone,
        })
    }

    pub fn loss_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for fit in self.bank.fits() {
            let name = format!("residual_L{}_M{}", fit.slice.lead, fit.slice.member);
            for (k, loss) in fit.loss_history.iter().enumerate() {
                rows.push(vec![name.clone(), (k + 1).to_string(), report(*loss)]);
            }
        }
        if let Some((_, history)) = &self.standalone {
            for (k, loss) in history.iter().enumerate() {
                rows.push(vec![SYS_STANDALONE.to_string(), (k + 1).to_string(), report(*loss)]);
            }
        }
        rows
    }
}

pub fn qr_to_text(model: &QuantileRegressionModel) -> String {
    let mut s = format!("ENSPOST-QR v1 levels={}\n", model.levels.len());
    for (lead, fits) in &model.per_lead {
        for f in fits {
            let _ = writeln!(
                s,
                "lead={lead} tau={} a={} b={} loss={} iterations={}",
                data(f.tau),
                data(f.a),
                data(f.b),
                data(f.loss),
                f.iterations
            );
        }
    }
    s
}

pub fn qr_from_text(text: &str) -> Result<QuantileRegressionModel> {
    let mut lines = text.lines().enumerate();
    let levels: usize = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("ENSPOST-QR v1 levels="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::format("quantile model: bad header line"))?;
    let mut model = QuantileRegressionModel {
        levels: Vec::new(),
        per_lead: Default::default(),
    };
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::format(format!("quantile model line {}: {line:?}", no + 1));
        let get = |key: &str| -> Result<String> {
            line.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(bad)
        };
        let lead: u32 = get("lead")?.parse().map_err(|_| bad())?;
        let num = |v: String| v.parse::<f64>().map_err(|_| bad());
        let fit = QuantileFit {
            tau: num(get("tau")?)?,
            a: num(get("a")?)?,
            b: num(get("b")?)?,
            loss: num(get("loss")?)?,
            iterations: get("iterations")?.parse().map_err(|_| bad())?,
        };
        model.per_lead.entry(lead).or_default().push(fit);
    }
    if let Some(fits) = model.per_lead.values().next() {
        model.levels = fits.iter().map(|f| f.tau).collect();
    }
    if model.levels.len() != levels || model.per_lead.values().any(|f| f.len() != levels) {
        return Err(Error::format(format!("quantile model: expected {levels} levels per lead")));
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Postprocessed {
    pub lstm: CorrectedArchive,
    pub qr: ForecastArchive,
    pub standalone: Option<StandaloneForecast>,
}

pub fn postprocess(cfg: &ExperimentConfig, inputs: &Inputs, models: &TrainedModels) -> Result<Postprocessed> {
    let lstm = stage("residual_postprocessing", || apply_residual_bank(&models.bank, &inputs.raw))?;
    let qr = stage("quantile_postprocessing", || apply_quantile_regression(&models.qr, &inputs.raw))?;
    let standalone = stage("standalone_forecast", || {
        let verify = cfg.verify_range()?;
        match (&models.standalone, &inputs.forcing, &inputs.precip_forecasts) {
            (Some((model, _)), Some(forcing), Some(fc)) => {
                let issues = issues_verifying_in(&inputs.raw, verify);
                standalone_lstm_forecast(model, forcing, fc, &issues).map(Some)
            }
            _ => Ok(None),
        }
    })?;
    Ok(Postprocessed { lstm, qr, standalone })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub climatology: DayOfYearClimatology,
    pub thresholds: FlowThresholds,
    pub simple: PointForecasts,
    pub anomaly: PointForecasts,
    pub deterministic: PointForecasts,
}

pub fn build_baselines(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<Baselines> {
    let train_obs = inputs.obs.subset(cfg.train_range()?);
    let climatology = build_climatology(&train_obs, cfg.window_days)?;
    let sample = train_obs.present_values();
    let thresholds = FlowThresholds {
        low_moderate: flow_threshold(&sample, cfg.p_low_moderate)?,
        high: flow_threshold(&sample, cfg.p_high)?,
    };
    let issues = inputs.raw.issue_dates();
    Ok(Baselines {
        simple: persistence_forecasts(&inputs.obs, issues, None)?,
        anomaly: persistence_forecasts(&inputs.obs, issues, Some(&climatology))?,
        deterministic: PointForecasts::from_member(&inputs.raw, 0),
        climatology,
        thresholds,
    })
}

pub fn verify_systems(
    cfg: &ExperimentConfig,
    inputs: &Inputs,
    baselines: &Baselines,
    post: &Postprocessed,
) -> Result<VerificationReport> {
    let mut systems = vec![
        System {
            name: SYS_CLIMATOLOGY,
            forecasts: SystemForecasts::Climatology(&baselines.climatology),
        },
        System {
            name: SYS_SIMPLE_PERSISTENCE,
            forecasts: SystemForecasts::Point(&baselines.simple),
        },
        System {
            name: SYS_ANOMALY_PERSISTENCE,
            forecasts: SystemForecasts::Point(&baselines.anomaly),
        },
        System {
            name: SYS_DETERMINISTIC,
            forecasts: SystemForecasts::Point(&baselines.deterministic),
        },
        System {
            name: SYS_RAW,
            forecasts: SystemForecasts::Ensemble(&inputs.raw),
        },
        System {
            name: SYS_QR,
            forecasts: SystemForecasts::Ensemble(&post.qr),
        },
        System {
            name: SYS_LSTM,
            forecasts: SystemForecasts::Ensemble(&post.lstm.archive),
        },
    ];
    if let Some(s) = &post.standalone {
        systems.push(System {
            name: SYS_STANDALONE,
            forecasts: SystemForecasts::Ensemble(&s.archive),
        });
    }
    let settings = VerifySettings {
        leads: (1..=MAX_LEAD).collect(),
        range: cfg.verify_range()?,
        bins: cfg.bins,
    };
    conditional_verify(&systems, &inputs.obs, &baselines.climatology, &baselines.thresholds, &settings)
}

pub fn metrics_rows(report_: &VerificationReport) -> Vec<Vec<String>> {
    report_
        .rows
        .iter()
        .map(|r| {
            vec![
                r.system.clone(),
                r.lead.to_string(),
                r.season.to_string(),
                r.category.to_string(),
                r.metric.name().to_string(),
                report(r.value),
                r.n.to_string(),
            ]
        })
        .collect()
}

pub fn reliability_rows(report_: &VerificationReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in &report_.reliability {
        for b in &r.curve.bins {
            rows.push(vec![
                r.system.clone(),
                r.lead.to_string(),
                r.category.to_string(),
                report(b.lo),
                report(b.hi),
                b.fcst_prob_avg.map(report).unwrap_or_default(),
                b.obs_freq.map(report).unwrap_or_default(),
                b.count.to_string(),
            ]);
        }
    }
    rows
}

pub fn write_report(dir: &Path, report_: &VerificationReport) -> Result<()> {
    write_rows(&dir.join(METRICS_FILE), &METRICS_HEADER, metrics_rows(report_))?;
    write_rows(&dir.join(RELIABILITY_FILE), &RELIABILITY_HEADER, reliability_rows(report_))
}

/// Everything a full run produced, kept in memory for callers.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub inputs: Inputs,
    pub models: TrainedModels,
    pub baselines: Baselines,
    pub post: Postprocessed,
    pub report: VerificationReport,
}

fn run_record(cfg: &ExperimentConfig, o: &RunOutcome) -> String {
    let mut s = String::from("# effective configuration\n");
    s.push_str(&cfg.to_text());
    s.push_str("# run summary\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("systems", o.report.systems().join(","));
    kv("train_range", cfg.train_range().map(|r| r.to_string()).unwrap_or_default());
    kv("verify_range", cfg.verify_range().map(|r| r.to_string()).unwrap_or_default());
    kv("threshold_low_moderate", report(o.baselines.thresholds.low_moderate));
    kv("threshold_high", report(o.baselines.thresholds.high));
    kv("observation_gaps", o.inputs.gaps.len().to_string());
    kv("issue_dates", o.inputs.raw.issue_dates().len().to_string());
    kv("residual_models", o.models.bank.len().to_string());
    kv("residual_missing_cells", o.post.lstm.missing.to_string());
    kv("residual_floored_cells", o.post.lstm.floored.to_string());
    kv(
        "standalone_skipped_cells",
        o.post.standalone.as_ref().map_or("n/a".into(), |s| s.skipped.to_string()),
    );
    if let Some(ds) = &o.inputs.synthetic {
        kv("mass_balance_residual", report(ds.mass_balance_residual()));
    }
    for (name, file) in [
        ("metrics", METRICS_FILE),
        ("reliability", RELIABILITY_FILE),
        ("loss_history", LOSS_FILE),
        ("models", MODELS_DIR),
    ] {
        kv(name, file.to_string());
    }
    s
}

/// Generates or ingests data, trains every model, postprocesses,
/// verifies all systems and writes the run directory. On failure nothing
/// is left at the output path.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    stage("config", || cfg.validate())?;
    let out = stage("output", || StagedDir::new(&cfg.out_dir))?;
    let inputs = stage("load", || load_inputs(cfg))?;
    let baselines = stage("baselines", || build_baselines(cfg, &inputs))?;
    let models = train_models(cfg, &inputs)?;
    let post = postprocess(cfg, &inputs, &models)?;
    let report_ = stage("verify", || verify_systems(cfg, &inputs, &baselines, &post))?;
    let mut outcome = RunOutcome {
        out_dir: cfg.out_dir.clone(),
        inputs,
        models,
        baselines,
        post,
        report: report_,
    };
    stage("write", || {
        write_report(out.path(), &outcome.report)?;
        write_rows(&out.join(LOSS_FILE), &LOSS_HEADER, outcome.models.loss_rows())?;
        outcome.models.save(&out.join(MODELS_DIR))?;
        let record = out.join(RUN_RECORD_FILE);
        fs::write(&record, run_record(cfg, &outcome)).map_err(|e| Error::io(record.display().to_string(), e))?;
        outcome.out_dir = out.commit()?;
        Ok(())
    })?;
    Ok(outcome)
}
