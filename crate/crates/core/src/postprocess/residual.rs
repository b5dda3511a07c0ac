use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::hydro::{DailySeries, DateRange, ForecastArchive};
use crate::nn::{train, Dataset, LstmModel, TrainConfig};
use crate::seed::derive_seed;
use crate::{Error, Result, MAX_LEAD, MEMBERS};

pub const BANK_MANIFEST: &str = "bank_manifest.txt";

/// One (lead, member) slice of the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slice {
    pub lead: u32,
    pub member: usize,
}

impl Slice {
    pub fn all() -> impl Iterator<Item = Slice> {
        (1..=MAX_LEAD).flat_map(|lead| (0..MEMBERS).map(move |member| Slice { lead, member }))
    }

    fn index(self) -> usize {
        (self.lead as usize - 1) * MEMBERS + self.member
    }

    pub fn file_name(self) -> String {
        format!("lstm_L{}_M{}.txt", self.lead, self.member)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceFit {
    pub slice: Slice,
    pub seed: u64,
    pub model: LstmModel,
    /// Mean scaled-space training loss per epoch.
    pub loss_history: Vec<f64>,
}

/// One residual model per lead and member.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModelBank {
    pub config: TrainConfig,
    pub train_range: DateRange,
    fits: Vec<SliceFit>,
}

/// The member's raw values at `lead` for `lookback` consecutive issues
/// ending at `issue_idx`; `None` if any is missing or issues are not
/// consecutive days.
fn raw_window(archive: &ForecastArchive, issue_idx: usize, slice: Slice, lookback: usize, out: &mut Vec<f64>) -> bool {
    out.clear();
    if issue_idx + 1 < lookback {
        return false;
    }
    let first = issue_idx + 1 - lookback;
    let dates = archive.issue_dates();
    if (dates[issue_idx] - dates[first]).num_days() as usize != lookback - 1 {
        return false;
    }
    for k in first..=issue_idx {
        match archive.get_at(k, slice.lead, slice.member) {
            Some(v) => out.push(v),
            None => return false,
        }
    }
    true
}

/// Windows of the member's raw forecasts with target `obs − raw` at the
/// window's last issue, for valid dates in `range`.
pub fn residual_dataset(
    archive: &ForecastArchive,
    obs: &DailySeries,
    slice: Slice,
    range: DateRange,
    lookback: usize,
) -> Result<Dataset> {
    let mut ds = Dataset::new(1, lookback);
    let mut window = Vec::with_capacity(lookback);
    for (k, &issue) in archive.issue_dates().iter().enumerate() {
        let valid = ForecastArchive::valid_date(issue, slice.lead);
        if !range.contains(valid) {
            continue;
        }
        let Some(y) = obs.get(valid) else { continue };
        if !raw_window(archive, k, slice, lookback, &mut window) {
            continue;
        }
        let raw = window[lookback - 1];
        ds.push(&window, y - raw)?;
    }
    Ok(ds)
}

/// Trains the 77 residual models, each on its own slice with a seed
/// derived from `(config.seed, lead, member)`.
pub fn fit_residual_bank(
    archive: &ForecastArchive,
    obs: &DailySeries,
    train_range: DateRange,
    config: &TrainConfig,
) -> Result<ResidualModelBank> {
    config.validate()?;
    let slices: Vec<Slice> = Slice::all().collect();
    let fits = slices
        .par_iter()
        .map(|&slice| {
            let ds = residual_dataset(archive, obs, slice, train_range, config.lookback)?;
            if ds.len() < config.batch_size {
                return Err(Error::Training(format!(
                    "lead {} member {}: {} usable windows, need at least {}",
                    slice.lead,
                    slice.member,
                    ds.len(),
                    config.batch_size
                )));
            }
            let seed = derive_seed(config.seed, &[u64::from(slice.lead), slice.member as u64]);
            let slice_config = TrainConfig { seed, ..config.clone() };
            let (model, loss_history) = train(&ds, &slice_config)
                .map_err(|e| Error::Training(format!("lead {} member {}: {e}", slice.lead, slice.member)))?;
            log::debug!(
                "residual model L{} M{}: {} windows, final loss {:?}",
                slice.lead,
                slice.member,
                ds.len(),
                loss_history.last()
            );
            Ok(SliceFit {
                slice,
                seed,
                model,
                loss_history,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualModelBank {
        config: config.clone(),
        train_range,
        fits,
    })
}

impl ResidualModelBank {
    /// Assembles a bank from already fitted slices.
    pub fn from_fits(config: TrainConfig, train_range: DateRange, mut fits: Vec<SliceFit>) -> Result<Self> {
        fits.sort_by_key(|f| f.slice);
        let expected: Vec<Slice> = Slice::all().collect();
        let got: Vec<Slice> = fits.iter().map(|f| f.slice).collect();
        if got != expected {
            return Err(Error::input(format!(
                "a residual bank needs exactly one model per lead and member, got {} slices",
                fits.len()
            )));
        }
        Ok(ResidualModelBank {
            config,
            train_range,
            fits,
        })
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn fits(&self) -> &[SliceFit] {
        &self.fits
    }

    pub fn model(&self, lead: u32, member: usize) -> &LstmModel {
        &self.fits[Slice { lead, member }.index()].model
    }

    /// Writes one model file per slice plus a manifest.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "train_start={}", self.train_range.start);
        let _ = writeln!(manifest, "train_end={}", self.train_range.end);
        let c = &self.config;
        let _ = writeln!(
            manifest,
            "config hidden_size={} lookback={} batch_size={} epochs={} learning_rate={:e} beta1={:e} beta2={:e} epsilon={:e} grad_clip_norm={:e} seed={}",
            c.hidden_size, c.lookback, c.batch_size, c.epochs, c.learning_rate, c.beta1, c.beta2, c.epsilon, c.grad_clip_norm, c.seed
        );
        for fit in &self.fits {
            let name = fit.slice.file_name();
            fit.model.save(dir.join(&name))?;
            let _ = writeln!(manifest, "slice lead={} member={} seed={} file={name}", fit.slice.lead, fit.slice.member, fit.seed);
        }
        let path = dir.join(BANK_MANIFEST);
        fs::write(&path, manifest).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Reads a bank written by [`save`](Self::save). Loss histories are
    /// not persisted and come back empty.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(BANK_MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let bad = |line: usize, what: &str| Error::format(format!("{}:{line}: {what}", path.display()));
        let mut start = None;
        let mut end = None;
        let mut config = TrainConfig::default();
        let mut fits = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let no = no + 1;
            let fields = |s: &str| -> Vec<(String, String)> {
                s.split_whitespace()
                    .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
                    .collect()
            };
            if let Some(v) = line.strip_prefix("train_start=") {
                start = Some(v.parse::<NaiveDate>().map_err(|_| bad(no, "bad train_start"))?);
            } else if let Some(v) = line.strip_prefix("train_end=") {
                end = Some(v.parse::<NaiveDate>().map_err(|_| bad(no, "bad train_end"))?);
            } else if let Some(rest) = line.strip_prefix("config ") {
                for (k, v) in fields(rest) {
                    config.set(&k, &v).map_err(|e| bad(no, &e.to_string()))?;
                }
            } else if let Some(rest) = line.strip_prefix("slice ") {
                let kv = fields(rest);
                let get = |key: &str| {
                    kv.iter()
                        .find(|(k, _)| k == key)
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| bad(no, &format!("missing {key}")))
                };
                let lead: u32 = get("lead")?.parse().map_err(|_| bad(no, "bad lead"))?;
                let member: usize = get("member")?.parse().map_err(|_| bad(no, "bad member"))?;
                let seed: u64 = get("seed")?.parse().map_err(|_| bad(no, "bad seed"))?;
                let model = LstmModel::load(dir.join(get("file")?))?;
                fits.push(SliceFit {
                    slice: Slice { lead, member },
                    seed,
                    model,
                    loss_history: Vec::new(),
                });
            } else if !line.trim().is_empty() {
                return Err(bad(no, "unrecognized line"));
            }
        }
        let (Some(start), Some(end)) = (start, end) else {
            return Err(bad(0, "missing training range"));
        };
        Self::from_fits(config, DateRange::new(start, end), fits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedArchive {
    pub archive: ForecastArchive,
    /// Raw cells left without a correction for lack of window history.
    pub missing: usize,
    /// Corrected cells raised to zero.
    pub floored: usize,
}

impl CorrectedArchive {
    /// Wraps an archive read back from disk; counts are unknown and zero.
    pub fn from_archive(archive: ForecastArchive) -> Self {
        CorrectedArchive {
            archive,
            missing: 0,
            floored: 0,
        }
    }
}

/// Adds each slice's predicted residual to the raw member forecast,
/// flooring at zero. The window ends at the forecast's own issue.
pub fn apply_residual_bank(bank: &ResidualModelBank, archive: &ForecastArchive) -> Result<CorrectedArchive> {
    let per_slice: Vec<(Slice, Vec<(usize, f64)>, usize, usize)> = bank
        .fits
        .par_iter()
        .map(|fit| {
            let model = &fit.model;
            let mut window = Vec::with_capacity(model.lookback);
            let mut scaled = Vec::new();
            let mut cache = model.new_cache();
            let mut values = Vec::new();
            let (mut missing, mut floored) = (0, 0);
            for k in 0..archive.issue_dates().len() {
                let Some(raw) = archive.get_at(k, fit.slice.lead, fit.slice.member) else { continue };
                if !raw_window(archive, k, fit.slice, model.lookback, &mut window) {
                    missing += 1;
                    continue;
                }
                let residual = model.predict_with(&window, &mut scaled, &mut cache);
                let corrected = raw + residual;
                if !corrected.is_finite() {
                    return Err(Error::Training(format!(
                        "lead {} member {}: non-finite correction at {}",
                        fit.slice.lead,
                        fit.slice.member,
                        archive.issue_dates()[k]
                    )));
                }
                if corrected < 0.0 {
                    floored += 1;
                }
                values.push((k, corrected.max(0.0)));
            }
            Ok((fit.slice, values, missing, floored))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = ForecastArchive::empty(archive.issue_dates().to_vec());
    let (mut missing, mut floored) = (0, 0);
    for (slice, values, m, f) in per_slice {
        missing += m;
        floored += f;
        for (k, v) in values {
            out.set(archive.issue_dates()[k], slice.lead, slice.member, v)?;
        }
    }
    Ok(CorrectedArchive {
        archive: out,
        missing,
        floored,
    })
}
