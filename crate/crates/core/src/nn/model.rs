use std::fmt::Write as _;
use std::path::Path;

use super::{forward_sequence, LstmParams, MinMax, ScalerParams, SequenceCache};
use crate::{Error, Result};

/// First token of the model file header.
pub const MODEL_MAGIC: &str = "ENSPOST-LSTM";
const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub samples: usize,
}

/// A trained network together with the scalers fitted on its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub params: LstmParams,
    pub scaler_in: ScalerParams,
    pub scaler_out: MinMax,
    pub lookback: usize,
    pub meta: TrainMeta,
}

impl LstmModel {
    pub fn input_size(&self) -> usize {
        self.params.input_size()
    }

    /// Prediction in original units for a time-major window of
    /// `lookback × input_size` values in original units.
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.lookback * self.input_size() {
            return Err(Error::input(format!(
                "window has {} values, model expects {}",
                window.len(),
                self.lookback * self.input_size()
            )));
        }
        let mut scaled = window.to_vec();
        self.scaler_in.forward_window(&mut scaled);
        let (u, _) = forward_sequence(&scaled, &self.params)?;
        Ok(self.scaler_out.inverse(u))
    }

    /// Like [`predict`](Self::predict) but reusing caller-owned buffers.
    pub(crate) fn predict_with(&self, window: &[f64], scaled: &mut Vec<f64>, cache: &mut SequenceCache) -> f64 {
        scaled.clear();
        scaled.extend_from_slice(window);
        self.scaler_in.forward_window(scaled);
        self.scaler_out.inverse(cache.run(&self.params, scaled))
    }

    pub(crate) fn new_cache(&self) -> SequenceCache {
        SequenceCache::new(self.input_size(), self.params.hidden_size(), self.lookback)
    }

    /// Plain-text form: a header line, then one block per tensor with its
    /// shape and row-major values at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{MODEL_MAGIC} {MODEL_VERSION} D={} H={} Lw={}",
            self.input_size(),
            self.params.hidden_size(),
            self.lookback
        )
        .unwrap();
        for (name, rows, cols, values) in self.params.tensors() {
            write_block(&mut out, &name, rows, cols, values);
        }
        let scaler_in: Vec<f64> = self.scaler_in.features.iter().flat_map(|m| [m.min, m.max]).collect();
        write_block(&mut out, "scaler_in", self.scaler_in.len(), 2, &scaler_in);
        write_block(&mut out, "scaler_out", 1, 2, &[self.scaler_out.min, self.scaler_out.max]);
        writeln!(
            out,
            "meta seed={} epochs={} samples={}",
            self.meta.seed, self.meta.epochs, self.meta.samples
        )
        .unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::format("empty model file"))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some(MODEL_MAGIC) || tokens.next() != Some(MODEL_VERSION) {
            return Err(Error::format(format!("line 1: expected `{MODEL_MAGIC} {MODEL_VERSION}` header")));
        }
        let mut dims = [0usize; 3];
        for (slot, key) in dims.iter_mut().zip(["D", "H", "Lw"]) {
            let tok = tokens.next().ok_or_else(|| Error::format(format!("line 1: missing {key}=")))?;
            *slot = tok
                .strip_prefix(key)
                .and_then(|t| t.strip_prefix('='))
                .and_then(|t| t.parse().ok())
                .filter(|v| *v > 0)
                .ok_or_else(|| Error::format(format!("line 1: bad dimension `{tok}`")))?;
        }
        let [d, h, lookback] = dims;

        let mut params = LstmParams::zeros(d, h);
        let mut scaler_in = None;
        let mut scaler_out = None;
        let mut meta = None;
        let mut seen = Vec::new();
        while let Some((lineno, line)) = lines.next() {
            let mut head = line.split_whitespace();
            let name = head.next().unwrap_or_default();
            if name == "meta" {
                meta = Some(parse_meta(lineno, head)?);
                continue;
            }
            let rows: usize = parse_tok(lineno, head.next())?;
            let cols: usize = parse_tok(lineno, head.next())?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, row) = lines
                    .next()
                    .ok_or_else(|| Error::format(format!("line {lineno}: block `{name}` truncated")))?;
                let before = values.len();
                for tok in row.split_whitespace() {
                    values.push(parse_tok::<f64>(ln, Some(tok))?);
                }
                if values.len() - before != cols {
                    return Err(Error::format(format!("line {ln}: expected {cols} values in `{name}`")));
                }
            }
            match name {
                "scaler_in" => {
                    if rows != d || cols != 2 {
                        return Err(Error::format(format!("line {lineno}: scaler_in must be {d}x2")));
                    }
                    scaler_in = Some(ScalerParams {
                        features: values.chunks(2).map(|c| MinMax { min: c[0], max: c[1] }).collect(),
                    });
                }
                "scaler_out" => {
                    if rows != 1 || cols != 2 {
                        return Err(Error::format(format!("line {lineno}: scaler_out must be 1x2")));
                    }
                    scaler_out = Some(MinMax {
                        min: values[0],
                        max: values[1],
                    });
                }
                _ => {
                    let slot = params
                        .tensor_mut(name)
                        .ok_or_else(|| Error::format(format!("line {lineno}: unknown block `{name}`")))?;
                    if slot.len() != values.len() {
                        return Err(Error::format(format!(
                            "line {lineno}: block `{name}` has {} values, expected {}",
                            values.len(),
                            slot.len()
                        )));
                    }
                    slot.copy_from_slice(&values);
                    seen.push(name.to_string());
                }
            }
        }
        for (name, ..) in params.tensors() {
            if !seen.contains(&name) {
                return Err(Error::format(format!("missing block `{name}`")));
            }
        }
        Ok(LstmModel {
            params,
            scaler_in: scaler_in.ok_or_else(|| Error::format("missing block `scaler_in`"))?,
            scaler_out: scaler_out.ok_or_else(|| Error::format("missing block `scaler_out`"))?,
            lookback,
            meta: meta.unwrap_or(TrainMeta {
                seed: 0,
                epochs: 0,
                samples: 0,
            }),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_text(&text).map_err(|e| Error::format(format!("{}: {e}", path.as_ref().display())))
    }
}

fn write_block(out: &mut String, name: &str, rows: usize, cols: usize, values: &[f64]) {
    writeln!(out, "{name} {rows} {cols}").unwrap();
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
}

fn parse_tok<T: std::str::FromStr>(lineno: usize, tok: Option<&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::format(format!("line {lineno}: missing field")))?;
    tok.parse()
        .map_err(|_| Error::format(format!("line {lineno}: cannot parse `{tok}`")))
}

fn parse_meta<'a>(lineno: usize, fields: impl Iterator<Item = &'a str>) -> Result<TrainMeta> {
    let mut meta = TrainMeta {
        seed: 0,
        epochs: 0,
        samples: 0,
    };
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::format(format!("line {lineno}: bad meta field `{field}`")))?;
        match key {
            "seed" => meta.seed = parse_tok(lineno, Some(value))?,
            "epochs" => meta.epochs = parse_tok(lineno, Some(value))?,
            "samples" => meta.samples = parse_tok(lineno, Some(value))?,
            _ => return Err(Error::format(format!("line {lineno}: unknown meta key `{key}`"))),
        }
    }
    Ok(meta)
}
