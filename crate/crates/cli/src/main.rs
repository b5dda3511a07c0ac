use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use enspost::baselines::StandaloneForecast;
use enspost::nn::gradient_check;
use enspost::pipeline::{
    build_baselines, load_inputs, postprocess, read_partial_forecasts, run_experiment, stage, train_models,
    verify_systems, write_forcing, write_forecasts, write_observations, write_precip_forecasts, write_report,
    write_rows, ExperimentConfig, Mode, Postprocessed, TrainedModels, LOSS_FILE, LOSS_HEADER,
    LSTM_OUTPUT_FILE, METRICS_FILE, MODELS_DIR, QR_OUTPUT_FILE, RELIABILITY_FILE, STANDALONE_OUTPUT_FILE,
};
use enspost::postprocess::CorrectedArchive;

/// LSTM residual postprocessing of ensemble streamflow forecasts.
///
/// Any configuration key can be given after the subcommand as
/// `--key value` or `--key=value`; it overrides the config file.
#[derive(Debug, Parser)]
#[command(name = "enspost", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for data generation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic catchment as CSV files.
    Synth {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Train the residual bank, quantile regression and standalone LSTM.
    Train {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Apply trained models to the raw forecasts.
    Postprocess {
        /// Directory of trained models [default: <out>/models].
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Verify every system and write metrics and reliability tables.
    Verify {
        /// Directory holding the postprocessed CSVs [default: <out>].
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Run the full experiment into a fresh output directory.
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Compare LSTM gradients against central finite differences.
    Gradcheck {
        /// Number of random instances.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            bail!("unexpected argument {arg:?}; overrides take the form --key value");
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let value = it.next().with_context(|| format!("--{key} needs a value"))?;
                out.push((key.to_string(), value.clone()));
            }
        }
    }
    Ok(out)
}

fn load_config(cli: &Cli, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    for (k, v) in parse_overrides(overrides)? {
        cfg.set(&k.replace('-', "_"), &v).with_context(|| format!("override --{k}"))?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_synth(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.mode != Mode::Synthetic {
        bail!("synth needs mode = synthetic");
    }
    let ds = stage("generate", || enspost::synthetic::generate(&cfg.catchment))?;
    let dir = &cfg.out_dir;
    ensure_dir(dir)?;
    write_observations(dir.join("obs.csv"), &ds.truth)?;
    write_forecasts(dir.join("forecasts.csv"), &ds.raw)?;
    write_forcing(dir.join("forcing.csv"), &ds.forcing)?;
    write_precip_forecasts(dir.join("precip_forecasts.csv"), &ds.precip_forecast)?;
    let mut manifest = cfg.to_text();
    manifest.push_str(&format!(
        "mass_balance_residual = {}\n",
        enspost::pipeline::format::report(ds.mass_balance_residual())
    ));
    fs::write(dir.join("synth_manifest.txt"), manifest)?;
    println!("wrote synthetic catchment to {}", dir.display());
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    stage("config", || cfg.validate())?;
    let inputs = stage("load", || load_inputs(cfg))?;
    let models = train_models(cfg, &inputs)?;
    ensure_dir(&cfg.out_dir)?;
    models.save(&cfg.out_dir.join(MODELS_DIR))?;
    write_rows(&cfg.out_dir.join(LOSS_FILE), &LOSS_HEADER, models.loss_rows())?;
    println!("trained {} residual models into {}", models.bank.len(), cfg.out_dir.join(MODELS_DIR).display());
    Ok(())
}

fn cmd_postprocess(cfg: &ExperimentConfig, models_dir: Option<&Path>) -> Result<()> {
    stage("config", || cfg.validate())?;
    let inputs = stage("load", || load_inputs(cfg))?;
    let models_dir = models_dir.map_or_else(|| cfg.out_dir.join(MODELS_DIR), Path::to_path_buf);
    let models = stage("load_models", || TrainedModels::load(&models_dir))?;
    let post = postprocess(cfg, &inputs, &models)?;
    ensure_dir(&cfg.out_dir)?;
    write_forecasts(cfg.out_dir.join(LSTM_OUTPUT_FILE), &post.lstm.archive)?;
    write_forecasts(cfg.out_dir.join(QR_OUTPUT_FILE), &post.qr)?;
    if let Some(s) = &post.standalone {
        write_forecasts(cfg.out_dir.join(STANDALONE_OUTPUT_FILE), &s.archive)?;
    }
    println!(
        "postprocessed forecasts written to {} ({} cells without history, {} floored)",
        cfg.out_dir.display(),
        post.lstm.missing,
        post.lstm.floored
    );
    Ok(())
}

fn cmd_verify(cfg: &ExperimentConfig, from: Option<&Path>) -> Result<()> {
    stage("config", || cfg.validate())?;
    let inputs = stage("load", || load_inputs(cfg))?;
    let baselines = stage("baselines", || build_baselines(cfg, &inputs))?;
    let from = from.unwrap_or(&cfg.out_dir);
    let post = stage("load_forecasts", || {
        let standalone_path = from.join(STANDALONE_OUTPUT_FILE);
        Ok(Postprocessed {
            lstm: CorrectedArchive::from_archive(read_partial_forecasts(from.join(LSTM_OUTPUT_FILE))?),
            qr: read_partial_forecasts(from.join(QR_OUTPUT_FILE))?,
            standalone: if standalone_path.exists() {
                Some(StandaloneForecast {
                    archive: read_partial_forecasts(&standalone_path)?,
                    skipped: 0,
                })
            } else {
                None
            },
        })
    })?;
    let report = stage("verify", || verify_systems(cfg, &inputs, &baselines, &post))?;
    ensure_dir(&cfg.out_dir)?;
    write_report(&cfg.out_dir, &report)?;
    println!(
        "wrote {} and {} to {}",
        METRICS_FILE,
        RELIABILITY_FILE,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let outcome = run_experiment(cfg)?;
    println!(
        "run complete in {:.1} s: {} metric rows for {} systems in {}",
        start.elapsed().as_secs_f64(),
        outcome.report.rows.len(),
        outcome.report.systems().len(),
        outcome.out_dir.display()
    );
    Ok(())
}

fn cmd_gradcheck(seeds: u64, tolerance: f64) -> Result<bool> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let r = gradient_check(seed);
        worst = worst.max(r.max_rel_error);
        println!(
            "seed {seed}: D={} H={} T={} max relative error {:.3e}",
            r.input_size, r.hidden_size, r.steps, r.max_rel_error
        );
        for (name, err) in &r.per_tensor {
            println!("    {name:<4} {err:.3e}");
        }
    }
    let ok = worst < tolerance;
    println!(
        "gradcheck {}: worst {:.3e} (tolerance {:.0e}) over {seeds} seeds in {:.2} s",
        if ok { "PASS" } else { "FAIL" },
        worst,
        tolerance,
        start.elapsed().as_secs_f64()
    );
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = (|| -> Result<bool> {
        match &cli.command {
            Command::Synth { overrides } => cmd_synth(&load_config(&cli, overrides)?).map(|_| true),
            Command::Train { overrides } => cmd_train(&load_config(&cli, overrides)?).map(|_| true),
            Command::Postprocess { models, overrides } => {
                cmd_postprocess(&load_config(&cli, overrides)?, models.as_deref()).map(|_| true)
            }
            Command::Verify { from, overrides } => {
                cmd_verify(&load_config(&cli, overrides)?, from.as_deref()).map(|_| true)
            }
            Command::Run { overrides } => cmd_run(&load_config(&cli, overrides)?).map(|_| true),
            Command::Gradcheck { seeds, tolerance } => cmd_gradcheck(*seeds, *tolerance),
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
