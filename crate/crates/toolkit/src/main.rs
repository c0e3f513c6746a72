//! `layerkit <command>`: runs one pipeline and writes its report bundle.
//!
//! Exit codes: 0 on success, 2 for configuration errors (nothing is
//! written), 3 for numerical failures (manifest and `failure.json` only),
//! 1 for anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use layerkit::bundle::Bundle;
use layerkit::config::{grid_scale, Command, ConfigError, Params, RunConfig};
use layerkit::stages::NumericalFailure;
use layerkit::{run, Manifest};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "layerkit", version, about = "Boundary-layer expansion toolkit")]
struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out/<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

struct Resolved {
    command: Command,
    params: Params,
    out: PathBuf,
    seed: u64,
    scale: f64,
}

fn resolve(cli: &Cli) -> Result<Resolved, ConfigError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(ConfigError(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                cli.command.name()
            )));
        }
    }
    if cli.threads == Some(0) {
        return Err(ConfigError("--threads must be positive".into()));
    }
    let scale = grid_scale()?;
    let params = Params::resolve(cli.command, cfg.params.as_ref(), scale)?;
    let out = cli
        .out
        .clone()
        .or(cfg.output_dir)
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    Ok(Resolved { command: cli.command, params, out, seed: cli.seed.or(cfg.seed).unwrap_or(42), scale })
}

fn write(r: &Resolved, mut bundle: Bundle, ok: bool) -> Result<()> {
    let manifest = Manifest::new(r.command, r.seed, r.scale, &r.params, &bundle, ok);
    bundle.insert_json("manifest.json", &manifest)?;
    std::fs::create_dir_all(&r.out).with_context(|| format!("creating {}", r.out.display()))?;
    bundle.write_to(&r.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&r.params, r.seed, r.scale) {
        Ok(bundle) => match write(&r, bundle, true) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            let stage = e.downcast_ref::<NumericalFailure>().map_or(r.command.name(), |f| f.stage);
            eprintln!("{e:#}");
            let mut partial = Bundle::default();
            let written = partial
                .insert_json("failure.json", &json!({"stage": stage, "message": format!("{e:#}")}))
                .and_then(|()| write(&r, partial, false));
            if let Err(w) = written {
                eprintln!("{w:#}");
            }
            ExitCode::from(3)
        }
    }
}
