//! Driver for `layerkit-core`: configuration, pipelines per subcommand,
//! report bundles and the acceptance checks.

pub mod bundle;
pub mod config;
pub mod criteria;
pub mod oracle;
pub mod stages;

use anyhow::Result;
use serde::Serialize;

use bundle::Bundle;
use config::{Command, Params, VerifyParams};
use criteria::Outcome;

pub const TOOL_NAME: &str = "layerkit";

/// Runs one command on resolved parameters.
pub fn run(params: &Params, seed: u64, scale: f64) -> Result<Bundle> {
    match params {
        Params::Blasius(p) => stages::run_blasius(p),
        Params::Euler(p) => stages::run_euler(p),
        Params::Prandtl(p) => stages::run_prandtl(p),
        Params::Degree(p) => stages::run_degree(p, seed),
        Params::SolveU0(p) => stages::run_solve_u0(p),
        Params::ResidualSweep(p) => stages::run_residual_sweep(p),
        Params::VerifyAll(p) => Ok(verify_all(p, seed, scale)?.0),
    }
}

/// Every non-aggregate command, in dependency order.
pub const PIPELINE: [Command; 6] =
    [Command::Blasius, Command::Euler, Command::Prandtl, Command::Degree, Command::SolveU0, Command::ResidualSweep];

fn stage_bundle(command: Command, seed: u64, scale: f64) -> Result<Bundle> {
    let p = Params::resolve(command, None, scale)?;
    run(&p, seed, scale)
}

fn as_pairs(b: &Bundle) -> Vec<(String, Vec<u8>)> {
    b.names().map(|n| (n.to_string(), b.get(n).unwrap_or_default().to_vec())).collect()
}

#[derive(Debug, Serialize)]
struct VerifySummary<'a> {
    passed: usize,
    failed: usize,
    criteria: &'a [Outcome],
}

/// Runs all stages with default parameters into per-stage folders, then the
/// selected criteria. The outcomes also go to `summary.json`.
pub fn verify_all(p: &VerifyParams, seed: u64, scale: f64) -> Result<(Bundle, Vec<Outcome>)> {
    let mut bundle = Bundle::default();
    for command in PIPELINE {
        bundle.absorb(command.name(), stage_bundle(command, seed, scale)?);
    }
    let selected = |id: u32| p.only.is_empty() || p.only.contains(&id);
    let mut outcomes = Vec::new();
    for (id, check) in criteria::numeric_checks() {
        if selected(id) {
            outcomes.push(check(scale)?);
        }
    }
    if selected(15) {
        let mut again = Bundle::default();
        for command in PIPELINE {
            again.absorb(command.name(), stage_bundle(command, seed, scale)?);
        }
        outcomes.push(criteria::determinism(&as_pairs(&bundle), &as_pairs(&again)));
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let summary = VerifySummary { passed, failed: outcomes.len() - passed, criteria: &outcomes };
    bundle.insert_json("summary.json", &summary)?;
    Ok((bundle, outcomes))
}

/// Contents of `manifest.json`.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub grid_scale: f64,
    pub params: &'a Params,
    pub files: Vec<String>,
    pub status: &'static str,
}

impl<'a> Manifest<'a> {
    pub fn new(command: Command, seed: u64, grid_scale: f64, params: &'a Params, bundle: &Bundle, ok: bool) -> Self {
        let mut files: Vec<String> = bundle.names().map(str::to_string).collect();
        files.push("manifest.json".into());
        files.sort();
        Manifest {
            tool: TOOL_NAME,
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            seed,
            grid_scale,
            params,
            files,
            status: if ok { "ok" } else { "numerical-failure" },
        }
    }
}
