use crate::args::VerifyArgs;
use crate::experiment::ConfigFile;
use crate::failure::Failure;
use anyhow::Context;
use octopus::analysis::{run_suite, SuiteOptions, SuiteReport};
use octopus::landscape::LandscapeParams;
use std::f64::consts::E;

/// Landscape for the suites: flags, then the config file, then `d = 5`, `L = e`, `γ = 1`, `τ = e`.
pub fn resolve_params(args: &VerifyArgs) -> Result<(LandscapeParams, u64, Option<u64>), Failure> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let first_d = file.d.as_ref().and_then(|v| v.first().copied());
    let first_l = file.l.as_ref().and_then(|v| v.first().copied());
    let params = LandscapeParams::new(
        args.d.or(first_d).unwrap_or(5),
        args.l.or(first_l).unwrap_or(E),
        args.gamma.or(file.gamma).unwrap_or(1.0),
        args.tau.or(file.tau).unwrap_or(E),
    );
    Ok((params, args.seed.or(file.seed).unwrap_or(0), args.trials.or(file.trials)))
}

/// Runs the suites and returns the JSON report. Any construction or
/// parameter error is a verification failure here.
pub fn cmd_verify(args: &VerifyArgs) -> Result<String, Failure> {
    let (params, seed, trials) = resolve_params(args)?;
    let mut opts = SuiteOptions::new(params);
    opts.seed = seed;
    if let Some(t) = trials {
        opts.trials = t;
    }
    let reports: Vec<SuiteReport> = run_suite(args.suite, &opts).map_err(|e| Failure::Verification(e.to_string()))?;
    let json = serde_json::to_string_pretty(&reports).context("serialize report")? + "\n";
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        std::fs::write(dir.join("verify.json"), &json).context("write verify.json")?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {}", r.suite, r.violations.join("; ")))
        .collect();
    if failed.is_empty() {
        Ok(json)
    } else {
        print!("{json}");
        Err(Failure::Verification(failed.join(" | ")))
    }
}
