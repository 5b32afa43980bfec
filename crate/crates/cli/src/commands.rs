use std::path::PathBuf;

use catdiff_core::chain_io::{read_chain, read_json, write_chain, write_json, ModelDocument};
use catdiff_core::config::{AutoKeyword, GammaSetting, NuSetting, RunConfig};
use catdiff_core::data::{generate_from_model, read_dataset, write_dataset, DatasetSchema};
use catdiff_core::report::{build_report, write_report, ReportOptions};
use catdiff_core::rng::{CHAIN_STREAM_BASE, SIMULATION_STREAM};
use catdiff_core::{
    build_scenario, compute_diagnostics, run_chains, ChainOutput, Error, RngSpec, ScenarioSpec,
};
use serde_json::json;

use crate::error::{CliError, Stage, StageExt};
use crate::manifest::ManifestBuilder;
use crate::{default_out, CheckArgs, FitArgs, SettingArgs, SimulateArgs, SummarizeArgs};

fn create_dir(dir: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::at(Stage::Output, Error::io(dir, e)))
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::start("simulate");
    let out = args.out.unwrap_or_else(|| default_out("data"));
    let (model, data) = match (args.scenario, &args.model) {
        (Some(id), _) => build_scenario(&ScenarioSpec {
            scenario: id,
            n_per_group: args.n_per_group,
            seed: args.seed,
        })
        .stage(Stage::Compute)?,
        (None, Some(path)) => {
            manifest.input(path)?;
            let doc: ModelDocument = read_json(path).stage(Stage::Input)?;
            let model = doc.to_model().stage(Stage::Input)?;
            let sizes = vec![args.n_per_group; model.space().groups()];
            let mut rng = RngSpec::new(args.seed, SIMULATION_STREAM).rng();
            let data = generate_from_model(&model, &sizes, &mut rng).stage(Stage::Compute)?;
            (model, data)
        }
        (None, None) => return Err(CliError::usage("either --scenario or --model is required")),
    };
    create_dir(&out)?;
    let data_path = out.join("data.csv");
    let model_path = out.join("model.json");
    write_dataset(&data, &data_path).stage(Stage::Output)?;
    write_json(&model_path, &ModelDocument::from_model(&model)).stage(Stage::Output)?;
    let config = json!({
        "scenario": args.scenario,
        "model": args.model.as_ref().map(|p| p.display().to_string()),
        "n_per_group": args.n_per_group,
        "rng_stream": SIMULATION_STREAM,
    });
    manifest.finish(&out, config, Some(args.seed), &[data_path.clone(), model_path])?;
    println!("wrote {} units to {}", data.n(), data_path.display());
    Ok(())
}

fn parse_auto_or<T>(flag: &str, value: &str, number: impl Fn(f64) -> T, auto: T) -> Result<T, CliError> {
    if value == "auto" {
        return Ok(auto);
    }
    value
        .parse::<f64>()
        .map(number)
        .map_err(|_| CliError::usage(format!("--{flag} expects \"auto\" or a number, got `{value}`")))
}

fn flag_config(s: &SettingArgs) -> Result<RunConfig, CliError> {
    let gamma = s
        .gamma
        .as_deref()
        .map(|v| parse_auto_or("gamma", v, GammaSetting::Scalar, GammaSetting::Auto(AutoKeyword::Auto)))
        .transpose()?;
    let nu_concentration = s
        .nu_concentration
        .as_deref()
        .map(|v| parse_auto_or("nu-concentration", v, NuSetting::Value, NuSetting::Auto(AutoKeyword::Auto)))
        .transpose()?;
    Ok(RunConfig {
        alpha: s.alpha.map(catdiff_core::config::Concentration::Scalar),
        gamma,
        pr_h1: s.pr_h1,
        h_bar: s.h_bar,
        nu_concentration,
        seed: s.seed,
        n_iter: s.n_iter,
        burn_in: s.burn_in,
        thin: s.thin,
    })
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::start("fit");
    let out = args.out.clone().unwrap_or_else(|| default_out("chain"));
    let file_config = match &args.config {
        Some(path) => {
            manifest.input(path)?;
            RunConfig::from_file(path).stage(Stage::Input)?
        }
        None => RunConfig::default(),
    };
    let run_config = file_config.overlay(flag_config(&args.settings)?);

    let schema = DatasetSchema {
        group_column: args.group_column.clone(),
        levels: args.levels.clone(),
        groups: args.groups,
    };
    let data = read_dataset(&args.data, &schema).stage(Stage::Input)?;
    manifest.input(&args.data)?;
    let prior = run_config.prior(data.space()).stage(Stage::Compute)?;
    let schedule = run_config.schedule().stage(Stage::Compute)?;
    let seed = run_config.seed();
    let base = RngSpec::new(seed, CHAIN_STREAM_BASE);
    let chains = args.chains as usize;

    let outputs = run_chains(&data, &prior, &schedule, base, chains).stage(Stage::Compute)?;
    let merged = ChainOutput::concat(&outputs).stage(Stage::Compute)?;
    let written = write_chain(&merged, data.names(), &out).stage(Stage::Output)?;

    let config = json!({
        "data": args.data.display().to_string(),
        "group_column": args.group_column,
        "levels": data.space().levels(),
        "groups": data.space().groups(),
        "prior": prior,
        "schedule": schedule,
        "chains": chains,
        "rng_streams": (0..chains as u64).map(|c| base.substream(c).stream).collect::<Vec<_>>(),
        "settings": run_config,
    });
    manifest.finish(&out, config, Some(seed), &written)?;
    println!(
        "wrote {} draws ({} chain{} of {}) to {}",
        merged.n_draws(),
        chains,
        if chains == 1 { "" } else { "s" },
        schedule.retained(),
        out.display()
    );
    Ok(())
}

pub fn summarize(args: SummarizeArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::start("summarize");
    let (chain, meta) = read_chain(&args.chain).stage(Stage::Input)?;
    for name in catdiff_core::chain_io::CHAIN_FILES {
        manifest.input(&args.chain.join(name))?;
    }
    let out = args.out.clone().unwrap_or_else(|| args.chain.join("summary"));
    let options = ReportOptions {
        threshold: args.threshold,
        credible_level: args.level,
        all_group_pairs: args.all_group_pairs,
    };
    let report = build_report(&chain, &meta.variable_names, &options).stage(Stage::Compute)?;
    let written = write_report(&report, &out, !args.no_csv).stage(Stage::Output)?;
    let config = json!({
        "chain": args.chain.display().to_string(),
        "threshold": args.threshold,
        "credible_level": args.level,
        "all_group_pairs": args.all_group_pairs,
        "csv": !args.no_csv,
    });
    manifest.finish(&out, config, None, &written)?;
    println!(
        "pr(H1 | data) = {:.4} over {} draws; report in {}",
        report.global.pr_h1_given_data,
        report.n_draws,
        out.display()
    );
    Ok(())
}

pub fn check(args: CheckArgs) -> Result<(), CliError> {
    let (chain, _) = read_chain(&args.chain).stage(Stage::Input)?;
    let diag = compute_diagnostics(&chain).stage(Stage::Compute)?;
    print!("{}", render_check(&diag));
    Ok(())
}

fn render_check(diag: &catdiff_core::Diagnostics) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let chains = diag.chains;
    let _ = writeln!(s, "retained draws: {} ({} chain{})", diag.retained, chains, if chains == 1 { "" } else { "s" });
    let width = diag.scalars.iter().map(|e| e.name.len()).max().unwrap_or(0).max(6);
    let _ = writeln!(s, "{:<width$}  {:>10}  {:>7}", "scalar", "ESS", "R-hat");
    for e in &diag.scalars {
        let ess = if e.zero_variance {
            "constant".to_string()
        } else {
            format!("{:.1}", e.ess)
        };
        let rhat = match e.rhat {
            Some(r) if r.is_infinite() => "inf".to_string(),
            Some(r) => format!("{r:.3}"),
            None => "-".to_string(),
        };
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>7}", e.name, ess, rhat);
    }
    let _ = writeln!(s, "max occupied components: {} of {}", diag.max_occupied, diag.truncation);
    if diag.saturated() {
        let _ = writeln!(
            s,
            "warning: all {} components occupied in {:.1}% of draws; refit with a larger h_bar",
            diag.truncation,
            100.0 * diag.saturated_fraction
        );
    }
    let unmixed: Vec<&str> = diag.unmixed().iter().map(|e| e.name.as_str()).collect();
    if !unmixed.is_empty() {
        let _ = writeln!(
            s,
            "warning: R-hat above {} for {}; the chains disagree, so rerun with more chains or iterations before trusting the summaries",
            catdiff_core::posterior::RHAT_WARNING,
            unmixed.join(", ")
        );
    }
    s
}
