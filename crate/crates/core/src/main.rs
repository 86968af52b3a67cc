use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use harness_core::diagnosis::{diagnose_all, histogram, render_histogram};
use harness_core::evolution::evolve;
use harness_core::fixtures::{self, EVOLVED_SET_FILE};
use harness_core::intervention::{load_registry, Layer, LayerToggles};
use harness_core::metrics::{render_report, report};
use harness_core::persistence::{read_log, SuiteConfig};
use harness_core::runner::{run_config, SuiteParams};

#[derive(Parser)]
#[command(name = "harness", about = "Run, diagnose and evolve agent harnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a task suite and write an episode log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Switch a layer off: contract, skill, action or regulation.
        #[arg(long = "disable-layer")]
        disable_layer: Vec<String>,
    },
    /// Classify the failed episodes of a log.
    Diagnose {
        #[arg(long)]
        log: PathBuf,
    },
    /// Success metrics per environment and policy.
    Report {
        #[arg(long)]
        log: PathBuf,
    },
    /// Grow an intervention set on a training suite.
    Evolve {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Where to write the frozen set (default: next to the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the built-in suites, registry and configs to a directory.
    ExportFixtures {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn toggles(names: &[String]) -> Result<LayerToggles> {
    let mut t = LayerToggles::default();
    for n in names {
        let Some(layer) = Layer::from_cli_name(n) else {
            bail!("unknown layer `{n}` (expected contract, skill, action or regulation)");
        };
        t = t.without(layer);
    }
    Ok(t)
}

fn sibling(log: &Path, suffix: &str) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(config: &Path, disabled: &[String]) -> Result<()> {
    let off = toggles(disabled)?;
    let cfg = SuiteConfig::load(config)?;
    let log = run_config(&cfg, off)?;
    let records = read_log(&log)?;
    let ok = records.iter().filter(|r| r.succeeded()).count();
    println!("{ok}/{} episodes succeeded", records.len());
    println!("log: {}", log.display());
    Ok(())
}

fn diagnose(log: &Path) -> Result<()> {
    let records = read_log(log)?;
    let reports = diagnose_all(&records);
    print!("{}", render_histogram(&histogram(&reports)));
    if !reports.is_empty() {
        let out = sibling(log, ".diagnosis.jsonl");
        let mut text = String::new();
        for r in &reports {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        std::fs::write(&out, text).with_context(|| out.display().to_string())?;
        println!("diagnoses: {}", out.display());
    }
    Ok(())
}

fn metrics(log: &Path) -> Result<()> {
    let records = read_log(log)?;
    let rows = report(&records)?;
    print!("{}", render_report(&rows));
    let out = sibling(log, ".metrics.json");
    std::fs::write(&out, serde_json::to_string_pretty(&rows)?).with_context(|| out.display().to_string())?;
    println!("metrics: {}", out.display());
    Ok(())
}

fn evolve_cmd(registry: &Path, config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = SuiteConfig::load(config)?;
    let candidates = load_registry(registry)?;
    let params = SuiteParams { budget: cfg.config.budget, runs: cfg.config.runs, seed: cfg.config.seed };
    let result = evolve(&candidates, &cfg.suite, &cfg.policy, params, "evolved")?;
    print!("{}", result.render());
    let dir = config.parent().unwrap_or(Path::new("."));
    let set_path = out.unwrap_or_else(|| dir.join(EVOLVED_SET_FILE));
    std::fs::write(&set_path, result.set.to_json()).with_context(|| set_path.display().to_string())?;
    let report_path = set_path.with_extension("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&result)?)
        .with_context(|| report_path.display().to_string())?;
    println!("set: {}", set_path.display());
    println!("report: {}", report_path.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, disable_layer } => run(&config, &disable_layer),
        Command::Diagnose { log } => diagnose(&log),
        Command::Report { log } => metrics(&log),
        Command::Evolve { registry, config, out } => evolve_cmd(&registry, &config, out),
        Command::ExportFixtures { dir } => {
            for p in fixtures::export(&dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}
