mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dora_core::sim::output::{with_suffix, write_run_files};
use dora_core::sim::{run_algorithm, Algorithm, RunResult, ScenarioConfig};
use rayon::prelude::*;

use sweep::{run_cells, write_rows, SweepSpec};

#[derive(Parser)]
#[command(name = "dora", version, about = "Online min-max bandwidth re-allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario TOML; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix; `.json` and `.csv` are appended.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Runtime property checks, overriding the config.
    #[arg(long, value_enum)]
    checks: Option<Switch>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's algorithm (or the single policy given) once.
    Run {
        #[command(flatten)]
        common: Common,
        /// Policy to run instead of the config's `algorithm`.
        #[arg(long)]
        policies: Option<String>,
    },
    /// Run several policies on the same channel and processing realizations.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy names; all seven when omitted.
        #[arg(long)]
        policies: Option<String>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Sweep one scenario parameter and tabulate tail-average regret and
    /// policy run time.
    Sweep {
        /// Sweep TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Base seed, overriding the sweep file.
        #[arg(long)]
        seed: Option<u64>,
        /// Policies, overriding the sweep file.
        #[arg(long)]
        policies: Option<String>,
        #[arg(long, value_enum)]
        checks: Option<Switch>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: runtime checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn parse_policies(list: &str) -> Result<Vec<Algorithm>> {
    let algs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Algorithm>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    anyhow::ensure!(!algs.is_empty(), "no policies given; valid names: {}", Algorithm::valid_names());
    Ok(algs)
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::from_path(p).with_context(|| format!("invalid config {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(c) = common.checks {
        cfg.checks = matches!(c, Switch::On);
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { common, policies } => {
            let mut cfg = load_config(&common)?;
            if let Some(list) = policies {
                let algs = parse_policies(&list)?;
                anyhow::ensure!(algs.len() == 1, "`run` takes a single policy; use `compare` for several");
                cfg.algorithm = algs[0];
            }
            let res = run_algorithm(&cfg, cfg.algorithm)?;
            finish(&common.out, &cfg, vec![res])
        }
        Command::Compare { common, policies, jobs } => {
            let cfg = load_config(&common)?;
            let algs = match policies {
                Some(list) => parse_policies(&list)?,
                None => Algorithm::ALL.to_vec(),
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
            let runs = pool.install(|| {
                algs.par_iter()
                    .map(|&a| run_algorithm(&cfg, a).with_context(|| format!("policy {a}")))
                    .collect::<Result<Vec<_>>>()
            })?;
            finish(&common.out, &cfg, runs)
        }
        Command::Sweep {
            config,
            out,
            seed,
            policies,
            checks,
            jobs,
        } => {
            let (mut spec, mut base) = SweepSpec::from_path(&config)?;
            if let Some(s) = seed {
                spec.base_seed = s;
            }
            if let Some(list) = policies {
                spec.policies = parse_policies(&list)?.iter().map(|a| a.name().to_string()).collect();
            }
            if let Some(c) = checks {
                base.checks = matches!(c, Switch::On);
            }
            let cells = spec.cells(&base)?;
            let rows = run_cells(spec.param, &cells, jobs.max(1))?;
            create_parent(&out)?;
            let file = std::fs::File::create(&out).with_context(|| format!("cannot write {}", out.display()))?;
            write_rows(std::io::BufWriter::new(file), &rows)?;
            let failed = rows.iter().filter(|r| r.check_failures > 0).count();
            println!("{} runs written to {}", rows.len(), out.display());
            if failed > 0 {
                eprintln!("{failed} runs had failed runtime checks");
            }
            Ok(failed == 0)
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn finish(out: &Path, cfg: &ScenarioConfig, runs: Vec<RunResult>) -> Result<bool> {
    create_parent(out)?;
    write_run_files(out, cfg, &runs).with_context(|| format!("cannot write outputs at {}", out.display()))?;
    println!("{:<12} {:>14} {:>14} {:>12} {:>8}", "algorithm", "final_regret", "tail_avg", "time_s", "checks");
    let mut ok = true;
    for r in &runs {
        let s = &r.summary;
        let status = if s.check_failures == 0 { "ok".to_string() } else { format!("{} fail", s.check_failures) };
        println!(
            "{:<12} {:>14.6} {:>14.6} {:>12.6} {:>8}",
            s.algorithm, s.final_regret, s.tail_average_regret, s.total_policy_time_s, status
        );
        for m in &s.failure_messages {
            eprintln!("  {}: {m}", s.algorithm);
        }
        ok &= r.checks_passed();
    }
    println!("wrote {} and {}", with_suffix(out, "json").display(), with_suffix(out, "csv").display());
    Ok(ok)
}
