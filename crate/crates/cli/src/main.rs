use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qlbe_cli::config::RunConfig;
use qlbe_cli::{presets, runner};

#[derive(Parser)]
#[command(name = "qlbe", about = "Quantum linear Boltzmann trajectory simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Path to a TOML run configuration.
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trajectory count.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Override the worker thread count (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trajectory ensemble and write result files.
    Run(ConfigArgs),
    /// Prebuild the phase-shift and rate-table caches for a configuration.
    Tables(ConfigArgs),
    /// Write reference (limiting-form) curves for a configuration.
    Oracle(ConfigArgs),
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<RunConfig> {
    let text = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => anyhow::bail!("give either a config file or --preset, not both"),
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?,
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| {
                anyhow::anyhow!("unknown preset `{name}`; available: {}", presets::names().join(", "))
            })?
            .to_string(),
        (None, None) => anyhow::bail!("a config file or --preset is required"),
    };
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(n) = args.trajectories {
        cfg.run.trajectories = n;
    }
    if let Some(t) = args.threads {
        cfg.run.threads = t;
    }
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn categorize(e: &anyhow::Error) -> &'static str {
    let text = e.to_string();
    if e.downcast_ref::<qlbe_cli::ConfigError>().is_some() || text.contains("config") {
        "config"
    } else if text.contains("fingerprint") {
        "cache"
    } else if text.contains("cannot read") || text.contains("No such file") {
        "io"
    } else {
        "numerical"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => load_config(args).and_then(|cfg| {
            let out = runner::run_to_files(&cfg)?;
            eprintln!(
                "done: {} trajectories, {} jumps total, {:.2} s wall, outputs in {}",
                cfg.run.trajectories, out.total_jumps, out.wall_seconds, cfg.output.dir
            );
            Ok(())
        }),
        Command::Tables(args) => load_config(args).and_then(|cfg| {
            let env = runner::build_environment(&cfg)?;
            let out_dir = PathBuf::from(&cfg.output.dir);
            let cache = cfg
                .output
                .cache_dir
                .as_ref()
                .map(PathBuf::from)
                .unwrap_or_else(|| out_dir.join("cache"));
            let model = runner::build_model(&cfg, &env, Some(&cache))?;
            let table = runner::build_table(&cfg, &env, &model, Some(&cache))?;
            eprintln!(
                "tables ready in {} (rate fingerprint {})",
                cache.display(),
                table.env_fingerprint
            );
            Ok(())
        }),
        Command::Oracle(args) => load_config(args).and_then(|cfg| {
            runner::write_oracle_curves(&cfg)?;
            eprintln!("oracle curves written to {}", cfg.output.dir);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e:#}", categorize(&e));
            ExitCode::FAILURE
        }
    }
}
