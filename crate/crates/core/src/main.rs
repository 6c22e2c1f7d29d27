use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use linbandit::harness::{
    emit_curves, format_g17, parse_config, run_experiment_with, Experiment, ExperimentConfig, ExperimentResult, RunOptions,
};
use linbandit::Error;

#[derive(Parser)]
#[command(name = "linbandit", version, about = "Linear contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replicates (overrides the config).
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "LINBANDIT_WORKERS")]
    workers: Option<usize>,
    /// Output CSV path. The JSON summary goes next to it with a
    /// `.summary.json` suffix and curves with `.curves.csv`. Without it the
    /// CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write regret (and eigenvalue) curves.
        #[arg(long)]
        curves: bool,
    },
    /// Check simulated rewards against direct draws with KS tests.
    VerifySimulation {
        /// Optional SimulationVerify config; defaults are used otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Number of target contexts.
        #[arg(long)]
        targets: Option<usize>,
        /// Samples on each side of every KS test.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// List the available experiments.
    ListExperiments,
    /// Print the default config for one experiment (or all of them).
    PrintDefaults { experiment: Option<String> },
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn apply(cfg: &mut ExperimentConfig, o: &Overrides) -> Result<(), Error> {
    if let Some(s) = o.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = o.replicates {
        cfg.replicates = r;
    }
    if let Some(w) = o.workers {
        cfg.workers = w;
    }
    cfg.validate()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_outputs(res: &ExperimentResult, out: Option<&Path>, curves: bool) -> Result<(), Error> {
    let csv = res.csv();
    let summary = res.summary.to_json();
    match out {
        Some(path) => {
            fs::write(path, csv)?;
            fs::write(sibling(path, ".summary.json"), summary + "\n")?;
            if curves {
                fs::write(sibling(path, ".curves.csv"), emit_curves(&res.curves))?;
            }
        }
        None => {
            print!("{csv}");
            eprintln!("{summary}");
            if curves {
                eprint!("{}", emit_curves(&res.curves));
            }
        }
    }
    Ok(())
}

fn verify_simulation(
    config: Option<PathBuf>,
    overrides: &Overrides,
    targets: Option<usize>,
    samples: Option<usize>,
) -> Result<(), Error> {
    let mut cfg = match config {
        Some(p) => read_config(&p)?,
        None => ExperimentConfig::defaults(Experiment::SimulationVerify),
    };
    if cfg.experiment != Experiment::SimulationVerify {
        return Err(Error::config("experiment", "verify-simulation needs a SimulationVerify config"));
    }
    if let Some(t) = targets {
        cfg.simulation.targets = t;
    }
    if let Some(s) = samples {
        cfg.simulation.samples = s;
    }
    apply(&mut cfg, overrides)?;
    let res = run_experiment_with(&cfg, &RunOptions::default())?;
    let sim = res.summary.diagnostics.simulation.as_ref().expect("simulation summary");
    let mut text =
        String::from("target,x_norm,lambda_min,w_norm,max_reconstruction_error,simulated_mean,true_mean,ks_statistic,p_value\n");
    for (i, c) in sim.checks.iter().enumerate() {
        let cols = [
            c.x_norm,
            c.lambda_min,
            c.w_norm,
            c.max_reconstruction_error,
            c.simulated_mean,
            c.true_mean,
            c.ks_statistic,
            c.p_value,
        ];
        let cols: Vec<String> = cols.iter().map(|v| format_g17(*v)).collect();
        text.push_str(&format!("{i},{}\n", cols.join(",")));
    }
    let line = json!({"targets": sim.checks.len(), "alpha": sim.alpha, "rejections": sim.rejections,
        "max_w_norm": sim.max_w_norm, "max_reconstruction_error": sim.max_reconstruction_error});
    match &overrides.out {
        Some(p) => {
            fs::write(p, text)?;
            fs::write(sibling(p, ".summary.json"), res.summary.to_json() + "\n")?;
        }
        None => print!("{text}"),
    }
    eprintln!("{line}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            curves,
        } => {
            let mut cfg = read_config(&config)?;
            apply(&mut cfg, &overrides)?;
            let res = run_experiment_with(&cfg, &RunOptions { curves })?;
            write_outputs(&res, overrides.out.as_deref(), curves)
        }
        Command::VerifySimulation {
            config,
            overrides,
            targets,
            samples,
        } => verify_simulation(config, &overrides, targets, samples),
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<24}{}", e.name(), e.description());
            }
            Ok(())
        }
        Command::PrintDefaults { experiment } => {
            let list: Vec<Experiment> = match experiment {
                Some(name) => vec![name.parse()?],
                None => Experiment::ALL.to_vec(),
            };
            let texts: Vec<String> = list.iter().map(|e| ExperimentConfig::defaults(*e).to_config_text()).collect();
            print!("{}", texts.join("\n"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = json!({"error": e.kind(), "key": e.key(), "message": e.to_string()});
            eprintln!("{line}");
            match e {
                Error::Config { .. } | Error::UnknownKey(_) | Error::TypeMismatch { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
