use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mail_lab::{acceptance, emit_csv, emit_plot, read_csv, run, ExperimentConfig, LabError, Metric};

#[derive(Parser)]
#[command(name = "mail-lab", version, about = "Imitation learning experiments on zero-sum Markov games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (seed, budget) pair of a config and write the records CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render one metric of a records CSV as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "nash_gap")]
        metric: String,
        #[arg(long, default_value = "budget")]
        x: String,
        #[arg(long)]
        log_x: bool,
        /// Defaults to `<csv stem>_<metric>.svg` next to the CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Acceptance,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Plot { csv, metric, x, log_x, out } => cmd_plot(&csv, &metric, &x, log_x, out),
        Command::Verify { suite: Suite::Acceptance } => Ok(cmd_verify()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mail-lab: {e}");
            match e {
                LabError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn cmd_run(config: &Path, out: &Path) -> Result<ExitCode, LabError> {
    let cfg = ExperimentConfig::load(config)?;
    let records = run(&cfg)?;
    std::fs::create_dir_all(out)?;
    let csv_path = out.join(&cfg.output.csv);
    emit_csv(&records, File::create(&csv_path)?)?;
    println!("wrote {} records to {}", records.len(), csv_path.display());
    for p in &cfg.output.plots {
        let metric = Metric::parse(&p.metric)?;
        let svg_path = out.join(format!("{}_{}.svg", stem(&csv_path), metric.name()));
        match emit_plot(&records, metric, p.log_x) {
            Ok(svg) => {
                std::fs::write(&svg_path, svg)?;
                println!("wrote {}", svg_path.display());
            }
            Err(e) => eprintln!("mail-lab: skipping plot of {}: {e}", metric.name()),
        }
    }
    let failed = records.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        eprintln!("mail-lab: {failed} of {} runs failed", records.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "runs".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_plot(csv: &Path, metric: &str, x: &str, log_x: bool, out: Option<PathBuf>) -> Result<ExitCode, LabError> {
    let metric = Metric::parse(metric)?;
    if x != "budget" {
        return Err(LabError::Config(format!("unknown x axis {x:?}; registered: budget")));
    }
    let records = read_csv(csv)?;
    let svg = emit_plot(&records, metric, log_x)?;
    let path = out.unwrap_or_else(|| csv.with_file_name(format!("{}_{}.svg", stem(csv), metric.name())));
    std::fs::write(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify() -> ExitCode {
    let verdicts = acceptance::battery(|v| println!("{v}"));
    let failed = verdicts.iter().filter(|v| !v.passed).count();
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
