use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scorelab::{check_report, run_with_workers, ExperimentConfig, ExperimentKind, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "lab", version, about = "Run and check scorelab experiments")]
struct Cli {
    /// Log progress to stderr (repeat for more detail)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else runs/<experiment>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for concurrent sub-runs
        #[arg(long, env = WORKERS_ENV, value_parser = clap::value_parser!(u16).range(1..))]
        workers: Option<u16>,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available experiments and the claims they test
    ListExperiments,
    /// Recompute the verdicts of a report from its stored CSVs
    Check { report: PathBuf },
}

fn print_verdicts<'a>(verdicts: impl IntoIterator<Item = &'a scorelab::Verdict>) {
    for v in verdicts {
        println!("{v}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{k:<13} {}", k.claim());
                println!("{:<13} checks: {}", "", k.inequality());
            }
            Ok(true)
        }
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => ExperimentConfig::load(&config).and_then(|mut cfg| {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name().to_lowercase()));
            let report = run_with_workers(&cfg, &out, workers.map(usize::from))?;
            println!("{}: {}", report.experiment, report.claim);
            print_verdicts(&report.verdicts);
            for n in &report.notes {
                println!("note: {n}");
            }
            println!(
                "report: {} ({:.1} s)",
                out.join(scorelab::report::REPORT_FILE).display(),
                report.wall_time_s
            );
            Ok(report.passed())
        }),
        Command::Check { report } => check_report(&report).map(|c| {
            println!("{}: {}", c.report.experiment, c.report.claim);
            print_verdicts(&c.recomputed);
            c.passed()
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
