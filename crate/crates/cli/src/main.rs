use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betamomentum_cli::{
    emit_plots, parse_grid, phase_rows, regime_flips, resolve_output_dir, run_experiment, write_phase_csv,
    ExperimentConfig, OUTPUT_ROOT_ENV,
};
use clap::{Parser, Subcommand};

const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "betamomentum", version, about = "Checks for the beta-interpolated momentum method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check requested by a JSON experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's output_dir and $BETAMOMENTUM_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the regime map over (mu/L, c, beta) with L = 1.
    SweepPhase {
        /// Comma-separated values or start:stop:step ranges.
        #[arg(long, allow_hyphen_values = true)]
        mu_over_l: String,
        #[arg(long)]
        c: String,
        #[arg(long)]
        beta: String,
        /// Directory for phase_sweep.csv; defaults to $BETAMOMENTUM_OUT or the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write matplotlib scripts for the CSVs in a run directory.
    Plots { dir: PathBuf },
}

fn output_root() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE_ERROR)
}

fn run(config: &Path, out: Option<&Path>) -> ExitCode {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let obj = match cfg.build_objective() {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    let dir = resolve_output_dir(&cfg, out, output_root().as_deref());
    match run_experiment(&cfg, obj.as_ref(), &dir) {
        Ok(summary) => {
            print!("{}", summary.render());
            println!("artifacts: {}", dir.display());
            ExitCode::from(summary.exit_code())
        }
        Err(e) => {
            eprintln!("error: writing to {}: {e}", dir.display());
            ExitCode::FAILURE
        }
    }
}

fn sweep(mu_over_l: &str, c: &str, beta: &str, out: Option<&Path>) -> ExitCode {
    let grids = (parse_grid(mu_over_l), parse_grid(c), parse_grid(beta));
    let (Ok(m), Ok(c), Ok(b)) = grids else {
        let (m, c, b) = grids;
        let msg = [("--mu-over-l", m.err()), ("--c", c.err()), ("--beta", b.err())]
            .into_iter()
            .filter_map(|(flag, e)| e.map(|e| format!("{flag}: {e}")))
            .collect::<Vec<_>>()
            .join("; ");
        return usage(msg);
    };
    let dir = out.map(Path::to_path_buf).or_else(output_root).unwrap_or_else(|| PathBuf::from("."));
    let rows = phase_rows(&m, &c, &b);
    let path = dir.join("phase_sweep.csv");
    let written = std::fs::create_dir_all(&dir)
        .and_then(|_| File::create(&path))
        .and_then(|f| write_phase_csv(&rows, BufWriter::new(f)));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", path.display());
        return ExitCode::FAILURE;
    }
    let flips = regime_flips(&rows);
    println!("{} rows -> {}", rows.len(), path.display());
    for (m, c, before, after) in &flips {
        println!("regime flip at mu/L = {m}, c = {c}: between beta = {before} and {after}");
    }
    ExitCode::SUCCESS
}

fn plots(dir: &Path) -> ExitCode {
    if !dir.is_dir() {
        return usage(format!("{} is not a directory", dir.display()));
    }
    match emit_plots(dir) {
        Ok(rep) => {
            for n in &rep.notices {
                println!("notice: {n}");
            }
            for s in &rep.written {
                println!("wrote {}", dir.join(s).display());
            }
            println!("{} plot scripts", rep.written.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, out } => run(&config, out.as_deref()),
        Command::SweepPhase {
            mu_over_l,
            c,
            beta,
            out,
        } => sweep(&mu_over_l, &c, &beta, out.as_deref()),
        Command::Plots { dir } => plots(&dir),
    }
}
