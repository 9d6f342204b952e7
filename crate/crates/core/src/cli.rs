//! Command-line front end. Exit codes: 0 ok, 1 bad input, 2 internal check failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{summarize, theory_summary, write_residuals_csv, write_summary_csv};
use crate::config::RunConfig;
use crate::electronics::{fit_pwl, Target};
use crate::error::{Error, Result};
use crate::experiment::{
    estimate_moments, read_moments_csv, run_experiment, theory_traces, write_moments_csv,
    write_records_csv, write_theory_csv,
};

#[derive(Debug, Parser)]
#[command(name = "squeezegate", version, about = "Dynamic squeezing gate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the three-angle Monte Carlo experiment and write per-bin moments.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        n_trials: Option<usize>,
        /// Also write raw outcomes (large).
        #[arg(long)]
        records: bool,
    },
    /// Reconstruct and diagonalize variance matrices from three moment files.
    Analyze {
        /// moments_x.csv, moments_p.csv and moments_pi4.csv, any order.
        #[arg(num_args = 3, required = true)]
        moments: Vec<PathBuf>,
        /// Compare against the closed form for this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form per-bin predictions.
    Theory {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a broken-line table and report its max error.
    Circuits {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 16)]
        segments: usize,
        /// Fit on [-range, range].
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        range: f64,
        /// Write the table to DIR/<target>_<segments>.txt instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out: dir,
            n_trials,
            records,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = n_trials {
                cfg.n_trials = n;
            }
            if let Some(d) = dir {
                cfg.output_dir = d;
            }
            cfg.validate()?;
            writeln!(out, "config_hash {}", cfg.hash())?;
            writeln!(out, "seed {}", cfg.seed)?;
            writeln!(
                out,
                "bins {} trials_per_angle {} delay_slack_ns {}",
                cfg.n_bins(),
                cfg.n_trials,
                cfg.delays.mismatch_ns()
            )?;
            let rec = run_experiment(&cfg, cfg.seed)?;
            let moments = estimate_moments(&rec)?;
            for p in write_moments_csv(&moments, &cfg.output_dir)? {
                writeln!(out, "wrote {}", p.display())?;
            }
            if records {
                for p in write_records_csv(&rec, &cfg.output_dir)? {
                    writeln!(out, "wrote {}", p.display())?;
                }
            }
        }
        Command::Analyze {
            moments,
            config,
            out: dir,
        } => {
            let est = read_moments_csv(&moments)?;
            let theory = match &config {
                Some(p) => Some(theory_traces(&RunConfig::load(p)?)?),
                None => None,
            };
            let summary = summarize(&est, theory.as_deref())?;
            let dir = dir.unwrap_or_else(|| PathBuf::from("out"));
            let path = dir.join("summary.csv");
            write_summary_csv(&summary.rows, &path)?;
            writeln!(out, "wrote {}", path.display())?;
            if let Some(res) = &summary.residuals {
                let path = dir.join("residuals.csv");
                write_residuals_csv(res, &path)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            report_extremes(&summary.rows, out)?;
            writeln!(out, "invalid_bins {}", summary.n_invalid())?;
        }
        Command::Theory { config, out: dir } => {
            let cfg = load_config(config.as_deref())?;
            let dir = dir.unwrap_or_else(|| cfg.output_dir.clone());
            let th = theory_traces(&cfg)?;
            let path = dir.join("theory.csv");
            write_theory_csv(&th, &path)?;
            writeln!(out, "wrote {}", path.display())?;
            let rows = theory_summary(&th)?;
            let path = dir.join("theory_summary.csv");
            write_summary_csv(&rows, &path)?;
            writeln!(out, "wrote {}", path.display())?;
            report_extremes(&rows, out)?;
        }
        Command::Circuits {
            target,
            segments,
            range,
            out: dir,
        } => {
            let t: Target = target.parse()?;
            let fit = fit_pwl(t, segments, (-range, range))?;
            let mut text = format!(
                "# {} {} segments on [{}, {}]\n# max_error {}\n# uniform_max_error {}\n",
                t.name(),
                segments,
                -range,
                range,
                fit.max_error,
                fit.uniform_max_error
            );
            text.push_str(&fit.function.to_table());
            match dir {
                Some(d) => {
                    std::fs::create_dir_all(&d)?;
                    let path = d.join(format!("{}_{}.txt", t.name(), segments));
                    std::fs::write(&path, &text)?;
                    writeln!(out, "wrote {}", path.display())?;
                    writeln!(out, "max_error {}", fit.max_error)?;
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn report_extremes(rows: &[crate::analysis::VarianceSummary], out: &mut dyn Write) -> Result<()> {
    let valid = rows.iter().filter(|r| r.valid());
    let max_plus = valid
        .clone()
        .filter_map(|r| r.sigma_plus2_db())
        .fold(f64::NEG_INFINITY, f64::max);
    let min_minus = valid
        .filter_map(|r| r.sigma_minus2_db())
        .fold(f64::INFINITY, f64::min);
    writeln!(out, "max_antisqueezing_db {max_plus:.3}")?;
    writeln!(out, "max_squeezing_db {min_minus:.3}")?;
    writeln!(
        out,
        "note: measured data for this gate reach about -1.8 dB at |kappa| = 2; the lossless \
         model gives -1.65 dB. The gap is attributed to loss and phase noise not modeled here."
    )?;
    Ok(())
}

/// Parse `args` and run, writing normal output to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_internal() {
        2
    } else {
        1
    }
}
