//! Command-line front end: oracle queries, dataset generation, training,
//! evaluation, architecture arithmetic and encoder inspection.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cerebellum::arch::{ArchReport, ArchitectureParams};
use cerebellum::dynamics::{ExternalWrench, JointState};
use cerebellum::experiment::{training_csv, Dataset, ErrorClass, Experiment, ExperimentError};
use cerebellum::network::{Family, WeightStore};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "cerebellum", version, about = "Cerebellar term-by-term dynamics learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic torque breakdown for one state.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Joint angles, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, allow_hyphen_values = true)]
        qd: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        qdd: Option<String>,
        /// Tip wrench `fx,fy,mz`.
        #[arg(long, allow_hyphen_values = true)]
        wrench: Option<String>,
    },
    /// Sample states and write a dataset with oracle targets.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset file; defaults to `<output_dir>/dataset.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a network and write `weights.json` and `training.csv`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate stored weights on a dataset.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Table sizes, unit counts and latencies of table architectures.
    Arch {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Experiment config with an `[arch]` table.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the position code and granule layer at one position.
    EncodeInspect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        /// Rate input: modulates the code and drives the lower Golgi tree.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        r: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Consistency => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}

fn parse_vec(name: &str, s: &str) -> Result<Vec<f64>, ExperimentError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ExperimentError::Input(format!("--{name} {s:?}: {e}")))
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::Io { path: dir.display().to_string(), source: e })?;
    }
    fs::write(path, text).map_err(|e| ExperimentError::Io { path: path.display().to_string(), source: e })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ExperimentError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Oracle { config, q, qd, qdd, wrench } => {
            let exp = Experiment::load(&config)?;
            let q = parse_vec("q", &q)?;
            let n = q.len();
            let or_zero = |name, v: Option<String>| v.map_or(Ok(vec![0.0; n]), |s| parse_vec(name, &s));
            let state = JointState::new(q, or_zero("qd", qd)?, or_zero("qdd", qdd)?)?;
            let w = match wrench {
                None => ExternalWrench::ZERO,
                Some(s) => match parse_vec("wrench", &s)?[..] {
                    [fx, fy, mz] => ExternalWrench::new(fx, fy, mz),
                    _ => return Err(ExperimentError::Input("--wrench needs three values fx,fy,mz".into())),
                },
            };
            let b = exp.model.term_breakdown(&state, &w)?;
            let mut out = String::from("term,joint,i,j,value\n");
            for k in 0..b.dof() {
                for m in 0..b.dof() {
                    let _ = writeln!(out, "inertial,{k},{m},,{}", b.inertial[(k, m)]);
                }
                for i in 0..b.dof() {
                    for j in 0..b.dof() {
                        let _ = writeln!(out, "coriolis,{k},{i},{j},{}", b.coriolis.get(k, i, j));
                    }
                }
                for a in 0..2 {
                    let _ = writeln!(out, "gravity,{k},{a},,{}", b.gravity[(k, a)]);
                }
                for c in 0..3 {
                    let _ = writeln!(out, "external,{k},{c},,{}", b.external[(k, c)]);
                }
                let _ = writeln!(out, "fric_dyn,{k},,,{}", b.fric_dyn[k]);
                let _ = writeln!(out, "fric_stat,{k},,,{}", b.fric_stat[k]);
                let _ = writeln!(out, "total,{k},,,{}", b.total[k]);
            }
            print!("{out}");
            Ok(())
        }
        Command::Generate { config, out, seed } => {
            let mut exp = Experiment::load(&config)?;
            if let Some(s) = seed {
                exp = Experiment::from_config(exp.config.with_seed(s))?;
            }
            let path = out.unwrap_or_else(|| exp.config.output_dir().join("dataset.csv"));
            let d = exp.generate()?;
            write(&path, &d.to_csv())?;
            info!("wrote {} records to {}", d.records.len(), path.display());
            Ok(())
        }
        Command::Train { config, dataset, out, seed } => {
            let mut exp = Experiment::load(&config)?;
            if let Some(s) = seed {
                exp.config.training.seed = s;
            }
            let d = Dataset::load(&dataset)?;
            let (store, report) = exp.train(&d)?;
            let dir = out.unwrap_or_else(|| exp.config.output_dir());
            write(&dir.join("weights.json"), &store.to_json())?;
            write(&dir.join("training.csv"), &training_csv(&report))?;
            if let Some(m) = report.last() {
                println!("epochs {}", report.epochs.len() - 1);
                for f in Family::ALL {
                    println!("train {} rel_rms {}", f.name(), m.get(f).rel_rms());
                }
            }
            Ok(())
        }
        Command::Eval { config, weights, dataset, out } => {
            let exp = Experiment::load(&config)?;
            let store = WeightStore::load(&weights)?;
            let d = Dataset::load(&dataset)?;
            let report = exp.evaluate(&store, &d)?;
            if !report.sparsity.in_band() {
                warn!("mean active fraction {} outside the sparsity band", report.sparsity.mean);
            }
            emit(out.as_deref(), &report.to_csv())
        }
        Command::Arch { preset, config, format, out } => {
            let params = match (preset, config) {
                (Some(p), _) => ArchitectureParams::preset(&p)?,
                (None, Some(c)) => {
                    let exp_cfg = cerebellum::experiment::ExperimentConfig::load(&c)?;
                    exp_cfg
                        .arch
                        .ok_or_else(|| ExperimentError::Input(format!("{}: no [arch] table", c.display())))?
                }
                (None, None) => ArchitectureParams::preset("paper-2.3")?,
            };
            let report = ArchReport::new(&params)?;
            let text = match format {
                Format::Text => report.to_text(),
                Format::Csv => report.to_csv(),
            };
            emit(out.as_deref(), &text)
        }
        Command::EncodeInspect { config, q, r } => {
            let exp = Experiment::load(&config)?;
            let q = parse_vec("q", &q)?;
            if !r.is_finite() {
                return Err(ExperimentError::Input(format!("--r must be finite, got {r}")));
            }
            print!("{}", exp.inspect(&q, r)?.to_text());
            Ok(())
        }
    }
}
