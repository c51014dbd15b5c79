//! Command-line driver for the configured studies.
//!
//! Outputs go to `$CBFEM_OUT/<name>/` (default `./out`). Exit codes: 0 on
//! success, 1 when a run aborts, 2 on configuration or usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbfem::config::{check_files, echo_config, parse_config};
use cbfem::experiments::{
    compare_reference, load_series, run_convergence, run_experiment, write_atomic,
    ConvergenceProtocol, ExperimentConfig, Report,
};
use cbfem::models::ModelKind;
use cbfem::solitary::SolitaryWave;
use cbfem::FemError;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

const OUT_ENV: &str = "CBFEM_OUT";
const PROTOCOLS_ENV: &str = "CBFEM_PROTOCOLS";

#[derive(Parser)]
#[command(name = "cbfem", version, about = "Galerkin B-spline solvers for Boussinesq systems over variable bottoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured study.
    Run {
        /// Config file, or the name of a shipped protocol.
        #[arg(long)]
        config: String,
        /// Override `section.key=value` (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the canonical configuration and exit.
        #[arg(long)]
        echo: bool,
    },
    /// Manufactured-solution convergence table.
    Converge {
        #[arg(long)]
        model: ModelKind,
        /// Mesh sizes.
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 128, 256, 512])]
        n: Vec<usize>,
    },
    /// Solitary-wave profile and residual report.
    Solitary {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        mu: f64,
        /// Speed.
        #[arg(long)]
        cs: f64,
        /// Write every `stride`-th profile node.
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Run several configured studies in parallel.
    Sweep {
        /// Config files or protocol names.
        #[arg(required = true)]
        configs: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare a computed `t,zeta` series with a reference series.
    Compare {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// List shipped protocols.
    List,
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

fn protocol_dirs() -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os(PROTOCOLS_ENV) {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(PathBuf::from("protocols"));
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../protocols"));
    dirs
}

fn resolve_config(name: &str) -> Result<PathBuf, FemError> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    for d in protocol_dirs() {
        let p = d.join(format!("{name}.cfg"));
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(FemError::Config(format!(
        "no config file or protocol named '{name}' (try `cbfem list`)"
    )))
}

fn load(name: &str, overrides: &[String]) -> Result<ExperimentConfig, FemError> {
    let cfg = parse_config(&resolve_config(name)?, overrides)?;
    check_files(&cfg)?;
    Ok(cfg)
}

fn write_report(report: &Report, cfg_text: Option<&str>) -> Result<PathBuf, FemError> {
    let dir = out_root().join(&report.name);
    report.write_to_dir(&dir)?;
    if let Some(t) = cfg_text {
        write_atomic(&dir.join("config.cfg"), t.as_bytes())?;
    }
    Ok(dir)
}

fn run_one(cfg: &ExperimentConfig) -> Result<(Report, PathBuf), FemError> {
    let report = run_experiment(cfg)?;
    let dir = write_report(&report, Some(&echo_config(cfg)))?;
    Ok((report, dir))
}

fn print_metrics(report: &Report) {
    let mut buf = Vec::new();
    if report.write_metrics(&mut buf).is_ok() {
        print!("{}", String::from_utf8_lossy(&buf));
    }
}

fn execute(cli: Cli) -> Result<(), FemError> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            echo,
        } => {
            let cfg = load(&config, &overrides)?;
            if echo {
                print!("{}", echo_config(&cfg));
                return Ok(());
            }
            let (report, dir) = run_one(&cfg)?;
            print_metrics(&report);
            eprintln!("wrote {}", dir.display());
        }
        Command::Converge { model, n } => {
            let mut proto = ConvergenceProtocol::standard(model);
            proto.ns = n;
            let table = run_convergence(&proto)?;
            let mut report = Report::new(format!("converge_{}", model.name()));
            let names = ["zeta_l2", "zeta_linf", "zeta_h1", "u_l2", "u_linf", "u_h1"];
            report.metrics = names
                .iter()
                .zip(table.fitted_rates())
                .map(|(k, r)| (format!("rate_{k}"), r))
                .collect();
            report.tables.push(table.to_table());
            let dir = write_report(&report, None)?;
            let mut buf = Vec::new();
            table.to_table().write_csv(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            print_metrics(&report);
            eprintln!("wrote {}", dir.display());
        }
        Command::Solitary {
            eps,
            mu,
            cs,
            stride,
        } => {
            let w = SolitaryWave::new(eps, mu, cs)?;
            let mut report = Report::new(format!("solitary_eps{eps}_mu{mu}_c{cs}"));
            report.metrics = vec![
                ("speed".into(), w.speed),
                ("amplitude".into(), w.amplitude),
                ("u_amplitude".into(), w.u_amplitude),
                ("half_length".into(), w.half_length),
                ("first_integral_residual".into(), w.first_integral_residual()),
                ("evenness_defect".into(), w.evenness_defect()),
            ];
            let dir = write_report(&report, None)?;
            let mut buf = Vec::new();
            w.write_csv(&mut buf, stride.max(1))?;
            write_atomic(&dir.join("profile.csv"), &buf)?;
            print_metrics(&report);
            eprintln!("wrote {}", dir.display());
        }
        Command::Sweep { configs, overrides } => {
            let cfgs = configs
                .iter()
                .map(|c| load(c, &overrides))
                .collect::<Result<Vec<_>, _>>()?;
            let outcomes: Vec<_> = cfgs.par_iter().map(run_one).collect();
            let mut failed = None;
            for (cfg, out) in cfgs.iter().zip(outcomes) {
                match out {
                    Ok((report, dir)) => {
                        println!("# {}", report.name);
                        print_metrics(&report);
                        eprintln!("wrote {}", dir.display());
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", cfg.name);
                        failed.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = failed {
                return Err(e);
            }
        }
        Command::Compare { series, reference } => {
            let (t, z) = load_series(&series)?;
            let (tr, zr) = load_series(&reference)?;
            let d = compare_reference(&t, &z, &tr, &zr)?;
            println!("amplitude_ratio = {:e}", d.amplitude_ratio);
            println!("l2_deviation = {:e}", d.l2_deviation);
            println!("time_shift = {:e}", d.time_shift);
        }
        Command::List => {
            let mut seen = std::collections::BTreeMap::new();
            for d in protocol_dirs() {
                let Ok(entries) = std::fs::read_dir(&d) else { continue };
                for e in entries.flatten() {
                    let p = e.path();
                    if p.extension().is_some_and(|x| x == "cfg") {
                        let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                        seen.entry(name).or_insert(p);
                    }
                }
            }
            for (name, p) in seen {
                match parse_config(&p, &[]) {
                    Ok(cfg) => println!("{name:32} {}", cbfem_study(&cfg)),
                    Err(e) => println!("{name:32} invalid: {e}"),
                }
            }
        }
    }
    Ok(())
}

fn cbfem_study(cfg: &ExperimentConfig) -> String {
    let text = echo_config(cfg);
    text.lines()
        .find_map(|l| l.strip_prefix("study = "))
        .unwrap_or("run")
        .to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                FemError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
