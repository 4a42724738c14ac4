use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etdg::analysis::run_diagnostics;
use etdg::coefficients::BuiltinCase;
use etdg::experiment::{methods_from_str, parse_config_text, parse_list, run_experiment, ExperimentConfig, ExperimentMethod};
use etdg::local_ops::LocalSettings;
use etdg::mesh::build_structured_mesh;
use etdg::Error;

#[derive(Parser)]
#[command(name = "etdg", version, about = "Embedded Trefftz DG experiments on the unit square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence sweep; writes CSV and prints rate tables.
    Run(SweepArgs),
    /// Local stability, decoupling and dimension diagnostics.
    Diagnose(SweepArgs),
    /// Writes the structured mesh as text.
    DumpMesh {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    /// Comma-separated subset of dg,et,etbox,qt.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated degrees.
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated mesh subdivisions.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "box-scale")]
    box_scale: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Solve(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solve(e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn build_config(a: &SweepArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_pairs(&parse_config_text(&text).map_err(usage)?).map_err(usage)?;
    }
    if let Some(c) = &a.case {
        cfg.case = c.parse::<BuiltinCase>().map_err(usage)?;
    }
    if let Some(m) = &a.methods {
        cfg.methods = methods_from_str(m).map_err(usage)?;
    }
    if let Some(p) = &a.p {
        cfg.p_list = parse_list(p, "degree").map_err(usage)?;
    }
    if let Some(n) = &a.n {
        cfg.n_list = parse_list(n, "subdivision").map_err(usage)?;
    }
    if a.sigma.is_some() {
        cfg.sigma = a.sigma;
    }
    if let Some(b) = a.box_scale {
        cfg.box_scale = b;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Solve(format!("cannot write {}: {e}", path.display()))),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn run(a: &SweepArgs) -> Result<(), Failure> {
    let cfg = build_config(a)?;
    let out = run_experiment(&cfg).map_err(|e| Failure::Solve(e.to_string()))?;
    write_output(&cfg.out, &out.csv())?;
    if cfg.out.is_some() {
        print!("{}", out.eoc_table());
    } else {
        eprint!("{}", out.eoc_table());
    }
    Ok(())
}

fn diagnose(a: &SweepArgs) -> Result<(), Failure> {
    let cfg = build_config(a)?;
    let coeffs = cfg.case.coefficients();
    let settings = LocalSettings {
        box_scale: cfg.box_scale,
        ..LocalSettings::default()
    };
    let mut text = String::new();
    for &m in &cfg.methods {
        let Some(kind) = m.operator_kind(&coeffs) else {
            continue;
        };
        for &p in &cfg.p_list {
            for &n in &cfg.n_list {
                let mesh = build_structured_mesh(n).map_err(usage)?;
                let report = run_diagnostics(&mesh, p, kind, &coeffs, &settings, cfg.sigma_for(p))
                    .map_err(|e| Failure::Solve(format!("{} {m} p={p} n={n}: {e}", cfg.case)))?;
                text.push_str(&format!("case {} method {m} p {p} n {n}\n{report}\n", cfg.case));
            }
        }
    }
    if text.is_empty() {
        return Err(Failure::Usage(format!(
            "diagnose needs a Trefftz method among {:?}",
            ExperimentMethod::ALL.iter().skip(1).map(|m| m.name()).collect::<Vec<_>>()
        )));
    }
    write_output(&cfg.out, &text)
}

fn dump_mesh(n: usize, out: &Option<PathBuf>) -> Result<(), Failure> {
    let mesh = build_structured_mesh(n).map_err(usage)?;
    let mut buf = Vec::new();
    mesh.write_text(&mut buf)?;
    write_output(out, &String::from_utf8_lossy(&buf))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Diagnose(a) => diagnose(a),
        Command::DumpMesh { n, out } => dump_mesh(*n, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solve(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
