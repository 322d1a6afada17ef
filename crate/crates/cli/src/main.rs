//! `hcoint analyze | simulate | yield-demo`.
//!
//! Exit codes: 0 on success, 2 when the model has no unit root of finite
//! type, 1 on I/O, schema or numerical errors.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use hcoint::report::{run, AnalyzeOptions};
use hcoint::simulate::{gaussian_noise, relation_table, simulate_ar, write_table, Panel};
use hcoint::yield_curve::{yield_demo, YieldDemo};
use hcoint::ArModel;

const FAIL_EXIT: u8 = 2;

#[derive(Parser)]
#[command(name = "hcoint", version, about = "Unit-root structure of autoregressive models")]
struct Cli {
    /// Worker threads for contour evaluation and multi-path simulation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a model file and print the report.
    Analyze {
        spec: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate sample paths from a model file as CSV.
    Simulate {
        spec: PathBuf,
        /// Number of time points.
        #[arg(long = "T", default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of independent paths, with seeds `seed, seed + 1, …`.
        #[arg(long, default_value_t = 1, requires = "out")]
        paths: usize,
        /// Also write `<stem>.relations.csv` with the relation-corrected
        /// characteristics for a basis of every τ_h.
        #[arg(long, requires = "out")]
        relations: bool,
        #[command(flatten)]
        tuning: Tuning,
        /// Output CSV file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level, slope and curvature of a simulated yield curve.
    YieldDemo {
        /// Number of maturity cells.
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long = "T", default_value_t = 4096)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Tuning {
    /// Relative rank tolerance, overriding the model file.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Contour radius for the Laurent coefficients.
    #[arg(long)]
    radius: Option<f64>,
}

impl Tuning {
    fn options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            rel_tol: self.rel_tol,
            radius: self.radius,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Human-readable text instead of JSON.
    #[arg(long)]
    pretty: bool,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors must not collide with the FAIL exit code
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::FAILURE,
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Analyze { spec, tuning, output } => analyze(&spec, &tuning, &output),
        Command::Simulate {
            spec,
            t,
            seed,
            paths,
            relations,
            tuning,
            out,
        } => simulate(&spec, t, seed, paths, relations, &tuning, out.as_deref()),
        Command::YieldDemo { grid, t, seed, output } => {
            let demo = yield_demo(grid, t, seed)?;
            let text = if output.pretty {
                demo_text(&demo)
            } else {
                serde_json::to_string(&demo)? + "\n"
            };
            emit(output.out.as_deref(), text.as_bytes())?;
            Ok(0)
        }
    }
}

fn load(spec: &Path) -> Result<ArModel> {
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    ArModel::from_json(&text).with_context(|| format!("parsing {}", spec.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn analyze(spec: &Path, tuning: &Tuning, output: &Output) -> Result<u8> {
    let model = load(spec)?;
    let report = run(&model, &tuning.options())?.report;
    let text = if output.pretty {
        report.to_text()
    } else {
        report.to_json() + "\n"
    };
    emit(output.out.as_deref(), text.as_bytes())?;
    Ok(if report.verdict.is_pass() { 0 } else { FAIL_EXIT })
}

fn write_csv(path: Option<&Path>, headers: &[String], panel: &Panel) -> Result<()> {
    let mut buf = Vec::new();
    write_table(&mut buf, headers, panel, 1)?;
    emit(path, &buf)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

fn simulate(
    spec: &Path,
    t: usize,
    seed: u64,
    paths: usize,
    with_relations: bool,
    tuning: &Tuning,
    out: Option<&Path>,
) -> Result<u8> {
    if t == 0 || paths == 0 {
        bail!("--T and --paths must be positive");
    }
    let model = load(spec)?;
    let dec = if with_relations {
        let analysis = run(&model, &tuning.options())?;
        match analysis.dec {
            Some(dec) => Some(dec),
            None => {
                eprintln!("no unit root of finite type: {:?}", analysis.verdict);
                return Ok(FAIL_EXIT);
            }
        }
    } else {
        None
    };
    let names: Vec<String> = (1..=model.p()).map(|i| format!("x_{i}")).collect();
    let cov = model.noise_cov();
    let presample = 1 - model.k() as i64;

    let one = |seed: u64, path_out: Option<PathBuf>| -> Result<()> {
        let shocks = gaussian_noise(model.p(), &cov, presample, t as i64, seed)?;
        let x = simulate_ar(&model, &shocks)?.panel;
        write_csv(path_out.as_deref(), &names, &x)?;
        if let (Some(dec), Some(path)) = (&dec, &path_out) {
            let (headers, table) = relation_table(dec, &x, 1)?;
            write_csv(Some(&suffixed(path, ".relations")), &headers, &table)?;
        }
        Ok(())
    };

    if paths == 1 {
        return one(seed, out.map(Path::to_path_buf)).map(|_| 0);
    }
    let out = out.expect("clap enforces --out with --paths");
    (0..paths as u64)
        .into_par_iter()
        .map(|i| one(seed + i, Some(suffixed(out, &format!("_{}", seed + i)))))
        .collect::<Result<Vec<_>>>()?;
    Ok(0)
}

fn demo_text(demo: &YieldDemo) -> String {
    let mut s = demo.report.to_text();
    s += &format!("\ngrid = {}, T = {}, seed = {}\n", demo.grid, demo.t, demo.seed);
    s += "characteristic  order  empirical  slopes of successive differences\n";
    for c in &demo.characteristics {
        let slopes: Vec<String> = c
            .empirical
            .differenced_slopes
            .iter()
            .map(|x| format!("{x:.2}"))
            .collect();
        s += &format!(
            "{:<14}  I({})    I({})       {}\n",
            c.name,
            c.order,
            c.empirical.order,
            slopes.join(" ")
        );
    }
    s
}
