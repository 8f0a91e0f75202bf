use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polydens::counting::{count_values, CountMode, CountOptions};
use polydens::experiment::{
    check_hypotheses, emit_report, run_experiment, write_report, Budgets, ExperimentConfig, ExperimentReport,
    ReportFormat, SigmaOverride, Tolerances,
};
use polydens::expsum::{exp_sum_table, modulus_table, observatory_check, write_exp_sum_csv, write_modulus_csv};
use polydens::local::{euler_product, write_factors_csv, EulerOptions};
use polydens::region::RationalBox;
use polydens::{parse_polynomial, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_GATED: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "polydens", version, about = "Prime and square-free values of integer polynomials: predicted densities against exact counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the hypotheses for the configured mode.
    Check {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated Euler product with its tail bound.
    Densities {
        #[command(flatten)]
        input: Input,
        /// Also write the individual factors as CSV.
        #[arg(long)]
        factors: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete exponential sums of the first polynomial.
    Expsum {
        #[command(flatten)]
        input: Input,
        /// All `S_{a,q}` for this modulus.
        #[arg(long)]
        q: Option<u64>,
        /// `T_f(q)` and `G(q)` for `q = 1..=Q`.
        #[arg(long, value_name = "Q")]
        modulus_table: Option<u64>,
        /// Check the point-count identity for every prime up to this bound.
        #[arg(long, value_name = "P")]
        observatory: Option<u64>,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact lattice counts for every P in the grid.
    Count {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment and emit a report.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write report.json, report.csv and report.plot into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-emit a saved JSON report in another format.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    PlotData,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::PlotData => ReportFormat::PlotData,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Prime,
    SquareFree,
    Joint,
}

/// A config file, flags overriding its keys, or flags alone.
#[derive(Args)]
struct Input {
    /// JSON configuration file.
    config: Option<PathBuf>,
    /// Polynomial in x1..xn (repeat for joint mode).
    #[arg(long = "poly")]
    polynomials: Vec<String>,
    /// Box as JSON, e.g. '[[1,2],[1,2]]'.
    #[arg(long = "box")]
    region: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Comma-separated list of P values.
    #[arg(long, value_delimiter = ',')]
    p_grid: Vec<u64>,
    #[arg(long)]
    euler_cutoff: Option<u64>,
    /// Singular-locus dimension, one value or one per polynomial.
    #[arg(long, value_delimiter = ',')]
    sigma: Vec<u32>,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    assume_irreducible: bool,
    /// Variable count when no box is given (expsum only).
    #[arg(long)]
    vars: Option<usize>,
}

impl Input {
    /// Builds the configuration. `needs_grid` commands reject a missing
    /// `P_grid`; the others fill in placeholders.
    fn config(&self, needs_grid: bool) -> polydens::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => {
                let region = self
                    .region
                    .as_deref()
                    .ok_or_else(|| Error::Config("either a config file or --box is required".into()))?;
                if self.polynomials.is_empty() {
                    return Err(Error::Config("either a config file or --poly is required".into()));
                }
                if needs_grid && self.p_grid.is_empty() {
                    return Err(Error::Config("--p-grid is required without a config file".into()));
                }
                ExperimentConfig {
                    polynomials: vec![],
                    region: parse_box(region)?,
                    mode: CountMode::Prime,
                    p_grid: vec![1],
                    euler_cutoff: 1000,
                    tolerances: Tolerances::default(),
                    sigma_override: None,
                    force: false,
                    threads: None,
                    assume_irreducible: false,
                    budgets: Budgets::default(),
                }
            }
        };
        if !self.polynomials.is_empty() {
            cfg.polynomials = self.polynomials.clone();
        }
        if let Some(r) = &self.region {
            cfg.region = parse_box(r)?;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Prime => CountMode::Prime,
                ModeArg::SquareFree => CountMode::SquareFree,
                ModeArg::Joint => CountMode::Joint,
            };
        }
        if !self.p_grid.is_empty() {
            cfg.p_grid = self.p_grid.clone();
        }
        if let Some(c) = self.euler_cutoff {
            cfg.euler_cutoff = c;
        }
        match self.sigma.len() {
            0 => {}
            1 => cfg.sigma_override = Some(SigmaOverride::One(self.sigma[0])),
            _ => cfg.sigma_override = Some(SigmaOverride::Each(self.sigma.clone())),
        }
        cfg.force |= self.force;
        cfg.assume_irreducible |= self.assume_irreducible;
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }
}

fn parse_box(text: &str) -> polydens::Result<RationalBox> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("--box: {e}")))
}

fn sink(path: Option<&Path>) -> polydens::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> polydens::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Syntax { .. }
        | Error::UnknownVariable { .. }
        | Error::NegativeExponent { .. }
        | Error::ZeroPolynomial
        | Error::ConstantPolynomial
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        Error::HypothesisViolated(_) => EXIT_GATED,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn run(cli: Cli) -> polydens::Result<u8> {
    match cli.command {
        Command::Check { input, out } => {
            let problem = input.config(false)?.validate()?;
            let cfg = &problem.config;
            let sigmas = cfg.sigma_values();
            let report = check_hypotheses(
                &problem.polys,
                &cfg.region,
                cfg.mode,
                (!sigmas.is_empty()).then_some(&sigmas[..]),
                cfg.assume_irreducible,
                cfg.budgets.local as u128,
            );
            write_json(&report, out.as_deref())?;
            Ok(if report.satisfied() { 0 } else { EXIT_GATED })
        }
        Command::Densities { input, factors, out } => {
            let problem = input.config(false)?.validate()?;
            let cfg = &problem.config;
            let sigmas = cfg.sigma_values();
            let report = check_hypotheses(
                &problem.polys,
                &cfg.region,
                cfg.mode,
                (!sigmas.is_empty()).then_some(&sigmas[..]),
                cfg.assume_irreducible,
                cfg.budgets.local as u128,
            );
            let n = cfg.region.dim() as u32;
            let sigmas: Vec<u32> = report.sigma_used.iter().map(|s| s.as_ref().map_or(n - 1, |s| s.value)).collect();
            let opts = EulerOptions {
                budget: cfg.budgets.local as u128,
                force: cfg.force || cfg.mode == CountMode::Joint,
                threads: cfg.threads,
            };
            let (est, fs) = euler_product(&problem.polys, cfg.mode, cfg.euler_cutoff, &sigmas, &opts)?;
            if let Some(path) = factors {
                write_factors_csv(&fs, sink(Some(&path))?)?;
            }
            write_json(&est, out.as_deref())?;
            Ok(0)
        }
        Command::Expsum {
            input,
            q,
            modulus_table: table,
            observatory,
            budget,
            out,
        } => {
            let f = match (&input.config, &input.region, input.vars) {
                (None, None, Some(n)) => {
                    let text = input
                        .polynomials
                        .first()
                        .ok_or_else(|| Error::Config("--poly is required".into()))?;
                    parse_polynomial(text, n)?
                }
                _ => input.config(false)?.validate()?.polys.remove(0),
            };
            if let Some(qv) = q {
                write_exp_sum_csv(&exp_sum_table(&f, qv, budget)?, sink(out.as_deref())?)?;
            } else if let Some(qmax) = table {
                write_modulus_csv(&modulus_table(&f, qmax, budget)?, sink(out.as_deref())?)?;
            } else if let Some(pmax) = observatory {
                let checks = polydens::arith::primes_up_to(pmax)
                    .into_iter()
                    .map(|p| observatory_check(&f, p, budget))
                    .collect::<polydens::Result<Vec<_>>>()?;
                write_json(&checks, out.as_deref())?;
            } else {
                return Err(Error::Config("expsum needs one of --q, --modulus-table, --observatory".into()));
            }
            Ok(0)
        }
        Command::Count { input, out } => {
            let problem = input.config(true)?.validate()?;
            let cfg = &problem.config;
            let opts = CountOptions {
                threads: cfg.threads,
                budget: cfg.budgets.lattice as u128,
            };
            let mut grid = cfg.p_grid.clone();
            grid.sort_unstable();
            grid.dedup();
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["P", "lattice_points", "count", "unknown", "probable_primes", "partial"])?;
            for p in grid {
                let c = count_values(&problem.polys, &cfg.region, p, cfg.mode, &opts)?;
                w.write_record([
                    p.to_string(),
                    c.lattice_points.to_string(),
                    c.count.to_string(),
                    c.unknown.to_string(),
                    c.probable_primes.to_string(),
                    c.partial.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(0)
        }
        Command::Verify {
            input,
            format,
            out,
            out_dir,
        } => {
            let report = run_experiment(input.config(true)?)?;
            match &out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                    write_report(&report, ReportFormat::Json, &dir.join("report.json"))?;
                    write_report(&report, ReportFormat::Csv, &dir.join("report.csv"))?;
                    write_report(&report, ReportFormat::PlotData, &dir.join("report.plot"))?;
                }
                None => {
                    let mut w = sink(out.as_deref())?;
                    emit_report(&report, format.into(), &mut w)?;
                    w.flush()?;
                }
            }
            Ok(verdict(&report))
        }
        Command::Report { report, format, out } => {
            let text = std::fs::read_to_string(&report).map_err(|e| Error::Io(format!("{}: {e}", report.display())))?;
            let parsed: ExperimentReport =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", report.display())))?;
            let mut w = sink(out.as_deref())?;
            emit_report(&parsed, format.into(), &mut w)?;
            w.flush()?;
            Ok(0)
        }
    }
}

fn verdict(report: &ExperimentReport) -> u8 {
    if report.gated {
        return EXIT_GATED;
    }
    if report.budget_exceeded() {
        return EXIT_BUDGET;
    }
    if let Some(tol) = report.config.tolerances.ratio {
        match report.final_deviation() {
            Some(d) if d <= tol => {}
            _ => return EXIT_FAILURE,
        }
    }
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
