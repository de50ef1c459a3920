use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use periodlab::corpus::{run_corpus, CorpusConfig};
use periodlab::haar::{haar_rotations, sample_haar, SphereQuadrature};
use periodlab::kernels::{envelope_check, EnvelopeConfig};
use periodlab::lattice::{parseval_check, periodize};
use periodlab::shells::{g2_by_shells, g2_by_shells_auto, mc_vs_shells};
use periodlab::sos::{bound_statistics, build_rd_table, Parity};
use periodlab::theorems::{check, sharpness_sweep, CheckSettings, GSource, SweepKind, Variant};
use periodlab::TestFunction;

#[derive(Parser)]
#[command(name = "periodlab", version, about = "Periodizations over rotated integer lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct Common {
    /// Catalog id, e.g. gaussian:d=4:a=4,1,1,1, band:d=4:eps=0.5, plate:d=4:eps=0.1
    #[arg(long, default_value = "gaussian:d=4")]
    function: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Sample g_ρ on a grid for one Haar rotation.
    Periodize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Also write the raw binary grid.
        #[arg(long)]
        binary: bool,
    },
    /// Compare grid-transform coefficients with f̂(ρm) for several rotations.
    Parseval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        rotations: usize,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 3)]
        m_max: i64,
    },
    /// Tabulate r_d(n) and its growth statistics.
    RdTable {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Shell decomposition of G².
    Shells {
        #[command(flatten)]
        common: Common,
        /// Largest shell; chosen from the tolerance when absent.
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 4096)]
        pairs: usize,
    },
    /// Haar Monte Carlo estimate of G² against the shell sum.
    McVsShells {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 256)]
        rotations: usize,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long, default_value_t = 4096)]
        pairs: usize,
    },
    /// Decay envelope of the oscillatory kernels.
    KernelEnvelope {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One inequality record.
    TheoremCheck {
        #[command(flatten)]
        common: Common,
        /// T1, T2, T1', T2' or T2'-no-quotient
        #[arg(long, default_value = "T1")]
        variant: String,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Estimate G by Haar Monte Carlo with this many rotations instead of shells.
        #[arg(long)]
        rotations: Option<usize>,
    },
    /// ε-exponent fits for the sharpness examples.
    Sharpness {
        /// band or plate
        #[arg(long, default_value = "plate")]
        kind: String,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 4.0 / 3.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.125,0.0625,0.03125,0.015625")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every check over the corpus; writes report.json, records.csv and checks.csv.
    RunAll {
        /// JSON config; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(out: &Option<PathBuf>, name: &str, body: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(name), body).with_context(|| format!("writing {name}"))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn write_with<F>(out: &Option<PathBuf>, name: &str, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> periodlab::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    emit(out, name, &String::from_utf8(buf)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Periodize { common, grid, binary } => {
            let f = TestFunction::from_id(&common.function)?;
            let rho = sample_haar(f.dimension(), common.seed);
            let g = periodize(&f, &rho, grid, common.tol)?;
            match common.format {
                Format::Csv => write_with(&common.out, "grid.csv", |w| g.write_csv(w))?,
                Format::Json => {
                    let body = serde_json::json!({
                        "function": f.id(),
                        "dim": g.dim,
                        "grid_size": g.grid_size,
                        "rotation": g.rotation,
                        "route": g.route,
                        "truncation_radius": g.truncation_radius,
                        "truncation_error": g.truncation_error,
                        "norm_sq": g.norm_sq(),
                        "samples": g.samples.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                    });
                    emit(&common.out, "grid.json", &json(&body)?)?
                }
            }
            if binary {
                let Some(dir) = &common.out else { bail!("--binary needs --out") };
                let mut file = fs::File::create(dir.join("grid.bin"))?;
                g.write_binary(&mut file)?;
            }
            Ok(true)
        }
        Command::Parseval { common, rotations, grid, m_max } => {
            let f = TestFunction::from_id(&common.function)?;
            let reports = haar_rotations(f.dimension(), rotations, common.seed)
                .iter()
                .map(|rho| parseval_check(&f, rho, grid, m_max, common.tol))
                .collect::<periodlab::Result<Vec<_>>>()?;
            let ok = reports.iter().all(|r| r.discrepancy <= 1e-6);
            match common.format {
                Format::Json => emit(&common.out, "parseval.json", &json(&reports)?)?,
                Format::Csv => emit(
                    &common.out,
                    "parseval.csv",
                    &csv_rows(
                        "rotation,discrepancy,max_abs_error,aliasing_bound,truncation_error",
                        reports.iter().enumerate().map(|(i, r)| {
                            format!(
                                "{i},{:e},{:e},{:e},{:e}",
                                r.discrepancy, r.max_abs_error, r.aliasing_bound, r.truncation_error
                            )
                        }),
                    ),
                )?,
            }
            Ok(ok)
        }
        Command::RdTable { dim, nmax, out, format } => {
            let table = build_rd_table(dim, nmax)?;
            match format {
                Format::Csv => write_with(&out, "rd_table.csv", |w| table.write_csv(w))?,
                Format::Json => {
                    let mut stats = vec![bound_statistics(&table, Parity::All)];
                    if dim == 4 {
                        stats.push(bound_statistics(&table, Parity::Odd));
                    }
                    emit(&out, "rd_stats.json", &json(&stats)?)?
                }
            }
            Ok(true)
        }
        Command::Shells { common, nmax, scale, pairs } => {
            let f = TestFunction::from_id(&common.function)?;
            let quad = SphereQuadrature::monte_carlo(f.dimension(), pairs, common.seed)?;
            let s = match nmax {
                Some(n) => g2_by_shells(&f, scale, n, &quad, common.tol)?,
                None => g2_by_shells_auto(&f, scale, &quad, common.tol)?,
            };
            match common.format {
                Format::Csv => write_with(&common.out, "shells.csv", |w| s.write_csv(w))?,
                Format::Json => emit(&common.out, "shells.json", &json(&s)?)?,
            }
            Ok(true)
        }
        Command::McVsShells { common, rotations, nmax, pairs } => {
            let f = TestFunction::from_id(&common.function)?;
            let r = mc_vs_shells(&f, rotations, nmax, common.seed, pairs, common.tol)?;
            match common.format {
                Format::Json => emit(&common.out, "mc_vs_shells.json", &json(&r)?)?,
                Format::Csv => emit(
                    &common.out,
                    "mc_vs_shells.csv",
                    &csv_rows(
                        "function,mc,mc_stderr,shells,shell_stderr,z",
                        [format!(
                            "{},{:e},{:e},{:e},{:e},{}",
                            r.function, r.mc_estimate, r.mc_stderr, r.shell_total, r.shell_stderr, r.z
                        )],
                    ),
                )?,
            }
            Ok(r.passes())
        }
        Command::KernelEnvelope { dim, out } => {
            let report = envelope_check(&EnvelopeConfig::standard(dim))?;
            emit(&out, "kernel_envelope.json", &json(&report)?)?;
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(report.passed())
        }
        Command::TheoremCheck { common, variant, p, rotations } => {
            let f = TestFunction::from_id(&common.function)?;
            let settings = CheckSettings {
                tol: common.tol,
                seed: common.seed,
                g_source: rotations.map_or(GSource::Shells, |rotations| GSource::Haar { rotations }),
                ..CheckSettings::default()
            };
            let r = check(&f, p, Variant::parse(&variant)?, &settings)?;
            emit(&common.out, "record.json", &json(&r)?)?;
            Ok(r.ratio.is_finite())
        }
        Command::Sharpness { kind, dim, p, eps, seed, out } => {
            let settings = CheckSettings { seed, ..CheckSettings::default() };
            let r = sharpness_sweep(SweepKind::parse(&kind)?, dim, p, &eps, &settings)?;
            emit(&out, "sharpness.json", &json(&r)?)?;
            Ok(true)
        }
        Command::RunAll { config, seed, out } => {
            let mut cfg = match &config {
                Some(path) => CorpusConfig::from_json(&read(path)?)?,
                None => CorpusConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let report = run_corpus(&cfg)?;
            report.write_bundle(&out)?;
            for c in &report.checks {
                eprintln!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            }
            Ok(report.passed)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
