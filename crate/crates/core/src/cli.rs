//! Command line front end. [`run`] returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::{format_csv, format_table, run_suite};
use crate::error::Error;
use crate::generate::{generate_text, GenConfig, Shape};
use crate::instance::{check_feasible, CapacityMode, Instance, ProblemKind, Solution};
use crate::io;
use crate::lp::{build_lp_r, solve_feasibility, verify_local_transfer, verify_transfer, CheckMode, TransferSpace};
use crate::oracle::exact_solve;
use crate::rational::{self, Rational};
use crate::solvers::{solve_instance, Variant};

pub const EXIT_OK: i32 = 0;
/// A checked property does not hold (verification or transfer commands).
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_TOO_LARGE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Parser)]
#[command(name = "capcenter", version, about = "Capacitated center and supplier solvers with exact verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an approximation algorithm on an instance file.
    Solve {
        instance: PathBuf,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        /// Print the solution as a JSON solution file.
        #[arg(long)]
        json: bool,
    },
    /// Compute the optimal radius exhaustively (small instances only).
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check a solution file against an instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Decide feasibility of the LP relaxation at a radius.
    Lp {
        instance: PathBuf,
        #[arg(long, value_parser = parse_rational)]
        radius: Rational,
        /// Write the LP in CPLEX LP format to this path ("-" for stdout).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Check whether one opening vector is a distance-r transfer of another.
    Transfer {
        instance: PathBuf,
        y: PathBuf,
        y2: PathBuf,
        #[arg(long, value_parser = parse_rational)]
        radius: Rational,
        #[arg(long, value_enum, default_value_t = ModeArg::Flow)]
        check: ModeArg,
    },
    /// Write a seeded random instance file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ShapeArg::Grid)]
        shape: ShapeArg,
        #[arg(long, value_enum, default_value_t = KindArg::Supplier)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = CapacityArg::Soft)]
        mode: CapacityArg,
        #[arg(long, default_value_t = 4)]
        facilities: usize,
        #[arg(long, default_value_t = 8)]
        clients: usize,
        #[arg(long, default_value_t = 2)]
        lower: u32,
        #[arg(long, default_value_t = 2)]
        spread: u32,
        #[arg(long)]
        uniform: bool,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = 12)]
        grid: i64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare every variant against the exact solver on a seeded suite.
    Bench {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Instances per variant.
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, value_parser = parse_variant)]
        variant: Vec<Variant>,
        /// Write per-instance data as comma-separated text.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Flow,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Grid,
    Graph,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Center,
    Supplier,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CapacityArg {
    Soft,
    Hard,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).ok_or_else(|| format!("invalid rational `{s}`"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible | Error::CoverageShortfall { .. } | Error::ExtractionInfeasible(_) => EXIT_INFEASIBLE,
        Error::TooLarge { .. } => EXIT_TOO_LARGE,
        Error::IncompatibleVariant { .. } => EXIT_USAGE,
        Error::Parse { .. } | Error::InvalidInstance(_) | Error::SumMismatch | Error::NotUniform => EXIT_PARSE,
        Error::Io(_) => EXIT_NO_INPUT,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

type CmdResult = Result<i32, Error>;

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Error> {
    out.write_all(text.as_bytes()).map_err(Error::from)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Solve { instance, variant, json } => {
            let inst = io::load_instance(&instance)?;
            let outcome = solve_instance(&inst, variant)?;
            if json {
                write_out(out, &io::print_solution(&inst, &outcome.solution))?;
            } else {
                writeln!(out, "variant {variant}")?;
                writeln!(out, "guessed radius {}", rational::format(&outcome.radius))?;
                writeln!(out, "components {}", outcome.components)?;
                write_solution(out, &inst, &outcome.solution)?;
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { instance, json } => {
            let inst = io::load_instance(&instance)?;
            let res = exact_solve(&inst)?;
            if json {
                write_out(out, &io::print_solution(&inst, &res.witness))?;
            } else {
                writeln!(out, "optimal radius {}", rational::format(&res.radius))?;
                write_solution(out, &inst, &res.witness)?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify { instance, solution } => {
            let inst = io::load_instance(&instance)?;
            let sol = io::parse_solution(&inst, &io::read_to_string(&solution)?)?;
            let report = check_feasible(&inst, &sol);
            if report.ok() {
                writeln!(out, "ok radius {} coverage {}", rational::format(&sol.radius), sol.coverage())?;
                Ok(EXIT_OK)
            } else {
                for v in &report.violations {
                    writeln!(out, "violation: {v}")?;
                }
                Ok(EXIT_REJECTED)
            }
        }
        Command::Lp { instance, radius, dump } => {
            let inst = io::load_instance(&instance)?;
            let lp = build_lp_r(&inst, &radius);
            if let Some(path) = dump {
                write_to(&path, &lp.dump(), out)?;
            }
            match solve_feasibility(&lp) {
                Some(pt) => {
                    writeln!(out, "feasible at radius {}", rational::format(&radius))?;
                    for (f, y) in pt.y.iter().enumerate() {
                        writeln!(out, "y {} {}", inst.label(lp.facilities[f]), rational::format(y))?;
                    }
                    for (j, x) in pt.x.iter().enumerate() {
                        if !num_traits::Zero::is_zero(x) {
                            let (f, c) = lp.pairs[j];
                            writeln!(
                                out,
                                "x {} {} {}",
                                inst.label(lp.facilities[f]),
                                inst.label(lp.clients[c]),
                                rational::format(x)
                            )?;
                        }
                    }
                    Ok(EXIT_OK)
                }
                None => {
                    writeln!(out, "infeasible at radius {}", rational::format(&radius))?;
                    Ok(EXIT_INFEASIBLE)
                }
            }
        }
        Command::Transfer {
            instance,
            y,
            y2,
            radius,
            check,
        } => {
            let inst = io::load_instance(&instance)?;
            let y = io::parse_opening(&inst, &io::read_to_string(&y)?)?;
            let y2 = io::parse_opening(&inst, &io::read_to_string(&y2)?)?;
            let space = TransferSpace::from_instance(&inst);
            let mode = match check {
                ModeArg::Flow => CheckMode::Flow,
                ModeArg::Exhaustive => CheckMode::Exhaustive,
            };
            let valid = verify_transfer(&space, &y, &y2, &radius, mode)?;
            let local = match verify_local_transfer(&space, &y, &y2, &radius) {
                Ok(w) => w.is_some(),
                Err(Error::SumMismatch) => false,
                Err(e) => return Err(e),
            };
            writeln!(out, "{}", if valid { "valid transfer" } else { "not a transfer" })?;
            writeln!(out, "{}", if local { "local witness found" } else { "no local witness" })?;
            Ok(if valid { EXIT_OK } else { EXIT_REJECTED })
        }
        Command::Gen {
            seed,
            shape,
            kind,
            mode,
            facilities,
            clients,
            lower,
            spread,
            uniform,
            k,
            p,
            grid,
            output,
        } => {
            let cfg = GenConfig {
                seed,
                shape: match shape {
                    ShapeArg::Grid => Shape::Grid,
                    ShapeArg::Graph => Shape::Graph,
                },
                kind: match kind {
                    KindArg::Center => ProblemKind::Center,
                    KindArg::Supplier => ProblemKind::Supplier,
                },
                mode: match mode {
                    CapacityArg::Soft => CapacityMode::Soft,
                    CapacityArg::Hard => CapacityMode::Hard,
                },
                facilities,
                clients,
                lower,
                spread,
                uniform,
                k,
                p,
                grid,
            };
            let text = generate_text(&cfg);
            match output {
                Some(path) => write_to(&path, &text, out)?,
                None => write_out(out, &text)?,
            }
            Ok(EXIT_OK)
        }
        Command::Bench {
            seed,
            count,
            variant,
            csv,
        } => {
            let variants = if variant.is_empty() { Variant::ALL.to_vec() } else { variant };
            let report = run_suite(&variants, seed, count);
            write_out(out, &format_table(&report.rows))?;
            if let Some(path) = csv {
                write_to(&path, &format_csv(&report.records), out)?;
            }
            for (v, t) in &report.timings {
                writeln!(err, "{v}: {:.3}s", t.as_secs_f64())?;
            }
            Ok(if report.rows.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_REJECTED })
        }
    }
}

fn write_to(path: &Path, text: &str, out: &mut dyn Write) -> Result<(), Error> {
    if path == Path::new("-") {
        write_out(out, text)
    } else {
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn write_solution(out: &mut dyn Write, inst: &Instance, sol: &Solution) -> Result<(), Error> {
    writeln!(out, "radius {}", rational::format(&sol.radius))?;
    writeln!(out, "coverage {}", sol.coverage())?;
    let open: Vec<String> = sol.open.iter().map(|c| format!("{}#{}", inst.label(c.facility), c.copy)).collect();
    writeln!(out, "open {}", open.join(" "))?;
    for (&v, c) in &sol.assignment {
        writeln!(out, "assign {} -> {}#{}", inst.label(v), inst.label(c.facility), c.copy)?;
    }
    Ok(())
}
