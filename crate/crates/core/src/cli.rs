//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification or threshold check failed,
//! 2 bad input, 3 fixpoint did not converge. Indices in files and output
//! are 1-based.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bvn::{decompose, BvnDecomposition, Sampler};
use crate::envy::compute_rho;
use crate::error::{Error, Result};
use crate::instance::{format_rational, parse_rational, social_welfare, Instance, Lottery, LotteryFile, Rational};
use crate::solver::{fixpoint_solve, hull_solve, max_welfare_ef_po, FixpointOutcome, SolveReport, DEFAULT_MAX_ITERS, DEFAULT_PROFILE_CAP};
use crate::verify::{pareto_program, verify, Backend};
use crate::x3c::{generate, witness_lottery, X3cInstance};

#[derive(Debug, Parser)]
#[command(name = "efpo", version, about = "Envy-free and Pareto-optimal lotteries over partition-based utilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute an envy-free, Pareto-optimal lottery.
    Solve {
        instance: PathBuf,
        /// Defaults to hull for n <= 6 and fixpoint otherwise.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        /// Also write the lottery file here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a lottery for envy-freeness and Pareto optimality.
    Verify {
        instance: PathBuf,
        lottery: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Write the Pareto-dominance LP in text form.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Maximum social welfare over envy-free, Pareto-optimal lotteries.
    Welfare {
        instance: PathBuf,
        #[arg(long, value_parser = parse_rational_arg)]
        threshold: Option<Rational>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print rho, epsilon and the tuple count.
    Rho { instance: PathBuf },
    /// Build the fair division instance of an X3C instance.
    GenX3c {
        phi: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Witness lottery of an exact cover.
    Witness {
        phi: PathBuf,
        /// Comma-separated 1-based triple indices.
        #[arg(long, value_delimiter = ',', required = true)]
        cover: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Birkhoff–von Neumann decomposition of a lottery.
    Decompose {
        instance: PathBuf,
        lottery: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw deterministic allocations from a decomposition.
    Sample {
        decomposition: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Hull,
    Fixpoint,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
    Auto,
}

fn parse_rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// Runs the command line `argv` (program name first) and returns the
/// exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code();
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::from_json(&read(path)?)
}

fn load_lottery(path: &Path) -> Result<Lottery> {
    Lottery::from_json(&read(path)?)
}

fn lottery_value(lot: &Lottery) -> Value {
    serde_json::to_value(LotteryFile::from(lot)).expect("lottery serializes")
}

fn emit(out: &mut dyn Write, value: &Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Writes `text` to `path` if given, else to stdout.
fn deliver(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}

fn solve_output(inst: &Instance, report: &SolveReport) -> Result<Value> {
    let mut value = report.to_json();
    value["social_welfare"] = json!(format_rational(&social_welfare(inst, &report.lottery)?));
    value["lottery"] = lottery_value(&report.lottery);
    Ok(value)
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve {
            instance,
            method,
            max_iters,
            output,
        } => {
            let inst = load_instance(&instance)?;
            let method = method.unwrap_or(if inst.n() <= DEFAULT_PROFILE_CAP {
                MethodArg::Hull
            } else {
                MethodArg::Fixpoint
            });
            let report = match method {
                MethodArg::Hull => hull_solve(&inst, DEFAULT_PROFILE_CAP)?,
                MethodArg::Fixpoint => match fixpoint_solve(&inst, max_iters)? {
                    FixpointOutcome::Converged(r) => r,
                    FixpointOutcome::NotConverged(nc) => {
                        let trace: Vec<Value> = nc
                            .trace
                            .iter()
                            .map(|rec| {
                                json!({
                                    "weights": rec.weights.as_slice().iter().map(format_rational).collect::<Vec<_>>(),
                                    "envy_arcs": rec.envy_arcs.iter().map(|&(l, h)| [l + 1, h + 1]).collect::<Vec<_>>(),
                                })
                            })
                            .collect();
                        emit(
                            out,
                            &json!({
                                "converged": false,
                                "iterations": nc.iterations,
                                "candidates_tested": nc.candidates_tested,
                                "trace": trace,
                            }),
                        )?;
                        writeln!(err, "fixpoint iteration did not converge")?;
                        return Ok(3);
                    }
                },
            };
            if let Some(path) = &output {
                write_file(path, &report.lottery.to_json())?;
            }
            emit(out, &solve_output(&inst, &report)?)?;
            Ok(0)
        }
        Command::Verify {
            instance,
            lottery,
            mode,
            dump_lp,
        } => {
            let inst = load_instance(&instance)?;
            let lot = load_lottery(&lottery)?;
            let backend = match mode {
                ModeArg::Exact => Backend::Exact,
                ModeArg::Approx => Backend::Approx,
                ModeArg::Auto => Backend::Auto,
            };
            let report = verify(&inst, &lot, backend)?;
            if let Some(path) = &dump_lp {
                write_file(path, &pareto_program(&inst, &lot)?.to_string())?;
            }
            emit(out, &report.to_json())?;
            Ok(if report.passes() { 0 } else { 1 })
        }
        Command::Welfare {
            instance,
            threshold,
            output,
        } => {
            let inst = load_instance(&instance)?;
            let best = max_welfare_ef_po(&inst, DEFAULT_PROFILE_CAP)?;
            if let Some(path) = &output {
                write_file(path, &best.lottery.to_json())?;
            }
            let mut value = json!({
                "social_welfare": format_rational(&best.welfare),
                "normal": best.normal.iter().map(format_rational).collect::<Vec<_>>(),
                "lottery": lottery_value(&best.lottery),
            });
            let code = match &threshold {
                Some(k) => {
                    let meets = &best.welfare >= k;
                    value["threshold"] = json!(format_rational(k));
                    value["meets_threshold"] = json!(meets);
                    if meets {
                        0
                    } else {
                        1
                    }
                }
                None => 0,
            };
            emit(out, &value)?;
            Ok(code)
        }
        Command::Rho { instance } => {
            let re = compute_rho(&load_instance(&instance)?);
            emit(
                out,
                &json!({
                    "rho": format_rational(&re.rho),
                    "epsilon": format_rational(&re.epsilon),
                    "j_size": re.j_size,
                }),
            )?;
            Ok(0)
        }
        Command::GenX3c { phi, output, sidecar } => {
            let phi = X3cInstance::from_json(&read(&phi)?)?;
            let red = generate(&phi)?;
            for w in &red.warnings {
                writeln!(err, "warning: {w}")?;
            }
            let side = red.sidecar_json();
            if let Some(path) = &sidecar {
                write_file(path, &serde_json::to_string_pretty(&side)?)?;
            }
            match &output {
                Some(path) => {
                    write_file(path, &red.instance.to_json())?;
                    emit(
                        out,
                        &json!({
                            "n": red.instance.n(),
                            "m": red.instance.m(),
                            "epsilon": side["epsilon"],
                            "R": side["R"],
                            "Q": side["Q"],
                            "K": side["K"],
                        }),
                    )?;
                }
                None => writeln!(out, "{}", red.instance.to_json())?,
            }
            Ok(0)
        }
        Command::Witness { phi, cover, output } => {
            let phi = X3cInstance::from_json(&read(&phi)?)?;
            if let Some(bad) = cover.iter().find(|&&j| j == 0) {
                return Err(Error::InvalidCover(format!("triple {bad} does not exist; triples are 1-based")));
            }
            let red = generate(&phi)?;
            for w in &red.warnings {
                writeln!(err, "warning: {w}")?;
            }
            let cover: Vec<usize> = cover.iter().map(|j| j - 1).collect();
            let lot = witness_lottery(&red, &cover)?;
            deliver(out, output.as_deref(), &lot.to_json())?;
            Ok(0)
        }
        Command::Decompose {
            instance,
            lottery,
            output,
        } => {
            let inst = load_instance(&instance)?;
            let lot = load_lottery(&lottery)?;
            lot.check_shape(&inst)?;
            let dec = decompose(&lot)?;
            deliver(out, output.as_deref(), &dec.to_json())?;
            Ok(0)
        }
        Command::Sample {
            decomposition,
            seed,
            count,
        } => {
            let dec = BvnDecomposition::from_json(&read(&decomposition)?)?;
            for (k, perm) in Sampler::new(&dec, seed).take(count) {
                let line = json!({
                    "partition": k + 1,
                    "perm": perm.iter().map(|j| j + 1).collect::<Vec<_>>(),
                });
                writeln!(out, "{line}")?;
            }
            Ok(0)
        }
    }
}
