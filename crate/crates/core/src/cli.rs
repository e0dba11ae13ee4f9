//! Command-line front end. `run` is the whole program minus process exit so
//! it can be driven from tests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::algebra::Ptm;
use crate::analysis::{compare_costs, sweep, write_csv, write_json, SweepRow};
use crate::canonical::{canonical_unitary, pauli_coefficients, ThetaVector};
use crate::circuit::{exact_expectation, Circuit};
use crate::decomposition::{decompose, reconstruct_ptm, DecompositionDoc, QpDecomposition};
use crate::observable::Observable;
use crate::sampler::{estimate_with_cache, plan_shots, DecompositionCache, EstimatorConfig, MeasureMode, ShotBudget};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;

/// Largest PTM deviation `verify` accepts.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "quasicut", version, about = "Quasiprobability simulation of cut two-qubit gates")]
pub struct Cli {
    /// Write output to FILE instead of stdout.
    #[arg(short, long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Angles {
    /// θ₁ in radians
    #[arg(allow_negative_numbers = true)]
    pub theta1: f64,
    /// θ₂ in radians
    #[arg(allow_negative_numbers = true)]
    pub theta2: f64,
    /// θ₃ in radians
    #[arg(allow_negative_numbers = true)]
    pub theta3: f64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the local decomposition of exp[i Σ θ_α σ_α⊗σ_α] as JSON.
    Decompose {
        #[command(flatten)]
        angles: Angles,
    },
    /// Check that a decomposition reproduces the gate's transfer matrix.
    Verify {
        #[command(flatten)]
        angles: Angles,
        /// Check this decomposition document instead of the built-in one.
        #[arg(long, value_name = "FILE")]
        from_file: Option<PathBuf>,
    },
    /// Estimate ⟨O⟩ for a circuit with cut gates.
    Estimate {
        circuit: PathBuf,
        observable: PathBuf,
        #[arg(long, conflicts_with_all = ["epsilon", "delta"], required_unless_present_all = ["epsilon", "delta"])]
        shots: Option<u64>,
        #[arg(long, requires = "delta")]
        epsilon: Option<f64>,
        #[arg(long, requires = "epsilon")]
        delta: Option<f64>,
        #[arg(long, env = "QUASICUT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::ExactTrace)]
        mode: ModeArg,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// JSON object mapping cut gate indices to decomposition documents.
        #[arg(long, value_name = "FILE")]
        decompositions: Option<PathBuf>,
    },
    /// Hoeffding shot count for accuracy ε with confidence 1 − δ.
    Plan {
        epsilon: f64,
        delta: f64,
        o_max: f64,
        #[arg(value_name = "W")]
        w: f64,
    },
    /// W, legacy cost and G over a grid of the Weyl chamber.
    Sweep {
        #[arg(value_parser = clap::value_parser!(u32).range(2..))]
        resolution: u32,
        #[arg(long)]
        json: bool,
    },
    /// W, legacy cost and G at one point.
    Compare {
        #[command(flatten)]
        angles: Angles,
        #[arg(long)]
        json: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    ExactTrace,
    EigenvalueSample,
}

impl From<ModeArg> for MeasureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ExactTrace => MeasureMode::ExactTrace,
            ModeArg::EigenvalueSample => MeasureMode::EigenvalueSample,
        }
    }
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }

    fn semantic(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_SEMANTIC, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Sampler(_) => Failure::semantic(e),
            _ => Failure::usage(e),
        }
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(rendered.as_bytes()) } else { stdout.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|out| {
        match &cli.output {
            Some(path) => fs::write(path, &out.text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
            None => stdout.write_all(out.text.as_bytes()).map_err(Failure::usage)?,
        }
        Ok(out.code)
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn theta_of(a: &Angles) -> Result<ThetaVector, Failure> {
    ThetaVector::new(a.theta1, a.theta2, a.theta3).map_err(Failure::usage)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn execute(cmd: &Command) -> Result<Output, Failure> {
    match cmd {
        Command::Decompose { angles } => {
            let theta = theta_of(angles)?;
            let d = decompose(&pauli_coefficients(&theta)).map_err(Failure::semantic)?;
            Ok(Output::ok(d.to_json() + "\n"))
        }
        Command::Verify { angles, from_file } => {
            let theta = theta_of(angles)?;
            let d = match from_file {
                Some(path) => QpDecomposition::from_json(&read(path)?)?,
                None => decompose(&pauli_coefficients(&theta)).map_err(Failure::semantic)?,
            };
            let target = Ptm::from_unitary(&canonical_unitary(&theta)).expect("canonical gate is a two-qubit unitary");
            let got = reconstruct_ptm(&d);
            let deviation = if got.num_qubits() == 2 { got.max_abs_diff(&target) } else { f64::INFINITY };
            let passed = deviation < VERIFY_TOL;
            let report = json!({
                "theta": theta.0,
                "W": d.weight(),
                "terms": d.terms().len(),
                "max_deviation": if deviation.is_finite() { json!(deviation) } else { Value::Null },
                "passed": passed,
            });
            Ok(Output { text: pretty(&report), code: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED } })
        }
        Command::Estimate { circuit, observable, shots, epsilon, delta, seed, mode, threads, decompositions } => {
            let c = Circuit::from_json(&read(circuit)?)?;
            let o = Observable::from_json(&read(observable)?)?;
            c.check_observable(&o).map_err(Failure::semantic)?;
            let cache = match decompositions {
                Some(path) => load_decompositions(path)?,
                None => DecompositionCache::for_circuit(&c),
            };
            let budget = match (shots, epsilon, delta) {
                (Some(s), _, _) => ShotBudget::Fixed(*s),
                (None, Some(epsilon), Some(delta)) => ShotBudget::Target { epsilon: *epsilon, delta: *delta },
                _ => return Err(Failure::usage("either --shots or both --epsilon and --delta are required")),
            };
            let cfg = EstimatorConfig { budget, seed: *seed, measure_mode: (*mode).into() };
            let run = || estimate_with_cache(&c, &o, &cache, &cfg);
            let result = match threads {
                Some(k) => rayon::ThreadPoolBuilder::new()
                    .num_threads(*k)
                    .build()
                    .map_err(Failure::usage)?
                    .install(run),
                None => run(),
            }
            .map_err(|e| Failure::from(Error::from(e)))?;
            let exact = exact_expectation(&c, &o).map_err(Failure::semantic)?;
            let mut doc = serde_json::to_value(&result).expect("result serializes");
            doc["mode"] = serde_json::to_value(MeasureMode::from(*mode)).expect("mode serializes");
            doc["exact"] = json!(exact);
            Ok(Output::ok(pretty(&doc)))
        }
        Command::Plan { epsilon, delta, o_max, w } => {
            let s = plan_shots(*epsilon, *delta, *o_max, *w).map_err(Failure::usage)?;
            Ok(Output::ok(format!("{s}\n")))
        }
        Command::Sweep { resolution, json } => Ok(Output::ok(rows_text(&sweep(*resolution as usize), *json)?)),
        Command::Compare { angles, json } => {
            let theta = theta_of(angles)?;
            Ok(Output::ok(rows_text(&[compare_costs(&theta)], *json)?))
        }
    }
}

fn rows_text(rows: &[SweepRow], as_json: bool) -> Result<String, Failure> {
    let mut buf = Vec::new();
    if as_json {
        write_json(rows, &mut buf).map_err(Failure::usage)?;
        buf.push(b'\n');
    } else {
        write_csv(rows, &mut buf).map_err(Failure::usage)?;
    }
    Ok(String::from_utf8(buf).expect("utf-8 output"))
}

fn load_decompositions(path: &Path) -> Result<DecompositionCache, Failure> {
    let docs: BTreeMap<String, DecompositionDoc> = serde_json::from_str(&read(path)?).map_err(Error::from)?;
    let mut cache = DecompositionCache::new();
    for (key, doc) in docs {
        let gate: usize = key.parse().map_err(|_| Failure::usage(format!("bad gate index {key:?}")))?;
        let d = QpDecomposition::try_from(doc).map_err(Error::from)?;
        cache.insert(gate, d);
    }
    Ok(cache)
}
