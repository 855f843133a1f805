//! `dualax`: Lax matrices, action-angle duality maps, exact flows and batch
//! verification for the hyperbolic Sutherland and rational Ruijsenaars models.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dualax::duality::dual;
use dualax::dynamics::{sample_trajectory, FlowSpec};
use dualax::io;
use dualax::kernel::eigh_desc;
use dualax::model::{lax_rs, lax_suth, Coupling, HamiltonianId, ModelState};
use dualax::verify::{run_all, Tolerances, VerifyConfig};
use dualax::Error;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(name = "dualax", version, about = "Sutherland / Ruijsenaars action-angle duality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lax matrix of a state with its eigenvalues, descending.
    Lax(StateArgs),
    /// Maps a state to the dual model.
    Map {
        #[command(flatten)]
        state: StateArgs,
        /// Expected direction; rejected when it does not match the state's model.
        #[arg(long, value_enum)]
        direction: Option<Direction>,
    },
    /// Samples an exact Hamiltonian flow.
    Flow {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, allow_hyphen_values = true)]
        index: i32,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Action variables: eigenvalues of the state's own Lax matrix, descending.
    Spectrum(StateArgs),
    /// Runs the seeded verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct StateArgs {
    /// State JSON file, or an inline JSON document.
    #[arg(long)]
    state: String,
    /// Coupling; overrides the state's own `kappa`.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Particle numbers, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 5])]
    n: Vec<usize>,
    /// Couplings, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![0.5, 1.0, 2.0])]
    kappa: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Tolerance override `NAME=VALUE`, repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    #[value(name = "s1-to-s2")]
    S1ToS2,
    #[value(name = "s2-to-s1")]
    S2ToS1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "H")]
    H,
    #[value(name = "Hhat")]
    Hhat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_degeneracy() { EXIT_DEGENERATE } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Writes to stdout, or atomically to `path` through a sibling temporary file.
fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| input_error(format!("stdout: {e}")))
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            tmp.write_all(text.as_bytes())
                .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            tmp.persist(path)
                .map_err(|e| input_error(format!("{}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

fn load_state(args: &StateArgs) -> Result<(ModelState<f64>, Coupling<f64>), Failure> {
    let text = if args.state.trim_start().starts_with('{') {
        args.state.clone()
    } else {
        std::fs::read_to_string(&args.state).map_err(|e| input_error(format!("{}: {e}", args.state)))?
    };
    let file = io::parse_state(&text)?;
    let kappa = args
        .kappa
        .or(file.kappa)
        .ok_or_else(|| input_error("no coupling: pass --kappa or set kappa in the state"))?;
    let c = Coupling::new(kappa, file.state.n())?;
    Ok((file.state, c))
}

fn lax_matrix(s: &ModelState<f64>, c: &Coupling<f64>) -> Result<dualax::Mat64, Failure> {
    Ok(match s {
        ModelState::Sutherland(x) => lax_suth(x, c)?,
        ModelState::Rs(x) => lax_rs(x, c)?,
    })
}

fn cmd_lax(args: &StateArgs) -> Result<(), Failure> {
    let (s, c) = load_state(args)?;
    let l = lax_matrix(&s, &c)?;
    let e = eigh_desc(&l)?;
    emit(args.output.as_deref(), &io::to_json_string(&io::lax_to_json(&l, &e.values)))
}

fn cmd_spectrum(args: &StateArgs) -> Result<(), Failure> {
    let (s, c) = load_state(args)?;
    let e = eigh_desc(&lax_matrix(&s, &c)?)?;
    let doc = json!({ "eigenvalues": e.values });
    emit(args.output.as_deref(), &io::to_json_string(&doc))
}

fn cmd_map(args: &StateArgs, direction: Option<Direction>) -> Result<(), Failure> {
    let (s, c) = load_state(args)?;
    match (direction, &s) {
        (Some(Direction::S1ToS2), ModelState::Rs(_)) => {
            return Err(input_error("direction s1-to-s2 needs a sutherland state"))
        }
        (Some(Direction::S2ToS1), ModelState::Sutherland(_)) => {
            return Err(input_error("direction s2-to-s1 needs an rs state"))
        }
        _ => {}
    }
    let (image, k, residuals) = dual(&s, &c)?;
    let doc = io::duality_result_to_json(&image, c.kappa(), &k, &residuals);
    emit(args.output.as_deref(), &io::to_json_string(&doc))
}

fn cmd_flow(args: &StateArgs, family: FamilyArg, index: i32, t: f64, steps: usize, format: Format) -> Result<(), Failure> {
    let (s, c) = load_state(args)?;
    let hamiltonian = match family {
        FamilyArg::H => HamiltonianId::h(index),
        FamilyArg::Hhat => HamiltonianId::h_hat(index),
    };
    let spec = FlowSpec { hamiltonian, t, steps };
    let traj = sample_trajectory(&s, &c, &spec)?;
    if let Some(first) = traj.skipped.first() {
        let times: Vec<String> = traj.skipped.iter().map(|k| io::format_sci(k.time)).collect();
        return Err(Failure {
            code: EXIT_DEGENERATE,
            message: format!("collision at t = {} ({})", times.join(", "), first.reason),
        });
    }
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_trajectory_csv(&traj, &s, &mut buf)?;
            String::from_utf8(buf).expect("CSV output is ASCII")
        }
        Format::Json => {
            let samples: Vec<Value> = traj
                .times
                .iter()
                .zip(&traj.states)
                .zip(&traj.conserved)
                .map(|((t, x), h)| json!({ "t": t, "state": io::state_to_json(x, None), "conserved": h }))
                .collect();
            io::to_json_string(&json!({ "kappa": c.kappa(), "samples": samples }))
        }
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let mut tolerances = Tolerances::from_env()?;
    for spec in &args.tol {
        tolerances.apply_override(spec)?;
    }
    let config = VerifyConfig {
        n_list: args.n.clone(),
        kappa_list: args.kappa.clone(),
        samples: args.samples,
        seed: args.seed,
        tolerances,
        jobs: args.jobs,
    };
    let report = run_all(&config)?;
    emit(args.output.as_deref(), &io::to_json_string(&io::report_to_json(&report)))?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Lax(a) => cmd_lax(a).map(|_| true),
        Command::Spectrum(a) => cmd_spectrum(a).map(|_| true),
        Command::Map { state, direction } => cmd_map(state, *direction).map(|_| true),
        Command::Flow {
            state,
            family,
            index,
            t,
            steps,
            format,
        } => cmd_flow(state, *family, *index, *t, *steps, *format).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("dualax: verification failed");
            ExitCode::from(EXIT_VERIFY_FAILED)
        }
        Err(f) => {
            eprintln!("dualax: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
