//! Command-line front end: argument parsing, dispatch and exit codes.

pub mod commands;
pub mod report;
pub mod selftest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use lieze_core::parser::AnsatzDegrees;
use lieze_core::Error;

use commands::{Input, Options};

type Runner = fn(&Input, &Options) -> lieze_core::Result<report::Report>;

#[derive(Debug, Parser)]
#[command(
    name = "lieze",
    version,
    about = "Lie point symmetries, reductions and solution checks for polynomial PDEs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the determining equations within the polynomial ansatz.
    Symmetries(Args),
    /// Commutator table of the declared or computed generators.
    Commute(Args),
    /// Apply similarity substitutions and compare with reference equations.
    Reduce(Args),
    /// Evaluate the equation on closed-form solutions.
    Verify(Args),
    /// Run every acceptance check on the bundled or given problem.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    pub file: PathBuf,
    /// Degrees of the ansatz in the independent and dependent variables.
    #[arg(long, value_name = "D1,D2", value_parser = parse_ansatz)]
    pub ansatz: Option<AnsatzDegrees>,
    #[arg(long, value_name = "NAME")]
    pub subst: Option<String>,
    /// Also run the second stage of each substitution.
    #[arg(long)]
    pub stage2: bool,
    #[arg(long, value_name = "NAME", conflicts_with = "all")]
    pub solution: Option<String>,
    #[arg(long)]
    pub all: bool,
    /// Move the solutions along a generator's flow first.
    #[arg(long, value_name = "GEN:EPS")]
    pub transform: Option<String>,
    /// Problem file holding the reference fields or commutator table.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, clap::Args)]
pub struct SelftestArgs {
    pub file: Option<PathBuf>,
    /// Same as `--format json`.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub common: Common,
}

fn parse_ansatz(s: &str) -> Result<AnsatzDegrees, String> {
    let (a, b) = s.split_once(',').ok_or("expected D1,D2")?;
    let degree = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad degree '{t}': {e}"));
    Ok(AnsatzDegrees {
        independent: degree(a)?,
        dependent: degree(b)?,
    })
}

fn options(args: &Args) -> Result<Options, Error> {
    Ok(Options {
        ansatz: args.ansatz,
        subst: args.subst.clone(),
        stage2: args.stage2,
        solution: args.solution.clone(),
        all: args.all,
        transform: args.transform.clone(),
        reference: args.reference.as_deref().map(Input::read).transpose()?,
        seed: args.common.seed,
        tol: args.common.tol,
        points: args.common.points,
    })
}

/// Output destined for standard output and the process exit status.
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn failure(e: &Error) -> Outcome {
    Outcome {
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
        code: e.exit_code(),
    }
}

pub fn execute(cli: Cli) -> Outcome {
    let (args, run): (&Args, Runner) = match &cli.command {
        Command::Symmetries(a) => (a, commands::symmetries),
        Command::Commute(a) => (a, commands::commute),
        Command::Reduce(a) => (a, commands::reduce),
        Command::Verify(a) => (a, commands::verify),
        Command::Selftest(a) => return run_selftest(a),
    };
    let result = options(args).and_then(|o| {
        let input = Input::read(&args.file)?;
        run(&input, &o)
    });
    match result {
        Ok(r) => Outcome {
            stdout: match args.common.format {
                Format::Text => r.to_text(),
                Format::Json => r.to_json(),
            },
            stderr: String::new(),
            code: 0,
        },
        Err(e) => failure(&e),
    }
}

fn run_selftest(a: &SelftestArgs) -> Outcome {
    let opts = Options {
        seed: a.common.seed,
        tol: a.common.tol,
        points: a.common.points,
        ..Options::default()
    };
    let input = match a.file.as_deref().map(Input::read).transpose() {
        Ok(i) => i,
        Err(e) => return failure(&e),
    };
    let summary = match selftest::run(input.as_ref(), &opts) {
        Ok(s) => s,
        Err(e) => return failure(&e),
    };
    let stdout = if a.json || a.common.format == Format::Json {
        summary.to_json()
    } else {
        summary.to_text()
    };
    let (stderr, code) = match summary.first_failure() {
        Some(c) => (format!("selftest failed: criterion {} ({})\n", c.id, c.name), 1),
        None => (String::new(), 0),
    };
    Outcome { stdout, stderr, code }
}

/// Parses the process arguments, runs the command and returns the exit
/// status. Panics inside the engine become exit status 3.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match std::panic::catch_unwind(|| execute(cli)) {
        Ok(o) => o,
        Err(_) => Outcome {
            stdout: String::new(),
            stderr: "error: internal failure\n".into(),
            code: 3,
        },
    };
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    outcome.code
}
