//! `treebolic` command-line driver.
//!
//! Exit status: 0 success, 2 a checked invariant failed, 3 undecided
//! instance, 4 bad input.

mod pebble_out;
mod pipeline;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use treebolic::seq::parse_rational;
use treebolic::Error;

#[derive(Parser)]
#[command(name = "treebolic", version, about = "Embeddings of regular trees, their boundaries and treebolic spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pebble trace along the merged event line, as CSV or JSON.
    Pebble(pebble_out::PebbleArgs),
    /// Decide embeddability and quasiisometry of R(p,q) into R(p',q').
    Decide(DecideArgs),
    /// Build the embedding for a decidable tuple and run every check on it.
    BuildVerify(pipeline::BuildArgs),
    /// Boundary word map of a constructed or saved tree map.
    Boundary(pipeline::BoundaryArgs),
    /// Sampled quasiisometry certificate on the treebolic spaces.
    TreebolicCheck(pipeline::CheckArgs),
}

#[derive(Args)]
struct DecideArgs {
    /// Decide whether BS(1,m) embeds in BS(1,n); takes exactly M N.
    #[arg(long)]
    bs: bool,
    /// P Q P' Q' (or M N with --bs). Edge bases accept `num/den`.
    #[arg(required = true, num_args = 2..=4)]
    values: Vec<String>,
}

#[derive(Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A failure with its exit status.
pub enum Failure {
    /// A checked property did not hold.
    Violation(String),
    Undecided(String),
    BadInput(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 2,
            Failure::Undecided(_) => 3,
            Failure::BadInput(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Violation(m) | Failure::Undecided(m) | Failure::BadInput(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SearchCap { .. } => Failure::Undecided(e.to_string()),
            Error::Ambiguous(_) => Failure::Violation(e.to_string()),
            _ => Failure::BadInput(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::BadInput(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// `p q p' q'` as given on the command line.
#[derive(Args, Clone)]
pub struct Tuple {
    /// P Q P' Q': branching numbers and edge bases of source and target.
    #[arg(num_args = 4, required = true, value_names = ["P", "Q", "P'", "Q'"])]
    values: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Params {
    pub p: u64,
    pub q: BigRational,
    pub p_prime: u64,
    pub q_prime: BigRational,
}

pub fn parse_branching(s: &str) -> CliResult<u64> {
    match s.trim().parse::<u64>() {
        Ok(p) if p >= 2 => Ok(p),
        _ => Err(Failure::BadInput(format!("branching number `{s}` must be an integer >= 2"))),
    }
}

pub fn parse_tuple(values: &[String]) -> CliResult<Params> {
    let [p, q, pp, qq] = values else {
        return Err(Failure::BadInput("expected P Q P' Q'".into()));
    };
    Ok(Params { p: parse_branching(p)?, q: parse_rational(q)?, p_prime: parse_branching(pp)?, q_prime: parse_rational(qq)? })
}

impl Tuple {
    pub fn params(&self) -> CliResult<Params> {
        parse_tuple(&self.values)
    }
}

pub fn check_budget(name: &str, value: usize, max: usize) -> CliResult<()> {
    if value > max {
        return Err(Failure::BadInput(format!("{name} = {value} exceeds the limit {max}")));
    }
    Ok(())
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn decide(args: &DecideArgs) -> CliResult<()> {
    use treebolic::criteria::{decide_bs_embedding, decide_embedding_existence, decide_quasiisometry, Verdict};
    if args.bs {
        let [m, n] = &args.values[..] else {
            return Err(Failure::BadInput("--bs expects M N".into()));
        };
        let (m, n) = (parse_branching(m)?, parse_branching(n)?);
        let (verdict, certificate) = decide_bs_embedding(m, n)?;
        let out = serde_json::json!({ "m": m, "n": n, "verdict": verdict, "certificate": certificate });
        return emit(None, &to_json(&out));
    }
    let t = parse_tuple(&args.values)?;
    let d = decide_embedding_existence(t.p, &t.q, t.p_prime, &t.q_prime)?;
    let qi = decide_quasiisometry(t.p, &t.q, t.p_prime, &t.q_prime)?;
    let out = serde_json::json!({
        "p": t.p,
        "q": treebolic::seq::fmt_rational(&t.q),
        "p_prime": t.p_prime,
        "q_prime": treebolic::seq::fmt_rational(&t.q_prime),
        "verdict": d.verdict,
        "certificate": d.certificate,
        "ratio": d.ratio,
        "quasiisometry": qi,
    });
    emit(None, &to_json(&out))?;
    if d.verdict == Verdict::Undecided {
        return Err(Failure::Undecided(format!("undecided at {} bits", d.ratio.precision_bits)));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Pebble(a) => pebble_out::run(&a),
        Command::Decide(a) => decide(&a),
        Command::BuildVerify(a) => pipeline::build_verify(&a),
        Command::Boundary(a) => pipeline::boundary(&a),
        Command::TreebolicCheck(a) => pipeline::treebolic_check(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("treebolic: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
