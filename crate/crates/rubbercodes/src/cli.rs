//! Command-line front end.
//!
//! Exit codes: 0 success, 1 counterexample or failed decode, 2 search cap
//! exceeded, 64 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::bounds::{emit_curves, r_mr, rates_grid};
use crate::channel::{ChannelKind, Direction, ErrorPattern, Symbol};
use crate::codec::{unidirectional_target_capacity, CodeParams, Method};
use crate::rubber::{round_trip, RoundTrip, RubberError};
use crate::verify::{
    log2_big, measure_rate, random_round_trip, trial_rng, verify_exhaustive, Outcome, VerifyError,
    VerifyOptions, DEFAULT_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CAP: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "rubbercodes",
    version,
    about = "Feedback codes with rubber symbols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every message against every adaptive adversary.
    Verify(VerifyArgs),
    /// Run one block and print its trace.
    Simulate(SimulateArgs),
    /// Print the message count and rate.
    Count(CodeArgs),
    /// Write rate curves as CSV.
    Rates(RatesArgs),
}

#[derive(Debug, Args)]
struct CodeArgs {
    /// rubber1, rubberr, modified, lebedev, unidir or broken.
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Alphabet size.
    #[arg(long)]
    q: usize,
    /// Block length.
    #[arg(long)]
    n: usize,
    /// Error budget per block.
    #[arg(long)]
    t: usize,
    /// Rubber run length.
    #[arg(long)]
    r: Option<usize>,
    /// Information zeros (lebedev).
    #[arg(long, default_value_t = 0)]
    z: usize,
    /// Channel: sym, z, invz or unidir. Defaults to the method's channel.
    #[arg(long)]
    channel: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Maximum number of adversary leaves.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Down,
    Up,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Message index.
    #[arg(long)]
    message: String,
    /// `none`, `random:<seed>` or `pos:symbol,...` with 1-based positions.
    #[arg(long, default_value = "none")]
    errors: String,
    /// Error direction for unidirectional codes.
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long)]
    q: usize,
    /// Largest run length for the rubber and multi-run curves.
    #[arg(long)]
    r_max: usize,
    /// Spacing of the tau grid on [0, 1/2].
    #[arg(long, default_value_t = 0.001)]
    grid_step: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
        .map_err(|e: crate::codec::CodecError| e.to_string())
}

/// Adversary given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorSpec {
    None,
    Random(u64),
    /// Zero-based positions.
    Explicit(Vec<(usize, Symbol)>),
}

/// Parses `none`, `random:<seed>` or `p1:y1,p2:y2` (positions 1-based).
pub fn parse_error_spec(spec: &str) -> Result<ErrorSpec, String> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "none" {
        return Ok(ErrorSpec::None);
    }
    if let Some(seed) = spec.strip_prefix("random:") {
        return seed
            .parse()
            .map(ErrorSpec::Random)
            .map_err(|_| format!("bad seed `{seed}`"));
    }
    let mut out = Vec::new();
    for item in spec.split(',') {
        let (p, y) = item
            .split_once(':')
            .ok_or_else(|| format!("expected pos:symbol, got `{item}`"))?;
        let p: usize = p
            .trim()
            .parse()
            .map_err(|_| format!("bad position `{p}`"))?;
        let y: Symbol = y.trim().parse().map_err(|_| format!("bad symbol `{y}`"))?;
        if p == 0 {
            return Err("positions start at 1".into());
        }
        out.push((p - 1, y));
    }
    Ok(ErrorSpec::Explicit(out))
}

fn build_params(a: &CodeArgs) -> Result<CodeParams, String> {
    let mut p = CodeParams::new(a.method, a.q, a.n, a.t).with_z(a.z);
    if let Some(r) = a.r {
        p = p.with_r(r);
    }
    if let Some(tok) = &a.channel {
        let kind =
            ChannelKind::from_token(tok, a.q).ok_or_else(|| format!("unknown channel `{tok}`"))?;
        p = p.on(kind);
    }
    p.skeleton_len().map_err(|e| e.to_string())?;
    Ok(p)
}

fn describe(p: &CodeParams) -> String {
    let mut s = format!(
        "method={} q={} n={} t={} r={} channel={}",
        p.method,
        p.q,
        p.n,
        p.t,
        p.r,
        p.channel.token()
    );
    if p.method == Method::Lebedev {
        s.push_str(&format!(" z={}", p.z));
    }
    s
}

fn join(symbols: &[Symbol]) -> String {
    symbols
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes a transcript, one step per line, then the verdict.
pub fn write_trace(out: &mut dyn Write, rt: &RoundTrip) -> std::io::Result<()> {
    for s in &rt.transcript.steps {
        writeln!(
            out,
            "step={} sent={} received={} kind={} stack=[{}]",
            s.position + 1,
            s.sent,
            s.received,
            s.kind,
            join(&s.stack)
        )?;
    }
    match &rt.decoded {
        Ok(d) if *d == rt.message => writeln!(out, "OK message={} decoded={}", rt.message, d),
        Ok(d) => writeln!(out, "FAIL message={} decoded={}", rt.message, d),
        Err(e) => writeln!(out, "FAIL message={} decoded=none ({e})", rt.message),
    }
}

/// Re-runs one block under `spec` and prints the trace.
pub fn replay(
    params: &CodeParams,
    message: &BigUint,
    spec: &ErrorSpec,
    direction: Option<Direction>,
) -> Result<RoundTrip, VerifyError> {
    match spec {
        ErrorSpec::Random(seed) => {
            let mut rng = trial_rng(*seed, 0);
            random_round_trip(params, message, direction, &mut rng)
        }
        ErrorSpec::None | ErrorSpec::Explicit(_) => {
            let overrides = match spec {
                ErrorSpec::Explicit(v) => v.clone(),
                _ => Vec::new(),
            };
            let pattern = ErrorPattern::new(params.n, overrides, params.t)
                .map_err(RubberError::from)?
                .with_direction(direction.unwrap_or(Direction::Down));
            Ok(round_trip(params, message, &pattern)?)
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn parse_and_dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Verify(a) => run_verify(&a, out, err),
        Command::Simulate(a) => run_simulate(&a, out),
        Command::Count(a) => run_count(&a, out),
        Command::Rates(a) => run_rates(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

type CmdResult = Result<i32, String>;

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn run_count(a: &CodeArgs, out: &mut dyn Write) -> CmdResult {
    let p = build_params(a)?;
    let (m, rate) = measure_rate(&p).map_err(|e| e.to_string())?;
    writeln!(out, "M={m} rate={rate:.6}").map_err(io)?;
    Ok(EXIT_OK)
}

fn run_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let p = build_params(&a.code)?;
    let options = VerifyOptions {
        jobs: a.jobs,
        cap: a.cap,
    };
    let report = match verify_exhaustive(&p, options) {
        Ok(r) => r,
        Err(e @ VerifyError::CapExceeded { .. }) => {
            writeln!(err, "error: {e}").map_err(io)?;
            return Ok(EXIT_CAP);
        }
        Err(e) => return Err(e.to_string()),
    };
    let (_, rate) = measure_rate(&p).map_err(|e| e.to_string())?;
    writeln!(out, "{}", describe(&p)).map_err(io)?;
    writeln!(
        out,
        "messages={} rate={rate:.6} leaves={} towards_rubber_leaves={} min_slack={} elapsed={:.3}s",
        report.messages,
        report.leaves,
        report.towards_rubber_leaves,
        report.min_slack.map_or("-".into(), |s| s.to_string()),
        report.elapsed.as_secs_f64()
    )
    .map_err(io)?;
    if p.method == Method::Unidirectional {
        let target = unidirectional_target_capacity(&p).map_err(|e| e.to_string())?;
        let target_rate = log2_big(&target) / (p.q as f64).log2() / p.n as f64;
        let tau = p.t as f64 / p.n as f64;
        writeln!(
            out,
            "target_messages={target} target_rate={target_rate:.6} shortfall={:.6} r_mr={:.6}",
            target_rate - rate,
            r_mr(tau, p.q, p.r.max(2))
        )
        .map_err(io)?;
    }
    match report.outcome {
        Outcome::Verified => {
            writeln!(out, "VERIFIED").map_err(io)?;
            Ok(EXIT_OK)
        }
        Outcome::Counterexample(c) => {
            let decoded = match &c.decoded {
                Ok(s) => format!("[{}]", join(s)),
                Err(e) => format!("none ({e})"),
            };
            let direction = c
                .direction
                .map(|d| format!(" --direction {d}"))
                .unwrap_or_default();
            writeln!(
                out,
                "COUNTEREXAMPLE message={} skeleton=[{}] errors={} decoded={decoded}",
                c.message,
                join(&c.skeleton),
                c.errors_spec()
            )
            .map_err(io)?;
            writeln!(
                out,
                "replay: rubbercodes simulate --method {} --q {} --n {} --t {} --r {} --z {} --channel {} --message {} --errors {}{direction}",
                p.method,
                p.q,
                p.n,
                p.t,
                p.r,
                p.z,
                p.channel.token(),
                c.message,
                c.errors_spec()
            )
            .map_err(io)?;
            Ok(EXIT_FAIL)
        }
    }
}

fn run_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let p = build_params(&a.code)?;
    let message: BigUint = a
        .message
        .parse()
        .map_err(|_| format!("bad message `{}`", a.message))?;
    let spec = parse_error_spec(&a.errors)?;
    let direction = a.direction.map(|d| match d {
        DirectionArg::Down => Direction::Down,
        DirectionArg::Up => Direction::Up,
    });
    let rt = replay(&p, &message, &spec, direction).map_err(|e| e.to_string())?;
    writeln!(
        out,
        "{} message={} errors={}",
        describe(&p),
        message,
        a.errors
    )
    .map_err(io)?;
    write_trace(out, &rt).map_err(io)?;
    Ok(if rt.ok() { EXIT_OK } else { EXIT_FAIL })
}

fn run_rates(a: &RatesArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if a.q < 2 {
        return Err("q must be at least 2".into());
    }
    if !(a.grid_step > 0.0 && a.grid_step <= 0.5) {
        return Err("grid step must lie in (0, 0.5]".into());
    }
    let csv = emit_curves(a.q, a.r_max, &rates_grid(a.q, a.r_max, a.grid_step)).to_csv();
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
            writeln!(err, "wrote {}", path.display()).map_err(io)?;
        }
        None => out.write_all(csv.as_bytes()).map_err(io)?,
    }
    Ok(EXIT_OK)
}
