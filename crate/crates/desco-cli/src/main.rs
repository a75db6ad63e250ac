//! Command-line front end for the streaming-erasure-code library: build code
//! descriptors, replay burst scenarios into CSV, and evaluate the
//! two-receiver rate limits.
//!
//! Subcommands mirror the library entry points one-to-one. Every flag can
//! also come from a JSON config file (`--config`); explicit flags win.
//! Identical invocations produce byte-identical output.
//!
//! Exit codes: 0 success/certified, 2 construction or certification failure,
//! 3 bad parameters, unusable files, or I/O errors.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use desco::{
    capacity, ccsco_construct, converse_rate_bound, desco_construct, expanded_musco_construct,
    iasco_construct, sweep, t2_star, write_sweep_csv, AnyCode, Error, Field,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "desco",
    version,
    about = "Streaming erasure codes for burst channels: construct, sweep, and rate tools"
)]
struct Cli {
    /// JSON file supplying defaults for any flag of the chosen subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code and print its JSON descriptor to stdout.
    Construct(ConstructArgs),
    /// Replay every burst scenario for one receiver and write per-cell
    /// recovery delays as CSV.
    Sweep(SweepArgs),
    /// Settle the rate for a pair of receiver contracts.
    Capacity(CapacityArgs),
    /// Best achievable rate once the weak receiver's deadline is squeezed.
    Converse(ConverseArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Strong receiver's burst length B1.
    #[arg(long)]
    b1: Option<usize>,
    /// Strong receiver's delay T1.
    #[arg(long)]
    t1: Option<usize>,
    /// Burst ratio alpha = B2/B1 between the receivers.
    #[arg(long)]
    alpha: Option<usize>,
    /// Coefficient field GF(2^m) with m in 1..=8 [default: 8].
    #[arg(long, value_name = "M")]
    field_bits: Option<u8>,
    /// Construction family [default: desco].
    #[arg(long, value_enum)]
    kind: Option<Kind>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    /// Embedded code: one combined parity stream serves both receivers.
    Desco,
    /// Concatenation of the two single-user codes, contracts (B1,T1) and
    /// (alpha*B1, alpha*T1).
    Ccsco,
    /// Interference-avoidance combining of a slope-1 and a slope-alpha code.
    Iasco,
    /// Packet expansion of the embedded (2,3) code; serves {(1,2),(2,4)}.
    Expanded,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON code descriptor, as printed by `construct`.
    #[arg(long, value_name = "FILE")]
    code: Option<PathBuf>,
    /// Receiver to replay, 1-based.
    #[arg(long)]
    user: Option<usize>,
    /// Decode horizon override; must cover one burst period plus the
    /// receiver's decoding window.
    #[arg(long)]
    horizon: Option<i64>,
    /// Output CSV path.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    /// First receiver's burst length.
    #[arg(long)]
    b1: Option<usize>,
    /// First receiver's delay.
    #[arg(long)]
    t1: Option<usize>,
    /// Second receiver's burst length (a multiple of --b1).
    #[arg(long)]
    b2: Option<usize>,
    /// Second receiver's delay.
    #[arg(long)]
    t2: Option<usize>,
}

#[derive(Args)]
struct ConverseArgs {
    /// Strong receiver's burst length B.
    #[arg(long)]
    b: Option<usize>,
    /// Strong receiver's delay T.
    #[arg(long)]
    t: Option<usize>,
    /// Burst ratio alpha = B2/B.
    #[arg(long)]
    alpha: Option<usize>,
    /// Weak receiver's deadline T2.
    #[arg(long)]
    t2: Option<i64>,
}

/// Flat key space shared by every subcommand; each command reads the keys it
/// understands and ignores the rest, so one file can configure a pipeline.
#[derive(Default, Deserialize)]
struct ConfigFile {
    b1: Option<usize>,
    t1: Option<usize>,
    alpha: Option<usize>,
    field_bits: Option<u8>,
    kind: Option<Kind>,
    code: Option<PathBuf>,
    user: Option<usize>,
    horizon: Option<i64>,
    out: Option<PathBuf>,
    b: Option<usize>,
    t: Option<usize>,
    b2: Option<usize>,
    t2: Option<i64>,
}

/// Failures split by exit code: bad input (3) vs. an honest negative
/// verdict from a construction or sweep (2).
enum Failure {
    Usage(String),
    NotCertified(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn lib_err(e: Error) -> Failure {
    match e {
        Error::InvalidParameters(_) => Failure::Usage(e.to_string()),
        _ => Failure::NotCertified(e.to_string()),
    }
}

fn req<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| {
        usage(format!(
            "{flag} is required (pass the flag or a config key)"
        ))
    })
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn run_construct(args: ConstructArgs, cfg: ConfigFile) -> Result<(), Failure> {
    let b1 = req(args.b1.or(cfg.b1), "--b1")?;
    let t1 = req(args.t1.or(cfg.t1), "--t1")?;
    let alpha = req(args.alpha.or(cfg.alpha), "--alpha")?;
    let bits = args.field_bits.or(cfg.field_bits).unwrap_or(8);
    let kind = args.kind.or(cfg.kind).unwrap_or(Kind::Desco);
    if !(1..=8).contains(&bits) {
        return Err(usage(format!("--field-bits must be in 1..=8, got {bits}")));
    }
    let field = Field::new(bits);
    let code = match kind {
        Kind::Desco => AnyCode::Desco(desco_construct(field, b1, t1, alpha).map_err(lib_err)?),
        Kind::Ccsco => {
            if alpha < 2 {
                return Err(usage(format!("--alpha must be at least 2, got {alpha}")));
            }
            let contracts = [(b1, t1), (alpha * b1, alpha * t1)];
            AnyCode::Ccsco(ccsco_construct(field, &contracts).map_err(lib_err)?)
        }
        Kind::Iasco => {
            AnyCode::Iasco(iasco_construct(field, b1, t1, alpha, None).map_err(lib_err)?)
        }
        Kind::Expanded => {
            if (b1, t1, alpha) != (1, 2, 2) {
                return Err(usage(
                    "the packet-expansion construction serves exactly the {(1,2),(2,4)} \
                     contract pair; pass --b1 1 --t1 2 --alpha 2",
                ));
            }
            AnyCode::Expanded(expanded_musco_construct(field).map_err(lib_err)?)
        }
    };
    let text = serde_json::to_string_pretty(&code).map_err(|e| usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run_sweep(args: SweepArgs, cfg: ConfigFile) -> Result<(), Failure> {
    let path = req(args.code.or(cfg.code), "--code")?;
    let user = req(args.user.or(cfg.user), "--user")?;
    let horizon = args.horizon.or(cfg.horizon);
    let out = req(args.out.or(cfg.out), "--out")?;

    let text = fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let code: AnyCode =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if user == 0 || user > code.num_users() {
        return Err(usage(format!(
            "--user must be in 1..={}, got {user}",
            code.num_users()
        )));
    }

    let outcome = sweep(&code, user - 1, horizon).map_err(lib_err)?;
    let file = fs::File::create(&out)
        .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
    write_sweep_csv(io::BufWriter::new(file), &outcome.rows)
        .map_err(|e| usage(format!("{}: {e}", out.display())))?;

    if outcome.all_within_contract {
        Ok(())
    } else {
        let (burst, delay) = code.contract(user - 1).map_err(lib_err)?;
        Err(Failure::NotCertified(format!(
            "user {user} does not clear burst {burst} within delay {delay}; rows in {}",
            out.display()
        )))
    }
}

fn run_capacity(args: CapacityArgs, cfg: ConfigFile) -> Result<(), Failure> {
    let b1 = req(args.b1.or(cfg.b1), "--b1")?;
    let t1 = req(args.t1.or(cfg.t1), "--t1")?;
    let b2 = req(args.b2.or(cfg.b2), "--b2")?;
    let t2 = match args.t2 {
        Some(v) => v,
        None => {
            let raw = req(cfg.t2, "--t2")?;
            usize::try_from(raw)
                .map_err(|_| usage(format!("--t2 must be non-negative, got {raw}")))?
        }
    };

    let (region, rate) = capacity(b1, t1, b2, t2).map_err(lib_err)?;

    #[derive(Serialize)]
    struct Out<'a> {
        region: &'a str,
        rate_num: Option<u64>,
        rate_den: Option<u64>,
    }
    let line = serde_json::to_string(&Out {
        region,
        rate_num: rate.as_ref().map(|r| r.num()),
        rate_den: rate.as_ref().map(|r| r.den()),
    })
    .map_err(|e| usage(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn run_converse(args: ConverseArgs, cfg: ConfigFile) -> Result<(), Failure> {
    let b = req(args.b.or(cfg.b), "--b")?;
    let t = req(args.t.or(cfg.t), "--t")?;
    let alpha = req(args.alpha.or(cfg.alpha), "--alpha")?;
    let t2 = req(args.t2.or(cfg.t2), "--t2")?;
    if b == 0 || t < b {
        return Err(usage(format!("need 1 <= B <= T, got B = {b}, T = {t}")));
    }
    if alpha < 2 {
        return Err(usage(format!("--alpha must be at least 2, got {alpha}")));
    }

    let bound = converse_rate_bound(b, t2, alpha).map_err(lib_err)?;

    #[derive(Serialize)]
    struct Out {
        bound_num: u64,
        bound_den: u64,
        feasible: bool,
    }
    let line = serde_json::to_string(&Out {
        bound_num: bound.num(),
        bound_den: bound.den(),
        feasible: t2 >= t2_star(b, t, alpha),
    })
    .map_err(|e| usage(e.to_string()))?;
    println!("{line}");
    Ok(())
}

fn fail(f: Failure) -> ExitCode {
    match f {
        Failure::NotCertified(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            };
        }
    };

    let cfg = match load_config(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(f) => return fail(f),
    };
    let result = match cli.command {
        Command::Construct(a) => run_construct(a, cfg),
        Command::Sweep(a) => run_sweep(a, cfg),
        Command::Capacity(a) => run_capacity(a, cfg),
        Command::Converse(a) => run_converse(a, cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
