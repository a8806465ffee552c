use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nast::lift_solver::{lift_residual, solve_lift};
use nast::ramification::breaks_report;
use nast::series::LaurentJson;
use nast::witt_pairing::{gram_matrix, pair, UnitClassJson};
use nast::{Error, FiltrationContext, HMap, Laurent, LiftForm, UnitClass, WittRing};
use serde::Serialize;
use serde_json::json;

mod config;
mod suites;

use config::{Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "nast", version, about = "Exact computations for nilpotent Artin-Schreier theory of local fields")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Characteristic-p and mixed-characteristic breaks for s = 1..p-1
    Breaks,
    /// Witt pairing of a series with a unit class
    Pair {
        /// Series as JSON: {"low":..,"prec":..,"coeffs":{"exp":[coords]}}
        #[arg(long, required_unless_present = "table")]
        f: Option<String>,
        /// Unit class as JSON: {"a0":..,"exponents":{"a":[coords]}}
        #[arg(long, required_unless_present = "table")]
        g: Option<String>,
        /// Print the duality table for indices up to --amax instead
        #[arg(long)]
        table: bool,
    },
    /// Run an invariant suite
    Verify,
    /// Solve for the lift of h to the Lie side
    Lift {
        /// Use h = id
        #[arg(long)]
        identity: bool,
        /// Weight cap of the truncated algebra
        #[arg(long)]
        wmax: Option<u32>,
    },
}

enum Failure {
    Usage(String),
    Verification(serde_json::Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(cfg: &RunConfig, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    // a closed pipe downstream is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = &cfg.json {
        std::fs::write(path, format!("{text}\n")).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn ring(cfg: &RunConfig) -> Result<Arc<WittRing>, Failure> {
    Ok(Arc::new(WittRing::with_precision(cfg.p, cfg.m, cfg.n0)?))
}

// e* from e_K (mixed characteristic) or from the valuation of S0
fn estar_and_ek(cfg: &RunConfig) -> Result<(u64, u64), Failure> {
    let pm = cfg.p.pow(cfg.m);
    match cfg.e_k {
        Some(e_k) => {
            let d = (cfg.p - 1) * cfg.p.pow(cfg.m - 1);
            if e_k == 0 || e_k % d != 0 {
                return Err(Failure::Usage(format!("precondition violated: e_K = {e_k} is not a positive multiple of (p-1)p^(M-1) = {d}")));
            }
            Ok((cfg.p * e_k / (cfg.p - 1), e_k))
        }
        None => {
            let estar = pm * cfg.s0_val;
            Ok((estar, estar / cfg.p * (cfg.p - 1)))
        }
    }
}

fn cmd_breaks(cfg: &RunConfig) -> Result<(), Failure> {
    let r = ring(cfg)?;
    let (estar, e_k) = estar_and_ek(cfg)?;
    // the ideal search runs for S0 = t at desk scale
    let ctx = if estar == cfg.p.pow(cfg.m) && cfg.p.pow(cfg.m) <= 9 && cfg.n0 <= 2 {
        let w_max = if cfg.m == 1 { cfg.p as u32 } else { 2 };
        Some(FiltrationContext::standard(&r, cfg.p as usize - 1, w_max)?)
    } else {
        None
    };
    let report = breaks_report(&r, estar, e_k, ctx.as_ref().map(|c| (c, cfg.nmax)))?;
    let value = serde_json::to_value(&report).expect("report serializes");
    if report.passed() {
        emit(cfg, &value)
    } else {
        Err(Failure::Verification(value))
    }
}

fn cmd_pair(cfg: &RunConfig, f: Option<&str>, g: Option<&str>, table: bool) -> Result<(), Failure> {
    let r = ring(cfg)?;
    if table {
        let m = gram_matrix(&r, cfg.amax)?;
        let identity = m.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == u64::from(i == j)));
        let value = json!({ "amax": cfg.amax, "table": m, "identity": identity });
        return if identity { emit(cfg, &value) } else { Err(Failure::Verification(value)) };
    }
    let fj: LaurentJson = serde_json::from_str(f.unwrap_or_default()).map_err(|e| Failure::Usage(format!("parse error: series: {e}")))?;
    let gj: UnitClassJson = serde_json::from_str(g.unwrap_or_default()).map_err(|e| Failure::Usage(format!("parse error: unit class: {e}")))?;
    let fs = Laurent::from_json(&r, &fj)?;
    let gu = UnitClass::from_json(&r, &gj)?;
    let v = pair(&fs, &gu)?;
    emit(cfg, &json!({ "modulus": r.modulus.to_string(), "value": v.to_string() }))
}

fn cmd_verify(cfg: &RunConfig, suite: Option<&str>) -> Result<(), Failure> {
    let suite = suite.ok_or_else(|| Failure::Usage(format!("verify needs --suite <{}>", suites::SUITES.join("|"))))?;
    let report = suites::run(cfg, suite)?;
    let value = json!({ "params": cfg, "report": report });
    if report.passed {
        emit(cfg, &value)
    } else {
        Err(Failure::Verification(value))
    }
}

fn cmd_lift(cfg: &RunConfig, identity: bool, wmax: Option<u32>) -> Result<(), Failure> {
    let class = cfg.class.unwrap_or(cfg.p as usize - 1);
    if class == 0 || class as u64 >= cfg.p {
        return Err(Failure::Usage(format!("class {class} must lie in 1..p-1")));
    }
    let r = ring(cfg)?;
    let w_max = wmax.unwrap_or(if cfg.m == 1 { class as u32 + 1 } else { 1 });
    let ctx = FiltrationContext::standard(&r, class, w_max)?;
    let h = if identity { HMap::identity(&r, ctx.prec) } else { HMap::from_pack(ctx.pack(), ctx.prec)? };
    let form = if ctx.monomial { LiftForm::E } else { LiftForm::Dagger };
    let sol = solve_lift(&ctx, &h, form, class)?;
    let residual_zero = lift_residual(&ctx, &h, &sol)?.all_zero();
    let value = json!({ "params": cfg, "w_max": w_max, "solution": sol.to_json(&ctx, residual_zero) });
    if residual_zero {
        emit(cfg, &value)
    } else {
        Err(Failure::Verification(value))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match &cli.cmd {
        Cmd::Breaks => cmd_breaks(&cfg),
        Cmd::Pair { f, g, table } => cmd_pair(&cfg, f.as_deref(), g.as_deref(), *table),
        Cmd::Verify => cmd_verify(&cfg, cfg.suite.as_deref()),
        Cmd::Lift { identity, wmax } => cmd_lift(&cfg, *identity, *wmax),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(v)) => {
            let _ = emit(&cfg, &v);
            eprintln!("verification failed");
            ExitCode::from(1)
        }
    }
}
