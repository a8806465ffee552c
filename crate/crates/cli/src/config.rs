use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

/// Parameters shared by all subcommands. Every field may also come from a
/// JSON config file; flags win.
#[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Residue characteristic (odd prime)
    #[arg(long = "p", global = true)]
    pub p: Option<u64>,
    /// Exponent: work modulo p^M
    #[arg(long = "M", global = true)]
    #[serde(rename = "M")]
    pub m: Option<u32>,
    /// Residue degree of k over F_p
    #[arg(long = "N0", global = true)]
    #[serde(rename = "N0")]
    pub n0: Option<usize>,
    /// Ramification index of the mixed-characteristic field
    #[arg(long = "eK", global = true)]
    #[serde(rename = "eK")]
    pub e_k: Option<u64>,
    /// t-valuation of S0
    #[arg(long = "s0-val", global = true)]
    #[serde(rename = "s0-val")]
    pub s0_val: Option<u64>,
    /// Index cutoff for t^-a terms
    #[arg(long = "amax", global = true)]
    pub amax: Option<u32>,
    /// Series precision (exclusive cap on t-exponents)
    #[arg(long = "prec", global = true)]
    pub prec: Option<i64>,
    /// Largest N tried in the ideal search
    #[arg(long = "nmax", global = true)]
    pub nmax: Option<u32>,
    /// Seed for randomized checks
    #[arg(long = "seed", global = true)]
    pub seed: Option<u64>,
    /// Nilpotent class
    #[arg(long = "class", global = true)]
    pub class: Option<usize>,
    /// Suite for `verify`
    #[arg(long = "suite", global = true)]
    pub suite: Option<String>,
    /// Also write the JSON report to this path
    #[arg(long = "json", global = true)]
    #[serde(skip)]
    pub json: Option<PathBuf>,
    /// JSON file with default values for the flags above
    #[arg(long = "config", global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: u64,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N0")]
    pub n0: usize,
    #[serde(rename = "eK")]
    pub e_k: Option<u64>,
    #[serde(rename = "s0-val")]
    pub s0_val: u64,
    pub amax: u32,
    pub prec: Option<i64>,
    pub nmax: u32,
    pub seed: u64,
    pub class: Option<usize>,
    #[serde(skip)]
    pub suite: Option<String>,
    #[serde(skip)]
    pub json: Option<PathBuf>,
}

impl Flags {
    fn merge(self, file: Flags) -> Flags {
        Flags {
            p: self.p.or(file.p),
            m: self.m.or(file.m),
            n0: self.n0.or(file.n0),
            e_k: self.e_k.or(file.e_k),
            s0_val: self.s0_val.or(file.s0_val),
            amax: self.amax.or(file.amax),
            prec: self.prec.or(file.prec),
            nmax: self.nmax.or(file.nmax),
            seed: self.seed.or(file.seed),
            class: self.class.or(file.class),
            suite: self.suite.or(file.suite),
            json: self.json,
            config: self.config,
        }
    }

    pub fn resolve(self) -> Result<RunConfig, String> {
        let flags = match &self.config {
            Some(path) => {
                let file = read_config(path)?;
                self.merge(file)
            }
            None => self,
        };
        let p = flags.p.unwrap_or(3);
        if p < 3 || !nast::base_arith::is_prime(p) {
            return Err(format!("p = {p} is not an odd prime"));
        }
        let m = flags.m.unwrap_or(1);
        if m == 0 {
            return Err("M must be positive".into());
        }
        let n0 = flags.n0.unwrap_or(1);
        if n0 == 0 {
            return Err("N0 must be positive".into());
        }
        Ok(RunConfig {
            p,
            m,
            n0,
            e_k: flags.e_k,
            s0_val: flags.s0_val.unwrap_or(1),
            amax: flags.amax.unwrap_or(10),
            prec: flags.prec,
            nmax: flags.nmax.unwrap_or(4),
            seed: flags.seed.unwrap_or(0),
            class: flags.class,
            suite: flags.suite,
            json: flags.json,
        })
    }
}

fn read_config(path: &Path) -> Result<Flags, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}
