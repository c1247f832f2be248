use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "phasepath",
    version,
    about = "Momentum-space path integrals via white-noise T-transforms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generalized expectation of the ε-regularized free particle.
    PropagatorFree(FreeArgs),
    /// Closed-form harmonic-oscillator propagator in momentum space.
    PropagatorHo(HoArgs),
    /// T-transform at a test function read from --f-spec (oscillator if --k is given).
    Ttransform(TtransformArgs),
    /// Run a verification suite against independent references.
    Verify(VerifyArgs),
    /// Tabulate a propagator over one or two ranges `lo:hi:count`.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Det,
    Pde,
    Oracle,
    FreeLimit,
    Spectrum,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::Det => "det",
            Suite::Pde => "pde",
            Suite::Oracle => "oracle",
            Suite::FreeLimit => "free-limit",
            Suite::Spectrum => "spectrum",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FreeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub p0: f64,
    /// Final momentum p′ (defaults to --p0).
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long = "grid-n", default_value_t = 256)]
    pub grid_n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HoArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// Final momentum p′.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub p: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TtransformArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long = "grid-n", default_value_t = 256)]
    pub grid_n: usize,
    /// JSON test function `{"terms": [{"a_re", "a_im", "b", "c"}], "x_terms": [...]}`.
    #[arg(long = "f-spec")]
    pub f_spec: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Param,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<Param>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<Param>,
    #[arg(long = "grid-n", default_value_t = 256)]
    pub grid_n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A number, or an evenly spaced range `lo:hi:count` (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Value(f64),
    Range { lo: f64, hi: f64, count: usize },
}

impl Param {
    pub fn is_range(&self) -> bool {
        matches!(self, Param::Range { .. })
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Param::Value(v) => vec![v],
            Param::Range { lo, count: 1, .. } => vec![lo],
            Param::Range { lo, hi, count } => (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (count - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let number = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Param::Value(number(v)?)),
            [lo, hi, count] => {
                let count = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("range count `{count}` is not a positive integer"))?;
                if count == 0 {
                    return Err("range count must be positive".into());
                }
                Ok(Param::Range {
                    lo: number(lo)?,
                    hi: number(hi)?,
                    count,
                })
            }
            _ => Err(format!("expected a number or lo:hi:count, got `{s}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_ranges() {
        assert_eq!("1.5".parse::<Param>().unwrap(), Param::Value(1.5));
        let r: Param = "-3:3:121".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 121);
        assert_eq!(v[0], -3.0);
        assert_eq!(v[120], 3.0);
        assert_eq!(v[60], 0.0);
        assert_eq!("0.1:0.001:50".parse::<Param>().unwrap().values()[49], 0.001);
        assert!("1:2".parse::<Param>().is_err());
        assert!("1:2:0".parse::<Param>().is_err());
        assert!("a:2:3".parse::<Param>().is_err());
    }
}
