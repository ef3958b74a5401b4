//! Run specification: the parsed command line in a serializable form.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Dist {
    Poisson,
    Binomial,
    Negbinomial,
    Fl,
    F3,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyKind {
    F3,
    Gp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Figure {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "3-volumes")]
    #[serde(rename = "3-volumes")]
    ThreeVolumes,
    #[value(name = "4")]
    #[serde(rename = "4")]
    Four,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum Command {
    /// Emit table 1 (Poisson bound errors), 2 (S_inf estimates) or 3 (convergence times).
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
    },
    /// Classify the direction of the fractional linear bound.
    Classify { kind: ClassifyKind },
    /// Extinction and survival probabilities by generation.
    Survival,
    /// Bounds and series estimates of S_inf for a family at selective advantage s.
    Sinf,
    /// Times after which survival is within (1+eps) of S_inf.
    Teps,
    /// Trait variance and Wright-Fisher fixation quantities.
    Genetics,
    /// Plot-ready data for the figures.
    Figdata { fig: Figure },
    /// Execute a saved run specification (JSON).
    Run { spec: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, Args)]
pub struct Params {
    #[arg(long, global = true)]
    pub dist: Option<Dist>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<u32>,
    #[arg(long, global = true)]
    pub pi: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub p0: Option<f64>,
    #[arg(long, global = true)]
    pub p2: Option<f64>,
    #[arg(long, global = true)]
    pub p3: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Selective advantage; the mean is 1 + s.
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, global = true)]
    pub nmax: Option<u64>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Population size.
    #[arg(long = "N", global = true)]
    pub pop_size: Option<u64>,
    /// Effective population size.
    #[arg(long = "Ne", global = true)]
    pub effective_size: Option<f64>,
    #[arg(long, global = true)]
    pub theta_mut: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Monte Carlo sample count (accepts 1e6).
    #[arg(long, global = true)]
    pub samples: Option<f64>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fail with an applicability error instead of leaving inapplicable bounds empty.
    #[arg(long, global = true)]
    #[serde(default)]
    pub strict: bool,
    /// Significant digits of numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    pub digits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: Command,
    pub params: Params,
}

impl RunSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run spec serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
