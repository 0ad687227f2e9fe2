use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "weyl-lab", version, about = "Numerical experiments with two-parametric Weyl sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also write plot-ready CSV here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,

    /// Record no wall time, so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_wall_time: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponent tables and bounds for a range of degrees.
    Tables(TablesArgs),
    /// The Weyl sum S at one point.
    Sum(SumArgs),
    /// The completion sum W at one point or for a CSV batch.
    Wsum(WsumArgs),
    /// Exact count J of solutions of the paired system.
    MvtCount(MvtCountArgs),
    /// Monte-Carlo estimate of the 2s-th moment of S or W.
    MvtMc(MvtMcArgs),
    /// Large-value scan over the ζ-grid.
    Scan(ScanArgs),
    /// Supremum of |S| (and W) along one curve.
    CurveSup(CurveSupArgs),
    /// Growth exponent of sup |S| along a random curve family.
    Exponent(ExponentArgs),
    /// Fraction of family members with a large supremum.
    Badset(BadsetArgs),
}

/// ω as `c0,c1,...,ck` (low to high), or the monomial `T^k`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct OmegaArgs {
    /// Coefficients low to high, e.g. `0,0,1` for T^2.
    #[arg(long, conflicts_with = "monomial", allow_hyphen_values = true)]
    pub omega: Option<String>,
    /// Shorthand for ω = T^k.
    #[arg(long)]
    pub monomial: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TablesArgs {
    /// Degree range `a..b` (inclusive) or a single degree.
    #[arg(long, default_value = "2..12")]
    pub k: String,
    /// Hölder exponent ρ in (0, 1], decimal or fraction.
    #[arg(long, default_value = "1")]
    pub rho: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMethod {
    /// Difference-register recurrence.
    Recurrence,
    /// Exact rational phases; needs fractional coordinates.
    Exact,
    /// Every phase from its exact value.
    Reference,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, value_enum, default_value = "recurrence")]
    pub method: SumMethod,
    /// Also report max over M <= N of |S(M)|.
    #[arg(long)]
    pub partial_max: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WMethod {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WsumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "batch")]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "batch")]
    pub y: Option<String>,
    #[arg(long = "N", required_unless_present = "batch")]
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[arg(long, value_enum, default_value = "fft")]
    pub method: WMethod,
    /// Include |I(h)| for h = 0..N-1.
    #[arg(long)]
    pub spectrum: bool,
    /// CSV with columns x,y,N; evaluates every row.
    #[arg(long, conflicts_with_all = ["x", "y", "n"])]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountRoute {
    /// Sorted multiset enumeration of half-tuples.
    Multiset,
    /// Merge join over all ordered half-tuples.
    Join,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MvtCountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long)]
    pub s: u32,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    /// Largest number of half-tuples to enumerate.
    #[arg(long, default_value_t = weyl_core::mean_value::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "multiset")]
    pub route: CountRoute,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentTarget {
    S,
    W,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MvtMcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long)]
    pub s: u32,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "s")]
    pub target: MomentTarget,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    /// Degree; with no ω given, scans ω = T^k.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = weyl_core::large_values::DEFAULT_EPS)]
    pub eps: f64,
    /// `x0,x1,y0,y1` in [0, 1]; the whole torus by default.
    #[arg(long)]
    pub window: Option<String>,
    /// Moment order (default s0(k)).
    #[arg(long)]
    pub s: Option<u32>,
    /// Saving exponent (default k + 1).
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long, default_value_t = weyl_core::large_values::DEFAULT_SCAN_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Line,
    Circle,
    /// Points read from `--points`.
    Parametric,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Empirical,
    Rigorous,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveSupArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, value_enum, default_value = "line")]
    pub curve: CurveKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    /// Circle centre `z1,z2`.
    #[arg(long, default_value = "0.5,0.5")]
    pub center: String,
    #[arg(long, default_value_t = 0.25)]
    pub r: f64,
    /// CSV with columns x,y for a parametric curve.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub holder_const: f64,
    #[arg(long, value_enum, default_value = "empirical")]
    pub mode: Mode,
    #[arg(long, default_value_t = weyl_core::curves::DEFAULT_SAMPLES)]
    pub samples: u64,
    /// Also take the supremum of W.
    #[arg(long)]
    pub with_w: bool,
    /// Grid α for rigorous mode.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = weyl_core::large_values::DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long, default_value_t = weyl_core::curves::DEFAULT_RIGOROUS_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// y = τx + c.
    Lines,
    /// y = c.
    Projection,
    /// Radius r, random centre.
    Circles,
    /// The point (0, 0).
    Point,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value = "lines")]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.25)]
    pub r: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateKind {
    Mean,
    Median,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExponentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    /// Comma-separated powers of two.
    #[arg(long = "Ns", default_value = "64,128,256,512")]
    #[serde(rename = "Ns")]
    pub ns: String,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = weyl_core::curves::DEFAULT_SAMPLES)]
    pub samples: u64,
    #[arg(long, value_enum, default_value = "mean")]
    pub aggregate: AggregateKind,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BadsetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub omega: OmegaArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = weyl_core::curves::DEFAULT_BADSET_SAMPLES)]
    pub samples: u64,
}
