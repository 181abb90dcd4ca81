//! Command-line front end for the `accperc` library.
//!
//! Every setting can come from a JSON file given with `--config`; flags on
//! the command line override the file.

pub mod svg;
pub mod values;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use accperc::analysis::{
    estimate_threshold, moment_study, path_intersection_table, run_survival_experiment, variance_scaling_study,
    ExperimentSpec, MomentReport, Process, SurvivalCurve,
};
use accperc::distributions::{max_mass, min_mass};
use accperc::paths::{count_large_paths, count_open_vs_accessible, SurvivalOptions, TreeSearch};
use accperc::{Boundary, Distribution, Family, FitnessField, LeveledDag, MergeSpec, SiteField};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use values::{DriftSpec, Seed};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] accperc::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(accperc::Error::Guard(_)) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Output was written but some runs hit a resource guard.
    Truncated,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Done => 0,
            Status::Truncated => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "accperc", version, about = "Accessibility percolation on Rough Mount Fuji landscapes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count accessible (or open) source-to-sink paths of a finite family.
    Count(Invocation),
    /// Monte Carlo survival curve over a drift grid and heights.
    Sweep(Invocation),
    /// Heaviest (or lightest) window of length c under a distribution.
    Mass(Invocation),
    /// Moments of the open-path count under Bernoulli site percolation.
    Moments(Invocation),
    /// Table T(n,k) of path overlaps with a reference path of the n-cube.
    Tnk(Invocation),
    /// Threshold bracket from a survival curve CSV or a fresh sweep.
    Threshold(Invocation),
}

#[derive(Debug, Args)]
pub struct Invocation {
    /// JSON file with any of the settings below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

/// Settings shared by all commands; commands ignore the ones they do not use.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// hypercube:n=10, nary:n=3,h=8, rtree:d=2, l2 or l2alt.
    #[arg(long)]
    pub family: Option<Family>,
    /// uniform:a,b, normal:mu,sd, exp:rate, tri:a,m,b or pwl:@file.csv.
    #[arg(long = "dist")]
    #[serde(alias = "distribution")]
    pub dist: Option<Distribution>,
    /// Drift c: a value, a comma list, or range:start,stop,step.
    #[arg(long = "c")]
    pub c: Option<DriftSpec>,
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<u32>>,
    #[arg(long)]
    pub runs: Option<u64>,
    /// Decimal or 0x-prefixed hex.
    #[arg(long)]
    pub seed: Option<Seed>,
    /// Seed-stream id for independent repeats of a sweep.
    #[arg(long)]
    pub experiment: Option<u64>,
    /// none, source_neg_inf or source_neg_inf_and_sink_pos_inf.
    #[arg(long)]
    pub boundary: Option<Boundary>,
    /// rmf or coupled (sweep only).
    #[arg(long)]
    pub process: Option<Process>,
    /// Site open probability (moments).
    #[arg(long)]
    pub p: Option<f64>,
    /// Merged levels and their probability, e.g. 2,4@0.3.
    #[arg(long)]
    pub merge: Option<MergeSpec>,
    /// Window left end for --compare-coupling; defaults to the heaviest window.
    #[arg(long)]
    pub xc: Option<f64>,
    /// Count every large path (all labels open).
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub all_open: Option<bool>,
    /// Also count open paths of the coupled site field.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub compare_coupling: Option<bool>,
    /// Use the lightest window instead of the heaviest.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub min: Option<bool>,
    /// Hypercube dimension (tnk).
    #[arg(long)]
    pub n: Option<u32>,
    /// Bit order of the reference path (tnk).
    #[arg(long, value_delimiter = ',')]
    pub reference: Option<Vec<u32>>,
    /// Family sizes for a variance scaling study (moments).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<u32>>,
    /// Height at which to bracket the threshold (defaults to the largest).
    #[arg(long)]
    pub height: Option<u32>,
    /// Survival curve CSV (threshold).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write an SVG plot of the curve (sweep).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (defaults to the available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Sweep trees level by level, censoring a run once its frontier holds
    /// this many vertices.
    #[arg(long)]
    pub frontier_cap: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Config { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Config {
    /// Fields set in `top` win over fields set in `self`.
    pub fn overlay(self, top: Config) -> Config {
        let base = self;
        overlay!(base, top; family, dist, c, heights, runs, seed, experiment, boundary, process, p, merge, xc,
            all_open, compare_coupling, min, n, reference, sizes, height, input, output, svg, format, workers,
            frontier_cap)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path).map_err(|source| CliError::File { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    fn family(&self) -> Result<Family> {
        self.family.ok_or_else(|| CliError::Usage("--family is required".into()))
    }

    fn dist(&self) -> Result<Distribution> {
        self.dist.clone().ok_or_else(|| CliError::Usage("--dist is required".into()))
    }

    fn single_drift(&self) -> Result<f64> {
        match &self.c {
            None => usage("--c is required"),
            Some(DriftSpec(v)) if v.len() == 1 => Ok(v[0]),
            Some(_) => usage("this command takes a single drift value"),
        }
    }

    fn seed(&self) -> u64 {
        self.seed.map_or(0, |s| s.0)
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn flag(v: Option<bool>) -> bool {
        v.unwrap_or(false)
    }

    /// The survival experiment described by these settings.
    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let drifts = self.c.clone().ok_or_else(|| CliError::Usage("--c is required".into()))?.0;
        let mut spec = ExperimentSpec::new(
            self.family()?,
            self.dist()?,
            drifts,
            self.heights.clone().unwrap_or_else(|| vec![1000]),
            self.runs.unwrap_or(2000),
            self.seed(),
        );
        spec.experiment = self.experiment.unwrap_or(0);
        if let Some(b) = self.boundary {
            spec.boundary = b;
        }
        spec.process = self.process.unwrap_or_default();
        spec.workers = self.workers;
        if let Some(cap) = self.frontier_cap {
            // an explicit cap only matters for the level-by-level sweep
            spec.survival = SurvivalOptions { tree_search: TreeSearch::FrontierSweep, frontier_cap: cap, trace: false };
        }
        Ok(spec)
    }
}

impl Invocation {
    /// File settings overlaid with the flags.
    pub fn resolve(&self) -> Result<Config> {
        let base = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        Ok(base.overlay(self.settings.clone()))
    }
}

type Handler = fn(&Config, &mut dyn Write, &mut dyn Write) -> Result<Status>;

/// Runs one command, writing its primary output to `--output` or `stdout`
/// and diagnostics to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Status> {
    let (cfg, command): (Config, Handler) = match &cli.command {
        Command::Count(i) => (i.resolve()?, cmd_count),
        Command::Sweep(i) => (i.resolve()?, cmd_sweep),
        Command::Mass(i) => (i.resolve()?, cmd_mass),
        Command::Moments(i) => (i.resolve()?, cmd_moments),
        Command::Tnk(i) => (i.resolve()?, cmd_tnk),
        Command::Threshold(i) => (i.resolve()?, cmd_threshold),
    };
    match &cfg.output {
        Some(path) => {
            let mut file = fs::File::create(path).map_err(|source| CliError::File { path: path.clone(), source })?;
            let status = command(&cfg, &mut file, stderr)?;
            file.flush()?;
            Ok(status)
        }
        None => command(&cfg, stdout, stderr),
    }
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn cmd_count(cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> Result<Status> {
    let dag = LeveledDag::new(cfg.family()?)?;
    let json_out = cfg.format(Format::Text) == Format::Json;
    if Config::flag(cfg.all_open) {
        let count = count_large_paths(&dag, &SiteField::all_open(&dag))?;
        if json_out {
            write_json(out, &count)?;
        } else {
            writeln!(out, "{}", count.count)?;
        }
        return Ok(Status::Done);
    }
    let dist = cfg.dist()?;
    let c = cfg.c.as_ref().map_or(Ok(0.0), |_| cfg.single_drift())?;
    let field = FitnessField::new(&dag, dist.clone(), c, cfg.seed(), cfg.boundary.unwrap_or_default())?;
    if Config::flag(cfg.compare_coupling) {
        let x_c = match cfg.xc {
            Some(x) => x,
            None => max_mass(&dist, c)?.x_left,
        };
        let both = count_open_vs_accessible(&dag, &field, x_c)?;
        if json_out {
            write_json(out, &json!({ "accessible": both.accessible, "open": both.open, "x_c": x_c, "field": accperc::StepRule::descriptor(&field) }))?;
        } else {
            writeln!(out, "accessible {}", both.accessible)?;
            writeln!(out, "open {}", both.open)?;
        }
    } else {
        let count = count_large_paths(&dag, &field)?;
        if json_out {
            write_json(out, &count)?;
        } else {
            writeln!(out, "{}", count.count)?;
        }
    }
    Ok(Status::Done)
}

/// Comment lines heading a curve CSV. Only the timestamp varies between
/// replays of the same config.
pub fn curve_comments(cfg: &Config) -> Result<Vec<String>> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut lines = vec![
        format!("accperc {}", env!("CARGO_PKG_VERSION")),
        format!("generated_unix {stamp}"),
        format!("config {}", serde_json::to_string(&set_fields(cfg)?)?),
    ];
    if cfg.family == Some(Family::L2Alt) {
        lines.push("l2alt level y lists sites x = -y..y in increasing x".into());
    }
    Ok(lines)
}

fn set_fields(cfg: &Config) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(map) = v.as_object_mut() {
        map.retain(|_, x| !x.is_null());
    }
    Ok(v)
}

pub fn cmd_sweep(cfg: &Config, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    let spec = cfg.experiment_spec()?;
    let curve = run_survival_experiment(&spec)?;
    match cfg.format(Format::Csv) {
        Format::Csv | Format::Text => curve.write_csv(&mut *out, &curve_comments(cfg)?)?,
        Format::Json => write_json(out, &curve)?,
        Format::Svg => out.write_all(svg::render(&curve).as_bytes())?,
    }
    if let Some(path) = &cfg.svg {
        fs::write(path, svg::render(&curve)).map_err(|source| CliError::File { path: path.clone(), source })?;
    }
    let top = *curve.heights().last().unwrap();
    match estimate_threshold(&curve, top) {
        Ok(b) => writeln!(err, "bracket at H={top}: c_low {} c_high {}", b.c_low, b.c_high)?,
        Err(e) => writeln!(err, "no bracket at H={top}: {e}")?,
    }
    if curve.truncated() {
        writeln!(err, "warning: some runs hit the frontier cap and were counted as survivals")?;
        return Ok(Status::Truncated);
    }
    Ok(Status::Done)
}

pub fn cmd_mass(cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> Result<Status> {
    let dist = cfg.dist()?;
    let c = cfg.single_drift()?;
    let m = if Config::flag(cfg.min) { min_mass(&dist, c)? } else { max_mass(&dist, c)? };
    if cfg.format(Format::Text) == Format::Json {
        write_json(out, &m)?;
    } else {
        writeln!(out, "{}", m.mass)?;
        writeln!(out, "interval ({}, {}]", m.x_left, m.x_right())?;
    }
    Ok(Status::Done)
}

pub fn cmd_moments(cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> Result<Status> {
    let family = cfg.family()?;
    let p = cfg.p.ok_or_else(|| CliError::Usage("--p is required".into()))?;
    let runs = cfg.runs.unwrap_or(10_000);
    let reports: Vec<MomentReport> = match &cfg.sizes {
        Some(sizes) => variance_scaling_study(family, sizes, p, cfg.merge.clone(), runs, cfg.seed())?,
        None => vec![moment_study(&LeveledDag::new(family)?, p, cfg.merge.clone(), runs, cfg.seed())?],
    };
    if cfg.format(Format::Text) == Format::Json {
        write_json(out, &reports)?;
        return Ok(Status::Done);
    }
    writeln!(out, "family\tp\tp_merge\tmerge_size\truns\texpected\tmean\tmean_se\tvariance\trel_var\trel_var_se")?;
    for r in &reports {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.family,
            r.p,
            r.p_merge.map_or("-".to_string(), |q| q.to_string()),
            r.merge_size,
            r.runs,
            r.expected,
            r.mean,
            r.mean_se,
            r.variance,
            r.relative_variance,
            r.relative_variance_se
        )?;
    }
    Ok(Status::Done)
}

pub fn cmd_tnk(cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> Result<Status> {
    let n = cfg.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let table = path_intersection_table(n, cfg.reference.as_deref())?;
    let total: u128 = table.iter().sum();
    let ratio = table[0] as f64 / total as f64;
    if cfg.format(Format::Text) == Format::Json {
        write_json(out, &json!({ "n": n, "table": table, "t1_over_total": ratio }))?;
    } else {
        writeln!(out, "k\tT({n},k)")?;
        for (k, t) in table.iter().enumerate() {
            writeln!(out, "{}\t{t}", k + 1)?;
        }
        writeln!(out, "# T({n},1)/{n}! = {ratio}")?;
    }
    Ok(Status::Done)
}

pub fn cmd_threshold(cfg: &Config, out: &mut dyn Write, _err: &mut dyn Write) -> Result<Status> {
    let curve = match &cfg.input {
        Some(path) => {
            let file = fs::File::open(path).map_err(|source| CliError::File { path: path.clone(), source })?;
            SurvivalCurve::read_csv(file)?
        }
        None => run_survival_experiment(&cfg.experiment_spec()?)?,
    };
    let height = match cfg.height {
        Some(h) => h,
        None => *curve.heights().last().ok_or_else(|| CliError::Usage("curve has no heights".into()))?,
    };
    let b = estimate_threshold(&curve, height)?;
    if cfg.format(Format::Text) == Format::Json {
        write_json(out, &b)?;
    } else {
        writeln!(out, "c_low {}", b.c_low)?;
        writeln!(out, "c_high {}", b.c_high)?;
    }
    Ok(if curve.truncated() { Status::Truncated } else { Status::Done })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Config { runs: Some(10), seed: Some(Seed(5)), heights: Some(vec![4]), ..Default::default() };
        let flags = Config { runs: Some(20), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.runs, Some(20));
        assert_eq!(merged.seed, Some(Seed(5)));
        assert_eq!(merged.heights, Some(vec![4]));
    }

    #[test]
    fn config_round_trips() {
        let text = r#"{"family":"rtree:d=2","distribution":"uniform:0,1","c":"range:0.1,0.2,0.05",
            "heights":[10,20],"runs":5,"seed":"0x1f","boundary":"source_neg_inf","merge":{"levels":[2],"p_merge":0.1},
            "format":"json"}"#;
        let cfg: Config = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.c, Some(DriftSpec(vec![0.1, 0.15, 0.2])));
        assert_eq!(cfg.seed, Some(Seed(31)));
        let again: Config = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert!(serde_json::from_str::<Config>(r#"{"famly":"l2"}"#).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(accperc::Error::Guard("x".into())).exit_code(), 3);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(Status::Truncated.exit_code(), 3);
    }
}
