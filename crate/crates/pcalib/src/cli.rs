//! Command-line surface: `predict`, `simulate`, `correct`, `compare`.
//!
//! Exit codes: 0 success, 2 configuration problems, 3 domain errors,
//! 4 internal failures. CSV outputs use 17 significant digits so downstream
//! diffs are exact.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cumulants::{calibrate, FamilySpec, TestStatCalibration};
use crate::edgeworth::{pvalue_curve, PValueCurve, Sidedness};
use crate::error::{Error, Result};
use crate::exact;
use crate::harness::{
    classify_from_histogram, empirical_cdf, ks_distance, run_experiment, standard_grid,
    theory_curve, type1_error, ExperimentConfig, ExperimentResult, Histogram,
};
use crate::saddlepoint::{corrected_pvalue, TailForm};

const SCHEMA_VERSION: u32 = 1;
const HIST_BINS: usize = 50;

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

/// Family plus standardization, used by `predict` and `correct`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub family: FamilySpec,
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
    #[serde(default = "default_sidedness")]
    pub sidedness: Sidedness,
}

fn default_sidedness() -> Sidedness {
    Sidedness::TwoSided
}

impl CalibrationSection {
    pub fn to_calibration(&self) -> Result<TestStatCalibration> {
        calibrate(&self.family, self.n, self.a_n, self.b_n)
    }
}

/// Parse a config file, reporting malformed JSON with line, column and byte
/// offset.
pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ConfigFile = serde_json::from_str(&text).map_err(|e| {
        let offset = byte_offset(&text, e.line(), e.column());
        Error::Config(format!("{}: {e} (byte offset {offset})", path.display()))
    })?;
    if cfg.version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported config version {} (expected {SCHEMA_VERSION})",
            cfg.version
        )));
    }
    Ok(cfg)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut remaining = line.saturating_sub(1);
    let mut offset = 0usize;
    for l in text.split_inclusive('\n') {
        if remaining == 0 {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
        remaining -= 1;
    }
    offset
}

#[derive(Parser, Debug)]
#[command(
    name = "pcalib",
    about = "Higher-order p-value distributions and corrected p-values",
    version
)]
pub struct CliArgs {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the simulation harness (0 = default pool).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path (predict/correct) or prefix (simulate).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the theoretical p-value CDF/PDF curve of a calibration.
    Predict(PredictArgs),
    /// Run a Monte Carlo experiment and summarize the p-value distribution.
    Simulate(SimulateArgs),
    /// Batch-correct a CSV of statistics or observed means.
    Correct(CorrectArgs),
    /// Compare an empirical ECDF against a theoretical curve.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// JSON config containing a `calibration` section.
    #[arg(long)]
    config: PathBuf,
    /// Evaluation grid start:end:step over (0,1).
    #[arg(long, default_value = "0.0005:0.9995:0.0005")]
    grid: String,
    /// Clamp CDF values into [0,1] for presentation. Raw expansion values
    /// can leave the unit interval in extreme tails; they stay flagged
    /// either way.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON config containing an `experiment` section.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct CorrectArgs {
    /// Correction method: saddlepoint | rstar_form.
    #[arg(long)]
    method: String,
    /// JSON config containing a `calibration` section (the model family).
    #[arg(long)]
    config: PathBuf,
    /// Input CSV with columns id,statistic or id,observed_mean.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Empirical ECDF CSV (columns t,ecdf[,n]; a predict output also works).
    #[arg(long)]
    empirical: PathBuf,
    /// Theoretical curve CSV (a predict output: t,cdf,...).
    #[arg(long)]
    theory: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let args = CliArgs::parse();
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Csv(_) => 2,
        Error::Domain(_)
        | Error::Degenerate(_)
        | Error::NoSaddlepoint(_)
        | Error::GridMismatch(_) => 3,
        _ => 4,
    }
}

fn dispatch(args: CliArgs) -> Result<()> {
    match args.command {
        Command::Predict(ref p) => {
            let out = args
                .out
                .clone()
                .ok_or_else(|| Error::Config("predict needs --out <path>".into()))?;
            cmd_predict_opts(&p.config, &p.grid, &out, p.clamp)
        }
        Command::Simulate(ref s) => {
            let out = args
                .out
                .clone()
                .ok_or_else(|| Error::Config("simulate needs --out <prefix>".into()))?;
            cmd_simulate(&s.config, &out, args.seed, args.threads)
        }
        Command::Correct(ref c) => {
            let out = args
                .out
                .clone()
                .ok_or_else(|| Error::Config("correct needs --out <path>".into()))?;
            cmd_correct(&c.method, &c.config, &c.input, &out)
        }
        Command::Compare(ref c) => cmd_compare(&c.empirical, &c.theory),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid spec must be start:end:step, got `{spec}`"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("grid spec: `{s}` is not a number")))
        })
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && start > 0.0 && end < 1.0 && start <= end) {
        return Err(Error::Config(format!(
            "grid spec must satisfy 0 < start <= end < 1 and step > 0, got `{spec}`"
        )));
    }
    let count = ((end - start) / step).round() as usize + 1;
    Ok((0..count)
        .map(|i| start + i as f64 * step)
        .filter(|&t| t < 1.0)
        .collect())
}

/// Write a theoretical curve as CSV: t, cdf, pdf, flag_out_of_range.
pub fn cmd_predict(config: &Path, grid_spec: &str, out: &Path) -> Result<()> {
    cmd_predict_opts(config, grid_spec, out, false)
}

/// `cmd_predict` with the presentation clamp switch.
pub fn cmd_predict_opts(config: &Path, grid_spec: &str, out: &Path, clamp: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let section = cfg
        .calibration
        .ok_or_else(|| Error::Config("predict needs a `calibration` section".into()))?;
    let cal = section.to_calibration()?;
    let grid = parse_grid(grid_spec)?;
    let curve = pvalue_curve(&cal, &grid, section.sidedness)?;
    write_curve_csv(&curve, out, clamp)?;
    println!(
        "predict: wrote {} rows to {} ({})",
        curve.grid.len(),
        out.display(),
        match curve.pdf {
            Some(_) => "continuous",
            None => "lattice; pdf column empty",
        }
    );
    Ok(())
}

fn write_curve_csv(curve: &PValueCurve, out: &Path, clamp: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["t", "cdf", "pdf", "flag_out_of_range"])?;
    for i in 0..curve.grid.len() {
        let pdf = curve
            .pdf
            .as_ref()
            .map(|p| format!("{:.16e}", p[i]))
            .unwrap_or_default();
        let cdf = if clamp {
            curve.cdf[i].clamp(0.0, 1.0)
        } else {
            curve.cdf[i]
        };
        w.write_record([
            format!("{:.16e}", curve.grid[i]),
            format!("{:.16e}", cdf),
            pdf,
            if curve.out_of_range[i] { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    method: String,
    replications: usize,
    exclusions: usize,
    type1: Vec<Type1Row>,
    ks_uniform: f64,
    ks_theory: Option<f64>,
    shape: String,
    shape_low_density: f64,
    shape_high_density: f64,
}

#[derive(Debug, Serialize)]
struct Type1Row {
    alpha: f64,
    rate: f64,
    se: f64,
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    schema_version: u32,
    config: ExperimentConfig,
    wall_clock_s: f64,
    methods: Vec<MethodSummary>,
}

/// Run an experiment and emit prefix.summary.json, prefix.hist.csv and
/// prefix.ecdf.csv.
pub fn cmd_simulate(
    config: &Path,
    out_prefix: &Path,
    seed_override: Option<u64>,
    threads: Option<usize>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let mut exp = cfg
        .experiment
        .ok_or_else(|| Error::Config("simulate needs an `experiment` section".into()))?;
    if let Some(seed) = seed_override {
        exp.seed = seed;
    }
    if let Some(t) = threads {
        exp.workers = t;
    }
    let result = run_experiment(&exp)?;
    let summary = summarize(&result)?;
    let prefix = out_prefix.to_string_lossy();
    let summary_path = PathBuf::from(format!("{prefix}.summary.json"));
    let hist_path = PathBuf::from(format!("{prefix}.hist.csv"));
    let ecdf_path = PathBuf::from(format!("{prefix}.ecdf.csv"));
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    write_hist_csv(&result, &hist_path)?;
    write_ecdf_csv(&result, &ecdf_path)?;
    for m in &summary.methods {
        println!(
            "simulate[{}]: {} used / {} excluded, ks_uniform={:.4}{}, shape={}",
            m.method,
            m.replications,
            m.exclusions,
            m.ks_uniform,
            m.ks_theory
                .map(|k| format!(", ks_theory={k:.4}"))
                .unwrap_or_default(),
            m.shape
        );
    }
    println!(
        "simulate: wrote {}, {}, {}",
        summary_path.display(),
        hist_path.display(),
        ecdf_path.display()
    );
    Ok(())
}

fn summarize(result: &ExperimentResult) -> Result<SimulationSummary> {
    let grid = standard_grid();
    let mut methods = Vec::new();
    for series in &result.series {
        let ps = series.successes();
        if ps.is_empty() {
            return Err(Error::Degenerate(format!(
                "method {} produced no usable replications",
                series.method.name()
            )));
        }
        let ecdf = empirical_cdf(&ps, &grid)?;
        let ks_uniform = ks_distance(&ecdf, &grid)?;
        let ks_theory = theory_curve(&result.config, series.method, &grid)
            .map(|th| ks_distance(&ecdf, &th))
            .transpose()?;
        let label = crate::harness::classify_shape(&ps).ok();
        let type1 = result
            .config
            .alphas
            .iter()
            .map(|&alpha| {
                let (rate, se) = type1_error(&ps, alpha);
                Type1Row { alpha, rate, se }
            })
            .collect();
        methods.push(MethodSummary {
            method: series.method.name().to_string(),
            replications: ps.len(),
            exclusions: series.exclusions(),
            type1,
            ks_uniform,
            ks_theory,
            shape: label
                .map(|l| l.shape.to_string())
                .unwrap_or_else(|| "n/a".into()),
            shape_low_density: label.map(|l| l.low_density).unwrap_or(f64::NAN),
            shape_high_density: label.map(|l| l.high_density).unwrap_or(f64::NAN),
        });
    }
    Ok(SimulationSummary {
        schema_version: SCHEMA_VERSION,
        config: result.config.clone(),
        wall_clock_s: result.wall_clock_s,
        methods,
    })
}

fn write_hist_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "bin_lo", "bin_hi", "count"])?;
    for series in &result.series {
        let ps = series.successes();
        let hist = Histogram::of(&ps, HIST_BINS);
        for (i, &c) in hist.counts.iter().enumerate() {
            w.write_record([
                series.method.name().to_string(),
                format!("{:.16e}", i as f64 / HIST_BINS as f64),
                format!("{:.16e}", (i + 1) as f64 / HIST_BINS as f64),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_ecdf_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let grid = standard_grid();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "t", "ecdf", "theory_cdf", "n"])?;
    for series in &result.series {
        let ps = series.successes();
        let ecdf = empirical_cdf(&ps, &grid)?;
        let theory = theory_curve(&result.config, series.method, &grid);
        for (i, &t) in grid.iter().enumerate() {
            w.write_record([
                series.method.name().to_string(),
                format!("{:.16e}", t),
                format!("{:.16e}", ecdf[i]),
                theory
                    .as_ref()
                    .map(|th| format!("{:.16e}", th[i]))
                    .unwrap_or_default(),
                ps.len().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Batch p-value correction over a statistics CSV.
pub fn cmd_correct(method: &str, config: &Path, input: &Path, out: &Path) -> Result<()> {
    let form = match method {
        "saddlepoint" => TailForm::LugannaniRice,
        "rstar_form" => TailForm::RstarForm,
        other => {
            return Err(Error::Config(format!(
                "unknown method `{other}` (expected saddlepoint or rstar_form)"
            )))
        }
    };
    let cfg = load_config(config)?;
    let section = cfg
        .calibration
        .ok_or_else(|| Error::Config("correct needs a `calibration` section".into()))?;
    section.family.validate()?;
    let has_exact = matches!(section.family, FamilySpec::GammaKnownShape { .. });
    let sided = section.sidedness;
    let sqrt_n = (section.n as f64).sqrt();

    let mut reader = csv::Reader::from_path(input)?;
    let headers = reader.headers()?.clone();
    let id_idx = headers
        .iter()
        .position(|h| h.trim() == "id")
        .ok_or_else(|| Error::Config("input CSV needs an `id` column".into()))?;
    let stat_idx = headers.iter().position(|h| h.trim() == "statistic");
    let mean_idx = headers.iter().position(|h| h.trim() == "observed_mean");
    let value_idx = stat_idx.or(mean_idx).ok_or_else(|| {
        Error::Config("input CSV needs a `statistic` or `observed_mean` column".into())
    })?;
    let value_is_stat = stat_idx.is_some();

    struct Row {
        id: String,
        p_exact: Option<f64>,
        p_normal: f64,
        p_corrected: Option<f64>,
    }
    let mut rows = Vec::new();
    let mut warnings = 0usize;
    for rec in reader.records() {
        let rec = rec?;
        let id = rec
            .get(id_idx)
            .ok_or_else(|| Error::Config("short CSV record".into()))?
            .to_string();
        let raw: f64 = rec
            .get(value_idx)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("row {id}: unparsable value")))?;
        let (statistic, mean) = if value_is_stat {
            (raw, section.a_n + raw * section.b_n / sqrt_n)
        } else {
            ((raw - section.a_n) * sqrt_n / section.b_n, raw)
        };
        let p_normal = crate::models::normal_p(statistic, sided);
        let p_corrected = match corrected_pvalue(&section.family, section.n, mean, sided, form) {
            Ok(p) => Some(p),
            Err(_) => {
                warnings += 1;
                None
            }
        };
        let p_exact = if has_exact {
            exact::gamma_exact_pvalue(&section.family, section.n, mean, sided).ok()
        } else {
            None
        };
        rows.push(Row {
            id,
            p_exact,
            p_normal,
            p_corrected,
        });
    }

    // rank by ascending corrected p; failed rows sort last
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| match (rows[a].p_corrected, rows[b].p_corrected) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut rank = vec![0usize; rows.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }

    let mut w = csv::Writer::from_path(out)?;
    let method_col = format!("p_{method}");
    if has_exact {
        w.write_record(["id", "rank", "p_exact", "p_normal", &method_col])?;
    } else {
        w.write_record(["id", "rank", "p_normal", &method_col])?;
    }
    for (i, row) in rows.iter().enumerate() {
        let corrected = row
            .p_corrected
            .map(|p| format!("{p:.16e}"))
            .unwrap_or_else(|| "NA".into());
        if has_exact {
            w.write_record([
                row.id.clone(),
                rank[i].to_string(),
                row.p_exact
                    .map(|p| format!("{p:.16e}"))
                    .unwrap_or_else(|| "NA".into()),
                format!("{:.16e}", row.p_normal),
                corrected,
            ])?;
        } else {
            w.write_record([
                row.id.clone(),
                rank[i].to_string(),
                format!("{:.16e}", row.p_normal),
                corrected,
            ])?;
        }
    }
    w.flush()?;
    if warnings > 0 {
        eprintln!("correct: {warnings} rows had no solvable correction (NA)");
    }
    println!("correct: wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

struct CurveFile {
    grid: Vec<f64>,
    values: Vec<f64>,
    n: Option<u64>,
}

fn read_curve(path: &Path) -> Result<CurveFile> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let t_idx = headers
        .iter()
        .position(|h| h.trim() == "t")
        .ok_or_else(|| Error::Config(format!("{}: needs a `t` column", path.display())))?;
    let v_idx = headers
        .iter()
        .position(|h| h.trim() == "ecdf")
        .or_else(|| headers.iter().position(|h| h.trim() == "cdf"))
        .ok_or_else(|| {
            Error::Config(format!(
                "{}: needs an `ecdf` or `cdf` column",
                path.display()
            ))
        })?;
    let n_idx = headers.iter().position(|h| h.trim() == "n");
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut n = None;
    for rec in reader.records() {
        let rec = rec?;
        let t: f64 = rec
            .get(t_idx)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("{}: bad t value", path.display())))?;
        let v: f64 = rec
            .get(v_idx)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("{}: bad curve value", path.display())))?;
        grid.push(t);
        values.push(v);
        if let Some(ni) = n_idx {
            n = rec.get(ni).and_then(|v| v.trim().parse().ok());
        }
    }
    if grid.is_empty() {
        return Err(Error::Config(format!("{}: empty curve", path.display())));
    }
    Ok(CurveFile { grid, values, n })
}

/// Compare an empirical ECDF with a theoretical curve on the same grid:
/// prints the KS distance, its location, and a shape label when the
/// empirical file carries a sample size.
pub fn cmd_compare(empirical: &Path, theory: &Path) -> Result<()> {
    let emp = read_curve(empirical)?;
    let th = read_curve(theory)?;
    if emp.grid.len() != th.grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} rows vs {} rows",
            emp.grid.len(),
            th.grid.len()
        )));
    }
    for (a, b) in emp.grid.iter().zip(&th.grid) {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::GridMismatch(format!(
                "grid points differ: {a} vs {b}"
            )));
        }
    }
    let mut ks = 0.0;
    let mut at = emp.grid[0];
    for i in 0..emp.grid.len() {
        let d = (emp.values[i] - th.values[i]).abs();
        if d > ks {
            ks = d;
            at = emp.grid[i];
        }
    }
    println!("ks_distance: {ks:.6}");
    println!("max_deviation_at: t = {at:.6}");
    match emp.n {
        Some(n) if n >= 1000 => {
            // reconstruct 20-bin masses from the ECDF by interpolation
            let mut bounds = Vec::with_capacity(21);
            for i in 0..=20 {
                bounds.push(ecdf_at(&emp, i as f64 / 20.0));
            }
            let counts: Vec<u64> = (0..20)
                .map(|i| (((bounds[i + 1] - bounds[i]).max(0.0)) * n as f64).round() as u64)
                .collect();
            let hist = Histogram { bins: 20, counts };
            let label = classify_from_histogram(&hist, n);
            println!(
                "shape: {} (low density {:.3}, high density {:.3})",
                label.shape, label.low_density, label.high_density
            );
        }
        _ => println!("shape: n/a (empirical file has no usable sample size)"),
    }
    std::io::stdout().flush()?;
    Ok(())
}

/// ECDF value at t by linear interpolation over the stored grid, clamped to
/// [0, 1] at the edges.
fn ecdf_at(curve: &CurveFile, t: f64) -> f64 {
    if t <= curve.grid[0] {
        return if t <= 0.0 {
            0.0
        } else {
            curve.values[0] * t / curve.grid[0]
        };
    }
    if t >= *curve.grid.last().unwrap() {
        let last = *curve.values.last().unwrap();
        let tl = *curve.grid.last().unwrap();
        if t >= 1.0 {
            return 1.0;
        }
        return last + (1.0 - last) * (t - tl) / (1.0 - tl);
    }
    let idx = curve.grid.partition_point(|&g| g < t);
    let (g0, g1) = (curve.grid[idx - 1], curve.grid[idx]);
    let (v0, v1) = (curve.values[idx - 1], curve.values[idx]);
    v0 + (v1 - v0) * (t - g0) / (g1 - g0)
}
