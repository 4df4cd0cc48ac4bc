//! The `resonance` command line.
//!
//! Every subcommand writes a [`Report`] as JSON lines (default) or CSV. Exit
//! codes: 0 success, 1 I/O failure, 2 invalid input, 3 resource or iteration
//! limit.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dirichlet::{self, HuntMode};
use crate::error::{Error, Result};
use crate::hunt::{self, HuntConfig};
use crate::modform::{self, PeterssonParams};
use crate::ratio;
use crate::report::{Format, Report, Row};
use crate::resonator::{self, build_table, CoefficientTable, ResonatorSpec, Scheme};
use crate::zeta::{self, SmoothWindow};

#[derive(Parser, Debug)]
#[command(name = "resonance", version, about = "Resonance method for extreme values of zeta and L-functions")]
struct Cli {
    /// Worker threads (default: RESONANCE_THREADS, else all cores)
    #[arg(long, global = true, env = "RESONANCE_THREADS")]
    threads: Option<usize>,
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// key=value config file with [global] and per-command sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the phihat.cache and wweight.cache files
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Scheme ratio against the exact optimum lambda_max
    Ratio(RatioArgs),
    /// Direct and diagonal resonance moments
    Moments(MomentsArgs),
    /// Scan [T, 2T] for large |zeta| at resonator peaks
    HuntZeta(HuntZetaArgs),
    /// Fraction of [T, 2T] where |zeta| >= e^V
    Threshold(ThresholdArgs),
    /// Extreme central values L(1/2, chi_8d)
    HuntChid(HuntChidArgs),
    /// Quadratic character sums against their predictions
    CharsumCheck(CharsumArgs),
    /// Petersson formula right-hand side
    PeterssonCheck(PeterssonArgs),
    /// Tables of the weights W and V
    Weights(WeightsArgs),
    /// Write a coefficient table in the text table format
    ExportTable(ExportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ratio(_) => "ratio",
            Command::Moments(_) => "moments",
            Command::HuntZeta(_) => "hunt-zeta",
            Command::Threshold(_) => "threshold",
            Command::HuntChid(_) => "hunt-chid",
            Command::CharsumCheck(_) => "charsum-check",
            Command::PeterssonCheck(_) => "petersson-check",
            Command::Weights(_) => "weights",
            Command::ExportTable(_) => "export-table",
        }
    }
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("window must be p0,p1")?;
    let p0 = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let p1 = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((p0, p1))
}

#[derive(Args, Debug, Clone, Serialize)]
struct TableArgs {
    /// Support bound N
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Length parameter L (default sqrt(log N log log N))
    #[arg(long = "L")]
    #[serde(rename = "L")]
    l: Option<f64>,
    /// Amplitude A of the frequency-a scheme
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a: Option<f64>,
    /// Prime window override p0,p1
    #[arg(long, value_parser = parse_window)]
    window: Option<(f64, f64)>,
}

impl TableArgs {
    fn spec(&self, default: Scheme) -> ResonatorSpec {
        let mut spec = ResonatorSpec::new(self.scheme.unwrap_or(default), self.n);
        if let Some(l) = self.l {
            spec = spec.with_l(l);
        }
        if let Some(a) = self.a {
            spec = spec.with_a(a);
        }
        if let Some((p0, p1)) = self.window {
            spec = spec.with_window(p0, p1);
        }
        spec
    }

    fn table(&self, default: Scheme) -> Result<CoefficientTable> {
        let spec = self.spec(default);
        spec.validate()?;
        build_table(&spec)
    }
}

#[derive(Args, Debug, Serialize)]
struct RatioArgs {
    #[command(flatten)]
    #[serde(flatten)]
    table: TableArgs,
    #[arg(long, default_value_t = ratio::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    table: TableArgs,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: f64,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
}

#[derive(Args, Debug, Serialize)]
struct HuntZetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    table: TableArgs,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: f64,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
    #[arg(long, default_value_t = 0.01)]
    top_fraction: f64,
    #[arg(long)]
    max_peaks: Option<usize>,
    #[arg(long, default_value_t = 40)]
    refine_iters: usize,
    /// Safety margin c in the resonance floor c/sqrt(T)
    #[arg(long, default_value_t = hunt::DEFAULT_MARGIN)]
    margin: f64,
    /// Number of seeded random points for a baseline comparison
    #[arg(long, default_value_t = 0)]
    baseline: usize,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdArgs {
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t: f64,
    /// Comma-separated levels V
    #[arg(long = "V", value_delimiter = ',', required = true)]
    #[serde(rename = "V")]
    v: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Report the frequency-a amplitude choice for this support bound
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct HuntChidArgs {
    #[command(flatten)]
    #[serde(flatten)]
    table: TableArgs,
    #[arg(long = "X")]
    #[serde(rename = "X")]
    x: f64,
    #[arg(long, value_parser = ["large", "small"], default_value = "small")]
    mode: String,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    /// Number of seeded random discriminants for a baseline comparison
    #[arg(long, default_value_t = 0)]
    baseline: usize,
}

#[derive(Args, Debug, Serialize)]
struct CharsumArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    z: u64,
}

#[derive(Args, Debug, Serialize)]
struct PeterssonArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    c_max: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct WeightsArgs {
    #[arg(long, value_parser = ["w", "v"])]
    kind: String,
    /// Weight k for V
    #[arg(long, default_value_t = 12)]
    k: u32,
    #[arg(long, default_value_t = 0.01)]
    from: f64,
    #[arg(long, default_value_t = 10.0)]
    to: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    table: TableArgs,
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match inject_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Domain(_) | Error::EmptyWindow { .. } | Error::Parse { .. } => 2,
        Error::Resource { .. } | Error::Iteration { .. } | Error::Overflow(_) => 3,
    }
}

/// Flat `key = value` lines under `[section]` headers; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, Vec<(String, String)>>> {
    let mut out: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut section = "global".to_string();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(Error::Parse {
                line: i + 1,
                msg: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            msg: format!("expected key = value, got '{line}'"),
        })?;
        out.entry(section.clone())
            .or_default()
            .push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

const GLOBAL_VALUE_FLAGS: [&str; 6] = ["--threads", "--seed", "--output", "--format", "--config", "--cache-dir"];

// Config values become flags placed right after the subcommand, unless the
// command line already sets them.
fn inject_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < strs.len() {
        let a = &strs[i];
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else if a == "--config" {
            config = strs.get(i + 1).cloned();
            i += 1;
        } else if GLOBAL_VALUE_FLAGS.contains(&a.as_str()) {
            i += 1;
        } else if !a.starts_with('-') && sub.is_none() {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let sections = parse_config(&text)?;
    let present = |key: &str| {
        let flag = format!("--{key}");
        strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra: Vec<OsString> = Vec::new();
    for name in ["global", strs[sub].as_str()] {
        for (k, v) in sections.get(name).into_iter().flatten() {
            if present(k) || k == "config" {
                continue;
            }
            match v.as_str() {
                "false" => {}
                "true" => extra.push(format!("--{k}").into()),
                _ => {
                    extra.push(format!("--{k}").into());
                    extra.push(v.into());
                }
            }
        }
    }
    let mut out = args;
    out.splice(sub + 1..sub + 1, extra);
    Ok(out)
}

fn execute(cli: &Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        if let Command::ExportTable(a) = &cli.command {
            let table = a.table.table(Scheme::Theorem21)?;
            return with_output(cli.output.as_deref(), |w| resonator::write_table(&table, w));
        }
        let report = build_report(cli)?;
        with_output(cli.output.as_deref(), |w| report.write(cli.format, w))
    })
}

fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut w = io::BufWriter::new(fs::File::create(p)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut w = io::BufWriter::new(stdout.lock());
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

/// Config echo: the command's arguments plus seed and format. Threads, paths
/// and cache location are left out so reports compare equal across machines.
fn config_echo(cli: &Cli) -> Value {
    let mut v = serde_json::to_value(&cli.command).unwrap_or(Value::Null);
    // externally tagged: {"ratio": {...}}
    let args = v
        .as_object_mut()
        .and_then(|m| m.values_mut().next())
        .map(Value::take)
        .unwrap_or(Value::Null);
    json!({
        "command": cli.command.name(),
        "seed": cli.seed,
        "format": cli.format,
        "args": args,
    })
}

fn build_report(cli: &Cli) -> Result<Report> {
    let mut rep = Report::new(config_echo(cli));
    let seed = cli.seed;
    let cache = cli.cache_dir.as_deref();
    match &cli.command {
        Command::Ratio(a) => {
            let n = a.table.n;
            let eig = ratio::max_ratio_eigen(n, a.tol)?;
            let mut row = Row::new(
                "ratio",
                &json!({
                    "N": n,
                    "lambda_max": eig.lambda_max,
                    "iterations": eig.iterations,
                }),
            )?;
            let spec = a.table.spec(Scheme::Theorem21);
            match build_table(&spec) {
                Ok(table) => {
                    let h = resonator::ratio_exact(&table);
                    row = row
                        .with("scheme", spec.summary())
                        .with("heuristic", h)
                        .with("gap", eig.lambda_max - h)
                        .with("within_bound", h <= eig.lambda_max * (1.0 + 1e-9));
                }
                // λ_max is still meaningful when the scheme's window has no primes
                Err(Error::EmptyWindow { .. }) => {
                    row = row.with("scheme", spec.summary()).with("heuristic", Value::Null);
                }
                Err(e) => return Err(e),
            }
            rep.push(row);
        }
        Command::Moments(a) => {
            if let Some(dir) = cache {
                SmoothWindow::init_cache(dir)?;
            }
            let table = a.table.table(Scheme::Theorem21)?;
            let m = zeta::moments(&table, a.t, a.grid_step)?;
            let rel1 = (m.m1_direct - m.m1_diag).abs() / m.m1_diag;
            let rel2 = (m.m2_direct - m.m2_diag).norm() / m.m2_diag.abs();
            rep.push(Row::new("moments", &m)?.with("rel_m1", rel1).with("rel_m2", rel2));
        }
        Command::HuntZeta(a) => {
            rep.provenance.heuristic_margin = Some(a.margin);
            let table = a.table.table(Scheme::Theorem21)?;
            let cfg = HuntConfig {
                t: a.t,
                grid_step: a.grid_step,
                top_fraction: a.top_fraction,
                max_peaks: a.max_peaks,
                refine_iters: a.refine_iters,
                seed,
            };
            let res = hunt::scan(&table, &cfg)?;
            let floor = hunt::guaranteed_lower_bound(&table, a.t, a.margin)?;
            let best = res.records.iter().map(|r| r.target_value).fold(0.0, f64::max);
            let mut summary = Row::new(
                "hunt-summary",
                &json!({
                    "guaranteed_lower_bound": floor,
                    "degenerate": res.degenerate,
                    "grid_points": res.grid_points,
                    "peaks_found": res.peaks_found,
                    "best_target_value": best,
                }),
            )?;
            let baseline = if a.baseline > 0 {
                let b = hunt::random_baseline(a.t, a.baseline, seed)?;
                let bmax = b.iter().map(|&(_, z)| z).fold(0.0, f64::max);
                summary = summary.with("baseline_max", bmax).with("resonator_wins", best >= bmax);
                b
            } else {
                Vec::new()
            };
            rep.push(summary);
            for r in &res.records {
                rep.push(Row::new("extreme", r)?);
            }
            for (i, (t, z)) in baseline.into_iter().enumerate() {
                rep.push(Row::new("baseline", &json!({"index": i, "location": t, "target_value": z}))?);
            }
        }
        Command::Threshold(a) => {
            let curve = hunt::threshold_curve(a.t, &a.v, a.samples, seed)?;
            for e in curve {
                let mut row = Row::new("threshold", &e)?
                    .with("T", a.t)
                    .with("samples", a.samples)
                    .with("measure_floor", hunt::measure_floor(a.t));
                if let Some(n) = a.n {
                    let choice = hunt::choose_a(e.v, (n as f64).ln())?;
                    row = row.with("A", choice.a).with("predicted_gain", choice.predicted_gain);
                }
                rep.push(row);
            }
        }
        Command::HuntChid(a) => {
            if let Some(dir) = cache {
                dirichlet::init_w_cache(dir)?;
            }
            let mode: HuntMode = a.mode.parse()?;
            let spec = a.table.spec(Scheme::DirichletF);
            spec.validate()?;
            let records = dirichlet::hunt_discriminants(&spec, a.x, mode, a.budget)?;
            let table = dirichlet::hunt_table(&spec, mode)?;
            let mut summary = Row::new(
                "hunt-chid-summary",
                &json!({
                    "X": a.x,
                    "mode": a.mode,
                    "candidates": dirichlet::discriminant_range(a.x)?.len(),
                    "evaluated": records.len(),
                }),
            )?;
            if table.is_odd_supported() {
                let m1 = dirichlet::m1_quadratic(&table, a.x)?;
                summary = summary.with("m1_sum_main", m1.sum_main).with("m1_euler_main", m1.euler_main);
                match dirichlet::m2_main(&table, a.x) {
                    Ok(m2) => {
                        summary = summary
                            .with("m2_triple_sum", m2.triple_sum)
                            .with("m2_euler_exact", m2.euler_exact)
                            .with("m2_euler_approx", m2.euler_approx)
                            .with("constant_c", m2.constant_c);
                    }
                    Err(Error::Resource { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            let baseline = if a.baseline > 0 {
                let b = dirichlet::random_discriminants(a.x, a.baseline, seed)?;
                let mut vals: Vec<f64> = b.iter().map(|r| r.l_value).collect();
                vals.sort_by(f64::total_cmp);
                let p5 = vals[(vals.len() - 1) * 5 / 100];
                let p95 = vals[(vals.len() - 1) * 95 / 100];
                summary = summary.with("baseline_p5", p5).with("baseline_p95", p95);
                b
            } else {
                Vec::new()
            };
            rep.push(summary);
            for (i, r) in records.iter().enumerate() {
                rep.push(Row::new("discriminant", r)?.with("rank", i + 1));
            }
            for (i, r) in baseline.iter().enumerate() {
                rep.push(Row::new("baseline", r)?.with("index", i));
            }
        }
        Command::CharsumCheck(a) => {
            let c = dirichlet::char_sum_check(a.n, a.z)?;
            rep.push(Row::new("charsum", &c)?.with("holds", c.holds()));
        }
        Command::PeterssonCheck(a) => {
            let mut p = PeterssonParams::new(a.k, a.m, a.n);
            if let Some(c) = a.c_max {
                p = p.with_c_max(c);
            }
            let r = modform::petersson_rhs(&p)?;
            rep.push(
                Row::new("petersson", &r)?
                    .with("k", a.k)
                    .with("m", a.m)
                    .with("n", a.n)
                    .with("deviation", (r.value - r.delta as f64).abs()),
            );
        }
        Command::Weights(a) => {
            if !(a.from > 0.0 && a.to >= a.from) || a.points < 1 {
                return Err(Error::Domain("weights need 0 < from <= to and points >= 1".into()));
            }
            if a.kind == "w" {
                if let Some(dir) = cache {
                    dirichlet::init_w_cache(dir)?;
                }
            }
            for i in 0..a.points {
                let x = if a.points == 1 {
                    a.from
                } else {
                    a.from + (a.to - a.from) * i as f64 / (a.points - 1) as f64
                };
                let (value, kind) = match a.kind.as_str() {
                    "w" => (dirichlet::weight_w(x)?, "W"),
                    _ => (modform::weight_v(x, a.k)?, "V"),
                };
                let mut row = Row::new("weight", &json!({"kind": kind, "x": x, "value": value}))?;
                if kind == "V" {
                    row = row.with("k", a.k);
                }
                rep.push(row);
            }
        }
        Command::ExportTable(_) => unreachable!("handled before report construction"),
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sections() {
        let c = parse_config("seed = 3\n[ratio]\nN = 5 # comment\n").unwrap();
        assert_eq!(c["global"], vec![("seed".to_string(), "3".to_string())]);
        assert_eq!(c["ratio"], vec![("N".to_string(), "5".to_string())]);
        assert!(matches!(parse_config("[x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("a\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["resonance", "ratio", "--N", "0"]), 2);
        assert_eq!(run(["resonance", "bogus"]), 2);
        assert_eq!(run(["resonance", "ratio", "--N", "30000"]), 3);
    }
}
