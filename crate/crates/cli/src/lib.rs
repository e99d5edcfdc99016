//! `orbitctl`: enumerate periodic orbits, then report pressure, Legendre
//! data, dimension, window counts, Weyl sums and transfer-operator decay.
//!
//! Every subcommand reads the orbit cache, extends it to the periods it
//! needs, and writes one CSV report with a header row.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use orbitctl_core::acceptance::Suite;
use orbitctl_core::counting::{
    convergence_report, count_orbits, logarithmic_integral, ow_count_report, predict_shrinking,
    weyl_sums, CountQuery, ReportRow,
};
use orbitctl_core::orbits::{Method, OrbitDatabase};
use orbitctl_core::report;
use orbitctl_core::thermo::{
    bowen_dimension, bowen_dimension_fitted, maxent_mean, pressure_curve, thermo_profile_with,
    ThermoProfile,
};
use orbitctl_core::transfer::{build_mesh, decay_probe, normalize, transfer_dimension};
use orbitctl_core::{Error, RationalMap, Result};
use serde::Serialize;

use crate::cache::Cache;
use crate::config::{config_error, parse_config, AlphaName, AlphaSpec, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "orbitctl",
    version,
    about = "Periodic-orbit statistics of hyperbolic rational maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate periods 1..=n_max into the cache and log the census identity.
    Enumerate(Common),
    /// Legendre data (ξ, σ², H) at each period of the range.
    Profile(Common),
    /// Pressure and its first two derivatives on a grid of t at n_max.
    Pressure {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        t_max: f64,
        #[arg(long, default_value_t = 41)]
        t_steps: usize,
        /// Use log(Z_n/Z_{n-1}) in place of (1/n) log Z_n.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Bowen dimension from orbit sums at n_max and from the transfer operator.
    Dimension(Common),
    /// Window counts against the predicted asymptotics over the range.
    Count {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Holonomy Weyl sums for k = 1..=k_max over the range.
    Weyl {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Orbits with |λ| < t against Li(t^δ); t defaults to e^{χn} over the range.
    Owcount {
        #[command(flatten)]
        common: Common,
        #[arg(long = "t")]
        thresholds: Vec<f64>,
    },
    /// Decay rates of the twisted normalized operator at depth.
    Decay {
        #[command(flatten)]
        common: Common,
        /// `b,k` pairs separated by `;`.
        #[arg(long, default_value = "0,0;5,0;0,1;3,2", allow_hyphen_values = true)]
        pairs: String,
        #[arg(long, default_value_t = 80)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xi: f64,
    },
    /// Run the acceptance suite, one line per criterion.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Criterion numbers to run; all when empty.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON map: {"numerator": [[re, im], ...], "denominator": [...]}, ascending powers.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Periods `a..b` (inclusive) or a single period.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Directory for the CSV report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `maxent` or a number.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// backward, roots or both.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub override_hyperbolicity: bool,
    #[arg(long)]
    pub override_budget: bool,
}

#[derive(Debug, Args, Default)]
pub struct WindowArgs {
    /// `a,b` for the multiplier window.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    /// Arc centre in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub arc_center: Option<f64>,
    /// Arc width as a fraction of the circle.
    #[arg(long)]
    pub arc_width: Option<f64>,
}

/// Parses `a..b` or `b` into an inclusive range.
pub fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || config_error("n", format!("expected `a..b` or a period, got {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    match text.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b.trim_start_matches('='))?)),
        None => {
            let n = num(text)?;
            Ok((n, n))
        }
    }
}

fn parse_pair(text: &str, key: &str) -> Result<(f64, f64)> {
    let bad = || config_error(key, format!("expected `a,b`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

/// Configuration after merging the file with flags and validating.
fn resolve(common: &Common, window: Option<&WindowArgs>, default_n: usize) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => {
            let map = common
                .map
                .clone()
                .ok_or_else(|| config_error("map", "pass --map or --config"))?;
            RunConfig::new(map, default_n)
        }
    };
    if let Some(map) = &common.map {
        cfg.map = map.clone();
    }
    if let Some(n) = &common.n {
        (cfg.n_min, cfg.n_max) = parse_range(n)?;
    }
    if let Some(dir) = &common.cache {
        cfg.cache_dir = dir.clone();
    }
    cfg.cache_dir = cache::resolve_dir(&cfg.cache_dir);
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(a) = &common.alpha {
        cfg.alpha = a.parse()?;
    }
    if let Some(d) = common.depth {
        cfg.depth = d;
    }
    if let Some(m) = &common.method {
        cfg.method = Some(
            m.parse::<Method>()
                .map_err(|e| config_error("method", e.to_string()))?,
        );
    }
    cfg.override_hyperbolicity |= common.override_hyperbolicity;
    cfg.override_budget |= common.override_budget;
    if let Some(w) = window {
        if let Some(text) = &w.interval {
            cfg.interval = parse_pair(text, "interval")?;
        }
        if let Some(c) = w.arc_center {
            cfg.arc.center_angle = c;
        }
        if let Some(k) = w.arc_width {
            cfg.arc.width_fraction = k;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_map(cfg: &RunConfig) -> Result<RationalMap> {
    let text = std::fs::read_to_string(&cfg.map)
        .map_err(|e| config_error("map", format!("{}: {e}", cfg.map.display())))?;
    let map = RationalMap::from_json(&text).map_err(|e| match e {
        Error::Json(j) => config_error("map", j.to_string()),
        other => other,
    })?;
    cfg.check_budget(map.degree())?;
    Ok(map)
}

/// The map and its census through `n_max`, with the cache updated.
fn census(cfg: &RunConfig) -> Result<(RationalMap, OrbitDatabase)> {
    let map = load_map(cfg)?;
    let cache = Cache::open(&cfg.cache_dir, &map)?;
    let mut db = cache.load(&map)?;
    if let Some(m) = cfg.method {
        db = db.with_method(m);
    }
    db.options.override_hyperbolicity = cfg.override_hyperbolicity;
    let before = db.complete_through();
    db.ensure(&map, 1..=cfg.n_max)?;
    if db.complete_through() > before {
        cache.store(&db)?;
    }
    Ok((map, db))
}

fn resolve_alpha(cfg: &RunConfig, db: &OrbitDatabase) -> Result<f64> {
    match cfg.alpha {
        AlphaSpec::Value(a) => Ok(a),
        AlphaSpec::Named(AlphaName::Maxent) => maxent_mean(db, cfg.n_max),
    }
}

fn profile_at(cfg: &RunConfig, db: &OrbitDatabase, alpha: f64, n: usize) -> Result<ThermoProfile> {
    thermo_profile_with(db, alpha, n, cfg.tolerances.t_span)
}

fn emit<T: Serialize>(cfg: &RunConfig, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
    match &cfg.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.csv"));
            report::write_file(&path, header, rows)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", report::to_string(header, rows)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct CensusRow {
    n: usize,
    repelling: usize,
    nonrepelling: usize,
    fixed_points: usize,
    census_total: usize,
    identity_holds: bool,
    method: String,
}

#[derive(Serialize)]
struct DimensionRow {
    estimator: &'static str,
    delta: f64,
    residual: f64,
    n_used: usize,
}

#[derive(Serialize)]
struct OwRow {
    t: f64,
    count: usize,
    li: f64,
    ratio: f64,
    complete_through: usize,
    truncated: bool,
}

fn enumerate(cfg: &RunConfig) -> Result<()> {
    let (_, db) = census(cfg)?;
    let mut rows = Vec::new();
    for n in cfg.n_min..=cfg.n_max {
        let entry = db.entry(n).ok_or_else(|| Error::IncompleteCensus {
            n,
            reason: "period not enumerated".into(),
        })?;
        let (total, expected) = db.census_identity(n)?;
        eprintln!(
            "period {n}: {} repelling, {} non-repelling, census {total}/{expected}",
            entry.repelling.len(),
            entry.nonrepelling.len()
        );
        rows.push(CensusRow {
            n,
            repelling: entry.repelling.len(),
            nonrepelling: entry.nonrepelling.len(),
            fixed_points: expected,
            census_total: total,
            identity_holds: total == expected,
            method: entry.method.to_string(),
        });
    }
    emit(
        cfg,
        "census",
        &[
            "n",
            "repelling",
            "nonrepelling",
            "fixed_points",
            "census_total",
            "identity_holds",
            "method",
        ],
        &rows,
    )
}

fn profile(cfg: &RunConfig) -> Result<()> {
    let (_, db) = census(cfg)?;
    let alpha = resolve_alpha(cfg, &db)?;
    let rows = (cfg.n_min..=cfg.n_max)
        .map(|n| profile_at(cfg, &db, alpha, n))
        .collect::<Result<Vec<_>>>()?;
    emit(cfg, "profile", report::PROFILE_HEADER, &rows)
}

fn pressure(
    cfg: &RunConfig,
    t_min: f64,
    t_max: f64,
    steps: usize,
    extrapolate: bool,
) -> Result<()> {
    if steps < 2 || !(t_min < t_max) {
        return Err(config_error(
            "t_steps",
            "need t_min < t_max and at least two steps",
        ));
    }
    let (_, db) = census(cfg)?;
    let alpha = resolve_alpha(cfg, &db)?;
    let ts: Vec<f64> = (0..steps)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let curve = pressure_curve(&db, alpha, &ts, cfg.n_max, extrapolate)?;
    emit(cfg, "pressure", report::PRESSURE_HEADER, &curve.samples)
}

fn dimension(cfg: &RunConfig) -> Result<()> {
    let (map, db) = census(cfg)?;
    let n = cfg.n_max;
    let plain = bowen_dimension(&db, n)?;
    let mut rows = vec![DimensionRow {
        estimator: "orbit-sums",
        delta: plain.delta,
        residual: plain.residual,
        n_used: n,
    }];
    if n >= 4 {
        let fitted = bowen_dimension_fitted(&db, n)?;
        rows.push(DimensionRow {
            estimator: "orbit-sums-fitted",
            delta: fitted.delta,
            residual: fitted.residual,
            n_used: n,
        });
    }
    let transfer = transfer_dimension(&build_mesh(&map, cfg.depth)?)?;
    rows.push(DimensionRow {
        estimator: "transfer-op",
        delta: transfer.delta,
        residual: transfer.residual,
        n_used: cfg.depth,
    });
    emit(
        cfg,
        "dimension",
        &["estimator", "delta", "residual", "n_used"],
        &rows,
    )
}

fn count(cfg: &RunConfig) -> Result<()> {
    let (_, db) = census(cfg)?;
    let alpha = resolve_alpha(cfg, &db)?;
    let profile = profile_at(cfg, &db, alpha, cfg.n_max)?;
    let rows = match &cfg.schedule {
        None => {
            let template = CountQuery {
                n: cfg.n_min,
                alpha,
                interval: cfg.interval,
                arc: cfg.arc,
            };
            convergence_report(
                &db,
                |_| Ok(profile.clone()),
                &template,
                cfg.n_min..=cfg.n_max,
            )?
            .rows
        }
        Some(schedule) => (cfg.n_min..=cfg.n_max)
            .map(|n| {
                let q = schedule.query(n, alpha)?;
                let count = count_orbits(&db, &q)?;
                let prediction = predict_shrinking(&profile, schedule, n)?;
                Ok(ReportRow {
                    n,
                    count,
                    prediction,
                    ratio: (prediction > 0.0).then(|| count as f64 / prediction),
                    alpha,
                    xi: profile.xi,
                    sigma2: profile.sigma2,
                    h: profile.h,
                    interval_a: q.interval.0,
                    interval_b: q.interval.1,
                    arc_center: q.arc.center_angle,
                    arc_width: q.arc.width_fraction,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    emit(cfg, "count", report::COUNT_HEADER, &rows)
}

fn weyl(cfg: &RunConfig, k_max: Option<usize>) -> Result<()> {
    let (_, db) = census(cfg)?;
    let alpha = resolve_alpha(cfg, &db)?;
    let k = k_max.unwrap_or(cfg.k_max);
    let sums = (cfg.n_min..=cfg.n_max)
        .map(|n| weyl_sums(&db, n, alpha, cfg.interval, k))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<report::WeylRow> = sums.iter().flat_map(report::WeylRow::from_sums).collect();
    emit(cfg, "weyl", report::WEYL_HEADER, &rows)
}

fn owcount(cfg: &RunConfig, thresholds: &[f64]) -> Result<()> {
    let (_, db) = census(cfg)?;
    let chi = maxent_mean(&db, cfg.n_max)?;
    let delta = if cfg.n_max >= 4 {
        bowen_dimension_fitted(&db, cfg.n_max)?.delta
    } else {
        bowen_dimension(&db, cfg.n_max)?.delta
    };
    let ts: Vec<f64> = if thresholds.is_empty() {
        (cfg.n_min..=cfg.n_max)
            .map(|n| (chi * n as f64).exp())
            .collect()
    } else {
        thresholds.to_vec()
    };
    let mut rows = Vec::new();
    for t in ts {
        let r = ow_count_report(&db, t)?;
        let x = t.powf(delta);
        let li = if x > 2.0 {
            logarithmic_integral(x)?
        } else {
            0.0
        };
        rows.push(OwRow {
            t,
            count: r.count,
            li,
            ratio: if li > 0.0 {
                r.count as f64 / li
            } else {
                f64::NAN
            },
            complete_through: r.complete_through,
            truncated: r.truncated,
        });
    }
    if rows.iter().any(|r| r.truncated) {
        eprintln!("warning: some counts are truncated by the census depth");
    }
    emit(
        cfg,
        "owcount",
        &["t", "count", "li", "ratio", "complete_through", "truncated"],
        &rows,
    )
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, i64)>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (b, k) = parse_pair(s, "pairs")?;
            if k.fract() != 0.0 {
                return Err(config_error(
                    "pairs",
                    format!("k must be an integer, got {k}"),
                ));
            }
            Ok((b, k as i64))
        })
        .collect()
}

fn decay(cfg: &RunConfig, pairs: &str, steps: usize, xi: f64) -> Result<()> {
    let pairs = parse_pairs(pairs)?;
    let map = load_map(cfg)?;
    let alpha = match cfg.alpha {
        AlphaSpec::Value(a) => a,
        AlphaSpec::Named(_) => census(cfg).and_then(|(_, db)| resolve_alpha(cfg, &db))?,
    };
    let op = normalize(build_mesh(&map, cfg.depth)?, xi, alpha)?;
    let rows = pairs
        .iter()
        .map(|&(b, k)| decay_probe(&op, b, k, steps))
        .collect::<Result<Vec<_>>>()?;
    emit(cfg, "decay", report::DECAY_HEADER, &rows)
}

/// Runs the suite; `Ok(false)` when any criterion fails.
fn verify(cfg: &RunConfig, criteria: &[usize]) -> Result<bool> {
    let suite = Suite::new(load_map(cfg)?);
    let ids: Vec<usize> = if criteria.is_empty() {
        orbitctl_core::acceptance::CRITERIA
            .iter()
            .map(|c| c.0)
            .collect()
    } else {
        criteria.to_vec()
    };
    let mut all = true;
    for id in ids {
        let r = suite.run(id);
        println!("{r}");
        all &= r.passed;
    }
    Ok(all)
}

fn execute(command: &Command) -> Result<i32> {
    let ok = |r: Result<()>| r.map(|_| 0);
    match command {
        Command::Enumerate(c) => ok(enumerate(&resolve(c, None, 10)?)),
        Command::Profile(c) => ok(profile(&resolve(c, None, 12)?)),
        Command::Pressure {
            common,
            t_min,
            t_max,
            t_steps,
            extrapolate,
        } => ok(pressure(
            &resolve(common, None, 12)?,
            *t_min,
            *t_max,
            *t_steps,
            *extrapolate,
        )),
        Command::Dimension(c) => ok(dimension(&resolve(c, None, 12)?)),
        Command::Count { common, window } => ok(count(&resolve(common, Some(window), 12)?)),
        Command::Weyl {
            common,
            window,
            k_max,
        } => ok(weyl(&resolve(common, Some(window), 12)?, *k_max)),
        Command::Owcount { common, thresholds } => {
            ok(owcount(&resolve(common, None, 12)?, thresholds))
        }
        Command::Decay {
            common,
            pairs,
            steps,
            xi,
        } => ok(decay(&resolve(common, None, 12)?, pairs, *steps, *xi)),
        Command::Verify { common, criteria } => {
            // The suite fixes its own periods; budget checks do not apply.
            let mut cfg = resolve(common, None, 12)?;
            cfg.override_budget = true;
            Ok(if verify(&cfg, criteria)? { 0 } else { 1 })
        }
    }
}

/// Machine-readable failure record for stderr.
pub fn error_record(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    })
    .to_string()
}

/// Parses `argv` (program name first) and runs; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_pairs() {
        assert_eq!(parse_range("1..10").unwrap(), (1, 10));
        assert_eq!(parse_range("3..=7").unwrap(), (3, 7));
        assert_eq!(parse_range("12").unwrap(), (12, 12));
        assert!(parse_range("a..3").is_err());
        assert_eq!(parse_pair("-1, 1", "interval").unwrap(), (-1.0, 1.0));
        assert_eq!(
            parse_pairs("0,0;5,0; 3,2").unwrap(),
            vec![(0.0, 0), (5.0, 0), (3.0, 2)]
        );
        assert!(parse_pairs("1,0.5").is_err());
    }

    #[test]
    fn error_record_is_json() {
        let e = config_error("n_max", "too large");
        let v: serde_json::Value = serde_json::from_str(&error_record(&e)).unwrap();
        assert_eq!(v["error"], "config");
        assert_eq!(v["exit_code"], 2);
    }
}
