//! The `ftransport` command line: law suites, holonomy sweeps, liftings and
//! factorizations, written as JSON reports and CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::bundle::{FibreElement, FibreValue};
use crate::error::{Error, Result};
use crate::factorization::{canonical_factorization, gauge_report, round_trip_report};
use crate::holonomy::{holonomy_angle, step_sweep, sweep_rows, SweepRow, OCTANT_HOLONOMY};
use crate::instances::{all_preset_names, instance_from_json, preset, Instance};
use crate::lifting::{
    check_global_uniqueness, check_projection, check_self_consistency, fibre_cover, lift, UniquenessScope,
};
use crate::path::{equator_loop, octant_loop, Interval, Path};
use crate::tolerance;
use crate::transport::{
    check_group_law, check_identity_law, check_inverse_path_law, check_inversion, check_linearity, check_locality,
    check_metric_consistency, check_product_law, check_reparam_invariance, check_same_side_product_law,
    check_transported_sections, law_tolerance, CheckConfig, LawReport, Properties,
};

/// Every law id the checker understands.
pub const LAWS: [&str; 17] = [
    "2.2",
    "2.3",
    "2.4",
    "2.5/2.7",
    "2.6",
    "2.8",
    "2.9",
    "3.1",
    "3.2",
    "3.4",
    "3.5",
    "3.6-roundtrip",
    "3.11/3.12",
    "4.2",
    "4.4",
    "4.6",
    "4.7",
];

/// Number of random gauges drawn for `3.11/3.12`.
pub const GAUGE_TRIALS: usize = 20;

/// Grid size of factorization checks.
pub const FACTORIZATION_GRID: usize = 11;

#[derive(Parser, Debug)]
#[command(
    name = "ftransport",
    version,
    about = "Law checks, liftings and factorizations of fibre maps along paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run law checkers and write one report per law.
    Check(CheckArgs),
    /// Holonomy angle around a loop for a sweep of integrator steps.
    Holonomy(HolonomyArgs),
    /// Sample the lifting of a path through a fibre element.
    Lift(LiftArgs),
    /// Canonical factorization of a transport along a path.
    Factorize(FactorizeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Preset name or path to a JSON instance.
    #[arg(long, default_value = "perm-c3")]
    pub instance: String,
    #[arg(long, env = "FT_DEFAULT_SEED", default_value_t = tolerance::DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated law ids, or `all` for every law the instance declares.
    #[arg(long, default_value = "all")]
    pub laws: String,
    #[arg(long, default_value_t = tolerance::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Tolerance override `LAW=VALUE`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct HolonomyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `octant` or `equator`; `instance` takes the instance's own loop.
    #[arg(long = "loop", default_value = "instance")]
    pub loop_name: String,
    /// Comma-separated integrator steps.
    #[arg(long, default_value = "4e-3,2e-3,1e-3")]
    pub steps: String,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Index into the instance's paths; its lifting path when absent.
    #[arg(long)]
    pub path: Option<usize>,
    /// A label of a finite fibre or comma-separated vector components.
    #[arg(long)]
    pub element: String,
    /// Anchor parameter; the start of the path when absent.
    #[arg(long)]
    pub s0: Option<f64>,
    /// A point count or a comma-separated list of parameters; `runs` gives
    /// one row per constancy run.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub path: Option<usize>,
    #[arg(long)]
    pub s0: Option<f64>,
    /// Number of evenly spaced grid points, or a comma-separated list.
    #[arg(long, default_value_t = FACTORIZATION_GRID.to_string())]
    pub grid: String,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (law, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected LAW=VALUE, got `{s}`"))?;
    let v: f64 = value.parse().map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    if v.is_nan() || v < 0.0 {
        return Err(format!("tolerance must be nonnegative, got {v}"));
    }
    Ok((law.to_string(), v))
}

/// Everything `check` needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub instance: String,
    pub laws: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    /// Every applicable law of `instance` with the default seed and trial count.
    pub fn new(instance: &str) -> Self {
        RunConfig {
            instance: instance.to_string(),
            laws: vec!["all".into()],
            seed: tolerance::DEFAULT_SEED,
            trials: tolerance::DEFAULT_TRIALS,
            tolerances: BTreeMap::new(),
            out: None,
            format: Format::Json,
        }
    }

    pub fn with_laws(mut self, laws: &[&str]) -> Self {
        self.laws = laws.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_out(mut self, out: &FsPath) -> Self {
        self.out = Some(out.to_path_buf());
        self
    }
}

/// A preset name, or a path to a JSON instance file.
pub fn load_instance(source: &str) -> Result<Instance> {
    if source.starts_with("counterexample:") || all_preset_names().iter().any(|n| n == source) {
        return preset(source);
    }
    let path = FsPath::new(source);
    if path.is_file() {
        return instance_from_json(&fs::read_to_string(path)?);
    }
    Err(Error::UnknownInstance(source.to_string()))
}

/// The laws an instance declares, in [`LAWS`] order. Negative controls get
/// every law their structure admits except global uniqueness.
pub fn applicable_laws(inst: &Instance) -> Vec<&'static str> {
    let t = inst.transport.as_ref();
    let props = if inst.negative_control {
        Properties::LOCAL | Properties::REPARAM_INVARIANT | Properties::LINEAR | Properties::METRIC_CONSISTENT
    } else {
        t.properties()
    };
    let bundle = t.bundle();
    LAWS.iter()
        .copied()
        .filter(|&law| match law {
            "2.5/2.7" => props.contains(Properties::LOCAL),
            "2.6" | "3.2" => props.contains(Properties::REPARAM_INVARIANT),
            "3.4" | "3.5" => {
                inst.product.is_some() && props.contains(Properties::LOCAL | Properties::REPARAM_INVARIANT)
            }
            "2.8" => props.contains(Properties::LINEAR) && bundle.is_vector(),
            "2.9" => props.contains(Properties::METRIC_CONSISTENT) && bundle.metric().is_some(),
            "4.4" => props.contains(Properties::GLOBAL),
            "4.7" => bundle.is_finite() && inst.paths.iter().any(Path::is_discrete),
            _ => true,
        })
        .collect()
}

fn resolve_laws(inst: &Instance, requested: &[String]) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for law in requested.iter().map(|l| l.trim()).filter(|l| !l.is_empty()) {
        if law == "all" {
            out.extend(applicable_laws(inst).into_iter().map(String::from));
        } else if LAWS.contains(&law) {
            out.push(law.to_string());
        } else {
            return Err(Error::UnknownLaw(law.to_string()));
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|l| seen.insert(l.clone()));
    Ok(out)
}

fn no_product(inst: &Instance) -> Error {
    Error::Config(format!("instance `{}` declares no product path", inst.name))
}

/// Runs one law checker with the configuration's seed, trial count and
/// tolerance. Finite fibres over piecewise paths are enumerated exhaustively.
pub fn run_law(inst: &Instance, law: &str, cfg: &RunConfig) -> Result<LawReport> {
    let t = inst.transport.as_ref();
    let tol = cfg
        .tolerances
        .get(law)
        .copied()
        .unwrap_or_else(|| law_tolerance(law, t.tolerance()));
    let mut cc = CheckConfig::new(cfg.trials, tol, cfg.seed);
    if t.bundle().is_finite() {
        cc = cc.exhaustive();
    }
    let paths = &inst.paths;
    let start = inst.lift_path.domain().lo();
    let grid = || {
        let d = inst.lift_path.domain();
        tolerance::linspace(d.lo(), d.hi(), FACTORIZATION_GRID)
    };
    let mut report = match law {
        "2.2" => check_group_law(t, paths, &cc),
        "2.3" => check_identity_law(t, paths, &cc),
        "2.4" => check_transported_sections(t, paths, &cc),
        "2.5/2.7" => check_locality(t, paths, &cc),
        "2.6" => check_reparam_invariance(t, paths, &[], &cc),
        "2.8" => check_linearity(t, paths, &cc),
        "2.9" => {
            let metric = t.bundle().metric().ok_or(Error::WrongBundleKind {
                expected: "metric bundle",
            })?;
            check_metric_consistency(t, metric, paths, &cc)
        }
        "3.1" => check_inversion(t, paths, &cc),
        "3.2" => check_inverse_path_law(t, paths, &cc),
        "3.4" => {
            let (p1, p2, chi) = inst.product.as_ref().ok_or_else(|| no_product(inst))?;
            check_product_law(t, p1, p2, chi, &cc)
        }
        "3.5" => {
            let (p1, p2, chi) = inst.product.as_ref().ok_or_else(|| no_product(inst))?;
            check_same_side_product_law(t, p1, p2, chi, &cc)
        }
        "3.6-roundtrip" => round_trip_report(t, &inst.lift_path, start, &grid(), tol),
        "3.11/3.12" => gauge_report(t, &inst.lift_path, start, &grid(), GAUGE_TRIALS, cfg.seed, tol),
        "4.2" => check_projection(t, paths, &cc),
        "4.4" => {
            let loops: Vec<Path> = inst.loop_path.iter().cloned().chain(paths.iter().cloned()).collect();
            check_global_uniqueness(t, &loops, &UniquenessScope::Paths, tol)
        }
        "4.6" => check_self_consistency(&inst.transport, paths, &cc),
        "4.7" => {
            let mut report = LawReport::new("4.7", t.name(), 0.0);
            for p in paths.iter().filter(|p| p.is_discrete()) {
                report.absorb(&fibre_cover(t, p, p.domain().lo())?);
            }
            Ok(report)
        }
        other => Err(Error::UnknownLaw(other.to_string())),
    }?;
    report.law = law.to_string();
    report.transport = inst.name.clone();
    Ok(report)
}

/// File name of a law's report.
pub fn report_file_name(law: &str) -> String {
    format!("law-{}.json", law.replace('/', "_"))
}

fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs `check`: every requested law, reports written in request order.
pub fn run_check(cfg: &RunConfig) -> Result<Vec<LawReport>> {
    let inst = load_instance(&cfg.instance)?;
    let laws = resolve_laws(&inst, &cfg.laws)?;
    let reports = laws
        .iter()
        .map(|l| run_law(&inst, l, cfg))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        match cfg.format {
            Format::Json => {
                for r in &reports {
                    fs::write(dir.join(report_file_name(&r.law)), r.to_json() + "\n")?;
                }
            }
            Format::Csv => fs::write(dir.join("reports.csv"), reports_csv(&reports))?,
        }
    }
    Ok(reports)
}

/// One CSV row per report.
pub fn reports_csv(reports: &[LawReport]) -> String {
    let mut out = String::from("law,transport,trials,max_deviation,tolerance,failure_count,passed\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.law,
            r.transport,
            r.trials,
            csv_float(r.max_deviation),
            csv_float(r.tolerance),
            r.failure_count,
            r.passed()
        );
    }
    out
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number `{x}`: {e}")))
        })
        .collect()
}

/// Holonomy rows for `loop_name` on the instance. The Levi-Civita preset
/// is re-integrated at every step; other transports have no step and
/// repeat their single angle.
pub fn run_holonomy(instance: &str, loop_name: &str, steps: &[f64]) -> Result<Vec<SweepRow>> {
    let inst = load_instance(instance)?;
    let (loop_path, oracle) = match loop_name {
        "octant" => (octant_loop()?, Some(OCTANT_HOLONOMY)),
        "equator" => (equator_loop(), Some(0.0)),
        "instance" => {
            let p = inst
                .loop_path
                .clone()
                .ok_or_else(|| Error::Config(format!("instance `{}` has no loop", inst.name)))?;
            let oracle = (p.label() == "octant-loop").then_some(OCTANT_HOLONOMY);
            (p, oracle)
        }
        other => return Err(Error::Config(format!("unknown loop `{other}`"))),
    };
    if inst.name == "sphere-levi-civita" {
        step_sweep(&loop_path, steps, oracle)
    } else {
        let a = holonomy_angle(inst.transport.as_ref(), &loop_path)?;
        sweep_rows(steps, &vec![a; steps.len()], oracle.or(Some(0.0)))
    }
}

pub fn holonomy_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("step,angle,error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            csv_float(r.step),
            csv_float(r.angle),
            csv_float(r.error)
        );
    }
    out
}

/// Parses a label name or comma-separated components into an element over
/// `p(s0)`.
pub fn parse_element(inst: &Instance, p: &Path, s0: f64, text: &str) -> Result<FibreElement> {
    let bundle = inst.transport.bundle();
    let x = p.eval(s0)?;
    if bundle.is_vector() {
        let comps = parse_floats(text)?;
        let u = FibreElement::vector(x, DVector::from_vec(comps));
        bundle.check_element(&u)?;
        Ok(u)
    } else {
        let l = bundle
            .label_index(text.trim())
            .ok_or_else(|| Error::Config(format!("unknown label `{text}`")))?;
        let u = FibreElement::label(x, l);
        bundle.check_element(&u)?;
        Ok(u)
    }
}

fn pick_path(inst: &Instance, index: Option<usize>) -> Result<Path> {
    match index {
        None => Ok(inst.lift_path.clone()),
        Some(i) => inst
            .paths
            .get(i)
            .cloned()
            .ok_or_else(|| Error::Config(format!("path index {i} out of range ({} paths)", inst.paths.len()))),
    }
}

/// Lifting rows: the anchor `s0` first, then the grid. The default grid of
/// a piecewise path has one parameter per constancy run, the anchor's run
/// being represented by `s0`; chart paths default to an even grid.
pub fn run_lift(
    instance: &str,
    path: Option<usize>,
    element: &str,
    s0: Option<f64>,
    grid: Option<&str>,
) -> Result<Vec<(f64, FibreElement)>> {
    let inst = load_instance(instance)?;
    let p = pick_path(&inst, path)?;
    let d = p.domain();
    let s0 = s0.unwrap_or(d.lo());
    let u = parse_element(&inst, &p, s0, element)?;
    let l = lift(&inst.transport, &p, &u, s0)?;
    let params: Vec<f64> = match grid {
        Some(g) if g.trim() == "runs" => run_grid(&p, s0)?,
        Some(g) => parse_grid(g, d)?,
        None if p.is_discrete() => run_grid(&p, s0)?,
        None => tolerance::linspace(d.lo(), d.hi(), tolerance::DEFAULT_SAMPLE_GRID),
    };
    let rest: Vec<f64> = params.into_iter().filter(|&s| s != s0).collect();
    let mut rows = vec![(s0, l.eval(s0)?)];
    rows.extend(l.sample(&rest)?);
    Ok(rows)
}

/// A bare integer is a point count over `d`; anything else is a list of
/// parameters.
fn parse_grid(g: &str, d: Interval) -> Result<Vec<f64>> {
    match g.trim().parse::<usize>() {
        Ok(0) => Err(Error::Config("a grid needs at least one point".into())),
        Ok(n) => Ok(tolerance::linspace(d.lo(), d.hi(), n)),
        Err(_) => parse_floats(g),
    }
}

fn run_grid(p: &Path, s0: f64) -> Result<Vec<f64>> {
    let trace = p
        .as_discrete()
        .ok_or_else(|| Error::Config("`runs` needs a piecewise path".into()))?;
    Ok(trace
        .runs()
        .into_iter()
        .filter(|r| !(r.lo <= s0 && s0 <= r.hi))
        .map(|r| r.representative())
        .collect())
}

/// `s,point,value...` rows: the label name for finite fibres, the
/// components for vector fibres.
pub fn lift_csv(inst: &Instance, rows: &[(f64, FibreElement)]) -> String {
    let bundle = inst.transport.bundle();
    let dim = bundle.dim().unwrap_or(0);
    let mut out = String::from("s,point");
    if bundle.is_vector() {
        for i in 0..dim {
            let _ = write!(out, ",u{i}");
        }
    } else {
        out.push_str(",label");
    }
    out.push('\n');
    for (s, u) in rows {
        let point = bundle.base().point_name(u.projection()).replace(',', ";");
        let _ = write!(out, "{},{}", csv_float(*s), point);
        match &u.value {
            FibreValue::Label(l) => {
                let _ = write!(out, ",{}", bundle.labels().get(*l).cloned().unwrap_or_default());
            }
            FibreValue::Vector(v) => {
                for c in v.iter() {
                    let _ = write!(out, ",{}", csv_float(*c));
                }
            }
        }
        out.push('\n');
    }
    out
}

/// The canonical factorization as JSON and its round-trip report.
pub fn run_factorize(
    instance: &str,
    path: Option<usize>,
    s0: Option<f64>,
    grid: &str,
) -> Result<(serde_json::Value, LawReport)> {
    let inst = load_instance(instance)?;
    let p = pick_path(&inst, path)?;
    let d = p.domain();
    let s0 = s0.unwrap_or(d.lo());
    let params = parse_grid(grid, d)?;
    let t = inst.transport.as_ref();
    let f = canonical_factorization(t, &p, s0, &params)?;
    let mut report = round_trip_report(t, &p, s0, &params, law_tolerance("3.6-roundtrip", t.tolerance()))?;
    report.transport = inst.name.clone();
    Ok((f.to_json(), report))
}

fn emit(out: &Option<PathBuf>, file: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file), text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check(a) => {
            let cfg = RunConfig {
                instance: a.common.instance,
                laws: a.laws.split(',').map(String::from).collect(),
                seed: a.common.seed,
                trials: a.trials,
                tolerances: a.tol.into_iter().collect(),
                out: a.common.out,
                format: a.format,
            };
            let reports = run_check(&cfg)?;
            for r in &reports {
                println!("{r}");
            }
            Ok(if reports.iter().all(LawReport::passed) { 0 } else { 1 })
        }
        Command::Holonomy(a) => {
            let rows = run_holonomy(&a.common.instance, &a.loop_name, &parse_floats(&a.steps)?)?;
            emit(&a.common.out, "holonomy.csv", &holonomy_csv(&rows))?;
            Ok(0)
        }
        Command::Lift(a) => {
            let inst = load_instance(&a.common.instance)?;
            let rows = run_lift(&a.common.instance, a.path, &a.element, a.s0, a.grid.as_deref())?;
            emit(&a.common.out, "lift.csv", &lift_csv(&inst, &rows))?;
            Ok(0)
        }
        Command::Factorize(a) => {
            let (f, report) = run_factorize(&a.common.instance, a.path, a.s0, &a.grid)?;
            let text = serde_json::to_string_pretty(&f)? + "\n";
            match &a.common.out {
                Some(dir) => {
                    emit(&a.common.out, "factorization.json", &text)?;
                    fs::write(dir.join(report_file_name(&report.law)), report.to_json() + "\n")?;
                }
                None => {
                    print!("{text}");
                }
            }
            eprintln!("{report}");
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_overrides_parse() {
        assert_eq!(parse_tol("2.2=1e-9").unwrap(), ("2.2".to_string(), 1e-9));
        assert!(parse_tol("2.2").is_err());
        assert!(parse_tol("2.2=-1").is_err());
    }

    #[test]
    fn unknown_laws_and_instances_are_errors() {
        let inst = preset("perm-c3").unwrap();
        assert!(matches!(
            resolve_laws(&inst, &["9.9".into()]),
            Err(Error::UnknownLaw(_))
        ));
        assert!(matches!(load_instance("nope"), Err(Error::UnknownInstance(_))));
        assert!(resolve_laws(&inst, &["".into()]).unwrap().is_empty());
    }

    #[test]
    fn all_expands_to_declared_laws() {
        let inst = preset("sphere-levi-civita").unwrap();
        let laws = applicable_laws(&inst);
        assert!(laws.contains(&"2.8") && laws.contains(&"2.9"));
        assert!(!laws.contains(&"4.4") && !laws.contains(&"4.7"));
        let perm = applicable_laws(&preset("perm-c3").unwrap());
        assert!(!perm.contains(&"2.8") && perm.contains(&"4.7"));
    }

    #[test]
    fn csv_has_seventeen_significant_digits() {
        assert_eq!(csv_float(0.1), "1.0000000000000001e-1");
    }
}
