//! Command-line front end.
//!
//! Every subcommand writes its artifacts and a `manifest.json` echoing the
//! resolved configuration into the output directory, chosen from
//! `--output-dir`, then `HYPFLOW_OUTPUT_DIR`, then `./hypflow-out`.
//! Parameters may also come from a JSON object given with `--config`; flags
//! on the command line take precedence over it and unknown keys are rejected.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::conformal::{conformal_curve, conformal_residual, integrate_conformal, uniform_conformal_curve};
use crate::error::{Error, Result};
use crate::exact::{flow_residual, make_exact_flow, ExactFlow, FlowKind};
use crate::flow::{dump_frames, fit_circle, simulate, verify_soliton_translation, EndCondition, FlowControl, SpacingMetric};
use crate::geometry::{soliton_residual, KillingField, PolyCurve};
use crate::orbit::{OrbitControl, SampleWindow};
use crate::parabolic::{classify_sweep, gamma_curve, integrate_orbit, soliton_curve, threshold_search, uniform_soliton_curve};
use crate::svg::{Plot, Series};

pub const ENV_OUTPUT_DIR: &str = "HYPFLOW_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "hypflow-out";

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// Exit status: a numerical check failed or a computation could not finish.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status: invalid flags or configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hypflow", version, about = "Inverse curve shortening flow in the hyperbolic upper half-plane")]
pub struct Cli {
    /// Directory for artifacts (overrides HYPFLOW_OUTPUT_DIR).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Read angles in degrees instead of radians.
    #[arg(long, global = true)]
    pub deg: bool,
    /// JSON object with parameters for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate radius and curvature of a closed-form flow.
    ExactFlow(ExactFlowArgs),
    /// Integrate and classify a parabolic soliton orbit.
    Parabolic(OrbitArgs),
    /// Integrate a conformal soliton orbit.
    Conformal(OrbitArgs),
    /// Locate the start height separating the two parabolic soliton types.
    Threshold(ThresholdArgs),
    /// Sweep a grid of start heights and draw the phase portrait.
    Portrait(PortraitArgs),
    /// Evolve a constant-curvature curve with the front-tracking simulator.
    Simulate(SimulateArgs),
    /// Run the residual and soliton-translation checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    #[value(alias = "circle")]
    HyperbolicCircle,
    Horocycle,
    Equidistant,
}

impl From<CurveKind> for FlowKind {
    fn from(k: CurveKind) -> Self {
        match k {
            CurveKind::HyperbolicCircle => FlowKind::HyperbolicCircle,
            CurveKind::Horocycle => FlowKind::Horocycle,
            CurveKind::Equidistant => FlowKind::Equidistant,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonKind {
    Parabolic,
    Conformal,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactFlowArgs {
    #[arg(long, value_enum, default_value = "hyperbolic-circle")]
    pub kind: CurveKind,
    /// Initial radius (hyperbolic for circles, Euclidean otherwise).
    #[arg(long = "R", default_value_t = 1.0)]
    #[serde(rename = "R")]
    pub r: f64,
    /// Centre height of an equidistant arc.
    #[arg(long)]
    pub c: Option<f64>,
    /// Times to tabulate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Vertices per drawn curve.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitArgs {
    #[arg(long, default_value_t = 1.0)]
    pub y0: f64,
    /// Initial tangent angle; defaults to π/2 (parabolic) or 0 (conformal).
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub width: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitArgs {
    #[arg(long, value_enum, default_value = "parabolic")]
    pub kind: SolitonKind,
    #[arg(long, default_value_t = 0.05)]
    pub y0_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub y0_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub y0_step: f64,
    /// Initial tangent angle; defaults to π/2 (parabolic) or 0 (conformal).
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "hyperbolic-circle")]
    pub kind: CurveKind,
    #[arg(long = "R", default_value_t = 1.0)]
    #[serde(rename = "R")]
    pub r: f64,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Vertex count.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Open curves are cut at this height.
    #[arg(long, default_value_t = 0.2)]
    pub y_cut: f64,
    #[arg(long, default_value_t = 500)]
    pub frame_every: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_total: f64,
    /// Euclidean vertex spacing of the flowed soliton curves.
    #[arg(long, default_value_t = 0.02)]
    pub spacing: f64,
    #[arg(long, default_value_t = 1.0)]
    pub parabolic_y0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub conformal_y0: f64,
    /// Bound on the normal deviation of a translated soliton.
    #[arg(long, default_value_t = 5e-3)]
    pub deviation_tol: f64,
    /// Arc-length mesh for the soliton residuals.
    #[arg(long, default_value_t = 1e-4)]
    pub mesh: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub exact_tol: f64,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&matches) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Run(_) => EXIT_FAILURE,
            }
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Contract(_) | Error::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Run(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io(e: std::io::Error) -> CliError {
    CliError::Run(Error::Io(e))
}

/// Merges the `--config` object under the flags given on the command line.
fn resolve<A>(parsed: A, sub: &ArgMatches, config: Option<&Map<String, Value>>) -> CliResult<A>
where
    A: Serialize + DeserializeOwned,
{
    let Some(config) = config else {
        return Ok(parsed);
    };
    let Value::Object(mut merged) = serde_json::to_value(&parsed).map_err(|e| usage(e.to_string()))? else {
        unreachable!("argument structs serialize to objects")
    };
    let from_cli = |key: &str| {
        sub.ids()
            .find(|id| {
                let id = id.as_str();
                id == key || (key == "R" && id == "r")
            })
            .is_some_and(|id| sub.value_source(id.as_str()) == Some(ValueSource::CommandLine))
    };
    for (k, v) in config {
        if !merged.contains_key(k) {
            return Err(usage(format!("unknown configuration key `{k}`")));
        }
        if !from_cli(k) {
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("invalid configuration: {e}")))
}

struct Context {
    out: PathBuf,
    deg: bool,
    outputs: Vec<String>,
}

impl Context {
    fn angle(&self, v: f64) -> f64 {
        if self.deg {
            v.to_radians()
        } else {
            v
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        let p = self.path(name);
        fs::write(p, contents).map_err(io)
    }

    fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.into()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn create(&mut self, name: &str) -> CliResult<fs::File> {
        let p = self.path(name);
        fs::File::create(p).map_err(io)
    }
}

fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(ENV_OUTPUT_DIR).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn dispatch(matches: &ArgMatches) -> CliResult<i32> {
    let cli = Cli::from_arg_matches(matches).map_err(|e| usage(e.to_string()))?;
    let config = match &cli.config {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => Some(m),
                Ok(_) => return Err(usage("configuration must be a JSON object")),
                Err(e) => return Err(usage(format!("invalid configuration JSON: {e}"))),
            }
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let out = output_dir(cli.output_dir.as_deref());
    fs::create_dir_all(&out).map_err(io)?;
    let mut ctx = Context {
        out,
        deg: cli.deg,
        outputs: Vec::new(),
    };
    let cfg = config.as_ref();
    let (params, code) = match cli.command {
        Command::ExactFlow(a) => {
            let a = resolve(a, sub, cfg)?;
            (json!(a), exact_flow_cmd(&a, &mut ctx)?)
        }
        Command::Parabolic(a) => {
            let mut a = resolve(a, sub, cfg)?;
            a.theta0.get_or_insert(if cli.deg { 90.0 } else { FRAC_PI_2 });
            (json!(a), parabolic_cmd(&a, &mut ctx)?)
        }
        Command::Conformal(a) => {
            let mut a = resolve(a, sub, cfg)?;
            a.theta0.get_or_insert(0.0);
            (json!(a), conformal_cmd(&a, &mut ctx)?)
        }
        Command::Threshold(a) => {
            let a = resolve(a, sub, cfg)?;
            (json!(a), threshold_cmd(&a, &mut ctx)?)
        }
        Command::Portrait(a) => {
            let mut a = resolve(a, sub, cfg)?;
            a.theta0.get_or_insert(match (a.kind, cli.deg) {
                (SolitonKind::Parabolic, true) => 90.0,
                (SolitonKind::Parabolic, false) => FRAC_PI_2,
                (SolitonKind::Conformal, _) => 0.0,
            });
            (json!(a), portrait_cmd(&a, &mut ctx)?)
        }
        Command::Simulate(a) => {
            let a = resolve(a, sub, cfg)?;
            (json!(a), simulate_cmd(&a, &mut ctx)?)
        }
        Command::Verify(a) => {
            let a = resolve(a, sub, cfg)?;
            (json!(a), verify_cmd(&a, &mut ctx)?)
        }
    };
    let mut outputs = ctx.outputs.clone();
    outputs.sort();
    let manifest = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "angle_unit": if ctx.deg { "deg" } else { "rad" },
        "output_dir": ctx.out.display().to_string(),
        "deterministic": true,
        "params": params,
        "outputs": outputs,
        "exit_code": code,
    });
    ctx.write_json("manifest.json", &manifest)?;
    Ok(code)
}

fn curve_xy(c: &PolyCurve) -> Vec<(f64, f64)> {
    c.vertices().iter().map(|p| (p.x, p.y)).collect()
}

fn exact_flow_cmd(a: &ExactFlowArgs, ctx: &mut Context) -> CliResult<i32> {
    let flow = make_exact_flow(a.kind.into(), a.r, a.c)?;
    let mut table = csv::Writer::from_writer(ctx.create("exact_flow.csv")?);
    table.write_record(["t", "r", "kappa_h"]).map_err(|e| CliError::Run(e.into()))?;
    let mut curves = csv::Writer::from_writer(ctx.create("exact_flow_curves.csv")?);
    curves.write_record(["t", "x", "y"]).map_err(|e| CliError::Run(e.into()))?;
    let mut plot = Plot::new("Closed-form flow", "x", "y");
    plot.equal_aspect = true;
    println!("t,r,kappa_h");
    for &t in &a.t {
        let (r, k) = (flow.radius(t), flow.curvature(t)?);
        println!("{t},{r},{k}");
        table
            .write_record([t.to_string(), r.to_string(), k.to_string()])
            .map_err(|e| CliError::Run(e.into()))?;
        let c = flow.curve_at(t, a.samples)?;
        for p in c.vertices() {
            curves
                .write_record([t.to_string(), p.x.to_string(), p.y.to_string()])
                .map_err(|e| CliError::Run(e.into()))?;
        }
        plot.series.push(Series {
            points: curve_xy(&c),
            closed: c.is_closed(),
            dashed: false,
        });
    }
    table.flush().map_err(io)?;
    curves.flush().map_err(io)?;
    ctx.write("exact_flow.svg", plot.render().as_bytes())?;
    Ok(EXIT_OK)
}

fn orbit_ctrl(rtol: f64) -> CliResult<OrbitControl> {
    if rtol > 0.0 && rtol < 1e-2 {
        Ok(OrbitControl::with_rtol(rtol))
    } else {
        Err(usage(format!("rtol must lie in (0, 0.01), got {rtol}")))
    }
}

fn parabolic_cmd(a: &OrbitArgs, ctx: &mut Context) -> CliResult<i32> {
    let theta0 = a.theta0.map_or(FRAC_PI_2, |v| ctx.angle(v));
    let trace = integrate_orbit(a.y0, theta0, &orbit_ctrl(a.rtol)?)?;
    trace.write_csv(ctx.create("parabolic_trace.csv")?)?;
    let record = trace.record();
    let curve = soliton_curve(&trace).ok();
    let mut doc = json!({ "classification": record, "end_limits": {
        "backward": trace.backward_limit, "forward": trace.forward_limit,
    }});
    if let Some(c) = &curve {
        doc["descriptors"] = json!(c.descriptors);
    }
    ctx.write_json("parabolic.json", &doc)?;
    let mut plot = Plot::new(&format!("Parabolic soliton, y(0) = {}", a.y0), "x", "y");
    plot.equal_aspect = true;
    plot.series.push(Series::line(
        curve
            .map(|c| curve_xy(&c.curve))
            .unwrap_or_else(|| trace.samples.iter().map(|s| (s.x, s.y)).collect()),
    ));
    ctx.write("parabolic.svg", plot.render().as_bytes())?;
    println!("type: {}", record.label);
    if let Some(y) = record.y_asymptote {
        println!("Y: {y}");
    }
    if let Some(y) = record.y_bar {
        println!("Y_bar: {y}");
    }
    Ok(EXIT_OK)
}

fn conformal_cmd(a: &OrbitArgs, ctx: &mut Context) -> CliResult<i32> {
    let theta0 = a.theta0.map_or(0.0, |v| ctx.angle(v));
    let trace = integrate_conformal(a.y0, theta0, &orbit_ctrl(a.rtol)?)?;
    trace.write_csv(ctx.create("conformal_trace.csv")?)?;
    let curve = conformal_curve(&trace)?;
    let doc = json!({
        "record": trace.record(curve.descriptors.concave),
        "descriptors": curve.descriptors,
        "reparametrization": trace.reparametrization,
        "end_limits": { "left": trace.backward_limit, "right": trace.forward_limit },
    });
    ctx.write_json("conformal.json", &doc)?;
    let mut plot = Plot::new(&format!("Conformal soliton, y(0) = {}", a.y0), "x", "y");
    plot.equal_aspect = true;
    plot.series.push(Series::line(curve_xy(&curve.curve)));
    ctx.write("conformal.svg", plot.render().as_bytes())?;
    println!("y*: {}", trace.y_star());
    println!("x range: [{}, {}]", curve.descriptors.x_m, curve.descriptors.x_big_m);
    Ok(EXIT_OK)
}

fn threshold_cmd(a: &ThresholdArgs, ctx: &mut Context) -> CliResult<i32> {
    let search = threshold_search(&orbit_ctrl(a.rtol)?, (a.lo, a.hi), a.width)?;
    for (i, s) in search.log.iter().enumerate() {
        println!("{i:3}  [{:.12}, {:.12}]  mid {:.12}  {}", s.lo, s.hi, s.mid, s.label);
    }
    println!("H = {}", search.h);
    println!("bracket = [{}, {}] (width {:e})", search.lo, search.hi, search.hi - search.lo);
    ctx.write_json("threshold.json", &search)?;
    Ok(EXIT_OK)
}

fn grid(lo: f64, hi: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(usage(format!("invalid grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

fn portrait_cmd(a: &PortraitArgs, ctx: &mut Context) -> CliResult<i32> {
    let ctrl = orbit_ctrl(a.rtol)?;
    let ys = grid(a.y0_min, a.y0_max, a.y0_step)?;
    let mut plot = Plot::new("Phase portrait", "theta", "y");
    let mut data = csv::Writer::from_writer(ctx.create("portrait.csv")?);
    data.write_record(["orbit", "y0", "theta0", "theta", "y", "label"])
        .map_err(|e| CliError::Run(e.into()))?;
    match a.kind {
        SolitonKind::Parabolic => {
            let theta0 = a.theta0.map_or(FRAC_PI_2, |v| ctx.angle(v));
            let starts: Vec<(f64, f64)> = ys.iter().map(|&y| (y, theta0)).collect();
            let traces = classify_sweep(&starts, &ctrl);
            let mut records = Vec::new();
            for (i, t) in traces.into_iter().enumerate() {
                let t = t?;
                let label = t.label.to_string();
                for s in &t.samples {
                    data.write_record([i.to_string(), t.y0.to_string(), t.theta0.to_string(), s.theta.to_string(), s.y.to_string(), label.clone()])
                        .map_err(|e| CliError::Run(e.into()))?;
                }
                plot.series.push(Series::line(t.samples.iter().map(|s| (s.theta, s.y)).collect()));
                records.push(t.record());
            }
            let gamma = (0..=200).map(|k| {
                let th = FRAC_PI_2 * k as f64 / 200.0;
                (th, gamma_curve(th))
            });
            plot.series.push(Series {
                points: gamma.collect(),
                closed: false,
                dashed: true,
            });
            ctx.write_json("portrait.json", &records)?;
        }
        SolitonKind::Conformal => {
            let theta0 = a.theta0.map_or(0.0, |v| ctx.angle(v));
            let traces: Vec<Result<_>> = ys.par_iter().map(|&y| integrate_conformal(y, theta0, &ctrl)).collect();
            let mut records = Vec::new();
            for (i, t) in traces.into_iter().enumerate() {
                let t = t?;
                for s in &t.samples {
                    data.write_record([i.to_string(), t.y0.to_string(), t.theta0.to_string(), s.theta.to_string(), s.y.to_string(), "conformal".into()])
                        .map_err(|e| CliError::Run(e.into()))?;
                }
                plot.series.push(Series::line(t.samples.iter().map(|s| (s.theta, s.y)).collect()));
                let concave = conformal_curve(&t).map(|c| c.descriptors.concave).unwrap_or(false);
                records.push(t.record(concave));
            }
            ctx.write_json("portrait.json", &records)?;
        }
    }
    data.flush().map_err(io)?;
    ctx.write("portrait.svg", plot.render().as_bytes())?;
    println!("{} orbits", ys.len());
    Ok(EXIT_OK)
}

fn initial_curve(flow: &ExactFlow, a: &SimulateArgs) -> Result<PolyCurve> {
    match flow.kind() {
        FlowKind::HyperbolicCircle => flow.curve_at(0.0, a.n),
        _ => flow.arc_above(0.0, a.y_cut, a.n),
    }
}

fn simulate_cmd(a: &SimulateArgs, ctx: &mut Context) -> CliResult<i32> {
    let flow = make_exact_flow(a.kind.into(), a.r, a.c)?;
    let initial = initial_curve(&flow, a)?;
    let ctrl = FlowControl {
        dt: a.dt,
        t_end: a.t_end,
        frame_every: a.frame_every.max(1),
        ..FlowControl::default()
    };
    let run = simulate(&initial, &ctrl)?;
    ctx.outputs.push("frames/".into());
    dump_frames(&run, &ctx.out.join("frames"))?;
    let last = run.last();
    let fit = fit_circle(&last.curve)?;
    let (fitted, exact) = match flow.kind() {
        FlowKind::HyperbolicCircle => (fit.hyperbolic_radius(), flow.radius(last.t)),
        _ => (fit.radius, flow.radius(last.t)),
    };
    let summary = json!({
        "termination": run.termination,
        "t_final": last.t,
        "frames": run.frames.len(),
        "resamples": run.resamples,
        "stability_warnings": run.stability_warnings,
        "fitted_radius": fitted,
        "closed_form_radius": exact,
        "radius_error": (fitted - exact).abs(),
        "fit": fit,
    });
    ctx.write_json("simulate.json", &summary)?;
    let mut plot = Plot::new("Front-tracking evolution", "x", "y");
    plot.equal_aspect = true;
    for f in &run.frames {
        plot.series.push(Series {
            points: curve_xy(&f.curve),
            closed: f.curve.is_closed(),
            dashed: false,
        });
    }
    ctx.write("simulate.svg", plot.render().as_bytes())?;
    println!("termination: {:?} at t = {}", run.termination, last.t);
    println!("fitted radius {fitted}, closed form {exact}, error {:e}", (fitted - exact).abs());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn verify_cmd(a: &VerifyArgs, ctx: &mut Context) -> CliResult<i32> {
    if !(a.spacing > 0.0 && a.dt > 0.0 && a.t_total > 0.0 && a.mesh > 0.0) {
        return Err(usage("spacing, dt, t_total and mesh must be positive"));
    }
    let window = SampleWindow::default();
    let mut checks = Vec::new();
    let mut check = |name, value: f64, tolerance| {
        checks.push(Check {
            name,
            value,
            tolerance,
            pass: value < tolerance,
        })
    };

    let circle = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?;
    let exact = [0.0, 0.5, 1.0]
        .iter()
        .map(|&t| flow_residual(&circle, t, 1024))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    check("exact_flow_residual", exact, a.exact_tol);

    let para = uniform_soliton_curve(a.parabolic_y0, FRAC_PI_2, a.mesh, &window)?;
    check("parabolic_residual", soliton_residual(&para, KillingField::Parabolic)?, a.residual_tol);
    let conf = uniform_conformal_curve(a.conformal_y0, 0.0, a.mesh, &window)?;
    check("conformal_residual", conformal_residual(&conf)?, a.residual_tol);

    let base = FlowControl {
        dt: a.dt,
        spacing: Some(a.spacing),
        metric: SpacingMetric::Euclidean,
        ..FlowControl::default()
    };
    let para = uniform_soliton_curve(a.parabolic_y0, FRAC_PI_2, a.spacing, &window)?;
    let dev = verify_soliton_translation(
        &para,
        KillingField::Parabolic,
        a.t_total,
        &FlowControl {
            ends: EndCondition::FieldFlow(KillingField::Parabolic),
            ..base
        },
    )?;
    check("parabolic_translation", dev, a.deviation_tol);
    let conf = uniform_conformal_curve(a.conformal_y0, 0.0, a.spacing, &window)?;
    let dev = verify_soliton_translation(
        &conf,
        KillingField::ConformalVertical,
        a.t_total,
        &FlowControl {
            ends: EndCondition::FieldFlow(KillingField::ConformalVertical),
            ..base
        },
    )?;
    check("conformal_translation", dev, a.deviation_tol);

    let mut all = true;
    for c in &checks {
        println!(
            "{} {:<24} {:.3e} (tolerance {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
        all &= c.pass;
    }
    ctx.write_json("verify.json", &checks)?;
    let mut so = std::io::stdout();
    let _ = writeln!(so, "{}", if all { "all checks passed" } else { "verification failed" });
    Ok(if all { EXIT_OK } else { EXIT_FAILURE })
}
