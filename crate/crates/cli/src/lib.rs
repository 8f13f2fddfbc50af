//! The `specflow` command-line front end.
//!
//! [`run`] does all the work and returns the exit code together with the
//! text destined for standard output and standard error, so the binary is a
//! thin wrapper and the commands can be tested in-process.

pub mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use specflow_core::literal::{matrix_to_value, parse_matrix_str};
use specflow_core::matcore::{c64, max_abs, CMatrix};
use specflow_core::odeindex::{hyperbolic_tail, ShootingOptions, TailOptions};
use specflow_core::sflow::{sf_crossings, CrossingOptions, Crossing, PartitionOptions};
use specflow_core::spectral::{riesz_region_projector, SpectralRegion};
use specflow_core::verify::{self, Suite, VerifyConfig, REPORT_SCHEMA};
use specflow_core::{
    sf_endpoint, sf_partition, spectral_projector, verify_final, verify_final_block, Domain, Engine, Error,
    FlowResult, OperatorPath, Projector, Tolerances,
};

use crate::spec::{parse_spec_str, ParsedPath};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "specflow", version, about = "Spectral flow, spectral projectors and ODE index checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub tol: TolArgs,
    /// Halve every tolerance.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral flow of a path spec.
    Sf {
        /// Path-spec file, or `-` for standard input.
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        engine: EngineArg,
    },
    /// Index of u' - A u by shooting, against the spectral flow.
    Index {
        spec: PathBuf,
        /// Integration horizon T (integrates over [-T, T]).
        #[arg(long = "t")]
        t_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Spectral projector of a matrix by both routes.
    Project {
        /// Matrix literal file, or `-` for standard input.
        matrix: PathBuf,
        /// right | left | rect:RE_MIN,RE_MAX,IM_HALF | disk:RE,R | disk:RE,IM,R
        #[arg(long, default_value = "right")]
        region: String,
    },
    /// Seeded invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// A count N (seeds 0..N), a range A..B, or a list A,B,C.
        #[arg(long, conflicts_with = "seed")]
        seeds: Option<String>,
        /// Run a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated dimensions.
        #[arg(long)]
        dims: Option<String>,
        /// Negate the partition engine; the sf-properties suite must fail.
        #[arg(long)]
        inject_sign_flip: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Endpoint,
    Partition,
    Crossings,
    All,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TolArgs {
    #[arg(long, global = true)]
    pub tol_recon: Option<f64>,
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long, global = true)]
    pub tol_eig: Option<f64>,
    #[arg(long, global = true)]
    pub tol_ortho: Option<f64>,
    #[arg(long, global = true)]
    pub tol_kappa_max: Option<f64>,
    #[arg(long, global = true)]
    pub tol_proj: Option<f64>,
    #[arg(long, global = true)]
    pub tol_gap: Option<f64>,
    #[arg(long, global = true)]
    pub tol_dist: Option<f64>,
    #[arg(long, global = true)]
    pub tol_slope: Option<f64>,
    #[arg(long, global = true)]
    pub tol_t: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self, strict: bool) -> Tolerances {
        let d = Tolerances::default();
        let tol = Tolerances {
            recon: self.tol_recon.unwrap_or(d.recon),
            rank: self.tol_rank.unwrap_or(d.rank),
            eig: self.tol_eig.unwrap_or(d.eig),
            ortho: self.tol_ortho.unwrap_or(d.ortho),
            kappa_max: self.tol_kappa_max.unwrap_or(d.kappa_max),
            proj: self.tol_proj.unwrap_or(d.proj),
            gap_min: self.tol_gap.unwrap_or(d.gap_min),
            dist_min: self.tol_dist.unwrap_or(d.dist_min),
            slope_min: self.tol_slope.unwrap_or(d.slope_min),
            t_tol: self.tol_t.unwrap_or(d.t_tol),
        };
        if strict {
            tol.halved()
        } else {
            tol
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String, code: i32) -> Self {
        Self { code, stdout, stderr: String::new() }
    }

    fn error(e: &Error) -> Self {
        Self { code: exit_code(e), stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

/// Input errors exit with 1, numerical refusals and failures with 2.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::InvalidDimension(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite
        | Error::RangeError(_)
        | Error::WrongDomain(_)
        | Error::GenerationFailure(_) => EXIT_INPUT,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                Output { code, stdout: String::new(), stderr: text }
            } else {
                Output::ok(text, code)
            }
        }
    }
}

pub fn run(cli: &Cli) -> Output {
    let tol = cli.tol.resolve(cli.strict);
    match &cli.command {
        Command::Sf { spec, engine } => cmd_sf(spec, *engine, &tol, cli.json),
        Command::Index { spec, t_end, steps } => {
            cmd_index(spec, &ShootingOptions { t_end: *t_end, steps: *steps }, &tol, cli.json)
        }
        Command::Project { matrix, region } => cmd_project(matrix, region, &tol, cli.json),
        Command::Verify { suite, seeds, seed, dims, inject_sign_flip } => {
            cmd_verify(suite, seeds.as_deref(), *seed, dims.as_deref(), *inject_sign_flip, &tol, cli.json)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())
    } else {
        fs::read_to_string(path)
    };
    text.map_err(|e| Error::Parse { at: path.display().to_string(), message: e.to_string() })
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct EngineOutcome {
    engine: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<FlowResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crossings: Option<Vec<Crossing>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SfReport {
    schema: &'static str,
    command: &'static str,
    domain: Domain,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    engines: Vec<EngineOutcome>,
    sf: Option<i64>,
    agree: Option<bool>,
}

/// The crossing engine declines some paths (no derivative, tangential or
/// non-semisimple crossings); under `--engine all` those are not counted
/// as disagreement.
fn is_refusal(e: &Error) -> bool {
    matches!(e, Error::NoDerivative | Error::IrregularCrossing { .. } | Error::MultipleEigenvalueAtCrossing { .. })
}

fn run_engine(path: &OperatorPath, engine: Engine, tol: &Tolerances) -> (EngineOutcome, Option<Error>) {
    let mut out = EngineOutcome { engine: engine.name(), result: None, crossings: None, error: None };
    let res = match engine {
        Engine::Endpoint => sf_endpoint(path, tol),
        Engine::Partition => sf_partition(path, &PartitionOptions::default(), tol),
        Engine::Crossings => sf_crossings(path, &CrossingOptions::default(), tol).map(|(r, rep)| {
            out.crossings = Some(rep.crossings);
            r
        }),
    };
    match res {
        Ok(r) => {
            out.result = Some(r);
            (out, None)
        }
        Err(e) => {
            out.error = Some(e.to_string());
            (out, Some(e))
        }
    }
}

pub fn cmd_sf(spec: &Path, engine: EngineArg, tol: &Tolerances, json: bool) -> Output {
    let parsed = match read_input(spec).and_then(|t| parse_spec_str(&t)) {
        Ok(p) => p,
        Err(e) => return Output::error(&e),
    };
    let full = parsed.path();
    let (path, delta) = match full.domain() {
        Domain::Unit => (full.clone(), None),
        Domain::RealLine => match hyperbolic_tail(full, &TailOptions::default(), tol) {
            Ok(d) => (full.clamp(-d, d), Some(d)),
            Err(e) => return Output::error(&e),
        },
    };
    let engines = match engine {
        EngineArg::Endpoint => vec![Engine::Endpoint],
        EngineArg::Partition => vec![Engine::Partition],
        EngineArg::Crossings => vec![Engine::Crossings],
        EngineArg::All => vec![Engine::Endpoint, Engine::Partition, Engine::Crossings],
    };

    let mut outcomes = Vec::new();
    let mut values = Vec::new();
    let mut fatal: Option<Error> = None;
    let mut stderr = String::new();
    for &e in &engines {
        let (mut outcome, err) = run_engine(&path, e, tol);
        if let Some(r) = outcome.result.as_mut() {
            r.diagnostics.delta = delta;
            values.push(r.sf);
        }
        if let Some(err) = err {
            stderr.push_str(&format!("{}: {err}\n", e.name()));
            if !(engines.len() > 1 && is_refusal(&err)) && fatal.is_none() {
                fatal = Some(err);
            }
        }
        outcomes.push(outcome);
    }
    let agree = (engines.len() > 1 && fatal.is_none()).then(|| values.windows(2).all(|w| w[0] == w[1]));
    let sf = match (fatal.is_none(), agree) {
        (true, Some(false)) | (false, _) => None,
        _ => values.first().copied(),
    };
    let code = match (&fatal, agree) {
        (Some(e), _) => exit_code(e),
        (None, Some(false)) => EXIT_FAILURE,
        _ => EXIT_OK,
    };
    if agree == Some(false) {
        stderr.push_str("engines disagree\n");
    }

    let report = SfReport {
        schema: REPORT_SCHEMA,
        command: "sf",
        domain: full.domain(),
        dim: full.dim(),
        delta,
        engines: outcomes,
        sf,
        agree,
    };
    let stdout = if json {
        to_json(&report)
    } else {
        let mut s = String::new();
        for o in &report.engines {
            match (&o.result, &o.error) {
                (Some(r), _) => s.push_str(&format!("{:<10} sf = {}\n", o.engine, r.sf)),
                (None, Some(e)) => s.push_str(&format!("{:<10} refused: {e}\n", o.engine)),
                _ => {}
            }
        }
        if let Some(a) = agree {
            s.push_str(if a { "engines agree\n" } else { "engines DISAGREE\n" });
        }
        s
    };
    Output { code, stdout, stderr }
}

#[derive(Debug, Serialize)]
struct IndexOut<'a> {
    schema: &'static str,
    command: &'static str,
    #[serde(flatten)]
    report: &'a specflow_core::IndexReport,
}

pub fn cmd_index(spec: &Path, opts: &ShootingOptions, tol: &Tolerances, json: bool) -> Output {
    let parsed = match read_input(spec).and_then(|t| parse_spec_str(&t)) {
        Ok(p) => p,
        Err(e) => return Output::error(&e),
    };
    let report = match &parsed {
        ParsedPath::Plain(p) => verify_final(p, opts, tol),
        ParsedPath::Block(b) => verify_final_block(b, opts, tol),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => return Output::error(&e),
    };
    let code = if report.agree { EXIT_OK } else { EXIT_FAILURE };
    let stdout = if json {
        to_json(&IndexOut { schema: REPORT_SCHEMA, command: "index", report: &report })
    } else {
        format!(
            "sf = {}\nind (shooting) = {}\nind (formula) = {}\nagree = {}\nT = {}, steps = {}, delta = {}\n\
             kernel = {}, cokernel = {}, stable under doubling = {}\n",
            report.sf,
            report.ind_shooting,
            report.ind_formula,
            report.agree,
            report.t_used,
            report.steps,
            report.delta,
            report.kernel,
            report.cokernel,
            report.stable_under_doubling
        )
    };
    let stderr = if report.agree { String::new() } else { "index and spectral flow disagree\n".into() };
    Output { code, stdout, stderr }
}

fn numbers(s: &str, count: &[usize], at: &str) -> Result<Vec<f64>, Error> {
    let xs = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse { at: at.into(), message: e.to_string() })?;
    if !count.contains(&xs.len()) {
        return Err(Error::Parse { at: at.into(), message: format!("expected {count:?} numbers, got {}", xs.len()) });
    }
    Ok(xs)
}

pub fn parse_region(s: &str) -> Result<SpectralRegion, Error> {
    let at = "--region";
    match s.split_once(':') {
        None if s == "right" => Ok(SpectralRegion::RightHalfPlane),
        None if s == "left" => Ok(SpectralRegion::LeftHalfPlane),
        Some(("rect", rest)) => {
            let v = numbers(rest, &[3], at)?;
            Ok(SpectralRegion::Rectangle { re_min: v[0], re_max: v[1], im_half: v[2] })
        }
        Some(("disk", rest)) => {
            let v = numbers(rest, &[2, 3], at)?;
            let (center, radius) = if v.len() == 2 { (c64(v[0], 0.0), v[1]) } else { (c64(v[0], v[1]), v[2]) };
            Ok(SpectralRegion::PointCluster { center, radius })
        }
        _ => Err(Error::Parse {
            at: at.into(),
            message: format!("unknown region '{s}' (expected right, left, rect:a,b,c or disk:re,r)"),
        }),
    }
}

#[derive(Debug, Serialize)]
struct RouteOut {
    matrix: Value,
    rank: usize,
    defect: f64,
    commutator_defect: f64,
}

impl RouteOut {
    fn new(p: &Projector, a: &CMatrix) -> Self {
        Self {
            matrix: matrix_to_value(p.matrix()),
            rank: p.rank(),
            defect: p.defect(),
            commutator_defect: p.commutator_defect(a),
        }
    }
}

#[derive(Debug, Serialize)]
struct ProjectReport {
    schema: &'static str,
    command: &'static str,
    region: SpectralRegion,
    schur: RouteOut,
    riesz: RouteOut,
    max_entry_difference: f64,
    agree: bool,
}

pub fn cmd_project(matrix: &Path, region: &str, tol: &Tolerances, json: bool) -> Output {
    let inputs = read_input(matrix)
        .and_then(|t| parse_matrix_str(&t))
        .and_then(|a| parse_region(region).map(|r| (a, r)));
    let (a, region) = match inputs {
        Ok(x) => x,
        Err(e) => return Output::error(&e),
    };
    let routes = spectral_projector(&a, &region, tol)
        .and_then(|s| riesz_region_projector(&a, &region, tol).map(|r| (s, r)));
    let (schur, riesz) = match routes {
        Ok(x) => x,
        Err(e) => return Output::error(&e),
    };
    let diff = max_abs(&(schur.matrix() - riesz.matrix()));
    // the same entrywise threshold the eigenvalue comparisons use
    let agree = diff <= tol.eig && schur.rank() == riesz.rank();
    let report = ProjectReport {
        schema: REPORT_SCHEMA,
        command: "project",
        region,
        schur: RouteOut::new(&schur, &a),
        riesz: RouteOut::new(&riesz, &a),
        max_entry_difference: diff,
        agree,
    };
    let stdout = if json {
        to_json(&report)
    } else {
        let mut s = String::new();
        let p = schur.matrix();
        for i in 0..p.nrows() {
            let row: Vec<String> = (0..p.ncols())
                .map(|j| {
                    let z = p[(i, j)];
                    format!("{:>10.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join("  "));
            s.push('\n');
        }
        s.push_str(&format!(
            "rank = {}, defect = {:.3e}, route difference = {:.3e}, agree = {}\n",
            schur.rank(),
            schur.defect(),
            diff,
            agree
        ));
        s
    };
    let code = if agree { EXIT_OK } else { EXIT_FAILURE };
    let stderr = if agree { String::new() } else { "contour and Schur projectors disagree\n".into() };
    Output { code, stdout, stderr }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = |m: String| Error::Parse { at: "--seeds".into(), message: m };
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let b: u64 = b.trim().parse().map_err(|e| bad(format!("{e}")))?;
        if a >= b {
            return Err(bad(format!("empty range {a}..{b}")));
        }
        Ok((a..b).collect())
    } else if s.contains(',') {
        s.split(',').map(|x| x.trim().parse().map_err(|e| bad(format!("{e}")))).collect()
    } else {
        let n: u64 = s.parse().map_err(|e| bad(format!("{e}")))?;
        if n == 0 {
            return Err(bad("need at least one seed".into()));
        }
        Ok((0..n).collect())
    }
}

pub fn parse_dims(s: &str) -> Result<Vec<usize>, Error> {
    let dims: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Parse { at: "--dims".into(), message: e.to_string() })?;
    if dims.contains(&0) {
        return Err(Error::InvalidDimension("--dims entries must be at least 1".into()));
    }
    Ok(dims)
}

pub fn cmd_verify(
    suite: &str,
    seeds: Option<&str>,
    seed: Option<u64>,
    dims: Option<&str>,
    inject_sign_flip: bool,
    tol: &Tolerances,
    json: bool,
) -> Output {
    let mut cfg = VerifyConfig { tol: *tol, inject_sign_flip, ..Default::default() };
    let parsed = (|| -> Result<(), Error> {
        cfg.suite = suite.parse::<Suite>().map_err(|m| Error::Parse { at: "--suite".into(), message: m })?;
        if let Some(s) = seeds {
            cfg.seeds = parse_seeds(s)?;
        }
        if let Some(s) = seed {
            cfg.seeds = vec![s];
        }
        if let Some(d) = dims {
            cfg.dims = parse_dims(d)?;
        }
        Ok(())
    })();
    if let Err(e) = parsed {
        return Output::error(&e);
    }
    let report = verify::run(&cfg);
    let stdout = if json {
        let mut s = report.to_json();
        s.push('\n');
        s
    } else {
        report.to_text()
    };
    let code = if report.all_pass { EXIT_OK } else { EXIT_FAILURE };
    let stderr = if report.all_pass { String::new() } else { format!("{} invariant checks failed\n", report.failed) };
    Output { code, stdout, stderr }
}
