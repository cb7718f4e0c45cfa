//! `ybe8`: evaluate, verify, transform and classify eight-vertex solutions
//! of the colored Yang-Baxter equation, and export spin-chain couplings.
//!
//! Exit codes: 0 success, 1 verification failure or `NOT_A_SOLUTION`,
//! 2 invalid input (including chain size limits), 3 a requested point sits
//! on a pole, 4 I/O failure. `classify` maps the other verdicts to 10..=15.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use eightvertex::classify::{coeffs_at, hamiltonian_coeffs, ClassifyPlan, CoeffOptions, Verdict};
use eightvertex::families::{Family, FamilySpec, Perturbed, SharedFamily, WeightFamily};
use eightvertex::numkernel::re;
use eightvertex::sampling::{self, SampleDomain};
use eightvertex::spinchain::{build_chain, couplings, ff_relation_check, CouplingConstants};
use eightvertex::transforms::Pipeline;
use eightvertex::weights::{unitarity_residual, WeightVector};
use eightvertex::YbeError;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ybe8", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight table over a grid or at given points.
    Eval(EvalArgs),
    /// Yang-Baxter (and, for gauge families, unitarity) residuals at random points.
    Verify(Common),
    /// Decide the solution type.
    Classify(Common),
    /// Apply a transformation pipeline, verify and tabulate the result.
    Transform(EvalArgs),
    /// Spin-chain couplings over a colour grid, optionally the chain matrix.
    Couplings(CouplingArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// FamilySpec JSON file, or inline JSON starting with `{`.
    #[arg(long)]
    spec: String,
    /// Transformation pipeline JSON file (a list of transforms).
    #[arg(long)]
    transform: Option<String>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Residual tolerance (verify: median; classify: solution test).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Add DELTA to one weight, e.g. `--perturb a7 0.1`.
    #[arg(long, num_args = 2, value_names = ["FIELD", "DELTA"], allow_hyphen_values = true)]
    perturb: Option<Vec<String>>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Evaluate at `u,xi,eta` (repeatable) instead of a grid.
    #[arg(long, value_name = "U,XI,ETA")]
    at: Vec<String>,
    /// Points per axis of the `(u, ξ, η)` grid.
    #[arg(long, default_value_t = 5)]
    grid: usize,
    /// Half-width of the spectral range of the grid.
    #[arg(long, default_value_t = 0.4)]
    u_max: f64,
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    common: Common,
    /// Colours in the coupling table.
    #[arg(long, default_value_t = 5)]
    grid: usize,
    /// Build the chain at this many sites from the couplings at `--xi`.
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    periodic: bool,
    /// Colour at which the chain couplings are taken (default: domain midpoint).
    #[arg(long)]
    xi: Option<f64>,
    /// Write the chain matrix here: `.bin` gives the binary dump, anything else CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failure with an exit code.
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = match e.downcast_ref::<YbeError>() {
            Some(YbeError::PoleProximity { .. }) => 3,
            Some(_) => 2,
            None if e.downcast_ref::<io::Error>().is_some() => 4,
            None => 2,
        };
        Exit(code, e)
    }
}

type Run = Result<u8, Exit>;

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("YBE_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("ybe8: YBE_THREADS: {e}");
                }
            }
            _ => eprintln!("ybe8: ignoring YBE_THREADS={n:?}"),
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(&a, false),
        Command::Transform(a) => eval(&a, true),
        Command::Verify(c) => verify(&c),
        Command::Classify(c) => classify(&c),
        Command::Couplings(a) => couplings_cmd(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("ybe8: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn read_arg(arg: &str) -> anyhow::Result<String> {
    if arg.trim_start().starts_with('{') || arg.trim_start().starts_with('[') {
        Ok(arg.to_owned())
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))
    }
}

fn load(c: &Common) -> Result<(FamilySpec, SharedFamily, Option<Pipeline>), Exit> {
    let spec = FamilySpec::from_json(&read_arg(&c.spec).map_err(|e| Exit(2, e))?)?;
    let family = Family::new(spec.clone())?;
    for w in family.warnings() {
        eprintln!("ybe8: warning: {}", w.message);
    }
    let mut fam: SharedFamily = Arc::new(family);
    let pipeline = match &c.transform {
        Some(t) => {
            let p = Pipeline::from_json(&read_arg(t).map_err(|e| Exit(2, e))?)?;
            fam = p.apply(fam)?;
            Some(p)
        }
        None => None,
    };
    if let Some(p) = &c.perturb {
        let index = p[0]
            .trim_start_matches('a')
            .parse::<usize>()
            .ok()
            .filter(|i| (1..=8).contains(i))
            .ok_or_else(|| Exit(2, anyhow::anyhow!("--perturb: unknown field {:?}", p[0])))?;
        let delta: f64 = p[1]
            .parse()
            .map_err(|_| Exit(2, anyhow::anyhow!("--perturb: bad delta {:?}", p[1])))?;
        fam = Arc::new(Perturbed {
            inner: fam,
            index,
            delta: re(delta),
        });
    }
    Ok((spec, fam, pipeline))
}

fn output(c: &Common, json: &impl Serialize, csv: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Exit> {
    let mut sink: Box<dyn Write> = match &c.out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display())).map_err(|e| Exit(4, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let r = match c.format {
        Format::Json => serde_json::to_writer_pretty(&mut sink, json)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(sink)),
        Format::Csv => csv(&mut sink),
    };
    r.and_then(|_| sink.flush()).map_err(|e| Exit(4, e.into()))
}

#[derive(Serialize)]
struct Row {
    u: f64,
    xi: f64,
    eta: f64,
    a: [Complex64; 8],
}

fn weight_csv(w: &mut dyn Write, rows: &[Row]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["u".to_owned(), "xi".into(), "eta".into()];
    for i in 1..=8 {
        header.push(format!("a{i}_re"));
        header.push(format!("a{i}_im"));
    }
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.u.to_string(), r.xi.to_string(), r.eta.to_string()];
        for z in r.a {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()
}

fn parse_point(s: &str) -> Result<[f64; 3], Exit> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Exit(2, anyhow::anyhow!("--at {s:?}: {e}")))?;
    <[f64; 3]>::try_from(v).map_err(|_| Exit(2, anyhow::anyhow!("--at {s:?}: need u,xi,eta")))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn table(fam: &dyn WeightFamily, points: &[[f64; 3]]) -> Result<Vec<Row>, Exit> {
    points
        .iter()
        .map(|&[u, xi, eta]| {
            let w: WeightVector = fam
                .weights(re(u), re(xi), re(eta))
                .with_context(|| format!("at (u, ξ, η) = ({u}, {xi}, {eta})"))?;
            Ok(Row { u, xi, eta, a: w.0 })
        })
        .collect()
}

#[derive(Serialize)]
struct EvalReport<'a> {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pipeline: Option<&'a Pipeline>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<Summary>,
    rows: Vec<Row>,
}

fn eval(a: &EvalArgs, transform: bool) -> Run {
    let c = &a.common;
    if transform && c.transform.is_none() {
        return Err(Exit(2, anyhow::anyhow!("transform needs --transform FILE")));
    }
    let (spec, fam, pipeline) = load(c)?;
    let points: Vec<[f64; 3]> = if a.at.is_empty() {
        let [lo, hi] = spec.color_domain;
        let us = linspace(-a.u_max, a.u_max, a.grid);
        let cs = linspace(lo, hi, a.grid);
        let mut pts = Vec::with_capacity(us.len() * cs.len() * cs.len());
        for &u in &us {
            for &x in &cs {
                for &y in &cs {
                    pts.push([u, x, y]);
                }
            }
        }
        pts
    } else {
        a.at.iter().map(|s| parse_point(s)).collect::<Result<_, _>>()?
    };
    let rows = table(fam.as_ref(), &points)?;
    let verification = if transform {
        Some(summarise(fam.as_ref(), c, &spec))
    } else {
        None
    };
    let code = match &verification {
        Some(s) if !s.pass => 1,
        _ => 0,
    };
    let report = EvalReport {
        family: fam.label(),
        pipeline: pipeline.as_ref(),
        verification,
        rows,
    };
    output(c, &report, |w| weight_csv(w, &report.rows))?;
    Ok(code)
}

#[derive(Serialize)]
struct Stats {
    min: f64,
    median: f64,
    max: f64,
}

#[derive(Serialize)]
struct Summary {
    family: String,
    samples: usize,
    requested: usize,
    seed: u64,
    tol: f64,
    pass: bool,
    relative: Stats,
    matrix_norm: Stats,
    /// Largest raw residual per component equation, worst first (top five).
    worst_components: Vec<(String, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unitarity_max: Option<f64>,
    #[serde(skip)]
    per_sample: Vec<(sampling::SamplePoint, f64, f64)>,
}

fn stats(v: &[f64]) -> Stats {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let median = match s.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => s[n / 2],
        n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    };
    Stats {
        min: s.first().copied().unwrap_or(f64::NAN),
        median,
        max: s.last().copied().unwrap_or(f64::NAN),
    }
}

const DEFAULT_TOL: f64 = 1e-9;

fn summarise(fam: &dyn WeightFamily, c: &Common, spec: &FamilySpec) -> Summary {
    let tol = c.tol.unwrap_or(DEFAULT_TOL);
    let domain = SampleDomain::for_spec(spec);
    let mut r = sampling::rng(c.seed);
    let res = sampling::pole_free_residuals(fam, c.samples, &domain, &mut r);
    let rel: Vec<f64> = res.iter().map(|(_, x)| x.relative).collect();
    let abs: Vec<f64> = res.iter().map(|(_, x)| x.matrix_norm).collect();
    let mut worst: Vec<(String, f64)> = Vec::new();
    for (_, rep) in &res {
        for &(id, v) in &rep.component_norms {
            match worst.iter_mut().find(|(n, _)| n == id) {
                Some(e) => e.1 = e.1.max(v),
                None => worst.push((id.to_owned(), v)),
            }
        }
    }
    worst.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    worst.truncate(5);
    let unitarity_max = res
        .iter()
        .map(|(p, _)| {
            let [u, _, x, y, _] = p.complex();
            unitarity_residual(fam, u, x, y)
        })
        .collect::<Result<Vec<f64>, _>>()
        .ok()
        .filter(|v| !v.is_empty())
        .map(|v| v.into_iter().fold(0.0, f64::max));
    let relative = stats(&rel);
    Summary {
        family: fam.label(),
        samples: res.len(),
        requested: c.samples,
        seed: c.seed,
        tol,
        pass: !res.is_empty() && relative.median <= tol,
        relative,
        matrix_norm: stats(&abs),
        worst_components: worst,
        unitarity_max,
        per_sample: res
            .iter()
            .map(|(p, x)| (*p, x.matrix_norm, x.relative))
            .collect(),
    }
}

fn verify(c: &Common) -> Run {
    let (spec, fam, _) = load(c)?;
    let s = summarise(fam.as_ref(), c, &spec);
    output(c, &s, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["u", "v", "xi", "eta", "lambda", "matrix_norm", "relative"])?;
        for (p, a, r) in &s.per_sample {
            out.write_record(
                [p.u, p.v, p.xi, p.eta, p.lambda, *a, *r].map(|x| x.to_string()),
            )?;
        }
        out.flush()
    })?;
    Ok(if s.pass { 0 } else { 1 })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::NotASolution => 1,
        Verdict::Baxter => 10,
        Verdict::FreeFermion => 11,
        Verdict::TrivialA => 12,
        Verdict::TrivialB => 13,
        Verdict::NotEightVertex => 14,
        Verdict::Indeterminate => 15,
    }
}

fn classify(c: &Common) -> Run {
    let (spec, fam, _) = load(c)?;
    let mut plan = ClassifyPlan {
        samples: c.samples,
        seed: c.seed,
        domain: SampleDomain::for_spec(&spec),
        ..ClassifyPlan::default()
    };
    if let Some(t) = c.tol {
        plan.solution_tol = t;
    }
    let report = eightvertex::classify::classify(fam, &plan);
    output(c, &report, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["group", "name", "value", "tol", "pass"])?;
        out.write_record(["verdict", report.verdict.name(), "", "", ""])?;
        let groups = [
            ("coefficient_invariants", &report.coefficient_invariants),
            ("curve_residuals", &report.curve_residuals),
            ("derived_identities", &report.derived_identities),
        ];
        for (g, rs) in groups {
            for r in rs {
                out.write_record([
                    g.to_owned(),
                    r.name.clone(),
                    r.value.map(|v| v.to_string()).unwrap_or_default(),
                    r.tol.to_string(),
                    r.pass.map(|p| p.to_string()).unwrap_or_else(|| "skipped".into()),
                ])?;
            }
        }
        out.flush()
    })?;
    Ok(verdict_code(report.verdict))
}

#[derive(Serialize)]
struct CouplingRow {
    xi: f64,
    m: [Complex64; 8],
    couplings: CouplingConstants,
}

#[derive(Serialize)]
struct ChainSummary {
    sites: usize,
    periodic: bool,
    xi: f64,
    dim: usize,
    couplings: CouplingConstants,
    hermiticity_defect: f64,
    trace: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dump: Option<String>,
}

#[derive(Serialize)]
struct CouplingReport {
    family: String,
    table: Vec<CouplingRow>,
    ff_relations: Vec<eightvertex::spinchain::FfRelationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain: Option<ChainSummary>,
}

fn write_dump(path: &Path, chain: &eightvertex::spinchain::ChainOperator) -> Result<(), Exit> {
    let f = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(|e| Exit(4, e))?;
    let w = io::BufWriter::new(f);
    let binary = path.extension().is_some_and(|e| e == "bin");
    let r = if binary {
        chain.write_binary(w)
    } else {
        chain.write_csv(w)
    };
    r.map_err(|e| Exit(4, e.into()))
}

fn couplings_cmd(a: &CouplingArgs) -> Run {
    let c = &a.common;
    let (spec, fam, _) = load(c)?;
    let [lo, hi] = spec.color_domain;
    let grid = linspace(lo, hi, a.grid.max(1));
    let opts = CoeffOptions::default();
    let coeffs = hamiltonian_coeffs(fam.as_ref(), &grid, &opts)?;
    let table: Vec<CouplingRow> = coeffs
        .samples
        .iter()
        .map(|s| CouplingRow {
            xi: s.xi,
            m: s.m,
            couplings: couplings(&s.m),
        })
        .collect();
    let ff_relations = table
        .iter()
        .map(|r| ff_relation_check(&r.couplings, &r.m))
        .collect();
    let chain = match a.sites {
        Some(n) => {
            let xi = a.xi.unwrap_or(0.5 * (lo + hi));
            let k = couplings(&coeffs_at(fam.as_ref(), xi, &opts)?.m);
            let op = build_chain(k, n, a.periodic)?;
            if let Some(p) = &a.dump {
                write_dump(p, &op)?;
            }
            Some(ChainSummary {
                sites: n,
                periodic: a.periodic,
                xi,
                dim: op.dim(),
                couplings: k,
                hermiticity_defect: op.hermiticity_defect(),
                trace: op.trace(),
                dump: a.dump.as_ref().map(|p| p.display().to_string()),
            })
        }
        None => None,
    };
    let report = CouplingReport {
        family: fam.label(),
        table,
        ff_relations,
        chain,
    };
    output(c, &report, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "xi", "Jx_re", "Jx_im", "Jy_re", "Jy_im", "Jz_re", "Jz_im", "h_re", "h_im",
        ])?;
        for r in &report.table {
            let k = r.couplings;
            let mut rec = vec![r.xi.to_string()];
            for z in [k.jx, k.jy, k.jz, k.h] {
                rec.push(z.re.to_string());
                rec.push(z.im.to_string());
            }
            out.write_record(&rec)?;
        }
        out.flush()
    })?;
    Ok(0)
}
