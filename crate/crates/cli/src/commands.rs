use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use weingarten::discretization::export::write_obj_mesh;
use weingarten::discretization::{convexity_witness, FieldTable};
use weingarten::linalg::sym2_eigenvalues;
use weingarten::operator::{frame_for, inject_first_order_sign_fault};
use weingarten::solver::{estimate_monitors, solve as run_pipeline, Monitors, PathSelection, Problem};
use weingarten::{verify as suites, SpaceForm};

use crate::config::{load_problem, resolve, ProblemConfig};

pub const EXIT_SUITE_FAILED: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_CONTINUATION: u8 = 3;

pub fn verify(seed: u64, inject_fault: bool) -> Result<ExitCode> {
    if inject_fault {
        inject_first_order_sign_fault(true);
    }
    let results = suites::run_all(seed);
    let mut ok = true;
    for r in &results {
        ok &= r.passed;
        println!(
            "{} {:<26} samples={:<6} worst={:e} tolerance={:e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.samples,
            r.worst,
            r.tolerance
        );
        if let Some(note) = &r.note {
            println!("     first failure: {note}");
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_SUITE_FAILED) })
}

pub struct SolveFlags {
    pub path: Option<PathSelection>,
    pub mesh: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

#[derive(Serialize)]
struct Header<'a> {
    record: &'static str,
    created_unix_seconds: u64,
    config: &'a str,
}

pub fn solve(config_path: &Path, flags: SolveFlags) -> Result<ExitCode> {
    let mut cfg = ProblemConfig::load(config_path)?;
    if let Some(p) = flags.path {
        cfg.homotopy.path = p;
    }
    log::debug!("configuration:\n{}", cfg.to_text()?);
    let lp = load_problem(&cfg)?;
    let problem = Problem {
        domain: &lp.domain,
        model: lp.model,
        spec: &lp.spec,
        psi: &lp.psi,
        boundary: &lp.boundary,
        subsolution: &lp.subsolution,
    };
    let out = run_pipeline(&problem, &cfg.homotopy)?;
    let d = &lp.domain;

    let sup_error = lp.exact.as_ref().map(|exact| {
        (0..d.len())
            .map(|i| (out.field.u(d, i) - exact.u(d, i)).abs())
            .fold(0.0, f64::max)
    });
    let extra = sup_error.map(|e| serde_json::json!({ "sup_error_vs_exact": e }));

    let output = |flag: &Option<PathBuf>, cfg_path: &Option<PathBuf>| {
        flag.clone().or_else(|| cfg_path.as_ref().map(|p| resolve(config_path, p)))
    };
    let report_path = output(&flags.report, &cfg.output.report)
        .unwrap_or_else(|| config_path.with_extension("report.jsonl"));
    let mut w = create(&report_path)?;
    let header = Header {
        record: "header",
        created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config: &config_path.display().to_string(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    out.report.write_jsonl(&mut w, extra.as_ref())?;
    w.flush()?;

    if let Some(p) = output(&flags.mesh, &cfg.output.mesh) {
        let mut w = create(&p)?;
        write_obj_mesh(&mut w, d, &out.field, lp.model)?;
        w.flush()?;
    }
    if let Some(p) = output(&flags.field, &cfg.output.field) {
        let mut w = create(&p)?;
        FieldTable::new(d, &out.field, lp.model).write(&mut w)?;
        w.flush()?;
    }

    let r = &out.report;
    let last_t = r.steps.last().map_or(0.0, |s| s.t);
    if out.success {
        println!("outcome: reached t = 1 in {} accepted steps", r.steps.len());
    } else {
        let f = r.failure.as_ref();
        println!(
            "outcome: {} stopped at t = {} ({})",
            f.map_or("continuation", |f| f.phase.as_str()),
            last_t,
            f.map_or("", |f| f.reason.as_str())
        );
    }
    println!("final residual: {:e}", r.final_residual);
    if let Some((lo, hi)) = r.kappa_range() {
        println!("kappa range: [{lo}, {hi}]");
    }
    if let Some(m) = &r.monitors {
        print_monitors(m);
    }
    if !r.comparison_ok() {
        let worst = r.steps.iter().map(|s| s.comparison_margin).fold(f64::INFINITY, f64::min);
        println!("comparison v >= v_sub violated at some steps (worst margin {worst:e})");
    }
    if let Some(e) = sup_error {
        println!("sup |u - exact|: {e:e}");
    }
    if out.success {
        println!("report: {}", report_path.display());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("partial report: {}", report_path.display());
        Ok(ExitCode::from(EXIT_CONTINUATION))
    }
}

fn print_monitors(m: &Monitors) {
    println!("u range: [{}, {}]", m.u_min, m.u_max);
    println!("C0 = {}, C1 = {}, K0 = {}", m.c0, m.c1, m.k0);
    println!("min support function: {}", m.min_support);
    println!("max |hessian| on the boundary: {}", m.boundary_hessian);
    println!("convexity witness: {:e}", m.convexity_witness);
}

#[derive(Serialize)]
struct CurvatureRow {
    ring: usize,
    sector: usize,
    y1: f64,
    y2: f64,
    u: f64,
    kappa1: f64,
    kappa2: f64,
    support: f64,
    /// Smallest eigenvalue of ∇²u + uI in the orthonormal frame.
    convexity: f64,
}

pub fn curvature(path: &Path, model: Option<i32>, output: Option<&Path>) -> Result<ExitCode> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let table = FieldTable::read(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let model = match model {
        Some(k) => SpaceForm::new(k)?,
        None => table.model()?,
    };
    let (d, field) = table.to_field()?;

    let mut rows = Vec::with_capacity(d.len());
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, n) in d.nodes().iter().enumerate() {
        let mut row = CurvatureRow {
            ring: n.ring,
            sector: n.sector,
            y1: n.y.x,
            y2: n.y.y,
            u: field.u(&d, i),
            kappa1: f64::NAN,
            kappa2: f64::NAN,
            support: f64::NAN,
            convexity: f64::NAN,
        };
        if !n.boundary {
            let jet = d.covariant_jet(&field.values, i)?;
            let c = jet.convexity;
            row.convexity = sym2_eigenvalues(c[(0, 0)], c[(0, 1)], c[(1, 1)]).0;
            if let Ok(q) = jet.to_scalar_jet().and_then(|j| frame_for(model.into(), &j)) {
                row.kappa1 = q.principal_curvatures[0];
                row.kappa2 = q.principal_curvatures[1];
                row.support = q.support_function;
                kmin = kmin.min(row.kappa1);
                kmax = kmax.max(row.kappa2);
            }
        }
        rows.push(row);
    }

    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);

    // keep standard output clean for the table
    let mut summary: Box<dyn Write> = match output {
        Some(_) => Box::new(std::io::stdout()),
        None => Box::new(std::io::stderr()),
    };
    let (witness, node) = convexity_witness(&d, &field)?;
    writeln!(summary, "nodes: {} (model K = {})", d.len(), model.curvature_sign())?;
    writeln!(summary, "kappa range: [{kmin}, {kmax}]")?;
    if witness > 0.0 {
        let m = estimate_monitors(&d, &field, model.into())?;
        writeln!(summary, "C0 = {}, C1 = {}, K0 = {}", m.c0, m.c1, m.k0)?;
        writeln!(summary, "min support function: {}", m.min_support)?;
        writeln!(summary, "convexity witness: {witness:e}")?;
    } else {
        writeln!(
            summary,
            "NOT strictly locally convex: convexity witness {witness:e} at node {node}"
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
