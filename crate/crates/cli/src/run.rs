use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use periodforge::families::{instantiate, FamilyInstance, FamilySpec};
use periodforge::geometry::{build_mesh, develop_flat, FlatForm, Grid};
use periodforge::numerics::{Precision, Real};
use periodforge::solver::{continue_family, solve_period_problem, SolveOptions};
use periodforge::store::{self, SolutionRecord};
use periodforge::tables::published_tables;

use crate::config::Flags;

/// Meshes only need double-precision vertex positions.
const MESH_PRECISION: u32 = 17;
const DEFAULT_PRECISION: u32 = 30;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl<E: Into<periodforge::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let e = e.into();
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn apply_thread_cap() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("PERIODFORGE_MAX_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| config(format!("PERIODFORGE_MAX_THREADS must be a positive integer, got `{v}`")))?;
        periodforge::set_max_threads(n);
    }
    Ok(())
}

fn family(f: &Flags) -> Result<FamilySpec, CliError> {
    let name = f.family.as_deref().ok_or_else(|| config("--family is required"))?;
    match FamilySpec::from_cli(&name.to_ascii_lowercase(), f.n, f.m) {
        Ok(spec) => Ok(spec),
        Err(e) => name.parse().map_err(|_| config(e.to_string())),
    }
}

fn precision(f: &Flags, default: u32) -> Result<Precision, CliError> {
    Ok(Precision::new(f.precision.unwrap_or(default))?)
}

/// `NAME=VALUE` or, when `value_optional`, a bare `NAME`.
fn pin(f: &Flags, value_optional: bool) -> Result<Option<(String, Option<String>)>, CliError> {
    let Some(p) = &f.pin else { return Ok(None) };
    match p.split_once('=') {
        Some((n, v)) if !n.is_empty() && !v.is_empty() => Ok(Some((n.trim().to_string(), Some(v.trim().to_string())))),
        None if value_optional && !p.is_empty() => Ok(Some((p.trim().to_string(), None))),
        _ => Err(config(format!("--pin expects NAME=VALUE, got `{p}`"))),
    }
}

fn read_record(source: &str) -> Result<SolutionRecord, CliError> {
    match source.strip_prefix("bundled:") {
        Some(name) => Ok(store::bundled(name)?),
        None => Ok(store::load(Path::new(source))?),
    }
}

fn seed(f: &Flags, spec: FamilySpec, prec: Precision) -> Result<Vec<Real>, CliError> {
    let source = f.seed.as_deref().unwrap_or("default");
    if source == "default" {
        return Ok(spec.default_seed(prec));
    }
    if source == "published" {
        let table = published_tables()
            .into_iter()
            .find(|t| t.spec == spec)
            .ok_or_else(|| config(format!("no published table for {spec}")))?;
        let point = &table.points[table.points.len() / 2];
        return point
            .params
            .iter()
            .map(|(k, v)| Real::parse(v, prec).map_err(|e| config(format!("table value {k}: {e}"))))
            .collect();
    }
    if let Some(path) = source.strip_prefix("file:") {
        let rec = store::load(Path::new(path))?;
        if rec.family != spec {
            return Err(config(format!("{path} holds {}, not {spec}", rec.family)));
        }
        return Ok(rec.values(0, prec)?);
    }
    Err(config(format!("--seed must be default, published or file:PATH, got `{source}`")))
}

/// Set the `--pin` value in `x`; the pinned name, or the family default.
fn apply_pin(f: &Flags, spec: FamilySpec, x: &mut [Real], prec: Precision) -> Result<Option<String>, CliError> {
    match pin(f, false)? {
        Some((name, value)) => {
            let k = spec.parameter_index(&name)?;
            let v = value.expect("pin parsed with a value");
            x[k] = Real::parse(&v, prec).map_err(|e| config(format!("--pin value: {e}")))?;
            Ok(Some(name))
        }
        None => Ok(spec.default_pin().map(str::to_string)),
    }
}

fn solve_options(prec: Precision) -> SolveOptions {
    SolveOptions {
        initial_precision: prec.digits(),
        max_precision: (4 * prec.digits()).max(SolveOptions::default().max_precision),
        ..SolveOptions::default()
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| config(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Numeric(e.to_string())),
    }
}

pub fn solve(f: &Flags) -> Result<(), CliError> {
    let spec = family(f)?;
    let prec = precision(f, DEFAULT_PRECISION)?;
    let mut x = seed(f, spec, prec)?;
    let pin_name = apply_pin(f, spec, &mut x, prec)?;
    let sol = solve_period_problem(spec, &x, pin_name.as_deref(), &solve_options(prec))?;
    eprintln!(
        "solved {spec}: {} iterations, P={}, residual {}",
        sol.iterations,
        sol.precision_used,
        sol.residual_norm.to_decimal(3)
    );
    let record = SolutionRecord::from_solution(&sol, Some(timestamp()));
    match &f.out {
        Some(p) => Ok(store::save(&record, p)?),
        None => write_out(None, &record.to_json()),
    }
}

pub fn verify(f: &Flags) -> Result<(), CliError> {
    let source = f.record.as_deref().ok_or_else(|| config("--record is required"))?;
    let record = read_record(source)?;
    let digits = f.precision.unwrap_or((record.precision_used + 10).max(DEFAULT_PRECISION));
    let prec = Precision::new(digits)?;
    let cert = store::certify(&record, prec)?;
    let mut text = String::new();
    text.push_str(&format!("record {} ({})\n", record.name.as_deref().unwrap_or(source), record.family));
    for (i, r) in cert.residuals.iter().enumerate() {
        text.push_str(&format!("point {i}: max residual {}\n", r.to_decimal(3)));
    }
    text.push_str(&format!("max residual {} at P={digits}\n", cert.max_residual.to_decimal(3)));
    text.push_str(&format!("tolerance {}\n", cert.tolerance.to_decimal(3)));
    if let Some(a) = &record.anomaly {
        text.push_str(&format!("anomaly: {a}\n"));
    }
    text.push_str(if cert.pass { "verdict PASS\n" } else { "verdict FAIL\n" });
    write_out(f.out.as_deref(), &text)?;
    if cert.pass {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "residual {} exceeds tolerance {}",
            cert.max_residual.to_decimal(3),
            cert.tolerance.to_decimal(3)
        )))
    }
}

fn read_schedule(path: &Path, prec: Precision) -> Result<Vec<Real>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let values: Vec<Real> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| Real::parse(l, prec).map_err(|e| config(format!("{}: {e}", path.display()))))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(config(format!("{}: empty schedule", path.display())));
    }
    Ok(values)
}

pub fn sweep(f: &Flags) -> Result<(), CliError> {
    let spec = family(f)?;
    if !spec.is_parallel() {
        return Err(config(format!("sweep needs a parallel-end family, {spec} has orthogonal ends")));
    }
    let prec = precision(f, DEFAULT_PRECISION)?;
    let schedule_path = f.schedule.as_deref().ok_or_else(|| config("--schedule is required"))?;
    let schedule = read_schedule(schedule_path, prec)?;
    let out_dir: PathBuf = f.out.clone().ok_or_else(|| config("--out (a directory) is required"))?;
    let pin_name = match pin(f, true)? {
        Some((name, _)) => name,
        None => spec
            .default_pin()
            .ok_or_else(|| config(format!("{spec} has no default pin; pass --pin")))?
            .to_string(),
    };
    spec.parameter_index(&pin_name)?;
    let x = seed(f, spec, prec)?;
    let branch = continue_family(spec, &pin_name, &schedule, &x, &solve_options(prec))?;
    fs::create_dir_all(&out_dir).map_err(|e| config(format!("{}: {e}", out_dir.display())))?;
    for (i, sol) in branch.solutions.iter().enumerate() {
        let record = SolutionRecord::from_solution(sol, Some(timestamp()));
        store::save(&record, &out_dir.join(format!("{i:03}.json")))?;
        eprintln!(
            "{i:03}: {pin_name} = {}  residual {}",
            sol.value(&pin_name).expect("pinned").to_decimal(6),
            sol.residual_norm.to_decimal(3)
        );
    }
    match branch.failure {
        Some((i, e)) => Err(CliError::Numeric(format!("branch stopped at schedule entry {i}: {e}"))),
        None => Ok(()),
    }
}

/// The surface to draw: a record's first point, or a fresh solve.
fn surface(f: &Flags, prec: Precision) -> Result<FamilyInstance, CliError> {
    if let Some(source) = &f.record {
        let rec = read_record(source)?;
        let values = rec.values(0, prec)?;
        return Ok(instantiate(rec.family, &values, rec.pinned.as_deref())?);
    }
    let spec = family(f)?;
    let mut x = seed(f, spec, prec)?;
    let pin_name = apply_pin(f, spec, &mut x, prec)?;
    let sol = solve_period_problem(spec, &x, pin_name.as_deref(), &solve_options(prec))?;
    Ok(instantiate(spec, &sol.values, pin_name.as_deref())?)
}

pub fn mesh(f: &Flags) -> Result<(), CliError> {
    let prec = precision(f, DEFAULT_PRECISION)?;
    let inst = surface(f, prec)?;
    let defaults = Grid::default();
    let grid = Grid {
        radial_samples: f.radial.unwrap_or(defaults.radial_samples),
        angular_samples: f.angular.unwrap_or(defaults.angular_samples),
        truncation_radius: f.truncation.unwrap_or(defaults.truncation_radius),
    };
    let mesh = build_mesh(&inst.data, grid, Precision::new(MESH_PRECISION)?)?;
    eprintln!(
        "{}: {} vertices, {} triangles, seam defect {:.1e}, mirror defect {:.1e}, end normal {:.1e}",
        inst.spec,
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.seam_defect(),
        mesh.mirror_defect(),
        mesh.end_normal_defect()
    );
    let mut buf = Vec::new();
    mesh.write_obj(&mut buf).expect("writing to memory");
    write_out(f.out.as_deref(), std::str::from_utf8(&buf).expect("ascii"))
}

pub fn flat(f: &Flags) -> Result<(), CliError> {
    let prec = precision(f, DEFAULT_PRECISION)?;
    let form = match f.form.as_deref().unwrap_or("gdh").to_ascii_lowercase().as_str() {
        "gdh" => FlatForm::Gdh,
        "invgdh" => FlatForm::InvGdh,
        other => return Err(config(format!("--form must be gdh or invgdh, got `{other}`"))),
    };
    let inst = surface(f, prec)?;
    let poly = develop_flat(&inst.data, form, f.truncation.unwrap_or(1e3), prec)?;
    eprintln!(
        "{}: {} marked points, closure {:.1e}, cone angle defect {:.1e}",
        inst.spec,
        poly.vertices.len(),
        poly.closure.abs().to_f64(),
        poly.cone_angle_defect()
    );
    match &f.out {
        Some(svg) => {
            let mut buf = Vec::new();
            poly.write_svg(&mut buf).expect("writing to memory");
            write_out(Some(svg), std::str::from_utf8(&buf).expect("utf-8"))?;
            write_out(Some(&svg.with_extension("txt")), &poly.vertex_list())
        }
        None => write_out(None, &poly.vertex_list()),
    }
}
