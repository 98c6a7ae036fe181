//! Browser bindings: solve RTW at a pinned `a1`, draw a flat structure, and
//! fetch a mesh as a triangle soup.

use wasm_bindgen::prelude::*;

use periodforge::curve::{scherk_divisor, WeierstrassData};
use periodforge::families::{instantiate, FamilySpec};
use periodforge::geometry::{build_mesh, develop_flat, FlatForm, Grid};
use periodforge::numerics::{Precision, Real};
use periodforge::solver::{solve_period_problem, SolveOptions};
use periodforge::store::SolutionRecord;

const PRECISION: u32 = 20;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn prec() -> Precision {
    Precision::new(PRECISION).expect("above minimum")
}

fn rtw_data(a1: &str) -> Result<(WeierstrassData, String), JsValue> {
    let spec = FamilySpec::Rtw;
    let mut seed = spec.default_seed(prec());
    seed[0] = Real::parse(a1, prec()).map_err(err)?;
    let opts = SolveOptions {
        initial_precision: PRECISION,
        max_precision: 2 * PRECISION,
        ..SolveOptions::default()
    };
    let sol = solve_period_problem(spec, &seed, Some("a1"), &opts).map_err(err)?;
    let inst = instantiate(spec, &sol.values, Some("a1")).map_err(err)?;
    Ok((inst.data, SolutionRecord::from_solution(&sol, None).to_json()))
}

fn surface(family: &str, a1: &str) -> Result<WeierstrassData, JsValue> {
    match family {
        "scherk0" => Ok(WeierstrassData::new(scherk_divisor(prec()))),
        "rtw" => Ok(rtw_data(a1)?.0),
        other => Err(err(format!("unknown family `{other}`"))),
    }
}

/// Solve RTW with `a1` pinned; returns the solution record as JSON.
#[wasm_bindgen]
pub fn solve_rtw(a1: &str) -> Result<String, JsValue> {
    Ok(rtw_data(a1)?.1)
}

/// SVG of the flat structure of `G dh` (`form = "gdh"`) or `(1/G) dh`.
#[wasm_bindgen]
pub fn flat_svg(family: &str, a1: &str, form: &str) -> Result<String, JsValue> {
    let form = match form {
        "gdh" => FlatForm::Gdh,
        "invgdh" => FlatForm::InvGdh,
        other => return Err(err(format!("unknown form `{other}`"))),
    };
    let wd = surface(family, a1)?;
    let poly = develop_flat(&wd, form, 1e3, prec()).map_err(err)?;
    let mut buf = Vec::new();
    poly.write_svg(&mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(err)
}

/// Triangles as consecutive `x y z` triples, scaled to unit diameter.
#[wasm_bindgen]
pub fn mesh_triangles(family: &str, a1: &str, samples: usize) -> Result<Vec<f32>, JsValue> {
    let wd = surface(family, a1)?;
    let grid = Grid {
        radial_samples: samples,
        angular_samples: samples,
        truncation_radius: 1e2,
    };
    let mesh = build_mesh(&wd, grid, Precision::new(17).expect("above minimum")).map_err(err)?;
    Ok(mesh
        .triangles
        .iter()
        .flat_map(|t| t.iter().flat_map(|&i| mesh.vertices[i].map(|c| c as f32)))
        .collect())
}
