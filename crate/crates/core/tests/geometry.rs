use periodforge::curve::{scherk_divisor, WeierstrassData};
use periodforge::families::{instantiate, FamilySpec};
use periodforge::geometry::{build_mesh, develop_flat, handle_closure, lattice_periods, FlatForm, Grid};
use periodforge::numerics::{Precision, Real};
use periodforge::solver::{solve_period_problem, SolveOptions};

fn p(d: u32) -> Precision {
    Precision::new(d).unwrap()
}

fn scherk(q: Precision) -> WeierstrassData {
    WeierstrassData::new(scherk_divisor(q))
}

#[test]
fn scherk_lattice_matches_residues() {
    // residues of φ1, φ2 at the ends give ±2π along the axes
    let q = p(30);
    let l = lattice_periods(&scherk(q), q).unwrap();
    let two_pi = Real::pi(q).ldexp(1);
    let expect = [[two_pi.clone(), Real::zero(q), Real::zero(q)], [Real::zero(q), -two_pi, Real::zero(q)]];
    for (got, want) in [&l.t1, &l.t2].into_iter().zip(&expect) {
        for k in 0..3 {
            assert!((&got[k] - &want[k]).abs() < Real::parse("1e-25", q).unwrap(), "{}", got[k].to_decimal(10));
        }
    }
}

#[test]
fn obj_output_is_consistent() {
    let q = p(17);
    let grid = Grid {
        radial_samples: 10,
        angular_samples: 9,
        truncation_radius: 1e2,
    };
    let mesh = build_mesh(&scherk(q), grid, q).unwrap();
    let mut buf = Vec::new();
    mesh.write_obj(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut verts = Vec::new();
    let mut faces = 0;
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let v: Vec<f64> = it.map(|s| s.parse().unwrap()).collect();
                assert_eq!(v.len(), 3);
                verts.push(v);
            }
            Some("f") => {
                let idx: Vec<usize> = it.map(|s| s.parse().unwrap()).collect();
                assert_eq!(idx.len(), 3);
                assert!(idx.iter().all(|&i| i >= 1 && i <= verts.len()));
                faces += 1;
            }
            _ => {}
        }
    }
    assert_eq!(faces, mesh.triangles.len());
    // normalized to unit diameter
    let max = verts.iter().flat_map(|v| v.iter()).fold(0f64, |m, c| m.max(c.abs()));
    assert!(max <= 1.0 + 1e-12);
}

#[test]
fn karcher_surface_closes() {
    let spec = FamilySpec::WwOdd(0);
    let sol = solve_period_problem(spec, &spec.default_seed(p(30)), None, &SolveOptions::default()).unwrap();
    let inst = instantiate(spec, &sol.values, None).unwrap();
    let res = sol.residual_norm.to_f64();
    for c in handle_closure(&inst, p(30)).unwrap() {
        assert!(c.defect.to_f64() <= 10.0 * res, "{}: {}", c.label, c.defect.to_decimal(4));
    }
    let grid = Grid {
        radial_samples: 12,
        angular_samples: 12,
        truncation_radius: 1e2,
    };
    let mesh = build_mesh(&inst.data, grid, p(17)).unwrap();
    assert!(mesh.seam_defect() < 1e-8);
    assert!(mesh.mirror_defect() < 1e-8);
}

#[test]
fn scherk_flat_structures_close() {
    let q = p(30);
    for form in [FlatForm::Gdh, FlatForm::InvGdh] {
        let poly = develop_flat(&scherk(q), form, 1e3, q).unwrap();
        assert!(poly.closure.abs().to_f64() < 1e-20, "{}", poly.closure.abs().to_decimal(4));
        assert_eq!(poly.cone_angle_defect(), 0.0);
        let list = poly.vertex_list();
        assert!(list.lines().count() > poly.vertices.len());
        let mut svg = Vec::new();
        poly.write_svg(&mut svg).unwrap();
        assert!(String::from_utf8(svg).unwrap().contains("<svg"));
    }
}
