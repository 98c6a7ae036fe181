//! Acceptance gate: one PASS/FAIL line per criterion at the pinned
//! tolerances, followed by the evidence behind it. Exits non-zero if any
//! criterion fails.

use std::time::Instant;

use periodforge::curve::{scherk_divisor, WeierstrassData};
use periodforge::families::{
    instantiate, max_norm, residual_vector, residuals_at_levels, FamilySpec,
};
use periodforge::geometry::{build_mesh, handle_closure, lattice_periods, Grid};
use periodforge::numerics::{Precision, Real};
use periodforge::quadrature::{integrate_de, QuadratureOptions, Segment};
use periodforge::solver::{
    continue_family, jacobian_with_step, solve_period_problem, Solution, SolveOptions,
};
use periodforge::tables::table;
use periodforge_validation::{
    ordered, prec, real, rel_diff, table_point, table_residual, worst_rel, Verdict,
};

fn opts(p: u32, target: Option<&str>) -> SolveOptions {
    SolveOptions {
        initial_precision: p,
        max_precision: 4 * p,
        target_residual: target.map(|t| real(t, prec(p))),
        ..SolveOptions::default()
    }
}

fn seed_with(spec: FamilySpec, p: Precision, name: &str, value: &str) -> Vec<Real> {
    let mut seed = spec.default_seed(p);
    seed[spec.parameter_index(name).unwrap()] = real(value, p);
    seed
}

fn quadrature_oracle() -> Verdict {
    let mut v = Verdict::new();
    let p = prec(50);
    let start = Instant::now();
    let seg = Segment::singular(Real::zero(p), Real::one(p)).unwrap();
    let est = integrate_de(
        |_x: &Real, lo: &Real, hi: &Real| (lo * hi).rsqrt(),
        &seg,
        p,
        &QuadratureOptions::default(),
    );
    let secs = start.elapsed().as_secs_f64();
    match est {
        Ok(est) => {
            let err = (&est.value - &Real::pi(p)).abs().to_f64();
            v.check(err <= 1e-40, format!("|I - pi| = {err:.3e} (tol 1e-40)"));
        }
        Err(e) => v.fail(format!("quadrature error: {e}")),
    }
    v.check(secs < 2.0, format!("runtime {secs:.3} s (limit 2 s)"));
    v
}

fn rtw_pairs() -> Verdict {
    let mut v = Verdict::new();
    let p = prec(30);
    for (a1, a2) in [
        ("0.1", "0.4677900971198217"),
        ("0.0001", "0.7898850561221615"),
        ("0.265", "0.270905876788826"),
    ] {
        let inst = instantiate(FamilySpec::Rtw, &[real(a1, p), real(a2, p)], Some("a1"));
        match inst.and_then(|i| residual_vector(&i, p)) {
            Ok(r) => {
                let e = r[0].abs().to_f64();
                v.check(e <= 1e-10, format!("a1 = {a1}: |int phi2 - pi| = {e:.3e} (tol 1e-10)"));
            }
            Err(e) => v.fail(format!("a1 = {a1}: {e}")),
        }
    }
    v
}

fn rtw_solve() -> Verdict {
    let mut v = Verdict::new();
    let p = prec(30);
    let seed = seed_with(FamilySpec::Rtw, p, "a1", "0.265");
    match solve_period_problem(FamilySpec::Rtw, &seed, Some("a1"), &opts(30, None)) {
        Ok(s) => {
            let a2 = s.value("a2").unwrap();
            let err = (a2 - &real("0.270905876788826", p)).abs().to_f64();
            v.check(
                err <= 1e-10,
                format!("a2 = {} differs from 0.270905876788826 by {err:.3e} (tol 1e-10)", a2.to_decimal(18)),
            );
            v.check(s.iterations < 30, format!("{} Newton iterations (limit 30)", s.iterations));
        }
        Err(e) => v.fail(format!("solve failed: {e}")),
    }
    v
}

/// Perturb every parameter by a relative `±eps`, alternating sign.
fn perturbed(values: &[Real], eps: &str) -> Vec<Real> {
    values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = x.precision();
            let f = if i % 2 == 0 { &Real::one(p) + &real(eps, p) } else { &Real::one(p) - &real(eps, p) };
            x * &f
        })
        .collect()
}

fn type34() -> Verdict {
    let mut v = Verdict::new();
    let t = table("type34").unwrap();
    match table_residual(&t, prec(60)) {
        Ok(r) => v.check(r <= 1e-40, format!("published point: max residual {r:.3e} at P=60 (tol 1e-40)")),
        Err(e) => v.fail(format!("published point: {e}")),
    }
    let p = prec(40);
    let solved = solve_period_problem(t.spec, &table_point(&t, 0, p), None, &opts(40, Some("1e-36")));
    let reference = match solved {
        Ok(s) => s,
        Err(e) => {
            v.fail(format!("solve from published point failed: {e}"));
            return v;
        }
    };
    let seed = perturbed(&reference.values, "1e-3");
    match solve_period_problem(t.spec, &seed, None, &opts(40, Some("1e-36"))) {
        Ok(s) => {
            let (name, worst) = worst_rel(t.spec, &s.values, &reference.values);
            v.check(
                worst <= 1e-20,
                format!("re-solve from 1e-3 perturbation: worst relative difference {worst:.3e} in {name} (tol 1e-20)"),
            );
        }
        Err(e) => v.fail(format!("re-solve from 1e-3 perturbation failed: {e}")),
    }
    v
}

fn type22n2() -> Verdict {
    let mut v = Verdict::new();
    let t = table("type22n_n2").unwrap();
    let spec = FamilySpec::Type22n(2);
    let p = prec(30);
    match solve_period_problem(spec, &spec.default_seed(p), None, &opts(30, None)) {
        Ok(s) => {
            let (name, worst) = worst_rel(spec, &s.values, &table_point(&t, 0, p));
            v.check(
                worst <= 5e-10,
                format!("{} iterations; worst relative difference {worst:.3e} in {name} (10 digits = 5e-10)", s.iterations),
            );
        }
        Err(e) => v.fail(format!("solve from default seed failed: {e}")),
    }
    v
}

fn type12n3() -> Verdict {
    let mut v = Verdict::new();
    let t = table("type12n_n3").unwrap();
    match table_residual(&t, prec(60)) {
        Ok(r) => v.check(r <= 1e-40, format!("published point: max residual {r:.3e} at P=60 (tol 1e-40)")),
        Err(e) => v.fail(format!("published point: {e}")),
    }
    v
}

/// Re-solve a parallel table at its pinned value from the default seed.
fn parallel_resolve(v: &mut Verdict, name: &str) {
    let t = table(name).unwrap();
    let p = prec(30);
    let pin = t.pinned.unwrap();
    let printed = table_point(&t, 0, p);
    let pin_value = t.points[0].params.iter().find(|(k, _)| *k == pin).unwrap().1;
    let seed = seed_with(t.spec, p, pin, pin_value);
    match solve_period_problem(t.spec, &seed, Some(pin), &opts(30, None)) {
        Ok(s) => {
            let (worst_name, worst) = worst_rel(t.spec, &s.values, &printed);
            v.check(
                worst <= 5e-9,
                format!(
                    "{} with {pin} = {pin_value}: worst relative difference {worst:.3e} in {worst_name} (8 digits = 5e-9)",
                    t.spec.id()
                ),
            );
        }
        Err(e) => v.fail(format!("{} with {pin} = {pin_value}: solve failed: {e}", t.spec.id())),
    }
}

fn parallel_families() -> Verdict {
    let mut v = Verdict::new();
    for name in ["par4n_n3", "par4n2_n3", "par4n3_n3"] {
        parallel_resolve(&mut v, name);
    }

    // PAR_4N1(3): the printed b is rounded; the b equation is taken at the
    // value that solves it with the printed a's.
    let p = prec(40);
    let t = table("par4n1_n3").unwrap();
    let mut point = table_point(&t, 0, p);
    let printed = instantiate(t.spec, &point, t.pinned).and_then(|i| residual_vector(&i, p));
    let k = t.spec.parameter_index("b").unwrap();
    point[k] = real("-6.1500009843925637670e-11", p);
    let refined = instantiate(t.spec, &point, t.pinned).and_then(|i| residual_vector(&i, p));
    match (printed, refined) {
        (Ok(a), Ok(b)) => {
            let n = a.len();
            let worst = a[..n - 1]
                .iter()
                .chain(std::iter::once(&b[n - 1]))
                .map(|x| x.abs().to_f64())
                .fold(0.0, f64::max);
            v.check(worst <= 1e-15, format!("PAR_4N1(3) table: max residual {worst:.3e} at P=40 (tol 1e-15)"));
        }
        (Err(e), _) | (_, Err(e)) => v.fail(format!("PAR_4N1(3) table: {e}")),
    }
    let t = table("par4n3_n3").unwrap();
    match table_residual(&t, p) {
        Ok(r) => v.check(r <= 1e-15, format!("PAR_4N3(3) table: max residual {r:.3e} at P=40 (tol 1e-15)")),
        Err(e) => v.fail(format!("PAR_4N3(3) table: {e}")),
    }

    let spec = FamilySpec::Type22n1(2);
    let p = prec(30);
    let o = SolveOptions {
        max_iterations: 25,
        ..opts(30, None)
    };
    match solve_period_problem(spec, &spec.default_seed(p), None, &o) {
        Ok(s) => v.check(
            ordered(spec, &s.values),
            format!("TYPE_2_2N1(2) fresh solve: residual {:.3e}, ordered", s.residual_norm.to_f64()),
        ),
        Err(e) => v.fail(format!("TYPE_2_2N1(2) fresh solve: {e}")),
    }
    v
}

fn genus_six_sweep() -> Verdict {
    let mut v = Verdict::new();
    let spec = FamilySpec::Par4n2(1);
    let p = prec(40);
    let seed = spec.default_seed(p);
    let a1 = seed[0].to_f64();
    let schedule: Vec<Real> = (0..10)
        .map(|i| real(&format!("{:e}", a1 * 10f64.powf(-(i as f64) / 9.0)), p))
        .collect();
    match continue_family(spec, "a1", &schedule, &seed, &opts(40, Some("1e-30"))) {
        Ok(branch) => {
            v.check(
                branch.failure.is_none() && branch.solutions.len() == 10,
                format!(
                    "{} of 10 pins solved (a1 from {:.3e} down a decade)",
                    branch.solutions.len(),
                    a1
                ),
            );
            let mut worst = 0f64;
            let mut counts = Vec::new();
            for s in &branch.solutions {
                match instantiate(spec, &s.values, Some("a1")).and_then(|i| residual_vector(&i, p)) {
                    Ok(r) => {
                        counts.push(r.len());
                        worst = worst.max(max_norm(&r, p).to_f64());
                    }
                    Err(e) => v.fail(format!("re-evaluating a branch point: {e}")),
                }
            }
            v.check(worst <= 1e-20, format!("max residual along the branch {worst:.3e} (tol 1e-20)"));
            v.check(
                counts.iter().all(|&c| c == 5) && spec.parameter_names().len() == 6,
                format!("{} variables, residual entries per solve {:?}", spec.parameter_names().len(), counts),
            );
            let steps: f64 = branch
                .solutions
                .windows(2)
                .map(|w| rel_diff(&w[1].values[1], &w[0].values[1]))
                .fold(0.0, f64::max);
            v.check(steps < 1.0, format!("connected: largest relative step in a2 {steps:.3e}"));
        }
        Err(e) => v.fail(format!("continuation failed: {e}")),
    }
    v
}

fn geometry() -> Verdict {
    let mut v = Verdict::new();
    let p = prec(17);
    let scherk = WeierstrassData::new(scherk_divisor(p));
    let grid = Grid {
        truncation_radius: 1e4,
        ..Grid::default()
    };
    match build_mesh(&scherk, grid, p) {
        Ok(mesh) => {
            let d = mesh.seam_defect();
            v.check(d <= 1e-8, format!("Scherk seam watertightness {d:.3e} (tol 1e-8)"));
            let n = mesh.end_normal_defect();
            v.check(n <= 1e-3, format!("Scherk end normals |N3| <= {n:.3e} at R = 1e4 (tol 1e-3)"));
            let m = mesh.mirror_defect();
            v.check(m <= 1e-8, format!("Scherk tau2 mirror defect {m:.3e} (tol 1e-8)"));
        }
        Err(e) => v.fail(format!("Scherk mesh: {e}")),
    }
    match lattice_periods(&scherk.with_precision(prec(30)), prec(30)) {
        Ok(l) => {
            let c = l.cosine();
            v.check(c <= 1e-8, format!("Scherk lattice |cos(T1, T2)| = {c:.3e} (tol 1e-8)"));
        }
        Err(e) => v.fail(format!("Scherk lattice: {e}")),
    }

    let p = prec(30);
    let cases: [(FamilySpec, Option<(&str, &str)>); 4] = [
        (FamilySpec::Rtw, Some(("a1", "0.265"))),
        (FamilySpec::WwOdd(0), None),
        (FamilySpec::WwEven(1), None),
        (FamilySpec::Par4n2(1), None),
    ];
    for (spec, pin) in cases {
        let seed = match pin {
            Some((n, x)) => seed_with(spec, p, n, x),
            None => spec.default_seed(p),
        };
        let pin_name = pin.map(|(n, _)| n).or(spec.default_pin());
        let solved: Result<Solution, periodforge::Error> =
            solve_period_problem(spec, &seed, pin_name, &opts(30, None)).map_err(Into::into);
        let result = solved.and_then(|s| {
            let inst = instantiate(spec, &s.values, pin_name)?;
            let closure = handle_closure(&inst, p)?;
            let mesh = build_mesh(&inst.data, Grid::default(), prec(17))?;
            Ok((s, closure, mesh))
        });
        match result {
            Ok((s, closure, mesh)) => {
                let res = s.residual_norm.to_f64();
                let worst = closure.iter().map(|c| c.defect.to_f64()).fold(0.0, f64::max);
                v.check(
                    worst <= 10.0 * res,
                    format!("{} handle closure {worst:.3e} vs 10 x residual {:.3e}", spec.id(), 10.0 * res),
                );
                let m = mesh.mirror_defect();
                v.check(m <= 1e-8, format!("{} tau2 mirror defect {m:.3e} (tol 1e-8)", spec.id()));
            }
            Err(e) => v.fail(format!("{}: {e}", spec.id())),
        }
    }
    v
}

fn hygiene_families() -> Vec<FamilySpec> {
    use FamilySpec::*;
    vec![
        KmrA,
        KmrB,
        WwEven(1),
        WwEven(2),
        WwOdd(0),
        WwOdd(1),
        Type12n(1),
        Type12n(3),
        Type22n(1),
        Type22n(2),
        Type22n1(1),
        Type22n1(2),
        Type34,
        TypeMN { m: 2, n: 3 },
        Rtw,
        Par4n(1),
        Par4n(3),
        Par4n1(1),
        Par4n1(3),
        Par4n2(1),
        Par4n2(3),
        Par4n3(1),
        Par4n3(3),
    ]
}

/// Worst deviation of the Richardson ratio from 4 (as a factor) over the
/// entries whose step differences clear the rounding floor.
fn richardson_factor(spec: FamilySpec, p: Precision) -> Result<Option<f64>, periodforge::Error> {
    let pin = spec.default_pin();
    let inst = instantiate(spec, &spec.default_seed(p), pin)?;
    let levels = residuals_at_levels(&inst, p, None)?.levels;
    let free: Vec<usize> = (0..inst.names.len())
        .filter(|&i| Some(inst.names[i].as_str()) != pin)
        .collect();
    if free.is_empty() {
        return Ok(None);
    }
    let h = real("1e-2", p);
    let j: Vec<_> = [0, 1, 2]
        .iter()
        .map(|&k| jacobian_with_step(&inst, &free, p, &h.ldexp(-k), Some(&levels)))
        .collect::<Result<_, _>>()?;
    let mut worst = 1f64;
    let mut used = 0;
    for r in 0..j[0].len() {
        for c in 0..free.len() {
            let d1 = (&j[0][r][c] - &j[1][r][c]).to_f64();
            let d2 = (&j[1][r][c] - &j[2][r][c]).to_f64();
            let scale = 1.0 + j[2][r][c].abs().to_f64();
            if d2.abs() <= 1e-15 * scale {
                continue;
            }
            used += 1;
            let ratio = d1 / d2;
            let factor = if ratio > 0.0 { (ratio / 4.0).max(4.0 / ratio) } else { f64::INFINITY };
            worst = worst.max(factor);
        }
    }
    // a Jacobian with nothing above the floor is a failure, not a pass
    Ok(Some(if used == 0 { f64::INFINITY } else { worst }))
}

fn hygiene() -> Verdict {
    let mut v = Verdict::new();
    let p = prec(30);
    let p2 = prec(60);
    let mut worst_factor = (String::new(), 1f64);
    let mut worst_shift = (String::new(), 0f64);
    let mut skipped = Vec::new();
    for spec in hygiene_families() {
        match richardson_factor(spec, p) {
            Ok(Some(f)) if f > worst_factor.1 => worst_factor = (spec.id(), f),
            Ok(Some(_)) => {}
            Ok(None) => skipped.push(spec.id()),
            Err(e) => v.fail(format!("{} Richardson: {e}", spec.id())),
        }
        let pin = spec.default_pin();
        let seed = spec.default_seed(p);
        let shift = instantiate(spec, &seed, pin).and_then(|inst| {
            let a = residual_vector(&inst, p)?;
            let b = residual_vector(&inst, p2)?;
            Ok(a.iter().zip(&b).map(|(x, y)| (&x.with_precision(p2) - y).abs().to_f64()).fold(0.0, f64::max))
        });
        match shift {
            Ok(s) if s > worst_shift.1 => worst_shift = (spec.id(), s),
            Ok(_) => {}
            Err(e) => v.fail(format!("{} precision doubling: {e}", spec.id())),
        }
    }
    v.check(
        worst_factor.1 <= 8.0,
        format!(
            "Richardson ratio within factor {:.5} of 4 (worst {}; limit 8; no free variables: {})",
            worst_factor.1,
            worst_factor.0,
            skipped.join(", ")
        ),
    );
    v.check(
        worst_shift.1 <= 1e-24,
        format!("seed residuals P=30 vs P=60 differ by {:.3e} (worst {}; tol 1e-24)", worst_shift.1, worst_shift.0),
    );

    let solve = |digits: u32, target: &str| {
        let q = prec(digits);
        let seed = seed_with(FamilySpec::Rtw, q, "a1", "0.265");
        solve_period_problem(FamilySpec::Rtw, &seed, Some("a1"), &opts(digits, Some(target)))
    };
    match (solve(30, "1e-28"), solve(60, "1e-58")) {
        (Ok(a), Ok(b)) => {
            let d = (&a.value("a2").unwrap().with_precision(p2) - b.value("a2").unwrap()).abs().to_f64();
            v.check(d <= 1e-24, format!("RTW a2 solved at P=30 vs P=60 differs by {d:.3e} (tol 1e-24)"));
        }
        (Err(e), _) | (_, Err(e)) => v.fail(format!("RTW precision doubling solve: {e}")),
    }
    v
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("quadrature oracle", quadrature_oracle),
        ("RTW residual certification", rtw_pairs),
        ("RTW solve", rtw_solve),
        ("TYPE_3_4 certification and re-solve", type34),
        ("TYPE_2_2N(2) from default seed", type22n2),
        ("TYPE_1_2N(3) certification", type12n3),
        ("parallel families", parallel_families),
        ("genus-6 family sweep", genus_six_sweep),
        ("geometry properties", geometry),
        ("numeric hygiene", hygiene),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        println!("{}", verdict.render(i + 1, title));
        println!("      ({:.1} s)", start.elapsed().as_secs_f64());
        failed += usize::from(!verdict.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    match only {
        Some(k) => println!("acceptance: criterion {k} passed"),
        None => println!("acceptance: all criteria passed"),
    }
}
