use periodforge::numerics::{Precision, Real};
use periodforge::quadrature::{integrate_de, integrate_log, QuadratureOptions, Segment};

fn p(d: u32) -> Precision {
    Precision::new(d).unwrap()
}

fn tol(s: &str, q: Precision) -> Real {
    Real::parse(s, q).unwrap()
}

#[test]
fn polynomial_is_exact_to_precision() {
    let q = p(40);
    let seg = Segment::new(Real::zero(q), Real::one(q)).unwrap();
    let est = integrate_de(|x: &Real, _: &Real, _: &Real| x.square(), &seg, q, &QuadratureOptions::default()).unwrap();
    let third = Real::one(q) / &Real::from_u64(3, q);
    assert!((&est.value - &third).abs() < tol("1e-36", q));
}

#[test]
fn log_endpoint_singularity() {
    // ∫₀¹ −ln x dx = 1
    let q = p(40);
    let seg = Segment::singular(Real::zero(q), Real::one(q)).unwrap();
    let est = integrate_de(|_: &Real, lo: &Real, _: &Real| -lo.ln(), &seg, q, &QuadratureOptions::default()).unwrap();
    assert!((&est.value - &Real::one(q)).abs() < tol("1e-34", q), "{}", est.value.to_decimal(40));
}

#[test]
fn beta_half_three_halves() {
    // B(1/2, 3/2) = π/2 with both endpoint distances supplied exactly
    let q = p(50);
    let seg = Segment::singular(Real::zero(q), Real::one(q)).unwrap();
    let est = integrate_de(|_: &Real, lo: &Real, hi: &Real| hi.sqrt() * lo.rsqrt(), &seg, q, &QuadratureOptions::default())
        .unwrap();
    let half_pi = Real::pi(q).ldexp(-1);
    assert!((&est.value - &half_pi).abs() < tol("1e-44", q));
}

#[test]
fn log_measure_gives_logarithm() {
    // ∫₁^e dv/v = 1
    let q = p(30);
    let e = Real::one(q).exp();
    let est = integrate_log(|_: &Real, _: &Real, _: &Real| Real::one(q), &Real::one(q), &e, q, &QuadratureOptions::default())
        .unwrap();
    assert!((&est.value - &Real::one(q)).abs() < tol("1e-26", q));
}

#[test]
fn fixed_level_reports_that_level() {
    let q = p(30);
    let seg = Segment::new(Real::zero(q), Real::one(q)).unwrap();
    let opts = QuadratureOptions {
        fixed_level: Some(3),
        ..QuadratureOptions::default()
    };
    let est = integrate_de(|x: &Real, _: &Real, _: &Real| x.exp(), &seg, q, &opts).unwrap();
    assert_eq!(est.level, 3);
}
