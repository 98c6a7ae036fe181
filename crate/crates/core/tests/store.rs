use std::path::Path;

use periodforge::families::FamilySpec;
use periodforge::numerics::Precision;
use periodforge::solver::{solve_period_problem, SolveOptions};
use periodforge::store::{bundled, certify, load, save, SolutionRecord, StoreError};

#[test]
fn solved_record_survives_disk() {
    let spec = FamilySpec::WwOdd(0);
    let sol = solve_period_problem(spec, &spec.default_seed(Precision::new(30).unwrap()), None, &SolveOptions::default())
        .unwrap();
    let record = SolutionRecord::from_solution(&sol, Some("2026-01-01T00:00:00Z".into()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("karcher.json");
    save(&record, &path).unwrap();
    let back = load(&path).unwrap();
    assert_eq!(back, record);
    assert!(certify(&back, Precision::new(40).unwrap()).unwrap().pass);
}

#[test]
fn missing_file_reports_path() {
    let err = load(Path::new("/nonexistent/record.json")).unwrap_err();
    assert!(matches!(err, StoreError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/record.json"));
}

#[test]
fn unknown_fields_rejected() {
    let mut text = bundled("rtw").unwrap().to_json();
    text = text.replacen('{', "{\n  \"extra\": 1,", 1);
    assert!(SolutionRecord::from_json(&text, Path::new("mem")).is_err());
}

#[test]
fn published_tables_certify_at_their_precision() {
    for name in ["rtw", "type22n_n2", "par4n2_n3"] {
        let r = bundled(name).unwrap();
        let c = certify(&r, Precision::new(r.precision_used + 10).unwrap()).unwrap();
        assert!(c.pass, "{name}: {}", c.max_residual.to_decimal(4));
    }
}

#[test]
fn anomalous_table_does_not_certify() {
    let r = bundled("type22n1_n2").unwrap();
    assert!(r.anomaly.is_some());
    // as printed the parameters are not even in chain order
    match certify(&r, Precision::new(40).unwrap()) {
        Ok(c) => assert!(!c.pass),
        Err(e) => assert!(matches!(e, StoreError::Family(_)), "{e}"),
    }
}

#[test]
fn unknown_table() {
    assert!(matches!(bundled("nope"), Err(StoreError::UnknownTable(_))));
}
