//! Helpers for the acceptance gate in `tests/acceptance.rs`.

use std::fmt::Write;

use periodforge::families::{instantiate, max_norm, residual_vector, FamilySpec};
use periodforge::numerics::{Precision, Real};
use periodforge::tables::PublishedTable;

/// Outcome of one criterion: pass flag plus free-form evidence lines.
#[derive(Debug, Default)]
pub struct Verdict {
    pub pass: bool,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new() -> Verdict {
        Verdict {
            pass: true,
            notes: Vec::new(),
        }
    }

    /// Record a sub-check; any failing sub-check fails the criterion.
    pub fn check(&mut self, ok: bool, note: impl Into<String>) {
        self.pass &= ok;
        let tag = if ok { "ok" } else { "MISS" };
        self.notes.push(format!("[{tag}] {}", note.into()));
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.check(false, note);
    }

    pub fn render(&self, index: usize, title: &str) -> String {
        let mut out = format!(
            "criterion {index:>2} {} {title}",
            if self.pass { "PASS" } else { "FAIL" }
        );
        for n in &self.notes {
            let _ = write!(out, "\n      {n}");
        }
        out
    }
}

pub fn prec(digits: u32) -> Precision {
    Precision::new(digits).expect("precision above minimum")
}

pub fn real(s: &str, p: Precision) -> Real {
    Real::parse(s, p).expect("decimal literal")
}

/// `|a − b| / |b|`, in f64 for reporting.
pub fn rel_diff(a: &Real, b: &Real) -> f64 {
    ((a - b) / b).abs().to_f64()
}

/// Parameter vector of table point `i` in canonical order.
pub fn table_point(t: &PublishedTable, i: usize, p: Precision) -> Vec<Real> {
    t.points[i].params.iter().map(|(_, v)| real(v, p)).collect()
}

/// Max-norm residual over every point of a table.
pub fn table_residual(t: &PublishedTable, p: Precision) -> Result<f64, periodforge::Error> {
    let mut worst = 0f64;
    for i in 0..t.points.len() {
        let inst = instantiate(t.spec, &table_point(t, i, p), t.pinned)?;
        worst = worst.max(max_norm(&residual_vector(&inst, p)?, p).to_f64());
    }
    Ok(worst)
}

/// Largest relative difference between `values` and the printed point,
/// with the name of the worst parameter.
pub fn worst_rel(spec: FamilySpec, values: &[Real], printed: &[Real]) -> (String, f64) {
    let names = spec.parameter_names();
    names
        .into_iter()
        .zip(values.iter().zip(printed))
        .map(|(n, (v, p))| (n, rel_diff(v, p)))
        .fold((String::new(), 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Strictly increasing in the template's chain order, checked through
/// instantiation (which rejects ordering violations).
pub fn ordered(spec: FamilySpec, values: &[Real]) -> bool {
    instantiate(spec, values, None).is_ok()
}
