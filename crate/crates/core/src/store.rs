//! Solution records as canonical JSON.
//!
//! Field order is fixed and parameter maps keep the family's canonical
//! parameter order, so equal records serialize to equal bytes. Decimal
//! strings are kept verbatim.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::families::{instantiate, max_norm, residual_vector, FamilyError, FamilySpec};
use crate::numerics::decimal::is_decimal;
use crate::numerics::{Precision, Real};
use crate::solver::Solution;
use crate::tables::published_tables;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed record: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("field `{field}`: {detail}")]
    Field { field: String, detail: String },
    #[error("no bundled table named `{0}`")]
    UnknownTable(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

fn field_error(field: impl Into<String>, detail: impl Into<String>) -> StoreError {
    StoreError::Field {
        field: field.into(),
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Solved,
    PaperTable,
}

/// Name → decimal string, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecimalMap(pub Vec<(String, String)>);

impl DecimalMap {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for DecimalMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for DecimalMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = DecimalMap;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of names to decimal strings")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> Result<DecimalMap, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(DecimalMap(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RecordPoint {
    pub parameters: DecimalMap,
    /// Quantities printed alongside the parameters but fixed by them.
    #[serde(default, skip_serializing_if = "DecimalMap::is_empty")]
    pub dependent: DecimalMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolutionRecord {
    pub schema_version: u32,
    pub family: FamilySpec,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<String>,
    /// Digits the values were computed (or published) at.
    pub precision_used: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<String>,
    pub points: Vec<RecordPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Set when the values are known not to certify as printed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl SolutionRecord {
    pub fn from_solution(sol: &Solution, timestamp: Option<String>) -> SolutionRecord {
        SolutionRecord {
            schema_version: SCHEMA_VERSION,
            family: sol.spec,
            provenance: Provenance::Solved,
            name: None,
            pinned: sol.pinned.as_ref().map(|(n, _)| n.clone()),
            precision_used: sol.precision_used,
            residual_norm: Some(sol.residual_norm.to_decimal(6)),
            points: vec![RecordPoint {
                parameters: DecimalMap(sol.params()),
                dependent: DecimalMap::default(),
            }],
            note: None,
            anomaly: None,
            timestamp,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<SolutionRecord, StoreError> {
        let r: SolutionRecord = serde_json::from_str(text).map_err(|source| StoreError::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        r.validate()?;
        Ok(r)
    }

    /// Structural checks beyond the JSON shape.
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schemaVersion",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.points.is_empty() {
            return Err(field_error("points", "no parameter points"));
        }
        let names = self.family.parameter_names();
        for (i, p) in self.points.iter().enumerate() {
            let got: Vec<&str> = p.parameters.0.iter().map(|(k, _)| k.as_str()).collect();
            if got != names {
                return Err(field_error(
                    format!("points[{i}].parameters"),
                    format!("expected {} for {}, found {}", names.join(", "), self.family, got.join(", ")),
                ));
            }
            for (k, v) in p.parameters.0.iter().chain(&p.dependent.0) {
                if !is_decimal(v) {
                    return Err(field_error(format!("points[{i}].{k}"), format!("`{v}` is not a complete decimal number")));
                }
            }
        }
        if let Some(pin) = &self.pinned {
            if !names.iter().any(|n| n == pin) {
                return Err(field_error("pinned", format!("{pin} is not a parameter of {}", self.family)));
            }
        }
        if let Some(r) = &self.residual_norm {
            if !is_decimal(r) {
                return Err(field_error("residualNorm", format!("`{r}` is not a complete decimal number")));
            }
        }
        Ok(())
    }

    /// Parameter values of point `i` at precision `prec`.
    pub fn values(&self, i: usize, prec: Precision) -> Result<Vec<Real>, StoreError> {
        let p = self.points.get(i).ok_or_else(|| field_error("points", format!("no point {i}")))?;
        p.parameters
            .0
            .iter()
            .map(|(k, v)| Real::parse(v, prec).map_err(|e| field_error(format!("points[{i}].{k}"), e.to_string())))
            .collect()
    }
}

/// Write `record` to `path` atomically (temporary file, then rename).
pub fn save(record: &SolutionRecord, path: &Path) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(record.to_json().as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SolutionRecord, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SolutionRecord::from_json(&text, path)
}

/// Every published table as a `PAPER_TABLE` record.
pub fn bundled_paper_tables() -> Vec<SolutionRecord> {
    published_tables()
        .into_iter()
        .map(|t| {
            let to_map = |v: &[(&str, &str)]| DecimalMap(v.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect());
            let (note, anomaly) = if t.certifying { (t.note, None) } else { (None, t.note) };
            SolutionRecord {
                schema_version: SCHEMA_VERSION,
                family: t.spec,
                provenance: Provenance::PaperTable,
                name: Some(t.name.to_string()),
                pinned: t.pinned.map(str::to_string),
                precision_used: t.working_precision,
                residual_norm: None,
                points: t
                    .points
                    .iter()
                    .map(|p| RecordPoint {
                        parameters: to_map(&p.params),
                        dependent: to_map(&p.dependent),
                    })
                    .collect(),
                note: note.map(str::to_string),
                anomaly: anomaly.map(str::to_string),
                timestamp: None,
            }
        })
        .collect()
}

pub fn bundled(name: &str) -> Result<SolutionRecord, StoreError> {
    bundled_paper_tables()
        .into_iter()
        .find(|r| r.name.as_deref() == Some(name))
        .ok_or_else(|| StoreError::UnknownTable(name.to_string()))
}

/// Residual check of a record against its working-precision tolerance.
#[derive(Debug, Clone)]
pub struct Certification {
    /// Max-norm residual per point.
    pub residuals: Vec<Real>,
    pub max_residual: Real,
    pub tolerance: Real,
    pub pass: bool,
}

/// `10^(−⌊WP/3⌋)`.
pub fn certification_tolerance(working_precision: u32, prec: Precision) -> Real {
    Real::parse(&format!("1e-{}", working_precision / 3), prec).expect("decimal literal")
}

/// Evaluate every point's residual vector at `prec` and compare with the
/// record's tolerance.
pub fn certify(record: &SolutionRecord, prec: Precision) -> Result<Certification, StoreError> {
    let mut residuals = Vec::new();
    for i in 0..record.points.len() {
        let values = record.values(i, prec)?;
        let inst = instantiate(record.family, &values, record.pinned.as_deref())?;
        residuals.push(max_norm(&residual_vector(&inst, prec)?, prec));
    }
    let max_residual = residuals.iter().fold(Real::zero(prec), |m, r| m.max(r.clone()));
    let tolerance = certification_tolerance(record.precision_used, prec);
    let pass = max_residual <= tolerance;
    Ok(Certification {
        residuals,
        max_residual,
        tolerance,
        pass,
    })
}
