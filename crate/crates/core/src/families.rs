//! Family templates: parameter vectors to divisors and period systems.
//!
//! Orthogonal families are all instances of one pattern: `n` points
//! `a_1 < … < a_n` in (0,1) alternating NUM/DEN from NUM, `m` points
//! `b_1 > … > b_m` in (−1,0) alternating DEN/NUM from DEN, each paired
//! with its inverse in the same role, and `±1` taking the next role in its
//! chain. Parallel families pair `a_k` in blocks of two (NUM, NUM, DEN,
//! DEN, …) together with `b` and `1/b`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{
    BranchDivisor, CurveError, DivisorPoint, EndClass, Pairing, Role, WeierstrassData,
};
use crate::numerics::{Complex, Precision, Real};
use crate::quadrature::{
    period_integral_with, FormKind, QuadratureError, QuadratureOptions, Segment,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("{family} expects {expected} parameters, got {got}")]
    ParameterCount {
        family: String,
        expected: usize,
        got: usize,
    },
    #[error("parameters violate the ordering chain {chain}: {detail}")]
    Ordering { chain: String, detail: String },
    #[error("{0} has no dependent-b rule")]
    NotApplicable(String),
    #[error("unknown parameter `{name}` for {family}")]
    UnknownParameter { family: String, name: String },
    #[error("period system is not square: {equations} equations, {free} free variables")]
    NotSquare { equations: usize, free: usize },
    #[error("equation {index} ({label}): {source}")]
    Quadrature {
        index: usize,
        label: String,
        source: QuadratureError,
    },
    #[error("equation {index} ({label}): {form} has no real part on this segment")]
    FormMismatch {
        index: usize,
        label: String,
        form: &'static str,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Family kinds with their index parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilySpec {
    Scherk0,
    KmrA,
    KmrB,
    WwEven(usize),
    WwOdd(usize),
    Type12n(usize),
    Type22n(usize),
    Type22n1(usize),
    Type34,
    /// `m` handles along the negative axis, `n` along the positive axis.
    TypeMN { m: usize, n: usize },
    Rtw,
    Par4n(usize),
    Par4n1(usize),
    Par4n2(usize),
    Par4n3(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Template {
    Scherk,
    Kmr { same_role: bool },
    Orthogonal { neg: usize, pos: usize },
    Parallel { count: usize, free_b: bool },
}

impl FamilySpec {
    fn template(self) -> Template {
        use FamilySpec::*;
        match self {
            Scherk0 => Template::Scherk,
            KmrA => Template::Kmr { same_role: false },
            KmrB => Template::Kmr { same_role: true },
            WwEven(n) => Template::Orthogonal { neg: 0, pos: 2 * n },
            WwOdd(n) => Template::Orthogonal { neg: 0, pos: 2 * n + 1 },
            Type12n(n) => Template::Orthogonal { neg: 1, pos: 2 * n },
            Type22n(n) => Template::Orthogonal { neg: 2, pos: 2 * n },
            Type22n1(n) => Template::Orthogonal { neg: 2, pos: 2 * n + 1 },
            Type34 => Template::Orthogonal { neg: 3, pos: 4 },
            TypeMN { m, n } => Template::Orthogonal { neg: m, pos: n },
            Rtw => Template::Parallel { count: 2, free_b: false },
            Par4n(n) => Template::Parallel { count: 4 * n, free_b: false },
            Par4n1(n) => Template::Parallel { count: 4 * n + 1, free_b: true },
            Par4n2(n) => Template::Parallel { count: 4 * n + 2, free_b: false },
            Par4n3(n) => Template::Parallel { count: 4 * n + 3, free_b: true },
        }
    }

    /// Canonical identifier, e.g. `TYPE_2_2N(2)`.
    pub fn id(self) -> String {
        use FamilySpec::*;
        match self {
            Scherk0 => "SCHERK0".into(),
            KmrA => "KMR_A".into(),
            KmrB => "KMR_B".into(),
            WwEven(n) => format!("WW_EVEN({n})"),
            WwOdd(n) => format!("WW_ODD({n})"),
            Type12n(n) => format!("TYPE_1_2N({n})"),
            Type22n(n) => format!("TYPE_2_2N({n})"),
            Type22n1(n) => format!("TYPE_2_2N1({n})"),
            Type34 => "TYPE_3_4".into(),
            TypeMN { m, n } => format!("TYPE_M_N({m},{n})"),
            Rtw => "RTW2".into(),
            Par4n(n) => format!("PAR_4N({n})"),
            Par4n1(n) => format!("PAR_4N1({n})"),
            Par4n2(n) => format!("PAR_4N2({n})"),
            Par4n3(n) => format!("PAR_4N3({n})"),
        }
    }

    /// Build from a command-line family name plus the `--n` / `--m` indices.
    pub fn from_cli(name: &str, n: Option<usize>, m: Option<usize>) -> Result<FamilySpec, FamilyError> {
        use FamilySpec::*;
        let need_n = || n.ok_or_else(|| FamilyError::UnknownFamily(format!("{name} requires --n")));
        Ok(match name {
            "scherk0" => Scherk0,
            "kmr-a" => KmrA,
            "kmr-b" => KmrB,
            "ww-even" => WwEven(need_n()?),
            "ww-odd" => WwOdd(need_n()?),
            "type1-2n" => Type12n(need_n()?),
            "type2-2n" => Type22n(need_n()?),
            "type2-2n1" => Type22n1(need_n()?),
            "type34" => Type34,
            "type-mn" => TypeMN {
                m: m.ok_or_else(|| FamilyError::UnknownFamily("type-mn requires --m".into()))?,
                n: need_n()?,
            },
            "rtw" => Rtw,
            "par4n" => Par4n(need_n()?),
            "par4n1" => Par4n1(need_n()?),
            "par4n2" => Par4n2(need_n()?),
            "par4n3" => Par4n3(need_n()?),
            other => return Err(FamilyError::UnknownFamily(other.into())),
        })
    }

    pub fn end_class(self) -> EndClass {
        match self.template() {
            Template::Scherk | Template::Orthogonal { .. } => EndClass::Orthogonal,
            Template::Kmr { .. } | Template::Parallel { .. } => EndClass::Parallel,
        }
    }

    pub fn is_parallel(self) -> bool {
        self.end_class() == EndClass::Parallel
    }

    pub fn genus(self) -> usize {
        match self.template() {
            Template::Scherk => 0,
            Template::Kmr { .. } => 1,
            Template::Orthogonal { neg, pos } => neg + pos,
            Template::Parallel { count, .. } => count,
        }
    }

    /// Solver variables in canonical order (dependent `b` excluded).
    pub fn parameter_names(self) -> Vec<String> {
        let a = |k: usize| (1..=k).map(|i| format!("a{i}"));
        match self.template() {
            Template::Scherk => Vec::new(),
            Template::Kmr { .. } => vec!["a".into()],
            Template::Orthogonal { neg, pos } => {
                let mut v: Vec<String> = a(pos).collect();
                if neg == 1 {
                    v.push("b".into());
                } else {
                    v.extend((1..=neg).map(|j| format!("b{j}")));
                }
                v
            }
            Template::Parallel { count, free_b } => {
                let mut v: Vec<String> = a(count).collect();
                if free_b {
                    v.push("b".into());
                }
                v
            }
        }
    }

    pub fn parameter_index(self, name: &str) -> Result<usize, FamilyError> {
        self.parameter_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| FamilyError::UnknownParameter {
                family: self.id(),
                name: name.into(),
            })
    }

    /// Human-readable ordering chain.
    pub fn ordering_chain(self) -> String {
        match self.template() {
            Template::Scherk => "(no parameters)".into(),
            Template::Kmr { .. } => "0 < a < 1".into(),
            Template::Orthogonal { neg, pos } => {
                let mut parts = vec!["-1".to_string()];
                if neg == 1 {
                    parts.push("b".into());
                } else {
                    parts.extend((1..=neg).rev().map(|j| format!("b{j}")));
                }
                parts.push("0".into());
                parts.extend((1..=pos).map(|i| format!("a{i}")));
                parts.push("1".into());
                parts.join(" < ")
            }
            Template::Parallel { count, .. } => {
                let mut parts = vec!["-1".to_string(), "b".into(), "0".into()];
                parts.extend((1..=count).map(|i| format!("a{i}")));
                parts.push("1".into());
                parts.join(" < ")
            }
        }
    }

    /// The variable pinned by default to make the solve square.
    pub fn default_pin(self) -> Option<&'static str> {
        match self.template() {
            Template::Scherk | Template::Orthogonal { .. } => None,
            Template::Kmr { .. } => Some("a"),
            Template::Parallel { .. } if matches!(self, FamilySpec::Par4n1(_)) => Some("b"),
            Template::Parallel { .. } => Some("a1"),
        }
    }

    /// Seed respecting the ordering chain.
    ///
    /// Kinds with a published table start from that table rounded to three
    /// significant digits (the pinned value kept exact); the rest use a
    /// geometric progression.
    pub fn default_seed(self, prec: Precision) -> Vec<Real> {
        if let Some(seed) = crate::tables::seed_for(self) {
            return seed
                .iter()
                .map(|s| Real::parse(s, prec).expect("bundled seed literal"))
                .collect();
        }
        let g = |x: f64| Real::parse(&format!("{x:.3e}"), prec).expect("seed literal");
        match self.template() {
            Template::Scherk => Vec::new(),
            Template::Kmr { .. } => vec![g(0.5)],
            Template::Orthogonal { neg, pos } => {
                let mut v: Vec<Real> = paired_magnitudes(pos).into_iter().map(g).collect();
                // b_1 nearest zero
                v.extend(paired_magnitudes(neg).into_iter().map(|x| g(-x)));
                v
            }
            Template::Parallel { count, free_b } => {
                let ratio: f64 = if count <= 2 { 5.0 } else { 6.0 };
                let top = 0.45f64;
                let mut v: Vec<Real> = (1..=count)
                    .map(|i| g(top / ratio.powi((count - i) as i32)))
                    .collect();
                if free_b {
                    v.push(g(-0.5 * top / ratio.powi(count as i32)));
                }
                v
            }
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for FamilySpec {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use FamilySpec::*;
        let bad = || FamilyError::UnknownFamily(s.into());
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(bad()),
            None => (s, None),
        };
        let nums: Vec<usize> = match args {
            Some(a) => a
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let one = || match nums.as_slice() {
            [n] => Ok(*n),
            _ => Err(bad()),
        };
        let spec = match head {
            "SCHERK0" if nums.is_empty() => Scherk0,
            "KMR_A" if nums.is_empty() => KmrA,
            "KMR_B" if nums.is_empty() => KmrB,
            "TYPE_3_4" if nums.is_empty() => Type34,
            "RTW2" if nums.is_empty() => Rtw,
            "WW_EVEN" => WwEven(one()?),
            "WW_ODD" => WwOdd(one()?),
            "TYPE_1_2N" => Type12n(one()?),
            "TYPE_2_2N" => Type22n(one()?),
            "TYPE_2_2N1" => Type22n1(one()?),
            "PAR_4N" => Par4n(one()?),
            "PAR_4N1" => Par4n1(one()?),
            "PAR_4N2" => Par4n2(one()?),
            "PAR_4N3" => Par4n3(one()?),
            "TYPE_M_N" => match nums.as_slice() {
                [m, n] => TypeMN { m: *m, n: *n },
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl Serialize for FamilySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.id())
    }
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `count` increasing magnitudes below 1/2 grouped in close pairs from the
/// bottom (ratio 1.5 within a pair, 3 between pairs), the shape the
/// Weber-Wolf solutions take.
fn paired_magnitudes(count: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(count);
    let mut x = 0.5;
    for i in 0..count {
        v.push(x);
        let within = (count - i) % 2 == 0;
        x /= if within { 1.5 } else { 3.0 };
    }
    v.reverse();
    v
}

/// Role of the k-th (1-based) positive point in a parallel template.
fn parallel_role(k: usize) -> Role {
    if ((k - 1) / 2) % 2 == 0 {
        Role::Num
    } else {
        Role::Den
    }
}

fn alternating(k: usize, first: Role) -> Role {
    if k % 2 == 1 {
        first
    } else {
        first.flipped()
    }
}

/// Dependent `b` for the families whose end constraint fixes it.
///
/// `a` holds only the positive points `a_1 … a_Q`.
pub fn close_end_constraint(spec: FamilySpec, a: &[Real]) -> Result<Option<Real>, FamilyError> {
    match spec.template() {
        Template::Parallel { count, free_b } => {
            if a.len() != count {
                return Err(FamilyError::ParameterCount {
                    family: spec.id(),
                    expected: count,
                    got: a.len(),
                });
            }
            if free_b {
                return Ok(None);
            }
            let prec = a.iter().map(Real::precision).min().unwrap_or(Precision::DEFAULT);
            let mut num = Real::one(prec);
            let mut den = Real::one(prec);
            for (i, x) in a.iter().enumerate() {
                match parallel_role(i + 1) {
                    Role::Num => num *= x,
                    Role::Den => den *= x,
                }
            }
            Ok(Some(-(num / den)))
        }
        _ => Err(FamilyError::NotApplicable(spec.id())),
    }
}

/// One period equation: `Re ∫_segment form + target = 0`.
#[derive(Debug, Clone)]
pub struct PeriodEquation {
    pub label: String,
    pub form: FormKind,
    pub segment: Segment,
    pub target: Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// (0, 1)
    Positive,
    /// (−1, 0)
    Negative,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone)]
pub struct PeriodSystem {
    pub equations: Vec<PeriodEquation>,
    pub variables: Vec<Variable>,
    pub pinned: Option<(String, Real)>,
}

impl PeriodSystem {
    pub fn free_count(&self) -> usize {
        self.variables.len() - usize::from(self.pinned.is_some())
    }

    pub fn check_square(&self) -> Result<(), FamilyError> {
        if self.equations.len() != self.free_count() {
            return Err(FamilyError::NotSquare {
                equations: self.equations.len(),
                free: self.free_count(),
            });
        }
        Ok(())
    }
}

/// A template evaluated at a parameter vector.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub spec: FamilySpec,
    pub names: Vec<String>,
    pub values: Vec<Real>,
    pub dependent_b: Option<Real>,
    pub data: WeierstrassData,
    pub system: PeriodSystem,
}

impl FamilyInstance {
    pub fn precision(&self) -> Precision {
        self.data.precision()
    }

    pub fn value(&self, name: &str) -> Option<&Real> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }
}

/// Build the divisor and period system for `values` (canonical order).
///
/// `pin` names the variable held fixed during a solve, if any.
pub fn instantiate(
    spec: FamilySpec,
    values: &[Real],
    pin: Option<&str>,
) -> Result<FamilyInstance, FamilyError> {
    let names = spec.parameter_names();
    if values.len() != names.len() {
        return Err(FamilyError::ParameterCount {
            family: spec.id(),
            expected: names.len(),
            got: values.len(),
        });
    }
    let prec = values.iter().map(Real::precision).min().unwrap_or(Precision::DEFAULT);
    let ordering = |detail: String| FamilyError::Ordering {
        chain: spec.ordering_chain(),
        detail,
    };
    let point = |label: &str, x: &Real, role: Role| DivisorPoint {
        label: label.to_string(),
        location: x.clone(),
        role,
    };
    let wrap = |e: CurveError| match e {
        CurveError::Invalid(d) => ordering(d),
        other => FamilyError::Curve(other),
    };
    let mut dependent_b = None;
    let divisor = match spec.template() {
        Template::Scherk => BranchDivisor::new(
            Vec::new(),
            Vec::new(),
            Some(Role::Num),
            Some(Role::Den),
            Pairing::Unpaired,
        ),
        Template::Kmr { same_role } => {
            let a = &values[0];
            BranchDivisor::new(
                vec![point("a", a, Role::Num)],
                vec![point("-a", &-a, Role::Den)],
                None,
                None,
                if same_role {
                    Pairing::SameRole
                } else {
                    Pairing::OppositeRole
                },
            )
        }
        Template::Orthogonal { neg, pos } => {
            let positive = (0..pos)
                .map(|i| point(&names[i], &values[i], alternating(i + 1, Role::Num)))
                .collect();
            // stored increasing: b_m, …, b_1
            let negative = (0..neg)
                .rev()
                .map(|j| point(&names[pos + j], &values[pos + j], alternating(j + 1, Role::Den)))
                .collect();
            BranchDivisor::new(
                positive,
                negative,
                Some(alternating(pos + 1, Role::Num)),
                Some(alternating(neg + 1, Role::Den)),
                Pairing::SameRole,
            )
        }
        Template::Parallel { count, free_b } => {
            let a = &values[..count];
            let b = if free_b {
                values[count].clone()
            } else {
                let b = close_end_constraint(spec, a)?.expect("dependent b");
                dependent_b = Some(b.clone());
                b
            };
            let positive = (0..count)
                .map(|i| point(&names[i], &values[i], parallel_role(i + 1)))
                .collect();
            BranchDivisor::new(
                positive,
                vec![point("b", &b, Role::Den)],
                None,
                None,
                if free_b {
                    Pairing::SameRole
                } else {
                    Pairing::OppositeRole
                },
            )
        }
    }
    .map_err(wrap)?;
    let data = WeierstrassData::new(divisor);
    let system = build_system(spec, &names, values, &data, pin, prec)?;
    Ok(FamilyInstance {
        spec,
        names,
        values: values.to_vec(),
        dependent_b,
        data,
        system,
    })
}

fn build_system(
    spec: FamilySpec,
    names: &[String],
    values: &[Real],
    data: &WeierstrassData,
    pin: Option<&str>,
    prec: Precision,
) -> Result<PeriodSystem, FamilyError> {
    let one = Real::one(prec);
    let mut chains: Vec<Vec<(String, Real)>> = Vec::new();
    match spec.template() {
        Template::Scherk | Template::Kmr { .. } => {}
        Template::Orthogonal { neg, pos } => {
            let mut up: Vec<(String, Real)> = (0..pos)
                .map(|i| (names[i].clone(), values[i].clone()))
                .collect();
            up.push(("1".into(), one.clone()));
            chains.push(up);
            if neg > 0 {
                let mut down = vec![("-1".to_string(), -&one)];
                down.extend((0..neg).rev().map(|j| (names[pos + j].clone(), values[pos + j].clone())));
                chains.push(down);
            }
        }
        Template::Parallel { count, free_b } => {
            chains.push(
                (0..count)
                    .map(|i| (names[i].clone(), values[i].clone()))
                    .collect(),
            );
            if free_b {
                let b = values[count].clone();
                chains.push(vec![("1/b".into(), b.recip()), ("b".into(), b)]);
            }
        }
    }
    let parallel = spec.is_parallel();
    let pi = Real::pi(prec);
    let role_at = |x: &Real| {
        data.divisor
            .branch_points()
            .iter()
            .find(|p| p.location == *x)
            .map(|p| p.role)
    };
    let mut equations = Vec::new();
    for chain in &chains {
        for w in chain.windows(2) {
            let (lo_name, lo) = &w[0];
            let (hi_name, hi) = &w[1];
            let mid = if lo.is_positive() {
                (lo * hi).sqrt()
            } else if hi.is_negative() {
                -(lo * hi).sqrt()
            } else {
                // (1/b, b) spans −1; any interior point off the branch set works
                Real::from_i64(-1, prec)
            };
            let q = data.divisor.axis_quarter_turns(&mid);
            let form = if q % 2 == 0 {
                FormKind::Phi1
            } else {
                FormKind::Phi2
            };
            let target = if parallel && form == FormKind::Phi2 {
                let im_sign: i64 = if q == 1 { -1 } else { 1 };
                // The b-segment crosses −1 and its value is dominated by the
                // interior, where |w| < 1, so it behaves like a root-root segment.
                let spans_minus_one = lo.is_negative() && hi.is_negative() && *lo < -&one && *hi > -&one;
                let ends: i64 = match (role_at(lo), role_at(hi)) {
                    _ if spans_minus_one => 1,
                    (Some(Role::Num), Some(Role::Num)) => 1,
                    (Some(Role::Den), Some(Role::Den)) => -1,
                    _ => 0,
                };
                -(pi.mul_i64(im_sign * ends))
            } else {
                Real::zero(prec)
            };
            equations.push(PeriodEquation {
                label: format!("∫[{lo_name},{hi_name}] {}", form.name()),
                form,
                segment: Segment::singular(lo.clone(), hi.clone())
                    .map_err(|e| FamilyError::Ordering {
                        chain: spec.ordering_chain(),
                        detail: e.to_string(),
                    })?,
                target,
            });
        }
    }
    let variables = names
        .iter()
        .zip(values)
        .map(|(n, v)| Variable {
            name: n.clone(),
            domain: if v.is_negative() {
                Domain::Negative
            } else {
                Domain::Positive
            },
        })
        .collect();
    let pinned = match pin {
        Some(name) => {
            let idx = spec.parameter_index(name)?;
            Some((name.to_string(), values[idx].clone()))
        }
        None => None,
    };
    Ok(PeriodSystem {
        equations,
        variables,
        pinned,
    })
}

/// Residuals with the quadrature level used for each equation.
pub struct Residuals {
    pub values: Vec<Real>,
    pub levels: Vec<u32>,
}

/// Entry j is `Re ∫ form_j + target_j` in equation order.
pub fn residual_vector(inst: &FamilyInstance, prec: Precision) -> Result<Vec<Real>, FamilyError> {
    Ok(residuals_at_levels(inst, prec, None)?.values)
}

/// As [`residual_vector`], optionally forcing each equation's quadrature level.
pub fn residuals_at_levels(
    inst: &FamilyInstance,
    prec: Precision,
    levels: Option<&[u32]>,
) -> Result<Residuals, FamilyError> {
    // Endpoints such as 1/b must be recomputed, not just widened: a
    // rounded 1/b sits strictly inside the segment at higher precision.
    let rebuilt;
    let inst = if inst.precision() == prec {
        inst
    } else {
        let values: Vec<Real> = inst.values.iter().map(|v| v.with_precision(prec)).collect();
        let pin = inst.system.pinned.as_ref().map(|(n, _)| n.as_str());
        rebuilt = instantiate(inst.spec, &values, pin)?;
        &rebuilt
    };
    let data = &inst.data;
    let eqs = &inst.system.equations;
    let results: Vec<Result<(Real, u32), FamilyError>> =
        crate::par::map_indexed(eqs.len(), |j| {
            let eq = &eqs[j];
            let opts = QuadratureOptions {
                fixed_level: levels.map(|l| l[j]),
                ..QuadratureOptions::default()
            };
            let seg = Segment {
                lo: eq.segment.lo.with_precision(prec),
                hi: eq.segment.hi.with_precision(prec),
                ..eq.segment.clone()
            };
            let est = period_integral_with(data, eq.form, &seg, prec, &opts).map_err(|source| {
                FamilyError::Quadrature {
                    index: j,
                    label: eq.label.clone(),
                    source,
                }
            })?;
            let value: Complex = est.value;
            if value.re.is_zero() && !value.im.is_zero() {
                return Err(FamilyError::FormMismatch {
                    index: j,
                    label: eq.label.clone(),
                    form: eq.form.name(),
                });
            }
            Ok((value.re + eq.target.with_precision(prec), est.level))
        });
    let mut out = Residuals {
        values: Vec::with_capacity(eqs.len()),
        levels: Vec::with_capacity(eqs.len()),
    };
    for r in results {
        let (v, l) = r?;
        out.values.push(v);
        out.levels.push(l);
    }
    Ok(out)
}

pub fn max_norm(v: &[Real], prec: Precision) -> Real {
    v.iter().fold(Real::zero(prec), |m, x| m.max(x.abs()))
}
