//! Double-exponential (tanh–sinh) quadrature for the period integrals.
//!
//! Period integrals are taken in the coordinate `u = ln|x|`, where
//! `dz/z = du`. Distances to the two endpoints are computed directly from
//! the abscissa (never as `x − endpoint`), so adjacent branch points closer
//! than double-precision epsilon stay resolved.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, Role, WeierstrassData};
use crate::numerics::{Complex, Precision, Real};

pub const DEFAULT_MAX_LEVEL: u32 = 12;
const MIN_LEVEL: u32 = 3;
const INTERNAL_GUARD: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadratureError {
    #[error("no convergence after level {level}: last estimates {previous} and {last}")]
    NoConvergence {
        level: u32,
        previous: String,
        last: String,
    },
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// The integrated 1-forms, all with `dh = dz/z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormKind {
    /// `½(1/G − G) dh`
    Phi1,
    /// `(i/2)(1/G + G) dh`
    Phi2,
    /// `dh`
    Phi3,
    /// `G dh`
    Gdh,
    /// `(1/G) dh`
    InvGdh,
}

impl FormKind {
    pub fn name(self) -> &'static str {
        match self {
            FormKind::Phi1 => "phi1",
            FormKind::Phi2 => "phi2",
            FormKind::Phi3 => "phi3",
            FormKind::Gdh => "gdh",
            FormKind::InvGdh => "invgdh",
        }
    }
}

/// A real interval `(lo, hi)`; singular flags mark inverse-square-root endpoints.
#[derive(Debug, Clone)]
pub struct Segment {
    pub lo: Real,
    pub hi: Real,
    pub lo_singular: bool,
    pub hi_singular: bool,
}

impl Segment {
    pub fn new(lo: Real, hi: Real) -> Result<Segment, QuadratureError> {
        if lo >= hi {
            return Err(QuadratureError::InvalidSegment(format!(
                "lo = {} is not below hi = {}",
                lo.to_decimal(17),
                hi.to_decimal(17)
            )));
        }
        Ok(Segment {
            lo,
            hi,
            lo_singular: false,
            hi_singular: false,
        })
    }

    pub fn singular(lo: Real, hi: Real) -> Result<Segment, QuadratureError> {
        Ok(Segment {
            lo_singular: true,
            hi_singular: true,
            ..Segment::new(lo, hi)?
        })
    }
}

/// Values the quadrature engine can accumulate.
pub trait DeValue: Clone + Send {
    fn zero_like(prec: Precision) -> Self;
    fn add_weighted(&mut self, weight: &Real, value: &Self);
    fn scaled(&self, k: &Real) -> Self;
    /// Max-norm distance used by the stopping rule.
    fn distance(&self, other: &Self) -> Real;
    fn describe(&self) -> String;
}

impl DeValue for Real {
    fn zero_like(prec: Precision) -> Self {
        Real::zero(prec)
    }
    fn add_weighted(&mut self, weight: &Real, value: &Self) {
        *self += weight * value;
    }
    fn scaled(&self, k: &Real) -> Self {
        self * k
    }
    fn distance(&self, other: &Self) -> Real {
        (self - other).abs()
    }
    fn describe(&self) -> String {
        self.to_decimal(20)
    }
}

impl DeValue for Complex {
    fn zero_like(prec: Precision) -> Self {
        Complex::zero(prec)
    }
    fn add_weighted(&mut self, weight: &Real, value: &Self) {
        self.re += weight * &value.re;
        self.im += weight * &value.im;
    }
    fn scaled(&self, k: &Real) -> Self {
        self.scale(k)
    }
    fn distance(&self, other: &Self) -> Real {
        let d = self - other;
        d.re.abs().max(d.im.abs())
    }
    fn describe(&self) -> String {
        format!("{:.20}", self)
    }
}

/// Stopping rule and level control.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub max_level: u32,
    /// Evaluate exactly this level (no convergence test); used to keep
    /// finite-difference Jacobians on one node set.
    pub fixed_level: Option<u32>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            max_level: DEFAULT_MAX_LEVEL,
            fixed_level: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Estimate<T> {
    pub value: T,
    pub level: u32,
    pub error: Real,
}

/// One abscissa with `t ≥ 0`; the mirror node at `−t` swaps the two gaps.
struct Node {
    /// `1 − tanh(y)`
    gap_hi: Real,
    /// `1 + tanh(y)`
    gap_lo: Real,
    weight: Real,
}

struct NodeTable {
    wp: Precision,
    t_max: f64,
    levels: Mutex<Vec<Arc<Vec<Node>>>>,
}

impl NodeTable {
    fn new(wp: Precision) -> NodeTable {
        let y_max = (wp.digits() as f64 + 10.0) * std::f64::consts::LN_10;
        NodeTable {
            wp,
            t_max: (2.0 * y_max / std::f64::consts::PI).asinh(),
            levels: Mutex::new(Vec::new()),
        }
    }

    fn node(&self, t: &Real) -> Node {
        let half_pi = Real::pi(self.wp).ldexp(-1);
        let one = Real::one(self.wp);
        let y = &half_pi * &t.sinh();
        let e = (-y.ldexp(1)).exp();
        let denom = &one + &e;
        let gap_hi = e.ldexp(1) / &denom;
        let gap_lo = Real::from_u64(2, self.wp) / &denom;
        let weight = &half_pi * &t.cosh() * e.ldexp(2) / denom.square();
        Node {
            gap_hi,
            gap_lo,
            weight,
        }
    }

    /// New nodes introduced at `level` (all of level 0; odd multiples after).
    fn level(&self, level: u32) -> Arc<Vec<Node>> {
        let mut levels = self.levels.lock().expect("node table poisoned");
        while levels.len() as u32 <= level {
            let k = levels.len() as u32;
            let h = (-(k as f64)).exp2();
            let mut nodes = Vec::new();
            let (start, stride) = if k == 0 { (0u64, 1u64) } else { (1, 2) };
            let mut j = start;
            while j as f64 * h <= self.t_max {
                let t = Real::from_u64(j, self.wp).ldexp(-(k as i64));
                nodes.push(self.node(&t));
                j += stride;
            }
            levels.push(Arc::new(nodes));
        }
        levels[level as usize].clone()
    }
}

fn node_table(wp: Precision) -> Arc<NodeTable> {
    static TABLES: OnceLock<Mutex<HashMap<u32, Arc<NodeTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    tables
        .lock()
        .expect("node table cache poisoned")
        .entry(wp.digits())
        .or_insert_with(|| Arc::new(NodeTable::new(wp)))
        .clone()
}

/// Core engine on the canonical interval: `g(gap_lo, gap_hi)` receives
/// `1 + s` and `1 − s`, and the result is `Σ w·g` times the level step.
fn de_core<T: DeValue>(
    wp: Precision,
    tol: &Real,
    opts: &QuadratureOptions,
    mut g: impl FnMut(&Real, &Real) -> T,
) -> Result<Estimate<T>, QuadratureError> {
    let table = node_table(wp);
    let mut raw = T::zero_like(wp);
    let mut previous: Option<T> = None;
    let last_level = opts.fixed_level.unwrap_or(opts.max_level);
    for level in 0..=last_level {
        for (idx, node) in table.level(level).iter().enumerate() {
            if level == 0 && idx == 0 {
                raw.add_weighted(&node.weight, &g(&node.gap_lo, &node.gap_hi));
                continue;
            }
            raw.add_weighted(&node.weight, &g(&node.gap_lo, &node.gap_hi));
            raw.add_weighted(&node.weight, &g(&node.gap_hi, &node.gap_lo));
        }
        let estimate = raw.scaled(&Real::one(wp).ldexp(-(level as i64)));
        if let Some(prev) = &previous {
            let err = estimate.distance(prev);
            let done = match opts.fixed_level {
                Some(f) => level == f,
                None => level >= MIN_LEVEL && err <= *tol,
            };
            if done {
                return Ok(Estimate {
                    value: estimate,
                    level,
                    error: err,
                });
            }
        } else if opts.fixed_level == Some(0) {
            return Ok(Estimate {
                value: estimate,
                level,
                error: Real::zero(wp),
            });
        }
        previous = Some(estimate);
    }
    let prev = previous.expect("at least one level evaluated");
    Err(QuadratureError::NoConvergence {
        level: last_level,
        previous: prev.describe(),
        last: raw.scaled(&Real::one(wp).ldexp(-(last_level as i64))).describe(),
    })
}

fn tolerance(prec: Precision) -> Real {
    Real::parse(&format!("1e{}", 5 - prec.digits() as i64), prec).expect("valid literal")
}

/// `∫_lo^hi f` with the closure receiving `(x, x − lo, hi − x)`.
pub fn integrate_de<T: DeValue>(
    f: impl Fn(&Real, &Real, &Real) -> T,
    seg: &Segment,
    prec: Precision,
    opts: &QuadratureOptions,
) -> Result<Estimate<T>, QuadratureError> {
    let wp = prec.plus(INTERNAL_GUARD);
    let lo = seg.lo.with_precision(wp);
    let hi = seg.hi.with_precision(wp);
    let half = (&hi - &lo).ldexp(-1);
    let est = de_core(wp, &tolerance(prec), opts, |gl, gh| {
        let d_lo = &half * gl;
        let d_hi = &half * gh;
        let x = if gl <= gh { &lo + &d_lo } else { &hi - &d_hi };
        f(&x, &d_lo, &d_hi)
    })?;
    Ok(Estimate {
        value: est.value.scaled(&half),
        level: est.level,
        error: &est.error * &half,
    })
}

/// `∫ f(v) dv/v` over `0 < p < v < q`, the closure receiving `(v, v − p, q − v)`.
pub fn integrate_log<T: DeValue>(
    f: impl Fn(&Real, &Real, &Real) -> T,
    p: &Real,
    q: &Real,
    prec: Precision,
    opts: &QuadratureOptions,
) -> Result<Estimate<T>, QuadratureError> {
    if !p.is_positive() || p >= q {
        return Err(QuadratureError::InvalidSegment(
            "log coordinates need 0 < lo < hi".into(),
        ));
    }
    let wp = prec.plus(INTERNAL_GUARD);
    let p = p.with_precision(wp);
    let q = q.with_precision(wp);
    let width = &q - &p;
    let half_len = (&width / &p).ln1p().ldexp(-1);
    let est = de_core(wp, &tolerance(prec), opts, |gl, gh| {
        if gl <= gh {
            let d_p = &p * &(&half_len * gl).expm1();
            let d_q = &width - &d_p;
            f(&(&p + &d_p), &d_p, &d_q)
        } else {
            let d_q = -(&q * &(-(&half_len * gh)).expm1());
            let d_p = &width - &d_q;
            f(&(&q - &d_q), &d_p, &d_q)
        }
    })?;
    Ok(Estimate {
        value: est.value.scaled(&half_len),
        level: est.level,
        error: &est.error * &half_len,
    })
}

/// Which real integrand to integrate and the unit it multiplies.
fn form_profile(form: FormKind, quarter_turns: u8, prec: Precision) -> (Profile, Complex) {
    // w = c·|w| with c = (−i)^q; A = ½(1/|w| − |w|), B = ½(1/|w| + |w|).
    let one = Real::one(prec);
    let zero = Real::zero(prec);
    let unit = |re: i64, im: i64| Complex::new(Real::from_i64(re, prec), Real::from_i64(im, prec));
    let c = match quarter_turns % 4 {
        0 => unit(1, 0),
        1 => unit(0, -1),
        2 => unit(-1, 0),
        _ => unit(0, 1),
    };
    match form {
        FormKind::Phi3 => (Profile::One, Complex::new(one, zero)),
        FormKind::Gdh => (Profile::Modulus, c),
        FormKind::InvGdh => (Profile::InverseModulus, c.conj()),
        FormKind::Phi1 => match quarter_turns % 4 {
            0 => (Profile::A, unit(1, 0)),
            2 => (Profile::A, unit(-1, 0)),
            1 => (Profile::B, unit(0, 1)),
            _ => (Profile::B, unit(0, -1)),
        },
        FormKind::Phi2 => match quarter_turns % 4 {
            0 => (Profile::B, unit(0, 1)),
            2 => (Profile::B, unit(0, -1)),
            1 => (Profile::A, unit(-1, 0)),
            _ => (Profile::A, unit(1, 0)),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Profile {
    One,
    Modulus,
    InverseModulus,
    A,
    B,
}

enum Anchor {
    Near,
    Far,
    Free,
}

/// `∫_seg form` on the real axis, with the segment oriented from `lo` to `hi`.
pub fn period_integral(
    wd: &WeierstrassData,
    form: FormKind,
    seg: &Segment,
    prec: Precision,
) -> Result<Complex, QuadratureError> {
    Ok(period_integral_with(wd, form, seg, prec, &QuadratureOptions::default())?.value)
}

pub fn period_integral_with(
    wd: &WeierstrassData,
    form: FormKind,
    seg: &Segment,
    prec: Precision,
    opts: &QuadratureOptions,
) -> Result<Estimate<Complex>, QuadratureError> {
    let (lo, hi) = (&seg.lo, &seg.hi);
    if lo >= hi {
        return Err(QuadratureError::InvalidSegment("lo must be below hi".into()));
    }
    if !lo.is_positive() && !hi.is_negative() {
        return Err(QuadratureError::InvalidSegment(
            "segment contains z = 0, a pole of dh".into(),
        ));
    }
    let points = wd.divisor.branch_points();
    if let Some(p) = points.iter().find(|p| p.location > *lo && p.location < *hi) {
        return Err(QuadratureError::InvalidSegment(format!(
            "branch point {} lies inside the segment",
            p.label
        )));
    }
    let negative = hi.is_negative();
    // Work with v = |x| on (p, q); `near` is the endpoint p, `far` is q.
    let (p, q) = if negative {
        (-hi, -lo)
    } else {
        (lo.clone(), hi.clone())
    };
    let wp = prec.plus(INTERNAL_GUARD);
    let factors: Vec<(Real, Role, Anchor)> = points
        .iter()
        .map(|bp| {
            let v = if negative { -&bp.location } else { bp.location.clone() };
            let anchor = if v == p {
                Anchor::Near
            } else if v == q {
                Anchor::Far
            } else {
                Anchor::Free
            };
            (v.with_precision(wp), bp.role, anchor)
        })
        .collect();
    let mid = if negative {
        -(&p * &q).sqrt()
    } else {
        (&p * &q).sqrt()
    };
    let q_turns = wd.divisor.axis_quarter_turns(&mid);
    let (profile, unit) = form_profile(form, q_turns, prec);
    let integrand = |v: &Real, d_p: &Real, d_q: &Real| -> Real {
        if profile == Profile::One {
            return Real::one(v.precision());
        }
        let mut num = Real::one(v.precision());
        let mut den = Real::one(v.precision());
        for (loc, role, anchor) in &factors {
            let f = match anchor {
                Anchor::Near => d_p.clone(),
                Anchor::Far => d_q.clone(),
                Anchor::Free => (v - loc).abs(),
            };
            match role {
                Role::Num => num *= &f,
                Role::Den => den *= &f,
            }
        }
        // A node that rounds onto a branch point carries negligible weight.
        if !num.is_positive() || !den.is_positive() {
            return Real::zero(v.precision());
        }
        let r = (&num * &den).rsqrt();
        let modulus = &num * &r;
        let inverse = &den * &r;
        match profile {
            Profile::One => unreachable!(),
            Profile::Modulus => modulus,
            Profile::InverseModulus => inverse,
            Profile::A => (inverse - modulus).ldexp(-1),
            Profile::B => (inverse + modulus).ldexp(-1),
        }
    };
    let est = integrate_log(integrand, &p, &q, prec, opts)?;
    // dz/z = dv/v, but x runs from lo to hi while v runs from q to p.
    let oriented = if negative { -est.value } else { est.value };
    let value = unit.scale(&oriented).with_precision(prec);
    Ok(Estimate {
        value,
        level: est.level,
        error: est.error.with_precision(prec),
    })
}
