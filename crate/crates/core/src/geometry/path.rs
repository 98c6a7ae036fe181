//! Integration of (φ1, φ2, φ3) along polylines in the z-plane.
//!
//! The branch of `w` is carried by one unwrapped argument per branch point.
//! Along a straight edge the argument of `z − x` moves by less than π, so at
//! every quadrature node it is `θ(start) + Arg((z − x)/(start − x))`, which
//! needs no ordering of the nodes.

use crate::curve::WeierstrassData;
use crate::numerics::{Complex, Precision, Real};
use crate::quadrature::{integrate_de, DeValue, QuadratureError, QuadratureOptions, Segment};

use super::GeometryError;

/// Relative clearance a path must keep from branch points and from `z = 0`.
pub const CLEARANCE: f64 = 1e-12;
const MAX_SPLITS: u32 = 5;

/// The three Weierstrass forms integrated together.
#[derive(Debug, Clone)]
pub struct FormTriple(pub [Complex; 3]);

impl FormTriple {
    pub fn zero(prec: Precision) -> FormTriple {
        FormTriple([Complex::zero(prec), Complex::zero(prec), Complex::zero(prec)])
    }

    /// Real parts, i.e. the displacement in ℝ³.
    pub fn real(&self) -> [Real; 3] {
        [self.0[0].re.clone(), self.0[1].re.clone(), self.0[2].re.clone()]
    }

    fn add(&mut self, other: &FormTriple) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = &*a + b;
        }
    }
}

impl DeValue for FormTriple {
    fn zero_like(prec: Precision) -> Self {
        FormTriple::zero(prec)
    }
    fn add_weighted(&mut self, weight: &Real, value: &Self) {
        for (a, b) in self.0.iter_mut().zip(&value.0) {
            a.re += weight * &b.re;
            a.im += weight * &b.im;
        }
    }
    fn scaled(&self, k: &Real) -> Self {
        FormTriple([self.0[0].scale(k), self.0[1].scale(k), self.0[2].scale(k)])
    }
    fn distance(&self, other: &Self) -> Real {
        let mut worst = Real::zero(self.0[0].precision());
        for (a, b) in self.0.iter().zip(&other.0) {
            let d = (a - b).abs();
            if d > worst {
                worst = d;
            }
        }
        worst
    }
    fn describe(&self) -> String {
        format!("({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone)]
struct Factor {
    label: String,
    location: Real,
    exponent: i32,
}

/// Where the tracker sits relative to a branch point.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    /// Sitting on branch point `k`; its argument is set by the next edge.
    On(usize),
    Free,
}

/// Walks a polyline on one sheet, accumulating `∫ (φ1, φ2, φ3)`.
#[derive(Debug, Clone)]
pub struct PathTracker {
    prec: Precision,
    factors: Vec<Factor>,
    z: Complex,
    theta: Vec<f64>,
    anchor: Anchor,
    total: FormTriple,
}

impl PathTracker {
    /// Start at the base point `z₀` (a branch point) on the sheet with
    /// `w > 0` to the right of every branch point.
    pub fn at_base_point(wd: &WeierstrassData, prec: Precision) -> PathTracker {
        let z0 = wd.base_point().with_precision(prec);
        let factors = factors(wd, prec);
        let k = factors
            .iter()
            .position(|f| f.location == z0)
            .expect("base point is a branch point");
        let theta = factors
            .iter()
            .map(|f| if f.location > z0 { std::f64::consts::PI } else { 0.0 })
            .collect();
        PathTracker {
            prec,
            factors,
            z: Complex::from_real(z0),
            theta,
            anchor: Anchor::On(k),
            total: FormTriple::zero(prec),
        }
    }

    /// Start at a real point `x` (not a branch point), taking the boundary
    /// value from the upper half-plane.
    pub fn at_axis_point(wd: &WeierstrassData, x: &Real, prec: Precision) -> Result<PathTracker, GeometryError> {
        let x = x.with_precision(prec);
        let factors = factors(wd, prec);
        if let Some(f) = factors.iter().find(|f| f.location == x) {
            return Err(GeometryError::Clearance {
                point: f.label.clone(),
                distance: 0.0,
            });
        }
        let theta = factors
            .iter()
            .map(|f| if f.location > x { std::f64::consts::PI } else { 0.0 })
            .collect();
        Ok(PathTracker {
            prec,
            factors,
            z: Complex::from_real(x),
            theta,
            anchor: Anchor::Free,
            total: FormTriple::zero(prec),
        })
    }

    pub fn position(&self) -> &Complex {
        &self.z
    }

    /// `∫ (φ1, φ2, φ3)` from the start to the current point.
    pub fn total(&self) -> &FormTriple {
        &self.total
    }

    /// `Re ∫ (φ1, φ2, φ3)`: the immersion relative to the start.
    pub fn xyz(&self) -> [Real; 3] {
        self.total.real()
    }

    /// `w` at the current point on the tracked sheet.
    pub fn w(&self) -> Result<Complex, GeometryError> {
        if let Anchor::On(k) = self.anchor {
            return Err(GeometryError::Clearance {
                point: self.factors[k].label.clone(),
                distance: 0.0,
            });
        }
        let z = self.z.clone();
        let diffs: Vec<Complex> = self.factors.iter().map(|f| &z - &Complex::from_real(f.location.clone())).collect();
        w_from(&self.factors, &diffs, &self.theta).ok_or_else(|| GeometryError::Degenerate("w vanishes or blows up at the current point".into()))
    }

    /// Integrate the straight edge to `to` and move there.
    pub fn advance(&mut self, to: &Complex) -> Result<FormTriple, GeometryError> {
        let to = to.with_precision(self.prec);
        self.check_clearance(&to)?;
        let value = self.edge(&self.z.clone(), &to, 0, true)?;
        let from = self.z.clone();
        self.advance_theta(&from, &to);
        self.z = to;
        self.anchor = Anchor::Free;
        self.total.add(&value);
        Ok(value)
    }

    /// Walk every point of `path` in order.
    pub fn follow(&mut self, path: &[Complex]) -> Result<(), GeometryError> {
        for p in path {
            self.advance(p)?;
        }
        Ok(())
    }

    fn check_clearance(&self, to: &Complex) -> Result<(), GeometryError> {
        let a = self.z.to_f64();
        let b = to.to_f64();
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        if len == 0.0 {
            return Err(GeometryError::Degenerate("zero-length path edge".into()));
        }
        let scale = (a.0.hypot(a.1)).max(b.0.hypot(b.1));
        let d0 = point_segment_distance((0.0, 0.0), a, b);
        if d0 < CLEARANCE * scale {
            return Err(GeometryError::Clearance {
                point: "0".into(),
                distance: d0,
            });
        }
        for (i, f) in self.factors.iter().enumerate() {
            if self.anchor == Anchor::On(i) {
                continue;
            }
            let x = f.location.to_f64();
            let d = point_segment_distance((x, 0.0), a, b);
            if d < CLEARANCE * x.abs() {
                return Err(GeometryError::Clearance {
                    point: f.label.clone(),
                    distance: d,
                });
            }
        }
        Ok(())
    }

    fn edge(&self, a: &Complex, b: &Complex, depth: u32, anchored: bool) -> Result<FormTriple, GeometryError> {
        match self.edge_once(a, b, anchored) {
            Ok(v) => Ok(v),
            Err(GeometryError::Quadrature(QuadratureError::NoConvergence { .. })) if depth < MAX_SPLITS => {
                // split and integrate the halves; the anchor only affects the first
                let mid = (a + b).ldexp(-1);
                let mut sub = self.clone();
                let first = sub.edge(a, &mid, depth + 1, anchored)?;
                sub.advance_theta(a, &mid);
                sub.anchor = Anchor::Free;
                let mut second = sub.edge(&mid, b, depth + 1, false)?;
                second.add(&first);
                Ok(second)
            }
            Err(GeometryError::Quadrature(QuadratureError::NoConvergence { .. })) => {
                Err(GeometryError::Refinement { attempts: MAX_SPLITS })
            }
            Err(e) => Err(e),
        }
    }

    fn advance_theta(&mut self, from: &Complex, to: &Complex) {
        let (ax, ay) = from.to_f64();
        let (bx, by) = to.to_f64();
        for (i, f) in self.factors.iter().enumerate() {
            let x = f.location.to_f64();
            if self.anchor == Anchor::On(i) {
                self.theta[i] = (by - ay).atan2(bx - ax);
            } else {
                self.theta[i] += arg_ratio((bx - x, by), (ax - x, ay));
            }
        }
    }

    fn edge_once(&self, a: &Complex, b: &Complex, anchored: bool) -> Result<FormTriple, GeometryError> {
        let prec = self.prec;
        let wp = prec.plus(8);
        let a = a.with_precision(wp);
        let b = b.with_precision(wp);
        let delta = &b - &a;
        let dir = delta.to_f64();
        let anchor = if anchored { self.anchor } else { Anchor::Free };
        let start_rel: Vec<(f64, f64)> = self
            .factors
            .iter()
            .map(|f| {
                let (ax, ay) = a.to_f64();
                (ax - f.location.to_f64(), ay)
            })
            .collect();
        let locs: Vec<Complex> = self.factors.iter().map(|f| Complex::from_real(f.location.with_precision(wp))).collect();
        let integrand = |_: &Real, d_lo: &Real, d_hi: &Real| -> FormTriple {
            let z = if d_lo <= d_hi {
                &a + &delta.scale(d_lo)
            } else {
                &b - &delta.scale(d_hi)
            };
            let mut theta = Vec::with_capacity(locs.len());
            let mut diffs = Vec::with_capacity(locs.len());
            for (i, loc) in locs.iter().enumerate() {
                if anchor == Anchor::On(i) {
                    diffs.push(delta.scale(d_lo));
                    theta.push(dir.1.atan2(dir.0));
                } else {
                    let d = &z - loc;
                    let df = d.to_f64();
                    theta.push(self.theta[i] + arg_ratio(df, start_rel[i]));
                    diffs.push(d);
                }
            }
            let Some(w) = w_from(&self.factors, &diffs, &theta) else {
                return FormTriple::zero(wp);
            };
            let inv = w.recip();
            let dz_over_z = &delta / &z;
            let phi1 = (&inv - &w).ldexp(-1) * &dz_over_z;
            let phi2 = ((&inv + &w).ldexp(-1) * &dz_over_z).mul_i();
            FormTriple([phi1, phi2, dz_over_z])
        };
        let seg = Segment::new(Real::zero(wp), Real::one(wp)).expect("unit interval");
        let est = integrate_de(integrand, &seg, prec, &QuadratureOptions::default())?;
        let v = est.value;
        Ok(FormTriple([
            v.0[0].with_precision(prec),
            v.0[1].with_precision(prec),
            v.0[2].with_precision(prec),
        ]))
    }
}

fn factors(wd: &WeierstrassData, prec: Precision) -> Vec<Factor> {
    wd.divisor
        .branch_points()
        .iter()
        .map(|p| Factor {
            label: p.label.clone(),
            location: p.location.with_precision(prec),
            exponent: p.role.exponent(),
        })
        .collect()
}

/// `w` from the factor differences, with the sign fixed by the tracked phase.
fn w_from(factors: &[Factor], diffs: &[Complex], theta: &[f64]) -> Option<Complex> {
    let prec = diffs[0].precision();
    let mut num = Complex::one(prec);
    let mut den = Complex::one(prec);
    let mut phase = 0.0;
    for ((f, d), t) in factors.iter().zip(diffs).zip(theta) {
        if f.exponent > 0 {
            num = &num * d;
        } else {
            den = &den * d;
        }
        phase += 0.5 * f.exponent as f64 * t;
    }
    if num.is_zero() || den.is_zero() {
        return None;
    }
    let w = (&num / &den).sqrt();
    let (wr, wi) = w.to_f64();
    if !(wr.is_finite() && wi.is_finite()) {
        return None;
    }
    // agree with e^{i·phase} up to a positive factor
    if wr * phase.cos() + wi * phase.sin() < 0.0 {
        Some(-w)
    } else {
        Some(w)
    }
}

/// `Arg(p/q)` in (−π, π].
fn arg_ratio(p: (f64, f64), q: (f64, f64)) -> f64 {
    let re = p.0 * q.0 + p.1 * q.1;
    let im = p.1 * q.0 - p.0 * q.1;
    im.atan2(re)
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    (p.0 - cx).hypot(p.1 - cy)
}
