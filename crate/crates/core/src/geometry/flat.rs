//! Developing the flat structures of `G dh` and `(1/G) dh`.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::io::{self, Write};

use super::{GeometryError, PathTracker};
use crate::curve::WeierstrassData;
use crate::numerics::{Complex, Precision, Real};
use crate::quadrature::{period_integral, FormKind, Segment};

/// Samples per end semicircle in the drawn outline.
const ARC_SAMPLES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatForm {
    Gdh,
    InvGdh,
}

impl FlatForm {
    pub fn kind(self) -> FormKind {
        match self {
            FlatForm::Gdh => FormKind::Gdh,
            FlatForm::InvGdh => FormKind::InvGdh,
        }
    }

    /// The form from the coordinate forms: `G dh = −φ1 − iφ2`,
    /// `(1/G) dh = φ1 − iφ2`.
    fn combine(self, phi: &[Complex; 3]) -> Complex {
        let i_phi2 = phi[1].mul_i();
        match self {
            FlatForm::Gdh => -(&phi[0] + &i_phi2),
            FlatForm::InvGdh => &phi[0] - &i_phi2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlatVertex {
    pub label: String,
    /// Preimage on the real axis.
    pub x: Real,
    pub point: Complex,
    /// Whether `x` is a branch point (a cone point of the metric).
    pub branch: bool,
}

/// Boundary of the developed upper half-plane, truncated at the ends.
#[derive(Debug, Clone)]
pub struct FlatPolygon {
    pub form: FlatForm,
    /// Marked points in traversal order: `0+`, the positive axis, `∞+`,
    /// `∞−`, the negative axis, `0−`.
    pub vertices: Vec<FlatVertex>,
    /// Full outline including the end arcs, closed back to `0+`.
    pub outline: Vec<(f64, f64)>,
    /// Development of the whole boundary; zero up to quadrature error.
    pub closure: Complex,
}

fn marked_points(wd: &WeierstrassData, truncation: f64, prec: Precision) -> Vec<(String, Real, bool)> {
    let mut pts: Vec<(String, Real, bool)> = wd
        .divisor
        .branch_points()
        .iter()
        .map(|p| (p.label.clone(), p.location.with_precision(prec), true))
        .collect();
    for (label, v) in [("1", 1i64), ("-1", -1)] {
        let x = Real::from_i64(v, prec);
        if !pts.iter().any(|p| p.1 == x) {
            pts.push((label.into(), x, false));
        }
    }
    let lo = pts.iter().map(|p| p.1.abs().to_f64()).fold(1.0, f64::min) / truncation;
    let hi = pts.iter().map(|p| p.1.abs().to_f64()).fold(1.0, f64::max) * truncation;
    let eps = Real::from_f64(lo, prec);
    let big = Real::from_f64(hi, prec);
    pts.push(("0+".into(), eps.clone(), false));
    pts.push(("0-".into(), -&eps, false));
    pts.push(("inf+".into(), big.clone(), false));
    pts.push(("inf-".into(), -&big, false));
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    pts
}

/// Integral of `form` along the upper side of the real segment `(a, b)`.
fn axis_piece(wd: &WeierstrassData, form: FlatForm, a: &Real, b: &Real, prec: Precision) -> Result<Complex, GeometryError> {
    // period_integral takes the boundary value from below; the upper one is
    // its conjugate because the curve has real coefficients
    let seg = Segment::singular(a.clone(), b.clone())?;
    Ok(period_integral(wd, form.kind(), &seg, prec)?.conj())
}

/// Semicircle from `from` (real) through the upper half-plane to `-from`.
fn arc(wd: &WeierstrassData, form: FlatForm, from: &Real, prec: Precision) -> Result<Vec<Complex>, GeometryError> {
    let mut t = PathTracker::at_axis_point(wd, from, prec)?;
    let r = from.abs();
    let pi = Real::pi(prec);
    let mut out = Vec::with_capacity(ARC_SAMPLES);
    for s in 1..=ARC_SAMPLES {
        let z = if s == ARC_SAMPLES {
            Complex::from_real(-from)
        } else {
            let theta = pi.mul_u64(s as u64).div_u64(ARC_SAMPLES as u64);
            let theta = if from.is_negative() { &pi - &theta } else { theta };
            Complex::from_polar(&r, &theta)
        };
        t.advance(&z)?;
        out.push(form.combine(&t.total().0));
    }
    Ok(out)
}

/// Develop the boundary of the upper half-plane under `form`, starting at
/// `0+` and running counter-clockwise.
pub fn develop_flat(wd: &WeierstrassData, form: FlatForm, truncation: f64, prec: Precision) -> Result<FlatPolygon, GeometryError> {
    if !(truncation > 1.0) {
        return Err(GeometryError::Degenerate(format!("truncation radius {truncation} must exceed 1")));
    }
    let wd = wd.with_precision(prec);
    let pts = marked_points(&wd, truncation, prec);
    let pos: Vec<_> = pts.iter().filter(|p| p.1.is_positive()).cloned().collect();
    let neg: Vec<_> = pts.iter().filter(|p| p.1.is_negative()).cloned().collect();

    let mut vertices = Vec::new();
    let mut outline = Vec::new();
    let mut acc = Complex::zero(prec);
    let mut push = |label: &str, x: &Real, branch: bool, acc: &Complex, outline: &mut Vec<(f64, f64)>| {
        vertices.push(FlatVertex {
            label: label.to_string(),
            x: x.clone(),
            point: acc.clone(),
            branch,
        });
        outline.push(acc.to_f64());
    };

    push(&pos[0].0, &pos[0].1, pos[0].2, &acc, &mut outline);
    for w in pos.windows(2) {
        acc = &acc + &axis_piece(&wd, form, &w[0].1, &w[1].1, prec)?;
        push(&w[1].0, &w[1].1, w[1].2, &acc, &mut outline);
    }
    let big = &pos[pos.len() - 1].1;
    let base = acc.clone();
    for v in arc(&wd, form, big, prec)? {
        acc = &base + &v;
        outline.push(acc.to_f64());
    }
    outline.pop();
    push(&neg[0].0, &neg[0].1, neg[0].2, &acc, &mut outline);
    for w in neg.windows(2) {
        acc = &acc + &axis_piece(&wd, form, &w[0].1, &w[1].1, prec)?;
        push(&w[1].0, &w[1].1, w[1].2, &acc, &mut outline);
    }
    // the small arc runs from 0− over the top to 0+, clockwise about 0
    let small = &neg[neg.len() - 1].1;
    let base = acc.clone();
    for v in arc(&wd, form, small, prec)? {
        acc = &base + &v;
        outline.push(acc.to_f64());
    }

    Ok(FlatPolygon {
        form,
        vertices,
        outline,
        closure: acc,
    })
}

impl FlatPolygon {
    /// Turning angle of the outline at each vertex, in (−π, π].
    pub fn turning_angles(&self) -> Vec<(String, f64)> {
        let n = self.vertices.len();
        let p: Vec<(f64, f64)> = self.vertices.iter().map(|v| v.point.to_f64()).collect();
        (0..n)
            .map(|i| {
                let a = p[(i + n - 1) % n];
                let b = p[i];
                let c = p[(i + 1) % n];
                let d1 = (b.0 - a.0, b.1 - a.1);
                let d2 = (c.0 - b.0, c.1 - b.1);
                let turn = (d1.0 * d2.1 - d1.1 * d2.0).atan2(d1.0 * d2.0 + d1.1 * d2.1);
                (self.vertices[i].label.clone(), turn)
            })
            .collect()
    }

    /// Largest distance of a branch-point turning angle from a multiple of π/2.
    pub fn cone_angle_defect(&self) -> f64 {
        self.turning_angles()
            .iter()
            .zip(&self.vertices)
            .filter(|(_, v)| v.branch)
            .map(|((_, t), _)| {
                let q = t / FRAC_PI_2;
                (q - q.round()).abs() * FRAC_PI_2
            })
            .fold(0.0, f64::max)
    }

    /// Number of branch points where the outline turns clockwise.
    pub fn reentrant_corners(&self) -> usize {
        self.turning_angles()
            .iter()
            .zip(&self.vertices)
            .filter(|((_, t), v)| v.branch && *t < -FRAC_PI_2 / 2.0)
            .count()
    }

    /// `label x re im` per marked point, 17 significant digits.
    pub fn vertex_list(&self) -> String {
        let mut s = String::new();
        let name = match self.form {
            FlatForm::Gdh => "gdh",
            FlatForm::InvGdh => "invgdh",
        };
        let _ = writeln!(s, "# flat structure of {name}: label x re im");
        for v in &self.vertices {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                v.label,
                v.x.to_decimal(17),
                v.point.re.to_decimal(17),
                v.point.im.to_decimal(17)
            );
        }
        s
    }

    pub fn write_svg(&self, out: &mut impl Write) -> io::Result<()> {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.outline {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(-y);
            y1 = y1.max(-y);
        }
        let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-12);
        let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
            x0 - pad,
            y0 - pad,
            w,
            h
        )?;
        let pts: Vec<String> = self.outline.iter().map(|(x, y)| format!("{x:.9},{:.9}", -y)).collect();
        writeln!(
            out,
            r#"  <polygon points="{}" fill="none" stroke="black" stroke-width="{:.6}"/>"#,
            pts.join(" "),
            w.max(h) / 400.0
        )?;
        for v in &self.vertices {
            let (x, y) = v.point.to_f64();
            writeln!(
                out,
                r#"  <circle cx="{x:.9}" cy="{:.9}" r="{:.6}"><title>{}</title></circle>"#,
                -y,
                w.max(h) / 200.0,
                v.label
            )?;
        }
        writeln!(out, "</svg>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::scherk_divisor;

    #[test]
    fn scherk_polygon_closes_with_right_angles() {
        let prec = Precision::new(30).unwrap();
        let wd = WeierstrassData::new(scherk_divisor(prec));
        for form in [FlatForm::Gdh, FlatForm::InvGdh] {
            let poly = develop_flat(&wd, form, 1e3, prec).unwrap();
            let (cr, ci) = poly.closure.to_f64();
            assert!(cr.hypot(ci) < 1e-20, "{form:?} closure {cr} {ci}");
            assert!(poly.cone_angle_defect() < 1e-12);
            for (label, t) in poly.turning_angles() {
                if label == "1" || label == "-1" {
                    assert!((t.abs() - FRAC_PI_2).abs() < 1e-12);
                }
            }
            let list = poly.vertex_list();
            assert_eq!(list.lines().count(), poly.vertices.len() + 1);
        }
    }
}
