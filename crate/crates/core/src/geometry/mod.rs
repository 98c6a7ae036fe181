//! The minimal immersion, lattice periods, meshes and flat structures.
//!
//! Paths live on the sheet over the upper half-plane with `w > 0` to the
//! right of every branch point, starting at the base point `z₀` (the
//! largest positive branch point, fixed by τ1 and τ2).

mod flat;
mod mesh;
mod path;

use thiserror::Error;

use crate::curve::{CurveError, EndClass, WeierstrassData};
use crate::families::{FamilyError, FamilyInstance};
use crate::numerics::{Complex, Precision, Real};
use crate::quadrature::{FormKind, QuadratureError};

pub use flat::{develop_flat, FlatForm, FlatPolygon, FlatVertex};
pub use mesh::{build_mesh, Grid, Mesh, Seam};
pub use path::{FormTriple, PathTracker, CLEARANCE};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("path passes within {distance:e} of singular point {point}")]
    Clearance { point: String, distance: f64 },
    #[error("edge integral did not converge after {attempts} refinements")]
    Refinement { attempts: u32 },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// A domain point with its image in ℝ³.
#[derive(Debug, Clone)]
pub struct ImmersionPoint {
    pub z: Complex,
    pub xyz: [Real; 3],
}

/// `Re ∫_{z₀}^{z} (φ1, φ2, φ3)` along the polyline `path` (which excludes `z₀`).
pub fn immerse(wd: &WeierstrassData, path: &[Complex], prec: Precision) -> Result<ImmersionPoint, GeometryError> {
    let mut t = PathTracker::at_base_point(wd, prec);
    t.follow(path)?;
    Ok(ImmersionPoint {
        z: t.position().clone(),
        xyz: t.xyz(),
    })
}

/// Horizontal periods of the loops around the ends at `z = 0` and `z = ∞`.
#[derive(Debug, Clone)]
pub struct LatticePeriods {
    pub t1: [Real; 3],
    pub t2: [Real; 3],
}

impl LatticePeriods {
    pub fn to_f64(&self) -> [[f64; 3]; 2] {
        let f = |v: &[Real; 3]| [v[0].to_f64(), v[1].to_f64(), v[2].to_f64()];
        [f(&self.t1), f(&self.t2)]
    }

    /// `|T1 · T2| / (|T1| |T2|)`.
    pub fn cosine(&self) -> f64 {
        let [a, b] = self.to_f64();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        (dot / (na * nb)).abs()
    }
}

/// Radii strictly inside and outside every finite singular point.
fn end_radii(wd: &WeierstrassData, prec: Precision) -> (Real, Real) {
    let pts = wd.divisor.branch_points();
    let mut lo = pts[0].location.abs();
    let mut hi = lo.clone();
    for p in pts {
        let a = p.location.abs();
        if a < lo {
            lo = a.clone();
        }
        if a > hi {
            hi = a;
        }
    }
    (lo.with_precision(prec).ldexp(-2), hi.with_precision(prec).ldexp(2))
}

/// Counter-clockwise square through `±r`, `±ir`, starting and ending at `ir`.
fn square_loop(r: &Real) -> Vec<Complex> {
    let prec = r.precision();
    let zero = Real::zero(prec);
    vec![
        Complex::new(-r, zero.clone()),
        Complex::new(zero.clone(), -r),
        Complex::new(r.clone(), zero.clone()),
        Complex::new(zero, r.clone()),
    ]
}

fn end_loop(wd: &WeierstrassData, r: &Real, prec: Precision) -> Result<[Real; 3], GeometryError> {
    let z0 = wd.base_point().with_precision(prec);
    let zero = Real::zero(prec);
    let mut t = PathTracker::at_base_point(wd, prec);
    t.advance(&Complex::new(zero.clone(), z0))?;
    t.advance(&Complex::new(zero, r.clone()))?;
    let start = t.total().clone();
    t.follow(&square_loop(r))?;
    let end = t.total();
    Ok([
        &end.0[0].re - &start.0[0].re,
        &end.0[1].re - &start.0[1].re,
        &end.0[2].re - &start.0[2].re,
    ])
}

/// Periods of the end loops, by contour quadrature on the base sheet.
pub fn lattice_periods(wd: &WeierstrassData, prec: Precision) -> Result<LatticePeriods, GeometryError> {
    let (r0, r1) = end_radii(wd, prec);
    Ok(LatticePeriods {
        t1: end_loop(wd, &r0, prec)?,
        t2: end_loop(wd, &r1, prec)?,
    })
}

/// Whether the two end loops give parallel periods, as they must for
/// parallel ends.
pub fn ends_parallel(wd: &WeierstrassData, lattice: &LatticePeriods) -> bool {
    let parallel = lattice.cosine() > 1.0 - 1e-8;
    match wd.end_class {
        EndClass::Parallel => parallel,
        _ => !parallel,
    }
}

/// Period of one handle cycle compared with its equation.
#[derive(Debug, Clone)]
pub struct ClosureDefect {
    pub label: String,
    /// `Re ∮ form` around the equation segment.
    pub loop_value: Real,
    /// `| |Re ∮ form| − 2|target| |`
    pub defect: Real,
}

/// Loop around the real segment `(lo, hi)` clear of every other singular
/// point, counter-clockwise and starting above the segment.
fn segment_loop(wd: &WeierstrassData, lo: &Real, hi: &Real, prec: Precision) -> Vec<Complex> {
    let negative = hi.is_negative();
    // work on the mirrored positive segment, then flip back
    let (p, q) = if negative { (-hi, -lo) } else { (lo.clone(), hi.clone()) };
    let mut others: Vec<Real> = wd
        .divisor
        .branch_points()
        .iter()
        .map(|b| if negative { -&b.location } else { b.location.clone() })
        .filter(|x| x.is_positive() && *x != p && *x != q)
        .collect();
    others.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let below = others.iter().filter(|x| **x < p).last().cloned();
    let above = others.iter().find(|x| **x > q).cloned();
    let c1 = match below {
        Some(b) => (&b * &p).sqrt(),
        None => p.ldexp(-1),
    };
    let c2 = match above {
        Some(a) => (&a * &q).sqrt(),
        None => q.ldexp(1),
    };
    let hp = &p - &c1;
    let hq = &c2 - &q;
    let zero = Real::zero(prec);
    let pts = vec![
        Complex::new(p.clone(), hp.clone()),
        Complex::new(c1, zero.clone()),
        Complex::new(p.clone(), -&hp),
        Complex::new(q.clone(), -&hq),
        Complex::new(c2, zero),
        Complex::new(q.clone(), hq.clone()),
        Complex::new(p.clone(), hp.clone()),
    ];
    if negative {
        // z ↦ −z̄ keeps the upper half-plane and reverses orientation
        pts.into_iter().rev().map(|z| Complex::new(-&z.re, z.im)).collect()
    } else {
        pts
    }
}

/// Transport around the handle cycle of every period equation.
pub fn handle_closure(inst: &FamilyInstance, prec: Precision) -> Result<Vec<ClosureDefect>, GeometryError> {
    let wd = inst.data.with_precision(prec);
    let z0 = wd.base_point().with_precision(prec);
    let mut out = Vec::new();
    for eq in &inst.system.equations {
        let lp = segment_loop(&wd, &eq.segment.lo, &eq.segment.hi, prec);
        let mut t = PathTracker::at_base_point(&wd, prec);
        t.advance(&Complex::new(Real::zero(prec), z0.clone()))?;
        t.advance(&lp[0])?;
        let start = t.total().clone();
        t.follow(&lp[1..])?;
        let idx = match eq.form {
            FormKind::Phi1 => 0,
            FormKind::Phi2 => 1,
            other => {
                return Err(GeometryError::Degenerate(format!(
                    "equation {} uses {}, not a coordinate form",
                    eq.label,
                    other.name()
                )))
            }
        };
        let loop_value = &t.total().0[idx].re - &start.0[idx].re;
        let defect = (&loop_value.abs() - &eq.target.abs().with_precision(prec).ldexp(1)).abs();
        out.push(ClosureDefect {
            label: eq.label.clone(),
            loop_value,
            defect,
        });
    }
    Ok(out)
}
