//! Polar-grid meshes of the translational fundamental domain.

use std::collections::HashMap;
use std::io::{self, Write};

use super::{lattice_periods, GeometryError, PathTracker};
use crate::curve::WeierstrassData;
use crate::numerics::{Complex, Precision, Real};
use crate::par::map_indexed;

/// Absolute weld tolerance after scaling the domain diameter to 1.
pub const WELD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub truncation_radius: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            radial_samples: 32,
            angular_samples: 32,
            truncation_radius: 1e3,
        }
    }
}

/// Two raw vertices on a symmetry curve that are the same point of the
/// surface, possibly after a lattice translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seam {
    pub vertex: usize,
    pub partner: usize,
    /// Axis segment between consecutive singular points (branch points and
    /// 0), numbered from the left.
    pub segment: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub grid: Grid,
    /// Four reflected copies of the upper half-plane piece, copy-major,
    /// scaled so the domain diameter is 1.
    pub raw_vertices: Vec<[f64; 3]>,
    pub raw_normals: Vec<[f64; 3]>,
    pub raw_to_welded: Vec<usize>,
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub seams: Vec<Seam>,
    /// Lattice periods in the same scaling as the vertices.
    pub lattice: [[f64; 3]; 2],
    /// Length of the domain before scaling.
    pub scale: f64,
}

// (x1, x2, x3) signs of copy c: identity, τ2, τ1, τ1τ2
const COPY_SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]];

fn log_radii(wd: &WeierstrassData, grid: &Grid) -> Vec<f64> {
    let abs: Vec<f64> = wd.divisor.branch_points().iter().map(|p| p.location.to_f64().abs()).collect();
    let lo = abs.iter().cloned().fold(1.0, f64::min) / grid.truncation_radius;
    let hi = abs.iter().cloned().fold(1.0, f64::max) * grid.truncation_radius;
    let n = grid.radial_samples;
    (0..n)
        .map(|j| {
            let r = (lo.ln() + (hi.ln() - lo.ln()) * j as f64 / (n - 1) as f64).exp();
            // keep grid circles off the branch points
            if abs.iter().any(|a| ((r - a) / a).abs() < 1e-6) {
                r * (1.0 + 1e-4)
            } else {
                r
            }
        })
        .collect()
}

/// Grid point exactly on the axes where the angle is 0, π/2 or π.
fn grid_point(r: &Real, k: usize, m: usize, prec: Precision) -> Complex {
    let zero = Real::zero(prec);
    if k == 0 {
        return Complex::new(r.clone(), zero);
    }
    if k == m - 1 {
        return Complex::new(-r, zero);
    }
    if 2 * k == m - 1 {
        return Complex::new(zero, r.clone());
    }
    let theta = Real::pi(prec).mul_u64(k as u64).div_u64((m - 1) as u64);
    Complex::from_polar(r, &theta)
}

struct Sample {
    xyz: [f64; 3],
    normal: [f64; 3],
}

fn sample(t: &PathTracker) -> Result<Sample, GeometryError> {
    let xyz = t.xyz();
    let (gr, gi) = t.w()?.to_f64();
    let g2 = gr * gr + gi * gi;
    Ok(Sample {
        xyz: [xyz[0].to_f64(), xyz[1].to_f64(), xyz[2].to_f64()],
        normal: [2.0 * gr / (g2 + 1.0), 2.0 * gi / (g2 + 1.0), (g2 - 1.0) / (g2 + 1.0)],
    })
}

fn step(t: &mut PathTracker, to: &Complex) -> Result<(), GeometryError> {
    if t.position() != to {
        t.advance(to)?;
    }
    Ok(())
}

/// The upper half-plane piece: rows of constant radius, columns of
/// constant angle from 0 to π.
fn half_plane_piece(wd: &WeierstrassData, grid: &Grid, radii: &[f64], prec: Precision) -> Result<Vec<Sample>, GeometryError> {
    let m = grid.angular_samples;
    let radii: Vec<Real> = radii.iter().map(|r| Real::from_f64(*r, prec)).collect();
    let z0 = wd.base_point().with_precision(prec);

    // trackers at i·r_j, reached along the imaginary axis from i·z0
    let mut spine: Vec<Option<PathTracker>> = vec![None; radii.len()];
    let mut t = PathTracker::at_base_point(wd, prec);
    let zero = Real::zero(prec);
    t.advance(&Complex::new(zero.clone(), z0.clone()))?;
    let split = radii.iter().position(|r| *r >= z0).unwrap_or(radii.len());
    let mut up = t.clone();
    for j in split..radii.len() {
        step(&mut up, &Complex::new(zero.clone(), radii[j].clone()))?;
        spine[j] = Some(up.clone());
    }
    let mut down = t;
    for j in (0..split).rev() {
        step(&mut down, &Complex::new(zero.clone(), radii[j].clone()))?;
        spine[j] = Some(down.clone());
    }

    // walk each arc outwards from the imaginary axis in both directions
    let lo = (m - 1) / 2;
    let rows = map_indexed(radii.len(), |j| -> Result<Vec<Sample>, GeometryError> {
        let start = spine[j].as_ref().expect("every row has a spine tracker");
        let mut row: Vec<Option<Sample>> = (0..m).map(|_| None).collect();
        let mut t = start.clone();
        for k in (0..=lo).rev() {
            step(&mut t, &grid_point(&radii[j], k, m, prec))?;
            row[k] = Some(sample(&t)?);
        }
        let mut t = start.clone();
        for k in lo + 1..m {
            step(&mut t, &grid_point(&radii[j], k, m, prec))?;
            row[k] = Some(sample(&t)?);
        }
        Ok(row.into_iter().map(|s| s.expect("filled")).collect())
    });
    let mut out = Vec::with_capacity(radii.len() * m);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn diameter(v: &[[f64; 3]]) -> f64 {
    if v.len() <= 20_000 {
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist(&v[i], &v[j]));
            }
        }
        d
    } else {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in v {
            for c in 0..3 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        dist(&lo, &hi)
    }
}

/// Spatial hash with cells of side `cell`.
struct PointIndex {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl PointIndex {
    fn new(cell: f64) -> PointIndex {
        PointIndex {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64; 3]) -> [i64; 3] {
        [
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        ]
    }

    fn insert(&mut self, p: &[f64; 3], id: usize) {
        self.buckets.entry(self.key(p)).or_default().push(id);
    }

    /// Closest indexed point within one cell of `p`.
    fn nearest(&self, p: &[f64; 3], points: &[[f64; 3]]) -> Option<(usize, f64)> {
        let k = self.key(p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &id in ids {
                            let d = dist(p, &points[id]);
                            if best.map_or(true, |(b, bd)| d < bd || (d == bd && id < b)) {
                                best = Some((id, d));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Mesh the translational fundamental domain of a solved surface.
pub fn build_mesh(wd: &WeierstrassData, grid: Grid, prec: Precision) -> Result<Mesh, GeometryError> {
    if grid.radial_samples < 2 || grid.angular_samples < 2 || !(grid.truncation_radius > 1.0) {
        return Err(GeometryError::Degenerate(format!(
            "grid needs at least 2×2 samples and truncation radius > 1, got {}×{} at {}",
            grid.radial_samples, grid.angular_samples, grid.truncation_radius
        )));
    }
    let wd = wd.with_precision(prec);
    let (n, m) = (grid.radial_samples, grid.angular_samples);
    let radii = log_radii(&wd, &grid);
    let piece = half_plane_piece(&wd, &grid, &radii, prec)?;
    let per_copy = n * m;

    let mut raw_vertices = Vec::with_capacity(4 * per_copy);
    let mut raw_normals = Vec::with_capacity(4 * per_copy);
    for s in &COPY_SIGNS {
        let det = s[0] * s[1] * s[2];
        for p in &piece {
            raw_vertices.push([s[0] * p.xyz[0], s[1] * p.xyz[1], s[2] * p.xyz[2]]);
            raw_normals.push([det * s[0] * p.normal[0], det * s[1] * p.normal[1], det * s[2] * p.normal[2]]);
        }
    }
    let scale = diameter(&raw_vertices);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeometryError::Degenerate(format!("domain diameter {scale}")));
    }
    for v in &mut raw_vertices {
        for c in v.iter_mut() {
            *c /= scale;
        }
    }
    let lattice = lattice_periods(&wd, prec)?.to_f64();
    let lattice = lattice.map(|t| t.map(|c| c / scale));

    // seams: axis vertices pair with the τ2 copy where w is real and with
    // the τ1τ2 copy where w is imaginary
    let mut seams = Vec::new();
    for j in 0..n {
        for (k, r) in [(0, radii[j]), (m - 1, -radii[j])] {
            let w2 = wd.divisor.w_squared_real(&Real::from_f64(r, prec))?;
            let flip = if w2.is_positive() { 1 } else { 3 };
            let segment = wd.divisor.branch_points().iter().filter(|p| p.location.to_f64() < r).count() + usize::from(r > 0.0);
            for c in 0..4usize {
                let partner = c ^ flip;
                if c < partner {
                    seams.push(Seam {
                        vertex: c * per_copy + j * m + k,
                        partner: partner * per_copy + j * m + k,
                        segment,
                    });
                }
            }
        }
    }

    // weld, in index order so the result is deterministic
    let mut index = PointIndex::new(WELD_TOLERANCE);
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut normals: Vec<[f64; 3]> = Vec::new();
    let mut raw_to_welded = Vec::with_capacity(raw_vertices.len());
    for (p, nrm) in raw_vertices.iter().zip(&raw_normals) {
        match index.nearest(p, &vertices) {
            Some((id, d)) if d <= WELD_TOLERANCE => raw_to_welded.push(id),
            _ => {
                index.insert(p, vertices.len());
                raw_to_welded.push(vertices.len());
                vertices.push(*p);
                normals.push(*nrm);
            }
        }
    }

    let mut triangles = Vec::new();
    for (c, s) in COPY_SIGNS.iter().enumerate() {
        let flip = s[0] * s[1] * s[2] < 0.0;
        let id = |j: usize, k: usize| raw_to_welded[c * per_copy + j * m + k];
        for j in 0..n - 1 {
            for k in 0..m - 1 {
                for t in [[id(j, k), id(j + 1, k), id(j + 1, k + 1)], [id(j, k), id(j + 1, k + 1), id(j, k + 1)]] {
                    let t = if flip { [t[0], t[2], t[1]] } else { t };
                    if !degenerate(&vertices, &t) {
                        triangles.push(t);
                    }
                }
            }
        }
    }

    Ok(Mesh {
        grid,
        raw_vertices,
        raw_normals,
        raw_to_welded,
        vertices,
        normals,
        triangles,
        seams,
        lattice,
        scale,
    })
}

fn degenerate(v: &[[f64; 3]], t: &[usize; 3]) -> bool {
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        return true;
    }
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let x = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
    x[0] * x[0] + x[1] * x[1] + x[2] * x[2] == 0.0
}

impl Mesh {
    pub fn vertices_per_copy(&self) -> usize {
        self.grid.radial_samples * self.grid.angular_samples
    }

    /// `d` reduced by the nearest lattice vector; `d` itself when the lattice
    /// is degenerate (parallel periods).
    pub fn reduce(&self, d: [f64; 3]) -> [f64; 3] {
        let [a, b] = self.lattice;
        let det = a[0] * b[1] - a[1] * b[0];
        let na = a[0].hypot(a[1]);
        let nb = b[0].hypot(b[1]);
        if na == 0.0 || nb == 0.0 || det.abs() < 1e-8 * na * nb {
            if na > 0.0 {
                // one generator: reduce along it only
                let c = ((d[0] * a[0] + d[1] * a[1]) / (na * na)).round();
                return [d[0] - c * a[0], d[1] - c * a[1], d[2] - c * a[2]];
            }
            return d;
        }
        let c1 = ((d[0] * b[1] - d[1] * b[0]) / det).round();
        let c2 = ((a[0] * d[1] - a[1] * d[0]) / det).round();
        [
            d[0] - c1 * a[0] - c2 * b[0],
            d[1] - c1 * a[1] - c2 * b[1],
            d[2] - c1 * a[2] - c2 * b[2],
        ]
    }

    fn seam_gap(&self, s: &Seam) -> [f64; 3] {
        let (p, q) = (self.raw_vertices[s.vertex], self.raw_vertices[s.partner]);
        [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
    }

    /// One translation per glued boundary segment: the offset between the
    /// two copies along that segment.
    pub fn seam_translations(&self) -> Vec<((usize, usize, usize), [f64; 3])> {
        let mut out: Vec<((usize, usize, usize), [f64; 3])> = Vec::new();
        let per_copy = self.vertices_per_copy();
        for s in &self.seams {
            let key = (s.vertex / per_copy, s.partner / per_copy, s.segment);
            if !out.iter().any(|(k, _)| *k == key) {
                out.push((key, self.seam_gap(s)));
            }
        }
        out
    }

    /// Watertightness of the assembled domain: along each glued segment the
    /// two copies must differ by one horizontal translation, and when the
    /// end periods span the plane that translation must lie in their
    /// lattice.
    pub fn seam_defect(&self) -> f64 {
        let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let per_copy = self.vertices_per_copy();
        let translations = self.seam_translations();
        let full_rank = {
            let [a, b] = self.lattice;
            (a[0] * b[1] - a[1] * b[0]).abs() > 1e-8 * a[0].hypot(a[1]) * b[0].hypot(b[1])
        };
        let mut worst: f64 = 0.0;
        for s in &self.seams {
            let key = (s.vertex / per_copy, s.partner / per_copy, s.segment);
            let t = translations.iter().find(|(k, _)| *k == key).expect("recorded").1;
            let g = self.seam_gap(s);
            worst = worst.max(norm([g[0] - t[0], g[1] - t[1], g[2] - t[2]]));
            worst = worst.max(g[2].abs());
            if full_rank {
                worst = worst.max(norm(self.reduce(g)));
            }
        }
        worst
    }

    /// Largest distance from a mirrored welded vertex `(x1, −x2, x3)` to the
    /// closest welded vertex.
    pub fn mirror_defect(&self) -> f64 {
        let cell = 1e-6;
        let mut index = PointIndex::new(cell);
        for (i, v) in self.vertices.iter().enumerate() {
            index.insert(v, i);
        }
        self.vertices
            .iter()
            .map(|v| match index.nearest(&[v[0], -v[1], v[2]], &self.vertices) {
                Some((_, d)) => d,
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Largest vertical normal component on the two truncation circles.
    pub fn end_normal_defect(&self) -> f64 {
        let (n, m) = (self.grid.radial_samples, self.grid.angular_samples);
        let mut worst: f64 = 0.0;
        for c in 0..4 {
            for j in [0, n - 1] {
                for k in 0..m {
                    worst = worst.max(self.raw_normals[c * n * m + j * m + k][2].abs());
                }
            }
        }
        worst
    }

    /// ASCII OBJ with 17 significant digits and 1-based faces.
    pub fn write_obj(&self, out: &mut impl Write) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::scherk_divisor;

    #[test]
    fn scherk_small_grid() {
        let prec = Precision::new(17).unwrap();
        let wd = WeierstrassData::new(scherk_divisor(prec));
        let grid = Grid {
            radial_samples: 8,
            angular_samples: 7,
            truncation_radius: 1e3,
        };
        let mesh = build_mesh(&wd, grid, prec).unwrap();
        assert_eq!(mesh.raw_vertices.len(), 4 * 8 * 7);
        assert!(mesh.seam_defect() < 1e-8, "{}", mesh.seam_defect());
        assert!(mesh.mirror_defect() < 1e-8);
        assert!(mesh.vertices.len() < mesh.raw_vertices.len());
        let mut buf = Vec::new();
        mesh.write_obj(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), mesh.vertices.len());
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), mesh.triangles.len());
    }
}
