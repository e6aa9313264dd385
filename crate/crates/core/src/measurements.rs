//! Grids, test shapes, cell-average measurements, noise and error norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::geometry::{self, clip, disk_polygon_area, rect_halfplane_area, Cell, ConvexPolygon, HalfPlane, Point};
use crate::recon::{CellRecon, Reconstruction};

/// Relative area budget per cell for the adaptive disk quadrature.
const QUADTREE_TOL: f64 = 1e-10;

/// Uniform `L × L` grid on the unit square, `h = 1/L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    cells_per_side: usize,
}

impl Grid {
    pub fn new(cells_per_side: usize) -> Result<Self> {
        if cells_per_side == 0 {
            return Err(Error::InvalidDimensions("grid needs at least one cell".into()));
        }
        Ok(Self { cells_per_side })
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_side as f64
    }

    /// Total number of cells `L²`.
    pub fn len(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major position of the 1-based cell `(i, j)`: rows are indexed by `i`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.cells_per_side + (j - 1)
    }

    /// Inverse of [`Grid::index`].
    pub fn cell_at(&self, idx: usize) -> Cell {
        let l = self.cells_per_side;
        Cell::new(idx / l + 1, idx % l + 1, self.h())
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        Cell::new(i, j, self.h())
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 1 || j == 1 || i == self.cells_per_side || j == self.cells_per_side
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|k| self.cell_at(k))
    }
}

/// Analytic test shapes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    HalfPlane { hp: HalfPlane },
    RotatedSquare { center: Point, half_width: f64, angle: f64 },
}

impl Shape {
    /// Euclidean signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match *self {
            Shape::Disk { center, radius } => (p.x - center.x).hypot(p.y - center.y) - radius,
            Shape::HalfPlane { hp } => -hp.signed_distance(p),
            Shape::RotatedSquare { center, half_width, angle } => {
                let (s, c) = angle.sin_cos();
                let (dx, dy) = (p.x - center.x, p.y - center.y);
                let u = (c * dx + s * dy).abs() - half_width;
                let v = (-s * dx + c * dy).abs() - half_width;
                let outside = u.max(0.0).hypot(v.max(0.0));
                outside + u.max(v).min(0.0)
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) <= 0.0
    }

    fn square_polygon(center: Point, half_width: f64, angle: f64) -> ConvexPolygon {
        let (s, c) = angle.sin_cos();
        let corner = |a: f64, b: f64| Point::new(center.x + c * a - s * b, center.y + s * a + c * b);
        let w = half_width;
        ConvexPolygon::new(vec![corner(-w, -w), corner(w, -w), corner(w, w), corner(-w, w)])
    }

    /// Exact `|Ω ∩ poly|`.
    pub fn area_in_polygon(&self, poly: &ConvexPolygon) -> f64 {
        match *self {
            Shape::Disk { center, radius } => disk_polygon_area(center, radius, poly),
            Shape::HalfPlane { hp } => clip(poly, &hp).area(),
            Shape::RotatedSquare { center, half_width, angle } => {
                let sq = Self::square_polygon(center, half_width, angle);
                let mut out = poly.clone();
                let v = sq.vertices();
                for k in 0..v.len() {
                    let (p, q) = (v[k], v[(k + 1) % v.len()]);
                    // inward normal of a CCW edge is the left normal
                    let theta = (q.x - p.x).atan2(-(q.y - p.y));
                    out = clip(&out, &HalfPlane::new(theta, 0.0, p));
                }
                out.area()
            }
        }
    }

    /// `|Ω ∩ [0,1]²|`.
    pub fn area_in_domain(&self) -> f64 {
        self.area_in_polygon(&ConvexPolygon::unit_square())
    }

    /// Axis-aligned bounding box, `None` for unbounded shapes.
    fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            Shape::Disk { center, radius } => {
                Some((center.x - radius, center.y - radius, center.x + radius, center.y + radius))
            }
            Shape::HalfPlane { .. } => None,
            Shape::RotatedSquare { center, half_width, angle } => {
                let sq = Self::square_polygon(center, half_width, angle);
                let v = sq.vertices();
                let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&Point) -> f64| v.iter().map(sel).fold(init, f);
                Some((
                    fold(f64::min, f64::INFINITY, |p| p.x),
                    fold(f64::min, f64::INFINITY, |p| p.y),
                    fold(f64::max, f64::NEG_INFINITY, |p| p.x),
                    fold(f64::max, f64::NEG_INFINITY, |p| p.y),
                ))
            }
        }
    }
}

/// A shape together with its declared margin `R` from the domain boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub margin: f64,
    /// Boundary smoothness label; not used by any computation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<f64>,
}

impl ShapeSpec {
    /// Checks that a bounded shape lies in `[margin, 1 − margin]²`.
    ///
    /// Half-planes are unbounded and are accepted as is; the reconstruction
    /// ignores boundary cells anyway.
    pub fn new(shape: Shape, margin: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::ShapeOutsideDomain { margin });
        }
        if let Some((x0, y0, x1, y1)) = shape.bounding_box() {
            let lo = margin - 1e-12;
            let hi = 1.0 - margin + 1e-12;
            if x0 < lo || y0 < lo || x1 > hi || y1 > hi {
                return Err(Error::ShapeOutsideDomain { margin });
            }
        }
        match shape {
            Shape::Disk { radius, .. } if radius <= 0.0 => {
                return Err(Error::InvalidParameter("disk radius must be positive".into()))
            }
            Shape::RotatedSquare { half_width, .. } if half_width <= 0.0 => {
                return Err(Error::InvalidParameter("square half width must be positive".into()))
            }
            _ => {}
        }
        Ok(Self { shape, margin, regularity: None })
    }

    pub fn disk(cx: f64, cy: f64, r: f64) -> Result<Self> {
        let margin = (cx - r).min(cy - r).min(1.0 - cx - r).min(1.0 - cy - r).max(0.0);
        Self::new(Shape::Disk { center: Point::new(cx, cy), radius: r }, margin)
    }

    pub fn half_plane(hp: HalfPlane) -> Self {
        Self { shape: Shape::HalfPlane { hp }, margin: 0.0, regularity: None }
    }

    pub fn with_regularity(mut self, s: f64) -> Self {
        self.regularity = Some(s);
        self
    }
}

/// Cell averages `a_T(u)` on a grid, row-major in [`Grid::index`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAverageField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl CellAverageField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDimensions(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// The 3×3 block centered at `(i, j)`, ordered `(i′, j′)` with `j′` fastest.
    pub fn stencil(&self, i: usize, j: usize) -> [f64; 9] {
        let mut out = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                out[3 * a + b] = self.get(i + a - 1, j + b - 1);
            }
        }
        out
    }

    /// `Σ a_T h²`, the measured mass.
    pub fn mass(&self) -> f64 {
        let h = self.grid.h();
        self.values.iter().sum::<f64>() * h * h
    }
}

/// Exact cell averages of `shape` on `grid`.
///
/// Half-planes use the exact clip, rotated squares exact polygon
/// intersection, and disks an adaptive quadtree certified by the signed
/// distance.
pub fn measure(shape: &ShapeSpec, grid: Grid) -> CellAverageField {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let cell = grid.cell_at(k);
            match shape.shape {
                Shape::HalfPlane { hp } => geometry::cell_fraction(&hp, &cell),
                Shape::RotatedSquare { .. } => {
                    let h = cell.h;
                    (shape.shape.area_in_polygon(&cell.polygon()) / (h * h)).clamp(0.0, 1.0)
                }
                Shape::Disk { center, radius } => disk_cell_fraction(center, radius, &cell),
            }
        })
        .collect();
    CellAverageField { grid, values }
}

/// Adaptive quadtree estimate of `|T ∩ disk| / h²`.
///
/// Sub-squares are certified full or empty when the center's distance to the
/// circle exceeds the half diagonal. Uncertified leaves of side `δ` use the
/// tangent half-plane, whose area error is below `δ³/r`; `δ` is chosen so
/// that the summed error stays under `QUADTREE_TOL · h²`.
pub fn disk_cell_fraction(center: Point, radius: f64, cell: &Cell) -> f64 {
    let h = cell.h;
    let leaf = (QUADTREE_TOL * h * radius / 4.0).sqrt().min(h);
    let ll = cell.lower_left();
    let a = disk_quadtree(center, radius, ll.x, ll.y, h, leaf);
    (a / (h * h)).clamp(0.0, 1.0)
}

fn disk_quadtree(center: Point, r: f64, x0: f64, y0: f64, size: f64, leaf: f64) -> f64 {
    let half = 0.5 * size;
    let (mx, my) = (x0 + half, y0 + half);
    let (dx, dy) = (mx - center.x, my - center.y);
    let dist = dx.hypot(dy);
    let sd = dist - r;
    let half_diag = size * FRAC_1_SQRT_2 * (1.0 + 1e-12);
    if sd >= half_diag {
        return 0.0;
    }
    if sd <= -half_diag {
        return size * size;
    }
    if size <= leaf {
        let theta = if dist > 0.0 { (-dy).atan2(-dx) } else { 0.0 };
        let tangent = HalfPlane::new(theta, -r, center);
        return rect_halfplane_area(&tangent, x0, y0, x0 + size, y0 + size);
    }
    disk_quadtree(center, r, x0, y0, half, leaf)
        + disk_quadtree(center, r, mx, y0, half, leaf)
        + disk_quadtree(center, r, x0, my, half, leaf)
        + disk_quadtree(center, r, mx, my, half, leaf)
}

/// Exponent of an ℓᵖ norm on measurement vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormP {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormP {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormP::One => v.iter().map(|x| x.abs()).sum(),
            NormP::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormP::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// `p` as a number, `∞` for the max norm.
    pub fn exponent(self) -> f64 {
        match self {
            NormP::One => 1.0,
            NormP::Two => 2.0,
            NormP::Inf => f64::INFINITY,
        }
    }
}

impl std::str::FromStr for NormP {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormP::One),
            "2" => Ok(NormP::Two),
            "inf" | "Inf" | "INF" | "max" => Ok(NormP::Inf),
            _ => Err(Error::InvalidParameter(format!("unknown norm exponent {s:?}"))),
        }
    }
}

impl std::fmt::Display for NormP {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormP::One => "1",
            NormP::Two => "2",
            NormP::Inf => "inf",
        })
    }
}

/// Additive noise with prescribed ℓᵖ norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: NormP,
    pub eps: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { p: NormP::Inf, eps: 0.0, seed: 0 }
    }

    /// Draws iid uniform `[−1, 1]` entries and rescales to `‖η‖_p = eps`.
    pub fn sample(&self, len: usize) -> Vec<f64> {
        if self.eps == 0.0 || len == 0 {
            return vec![0.0; len];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut eta: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = self.p.norm(&eta);
        if norm > 0.0 {
            let scale = self.eps / norm;
            eta.iter_mut().for_each(|x| *x *= scale);
        }
        eta
    }
}

/// Returns `field + η` and `η`.
pub fn add_noise(field: &CellAverageField, model: &NoiseModel) -> (CellAverageField, Vec<f64>) {
    let eta = model.sample(field.values.len());
    let values = field.values.iter().zip(&eta).map(|(a, e)| a + e).collect();
    (CellAverageField { grid: field.grid, values }, eta)
}

/// Shape value on a cell when the signed distance certifies it constant.
fn certified_value(shape: &Shape, cell: &Cell) -> Option<f64> {
    let sd = shape.signed_distance(cell.center());
    let half_diag = cell.h * FRAC_1_SQRT_2 * (1.0 + 1e-12);
    if sd >= half_diag {
        Some(0.0)
    } else if sd <= -half_diag {
        Some(1.0)
    } else {
        None
    }
}

fn recon_constant_on(rec: &CellRecon, cell: &Cell) -> Option<f64> {
    match rec {
        CellRecon::Constant(v) => Some(*v),
        CellRecon::Interface(hp) => {
            let sd = hp.reanchored(cell.center()).c;
            let half_diag = cell.h * FRAC_1_SQRT_2 * (1.0 + 1e-12);
            if sd <= -half_diag {
                Some(1.0)
            } else if sd >= half_diag {
                Some(0.0)
            } else {
                None
            }
        }
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(q));
    }
    Ok(())
}

fn check_grid(recon: &Reconstruction) -> Result<()> {
    if recon.cells.len() != recon.grid.len() {
        return Err(Error::InvalidDimensions("reconstruction does not match its grid".into()));
    }
    Ok(())
}

/// `‖u − ũ‖_{L^q(D)}` by an `s × s` midpoint rule in every cell.
///
/// Cells where both `u` and `ũ` are certified constant are integrated exactly.
pub fn lq_error(shape: &ShapeSpec, recon: &Reconstruction, q: f64, subsamples: usize) -> Result<f64> {
    check_exponent(q)?;
    check_grid(recon)?;
    let s = subsamples.max(1);
    let grid = recon.grid;
    let h = grid.h();
    let sub = h / s as f64;
    let parts: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let cell = grid.cell_at(k);
            let rec = &recon.cells[k];
            if let (Some(u), Some(v)) = (certified_value(&shape.shape, &cell), recon_constant_on(rec, &cell)) {
                return (u - v).abs().powf(q) * h * h;
            }
            let ll = cell.lower_left();
            let mut acc = 0.0;
            for a in 0..s {
                for b in 0..s {
                    let p = Point::new(ll.x + (a as f64 + 0.5) * sub, ll.y + (b as f64 + 0.5) * sub);
                    let u = if shape.shape.contains(p) { 1.0 } else { 0.0 };
                    acc += (u - rec.value_at(p)).abs().powf(q);
                }
            }
            acc * sub * sub
        })
        .collect();
    Ok(parts.iter().sum::<f64>().powf(1.0 / q))
}

/// `‖u − ũ‖_{L^q(D)}` computed with exact cell geometry.
///
/// Constant cells contribute `|1−v|^q |T∩Ω| + |v|^q |T∖Ω|`; interface cells
/// contribute the area of `(T∩Ω) Δ (T∩H)`.
pub fn lq_error_exact(shape: &ShapeSpec, recon: &Reconstruction, q: f64) -> Result<f64> {
    check_exponent(q)?;
    check_grid(recon)?;
    let grid = recon.grid;
    let h = grid.h();
    let parts: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let cell = grid.cell_at(k);
            let rec = &recon.cells[k];
            if let (Some(u), Some(v)) = (certified_value(&shape.shape, &cell), recon_constant_on(rec, &cell)) {
                return (u - v).abs().powf(q) * h * h;
            }
            let poly = cell.polygon();
            let inside = shape.shape.area_in_polygon(&poly);
            match rec {
                CellRecon::Constant(v) => (1.0 - v).abs().powf(q) * inside + v.abs().powf(q) * (h * h - inside).max(0.0),
                CellRecon::Interface(hp) => {
                    let cut = clip(&poly, hp);
                    let both = shape.shape.area_in_polygon(&cut);
                    (inside + cut.area() - 2.0 * both).max(0.0)
                }
            }
        })
        .collect();
    Ok(parts.iter().sum::<f64>().powf(1.0 / q))
}
