//! Exact planar geometry for half-plane indicators against axis-aligned cells.
//!
//! Every area in this module is computed by clipping a convex polygon with
//! half-planes and summing the shoelace formula, so results are exact up to
//! floating point rounding. The one curved primitive, [`disk_polygon_area`],
//! is also closed form.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Vertices closer than this (relative to the coordinate scale) are merged.
const MERGE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn dot(a: Point, b: Point) -> f64 {
    a.x * b.x + a.y * b.y
}

/// The closed half-plane `{x : n·(x − anchor) ≥ c}` with `n = (cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub theta: f64,
    pub c: f64,
    pub anchor: Point,
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl HalfPlane {
    pub fn new(theta: f64, c: f64, anchor: Point) -> Self {
        Self { theta: normalize_angle(theta), c, anchor }
    }

    /// Unit normal pointing into the half-plane.
    pub fn normal(&self) -> Point {
        let (s, c) = self.theta.sin_cos();
        Point::new(c, s)
    }

    /// `n·(p − anchor) − c`; nonnegative exactly on the half-plane.
    pub fn signed_distance(&self, p: Point) -> f64 {
        dot(self.normal(), p.sub(self.anchor)) - self.c
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) >= 0.0
    }

    /// The opposite closed half-plane (θ + π, −c). The two share their boundary line.
    pub fn complement(&self) -> HalfPlane {
        HalfPlane::new(self.theta + PI, -self.c, self.anchor)
    }

    /// Same half-plane, with the offset expressed relative to `anchor`.
    pub fn reanchored(&self, anchor: Point) -> HalfPlane {
        let shift = dot(self.normal(), anchor.sub(self.anchor));
        HalfPlane { theta: self.theta, c: self.c - shift, anchor }
    }
}

/// Counter-clockwise convex polygon. Zero vertices is the empty polygon.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Builds a polygon from CCW vertices. Orientation and convexity are
    /// checked in debug builds only.
    pub fn new(vertices: Vec<Point>) -> Self {
        let poly = Self { vertices: dedup_ring(vertices) };
        debug_assert!(poly.is_convex_ccw(), "polygon must be convex and counter-clockwise");
        poly
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    pub fn rect(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            vertices: vec![
                Point::new(xmin, ymin),
                Point::new(xmax, ymin),
                Point::new(xmax, ymax),
                Point::new(xmin, ymax),
            ],
        }
    }

    pub fn unit_square() -> Self {
        Self::rect(0.0, 0.0, 1.0, 1.0)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices).max(0.0)
    }

    pub fn clip(&self, hp: &HalfPlane) -> ConvexPolygon {
        clip(self, hp)
    }

    fn is_convex_ccw(&self) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            return true;
        }
        let scale = v.iter().fold(0.0f64, |s, p| s.max(p.x.abs()).max(p.y.abs())).max(1.0);
        let tol = 1e-12 * scale * scale;
        (0..v.len()).all(|k| {
            let a = v[k];
            let b = v[(k + 1) % v.len()];
            let c = v[(k + 2) % v.len()];
            cross(b.sub(a), c.sub(b)) >= -tol
        })
    }
}

fn shoelace(v: &[Point]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..v.len() {
        let p = v[k];
        let q = v[(k + 1) % v.len()];
        s += (q.x + p.x) * (q.y - p.y);
    }
    0.5 * s
}

fn close(a: Point, b: Point, tol: f64) -> bool {
    (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
}

fn dedup_ring(mut v: Vec<Point>) -> Vec<Point> {
    if v.is_empty() {
        return v;
    }
    let scale = v.iter().fold(0.0f64, |s, p| s.max(p.x.abs()).max(p.y.abs())).max(1.0);
    let tol = MERGE_TOL * scale;
    v.dedup_by(|b, a| close(*a, *b, tol));
    while v.len() > 1 && close(v[0], v[v.len() - 1], tol) {
        v.pop();
    }
    if v.len() < 3 {
        v.clear();
    }
    v
}

/// Intersection of a convex polygon with a closed half-plane.
pub fn clip(poly: &ConvexPolygon, hp: &HalfPlane) -> ConvexPolygon {
    let v = &poly.vertices;
    if v.len() < 3 {
        return ConvexPolygon::empty();
    }
    let mut out = Vec::with_capacity(v.len() + 1);
    let dist: Vec<f64> = v.iter().map(|p| hp.signed_distance(*p)).collect();
    for k in 0..v.len() {
        let (p, q) = (v[k], v[(k + 1) % v.len()]);
        let (dp, dq) = (dist[k], dist[(k + 1) % v.len()]);
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp >= 0.0) != (dq >= 0.0) {
            out.push(p.lerp(q, dp / (dp - dq)));
        }
    }
    ConvexPolygon { vertices: dedup_ring(out) }
}

pub fn area(poly: &ConvexPolygon) -> f64 {
    poly.area()
}

/// Area of `[xmin, xmax] × [ymin, ymax] ∩ hp` without heap allocation.
///
/// Same Sutherland–Hodgman pass as [`clip`], specialised to a rectangle.
pub fn rect_halfplane_area(hp: &HalfPlane, xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> f64 {
    let (s, c) = hp.theta.sin_cos();
    let off = c * (xmin - hp.anchor.x) + s * (ymin - hp.anchor.y) - hp.c;
    rect_area_local(c, s, off, xmax - xmin, ymax - ymin)
}

/// Area of `[0, w] × [0, hgt] ∩ {cos·x + sin·y + off ≥ 0}`.
///
/// `off` is the signed distance of the lower-left corner; working in local
/// coordinates keeps the shoelace sum well conditioned for small cells.
pub(crate) fn rect_area_local(cos: f64, sin: f64, off: f64, w: f64, hgt: f64) -> f64 {
    let corners = [Point::new(0.0, 0.0), Point::new(w, 0.0), Point::new(w, hgt), Point::new(0.0, hgt)];
    let mut dist = [0.0; 4];
    let mut inside = 0;
    for (d, p) in dist.iter_mut().zip(corners.iter()) {
        *d = off + cos * p.x + sin * p.y;
        if *d >= 0.0 {
            inside += 1;
        }
    }
    let full = w * hgt;
    match inside {
        0 => return 0.0,
        4 => return full,
        _ => {}
    }
    let mut out = [Point::default(); 6];
    let mut n = 0;
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        let (dp, dq) = (dist[k], dist[(k + 1) % 4]);
        if dp >= 0.0 {
            out[n] = p;
            n += 1;
        }
        if (dp >= 0.0) != (dq >= 0.0) {
            out[n] = p.lerp(q, dp / (dp - dq));
            n += 1;
        }
    }
    shoelace(&out[..n]).clamp(0.0, full)
}

/// The part of the boundary line of `hp` inside the closed cell, if any.
pub fn line_cell_segment(hp: &HalfPlane, cell: &Cell) -> Option<(Point, Point)> {
    let (x0, y0, x1, y1) = cell.bounds();
    let n = hp.normal();
    // a point on the line and its direction
    let base = Point::new(hp.anchor.x + hp.c * n.x, hp.anchor.y + hp.c * n.y);
    let dir = Point::new(-n.y, n.x);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (b, d, min, max) in [(base.x, dir.x, x0, x1), (base.y, dir.y, y0, y1)] {
        if d.abs() < 1e-300 {
            if b < min || b > max {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((min - b) / d, (max - b) / d);
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    }
    if lo > hi {
        return None;
    }
    let at = |t: f64| Point::new(base.x + t * dir.x, base.y + t * dir.y);
    Some((at(lo), at(hi)))
}

/// Grid cell `T_{i,j} = [(i−1)h, ih] × [(j−1)h, jh]`, 1-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
    pub h: f64,
}

impl Cell {
    pub fn new(i: usize, j: usize, h: f64) -> Self {
        debug_assert!(i >= 1 && j >= 1);
        Self { i, j, h }
    }

    pub fn lower_left(&self) -> Point {
        Point::new((self.i as f64 - 1.0) * self.h, (self.j as f64 - 1.0) * self.h)
    }

    pub fn center(&self) -> Point {
        Point::new((self.i as f64 - 0.5) * self.h, (self.j as f64 - 0.5) * self.h)
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let ll = self.lower_left();
        (ll.x, ll.y, self.i as f64 * self.h, self.j as f64 * self.h)
    }

    pub fn polygon(&self) -> ConvexPolygon {
        let (x0, y0, x1, y1) = self.bounds();
        ConvexPolygon::rect(x0, y0, x1, y1)
    }
}

/// `|cell ∩ hp| / h²`.
pub fn cell_fraction(hp: &HalfPlane, cell: &Cell) -> f64 {
    let (x0, y0, x1, y1) = cell.bounds();
    square_fraction(hp, x0, y0, x1, y1)
}

pub(crate) fn square_fraction(hp: &HalfPlane, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let full = (x1 - x0) * (y1 - y0);
    (rect_halfplane_area(hp, x0, y0, x1, y1) / full).clamp(0.0, 1.0)
}

/// `∫_region |χ_a − χ_b|`, i.e. the area of the symmetric difference inside `region`.
pub fn sym_diff_area(a: &HalfPlane, b: &HalfPlane, region: &ConvexPolygon) -> f64 {
    let a_not_b = clip(&clip(region, a), &b.complement()).area();
    let b_not_a = clip(&clip(region, b), &a.complement()).area();
    a_not_b + b_not_a
}

/// Whether the boundary line of `hp` meets the closed cell.
///
/// Re-anchors the offset at the cell center and compares against
/// `(h/2)(|cos θ| + |sin θ|)`; tangent lines count as crossing.
pub fn crosses_cell(hp: &HalfPlane, cell: &Cell) -> bool {
    let local = hp.reanchored(cell.center());
    let bound = 0.5 * cell.h * (local.theta.cos().abs() + local.theta.sin().abs());
    local.c.abs() <= bound * (1.0 + 1e-12) + MERGE_TOL * cell.h
}

/// Exact area of `disk(center, r) ∩ poly`.
///
/// Sums, over the polygon edges, the signed area of the disk intersected with
/// the triangle (center, p, q).
pub fn disk_polygon_area(center: Point, r: f64, poly: &ConvexPolygon) -> f64 {
    let v = poly.vertices();
    if v.len() < 3 || r <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 0..v.len() {
        let p = v[k].sub(center);
        let q = v[(k + 1) % v.len()].sub(center);
        total += disk_triangle_area(p, q, r);
    }
    total.max(0.0)
}

/// Signed area of `disk(0, r) ∩ triangle(0, p, q)`.
fn disk_triangle_area(p: Point, q: Point, r: f64) -> f64 {
    let d = q.sub(p);
    let a = dot(d, d);
    if a == 0.0 {
        return 0.0;
    }
    // |p + t d|² = r²
    let b = dot(p, d);
    let c = dot(p, p) - r * r;
    let disc = b * b - a * c;
    let mut cuts = [0.0, 1.0, 1.0, 1.0];
    let mut n = 1;
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-b - sq) / a, (-b + sq) / a] {
            if t > 0.0 && t < 1.0 {
                cuts[n] = t;
                n += 1;
            }
        }
    }
    cuts[n] = 1.0;
    let r2 = r * r;
    let mut s = 0.0;
    for k in 0..n {
        let (t0, t1) = (cuts[k], cuts[k + 1]);
        if t1 <= t0 {
            continue;
        }
        let u = p.lerp(q, t0);
        let w = p.lerp(q, t1);
        let mid = p.lerp(q, 0.5 * (t0 + t1));
        if dot(mid, mid) <= r2 {
            s += 0.5 * cross(u, w);
        } else {
            s += 0.5 * r2 * cross(u, w).atan2(dot(u, w));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cell() -> Cell {
        Cell::new(1, 1, 1.0)
    }

    #[test]
    fn clip_identity_and_disjoint() {
        let sq = ConvexPolygon::unit_square();
        let all = HalfPlane::new(0.0, -5.0, Point::new(0.5, 0.5));
        assert_eq!(clip(&sq, &all).area(), 1.0);
        let none = HalfPlane::new(0.0, 5.0, Point::new(0.5, 0.5));
        let out = clip(&sq, &none);
        assert!(out.is_empty());
        assert_eq!(out.vertices().len(), 0);
        assert_eq!(area(&out), 0.0);
    }

    #[test]
    fn clip_top_strip() {
        let sq = ConvexPolygon::unit_square();
        let hp = HalfPlane::new(PI / 2.0, 0.25, Point::new(0.5, 0.5));
        let out = clip(&sq, &hp);
        assert!((out.area() - 0.25).abs() < 1e-15);
        for v in out.vertices() {
            assert!(v.y >= 0.75 - 1e-15);
        }
    }

    #[test]
    fn shoelace_basic() {
        assert_eq!(ConvexPolygon::unit_square().area(), 1.0);
        let tri = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        assert_eq!(tri.area(), 0.5);
        assert_eq!(ConvexPolygon::empty().area(), 0.0);
    }

    #[test]
    fn theta_is_normalized() {
        let hp = HalfPlane::new(-PI / 2.0, 0.0, Point::default());
        assert!((hp.theta - 1.5 * PI).abs() < 1e-15);
        let hp = HalfPlane::new(7.0 * PI, 0.0, Point::default());
        assert!(hp.theta >= 0.0 && hp.theta < TAU);
        assert_eq!(normalize_angle(-1e-300), 0.0);
    }

    #[test]
    fn fraction_through_center_is_half() {
        let cell = Cell::new(3, 5, 0.1);
        for k in 0..37 {
            let hp = HalfPlane::new(k as f64 * 0.17, 0.0, cell.center());
            assert!((cell_fraction(&hp, &cell) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn fraction_diagonal_through_corner() {
        let cell = unit_cell();
        // line x + y = 1 through the corners (1,0) and (0,1)
        let hp = HalfPlane::new(PI / 4.0, 0.0, Point::new(1.0, 0.0));
        assert!((cell_fraction(&hp, &cell) - 0.5).abs() < 1e-15);
        // through the (0,0) corner the cell lies entirely on the positive side
        let touch = HalfPlane::new(PI / 4.0, 0.0, Point::new(0.0, 0.0));
        assert_eq!(cell_fraction(&touch, &cell), 1.0);
    }

    #[test]
    fn sym_diff_examples() {
        let region = ConvexPolygon::rect(0.0, 0.0, 3.0, 3.0);
        let a = HalfPlane::new(0.3, 0.1, Point::new(1.5, 1.5));
        assert_eq!(sym_diff_area(&a, &a, &region), 0.0);

        let up = HalfPlane::new(PI / 2.0, 0.0, Point::new(1.5, 1.5));
        let down = HalfPlane::new(1.5 * PI, 0.0, Point::new(1.5, 1.5));
        assert!((sym_diff_area(&up, &down, &region) - 9.0).abs() < 1e-14);

        let h = 0.25;
        let stencil = ConvexPolygon::rect(0.0, 0.0, 3.0 * h, 3.0 * h);
        let x0 = 1.2 * h;
        let delta = 0.3 * h;
        let a = HalfPlane::new(0.0, x0, Point::default());
        let b = HalfPlane::new(0.0, x0 + delta, Point::default());
        assert!((sym_diff_area(&a, &b, &stencil) - 3.0 * h * delta).abs() < 1e-15);
    }

    #[test]
    fn crossing_predicate() {
        let cell = Cell::new(4, 4, 0.125);
        let c = cell.center();
        assert!(crosses_cell(&HalfPlane::new(PI / 2.0, 0.0, c), &cell));
        assert!(!crosses_cell(&HalfPlane::new(PI / 2.0, 2.0 * cell.h, c), &cell));
        let touch = HalfPlane::new(PI / 4.0, 0.5 * cell.h * 2f64.sqrt(), c);
        assert!(crosses_cell(&touch, &cell));
        let miss = HalfPlane::new(PI / 4.0, 0.5 * cell.h * 2f64.sqrt() * (1.0 + 1e-9), c);
        assert!(!crosses_cell(&miss, &cell));
        // offset anchor far away must re-anchor correctly
        let far = HalfPlane::new(0.0, c.x - 10.0, Point::new(10.0, -3.0));
        assert!(crosses_cell(&far.reanchored(Point::new(10.0, -3.0)), &cell));
        assert!(crosses_cell(&HalfPlane::new(0.0, c.x, Point::default()), &cell));
    }

    #[test]
    fn disk_area_sanity() {
        let big = ConvexPolygon::rect(-2.0, -2.0, 2.0, 2.0);
        let a = disk_polygon_area(Point::new(0.1, -0.2), 0.5, &big);
        assert!((a - PI * 0.25).abs() < 1e-14);
        // quarter disk
        let q = ConvexPolygon::rect(0.0, 0.0, 2.0, 2.0);
        assert!((disk_polygon_area(Point::default(), 1.0, &q) - PI / 4.0).abs() < 1e-14);
        // square inside the disk
        let small = ConvexPolygon::rect(-0.1, -0.1, 0.1, 0.1);
        assert!((disk_polygon_area(Point::default(), 1.0, &small) - 0.04).abs() < 1e-15);
        // disjoint
        let far = ConvexPolygon::rect(3.0, 3.0, 4.0, 4.0);
        assert_eq!(disk_polygon_area(Point::default(), 1.0, &far), 0.0);
    }

    #[test]
    fn rect_fast_path_matches_clip() {
        let cell = Cell::new(2, 3, 0.3);
        for k in 0..200 {
            let hp = HalfPlane::new(k as f64 * 0.031, (k as f64 * 0.013).sin() * 0.3, Point::new(0.4, 0.7));
            let slow = clip(&cell.polygon(), &hp).area();
            let (x0, y0, x1, y1) = cell.bounds();
            let fast = rect_halfplane_area(&hp, x0, y0, x1, y1);
            assert!((slow - fast).abs() < 1e-15, "{slow} vs {fast}");
        }
    }
}
