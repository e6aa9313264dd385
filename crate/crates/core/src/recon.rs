//! Reconstruction from cell averages.
//!
//! Two estimators are provided: the piecewise constant baseline, and the
//! stencil-wise nonlinear best fit over half-plane indicators. The latter
//! minimizes the misfit between the 3×3 block of measured averages and the
//! averages of a half-plane, in an ℓᵖ or center-weighted ℓ² norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{self, crosses_cell, rect_area_local, Cell, HalfPlane, Point};
use crate::measurements::{CellAverageField, Grid, NormP};

/// Central-cell weight of the consistency-corrected ℓ² variant.
pub const DEFAULT_CENTER_WEIGHT: f64 = 100.0;

/// Data misfit norm on the nine stencil averages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Lp { p: NormP },
    /// `sqrt(ω r₄² + Σ_{k≠4} r_k²)`.
    WeightedL2 { center_weight: f64 },
}

impl NormSpec {
    pub fn residual(&self, z: &[f64; 9], f: &[f64; 9]) -> f64 {
        match *self {
            NormSpec::Lp { p: NormP::One } => z.iter().zip(f).map(|(a, b)| (a - b).abs()).sum(),
            NormSpec::Lp { p: NormP::Two } => z.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            NormSpec::Lp { p: NormP::Inf } => z.iter().zip(f).fold(0.0, |m, (a, b)| m.max((a - b).abs())),
            NormSpec::WeightedL2 { center_weight } => {
                let mut s = 0.0;
                for k in 0..9 {
                    let r = z[k] - f[k];
                    s += if k == 4 { center_weight * r * r } else { r * r };
                }
                s.sqrt()
            }
        }
    }
}

/// Reconstruction methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Piecewise constant cell averages.
    Pc,
    /// Half-plane best fit in ℓ¹.
    L1,
    /// Half-plane best fit in ℓ².
    Li,
    /// Half-plane best fit in center-weighted ℓ².
    Licc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pc, Method::L1, Method::Li, Method::Licc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pc => "pc",
            Method::L1 => "l1",
            Method::Li => "li",
            Method::Licc => "licc",
        }
    }

    /// Misfit norm of a nonlinear method, `None` for `pc`.
    pub fn norm(self, center_weight: f64) -> Option<NormSpec> {
        match self {
            Method::Pc => None,
            Method::L1 => Some(NormSpec::Lp { p: NormP::One }),
            Method::Li => Some(NormSpec::Lp { p: NormP::Two }),
            Method::Licc => Some(NormSpec::WeightedL2 { center_weight }),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Ok(Method::Pc),
            "l1" => Ok(Method::L1),
            "li" => Ok(Method::Li),
            "licc" => Ok(Method::Licc),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A 3×3 block of averages around `center`, ordered `(i′, j′)` with `j′`
/// fastest; index 4 is the central cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilData {
    pub values: [f64; 9],
    pub h: f64,
    pub center: Point,
}

/// Recovered description of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellRecon {
    Constant(f64),
    Interface(HalfPlane),
}

impl CellRecon {
    pub fn value_at(&self, p: Point) -> f64 {
        match self {
            CellRecon::Constant(v) => *v,
            CellRecon::Interface(hp) => {
                if hp.contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Average of the reconstruction over `cell`.
    pub fn cell_average(&self, cell: &Cell) -> f64 {
        match self {
            CellRecon::Constant(v) => *v,
            CellRecon::Interface(hp) => geometry::cell_fraction(hp, cell),
        }
    }

    pub fn is_interface(&self) -> bool {
        matches!(self, CellRecon::Interface(_))
    }
}

/// Per-cell reconstruction on a grid, in [`Grid::index`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub grid: Grid,
    pub cells: Vec<CellRecon>,
}

impl Reconstruction {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, cells: vec![CellRecon::Constant(0.0); grid.len()] }
    }

    pub fn get(&self, i: usize, j: usize) -> &CellRecon {
        &self.cells[self.grid.index(i, j)]
    }

    pub fn value_at(&self, p: Point) -> f64 {
        let l = self.grid.cells_per_side();
        let to_idx = |x: f64| ((x * l as f64).floor().max(0.0) as usize).min(l - 1) + 1;
        self.get(to_idx(p.x), to_idx(p.y)).value_at(p)
    }

    pub fn interface_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_interface()).count()
    }
}

/// `ũ|_T = a_T`, clamped to `[0, 1]`.
pub fn piecewise_constant(field: &CellAverageField) -> Reconstruction {
    let cells = field.values.iter().map(|v| CellRecon::Constant(v.clamp(0.0, 1.0))).collect();
    Reconstruction { grid: field.grid, cells }
}

/// Offset of the lower-left corner of stencil cell `(a, b)` relative to the center.
fn stencil_corner(a: usize, b: usize, h: f64) -> (f64, f64) {
    ((a as f64 - 1.5) * h, (b as f64 - 1.5) * h)
}

/// Exact averages of `hp` on the 3×3 stencil of side-`h` cells around `center`.
pub fn stencil_averages(hp: &HalfPlane, h: f64, center: Point) -> [f64; 9] {
    let local = hp.reanchored(center);
    let (s, c) = local.theta.sin_cos();
    local_averages(c, s, local.c, h)
}

fn local_averages(cos: f64, sin: f64, offset: f64, h: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    let cell = h * h;
    for a in 0..3 {
        for b in 0..3 {
            let (x0, y0) = stencil_corner(a, b, h);
            let off = cos * x0 + sin * y0 - offset;
            out[3 * a + b] = (rect_area_local(cos, sin, off, h, h) / cell).clamp(0.0, 1.0);
        }
    }
    out
}

/// Search parameters of the stencil optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Uniform angles in the coarse sweep.
    pub theta_samples: usize,
    /// Offsets sampled per angle before golden-section refinement.
    pub offset_samples: usize,
    /// Local minima of the sweep that are refined.
    pub refine_candidates: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { theta_samples: 256, offset_samples: 24, refine_candidates: 3 }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum on `[lo, hi]`; returns the best point seen.
fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f2 < f1 { (x2, f2) } else { (x1, f1) };
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        iters += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

struct StencilObjective<'a> {
    z: &'a [f64; 9],
    h: f64,
    norm: NormSpec,
}

impl StencilObjective<'_> {
    fn eval(&self, theta: f64, c: f64) -> f64 {
        let (s, co) = theta.sin_cos();
        self.eval_cs(co, s, c)
    }

    fn eval_cs(&self, cos: f64, sin: f64, c: f64) -> f64 {
        self.norm.residual(self.z, &local_averages(cos, sin, c, self.h))
    }

    /// Largest offset whose line still meets the stencil.
    fn c_max(&self, theta: f64) -> f64 {
        1.5 * self.h * (theta.cos().abs() + theta.sin().abs())
    }

    /// Minimizes over `c` for fixed `θ`: uniform sampling, then golden section
    /// in the bracket around the best sample.
    fn best_offset(&self, theta: f64, samples: usize, tol: f64) -> (f64, f64) {
        let (s, co) = theta.sin_cos();
        let cm = self.c_max(theta);
        let n = samples.max(3);
        let step = 2.0 * cm / (n - 1) as f64;
        let mut best = (0.0f64, f64::INFINITY);
        let mut best_k = 0;
        for k in 0..n {
            let c = -cm + k as f64 * step;
            let r = self.eval_cs(co, s, c);
            if r < best.1 || (r == best.1 && c.abs() < best.0.abs()) {
                best = (c, r);
                best_k = k;
            }
        }
        let lo = -cm + best_k.saturating_sub(1) as f64 * step;
        let hi = (-cm + (best_k + 1) as f64 * step).min(cm);
        let g = golden_section(lo, hi, tol, &mut |c| self.eval_cs(co, s, c));
        if g.1 < best.1 {
            g
        } else {
            best
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct PlaneCandidate {
    theta: f64,
    c: f64,
    residual: f64,
}

impl PlaneCandidate {
    /// Lower residual first, then smaller |c|, then smaller θ.
    fn better_than(&self, o: &PlaneCandidate) -> bool {
        if self.residual != o.residual {
            return self.residual < o.residual;
        }
        if self.c.abs() != o.c.abs() {
            return self.c.abs() < o.c.abs();
        }
        self.theta < o.theta
    }
}

fn refine(obj: &StencilObjective<'_>, start: PlaneCandidate, width: f64, opts: &FitOptions) -> PlaneCandidate {
    let h = obj.h;
    let fine = 1e-13 * h;
    // profile search over θ with c minimized inside
    let mut best = start;
    let (t, r) = golden_section(start.theta - width, start.theta + width, 1e-11, &mut |theta| {
        obj.best_offset(theta, opts.offset_samples, fine).1
    });
    if r < best.residual {
        let (c, r) = obj.best_offset(t, opts.offset_samples, fine);
        best = PlaneCandidate { theta: t, c, residual: r };
    }
    compass_polish(obj, best)
}

/// Compass search in `(θ, c)` with shrinking steps, down to `1e-12·h`.
fn compass_polish(obj: &StencilObjective<'_>, start: PlaneCandidate) -> PlaneCandidate {
    let h = obj.h;
    let mut cur = start;
    let mut step_t = 1e-5;
    let mut step_c = 1e-5 * h;
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let mut iters = 0;
    while step_c > 1e-12 * h && iters < 4000 {
        iters += 1;
        let mut moved = false;
        for (dt, dc) in dirs {
            let theta = cur.theta + dt * step_t;
            let c = cur.c + dc * step_c;
            if c.abs() > obj.c_max(theta) {
                continue;
            }
            let r = obj.eval(theta, c);
            if r < cur.residual {
                cur = PlaneCandidate { theta, c, residual: r };
                moved = true;
                break;
            }
        }
        if !moved {
            step_t *= 0.5;
            step_c *= 0.5;
        }
    }
    cur
}

/// Best fit of the stencil data over half-planes crossing the stencil and the
/// two constants, with the default search parameters.
pub fn fit_stencil(z: &StencilData, norm: NormSpec) -> (CellRecon, f64) {
    fit_stencil_with(z, norm, &FitOptions::default())
}

pub fn fit_stencil_with(z: &StencilData, norm: NormSpec, opts: &FitOptions) -> (CellRecon, f64) {
    let zero = norm.residual(&z.values, &[0.0; 9]);
    let one = norm.residual(&z.values, &[1.0; 9]);
    let constant = if one < zero { (CellRecon::Constant(1.0), one) } else { (CellRecon::Constant(0.0), zero) };

    let (lo, hi) = z.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi - lo < 1e-12 {
        let v = z.values[4].round().clamp(0.0, 1.0);
        return (CellRecon::Constant(v), norm.residual(&z.values, &[v; 9]));
    }
    if constant.1 == 0.0 {
        return constant;
    }

    let obj = StencilObjective { z: &z.values, h: z.h, norm };
    let n = opts.theta_samples.max(4);
    let dtheta = TAU / n as f64;
    let coarse_tol = 1e-4 * z.h;
    let sweep: Vec<PlaneCandidate> = (0..n)
        .map(|k| {
            let theta = k as f64 * dtheta;
            let (c, residual) = obj.best_offset(theta, opts.offset_samples, coarse_tol);
            PlaneCandidate { theta, c, residual }
        })
        .collect();

    // local minima of the circular sweep, best first
    let mut minima: Vec<PlaneCandidate> = (0..n)
        .filter(|&k| {
            let r = sweep[k].residual;
            r <= sweep[(k + n - 1) % n].residual && r <= sweep[(k + 1) % n].residual
        })
        .map(|k| sweep[k])
        .collect();
    minima.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(a.theta.total_cmp(&b.theta)));
    minima.truncate(opts.refine_candidates.max(1));

    let mut best: Option<PlaneCandidate> = None;
    for cand in minima {
        let refined = refine(&obj, cand, dtheta, opts);
        let refined = PlaneCandidate { theta: geometry::normalize_angle(refined.theta), ..refined };
        if best.is_none_or(|b| refined.better_than(&b)) {
            best = Some(refined);
        }
    }
    match best {
        Some(b) if b.residual < constant.1 => (CellRecon::Interface(HalfPlane::new(b.theta, b.c, z.center)), b.residual),
        _ => constant,
    }
}

/// Options of the global reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconOptions {
    pub center_weight: f64,
    pub fit: FitOptions,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self { center_weight: DEFAULT_CENTER_WEIGHT, fit: FitOptions::default() }
    }
}

pub fn reconstruct(field: &CellAverageField, method: Method) -> Result<Reconstruction> {
    reconstruct_with(field, method, &ReconOptions::default())
}

/// Global reconstruction: stencil fits on inner cells, zero on boundary cells.
///
/// A fitted half-plane that misses the central cell is stored as the constant
/// obtained by rounding its central-cell fraction.
pub fn reconstruct_with(field: &CellAverageField, method: Method, opts: &ReconOptions) -> Result<Reconstruction> {
    let grid = field.grid;
    let l = grid.cells_per_side();
    if l < 3 {
        return Err(Error::GridTooSmall(l));
    }
    let Some(norm) = method.norm(opts.center_weight) else {
        return Ok(piecewise_constant(field));
    };
    let h = grid.h();
    let cells = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let cell = grid.cell_at(k);
            if grid.is_boundary(cell.i, cell.j) {
                return CellRecon::Constant(0.0);
            }
            let data = StencilData { values: field.stencil(cell.i, cell.j), h, center: cell.center() };
            match fit_stencil_with(&data, norm, &opts.fit).0 {
                CellRecon::Interface(hp) if !crosses_cell(&hp, &cell) => {
                    CellRecon::Constant(geometry::cell_fraction(&hp, &cell).round())
                }
                other => other,
            }
        })
        .collect();
    Ok(Reconstruction { grid, cells })
}
