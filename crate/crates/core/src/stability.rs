//! Empirical stability constants of half-plane indicators on a 3×3 stencil.
//!
//! The direct constant is `‖ℓ(w)‖₁ ≤ h⁻² ‖w‖_{L¹(S)}`; the inverse constant
//! is `‖w‖_{L¹(S)} ≤ C₀ h² ‖ℓ(w)‖₁` for `w = u − v` with both boundaries
//! crossing the central cell. Both are sampled with exact geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{cell_fraction, sym_diff_area, Cell, HalfPlane, Point};

/// Pairs whose symmetric difference is below this (relative to `h²`) are rejected.
const DEGENERATE_TOL: f64 = 1e-14;

/// Stencil cells `(1..=3) × (1..=3)` of side `h`, central cell `(2, 2)`.
fn stencil_cells(h: f64) -> impl Iterator<Item = Cell> {
    (1..=3).flat_map(move |i| (1..=3).map(move |j| Cell::new(i, j, h)))
}

/// Center of the central stencil cell, used as anchor for all half-planes.
pub fn stencil_center(h: f64) -> Point {
    Point::new(1.5 * h, 1.5 * h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySample {
    pub pair: (HalfPlane, HalfPlane),
    /// `‖w‖_{L¹(S)}`.
    pub l1_volume: f64,
    /// `‖ℓ(w)‖₁`.
    pub l1_meas: f64,
    /// `l1_volume / (h² l1_meas)`.
    pub ratio: f64,
    /// `h² l1_meas / l1_volume`, the direct-stability direction.
    pub alpha_ratio: f64,
}

/// Draws two half-planes whose boundaries cross the central cell.
pub fn sample_pair<R: Rng + ?Sized>(h: f64, rng: &mut R) -> (HalfPlane, HalfPlane) {
    let anchor = stencil_center(h);
    let mut draw = || {
        let theta = rng.random_range(0.0..TAU);
        let bound = 0.5 * h * (theta.cos().abs() + theta.sin().abs());
        let c = rng.random_range(-bound..=bound);
        HalfPlane::new(theta, c, anchor)
    };
    let a = draw();
    let b = draw();
    (a, b)
}

/// Exact stability ratios of a pair on the stencil of side-`h` cells.
///
/// Areas are computed on the rescaled stencil of unit cells, where the ratio
/// is unchanged and the rounding does not depend on `h`.
pub fn ratio(a: &HalfPlane, b: &HalfPlane, h: f64) -> Result<StabilitySample> {
    let center = stencil_center(h);
    let unit = |p: &HalfPlane| HalfPlane::new(p.theta, p.reanchored(center).c / h, stencil_center(1.0));
    let (ua, ub) = (unit(a), unit(b));
    let mut volume = 0.0;
    let mut l1_meas = 0.0;
    for cell in stencil_cells(1.0) {
        volume += sym_diff_area(&ua, &ub, &cell.polygon());
        l1_meas += (cell_fraction(&ua, &cell) - cell_fraction(&ub, &cell)).abs();
    }
    if volume <= DEGENERATE_TOL || l1_meas == 0.0 {
        return Err(Error::DegeneratePair);
    }
    Ok(StabilitySample {
        pair: (*a, *b),
        l1_volume: volume * h * h,
        l1_meas,
        ratio: volume / l1_meas,
        alpha_ratio: l1_meas / volume,
    })
}

/// The pair attaining `3/2`: indicators above and below the horizontal line
/// through the central cell's center.
pub fn canonical_pair(h: f64) -> (HalfPlane, HalfPlane) {
    let anchor = stencil_center(h);
    (HalfPlane::new(PI / 2.0, 0.0, anchor), HalfPlane::new(1.5 * PI, 0.0, anchor))
}

/// Two parallel vertical lines `delta` apart, both crossing the central cell.
pub fn parallel_strip_pair(h: f64, delta: f64) -> (HalfPlane, HalfPlane) {
    let anchor = stencil_center(h);
    (HalfPlane::new(0.0, -0.5 * delta, anchor), HalfPlane::new(0.0, 0.5 * delta, anchor))
}

/// Running extremes over a set of sampled pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    /// Maximum of `ratio`.
    pub c0_hat: f64,
    pub argmax: StabilitySample,
    /// Maximum of `alpha_ratio`.
    pub alpha_max: f64,
    /// Pairs evaluated, including the injected canonical pair.
    pub evaluated: usize,
    /// Degenerate draws that were resampled.
    pub resampled: usize,
}

/// Samples `samples` random pairs (plus the canonical pair) and returns the
/// extremes of both ratios.
pub fn estimate(samples: usize, h: f64, seed: u64) -> StabilityEstimate {
    let (a, b) = canonical_pair(h);
    let canon = ratio(&a, &b, h).expect("canonical pair is not degenerate");
    let mut est = StabilityEstimate { c0_hat: canon.ratio, argmax: canon, alpha_max: canon.alpha_ratio, evaluated: 1, resampled: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < samples {
        let (a, b) = sample_pair(h, &mut rng);
        match ratio(&a, &b, h) {
            Ok(s) => {
                done += 1;
                est.evaluated += 1;
                if s.ratio > est.c0_hat {
                    est.c0_hat = s.ratio;
                    est.argmax = s;
                }
                est.alpha_max = est.alpha_max.max(s.alpha_ratio);
            }
            Err(_) => est.resampled += 1,
        }
    }
    est
}

/// Maximum inverse-stability ratio over sampled pairs, canonical pair included.
pub fn estimate_c0(samples: usize, h: f64, seed: u64) -> (f64, StabilitySample) {
    let est = estimate(samples, h, seed);
    (est.c0_hat, est.argmax)
}

/// Maximum of `h² ‖ℓ(w)‖₁ / ‖w‖_{L¹(S)}` over sampled pairs; at most 1.
pub fn verify_alpha(samples: usize, h: f64, seed: u64) -> f64 {
    estimate(samples, h, seed).alpha_max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pair_values() {
        let h = 0.125;
        let (a, b) = canonical_pair(h);
        let s = ratio(&a, &b, h).unwrap();
        assert!((s.l1_volume - 9.0 * h * h).abs() < 1e-15);
        assert!((s.l1_meas - 6.0).abs() < 1e-14);
        assert_eq!(s.ratio, 1.5);
        assert!((s.alpha_ratio - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn strip_pair_ratio_is_one() {
        let h = 0.2;
        let delta = 0.3 * h;
        let (a, b) = parallel_strip_pair(h, delta);
        let s = ratio(&a, &b, h).unwrap();
        assert!((s.l1_volume - 3.0 * h * delta).abs() < 1e-15);
        assert!((s.l1_meas - 3.0 * delta / h).abs() < 1e-13);
        assert!((s.ratio - 1.0).abs() < 1e-12);
        assert!((s.alpha_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_rejected() {
        let h = 0.1;
        let a = HalfPlane::new(0.4, 0.01, stencil_center(h));
        assert_eq!(ratio(&a, &a, h), Err(Error::DegeneratePair));
    }

    #[test]
    fn no_samples_gives_canonical() {
        let (c0, arg) = estimate_c0(0, 0.1, 1);
        assert_eq!(c0, 1.5);
        assert_eq!(arg.pair, canonical_pair(0.1));
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(sample_pair(0.1, &mut r1), sample_pair(0.1, &mut r2));
    }
}
