//! Linear measurements in a finite-dimensional Hilbert space.
//!
//! The ambient space is `R^D` with the Euclidean inner product, so the Riesz
//! representers `ω_i` of the measurement functionals are the rows of
//! `meas` and `P_W` is the orthogonal projection onto their span.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this are treated as zero.
pub const SIGMA_MIN_TOL: f64 = 1e-12;

/// Reduced space `V_n` and measurement functionals on `R^D`.
#[derive(Clone, Debug)]
pub struct HilbertProblem {
    basis: DMatrix<f64>,
    meas: DMatrix<f64>,
    basis_onb: DMatrix<f64>,
    /// Orthonormal basis of `W`, `D × m`.
    w_onb: DMatrix<f64>,
    /// `R` factor with `meas^T = Q R`.
    w_r: DMatrix<f64>,
}

fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

fn largest_singular(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

impl HilbertProblem {
    /// `basis` is `D × n` (columns span `V_n`), `meas` is `m × D`.
    pub fn new(basis: DMatrix<f64>, meas: DMatrix<f64>) -> Result<Self> {
        let d = basis.nrows();
        if meas.ncols() != d {
            return Err(Error::InvalidDimensions(format!("basis has {d} rows but meas has {} columns", meas.ncols())));
        }
        if meas.nrows() == 0 || basis.ncols() == 0 {
            return Err(Error::InvalidDimensions("empty basis or measurement set".into()));
        }
        if meas.nrows() > d || basis.ncols() > d {
            return Err(Error::InvalidDimensions("more vectors than the ambient dimension".into()));
        }
        let rel = |m: &DMatrix<f64>| smallest_singular(m) / largest_singular(m).max(f64::MIN_POSITIVE);
        if rel(&meas) < SIGMA_MIN_TOL {
            return Err(Error::RankDeficient("measurement representers are linearly dependent"));
        }
        if rel(&basis) < SIGMA_MIN_TOL {
            return Err(Error::RankDeficient("reduced basis is linearly dependent"));
        }
        let basis_onb = basis.clone().qr().q();
        let qr = meas.transpose().qr();
        let w_onb = qr.q();
        let w_r = qr.r();
        Ok(Self { basis, meas, basis_onb, w_onb, w_r })
    }

    /// Gaussian random basis and measurements.
    pub fn random(d: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
        let basis = gauss(d, n);
        let meas = gauss(m, d);
        Self::new(basis, meas)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n(&self) -> usize {
        self.basis.ncols()
    }

    pub fn m(&self) -> usize {
        self.meas.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn meas(&self) -> &DMatrix<f64> {
        &self.meas
    }

    pub fn basis_onb(&self) -> &DMatrix<f64> {
        &self.basis_onb
    }

    pub fn w_onb(&self) -> &DMatrix<f64> {
        &self.w_onb
    }

    /// `ℓ(v) = meas · v`.
    pub fn measure(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.meas * v
    }

    pub fn project_w(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.w_onb * (self.w_onb.transpose() * v)
    }

    pub fn project_vn(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis_onb * (self.basis_onb.transpose() * v)
    }

    /// `e_n(u) = ‖u − P_{V_n} u‖`.
    pub fn approx_error(&self, u: &DVector<f64>) -> f64 {
        (u - self.project_vn(u)).norm()
    }

    /// `n × m` cross-Gramian between orthonormal bases of `V_n` and `W`.
    pub fn cross_gramian(&self) -> DMatrix<f64> {
        self.basis_onb.transpose() * &self.w_onb
    }

    /// Minimum-norm `v` with `meas · v = z`; it lies in `W`.
    pub fn min_norm_preimage(&self, z: &DVector<f64>) -> DVector<f64> {
        // meas = Rᵀ Qᵀ, so v = Q y with Rᵀ y = z
        let y = self.w_r.transpose().solve_lower_triangular(z).expect("R has a nonzero diagonal");
        &self.w_onb * y
    }
}

/// `μ(V_n, W) = 1 / σ_min` of the cross-Gramian.
pub fn mu_stability(problem: &HilbertProblem) -> Result<f64> {
    if problem.n() > problem.m() {
        return Err(Error::UnstableConfiguration { sigma_min: 0.0 });
    }
    let sigma_min = smallest_singular(&problem.cross_gramian());
    if sigma_min < SIGMA_MIN_TOL {
        return Err(Error::UnstableConfiguration { sigma_min });
    }
    Ok(1.0 / sigma_min)
}

/// `‖z‖_W = min{‖v‖ : meas · v = z}`.
pub fn riesz_norm(problem: &HilbertProblem, z: &DVector<f64>) -> f64 {
    problem.min_norm_preimage(z).norm()
}

/// `ũ = argmin_{v ∈ V_n} ‖P_W v − w‖` with `w` the minimum-norm preimage of `z`.
/// Returns `ũ` and the residual `‖P_W ũ − w‖`.
pub fn best_fit(problem: &HilbertProblem, z: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    mu_stability(problem)?;
    let w = problem.min_norm_preimage(z);
    let target = problem.w_onb.transpose() * &w;
    // P_W (Q_V a) = Q_W (Gᵀ a), so solve the m × n least squares ‖Gᵀ a − Q_Wᵀ w‖
    let gt = problem.cross_gramian().transpose();
    let svd = gt.clone().svd(true, true);
    let a = svd.solve(&target, SIGMA_MIN_TOL).map_err(|_| Error::RankDeficient("cross-Gramian"))?;
    let residual = (&gt * &a - target).norm();
    Ok((&problem.basis_onb * a, residual))
}

/// `u* = ũ + (w − P_W ũ)`: the best fit corrected to interpolate the data.
pub fn generalized_interpolation(problem: &HilbertProblem, z: &DVector<f64>) -> Result<DVector<f64>> {
    let (u_tilde, _) = best_fit(problem, z)?;
    let w = problem.min_norm_preimage(z);
    let correction = &w - problem.project_w(&u_tilde);
    Ok(u_tilde + correction)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormId {
    L2,
    Riesz,
}

/// Direct (`α`), noise (`β`) and inverse (`μ`) constants for a measurement norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTriplet {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub norm_id: NormId,
}

/// Exact constants for `Z ∈ {ℓ², Riesz}` with `ℓ²` noise (`p = 2`).
pub fn norm_constants(problem: &HilbertProblem, norm_id: NormId, p: f64) -> Result<NormTriplet> {
    if p != 2.0 {
        return Err(Error::InvalidParameter(format!("exact constants need p = 2, got {p}")));
    }
    let meas_min = smallest_singular(problem.meas());
    if meas_min < SIGMA_MIN_TOL {
        return Err(Error::RankDeficient("measurement matrix"));
    }
    match norm_id {
        NormId::L2 => {
            let reduced = problem.meas() * problem.basis_onb();
            let sigma = if problem.n() > problem.m() { 0.0 } else { smallest_singular(&reduced) };
            if sigma < SIGMA_MIN_TOL {
                return Err(Error::UnstableConfiguration { sigma_min: sigma });
            }
            Ok(NormTriplet { alpha: largest_singular(problem.meas()), beta: 1.0, mu: 1.0 / sigma, norm_id })
        }
        NormId::Riesz => Ok(NormTriplet { alpha: 1.0, beta: 1.0 / meas_min, mu: mu_stability(problem)?, norm_id }),
    }
}
