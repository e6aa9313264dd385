use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use shaperec::pbdw::{best_fit, generalized_interpolation, mu_stability, norm_constants, riesz_norm, HilbertProblem, NormId};

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// `P_W v` through the normal equations of the representers.
fn project_w_normal(meas: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let gram = meas * meas.transpose();
    let y = gram.cholesky().unwrap().solve(&(meas * v));
    meas.transpose() * y
}

#[test]
fn mu_dominates_sampled_ratios_and_is_attained() {
    let p = HilbertProblem::random(50, 10, 5, 17).unwrap();
    let mu = mu_stability(&p).unwrap();
    let b = p.basis().clone();
    let quotient = |c: &DVector<f64>| {
        let v = &b * c;
        v.norm() / project_w_normal(p.meas(), &v).norm()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut best = DVector::from_element(5, 1.0);
    let mut best_q = quotient(&best);
    for _ in 0..10_000 {
        let c = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
        let q = quotient(&c);
        assert!(q <= mu * (1.0 + 1e-12));
        if q > best_q {
            best_q = q;
            best = c;
        }
    }
    // coordinate-wise pattern search from the best sample
    let mut step = 0.1 * best.norm();
    while step > 1e-14 * best.norm() {
        let mut improved = false;
        for k in 0..5 {
            for s in [step, -step] {
                let mut c = best.clone();
                c[k] += s;
                let q = quotient(&c);
                if q > best_q {
                    best_q = q;
                    best = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    assert!(best_q <= mu * (1.0 + 1e-10));
    assert!((mu - best_q) / mu < 1e-6, "gap {}", (mu - best_q) / mu);
}

#[test]
fn riesz_norm_matches_projected_gradient() {
    let p = HilbertProblem::random(30, 8, 3, 5).unwrap();
    let meas = p.meas();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = DVector::from_fn(8, |_, _| StandardNormal.sample(&mut rng));
    let gram_chol = (meas * meas.transpose()).cholesky().unwrap();
    let project = |v: &DVector<f64>| v - meas.transpose() * gram_chol.solve(&(meas * v - &z));
    let mut v = project(&DVector::from_fn(30, |_, _| StandardNormal.sample(&mut rng)));
    for _ in 0..2000 {
        v = project(&(&v * 0.9));
    }
    assert!((riesz_norm(&p, &z) - v.norm()).abs() < 1e-8);
}

struct Trial {
    u: DVector<f64>,
    z: DVector<f64>,
    kappa: f64,
    eta: f64,
}

fn state(p: &HilbertProblem, rng: &mut ChaCha8Rng, tail: f64, noise: f64) -> Trial {
    let v = p.basis() * DVector::from_fn(p.n(), |_, _| StandardNormal.sample(rng));
    let g = DVector::from_fn(p.ambient_dim(), |_, _| StandardNormal.sample(rng));
    let perp = &g - p.project_vn(&g);
    let scale = tail / perp.norm();
    let u = v + perp * scale;
    let mut eta = DVector::from_fn(p.m(), |_, _| StandardNormal.sample(rng));
    if noise > 0.0 {
        eta *= noise / eta.norm();
    } else {
        eta.fill(0.0);
    }
    let kappa = riesz_norm(p, &eta);
    Trial { z: p.measure(&u) + &eta, u, kappa, eta: eta.norm() }
}

#[test]
fn estimator_bounds_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..10 {
        let p = HilbertProblem::random(50, 10, 5, 1000 + k).unwrap();
        let mu = mu_stability(&p).unwrap();
        let riesz = norm_constants(&p, NormId::Riesz, 2.0).unwrap();
        for _ in 0..20 {
            let t = state(&p, &mut rng, 0.1, 0.01);
            let e_n = p.approx_error(&t.u);
            let (u_tilde, _) = best_fit(&p, &t.z).unwrap();
            let u_star = generalized_interpolation(&p, &t.z).unwrap();
            let bound = mu * (e_n + t.kappa) + 1e-8;
            assert!((&t.u - &u_tilde).norm() <= bound);
            assert!((&t.u - &u_star).norm() <= bound);
            let thm = (2.0 + 2.0 * riesz.mu) * e_n + (1.0 + 2.0 * riesz.mu) * riesz.beta * t.eta;
            assert!((&t.u - &u_star).norm() <= thm + 1e-8);
            assert!((p.measure(&u_star) - &t.z).amax() < 1e-10);
        }
    }
}

#[test]
fn interpolation_correction_helps_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..10 {
        let p = HilbertProblem::random(40, 12, 4, k).unwrap();
        for _ in 0..20 {
            let t = state(&p, &mut rng, 0.5, 0.0);
            let (u_tilde, _) = best_fit(&p, &t.z).unwrap();
            let u_star = generalized_interpolation(&p, &t.z).unwrap();
            assert!((&t.u - &u_star).norm() <= (&t.u - &u_tilde).norm() + 1e-12);
        }
    }
}

#[test]
fn norm_constant_relations() {
    for k in 0..20 {
        let p = HilbertProblem::random(50, 10, 5, 500 + k).unwrap();
        let l2 = norm_constants(&p, NormId::L2, 2.0).unwrap();
        let w = norm_constants(&p, NormId::Riesz, 2.0).unwrap();
        assert!(w.mu <= l2.alpha * l2.mu);
        assert!(l2.mu <= w.beta * w.mu * (1.0 + 1e-12));
        for t in [l2, w] {
            assert!(t.alpha * t.mu >= 1.0 - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mu_invariant_under_basis_change(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, m, n) = (20, 7, 4);
        let basis = gaussian_matrix(&mut rng, d, n);
        let meas = gaussian_matrix(&mut rng, m, d);
        let base = HilbertProblem::new(basis.clone(), meas.clone()).unwrap();
        let mu = mu_stability(&base).unwrap();

        let change = gaussian_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 3.0;
        let mixed = HilbertProblem::new(&basis * change, meas.clone()).unwrap();
        prop_assert!((mu_stability(&mixed).unwrap() - mu).abs() <= 1e-10 * mu);

        let q = gaussian_matrix(&mut rng, d, d).qr().q();
        let rotated = HilbertProblem::new(&q * &basis, &meas * q.transpose()).unwrap();
        prop_assert!((mu_stability(&rotated).unwrap() - mu).abs() <= 1e-10 * mu);

        let rows = gaussian_matrix(&mut rng, m, m) + DMatrix::identity(m, m) * 3.0;
        let remeasured = HilbertProblem::new(basis, rows * meas).unwrap();
        prop_assert!((mu_stability(&remeasured).unwrap() - mu).abs() <= 1e-9 * mu);
    }

    #[test]
    fn exact_recovery_inside_reduced_space(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = HilbertProblem::random(25, 8, 3, seed).unwrap();
        let u = p.basis() * DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
        let z = p.measure(&u);
        let (u_tilde, residual) = best_fit(&p, &z).unwrap();
        prop_assert!((&u - &u_tilde).norm() <= 1e-9 * (1.0 + u.norm()));
        prop_assert!(residual <= 1e-9 * (1.0 + u.norm()));
    }
}
