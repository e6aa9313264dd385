//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use shaperec::geometry::{cell_fraction, Cell, HalfPlane, Point};
use shaperec::measurements::{add_noise, lq_error_exact, measure, Grid, NoiseModel, NormP, ShapeSpec};
use shaperec::pbdw::{best_fit, generalized_interpolation, mu_stability, norm_constants, riesz_norm, HilbertProblem, NormId};
use shaperec::recon::{reconstruct, CellRecon, Method, Reconstruction};
use shaperec::sparse::{best_n_term_error, build_certified, decode, iop_ratio};
use shaperec::stability::{canonical_pair, estimate, ratio};

struct Outcome {
    pass: bool,
    detail: String,
}

fn slope(ls: &[usize], errs: &[f64]) -> f64 {
    let x: Vec<f64> = ls.iter().map(|&l| (l as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    -sxy / sxx
}

fn target_disk() -> ShapeSpec {
    ShapeSpec::disk(0.53, 0.51, 0.325).unwrap()
}

/// Returns the convergence outcome and the L = 128 errors of li and licc.
fn convergence() -> (Outcome, f64, f64) {
    let start = Instant::now();
    let shape = target_disk();
    let ls = [16usize, 32, 64, 128, 256];
    let mut errs = vec![Vec::new(); 4];
    for &l in &ls {
        let field = measure(&shape, Grid::new(l).unwrap());
        for (k, m) in Method::ALL.iter().enumerate() {
            errs[k].push(lq_error_exact(&shape, &reconstruct(&field, *m).unwrap(), 1.0).unwrap());
        }
    }
    let elapsed = start.elapsed();
    let slopes: Vec<f64> = errs.iter().map(|e| slope(&ls[2..], &e[2..])).collect();
    let ranges = [(0.8, 1.2), (1.75, 2.3), (1.75, 2.3), (1.75, 2.3)];
    let ok = slopes.iter().zip(ranges).all(|(s, (lo, hi))| (lo..=hi).contains(s)) && elapsed < Duration::from_secs(300);
    let detail = format!(
        "slopes pc {:.3}, l1 {:.3}, li {:.3}, licc {:.3}; {:.1} s",
        slopes[0], slopes[1], slopes[2], slopes[3], elapsed.as_secs_f64()
    );
    (Outcome { pass: ok, detail }, errs[2][3], errs[3][3])
}

fn constant_gap(li: f64, licc: f64) -> Outcome {
    let r = li / licc;
    Outcome { pass: r >= 3.0, detail: format!("li/licc at L=128 = {r:.3}") }
}

fn exact_on_half_planes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let grid = Grid::new(32).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let hp = HalfPlane::new(rng.random_range(0.0..TAU), rng.random_range(-0.3..0.3), Point::new(0.5, 0.5));
        let shape = ShapeSpec::half_plane(hp);
        let field = measure(&shape, grid);
        for m in [Method::L1, Method::Li, Method::Licc] {
            let mut recon = reconstruct(&field, m).unwrap();
            for cell in grid.cells().filter(|c| grid.is_boundary(c.i, c.j)) {
                recon.cells[grid.index(cell.i, cell.j)] = CellRecon::Interface(hp);
            }
            worst = worst.max(lq_error_exact(&shape, &recon, 1.0).unwrap());
        }
    }
    Outcome { pass: worst <= 1e-6, detail: format!("max inner-cell L1 error {worst:.3e} over 50 shapes x 3 norms") }
}

fn stability_constants() -> Outcome {
    let start = Instant::now();
    let h = 1.0 / 64.0;
    let (a, b) = canonical_pair(h);
    let canon = ratio(&a, &b, h).unwrap().ratio;
    let est = estimate(100_000, h, 2024);
    let elapsed = start.elapsed();
    let ok = (est.c0_hat - 1.5).abs() <= 1e-9 && canon == 1.5 && est.alpha_max <= 1.0 + 1e-12 && elapsed < Duration::from_secs(60);
    Outcome {
        pass: ok,
        detail: format!(
            "C0_hat {:.15}, canonical {canon}, max alpha ratio {:.15}; {:.1} s",
            est.c0_hat,
            est.alpha_max,
            elapsed.as_secs_f64()
        ),
    }
}

fn geometry_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(512);
    let grid = Grid::new(16).unwrap();
    let n = 512;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cell = grid.cell(rng.random_range(1..=16), rng.random_range(1..=16));
        let ll = cell.lower_left();
        let anchor = Point::new(ll.x + rng.random_range(0.0..cell.h), ll.y + rng.random_range(0.0..cell.h));
        let hp = HalfPlane::new(rng.random_range(0.0..TAU), rng.random_range(-0.3..0.3) * cell.h, anchor);
        let s = cell.h / n as f64;
        let mut hits = 0usize;
        for a in 0..n {
            for b in 0..n {
                if hp.contains(Point::new(ll.x + (a as f64 + 0.5) * s, ll.y + (b as f64 + 0.5) * s)) {
                    hits += 1;
                }
            }
        }
        worst = worst.max((cell_fraction(&hp, &cell) - hits as f64 / (n * n) as f64).abs());
    }
    Outcome { pass: worst <= 5e-3, detail: format!("max deviation {worst:.3e} over 1000 pairs") }
}

fn pbdw_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut bound_fail, mut interp_fail, mut thm_fail, mut trials) = (0, 0, 0, 0);
    for k in 0..100 {
        let p = HilbertProblem::random(50, 10, 5, 10_000 + k).unwrap();
        let mu = mu_stability(&p).unwrap();
        let l2 = norm_constants(&p, NormId::L2, 2.0).unwrap();
        let w = norm_constants(&p, NormId::Riesz, 2.0).unwrap();
        if w.mu > l2.alpha * l2.mu {
            thm_fail += 1;
        }
        for _ in 0..100 {
            trials += 1;
            let v = p.basis() * DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
            let g = DVector::from_fn(50, |_, _| rng.sample::<f64, _>(StandardNormal));
            let perp = &g - p.project_vn(&g);
            let scale = rng.random_range(0.0..1.0) / perp.norm();
            let u = v + perp * scale;
            let mut eta = DVector::from_fn(10, |_, _| rng.sample::<f64, _>(StandardNormal));
            eta *= 0.01 / eta.norm();
            let z = p.measure(&u) + &eta;
            let bound = mu * (p.approx_error(&u) + riesz_norm(&p, &eta)) + 1e-8;
            let (u_tilde, _) = best_fit(&p, &z).unwrap();
            let u_star = generalized_interpolation(&p, &z).unwrap();
            if (&u - &u_tilde).norm().max((&u - &u_star).norm()) > bound {
                bound_fail += 1;
            }
            if (p.measure(&u_star) - &z).amax() > 1e-10 {
                interp_fail += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: bound_fail == 0 && interp_fail == 0 && thm_fail == 0 && elapsed < Duration::from_secs(60),
        detail: format!(
            "{trials} trials: bound failures {bound_fail}, interpolation failures {interp_fail}, norm inequality failures {thm_fail}; {:.1} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn compressed_sensing() -> Outcome {
    let start = Instant::now();
    let cert = build_certified(12, 20, 3, 4, 0.5, 0, 1000).unwrap();
    let mat = &cert.matrix;
    let n_cols = mat.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut recovery_fail = 0;
    let mut recovered = 0;
    for j in 0..n_cols {
        for k in j..n_cols {
            for _ in 0..10 {
                let mut u = vec![0.0; n_cols];
                u[j] = rng.sample(StandardNormal);
                u[k] = rng.sample(StandardNormal);
                let u_hat = decode(mat, &mat.apply(&u), 2).unwrap();
                if u.iter().zip(&u_hat).all(|(a, b)| (a - b).abs() <= 1e-12) {
                    recovered += 1;
                } else {
                    recovery_fail += 1;
                }
            }
        }
    }
    let mut max_ratio: f64 = 0.0;
    for _ in 0..1000 {
        let mut u: Vec<f64> = (0..n_cols).map(|_| rng.sample::<f64, _>(StandardNormal) * rng.random_range(0.0..0.2)).collect();
        u[rng.random_range(0..n_cols)] += rng.sample::<f64, _>(StandardNormal) * 3.0;
        u[rng.random_range(0..n_cols)] += rng.sample::<f64, _>(StandardNormal) * 3.0;
        if best_n_term_error(&u, 2) > 0.0 {
            max_ratio = max_ratio.max(iop_ratio(mat, &u, 2).unwrap());
        }
    }
    let mut direct_violations = 0;
    for _ in 0..100_000 {
        let x: Vec<f64> = (0..n_cols).map(|_| rng.sample(StandardNormal)).collect();
        let lhs: f64 = mat.apply(&x).iter().map(|v| v.abs()).sum();
        let rhs: f64 = 3.0 * x.iter().map(|v| v.abs()).sum::<f64>();
        if lhs > rhs * (1.0 + 1e-15) {
            direct_violations += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: recovery_fail == 0 && max_ratio <= 5.0 && direct_violations == 0 && elapsed < Duration::from_secs(120),
        detail: format!(
            "(m, N, d) = (12, 20, 3), seed {}, eps_hat {}; exact recoveries {recovered}/{}; max iop ratio {max_ratio:.3}; direct bound violations {direct_violations}; {:.1} s",
            cert.seed,
            cert.report.eps_hat,
            recovered + recovery_fail,
            elapsed.as_secs_f64()
        ),
    }
}

/// `true` when the signed distance certifies the shape constant on `cell`.
fn far_from_boundary(shape: &ShapeSpec, cell: &Cell) -> bool {
    shape.shape.signed_distance(cell.center()).abs() > cell.h * std::f64::consts::FRAC_1_SQRT_2 * (1.0 + 1e-9)
}

fn cell_l1(shape: &ShapeSpec, recon: &Reconstruction, cell: &Cell) -> f64 {
    let u = if shape.shape.contains(cell.center()) { 1.0 } else { 0.0 };
    let h2 = cell.h * cell.h;
    match recon.get(cell.i, cell.j) {
        CellRecon::Constant(v) => (u - v).abs() * h2,
        CellRecon::Interface(hp) => {
            let f = cell_fraction(hp, cell);
            (if u == 1.0 { 1.0 - f } else { f }) * h2
        }
    }
}

fn noise_scaling() -> Outcome {
    let shape = target_disk();
    let grid = Grid::new(64).unwrap();
    let h = grid.h();
    let clean = measure(&shape, grid);
    let mut means = Vec::new();
    let mut local_fail = 0;
    for eps in [0.0, 1.0 / 36.0, 1.0 / 18.0, 1.0 / 9.0] {
        let mut total = 0.0;
        for seed in 0..5 {
            let field = add_noise(&clean, &NoiseModel { p: NormP::Inf, eps, seed }).0;
            let recon = reconstruct(&field, Method::L1).unwrap();
            total += lq_error_exact(&shape, &recon, 1.0).unwrap();
            for cell in grid.cells().filter(|c| !grid.is_boundary(c.i, c.j)) {
                let stencil_far =
                    (0..3).all(|a| (0..3).all(|b| far_from_boundary(&shape, &grid.cell(cell.i + a - 1, cell.j + b - 1))));
                if stencil_far && cell_l1(&shape, &recon, &cell) > h * h * eps + 1e-15 {
                    local_fail += 1;
                }
            }
        }
        means.push(total / 5.0);
    }
    let monotone = means.windows(2).all(|w| w[0] <= w[1]);
    Outcome {
        pass: monotone && local_fail == 0,
        detail: format!(
            "mean L1 errors {}; far-cell violations {local_fail}",
            means.iter().map(|m| format!("{m:.4e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn main() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let results = pool.install(|| {
        let (conv, li, licc) = convergence();
        vec![
            ("convergence rates", conv),
            ("constant gap li/licc", constant_gap(li, licc)),
            ("exactness on half-planes", exact_on_half_planes()),
            ("stability constants", stability_constants()),
            ("geometry oracle", geometry_oracle()),
            ("pbdw bounds", pbdw_bounds()),
            ("compressed sensing", compressed_sensing()),
            ("noise scaling", noise_scaling()),
        ]
    });
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
