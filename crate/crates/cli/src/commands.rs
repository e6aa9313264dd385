use std::fmt::Write;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use shaperec::geometry::line_cell_segment;
use shaperec::measurements::{add_noise, lq_error, lq_error_exact, measure, Grid, NoiseModel, ShapeSpec};
use shaperec::pbdw::{best_fit, generalized_interpolation, mu_stability, norm_constants, riesz_norm, HilbertProblem, NormId};
use shaperec::recon::{reconstruct_with, CellRecon, FitOptions, Method, ReconOptions, Reconstruction};
use shaperec::sparse::{best_n_term_error, build_certified, decode, rip1_lower};
use shaperec::stability::estimate;

use crate::error::{CliError, CliResult};
use crate::output::{config_comment, emit, loglog_slope, num, to_json};
use crate::{ConvergenceArgs, CsArgs, CsInput, PbdwArgs, Quadrature, ReconstructArgs, StabilityArgs};

fn check_q(q: f64) -> CliResult<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(CliError::Config(format!("q must be a finite number >= 1, got {q}")));
    }
    Ok(())
}

fn check_weight(w: f64) -> CliResult<()> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(CliError::Config(format!("center weight must be positive, got {w}")));
    }
    Ok(())
}

fn recon_options(weight: f64) -> ReconOptions {
    ReconOptions { center_weight: weight, fit: FitOptions::default() }
}

#[derive(Serialize)]
struct ConvergenceConfig<'a> {
    command: &'static str,
    shape: ShapeSpec,
    methods: &'a [Method],
    weight: f64,
    levels: &'a [usize],
    q: f64,
    noise: NoiseModel,
    quadrature: Quadrature,
    subsamples: usize,
    timing: bool,
}

pub fn convergence(a: &ConvergenceArgs) -> CliResult<()> {
    let shape = a.shape.spec()?;
    let noise = a.noise.model()?;
    check_q(a.q)?;
    check_weight(a.weight)?;
    if a.method.is_empty() || a.levels.is_empty() {
        return Err(CliError::Config("need at least one method and one grid size".into()));
    }
    if let Some(l) = a.levels.iter().find(|&&l| l < 4 || !l.is_power_of_two()) {
        return Err(CliError::Config(format!("grid sizes must be powers of two >= 4, got {l}")));
    }
    let mut levels = a.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let config = ConvergenceConfig {
        command: "convergence",
        shape,
        methods: &a.method,
        weight: a.weight,
        levels: &levels,
        q: a.q,
        noise,
        quadrature: a.quadrature,
        subsamples: a.subsamples,
        timing: !a.no_timing,
    };
    let opts = recon_options(a.weight);
    let mut out = config_comment(&config)?;
    out.push_str("method,L,h,q,noise_p,noise_eps,seed,lq_error,fit_seconds\n");
    let mut errors = vec![Vec::new(); a.method.len()];
    for &l in &levels {
        let grid = Grid::new(l)?;
        let (field, _) = add_noise(&measure(&shape, grid), &noise);
        for (k, &m) in a.method.iter().enumerate() {
            let start = Instant::now();
            let recon = reconstruct_with(&field, m, &opts)?;
            let secs = start.elapsed().as_secs_f64();
            let err = match a.quadrature {
                Quadrature::Exact => lq_error_exact(&shape, &recon, a.q)?,
                Quadrature::Midpoint => lq_error(&shape, &recon, a.q, a.subsamples)?,
            };
            errors[k].push(err);
            let timing = if a.no_timing { String::new() } else { num(secs) };
            let _ = writeln!(out, "{m},{l},{},{},{},{},{},{},{timing}", num(grid.h()), num(a.q), noise.p, num(noise.eps), noise.seed, num(err));
        }
    }
    let finest = levels.len().saturating_sub(3);
    if levels.len() >= 2 {
        for (k, &m) in a.method.iter().enumerate() {
            let s = loglog_slope(&levels[finest..], &errors[k][finest..]);
            let _ = writeln!(out, "{m},slope,,{},{},{},{},{},", num(a.q), noise.p, num(noise.eps), noise.seed, num(s));
        }
    }
    emit(a.out.as_deref(), &out)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CellOut {
    Constant { i: usize, j: usize, value: f64 },
    Interface { i: usize, j: usize, theta: f64, c: f64, anchor: [f64; 2] },
}

#[derive(Serialize)]
struct GridOut {
    #[serde(rename = "L")]
    l: usize,
    h: f64,
}

#[derive(Serialize)]
struct Metrics {
    l1_error: f64,
    lq_error: f64,
    q: f64,
    interface_cells: usize,
}

/// Signed distance to the true boundary sampled along the reconstructed segments.
#[derive(Serialize)]
struct SignedDistanceStats {
    segments: usize,
    samples: usize,
    inside: usize,
    outside: usize,
    fraction_inside: f64,
    mean: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct ReconstructConfig {
    command: &'static str,
    shape: ShapeSpec,
    method: Method,
    weight: f64,
    #[serde(rename = "L")]
    l: usize,
    q: f64,
    noise: NoiseModel,
}

#[derive(Serialize)]
struct ReconstructOutput {
    config: ReconstructConfig,
    grid: GridOut,
    cells: Vec<CellOut>,
    metrics: Metrics,
    signed_distance: SignedDistanceStats,
}

fn segment_stats(shape: &ShapeSpec, recon: &Reconstruction) -> SignedDistanceStats {
    let mut samples = Vec::new();
    let mut segments = 0;
    for cell in recon.grid.cells() {
        if let CellRecon::Interface(hp) = recon.get(cell.i, cell.j) {
            if let Some((p, q)) = line_cell_segment(hp, &cell) {
                segments += 1;
                for k in 0..5 {
                    let t = (k as f64 + 0.5) / 5.0;
                    let x = shaperec::Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
                    samples.push(shape.shape.signed_distance(x));
                }
            }
        }
    }
    let inside = samples.iter().filter(|&&s| s < 0.0).count();
    let outside = samples.iter().filter(|&&s| s > 0.0).count();
    let n = samples.len();
    SignedDistanceStats {
        segments,
        samples: n,
        inside,
        outside,
        fraction_inside: if n > 0 { inside as f64 / n as f64 } else { 0.0 },
        mean: if n > 0 { samples.iter().sum::<f64>() / n as f64 } else { 0.0 },
        min: samples.iter().copied().fold(0.0, f64::min),
        max: samples.iter().copied().fold(0.0, f64::max),
    }
}

pub fn reconstruct(a: &ReconstructArgs) -> CliResult<()> {
    let shape = a.shape.spec()?;
    let noise = a.noise.model()?;
    check_q(a.q)?;
    check_weight(a.weight)?;
    let grid = Grid::new(a.cells)?;
    let (field, _) = add_noise(&measure(&shape, grid), &noise);
    let recon = reconstruct_with(&field, a.method, &recon_options(a.weight))?;
    let cells = grid
        .cells()
        .map(|cell| match *recon.get(cell.i, cell.j) {
            CellRecon::Constant(value) => CellOut::Constant { i: cell.i, j: cell.j, value },
            CellRecon::Interface(hp) => CellOut::Interface { i: cell.i, j: cell.j, theta: hp.theta, c: hp.c, anchor: [hp.anchor.x, hp.anchor.y] },
        })
        .collect();
    let output = ReconstructOutput {
        config: ReconstructConfig { command: "reconstruct", shape, method: a.method, weight: a.weight, l: a.cells, q: a.q, noise },
        grid: GridOut { l: grid.cells_per_side(), h: grid.h() },
        cells,
        metrics: Metrics {
            l1_error: lq_error_exact(&shape, &recon, 1.0)?,
            lq_error: lq_error_exact(&shape, &recon, a.q)?,
            q: a.q,
            interface_cells: recon.interface_count(),
        },
        signed_distance: segment_stats(&shape, &recon),
    };
    emit(a.out.as_deref(), &to_json(&output)?)?;
    if let Some(path) = &a.svg {
        emit(Some(path), &crate::svg::render(&shape.shape, &recon))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PairOut {
    theta1: f64,
    c1: f64,
    theta2: f64,
    c2: f64,
    anchor: [f64; 2],
}

#[derive(Serialize)]
struct StabilityConfig {
    command: &'static str,
    samples: usize,
    h: f64,
    seed: u64,
}

#[derive(Serialize)]
struct StabilityOutput {
    config: StabilityConfig,
    #[serde(rename = "C0_hat")]
    c0_hat: f64,
    argmax_pair: PairOut,
    argmax_l1_volume: f64,
    argmax_l1_meas: f64,
    alpha_check: f64,
    samples: usize,
    seed: u64,
    evaluated: usize,
    resampled: usize,
}

pub fn stability(a: &StabilityArgs) -> CliResult<()> {
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(CliError::Config(format!("h must be positive, got {}", a.h)));
    }
    let est = estimate(a.samples, a.h, a.seed);
    let (p1, p2) = est.argmax.pair;
    let output = StabilityOutput {
        config: StabilityConfig { command: "stability", samples: a.samples, h: a.h, seed: a.seed },
        c0_hat: est.c0_hat,
        argmax_pair: PairOut { theta1: p1.theta, c1: p1.c, theta2: p2.theta, c2: p2.c, anchor: [p1.anchor.x, p1.anchor.y] },
        argmax_l1_volume: est.argmax.l1_volume,
        argmax_l1_meas: est.argmax.l1_meas,
        alpha_check: est.alpha_max,
        samples: a.samples,
        seed: a.seed,
        evaluated: est.evaluated,
        resampled: est.resampled,
    };
    emit(a.out.as_deref(), &to_json(&output)?)
}

#[derive(Serialize)]
struct PbdwConfig {
    command: &'static str,
    dim: usize,
    m: usize,
    n: usize,
    trials: usize,
    noise: f64,
    tail: f64,
    seed: u64,
}

const PBDW_HEADER: &str =
    "kind,trial,status,mu,e_n,noise_W,err_bestfit,err_geninterp,bound_ok_bestfit,bound_ok_geninterp,mu_W,alpha2_mu2,inequality_ok\n";

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn pbdw(a: &PbdwArgs) -> CliResult<()> {
    if a.dim == 0 || a.m == 0 || a.n == 0 || a.m > a.dim || a.n > a.dim {
        return Err(CliError::Config(format!("need D >= m >= 1 and D >= n >= 1 (D = {}, m = {}, n = {})", a.dim, a.m, a.n)));
    }
    if !(a.noise >= 0.0 && a.tail >= 0.0) {
        return Err(CliError::Config("noise and tail must be nonnegative".into()));
    }
    let config = PbdwConfig { command: "pbdw", dim: a.dim, m: a.m, n: a.n, trials: a.trials, noise: a.noise, tail: a.tail, seed: a.seed };
    let mut out = config_comment(&config)?;
    out.push_str(PBDW_HEADER);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for trial in 0..a.trials {
        let problem = HilbertProblem::random(a.dim, a.m, a.n, rng.random())?;
        let mu = match mu_stability(&problem) {
            Ok(mu) => mu,
            Err(shaperec::Error::UnstableConfiguration { .. }) => {
                let _ = writeln!(out, "estimate,{trial},unstable-configuration,,,,,,,,,,");
                let _ = writeln!(out, "norms,{trial},unstable-configuration,,,,,,,,,,");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let v = problem.basis() * gaussian(&mut rng, a.n);
        let g = gaussian(&mut rng, a.dim);
        let perp = &g - problem.project_vn(&g);
        let len = perp.norm();
        let target = rng.random_range(0.0..=1.0) * a.tail;
        let u = if len > 0.0 { v + perp * (target / len) } else { v };
        let mut eta = gaussian(&mut rng, a.m);
        let eta_norm = eta.norm();
        if eta_norm > 0.0 {
            eta *= a.noise / eta_norm;
        }
        let z = problem.measure(&u) + &eta;
        let e_n = problem.approx_error(&u);
        let kappa = riesz_norm(&problem, &eta);
        let (u_tilde, _) = best_fit(&problem, &z)?;
        let u_star = generalized_interpolation(&problem, &z)?;
        let bound = mu * (e_n + kappa) + 1e-8;
        let (eb, eg) = ((&u - &u_tilde).norm(), (&u - &u_star).norm());
        let _ = writeln!(
            out,
            "estimate,{trial},ok,{},{},{},{},{},{},{},,,",
            num(mu),
            num(e_n),
            num(kappa),
            num(eb),
            num(eg),
            eb <= bound,
            eg <= bound
        );
        let l2 = norm_constants(&problem, NormId::L2, 2.0)?;
        let w = norm_constants(&problem, NormId::Riesz, 2.0)?;
        let prod = l2.alpha * l2.mu;
        let _ = writeln!(out, "norms,{trial},ok,,,,,,,,{},{},{}", num(w.mu), num(prod), w.mu <= prod);
    }
    emit(a.out.as_deref(), &out)
}

#[derive(Serialize)]
struct CsConfig {
    command: &'static str,
    m: usize,
    #[serde(rename = "N")]
    cols: usize,
    d: usize,
    n: usize,
    l: usize,
    trials: usize,
    input: CsInput,
    eps_max: f64,
    retries: u64,
    rip_trials: usize,
    seed: u64,
}

pub fn cs(a: &CsArgs) -> CliResult<()> {
    if a.cols > 24 || a.m > 12 || !(1..=2).contains(&a.n) || !(2..=3).contains(&a.d) || a.m < a.d || a.m > a.cols * a.d {
        return Err(CliError::Config(format!(
            "outside the exhaustive regime: need N <= 24, d <= m <= 12, n in {{1, 2}}, d in {{2, 3}} (m = {}, N = {}, d = {}, n = {})",
            a.m, a.cols, a.d, a.n
        )));
    }
    let l = 2 * a.n;
    let config = CsConfig {
        command: "cs",
        m: a.m,
        cols: a.cols,
        d: a.d,
        n: a.n,
        l,
        trials: a.trials,
        input: a.input,
        eps_max: a.eps_max,
        retries: a.retries,
        rip_trials: a.rip_trials,
        seed: a.seed,
    };
    let cert = build_certified(a.m, a.cols, a.d, l, a.eps_max, a.seed, a.retries)?;
    let mat = &cert.matrix;
    let rip = rip1_lower(mat, l.min(a.cols), a.rip_trials, a.seed)?;
    let mut out = config_comment(&config)?;
    let _ = writeln!(out, "# certified_seed: {}", cert.seed);
    let _ = writeln!(out, "# eps_hat: {}", num(cert.report.eps_hat));
    let _ = writeln!(out, "# worst_set: {:?}", cert.report.worst_set);
    let _ = writeln!(out, "# rip1_lower: {}", num(rip));
    let _ = writeln!(out, "# d_one_minus_eps: {}", num(a.d as f64 * (1.0 - cert.report.eps_hat)));
    out.push_str("trial,e_n,err,iop_ratio,exact\n");
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut max_ratio, mut exact_count, mut sparse_count) = (0.0f64, 0usize, 0usize);
    for trial in 0..a.trials {
        let mut u = vec![0.0; a.cols];
        match a.input {
            CsInput::Compressible => {
                for x in u.iter_mut() {
                    *x = rng.sample::<f64, _>(StandardNormal) * rng.random_range(0.0..0.2);
                }
                for _ in 0..a.n {
                    u[rng.random_range(0..a.cols)] += 3.0 * rng.sample::<f64, _>(StandardNormal);
                }
            }
            CsInput::Sparse => {
                for j in rand::seq::index::sample(&mut rng, a.cols, a.n) {
                    u[j] = rng.sample(StandardNormal);
                }
            }
        }
        let e_n = best_n_term_error(&u, a.n);
        let u_hat = decode(mat, &mat.apply(&u), a.n)?;
        let err: f64 = u.iter().zip(&u_hat).map(|(x, y)| (x - y).abs()).sum();
        let ratio = if e_n > 0.0 {
            let r = err / e_n;
            max_ratio = max_ratio.max(r);
            num(r)
        } else {
            sparse_count += 1;
            String::new()
        };
        let exact = err <= 1e-12 * (1.0 + u.iter().map(|x| x.abs()).sum::<f64>());
        if e_n == 0.0 && exact {
            exact_count += 1;
        }
        let _ = writeln!(out, "{trial},{},{},{ratio},{exact}", num(e_n), num(err));
    }
    let _ = writeln!(out, "# max_iop_ratio: {}", num(max_ratio));
    let _ = writeln!(out, "# exact_sparse_recoveries: {exact_count}/{sparse_count}");
    emit(a.out.as_deref(), &out)
}
