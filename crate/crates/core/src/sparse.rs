//! Sparse recovery with binary expander matrices, at exhaustively checkable scale.
//!
//! `Φ ∈ {0,1}^{m×N}` has exactly `d` ones per column. Expansion, sparse
//! kernel vectors and the ℓ¹ best fit over supports of size `n ≤ 2` are all
//! computed by enumeration, so every reported constant is exact for the
//! instance at hand (sampled constants are marked as such).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of column subsets an exhaustive check may visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

const RANK_TOL: f64 = 1e-10;

/// Adjacency matrix of a left-`d`-regular bipartite graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySparseMatrix {
    m: usize,
    n_cols: usize,
    d: usize,
    col_supports: Vec<Vec<usize>>,
}

impl BinarySparseMatrix {
    /// Builds a matrix from explicit column supports (sorted, deduplicated on entry).
    pub fn from_supports(m: usize, col_supports: Vec<Vec<usize>>) -> Result<Self> {
        let n_cols = col_supports.len();
        if n_cols == 0 || m == 0 || m > 64 {
            return Err(Error::InvalidDimensions(format!("need 1 <= m <= 64 rows and N >= 1 columns (m = {m}, N = {n_cols})")));
        }
        let mut cols = col_supports;
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
        }
        let d = cols[0].len();
        if d == 0 || cols.iter().any(|c| c.len() != d || c.iter().any(|&r| r >= m)) {
            return Err(Error::InvalidDimensions("every column needs the same number of ones, within range".into()));
        }
        Ok(Self { m, n_cols, d, col_supports: cols })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn col_support(&self, j: usize) -> &[usize] {
        &self.col_supports[j]
    }

    fn col_mask(&self, j: usize) -> u64 {
        self.col_supports[j].iter().fold(0u64, |m, &r| m | (1u64 << r))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.col_supports[j].binary_search(&i).is_ok() {
            1.0
        } else {
            0.0
        }
    }

    /// `Φ x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for &r in &self.col_supports[j] {
                    out[r] += xj;
                }
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<usize> {
        self.col_supports.iter().map(Vec::len).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|i| (0..self.n_cols).map(|j| self.get(i, j)).collect()).collect()
    }
}

/// Each column support is drawn uniformly without replacement.
pub fn build(m: usize, n_cols: usize, d: usize, seed: u64) -> Result<BinarySparseMatrix> {
    if d == 0 || d > m || m > n_cols * d || m > 64 {
        return Err(Error::InvalidDimensions(format!("need 1 <= d <= m <= N·d and m <= 64 (m = {m}, N = {n_cols}, d = {d})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (0..n_cols).map(|_| index::sample(&mut rng, m, d).into_vec()).collect();
    BinarySparseMatrix::from_supports(m, cols)
}

/// Worst expansion deficit over column sets of size `≤ l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub l: usize,
    /// `1 − min_{|X| ≤ l} |N(X)| / (d |X|)`.
    pub eps_hat: f64,
    pub worst_set: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn subsets_up_to(n: usize, l: usize) -> u128 {
    (1..=l).map(|k| binomial(n, k)).sum()
}

fn check_enumerable(n: usize, l: usize) -> Result<()> {
    let count = subsets_up_to(n, l);
    if count > ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge(count));
    }
    Ok(())
}

/// Calls `f` on every nonempty subset of `0..n` of size `≤ l`, in lexicographic order.
fn for_each_subset(n: usize, l: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, l: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        for j in start..n {
            cur.push(j);
            f(cur);
            if cur.len() < l {
                rec(j + 1, n, l, cur, f);
            }
            cur.pop();
        }
    }
    rec(0, n, l, &mut Vec::with_capacity(l), f);
}

/// Exhaustive check of the `(l, ε)` expansion property.
pub fn expansion_check(mat: &BinarySparseMatrix, l: usize) -> Result<ExpansionReport> {
    let l = l.min(mat.cols());
    check_enumerable(mat.cols(), l)?;
    let masks: Vec<u64> = (0..mat.cols()).map(|j| mat.col_mask(j)).collect();
    let d = mat.degree() as f64;
    let mut search = ExpansionSearch { masks: &masks, l, d, best: 1.0, worst: vec![0] };
    search.visit(0, 0, &mut Vec::with_capacity(l));
    Ok(ExpansionReport { l, eps_hat: 1.0 - search.best, worst_set: search.worst })
}

/// Depth-first enumeration of column sets with accumulated row masks.
struct ExpansionSearch<'a> {
    masks: &'a [u64],
    l: usize,
    d: f64,
    best: f64,
    worst: Vec<usize>,
}

impl ExpansionSearch<'_> {
    fn visit(&mut self, start: usize, mask: u64, cur: &mut Vec<usize>) {
        for j in start..self.masks.len() {
            let m = mask | self.masks[j];
            cur.push(j);
            let ratio = m.count_ones() as f64 / (self.d * cur.len() as f64);
            if ratio < self.best {
                self.best = ratio;
                self.worst = cur.clone();
            }
            if cur.len() < self.l {
                self.visit(j + 1, m, cur);
            }
            cur.pop();
        }
    }
}

/// A matrix whose expansion was verified exhaustively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedMatrix {
    pub matrix: BinarySparseMatrix,
    pub seed: u64,
    pub report: ExpansionReport,
}

/// Tries seeds `first_seed, first_seed + 1, …` until `expansion_check` at
/// order `l` reports `eps_hat ≤ eps_max`.
pub fn build_certified(m: usize, n_cols: usize, d: usize, l: usize, eps_max: f64, first_seed: u64, retries: u64) -> Result<CertifiedMatrix> {
    for k in 0..retries {
        let seed = first_seed.wrapping_add(k);
        let matrix = build(m, n_cols, d, seed)?;
        let report = expansion_check(&matrix, l)?;
        if report.eps_hat <= eps_max + 1e-15 {
            return Ok(CertifiedMatrix { matrix, seed, report });
        }
    }
    Err(Error::NoCertifiedSeed(retries))
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `e_n(u)₁`: sum of all but the `n` largest magnitudes.
pub fn best_n_term_error(u: &[f64], n: usize) -> f64 {
    let mut mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.iter().skip(n).sum()
}

/// Empirical minimum of `‖Φx‖₁ / ‖x‖₁` over random `k`-sparse `x`.
///
/// This is an upper bound on the true infimum over `k`-sparse vectors.
pub fn rip1_lower(mat: &BinarySparseMatrix, k: usize, trials: usize, seed: u64) -> Result<f64> {
    if k == 0 || k > mat.cols() {
        return Err(Error::InvalidParameter(format!("sparsity {k} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; mat.cols()];
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        x.iter_mut().for_each(|v| *v = 0.0);
        for j in index::sample(&mut rng, mat.cols(), k) {
            x[j] = rng.sample(StandardNormal);
        }
        let norm = l1(&x);
        if norm == 0.0 {
            continue;
        }
        best = best.min(l1(&mat.apply(&x)) / norm);
    }
    Ok(best)
}

/// Best fit of `z` over vectors supported on one fixed support.
struct SupportFit {
    objective: f64,
    coeffs: Vec<(usize, f64)>,
}

fn objective(mat: &BinarySparseMatrix, z: &[f64], coeffs: &[(usize, f64)]) -> f64 {
    let mut r = z.to_vec();
    for &(j, v) in coeffs {
        for &i in mat.col_support(j) {
            r[i] -= v;
        }
    }
    l1(&r)
}

fn coeff_norm(c: &[(usize, f64)]) -> f64 {
    c.iter().map(|(_, v)| v.abs()).sum()
}

fn consider(best: &mut Option<SupportFit>, mat: &BinarySparseMatrix, z: &[f64], coeffs: Vec<(usize, f64)>) {
    let obj = objective(mat, z, &coeffs);
    let better = match best {
        None => true,
        Some(b) => obj < b.objective || (obj == b.objective && coeff_norm(&coeffs) < coeff_norm(&b.coeffs)),
    };
    if better {
        *best = Some(SupportFit { objective: obj, coeffs });
    }
}

/// Exact ℓ¹ best fit on the support `{j}`: the optimum sits at a breakpoint `t = z_i`.
fn fit_single(mat: &BinarySparseMatrix, z: &[f64], j: usize) -> SupportFit {
    let mut best = None;
    for &i in mat.col_support(j) {
        consider(&mut best, mat, z, vec![(j, z[i])]);
    }
    best.expect("columns are nonempty")
}

/// Exact ℓ¹ best fit on the support `{j, k}`.
///
/// Rows split by type: only `j` (coefficient a), only `k` (b), both (a + b).
/// A basic optimal solution zeroes two residuals of independent types; the
/// one-variable fits cover the rank-deficient case.
fn fit_pair(mat: &BinarySparseMatrix, z: &[f64], j: usize, k: usize) -> SupportFit {
    let (sj, sk) = (mat.col_support(j), mat.col_support(k));
    let only_j: Vec<usize> = sj.iter().copied().filter(|r| !sk.contains(r)).collect();
    let only_k: Vec<usize> = sk.iter().copied().filter(|r| !sj.contains(r)).collect();
    let both: Vec<usize> = sj.iter().copied().filter(|r| sk.contains(r)).collect();

    let mut best = None;
    for &ra in &only_j {
        for &rb in &only_k {
            consider(&mut best, mat, z, vec![(j, z[ra]), (k, z[rb])]);
        }
        for &rc in &both {
            consider(&mut best, mat, z, vec![(j, z[ra]), (k, z[rc] - z[ra])]);
        }
    }
    for &rb in &only_k {
        for &rc in &both {
            consider(&mut best, mat, z, vec![(j, z[rc] - z[rb]), (k, z[rb])]);
        }
    }
    for &i in sj {
        consider(&mut best, mat, z, vec![(j, z[i]), (k, 0.0)]);
    }
    for &i in sk {
        consider(&mut best, mat, z, vec![(j, 0.0), (k, z[i])]);
    }
    best.expect("pairs of nonempty columns always produce candidates")
}

/// `argmin ‖z − Φv‖₁` over `‖v‖₀ ≤ n`, `n ∈ {1, 2}`, by exhaustive support enumeration.
///
/// Supports are visited in lexicographic order (empty, singletons, pairs); a
/// later support replaces the incumbent only when strictly better.
pub fn decode(mat: &BinarySparseMatrix, z: &[f64], n: usize) -> Result<Vec<f64>> {
    if n > 2 {
        return Err(Error::UnsupportedSparsity(n));
    }
    if z.len() != mat.rows() {
        return Err(Error::InvalidDimensions(format!("z has {} entries, expected {}", z.len(), mat.rows())));
    }
    let scale = 1e-13 * (1.0 + l1(z));
    let mut best = SupportFit { objective: l1(z), coeffs: Vec::new() };
    let offer = |fit: SupportFit, best: &mut SupportFit| {
        if fit.objective < best.objective - scale {
            *best = fit;
        }
    };
    if n >= 1 {
        for j in 0..mat.cols() {
            offer(fit_single(mat, z, j), &mut best);
        }
    }
    if n >= 2 {
        for j in 0..mat.cols() {
            for k in j + 1..mat.cols() {
                offer(fit_pair(mat, z, j, k), &mut best);
            }
        }
    }
    let mut v = vec![0.0; mat.cols()];
    for (j, c) in best.coeffs {
        v[j] = c;
    }
    Ok(v)
}

/// `‖z − Φv‖₁`.
pub fn l1_misfit(mat: &BinarySparseMatrix, z: &[f64], v: &[f64]) -> f64 {
    let r: Vec<f64> = mat.apply(v).iter().zip(z).map(|(a, b)| b - a).collect();
    l1(&r)
}

/// `‖u − decode(Φu)‖₁ / e_n(u)₁`.
pub fn iop_ratio(mat: &BinarySparseMatrix, u: &[f64], n: usize) -> Result<f64> {
    let tail = best_n_term_error(u, n);
    if tail == 0.0 {
        return Err(Error::ExactlySparse(n));
    }
    let u_hat = decode(mat, &mat.apply(u), n)?;
    let err: f64 = u.iter().zip(&u_hat).map(|(a, b)| (a - b).abs()).sum();
    Ok(err / tail)
}

/// Basis of `ker Φ` (columns of the returned `N × dim` list) by Gauss–Jordan elimination.
pub fn kernel_basis(mat: &BinarySparseMatrix) -> Vec<Vec<f64>> {
    let (m, n) = (mat.rows(), mat.cols());
    let mut a = mat.to_dense();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (p, val) = (row..m).map(|r| (r, a[r][col].abs())).max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        if val < RANK_TOL {
            continue;
        }
        a.swap(row, p);
        let piv = a[row][col];
        a[row].iter_mut().for_each(|x| *x /= piv);
        for r in 0..m {
            if r != row && a[r][col] != 0.0 {
                let f = a[r][col];
                let src = a[row].clone();
                a[r].iter_mut().zip(&src).for_each(|(x, s)| *x -= f * s);
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][f];
            }
            v
        })
        .collect()
}

fn column_rank(mat: &BinarySparseMatrix, cols: &[usize]) -> usize {
    let mut a: Vec<Vec<f64>> = (0..mat.rows()).map(|i| cols.iter().map(|&j| mat.get(i, j)).collect()).collect();
    let (m, k) = (a.len(), cols.len());
    let mut rank = 0;
    for c in 0..k {
        let Some(p) = (rank..m).filter(|&r| a[r][c].abs() > RANK_TOL).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())) else {
            continue;
        };
        a.swap(rank, p);
        let piv = a[rank][c];
        for r in rank + 1..m {
            let f = a[r][c] / piv;
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(r);
                for (x, y) in bottom[0][c..].iter_mut().zip(&top[rank][c..]) {
                    *x -= f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// A column set of size `≤ k` whose columns are linearly dependent, i.e. the
/// support of a `k`-sparse kernel vector. `None` means `Φ` is injective on
/// `k`-sparse vectors.
pub fn sparse_kernel_support(mat: &BinarySparseMatrix, k: usize) -> Result<Option<Vec<usize>>> {
    let k = k.min(mat.cols());
    check_enumerable(mat.cols(), k)?;
    let mut found = None;
    for_each_subset(mat.cols(), k, &mut |s| {
        if found.is_none() && column_rank(mat, s) < s.len() {
            found = Some(s.to_vec());
        }
    });
    Ok(found)
}

/// Sampled null space constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspEstimate {
    /// Max of `‖v‖₁ / e_k(v)₁` over sampled kernel vectors; `∞` when a
    /// `k`-sparse kernel vector exists.
    pub c1_hat: f64,
    /// Support of a `k`-sparse kernel vector, if any.
    pub violation: Option<Vec<usize>>,
    pub kernel_dim: usize,
}

/// Lower bound on the `NSP(k, C₁)` constant from random kernel combinations,
/// plus an exhaustive search for `k`-sparse kernel vectors.
pub fn nsp_sample(mat: &BinarySparseMatrix, k: usize, trials: usize, seed: u64) -> Result<NspEstimate> {
    let basis = kernel_basis(mat);
    if basis.is_empty() {
        return Err(Error::TrivialKernel);
    }
    let violation = sparse_kernel_support(mat, k)?;
    let kernel_dim = basis.len();
    if violation.is_some() {
        return Ok(NspEstimate { c1_hat: f64::INFINITY, violation, kernel_dim });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c1_hat: f64 = 0.0;
    let mut v = vec![0.0; mat.cols()];
    let eval = |v: &[f64]| {
        let tail = best_n_term_error(v, k);
        if tail > 0.0 {
            l1(v) / tail
        } else {
            f64::INFINITY
        }
    };
    if kernel_dim == 1 {
        c1_hat = eval(&basis[0]);
    } else {
        for _ in 0..trials {
            v.iter_mut().for_each(|x| *x = 0.0);
            for b in &basis {
                let g: f64 = rng.sample(StandardNormal);
                v.iter_mut().zip(b).for_each(|(x, bi)| *x += g * bi);
            }
            c1_hat = c1_hat.max(eval(&v));
        }
    }
    Ok(NspEstimate { c1_hat, violation: None, kernel_dim })
}
