//! Product states in small subspaces of ℂ³ ⊗ ℂ³.
//!
//! A product vector `|a, b⟩` is orthogonal to constraint vectors `ψ_i` iff
//! `K(a) b = 0`, where row `i` of `K(a)` is `aᵀ conj(M_i)` and `M_i` is the
//! matrix of `ψ_i`. With at least four constraints this happens iff every
//! 3×3 minor of `K(a)` vanishes, a system of cubics in `a` solved by
//! multi-start Gauss–Newton in affine charts. Each root is then polished on
//! the bilinear system in `(a, b)` and deduplicated projectively.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complement_basis, kernel_basis, sorted_svd, span_basis, vec_to_mat, Mat3, Op9, Tolerances,
    Vec3, Vec9, C64,
};
use crate::sampling::{gaussian_c64, haar_vec3, rng_from_seed};
use crate::segre::ProductVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Low-discrepancy starts in each of the three affine charts.
    pub grid_per_chart: usize,
    pub newton_iters: usize,
    /// Bound on `‖P_⊥ |a, b⟩‖` for a reported point.
    pub residual_tol: f64,
    /// Points with `1 − |⟨a|a'⟩⟨b|b'⟩|` below this are merged.
    pub dedupe_tol: f64,
    /// Additional Haar-random starts.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid_per_chart: 24,
            newton_iters: 60,
            residual_tol: 1e-10,
            dedupe_tol: 1e-6,
            restarts: 200,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_per_chart == 0
            || self.newton_iters == 0
            || self.restarts == 0
            || !(self.residual_tol > 0.0)
            || !(self.dedupe_tol > 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "search parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundPoint {
    pub point: ProductVector,
    pub residual: f64,
    /// The polished Jacobian was nearly singular: probably a point of
    /// intersection multiplicity above one.
    pub multiplicity_suspected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub points: Vec<FoundPoint>,
    pub starts: usize,
    pub failed_starts: usize,
    /// Pairs of distinct roots closer than `100 · dedupe_tol`.
    pub borderline_clusters: usize,
}

impl SearchReport {
    pub fn product_states(&self) -> Vec<ProductVector> {
        self.points.iter().map(|p| p.point).collect()
    }
}

struct Problem {
    /// `conj(M_i)` for each constraint; `⟨ψ_i|a, b⟩ = aᵀ N_i b`.
    n: Vec<Mat3>,
    /// Orthonormal basis of the constraint span, used for residuals.
    ortho: Vec<Vec9>,
    triples: Vec<[usize; 3]>,
}

impl Problem {
    fn new(constraints: &[Vec9], rank_rel: f64) -> Result<Self> {
        let ortho = span_basis(constraints, rank_rel);
        if ortho.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 independent constraints, got {}",
                ortho.len()
            )));
        }
        let n = constraints
            .iter()
            .filter(|v| v.norm() > 0.0)
            .map(|v| vec_to_mat(&(v / C64::new(v.norm(), 0.0))).map(|z| z.conj()))
            .collect::<Vec<_>>();
        let m = n.len();
        let mut triples = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    triples.push([i, j, k]);
                }
            }
        }
        Ok(Problem { n, ortho, triples })
    }

    fn rows(&self, a: &Vec3) -> Vec<Vec3> {
        self.n.iter().map(|n| n.transpose() * a).collect()
    }

    /// Minors and their derivatives with respect to the three entries of `a`.
    fn minors(&self, a: &Vec3) -> (DVector<C64>, DMatrix<C64>) {
        let rows = self.rows(a);
        let det = |x: &Vec3, y: &Vec3, z: &Vec3| {
            Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]).determinant()
        };
        let mut f = DVector::zeros(self.triples.len());
        let mut jac = DMatrix::zeros(self.triples.len(), 3);
        for (t, &[i, j, k]) in self.triples.iter().enumerate() {
            f[t] = det(&rows[i], &rows[j], &rows[k]);
            for l in 0..3 {
                let di = self.n[i].row(l).transpose();
                let dj = self.n[j].row(l).transpose();
                let dk = self.n[k].row(l).transpose();
                jac[(t, l)] = det(&di, &rows[j], &rows[k])
                    + det(&rows[i], &dj, &rows[k])
                    + det(&rows[i], &rows[j], &dk);
            }
        }
        (f, jac)
    }

    fn constraint_matrix(&self, a: &Vec3) -> DMatrix<C64> {
        let rows = self.rows(a);
        DMatrix::from_fn(rows.len(), 3, |i, k| rows[i][k])
    }

    fn bilinear(&self, a: &Vec3, b: &Vec3) -> DVector<C64> {
        DVector::from_iterator(
            self.n.len(),
            self.n.iter().map(|n| (a.transpose() * n * b)[(0, 0)]),
        )
    }

    /// `‖P_⊥ |a, b⟩‖` for unit `a`, `b`.
    fn residual(&self, a: &Vec3, b: &Vec3) -> f64 {
        let x = crate::linalg::kron(
            &(a / C64::new(a.norm(), 0.0)),
            &(b / C64::new(b.norm(), 0.0)),
        );
        self.ortho
            .iter()
            .map(|q| q.dotc(&x).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn pivot(v: &Vec3) -> usize {
    (0..3)
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap_or(0)
}

fn chart_normalize(v: &Vec3) -> (Vec3, usize) {
    let p = pivot(v);
    (v / v[p], p)
}

/// Damped least-squares step `δ` minimizing `‖J δ + f‖`.
fn lstsq_step(jac: &DMatrix<C64>, f: &DVector<C64>) -> Option<DVector<C64>> {
    let svd = crate::linalg::checked_svd(jac);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let cutoff = 1e-13 * smax;
    let u = svd.u.as_ref()?;
    let v_t = svd.v_t.as_ref()?;
    let mut step = DVector::zeros(jac.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coeff = u.column(k).dotc(f) / C64::new(s, 0.0);
            step -= v_t.row(k).adjoint() * coeff;
        }
    }
    Some(step)
}

fn free_columns(jac: &DMatrix<C64>, skip: usize) -> DMatrix<C64> {
    let keep: Vec<usize> = (0..jac.ncols()).filter(|&c| c != skip).collect();
    DMatrix::from_fn(jac.nrows(), keep.len(), |i, j| jac[(i, keep[j])])
}

fn scatter(step: &DVector<C64>, skip: usize, len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    let mut k = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        if i != skip {
            *slot = step[k];
            k += 1;
        }
    }
    out
}

/// Gauss–Newton on the minors from `a0`; `None` if the start does not converge.
fn newton_minors(problem: &Problem, a0: Vec3, iters: usize) -> Option<Vec3> {
    let (mut a, _) = chart_normalize(&a0);
    let mut fnorm = problem.minors(&a).0.norm();
    // linear convergence towards multiple roots is allowed to run longer
    let max_iters = 4 * iters;
    for it in 0..max_iters {
        if fnorm < 1e-15 {
            return Some(a);
        }
        if it >= iters && fnorm > 1e-5 {
            return None;
        }
        let p = pivot(&a);
        a /= a[p];
        let (f, jac) = problem.minors(&a);
        let step = lstsq_step(&free_columns(&jac, p), &f)?;
        let delta = scatter(&step, p, 3);
        let delta = Vec3::from_fn(|i, _| delta[i]);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = a + delta * C64::new(t, 0.0);
            let fn_trial = problem.minors(&trial).0.norm();
            if fn_trial < fnorm {
                a = trial;
                fnorm = fn_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || delta.norm() * t < 1e-15 * a.norm() {
            return (fnorm < 1e-8).then_some(a);
        }
    }
    (fnorm < 1e-8).then_some(a)
}

/// Newton on the bilinear system in both factors; returns the polished pair
/// and the relative smallest singular value of the final Jacobian.
fn polish(problem: &Problem, a0: Vec3, b0: Vec3) -> (Vec3, Vec3, f64) {
    let (mut a, _) = chart_normalize(&a0);
    let (mut b, _) = chart_normalize(&b0);
    let mut best = (a, b, problem.residual(&a, &b));
    let mut conditioning = 1.0;
    for _ in 0..20 {
        let (pa, pb) = (pivot(&a), pivot(&b));
        a /= a[pa];
        b /= b[pb];
        let g = problem.bilinear(&a, &b);
        let m = problem.n.len();
        let jac = DMatrix::from_fn(m, 6, |i, l| {
            if l < 3 {
                (problem.n[i] * b)[l]
            } else {
                (problem.n[i].transpose() * a)[l - 3]
            }
        });
        let keep: Vec<usize> = (0..6).filter(|&l| l != pa && l != 3 + pb).collect();
        let reduced = DMatrix::from_fn(m, 4, |i, j| jac[(i, keep[j])]);
        let sv = reduced.singular_values();
        conditioning = sv.min() / sv.max().max(f64::MIN_POSITIVE);
        let Some(step) = lstsq_step(&reduced, &g) else {
            break;
        };
        for (j, &l) in keep.iter().enumerate() {
            if l < 3 {
                a[l] += step[j];
            } else {
                b[l - 3] += step[j];
            }
        }
        let res = problem.residual(&a, &b);
        if res < best.2 {
            best = (a, b, res);
        } else if res > 10.0 * best.2 {
            break;
        }
        if step.norm() < 1e-15 {
            break;
        }
    }
    (best.0, best.1, conditioning)
}

/// Polynomial system `F_k(z) = c_k + l_kᵀ z + zᵀ Q_k z` of degree at most two.
struct Quadratic {
    c: DVector<C64>,
    l: DMatrix<C64>,
    q: Vec<DMatrix<C64>>,
}

impl Quadratic {
    fn vars(&self) -> usize {
        self.l.ncols()
    }

    fn eval(&self, z: &DVector<C64>) -> DVector<C64> {
        DVector::from_fn(self.c.len(), |k, _| {
            self.c[k] + (self.l.row(k) * z)[(0, 0)] + (z.transpose() * &self.q[k] * z)[(0, 0)]
        })
    }

    fn jacobian(&self, z: &DVector<C64>) -> DMatrix<C64> {
        let mut jac = self.l.clone();
        for (k, q) in self.q.iter().enumerate() {
            let grad = (q + q.transpose()).transpose() * z;
            for s in 0..self.vars() {
                jac[(k, s)] += grad[s];
            }
        }
        jac
    }

    /// Appends `J(z) B λ = 0` and `hᵀ λ = 1` with random `B` of width
    /// `rank J + 1`; returns the augmented system and its starting point.
    fn deflate(&self, z0: &DVector<C64>, corank: usize, seed: u64) -> (Quadratic, DVector<C64>) {
        let (m, n) = (self.c.len(), self.vars());
        let width = n - corank + 1;
        let mut rng = rng_from_seed(seed);
        let basis = DMatrix::from_fn(n, width, |_, _| gaussian_c64(&mut rng));
        let h = DVector::from_fn(width, |_, _| gaussian_c64(&mut rng));
        let svd = sorted_svd(&(self.jacobian(z0) * &basis));
        let v = DVector::from_fn(width, |j, _| svd.v[(j, width - 1)]);
        let lambda0 = &v / h.dot(&v);
        let n2 = n + width;
        let m2 = 2 * m + 1;
        let mut c = DVector::zeros(m2);
        c[m2 - 1] = C64::new(-1.0, 0.0);
        c.rows_mut(0, m).copy_from(&self.c);
        let mut l = DMatrix::zeros(m2, n2);
        l.view_mut((0, 0), (m, n)).copy_from(&self.l);
        l.view_mut((m, n), (m, width))
            .copy_from(&(&self.l * &basis));
        for j in 0..width {
            l[(m2 - 1, n + j)] = h[j];
        }
        let mut q = Vec::with_capacity(m2);
        for qk in &self.q {
            let mut big = DMatrix::zeros(n2, n2);
            big.view_mut((0, 0), (n, n)).copy_from(qk);
            q.push(big);
        }
        for qk in &self.q {
            let mut big = DMatrix::zeros(n2, n2);
            big.view_mut((0, n), (n, width))
                .copy_from(&((qk + qk.transpose()) * &basis));
            q.push(big);
        }
        q.push(DMatrix::zeros(n2, n2));
        let mut w0 = DVector::zeros(n2);
        w0.rows_mut(0, n).copy_from(z0);
        w0.rows_mut(n, width).copy_from(&lambda0);
        (Quadratic { c, l, q }, w0)
    }

    fn gauss_newton(&self, mut z: DVector<C64>, iters: usize) -> DVector<C64> {
        let mut fnorm = self.eval(&z).norm();
        for _ in 0..iters {
            let Some(step) = lstsq_step(&self.jacobian(&z), &self.eval(&z)) else {
                break;
            };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let trial = &z + &step * C64::new(t, 0.0);
                let fn_trial = self.eval(&trial).norm();
                if fn_trial < fnorm {
                    z = trial;
                    fnorm = fn_trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            if step.norm() <= 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        z
    }
}

/// The bilinear system `⟨q_k|a, b⟩ = 0` in the affine chart `a_pa = b_pb = 1`.
fn chart_system(problem: &Problem, pa: usize, pb: usize) -> Quadratic {
    let free = |p: usize| -> Vec<usize> { (0..3).filter(|&i| i != p).collect() };
    let (fa, fb) = (free(pa), free(pb));
    let m = problem.ortho.len();
    let mut c = DVector::zeros(m);
    let mut l = DMatrix::zeros(m, 4);
    let mut q = Vec::with_capacity(m);
    for (k, v) in problem.ortho.iter().enumerate() {
        let w = vec_to_mat(v).map(|x| x.conj());
        c[k] = w[(pa, pb)];
        for (s, &i) in fa.iter().enumerate() {
            l[(k, s)] = w[(i, pb)];
        }
        for (t, &j) in fb.iter().enumerate() {
            l[(k, 2 + t)] = w[(pa, j)];
        }
        let mut qk = DMatrix::zeros(4, 4);
        for (s, &i) in fa.iter().enumerate() {
            for (t, &j) in fb.iter().enumerate() {
                qk[(s, 2 + t)] = w[(i, j)];
            }
        }
        q.push(qk);
    }
    Quadratic { c, l, q }
}

const MAX_DEFLATIONS: usize = 5;
/// Unrefined starts this close to a found point are attributed to it.
const CLUSTER_RADIUS: f64 = 1e-3;
const SINGULAR_RATIO: f64 = 1e-6;
/// Deflation keeps failing on positive-dimensional components; give up after this many.
const MAX_FAILED_DEFLATIONS: usize = 4;

/// Refines an approximate singular root by repeated deflation, which makes
/// it a regular root of an augmented system and restores full accuracy.
fn deflated_refine(problem: &Problem, a0: &Vec3, b0: &Vec3) -> Option<(Vec3, Vec3)> {
    let (pa, pb) = (pivot(a0), pivot(b0));
    let (a0, b0) = (a0 / a0[pa], b0 / b0[pb]);
    let mut system = chart_system(problem, pa, pb);
    let z0 = DVector::from_iterator(
        4,
        (0..3)
            .filter(|&i| i != pa)
            .map(|i| a0[i])
            .chain((0..3).filter(|&j| j != pb).map(|j| b0[j])),
    );
    let mut w = system.gauss_newton(z0.clone(), 40);
    for level in 0..=MAX_DEFLATIONS {
        let svd = sorted_svd(&system.jacobian(&w));
        let smax = svd.singular_values[0];
        let null: Vec<usize> = (0..system.vars())
            .filter(|&k| svd.singular_values[k] < SINGULAR_RATIO * smax)
            .collect();
        // null directions that leave z fixed only move the multipliers
        let z_leak = null
            .iter()
            .map(|&k| svd.v.view((0, k), (4, 1)).norm())
            .fold(0.0, f64::max);
        let converged = system.eval(&w).norm() <= 1e-12;
        log::trace!(
            "deflation level {level}: {} variables, {} null directions",
            system.vars(),
            null.len()
        );
        if converged && z_leak < 1e-6 {
            break;
        }
        if level == MAX_DEFLATIONS {
            return None;
        }
        let (next, start) = system.deflate(&w, null.len().max(1), level as u64);
        system = next;
        w = system.gauss_newton(start, 40);
    }
    let z = w.rows(0, 4).into_owned();
    if (&z - &z0).norm() > 0.5 {
        return None;
    }
    let mut a = Vec3::zeros();
    let mut b = Vec3::zeros();
    a[pa] = C64::new(1.0, 0.0);
    b[pb] = C64::new(1.0, 0.0);
    for (s, i) in (0..3).filter(|&i| i != pa).enumerate() {
        a[i] = z[s];
    }
    for (t, j) in (0..3).filter(|&j| j != pb).enumerate() {
        b[j] = z[2 + t];
    }
    Some((a, b))
}

/// Additive recurrence in four dimensions, mapped to two complex coordinates in the unit square.
fn r4_point(n: usize) -> (C64, C64) {
    // plastic-like constant for d = 4: root of x⁵ = x + 1
    let g = 1.167_303_978_261_418_7_f64;
    let alpha: Vec<f64> = (1..=4).map(|k| 1.0 / g.powi(k)).collect();
    let u: Vec<f64> = alpha
        .iter()
        .map(|a| (0.5 + a * (n as f64 + 1.0)).fract() * 2.0 - 1.0)
        .collect();
    (C64::new(u[0], u[1]), C64::new(u[2], u[3]))
}

fn starts(cfg: &SearchConfig) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(3 * cfg.grid_per_chart + cfg.restarts);
    for chart in 0..3 {
        for n in 0..cfg.grid_per_chart {
            let (s, t) = r4_point(n + chart * 7919);
            let mut a = Vec3::zeros();
            a[chart] = C64::new(1.0, 0.0);
            a[(chart + 1) % 3] = s;
            a[(chart + 2) % 3] = t;
            out.push(a);
        }
    }
    let mut rng = rng_from_seed(cfg.seed);
    out.extend((0..cfg.restarts).map(|_| haar_vec3(&mut rng)));
    out
}

/// All product states orthogonal to every constraint vector.
pub fn search_orthogonal_to(
    constraints: &[Vec9],
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<SearchReport> {
    search(constraints, cfg, tol, false)
}

/// Newton on the minors multiplied by `∏_k (1 + 1/d(a, a_k))`, where `d` is
/// the projective sine distance to the roots already found. Known roots repel
/// the iteration, so the remaining roots become reachable from any start.
fn deflated_newton(problem: &Problem, a0: Vec3, known: &[Vec3], iters: usize) -> Option<Vec3> {
    let p = pivot(&a0);
    let a0 = a0 / a0[p];
    let free: Vec<usize> = (0..3).filter(|&i| i != p).collect();
    let point = |x: &DVector<f64>| {
        let mut a = Vec3::zeros();
        a[p] = C64::new(1.0, 0.0);
        for (k, &i) in free.iter().enumerate() {
            a[i] = C64::new(x[2 * k], x[2 * k + 1]);
        }
        a
    };
    let eval = |x: &DVector<f64>| {
        let a = point(x);
        let unit = a / C64::new(a.norm(), 0.0);
        let factor: f64 = known
            .iter()
            .map(|r| {
                let overlap = r.dotc(&unit).norm() / r.norm();
                1.0 + 1.0 / (1.0 - overlap * overlap).max(0.0).sqrt().max(1e-300)
            })
            .product();
        let f = problem.minors(&a).0;
        DVector::from_iterator(
            2 * f.len(),
            f.iter().flat_map(|z| [z.re * factor, z.im * factor]),
        )
    };
    let mut x = DVector::from_iterator(4, free.iter().flat_map(|&i| [a0[i].re, a0[i].im]));
    let mut fx = eval(&x);
    for _ in 0..iters {
        if problem.minors(&point(&x)).0.norm() < 1e-8 {
            return Some(point(&x));
        }
        let h = 1e-7 * (1.0 + x.norm());
        let jac = DMatrix::from_fn(fx.len(), 4, |_, _| 0.0);
        let jac = (0..4).fold(jac, |mut jac, c| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            jac.set_column(c, &((eval(&xp) - eval(&xm)) / (2.0 * h)));
            jac
        });
        let step = jac.svd(true, true).solve(&fx, 1e-12).ok()?;
        let norm = fx.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = &x - &step * t;
            let ft = eval(&trial);
            if ft.norm() < norm {
                (x, fx) = (trial, ft);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

struct Collector<'a> {
    problem: &'a Problem,
    cfg: &'a SearchConfig,
    first_only: bool,
    found: Vec<FoundPoint>,
    failed: usize,
    borderline: usize,
    failed_deflations: usize,
}

impl Collector<'_> {
    /// Polishes a root of the minors and records it; returns whether a new point was added.
    fn accept(&mut self, a: Vec3) -> Result<bool> {
        let problem = self.problem;
        let svd = sorted_svd(&problem.constraint_matrix(&a));
        let b = Vec3::from_fn(|i, _| svd.v[(i, 2)]);
        let (mut a, mut b, conditioning) = polish(problem, a, b);
        let mut residual = problem.residual(&a, &b);
        let singular = conditioning < 1e-6;
        let refine = !(residual <= self.cfg.residual_tol) || (singular && !self.first_only);
        if refine && self.failed_deflations < MAX_FAILED_DEFLATIONS {
            let rough = ProductVector::new(a, b)?;
            if let Some(existing) = self
                .found
                .iter_mut()
                .find(|p| p.point.distance(&rough) <= CLUSTER_RADIUS)
            {
                existing.multiplicity_suspected = true;
                return Ok(false);
            }
            match deflated_refine(problem, &a, &b) {
                Some((a2, b2)) => {
                    let r2 = problem.residual(&a2, &b2);
                    if r2 <= residual.max(self.cfg.residual_tol) {
                        (a, b, residual) = (a2, b2, r2);
                    }
                }
                None => self.failed_deflations += 1,
            }
        }
        if !(residual <= self.cfg.residual_tol) {
            debug!("residual {residual:e} above tolerance");
            self.failed += 1;
            return Ok(false);
        }
        let point = ProductVector::new(a, b)?;
        let candidate = FoundPoint {
            point,
            residual,
            multiplicity_suspected: singular,
        };
        match self
            .found
            .iter_mut()
            .find(|p| p.point.distance(&point) <= self.cfg.dedupe_tol)
        {
            Some(existing) => {
                if candidate.residual < existing.residual {
                    let flag = existing.multiplicity_suspected || candidate.multiplicity_suspected;
                    *existing = candidate;
                    existing.multiplicity_suspected = flag;
                }
                Ok(false)
            }
            None => {
                if self
                    .found
                    .iter()
                    .any(|p| p.point.distance(&point) <= 100.0 * self.cfg.dedupe_tol)
                {
                    warn!("two product states within 100 x dedupe_tol; probable double point");
                    self.borderline += 1;
                }
                self.found.push(candidate);
                Ok(true)
            }
        }
    }
}

/// With `first_only` the search returns at the first accepted point and
/// skips refinement of singular roots.
fn search(
    constraints: &[Vec9],
    cfg: &SearchConfig,
    tol: &Tolerances,
    first_only: bool,
) -> Result<SearchReport> {
    cfg.validate()?;
    let problem = Problem::new(constraints, tol.rank_rel)?;
    let kernel_mode = problem.ortho.len() == 4;
    let all_starts = starts(cfg);
    let grid_count = 3 * cfg.grid_per_chart;
    let mut c = Collector {
        problem: &problem,
        cfg,
        first_only,
        found: Vec::new(),
        failed: 0,
        borderline: 0,
        failed_deflations: 0,
    };
    let mut used = 0;
    for (idx, a0) in all_starts.iter().enumerate() {
        if first_only && !c.found.is_empty() {
            break;
        }
        if kernel_mode && idx >= grid_count && c.found.len() >= 6 {
            break;
        }
        used += 1;
        match newton_minors(&problem, *a0, cfg.newton_iters) {
            Some(a) => {
                c.accept(a)?;
            }
            None => c.failed += 1,
        }
    }
    if kernel_mode && !first_only && c.found.len() < 6 {
        // roots with tiny basins: repel the iteration from the known ones
        debug!(
            "{} of 6 kernel products after plain starts, deflating",
            c.found.len()
        );
        for a0 in all_starts.iter().take(grid_count) {
            if c.found.len() >= 6 {
                break;
            }
            used += 1;
            let known: Vec<Vec3> = c.found.iter().map(|p| p.point.a).collect();
            let Some(a) = deflated_newton(&problem, *a0, &known, cfg.newton_iters)
                .and_then(|a| newton_minors(&problem, a, cfg.newton_iters))
            else {
                c.failed += 1;
                continue;
            };
            c.accept(a)?;
        }
    }
    let Collector {
        mut found,
        failed,
        borderline,
        ..
    } = c;
    if kernel_mode && found.len() > 6 {
        return Err(Error::BezoutViolation { found: found.len() });
    }
    found.sort_by_key(|p| p.point.order_key());
    Ok(SearchReport {
        points: found,
        starts: used,
        failed_starts: failed,
        borderline_clusters: borderline,
    })
}

pub fn product_states_orthogonal_to(
    constraints: &[Vec9],
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<Vec<ProductVector>> {
    Ok(search_orthogonal_to(constraints, cfg, tol)?.product_states())
}

/// Product states in the span of `basis` (dimension at most 5).
pub fn product_states_in_subspace(
    basis: &[Vec9],
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<Vec<ProductVector>> {
    let span = span_basis(basis, tol.rank_rel);
    if span.is_empty() || span.len() > 5 {
        return Err(Error::SpanDimension {
            expected: 5,
            found: span.len(),
        });
    }
    product_states_orthogonal_to(&complement_basis(&span, tol.rank_rel), cfg, tol)
}

/// Product states in `ker ρ`.
pub fn kernel_product_states(
    rho: &Op9,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<Vec<ProductVector>> {
    let kernel = kernel_basis(rho, tol.rank_rel);
    product_states_in_subspace(&kernel, cfg, tol)
}

/// Whether the range of a state of rank at most 5 contains a product state.
pub fn range_has_product_state(rho: &Op9, cfg: &SearchConfig, tol: &Tolerances) -> Result<bool> {
    let kernel = kernel_basis(rho, tol.rank_rel);
    if kernel.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "rank {} is above 5",
            9 - kernel.len()
        )));
    }
    Ok(!search(&kernel, cfg, tol, true)?.points.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, ONE};
    use crate::upb::{upb_from_angles, UpbAngles};

    fn ket(i: usize, j: usize) -> Vec9 {
        let mut v = Vec9::zeros();
        v[3 * i + j] = ONE;
        v
    }

    #[test]
    fn tiles_kernel_has_six_points() {
        let tol = Tolerances::default();
        let q = upb_from_angles(&UpbAngles::tiles()).unwrap();
        let basis: Vec<Vec9> = q.iter().map(|p| p.to_vec9()).collect();
        let points = product_states_in_subspace(&basis, &SearchConfig::default(), &tol).unwrap();
        assert_eq!(points.len(), 6);
        for p in &q {
            assert!(points.iter().any(|x| x.distance(p) < 1e-9));
        }
    }

    #[test]
    fn separable_range_has_product_state() {
        let tol = Tolerances::default();
        let rho = [
            ket(0, 0),
            ket(1, 1),
            ket(2, 2),
            kron(&Vec3::new(ONE, ONE, ONE), &Vec3::new(ONE, -ONE, ONE)),
        ]
        .iter()
        .fold(Op9::zeros(), |acc, v| acc + v * v.adjoint());
        assert!(range_has_product_state(&rho, &SearchConfig::default(), &tol).unwrap());
    }

    #[test]
    fn determinism() {
        let tol = Tolerances::default();
        let constraints = [
            ket(1, 2),
            ket(2, 1),
            ket(0, 1) - ket(1, 0) - ket(2, 2),
            ket(0, 2) + ket(1, 1) - ket(2, 0),
        ];
        let cfg = SearchConfig {
            seed: 5,
            ..SearchConfig::default()
        };
        let a = search_orthogonal_to(&constraints, &cfg, &tol).unwrap();
        let b = search_orthogonal_to(&constraints, &cfg, &tol).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 1);
        assert!(
            a.points[0].point.distance(
                &ProductVector::new(
                    Vec3::new(ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
                    Vec3::new(ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
                )
                .unwrap()
            ) < 1e-8
        );
    }
}
