//! Dense complex linear algebra on two qutrits.
//!
//! Index convention: the ket `Σ α_ij |ij⟩` is stored as the 9-vector with
//! entry `3i + j`, and as the 3×3 matrix `[α_ij]`. Partial transposition acts
//! on the first (A) factor.

use nalgebra::{DMatrix, Dyn, SMatrix, SVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Vec3 = SVector<C64, 3>;
pub type Vec9 = SVector<C64, 9>;
pub type Mat3 = SMatrix<C64, 3, 3>;
pub type Op9 = SMatrix<C64, 9, 9>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Numerical thresholds shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values below `rank_rel * σ_max` count as zero.
    pub rank_rel: f64,
    /// Relative tolerance for equality tests (projective points, invariants).
    pub eq_rel: f64,
    /// Allowed negative eigenvalue, relative to the operator norm, for PSD tests.
    pub psd_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-9,
            eq_rel: 1e-8,
            psd_slack: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all_positive = self.rank_rel > 0.0 && self.eq_rel > 0.0 && self.psd_slack > 0.0;
        if !all_positive || self.rank_rel >= self.eq_rel {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive with rank_rel < eq_rel, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `ρ^Γ = Σ_ij ⟨i|ρ|j⟩ ⊗ |j⟩⟨i|`: block `(i, j)` of the result is block
/// `(j, i)` of the input.
pub fn partial_transpose(rho: &Op9) -> Op9 {
    Op9::from_fn(|row, col| {
        let (i, k) = (row / 3, row % 3);
        let (j, l) = (col / 3, col % 3);
        rho[(3 * j + k, 3 * i + l)]
    })
}

pub fn kron(a: &Vec3, b: &Vec3) -> Vec9 {
    Vec9::from_fn(|idx, _| a[idx / 3] * b[idx % 3])
}

pub fn kron_op(a: &Mat3, b: &Mat3) -> Op9 {
    Op9::from_fn(|row, col| a[(row / 3, col / 3)] * b[(row % 3, col % 3)])
}

pub fn vec_to_mat(v: &Vec9) -> Mat3 {
    Mat3::from_fn(|i, j| v[3 * i + j])
}

pub fn mat_to_vec(m: &Mat3) -> Vec9 {
    Vec9::from_fn(|idx, _| m[(idx / 3, idx % 3)])
}

pub fn is_finite_op(m: &Op9) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max|M − M†| ≤ tol·‖M‖`.
pub fn is_hermitian(m: &Op9, tol: f64) -> bool {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let dev = (m - m.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    dev <= tol * scale
}

pub fn hermitian_part(m: &Op9) -> Op9 {
    (m + m.adjoint()) * r(0.5)
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
pub fn hermitian_eigen(m: &Op9) -> (Vec<f64>, Vec<Vec9>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    (values, vectors)
}

pub fn min_eigenvalue(m: &Op9) -> f64 {
    hermitian_eigen(m).0[0]
}

/// `λ_min ≥ −psd_slack·‖M‖₂`.
pub fn is_psd(m: &Op9, tol: &Tolerances) -> bool {
    let (values, _) = hermitian_eigen(m);
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    values[0] >= -tol.psd_slack * scale
}

/// Minimal eigenpair of a 3×3 Hermitian matrix.
pub fn min_eigenpair3(m: &Mat3) -> (f64, Vec3) {
    let eig = SymmetricEigen::new((m + m.adjoint()) * r(0.5));
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Thin SVD with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns, same order as `singular_values`.
    pub u: DMatrix<C64>,
    /// Right singular vectors as columns (full set when `rows >= cols`).
    pub v: DMatrix<C64>,
}

/// SVD whose recomposition is verified. With the default convergence
/// threshold nalgebra occasionally returns singular vectors inconsistent with
/// the input for exactly rank-deficient complex matrices; looser thresholds
/// are tried until `‖U Σ V† − M‖` is at rounding level.
pub fn checked_svd(m: &DMatrix<C64>) -> SVD<C64, Dyn, Dyn> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if let Some(svd) = m.clone().try_svd(true, true, f64::EPSILON, 1000) {
        let err = svd
            .clone()
            .recompose()
            .map_or(f64::INFINITY, |r| (r - m).norm())
            / scale;
        if err <= 1e-12 {
            return svd;
        }
        log::debug!("nalgebra SVD recomposition error {err:e}, using Jacobi");
    }
    jacobi_svd(m)
}

/// One-sided (Hestenes) Jacobi SVD with a full set of left singular vectors
/// in the thin factor.
fn jacobi_svd(m: &DMatrix<C64>) -> SVD<C64, Dyn, Dyn> {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = jacobi_svd(&m.adjoint());
        return SVD {
            u: t.v_t.map(|x| x.adjoint()),
            v_t: t.u.map(|x| x.adjoint()),
            singular_values: t.singular_values,
        };
    }
    let mut w = m.clone();
    let mut v = DMatrix::<C64>::identity(cols, cols);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase;
                        mat[(i, p)] = x * c - y * sn;
                        mat[(i, q)] = x * sn + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    let mut u = DMatrix::<C64>::zeros(rows, cols);
    let mut filled: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(cols);
    let orthogonalize = |mut col: nalgebra::DVector<C64>, filled: &[nalgebra::DVector<C64>]| {
        for _ in 0..2 {
            for f in filled {
                col -= f * f.dotc(&col);
            }
        }
        col
    };
    for &j in &order {
        let mut col = if sigma[j] > top * 1e-13 {
            orthogonalize(w.column(j) / C64::new(sigma[j], 0.0), &filled)
        } else {
            nalgebra::DVector::zeros(rows)
        };
        if col.norm() <= 0.5 {
            col = (0..rows)
                .map(|k| {
                    orthogonalize(
                        nalgebra::DVector::from_fn(rows, |i, _| {
                            C64::new(f64::from(u8::from(i == k)), 0.0)
                        }),
                        &filled,
                    )
                })
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .expect("at least one row");
        }
        col /= C64::new(col.norm(), 0.0);
        u.set_column(j, &col);
        filled.push(col);
    }
    SVD {
        u: Some(u),
        v_t: Some(v.adjoint()),
        singular_values: nalgebra::DVector::from_vec(sigma),
    }
}

pub fn sorted_svd(m: &DMatrix<C64>) -> SortedSvd {
    let (rows, cols) = m.shape();
    // Pad to a square matrix so that the right factor is complete.
    let n = rows.max(cols);
    let mut square = DMatrix::<C64>::zeros(n, n);
    square.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = checked_svd(&square);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let singular_values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u_sorted = DMatrix::from_fn(rows, n, |i, j| u[(i, order[j])]);
    let v_sorted = DMatrix::from_fn(cols, n, |i, j| v_t[(order[j], i)].conj());
    SortedSvd {
        singular_values,
        u: u_sorted,
        v: v_sorted,
    }
}

fn rank_from_values(values: &[f64], rank_rel: f64) -> usize {
    let max = values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > rank_rel * max).count()
}

pub fn numeric_rank_dyn(m: &DMatrix<C64>, rank_rel: f64) -> usize {
    let (rows, cols) = m.shape();
    let svd = sorted_svd(m);
    rank_from_values(&svd.singular_values[..rows.min(cols)], rank_rel)
}

/// Number of singular values above `rank_rel · σ_max`.
pub fn numeric_rank(m: &Op9, rank_rel: f64) -> usize {
    numeric_rank_dyn(&to_dyn(m), rank_rel)
}

pub fn to_dyn<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> DMatrix<C64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

/// Orthonormal basis of `ker M`.
pub fn kernel_basis(m: &Op9, rank_rel: f64) -> Vec<Vec9> {
    let svd = sorted_svd(&to_dyn(m));
    let rank = rank_from_values(&svd.singular_values, rank_rel);
    (rank..9).map(|k| column9(&svd.v, k)).collect()
}

/// Orthonormal basis of the range of `M`.
pub fn range_basis(m: &Op9, rank_rel: f64) -> Vec<Vec9> {
    let svd = sorted_svd(&to_dyn(m));
    let rank = rank_from_values(&svd.singular_values, rank_rel);
    (0..rank).map(|k| column9(&svd.u, k)).collect()
}

fn column9(m: &DMatrix<C64>, k: usize) -> Vec9 {
    Vec9::from_fn(|i, _| m[(i, k)])
}

/// Columns of a 9×n matrix built from `vectors`.
pub fn stack9(vectors: &[Vec9]) -> DMatrix<C64> {
    DMatrix::from_fn(9, vectors.len(), |i, j| vectors[j][i])
}

/// Orthonormal basis of the span of `vectors`.
pub fn span_basis(vectors: &[Vec9], rank_rel: f64) -> Vec<Vec9> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let svd = sorted_svd(&stack9(vectors));
    let k = vectors.len().min(9);
    let rank = rank_from_values(&svd.singular_values[..k], rank_rel);
    (0..rank).map(|j| column9(&svd.u, j)).collect()
}

/// Orthonormal basis of the orthogonal complement of the span of `vectors`.
pub fn complement_basis(vectors: &[Vec9], rank_rel: f64) -> Vec<Vec9> {
    let span = span_basis(vectors, rank_rel);
    let projector = projector_onto(&span);
    kernel_basis(&projector, rank_rel)
}

/// `Σ |v⟩⟨v|` for orthonormal `vectors`.
pub fn projector_onto(vectors: &[Vec9]) -> Op9 {
    vectors
        .iter()
        .fold(Op9::zeros(), |acc, v| acc + v * v.adjoint())
}

pub fn trace(m: &Op9) -> C64 {
    m.trace()
}

/// Distance of `v` from the span of orthonormal `basis`, relative to `‖v‖`.
pub fn distance_from_span(v: &Vec9, basis: &[Vec9]) -> f64 {
    let mut rest = *v;
    for b in basis {
        rest -= b * b.dotc(v);
    }
    rest.norm() / v.norm().max(f64::MIN_POSITIVE)
}

pub fn inverse3(m: &Mat3) -> Option<Mat3> {
    m.try_inverse()
}

pub fn det3_cols(a: &Vec3, b: &Vec3, c: &Vec3) -> C64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

#[cfg(test)]
mod tests {
    #[test]
    fn checked_svd_recomposes_rank_one_matrix() {
        // Real rank-one matrix stored as complex; plain nalgebra SVD mixes up its singular vectors.
        let entries = [
            1.3683424914491087,
            -0.24652181428567768,
            1.0,
            0.9017788896520572,
            -0.16246529604303905,
            0.6590301004955644,
            -0.970858996751848,
            0.1749108302858975,
            -0.70951461554313,
        ];
        let m = DMatrix::from_column_slice(3, 3, &entries.map(r));
        let svd = checked_svd(&m);
        assert!((svd.recompose().unwrap() - &m).norm() < 1e-12 * m.norm());
        let s = sorted_svd(&m);
        let a = s.u.column(0).into_owned();
        let b = s.v.column(0).into_owned();
        let rebuilt = &a * b.adjoint() * r(s.singular_values[0]);
        assert!((rebuilt - &m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn jacobi_svd_is_accurate_on_nearly_rank_deficient_matrices() {
        let mut rng = crate::sampling::rng_from_seed(5);
        for (rows, cols) in [(4, 2), (2, 4), (9, 9), (6, 3)] {
            let a =
                DMatrix::<C64>::from_fn(rows, 1, |_, _| crate::sampling::gaussian_c64(&mut rng));
            let b =
                DMatrix::<C64>::from_fn(1, cols, |_, _| crate::sampling::gaussian_c64(&mut rng));
            let noise =
                DMatrix::<C64>::from_fn(rows, cols, |_, _| crate::sampling::gaussian_c64(&mut rng))
                    * C64::new(1e-9, 0.0);
            let m = a * b + noise;
            let svd = jacobi_svd(&m);
            let u = svd.u.clone().unwrap();
            let v_t = svd.v_t.clone().unwrap();
            assert!((svd.recompose().unwrap() - &m).norm() < 1e-13 * m.norm());
            let k = rows.min(cols);
            assert!((u.adjoint() * &u - DMatrix::<C64>::identity(k, k)).norm() < 1e-12);
            assert!((&v_t * v_t.adjoint() - DMatrix::<C64>::identity(k, k)).norm() < 1e-12);
        }
    }

    use super::*;

    fn basis9(k: usize) -> Vec9 {
        let mut v = Vec9::zeros();
        v[k] = ONE;
        v
    }

    fn e3(k: usize) -> Vec3 {
        let mut v = Vec3::zeros();
        v[k] = ONE;
        v
    }

    #[test]
    fn partial_transpose_moves_a_indices() {
        // |01⟩⟨10| -> |11⟩⟨00|
        let rho = basis9(1) * basis9(3).adjoint();
        let pt = partial_transpose(&rho);
        let expected = basis9(4) * basis9(0).adjoint();
        assert_eq!(pt, expected);
    }

    #[test]
    fn partial_transpose_of_product_state_stays_psd() {
        let e = Vec3::new(c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)).normalize();
        let f = Vec3::new(c(0.2, 0.0), c(1.0, -1.0), c(0.4, 0.1)).normalize();
        let psi = kron(&e, &f);
        let pt = partial_transpose(&(psi * psi.adjoint()));
        let conj = kron(&e.map(|z| z.conj()), &f);
        assert!((pt - conj * conj.adjoint()).norm() < 1e-14);
        assert!(is_psd(&pt, &Tolerances::default()));
    }

    #[test]
    fn identity_has_full_rank() {
        assert_eq!(numeric_rank(&Op9::identity(), 1e-9), 9);
        assert!(kernel_basis(&Op9::identity(), 1e-9).is_empty());
    }

    #[test]
    fn projector_rank_and_kernel() {
        let vs: Vec<Vec9> = (0..5).map(basis9).collect();
        let p = projector_onto(&vs);
        assert_eq!(numeric_rank(&p, 1e-9), 5);
        let ker = kernel_basis(&p, 1e-9);
        assert_eq!(ker.len(), 4);
        for k in &ker {
            assert!((p * k).norm() < 1e-12);
        }
        assert_eq!(range_basis(&p, 1e-9).len(), 5);
    }

    #[test]
    fn kron_matches_outer_product() {
        let m = vec_to_mat(&kron(&e3(0), &e3(1)));
        let mut expected = Mat3::zeros();
        expected[(0, 1)] = ONE;
        assert_eq!(m, expected);

        let a = Vec3::new(c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 1.0));
        let b = Vec3::new(c(0.0, 1.0), c(3.0, 0.0), c(1.0, 1.0));
        assert_eq!(vec_to_mat(&kron(&a, &b)), a * b.transpose());
        let m = to_dyn(&vec_to_mat(&kron(&a, &b)));
        assert_eq!(numeric_rank_dyn(&m, 1e-9), 1);
    }

    #[test]
    fn vec_to_mat_is_linear() {
        let u = Vec9::from_fn(|i, _| c(i as f64, 1.0));
        let v = Vec9::from_fn(|i, _| c(1.0, -(i as f64)));
        assert_eq!(vec_to_mat(&(u + v)), vec_to_mat(&u) + vec_to_mat(&v));
        assert_eq!(mat_to_vec(&vec_to_mat(&u)), u);
    }

    #[test]
    fn complement_is_orthogonal() {
        let vs: Vec<Vec9> = (0..3)
            .map(|k| Vec9::from_fn(|i, _| c((i.pow(k as u32)) as f64 + 1.0, (i + k) as f64)))
            .collect();
        let comp = complement_basis(&vs, 1e-9);
        assert_eq!(comp.len(), 6);
        for w in &comp {
            for v in &vs {
                assert!(w.dotc(v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerances::default().validate().is_ok());
        let bad = Tolerances {
            rank_rel: 1e-6,
            eq_rel: 1e-8,
            psd_slack: 1e-10,
        };
        assert!(bad.validate().is_err());
    }
}
