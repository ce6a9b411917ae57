//! Product vectors as points of the Segre variety, general position and the
//! four point canonical form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{
    det3_cols, kron, kron_op, sorted_svd, to_dyn, Mat3, Op9, Tolerances, Vec3, Vec9, C64,
};

/// Entries below this modulus (on a unit vector) are skipped when fixing the phase.
const GAUGE_FLOOR: f64 = 1e-8;

/// Unit vector whose first non-negligible entry is real and positive.
pub fn gauge_fix(v: &Vec3) -> Option<Vec3> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let unit = v / C64::new(norm, 0.0);
    let k = unit.iter().position(|z| z.norm() > GAUGE_FLOOR)?;
    let pivot = unit[k];
    let mut fixed = unit * (pivot.conj() / pivot.norm());
    fixed[k] = C64::new(pivot.norm(), 0.0);
    Some(fixed)
}

/// `1 − |⟨u|v⟩| / (‖u‖‖v‖)`: zero iff the vectors are proportional.
pub fn projective_distance(u: &Vec3, v: &Vec3) -> f64 {
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return 1.0;
    }
    (1.0 - u.dotc(v).norm() / denom).max(0.0)
}

/// A product vector `|a⟩ ⊗ |b⟩`, stored with both factors gauge fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductVector {
    #[serde(with = "json::vector")]
    pub a: Vec3,
    #[serde(with = "json::vector")]
    pub b: Vec3,
}

impl ProductVector {
    pub fn new(a: Vec3, b: Vec3) -> Result<Self> {
        match (gauge_fix(&a), gauge_fix(&b)) {
            (Some(a), Some(b)) => Ok(ProductVector { a, b }),
            _ => Err(Error::InvalidInput(
                "product vector with a zero factor".into(),
            )),
        }
    }

    /// Re-applies the gauge; idempotent on values built with [`ProductVector::new`].
    pub fn normalized(&self) -> Result<Self> {
        ProductVector::new(self.a, self.b)
    }

    pub fn from_real(a: [f64; 3], b: [f64; 3]) -> Result<Self> {
        let a = Vec3::from_fn(|i, _| C64::new(a[i], 0.0));
        let b = Vec3::from_fn(|i, _| C64::new(b[i], 0.0));
        ProductVector::new(a, b)
    }

    pub fn to_vec9(&self) -> Vec9 {
        kron(&self.a, &self.b)
    }

    pub fn to_mat3(&self) -> Mat3 {
        self.a * self.b.transpose()
    }

    pub fn factor(&self, side: Side) -> Vec3 {
        match side {
            Side::A => self.a,
            Side::B => self.b,
            Side::Both => panic!("factor() needs a single side"),
        }
    }

    /// `1 − |⟨a|a'⟩⟨b|b'⟩|`.
    pub fn distance(&self, other: &ProductVector) -> f64 {
        (1.0 - self.a.dotc(&other.a).norm() * self.b.dotc(&other.b).norm()).max(0.0)
    }

    pub fn same_point(&self, other: &ProductVector, tol: &Tolerances) -> bool {
        self.distance(other) <= tol.eq_rel
    }

    /// Image under the local operator `A ⊗ B`.
    pub fn transformed(&self, a: &Mat3, b: &Mat3) -> Result<Self> {
        ProductVector::new(a * self.a, b * self.b)
    }

    /// Lexicographic key on the gauge-fixed entries, used for deterministic ordering.
    pub fn order_key(&self) -> [i64; 12] {
        let mut key = [0i64; 12];
        for (k, z) in self.a.iter().chain(self.b.iter()).enumerate() {
            let snap = |x: f64| (x * 1e6).round() as i64;
            key[2 * k] = -snap(z.re);
            key[2 * k + 1] = -snap(z.im);
        }
        key
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
    Both,
}

pub type Quadruple = [ProductVector; 4];
pub type Quintuple = [ProductVector; 5];
pub type Sextet = [ProductVector; 6];

pub fn side_factors(tuple: &[ProductVector], side: Side) -> Vec<Vec3> {
    tuple.iter().map(|p| p.factor(side)).collect()
}

/// Factorizes `M ≈ σ·a bᵀ` when `σ₂/σ₁ ≤ eq_rel`; returns the product vector and `σ`.
pub fn rank_one_factor_scaled(m: &Mat3, tol: &Tolerances) -> Result<Option<(ProductVector, C64)>> {
    let norm = m.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let svd = sorted_svd(&to_dyn(m));
    let s = &svd.singular_values;
    if s[1] > tol.eq_rel * s[0] {
        return Ok(None);
    }
    let a = Vec3::from_fn(|i, _| svd.u[(i, 0)]);
    let b = Vec3::from_fn(|i, _| svd.v[(i, 0)].conj());
    let pv = ProductVector::new(a, b)?;
    // σ = a† M b̄ for unit a, b
    let scale = pv.a.dotc(&(m * pv.b.map(|z| z.conj())));
    Ok(Some((pv, scale)))
}

pub fn rank_one_factor(m: &Mat3, tol: &Tolerances) -> Result<Option<ProductVector>> {
    Ok(rank_one_factor_scaled(m, tol)?.map(|(pv, _)| pv))
}

/// No two factors parallel and every triple has `|det|` above `eq_rel` times
/// the product of the column norms.
pub fn vectors_in_general_position(vs: &[Vec3], tol: &Tolerances) -> bool {
    let n = vs.len();
    for i in 0..n {
        for j in i + 1..n {
            let cos = vs[i].dotc(&vs[j]).norm() / (vs[i].norm() * vs[j].norm());
            let sin = (1.0 - cos * cos).max(0.0).sqrt();
            if !(sin > tol.eq_rel) {
                return false;
            }
            for k in j + 1..n {
                let scale = vs[i].norm() * vs[j].norm() * vs[k].norm();
                if !(det3_cols(&vs[i], &vs[j], &vs[k]).norm() > tol.eq_rel * scale) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn general_position(tuple: &[ProductVector], side: Side, tol: &Tolerances) -> bool {
    match side {
        Side::Both => {
            general_position(tuple, Side::A, tol) && general_position(tuple, Side::B, tol)
        }
        _ => vectors_in_general_position(&side_factors(tuple, side), tol),
    }
}

/// `A` with `A φ_k ∝ e_k` (k = 0, 1, 2) and `A φ_3 = (1, 1, 1)`, built as `D⁻¹X⁻¹`.
pub fn canonical_transform(quad: &[Vec3], tol: &Tolerances) -> Result<Mat3> {
    if quad.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "expected 4 vectors, got {}",
            quad.len()
        )));
    }
    if !vectors_in_general_position(quad, tol) {
        return Err(Error::GeneralPosition("quadruple".into()));
    }
    let x = Mat3::from_columns(&[quad[0], quad[1], quad[2]]);
    let x_inv = x
        .try_inverse()
        .ok_or_else(|| Error::GeneralPosition("singular frame".into()))?;
    let d = x_inv * quad[3];
    let d_inv = Mat3::from_diagonal(&d.map(|z| C64::new(1.0, 0.0) / z));
    Ok(d_inv * x_inv)
}

/// Scales `m` so that `det m = 1`.
pub fn unit_determinant(m: &Mat3) -> Mat3 {
    let det = m.determinant();
    m / det.powf(1.0 / 3.0)
}

/// The unique (up to scale) `A` with `A φ_k ∝ φ'_k`, normalized to `det A = 1`.
pub fn four_point_map(from: &[Vec3], to: &[Vec3], tol: &Tolerances) -> Result<Mat3> {
    let t_from = canonical_transform(from, tol)?;
    let t_to = canonical_transform(to, tol)?;
    let t_to_inv = t_to
        .try_inverse()
        .ok_or_else(|| Error::GeneralPosition("singular canonical transform".into()))?;
    Ok(unit_determinant(&(t_to_inv * t_from)))
}

/// `A ⊗ B` mapping the first four points of `from` onto those of `to`.
pub fn four_point_map_pair(
    from: &[ProductVector],
    to: &[ProductVector],
    tol: &Tolerances,
) -> Result<(Mat3, Mat3)> {
    let a = four_point_map(
        &side_factors(&from[..4], Side::A),
        &side_factors(&to[..4], Side::A),
        tol,
    )?;
    let b = four_point_map(
        &side_factors(&from[..4], Side::B),
        &side_factors(&to[..4], Side::B),
        tol,
    )?;
    Ok((a, b))
}

/// Largest projective mismatch between `M x_k` and `y_k`.
pub fn max_map_mismatch(m: &Mat3, from: &[Vec3], to: &[Vec3]) -> f64 {
    from.iter()
        .zip(to)
        .map(|(x, y)| projective_distance(&(m * x), y))
        .fold(0.0, f64::max)
}

pub fn local_operator(a: &Mat3, b: &Mat3) -> Op9 {
    kron_op(a, b)
}
