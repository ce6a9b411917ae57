//! The six projective invariants of a quintuple of product vectors, P- and
//! BP-equivalence, the classification of 5-dimensional spans and the sixth
//! product state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{det3_cols, mat_to_vec, Mat3, Tolerances, Vec3, Vec9, C64, ONE};
use crate::segre::{
    canonical_transform, four_point_map, projective_distance, rank_one_factor, side_factors,
    vectors_in_general_position, ProductVector, Side,
};

/// Relative tolerance for the five span equations.
pub const EQUATION_TOL: f64 = 1e-7;
/// Values within this factor of [`EQUATION_TOL`] are neither clearly true nor false.
pub const BORDERLINE_FACTOR: f64 = 10.0;

const NAMES: [&str; 6] = ["J1A", "J2A", "J3A", "J1B", "J2B", "J3B"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSextet {
    #[serde(rename = "JA", with = "json::complex3")]
    pub ja: [C64; 3],
    #[serde(rename = "JB", with = "json::complex3")]
    pub jb: [C64; 3],
}

impl InvariantSextet {
    pub fn from_real(ja: [f64; 3], jb: [f64; 3]) -> Self {
        InvariantSextet {
            ja: ja.map(|x| C64::new(x, 0.0)),
            jb: jb.map(|x| C64::new(x, 0.0)),
        }
    }

    pub fn values(&self) -> [C64; 6] {
        [
            self.ja[0], self.ja[1], self.ja[2], self.jb[0], self.jb[1], self.jb[2],
        ]
    }

    /// Largest of `|x − y| / max(1, |x|, |y|)` over the six entries.
    pub fn distance(&self, other: &InvariantSextet) -> f64 {
        self.values()
            .iter()
            .zip(other.values().iter())
            .map(|(x, y)| (x - y).norm() / 1f64.max(x.norm()).max(y.norm()))
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &InvariantSextet, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// `J₁J₂J₃` for each side.
    pub fn products(&self) -> (C64, C64) {
        (
            self.ja[0] * self.ja[1] * self.ja[2],
            self.jb[0] * self.jb[1] * self.jb[2],
        )
    }

    fn check_nondegenerate(&self, tol: &Tolerances) -> Result<()> {
        for (name, j) in NAMES.iter().zip(self.values()) {
            if !j.re.is_finite()
                || !j.im.is_finite()
                || j.norm() <= tol.eq_rel
                || (j - ONE).norm() <= tol.eq_rel
            {
                return Err(Error::DegenerateQuintuple {
                    name,
                    value: format!("{j}"),
                });
            }
        }
        Ok(())
    }
}

fn check_len(tuple: &[ProductVector], n: usize) -> Result<()> {
    if tuple.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} product vectors, got {}",
            tuple.len()
        )));
    }
    Ok(())
}

/// `(J₁, J₂, J₃)` of five points in the plane, read off the canonical form
/// of the first four: with `b = A φ₄`, `J = (b₁/b₂, b₂/b₀, b₀/b₁)`.
pub fn side_invariants(vs: &[Vec3], tol: &Tolerances) -> Result<[C64; 3]> {
    if vs.len() != 5 {
        return Err(Error::InvalidInput(format!(
            "expected 5 vectors, got {}",
            vs.len()
        )));
    }
    if !vectors_in_general_position(vs, tol) {
        return Err(Error::GeneralPosition("quintuple".into()));
    }
    let b = canonical_transform(&vs[..4], tol)? * vs[4];
    Ok([b[1] / b[2], b[2] / b[0], b[0] / b[1]])
}

/// The same invariants as determinant ratios `Δ_{ijk} = det(φ_i, φ_j, φ_k)`.
pub fn side_invariants_det(vs: &[Vec3]) -> [C64; 3] {
    let d = |i: usize, j: usize, k: usize| det3_cols(&vs[i], &vs[j], &vs[k]);
    [
        d(2, 0, 4) * d(0, 1, 3) / (d(2, 0, 3) * d(0, 1, 4)),
        d(0, 1, 4) * d(1, 2, 3) / (d(0, 1, 3) * d(1, 2, 4)),
        d(1, 2, 4) * d(2, 0, 3) / (d(1, 2, 3) * d(2, 0, 4)),
    ]
}

pub fn invariants(q: &[ProductVector], tol: &Tolerances) -> Result<InvariantSextet> {
    check_len(q, 5)?;
    let s = InvariantSextet {
        ja: side_invariants(&side_factors(q, Side::A), tol)?,
        jb: side_invariants(&side_factors(q, Side::B), tol)?,
    };
    s.check_nondegenerate(tol)?;
    Ok(s)
}

pub fn invariants_det(q: &[ProductVector]) -> Result<InvariantSextet> {
    check_len(q, 5)?;
    Ok(InvariantSextet {
        ja: side_invariants_det(&side_factors(q, Side::A)),
        jb: side_invariants_det(&side_factors(q, Side::B)),
    })
}

fn side_distance(x: &[C64; 3], y: &[C64; 3]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(p, q)| (p - q).norm() / 1f64.max(p.norm()).max(q.norm()))
        .fold(0.0, f64::max)
}

/// `A` with `A φ_k ∝ φ'_k` for all five points, if the invariants agree.
pub fn p_equivalent(t1: &[Vec3], t2: &[Vec3], tol: &Tolerances) -> Option<Mat3> {
    let j1 = side_invariants(t1, tol).ok()?;
    let j2 = side_invariants(t2, tol).ok()?;
    if side_distance(&j1, &j2) > tol.eq_rel {
        return None;
    }
    let a = four_point_map(&t1[..4], &t2[..4], tol).ok()?;
    (projective_distance(&(a * t1[4]), &t2[4]) <= tol.eq_rel).then_some(a)
}

/// `(A, B)` with `(A ⊗ B)|ψ_k⟩ ∝ |ψ'_k⟩` for all five points.
pub fn bp_equivalent(
    q1: &[ProductVector],
    q2: &[ProductVector],
    tol: &Tolerances,
) -> Option<(Mat3, Mat3)> {
    if q1.len() != 5 || q2.len() != 5 {
        return None;
    }
    let a = p_equivalent(&side_factors(q1, Side::A), &side_factors(q2, Side::A), tol)?;
    let b = p_equivalent(&side_factors(q1, Side::B), &side_factors(q2, Side::B), tol)?;
    let all_mapped = q1.iter().zip(q2).all(|(p, p2)| {
        let img = (a * p.a, b * p.b);
        projective_distance(&img.0, &p2.a) <= tol.eq_rel
            && projective_distance(&img.1, &p2.b) <= tol.eq_rel
    });
    all_mapped.then_some((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum QuintupleClass {
    /// Two or more of the span equations hold; the span meets the Segre variety in a curve.
    InfinitelyMany,
    /// Exactly one equation holds; the point with this index has multiplicity two.
    DoublePoint { index: usize },
    /// No equation holds; the span contains exactly one further product state.
    Regular { sixth: ProductVector },
}

fn relative_gap(lhs: C64, rhs: C64) -> f64 {
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / scale
    }
}

/// Normalized residuals of the five span equations: `J_i^A = J_i^B` for
/// i = 1, 2, 3 followed by the two mixed equations.
pub fn equation_residuals(s: &InvariantSextet) -> [f64; 5] {
    let [a1, a2, a3] = s.ja;
    let [b1, b2, b3] = s.jb;
    [
        relative_gap(a1, b1),
        relative_gap(a2, b2),
        relative_gap(a3, b3),
        relative_gap(a2 * (ONE - a1) * (ONE - b2), b2 * (ONE - b1) * (ONE - a2)),
        relative_gap(a1 * (ONE - a2) * (ONE - b1), b1 * (ONE - b2) * (ONE - a1)),
    ]
}

/// Which of the five equations hold; errors when a residual is ambiguous.
pub fn equations_holding(s: &InvariantSextet) -> Result<[bool; 5]> {
    let residuals = equation_residuals(s);
    let mut holds = [false; 5];
    for (k, &res) in residuals.iter().enumerate() {
        if res > EQUATION_TOL && res <= BORDERLINE_FACTOR * EQUATION_TOL {
            return Err(Error::Borderline(format!(
                "span equation {} has residual {res:e}",
                k + 1
            )));
        }
        holds[k] = res <= EQUATION_TOL;
    }
    Ok(holds)
}

pub fn classify_quintuple(q: &[ProductVector], tol: &Tolerances) -> Result<QuintupleClass> {
    let s = invariants(q, tol)?;
    let holds = equations_holding(&s)?;
    let count = holds.iter().filter(|&&h| h).count();
    Ok(match count {
        0 => QuintupleClass::Regular {
            sixth: sixth_from_invariants(q, &s, tol)?,
        },
        // equation k doubles the point P_k
        1 => QuintupleClass::DoublePoint {
            index: holds.iter().position(|&h| h).unwrap_or(0),
        },
        _ => QuintupleClass::InfinitelyMany,
    })
}

fn sixth_from_invariants(
    q: &[ProductVector],
    s: &InvariantSextet,
    tol: &Tolerances,
) -> Result<ProductVector> {
    let [a1, a2, a3] = s.ja;
    let [b1, b2, b3] = s.jb;
    let c_canon = Vec3::new(
        (ONE - b1) / (b1 - a1),
        a2 * (ONE - b2) / (b2 - a2),
        (ONE - b3) / (a1 * (b3 - a3)),
    );
    let z_canon = Vec3::new(
        (ONE - a1) / (b1 - a1),
        b2 * (ONE - a2) / (b2 - a2),
        (ONE - a3) / (b1 * (b3 - a3)),
    );
    let a = canonical_transform(&side_factors(&q[..4], Side::A), tol)?;
    let b = canonical_transform(&side_factors(&q[..4], Side::B), tol)?;
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::GeneralPosition("side A".into()))?;
    let b_inv = b
        .try_inverse()
        .ok_or_else(|| Error::GeneralPosition("side B".into()))?;
    ProductVector::new(a_inv * c_canon, b_inv * z_canon)
}

/// The unique additional product state in the span of a regular quintuple.
pub fn sixth_state(q: &[ProductVector], tol: &Tolerances) -> Result<ProductVector> {
    match classify_quintuple(q, tol)? {
        QuintupleClass::Regular { sixth } => Ok(sixth),
        other => Err(Error::NotRegular(format!("{other:?}"))),
    }
}

fn checked_div(num: C64, den: C64, tol: &Tolerances) -> Result<C64> {
    if den.norm() <= tol.eq_rel * 1f64.max(num.norm()) {
        return Err(Error::DegenerateQuintuple {
            name: "replaced invariant denominator",
            value: format!("{den}"),
        });
    }
    Ok(num / den)
}

/// Invariants of `(ψ₀, ψ₁, ψ₂, ψ₃, ψ)` with `ψ` the sixth state, from the
/// invariants of `(ψ₀, …, ψ₄)` alone.
pub fn replaced_invariants(s: &InvariantSextet, tol: &Tolerances) -> Result<InvariantSextet> {
    let [a1, a2, a3] = s.ja;
    let [b1, b2, b3] = s.jb;
    let ja = [
        checked_div((ONE - b2) * (b3 - a3), a3 * (ONE - b3) * (b2 - a2), tol)?,
        checked_div((ONE - b3) * (b1 - a1), a1 * (ONE - b1) * (b3 - a3), tol)?,
        checked_div((ONE - b1) * (b2 - a2), a2 * (ONE - b2) * (b1 - a1), tol)?,
    ];
    let jb = [
        checked_div((ONE - a2) * (b3 - a3), b3 * (ONE - a3) * (b2 - a2), tol)?,
        checked_div((ONE - a3) * (b1 - a1), b1 * (ONE - a1) * (b3 - a3), tol)?,
        checked_div((ONE - a1) * (b2 - a2), b2 * (ONE - a2) * (b1 - a1), tol)?,
    ];
    Ok(InvariantSextet { ja, jb })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transposition {
    /// Exchange of the points with indices 2 and 3.
    Swap23,
    /// Exchange of the points with indices 3 and 4.
    Swap34,
}

impl Transposition {
    pub fn apply<T: Copy>(&self, q: &[T]) -> Vec<T> {
        let mut out = q.to_vec();
        match self {
            Transposition::Swap23 => out.swap(2, 3),
            Transposition::Swap34 => out.swap(3, 4),
        }
        out
    }
}

fn permute_side(j: [C64; 3], t: Transposition) -> [C64; 3] {
    match t {
        Transposition::Swap23 => [
            ONE - j[0],
            j[1] / (j[1] - ONE),
            (j[1] - ONE) / (j[1] * (ONE - j[0])),
        ],
        Transposition::Swap34 => j.map(|x| ONE / x),
    }
}

pub fn permuted_invariants(s: &InvariantSextet, t: Transposition) -> InvariantSextet {
    InvariantSextet {
        ja: permute_side(s.ja, t),
        jb: permute_side(s.jb, t),
    }
}

/// `(|00⟩, |11⟩, |22⟩, Σ|ij⟩, |b, y⟩)`: every quintuple in general position is BP-equivalent to one of these.
pub fn canonical_quintuple(b: Vec3, y: Vec3) -> Result<[ProductVector; 5]> {
    let e = |k: usize| Vec3::from_fn(|i, _| if i == k { ONE } else { C64::new(0.0, 0.0) });
    let ones = Vec3::from_element(ONE);
    Ok([
        ProductVector::new(e(0), e(0))?,
        ProductVector::new(e(1), e(1))?,
        ProductVector::new(e(2), e(2))?,
        ProductVector::new(ones, ones)?,
        ProductVector::new(b, y)?,
    ])
}

/// Span of `canonical_quintuple((1, b₂, b₃), (1, b₂, b₃))`: the symmetric
/// matrices whose off-diagonal entries are `α + β (b₂, b₃, b₂b₃)`.
pub fn symmetric_family_span(b2: C64, b3: C64) -> [Vec9; 5] {
    let unit = |i: usize, j: usize| {
        let mut m = Mat3::zeros();
        m[(i, j)] = ONE;
        m
    };
    let sym = |i: usize, j: usize| unit(i, j) + unit(j, i);
    [
        mat_to_vec(&unit(0, 0)),
        mat_to_vec(&unit(1, 1)),
        mat_to_vec(&unit(2, 2)),
        mat_to_vec(&(sym(0, 1) + sym(0, 2) + sym(1, 2))),
        mat_to_vec(&(sym(0, 1) * b2 + sym(0, 2) * b3 + sym(1, 2) * (b2 * b3))),
    ]
}

/// The product state of the symmetric family with parameters `(α, β)`.
pub fn symmetric_family_product(
    b2: C64,
    b3: C64,
    alpha: C64,
    beta: C64,
    tol: &Tolerances,
) -> Result<ProductVector> {
    let (x, y, z) = (alpha + beta * b2, alpha + beta * b3, alpha + beta * b2 * b3);
    let m = Mat3::new(x * y / z, x, y, x, x * z / y, z, y, z, y * z / x);
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::OutOfDomain("α + β b must not vanish".into()));
    }
    rank_one_factor(&m, tol)?
        .ok_or_else(|| Error::Precondition("specialized matrix is not rank one".into()))
}
