//! Reference subspaces with known product-state counts, the Pyramid-type
//! sextet and an explicit realization of the Tiles state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{complement_basis, mat_to_vec, Mat3, Op9, Tolerances, Vec9, C64, I, ONE, ZERO};
use crate::pptes::{state_from_blocks, Block, BlockState};
use crate::search::{product_states_in_subspace, product_states_orthogonal_to, SearchConfig};
use crate::segre::{general_position, rank_one_factor, ProductVector, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector9(#[serde(with = "json::vector")] pub Vec9);

/// A subspace given by a spanning set, optionally with the exact vectors
/// spanning its orthogonal complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceFixture {
    pub name: String,
    pub basis: Vec<Vector9>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complement: Option<Vec<Vector9>>,
    pub expected_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_points: Option<Vec<ProductVector>>,
}

impl SubspaceFixture {
    pub fn basis_vectors(&self) -> Vec<Vec9> {
        self.basis.iter().map(|v| v.0).collect()
    }

    pub fn constraints(&self, tol: &Tolerances) -> Vec<Vec9> {
        match &self.complement {
            Some(c) => c.iter().map(|v| v.0).collect(),
            None => complement_basis(&self.basis_vectors(), tol.rank_rel),
        }
    }

    pub fn product_states(
        &self,
        cfg: &SearchConfig,
        tol: &Tolerances,
    ) -> Result<Vec<ProductVector>> {
        match &self.complement {
            Some(_) => product_states_orthogonal_to(&self.constraints(tol), cfg, tol),
            None => product_states_in_subspace(&self.basis_vectors(), cfg, tol),
        }
    }
}

/// Sum of `coeff · |ij⟩` terms.
fn ket(terms: &[(C64, usize, usize)]) -> Vec9 {
    let mut v = Vec9::zeros();
    for &(c, i, j) in terms {
        v[3 * i + j] += c;
    }
    v
}

fn k(i: usize, j: usize) -> Vec9 {
    ket(&[(ONE, i, j)])
}

fn sum(i: usize, j: usize, p: usize, q: usize) -> Vec9 {
    k(i, j) + k(p, q)
}

fn diff(i: usize, j: usize, p: usize, q: usize) -> Vec9 {
    k(i, j) - k(p, q)
}

fn product(m: Mat3) -> ProductVector {
    rank_one_factor(&m, &Tolerances::default())
        .expect("nonzero matrix")
        .expect("fixture matrix has rank one")
}

fn basis_product(i: usize, j: usize) -> ProductVector {
    product(Mat3::from_fn(
        |r, c| if (r, c) == (i, j) { ONE } else { ZERO },
    ))
}

fn real_mat(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| C64::new(rows[i][j], 0.0))
}

fn fixture(
    name: &str,
    range: Vec<Vec9>,
    kernel: Vec<Vec9>,
    points: Vec<ProductVector>,
) -> SubspaceFixture {
    SubspaceFixture {
        name: name.into(),
        basis: kernel.into_iter().map(Vector9).collect(),
        complement: Some(range.into_iter().map(Vector9).collect()),
        expected_count: points.len(),
        expected_points: Some(points),
    }
}

/// Points `[[0,0,0],[1,ζ,ζ²],[ζ,ζ²,1]]` for the cube roots of unity.
fn zeta_points() -> Vec<ProductVector> {
    (0..3)
        .map(|n| {
            let z = C64::from_polar(1.0, 2.0 * PI * n as f64 / 3.0);
            product(Mat3::new(ZERO, ZERO, ZERO, ONE, z, z * z, z, z * z, ONE))
        })
        .collect()
}

/// Points `[[1,ξ⁴,ξ],[ξ³,ξ²,ξ⁴],[ξ²,ξ,ξ³]]` for the fifth roots of unity.
pub fn xi_points() -> Vec<ProductVector> {
    (0..5)
        .map(|n| {
            let x = C64::from_polar(1.0, 2.0 * PI * n as f64 / 5.0);
            let p = |e: u32| x.powu(e);
            product(Mat3::new(
                p(0),
                p(4),
                p(1),
                p(3),
                p(2),
                p(4),
                p(2),
                p(1),
                p(3),
            ))
        })
        .collect()
}

fn five_points() -> Vec<ProductVector> {
    let m = |rows: [[C64; 3]; 3]| product(Mat3::from_fn(|i, j| rows[i][j]));
    let (o, i) = (ONE, I);
    vec![
        basis_product(0, 0),
        m([[o, o, o], [o, o, o], [o, o, o]]),
        m([[o, o, -o], [-o, -o, o], [o, o, -o]]),
        m([[i, -i, o], [-o, o, i], [-i, i, -o]]),
        m([[-i, i, o], [-o, o, -i], [i, -i, -o]]),
    ]
}

/// The eleven subspaces realizing every partition of 6 as an intersection pattern.
pub fn intersection_fixtures() -> Vec<SubspaceFixture> {
    let p0 = basis_product(0, 0);
    let p11 = basis_product(1, 1);
    let p22 = basis_product(2, 2);
    let p02_12 = product(real_mat([
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
    ]));
    let p20_21 = product(real_mat([
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
    ]));
    let mut zeta = vec![p0];
    zeta.extend(zeta_points());
    let mut xi = vec![p0];
    xi.extend(xi_points());
    vec![
        fixture(
            "k1 (6)",
            vec![
                k(1, 2),
                k(2, 1),
                k(0, 1) - k(1, 0) - k(2, 2),
                k(0, 2) + k(1, 1) - k(2, 0),
            ],
            vec![
                k(0, 0),
                sum(0, 1, 1, 0),
                sum(0, 1, 2, 2),
                sum(0, 2, 2, 0),
                sum(1, 1, 2, 0),
            ],
            vec![p0],
        ),
        fixture(
            "k2 (5,1)",
            vec![
                k(1, 2),
                diff(0, 1, 2, 0),
                diff(0, 2, 2, 1),
                diff(1, 0, 2, 2),
            ],
            vec![
                k(0, 0),
                k(1, 1),
                sum(0, 1, 2, 0),
                sum(0, 2, 2, 1),
                sum(1, 0, 2, 2),
            ],
            vec![p0, p11],
        ),
        fixture(
            "k2 (4,2)",
            vec![
                diff(0, 1, 1, 2),
                diff(1, 0, 2, 1),
                diff(0, 2, 2, 0),
                k(2, 2),
            ],
            vec![
                k(0, 0),
                k(1, 1),
                sum(0, 1, 1, 2),
                sum(1, 0, 2, 1),
                sum(0, 2, 2, 0),
            ],
            vec![p0, p11],
        ),
        fixture(
            "k2 (3,3)",
            vec![
                k(0, 2),
                diff(0, 1, 1, 0),
                diff(1, 1, 2, 0),
                diff(1, 2, 2, 1),
            ],
            vec![
                k(0, 0),
                k(2, 2),
                sum(0, 1, 1, 0),
                sum(1, 1, 2, 0),
                sum(1, 2, 2, 1),
            ],
            vec![p0, p22],
        ),
        fixture(
            "k3 (4,1,1)",
            vec![k(0, 2), k(2, 0), diff(0, 1, 1, 2), diff(1, 0, 2, 1)],
            vec![k(0, 0), k(1, 1), k(2, 2), sum(0, 1, 1, 2), sum(1, 0, 2, 1)],
            vec![p0, p11, p22],
        ),
        fixture(
            "k3 (3,2,1)",
            vec![
                k(2, 0),
                diff(0, 1, 2, 2),
                diff(0, 2, 1, 2),
                diff(1, 0, 2, 1),
            ],
            vec![
                k(0, 0),
                k(1, 1),
                sum(0, 2, 1, 2),
                sum(0, 1, 2, 2),
                sum(1, 0, 2, 1),
            ],
            vec![p0, p11, p02_12],
        ),
        fixture(
            "k3 (2,2,2)",
            vec![
                k(1, 1),
                diff(0, 2, 1, 2),
                diff(2, 0, 2, 1),
                k(0, 1) + k(1, 0) - k(2, 2),
            ],
            vec![
                k(0, 0),
                sum(0, 2, 1, 2),
                sum(2, 0, 2, 1),
                sum(0, 1, 2, 2),
                sum(1, 0, 2, 2),
            ],
            vec![p0, p02_12, p20_21],
        ),
        fixture(
            "k4 (3,1,1,1)",
            vec![
                k(0, 1),
                k(0, 2) - k(1, 1) + k(2, 0),
                diff(1, 0, 2, 2),
                diff(1, 2, 2, 1),
            ],
            vec![
                k(0, 0),
                sum(0, 2, 1, 1),
                sum(1, 1, 2, 0),
                sum(1, 0, 2, 2),
                sum(1, 2, 2, 1),
            ],
            zeta,
        ),
        fixture(
            "k4 (2,2,1,1)",
            vec![
                k(1, 0),
                diff(0, 1, 2, 2),
                diff(0, 2, 1, 2),
                diff(2, 0, 2, 1),
            ],
            vec![
                k(0, 0),
                k(1, 1),
                sum(0, 2, 1, 2),
                sum(2, 0, 2, 1),
                sum(0, 1, 2, 2),
            ],
            vec![p0, p11, p02_12, p20_21],
        ),
        fixture(
            "k5 (2,1,1,1,1)",
            vec![
                diff(0, 1, 2, 0),
                diff(0, 2, 1, 1),
                diff(1, 0, 2, 2),
                diff(1, 2, 2, 1),
            ],
            vec![
                k(0, 0),
                sum(0, 1, 2, 0),
                sum(0, 2, 1, 1),
                sum(1, 0, 2, 2),
                sum(1, 2, 2, 1),
            ],
            five_points(),
        ),
        fixture(
            "k6 (1,1,1,1,1,1)",
            vec![
                diff(0, 1, 1, 2),
                diff(0, 2, 2, 1),
                diff(1, 0, 2, 2),
                diff(1, 1, 2, 0),
            ],
            vec![
                k(0, 0),
                sum(0, 1, 1, 2),
                sum(0, 2, 2, 1),
                sum(1, 0, 2, 2),
                sum(1, 1, 2, 0),
            ],
            xi,
        ),
    ]
}

/// Kernel with three product states in general position and a product-free range (`a ≠ 0`, `b ≠ 1`).
pub fn three_product_kernel(a: f64, b: f64) -> Result<SubspaceFixture> {
    if a == 0.0 || b == 1.0 {
        return Err(Error::OutOfDomain(format!(
            "need a != 0 and b != 1, got a = {a}, b = {b}"
        )));
    }
    let kernel = [
        real_mat([[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]),
        real_mat([[0.0; 3], [0.0, 1.0, 0.0], [0.0; 3]]),
        real_mat([[0.0; 3], [0.0; 3], [0.0, 0.0, 1.0]]),
        real_mat([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]),
        real_mat([[0.0, a, b], [a, 0.0, b - 1.0], [1.0, 0.0, 0.0]]),
    ];
    Ok(SubspaceFixture {
        name: format!("three products (a = {a}, b = {b})"),
        basis: kernel.iter().map(|m| Vector9(mat_to_vec(m))).collect(),
        complement: None,
        expected_count: 3,
        expected_points: Some(vec![
            basis_product(0, 0),
            basis_product(1, 1),
            basis_product(2, 2),
        ]),
    })
}

/// Kernel with exactly two product states and a product-free range (real `c ∉ {−2, 0}`).
pub fn two_product_kernel(c: f64) -> Result<SubspaceFixture> {
    if c == 0.0 || c == -2.0 {
        return Err(Error::OutOfDomain(format!(
            "need c not in {{-2, 0}}, got {c}"
        )));
    }
    let kernel = [
        real_mat([[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]),
        real_mat([[0.0; 3], [0.0, 1.0, 0.0], [0.0; 3]]),
        real_mat([[0.0, 1.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]),
        real_mat([[0.0, 1.0, 1.0], [0.0; 3], [1.0, -2.0 - c, -1.0 - c]]),
        real_mat([
            [0.0, c - 8.0 / (2.0 + c), c],
            [1.0, 0.0, 0.0],
            [0.0, 4.0 * c / (2.0 + c), c],
        ]),
    ];
    Ok(SubspaceFixture {
        name: format!("two products (c = {c})"),
        basis: kernel.iter().map(|m| Vector9(mat_to_vec(m))).collect(),
        complement: None,
        expected_count: 2,
        expected_points: Some(vec![basis_product(0, 0), basis_product(1, 1)]),
    })
}

/// Six product states spanning a subspace SLOCC-equivalent to the Pyramid kernel.
pub fn pyramid_sextet() -> [ProductVector; 6] {
    let mut out = [basis_product(0, 0); 6];
    for (slot, p) in out[1..].iter_mut().zip(xi_points()) {
        *slot = p;
    }
    out
}

/// `3^{1/3}`.
pub fn tiles_parameter() -> f64 {
    3f64.cbrt()
}

/// Columns of `Ũ`, `Ṽ`: a realization of the Tiles kernel with an explicit symmetry.
pub fn tiles_sextet() -> [ProductVector; 6] {
    let a = tiles_parameter();
    let u = [
        [a, 1.0, 0.0],
        [0.0, a, 1.0],
        [1.0, 0.0, a],
        [a, -1.0, 0.0],
        [0.0, a, -1.0],
        [-1.0, 0.0, a],
    ];
    let v = [
        [-1.0, 0.0, a],
        [0.0, a, -1.0],
        [a, -1.0, 0.0],
        [1.0, 0.0, a],
        [0.0, a, 1.0],
        [a, 1.0, 0.0],
    ];
    let mut out = [ProductVector::from_real(u[0], v[0]).expect("nonzero"); 6];
    for k in 1..6 {
        out[k] = ProductVector::from_real(u[k], v[k]).expect("nonzero");
    }
    out
}

pub fn tiles_blocks() -> BlockState {
    let a = tiles_parameter();
    let a2 = a * a;
    let block = |rows: [[f64; 3]; 4]| Block::from_fn(|i, j| C64::new(rows[i][j], 0.0));
    BlockState {
        c0: block([[a, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0; 3], [0.0, a2, 0.0]]),
        c1: block([[0.0, 0.0, a], [a2, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]]),
        c2: block([[0.0, a, 0.0], [0.0; 3], [0.0, 0.0, a2], [1.0, 0.0, 0.0]]),
    }
}

pub fn tiles_state() -> Op9 {
    let rho = state_from_blocks(&tiles_blocks());
    rho / rho.trace()
}

/// `diag(−1, 1, 1)` on both sides; permutes the sextet as `(03)(25)`.
pub fn tiles_sign_symmetry() -> (Mat3, Mat3) {
    let m = Mat3::from_diagonal(&crate::linalg::Vec3::new(-ONE, ONE, ONE));
    (m, m)
}

/// Cyclic shift `Z` on A with `Zᵀ` on B; permutes the sextet as `(012)(345)`.
pub fn tiles_cyclic_symmetry() -> (Mat3, Mat3) {
    let z = Mat3::new(ZERO, ZERO, ONE, ONE, ZERO, ZERO, ZERO, ONE, ZERO);
    (z, z.transpose())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub expected_count: usize,
    pub found_count: usize,
    /// Whether the found points match the listed ones up to gauge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub general_position: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_product_free: Option<bool>,
    pub pass: bool,
}

/// Whether two point sets agree up to gauge at tolerance `tol`.
pub fn same_point_set(found: &[ProductVector], expected: &[ProductVector], tol: f64) -> bool {
    found.len() == expected.len()
        && expected
            .iter()
            .all(|e| found.iter().any(|f| f.distance(e) <= tol))
        && found
            .iter()
            .all(|f| expected.iter().any(|e| e.distance(f) <= tol))
}

pub const POINT_MATCH_TOL: f64 = 1e-8;

pub fn verify_fixture(
    f: &SubspaceFixture,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<FixtureReport> {
    let found = f.product_states(cfg, tol)?;
    let points_match = f
        .expected_points
        .as_ref()
        .map(|expected| same_point_set(&found, expected, POINT_MATCH_TOL));
    let pass = found.len() == f.expected_count && points_match.unwrap_or(true);
    Ok(FixtureReport {
        name: f.name.clone(),
        expected_count: f.expected_count,
        found_count: found.len(),
        points_match,
        general_position: None,
        range_product_free: None,
        pass,
    })
}

/// Lemma fixtures also require general position and a product-free range.
fn verify_lemma_fixture(
    f: &SubspaceFixture,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<FixtureReport> {
    let mut report = verify_fixture(f, cfg, tol)?;
    let found = f.product_states(cfg, tol)?;
    let gp = general_position(&found, Side::Both, tol);
    let range_free = product_states_orthogonal_to(&f.basis_vectors(), cfg, tol)?.is_empty();
    report.general_position = Some(gp);
    report.range_product_free = Some(range_free);
    report.pass &= gp && range_free;
    Ok(report)
}

/// Product-state counts of the eleven intersection-pattern fixtures and the two lemma fixtures.
pub fn verify_intersection_counts(
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<Vec<FixtureReport>> {
    let mut reports = intersection_fixtures()
        .iter()
        .map(|f| verify_fixture(f, cfg, tol))
        .collect::<Result<Vec<_>>>()?;
    reports.push(verify_lemma_fixture(
        &three_product_kernel(1.0, 0.0)?,
        cfg,
        tol,
    )?);
    reports.push(verify_lemma_fixture(&two_product_kernel(1.0)?, cfg, tol)?);
    Ok(reports)
}

/// First failing report as an error.
pub fn ensure_passed(reports: &[FixtureReport]) -> Result<()> {
    match reports.iter().find(|r| !r.pass) {
        Some(r) => Err(Error::FixtureMismatch {
            name: r.name.clone(),
            expected: r.expected_count,
            found: r.found_count,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_kernel_are_orthogonal() {
        for f in intersection_fixtures() {
            for r in f.complement.as_ref().unwrap() {
                for b in &f.basis {
                    assert!(r.0.dotc(&b.0).norm() < 1e-15, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn listed_points_lie_in_the_kernels() {
        let tol = Tolerances::default();
        for f in intersection_fixtures() {
            let constraints = f.constraints(&tol);
            for p in f.expected_points.as_ref().unwrap() {
                let v = p.to_vec9();
                for c in &constraints {
                    assert!(c.dotc(&v).norm() < 1e-12, "{}", f.name);
                }
            }
        }
    }

    #[test]
    fn tiles_state_annihilates_its_sextet() {
        let rho = tiles_state();
        for p in tiles_sextet() {
            assert!((rho * p.to_vec9()).norm() < 1e-12);
        }
    }

    #[test]
    fn fixture_json_round_trip() {
        let f = &intersection_fixtures()[0];
        let text = serde_json::to_string(f).unwrap();
        let back: SubspaceFixture = serde_json::from_str(&text).unwrap();
        assert_eq!(back.expected_count, 1);
        assert_eq!(back.basis.len(), 5);
    }
}
