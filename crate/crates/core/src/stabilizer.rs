//! Stabilizers of rank-4 PPTES as permutation groups of the kernel sextet.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::invariants;
use crate::json;
use crate::linalg::{kron_op, Mat3, Op9, Tolerances};
use crate::segre::{four_point_map_pair, general_position, ProductVector, Side};
use crate::upb::{cycle_notation, permute};

pub type Permutation6 = [usize; 6];

/// Invariants of permuted quintuples within this distance count as equal.
pub const MATCH_TOL: f64 = 1e-8;
/// Required ratio between the closest non-matching distance and [`MATCH_TOL`].
pub const MARGIN_FACTOR: f64 = 1e3;

/// A pair `(A, B)` with `(A ⊗ B) ρ (A ⊗ B)† ∝ ρ`, normalized to unit determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub permutation: String,
    #[serde(rename = "A", with = "json::matrix")]
    pub a: Mat3,
    #[serde(rename = "B", with = "json::matrix")]
    pub b: Mat3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerGroup {
    pub order: usize,
    #[serde(serialize_with = "cycles_ser", deserialize_with = "cycles_de")]
    pub elements: Vec<Permutation6>,
    pub realizations: Vec<Realization>,
}

fn cycles_ser<S: serde::Serializer>(
    elements: &[Permutation6],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(elements.iter().map(|p| cycle_notation(p)))
}

fn cycles_de<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Permutation6>, D::Error> {
    let raw: Vec<String> = Deserialize::deserialize(d)?;
    raw.iter()
        .map(|c| parse_cycles(c).map_err(serde::de::Error::custom))
        .collect()
}

/// Parses `id` or products of cycles such as `(03)(25)`.
pub fn parse_cycles(text: &str) -> std::result::Result<Permutation6, String> {
    let mut p: Permutation6 = [0, 1, 2, 3, 4, 5];
    if text == "id" {
        return Ok(p);
    }
    let mut rest = text;
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('(')
            .and_then(|r| r.split_once(')'))
            .ok_or_else(|| format!("malformed cycle notation: {text}"))?;
        let cycle = body
            .0
            .chars()
            .map(|c| c.to_digit(10).filter(|&d| d < 6).map(|d| d as usize))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format!("bad point in {text}"))?;
        for (i, &x) in cycle.iter().enumerate() {
            p[x] = cycle[(i + 1) % cycle.len()];
        }
        rest = body.1;
    }
    Ok(p)
}

pub fn compose(p: &Permutation6, q: &Permutation6) -> Permutation6 {
    std::array::from_fn(|k| p[q[k]])
}

pub fn inverse(p: &Permutation6) -> Permutation6 {
    let mut out = [0; 6];
    for (k, &v) in p.iter().enumerate() {
        out[v] = k;
    }
    out
}

pub fn element_order(p: &Permutation6) -> usize {
    let id: Permutation6 = [0, 1, 2, 3, 4, 5];
    let mut q = *p;
    let mut n = 1;
    while q != id {
        q = compose(p, &q);
        n += 1;
    }
    n
}

fn all_permutations() -> Vec<Permutation6> {
    let mut out = Vec::with_capacity(720);
    let mut p: Permutation6 = [0, 1, 2, 3, 4, 5];
    fn heap(k: usize, p: &mut Permutation6, out: &mut Vec<Permutation6>) {
        if k == 1 {
            out.push(*p);
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
        }
    }
    heap(6, &mut p, &mut out);
    out.sort();
    out
}

impl StabilizerGroup {
    pub fn contains(&self, p: &Permutation6) -> bool {
        self.elements.contains(p)
    }

    /// Identity, closure under composition and inverses.
    pub fn is_group(&self) -> bool {
        let id: Permutation6 = [0, 1, 2, 3, 4, 5];
        self.contains(&id)
            && self.elements.iter().all(|p| self.contains(&inverse(p)))
            && self
                .elements
                .iter()
                .all(|p| self.elements.iter().all(|q| self.contains(&compose(p, q))))
    }

    /// Number of elements of each order.
    pub fn order_census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for p in &self.elements {
            *census.entry(element_order(p)).or_insert(0) += 1;
        }
        census
    }

    pub fn is_transitive(&self) -> bool {
        (0..6).all(|k| self.elements.iter().any(|p| p[0] == k))
    }
}

/// Local maps `(A, B)` with `(A ⊗ B)|P_k⟩ ∝ |P_{π(k)}⟩` for all six points.
pub fn kernel_map(
    sextet: &[ProductVector],
    pi: &Permutation6,
    tol: &Tolerances,
) -> Result<(Mat3, Mat3)> {
    let target = permute(sextet, pi);
    let (a, b) = four_point_map_pair(&sextet[..4], &target[..4], tol)?;
    for (from, to) in sextet.iter().zip(&target) {
        let image = from.transformed(&a, &b)?;
        if !image.same_point(to, tol) {
            return Err(Error::Precondition(format!(
                "{} does not extend to all six points",
                cycle_notation(pi)
            )));
        }
    }
    Ok((a, b))
}

/// The group of permutations of the kernel sextet induced by local symmetries.
pub fn stabilizer(sextet: &[ProductVector], tol: &Tolerances) -> Result<StabilizerGroup> {
    if sextet.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "expected 6 product states, got {}",
            sextet.len()
        )));
    }
    if !general_position(sextet, Side::Both, tol) {
        return Err(Error::GeneralPosition("sextet".into()));
    }
    if !crate::upb::is_upb_type(sextet, tol)? {
        return Err(Error::NotUpbType);
    }
    let reference = invariants(&sextet[..5], tol)?;
    let mut elements = Vec::new();
    let mut closest_miss = f64::INFINITY;
    for pi in all_permutations() {
        let q = permute(sextet, &pi);
        let d = invariants(&q[..5], tol)?.distance(&reference);
        if d <= MATCH_TOL {
            elements.push(pi);
        } else {
            closest_miss = closest_miss.min(d);
        }
    }
    if closest_miss < MARGIN_FACTOR * MATCH_TOL {
        return Err(Error::Borderline(format!(
            "a non-matching permutation has invariant distance {closest_miss:e}"
        )));
    }
    let mut realizations = Vec::with_capacity(elements.len());
    for pi in &elements {
        let (a, b) = kernel_map(sextet, pi, tol)?;
        let (a, b) = state_action(&a, &b)?;
        realizations.push(Realization {
            permutation: cycle_notation(pi),
            a,
            b,
        });
    }
    let group = StabilizerGroup {
        order: elements.len(),
        elements,
        realizations,
    };
    if !group.is_group() || 720 % group.order != 0 {
        return Err(Error::Precondition(
            "stabilizer elements do not form a group".into(),
        ));
    }
    Ok(group)
}

/// If `A ⊗ B` preserves `ker ρ` then `A^{-†} ⊗ B^{-†}` preserves `ρ` up to scale.
fn state_action(a: &Mat3, b: &Mat3) -> Result<(Mat3, Mat3)> {
    let inv = |m: &Mat3| {
        m.try_inverse()
            .map(|x| crate::segre::unit_determinant(&x.adjoint()))
            .ok_or_else(|| Error::GeneralPosition("singular local map".into()))
    };
    Ok((inv(a)?, inv(b)?))
}

/// `‖(A⊗B) ρ (A⊗B)† − c ρ‖ ≤ 1e-8 ‖ρ‖` for the best-fit `c > 0`.
pub fn verify_symmetry_commutes(rho: &Op9, a: &Mat3, b: &Mat3) -> bool {
    let n = kron_op(a, b);
    let image = n * rho * n.adjoint();
    let denom = rho.norm_squared();
    if denom == 0.0 {
        return false;
    }
    let c = rho
        .iter()
        .zip(image.iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum::<f64>()
        / denom;
    c > 0.0 && (image - rho * crate::linalg::r(c)).norm() <= 1e-8 * rho.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_parsing_round_trips() {
        for p in all_permutations() {
            assert_eq!(parse_cycles(&cycle_notation(&p)).unwrap(), p);
        }
        assert_eq!(parse_cycles("(03)(25)").unwrap(), [3, 1, 5, 0, 4, 2]);
        assert!(parse_cycles("(06)").is_err());
    }

    #[test]
    fn element_orders() {
        assert_eq!(element_order(&[0, 1, 2, 3, 4, 5]), 1);
        assert_eq!(element_order(&parse_cycles("(012)(34)").unwrap()), 6);
        assert_eq!(all_permutations().len(), 720);
    }
}
