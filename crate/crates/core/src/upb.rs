//! The six-parameter family of unextendible product bases, their symbols and
//! the symbol table that brings any UPB-type quintuple to the family form.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::invariants::{invariants, InvariantSextet};
use crate::linalg::{span_basis, Mat3, Tolerances, Vec3, C64};
use crate::segre::{general_position, projective_distance, ProductVector, Side};

/// Tolerance for reality and interval membership when reading symbols off
/// numerically computed invariants.
pub const SYMBOL_TOL: f64 = 1e-7;
const BORDERLINE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpbAngles {
    #[serde(rename = "gamma_A")]
    pub gamma_a: f64,
    #[serde(rename = "theta_A")]
    pub theta_a: f64,
    #[serde(rename = "phi_A")]
    pub phi_a: f64,
    #[serde(rename = "gamma_B")]
    pub gamma_b: f64,
    #[serde(rename = "theta_B")]
    pub theta_b: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
}

impl UpbAngles {
    /// φ = π and θ = γ = π/4 on both sides.
    pub fn tiles() -> Self {
        UpbAngles {
            gamma_a: FRAC_PI_4,
            theta_a: FRAC_PI_4,
            phi_a: PI,
            gamma_b: FRAC_PI_4,
            theta_b: FRAC_PI_4,
            phi_b: PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, x: f64| {
            if x > 0.0 && x < FRAC_PI_2 {
                Ok(())
            } else {
                Err(Error::OutOfDomain(format!(
                    "{name} = {x} is not in (0, pi/2)"
                )))
            }
        };
        let phase = |name: &str, x: f64| {
            if x > -PI && x <= PI {
                Ok(())
            } else {
                Err(Error::OutOfDomain(format!(
                    "{name} = {x} is not in (-pi, pi]"
                )))
            }
        };
        open("gamma_A", self.gamma_a)?;
        open("theta_A", self.theta_a)?;
        open("gamma_B", self.gamma_b)?;
        open("theta_B", self.theta_b)?;
        phase("phi_A", self.phi_a)?;
        phase("phi_B", self.phi_b)
    }
}

fn real3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0))
}

/// The five orthonormal product states of the family.
pub fn upb_from_angles(angles: &UpbAngles) -> Result<[ProductVector; 5]> {
    angles.validate()?;
    let (ga, ta, pa) = (angles.gamma_a, angles.theta_a, angles.phi_a);
    let (gb, tb, pb) = (angles.gamma_b, angles.theta_b, angles.phi_b);
    let na = (ga.cos().powi(2) + ga.sin().powi(2) * ta.cos().powi(2)).sqrt();
    let nb = (gb.cos().powi(2) + gb.sin().powi(2) * tb.cos().powi(2)).sqrt();
    let ea = C64::from_polar(1.0, pa);
    let eb = C64::from_polar(1.0, pb);

    let alpha = [
        real3(1.0, 0.0, 0.0),
        real3(0.0, 1.0, 0.0),
        real3(ta.cos(), 0.0, ta.sin()),
        Vec3::new(
            C64::new(ga.sin() * ta.sin(), 0.0),
            ea * ga.cos(),
            C64::new(-ga.sin() * ta.cos(), 0.0),
        ),
        Vec3::new(
            C64::new(0.0, 0.0),
            ea * (ga.sin() * ta.cos() / na),
            C64::new(ga.cos() / na, 0.0),
        ),
    ];
    let beta = [
        real3(0.0, 1.0, 0.0),
        Vec3::new(
            C64::new(gb.sin() * tb.sin(), 0.0),
            eb * gb.cos(),
            C64::new(-gb.sin() * tb.cos(), 0.0),
        ),
        real3(1.0, 0.0, 0.0),
        real3(tb.cos(), 0.0, tb.sin()),
        Vec3::new(
            C64::new(0.0, 0.0),
            eb * (gb.sin() * tb.cos() / nb),
            C64::new(gb.cos() / nb, 0.0),
        ),
    ];
    let mut out = [ProductVector::new(alpha[0], beta[0])?; 5];
    for k in 1..5 {
        out[k] = ProductVector::new(alpha[k], beta[k])?;
    }
    Ok(out)
}

/// Closed-form invariants of the family; independent of the phases.
pub fn upb_invariants(angles: &UpbAngles) -> InvariantSextet {
    let (ga, ta) = (angles.gamma_a, angles.theta_a);
    let (gb, tb) = (angles.gamma_b, angles.theta_b);
    let k = 1.0 + tb.cos().powi(2) * gb.tan().powi(2);
    InvariantSextet::from_real(
        [
            -(ga.tan() * ta.cos()).powi(2),
            1.0 / ta.cos().powi(2),
            -1.0 / ga.tan().powi(2),
        ],
        [1.0 / tb.sin().powi(2), tb.sin().powi(2) / k, k],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    /// (−∞, 0)
    N,
    /// (0, 1)
    Small,
    /// (1, ∞)
    Large,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::N => 'N',
            Letter::Small => 'p',
            Letter::Large => 'P',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub [Letter; 6]);

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{}", l.as_char()))
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<Letter> = s
            .chars()
            .map(|ch| match ch {
                'N' => Ok(Letter::N),
                'p' => Ok(Letter::Small),
                'P' => Ok(Letter::Large),
                other => Err(Error::InvalidInput(format!("bad symbol letter {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let letters: [Letter; 6] = letters
            .try_into()
            .map_err(|_| Error::InvalidInput(format!("symbol {s:?} must have six letters")))?;
        Ok(Symbol(letters))
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn letter(j: C64, tol: f64) -> Result<Option<Letter>> {
    let scale = 1.0 + j.norm();
    let im = j.im.abs();
    if im > BORDERLINE_FACTOR * tol * scale {
        return Ok(None);
    }
    if im > tol * scale {
        return Err(Error::Borderline(format!(
            "invariant {j} is marginally complex"
        )));
    }
    let x = j.re;
    if x.abs() <= BORDERLINE_FACTOR * tol || (x - 1.0).abs() <= BORDERLINE_FACTOR * tol {
        return Err(Error::Borderline(format!(
            "invariant {x} is too close to 0 or 1"
        )));
    }
    Ok(Some(if x < 0.0 {
        Letter::N
    } else if x < 1.0 {
        Letter::Small
    } else {
        Letter::Large
    }))
}

/// Symbol of a sextet, or `None` when some invariant is not real.
pub fn symbol_with_tol(s: &InvariantSextet, tol: f64) -> Result<Option<Symbol>> {
    let mut letters = [Letter::N; 6];
    for (slot, j) in letters.iter_mut().zip(s.values()) {
        match letter(j, tol)? {
            Some(l) => *slot = l,
            None => return Ok(None),
        }
    }
    Ok(Some(Symbol(letters)))
}

pub fn symbol(s: &InvariantSextet, tol: &Tolerances) -> Result<Option<Symbol>> {
    symbol_with_tol(s, tol.eq_rel)
}

/// `σ` as a map `k ↦ σ(k)`; the permuted quintuple is `ψ'_k = ψ_{σ(k)}`.
pub type Permutation5 = [usize; 5];

/// Symbols paired with disjoint-cycle notation.
pub const SYMBOL_PERMUTATIONS: [(&str, &[&[usize]]); 12] = [
    ("NNPPPp", &[&[1, 2], &[3, 4]]),
    ("NNpppP", &[&[1, 2]]),
    ("NPNPpP", &[]),
    ("NpNpPp", &[&[3, 4]]),
    ("PNNpPP", &[&[0, 1], &[3, 4]]),
    ("PPpNNP", &[&[2, 3]]),
    ("PpPNPN", &[&[1, 2, 4, 3]]),
    ("PpppNN", &[&[0, 2], &[1, 4]]),
    ("pNNPpp", &[&[0, 1]]),
    ("pPPPNN", &[&[1, 3]]),
    ("pPpNpN", &[&[0, 3], &[2, 4]]),
    ("ppPNNp", &[&[0, 1], &[2, 3]]),
];

pub const FAMILY_SYMBOL: &str = "NPNPpP";

pub fn permutation_from_cycles<const N: usize>(cycles: &[&[usize]]) -> [usize; N] {
    let mut sigma = [0usize; N];
    for (k, s) in sigma.iter_mut().enumerate() {
        *s = k;
    }
    for cycle in cycles {
        for (i, &from) in cycle.iter().enumerate() {
            sigma[from] = cycle[(i + 1) % cycle.len()];
        }
    }
    sigma
}

/// Cycle notation such as `(03)(25)`, or `id`.
pub fn cycle_notation(sigma: &[usize]) -> String {
    let mut seen = vec![false; sigma.len()];
    let mut out = String::new();
    for start in 0..sigma.len() {
        if seen[start] || sigma[start] == start {
            continue;
        }
        out.push('(');
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            out.push_str(&k.to_string());
            k = sigma[k];
        }
        out.push(')');
    }
    if out.is_empty() {
        "id".into()
    } else {
        out
    }
}

pub fn normalizing_permutation(sym: &Symbol) -> Option<Permutation5> {
    let key = sym.to_string();
    SYMBOL_PERMUTATIONS
        .iter()
        .find(|(s, _)| *s == key)
        .map(|(_, cycles)| permutation_from_cycles::<5>(cycles))
}

pub fn upb_symbols() -> BTreeSet<Symbol> {
    SYMBOL_PERMUTATIONS
        .iter()
        .map(|(s, _)| s.parse().expect("table symbols are valid"))
        .collect()
}

pub fn permute<T: Copy>(q: &[T], sigma: &[usize]) -> Vec<T> {
    sigma.iter().map(|&k| q[k]).collect()
}

/// All 720 ordered selections of five distinct indices out of six.
pub fn ordered_quintuples() -> Vec<[usize; 5]> {
    let mut out = Vec::with_capacity(720);
    for omit in 0..6 {
        let rest: Vec<usize> = (0..6).filter(|&k| k != omit).collect();
        let mut idx = [0usize, 1, 2, 3, 4];
        loop {
            out.push(idx.map(|i| rest[i]));
            if !next_permutation(&mut idx) {
                break;
            }
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Symbols of every ordered quintuple drawn from `sextet` (`None` when not real).
pub fn quintuple_symbols(
    sextet: &[ProductVector],
    tol: &Tolerances,
    symbol_tol: f64,
) -> Result<Vec<Option<Symbol>>> {
    if sextet.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "expected 6 product vectors, got {}",
            sextet.len()
        )));
    }
    ordered_quintuples()
        .into_iter()
        .map(|idx| {
            let q = permute(sextet, &idx);
            symbol_with_tol(&invariants(&q, tol)?, symbol_tol)
        })
        .collect()
}

/// Whether the span of a six-point configuration is BP-equivalent to the span of a UPB.
pub fn is_upb_type(sextet: &[ProductVector], tol: &Tolerances) -> Result<bool> {
    if sextet.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "expected 6 product vectors, got {}",
            sextet.len()
        )));
    }
    let vectors: Vec<_> = sextet.iter().map(|p| p.to_vec9()).collect();
    let dim = span_basis(&vectors, tol.rank_rel).len();
    if dim != 5 {
        return Err(Error::SpanDimension {
            expected: 5,
            found: dim,
        });
    }
    if !general_position(sextet, Side::Both, tol) {
        return Ok(false);
    }
    let s = invariants(&sextet[..5], tol)?;
    Ok(symbol_with_tol(&s, SYMBOL_TOL)?.is_some_and(|sym| normalizing_permutation(&sym).is_some()))
}

/// Angles of a family member with the given invariants (phases set to zero).
pub fn angles_from_invariants(s: &InvariantSextet) -> Result<UpbAngles> {
    match symbol_with_tol(s, SYMBOL_TOL)? {
        Some(sym) if sym.to_string() == FAMILY_SYMBOL => {}
        Some(sym) => {
            return Err(Error::WrongSymbol {
                found: sym.to_string(),
            })
        }
        None => return Err(Error::NonRealInvariants),
    }
    let j2a = s.ja[1].re;
    let j3a = s.ja[2].re;
    let j1b = s.jb[0].re;
    let j3b = s.jb[2].re;
    let theta_a = (1.0 / j2a.sqrt()).acos();
    let gamma_a = (1.0 / (-j3a).sqrt()).atan();
    let theta_b = (1.0 / j1b.sqrt()).asin();
    let gamma_b = ((j3b - 1.0).sqrt() / theta_b.cos()).atan();
    let angles = UpbAngles {
        gamma_a,
        theta_a,
        phi_a: 0.0,
        gamma_b,
        theta_b,
        phi_b: 0.0,
    };
    angles.validate()?;
    Ok(angles)
}

pub type RealColumns = [[f64; 3]; 6];

/// A and B columns of the real family: five orthogonal product states
/// followed by the sixth product state of their span.
pub fn real_family_columns(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
) -> Result<(RealColumns, RealColumns)> {
    for (name, x) in [
        ("alpha", alpha),
        ("beta", beta),
        ("gamma", gamma),
        ("delta", delta),
    ] {
        if x == 0.0 || !x.is_finite() {
            return Err(Error::OutOfDomain(format!(
                "{name} must be a nonzero real, got {x}"
            )));
        }
    }
    let (a, b, g, d) = (alpha, beta, gamma, delta);
    let (a2, b2, g2, d2) = (a * a, b * b, g * g, d * d);
    let k = (1.0 + a2) * (1.0 + g2 + d2) + b2 * (g2 + d2);
    let u6 = [
        a * k / (b * (1.0 + a2 + g2)),
        a * (1.0 + g2 + d2) * (d2 + (a2 + b2) * (g2 + d2))
            / (a2 * g2 + (g2 + d2) * (b2 + g2 * (a2 + b2))),
        1.0,
    ];
    let v6 = [
        g * (a2 * (1.0 + a2 + b2) * (1.0 + g2 + d2) + b2 * (1.0 + g2)) / (b2 * d * (1.0 + a2 + g2)),
        g * (a2 + b2) * k / (b2 * (d2 + (a2 + b2) * (g2 + d2))),
        1.0,
    ];
    let u = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [a, 0.0, b],
        [b, 1.0, -a],
        [0.0, a, 1.0],
        u6,
    ];
    let v = [
        [1.0, 0.0, 0.0],
        [d, 1.0, -g],
        [0.0, 1.0, 0.0],
        [0.0, g, 1.0],
        [g, 0.0, d],
        v6,
    ];
    Ok((u, v))
}

pub fn real_family(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<[ProductVector; 6]> {
    let (u, v) = real_family_columns(alpha, beta, gamma, delta)?;
    let mut out = [ProductVector::from_real(u[0], v[0])?; 6];
    for k in 1..6 {
        out[k] = ProductVector::from_real(u[k], v[k])?;
    }
    Ok(out)
}

fn proportional_to_unitary(m: &Mat3, tol: f64) -> bool {
    let g = m.adjoint() * m;
    let s = g.trace() / C64::new(3.0, 0.0);
    s.norm() > 0.0 && (g - Mat3::identity() * s).norm() <= tol * s.norm()
}

/// For an ILO pair mapping one orthonormal UPB onto another, both factors
/// are unitary up to scalars.
pub fn verify_upb_images_unitary(
    q1: &[ProductVector],
    q2: &[ProductVector],
    a: &Mat3,
    b: &Mat3,
    tol: &Tolerances,
) -> Result<bool> {
    if q1.len() != q2.len() {
        return Err(Error::InvalidInput(
            "quintuples of different lengths".into(),
        ));
    }
    for (p, p2) in q1.iter().zip(q2) {
        let mismatch =
            projective_distance(&(a * p.a), &p2.a).max(projective_distance(&(b * p.b), &p2.b));
        if mismatch > tol.eq_rel {
            return Err(Error::Precondition(format!(
                "(A ⊗ B) does not map the first tuple onto the second (mismatch {mismatch:e})"
            )));
        }
    }
    Ok(proportional_to_unitary(a, 1e-8) && proportional_to_unitary(b, 1e-8))
}

/// Gram matrix deviation from the identity for unit product vectors.
pub fn gram_deviation(q: &[ProductVector]) -> f64 {
    let vs: Vec<_> = q.iter().map(|p| p.to_vec9()).collect();
    let mut worst = 0.0_f64;
    for (i, u) in vs.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u.dotc(v) - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        s.parse().unwrap()
    }

    #[test]
    fn tiles_is_orthonormal() {
        let q = upb_from_angles(&UpbAngles::tiles()).unwrap();
        assert!(gram_deviation(&q) < 1e-14);
        assert!(general_position(&q, Side::Both, &Tolerances::default()));
    }

    #[test]
    fn tiles_invariants() {
        let s = upb_invariants(&UpbAngles::tiles());
        let expected = InvariantSextet::from_real([-0.5, 2.0, -1.0], [2.0, 1.0 / 3.0, 1.5]);
        assert!(s.distance(&expected) < 1e-14);
        assert_eq!(
            symbol(&s, &Tolerances::default()).unwrap(),
            Some(sym("NPNPpP"))
        );
    }

    #[test]
    fn domain_is_checked() {
        let mut a = UpbAngles::tiles();
        a.theta_b = FRAC_PI_2;
        assert!(matches!(upb_from_angles(&a), Err(Error::OutOfDomain(_))));
        a.theta_b = 0.3;
        a.phi_a = -PI;
        assert!(upb_from_angles(&a).is_err());
    }

    #[test]
    fn symbol_examples() {
        let tol = Tolerances::default();
        let (a, b, c, d) = (0.5, 2.0, 3.0, 1.5);
        let s = InvariantSextet::from_real([a / b, -b, -1.0 / a], [c * d, 1.0 / d, 1.0 / c]);
        assert_eq!(symbol(&s, &tol).unwrap(), Some(sym("pNNPpp")));
        let mut complex = s;
        complex.ja[0].im = 0.5;
        assert_eq!(symbol(&complex, &tol).unwrap(), None);
        let near_one =
            InvariantSextet::from_real([1.0 + 1e-8, -b, -1.0 / a], [c * d, 1.0 / d, 1.0 / c]);
        assert!(matches!(symbol(&near_one, &tol), Err(Error::Borderline(_))));
    }

    #[test]
    fn table_lookup() {
        assert_eq!(
            normalizing_permutation(&sym("NPNPpP")),
            Some([0, 1, 2, 3, 4])
        );
        assert_eq!(
            normalizing_permutation(&sym("pNNPpp")),
            Some([1, 0, 2, 3, 4])
        );
        assert_eq!(
            normalizing_permutation(&sym("PpPNPN")),
            Some([0, 2, 4, 1, 3])
        );
        assert_eq!(normalizing_permutation(&sym("NNNNNN")), None);
        assert_eq!(upb_symbols().len(), 12);
        assert_eq!(cycle_notation(&[0, 2, 4, 1, 3]), "(1243)");
        assert_eq!(cycle_notation(&[0, 1, 2]), "id");
    }

    #[test]
    fn ordered_quintuples_are_distinct() {
        let all = ordered_quintuples();
        assert_eq!(all.len(), 720);
        let set: BTreeSet<_> = all.iter().collect();
        assert_eq!(set.len(), 720);
    }

    #[test]
    fn inverse_problem_on_tiles() {
        let s = InvariantSextet::from_real([-0.5, 2.0, -1.0], [2.0, 1.0 / 3.0, 1.5]);
        let a = angles_from_invariants(&s).unwrap();
        for x in [a.gamma_a, a.theta_a, a.gamma_b, a.theta_b] {
            assert!((x - FRAC_PI_4).abs() < 1e-12);
        }
        let wrong = InvariantSextet::from_real([0.25, 2.0, 2.0], [2.0, 1.0 / 3.0, 1.5]);
        assert!(matches!(
            angles_from_invariants(&wrong),
            Err(Error::WrongSymbol { .. })
        ));
    }

    #[test]
    fn real_family_unit_parameters() {
        let tol = Tolerances::default();
        let sextet = real_family(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(gram_deviation(&sextet[..5]) < 1e-14);
        let s = invariants(&sextet[..5], &tol).unwrap();
        let expected = InvariantSextet::from_real([-1.0, 2.0, -0.5], [2.0, 0.25, 2.0]);
        assert!(s.distance(&expected) < 1e-12);
        assert!(real_family(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn angles_json_field_names() {
        let v = serde_json::to_value(UpbAngles::tiles()).unwrap();
        assert!(v.get("gamma_A").is_some() && v.get("phi_B").is_some());
    }
}
