//! Rank-four states of two qutrits: block form, the family invariant under
//! partial transposition, UPB projectors and the reconstruction of a PPT
//! entangled state from its kernel.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::invariants;
use crate::json;
use crate::linalg::{
    is_finite_op, is_hermitian, is_psd, kron_op, numeric_rank, partial_transpose, Mat3, Op9,
    Tolerances, Vec3, Vec9, C64, ONE, ZERO,
};
use crate::search::{kernel_product_states, range_has_product_state, SearchConfig};
use crate::segre::{
    four_point_map_pair, general_position, max_map_mismatch, rank_one_factor, side_factors,
    ProductVector, Side,
};
use crate::upb::{
    angles_from_invariants, cycle_notation, gram_deviation, normalizing_permutation,
    ordered_quintuples, permute, symbol_with_tol, upb_from_angles, Symbol, UpbAngles,
    FAMILY_SYMBOL, SYMBOL_TOL,
};

pub type Block = SMatrix<C64, 4, 3>;

/// `ρ = Σ_ij |i⟩⟨j| ⊗ C_i† C_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    #[serde(rename = "C0", with = "json::matrix")]
    pub c0: Block,
    #[serde(rename = "C1", with = "json::matrix")]
    pub c1: Block,
    #[serde(rename = "C2", with = "json::matrix")]
    pub c2: Block,
}

impl BlockState {
    pub fn blocks(&self) -> [Block; 3] {
        [self.c0, self.c1, self.c2]
    }

    /// Blocks of `Σ_r |ψ_r⟩⟨ψ_r|` for at most four vectors.
    pub fn from_vectors(psi: &[Vec9]) -> Result<Self> {
        if psi.len() > 4 {
            return Err(Error::InvalidInput(format!(
                "at most 4 vectors, got {}",
                psi.len()
            )));
        }
        // row r of C = [C0 C1 C2] is the conjugate of ψ_r
        let block =
            |i: usize| Block::from_fn(|r, k| psi.get(r).map_or(ZERO, |v| v[3 * i + k].conj()));
        Ok(BlockState {
            c0: block(0),
            c1: block(1),
            c2: block(2),
        })
    }
}

pub fn state_from_blocks(bs: &BlockState) -> Op9 {
    let blocks = bs.blocks();
    Op9::from_fn(|row, col| {
        let (i, k) = (row / 3, row % 3);
        let (j, l) = (col / 3, col % 3);
        (0..4)
            .map(|r| blocks[i][(r, k)].conj() * blocks[j][(r, l)])
            .sum()
    })
}

/// Parameters of the family invariant under partial transposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CanonicalParams {
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || self.a == 0.0 {
            return Err(Error::OutOfDomain(format!(
                "a must be a nonzero real, got {}",
                self.a
            )));
        }
        for (name, x) in [("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::OutOfDomain(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        Ok(())
    }

    /// `λ = b²c / (1 + b² + b²c²)`.
    pub fn lambda(&self) -> f64 {
        let (b, c) = (self.b, self.c);
        b * b * c / (1.0 + b * b + b * b * c * c)
    }
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn canonical_blocks(p: &CanonicalParams) -> Result<BlockState> {
    p.validate()?;
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let block = |rows: [[f64; 3]; 4]| Block::from_fn(|i, j| r(rows[i][j]));
    Ok(BlockState {
        c0: block([[0.0, a, b], [0.0, 0.0, 1.0], [0.0; 3], [0.0; 3]]),
        c1: block([
            [0.0; 3],
            [0.0, 0.0, c],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, -1.0 / d],
        ]),
        c2: block([
            [0.0, -1.0 / b, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, -c, 0.0],
            [d, 0.0, 0.0],
        ]),
    })
}

/// Coefficients `[c0, c1, c2, c3]` of the cubic whose roots parametrize the
/// three non-diagonal kernel product states.
pub fn cubic_coefficients(p: &CanonicalParams) -> [f64; 4] {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let e = 1.0 + d * d;
    let h = 1.0 + c * c;
    let k = 1.0 + b * b + b * b * c * c;
    [
        -d * b * b * c,
        -a * b * e * c + d * (b * b * c * c + k),
        a * b * (c * c + e * h) - d * c * k,
        -a * b * c * h,
    ]
}

/// `f(z) = abz(cz − 1 − d²)(c − (1 + c²)z) + d(cz − 1)(b²c − (1 + b² + b²c²)z)`.
pub fn cubic(p: &CanonicalParams, z: f64) -> f64 {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    a * b * z * (c * z - 1.0 - d * d) * (c - (1.0 + c * c) * z)
        + d * (c * z - 1.0) * (b * b * c - (1.0 + b * b + b * b * c * c) * z)
}

fn bisect(p: &CanonicalParams, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = cubic(p, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = cubic(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn newton_polish(coeffs: &[f64; 4], mut z: f64) -> f64 {
    for _ in 0..5 {
        let f = ((coeffs[3] * z + coeffs[2]) * z + coeffs[1]) * z + coeffs[0];
        let df = (3.0 * coeffs[3] * z + 2.0 * coeffs[2]) * z + coeffs[1];
        if df == 0.0 {
            break;
        }
        let next = z - f / df;
        if !next.is_finite() {
            break;
        }
        z = next;
    }
    z
}

/// The roots `(z₁, z₂, z₃)`: `z₁` lies in `(0, c/(1+c²))`, `z₂` in
/// `(c/(1+c²), (1+d²)/c)` and `z₃` outside `[0, (1+d²)/c]`.
pub fn cubic_roots(p: &CanonicalParams) -> Result<[f64; 3]> {
    p.validate()?;
    let coeffs = cubic_coefficients(p);
    let mid = p.c / (1.0 + p.c * p.c);
    let top = (1.0 + p.d * p.d) / p.c;
    let z1 = newton_polish(&coeffs, bisect(p, 0.0, mid));
    let z2 = newton_polish(&coeffs, bisect(p, mid, top));
    let z3 = newton_polish(&coeffs, -coeffs[2] / coeffs[3] - z1 - z2);
    Ok([z1, z2, z3])
}

/// Matrix of the kernel product state attached to a root `z`.
pub fn kernel_matrix(p: &CanonicalParams, z: f64) -> Mat3 {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let k = (1.0 + b * b + b * b * c * c) * z - b * b * c;
    let e = 1.0 + d * d;
    Mat3::new(
        r(k / (a * b * z)),
        r(k / (a * b)),
        r(c - (1.0 + c * c) * z),
        r((c * z - e) / d),
        r(z * (c * z - e) / d),
        r(c * z - 1.0),
        r(1.0),
        r(z),
        r(d * (c * z - 1.0) / (c * z - e)),
    )
}

fn diagonal_ket(k: usize) -> ProductVector {
    let mut e = Vec3::zeros();
    e[k] = ONE;
    ProductVector::new(e, e).expect("basis vectors are nonzero")
}

/// `|00⟩, |11⟩, |22⟩` followed by the three product states of the roots.
pub fn kernel_sextet(p: &CanonicalParams) -> Result<[ProductVector; 6]> {
    let roots = cubic_roots(p)?;
    let tol = Tolerances::default();
    let mut out = [
        diagonal_ket(0),
        diagonal_ket(1),
        diagonal_ket(2),
        diagonal_ket(0),
        diagonal_ket(0),
        diagonal_ket(0),
    ];
    for (slot, z) in out[3..].iter_mut().zip(roots) {
        *slot = rank_one_factor(&kernel_matrix(p, z), &tol)?.ok_or_else(|| {
            Error::Precondition(format!("kernel matrix at z = {z} is not of rank one"))
        })?;
    }
    Ok(out)
}

pub fn canonical_state(p: &CanonicalParams) -> Result<Op9> {
    Ok(state_from_blocks(&canonical_blocks(p)?))
}

/// `Π = (I − Σ |ψ_k⟩⟨ψ_k|) / 4` for an orthonormal UPB.
pub fn projector_state(q: &[ProductVector]) -> Result<Op9> {
    let dev = gram_deviation(q);
    if dev > 1e-8 {
        return Err(Error::NonOrthogonal(dev));
    }
    let p = q.iter().fold(Op9::identity(), |acc, x| {
        let v = x.to_vec9();
        acc - v * v.adjoint()
    });
    Ok(p / r(4.0))
}

pub fn normalize_trace(rho: &Op9) -> Op9 {
    rho / rho.trace()
}

/// `(A ⊗ B) Π (A ⊗ B)†` for the family member with the given angles,
/// normalized to unit trace.
pub fn state_from_angles(angles: &UpbAngles, ilo: Option<(&Mat3, &Mat3)>) -> Result<Op9> {
    let pi = projector_state(&upb_from_angles(angles)?)?;
    let rho = match ilo {
        Some((a, b)) => {
            if a.determinant().norm() < 1e-12 * a.norm().powi(3)
                || b.determinant().norm() < 1e-12 * b.norm().powi(3)
            {
                return Err(Error::InvalidInput(
                    "local operator is not invertible".into(),
                ));
            }
            let n = kron_op(a, b);
            n * pi * n.adjoint()
        }
        None => pi,
    };
    Ok(normalize_trace(&rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptesCheck {
    pub rank: usize,
    pub ppt: bool,
    /// `None` when the tests here cannot decide (a PPT state of rank other than 4).
    pub entangled: Option<bool>,
    pub pt_rank: usize,
}

fn validate_state(rho: &Op9, tol: &Tolerances) -> Result<()> {
    if !is_finite_op(rho) {
        return Err(Error::InvalidInput("state has non-finite entries".into()));
    }
    if !is_hermitian(rho, 1e-9) {
        return Err(Error::InvalidInput("state is not Hermitian".into()));
    }
    if !is_psd(rho, tol) {
        return Err(Error::InvalidInput(
            "state is not positive semidefinite".into(),
        ));
    }
    Ok(())
}

pub fn pt_rank(rho: &Op9, tol: &Tolerances) -> usize {
    numeric_rank(&partial_transpose(rho), tol.rank_rel)
}

pub fn is_ppt(rho: &Op9, tol: &Tolerances) -> bool {
    is_psd(&partial_transpose(rho), tol)
}

pub fn check_state(rho: &Op9, cfg: &SearchConfig, tol: &Tolerances) -> Result<PptesCheck> {
    validate_state(rho, tol)?;
    let rank = numeric_rank(rho, tol.rank_rel);
    let ppt = is_ppt(rho, tol);
    let entangled = if !ppt {
        Some(true)
    } else if rank == 4 {
        Some(!range_has_product_state(rho, cfg, tol)?)
    } else {
        None
    };
    Ok(PptesCheck {
        rank,
        ppt,
        entangled,
        pt_rank: pt_rank(rho, tol),
    })
}

/// Rank four, PPT and no product state in the range.
pub fn is_pptes_rank4(rho: &Op9, cfg: &SearchConfig, tol: &Tolerances) -> Result<bool> {
    validate_state(rho, tol)?;
    Ok(numeric_rank(rho, tol.rank_rel) == 4
        && is_ppt(rho, tol)
        && !range_has_product_state(rho, cfg, tol)?)
}

/// Whether the range lies in the symmetric subspace spanned by `|ii⟩` and `|ij⟩ + |ji⟩`.
pub fn is_symmetric_range(rho: &Op9, tol: &Tolerances) -> bool {
    let swap = Op9::from_fn(|row, col| {
        let (i, j) = (row / 3, row % 3);
        if col == 3 * j + i {
            ONE
        } else {
            ZERO
        }
    });
    let antisym = (Op9::identity() - swap) * rho;
    antisym.norm() <= tol.eq_rel * rho.norm()
}

/// Residual allowed between the input and the rebuilt state.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// The family member with zero phases whose projector is SLOCC-equivalent to the input.
    pub upb: [ProductVector; 5],
    pub angles: UpbAngles,
    /// `A ⊗ B` maps the UPB onto the reordered kernel product states.
    #[serde(rename = "A", with = "json::matrix")]
    pub a: Mat3,
    #[serde(rename = "B", with = "json::matrix")]
    pub b: Mat3,
    pub residual: f64,
    pub kernel_products: Vec<ProductVector>,
    /// Symbol of the first five kernel product states.
    pub symbol: Symbol,
    /// Cycle notation of the reordering that brings those five to the family symbol.
    pub permutation: String,
    /// `upb[k]` is mapped onto `kernel_products[ordering[k]]`. Among all
    /// orderings with the family symbol, the one with the most nearly
    /// unitary `A`, `B` is used.
    pub ordering: [usize; 5],
}

impl ReconstructionResult {
    /// `N^{-†} Π N^{-1}` with `N = A ⊗ B`, normalized.
    pub fn rebuilt_state(&self) -> Result<Op9> {
        let pi = projector_state(&self.upb)?;
        let a_inv = self
            .a
            .try_inverse()
            .ok_or_else(|| Error::GeneralPosition("singular A".into()))?;
        let b_inv = self
            .b
            .try_inverse()
            .ok_or_else(|| Error::GeneralPosition("singular B".into()))?;
        let n_inv = kron_op(&a_inv, &b_inv);
        Ok(normalize_trace(&(n_inv.adjoint() * pi * n_inv)))
    }
}

/// Steps shared by reconstruction and by building a state from a known
/// kernel sextet: symbol, reordering, angles and the local maps.
pub fn fit_kernel_sextet(
    products: Vec<ProductVector>,
    tol: &Tolerances,
) -> Result<ReconstructionResult> {
    if products.len() != 6 {
        return Err(Error::KernelProductCount {
            found: products.len(),
        }
        .at_stage("kernel products"));
    }
    if !general_position(&products, Side::Both, tol) {
        return Err(Error::GeneralPosition("kernel sextet".into()).at_stage("kernel products"));
    }

    let quintuple = &products[..5];
    let s = invariants(quintuple, tol).map_err(|e| e.at_stage("invariants"))?;
    let symbol = symbol_with_tol(&s, SYMBOL_TOL)
        .map_err(|e| e.at_stage("symbol"))?
        .ok_or_else(|| Error::NonRealInvariants.at_stage("symbol"))?;
    let sigma = normalizing_permutation(&symbol)
        .ok_or_else(|| Error::NotUpbSymbol(symbol.to_string()).at_stage("symbol"))?;

    let mut best = fit_ordering(&products, sigma, tol)?;
    let family: Symbol = FAMILY_SYMBOL.parse().expect("valid symbol");
    for idx in ordered_quintuples() {
        let q = permute(&products, &idx);
        let same_symbol = invariants(&q, tol)
            .ok()
            .and_then(|s| symbol_with_tol(&s, SYMBOL_TOL).ok().flatten())
            == Some(family);
        if !same_symbol {
            continue;
        }
        if let Ok(fit) = fit_ordering(&products, idx, tol) {
            if fit.defect < best.defect - 1e-9 {
                best = fit;
            }
        }
    }

    Ok(ReconstructionResult {
        upb: best.upb,
        angles: best.angles,
        a: best.a,
        b: best.b,
        residual: 0.0,
        kernel_products: products,
        symbol,
        permutation: cycle_notation(&sigma),
        ordering: best.ordering,
    })
}

struct OrderedFit {
    ordering: [usize; 5],
    upb: [ProductVector; 5],
    angles: UpbAngles,
    a: Mat3,
    b: Mat3,
    /// Distance of `A†A` and `B†B` from multiples of the identity.
    defect: f64,
}

fn unitarity_defect(m: &Mat3) -> f64 {
    let g = m.adjoint() * m;
    let scale = g.trace() / C64::new(3.0, 0.0);
    (g / scale - Mat3::identity()).norm()
}

/// Angles and local maps for the ordered quintuple `products[ordering[k]]`,
/// which must carry the family symbol.
fn fit_ordering(
    products: &[ProductVector],
    ordering: [usize; 5],
    tol: &Tolerances,
) -> Result<OrderedFit> {
    let reordered = permute(products, &ordering);
    let s_family = invariants(&reordered, tol).map_err(|e| e.at_stage("invariants"))?;

    let angles = angles_from_invariants(&s_family).map_err(|e| e.at_stage("angles"))?;
    let upb = upb_from_angles(&angles).map_err(|e| e.at_stage("angles"))?;

    let (a, b) =
        four_point_map_pair(&upb, &reordered, tol).map_err(|e| e.at_stage("four point map"))?;
    let mismatch = max_map_mismatch(
        &a,
        &side_factors(&upb, Side::A),
        &side_factors(&reordered, Side::A),
    )
    .max(max_map_mismatch(
        &b,
        &side_factors(&upb, Side::B),
        &side_factors(&reordered, Side::B),
    ));
    if mismatch > tol.eq_rel {
        return Err(Error::ResidualTooLarge {
            residual: mismatch,
            tolerance: tol.eq_rel,
        }
        .at_stage("fifth point"));
    }
    Ok(OrderedFit {
        ordering,
        upb,
        angles,
        defect: unitarity_defect(&a) + unitarity_defect(&b),
        a,
        b,
    })
}

/// The rank-4 PPTES whose kernel is spanned by a sextet of UPB type.
pub fn state_for_sextet(sextet: &[ProductVector], tol: &Tolerances) -> Result<Op9> {
    fit_kernel_sextet(sextet.to_vec(), tol)?.rebuilt_state()
}

/// Recovers `A`, `B` and a UPB with `ρ ∝ (A ⊗ B)^{-†} Π (A ⊗ B)^{-1}`.
pub fn reconstruct(
    rho: &Op9,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<ReconstructionResult> {
    validate_state(rho, tol)?;
    let rank = numeric_rank(rho, tol.rank_rel);
    if rank != 4 {
        return Err(Error::NotPptes(format!("rank is {rank}")));
    }
    if !is_ppt(rho, tol) {
        return Err(Error::NotPptes(
            "partial transpose is not positive semidefinite".into(),
        ));
    }
    if range_has_product_state(rho, cfg, tol)? {
        return Err(Error::NotPptes("range contains a product state".into()));
    }

    let products =
        kernel_product_states(rho, cfg, tol).map_err(|e| e.at_stage("kernel products"))?;
    let mut result = fit_kernel_sextet(products, tol)?;
    let rebuilt = result.rebuilt_state().map_err(|e| e.at_stage("rebuild"))?;
    let residual = (rebuilt - normalize_trace(rho)).norm();
    if !(residual <= RECONSTRUCTION_TOL) {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: RECONSTRUCTION_TOL,
        }
        .at_stage("rebuild"));
    }
    result.residual = residual;
    Ok(result)
}
