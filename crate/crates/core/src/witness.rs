//! Entanglement witnesses `W = P − ε I` where `P` projects onto the kernel
//! of a rank-4 PPTES and `ε` is the minimum of `⟨e,f|P|e,f⟩` over product states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{
    is_hermitian, kernel_basis, min_eigenpair3, projector_onto, Mat3, Op9, Tolerances, Vec3,
};
use crate::sampling::{haar_vec3, rng_from_seed};
use crate::segre::ProductVector;

pub const DEFAULT_RESTARTS: usize = 200;
/// Absolute decrease of the objective below which the alternation stops.
pub const STALL: f64 = 1e-12;
/// Values of `ε` below this mean the complement of `P` contains a product state.
pub const DEGENERATE_EPSILON: f64 = 1e-8;
const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "P", with = "json::matrix")]
    pub p: Op9,
    pub epsilon: f64,
    pub certificate: ProductVector,
}

impl Witness {
    pub fn operator(&self) -> Op9 {
        self.p - Op9::identity() * crate::linalg::r(self.epsilon)
    }
}

/// `(⟨e| ⊗ I) P (|e⟩ ⊗ I)`.
pub fn reduce_on_a(p: &Op9, e: &Vec3) -> Mat3 {
    Mat3::from_fn(|j, l| {
        let mut acc = crate::linalg::ZERO;
        for i in 0..3 {
            for k in 0..3 {
                acc += e[i].conj() * e[k] * p[(3 * i + j, 3 * k + l)];
            }
        }
        acc
    })
}

/// `(I ⊗ ⟨f|) P (I ⊗ |f⟩)`.
pub fn reduce_on_b(p: &Op9, f: &Vec3) -> Mat3 {
    Mat3::from_fn(|i, k| {
        let mut acc = crate::linalg::ZERO;
        for j in 0..3 {
            for l in 0..3 {
                acc += f[j].conj() * f[l] * p[(3 * i + j, 3 * k + l)];
            }
        }
        acc
    })
}

/// `⟨a,b|P|a,b⟩` for unit factors.
pub fn product_expectation(p: &Op9, x: &ProductVector) -> f64 {
    let v = x.to_vec9();
    (v.adjoint() * p * v)[(0, 0)].re
}

#[derive(Debug, Clone)]
pub struct SeesawRun {
    pub value: f64,
    pub point: ProductVector,
    /// Objective after each half-step.
    pub history: Vec<f64>,
}

/// Alternating minimization from `e0`; each half-step is an exact 3×3 eigenproblem.
pub fn seesaw(p: &Op9, e0: &Vec3) -> SeesawRun {
    let mut e = e0 / crate::linalg::r(e0.norm());
    let mut f = Vec3::zeros();
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let (value_f, f_new) = min_eigenpair3(&reduce_on_a(p, &e));
        f = f_new;
        history.push(value_f);
        let (value_e, e_new) = min_eigenpair3(&reduce_on_b(p, &f));
        e = e_new;
        history.push(value_e);
        if prev - value_e <= STALL {
            break;
        }
        prev = value_e;
    }
    let point = ProductVector::new(e, f).expect("eigenvectors are nonzero");
    SeesawRun {
        value: product_expectation(p, &point),
        point,
        history,
    }
}

fn check_projector(p: &Op9, tol: &Tolerances) -> Result<()> {
    if !p.iter().all(|z| z.is_finite()) || !is_hermitian(p, tol.eq_rel) {
        return Err(Error::InvalidInput(
            "P must be a finite Hermitian matrix".into(),
        ));
    }
    let dev = (p * p - p).norm();
    if dev > tol.eq_rel * p.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "P is not a projector (‖P² − P‖ = {dev:e})"
        )));
    }
    Ok(())
}

/// Best seesaw value over `restarts` Haar-random starts.
pub fn epsilon(
    p: &Op9,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(f64, ProductVector)> {
    check_projector(p, tol)?;
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut best: Option<SeesawRun> = None;
    for _ in 0..restarts {
        let run = seesaw(p, &haar_vec3(&mut rng));
        let better = match &best {
            None => true,
            Some(b) => {
                run.value < b.value
                    || (run.value == b.value && run.point.order_key() < b.point.order_key())
            }
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    if best.value < DEGENERATE_EPSILON {
        return Err(Error::DegenerateWitness(best.value));
    }
    Ok((best.value, best.point))
}

pub fn witness_from_projector(
    p: &Op9,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Witness> {
    let (epsilon, certificate) = epsilon(p, restarts, seed, tol)?;
    Ok(Witness {
        p: *p,
        epsilon,
        certificate,
    })
}

/// Witness built from the projector onto `ker ρ`.
pub fn witness_for_state(
    rho: &Op9,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Witness> {
    let kernel = kernel_basis(rho, tol.rank_rel);
    if kernel.is_empty() {
        return Err(Error::InvalidInput("state has full rank".into()));
    }
    witness_from_projector(&projector_onto(&kernel), restarts, seed, tol)
}

/// `tr(W ρ)`.
pub fn witness_value(w: &Witness, rho: &Op9) -> f64 {
    (w.operator() * rho).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::pptes::state_from_angles;
    use crate::sampling::random_product_vector;
    use crate::upb::UpbAngles;

    #[test]
    fn identity_has_epsilon_one() {
        let (eps, _) = epsilon(&Op9::identity(), 5, 0, &Tolerances::default()).unwrap();
        assert!((eps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reductions_agree_with_expectation() {
        let rho = state_from_angles(&UpbAngles::tiles(), None).unwrap();
        let p = projector_onto(&kernel_basis(&rho, 1e-9));
        let mut rng = rng_from_seed(4);
        let x = random_product_vector(&mut rng);
        let direct = product_expectation(&p, &x);
        let via_a = (x.b.adjoint() * reduce_on_a(&p, &x.a) * x.b)[(0, 0)].re;
        let via_b = (x.a.adjoint() * reduce_on_b(&p, &x.b) * x.a)[(0, 0)].re;
        assert!((direct - via_a).abs() < 1e-14 && (direct - via_b).abs() < 1e-14);
        assert!(
            (direct - (kron(&x.a, &x.b).adjoint() * p * kron(&x.a, &x.b))[(0, 0)].re).abs() < 1e-14
        );
    }

    #[test]
    fn seesaw_is_monotone() {
        let rho = state_from_angles(&UpbAngles::tiles(), None).unwrap();
        let p = projector_onto(&kernel_basis(&rho, 1e-9));
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let run = seesaw(&p, &haar_vec3(&mut rng));
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_when_complement_has_a_product() {
        let mut v = crate::linalg::Vec9::zeros();
        v[0] = crate::linalg::ONE;
        let p = Op9::identity() - v * v.adjoint();
        assert!(matches!(
            epsilon(&p, 20, 1, &Tolerances::default()),
            Err(Error::DegenerateWitness(_))
        ));
    }

    #[test]
    fn rejects_non_projector() {
        let p = Op9::identity() * crate::linalg::r(2.0);
        assert!(matches!(
            epsilon(&p, 5, 0, &Tolerances::default()),
            Err(Error::InvalidInput(_))
        ));
    }
}
