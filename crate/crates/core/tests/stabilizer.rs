use std::collections::BTreeMap;

use pptes_core::fixtures::{
    pyramid_sextet, tiles_cyclic_symmetry, tiles_sextet, tiles_sign_symmetry, tiles_state,
};
use pptes_core::pptes::{state_for_sextet, state_from_angles};
use pptes_core::sampling::{random_angles, random_ilo, random_invertible, rng_from_seed};
use pptes_core::search::kernel_product_states;
use pptes_core::stabilizer::{parse_cycles, stabilizer, verify_symmetry_commutes};
use pptes_core::{ProductVector, SearchConfig, Tolerances};

fn census(pairs: &[(usize, usize)]) -> BTreeMap<usize, usize> {
    pairs.iter().copied().collect()
}

#[test]
fn pyramid_stabilizer_is_a5() {
    let g = stabilizer(&pyramid_sextet(), &Tolerances::default()).unwrap();
    assert_eq!(g.order, 60);
    assert!(g.is_group());
    assert!(g.is_transitive());
    assert_eq!(
        g.order_census(),
        census(&[(1, 1), (2, 15), (3, 20), (5, 24)])
    );
}

#[test]
fn tiles_stabilizer_is_a4() {
    let g = stabilizer(&tiles_sextet(), &Tolerances::default()).unwrap();
    assert_eq!(g.order, 12);
    assert_eq!(g.order_census(), census(&[(1, 1), (2, 3), (3, 8)]));
    assert!(g.contains(&parse_cycles("(03)(25)").unwrap()));
    assert!(g.contains(&parse_cycles("(012)(345)").unwrap()));
}

#[test]
fn tiles_symmetries_commute_with_the_state() {
    let rho = tiles_state();
    for (a, b) in [tiles_sign_symmetry(), tiles_cyclic_symmetry()] {
        assert!(verify_symmetry_commutes(&rho, &a, &b));
    }
    let g = stabilizer(&tiles_sextet(), &Tolerances::default()).unwrap();
    for r in &g.realizations {
        assert!(
            verify_symmetry_commutes(&rho, &r.a, &r.b),
            "{}",
            r.permutation
        );
    }
    let mut rng = rng_from_seed(3);
    let a = random_invertible(&mut rng, 20.0);
    let b = random_invertible(&mut rng, 20.0);
    assert!(!verify_symmetry_commutes(&rho, &a, &b));
}

#[test]
fn pyramid_realizations_commute_with_its_state() {
    let tol = Tolerances::default();
    let rho = state_for_sextet(&pyramid_sextet(), &tol).unwrap();
    let g = stabilizer(&pyramid_sextet(), &tol).unwrap();
    for r in &g.realizations {
        assert!(
            verify_symmetry_commutes(&rho, &r.a, &r.b),
            "{}",
            r.permutation
        );
    }
}

#[test]
fn random_upbs_have_trivial_stabilizers() {
    let tol = Tolerances::default();
    let cfg = SearchConfig::default();
    let mut rng = rng_from_seed(21);
    for _ in 0..5 {
        let rho = state_from_angles(&random_angles(&mut rng, 0.05), None).unwrap();
        let sextet = kernel_product_states(&rho, &cfg, &tol).unwrap();
        let g = stabilizer(&sextet, &tol).unwrap();
        assert_eq!(g.order, 1);
    }
}

#[test]
fn order_is_invariant_under_local_maps() {
    let tol = Tolerances::default();
    let mut rng = rng_from_seed(8);
    let (a, b) = random_ilo(&mut rng);
    let image: Vec<ProductVector> = tiles_sextet()
        .iter()
        .map(|p| p.transformed(&a, &b).unwrap())
        .collect();
    assert_eq!(stabilizer(&image, &tol).unwrap().order, 12);
    let image: Vec<ProductVector> = pyramid_sextet()
        .iter()
        .map(|p| p.transformed(&a, &b).unwrap())
        .collect();
    assert_eq!(stabilizer(&image, &tol).unwrap().order, 60);
}
