mod common;

use cbfem::assembly::{coercivity_check, gram_matrix, stiffness_matrix, weighted_mass_a, BandedMatrix};
use cbfem::bathymetry::{Bathymetry, Profile};
use cbfem::spline::{gauss_rule, EndCondition, Partition, SplineSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cubic(n: usize, bc: EndCondition) -> SplineSpace {
    SplineSpace::cubic(Partition::new(0.0, 1.0, n).unwrap(), bc).unwrap()
}

fn positive_pivots(mut m: BandedMatrix) -> bool {
    m.factor().is_ok() && m.pivots().iter().all(|&p| p > 0.0)
}

#[test]
fn coercivity_reference_cases() {
    let flat = coercivity_check(&Bathymetry::flat(), 0.1, 0.0, 1.0, None);
    assert_eq!((flat.c1, flat.c2), (1.0, 1.0));
    assert!(flat.satisfied);
    let sine = Bathymetry::new(Profile::SineBottom { beta: 0.1 }).unwrap();
    let r = coercivity_check(&sine, 0.1, 0.0, 1.0, None);
    assert!((r.c1 - 0.9).abs() < 1e-12 && r.c2 > 0.0 && r.satisfied);
}

#[test]
fn sharp_seams_fail_the_coercivity_check() {
    let steep = Bathymetry::new(Profile::SmoothStep {
        center: 0.5,
        half_width: 0.05,
        beta: 0.99,
    })
    .unwrap();
    let r = coercivity_check(&steep, 1.0, 0.0, 1.0, None);
    assert!(!r.satisfied);
    assert!(weighted_mass_a(&cubic(16, EndCondition::ZeroEndpoints), &steep, 1.0).is_err());
}

#[test]
fn polynomial_integrands_are_exact() {
    // (phi_i, x^k) summed over i is the integral of x^k for k <= 2n - 1 - 3.
    let s = cubic(5, EndCondition::Free);
    let g = gram_matrix(&s, |x| x * x);
    let total = g.entry_sum();
    assert!((total - 1.0 / 3.0).abs() < 1e-13, "{total}");
    for n in 1..=10 {
        let rule = gauss_rule(n).unwrap();
        let d = 2 * n - 1;
        let v = rule.integrate(0.0, 2.0, |x| x.powi(d as i32));
        let exact = 2f64.powi(d as i32 + 1) / (d + 1) as f64;
        assert!((v - exact).abs() < 1e-13 * exact, "n = {n}");
    }
}

#[test]
fn banded_solve_matches_dense_elimination() {
    let s = cubic(12, EndCondition::Free);
    let g = gram_matrix(&s, |x| 1.0 + x);
    let n = g.dim();
    let dense: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g.get(i, j)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut f = g.clone();
    f.factor().unwrap();
    let x = f.solve(&b).unwrap();
    let y = common::dense_solve(dense, b);
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
    }
}

proptest! {
    #[test]
    fn forms_are_symmetric_and_positive(n in 2usize..40, beta in -0.5f64..0.5, mu in 0.0f64..1.0) {
        let s = cubic(n, EndCondition::Free);
        let s0 = cubic(n, EndCondition::ZeroEndpoints);
        let bathy = Bathymetry::new(Profile::SineBottom { beta }).unwrap();
        let g = gram_matrix(&s, |x| bathy.depth(x)[0]);
        prop_assert!(g.asymmetry() <= 1e-14 * g.entry_sum().abs().max(1.0));
        prop_assert!(positive_pivots(g));
        let k = stiffness_matrix(&s0);
        prop_assert!(k.asymmetry() <= 1e-14 * n as f64);
        prop_assert!(positive_pivots(k));
        if coercivity_check(&bathy, mu, 0.0, 1.0, Some(n)).satisfied {
            let a = weighted_mass_a(&s0, &bathy, mu).unwrap();
            prop_assert!(a.asymmetry() <= 1e-14 * n as f64);
            prop_assert!(positive_pivots(a));
        }
    }
}

#[test]
fn topographic_form_is_coercive_on_random_vectors() {
    let bathy = Bathymetry::new(Profile::SmoothStep {
        center: 0.5,
        half_width: 0.25,
        beta: 0.4,
    })
    .unwrap();
    let mu = 0.2;
    let n = 24;
    let s0 = cubic(n, EndCondition::ZeroEndpoints);
    let full = cubic(n, EndCondition::Free);
    let report = coercivity_check(&bathy, mu, 0.0, 1.0, Some(n));
    assert!(report.satisfied && report.c_mu > 0.0);
    let a = weighted_mass_a(&s0, &bathy, mu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let v: Vec<f64> = (0..s0.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let av = a.matvec(&v).unwrap();
        let vav: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        let vf = s0.to_full(&v);
        let norm: f64 = common::element_rule(&full, 5)
            .iter()
            .map(|&(x, w)| {
                let (f, d) = (full.eval(&vf, x, 0).unwrap(), full.eval(&vf, x, 1).unwrap());
                w * (f * f + d * d)
            })
            .sum();
        assert!(vav >= report.c_mu * norm - 1e-10, "{vav} < {} * {norm}", report.c_mu);
    }
}
