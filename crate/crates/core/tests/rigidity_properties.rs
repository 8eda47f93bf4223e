mod common;

use common::norm;
use proptest::prelude::*;
use zerogauss::corpus;
use zerogauss::output::to_json;
use zerogauss::rigidity::{
    decay_profile, rigidity_verdict, sphere_sup, Outcome, Quantity, RigidityConfig,
};
use zerogauss::{parse_field, DomainBox};

fn small_config(seed: u64) -> RigidityConfig {
    RigidityConfig {
        sphere_samples: 64,
        region_samples: 200,
        seed,
        ..Default::default()
    }
}

/// `a(n−1)/R`, `(n−1)a/(√(1+a²)R)`, `(1−a²)(n−1)a/R` for `v = a‖x‖`.
fn cone_profile(q: Quantity, a: f64, n: usize, r: f64) -> f64 {
    let m = (n - 1) as f64;
    match q {
        Quantity::Laplacian => a * m / r,
        Quantity::MeanEuclidean => m * a / ((1.0 + a * a).sqrt() * r),
        _ => (1.0 - a * a) * m * a / r,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cone_profiles_match_closed_forms(
        a in 0.05f64..0.95,
        n in 2usize..=4,
        qi in 0usize..3,
        seed in any::<u64>(),
    ) {
        let q = [Quantity::Laplacian, Quantity::MeanEuclidean, Quantity::MeanMinkowskiTilde][qi];
        let v = corpus::cone(a, n).unwrap().field;
        let radii = [1.0, 10.0, 100.0];
        let p = decay_profile(&v, q, &vec![0.0; n], &radii, 64, seed).unwrap();
        for s in &p.spheres {
            let expected = cone_profile(q, a, n, s.radius);
            prop_assert!((s.sup - expected).abs() <= 1e-6 * expected);
            prop_assert!((norm(&s.argmax) - s.radius).abs() <= 1e-12 * s.radius);
        }
        prop_assert!(p.monotone);
    }

    #[test]
    fn witnesses_reproduce_their_values(idx in 0usize..16, qi in 0usize..4, seed in 0u64..1000) {
        let entries = corpus::corpus();
        let e = &entries[idx % entries.len()];
        let q = Quantity::ALL[qi];
        let config = small_config(seed);
        let v = rigidity_verdict(&e.field, q, &config).unwrap();
        match &v.witness {
            None => prop_assert!(v.outcome == Outcome::HyperplaneConsistent),
            Some(w) => {
                let again = w.reevaluate(&e.field, q, &config.tolerances).unwrap();
                prop_assert!((again - w.value).abs() <= 1e-10 * w.value.abs().max(1e-300),
                    "{}: {again} vs {}", e.name, w.value);
            }
        }
    }

    #[test]
    fn verdicts_are_reproducible(idx in 0usize..16, qi in 0usize..3, seed in any::<u64>()) {
        let entries = corpus::corpus();
        let e = &entries[idx % entries.len()];
        let q = Quantity::ALL[qi];
        let config = small_config(seed);
        let a = rigidity_verdict(&e.field, q, &config).unwrap();
        let b = rigidity_verdict(&e.field, q, &config).unwrap();
        prop_assert_eq!(to_json(&a), to_json(&b));
    }

    #[test]
    fn affine_sups_vanish(b1 in -0.9f64..0.9, b2 in -0.4f64..0.4, r in 0.5f64..100.0, seed in any::<u64>()) {
        let f = parse_field(&format!("({b1})*x1 + ({b2})*x2 + 7"), 2)
            .unwrap()
            .with_domain(DomainBox::cube(2, 200.0))
            .unwrap();
        for q in [Quantity::Laplacian, Quantity::MeanEuclidean, Quantity::MeanMinkowskiTilde] {
            prop_assert_eq!(sphere_sup(&f, q, &[0.0, 0.0], r, 16, seed).unwrap().sup, 0.0);
        }
    }
}

#[test]
fn outcomes_for_the_standard_fields() {
    let config = small_config(1);
    let example = corpus::example(0.5, 1.0).unwrap().field;
    let v = rigidity_verdict(&example, Quantity::MeanMinkowskiTilde, &config).unwrap();
    assert_eq!(v.outcome, Outcome::DecayFails);
    let d = v.witness.unwrap().direction.unwrap();
    assert!(d[1].abs() >= 5f64.to_radians().cos());
    let quad = corpus::quadratic(2).unwrap().field;
    for q in Quantity::ALL {
        assert_eq!(rigidity_verdict(&quad, q, &config).unwrap().outcome, Outcome::NotDevelopable);
    }
    // the scope records every threshold the verdict depends on
    let scope = &rigidity_verdict(&example, Quantity::Laplacian, &config).unwrap().scope;
    assert_eq!(scope.radii, vec![1.0, 10.0, 100.0]);
    assert_eq!(scope.tolerances.decay, 1e-6);
    assert!(scope.sup_is_lower_bound);
}
