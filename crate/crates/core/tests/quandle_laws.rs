use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tangleforge::quandle::{verify_axioms, Element, Quandle, QuandleKind, QuandleOps, Samples};

const REL_TOL: f64 = 1e-8;

fn q(kind: QuandleKind) -> Quandle {
    Quandle::new(kind).unwrap()
}

/// Brute-force dihedral table: `x > y` is the reflection of `x` through `y`.
fn reflection(n: usize, x: usize, y: usize) -> usize {
    (0..n).find(|&z| (z + x) % n == (2 * y) % n).unwrap()
}

#[test]
fn dihedral_matches_reflection_table() {
    for n in 2..=9 {
        let d = Quandle::dihedral(n).unwrap();
        for x in 0..n {
            for y in 0..n {
                let got = d.apply(&Element::Residue(x), &Element::Residue(y), None).unwrap();
                assert_eq!(got, Element::Residue(reflection(n, x, y)), "n={n} x={x} y={y}");
            }
        }
    }
    let d3 = Quandle::dihedral(3).unwrap();
    assert_eq!(d3.apply(&Element::Residue(0), &Element::Residue(1), None).unwrap(), Element::Residue(2));
}

#[test]
fn exhaustive_axioms_for_small_finite_kinds() {
    for kind in [QuandleKind::Dihedral(3), QuandleKind::Dihedral(5), QuandleKind::Dihedral(7), QuandleKind::Conjugation(3)] {
        let report = verify_axioms(&q(kind), Samples::Exhaustive, 0.0).unwrap();
        assert!(report.all_passed(), "{kind}: {report:?}");
        let n = kind.carrier_size().unwrap();
        assert_eq!(report.self_distributivity.checked, n * n * n);
    }
}

#[test]
fn random_axioms_for_continuous_kinds() {
    for kind in [
        QuandleKind::Linear(3),
        QuandleKind::Loglinear(3),
        QuandleKind::GaussianCi(2),
        QuandleKind::Hamiltonian(2),
    ] {
        let report = verify_axioms(&q(kind), Samples::Random { count: 1000, seed: 11 }, REL_TOL).unwrap();
        assert!(report.all_passed(), "{kind}: {report:?}");
        assert!(report.samples >= 1000);
    }
}

#[test]
fn linear_example_and_loglinear_positivity() {
    let lin = q(QuandleKind::Linear(1));
    let z = lin.apply(&lin.parse_element("[0]").unwrap(), &lin.parse_element("[2]").unwrap(), Some(0.5)).unwrap();
    assert_eq!(z, lin.parse_element("[1]").unwrap());
    assert!(lin.apply(&z, &z, Some(1.0)).is_err());
    assert!(lin.apply(&z, &z, None).is_err());
    let log = q(QuandleKind::Loglinear(2));
    assert!(log.parse_element("[1, 0]").is_err());
    let z = log.apply(&log.parse_element("[1, 4]").unwrap(), &log.parse_element("[4, 1]").unwrap(), Some(0.5)).unwrap();
    assert!(z.approx_eq(&log.parse_element("[2, 2]").unwrap(), 1e-12));
}

#[test]
fn kind_mismatch_is_an_error() {
    let d3 = Quandle::dihedral(3).unwrap();
    assert!(d3.apply(&Element::Residue(0), &Element::Perm(vec![0, 1, 2]), None).is_err());
    assert!(d3.apply(&Element::Residue(3), &Element::Residue(0), None).is_err());
}

fn weighted_kinds() -> impl Strategy<Value = QuandleKind> {
    prop_oneof![
        (1usize..=4).prop_map(QuandleKind::Linear),
        (1usize..=4).prop_map(QuandleKind::Loglinear),
        (1usize..=3).prop_map(QuandleKind::GaussianCi),
        (1usize..=2).prop_map(QuandleKind::Hamiltonian),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dihedral_laws(n in 2usize..=16, x in 0usize..16, y in 0usize..16, z in 0usize..16) {
        let d = Quandle::dihedral(n).unwrap();
        let (x, y, z) = (Element::Residue(x % n), Element::Residue(y % n), Element::Residue(z % n));
        prop_assert_eq!(d.apply(&x, &x, None).unwrap(), x.clone());
        let xy = d.apply(&x, &y, None).unwrap();
        prop_assert_eq!(d.unapply(&xy, &y, None).unwrap(), x.clone());
        let lhs = d.apply(&xy, &z, None).unwrap();
        let rhs = d.apply(&d.apply(&x, &z, None).unwrap(), &d.apply(&y, &z, None).unwrap(), None).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn weighted_laws(kind in weighted_kinds(), seed in any::<u64>(), w in 0.02f64..0.98, v in 0.02f64..0.98) {
        let quandle = q(kind);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = quandle.random_element(&mut rng);
        let y = quandle.random_element(&mut rng);
        let z = quandle.random_element(&mut rng);
        let idem = quandle.apply(&x, &x, Some(w)).unwrap();
        prop_assert!(idem.approx_eq(&x, REL_TOL));
        let xy = quandle.apply(&x, &y, Some(w)).unwrap();
        if let Ok(back) = quandle.unapply(&xy, &y, Some(w)) {
            prop_assert!(back.approx_eq(&x, 1e-6), "{} vs {}", back, x);
        }
        let lhs = quandle.apply(&xy, &z, Some(v)).unwrap();
        let rhs = quandle
            .apply(&quandle.apply(&x, &z, Some(v)).unwrap(), &quandle.apply(&y, &z, Some(v)).unwrap(), Some(w))
            .unwrap();
        prop_assert!(lhs.approx_eq(&rhs, REL_TOL), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn conjugation_by_explicit_composition(p in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
                                            r in Just((0..4).collect::<Vec<usize>>()).prop_shuffle()) {
        // y^-1 x y, composing left to right: apply y^-1, then x, then y.
        let c = q(QuandleKind::Conjugation(4));
        let mut inv = vec![0; 4];
        for (i, &j) in r.iter().enumerate() {
            inv[j] = i;
        }
        let expected: Vec<usize> = (0..4).map(|i| r[p[inv[i]]]).collect();
        let got = c.apply(&Element::Perm(p.clone()), &Element::Perm(r.clone()), None).unwrap();
        prop_assert_eq!(got, Element::Perm(expected));
    }
}
