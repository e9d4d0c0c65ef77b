use proptest::prelude::*;

use tangleforge::machine::{enumerate_colorings, figure_eight, fusion_chain, r3_left, square_a, square_b, trefoil, unknot, EnumLimits, TangleMachine};
use tangleforge::quandle::{Quandle, QuandleKind};
use tangleforge::rewrite::{
    apply_move, applicable_sites, canonical_key, equivalent, insert_weights_for, successors, MoveKind, RewriteError, RewriteSite,
    SearchLimits, SlideDirection, Verdict,
};

fn d3() -> Quandle {
    Quandle::dihedral(3).unwrap()
}

fn counts(m: &TangleMachine) -> (u128, u128) {
    let limits = EnumLimits::default();
    let c = |k| enumerate_colorings(m, &Quandle::dihedral(k).unwrap(), &limits, false).unwrap().count;
    (c(3), c(5))
}

fn fixtures() -> Vec<TangleMachine> {
    let q = d3();
    let lin = Quandle::new(QuandleKind::Linear(1)).unwrap();
    vec![
        unknot(q),
        trefoil(q),
        figure_eight(q),
        r3_left(q),
        square_a(q),
        square_b(q),
        fusion_chain(lin, 0.3, 0.6),
    ]
}

#[test]
fn every_site_preserves_counts() {
    let mut total = 0;
    let mut kinds = std::collections::BTreeSet::new();
    let mut machines = fixtures();
    for m in fixtures() {
        let next = successors(&m, &insert_weights_for(&[&m]));
        for kind in [MoveKind::R1Insert, MoveKind::R2Insert] {
            machines.extend(next.iter().find(|(s, _)| s.kind == kind).map(|(_, out)| out.clone()));
        }
    }
    for m in machines {
        let before = counts(&m);
        for (site, out) in successors(&m, &insert_weights_for(&[&m])) {
            out.ensure_valid().unwrap();
            assert_eq!(counts(&out), before, "{} after {site:?}", m.name);
            kinds.insert(format!("{:?}", site.kind));
            total += 1;
        }
    }
    assert!(total > 50, "only {total} sites");
    assert_eq!(kinds.len(), 5, "{kinds:?}");
}

#[test]
fn r3_slide_round_trip() {
    let m = r3_left(d3());
    let right = apply_move(&m, &RewriteSite::r3_slide("s", "t", SlideDirection::Right)).unwrap();
    assert_ne!(canonical_key(&right), canonical_key(&m));
    let sites = applicable_sites(&right, &[None]);
    let back = sites
        .iter()
        .filter(|s| s.kind == MoveKind::R3Slide && s.direction == Some(SlideDirection::Left))
        .map(|s| apply_move(&right, s).unwrap())
        .find(|b| canonical_key(b) == canonical_key(&m));
    assert!(back.is_some(), "no left slide restores the original: {sites:?}");
}

#[test]
fn r1_and_r2_pairs_cancel() {
    let m = trefoil(d3());
    let kinked = apply_move(&m, &RewriteSite::r1_insert("a0", None)).unwrap();
    assert_eq!(kinked.interactions.len(), 4);
    let kink_id = kinked.interactions.iter().find(|i| i.is_kink()).unwrap().id.clone();
    let back = apply_move(&kinked, &RewriteSite::r1_delete(&kink_id)).unwrap();
    assert_eq!(canonical_key(&back), canonical_key(&m));

    let poked = apply_move(&m, &RewriteSite::r2_insert("a0", "a1", None)).unwrap();
    assert_eq!(poked.interactions.len(), 5);
    let found = applicable_sites(&poked, &[None])
        .into_iter()
        .filter(|s| s.kind == MoveKind::R2Delete)
        .map(|s| apply_move(&poked, &s).unwrap())
        .any(|b| canonical_key(&b) == canonical_key(&m));
    assert!(found);
}

#[test]
fn registers_and_bad_sites_are_rejected() {
    let m = r3_left(d3());
    assert!(matches!(apply_move(&m, &RewriteSite::r1_insert("x", None)), Err(RewriteError::Register(_))));
    assert!(apply_move(&m, &RewriteSite::r1_delete("s")).is_err());
    assert!(apply_move(&m, &RewriteSite::r3_slide("s", "nosuch", SlideDirection::Right)).is_err());
    let json = r#"{"move":"R3-slide","interactions":["s","t"],"direction":"left"}"#;
    let site: RewriteSite = serde_json::from_str(json).unwrap();
    assert_eq!(serde_json::to_string(&site).unwrap(), json);
}

#[test]
fn equivalence_verdicts() {
    let limits = SearchLimits::default();
    let q = d3();
    match equivalent(&trefoil(q), &unknot(q), 4, &limits) {
        Verdict::Distinguished { witness } => assert_eq!(witness, "dihedral(3) counts 9 vs 3"),
        other => panic!("{other:?}"),
    }
    let kinked = apply_move(&trefoil(q), &RewriteSite::r1_insert("a2", None)).unwrap();
    match equivalent(&kinked, &trefoil(q), 2, &limits) {
        Verdict::Equivalent { moves } => {
            let mut cur = kinked.clone();
            for s in &moves {
                cur = apply_move(&cur, s).unwrap();
            }
            assert_eq!(canonical_key(&cur), canonical_key(&trefoil(q)));
        }
        other => panic!("{other:?}"),
    }
    let tight = SearchLimits { node_cap: 3, ..SearchLimits::default() };
    let far = apply_move(&kinked, &RewriteSite::r1_insert("a0", None)).unwrap();
    assert!(matches!(equivalent(&far, &trefoil(q), 6, &tight), Verdict::Unknown { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_move_walks_preserve_counts(which in 0usize..7, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..4)) {
        let start = fixtures().swap_remove(which);
        let expected = counts(&start);
        let weights = insert_weights_for(&[&start]);
        let mut m = start;
        for pick in picks {
            let next = successors(&m, &weights);
            if next.is_empty() {
                break;
            }
            m = next[pick.index(next.len())].1.clone();
            prop_assert!(m.validate().is_empty());
        }
        prop_assert_eq!(counts(&m), expected);
    }
}
