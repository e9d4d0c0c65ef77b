use tangleforge::invariants::{cap_k, capacity, complexity};
use tangleforge::machine::{
    check_coloring, connect_sum, enumerate_colorings, figure_eight, propagate, r3_left, square_a, square_b, trefoil, unknot,
    Coloring, EnumLimits, TangleMachine,
};
use tangleforge::quandle::{Element, Quandle};
use tangleforge::rewrite::{insert_weights_for, successors};

fn d(n: usize) -> Quandle {
    Quandle::dihedral(n).unwrap()
}

fn fixtures() -> Vec<TangleMachine> {
    let q = d(3);
    vec![unknot(q), trefoil(q), figure_eight(q), r3_left(q), square_a(q), square_b(q)]
}

#[test]
fn cap_survives_every_move() {
    let limits = EnumLimits::default();
    for m in fixtures() {
        for k in [3, 5] {
            let before = cap_k(&m, k, &limits, false).unwrap();
            for (site, out) in successors(&m, &insert_weights_for(&[&m])) {
                assert_eq!(cap_k(&out, k, &limits, false).unwrap(), before, "{} k={k} {site:?}", m.name);
            }
        }
    }
}

#[test]
fn cap_is_multiplicative_over_connect_sums() {
    let limits = EnumLimits::default();
    let mut checked = 0;
    for m1 in fixtures() {
        for m2 in fixtures() {
            for a1 in &m1.arcs {
                for a2 in &m2.arcs {
                    let Ok(sum) = connect_sum(&m1, a1, &m2, a2) else { continue };
                    sum.ensure_valid().unwrap();
                    for k in [3, 5] {
                        let c = |m: &TangleMachine| cap_k(m, k, &limits, false).unwrap();
                        assert_eq!(c(&sum) * k as u128, c(&m1) * c(&m2), "{} along {a1}/{a2}, k={k}", sum.name);
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn capacity_examples() {
    let limits = EnumLimits::default();
    let u = capacity(&unknot(d(3)), 6, &limits, false).unwrap();
    assert!((u.capacity - 3f64.cbrt()).abs() < 1e-12 && u.argmax == 3);
    let t = capacity(&trefoil(d(3)), 6, &limits, false).unwrap();
    assert!((t.capacity - 9f64.cbrt()).abs() < 1e-12);
    assert_eq!(t.cap[&3], 9);
    assert_eq!(capacity(&TangleMachine::new("empty", d(3)), 6, &limits, false).unwrap().capacity, 1.0);
    assert!(capacity(&trefoil(d(3)), 17, &limits, false).is_err());
    let confusable = capacity(&trefoil(d(3)), 6, &limits, true).unwrap();
    for (k, c) in &confusable.cap {
        assert!(c <= &t.cap[k]);
    }
}

fn colouring(pairs: &[(&str, usize)]) -> Coloring {
    pairs.iter().map(|(a, v)| (a.to_string(), Element::Residue(*v))).collect()
}

#[test]
fn complexity_examples() {
    let q = d(5);
    let a = square_a(q);
    assert_eq!(complexity(&a, &propagate(&a, &colouring(&[("a", 0), ("b", 1)])).unwrap()).unwrap().complexity, 1);
    let b = square_b(q);
    let same = propagate(&b, &colouring(&[("p", 1), ("x1", 3), ("x2", 3), ("r", 4)])).unwrap();
    assert_eq!(complexity(&b, &same).unwrap().complexity, 2);
    let r3 = r3_left(q);
    let c = propagate(&r3, &colouring(&[("x", 0), ("y", 1), ("z", 2)])).unwrap();
    assert!(complexity(&r3, &c).unwrap().complexity >= 1);
    let mut bad = same.clone();
    bad.insert("y1".into(), Element::Residue(0));
    if !check_coloring(&b, &bad, 0.0).unwrap() {
        assert!(complexity(&b, &bad).is_err());
    }
}

#[test]
fn complexity_does_not_drop_under_connect_sum() {
    let q = d(3);
    let limits = EnumLimits::default();
    let mut checked = 0;
    for m1 in [square_a(q), square_b(q), r3_left(q)] {
        for m2 in [square_a(q), r3_left(q), unknot(q)] {
            for a1 in &m1.arcs {
                for a2 in &m2.arcs {
                    let Ok(sum) = connect_sum(&m1, a1, &m2, a2) else { continue };
                    if sum.arcs.len() + 1 != m1.arcs.len() + m2.arcs.len() {
                        continue;
                    }
                    let all = enumerate_colorings(&sum, &q, &limits, false).unwrap().colorings.unwrap();
                    for c in all.iter().step_by(3) {
                        let restricted: Coloring = m1.arcs.iter().map(|a| (a.clone(), c[&format!("{a}#1")].clone())).collect();
                        let whole = complexity(&sum, c).unwrap().complexity;
                        let part = complexity(&m1, &restricted).unwrap().complexity;
                        assert!(whole >= part, "{} along {a1}/{a2}: {whole} < {part}", sum.name);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 20, "{checked}");
}
