use halfplane::measures::{FiniteMeasure, Perm, PermAction, Ring};
use proptest::prelude::*;
use std::collections::HashSet;

fn rotation(n: usize) -> Perm {
    Perm::new((0..n).map(|i| (i + 1) % n).collect()).unwrap()
}

/// Every fixed measure by scanning (Z/d)^n.
fn scan_fixed(action: &PermAction, d: u64, m0: bool) -> HashSet<Vec<i64>> {
    let n = action.size();
    let total = (d as usize).pow(n as u32);
    let mut out = HashSet::new();
    for code in 0..total {
        let mut c = code;
        let vals: Vec<i64> = (0..n)
            .map(|_| {
                let v = (c % d as usize) as i64;
                c /= d as usize;
                v
            })
            .collect();
        let nu = FiniteMeasure::from_values(Ring::ZMod(d), vals.clone());
        if m0 && !nu.is_m0() {
            continue;
        }
        if action.generators().iter().all(|g| nu.act(g).unwrap() == nu) {
            out.insert(vals);
        }
    }
    out
}

#[test]
fn delta_and_counting() {
    let r = Ring::Z;
    let sigma = FiniteMeasure::counting(r, 4);
    assert_eq!(sigma.total(), 4);
    let mut acc = FiniteMeasure::zero(r, 4);
    for z in 0..4 {
        let d = FiniteMeasure::delta(r, 4, z).unwrap();
        assert_eq!(d.total(), 1);
        acc = acc.add(&d).unwrap();
    }
    assert_eq!(acc, sigma);
    assert!(FiniteMeasure::delta(r, 4, 4).is_err());
}

#[test]
fn pushforward_examples() {
    let nu = FiniteMeasure::from_values(Ring::ZMod(7), vec![1, 2, 3, 4, 5, 6]);
    let id: Vec<usize> = (0..6).collect();
    assert_eq!(nu.pushforward(&id, 6).unwrap(), nu);
    let constant = vec![0; 6];
    assert_eq!(
        nu.pushforward(&constant, 1).unwrap(),
        FiniteMeasure::from_values(Ring::ZMod(7), vec![nu.total()])
    );
    // uniform fibres of size 3
    let f = vec![0, 1, 0, 1, 0, 1];
    let sigma = FiniteMeasure::counting(Ring::Z, 6);
    assert_eq!(
        sigma.pushforward(&f, 2).unwrap(),
        FiniteMeasure::counting(Ring::Z, 2).scale(3)
    );
}

#[test]
fn rotation_on_six_points_mod_four() {
    let a = PermAction::new(6, vec![rotation(6)]).unwrap();
    let g = a.invariant_submodule(Ring::ZMod(4), true);
    assert_eq!(g.orders, vec![2]);
    let expected = FiniteMeasure::counting(Ring::ZMod(4), 6).scale(2);
    assert_eq!(g.generators[0], expected);
    let fixed: HashSet<Vec<i64>> = g.elements(6).iter().map(|m| m.values().to_vec()).collect();
    assert_eq!(fixed, scan_fixed(&a, 4, true));
}

#[test]
fn trivial_group_gives_everything() {
    let a = PermAction::new(3, vec![]).unwrap();
    let g = a.invariant_submodule(Ring::ZMod(5), false);
    assert_eq!(g.orders, vec![5, 5, 5]);
    let g = a.invariant_submodule(Ring::Z, false);
    assert_eq!(g.orders, vec![0, 0, 0]);
}

#[test]
fn integral_invariants() {
    let a = PermAction::new(5, vec![rotation(5)]).unwrap();
    let g = a.invariant_submodule(Ring::Z, false);
    assert_eq!(g.orders, vec![0]);
    let gen = &g.generators[0];
    assert!(gen == &FiniteMeasure::counting(Ring::Z, 5) || gen == &FiniteMeasure::counting(Ring::Z, 5).scale(-1));
    assert!(a.invariant_submodule(Ring::Z, true).is_trivial());
}

#[test]
fn lift_examples() {
    let z = FiniteMeasure::zero(Ring::ZMod(6), 4);
    assert_eq!(z.lift_mod_d().unwrap(), FiniteMeasure::zero(Ring::Z, 4));
    let ab = FiniteMeasure::from_values(Ring::ZMod(6), vec![1, 5, 0, 0]);
    assert_eq!(ab.lift_mod_d().unwrap().values(), &[1, -1, 0, 0]);
    let bad = FiniteMeasure::from_values(Ring::ZMod(6), vec![1, 0, 0, 0]);
    assert!(bad.lift_mod_d().is_err());
}

#[test]
fn serialization() {
    let m = FiniteMeasure::from_values(Ring::ZMod(6), vec![1, 5, 0]);
    let s = serde_json::to_string(&m).unwrap();
    assert_eq!(s, r#"{"ring":"Z/6","values":[[0,1],[1,5],[2,0]]}"#);
    let back: FiniteMeasure = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
}

fn perm_strategy(n: usize) -> impl Strategy<Value = Perm> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|v| Perm::new(v).unwrap())
}

proptest! {
    #[test]
    fn prop_lift_reduces_back(vals in prop::collection::vec(0i64..6, 8)) {
        let mut vals = vals;
        let t: i64 = vals.iter().sum();
        vals[0] -= t;
        let nu = FiniteMeasure::from_values(Ring::ZMod(6), vals);
        let lift = nu.lift_mod_d().unwrap();
        prop_assert_eq!(lift.total(), 0);
        prop_assert_eq!(lift.reduce_mod(6), nu);
    }

    #[test]
    fn prop_pushforward_functorial(vals in prop::collection::vec(-9i64..9, 7), f in prop::collection::vec(0usize..5, 7), g in prop::collection::vec(0usize..3, 5)) {
        let nu = FiniteMeasure::from_values(Ring::Z, vals);
        let gf: Vec<usize> = f.iter().map(|&x| g[x]).collect();
        let lhs = nu.pushforward(&gf, 3).unwrap();
        let rhs = nu.pushforward(&f, 5).unwrap().pushforward(&g, 3).unwrap();
        prop_assert_eq!(lhs, rhs);
        let m0 = nu.sub(&FiniteMeasure::delta(Ring::Z, 7, 0).unwrap().scale(nu.total())).unwrap();
        prop_assert!(m0.pushforward(&f, 5).unwrap().is_m0());
    }

    #[test]
    fn prop_invariants_match_scan(n in 1usize..6, d in 2u64..5, g1 in perm_strategy(5), g2 in perm_strategy(5), m0 in any::<bool>()) {
        // restrict the random permutations to the first n points where possible
        let restrict = |g: &Perm| {
            let imgs: Vec<usize> = (0..n).map(|i| if g.apply(i) < n { g.apply(i) } else { i }).collect();
            Perm::new(imgs).unwrap_or_else(|_| Perm::identity(n))
        };
        let a = PermAction::new(n, vec![restrict(&g1), restrict(&g2)]).unwrap();
        let g = a.invariant_submodule(Ring::ZMod(d), m0);
        let got: HashSet<Vec<i64>> = g.elements(n).iter().map(|m| m.values().to_vec()).collect();
        prop_assert_eq!(got.len() as u64, g.order().unwrap());
        prop_assert_eq!(got, scan_fixed(&a, d, m0));
    }
}
