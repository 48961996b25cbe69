use std::collections::{BTreeMap, BTreeSet};

use halfplane::bttree::{
    act, distance, gl2o_generators, iota_into, iwahori_generators, lattice_distance, orbits,
    BallTree, BoundaryEdge, Center, Subtree, Vertex,
};
use halfplane::matrix::Mat2;
use halfplane::padic::ExtStructure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ext(p: u32) -> ExtStructure {
    ExtStructure::new(p, 24.min(halfplane::padic::max_precision(p))).unwrap()
}

fn random_gl2o(k: &ExtStructure, rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let m = Mat2::new(
            k.random_integer(rng),
            k.random_integer(rng),
            k.random_integer(rng),
            k.random_integer(rng),
        );
        if m.in_gl2_o() {
            return m;
        }
    }
}

fn random_iwahori(k: &ExtStructure, rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let c = k.random_integer(rng).mul(&k.int(k.p() as i128));
        let m = Mat2::new(k.random_integer(rng), k.random_integer(rng), c, k.random_integer(rng));
        if m.in_iwahori() {
            return m;
        }
    }
}

fn v(p: u32, m: i32, b: u128) -> Vertex {
    Vertex::new(p, m, Center::from_int(p, b)).unwrap()
}

#[test]
fn basic_actions() {
    let k = ext(3);
    let s0 = Vertex::BASE;
    assert_eq!(act(&Mat2::identity(&k), &s0, &k).unwrap(), s0);
    assert_eq!(act(&Mat2::from_ints(&k, [1, 1, 0, 1]), &s0, &k).unwrap(), s0);
    let ws0 = act(&Mat2::w(&k), &s0, &k).unwrap();
    assert_eq!(ws0, Vertex::w_base());
    assert_eq!(distance(&s0, &ws0, 3), 1);
    assert_eq!(distance(&s0, &s0, 3), 0);
    // w^2 = p is central, so w swaps the base edge
    assert_eq!(act(&Mat2::w(&k), &ws0, &k).unwrap(), s0);
}

#[test]
fn distance_matches_elementary_divisors() {
    for p in [2, 3, 5] {
        let k = ext(p);
        let t = BallTree::ball(p, 3, 4).unwrap();
        let vs: Vec<_> = t.tree.vertices().iter().copied().collect();
        for (i, a) in vs.iter().enumerate().step_by(3) {
            for b in vs.iter().skip(i).step_by(5) {
                assert_eq!(distance(a, b, p) as u64, lattice_distance(a, b, &k).unwrap());
            }
        }
    }
}

#[test]
fn gl2o_acts_by_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [2, 3, 5] {
        let k = ext(p);
        let vs: Vec<_> = BallTree::ball(p, 2, 4).unwrap().tree.vertices().iter().copied().collect();
        for _ in 0..20 {
            let g = random_gl2o(&k, &mut rng);
            assert_eq!(act(&g, &Vertex::BASE, &k).unwrap(), Vertex::BASE);
            for (a, b) in vs.iter().zip(vs.iter().rev()) {
                let (ga, gb) = (act(&g, a, &k).unwrap(), act(&g, b, &k).unwrap());
                assert_eq!(distance(&ga, &gb, p), distance(a, b, p));
            }
        }
    }
}

#[test]
fn stabilizers_of_base_edge() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [2, 3, 5] {
        let k = ext(p);
        let w = Mat2::w(&k);
        let w_inv = w.inv().unwrap();
        for _ in 0..20 {
            let a = random_gl2o(&k, &mut rng);
            let b = w.mul(&a).mul(&w_inv);
            assert_eq!(act(&b, &Vertex::w_base(), &k).unwrap(), Vertex::w_base());
            let i = random_iwahori(&k, &mut rng);
            assert_eq!(act(&i, &Vertex::BASE, &k).unwrap(), Vertex::BASE);
            assert_eq!(act(&i, &Vertex::w_base(), &k).unwrap(), Vertex::w_base());
        }
    }
}

#[test]
fn boundary_counts() {
    for p in [2u32, 3, 5] {
        for n in 0..=3u32 {
            let t = BallTree::ball(p, n, 4).unwrap();
            let q = p as usize;
            assert_eq!(t.boundary().unwrap().len(), (q + 1) * q.pow(n));
        }
    }
    assert_eq!(BallTree::ball(2, 0, 4).unwrap().boundary().unwrap().len(), 3);
    assert_eq!(BallTree::ball(3, 2, 4).unwrap().boundary().unwrap().len(), 36);
    let s0 = BallTree::double_ball(3, 0, 4).unwrap();
    assert_eq!(s0.tree.vertices().len(), 2);
    assert_eq!(s0.tree.edges().len(), 1);
    assert!(BallTree::ball(2, 5, 4).is_err());
}

#[test]
fn iota_fibres_have_size_q() {
    for p in [2u32, 3, 5] {
        for n in 0..=2u32 {
            let small = BallTree::ball(p, n, 4).unwrap().tree;
            let big = BallTree::ball(p, n + 1, 4).unwrap().tree;
            let mut fibres: BTreeMap<BoundaryEdge, usize> = BTreeMap::new();
            for e in big.boundary().unwrap() {
                *fibres.entry(big.iota(&small, &e).unwrap()).or_default() += 1;
            }
            assert_eq!(fibres.len(), small.boundary().unwrap().len());
            assert!(fibres.values().all(|&c| c == p as usize));
        }
    }
}

#[test]
fn iota_identity_and_composition() {
    for p in [2u32, 3] {
        let t1 = BallTree::double_ball(p, 0, 4).unwrap().tree;
        let t2 = BallTree::ball(p, 1, 4).unwrap().tree;
        let t3 = BallTree::double_ball(p, 2, 4).unwrap().tree;
        for e in t2.boundary().unwrap() {
            assert_eq!(t2.iota(&t2, &e).unwrap(), e);
        }
        for e in t3.boundary().unwrap() {
            let direct = t3.iota(&t1, &e).unwrap();
            let via = t2.iota(&t1, &t3.iota(&t2, &e).unwrap()).unwrap();
            assert_eq!(direct, via);
            let f = t3.iota(&t1, &e).unwrap();
            if t1.contains(&e.inside) {
                assert_eq!(f, e);
            } else {
                let (a, b) = f.edge();
                assert!(t3.contains(&a) && t3.contains(&b));
            }
        }
    }
}

#[test]
fn leaf_vertex_example() {
    for p in [2u32, 3] {
        let s = Vertex::BASE;
        let s1 = v(p, 1, 1);
        let edge = Subtree::new(p, [s, s1]).unwrap();
        let point = Subtree::new(p, [s]).unwrap();
        let n = edge.boundary().unwrap();
        assert_eq!(n.len(), 2 * p as usize);
        let mut at_s = 0;
        for e in &n {
            let f = edge.iota(&point, e).unwrap();
            if e.inside == s {
                at_s += 1;
                assert_eq!(f, *e);
            } else {
                assert_eq!(f, BoundaryEdge { inside: s, outside: s1 });
            }
        }
        assert_eq!(at_s, p);
    }
}

/// Exhaustive check that e -> (iota_S(e), iota_T(e)) is a bijection onto the
/// fibre product over N(S cap T), for a leaf S glued to T at one vertex.
#[test]
fn fibre_product_bijection() {
    for p in [2u32, 3] {
        for depth in 0..=2u32 {
            let t = BallTree::ball(p, depth, 4).unwrap().tree;
            let leaves: Vec<BoundaryEdge> = t.boundary().unwrap();
            for glue in leaves.iter().step_by(p as usize) {
                let s = Subtree::new(p, [glue.inside, glue.outside]).unwrap();
                let cap = Subtree::new(p, [glue.inside]).unwrap();
                let cup = s.union(&t).unwrap();
                let mut image = BTreeSet::new();
                for e in cup.boundary().unwrap() {
                    let a = cup.iota(&s, &e).unwrap();
                    let b = cup.iota(&t, &e).unwrap();
                    assert_eq!(s.iota(&cap, &a).unwrap(), t.iota(&cap, &b).unwrap());
                    assert!(image.insert((a, b)));
                }
                let mut product = BTreeSet::new();
                for a in s.boundary().unwrap() {
                    for b in t.boundary().unwrap() {
                        if s.iota(&cap, &a).unwrap() == t.iota(&cap, &b).unwrap() {
                            product.insert((a, b));
                        }
                    }
                }
                assert_eq!(image, product);
            }
        }
    }
}

#[test]
fn double_ball_union_and_intersection() {
    for p in [2u32, 3] {
        let k = ext(p);
        let w = Mat2::w(&k);
        for n in 1..=3u32 {
            let t = BallTree::ball(p, n, 4).unwrap().tree;
            let wt = t.translate(&w, &k).unwrap();
            let s = BallTree::double_ball(p, n, 4).unwrap().tree;
            let s_prev = BallTree::double_ball(p, n - 1, 4).unwrap().tree;
            assert_eq!(t.union(&wt).unwrap(), s);
            assert_eq!(t.intersection(&wt).unwrap(), s_prev);
        }
    }
}

#[test]
fn gl2o_is_transitive_on_ball_boundaries() {
    for p in [2u32, 3] {
        let k = ext(p);
        for n in 0..=2u32 {
            let edges = BallTree::ball(p, n, 4).unwrap().boundary().unwrap();
            let orb = orbits(&gl2o_generators(&k), &edges, &k).unwrap();
            assert_eq!(orb.len(), 1);
        }
    }
}

#[test]
fn iwahori_has_two_orbits_swapped_by_w() {
    for p in [2u32, 3] {
        let k = ext(p);
        for n in 0..=1u32 {
            let edges = BallTree::double_ball(p, n, 4).unwrap().boundary().unwrap();
            let orb = orbits(&iwahori_generators(&k), &edges, &k).unwrap();
            assert_eq!(orb.len(), 2);
            for o in &orb {
                assert_eq!(o.len(), (p as usize).pow(n + 1));
            }
            let w = Mat2::w(&k);
            let moved: BTreeSet<_> = orb[0]
                .iter()
                .map(|e| {
                    let (a, b) = (act(&w, &e.inside, &k).unwrap(), act(&w, &e.outside, &k).unwrap());
                    BoundaryEdge { inside: a, outside: b }
                })
                .collect();
            let other: BTreeSet<_> = orb[1].iter().copied().collect();
            assert_eq!(moved, other);
        }
    }
}

#[test]
fn trivial_generators_give_singletons() {
    let k = ext(2);
    let edges = BallTree::ball(2, 1, 4).unwrap().boundary().unwrap();
    let orb = orbits(&[], &edges, &k).unwrap();
    assert_eq!(orb.len(), edges.len());
}

#[test]
fn non_stabilizing_generator_is_reported() {
    let k = ext(2);
    let edges = BallTree::ball(2, 1, 4).unwrap().boundary().unwrap();
    assert!(orbits(&[Mat2::w(&k)], &edges, &k).is_err());
}

#[test]
fn iota_into_from_far_vertex() {
    let p = 3;
    let t = BallTree::ball(p, 0, 4).unwrap().tree;
    let far = v(p, 3, 5);
    let f = iota_into(&t, &far).unwrap();
    assert_eq!(f.inside, Vertex::BASE);
    assert_eq!(f.outside, v(p, 1, 2));
}
