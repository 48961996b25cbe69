use std::collections::BTreeSet;

use halfplane::bttree::{act, BallTree, BoundaryEdge, Center, Subtree, Vertex};
use halfplane::cheese::{
    hole_of_edge, iota_cheese, mobius_disc, sample_points, union_holes, CheeseRegion, Disc,
    DiscKind,
};
use halfplane::matrix::{Mat2, Point};
use halfplane::padic::{ExtStructure, PadicScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ext(p: u32) -> ExtStructure {
    ExtStructure::new(p, 20).unwrap()
}

fn omega(p: u32, n: u32) -> (Subtree, CheeseRegion) {
    let t = BallTree::ball(p, n, 4).unwrap().tree;
    let c = CheeseRegion::from_subtree(&t).unwrap();
    (t, c)
}

/// Exponents j with zeta^j outside F, so that sample points avoid P^1(F).
fn irrational(k: &ExtStructure, j: i64) -> PadicScalar {
    let step = k.q() as i64 + 1;
    k.zeta_pow(1 + j + j / (step - 1))
}

/// Points of a disc, straight from its defining inequality.
fn points_in(d: &Disc, k: &ExtStructure) -> Vec<PadicScalar> {
    let b = d.center.to_padic(k);
    let mut out = Vec::new();
    for j in 0..6i64 {
        let u = irrational(k, j).add(&k.int(j as i128));
        let z = match d.kind {
            DiscKind::Interior => b.add(&k.p_power(d.m as i64 + 1 + (j % 3)).mul(&u)),
            DiscKind::Exterior => b.add(&k.p_power(d.m as i64 - 1 - (j % 3)).mul(&irrational(k, j))),
        };
        out.push(z);
    }
    out
}

fn points_out(d: &Disc, k: &ExtStructure) -> Vec<PadicScalar> {
    let b = d.center.to_padic(k);
    let mut out = Vec::new();
    for j in 0..6i64 {
        let z = match d.kind {
            DiscKind::Interior => b.add(&k.p_power(d.m as i64 - (j % 3)).mul(&irrational(k, j))),
            DiscKind::Exterior => b.add(&k.p_power(d.m as i64 + (j % 3)).mul(&irrational(k, j))),
        };
        out.push(z);
    }
    out
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

/// Check a disc image by pushing sample points through the Mobius map.
fn image_agrees(g: &Mat2, d: &Disc, k: &ExtStructure) {
    let img = mobius_disc(g, d, k).unwrap();
    for z in points_in(d, k) {
        let gz = g.mobius(&Point::Finite(z)).unwrap();
        assert!(img.contains_point(&gz, k).unwrap(), "{} -> {}", d.display(k.p()), img.display(k.p()));
    }
    for z in points_out(d, k) {
        let gz = g.mobius(&Point::Finite(z)).unwrap();
        assert!(!img.contains_point(&gz, k).unwrap());
    }
}

#[test]
fn holes_of_omega_zero() {
    for p in [2u32, 3, 5] {
        let k = ext(p);
        let (_, c) = omega(p, 0);
        let mut expected = vec![Disc::exterior(p, Center::ZERO, 0).unwrap()];
        for a in 0..p as u64 {
            let ta = k.teich_rep(a);
            expected.push(Disc::interior(p, Center::from_padic(&ta, 1).unwrap(), 0).unwrap());
        }
        let got: BTreeSet<_> = c.holes().iter().copied().collect();
        assert_eq!(got, expected.into_iter().collect());
    }
}

#[test]
fn hole_counts_and_bijection() {
    for p in [2u32, 3] {
        for n in 0..=3u32 {
            let (t, c) = omega(p, n);
            let q = p as usize;
            assert_eq!(c.len(), (q + 1) * q.pow(n));
            let distinct: BTreeSet<_> = c.holes().iter().collect();
            assert_eq!(distinct.len(), c.len());
            for (i, a) in c.holes().iter().enumerate() {
                for b in &c.holes()[i + 1..] {
                    assert!(a.is_disjoint_from(b, p));
                }
            }
            for (e, h) in t.boundary().unwrap().iter().zip(c.holes()) {
                assert_eq!(h.edge(p).unwrap(), *e);
            }
            assert_eq!(c.holes().iter().filter(|d| d.kind == DiscKind::Exterior).count(), 1);
        }
    }
}

#[test]
fn w_equivariance_on_psi_zero() {
    for p in [2u32, 3] {
        let k = ext(p);
        let s = BallTree::double_ball(p, 0, 4).unwrap().tree;
        let w = Mat2::w(&k);
        for e in s.boundary().unwrap() {
            let we = BoundaryEdge {
                inside: act(&w, &e.inside, &k).unwrap(),
                outside: act(&w, &e.outside, &k).unwrap(),
            };
            let d = hole_of_edge(&s, &e).unwrap();
            assert_eq!(hole_of_edge(&s, &we).unwrap(), mobius_disc(&w, &d, &k).unwrap());
            image_agrees(&w, &d, &k);
        }
    }
}

#[test]
fn mobius_images_match_point_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in [2u32, 3, 5] {
        let k = ext(p);
        let (_, c) = omega(p, 2);
        let mut gens = vec![
            Mat2::identity(&k),
            Mat2::from_ints(&k, [1, 1, 0, 1]),
            Mat2::from_ints(&k, [0, 1, 1, 0]),
            Mat2::w(&k),
            Mat2::from_ints(&k, [1, 0, p as i128, 1]),
        ];
        for _ in 0..5 {
            gens.push(random_gl2o(&k, &mut rng));
        }
        for g in &gens {
            for d in c.holes() {
                image_agrees(g, d, &k);
            }
        }
    }
}

#[test]
fn mobius_examples() {
    let p = 5;
    let k = ext(p);
    let d = Disc::interior(p, Center::from_int(p, 3), 1).unwrap();
    assert_eq!(mobius_disc(&Mat2::identity(&k), &d, &k).unwrap(), d);
    let shifted = mobius_disc(&Mat2::from_ints(&k, [1, 1, 0, 1]), &d, &k).unwrap();
    assert_eq!(shifted, Disc::interior(p, Center::from_int(p, 4), 1).unwrap());
    let inv = Mat2::from_ints(&k, [0, 1, 1, 0]);
    for a in 1..p as u64 {
        let ta = k.teich_rep(a);
        let d = Disc::interior(p, Center::from_padic(&ta, 1).unwrap(), 0).unwrap();
        let expected = Disc::interior(p, Center::from_padic(&ta.inv().unwrap(), 1).unwrap(), 0).unwrap();
        assert_eq!(mobius_disc(&inv, &d, &k).unwrap(), expected);
        image_agrees(&inv, &d, &k);
    }
    // composition
    let g1 = Mat2::from_ints(&k, [2, 1, 5, 3]);
    let g2 = Mat2::w(&k);
    for d in omega(p, 1).1.holes() {
        let lhs = mobius_disc(&g1.mul(&g2), d, &k).unwrap();
        let rhs = mobius_disc(&g1, &mobius_disc(&g2, d, &k).unwrap(), &k).unwrap();
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn membership_examples() {
    for p in [2u32, 3, 5] {
        let k = ext(p);
        let (_, o0) = omega(p, 0);
        let (_, o1) = omega(p, 1);
        let z = k.zeta();
        // the residue of zeta lies outside F_q
        assert_ne!(z.residue()[1], 0);
        assert!(o0.contains(&z, &k).unwrap());
        assert!(!o0.contains(&k.zero(), &k).unwrap());
        let pz = k.int(p as i128).mul(&z);
        assert!(!o0.contains(&pz, &k).unwrap());
        assert!(o1.contains(&pz, &k).unwrap());
    }
}

#[test]
fn membership_is_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [2u32, 3] {
        let k = ext(p);
        let (t, c) = omega(p, 1);
        let mut pts = sample_points(&t, &k, 3);
        for _ in 0..10 {
            let m = rng.gen_range(-1..4);
            pts.push(k.random_integer(&mut rng).add(&k.p_power(m).mul(&k.random_unit(&mut rng, 2))));
        }
        for _ in 0..5 {
            let g = random_gl2o(&k, &mut rng).mul(&Mat2::w(&k));
            let gc = c.translate(&g, &k).unwrap();
            for z in &pts {
                let gz = g.mobius(&Point::Finite(*z)).unwrap();
                let inside = c.contains(z, &k).unwrap();
                assert_eq!(gc.hole_containing(&gz, &k).unwrap().is_none(), inside);
            }
        }
    }
}

#[test]
fn sample_points_lie_in_cheese() {
    for p in [2u32, 3] {
        let k = ext(p);
        for n in 0..=2 {
            let (t, c) = omega(p, n);
            let pts = sample_points(&t, &k, 4);
            assert_eq!(pts.len(), 4 * t.vertices().len());
            for z in &pts {
                assert!(c.contains(z, &k).unwrap());
            }
            let (_, smaller) = omega(p, n + 1);
            assert!(pts.iter().all(|z| smaller.contains(z, &k).unwrap()));
        }
    }
}

#[test]
fn iota_cheese_matches_tree() {
    for p in [2u32, 3] {
        let k = ext(p);
        let (t1, c1) = omega(p, 1);
        let (t0, c0) = omega(p, 0);
        let edges = t1.boundary().unwrap();
        if p == 2 {
            assert_eq!(edges.len(), 6);
        }
        let id = Mat2::identity(&k);
        for (i, e) in edges.iter().enumerate() {
            let f = t1.iota(&t0, e).unwrap();
            let via_cheese = iota_cheese(&c1, &c0, &id, i, &k).unwrap();
            assert_eq!(c0.holes()[via_cheese], hole_of_edge(&t0, &f).unwrap());
        }
        for i in 0..c0.len() {
            assert_eq!(iota_cheese(&c0, &c0, &id, i, &k).unwrap(), i);
        }
        // phi = w maps Omega_0 into w Omega_1's complement structure
        let w = Mat2::w(&k);
        let wc1 = c1.translate(&w, &k).unwrap();
        for i in 0..wc1.len() {
            let j = iota_cheese(&wc1, &c0, &w, i, &k).unwrap();
            assert_eq!(j, iota_cheese(&c1, &c0, &id, i, &k).unwrap());
        }
        assert!(iota_cheese(&c0, &c1, &id, 0, &k).is_err());
    }
}

#[test]
fn union_of_leaf_decomposition() {
    for p in [2u32, 3] {
        for n in 1..=2u32 {
            let big = BallTree::ball(p, n, 4).unwrap().tree;
            let leaf = *big.boundary().unwrap()[0].inside.parent(p).children(p).unwrap().first().unwrap();
            let leaf = if big.contains(&leaf) && leaf.m == n as i32 { leaf } else {
                *big.vertices().iter().find(|v| v.m == n as i32).unwrap()
            };
            let stem = leaf.parent(p);
            let s = Subtree::new(p, [stem, leaf]).unwrap();
            let t = Subtree::new(p, big.vertices().iter().copied().filter(|v| *v != leaf)).unwrap();
            let cap = Subtree::new(p, [stem]).unwrap();
            let (cs, ct, ccap) = (
                CheeseRegion::from_subtree(&s).unwrap(),
                CheeseRegion::from_subtree(&t).unwrap(),
                CheeseRegion::from_subtree(&cap).unwrap(),
            );
            let cbig = CheeseRegion::from_subtree(&big).unwrap();
            let expected: BTreeSet<Disc> = cbig.holes().iter().copied().collect();
            let got: BTreeSet<Disc> = union_holes(&cs, &ct).unwrap().into_iter().collect();
            assert_eq!(got, expected);

            let image: BTreeSet<(usize, usize)> = cbig
                .holes()
                .iter()
                .map(|h| (cs.hole_enclosing(h).unwrap(), ct.hole_enclosing(h).unwrap()))
                .collect();
            assert_eq!(image.len(), cbig.len());
            let mut product = BTreeSet::new();
            for (i, a) in cs.holes().iter().enumerate() {
                for (j, b) in ct.holes().iter().enumerate() {
                    if ccap.hole_enclosing(a) == ccap.hole_enclosing(b) {
                        product.insert((i, j));
                    }
                }
            }
            assert_eq!(image, product);
        }
    }
}

#[test]
fn vertex_center_of_infinity_hole() {
    let p = 3;
    let (_, c) = omega(p, 0);
    let k = ext(p);
    let ext_idx = c.exterior().unwrap();
    assert_eq!(c.hole_containing(&Point::Infinity, &k).unwrap(), Some(ext_idx));
    assert_eq!(c.holes()[ext_idx].edge(p).unwrap().outside, Vertex::w_base());
}
