use halfplane::amalgam::{
    a_rep, b_rep, decompose, g0z_factor, norm_solve, word_length, AmalgamWord, Side,
};
use halfplane::bttree::{act, Center, Vertex};
use halfplane::matrix::{Mat2, Point};
use halfplane::padic::ExtStructure;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ext(p: u32) -> ExtStructure {
    ExtStructure::new(p, 20).unwrap()
}

fn same(a: &Mat2, b: &Mat2, digits: i64) -> bool {
    a.entries()
        .iter()
        .zip(b.entries().iter())
        .all(|(x, y)| x.sub(y).valuation().is_none_or(|v| v >= digits))
}

fn random_word(k: &ExtStructure, rng: &mut ChaCha8Rng, max_len: usize) -> AmalgamWord {
    let len = rng.gen_range(0..=max_len);
    let first = if rng.gen_bool(0.5) { Side::A } else { Side::B };
    let digits: Vec<u64> = (0..len).map(|_| rng.gen_range(0..k.p() as u64)).collect();
    AmalgamWord::from_digits(k, first, &digits, Mat2::random_iwahori(k, rng))
}

#[test]
fn representatives_hit_the_neighbours() {
    for p in [2u32, 3, 5] {
        let k = ext(p);
        let s0 = Vertex::BASE;
        let s1 = Vertex::w_base();
        for a in 0..p as u64 {
            let child = Vertex::new(p, 1, Center::from_int(p, a as u128)).unwrap();
            let r = a_rep(&k, a);
            assert!(r.in_gl2_o() && !r.in_iwahori());
            assert_eq!(act(&r, &s0, &k).unwrap(), s0);
            assert_eq!(act(&r, &s1, &k).unwrap(), child);
            let b = b_rep(&k, a);
            assert!(b.in_b() && !b.in_iwahori());
            assert_eq!(act(&b, &s1, &k).unwrap(), s1);
            assert_ne!(act(&b, &s0, &k).unwrap(), s0);
        }
    }
}

#[test]
fn iwahori_elements_have_empty_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in [2u32, 3] {
        let k = ext(p);
        for _ in 0..10 {
            let g = Mat2::random_iwahori(&k, &mut rng);
            let w = decompose(&g, &k).unwrap();
            assert!(w.is_empty());
            assert!(same(&w.tail, &g, 20));
        }
    }
}

#[test]
fn length_two_product() {
    let k = ext(3);
    let g = a_rep(&k, 1).mul(&b_rep(&k, 2));
    let w = decompose(&g, &k).unwrap();
    assert_eq!(w.signature(), vec![(Side::A, 1), (Side::B, 2)]);
    assert!(same(&w.multiply(), &g, 18));
}

#[test]
fn random_words_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in [2u32, 3, 5] {
        let k = ext(p);
        for _ in 0..100 {
            let word = random_word(&k, &mut rng, 6);
            let g = word.multiply();
            let back = decompose(&g, &k).unwrap();
            assert_eq!(back.signature(), word.signature(), "p={p} {word}");
            assert!(back.is_alternating());
            assert_eq!(word_length(&g, &k).unwrap() as usize, word.len());
            assert!(same(&back.multiply(), &g, 12));
            assert!(same(&back.tail, &word.tail, 10));
        }
    }
}

#[test]
fn random_g0_elements_decompose() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = ext(2);
    let w = Mat2::w(&k);
    let wi = w.inv().unwrap();
    for _ in 0..30 {
        let a = Mat2::random_gl2o(&k, &mut rng);
        let b = w.mul(&Mat2::random_gl2o(&k, &mut rng)).mul(&wi);
        let g = a.mul(&b);
        let word = decompose(&g, &k).unwrap();
        assert!(word.len() <= 2);
        assert!(same(&word.multiply(), &g, 14));
    }
    assert!(decompose(&w, &k).is_err());
}

#[test]
fn norm_solve_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in [2u32, 3, 5, 7] {
        let k = ExtStructure::new(p, 18).unwrap();
        let one = norm_solve(&k.one(), &k).unwrap();
        assert!(one.norm().agrees(&k.one().to_ext(), 18));
        for a in 1..p as u64 {
            let t = k.teich_rep(a);
            let x = norm_solve(&t, &k).unwrap();
            assert!(k.teich_index(&x).is_some());
            assert!(x.pow(p as i64 + 1).unwrap().agrees(&t.to_ext(), 16));
        }
        for _ in 0..20 {
            let t = k.random_unit(&mut rng, 1);
            let x = norm_solve(&t, &k).unwrap();
            assert!(x.norm().agrees(&t.to_ext(), 16), "p={p} t={t}");
        }
    }
}

#[test]
fn g0_splits_as_stabilizer_times_sl2() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [2u32, 3, 5] {
        let k = ext(p);
        let z = k.zeta();
        for _ in 0..20 {
            let word = random_word(&k, &mut rng, 4);
            let g = word.multiply();
            let (h, s) = g0z_factor(&g, &k).unwrap();
            assert!(h.det().agrees(&g.det(), 16));
            // exact to the digits that survive the negative valuations in g
            let det = s.det();
            assert!(det.precision() >= 10);
            assert!(det.agrees(&k.one(), det.precision() as i64));
            let hz = h.mobius(&Point::Finite(z)).unwrap();
            assert!(hz.finite().unwrap().agrees(&z, 16));
        }
    }
}

proptest! {
    #[test]
    fn decompose_multiply_identity(seed in 0u64..1000, p in prop::sample::select(vec![2u32, 3])) {
        let k = ext(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let word = random_word(&k, &mut rng, 5);
        let back = decompose(&word.multiply(), &k).unwrap();
        prop_assert_eq!(back.signature(), word.signature());
    }
}
