use halfplane::padic::{conway_quadratic, ExtStructure, PadicError, PadicScalar};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: u32 = 24;

/// Plain modular exponentiation, independent of the library.
fn powmod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Fixed point of x -> x^p mod p^n, starting from a.
fn teich_oracle(p: u128, n: u32, a: u128) -> u128 {
    let m = p.pow(n);
    let mut x = a % m;
    loop {
        let y = powmod(x, p, m);
        if y == x {
            return x;
        }
        x = y;
    }
}

#[test]
fn conway_choices() {
    assert_eq!(conway_quadratic(2), [1, 1]);
    assert_eq!(conway_quadratic(3), [2, 2]);
    assert_eq!(conway_quadratic(5), [2, 4]);
    assert_eq!(conway_quadratic(7), [3, 6]);
}

#[test]
fn ring_identity() {
    let k = ExtStructure::new(3, N).unwrap();
    let p = k.int(3);
    let lhs = k.one().add(&p).mul(&k.one().sub(&p));
    assert_eq!(lhs, k.one().sub(&p.mul(&p)));
}

#[test]
fn teichmuller_of_two_mod_five() {
    let k = ExtStructure::new(5, N).unwrap();
    let w = k.int(2).teichmuller().unwrap();
    // frozen from teich_oracle(5, 24, 2)
    let expected = teich_oracle(5, N, 2);
    assert_eq!(w, k.int(expected as i128));
    assert_eq!(w.pow(4).unwrap(), k.one());
    assert_eq!(w.residue()[0], 2);
}

#[test]
fn teichmuller_strips_valuation_and_kills_principal_units() {
    let k = ExtStructure::new(3, N).unwrap();
    assert_eq!(k.int(4).teichmuller().unwrap(), k.one());
    let u = k.int(5);
    assert_eq!(
        k.int(3 * 5).teichmuller().unwrap(),
        u.teichmuller().unwrap()
    );
    assert!(matches!(k.zero().teichmuller(), Err(PadicError::ZeroInput)));
}

#[test]
fn zeta_generates_and_frobenius_is_qth_power() {
    for p in [2u32, 3, 5, 7] {
        let k = ExtStructure::new(p, 20).unwrap();
        let z = k.zeta();
        let q = p as i64;
        assert_eq!(z.pow(q * q - 1).unwrap(), k.one().to_ext());
        for d in 1..(q * q - 1) {
            if (q * q - 1) % d == 0 {
                assert_ne!(z.pow(d).unwrap(), k.one().to_ext(), "p={p} d={d}");
            }
        }
        assert_eq!(z.frobenius(), z.pow(q).unwrap());
        assert_eq!(z.frobenius().frobenius(), z);
    }
}

#[test]
fn norm_of_zeta_lies_in_qp() {
    let k = ExtStructure::new(3, N).unwrap();
    let z = k.zeta();
    let n = z.norm();
    assert_eq!(n.ext_degree(), 1);
    assert_eq!(n.to_ext(), z.pow(4).unwrap());
    // zeta^{q+1} has order q - 1, so its residue is in F_3^x
    assert!(n.residue()[0] != 0);
    assert_eq!(n.pow(2).unwrap(), k.one());
}

#[test]
fn stabilizer_determinant_is_norm() {
    let k = ExtStructure::new(5, N).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = k.zeta();
    let (_, nz, trz) = z.frob_norm_trace();
    for _ in 0..50 {
        let a = k.random_integer(&mut rng);
        let c = k.random_integer(&mut rng);
        let det = a.mul(&a).sub(&a.mul(&c).mul(&trz)).add(&c.mul(&c).mul(&nz));
        let x = a.sub(&c.mul(&z));
        assert!(det.to_ext().agrees(&x.norm().to_ext(), N as i64));
    }
}

#[test]
fn roots_from_examples() {
    let k5 = ExtStructure::new(5, N).unwrap();
    let u = k5.int(6);
    let r = u.root_small_unit(24).unwrap();
    assert!(r.pow(24).unwrap().agrees(&u, N as i64));

    let k3 = ExtStructure::new(3, N).unwrap();
    let u = k3.int(28);
    let r = u.root_small_unit(3).unwrap();
    assert!(r.pow(3).unwrap().agrees(&u, N as i64 - 1));
    assert!(r.sub(&k3.one()).valuation().unwrap() >= 1);

    assert_eq!(k3.one().root_small_unit(8).unwrap(), k3.one());
}

#[test]
fn pth_root_guard() {
    // p / (p - 1) = 3/2 for p = 3: v = 1 is rejected, v = 2 accepted
    let k = ExtStructure::new(3, N).unwrap();
    assert!(matches!(
        k.int(4).root_small_unit(3),
        Err(PadicError::RootDomain { .. })
    ));
    let r = k.int(10).root_small_unit(3).unwrap();
    assert!(r.pow(3).unwrap().agrees(&k.int(10), N as i64 - 2));
    // p = 2: the bound is 2, so v = 2 fails and v = 3 works
    let k = ExtStructure::new(2, N).unwrap();
    assert!(k.int(5).root_small_unit(2).is_err());
    let r = k.int(9).root_small_unit(2).unwrap();
    assert!(r.pow(2).unwrap().agrees(&k.int(9), N as i64 - 2));
    // units that are not principal, and non-units, are rejected
    assert!(k.int(2).root_small_unit(3).is_err());
    assert!(ExtStructure::new(5, N).unwrap().int(3).root_small_unit(2).is_err());
}

#[test]
fn serialization_examples() {
    let k = ExtStructure::new(3, 4).unwrap();
    assert_eq!(k.int(5).to_string(), "3^0 * (2100) mod 3^4");
    assert_eq!(k.int(-9).to_string(), "3^2 * (2222) mod 3^4");
    assert_eq!(k.ext(1, 3).to_string(), "3^0 * (1000 + 0100 t) mod 3^4");
    assert_eq!(k.zero().to_string(), "0 in Q_3");
    let z = k.int(9).sub(&k.int(9));
    assert_eq!(z.to_string(), "O(3^6)");
    for s in ["3^0 * (2100) mod 3^4", "O(3^6) in L", "0 in L_3", "3^-2 * (1020 + 2201 t) mod 3^4"] {
        assert_eq!(PadicScalar::parse(s).unwrap().to_string(), s);
    }
    assert!(PadicScalar::parse("3^0 * (0100) mod 3^4").is_err());
    assert!(PadicScalar::parse("4^0 * (1) mod 4^1").is_err());
}

#[test]
fn precision_is_tracked() {
    let k = ExtStructure::new(5, 10).unwrap();
    let x = k.int(1).add(&k.p_power(3));
    let y = k.int(1);
    let d = x.sub(&y);
    assert_eq!(d.valuation(), Some(3));
    assert_eq!(d.precision(), 7);
    let big = k.int(7).mul(&k.p_power(20));
    assert_eq!(big.add(&k.int(1)), k.int(1));
    let e = k.int(2).sub(&k.int(2));
    assert!(e.is_zero() && !e.is_exact_zero());
    assert!(matches!(e.inv(), Err(PadicError::PrecisionExhausted { .. })));
    assert!(matches!(k.zero().inv(), Err(PadicError::DivisionByZero)));
    assert!(d.require_precision(8).is_err());
}

#[test]
fn bad_parameters() {
    assert!(ExtStructure::new(4, 10).is_err());
    assert!(ExtStructure::new(2, 70).is_err());
    assert!(ExtStructure::new(5, 24).is_ok());
}

fn scalar(k: &ExtStructure, c0: u64, c1: u64, v: i64) -> PadicScalar {
    k.ext(c0 as i128, c1 as i128).mul(&k.p_power(v))
}

proptest! {
    #[test]
    fn prop_roundtrip_string(p in prop::sample::select(vec![2u32, 3, 5, 7]), c0 in 0u64..1_000_000, c1 in 0u64..1_000_000, v in -5i64..5, f in 1u8..=2) {
        let k = ExtStructure::new(p, 12).unwrap();
        let x = if f == 1 { k.int(c0 as i128).mul(&k.p_power(v)) } else { scalar(&k, c0, c1, v) };
        let s = x.to_string();
        prop_assert_eq!(PadicScalar::parse(&s).unwrap(), x);
    }

    #[test]
    fn prop_teichmuller_multiplicative(p in prop::sample::select(vec![2u32, 3, 5]), a in any::<u32>(), b in any::<u32>(), c in any::<u32>(), d in any::<u32>()) {
        let k = ExtStructure::new(p, 20).unwrap();
        let x = k.ext(a as i128, b as i128);
        let y = k.ext(c as i128, d as i128);
        prop_assume!(x.valuation() == Some(0) && y.valuation() == Some(0));
        let lhs = x.mul(&y).teichmuller().unwrap();
        let rhs = x.teichmuller().unwrap().mul(&y.teichmuller().unwrap());
        prop_assert_eq!(lhs, rhs);
        let w = x.teichmuller().unwrap();
        prop_assert_eq!(w.pow((p as i64).pow(2) - 1).unwrap(), k.one().to_ext());
        prop_assert_eq!(w.residue(), x.residue());
    }

    #[test]
    fn prop_root_unique_and_correct(p in prop::sample::select(vec![2u32, 3, 5]), a in any::<u32>(), b in any::<u32>(), m in 1u64..30) {
        let k = ExtStructure::new(p, 20).unwrap();
        prop_assume!(m % p as u64 != 0);
        let u = k.one().to_ext().add(&k.ext(a as i128, b as i128).mul(&k.p_power(1)));
        let r = u.root_small_unit(m).unwrap();
        prop_assert!(r.pow(m as i64).unwrap().agrees(&u, 20));
        prop_assert_eq!(u.root_small_unit(m).unwrap(), r);
        prop_assert!(r.sub(&k.one()).valuation().unwrap() >= 1);
    }

    #[test]
    fn prop_inverse_and_frobenius(p in prop::sample::select(vec![2u32, 3, 5, 7]), a in any::<u32>(), b in any::<u32>(), v in -4i64..4) {
        let k = ExtStructure::new(p, 20).unwrap();
        let x = scalar(&k, a as u64, b as u64, v);
        prop_assume!(!x.is_zero());
        let one = k.one().to_ext();
        prop_assert!(x.mul(&x.inv().unwrap()).agrees(&one, x.precision() as i64));
        prop_assert_eq!(x.frobenius().frobenius(), x);
        let (s, n, t) = x.frob_norm_trace();
        prop_assert_eq!(n.frobenius(), n);
        prop_assert_eq!(t.to_ext(), x.add(&s));
    }

    #[test]
    fn prop_valuation_homomorphism(p in prop::sample::select(vec![2u32, 3, 5]), a in 1u64..u32::MAX as u64, b in any::<u32>(), c in 1u64..u32::MAX as u64, d in any::<u32>(), v in -3i64..3, w in -3i64..3) {
        let k = ExtStructure::new(p, 20).unwrap();
        let x = scalar(&k, a, b as u64, v);
        let y = scalar(&k, c, d as u64, w);
        prop_assume!(!x.is_zero() && !y.is_zero());
        prop_assert_eq!(x.mul(&y).valuation().unwrap(), x.valuation().unwrap() + y.valuation().unwrap());
        let s = x.add(&y);
        let lower = x.valuation().unwrap().min(y.valuation().unwrap());
        prop_assert!(s.valuation().unwrap() >= lower);
        prop_assert!((x.mul(&y).abs() - x.abs() * y.abs()).abs() <= 1e-9 * x.abs() * y.abs());
    }
}

#[test]
fn ext_multiplication_matches_polynomial_oracle() {
    // (a0 + a1 t)(b0 + b1 t) mod t^2 + c1 t + c0, done by hand in i128
    let p = 5u32;
    let k = ExtStructure::new(p, 10).unwrap();
    let m = 5i128.pow(10);
    let [c0, c1] = conway_quadratic(p).map(|c| c as i128);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    for _ in 0..100 {
        let (a0, a1, b0, b1): (i128, i128, i128, i128) =
            (rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m));
        let hi = a1 * b1 % m;
        let r0 = (a0 * b0 - c0 * hi).rem_euclid(m);
        let r1 = (a0 * b1 + a1 * b0 - c1 * hi).rem_euclid(m);
        let lhs = k.ext(a0, a1).mul(&k.ext(b0, b1));
        assert!(lhs.agrees(&k.ext(r0, r1), 10 - lhs.valuation().unwrap_or(0)));
    }
}
