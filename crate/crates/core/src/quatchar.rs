//! Unit groups of O_L at finite level, the quaternion order O_L + O_L Pi,
//! character enumeration, and the transport of phi_z to characters.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::cocycle::{CocycleData, CocycleError};
use crate::fingroup::{closure, derived_subgroup, normal_closure, p_prime_part, AbelianModel};
use crate::matrix::Mat2;
use crate::padic::{conway_quadratic, pow_u64, ExtStructure, PadicError, PadicScalar};
use crate::snf::AbelianPresentation;

pub const DEFAULT_MAX_LEVEL: u32 = 3;
/// Largest group quaternion_finite_check will enumerate.
pub const ENUMERATION_BUDGET: u64 = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuatError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error("level {level} exceeds the maximum {max}")]
    LevelTooDeep { level: u32, max: u32 },
    #[error("group of order {0} exceeds the enumeration budget")]
    Budget(u64),
    #[error("j_z value {0} is not a unit")]
    NonUnit(String),
    #[error("unit group generators span only {got} of {expected} elements")]
    Generators { got: usize, expected: u64 },
    #[error("phi_z value {0} is not a root of unity in L")]
    NotInTorsion(String),
    #[error("phi_z is nontrivial on the kernel element {0}")]
    NotFactoring(String),
}

/// Residues of O_L = Z_p[t]/(t^2 + c1 t + c0) modulo p^n, as coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LRing {
    pub p: u32,
    pub n: u32,
    pub modulus: u64,
    quad: [u64; 2],
}

pub type LRes = [u64; 2];

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

impl LRing {
    pub fn new(p: u32, n: u32) -> LRing {
        let q = conway_quadratic(p);
        LRing {
            p,
            n,
            modulus: pow_u64(p, n),
            quad: [q[0] as u64, q[1] as u64],
        }
    }

    pub fn one(&self) -> LRes {
        [1 % self.modulus, 0]
    }

    pub fn int(&self, k: i64) -> LRes {
        [k.rem_euclid(self.modulus as i64) as u64, 0]
    }

    pub fn reduce(&self, x: LRes) -> LRes {
        [x[0] % self.modulus, x[1] % self.modulus]
    }

    pub fn add(&self, x: LRes, y: LRes) -> LRes {
        self.reduce([x[0] + y[0], x[1] + y[1]])
    }

    pub fn mul(&self, x: LRes, y: LRes) -> LRes {
        let m = self.modulus as u128;
        let [x0, x1] = [x[0] as u128, x[1] as u128];
        let [y0, y1] = [y[0] as u128, y[1] as u128];
        let [c0, c1] = [self.quad[0] as u128, self.quad[1] as u128];
        let t2 = x1 * y1 % m;
        let a = (x0 * y0 % m + (m - c0 * t2 % m)) % m;
        let b = ((x0 * y1 + x1 * y0) % m + (m - c1 * t2 % m)) % m;
        [a as u64, b as u64]
    }

    /// sigma(t) = -c1 - t.
    pub fn sigma(&self, x: LRes) -> LRes {
        let m = self.modulus;
        let c1x1 = (self.quad[1] as u128 * x[1] as u128 % m as u128) as u64;
        [(x[0] + m - c1x1) % m, (m - x[1] % m) % m]
    }

    pub fn norm(&self, x: LRes) -> u64 {
        let n = self.mul(x, self.sigma(x));
        debug_assert_eq!(n[1], 0);
        n[0]
    }

    pub fn is_unit(&self, x: LRes) -> bool {
        let p = self.p as u64;
        !x[0].is_multiple_of(p) || !x[1].is_multiple_of(p)
    }

    pub fn inv(&self, x: LRes) -> Option<LRes> {
        let ni = inv_mod(self.norm(x), self.modulus)?;
        let s = self.sigma(x);
        Some(self.mul(s, [ni, 0]))
    }

    pub fn pow(&self, x: LRes, mut e: u64) -> LRes {
        let mut acc = self.one();
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }

    pub fn units(&self) -> Vec<LRes> {
        let m = self.modulus;
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if self.is_unit([a, b]) {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    pub fn from_padic(&self, x: &PadicScalar) -> LRes {
        let (c0, c1) = x.coordinates();
        let r = |c: &PadicScalar| -> u64 {
            if c.is_zero() {
                return 0;
            }
            let v = c.valuation().unwrap();
            if v >= self.n as i64 {
                return 0;
            }
            let u = c.unit_part()[0] % self.modulus;
            (u as u128 * pow_u64(self.p, v as u32) as u128 % self.modulus as u128) as u64
        };
        [r(&c0), r(&c1)]
    }

    pub fn to_padic(&self, x: LRes, ext: &ExtStructure) -> PadicScalar {
        ext.ext(x[0] as i128, x[1] as i128)
    }

    /// Units u = 1 mod p with N(u) = 1 mod p^n: the image of P^1_L.
    pub fn p1_image(&self) -> Vec<LRes> {
        let p = self.p as u64;
        self.units()
            .into_iter()
            .filter(|x| x[0] % p == 1 % p && x[1] % p == 0 && self.norm(*x) == 1 % self.modulus)
            .collect()
    }
}

/// A finite abelian group in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteAbelianGroup {
    pub invariants: Vec<u64>,
}

impl FiniteAbelianGroup {
    pub fn from_presentation(pr: &AbelianPresentation) -> Self {
        FiniteAbelianGroup {
            invariants: pr.invariants.clone(),
        }
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().product()
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariants.len() <= 1
    }
}

/// (O_L/p^n)^x with the image of P^1_L and the quotient Q_n.
#[derive(Clone, Debug)]
pub struct UnitGroupStructure {
    pub ring: LRing,
    pub units: AbelianModel<LRes>,
    pub units_group: FiniteAbelianGroup,
    pub p1: Vec<LRes>,
    pub q_presentation: AbelianPresentation,
    pub q_group: FiniteAbelianGroup,
}

impl UnitGroupStructure {
    /// Residue representing the exponent vector v in the generators.
    pub fn element(&self, v: &[i128]) -> LRes {
        let order = self.units.order() as i128;
        self.units
            .gens
            .iter()
            .zip(v)
            .fold(self.ring.one(), |acc, (g, &e)| {
                self.ring.mul(acc, self.ring.pow(*g, e.rem_euclid(order) as u64))
            })
    }

    /// Representatives of the invariant-factor generators of Q_n.
    pub fn q_generators(&self) -> Vec<LRes> {
        self.q_presentation
            .generators
            .iter()
            .map(|v| self.element(v))
            .collect()
    }

    /// Coordinates in Q_n of a unit residue.
    pub fn q_coordinates(&self, x: LRes) -> Option<Vec<i128>> {
        self.units
            .vector(&x)
            .map(|v| self.q_presentation.coordinates(v))
    }
}

fn unit_generators(ring: &LRing, ext: &ExtStructure) -> Vec<LRes> {
    let p = ring.p as i64;
    let zeta = ring.from_padic(&ext.zeta());
    let mut gens = vec![zeta, ring.int(-1)];
    let mut pk = p;
    for _ in 1..ring.n {
        gens.push(ring.int(1 + pk));
        gens.push(ring.add(ring.one(), [0, pk as u64 % ring.modulus]));
        gens.push(ring.add(ring.one(), ring.mul(ring.int(pk), zeta)));
        pk *= p;
    }
    gens.retain(|g| *g != ring.one());
    gens.dedup();
    gens
}

pub fn unit_group_structure(p: u32, n: u32, max_level: u32) -> Result<UnitGroupStructure, QuatError> {
    if n == 0 || n > max_level {
        return Err(QuatError::LevelTooDeep { level: n, max: max_level });
    }
    let ext = ExtStructure::new(p, (n + 2).min(crate::padic::max_precision(p)))?;
    let ring = LRing::new(p, n);
    let q = p as u64;
    let expected = (q * q - 1) * (q * q).pow(n - 1);
    if expected > ENUMERATION_BUDGET * 10 {
        return Err(QuatError::Budget(expected));
    }
    let gens = unit_generators(&ring, &ext);
    let units = AbelianModel::build(gens, &ring.one(), |x, y| ring.mul(*x, *y));
    if units.order() as u64 != expected {
        return Err(QuatError::Generators {
            got: units.order(),
            expected,
        });
    }
    let p1 = ring.p1_image();
    let q_presentation = units.quotient(&p1);
    Ok(UnitGroupStructure {
        ring,
        units_group: FiniteAbelianGroup::from_presentation(&units.presentation),
        units,
        p1,
        q_group: FiniteAbelianGroup::from_presentation(&q_presentation),
        q_presentation,
    })
}

/// Order of the torsion of L^x: q^2 - 1, doubled for p = 2 by -1.
pub fn mu_order(p: u32) -> u64 {
    let q = p as u64;
    if p == 2 {
        2 * (q * q - 1)
    } else {
        q * q - 1
    }
}

/// A generator of the torsion of L^x.
pub fn mu_generator(ext: &ExtStructure) -> PadicScalar {
    if ext.p() == 2 {
        ext.zeta().neg()
    } else {
        ext.zeta()
    }
}

/// chi(g_i) = omega^{k_i} for the invariant-factor generators g_i of Q and
/// omega = mu_generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CharacterData {
    pub exponents: Vec<u64>,
}

impl CharacterData {
    pub fn trivial(rank: usize) -> Self {
        CharacterData {
            exponents: vec![0; rank],
        }
    }

    pub fn order(&self, mu: u64) -> u64 {
        self.exponents
            .iter()
            .map(|&k| mu / crate::snf::gcd(k as i128, mu as i128) as u64)
            .fold(1, lcm)
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&k| k == 0)
    }

    /// Exponent of omega in chi(x) for x with the given coordinates.
    pub fn eval(&self, coords: &[i128], mu: u64) -> u64 {
        let s: i128 = self
            .exponents
            .iter()
            .zip(coords)
            .map(|(&k, &c)| k as i128 * c)
            .sum();
        s.rem_euclid(mu as i128) as u64
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / crate::snf::gcd(a as i128, b as i128) as u64 * b
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterTable {
    pub group: FiniteAbelianGroup,
    pub mu_order: u64,
    pub characters: Vec<CharacterData>,
    /// characters of Q that need roots of unity outside L
    pub missing: u64,
    /// [L(mu_m) : L] for m the exponent of Q, the field that sees every character
    pub extension_degree: u64,
    pub sigma_images: Vec<usize>,
    pub orbits: Vec<Vec<usize>>,
}

impl CharacterTable {
    pub fn p_prime(&self, p: u32) -> Vec<usize> {
        (0..self.characters.len())
            .filter(|&i| !self.characters[i].order(self.mu_order).is_multiple_of(p as u64))
            .collect()
    }

    pub fn sigma_fixed(&self) -> Vec<usize> {
        (0..self.characters.len())
            .filter(|&i| self.sigma_images[i] == i)
            .collect()
    }

    pub fn index_of(&self, chi: &CharacterData) -> Option<usize> {
        self.characters.iter().position(|c| c == chi)
    }

    pub fn orbit_of(&self, i: usize) -> Option<&Vec<usize>> {
        self.orbits.iter().find(|o| o.contains(&i))
    }
}

/// [L(mu_m) : L]: the order of q^2 mod the prime-to-p part, times the
/// totally ramified degree of the p-power part.
pub fn cyclotomic_degree(p: u32, m: u64) -> u64 {
    let p = p as u64;
    let (mut prime_to_p, mut pk) = (m, 1);
    while prime_to_p % p == 0 {
        prime_to_p /= p;
        pk *= p;
    }
    let q2 = p * p % prime_to_p.max(1);
    let mut f = 1;
    let mut x = q2;
    while prime_to_p > 1 && x != 1 {
        x = x * (p * p) % prime_to_p;
        f += 1;
    }
    let ramified = if pk == 1 { 1 } else { pk / p * (p - 1) };
    f * ramified
}

/// All characters of Q_n with values in the torsion of L, with sigma acting
/// by chi -> chi o sigma.
pub fn enumerate_characters(s: &UnitGroupStructure) -> CharacterTable {
    let p = s.ring.p;
    let mu = mu_order(p);
    let inv = &s.q_group.invariants;
    // allowed exponents for generator i: multiples of mu / gcd(d_i, mu)
    let steps: Vec<u64> = inv
        .iter()
        .map(|&d| mu / crate::snf::gcd(d as i128, mu as i128) as u64)
        .collect();
    let available: u64 = steps.iter().map(|&st| mu / st).product();
    let mut characters = vec![CharacterData::trivial(inv.len())];
    for (i, &st) in steps.iter().enumerate() {
        let mut next = Vec::new();
        for c in &characters {
            for j in 0..mu / st {
                let mut c = c.clone();
                c.exponents[i] = j * st;
                next.push(c);
            }
        }
        characters = next;
    }
    characters.sort();
    // sigma on the generators, in Q-coordinates
    let sigma_rows: Vec<Vec<i128>> = s
        .q_generators()
        .iter()
        .map(|&g| s.q_coordinates(s.ring.sigma(g)).expect("unit"))
        .collect();
    let sigma_images: Vec<usize> = characters
        .iter()
        .map(|c| {
            let img = CharacterData {
                exponents: sigma_rows.iter().map(|row| c.eval(row, mu)).collect(),
            };
            characters.binary_search(&img).expect("sigma permutes characters")
        })
        .collect();
    let mut seen = vec![false; characters.len()];
    let mut orbits = Vec::new();
    for i in 0..characters.len() {
        if seen[i] {
            continue;
        }
        let mut orbit = vec![i];
        seen[i] = true;
        let mut j = sigma_images[i];
        while j != i {
            seen[j] = true;
            orbit.push(j);
            j = sigma_images[j];
        }
        orbit.sort();
        orbits.push(orbit);
    }
    CharacterTable {
        group: s.q_group.clone(),
        mu_order: mu,
        missing: s.q_group.order() - available,
        extension_degree: cyclotomic_degree(p, inv.iter().fold(1, |a, &d| lcm(a, d))),
        characters,
        sigma_images,
        orbits,
    }
}

/// The matrix [[a, -c N(z)], [c, a - c tr(z)]] fixing z, with j_z = a - c z.
pub fn stabilizer_and_jz(
    z: &PadicScalar,
    a: &PadicScalar,
    c: &PadicScalar,
) -> Result<(Mat2, PadicScalar), QuatError> {
    let j = a.sub(&c.mul(z));
    if j.valuation() != Some(0) {
        return Err(QuatError::NonUnit(j.to_string()));
    }
    let nz = z.norm().to_base()?;
    let tz = z.trace().to_base()?;
    let g = Mat2::new(*a, c.mul(&nz).neg(), *c, a.sub(&c.mul(&tz)));
    Ok((g, j))
}

/// (a, c) in Z_p with x = a - c zeta.
pub fn jz_inverse(ext: &ExtStructure, x: &PadicScalar) -> Result<(PadicScalar, PadicScalar), QuatError> {
    let (x0, x1) = x.to_ext().coordinates();
    let (z0, z1) = ext.zeta().coordinates();
    let c = x1.neg().div(&z1)?;
    let a = x0.add(&c.mul(&z0));
    Ok((a, c))
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    pub level: u32,
    pub group: FiniteAbelianGroup,
    pub character: CharacterData,
    pub order: u64,
    pub sigma_orbit: Vec<CharacterData>,
    pub label: CharacterData,
}

/// Exponent k with omega^k = x, for x in the torsion of L.
pub fn mu_log(ext: &ExtStructure, x: &PadicScalar) -> Option<u64> {
    let omega = mu_generator(ext);
    let mu = mu_order(ext.p());
    let digits = (ext.precision() / 2).max(2) as i64;
    let mut acc = ext.one().to_ext();
    for k in 0..mu {
        if acc.agrees(&x.to_ext(), digits) {
            return Some(k);
        }
        acc = acc.mul(&omega);
    }
    None
}

/// chi(x) = phi_z(alpha)(j_z^{-1}(x)) on the generators of Q_level, for
/// z = zeta. With `conjugate` the embedding is precomposed with sigma.
pub fn theorem_a_transport(
    alpha: &CocycleData,
    ext: &ExtStructure,
    level: u32,
    conjugate: bool,
) -> Result<TransportReport, QuatError> {
    let s = unit_group_structure(ext.p(), level, DEFAULT_MAX_LEVEL.max(level))?;
    let table = enumerate_characters(&s);
    let z = ext.zeta();
    let phi_at = |x: &PadicScalar| -> Result<u64, QuatError> {
        let x = if conjugate { x.frobenius() } else { *x };
        let (a, c) = jz_inverse(ext, &x)?;
        let (g, _) = stabilizer_and_jz(&z, &a, &c)?;
        let v = crate::cocycle::phi_z(alpha, &g, &z, ext)?;
        mu_log(ext, &v).ok_or_else(|| QuatError::NotInTorsion(v.to_string()))
    };
    // phi has to die on the image of P^1_L and on 1 + p^level O_L
    let pn = ext.p_power(level as i64);
    let mut kernel: Vec<PadicScalar> = s.p1.iter().take(8).map(|&x| s.ring.to_padic(x, ext)).collect();
    kernel.push(ext.one().add(&pn).to_ext());
    kernel.push(ext.one().add(&pn.mul(&ext.t())));
    for x in &kernel {
        if phi_at(x)? != 0 {
            return Err(QuatError::NotFactoring(x.to_string()));
        }
    }
    let exponents = s
        .q_generators()
        .into_iter()
        .map(|x| phi_at(&s.ring.to_padic(x, ext)))
        .collect::<Result<Vec<_>, _>>()?;
    let character = CharacterData { exponents };
    let idx = table
        .index_of(&character)
        .ok_or_else(|| QuatError::NotInTorsion(format!("{:?}", character.exponents)))?;
    let sigma_orbit: Vec<CharacterData> = table
        .orbit_of(idx)
        .expect("every character lies in an orbit")
        .iter()
        .map(|&i| table.characters[i].clone())
        .collect();
    let label = sigma_orbit.iter().min().cloned().expect("nonempty orbit");
    Ok(TransportReport {
        level,
        group: s.q_group.clone(),
        order: character.order(table.mu_order),
        character,
        sigma_orbit,
        label,
    })
}

/// a + b Pi in O_D / Pi^m, with a mod p^ceil(m/2) and b mod p^floor(m/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuatElem {
    pub a: LRes,
    pub b: LRes,
}

#[derive(Clone, Copy, Debug)]
pub struct QuatRing {
    pub m: u32,
    pub ra: LRing,
    pub rb: LRing,
}

impl QuatRing {
    pub fn new(p: u32, m: u32) -> QuatRing {
        QuatRing {
            m,
            ra: LRing::new(p, m.div_ceil(2)),
            rb: LRing::new(p, m / 2),
        }
    }

    pub fn one(&self) -> QuatElem {
        QuatElem {
            a: self.ra.one(),
            b: self.rb.int(0),
        }
    }

    /// Pi^2 = p and Pi x = sigma(x) Pi.
    pub fn mul(&self, x: &QuatElem, y: &QuatElem) -> QuatElem {
        let p = self.ra.p as i64;
        let bsd = self.rb.mul(x.b, self.rb.sigma(y.b));
        let a = self.ra.add(
            self.ra.mul(x.a, y.a),
            self.ra.mul(self.ra.int(p), self.ra.reduce(bsd)),
        );
        let b = self.rb.add(
            self.rb.mul(self.rb.reduce(x.a), y.b),
            self.rb.mul(x.b, self.rb.sigma(self.rb.reduce(y.a))),
        );
        QuatElem { a, b }
    }

    /// Nrd(a + b Pi) = a sigma(a) - p b sigma(b), mod p^ceil(m/2).
    pub fn nrd(&self, x: &QuatElem) -> u64 {
        let p = self.ra.p as i64;
        let bb = self.ra.reduce(self.rb.mul(x.b, self.rb.sigma(x.b)));
        let n = self.ra.add(
            self.ra.mul(x.a, self.ra.sigma(x.a)),
            self.ra.mul(self.ra.int(-p), bb),
        );
        n[0]
    }

    /// omega_D: the residue of a in F_{q^2}.
    pub fn omega(&self, x: &QuatElem) -> LRes {
        let p = self.ra.p as u64;
        [x.a[0] % p, x.a[1] % p]
    }

    pub fn iota(&self, a: LRes) -> QuatElem {
        QuatElem {
            a: self.ra.reduce(a),
            b: self.rb.int(0),
        }
    }

    pub fn units(&self) -> Vec<QuatElem> {
        let bs: Vec<LRes> = (0..self.rb.modulus)
            .flat_map(|x| (0..self.rb.modulus).map(move |y| [x, y]))
            .collect();
        let mut out = Vec::new();
        for a in self.ra.units() {
            for b in &bs {
                out.push(QuatElem { a, b: *b });
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RiehmReport {
    pub p: u32,
    pub m: u32,
    pub group_order: usize,
    pub commutator_order: usize,
    pub kernel_order: usize,
    pub equal: bool,
    pub only_in_commutator: Vec<String>,
    pub only_in_kernel: Vec<String>,
}

/// Compare [G, G] with ker Nrd cap ker omega_D on G = (O_D/Pi^m)^x.
pub fn quaternion_finite_check(p: u32, m: u32) -> Result<RiehmReport, QuatError> {
    let ring = QuatRing::new(p, m);
    let q = p as u64;
    let size = (q * q - 1) * (q * q).pow(m - 1);
    if size > ENUMERATION_BUDGET {
        return Err(QuatError::Budget(size));
    }
    let g = ring.units();
    let one = ring.one();
    let inverses = inverse_map(&g, one, |x, y| ring.mul(x, y));
    let comm: BTreeSet<QuatElem> = derived_subgroup(&g, &one, |x, y| ring.mul(x, y), |x| inverses[x])
        .into_iter()
        .collect();
    let unit_one = 1 % ring.ra.modulus;
    let kernel: BTreeSet<QuatElem> = g
        .iter()
        .filter(|x| ring.omega(x) == [1 % q, 0] && ring.nrd(x) == unit_one)
        .copied()
        .collect();
    let show = |x: &QuatElem| format!("{:?} + {:?} Pi", x.a, x.b);
    Ok(RiehmReport {
        p,
        m,
        group_order: g.len(),
        commutator_order: comm.len(),
        kernel_order: kernel.len(),
        equal: comm == kernel,
        only_in_commutator: comm.difference(&kernel).take(5).map(show).collect(),
        only_in_kernel: kernel.difference(&comm).take(5).map(show).collect(),
    })
}

/// Elements of GL2(Z/p^k) as [a, b, c, d].
type M4 = [u64; 4];

fn m4_mul(x: &M4, y: &M4, m: u64) -> M4 {
    let f = |a: u64, b: u64, c: u64, d: u64| ((a as u128 * b as u128 + c as u128 * d as u128) % m as u128) as u64;
    [
        f(x[0], y[0], x[1], y[2]),
        f(x[0], y[1], x[1], y[3]),
        f(x[2], y[0], x[3], y[2]),
        f(x[2], y[1], x[3], y[3]),
    ]
}

fn units_mod(p: u32, k: u32) -> Vec<u64> {
    let m = pow_u64(p, k);
    (1..m).filter(|a| a % p as u64 != 0).collect()
}

fn inverse_map<T: Copy + Eq + Hash>(g: &[T], one: T, mul: impl Fn(&T, &T) -> T) -> HashMap<T, T> {
    let mut map = HashMap::new();
    for &x in g {
        if map.contains_key(&x) {
            continue;
        }
        // x^{-1} = x^{ord - 1}
        let mut acc = x;
        let mut prev = one;
        while acc != one {
            prev = acc;
            acc = mul(&acc, &x);
        }
        map.insert(x, if x == one { one } else { prev });
    }
    map
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteCharacterCount {
    pub group_order: usize,
    pub derived_order: usize,
    pub p_prime_characters: u64,
    pub w_fixed_p_prime: Option<u64>,
}

/// p'-characters of GL2(Z/p^k), counted through the derived subgroup.
pub fn gl2_character_count(p: u32, k: u32) -> FiniteCharacterCount {
    let m = pow_u64(p, k);
    let one: M4 = [1, 0, 0, 1];
    let mut gens: Vec<M4> = vec![[1, 1, 0, 1], [1, 0, 1, 1]];
    gens.extend(units_mod(p, k).into_iter().map(|a| [a, 0, 0, 1]));
    let mul = |x: &M4, y: &M4| m4_mul(x, y, m);
    let g = closure(&gens, &one, mul);
    let inv = inverse_map(&g, one, mul);
    let d = derived_subgroup(&gens, &one, mul, |x| inv[x]);
    FiniteCharacterCount {
        group_order: g.len(),
        derived_order: d.len(),
        p_prime_characters: p_prime_part((g.len() / d.len()) as u64, p as u64),
        w_fixed_p_prime: None,
    }
}

/// The Iwahori quotient: (a, b, c', d) for [[a, b], [p c', d]] mod p^k.
fn iw_mul(x: &M4, y: &M4, p: u64, m: u64) -> M4 {
    let f = |a: u64, b: u64, c: u64, d: u64, s: u64| {
        ((a as u128 * b as u128 + s as u128 * c as u128 * d as u128) % m as u128) as u64
    };
    [
        f(x[0], y[0], x[1], y[2], p),
        f(x[0], y[1], x[1], y[3], 1),
        f(x[2], y[0], x[3], y[2], 1),
        f(x[3], y[3], x[2], y[1], p),
    ]
}

/// w g w^{-1} on the Iwahori quotient.
pub fn iwahori_w(x: &[u64; 4]) -> [u64; 4] {
    [x[3], x[2], x[1], x[0]]
}

/// p'-characters of the Iwahori quotient and those fixed by w-conjugation.
pub fn iwahori_character_count(p: u32, k: u32) -> FiniteCharacterCount {
    let m = pow_u64(p, k);
    let pp = p as u64 % m;
    let one: M4 = [1, 0, 0, 1];
    let mut gens: Vec<M4> = vec![[1, 1, 0, 1], [1, 0, 1, 1]];
    for a in units_mod(p, k) {
        gens.push([a, 0, 0, 1]);
        gens.push([1, 0, 0, a]);
    }
    let mul = |x: &M4, y: &M4| iw_mul(x, y, pp, m);
    let g = closure(&gens, &one, mul);
    let inv = inverse_map(&g, one, mul);
    let d = derived_subgroup(&gens, &one, mul, |x| inv[x]);
    let mut twist: Vec<M4> = d.clone();
    twist.extend(gens.iter().map(|x| mul(&iwahori_w(x), &inv[x])));
    let n = normal_closure(&gens, twist, &one, &mul, &|x: &M4| inv[x]);
    FiniteCharacterCount {
        group_order: g.len(),
        derived_order: d.len(),
        p_prime_characters: p_prime_part((g.len() / d.len()) as u64, p as u64),
        w_fixed_p_prime: Some(p_prime_part((g.len() / n.len()) as u64, p as u64)),
    }
}
