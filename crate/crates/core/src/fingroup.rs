//! Small finite groups given by generators and a multiplication closure.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;

use crate::snf::AbelianPresentation;

/// All elements of the subgroup generated by gens, breadth first.
pub fn closure<T, M>(gens: &[T], identity: &T, mul: M) -> Vec<T>
where
    T: Clone + Eq + Hash,
    M: Fn(&T, &T) -> T,
{
    let mut seen: HashSet<T> = HashSet::new();
    let mut out = vec![identity.clone()];
    seen.insert(identity.clone());
    let mut queue = VecDeque::from([identity.clone()]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = mul(&x, g);
            if seen.insert(y.clone()) {
                out.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    out
}

/// The derived subgroup as the normal closure of the commutators of gens.
pub fn derived_subgroup<T, M, I>(gens: &[T], identity: &T, mul: M, inv: I) -> Vec<T>
where
    T: Clone + Eq + Hash,
    M: Fn(&T, &T) -> T,
    I: Fn(&T) -> T,
{
    let comm = |x: &T, y: &T| mul(&mul(&mul(x, y), &inv(x)), &inv(y));
    let mut seen = HashSet::new();
    let mut sub_gens: Vec<T> = Vec::new();
    for x in gens {
        for y in gens {
            let c = comm(x, y);
            if seen.insert(c.clone()) {
                sub_gens.push(c);
            }
        }
    }
    normal_closure(gens, sub_gens, identity, &mul, &inv)
}

/// Smallest subgroup containing sub_gens and stable under conjugation by gens.
pub fn normal_closure<T, M, I>(gens: &[T], mut sub_gens: Vec<T>, identity: &T, mul: &M, inv: &I) -> Vec<T>
where
    T: Clone + Eq + Hash,
    M: Fn(&T, &T) -> T,
    I: Fn(&T) -> T,
{
    loop {
        let h = closure(&sub_gens, identity, mul);
        let set: HashSet<&T> = h.iter().collect();
        let mut extra = Vec::new();
        let mut fresh = HashSet::new();
        for s in &sub_gens {
            for g in gens {
                let c = mul(&mul(g, s), &inv(g));
                if !set.contains(&c) && fresh.insert(c.clone()) {
                    extra.push(c);
                }
            }
        }
        if extra.is_empty() {
            return h;
        }
        sub_gens.extend(extra);
    }
}

/// Relation lattice of a finite abelian group kept in Hermite form.
/// It always contains order * Z^k, so entries are reduced mod order.
#[derive(Clone, Debug)]
pub struct RelationLattice {
    order: i128,
    rows: Vec<Vec<i128>>,
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        return if a < 0 { (-a, -1, 0) } else { (a, 1, 0) };
    }
    let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
    (g, y, x - a.div_euclid(b) * y)
}

impl RelationLattice {
    pub fn new(k: usize, order: u64) -> Self {
        let order = order as i128;
        let rows = (0..k)
            .map(|i| {
                let mut r = vec![0; k];
                r[i] = order;
                r
            })
            .collect();
        RelationLattice { order, rows }
    }

    pub fn insert(&mut self, r: &[i128]) {
        let n = self.order;
        let mut r: Vec<i128> = r.iter().map(|x| x.rem_euclid(n)).collect();
        for i in 0..r.len() {
            if r[i] == 0 {
                continue;
            }
            let b = self.rows[i].clone();
            let (g, x, y) = ext_gcd(b[i], r[i]);
            let (u, v) = (b[i] / g, r[i] / g);
            let new_b: Vec<i128> = b.iter().zip(&r).map(|(p, q)| (x * p + y * q).rem_euclid(n)).collect();
            let new_r: Vec<i128> = b.iter().zip(&r).map(|(p, q)| (v * p - u * q).rem_euclid(n)).collect();
            self.rows[i] = new_b;
            r = new_r;
            // keep the diagonal a divisor of the order
            if self.rows[i][i] == 0 {
                self.rows[i][i] = n;
            }
        }
    }

    pub fn rows(&self) -> &[Vec<i128>] {
        &self.rows
    }

    pub fn presentation(&self) -> AbelianPresentation {
        AbelianPresentation::from_relations(&self.rows, self.rows.len())
    }
}

/// An abelian group enumerated from generators, with each element tagged
/// by one exponent vector and the relation lattice in normal form.
#[derive(Clone, Debug)]
pub struct AbelianModel<T: Eq + Hash> {
    pub gens: Vec<T>,
    pub vectors: HashMap<T, Vec<i128>>,
    pub lattice: RelationLattice,
    pub presentation: AbelianPresentation,
}

impl<T: Clone + Eq + Hash> AbelianModel<T> {
    pub fn build<M: Fn(&T, &T) -> T>(gens: Vec<T>, identity: &T, mul: M) -> Self {
        let k = gens.len();
        let elements = closure(&gens, identity, &mul);
        let mut lattice = RelationLattice::new(k, elements.len() as u64);
        let mut vectors: HashMap<T, Vec<i128>> = HashMap::new();
        vectors.insert(identity.clone(), vec![0; k]);
        let mut queue = VecDeque::from([identity.clone()]);
        while let Some(x) = queue.pop_front() {
            let vx = vectors[&x].clone();
            for (i, g) in gens.iter().enumerate() {
                let y = mul(&x, g);
                let mut vy = vx.clone();
                vy[i] += 1;
                match vectors.get(&y) {
                    Some(old) => {
                        let r: Vec<i128> = vy.iter().zip(old).map(|(a, b)| a - b).collect();
                        lattice.insert(&r);
                    }
                    None => {
                        vectors.insert(y.clone(), vy);
                        queue.push_back(y);
                    }
                }
            }
        }
        let presentation = lattice.presentation();
        AbelianModel {
            gens,
            vectors,
            lattice,
            presentation,
        }
    }

    pub fn order(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, x: &T) -> Option<&Vec<i128>> {
        self.vectors.get(x)
    }

    /// Normal form of the quotient by the subgroup generated by sub.
    pub fn quotient(&self, sub: &[T]) -> AbelianPresentation {
        let mut lattice = self.lattice.clone();
        for x in sub {
            if let Some(v) = self.vectors.get(x) {
                lattice.insert(v);
            }
        }
        lattice.presentation()
    }
}

pub fn p_prime_part(n: u64, p: u64) -> u64 {
    let mut n = n;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
    }
    n
}
