//! Measures on finite indexed sets with values in Z or Z/d, and their
//! invariants under permutation actions.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::snf::{gcd, smith};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("measure has total {0}, expected 0")]
    NotInM0(i64),
    #[error("domain sizes differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("point {0} outside a domain of size {1}")]
    PointOutOfRange(usize, usize),
    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),
    #[error("measures over different rings")]
    RingMismatch,
    #[error("bad ring tag {0:?}")]
    BadRing(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    Z,
    ZMod(u64),
}

impl Ring {
    fn reduce(&self, x: i64) -> i64 {
        match self {
            Ring::Z => x,
            Ring::ZMod(d) => x.rem_euclid(*d as i64),
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Z => write!(f, "Z"),
            Ring::ZMod(d) => write!(f, "Z/{d}"),
        }
    }
}

impl std::str::FromStr for Ring {
    type Err = MeasureError;
    fn from_str(s: &str) -> Result<Self, MeasureError> {
        if s == "Z" {
            return Ok(Ring::Z);
        }
        s.strip_prefix("Z/")
            .and_then(|d| d.parse::<u64>().ok())
            .filter(|&d| d > 0)
            .map(Ring::ZMod)
            .ok_or_else(|| MeasureError::BadRing(s.to_string()))
    }
}

/// A measure on {0, .., n-1}, stored by its values on points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteMeasure {
    ring: Ring,
    values: Vec<i64>,
}

impl FiniteMeasure {
    pub fn from_values(ring: Ring, values: Vec<i64>) -> Self {
        let values = values.into_iter().map(|x| ring.reduce(x)).collect();
        FiniteMeasure { ring, values }
    }

    pub fn zero(ring: Ring, n: usize) -> Self {
        FiniteMeasure {
            ring,
            values: vec![0; n],
        }
    }

    pub fn delta(ring: Ring, n: usize, z: usize) -> Result<Self, MeasureError> {
        if z >= n {
            return Err(MeasureError::PointOutOfRange(z, n));
        }
        let mut m = Self::zero(ring, n);
        m.values[z] = ring.reduce(1);
        Ok(m)
    }

    /// Sigma_Z, the counting measure.
    pub fn counting(ring: Ring, n: usize) -> Self {
        Self::from_values(ring, vec![1; n])
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn value(&self, z: usize) -> i64 {
        self.values[z]
    }

    /// nu(U) for a subset U.
    pub fn measure_of(&self, subset: &[usize]) -> i64 {
        self.ring.reduce(subset.iter().map(|&z| self.values[z]).sum())
    }

    pub fn total(&self) -> i64 {
        self.ring.reduce(self.values.iter().sum())
    }

    pub fn is_m0(&self) -> bool {
        self.total() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0)
    }

    fn check(&self, other: &Self) -> Result<(), MeasureError> {
        if self.ring != other.ring {
            return Err(MeasureError::RingMismatch);
        }
        if self.len() != other.len() {
            return Err(MeasureError::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, MeasureError> {
        self.check(other)?;
        Ok(Self::from_values(
            self.ring,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MeasureError> {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> Self {
        Self::from_values(self.ring, self.values.iter().map(|a| a * k).collect())
    }

    pub fn reduce_mod(&self, d: u64) -> Self {
        Self::from_values(Ring::ZMod(d), self.values.clone())
    }

    /// f_*(nu)(U) = nu(f^{-1} U) for f given by its table of images.
    pub fn pushforward(&self, f: &[usize], target_len: usize) -> Result<Self, MeasureError> {
        if f.len() != self.len() {
            return Err(MeasureError::LengthMismatch(f.len(), self.len()));
        }
        let mut out = vec![0; target_len];
        for (x, &y) in f.iter().enumerate() {
            if y >= target_len {
                return Err(MeasureError::PointOutOfRange(y, target_len));
            }
            out[y] += self.values[x];
        }
        Ok(Self::from_values(self.ring, out))
    }

    pub fn act(&self, g: &Perm) -> Result<Self, MeasureError> {
        self.pushforward(g.images(), self.len())
    }

    /// Lift a Z/d measure of total zero to a Z measure of total zero.
    pub fn lift_mod_d(&self) -> Result<Self, MeasureError> {
        let Ring::ZMod(d) = self.ring else {
            return Ok(self.clone());
        };
        if !self.is_m0() {
            return Err(MeasureError::NotInM0(self.total()));
        }
        // centred representatives, then fix the total on one coordinate
        let d = d as i64;
        let mut values: Vec<i64> = self
            .values
            .iter()
            .map(|&x| if 2 * x > d { x - d } else { x })
            .collect();
        let total: i64 = values.iter().sum();
        debug_assert_eq!(total % d, 0);
        if let Some(last) = values.last_mut() {
            *last -= total;
        }
        Ok(FiniteMeasure {
            ring: Ring::Z,
            values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    ring: String,
    values: Vec<(usize, i64)>,
}

impl Serialize for FiniteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeasureRepr {
            ring: self.ring.to_string(),
            values: self.values.iter().copied().enumerate().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = MeasureRepr::deserialize(d)?;
        let ring: Ring = repr.ring.parse().map_err(D::Error::custom)?;
        let mut values = vec![0; repr.values.len()];
        for (i, (id, v)) in repr.values.iter().enumerate() {
            if *id != i {
                return Err(D::Error::custom("point ids must be 0..n in order"));
            }
            values[i] = *v;
        }
        Ok(FiniteMeasure::from_values(ring, values))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(images: Vec<usize>) -> Result<Self, MeasureError> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(MeasureError::NotAPermutation(images));
            }
            seen[i] = true;
        }
        Ok(Perm(images))
    }

    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// (self * other)(x) = self(other(x))
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut out = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            out[j] = i;
        }
        Perm(out)
    }
}

#[derive(Clone, Debug)]
pub struct PermAction {
    n: usize,
    generators: Vec<Perm>,
}

impl PermAction {
    pub fn new(n: usize, generators: Vec<Perm>) -> Result<Self, MeasureError> {
        for g in &generators {
            if g.0.len() != n {
                return Err(MeasureError::LengthMismatch(g.0.len(), n));
            }
        }
        Ok(PermAction { n, generators })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut orbit = vec![start];
            label[start] = id;
            let mut i = 0;
            while i < orbit.len() {
                let x = orbit[i];
                for g in &self.generators {
                    let y = g.apply(x);
                    if label[y] == usize::MAX {
                        label[y] = id;
                        orbit.push(y);
                    }
                }
                i += 1;
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }

    pub fn is_transitive(&self) -> bool {
        self.orbits().len() <= 1
    }

    /// The invariant measures M(X, ring)^G, or M_0(X, ring)^G.
    pub fn invariant_submodule(&self, ring: Ring, restrict_to_m0: bool) -> InvariantGroup {
        let n = self.n;
        // rows: nu(g^{-1} x) - nu(x) = 0, and optionally sum nu = 0
        let mut rows: Vec<Vec<i128>> = Vec::new();
        for g in &self.generators {
            let ginv = g.inverse();
            for x in 0..n {
                let y = ginv.apply(x);
                if y != x {
                    let mut r = vec![0i128; n];
                    r[y] += 1;
                    r[x] -= 1;
                    rows.push(r);
                }
            }
        }
        if restrict_to_m0 {
            rows.push(vec![1; n]);
        }
        if rows.is_empty() {
            rows.push(vec![0; n]);
        }
        let s = smith(&rows, n);
        let col = |i: usize, k: i128, d: i128| -> Vec<i64> {
            (0..n)
                .map(|r| {
                    let x = s.v[r][i] * k;
                    (if d > 0 { x.rem_euclid(d) } else { x }) as i64
                })
                .collect()
        };
        let mut generators = Vec::new();
        let mut orders = Vec::new();
        for i in 0..n {
            let di = s.diag.get(i).copied().unwrap_or(0);
            match ring {
                Ring::Z => {
                    if di == 0 {
                        generators.push(FiniteMeasure::from_values(ring, col(i, 1, 0)));
                        orders.push(0);
                    }
                }
                Ring::ZMod(d) => {
                    let d = d as i128;
                    let h = gcd(di, d);
                    if h > 1 {
                        generators.push(FiniteMeasure::from_values(ring, col(i, d / h, d)));
                        orders.push(h as u64);
                    }
                }
            }
        }
        InvariantGroup {
            ring,
            generators,
            orders,
        }
    }
}

/// A subgroup of measures written as a direct sum of cyclic groups.
#[derive(Clone, Debug)]
pub struct InvariantGroup {
    pub ring: Ring,
    pub generators: Vec<FiniteMeasure>,
    /// order of each generator, 0 meaning infinite; each divides the next
    pub orders: Vec<u64>,
}

impl InvariantGroup {
    pub fn order(&self) -> Option<u64> {
        if self.orders.contains(&0) {
            None
        } else {
            Some(self.orders.iter().product())
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.orders.len() <= 1
    }

    /// All elements, for finite groups.
    pub fn elements(&self, n: usize) -> Vec<FiniteMeasure> {
        let mut out = vec![FiniteMeasure::zero(self.ring, n)];
        for (g, &k) in self.generators.iter().zip(&self.orders) {
            assert!(k > 0, "infinite group has no element list");
            out = out
                .iter()
                .flat_map(|m| (0..k as i64).map(move |j| m.add(&g.scale(j)).unwrap()))
                .collect();
        }
        out
    }
}
