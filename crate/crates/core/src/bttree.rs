//! The Bruhat-Tits tree of PGL_2(Q_p).
//!
//! The vertex (m, b) is the homothety class of the lattice spanned by the
//! columns of [[p^m, b], [0, 1]], with b in Q_p taken modulo p^m. In disc
//! language it is the closed disc {|z - b| <= |p|^m}.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::matrix::Mat2;
use crate::padic::{ExtStructure, PadicError, PadicScalar};

pub const DEFAULT_MAX_DEPTH: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("matrix is singular to the working precision")]
    Singular,
    #[error("center needs more digits than available (level {level})")]
    CenterOverflow { level: i32 },
    #[error("depth {depth} exceeds the configured maximum {max}")]
    TooDeep { depth: u32, max: u32 },
    #[error("vertex set is not connected")]
    NotConnected,
    #[error("subtree is not contained in the larger tree")]
    NotNested,
    #[error("edge is not a boundary edge of the subtree")]
    NotBoundary,
    #[error("generator {generator} moves edge {edge} out of the set")]
    NotStabilizing { generator: usize, edge: String },
}

/// b = num * p^{-shift}, reduced modulo p^m for the level m of its vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Center {
    num: u128,
    shift: u32,
}

const CENTER_LIMIT: u128 = 1 << 120;

impl Center {
    pub const ZERO: Center = Center { num: 0, shift: 0 };

    fn normalized(p: u32, mut num: u128, mut shift: u32) -> Center {
        if num == 0 {
            return Center::ZERO;
        }
        while shift > 0 && num.is_multiple_of(p as u128) {
            num /= p as u128;
            shift -= 1;
        }
        Center { num, shift }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    /// Reduce mod p^m.
    pub fn reduce(&self, p: u32, m: i32) -> Result<Center, TreeError> {
        let top = m + self.shift as i32;
        if top <= 0 {
            return Ok(Center::ZERO);
        }
        let modulus = pow_u128(p, top as u32).ok_or(TreeError::CenterOverflow { level: m })?;
        Ok(Self::normalized(p, self.num % modulus, self.shift))
    }

    /// The integer represented when shift = 0, e.g. a residue.
    pub fn from_int(p: u32, n: u128) -> Center {
        Self::normalized(p, n, 0)
    }

    /// Add j * p^e.
    pub fn add_digit(&self, p: u32, j: u64, e: i32) -> Result<Center, TreeError> {
        if j == 0 {
            return Ok(*self);
        }
        let shift = self.shift.max((-e).max(0) as u32);
        let lift = pow_u128(p, shift - self.shift).ok_or(TreeError::CenterOverflow { level: e })?;
        let unit = pow_u128(p, (e + shift as i32) as u32).ok_or(TreeError::CenterOverflow { level: e })?;
        let num = self
            .num
            .checked_mul(lift)
            .and_then(|x| x.checked_add(j as u128 * unit))
            .filter(|&x| x < CENTER_LIMIT)
            .ok_or(TreeError::CenterOverflow { level: e })?;
        Ok(Self::normalized(p, num, shift))
    }

    /// Reduce x in Q_p modulo p^m; needs x known to absolute precision m.
    pub fn from_padic(x: &PadicScalar, m: i32) -> Result<Center, TreeError> {
        let x = x.to_base()?;
        let p = x.p();
        if x.is_exact_zero() {
            return Ok(Center::ZERO);
        }
        if x.abs_precision() < m as i64 {
            return Err(PadicError::PrecisionExhausted {
                p,
                bound: x.abs_precision(),
            }
            .into());
        }
        let v = x.valuation().unwrap();
        if x.is_zero() || v >= m as i64 {
            return Ok(Center::ZERO);
        }
        let v = v as i32;
        let shift = (-v).max(0) as u32;
        let digits = (m - v) as u32;
        let unit = x.unit_part()[0] as u128 % pow_u128(p, digits).ok_or(TreeError::CenterOverflow { level: m })?;
        let scale = pow_u128(p, (v + shift as i32) as u32).ok_or(TreeError::CenterOverflow { level: m })?;
        let num = unit
            .checked_mul(scale)
            .filter(|&x| x < CENTER_LIMIT)
            .ok_or(TreeError::CenterOverflow { level: m })?;
        Ok(Self::normalized(p, num, shift))
    }

    pub fn to_padic(&self, ext: &ExtStructure) -> PadicScalar {
        if self.num == 0 {
            return ext.zero();
        }
        ext.int(self.num as i128).mul(&ext.p_power(-(self.shift as i64)))
    }

    /// v_p(self - other), or None when they are equal.
    pub fn valuation_of_difference(&self, other: &Center, p: u32) -> Option<i64> {
        let s = self.shift.max(other.shift);
        let a = self.num as i128 * pow_u128(p, s - self.shift).unwrap() as i128;
        let b = other.num as i128 * pow_u128(p, s - other.shift).unwrap() as i128;
        let mut d = a - b;
        if d == 0 {
            return None;
        }
        let mut v = 0i64;
        while d % p as i128 == 0 {
            d /= p as i128;
            v += 1;
        }
        Some(v - s as i64)
    }

    pub fn display(&self, p: u32) -> String {
        if self.shift == 0 {
            self.num.to_string()
        } else {
            format!("{}/{}^{}", self.num, p, self.shift)
        }
    }
}

fn pow_u128(p: u32, k: u32) -> Option<u128> {
    (p as u128).checked_pow(k).filter(|&x| x < CENTER_LIMIT)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub m: i32,
    pub b: Center,
}

impl Vertex {
    pub const BASE: Vertex = Vertex {
        m: 0,
        b: Center::ZERO,
    };

    pub fn new(p: u32, m: i32, b: Center) -> Result<Vertex, TreeError> {
        Ok(Vertex {
            m,
            b: b.reduce(p, m)?,
        })
    }

    /// w s_0 = [[0, 1], [p, 0]] s_0, the disc {|z| <= p}.
    pub fn w_base() -> Vertex {
        Vertex {
            m: -1,
            b: Center::ZERO,
        }
    }

    pub fn parent(&self, p: u32) -> Vertex {
        Vertex {
            m: self.m - 1,
            b: self.b.reduce(p, self.m - 1).expect("reduction only shrinks"),
        }
    }

    pub fn children(&self, p: u32) -> Result<Vec<Vertex>, TreeError> {
        (0..p as u64)
            .map(|j| {
                Ok(Vertex {
                    m: self.m + 1,
                    b: self.b.add_digit(p, j, self.m)?,
                })
            })
            .collect()
    }

    pub fn neighbours(&self, p: u32) -> Result<Vec<Vertex>, TreeError> {
        let mut out = vec![self.parent(p)];
        out.extend(self.children(p)?);
        Ok(out)
    }

    /// Whether self's disc contains other's disc.
    pub fn is_ancestor_of(&self, other: &Vertex, p: u32) -> bool {
        other.m >= self.m
            && other
                .b
                .valuation_of_difference(&self.b, p)
                .is_none_or(|v| v >= self.m as i64)
    }

    /// The neighbour of self on the path to target (self != target).
    pub fn step_toward(&self, target: &Vertex, p: u32) -> Result<Vertex, TreeError> {
        if self.m < target.m && self.is_ancestor_of(target, p) {
            Ok(Vertex {
                m: self.m + 1,
                b: target.b.reduce(p, self.m + 1)?,
            })
        } else {
            Ok(self.parent(p))
        }
    }

    pub fn lattice(&self, ext: &ExtStructure) -> Mat2 {
        Mat2::new(
            ext.p_power(self.m as i64),
            self.b.to_padic(ext),
            ext.zero(),
            ext.one(),
        )
    }

    pub fn display(&self, p: u32) -> String {
        format!("({}, {})", self.m, self.b.display(p))
    }
}

/// Tree distance by the disc model: climb to the smallest common disc.
pub fn distance(v1: &Vertex, v2: &Vertex, p: u32) -> u64 {
    let mut k = v1.m.min(v2.m) as i64;
    if let Some(v) = v1.b.valuation_of_difference(&v2.b, p) {
        k = k.min(v);
    }
    (v1.m as i64 + v2.m as i64 - 2 * k) as u64
}

/// Tree distance from the elementary divisors of M1^{-1} M2.
pub fn lattice_distance(v1: &Vertex, v2: &Vertex, ext: &ExtStructure) -> Result<u64, TreeError> {
    let t = v1.lattice(ext).inv()?.mul(&v2.lattice(ext));
    let e1 = t
        .entries()
        .iter()
        .filter_map(|x| if x.is_zero() { None } else { x.valuation() })
        .min()
        .ok_or(TreeError::Singular)?;
    let dv = t.det().valuation().ok_or(TreeError::Singular)?;
    Ok((dv - 2 * e1) as u64)
}

/// g . v via column Hermite reduction of g [[p^m, b], [0, 1]].
pub fn act(g: &Mat2, v: &Vertex, ext: &ExtStructure) -> Result<Vertex, TreeError> {
    let l = g.mul(&v.lattice(ext));
    let (mut c1, mut c2) = ((l.a, l.c), (l.b, l.d));
    let val = |x: &PadicScalar| {
        if x.is_zero() {
            i64::MAX
        } else {
            x.valuation().unwrap()
        }
    };
    if val(&c1.1) < val(&c2.1) {
        std::mem::swap(&mut c1, &mut c2);
    }
    let z = c2.1;
    if z.is_zero() {
        return Err(TreeError::Singular);
    }
    let top = if c1.1.is_zero() {
        c1.0
    } else {
        let r = c1.1.div(&z)?;
        c1.0.sub(&r.mul(&c2.0))
    };
    if top.is_zero() {
        return Err(TreeError::Singular);
    }
    let m = top.valuation().unwrap() - z.valuation().unwrap();
    let b = c2.0.div(&z)?;
    let m = i32::try_from(m).map_err(|_| TreeError::CenterOverflow { level: i32::MAX })?;
    Ok(Vertex {
        m,
        b: Center::from_padic(&b, m)?,
    })
}

/// A boundary edge of a subtree T: `inside` is s_T(e), `outside` is t_T(e).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryEdge {
    pub inside: Vertex,
    pub outside: Vertex,
}

impl BoundaryEdge {
    /// The underlying unoriented edge, as (parent, child).
    pub fn edge(&self) -> (Vertex, Vertex) {
        if self.inside.m < self.outside.m {
            (self.inside, self.outside)
        } else {
            (self.outside, self.inside)
        }
    }

    pub fn display(&self, p: u32) -> String {
        format!("{}->{}", self.inside.display(p), self.outside.display(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BallCenter {
    Base,
    BaseEdge,
}

/// A finite subtree given by its vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtree {
    p: u32,
    vertices: BTreeSet<Vertex>,
}

impl Subtree {
    pub fn new(p: u32, vertices: impl IntoIterator<Item = Vertex>) -> Result<Subtree, TreeError> {
        let t = Subtree {
            p,
            vertices: vertices.into_iter().collect(),
        };
        if !t.is_connected() {
            return Err(TreeError::NotConnected);
        }
        Ok(t)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([*start]);
        let mut queue = VecDeque::from([*start]);
        while let Some(v) = queue.pop_front() {
            for u in v.neighbours(self.p).unwrap_or_default() {
                if self.vertices.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    pub fn vertices(&self) -> &BTreeSet<Vertex> {
        &self.vertices
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.vertices.contains(v)
    }

    pub fn is_subtree_of(&self, other: &Subtree) -> bool {
        self.vertices.is_subset(&other.vertices)
    }

    /// Edges as (parent, child) pairs.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        self.vertices
            .iter()
            .filter(|v| self.vertices.contains(&v.parent(self.p)))
            .map(|v| (v.parent(self.p), *v))
            .collect()
    }

    /// N(T), sorted.
    pub fn boundary(&self) -> Result<Vec<BoundaryEdge>, TreeError> {
        let mut out = Vec::new();
        for v in &self.vertices {
            for u in v.neighbours(self.p)? {
                if !self.vertices.contains(&u) {
                    out.push(BoundaryEdge {
                        inside: *v,
                        outside: u,
                    });
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn union(&self, other: &Subtree) -> Result<Subtree, TreeError> {
        Subtree::new(self.p, self.vertices.union(&other.vertices).copied())
    }

    pub fn intersection(&self, other: &Subtree) -> Result<Subtree, TreeError> {
        Subtree::new(self.p, self.vertices.intersection(&other.vertices).copied())
    }

    pub fn translate(&self, g: &Mat2, ext: &ExtStructure) -> Result<Subtree, TreeError> {
        let vs = self
            .vertices
            .iter()
            .map(|v| act(g, v, ext))
            .collect::<Result<Vec<_>, _>>()?;
        Subtree::new(self.p, vs)
    }

    /// iota from N(self) to N(smaller): the boundary edge of `smaller` reached
    /// from t(e) without meeting `smaller` earlier.
    pub fn iota(&self, smaller: &Subtree, e: &BoundaryEdge) -> Result<BoundaryEdge, TreeError> {
        if !smaller.is_subtree_of(self) {
            return Err(TreeError::NotNested);
        }
        if !self.contains(&e.inside) || self.contains(&e.outside) {
            return Err(TreeError::NotBoundary);
        }
        iota_into(smaller, &e.outside)
    }
}

/// The boundary edge of `t` whose outer vertex is the last vertex before `t`
/// on the path from `start` (not in t) to t.
pub fn iota_into(t: &Subtree, start: &Vertex) -> Result<BoundaryEdge, TreeError> {
    let target = *t.vertices.first().ok_or(TreeError::NotNested)?;
    let mut prev = *start;
    loop {
        let next = prev.step_toward(&target, t.p)?;
        if t.contains(&next) {
            return Ok(BoundaryEdge {
                inside: next,
                outside: prev,
            });
        }
        prev = next;
    }
}

fn bfs_ball(p: u32, centers: &[Vertex], n: u32) -> Result<BTreeSet<Vertex>, TreeError> {
    let mut dist: BTreeMap<Vertex, u32> = centers.iter().map(|c| (*c, 0)).collect();
    let mut queue: VecDeque<Vertex> = centers.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == n {
            continue;
        }
        for u in v.neighbours(p)? {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(u) {
                e.insert(d + 1);
                queue.push_back(u);
            }
        }
    }
    Ok(dist.into_keys().collect())
}

/// T_n or S_n together with how it was built.
#[derive(Clone, Debug)]
pub struct BallTree {
    pub center: BallCenter,
    pub radius: u32,
    pub tree: Subtree,
}

impl BallTree {
    /// T_n: vertices within n of s_0.
    pub fn ball(p: u32, n: u32, max_depth: u32) -> Result<BallTree, TreeError> {
        if n > max_depth {
            return Err(TreeError::TooDeep {
                depth: n,
                max: max_depth,
            });
        }
        Ok(BallTree {
            center: BallCenter::Base,
            radius: n,
            tree: Subtree {
                p,
                vertices: bfs_ball(p, &[Vertex::BASE], n)?,
            },
        })
    }

    /// S_n: vertices within n of s_0 or of w s_0.
    pub fn double_ball(p: u32, n: u32, max_depth: u32) -> Result<BallTree, TreeError> {
        if n > max_depth {
            return Err(TreeError::TooDeep {
                depth: n,
                max: max_depth,
            });
        }
        Ok(BallTree {
            center: BallCenter::BaseEdge,
            radius: n,
            tree: Subtree {
                p,
                vertices: bfs_ball(p, &[Vertex::BASE, Vertex::w_base()], n)?,
            },
        })
    }

    pub fn boundary(&self) -> Result<Vec<BoundaryEdge>, TreeError> {
        self.tree.boundary()
    }
}

/// Generators used for GL_2(O): unipotents, Teichmuller diagonals, Weyl element.
pub fn gl2o_generators(ext: &ExtStructure) -> Vec<Mat2> {
    let one = ext.one();
    let zero = ext.zero();
    let g = primitive_teich(ext);
    vec![
        Mat2::new(one, one, zero, one),
        Mat2::new(one, zero, one, one),
        Mat2::diag(g, one),
        Mat2::diag(one, g),
        Mat2::new(zero, one, one, zero),
    ]
}

/// Generators used for the Iwahori subgroup: as above with the lower unipotent
/// scaled by p and no Weyl element.
pub fn iwahori_generators(ext: &ExtStructure) -> Vec<Mat2> {
    let one = ext.one();
    let zero = ext.zero();
    let g = primitive_teich(ext);
    vec![
        Mat2::new(one, one, zero, one),
        Mat2::new(one, zero, ext.int(ext.p() as i128), one),
        Mat2::diag(g, one),
        Mat2::diag(one, g),
    ]
}

/// A generator of mu_{q-1} in Z_p.
pub fn primitive_teich(ext: &ExtStructure) -> PadicScalar {
    let q = ext.q() as i64;
    ext.zeta_pow(q + 1).to_base().expect("zeta^{q+1} lies in Q_p")
}

/// Orbits of the group generated by `generators` on a set of boundary edges.
pub fn orbits(
    generators: &[Mat2],
    edges: &[BoundaryEdge],
    ext: &ExtStructure,
) -> Result<Vec<Vec<BoundaryEdge>>, TreeError> {
    let index: BTreeMap<(Vertex, Vertex), usize> =
        edges.iter().enumerate().map(|(i, e)| (e.edge(), i)).collect();
    let p = ext.p();
    let mut image = vec![vec![0usize; edges.len()]; generators.len()];
    for (gi, g) in generators.iter().enumerate() {
        for (i, e) in edges.iter().enumerate() {
            let moved = BoundaryEdge {
                inside: act(g, &e.inside, ext)?,
                outside: act(g, &e.outside, ext)?,
            };
            image[gi][i] = *index.get(&moved.edge()).ok_or_else(|| TreeError::NotStabilizing {
                generator: gi,
                edge: e.display(p),
            })?;
        }
    }
    let mut label = vec![usize::MAX; edges.len()];
    let mut out = Vec::new();
    for start in 0..edges.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        label[start] = id;
        let mut orbit = vec![start];
        let mut i = 0;
        while i < orbit.len() {
            for img in &image {
                let y = img[orbit[i]];
                if label[y] == usize::MAX {
                    label[y] = id;
                    orbit.push(y);
                }
            }
            i += 1;
        }
        orbit.sort_unstable();
        out.push(orbit.into_iter().map(|i| edges[i]).collect());
    }
    Ok(out)
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}/p^{})", self.m, self.b.num, self.b.shift)
    }
}
