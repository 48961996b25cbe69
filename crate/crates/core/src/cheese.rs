//! Discs and cheeses cut out by finite subtrees of the tree.
//!
//! An oriented edge (s, t) names the residue disc of s pointing towards t. If
//! t lies below s this is the open disc {|z - b_t| < |p|^{m_s}}, otherwise it
//! is the exterior {|z - b_s| > |p|^{m_s}}.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bttree::{act, BoundaryEdge, Center, Subtree, TreeError, Vertex};
use crate::matrix::{Mat2, Point};
use crate::measures::Perm;
use crate::padic::{ExtStructure, PadicError, PadicScalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheeseError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("point is too close to {0} to decide membership at this precision")]
    Undecided(String),
    #[error("the intersection of {0} and {1} is not a disc")]
    NotADisc(String, String),
    #[error("the map does not send Y into X: hole {0} meets no hole of Y")]
    NotContained(String),
    #[error("{0} is not a boundary edge")]
    NotBoundary(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscKind {
    Interior,
    Exterior,
}

/// Interior: {v(z - b) >= m + 1}. Exterior: {v(z - b) < m}, containing infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Disc {
    pub kind: DiscKind,
    pub m: i32,
    pub center: Center,
}

impl Disc {
    pub fn interior(p: u32, center: Center, m: i32) -> Result<Disc, CheeseError> {
        Ok(Disc {
            kind: DiscKind::Interior,
            m,
            center: center.reduce(p, m + 1)?,
        })
    }

    pub fn exterior(p: u32, center: Center, m: i32) -> Result<Disc, CheeseError> {
        Ok(Disc {
            kind: DiscKind::Exterior,
            m,
            center: center.reduce(p, m)?,
        })
    }

    /// The oriented edge (s, t) whose residue disc this is.
    pub fn edge(&self, p: u32) -> Result<BoundaryEdge, CheeseError> {
        Ok(match self.kind {
            DiscKind::Interior => BoundaryEdge {
                inside: Vertex::new(p, self.m, self.center)?,
                outside: Vertex::new(p, self.m + 1, self.center)?,
            },
            DiscKind::Exterior => BoundaryEdge {
                inside: Vertex::new(p, self.m, self.center)?,
                outside: Vertex::new(p, self.m - 1, self.center)?,
            },
        })
    }

    pub fn from_edge(p: u32, e: &BoundaryEdge) -> Result<Disc, CheeseError> {
        let (s, t) = (e.inside, e.outside);
        if t.m == s.m + 1 && t.parent(p) == s {
            Disc::interior(p, t.b, s.m)
        } else if t.m == s.m - 1 && s.parent(p) == t {
            Disc::exterior(p, s.b, s.m)
        } else {
            Err(CheeseError::NotBoundary(e.display(p)))
        }
    }

    pub fn contains_point(&self, z: &Point, ext: &ExtStructure) -> Result<bool, CheeseError> {
        let z = match z {
            Point::Infinity => return Ok(self.kind == DiscKind::Exterior),
            Point::Finite(z) => z,
        };
        let diff = z.sub(&self.center.to_padic(ext));
        let threshold = match self.kind {
            DiscKind::Interior => self.m as i64 + 1,
            DiscKind::Exterior => self.m as i64,
        };
        let v = if diff.is_exact_zero() {
            i64::MAX
        } else {
            let v = diff.valuation().unwrap();
            if diff.is_zero() && v < threshold {
                return Err(CheeseError::Undecided(self.display(ext.p())));
            }
            v
        };
        Ok(match self.kind {
            DiscKind::Interior => v >= threshold,
            DiscKind::Exterior => v < threshold,
        })
    }

    /// The closed disc complementary to an exterior disc, or the closed disc
    /// {v(z - b) >= m + 1} equal to an interior disc.
    fn closed(&self) -> (Center, i64) {
        match self.kind {
            DiscKind::Interior => (self.center, self.m as i64 + 1),
            DiscKind::Exterior => (self.center, self.m as i64),
        }
    }

    pub fn is_subset_of(&self, other: &Disc, p: u32) -> bool {
        let (b1, r1) = self.closed();
        let (b2, r2) = other.closed();
        let d = b1.valuation_of_difference(&b2, p).unwrap_or(i64::MAX);
        match (self.kind, other.kind) {
            (DiscKind::Interior, DiscKind::Interior) => r1 >= r2 && d >= r2,
            (DiscKind::Interior, DiscKind::Exterior) => d < r1.min(r2),
            (DiscKind::Exterior, DiscKind::Interior) => false,
            (DiscKind::Exterior, DiscKind::Exterior) => r2 >= r1 && d >= r1,
        }
    }

    pub fn is_disjoint_from(&self, other: &Disc, p: u32) -> bool {
        let (b1, r1) = self.closed();
        let (b2, r2) = other.closed();
        let d = b1.valuation_of_difference(&b2, p).unwrap_or(i64::MAX);
        match (self.kind, other.kind) {
            (DiscKind::Interior, DiscKind::Interior) => d < r1.min(r2),
            (DiscKind::Interior, DiscKind::Exterior) => r1 >= r2 && d >= r2,
            (DiscKind::Exterior, DiscKind::Interior) => r2 >= r1 && d >= r1,
            (DiscKind::Exterior, DiscKind::Exterior) => false,
        }
    }

    /// Intersection, when it is empty or again a disc.
    pub fn intersect(&self, other: &Disc, p: u32) -> Result<Option<Disc>, CheeseError> {
        if self.is_disjoint_from(other, p) {
            Ok(None)
        } else if self.is_subset_of(other, p) {
            Ok(Some(*self))
        } else if other.is_subset_of(self, p) {
            Ok(Some(*other))
        } else {
            Err(CheeseError::NotADisc(self.display(p), other.display(p)))
        }
    }

    pub fn display(&self, p: u32) -> String {
        let op = match self.kind {
            DiscKind::Interior => "<",
            DiscKind::Exterior => ">",
        };
        format!("|z - {}| {} |p|^{}", self.center.display(p), op, self.m)
    }
}

#[derive(Serialize)]
struct DiscJson {
    center: String,
    m: i32,
    kind: DiscKind,
}

impl Serialize for Disc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let center = if self.center.shift() == 0 {
            self.center.num().to_string()
        } else {
            format!("{}/p^{}", self.center.num(), self.center.shift())
        };
        DiscJson {
            center,
            m: self.m,
            kind: self.kind,
        }
        .serialize(s)
    }
}

/// Image of a disc under z -> (az + b)/(cz + d), computed through the tree.
pub fn mobius_disc(g: &Mat2, d: &Disc, ext: &ExtStructure) -> Result<Disc, CheeseError> {
    let e = d.edge(ext.p())?;
    let moved = BoundaryEdge {
        inside: act(g, &e.inside, ext)?,
        outside: act(g, &e.outside, ext)?,
    };
    Disc::from_edge(ext.p(), &moved)
}

/// A cheese given by its holes; when it comes from a subtree the hole list is
/// ordered like the sorted boundary N(T).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheeseRegion {
    p: u32,
    holes: Vec<Disc>,
    index: BTreeMap<Disc, usize>,
}

impl CheeseRegion {
    pub fn new(p: u32, holes: Vec<Disc>) -> CheeseRegion {
        let index = holes.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        CheeseRegion { p, holes, index }
    }

    pub fn from_subtree(t: &Subtree) -> Result<CheeseRegion, CheeseError> {
        let holes = t
            .boundary()?
            .iter()
            .map(|e| hole_of_edge(t, e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CheeseRegion::new(t.p(), holes))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn holes(&self) -> &[Disc] {
        &self.holes
    }

    pub fn len(&self) -> usize {
        self.holes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn index_of(&self, d: &Disc) -> Option<usize> {
        self.index.get(d).copied()
    }

    pub fn exterior(&self) -> Option<usize> {
        self.holes.iter().position(|d| d.kind == DiscKind::Exterior)
    }

    pub fn hole_containing(&self, z: &Point, ext: &ExtStructure) -> Result<Option<usize>, CheeseError> {
        for (i, d) in self.holes.iter().enumerate() {
            if d.contains_point(z, ext)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn contains(&self, z: &PadicScalar, ext: &ExtStructure) -> Result<bool, CheeseError> {
        Ok(self.hole_containing(&Point::Finite(*z), ext)?.is_none())
    }

    pub fn translate(&self, g: &Mat2, ext: &ExtStructure) -> Result<CheeseRegion, CheeseError> {
        let holes = self
            .holes
            .iter()
            .map(|d| mobius_disc(g, d, ext))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CheeseRegion::new(self.p, holes))
    }

    /// The hole of `self` containing a given disc.
    pub fn hole_enclosing(&self, d: &Disc) -> Option<usize> {
        self.holes.iter().position(|h| d.is_subset_of(h, self.p))
    }
}

pub fn hole_of_edge(t: &Subtree, e: &BoundaryEdge) -> Result<Disc, CheeseError> {
    if !t.contains(&e.inside) || t.contains(&e.outside) {
        return Err(CheeseError::NotBoundary(e.display(t.p())));
    }
    Disc::from_edge(t.p(), e)
}

/// The hole of Y containing phi^{-1}(D) for a hole D of X, where phi(Y) is
/// inside X.
pub fn iota_cheese(
    x: &CheeseRegion,
    y: &CheeseRegion,
    phi: &Mat2,
    d: usize,
    ext: &ExtStructure,
) -> Result<usize, CheeseError> {
    let p = x.p;
    let phi_inv = phi.inv()?;
    let pulled: Vec<Disc> = x
        .holes
        .iter()
        .map(|h| mobius_disc(&phi_inv, h, ext))
        .collect::<Result<_, _>>()?;
    for h in &pulled {
        if y.hole_enclosing(h).is_none() {
            return Err(CheeseError::NotContained(h.display(p)));
        }
    }
    Ok(y.hole_enclosing(&pulled[d]).unwrap())
}

/// Holes of the union of two overlapping cheeses: the nonempty pairwise
/// intersections of their holes.
pub fn union_holes(x: &CheeseRegion, y: &CheeseRegion) -> Result<Vec<Disc>, CheeseError> {
    let mut out = Vec::new();
    for a in &x.holes {
        for b in &y.holes {
            if let Some(c) = a.intersect(b, x.p)? {
                out.push(c);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Points of C_T over L: b + p^m (zeta^j + p r) for each vertex (m, b) of T,
/// using the exponents j whose residue lies outside F_q.
pub fn sample_points(t: &Subtree, ext: &ExtStructure, per_vertex: usize) -> Vec<PadicScalar> {
    let q2 = ext.q() * ext.q() - 1;
    let step = ext.q() + 1;
    let mut out = Vec::new();
    for v in t.vertices() {
        let b = v.b.to_padic(ext);
        let scale = ext.p_power(v.m as i64);
        let mut j = 1u64;
        let mut taken = 0;
        let mut r = 0i128;
        while taken < per_vertex {
            if !j.is_multiple_of(step) {
                let u = ext.zeta_pow(j as i64).add(&ext.int(ext.p() as i128 * r));
                out.push(b.add(&scale.mul(&u)));
                taken += 1;
            }
            j += 1;
            if j == q2 {
                j = 1;
                r += 1;
            }
        }
    }
    out
}

/// The permutation of holes induced by g, for g stabilizing the cheese.
pub fn hole_permutation(x: &CheeseRegion, g: &Mat2, ext: &ExtStructure) -> Result<Perm, CheeseError> {
    let images = x
        .holes
        .iter()
        .map(|d| {
            let img = mobius_disc(g, d, ext)?;
            x.index_of(&img)
                .ok_or_else(|| CheeseError::NotContained(img.display(x.p)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Perm::new(images).expect("holes are pairwise distinct"))
}

/// iota^X_Y on hole indices, for Y containing X.
pub fn restriction_map(x: &CheeseRegion, y: &CheeseRegion) -> Result<Vec<usize>, CheeseError> {
    x.holes
        .iter()
        .map(|d| {
            y.hole_enclosing(d)
                .ok_or_else(|| CheeseError::NotContained(d.display(x.p)))
        })
        .collect()
}
