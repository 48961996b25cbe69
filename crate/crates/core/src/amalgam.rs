//! Normal forms in G0 = A *_I B read off from the action on the tree, and
//! the norm solver used to split G0 as G0_z SL2.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bttree::{act, distance, TreeError, Vertex};
use crate::matrix::Mat2;
use crate::padic::{ExtStructure, PadicError, PadicScalar};

/// Longest word decompose will peel before giving up.
pub const MAX_WORD_LENGTH: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AmalgamError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("determinant of {0} is not a unit")]
    NotInG0(String),
    #[error("word longer than {0} factors")]
    TooLong(usize),
    #[error("leftover {0} does not lie in I")]
    NotIwahori(String),
    #[error("{0} is not a unit of Z_p")]
    NotAUnit(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// r_a = [[[a], 1], [1, 0]] for a residue a; it sends w s_0 to the child (1, a).
pub fn a_rep(ext: &ExtStructure, a: u64) -> Mat2 {
    Mat2::new(ext.teich_rep(a), ext.one(), ext.one(), ext.zero())
}

/// w r_a w^{-1} = [[0, 1/p], [p, [a]]].
pub fn b_rep(ext: &ExtStructure, a: u64) -> Mat2 {
    Mat2::new(ext.zero(), ext.p_power(-1), ext.p_power(1), ext.teich_rep(a))
}

pub fn rep(ext: &ExtStructure, side: Side, a: u64) -> Mat2 {
    match side {
        Side::A => a_rep(ext, a),
        Side::B => b_rep(ext, a),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub side: Side,
    pub digit: u64,
    pub mat: Mat2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmalgamWord {
    pub factors: Vec<Factor>,
    pub tail: Mat2,
}

impl AmalgamWord {
    pub fn from_digits(ext: &ExtStructure, first: Side, digits: &[u64], tail: Mat2) -> AmalgamWord {
        let mut side = first;
        let factors = digits
            .iter()
            .map(|&a| {
                let f = Factor {
                    side,
                    digit: a,
                    mat: rep(ext, side, a),
                };
                side = side.other();
                f
            })
            .collect();
        AmalgamWord { factors, tail }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// (side, digit) pairs, the canonical part of the word.
    pub fn signature(&self) -> Vec<(Side, u64)> {
        self.factors.iter().map(|f| (f.side, f.digit)).collect()
    }

    pub fn is_alternating(&self) -> bool {
        self.factors.windows(2).all(|w| w[0].side != w[1].side)
    }

    pub fn multiply(&self) -> Mat2 {
        self.factors
            .iter()
            .rev()
            .fold(self.tail, |acc, f| f.mat.mul(&acc))
    }
}

impl fmt::Display for AmalgamWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.factors {
            write!(f, "{:?}{} ", x.side, x.digit)?;
        }
        write!(f, "| {}", self.tail)
    }
}

/// Number of factors in the normal form of g, from the displacement of
/// the base edge.
pub fn word_length(g: &Mat2, ext: &ExtStructure) -> Result<u64, AmalgamError> {
    let p = ext.p();
    let (s0, s1) = (Vertex::BASE, Vertex::w_base());
    let d0 = distance(&s0, &act(g, &s0, ext)?, p);
    let d1 = distance(&s1, &act(g, &s1, ext)?, p);
    Ok((d0 + d1) / 2)
}

/// The digit a of a child (1, a) of s_0.
fn child_digit(v: &Vertex, p: u32) -> u64 {
    debug_assert_eq!(v.m, 1);
    (v.b.num() % p as u128) as u64
}

/// Peel canonical representatives off the left of g until what is left
/// fixes the base edge.
pub fn decompose(g: &Mat2, ext: &ExtStructure) -> Result<AmalgamWord, AmalgamError> {
    if !g.in_g0() {
        return Err(AmalgamError::NotInG0(g.to_string()));
    }
    let p = ext.p();
    let (s0, s1) = (Vertex::BASE, Vertex::w_base());
    let w = Mat2::w(ext);
    let mut rest = *g;
    let mut factors = Vec::new();
    loop {
        let (gs0, gs1) = (act(&rest, &s0, ext)?, act(&rest, &s1, ext)?);
        if gs0 == s0 && gs1 == s1 {
            break;
        }
        if factors.len() >= MAX_WORD_LENGTH {
            return Err(AmalgamError::TooLong(MAX_WORD_LENGTH));
        }
        let near0 = distance(&s0, &gs0, p).min(distance(&s0, &gs1, p));
        let near1 = distance(&s1, &gs0, p).min(distance(&s1, &gs1, p));
        let (side, base) = if near0 < near1 { (Side::A, s0) } else { (Side::B, s1) };
        let far = if distance(&base, &gs0, p) >= distance(&base, &gs1, p) {
            gs0
        } else {
            gs1
        };
        let n = base.step_toward(&far, p)?;
        let digit = match side {
            Side::A => child_digit(&n, p),
            Side::B => child_digit(&act(&w, &n, ext)?, p),
        };
        let mat = rep(ext, side, digit);
        rest = mat.inv()?.mul(&rest);
        factors.push(Factor { side, digit, mat });
    }
    if !rest.in_iwahori() {
        return Err(AmalgamError::NotIwahori(rest.to_string()));
    }
    Ok(AmalgamWord {
        factors,
        tail: rest,
    })
}

/// x in O_L^x with N(x) = t, for a unit t of Z_p.
pub fn norm_solve(t: &PadicScalar, ext: &ExtStructure) -> Result<PadicScalar, AmalgamError> {
    let t = t.to_base().map_err(|_| AmalgamError::NotAUnit(t.to_string()))?;
    if t.valuation() != Some(0) {
        return Err(AmalgamError::NotAUnit(t.to_string()));
    }
    let q = ext.q();
    // teich(t) = zeta^{(q+1) k} and N(zeta^k) = zeta^{(q+1) k}
    let idx = ext
        .teich_index(&t.teichmuller()?)
        .ok_or_else(|| AmalgamError::NotAUnit(t.to_string()))?;
    debug_assert_eq!(idx % (q + 1), 0);
    let mut x = ext.zeta_pow((idx / (q + 1)) as i64);
    // any c with tr(c) = 1
    let c = if ext.p() == 2 {
        ext.t().neg().div(&ext.int(ext.quadratic()[1] as i128))?
    } else {
        ext.int(2).inv()?.to_ext()
    };
    let one = ext.one();
    for _ in 0..64 {
        let delta = t.div(&x.norm())?.sub(&one);
        if delta.is_zero() {
            break;
        }
        x = x.mul(&one.add(&delta.mul(&c)));
    }
    Ok(x)
}

/// h in G0_z with det h = det g, so that h^{-1} g lies in SL2.
pub fn g0z_factor(g: &Mat2, ext: &ExtStructure) -> Result<(Mat2, Mat2), AmalgamError> {
    let z = ext.zeta();
    let x = norm_solve(&g.det(), ext)?;
    let (a, c) = crate::quatchar::jz_inverse(ext, &x).map_err(|_| AmalgamError::NotAUnit(x.to_string()))?;
    let h = crate::quatchar::stabilizer_and_jz(&z, &a, &c)
        .map_err(|_| AmalgamError::NotAUnit(x.to_string()))?
        .0;
    let s = h.inv()?.mul(g);
    Ok((h, s))
}
