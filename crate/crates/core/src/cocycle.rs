//! 1-cocycles with values in units, for the convention
//! alpha(gh) = (g . alpha(h)) alpha(g) and (g . u)(z) = u(g^{-1} z).

use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::amalgam::{decompose, AmalgamError, Side};
use crate::bttree::{BallTree, Subtree, TreeError};
use crate::cheese::{CheeseError, CheeseRegion};
use crate::matrix::{Mat2, Point};
use crate::measures::{FiniteMeasure, MeasureError, Ring};
use crate::padic::{ExtStructure, PadicError, PadicScalar};
use crate::unitcalc::{UnitClass, UnitError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CocycleError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Cheese(#[from] CheeseError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Amalgam(#[from] AmalgamError),
    #[error("{0} is not in GL2(O)")]
    NotInA(String),
    #[error("{0} does not fix the point")]
    NotStabilizer(String),
    #[error("root cocycles have no rational class")]
    NotRational,
    #[error("{0} is divisible by p")]
    DivisibleByP(u64),
    #[error("eta(g)(z) / eta(g)(z0) - 1 has valuation {valuation} at g = {g}, z = {z}")]
    NotSmall { g: String, z: String, valuation: i64 },
    #[error("cocycles disagree on I at g = {g}, z = {z}")]
    IwahoriMismatch { g: String, z: String },
}

/// A symbolic cocycle, evaluated lazily at (g, z).
#[derive(Clone, Debug, PartialEq)]
pub enum CocycleData {
    Trivial,
    /// g -> a - c x
    J,
    /// g -> (g . u) / u
    Cob(UnitClass),
    /// g -> teich(det g)^k
    Chi(i64),
    Pow(Box<CocycleData>, i64),
    Product(Vec<CocycleData>),
    /// pointwise principal root of a cocycle with values in 1 + pO
    Root(Box<CocycleData>, u64),
    /// b -> w . alpha(w^{-1} b w)
    WConj(Box<CocycleData>),
    /// glued along the normal form in A *_I B
    Amalgam(Box<CocycleData>, Box<CocycleData>),
}

pub fn j_cocycle() -> CocycleData {
    CocycleData::J
}

pub fn coboundary(u: UnitClass) -> CocycleData {
    if u.is_constant() {
        CocycleData::Trivial
    } else {
        CocycleData::Cob(u)
    }
}

pub fn character_twist(k: i64) -> CocycleData {
    if k == 0 {
        CocycleData::Trivial
    } else {
        CocycleData::Chi(k)
    }
}

/// The class of a - c x for g in GL2(O).
pub fn j_eval(g: &Mat2) -> Result<UnitClass, CocycleError> {
    if !g.in_gl2_o() {
        return Err(CocycleError::NotInA(g.to_string()));
    }
    Ok(j_class(g))
}

fn j_class(g: &Mat2) -> UnitClass {
    if g.c.is_zero() {
        UnitClass::constant(g.a)
    } else {
        UnitClass::from_factors(g.c.neg(), [(g.a.div(&g.c).expect("nonzero"), 1)])
    }
}

fn teich_det(g: &Mat2, k: i64) -> Result<PadicScalar, CocycleError> {
    Ok(g.det().teichmuller()?.pow(k)?)
}

impl CocycleData {
    pub fn pow(&self, k: i64) -> CocycleData {
        match (self, k) {
            (_, 0) | (CocycleData::Trivial, _) => CocycleData::Trivial,
            (_, 1) => self.clone(),
            _ => CocycleData::Pow(Box::new(self.clone()), k),
        }
    }

    pub fn mul(&self, other: &CocycleData) -> CocycleData {
        let mut parts = Vec::new();
        for c in [self, other] {
            match c {
                CocycleData::Trivial => {}
                CocycleData::Product(v) => parts.extend(v.iter().cloned()),
                c => parts.push(c.clone()),
            }
        }
        match parts.len() {
            0 => CocycleData::Trivial,
            1 => parts.pop().unwrap(),
            _ => CocycleData::Product(parts),
        }
    }

    pub fn root(&self, degree: u64) -> CocycleData {
        CocycleData::Root(Box::new(self.clone()), degree)
    }

    pub fn w_conjugate(&self) -> CocycleData {
        CocycleData::WConj(Box::new(self.clone()))
    }

    pub fn amalgam(a: CocycleData, b: CocycleData) -> CocycleData {
        CocycleData::Amalgam(Box::new(a), Box::new(b))
    }

    /// alpha(g)(z).
    pub fn point_eval(
        &self,
        g: &Mat2,
        z: &PadicScalar,
        ext: &ExtStructure,
    ) -> Result<PadicScalar, CocycleError> {
        let one = ext.one().to_ext();
        Ok(match self {
            CocycleData::Trivial => one,
            CocycleData::J => g.a.sub(&g.c.mul(z)),
            CocycleData::Cob(u) => {
                let hz = finite(g.inv()?.mobius(&Point::Finite(*z))?)?;
                u.evaluate(&hz)?.div(&u.evaluate(z)?)?
            }
            CocycleData::Chi(k) => teich_det(g, *k)?.to_ext(),
            CocycleData::Pow(c, k) => c.point_eval(g, z, ext)?.pow(*k)?,
            CocycleData::Product(v) => {
                let mut acc = one;
                for c in v {
                    acc = acc.mul(&c.point_eval(g, z, ext)?);
                }
                acc
            }
            CocycleData::Root(c, m) => c.point_eval(g, z, ext)?.root_small_unit(*m)?,
            CocycleData::WConj(c) => {
                let w = Mat2::w(ext);
                let wi = w.inv()?;
                let inner = wi.mul(g).mul(&w);
                let wz = finite(wi.mobius(&Point::Finite(*z))?)?;
                c.point_eval(&inner, &wz, ext)?
            }
            CocycleData::Amalgam(a, b) => {
                let word = decompose(g, ext)?;
                let mut acc = one;
                let mut zc = *z;
                for f in &word.factors {
                    let c = match f.side {
                        Side::A => a,
                        Side::B => b,
                    };
                    acc = acc.mul(&c.point_eval(&f.mat, &zc, ext)?);
                    zc = finite(f.mat.inv()?.mobius(&Point::Finite(zc))?)?;
                }
                acc.mul(&a.point_eval(&word.tail, &zc, ext)?)
            }
        })
    }

    /// alpha(g) as a unit class, where that makes sense.
    pub fn class_eval(&self, g: &Mat2, ext: &ExtStructure) -> Result<UnitClass, CocycleError> {
        Ok(match self {
            CocycleData::Trivial => UnitClass::one(ext),
            CocycleData::J => j_class(g),
            CocycleData::Cob(u) => u.pullback(g, ext)?.mul(&u.inv()?),
            CocycleData::Chi(k) => UnitClass::constant(teich_det(g, *k)?),
            CocycleData::Pow(c, k) => c.class_eval(g, ext)?.pow(*k)?,
            CocycleData::Product(v) => {
                let mut acc = UnitClass::one(ext);
                for c in v {
                    acc = acc.mul(&c.class_eval(g, ext)?);
                }
                acc
            }
            CocycleData::Root(..) => return Err(CocycleError::NotRational),
            CocycleData::WConj(c) => {
                let w = Mat2::w(ext);
                let inner = w.inv()?.mul(g).mul(&w);
                c.class_eval(&inner, ext)?.pullback(&w, ext)?
            }
            CocycleData::Amalgam(a, b) => {
                let word = decompose(g, ext)?;
                let mut acc = UnitClass::one(ext);
                let mut prefix = Mat2::identity(ext);
                for f in &word.factors {
                    let c = match f.side {
                        Side::A => a,
                        Side::B => b,
                    };
                    acc = acc.mul(&c.class_eval(&f.mat, ext)?.pullback(&prefix, ext)?);
                    prefix = prefix.mul(&f.mat);
                }
                acc.mul(&a.class_eval(&word.tail, ext)?.pullback(&prefix, ext)?)
            }
        })
    }
}

fn finite(p: Point) -> Result<PadicScalar, CocycleError> {
    match p {
        Point::Finite(x) => Ok(x),
        Point::Infinity => Err(UnitError::PointInHole("oo".into()).into()),
    }
}

impl fmt::Display for CocycleData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CocycleData::Trivial => write!(f, "1"),
            CocycleData::J => write!(f, "J"),
            CocycleData::Cob(u) => write!(f, "COB({u})"),
            CocycleData::Chi(k) => write!(f, "CHI({k})"),
            CocycleData::Pow(c, k) => write!(f, "({c})^{k}"),
            CocycleData::Product(v) => {
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            CocycleData::Root(c, m) => write!(f, "ROOT({c}, {m})"),
            CocycleData::WConj(c) => write!(f, "W({c})"),
            CocycleData::Amalgam(a, b) => write!(f, "AMALGAM({a}; {b})"),
        }
    }
}

/// Digits to which alpha(g1 g2)(z) and alpha(g2)(g1^{-1} z) alpha(g1)(z) agree.
pub fn cocycle_defect(
    alpha: &CocycleData,
    g1: &Mat2,
    g2: &Mat2,
    z: &PadicScalar,
    ext: &ExtStructure,
) -> Result<i64, CocycleError> {
    let lhs = alpha.point_eval(&g1.mul(g2), z, ext)?;
    let z1 = finite(g1.inv()?.mobius(&Point::Finite(*z))?)?;
    let rhs = alpha.point_eval(g2, &z1, ext)?.mul(&alpha.point_eval(g1, z, ext)?);
    Ok(lhs.agreement(&rhs))
}

/// Group elements and points at which cocycles are checked.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub group: Vec<Mat2>,
    pub points: Vec<PadicScalar>,
}

/// Unipotents, Teichmuller diagonals and the Weyl element of GL2(O).
pub fn structured_elements(ext: &ExtStructure) -> Vec<Mat2> {
    let p = ext.p() as i128;
    let mut out = vec![
        Mat2::from_ints(ext, [1, 1, 0, 1]),
        Mat2::from_ints(ext, [1, 0, 1, 1]),
        Mat2::from_ints(ext, [1, 0, p, 1]),
        Mat2::from_ints(ext, [0, 1, 1, 0]),
        Mat2::from_ints(ext, [1, 0, 0, -1]),
    ];
    if ext.p() > 2 {
        let r = ext.teich_rep(2);
        out.push(Mat2::diag(r, ext.one()));
        out.push(Mat2::diag(ext.one(), r));
    }
    out
}

/// A random point of the cheese of t away from its holes: b + p^m (zeta^j + p r).
pub fn random_point<R: Rng>(t: &Subtree, ext: &ExtStructure, rng: &mut R) -> PadicScalar {
    let vs: Vec<_> = t.vertices().iter().copied().collect();
    let v = vs[rng.gen_range(0..vs.len())];
    let q = ext.q();
    let j = loop {
        let j = rng.gen_range(1..q * q - 1);
        if j % (q + 1) != 0 {
            break j;
        }
    };
    let u = ext
        .zeta_pow(j as i64)
        .add(&ext.int(ext.p() as i128).mul(&ext.random_integer(rng)));
    v.b.to_padic(ext).add(&ext.p_power(v.m as i64).mul(&u))
}

impl SampleGrid {
    pub fn random<R: Rng>(
        t: &Subtree,
        ext: &ExtStructure,
        group_count: usize,
        point_count: usize,
        rng: &mut R,
    ) -> SampleGrid {
        let mut group = structured_elements(ext);
        while group.len() < group_count {
            group.push(Mat2::random_gl2o(ext, rng));
        }
        let points = (0..point_count).map(|_| random_point(t, ext, rng)).collect();
        SampleGrid { group, points }
    }
}

/// Outcome of the small-unit check of step 4.
#[derive(Clone, Debug, Serialize)]
pub struct Step4Report {
    pub checked: usize,
    pub min_valuation: Option<i64>,
}

/// Everything produced while building alpha on Omega_n.
#[derive(Clone, Debug)]
pub struct AlphaBuild {
    pub n: u32,
    pub d: u64,
    pub e: u64,
    pub tree: Subtree,
    pub cheese: CheeseRegion,
    pub nu: FiniteMeasure,
    pub u: UnitClass,
    pub beta: CocycleData,
    pub eta: CocycleData,
    pub alpha: CocycleData,
    pub step4: Step4Report,
}

impl AlphaBuild {
    pub fn de(&self) -> u64 {
        self.d * self.e
    }

    pub fn q_pow_n(&self, ext: &ExtStructure) -> i64 {
        (ext.q() as i64).pow(self.n)
    }
}

/// nu = |h(Omega_n)| delta_oo - Sigma, u with mu(u) = nu, beta = j^{q^n},
/// eta = delta(u) beta^{-d}, gamma = (eta^e)^{1/de} and alpha = gamma beta.
pub fn build_alpha(
    ext: &ExtStructure,
    n: u32,
    grid: &SampleGrid,
) -> Result<AlphaBuild, CocycleError> {
    let q = ext.q();
    let (d, e) = (q + 1, q - 1);
    let tree = BallTree::ball(ext.p(), n, crate::bttree::DEFAULT_MAX_DEPTH)?.tree;
    let cheese = CheeseRegion::from_subtree(&tree)?;
    let h = cheese.len();
    let inf = cheese.exterior().expect("balls have an exterior hole");
    let mut values = vec![-1i64; h];
    values[inf] += h as i64;
    let nu = FiniteMeasure::from_values(Ring::Z, values);
    let u = UnitClass::from_measure(&cheese, &nu, ext)?;
    let qn = (q as i64).pow(n);
    let beta = j_cocycle().pow(qn);
    let eta = coboundary(u.clone()).mul(&beta.pow(-(d as i64)));
    let z0 = ext.zeta();
    let mut min_valuation: Option<i64> = None;
    let mut checked = 0;
    for g in &grid.group {
        let base = eta.point_eval(g, &z0, ext)?;
        for z in &grid.points {
            let dev = eta.point_eval(g, z, ext)?.div(&base)?.sub(&ext.one());
            checked += 1;
            if dev.is_zero() {
                continue;
            }
            let v = dev.valuation().unwrap();
            if v < 1 {
                return Err(CocycleError::NotSmall {
                    g: g.to_string(),
                    z: z.to_string(),
                    valuation: v,
                });
            }
            min_valuation = Some(min_valuation.map_or(v, |m| m.min(v)));
        }
    }
    let gamma = eta.pow(e as i64).root(d * e);
    let alpha = gamma.mul(&beta);
    Ok(AlphaBuild {
        n,
        d,
        e,
        tree,
        cheese,
        nu,
        u,
        beta,
        eta,
        alpha,
        step4: Step4Report {
            checked,
            min_valuation,
        },
    })
}

/// Digits to which alpha(g)(z)^{de} and delta(u^e)(g)(z) agree.
pub fn z_membership_defect(
    alpha: &CocycleData,
    u: &UnitClass,
    d: u64,
    e: u64,
    g: &Mat2,
    z: &PadicScalar,
    ext: &ExtStructure,
) -> Result<i64, CocycleError> {
    let lhs = alpha.point_eval(g, z, ext)?.pow((d * e) as i64)?;
    let rhs = coboundary(u.pow(e as i64)?).point_eval(g, z, ext)?;
    Ok(lhs.agreement(&rhs))
}

/// teich(alpha(g)(z)) for g in GL2(O) fixing z.
pub fn phi_z(
    alpha: &CocycleData,
    g: &Mat2,
    z: &PadicScalar,
    ext: &ExtStructure,
) -> Result<PadicScalar, CocycleError> {
    if !g.in_gl2_o() {
        return Err(CocycleError::NotInA(g.to_string()));
    }
    let gz = finite(g.mobius(&Point::Finite(*z))?)?;
    let digits = (ext.precision() as i64 - 4).max(1);
    if !gz.agrees(z, digits) {
        return Err(CocycleError::NotStabilizer(g.to_string()));
    }
    Ok(alpha.point_eval(g, z, ext)?.teichmuller()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Trivial,
    Nontrivial,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrivialityReport {
    pub decision: Decision,
    pub reason: String,
}

/// Decide whether (u, d, alpha) is trivial: mu(u) must vanish mod d, and
/// then alpha must equal delta(v) for the v with u / v^d constant.
pub fn triviality_decision(
    alpha: &CocycleData,
    u: &UnitClass,
    d: u64,
    e: u64,
    x: &CheeseRegion,
    grid: &SampleGrid,
    ext: &ExtStructure,
) -> Result<TrivialityReport, CocycleError> {
    let p = ext.p() as u64;
    if (d * e).is_multiple_of(p) {
        return Err(CocycleError::DivisibleByP(d * e));
    }
    let mu = u.mu(x, ext)?;
    if !mu.reduce_mod(d).is_zero() {
        return Ok(TrivialityReport {
            decision: Decision::Nontrivial,
            reason: format!("mu(u) = {:?} is not divisible by {d}", mu.values()),
        });
    }
    let inconclusive = |why: String| TrivialityReport {
        decision: Decision::Inconclusive,
        reason: why,
    };
    let quotient = FiniteMeasure::from_values(Ring::Z, mu.values().iter().map(|v| v / d as i64).collect());
    let v0 = UnitClass::from_measure(x, &quotient, ext)?;
    // u / v0^d = lambda s with s small; v = v0 s^{1/d}
    let ratio = u.mul(&v0.pow(-(d as i64))?);
    let z0 = ext.zeta();
    let base = ratio.evaluate(&z0)?;
    let v_at = |z: &PadicScalar| -> Result<PadicScalar, CocycleError> {
        let s = ratio.evaluate(z)?.div(&base)?;
        Ok(v0.evaluate(z)?.mul(&s.root_small_unit(d)?))
    };
    let threshold = (ext.precision() as i64 - 8).max(2);
    for g in &grid.group {
        let h = g.inv()?;
        for z in &grid.points {
            let attempt = (|| -> Result<(PadicScalar, PadicScalar), CocycleError> {
                let hz = finite(h.mobius(&Point::Finite(*z))?)?;
                let a = alpha.point_eval(g, z, ext)?;
                Ok((a, v_at(&hz)?.div(&v_at(z)?)?))
            })();
            let (a, dv) = match attempt {
                Ok(pair) => pair,
                Err(err) => return Ok(inconclusive(format!("evaluation failed: {err}"))),
            };
            let agree = a.agreement(&dv);
            if agree >= threshold {
                continue;
            }
            let available = a.precision().min(dv.precision()) as i64;
            if available < threshold {
                return Ok(inconclusive(format!("only {available} digits at g = {g}")));
            }
            return Ok(TrivialityReport {
                decision: Decision::Nontrivial,
                reason: format!("alpha differs from delta(v) at g = {g}, z = {z} ({agree} digits)"),
            });
        }
    }
    Ok(TrivialityReport {
        decision: Decision::Trivial,
        reason: format!("alpha = delta(v) with mu(v) = {:?}", quotient.values()),
    })
}

/// The cocycle on G0 glued from c_A on A and c_B on B, after checking that
/// they agree on the sampled elements of I.
pub fn extend_cocycle(
    c_a: &CocycleData,
    c_b: &CocycleData,
    iwahori: &[Mat2],
    points: &[PadicScalar],
    ext: &ExtStructure,
) -> Result<CocycleData, CocycleError> {
    let digits = (ext.precision() as i64 - 6).max(1);
    for g in iwahori {
        for z in points {
            let a = c_a.point_eval(g, z, ext)?;
            let b = c_b.point_eval(g, z, ext)?;
            if !a.agrees(&b, digits) {
                return Err(CocycleError::IwahoriMismatch {
                    g: g.to_string(),
                    z: z.to_string(),
                });
            }
        }
    }
    Ok(CocycleData::amalgam(c_a.clone(), c_b.clone()))
}
