//! Units on cheeses, kept as lambda * prod (x - a_i)^{n_i} with a_i in F.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

use crate::cheese::{CheeseError, CheeseRegion, DiscKind};
use crate::matrix::{Mat2, Point};
use crate::measures::{FiniteMeasure, MeasureError, Ring};
use crate::padic::{ExtStructure, PadicError, PadicScalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnitError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Cheese(#[from] CheeseError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("center {0} lies in no hole of the cheese")]
    CenterOutsideHoles(String),
    #[error("point {0} lies in a hole of the cheese")]
    PointInHole(String),
    #[error("{0} is divisible by p")]
    DivisibleByP(u64),
    #[error("empty sample set")]
    NoSamples,
    #[error("value at {0} is not a unit")]
    NotAUnit(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitClass {
    lambda: PadicScalar,
    factors: Vec<(PadicScalar, i64)>,
}

impl UnitClass {
    pub fn constant(lambda: PadicScalar) -> UnitClass {
        UnitClass {
            lambda,
            factors: Vec::new(),
        }
    }

    pub fn one(ext: &ExtStructure) -> UnitClass {
        Self::constant(ext.one())
    }

    /// x - a.
    pub fn linear(ext: &ExtStructure, a: PadicScalar) -> UnitClass {
        UnitClass {
            lambda: ext.one(),
            factors: vec![(a, 1)],
        }
    }

    pub fn from_factors(
        lambda: PadicScalar,
        factors: impl IntoIterator<Item = (PadicScalar, i64)>,
    ) -> UnitClass {
        let mut u = Self::constant(lambda);
        for (a, n) in factors {
            u.push_factor(a, n);
        }
        u
    }

    fn push_factor(&mut self, a: PadicScalar, n: i64) {
        if n == 0 {
            return;
        }
        if let Some(slot) = self.factors.iter_mut().find(|(b, _)| b.sub(&a).is_zero()) {
            slot.1 += n;
        } else {
            self.factors.push((a, n));
        }
        self.factors.retain(|(_, k)| *k != 0);
    }

    pub fn lambda(&self) -> &PadicScalar {
        &self.lambda
    }

    pub fn factors(&self) -> &[(PadicScalar, i64)] {
        &self.factors
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn mul(&self, other: &UnitClass) -> UnitClass {
        let mut u = Self::constant(self.lambda.mul(&other.lambda));
        for (a, n) in self.factors.iter().chain(&other.factors) {
            u.push_factor(*a, *n);
        }
        u
    }

    pub fn pow(&self, k: i64) -> Result<UnitClass, UnitError> {
        Ok(UnitClass {
            lambda: self.lambda.pow(k)?,
            factors: if k == 0 {
                Vec::new()
            } else {
                self.factors.iter().map(|(a, n)| (*a, n * k)).collect()
            },
        })
    }

    pub fn inv(&self) -> Result<UnitClass, UnitError> {
        self.pow(-1)
    }

    pub fn scale(&self, c: &PadicScalar) -> UnitClass {
        UnitClass {
            lambda: self.lambda.mul(c),
            factors: self.factors.clone(),
        }
    }

    /// Value at a point of L; fails if some factor vanishes there.
    pub fn evaluate(&self, z: &PadicScalar) -> Result<PadicScalar, UnitError> {
        let mut acc = self.lambda;
        for (a, n) in &self.factors {
            let d = z.sub(a);
            if d.is_zero() {
                return Err(UnitError::PointInHole(z.to_string()));
            }
            acc = acc.mul(&d.pow(*n)?);
        }
        Ok(acc)
    }

    /// Evaluation after checking that z lies in the cheese.
    pub fn evaluate_on(
        &self,
        x: &CheeseRegion,
        z: &PadicScalar,
        ext: &ExtStructure,
    ) -> Result<PadicScalar, UnitError> {
        if !x.contains(z, ext)? {
            return Err(UnitError::PointInHole(z.to_string()));
        }
        self.evaluate(z)
    }

    /// g . u, where (g . u)(z) = u(g^{-1} z). Each factor x - a becomes
    /// c (x - g(a)) / (x - g(oo)), with factors at infinity dropped.
    pub fn pullback(&self, g: &Mat2, ext: &ExtStructure) -> Result<UnitClass, UnitError> {
        let h = g.inv()?;
        let mut out = Self::constant(self.lambda);
        let g_inf = g.mobius(&Point::Infinity)?;
        for (a, n) in &self.factors {
            // h(z) - a = ((A - aC) z + (B - aD)) / (C z + D) with h = [[A, B], [C, D]]
            let lead = h.a.sub(&a.mul(&h.c));
            let tail = h.b.sub(&a.mul(&h.d));
            let mut c = ext.one();
            if lead.is_zero() {
                c = c.mul(&tail);
            } else {
                c = c.mul(&lead);
                let ga = g.mobius(&Point::Finite(*a))?;
                out.push_factor(*ga.finite().expect("finite image"), *n);
            }
            if h.c.is_zero() {
                c = c.div(&h.d)?;
            } else {
                c = c.div(&h.c)?;
                out.push_factor(*g_inf.finite().expect("finite image"), -*n);
            }
            out.lambda = out.lambda.mul(&c.pow(*n)?);
        }
        Ok(out)
    }

    /// mu_X(u): each factor x - a contributes n (delta_{D(a)} - delta_{D_oo}).
    pub fn mu(&self, x: &CheeseRegion, ext: &ExtStructure) -> Result<FiniteMeasure, UnitError> {
        let inf = x.exterior().expect("tree cheeses have an exterior hole");
        let mut values = vec![0i64; x.len()];
        for (a, n) in &self.factors {
            let d = x
                .hole_containing(&Point::Finite(*a), ext)?
                .ok_or_else(|| UnitError::CenterOutsideHoles(a.to_string()))?;
            values[d] += n;
            values[inf] -= n;
        }
        Ok(FiniteMeasure::from_values(Ring::Z, values))
    }

    /// A unit u with mu_X(u) = nu, using the center of each bounded hole.
    pub fn from_measure(
        x: &CheeseRegion,
        nu: &FiniteMeasure,
        ext: &ExtStructure,
    ) -> Result<UnitClass, UnitError> {
        if nu.ring() != Ring::Z {
            return Err(MeasureError::RingMismatch.into());
        }
        if !nu.is_m0() {
            return Err(MeasureError::NotInM0(nu.total()).into());
        }
        if nu.len() != x.len() {
            return Err(MeasureError::LengthMismatch(nu.len(), x.len()).into());
        }
        let factors = x
            .holes()
            .iter()
            .zip(nu.values())
            .filter(|(d, _)| d.kind == DiscKind::Interior)
            .map(|(d, &n)| (d.center.to_padic(ext), n));
        Ok(UnitClass::from_factors(ext.one(), factors))
    }
}

impl fmt::Display for UnitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lambda)?;
        for (a, n) in &self.factors {
            write!(f, " * (x - [{a}])^{n}")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct FactorJson {
    center: String,
    exp: i64,
}

impl Serialize for UnitClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("UnitClass", 2)?;
        st.serialize_field("lambda", &self.lambda.to_string())?;
        let factors: Vec<FactorJson> = self
            .factors
            .iter()
            .map(|(a, n)| FactorJson {
                center: a.to_string(),
                exp: *n,
            })
            .collect();
        st.serialize_field("factors", &factors)?;
        st.end()
    }
}

/// The class of L_{u,d}: the free line bundle with dv = (1/d)(du/u) v.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBundleClassData {
    pub u: UnitClass,
    pub d: u64,
}

impl LineBundleClassData {
    pub fn new(u: UnitClass, d: u64, p: u32) -> Result<Self, UnitError> {
        if d == 0 || d.is_multiple_of(p as u64) {
            return Err(UnitError::DivisibleByP(d));
        }
        Ok(LineBundleClassData { u, d })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self, UnitError> {
        if self.d == other.d {
            return Ok(LineBundleClassData {
                u: self.u.mul(&other.u),
                d: self.d,
            });
        }
        let u = self.u.pow(other.d as i64)?.mul(&other.u.pow(self.d as i64)?);
        Ok(LineBundleClassData {
            u,
            d: self.d * other.d,
        })
    }

    pub fn inverse(&self) -> Result<Self, UnitError> {
        Ok(LineBundleClassData {
            u: self.u.inv()?,
            d: self.d,
        })
    }

    /// Trivial iff mu_X(u) vanishes mod d.
    pub fn is_trivial(&self, x: &CheeseRegion, ext: &ExtStructure) -> Result<bool, UnitError> {
        if self.d.is_multiple_of(ext.p() as u64) {
            return Err(UnitError::DivisibleByP(self.d));
        }
        Ok(self.u.mu(x, ext)?.reduce_mod(self.d).is_zero())
    }
}

/// Outcome of comparing u(z) / u(z0) against 1 on a sample set.
#[derive(Clone, Debug, Serialize)]
pub struct SmallUnitReport {
    /// least v(u(z)/u(z0) - 1) over the samples, None when all agree exactly
    pub min_valuation: Option<i64>,
    pub bound_exp: i64,
    pub passed: bool,
    pub witness: Option<String>,
}

pub fn sampled_small_unit_check(
    u: &UnitClass,
    base: &PadicScalar,
    samples: &[PadicScalar],
    bound_exp: i64,
) -> Result<SmallUnitReport, UnitError> {
    if samples.is_empty() {
        return Err(UnitError::NoSamples);
    }
    let lambda = u.evaluate(base)?;
    let mut worst: Option<(i64, PadicScalar)> = None;
    for z in samples {
        let dev = u.evaluate(z)?.div(&lambda)?.sub(&base.integer_like(1));
        if dev.is_zero() {
            continue;
        }
        let v = dev.valuation().unwrap();
        if worst.as_ref().is_none_or(|(w, _)| v < *w) {
            worst = Some((v, *z));
        }
    }
    let passed = worst.as_ref().is_none_or(|(v, _)| *v >= bound_exp);
    Ok(SmallUnitReport {
        min_valuation: worst.as_ref().map(|(v, _)| *v),
        bound_exp,
        passed,
        witness: worst.filter(|_| !passed).map(|(_, z)| z.to_string()),
    })
}

/// Sampled sup of |u| as the least valuation of u over the samples.
pub fn sampled_sup_valuation(u: &UnitClass, samples: &[PadicScalar]) -> Result<i64, UnitError> {
    let mut best: Option<i64> = None;
    for z in samples {
        let v = u
            .evaluate(z)?
            .valuation()
            .ok_or_else(|| UnitError::NotAUnit(z.to_string()))?;
        best = Some(best.map_or(v, |b| b.min(v)));
    }
    best.ok_or(UnitError::NoSamples)
}
