//! 2x2 matrices over Q_p and their Mobius action on P^1(L).

use std::fmt;

use rand::Rng;

use crate::padic::{ExtStructure, PadicError, PadicScalar};

/// A point of P^1(L).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Finite(PadicScalar),
    Infinity,
}

impl Point {
    pub fn finite(&self) -> Option<&PadicScalar> {
        match self {
            Point::Finite(x) => Some(x),
            Point::Infinity => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: PadicScalar,
    pub b: PadicScalar,
    pub c: PadicScalar,
    pub d: PadicScalar,
}

impl Mat2 {
    pub fn new(a: PadicScalar, b: PadicScalar, c: PadicScalar, d: PadicScalar) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_ints(ext: &ExtStructure, e: [i128; 4]) -> Self {
        Mat2::new(ext.int(e[0]), ext.int(e[1]), ext.int(e[2]), ext.int(e[3]))
    }

    pub fn identity(ext: &ExtStructure) -> Self {
        Self::from_ints(ext, [1, 0, 0, 1])
    }

    /// [[0, 1], [p, 0]]
    pub fn w(ext: &ExtStructure) -> Self {
        Self::from_ints(ext, [0, 1, ext.p() as i128, 0])
    }

    pub fn diag(a: PadicScalar, d: PadicScalar) -> Self {
        let z = PadicScalar::exact_zero(a.p(), 1);
        Mat2::new(a, z, z, d)
    }

    pub fn entries(&self) -> [PadicScalar; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a.mul(&o.a).add(&self.b.mul(&o.c)),
            self.a.mul(&o.b).add(&self.b.mul(&o.d)),
            self.c.mul(&o.a).add(&self.d.mul(&o.c)),
            self.c.mul(&o.b).add(&self.d.mul(&o.d)),
        )
    }

    pub fn det(&self) -> PadicScalar {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    pub fn inv(&self) -> Result<Mat2, PadicError> {
        let di = self.det().inv()?;
        Ok(Mat2::new(
            self.d.mul(&di),
            self.b.neg().mul(&di),
            self.c.neg().mul(&di),
            self.a.mul(&di),
        ))
    }

    /// Inverse up to the scalar det, enough for the action on P^1 and on
    /// lattice classes.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.d, self.b.neg(), self.c.neg(), self.a)
    }

    pub fn scale(&self, s: &PadicScalar) -> Mat2 {
        Mat2::new(self.a.mul(s), self.b.mul(s), self.c.mul(s), self.d.mul(s))
    }

    /// Least relative precision among the nonzero entries.
    pub fn precision(&self) -> u32 {
        self.entries()
            .iter()
            .filter(|x| !x.is_exact_zero())
            .map(|x| x.precision())
            .min()
            .unwrap_or(u32::MAX)
    }

    /// z -> (a z + b) / (c z + d).
    pub fn mobius(&self, z: &Point) -> Result<Point, PadicError> {
        let (num, den) = match z {
            Point::Infinity => (self.a, self.c),
            Point::Finite(z) => (self.a.mul(z).add(&self.b), self.c.mul(z).add(&self.d)),
        };
        if den.is_exact_zero() {
            return Ok(Point::Infinity);
        }
        if den.is_zero() {
            return Err(PadicError::PrecisionExhausted {
                p: den.p(),
                bound: den.valuation().unwrap_or(0),
            });
        }
        Ok(Point::Finite(num.div(&den)?))
    }

    pub fn in_gl2_o(&self) -> bool {
        self.entries()
            .iter()
            .all(|x| x.valuation().is_none_or(|v| v >= 0))
            && self.det().valuation() == Some(0)
    }

    pub fn in_iwahori(&self) -> bool {
        self.in_gl2_o() && self.c.valuation().is_none_or(|v| v >= 1)
    }

    /// det of valuation zero.
    pub fn in_g0(&self) -> bool {
        self.det().valuation() == Some(0)
    }

    /// Membership in w GL2(O) w^{-1}, i.e. w^{-1} g w = [[d, c/p], [p b, a]] integral.
    pub fn in_b(&self) -> bool {
        let at_least = |x: &PadicScalar, k: i64| x.valuation().is_none_or(|v| v >= k);
        self.in_g0()
            && at_least(&self.a, 0)
            && at_least(&self.d, 0)
            && at_least(&self.c, 1)
            && at_least(&self.b, -1)
    }

    pub fn random_gl2o<R: Rng>(ext: &ExtStructure, rng: &mut R) -> Mat2 {
        loop {
            let m = Mat2::new(
                ext.random_integer(rng),
                ext.random_integer(rng),
                ext.random_integer(rng),
                ext.random_integer(rng),
            );
            if m.in_gl2_o() {
                return m;
            }
        }
    }

    pub fn random_iwahori<R: Rng>(ext: &ExtStructure, rng: &mut R) -> Mat2 {
        loop {
            let c = ext.random_integer(rng).mul(&ext.int(ext.p() as i128));
            let m = Mat2::new(ext.random_integer(rng), ext.random_integer(rng), c, ext.random_integer(rng));
            if m.in_iwahori() {
                return m;
            }
        }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}
