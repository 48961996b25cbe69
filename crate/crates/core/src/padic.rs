//! Fixed-precision arithmetic in Q_p and its unramified quadratic extension.
//!
//! Values are stored in capped-relative form: a valuation together with a
//! unit known modulo p^prec. The t-coordinate of an element of L refers to the
//! basis (1, t) of O_L = Z_p[t]/(phi(t)).

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

pub const DEFAULT_PRECISION: u32 = 24;

const EXACT_ZERO_VAL: i64 = i64::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("division by exact zero")]
    DivisionByZero,
    #[error("operand is only known to be O({p}^{bound}); cannot invert")]
    PrecisionExhausted { p: u32, bound: i64 },
    #[error("only {have} digits left, floor is {floor}")]
    BelowFloor { have: u32, floor: u32 },
    #[error("root of degree {degree} needs v(u - 1) {required}, found {found}")]
    RootDomain {
        degree: u64,
        required: String,
        found: String,
    },
    #[error("teichmuller of zero")]
    ZeroInput,
    #[error("{0} is not a small prime")]
    NotPrime(u32),
    #[error("precision {n} is too large for p = {p} (at most {max})")]
    PrecisionTooLarge { p: u32, n: u32, max: u32 },
    #[error("value has a nonzero t-coordinate and does not lie in Q_p")]
    NotInBaseField,
    #[error("cannot combine values over different primes")]
    PrimeMismatch,
    #[error("cannot parse p-adic value {0:?}")]
    Parse(String),
}

/// Largest n with p^n < 2^63, so products of residues fit in u128.
pub fn max_precision(p: u32) -> u32 {
    let mut n = 0;
    let mut acc: u128 = 1;
    while acc * (p as u128) < (1u128 << 63) {
        acc *= p as u128;
        n += 1;
    }
    n
}

pub(crate) fn pow_u64(p: u32, k: u32) -> u64 {
    (p as u64).pow(k)
}

pub(crate) fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn vp_u64(p: u32, mut x: u64) -> u32 {
    let mut v = 0;
    while x != 0 && x.is_multiple_of(p as u64) {
        x /= p as u64;
        v += 1;
    }
    v
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

fn addmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

fn invmod(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "invmod of a non-unit");
    s0.rem_euclid(m as i128) as u64
}

/// Multiply two residues of O_L / p^k in the basis (1, t).
fn mul_l(a: [u64; 2], b: [u64; 2], quad: [u32; 2], m: u64) -> [u64; 2] {
    let c0 = quad[0] as u64 % m;
    let c1 = quad[1] as u64 % m;
    let a0b0 = mulmod(a[0], b[0], m);
    let a1b1 = mulmod(a[1], b[1], m);
    let cross = addmod(mulmod(a[0], b[1], m), mulmod(a[1], b[0], m), m);
    // t^2 = -c1 t - c0
    [
        submod(a0b0, mulmod(c0, a1b1, m), m),
        submod(cross, mulmod(c1, a1b1, m), m),
    ]
}

/// The defining quadratic t^2 + c1 t + c0 used for L, chosen in Conway order:
/// smallest a then b for x^2 - a x + b irreducible with x primitive.
pub fn conway_quadratic(p: u32) -> [u32; 2] {
    static TABLE: OnceLock<Vec<[u32; 2]>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=36)
            .map(|p| if is_prime(p) { search_quadratic(p) } else { [0, 0] })
            .collect()
    });
    match table.get(p as usize) {
        Some(q) if is_prime(p) => *q,
        _ => search_quadratic(p),
    }
}

fn search_quadratic(p: u32) -> [u32; 2] {
    let order = (p as u64).pow(2) - 1;
    for a in 0..p {
        for b in 1..p {
            let quad = [b, (p - a) % p];
            let has_root = (0..p as u64).any(|x| {
                (x * x + quad[1] as u64 * x + quad[0] as u64).is_multiple_of(p as u64)
            });
            if has_root {
                continue;
            }
            let m = p as u64;
            let pow = |e: u64| {
                let mut acc = [1u64, 0];
                let mut base = [0u64, 1];
                let mut e = e;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = mul_l(acc, base, quad, m);
                    }
                    base = mul_l(base, base, quad, m);
                    e >>= 1;
                }
                acc
            };
            if prime_factors(order).iter().all(|r| pow(order / r) != [1, 0]) {
                return quad;
            }
        }
    }
    unreachable!("no primitive quadratic for p = {p}")
}

/// Element of Q_p (f = 1) or of the unramified quadratic extension L (f = 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u32,
    f: u8,
    quad: [u32; 2],
    /// valuation, or the known lower bound when `prec == 0`
    val: i64,
    /// relative precision in digits
    prec: u32,
    unit: [u64; 2],
}

impl PadicScalar {
    fn raw(p: u32, f: u8, quad: [u32; 2], val: i64, prec: u32, unit: [u64; 2]) -> Self {
        PadicScalar {
            p,
            f,
            quad,
            val,
            prec,
            unit,
        }
    }

    /// Build from a residue mod p^prec that is not necessarily a unit.
    fn normalized(
        p: u32,
        f: u8,
        quad: [u32; 2],
        val: i64,
        prec: u32,
        unit: [u64; 2],
    ) -> Self {
        let m = pow_u64(p, prec);
        let unit = [unit[0] % m, unit[1] % m];
        if unit == [0, 0] {
            return Self::raw(p, f, quad, val + prec as i64, 0, [0, 0]);
        }
        let k = match (unit[0], unit[1]) {
            (0, b) => vp_u64(p, b),
            (a, 0) => vp_u64(p, a),
            (a, b) => vp_u64(p, a).min(vp_u64(p, b)),
        };
        let d = pow_u64(p, k);
        Self::raw(
            p,
            f,
            quad,
            val + k as i64,
            prec - k,
            [unit[0] / d, unit[1] / d],
        )
    }

    pub fn exact_zero(p: u32, f: u8) -> Self {
        Self::raw(p, f, conway_quadratic(p), EXACT_ZERO_VAL, 0, [0, 0])
    }

    /// The value O(p^bound): zero as far as the available digits can tell.
    pub fn approx_zero(p: u32, f: u8, bound: i64) -> Self {
        Self::raw(p, f, conway_quadratic(p), bound, 0, [0, 0])
    }

    fn same_field_zero(&self, bound: i64) -> Self {
        Self::raw(self.p, self.f, self.quad, bound, 0, [0, 0])
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn ext_degree(&self) -> u8 {
        self.f
    }

    pub fn is_exact_zero(&self) -> bool {
        self.prec == 0 && self.val == EXACT_ZERO_VAL
    }

    /// True for exact zero and for values only known to be O(p^k).
    pub fn is_zero(&self) -> bool {
        self.prec == 0
    }

    /// Valuation; `None` for exact zero. For O(p^k) this is the bound k.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_exact_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Guaranteed digits of the unit part.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Absolute precision: the value is known modulo p^abs_precision.
    pub fn abs_precision(&self) -> i64 {
        if self.is_exact_zero() {
            EXACT_ZERO_VAL
        } else {
            self.val + self.prec as i64
        }
    }

    pub fn unit_part(&self) -> [u64; 2] {
        self.unit
    }

    /// |x| = p^{-v} as a float, for reporting only.
    pub fn abs(&self) -> f64 {
        match self.valuation() {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    pub(crate) fn integer_like(&self, n: i128) -> Self {
        let s = Self::from_i128(self.p, max_precision(self.p), n);
        if self.f == 2 {
            s.to_ext()
        } else {
            s
        }
    }

    /// Exact integer at the given precision cap.
    pub fn from_i128(p: u32, cap: u32, n: i128) -> Self {
        let quad = conway_quadratic(p);
        if n == 0 {
            return Self::raw(p, 1, quad, EXACT_ZERO_VAL, 0, [0, 0]);
        }
        let mut v = 0i64;
        let mut n = n;
        while n % p as i128 == 0 {
            n /= p as i128;
            v += 1;
        }
        let m = pow_u64(p, cap);
        let u = n.rem_euclid(m as i128) as u64;
        Self::raw(p, 1, quad, v, cap, [u, 0])
    }

    /// p^k with the given precision cap.
    pub fn p_power(p: u32, cap: u32, k: i64) -> Self {
        Self::raw(p, 1, conway_quadratic(p), k, cap, [1, 0])
    }

    fn check_prime(&self, other: &Self) {
        assert_eq!(self.p, other.p, "{}", PadicError::PrimeMismatch);
    }

    /// View an element of Q_p inside L.
    pub fn to_ext(&self) -> Self {
        let mut out = *self;
        out.f = 2;
        out
    }

    /// View an element of L with vanishing t-coordinate inside Q_p.
    pub fn to_base(&self) -> Result<Self, PadicError> {
        if self.f == 1 {
            return Ok(*self);
        }
        if self.unit[1] != 0 {
            return Err(PadicError::NotInBaseField);
        }
        let mut out = *self;
        out.f = 1;
        Ok(out)
    }

    fn promote(a: &Self, b: &Self) -> (Self, Self) {
        a.check_prime(b);
        if a.f == b.f {
            (*a, *b)
        } else {
            (a.to_ext(), b.to_ext())
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = Self::promote(self, other);
        if a.is_exact_zero() {
            return b;
        }
        if b.is_exact_zero() {
            return a;
        }
        let (x, y) = if a.val <= b.val { (a, b) } else { (b, a) };
        let abs = x.abs_precision().min(y.abs_precision());
        let base = x.val;
        if abs <= base {
            return x.same_field_zero(abs);
        }
        let rel = (abs - base) as u32;
        let m = pow_u64(x.p, rel);
        let mut sum = [x.unit[0] % m, x.unit[1] % m];
        let shift = y.val - base;
        if !y.is_zero() && shift < rel as i64 {
            let s = pow_u64(x.p, shift as u32);
            for i in 0..2 {
                sum[i] = addmod(sum[i], mulmod(y.unit[i] % m, s, m), m);
            }
        }
        Self::normalized(x.p, x.f, x.quad, base, rel, sum)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let m = pow_u64(self.p, self.prec);
        let mut out = *self;
        out.unit = [(m - self.unit[0]) % m, (m - self.unit[1]) % m];
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = Self::promote(self, other);
        if a.is_exact_zero() || b.is_exact_zero() {
            return Self::raw(a.p, a.f, a.quad, EXACT_ZERO_VAL, 0, [0, 0]);
        }
        if a.is_zero() || b.is_zero() {
            return a.same_field_zero(a.val + b.val);
        }
        let prec = a.prec.min(b.prec);
        let m = pow_u64(a.p, prec);
        let ua = [a.unit[0] % m, a.unit[1] % m];
        let ub = [b.unit[0] % m, b.unit[1] % m];
        let unit = if a.f == 1 {
            [mulmod(ua[0], ub[0], m), 0]
        } else {
            mul_l(ua, ub, a.quad, m)
        };
        Self::raw(a.p, a.f, a.quad, a.val + b.val, prec, unit)
    }

    pub fn inv(&self) -> Result<Self, PadicError> {
        if self.is_exact_zero() {
            return Err(PadicError::DivisionByZero);
        }
        if self.is_zero() {
            return Err(PadicError::PrecisionExhausted {
                p: self.p,
                bound: self.val,
            });
        }
        let m = pow_u64(self.p, self.prec);
        let unit = if self.f == 1 {
            [invmod(self.unit[0], m), 0]
        } else {
            let conj = self.frob_unit(m);
            let n = mul_l(self.unit, conj, self.quad, m);
            debug_assert_eq!(n[1], 0);
            let ninv = invmod(n[0], m);
            [mulmod(conj[0], ninv, m), mulmod(conj[1], ninv, m)]
        };
        Ok(Self::raw(self.p, self.f, self.quad, -self.val, self.prec, unit))
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self, PadicError> {
        let base = if e < 0 { self.inv()? } else { *self };
        let mut e = e.unsigned_abs();
        let mut acc = self.integer_like(1);
        if self.f == 2 {
            acc = acc.to_ext();
        }
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        if self.prec > 0 && acc.prec > self.prec {
            acc = acc.truncate_rel(self.prec);
        }
        Ok(acc)
    }

    /// Drop digits so that at most `prec` relative digits remain.
    pub fn truncate_rel(&self, prec: u32) -> Self {
        if self.is_zero() || self.prec <= prec {
            return *self;
        }
        let m = pow_u64(self.p, prec);
        Self::raw(
            self.p,
            self.f,
            self.quad,
            self.val,
            prec,
            [self.unit[0] % m, self.unit[1] % m],
        )
    }

    /// Drop digits so that the value is known modulo p^abs at most.
    pub fn truncate_abs(&self, abs: i64) -> Self {
        if self.is_exact_zero() || self.abs_precision() <= abs {
            return *self;
        }
        if abs <= self.val {
            return self.same_field_zero(abs);
        }
        self.truncate_rel((abs - self.val) as u32)
    }

    fn frob_unit(&self, m: u64) -> [u64; 2] {
        let c1 = self.quad[1] as u64 % m;
        let [a, b] = [self.unit[0] % m, self.unit[1] % m];
        // sigma(t) = -c1 - t
        [submod(a, mulmod(b, c1, m), m), (m - b) % m]
    }

    /// Frobenius; the identity on Q_p.
    pub fn frobenius(&self) -> Self {
        if self.f == 1 || self.is_zero() {
            return *self;
        }
        let m = pow_u64(self.p, self.prec);
        let mut out = *self;
        out.unit = self.frob_unit(m);
        out
    }

    pub fn norm(&self) -> Self {
        let n = self.mul(&self.frobenius());
        n.to_base().expect("norm is Frobenius invariant")
    }

    pub fn trace(&self) -> Self {
        let t = self.add(&self.frobenius());
        t.to_base().expect("trace is Frobenius invariant")
    }

    /// (sigma(x), N(x), tr(x)).
    pub fn frob_norm_trace(&self) -> (Self, Self, Self) {
        (self.frobenius(), self.norm(), self.trace())
    }

    /// (c0, c1) in Q_p with x = c0 + c1 t.
    pub fn coordinates(&self) -> (Self, Self) {
        if self.is_zero() {
            let z = Self::raw(self.p, 1, self.quad, self.val, 0, [0, 0]);
            return (z, z);
        }
        let c = |u: u64| {
            if u == 0 {
                Self::raw(self.p, 1, self.quad, self.val + self.prec as i64, 0, [0, 0])
            } else {
                Self::normalized(self.p, 1, self.quad, self.val, self.prec, [u, 0])
            }
        };
        (c(self.unit[0]), c(if self.f == 1 { 0 } else { self.unit[1] }))
    }

    /// The unit p^{-v} x.
    pub fn unit_value(&self) -> Result<Self, PadicError> {
        if self.is_exact_zero() {
            return Err(PadicError::ZeroInput);
        }
        if self.is_zero() {
            return Err(PadicError::PrecisionExhausted {
                p: self.p,
                bound: self.val,
            });
        }
        let mut out = *self;
        out.val = 0;
        Ok(out)
    }

    /// Residue of the unit part mod p, as coordinates in F_p[t]/(phi).
    pub fn residue(&self) -> [u64; 2] {
        [self.unit[0] % self.p as u64, self.unit[1] % self.p as u64]
    }

    pub fn teichmuller(&self) -> Result<Self, PadicError> {
        let u = self.unit_value()?;
        let q = pow_u64(self.p, self.f as u32) as i64;
        let mut w = u;
        for _ in 0..u.prec {
            w = w.pow(q)?;
        }
        Ok(w)
    }

    /// Agreement of self and other in digits relative to |self|:
    /// v(self - other) - v(self). Exact equality gives `u32::MAX`.
    pub fn agreement(&self, other: &Self) -> i64 {
        let d = self.sub(other);
        if d.is_exact_zero() {
            return i64::MAX;
        }
        let base = self.valuation().unwrap_or(0);
        d.val - base
    }

    pub fn agrees(&self, other: &Self, digits: i64) -> bool {
        self.agreement(other) >= digits
    }

    pub fn require_precision(self, floor: u32) -> Result<Self, PadicError> {
        if !self.is_exact_zero() && self.prec < floor {
            return Err(PadicError::BelowFloor {
                have: self.prec,
                floor,
            });
        }
        Ok(self)
    }

    /// The unique m-th root in 1 + pO of a unit u with v(u - 1) >= 1, by the
    /// binomial series. Each factor p of m needs v(u - 1) > p/(p - 1) at the
    /// stage where it is extracted and costs one digit.
    pub fn root_small_unit(&self, m: u64) -> Result<Self, PadicError> {
        assert!(m > 0, "root of degree zero");
        let one = self.integer_like(1);
        let a = self.sub(&one);
        let va = a.valuation().unwrap_or(EXACT_ZERO_VAL);
        if va < 1 || self.valuation() != Some(0) {
            return Err(PadicError::RootDomain {
                degree: m,
                required: ">= 1".into(),
                found: if self.valuation() != Some(0) {
                    "u is not a unit".into()
                } else {
                    va.to_string()
                },
            });
        }
        let p = self.p as u64;
        let mut k = 0;
        let mut rest = m;
        while rest.is_multiple_of(p) {
            rest /= p;
            k += 1;
        }
        let mut r = *self;
        if rest > 1 {
            r = r.binomial_root(rest)?;
        }
        for _ in 0..k {
            r = r.binomial_root(p)?;
        }
        Ok(r)
    }

    fn binomial_root(&self, m: u64) -> Result<Self, PadicError> {
        let one = self.integer_like(1);
        let a = self.sub(&one);
        if a.is_zero() {
            return Ok(one.truncate_abs(self.abs_precision()));
        }
        let va = a.val;
        let p = self.p as i64;
        let target = self.abs_precision();
        let p_divides = m.is_multiple_of(self.p as u64);
        if p_divides && (p - 1) * va <= p {
            return Err(PadicError::RootDomain {
                degree: m,
                required: format!("> {}/{}", p, p - 1),
                found: va.to_string(),
            });
        }
        // term n has valuation at least n * rate where rate is va for p not
        // dividing m and va - 1 - 1/(p-1) otherwise (times p - 1 below)
        let rate_num = if p_divides { (p - 1) * (va - 1) - 1 } else { va };
        let rate_den = if p_divides { p - 1 } else { 1 };
        let mi = self.integer_like(m as i128);
        let mut coeff = one;
        let mut apow = one;
        let mut sum = one;
        let mut n: i64 = 1;
        loop {
            let num = self.integer_like(1 - (n as i128 - 1) * m as i128);
            let den = mi.mul(&self.integer_like(n as i128));
            coeff = coeff.mul(&num).div(&den)?;
            apow = apow.mul(&a);
            let term = coeff.mul(&apow);
            sum = sum.add(&term);
            if n * rate_num >= (target + 1) * rate_den {
                break;
            }
            n += 1;
        }
        Ok(sum)
    }

    /// Base-p digits of the unit coordinates, little-endian, `prec` of each.
    fn digit_strings(&self) -> [String; 2] {
        let digit = |d: u64| std::char::from_digit(d as u32, 36).unwrap();
        let mut out = [String::new(), String::new()];
        for (i, s) in out.iter_mut().enumerate() {
            let mut c = self.unit[i];
            for _ in 0..self.prec {
                s.push(digit(c % self.p as u64));
                c /= self.p as u64;
            }
        }
        out
    }

    pub fn parse(s: &str) -> Result<Self, PadicError> {
        let err = || PadicError::Parse(s.to_string());
        let s = s.trim();
        let ext = s.contains(" t)");
        let f = if ext { 2 } else { 1 };
        if let Some(rest) = s.strip_prefix("0 in ") {
            let (field, p) = rest.split_once('_').ok_or_else(err)?;
            let p: u32 = p.parse().map_err(|_| err())?;
            if !is_prime(p) {
                return Err(err());
            }
            return match field {
                "Q" => Ok(Self::exact_zero(p, 1)),
                "L" => Ok(Self::exact_zero(p, 2)),
                _ => Err(err()),
            };
        }
        if let Some(rest) = s.strip_prefix("O(") {
            let (body, tail) = rest.split_once(')').ok_or_else(err)?;
            let (p, k) = body.split_once('^').ok_or_else(err)?;
            let p: u32 = p.parse().map_err(|_| err())?;
            let k: i64 = k.parse().map_err(|_| err())?;
            let f = match tail.trim() {
                "in L" => 2,
                "" => 1,
                _ => return Err(err()),
            };
            if !is_prime(p) {
                return Err(err());
            }
            return Ok(Self::approx_zero(p, f, k));
        }
        let (head, tail) = s.split_once(" * (").ok_or_else(err)?;
        let (p, v) = head.split_once('^').ok_or_else(err)?;
        let p: u32 = p.parse().map_err(|_| err())?;
        let v: i64 = v.parse().map_err(|_| err())?;
        let (coeffs, modulus) = tail.split_once(") mod ").ok_or_else(err)?;
        let (mp, n) = modulus.split_once('^').ok_or_else(err)?;
        let n: u32 = n.parse().map_err(|_| err())?;
        if mp.parse::<u32>().ok() != Some(p) || !is_prime(p) || n > max_precision(p) {
            return Err(err());
        }
        let parts: Vec<&str> = if ext {
            let (a, b) = coeffs.split_once(" + ").ok_or_else(err)?;
            vec![a, b.strip_suffix(" t").ok_or_else(err)?]
        } else {
            vec![coeffs]
        };
        let mut unit = [0u64; 2];
        for (i, digits) in parts.iter().enumerate() {
            if digits.chars().count() != n as usize {
                return Err(err());
            }
            let mut acc = 0u64;
            for ch in digits.chars().rev() {
                let d = ch.to_digit(36).filter(|&d| d < p).ok_or_else(err)?;
                acc = acc * p as u64 + d as u64;
            }
            unit[i] = acc;
        }
        let out = Self::raw(p, f, conway_quadratic(p), v, n, unit);
        if n == 0 || out.residue() == [0, 0] {
            return Err(err());
        }
        Ok(out)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = if self.f == 2 { " in L" } else { "" };
        if self.is_exact_zero() {
            let name = if self.f == 2 { "L" } else { "Q" };
            return write!(fm, "0 in {}_{}", name, self.p);
        }
        if self.is_zero() {
            return write!(fm, "O({}^{}){}", self.p, self.val, field);
        }
        let [d0, d1] = self.digit_strings();
        if self.f == 2 {
            write!(
                fm,
                "{}^{} * ({} + {} t) mod {}^{}",
                self.p, self.val, d0, d1, self.p, self.prec
            )
        } else {
            write!(
                fm,
                "{}^{} * ({}) mod {}^{}",
                self.p, self.val, d0, self.p, self.prec
            )
        }
    }
}

/// The field data shared by all values at one prime and precision.
#[derive(Clone, Debug)]
pub struct ExtStructure {
    p: u32,
    precision: u32,
    quad: [u32; 2],
    zeta: PadicScalar,
}

impl ExtStructure {
    pub fn new(p: u32, precision: u32) -> Result<Self, PadicError> {
        if !is_prime(p) || p > 36 {
            return Err(PadicError::NotPrime(p));
        }
        let max = max_precision(p);
        if precision == 0 || precision > max {
            return Err(PadicError::PrecisionTooLarge {
                p,
                n: precision,
                max,
            });
        }
        let quad = conway_quadratic(p);
        let t = PadicScalar::raw(p, 2, quad, 0, precision, [0, 1]);
        let zeta = t.teichmuller()?;
        Ok(ExtStructure {
            p,
            precision,
            quad,
            zeta,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Residue field size of F; equal to p here.
    pub fn q(&self) -> u64 {
        self.p as u64
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn quadratic(&self) -> [u32; 2] {
        self.quad
    }

    /// Teichmuller lift of t, a generator of mu_{q^2 - 1}.
    pub fn zeta(&self) -> PadicScalar {
        self.zeta
    }

    pub fn int(&self, n: i128) -> PadicScalar {
        PadicScalar::from_i128(self.p, self.precision, n)
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar::exact_zero(self.p, 1)
    }

    pub fn one(&self) -> PadicScalar {
        self.int(1)
    }

    pub fn t(&self) -> PadicScalar {
        PadicScalar::raw(self.p, 2, self.quad, 0, self.precision, [0, 1])
    }

    /// c0 + c1 t.
    pub fn ext(&self, c0: i128, c1: i128) -> PadicScalar {
        self.int(c0).to_ext().add(&self.t().mul(&self.int(c1)))
    }

    pub fn p_power(&self, k: i64) -> PadicScalar {
        PadicScalar::p_power(self.p, self.precision, k)
    }

    /// Teichmuller representative in Z_p of a residue a mod p (0 maps to 0).
    pub fn teich_rep(&self, a: u64) -> PadicScalar {
        let a = a % self.p as u64;
        if a == 0 {
            return self.zero();
        }
        self.int(a as i128).teichmuller().expect("nonzero residue")
    }

    pub fn zeta_pow(&self, k: i64) -> PadicScalar {
        let order = self.q() as i64 * self.q() as i64 - 1;
        self.zeta.pow(k.rem_euclid(order)).expect("unit")
    }

    /// Index k with x = zeta^k, for a root of unity x in mu_{q^2 - 1}.
    pub fn teich_index(&self, x: &PadicScalar) -> Option<u64> {
        let order = self.q() * self.q() - 1;
        let res = x.to_ext().residue();
        let w = self.zeta.truncate_rel(1);
        let mut acc = self.one().to_ext().truncate_rel(1);
        for k in 0..order {
            if acc.residue() == res {
                return Some(k);
            }
            acc = acc.mul(&w);
        }
        None
    }

    pub fn random_integer<R: Rng>(&self, rng: &mut R) -> PadicScalar {
        let m = pow_u64(self.p, self.precision);
        self.int(rng.gen_range(0..m) as i128)
    }

    pub fn random_unit<R: Rng>(&self, rng: &mut R, f: u8) -> PadicScalar {
        loop {
            let x = if f == 2 {
                self.random_integer(rng)
                    .to_ext()
                    .add(&self.t().mul(&self.random_integer(rng)))
            } else {
                self.random_integer(rng)
            };
            if x.valuation() == Some(0) {
                return x;
            }
        }
    }

    /// Random element of 1 + p^k O.
    pub fn random_small_unit<R: Rng>(&self, rng: &mut R, f: u8, k: i64) -> PadicScalar {
        let pk = self.p_power(k);
        let x = if f == 2 {
            self.random_integer(rng)
                .to_ext()
                .add(&self.t().mul(&self.random_integer(rng)))
        } else {
            self.random_integer(rng)
        };
        self.one().add(&pk.mul(&x)).truncate_abs(self.precision as i64)
    }
}
