//! Exact rational arithmetic and the scalar abstraction shared by the exact
//! and floating-point solver paths.
//!
//! [`Rational`] keeps values that fit in machine words on an `i64` fast path and
//! only promotes to [`BigInt`] storage when a result would overflow. Every
//! constructor and operator returns the canonical form: positive denominator,
//! numerator and denominator coprime.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {0:?} as a rational (expected p/q)")]
    Parse(String),
    #[error("value {0} is not finite")]
    NotFinite(f64),
}

/// Exact fraction in canonical form.
#[derive(Clone)]
pub struct Rational {
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    // den > 0, gcd(|num|, den) = 1, num != i64::MIN
    Small(i64, i64),
    // only used when the value does not fit `Small`
    Big(Box<(BigInt, BigInt)>),
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if a <= u64::MAX as u128 && b <= u64::MAX as u128 {
        return gcd_u64(a as u64, b as u64) as u128;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

const SMALL_MAX: i128 = i64::MAX as i128;

impl Rational {
    pub fn zero() -> Self {
        Rational { repr: Repr::Small(0, 1) }
    }

    pub fn one() -> Self {
        Rational { repr: Repr::Small(1, 1) }
    }

    pub fn from_integer(n: i64) -> Self {
        if n == i64::MIN {
            return Self::from_bigints(BigInt::from(n), BigInt::one());
        }
        Rational { repr: Repr::Small(n, 1) }
    }

    /// `p/q` in canonical form.
    pub fn new(p: i64, q: i64) -> Result<Self, NumericError> {
        if q == 0 {
            return Err(NumericError::ZeroDenominator);
        }
        Ok(Self::from_i128(p as i128, q as i128))
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let g = num.gcd(&den);
        let (mut n, mut d) = if g.is_one() { (num, den) } else { (num / &g, den / &g) };
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        Self::shrink(n, d)
    }

    fn shrink(n: BigInt, d: BigInt) -> Self {
        if let (Some(ns), Some(ds)) = (n.to_i64(), d.to_i64()) {
            if ns != i64::MIN {
                return Rational { repr: Repr::Small(ns, ds) };
            }
        }
        Rational { repr: Repr::Big(Box::new((n, d))) }
    }

    // Reduces an arbitrary i128 pair (den != 0).
    fn from_i128(n: i128, d: i128) -> Self {
        debug_assert!(d != 0);
        if n == 0 {
            return Self::zero();
        }
        let neg = (n < 0) != (d < 0);
        let nu = n.unsigned_abs();
        let du = d.unsigned_abs();
        let g = gcd_u128(nu, du);
        let (nu, du) = (nu / g, du / g);
        if nu <= SMALL_MAX as u128 && du <= SMALL_MAX as u128 {
            let ns = if neg { -(nu as i64) } else { nu as i64 };
            return Rational { repr: Repr::Small(ns, du as i64) };
        }
        let mut nb = BigInt::from(nu);
        if neg {
            nb = -nb;
        }
        Rational { repr: Repr::Big(Box::new((nb, BigInt::from(du)))) }
    }

    // Already reduced, den > 0.
    fn from_reduced_i128(n: i128, d: i128) -> Self {
        if n.abs() <= SMALL_MAX && d <= SMALL_MAX {
            return Rational { repr: Repr::Small(n as i64, d as i64) };
        }
        Rational { repr: Repr::Big(Box::new((BigInt::from(n), BigInt::from(d)))) }
    }

    pub fn numer(&self) -> BigInt {
        match &self.repr {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.0.clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.repr {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.1.clone(),
        }
    }

    fn big_parts(&self) -> (BigInt, BigInt) {
        match &self.repr {
            Repr::Small(n, d) => (BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (b.0.clone(), b.1.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.repr, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.repr {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.1.is_one(),
        }
    }

    pub fn signum(&self) -> i32 {
        match &self.repr {
            Repr::Small(n, _) => n.signum() as i32,
            Repr::Big(b) => match b.0.sign() {
                Sign::Minus => -1,
                Sign::NoSign => 0,
                Sign::Plus => 1,
            },
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Result<Self, NumericError> {
        match &self.repr {
            Repr::Small(0, _) => Err(NumericError::DivisionByZero),
            Repr::Small(n, d) => {
                let (n, d) = if *n < 0 { (-*d, -*n) } else { (*d, *n) };
                Ok(Rational { repr: Repr::Small(n, d) })
            }
            Repr::Big(b) => Ok(Self::from_bigints(b.1.clone(), b.0.clone())),
        }
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(self.mul_ref(&rhs.recip()?))
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc.mul_ref(self);
        }
        acc
    }

    pub fn add_ref(&self, rhs: &Self) -> Self {
        match (&self.repr, &rhs.repr) {
            (Repr::Small(an, ad), Repr::Small(bn, bd)) => {
                if an == &0 {
                    return rhs.clone();
                }
                if bn == &0 {
                    return self.clone();
                }
                if ad == bd {
                    return Self::from_i128(*an as i128 + *bn as i128, *ad as i128);
                }
                let n = *an as i128 * *bd as i128 + *bn as i128 * *ad as i128;
                let d = *ad as i128 * *bd as i128;
                Self::from_i128(n, d)
            }
            _ => {
                let (an, ad) = self.big_parts();
                let (bn, bd) = rhs.big_parts();
                Self::from_bigints(an * &bd + bn * &ad, ad * bd)
            }
        }
    }

    pub fn sub_ref(&self, rhs: &Self) -> Self {
        self.add_ref(&-rhs)
    }

    pub fn mul_ref(&self, rhs: &Self) -> Self {
        match (&self.repr, &rhs.repr) {
            (Repr::Small(an, ad), Repr::Small(bn, bd)) => {
                if *an == 0 || *bn == 0 {
                    return Self::zero();
                }
                let g1 = gcd_u64(an.unsigned_abs(), *bd as u64) as i64;
                let g2 = gcd_u64(bn.unsigned_abs(), *ad as u64) as i64;
                let n = (*an / g1) as i128 * (*bn / g2) as i128;
                let d = (*ad / g2) as i128 * (*bd / g1) as i128;
                Self::from_reduced_i128(n, d)
            }
            _ => {
                if self.is_zero() || rhs.is_zero() {
                    return Self::zero();
                }
                let (an, ad) = self.big_parts();
                let (bn, bd) = rhs.big_parts();
                Self::from_bigints(an * bn, ad * bd)
            }
        }
    }

    /// Panics on a zero divisor; use [`Rational::checked_div`] for fallible division.
    pub fn div_ref(&self, rhs: &Self) -> Self {
        self.checked_div(rhs).expect("division by zero")
    }

    pub fn to_f64(&self) -> f64 {
        match &self.repr {
            Repr::Small(n, d) => {
                if n.unsigned_abs() < (1u64 << 53) && (*d as u64) < (1u64 << 53) {
                    *n as f64 / *d as f64
                } else {
                    big_ratio_to_f64(&BigInt::from(*n), &BigInt::from(*d))
                }
            }
            Repr::Big(b) => big_ratio_to_f64(&b.0, &b.1),
        }
    }

    /// Exact value of a finite binary64.
    pub fn from_f64(x: f64) -> Result<Self, NumericError> {
        if !x.is_finite() {
            return Err(NumericError::NotFinite(x));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant) * sign;
        Ok(if e >= 0 {
            Self::from_bigints(m << e as usize, BigInt::one())
        } else {
            Self::from_bigints(m, BigInt::one() << (-e) as usize)
        })
    }

    /// Parses a decimal literal such as `0.05`, `-1.25e-3` or `3` exactly.
    pub fn from_decimal_str(s: &str) -> Result<Self, NumericError> {
        let err = || NumericError::Parse(s.to_string());
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
            None => (s, 0),
        };
        let (neg, body) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num: BigInt = digits.parse().map_err(|_| err())?;
        if neg {
            num = -num;
        }
        let scale = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        Ok(if scale >= 0 {
            Self::from_bigints(num * num_traits::pow(ten, scale as usize), BigInt::one())
        } else {
            Self::from_bigints(num, num_traits::pow(ten, (-scale) as usize))
        })
    }
}

fn big_ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries ~64 significant bits.
    let shift = 64i64 - (n.bits() as i64 - d.bits() as i64);
    let q = if shift >= 0 { (n << shift as usize) / d } else { n / (d << (-shift) as usize) };
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

/// `p/q` in canonical form; errors on a zero denominator.
pub fn rat(p: i64, q: i64) -> Result<Rational, NumericError> {
    Rational::new(p, q)
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.repr {
            Repr::Small(n, d) => {
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                b.0.hash(state);
                b.1.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.repr, &other.repr) {
            (Repr::Small(an, ad), Repr::Small(bn, bd)) => {
                (*an as i128 * *bd as i128).cmp(&(*bn as i128 * *ad as i128))
            }
            _ => {
                let (an, ad) = self.big_parts();
                let (bn, bd) = other.big_parts();
                (an * bd).cmp(&(bn * ad))
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.1.is_one() => write!(f, "{}", b.0),
            Repr::Big(b) => write!(f, "{}/{}", b.0, b.1),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for Rational {
    type Err = NumericError;

    /// Accepts `p/q` or `p`, with an optional leading minus and no whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || NumericError::Parse(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (p, q) = match body.split_once('/') {
            Some((p, q)) => (parse_digits(p).ok_or_else(err)?, parse_digits(q).ok_or_else(err)?),
            None => (parse_digits(body).ok_or_else(err)?, BigInt::one()),
        };
        if q.is_zero() {
            return Err(NumericError::ZeroDenominator);
        }
        Ok(Self::from_bigints(if neg { -p } else { p }, q))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<i32> for Rational {
    fn from(n: i32) -> Self {
        Self::from_integer(n as i64)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.repr {
            Repr::Small(n, d) => Rational { repr: Repr::Small(-*n, *d) },
            Repr::Big(b) => Rational::shrink(-b.0.clone(), b.1.clone()),
        }
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $imp:ident, $assign_trait:ident, $assign_method:ident) => {
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$imp(&rhs)
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                self.$imp(rhs)
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$imp(&rhs)
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                self.$imp(rhs)
            }
        }
        impl $assign_trait<Rational> for Rational {
            fn $assign_method(&mut self, rhs: Rational) {
                *self = self.$imp(&rhs);
            }
        }
        impl<'a> $assign_trait<&'a Rational> for Rational {
            fn $assign_method(&mut self, rhs: &'a Rational) {
                *self = self.$imp(rhs);
            }
        }
    };
}

forward_binop!(Add, add, add_ref, AddAssign, add_assign);
forward_binop!(Sub, sub, sub_ref, SubAssign, sub_assign);
forward_binop!(Mul, mul, mul_ref, MulAssign, mul_assign);
forward_binop!(Div, div, div_ref, DivAssign, div_assign);

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::one(), |acc, x| acc * x)
    }
}

/// Arithmetic mode of a computation. Fixed when a problem is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[serde(alias = "approximate")]
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" | "approximate" => Ok(Mode::Float),
            other => Err(format!("unknown mode {other:?} (expected exact or float)")),
        }
    }
}

/// The scalar field a computation runs over: [`Rational`] or `f64`.
///
/// Generic code (behaviors, constraint residuals, the simplex) is written once
/// against this trait; the mode is decided by the type parameter, so exact and
/// approximate values can never meet in one computation.
pub trait Field:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// Exact conversion of a finite binary64 value.
    fn from_float(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn signum(&self) -> i32;
    fn add_ref(&self, rhs: &Self) -> Self;
    fn sub_ref(&self, rhs: &Self) -> Self;
    fn mul_ref(&self, rhs: &Self) -> Self;
    fn div_ref(&self, rhs: &Self) -> Self;
    fn abs(&self) -> Self;
    /// Textual form used in files: `p/q` for exact values, shortest round-trip decimal otherwise.
    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self, NumericError>;
    fn to_scalar(&self) -> Scalar;

    /// `self > tol` in float mode, `self > 0` in exact mode.
    fn exceeds(&self, tol: f64) -> bool;
    /// `|self| <= tol` in float mode, `self == 0` in exact mode.
    fn negligible(&self, tol: f64) -> bool;

    fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    /// `self -= a * b`
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        let p = a.mul_ref(b);
        *self -= &p;
    }

    /// `self += a * b`
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        let p = a.mul_ref(b);
        *self += &p;
    }
}

impl Field for Rational {
    const MODE: Mode = Mode::Exact;

    fn from_float(x: f64) -> Self {
        Rational::from_f64(x).expect("finite value")
    }

    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn from_int(n: i64) -> Self {
        Rational::from_integer(n)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn signum(&self) -> i32 {
        Rational::signum(self)
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        Rational::add_ref(self, rhs)
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        Rational::sub_ref(self, rhs)
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        Rational::mul_ref(self, rhs)
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        Rational::div_ref(self, rhs)
    }
    fn abs(&self) -> Self {
        Rational::abs(self)
    }
    fn to_text(&self) -> String {
        self.to_string()
    }
    fn parse_text(s: &str) -> Result<Self, NumericError> {
        s.parse()
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.clone())
    }
    fn exceeds(&self, _tol: f64) -> bool {
        self.is_positive()
    }
    fn negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

impl Field for f64 {
    const MODE: Mode = Mode::Float;

    fn from_float(x: f64) -> Self {
        x
    }

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn signum(&self) -> i32 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Result<Self, NumericError> {
        if let Ok(x) = s.parse::<f64>() {
            return Ok(x);
        }
        s.parse::<Rational>().map(|r| r.to_f64())
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Float(*self)
    }
    fn exceeds(&self, tol: f64) -> bool {
        *self > tol
    }
    fn negligible(&self, tol: f64) -> bool {
        f64::abs(*self) <= tol
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn add_mul_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
}

/// A value tagged with its arithmetic mode, for storage and I/O.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Parses `p/q` (or an integer) as exact in exact mode; float mode also accepts decimals.
    pub fn parse(s: &str, mode: Mode) -> Result<Self, NumericError> {
        match mode {
            Mode::Exact => s.parse().map(Scalar::Exact),
            Mode::Float => f64::parse_text(s).map(Scalar::Float),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => write!(f, "{}", x.to_text()),
        }
    }
}
