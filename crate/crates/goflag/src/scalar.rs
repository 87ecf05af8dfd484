//! Scalar arithmetic.
//!
//! Two arithmetic modes are supported. [`Exact`] holds elements of the real
//! field generated by the rationals and square roots of positive integers,
//! stored in the canonical form `sum q_r * sqrt(r)` over distinct squarefree
//! radicands `r`. Zero tests, signs and inverses are exact. `f64` is the
//! floating-point mode. Generic code is written against the [`Field`] trait.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Arithmetic mode of a computation session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Float => write!(f, "float"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "rational" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Rational number with an `i64` fast path.
///
/// The representation is canonical: a value is stored as `Small` whenever its
/// reduced numerator and denominator fit, so structural equality is value
/// equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rat {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl Rat {
    pub fn zero() -> Self {
        Rat::Small(Ratio::from_integer(0))
    }

    pub fn one() -> Self {
        Rat::Small(Ratio::from_integer(1))
    }

    pub fn from_i64(v: i64) -> Self {
        Rat::Small(Ratio::from_integer(v))
    }

    /// `n/d`; panics if `d == 0`.
    pub fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Rat::from_big(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_big(v: BigRational) -> Self {
        match (v.numer().to_i64(), v.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN => Rat::Small(Ratio::new_raw(n, d)),
            _ => Rat::Big(v),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(r) => {
                BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            }
            Rat::Big(b) => b.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Rat::Small(r) => r.is_zero(),
            Rat::Big(b) => b.is_zero(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Rat::Small(r) => r.numer().signum() as i32,
            Rat::Big(b) => {
                if b.is_zero() {
                    0
                } else if b.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn add(&self, o: &Rat) -> Rat {
        if let (Rat::Small(a), Rat::Small(b)) = (self, o) {
            if let Some(c) = a.checked_add(b) {
                return Rat::demote(c);
            }
        }
        Rat::from_big(self.to_big() + o.to_big())
    }

    pub fn sub(&self, o: &Rat) -> Rat {
        if let (Rat::Small(a), Rat::Small(b)) = (self, o) {
            if let Some(c) = a.checked_sub(b) {
                return Rat::demote(c);
            }
        }
        Rat::from_big(self.to_big() - o.to_big())
    }

    pub fn mul(&self, o: &Rat) -> Rat {
        if let (Rat::Small(a), Rat::Small(b)) = (self, o) {
            if let Some(c) = a.checked_mul(b) {
                return Rat::demote(c);
            }
        }
        Rat::from_big(self.to_big() * o.to_big())
    }

    /// Division; `None` when `o` is zero.
    pub fn div(&self, o: &Rat) -> Option<Rat> {
        if o.is_zero() {
            return None;
        }
        if let (Rat::Small(a), Rat::Small(b)) = (self, o) {
            if let Some(c) = a.checked_div(b) {
                return Some(Rat::demote(c));
            }
        }
        Some(Rat::from_big(self.to_big() / o.to_big()))
    }

    pub fn neg(&self) -> Rat {
        match self {
            Rat::Small(r) => Rat::Small(-*r),
            Rat::Big(b) => Rat::from_big(-b.clone()),
        }
    }

    pub fn abs(&self) -> Rat {
        if self.signum() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(r) => *r.numer() as f64 / *r.denom() as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn numer_denom(&self) -> (BigInt, BigInt) {
        let b = self.to_big();
        (b.numer().clone(), b.denom().clone())
    }

    fn demote(c: Ratio<i64>) -> Rat {
        if *c.numer() == i64::MIN {
            Rat::from_big(BigRational::new_raw(
                BigInt::from(*c.numer()),
                BigInt::from(*c.denom()),
            ))
        } else {
            Rat::Small(c)
        }
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sub(other).signum().cmp(&0)
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.numer_denom();
        write!(f, "{n}/{d}")
    }
}

impl FromStr for Rat {
    type Err = Error;

    /// Accepts `p`, `p/q` and finite decimals such as `-2.01`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational number: `{s}`"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Rat::from_big(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int.trim_start().starts_with('-');
            let int_part: BigInt = match int.trim() {
                "" | "-" | "+" => BigInt::zero(),
                t => t.parse().map_err(|_| bad())?,
            };
            let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let mag = int_part.abs() * &scale + frac_part;
            let numer = if negative { -mag } else { mag };
            return Ok(Rat::from_big(BigRational::new(numer, scale)));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Rat::from_big(BigRational::from_integer(n)))
    }
}

/// Squarefree decomposition `n = s^2 * f` returned as `(s, f)`.
fn squarefree_split(mut n: u64) -> (u64, u64) {
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            s *= p;
        }
        if e % 2 == 1 {
            f *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, f * n)
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    n
}

type Terms = SmallVec<[(u64, Rat); 1]>;

/// Exact element of `Q(sqrt 2, sqrt 3, sqrt 5, ...)`.
///
/// Stored as a sorted list of `(radicand, coefficient)` pairs with distinct
/// squarefree radicands and nonzero coefficients. Square roots of distinct
/// squarefree integers are linearly independent over `Q`, so this form is
/// unique and structural equality decides equality of values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact {
    terms: Terms,
}

impl Exact {
    pub fn zero() -> Self {
        Exact {
            terms: SmallVec::new(),
        }
    }

    pub fn from_rat(q: Rat) -> Self {
        Self::term(1, q)
    }

    pub fn from_i64(v: i64) -> Self {
        Self::from_rat(Rat::from_i64(v))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::from_rat(Rat::new(n, d))
    }

    /// `q * sqrt(r)` for a squarefree `r`.
    fn term(r: u64, q: Rat) -> Self {
        let mut terms = SmallVec::new();
        if !q.is_zero() {
            terms.push((r, q));
        }
        Exact { terms }
    }

    /// `sqrt(n)` for a nonnegative integer.
    pub fn sqrt_int(n: u64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        let (s, f) = squarefree_split(n);
        Self::term(f, Rat::from_i64(s as i64))
    }

    /// The rational value, if the element is rational.
    pub fn as_rat(&self) -> Option<Rat> {
        match self.terms.as_slice() {
            [] => Some(Rat::zero()),
            [(1, q)] => Some(q.clone()),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rat().is_some()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rat)> {
        self.terms.iter().map(|(r, q)| (*r, q))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn from_unsorted(mut raw: Vec<(u64, Rat)>) -> Self {
        raw.sort_by_key(|t| t.0);
        let mut terms: Terms = SmallVec::new();
        for (r, q) in raw {
            match terms.last_mut() {
                Some((lr, lq)) if *lr == r => *lq = lq.add(&q),
                _ => terms.push((r, q)),
            }
        }
        terms.retain(|t| !t.1.is_zero());
        Exact { terms }
    }

    fn add_ref(&self, o: &Exact) -> Exact {
        if o.terms.is_empty() {
            return self.clone();
        }
        if self.terms.is_empty() {
            return o.clone();
        }
        if let ([(r1, q1)], [(r2, q2)]) = (self.terms.as_slice(), o.terms.as_slice()) {
            if r1 == r2 {
                return Self::term(*r1, q1.add(q2));
            }
        }
        let mut out: Terms = SmallVec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < o.terms.len() {
            let take_left =
                j >= o.terms.len() || (i < self.terms.len() && self.terms[i].0 < o.terms[j].0);
            let take_right =
                i >= self.terms.len() || (j < o.terms.len() && o.terms[j].0 < self.terms[i].0);
            if take_left {
                out.push(self.terms[i].clone());
                i += 1;
            } else if take_right {
                out.push(o.terms[j].clone());
                j += 1;
            } else {
                let q = self.terms[i].1.add(&o.terms[j].1);
                if !q.is_zero() {
                    out.push((self.terms[i].0, q));
                }
                i += 1;
                j += 1;
            }
        }
        Exact { terms: out }
    }

    fn neg_ref(&self) -> Exact {
        Exact {
            terms: self.terms.iter().map(|(r, q)| (*r, q.neg())).collect(),
        }
    }

    fn mul_ref(&self, o: &Exact) -> Exact {
        if self.terms.is_empty() || o.terms.is_empty() {
            return Self::zero();
        }
        if let ([(r1, q1)], [(r2, q2)]) = (self.terms.as_slice(), o.terms.as_slice()) {
            let (r, g) = Self::radical_product(*r1, *r2);
            return Self::term(r, q1.mul(q2).mul(&Rat::from_i64(g as i64)));
        }
        let mut raw = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (r1, q1) in &self.terms {
            for (r2, q2) in &o.terms {
                let (r, g) = Self::radical_product(*r1, *r2);
                raw.push((r, q1.mul(q2).mul(&Rat::from_i64(g as i64))));
            }
        }
        Self::from_unsorted(raw)
    }

    /// `sqrt(a) * sqrt(b) = g * sqrt(r)` for squarefree `a`, `b`.
    fn radical_product(a: u64, b: u64) -> (u64, u64) {
        let g = a.gcd(&b);
        let r = (a / g).checked_mul(b / g).expect("radicand overflow");
        (r, g)
    }

    /// Splits `self = a + b*sqrt(p)` where no radicand of `a` or `b` is divisible by `p`.
    fn split_prime(&self, p: u64) -> (Exact, Exact) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (r, q) in &self.terms {
            if r % p == 0 {
                b.push((r / p, q.clone()));
            } else {
                a.push((*r, q.clone()));
            }
        }
        (Self::from_unsorted(a), Self::from_unsorted(b))
    }

    fn some_prime(&self) -> Option<u64> {
        self.terms
            .iter()
            .map(|t| t.0)
            .filter(|r| *r > 1)
            .max()
            .map(smallest_prime_factor)
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inverse(&self) -> Option<Exact> {
        match self.terms.as_slice() {
            [] => None,
            [(r, q)] => {
                // 1 / (q sqrt r) = sqrt r / (q r)
                let c = Rat::one().div(&q.mul(&Rat::from_i64(*r as i64)))?;
                Some(Self::term(*r, c))
            }
            _ => {
                let p = self.some_prime().expect("multi-term element has a radical");
                let (a, b) = self.split_prime(p);
                let pe = Exact::from_i64(p as i64);
                let denom = a.mul_ref(&a).add_ref(&pe.mul_ref(&b).mul_ref(&b).neg_ref());
                let conj = a.add_ref(&b.mul_ref(&Exact::sqrt_int(p)).neg_ref());
                Some(conj.mul_ref(&denom.inverse()?))
            }
        }
    }

    /// Exact sign.
    pub fn signum(&self) -> i32 {
        match self.terms.as_slice() {
            [] => 0,
            [(_, q)] => q.signum(),
            _ => {
                let p = self.some_prime().expect("multi-term element has a radical");
                let (a, b) = self.split_prime(p);
                let (sa, sb) = (a.signum(), b.signum());
                if sb == 0 || sa == sb {
                    return sa;
                }
                if sa == 0 {
                    return sb;
                }
                let pe = Exact::from_i64(p as i64);
                let d = a.mul_ref(&a).add_ref(&pe.mul_ref(&b).mul_ref(&b).neg_ref());
                sa * d.signum()
            }
        }
    }

    /// Square root, available when the element is a nonnegative rational.
    pub fn sqrt(&self) -> Option<Exact> {
        let q = self.as_rat()?;
        if q.signum() < 0 {
            return None;
        }
        if q.is_zero() {
            return Some(Self::zero());
        }
        let (n, d) = q.numer_denom();
        // sqrt(n/d) = sqrt(n d) / d
        let nd = (n * &d).to_u64()?;
        let d = d.to_i64()?;
        let (s, f) = squarefree_split(nd);
        Some(Self::term(f, Rat::new(s as i64, d)))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, q)| q.to_f64() * (*r as f64).sqrt())
            .sum()
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        for (idx, (r, q)) in self.terms.iter().enumerate() {
            let body = if *r == 1 {
                format!("{}", q.abs())
            } else {
                format!("{}*sqrt({r})", q.abs())
            };
            match (idx, q.signum() < 0) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, "+{body}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Exact {
    type Err = Error;

    /// Parses sums of terms, each a product or quotient of decimals and
    /// `sqrt(n)` factors, e.g. `1/2-3/4*sqrt(2)` or `sqrt(3)/2`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let bytes = compact.as_bytes();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'(' {
                pieces.push(&compact[start..i]);
                start = i;
            }
        }
        pieces.push(&compact[start..]);
        let mut acc = Exact::zero();
        for piece in pieces {
            let (sign, body) = match piece.as_bytes()[0] {
                b'-' => (-1, &piece[1..]),
                b'+' => (1, &piece[1..]),
                _ => (1, piece),
            };
            if body.is_empty() {
                return Err(Error::Parse(format!("empty term in `{s}`")));
            }
            let mut term = Exact::from_i64(sign);
            let mut divide = false;
            let mut rest = body;
            loop {
                let end = rest.find(['*', '/']).unwrap_or(rest.len());
                let factor = &rest[..end];
                let value = if let Some(inner) = factor.strip_prefix("sqrt(") {
                    let inner = inner
                        .strip_suffix(')')
                        .ok_or_else(|| Error::Parse(format!("malformed radical in `{s}`")))?;
                    let n: u64 = inner
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad radicand in `{s}`")))?;
                    Exact::sqrt_int(n)
                } else {
                    Exact::from_rat(factor.parse::<Rat>()?)
                };
                term = if divide {
                    term.mul_ref(
                        &value
                            .inverse()
                            .ok_or_else(|| Error::Parse(format!("division by zero in `{s}`")))?,
                    )
                } else {
                    term.mul_ref(&value)
                };
                if end == rest.len() {
                    break;
                }
                divide = rest.as_bytes()[end] == b'/';
                rest = &rest[end + 1..];
            }
            acc = acc.add_ref(&term);
        }
        Ok(acc)
    }
}

impl Add for Exact {
    type Output = Exact;
    fn add(self, o: Exact) -> Exact {
        self.add_ref(&o)
    }
}

impl Sub for Exact {
    type Output = Exact;
    fn sub(self, o: Exact) -> Exact {
        self.add_ref(&o.neg_ref())
    }
}

impl Mul for Exact {
    type Output = Exact;
    fn mul(self, o: Exact) -> Exact {
        self.mul_ref(&o)
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        self.neg_ref()
    }
}

impl AddAssign for Exact {
    fn add_assign(&mut self, o: Exact) {
        *self = self.add_ref(&o);
    }
}

impl SubAssign for Exact {
    fn sub_assign(&mut self, o: Exact) {
        *self = self.add_ref(&o.neg_ref());
    }
}

impl PartialOrd for Exact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.add_ref(&other.neg_ref()).signum().cmp(&0))
    }
}

/// Arithmetic interface shared by both modes.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
    fn from_exact(x: &Exact) -> Self;
    /// Float input; only available in float mode.
    fn from_f64(x: f64) -> Option<Self>;
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn signum(&self) -> i32;
    fn sqrt(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Serialized form: `"p/q"` strings (with `*sqrt(n)` terms) in exact mode,
    /// JSON numbers in float mode.
    fn to_json(&self) -> serde_json::Value;

    fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.clone() * i)
    }

    fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `true` when `self` is zero, or in float mode within `tol` of zero.
    fn negligible(&self, tol: f64) -> bool {
        match Self::MODE {
            Mode::Exact => self.is_zero(),
            Mode::Float => self.to_f64().abs() <= tol,
        }
    }
}

impl Field for Exact {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Exact::zero()
    }
    fn one() -> Self {
        Exact::from_i64(1)
    }
    fn from_i64(v: i64) -> Self {
        Exact::from_i64(v)
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        Exact::ratio(n, d)
    }
    fn from_exact(x: &Exact) -> Self {
        x.clone()
    }
    fn from_f64(_: f64) -> Option<Self> {
        None
    }
    fn inv(&self) -> Option<Self> {
        self.inverse()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn signum(&self) -> i32 {
        Exact::signum(self)
    }
    fn sqrt(&self) -> Option<Self> {
        Exact::sqrt(self)
    }
    fn to_f64(&self) -> f64 {
        Exact::to_f64(self)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

impl Field for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn from_exact(x: &Exact) -> Self {
        x.to_f64()
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
    fn inv(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
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
    fn sqrt(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(f64::sqrt(*self))
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// A parameter value as read from user input: exact or floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(Exact),
    Float(f64),
}

impl Num {
    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(e) => e.to_f64(),
            Num::Float(x) => *x,
        }
    }

    /// Converts into the session field; exact mode rejects float inputs.
    pub fn to_field<F: Field>(&self) -> Result<F> {
        match (self, F::MODE) {
            (Num::Exact(e), _) => Ok(F::from_exact(e)),
            (Num::Float(x), _) => F::from_f64(*x).ok_or_else(|| {
                Error::Parse(format!(
                    "float value {x} cannot be used in exact mode; write it as a string `p/q`"
                ))
            }),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Num> {
        match v {
            serde_json::Value::String(s) => Ok(Num::Exact(s.parse()?)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Num::Exact(Exact::from_i64(i)))
                } else {
                    Ok(Num::Float(n.as_f64().unwrap_or(f64::NAN)))
                }
            }
            other => Err(Error::Parse(format!(
                "expected a number or a `p/q` string, found {other}"
            ))),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Num::Exact(e) => e.to_json(),
            Num::Float(x) => x.to_json(),
        }
    }
}

impl From<Exact> for Num {
    fn from(e: Exact) -> Self {
        Num::Exact(e)
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num::Float(x)
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::Exact(Exact::from_i64(v))
    }
}
