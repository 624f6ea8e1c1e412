//! Exact real arithmetic over multiquadratic fields.
//!
//! An [`Exact`] value is a finite sum `c_1·√r_1 + … + c_k·√r_k` with rational
//! coefficients and pairwise distinct square-free radicands. Such numbers are
//! closed under `+ − × ÷`, and the sign of any of them can be decided exactly by
//! splitting off one prime at a time. Weights like `1/√8` (or sums of them with
//! `1/√27`) therefore compare without floating error.
//!
//! Comparisons first consult a cached `f64` approximation and only fall back to
//! the exact procedure when the two sides are within a relative `1e-9`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SCREEN_REL: f64 = 1e-9;

/// An exact element of `Q(√2, √3, √5, …)`.
#[derive(Clone)]
pub struct Exact {
    /// Sorted by radicand; radicands square-free; coefficients non-zero.
    terms: Vec<(u64, BigRational)>,
    approx: f64,
}

/// Writes `n = s²·r` with `r` square-free and returns `(s, r)`.
pub fn squarefree_split(mut n: u64) -> (u64, u64) {
    assert!(n > 0, "squarefree_split of zero");
    let mut outside = 1u64;
    let mut inside = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        outside *= p.pow(e / 2);
        if e % 2 == 1 {
            inside *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    inside *= n;
    (outside, inside)
}

fn largest_prime_factor(mut n: u64) -> u64 {
    let mut largest = 1;
    let mut p = 2u64;
    while p * p <= n {
        while n % p == 0 {
            largest = p;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        largest = n;
    }
    largest
}

fn ratio_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn approx_of(terms: &[(u64, BigRational)]) -> f64 {
    terms
        .iter()
        .map(|(r, c)| ratio_to_f64(c) * (*r as f64).sqrt())
        .sum()
}

fn normalize(raw: Vec<(u64, BigRational)>) -> Vec<(u64, BigRational)> {
    let mut split: Vec<(u64, BigRational)> = raw
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(r, c)| {
            let (s, rad) = squarefree_split(r);
            (rad, c * BigRational::from_integer(BigInt::from(s)))
        })
        .collect();
    split.sort_by_key(|(r, _)| *r);
    let mut out: Vec<(u64, BigRational)> = Vec::with_capacity(split.len());
    for (r, c) in split {
        match out.last_mut() {
            Some((lr, lc)) if *lr == r => *lc += c,
            _ => out.push((r, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

fn mul_terms(a: &[(u64, BigRational)], b: &[(u64, BigRational)]) -> Vec<(u64, BigRational)> {
    let mut raw = Vec::with_capacity(a.len() * b.len());
    for (ra, ca) in a {
        for (rb, cb) in b {
            let g = ra.gcd(rb);
            let rad = (ra / g)
                .checked_mul(rb / g)
                .expect("radicand overflow in exact multiplication");
            raw.push((rad, ca * cb * BigRational::from_integer(BigInt::from(g))));
        }
    }
    normalize(raw)
}

/// Splits `terms` as `A + B·√p` for the largest prime `p` dividing a radicand.
fn split_prime(terms: &[(u64, BigRational)]) -> (u64, Vec<(u64, BigRational)>, Vec<(u64, BigRational)>) {
    let p = terms
        .iter()
        .map(|(r, _)| largest_prime_factor(*r))
        .max()
        .unwrap_or(1);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (r, c) in terms {
        if p > 1 && r % p == 0 {
            b.push((r / p, c.clone()));
        } else {
            a.push((*r, c.clone()));
        }
    }
    (p, a, b)
}

fn sub_terms(a: &[(u64, BigRational)], b: &[(u64, BigRational)]) -> Vec<(u64, BigRational)> {
    let mut raw: Vec<(u64, BigRational)> = a.to_vec();
    raw.extend(b.iter().map(|(r, c)| (*r, -c.clone())));
    normalize(raw)
}

fn scale_terms(a: &[(u64, BigRational)], k: &BigRational) -> Vec<(u64, BigRational)> {
    a.iter().map(|(r, c)| (*r, c * k)).collect()
}

fn exact_sign(terms: &[(u64, BigRational)]) -> Ordering {
    match terms {
        [] => Ordering::Equal,
        [(_, c)] => c.cmp(&BigRational::zero()),
        _ => {
            let approx = approx_of(terms);
            let mag: f64 = terms
                .iter()
                .map(|(r, c)| ratio_to_f64(c).abs() * (*r as f64).sqrt())
                .sum();
            if approx.is_finite() && mag.is_finite() && approx.abs() > SCREEN_REL * mag {
                return approx.partial_cmp(&0.0).unwrap();
            }
            let (p, a, b) = split_prime(terms);
            let sa = exact_sign(&a);
            let sb = exact_sign(&b);
            if sb == Ordering::Equal || sa == sb {
                return sa;
            }
            if sa == Ordering::Equal {
                return sb;
            }
            let a2 = mul_terms(&a, &a);
            let pb2 = scale_terms(&mul_terms(&b, &b), &BigRational::from_integer(BigInt::from(p)));
            match exact_sign(&sub_terms(&a2, &pb2)) {
                Ordering::Greater => sa,
                _ => sb,
            }
        }
    }
}

fn recip_terms(terms: &[(u64, BigRational)]) -> Option<Vec<(u64, BigRational)>> {
    match terms {
        [] => None,
        [(r, c)] => {
            // (c√r)⁻¹ = √r / (c·r)
            let denom = c * BigRational::from_integer(BigInt::from(*r));
            Some(vec![(*r, denom.recip())])
        }
        _ => {
            let (p, a, b) = split_prime(terms);
            let sqrt_p = vec![(p, BigRational::one())];
            if a.is_empty() {
                // (B√p)⁻¹ = B⁻¹·√p / p
                let inv_b = recip_terms(&b)?;
                let k = BigRational::new(BigInt::one(), BigInt::from(p));
                return Some(scale_terms(&mul_terms(&inv_b, &sqrt_p), &k));
            }
            let b_sqrt_p = mul_terms(&b, &sqrt_p);
            let conj = sub_terms(&a, &b_sqrt_p);
            let a2 = mul_terms(&a, &a);
            let pb2 = scale_terms(&mul_terms(&b, &b), &BigRational::from_integer(BigInt::from(p)));
            let denom = sub_terms(&a2, &pb2);
            let inv = recip_terms(&denom)?;
            Some(mul_terms(&conj, &inv))
        }
    }
}

impl Exact {
    fn from_normalized(terms: Vec<(u64, BigRational)>) -> Self {
        let approx = approx_of(&terms);
        Exact { terms, approx }
    }

    /// Builds `Σ c·√r` from arbitrary (not necessarily square-free) radicands.
    pub fn from_terms<I: IntoIterator<Item = (u64, BigRational)>>(terms: I) -> Self {
        Self::from_normalized(normalize(terms.into_iter().collect()))
    }

    pub fn rational(q: BigRational) -> Self {
        Self::from_terms([(1, q)])
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den` as an exact rational.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `coeff · √radicand`.
    pub fn root(coeff: BigRational, radicand: u64) -> Self {
        Self::from_terms([(radicand, coeff)])
    }

    /// The exact square root of a non-negative rational whose reduced
    /// numerator·denominator fits in `u64`.
    pub fn sqrt_of(q: &BigRational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Self::zero());
        }
        // √(a/b) = √(ab) / b
        let prod = (q.numer() * q.denom()).to_u64()?;
        let coeff = BigRational::new(BigInt::one(), q.denom().clone());
        Some(Self::root(coeff, prod))
    }

    /// `1/√n`.
    pub fn inv_sqrt(n: u64) -> Self {
        assert!(n > 0);
        Self::root(BigRational::new(BigInt::one(), BigInt::from(n)), n)
    }

    pub fn terms(&self) -> &[(u64, BigRational)] {
        &self.terms
    }

    pub fn is_rational(&self) -> bool {
        self.terms.iter().all(|(r, _)| *r == 1)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(BigRational::zero()),
            [(1, c)] => Some(c.clone()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        // `+ 0.0` turns a negated zero into `0.0`.
        self.approx + 0.0
    }

    /// Converts a finite `f64` to the exact rational it represents.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self::rational)
    }

    pub fn signum(&self) -> Ordering {
        exact_sign(&self.terms)
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Option<Self> {
        recip_terms(&self.terms).map(|t| Self::from_normalized(normalize(t)))
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Zero for Exact {
    fn zero() -> Self {
        Exact { terms: Vec::new(), approx: 0.0 }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Exact {
    fn one() -> Self {
        Self::integer(1)
    }
}

impl PartialEq for Exact {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Exact {}

impl Hash for Exact {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.terms.hash(state);
    }
}

impl PartialOrd for Exact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exact {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.terms == other.terms {
            return Ordering::Equal;
        }
        let (a, b) = (self.approx, other.approx);
        if a.is_finite() && b.is_finite() && (a - b).abs() > SCREEN_REL * (a.abs() + b.abs()) {
            return a.partial_cmp(&b).unwrap();
        }
        exact_sign(&sub_terms(&self.terms, &other.terms))
    }
}

impl<'a> Add<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn add(self, rhs: &'a Exact) -> Exact {
        if rhs.terms.is_empty() {
            return self.clone();
        }
        if self.terms.is_empty() {
            return rhs.clone();
        }
        let mut raw = self.terms.clone();
        raw.extend(rhs.terms.iter().cloned());
        let terms = normalize(raw);
        let approx = if terms.is_empty() { 0.0 } else { self.approx + rhs.approx };
        Exact { terms, approx }
    }
}

impl<'a> Sub<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn sub(self, rhs: &'a Exact) -> Exact {
        let terms = sub_terms(&self.terms, &rhs.terms);
        let approx = if terms.is_empty() { 0.0 } else { self.approx - rhs.approx };
        Exact { terms, approx }
    }
}

impl<'a> Mul<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn mul(self, rhs: &'a Exact) -> Exact {
        Exact::from_normalized(mul_terms(&self.terms, &rhs.terms))
    }
}

impl<'a> Div<&'a Exact> for &'a Exact {
    type Output = Exact;
    fn div(self, rhs: &'a Exact) -> Exact {
        let inv = rhs.recip().expect("exact division by zero");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr<Exact> for Exact {
            type Output = Exact;
            fn $m(self, rhs: Exact) -> Exact { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Exact> for Exact {
            type Output = Exact;
            fn $m(self, rhs: &'a Exact) -> Exact { (&self).$m(rhs) }
        }
    )*};
}
forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

impl AddAssign<&Exact> for Exact {
    fn add_assign(&mut self, rhs: &Exact) {
        *self = &*self + rhs;
    }
}

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact {
            terms: self.terms.into_iter().map(|(r, c)| (r, -c)).collect(),
            approx: -self.approx,
        }
    }
}

impl Neg for &Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        -self.clone()
    }
}

impl Sum for Exact {
    fn sum<I: Iterator<Item = Exact>>(iter: I) -> Exact {
        let raw: Vec<(u64, BigRational)> = iter.flat_map(|e| e.terms).collect();
        Exact::from_terms(raw)
    }
}

impl<'a> Sum<&'a Exact> for Exact {
    fn sum<I: Iterator<Item = &'a Exact>>(iter: I) -> Exact {
        let raw: Vec<(u64, BigRational)> = iter.flat_map(|e| e.terms.iter().cloned()).collect();
        Exact::from_terms(raw)
    }
}

impl From<BigRational> for Exact {
    fn from(q: BigRational) -> Self {
        Exact::rational(q)
    }
}

impl From<i64> for Exact {
    fn from(n: i64) -> Self {
        Exact::integer(n)
    }
}

/// Formats a rational as `"p/q"` (always with an explicit denominator).
pub fn format_ratio(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
        let d = BigInt::from_str(d.trim()).map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(BigRational::new(n, d))
    } else {
        BigInt::from_str(s)
            .map(BigRational::from_integer)
            .map_err(|e| format!("bad rational {s:?}: {e}"))
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (r, c)) in self.terms.iter().enumerate() {
            let c = if i > 0 && c.is_negative() {
                write!(f, " - ")?;
                -c.clone()
            } else {
                if i > 0 {
                    write!(f, " + ")?;
                }
                c.clone()
            };
            let coeff = if c.is_integer() { c.numer().to_string() } else { format_ratio(&c) };
            match (*r, coeff.as_str()) {
                (1, _) => write!(f, "{coeff}")?,
                (_, "1") => write!(f, "sqrt({r})")?,
                (_, "-1") => write!(f, "-sqrt({r})")?,
                _ => write!(f, "{coeff}*sqrt({r})")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact({self} ≈ {})", self.approx)
    }
}

#[derive(Serialize, Deserialize)]
struct RootTerm {
    p: String,
    q: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExactRepr {
    Ratio(String),
    Int(i64),
    Root(RootTerm),
    Sum(Vec<RootTerm>),
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.terms.as_slice() {
            [] => serializer.serialize_str("0/1"),
            [(1, c)] => serializer.serialize_str(&format_ratio(c)),
            [(r, c)] => RootTerm { p: format_ratio(c), q: *r }.serialize(serializer),
            many => many
                .iter()
                .map(|(r, c)| RootTerm { p: format_ratio(c), q: *r })
                .collect::<Vec<_>>()
                .serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let root = |t: RootTerm| -> Result<(u64, BigRational), D::Error> {
            if t.q == 0 {
                return Err(D::Error::custom("radicand must be positive"));
            }
            Ok((t.q, parse_ratio(&t.p).map_err(D::Error::custom)?))
        };
        match ExactRepr::deserialize(deserializer)? {
            ExactRepr::Ratio(s) => parse_ratio(&s).map(Exact::rational).map_err(D::Error::custom),
            ExactRepr::Int(n) => Ok(Exact::integer(n)),
            ExactRepr::Root(t) => Ok(Exact::from_terms([root(t)?])),
            ExactRepr::Sum(ts) => {
                let terms = ts.into_iter().map(root).collect::<Result<Vec<_>, _>>()?;
                Ok(Exact::from_terms(terms))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_split(8), (2, 2));
        assert_eq!(squarefree_split(27), (3, 3));
        assert_eq!(squarefree_split(72), (6, 2));
        assert_eq!(squarefree_split(30), (1, 30));
        assert_eq!(squarefree_split(1), (1, 1));
    }

    #[test]
    fn root_normalizes() {
        let a = Exact::root(BigRational::one(), 8);
        let b = Exact::root(BigRational::from_integer(2.into()), 2);
        assert_eq!(a, b);
        assert_eq!(Exact::inv_sqrt(8) * Exact::inv_sqrt(8), Exact::ratio(1, 8));
    }

    #[test]
    fn sign_of_close_radical_sums() {
        // (√2 + √3)² = 5 + 2√6
        let s2 = Exact::root(BigRational::one(), 2);
        let s3 = Exact::root(BigRational::one(), 3);
        let sum = &s2 + &s3;
        assert_eq!((&sum * &sum), Exact::integer(5) + Exact::root(BigRational::from_integer(2.into()), 6));
        // consecutive continued-fraction convergents of √2 straddle it
        assert!(Exact::ratio(1393, 985) < s2);
        assert!(Exact::ratio(3363, 2378) > s2);
        let below = Exact::ratio(1_414_213_562, 1_000_000_000);
        assert!(below < s2);
    }

    #[test]
    fn exact_sign_without_screen() {
        // √2 minus a 15-digit truncation is about 6e-15, below the float screen
        let s2 = Exact::root(BigRational::one(), 2);
        let x = Exact::ratio(141_421_356_237_309, 100_000_000_000_000);
        let d = &s2 - &x;
        assert_eq!(exact_sign(d.terms()), Ordering::Greater);
        assert_eq!(exact_sign((-d).terms()), Ordering::Less);
    }

    #[test]
    fn reciprocal_round_trips() {
        let v = Exact::integer(1) + Exact::root(BigRational::one(), 2) + Exact::root(BigRational::new(1.into(), 3.into()), 15);
        let inv = v.recip().unwrap();
        assert_eq!(&v * &inv, Exact::one());
        assert_eq!(Exact::inv_sqrt(27).recip().unwrap(), Exact::root(BigRational::from_integer(3.into()), 3));
    }

    #[test]
    fn serde_forms() {
        let q: Exact = serde_json::from_str("\"3/5\"").unwrap();
        assert_eq!(q, Exact::ratio(3, 5));
        let r: Exact = serde_json::from_str(r#"{"p":"1/2","q":2}"#).unwrap();
        assert_eq!(r, Exact::inv_sqrt(2));
        let r: Exact = serde_json::from_str(r#"{"p":"1/2","q":8}"#).unwrap();
        assert_eq!(r, Exact::root(BigRational::one(), 2));
        assert_eq!(serde_json::to_string(&Exact::ratio(3, 5)).unwrap(), "\"3/5\"");
        let s = Exact::inv_sqrt(8) + Exact::inv_sqrt(27);
        let back: Exact = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
