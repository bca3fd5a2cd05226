//! Exact arithmetic helpers.
//!
//! The power-law normalizations `λ^{-φ}` with rational `φ` are irrational in
//! general, so maximal-function values are carried as [`Radical`]s: a
//! nonnegative rational coefficient times a product of integer bases raised to
//! rational exponents. Products stay closed and comparisons are decided
//! exactly by raising both sides to a common power.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i64>;

/// `floor(n^(1/k))`.
pub fn iroot(n: u64, k: u32) -> u64 {
    assert!(k >= 1, "root degree must be positive");
    if k == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && pow_exceeds(r, k, n) {
        r -= 1;
    }
    while !pow_exceeds(r + 1, k, n) {
        r += 1;
    }
    r
}

/// `ceil(n^(1/k))`.
pub fn iroot_ceil(n: u64, k: u32) -> u64 {
    let r = iroot(n, k);
    if checked_pow(r, k) == Some(n) {
        r
    } else {
        r + 1
    }
}

fn pow_exceeds(base: u64, k: u32, bound: u64) -> bool {
    match checked_pow(base, k) {
        Some(v) => v > bound,
        None => true,
    }
}

/// `base^k` as a `u64`, or `None` on overflow.
pub fn checked_pow(base: u64, k: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// `Σ_j |x_j|^k`, the degree-`k` norm of a lattice vector.
pub fn power_norm(coords: &[i64], k: u32) -> u64 {
    coords.iter().map(|&c| checked_pow(c.unsigned_abs(), k).expect("coordinate power overflows u64")).sum()
}

/// Smallest integer `n ≥ 0` with `n ≥ w·λ^θ`, decided exactly.
///
/// With `θ = p/q` and `w = a/b` the comparison `n ≥ w·λ^θ` is equivalent to
/// `(n·b)^q ≥ a^q·λ^p`, which involves integers only.
pub fn ceil_scaled_power(w: Rational, lambda: u64, theta: Rational) -> u64 {
    assert!(*w.numer() >= 0 && *theta.numer() >= 0, "nonnegative width and exponent");
    if w.is_zero() {
        return 0;
    }
    let (p, q) = (*theta.numer() as u32, *theta.denom() as u32);
    let (a, b) = (BigUint::from(*w.numer() as u64), BigUint::from(*w.denom() as u64));
    let rhs = a.pow(q) * BigUint::from(lambda).pow(p);
    let covers = |n: u64| (BigUint::from(n) * &b).pow(q) >= rhs;
    let approx = w.to_f64().unwrap() * (lambda as f64).powf(p as f64 / q as f64);
    let mut n = approx.ceil().max(0.0) as u64;
    while n > 0 && covers(n - 1) {
        n -= 1;
    }
    while !covers(n) {
        n += 1;
    }
    n
}

/// Smallest integer `μ ≥ 0` with `μ > λ − w·λ^θ`: the first norm value inside
/// the half-open window `(λ − w·λ^θ, λ]`.
pub fn window_floor(lambda: u64, w: Rational, theta: Rational) -> u64 {
    let c = ceil_scaled_power(w, lambda, theta);
    // integers μ with λ − μ < c are exactly those with μ ≥ λ − c + 1
    (lambda + 1).saturating_sub(c)
}

/// Parses `"a/b"`, `"a"` or an exact decimal `"a.bc"` into a rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        return (d != 0).then(|| Rational::new(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let w: i64 = match whole {
            "" | "-" | "+" => 0,
            _ => whole.parse().ok()?,
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().ok()?;
        let magnitude = w.checked_abs()?.checked_mul(scale)?.checked_add(f)?;
        return Some(Rational::new(if negative { -magnitude } else { magnitude }, scale));
    }
    text.parse::<i64>().ok().map(Rational::from_integer)
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    ln_big_rational(r).exp() * if r.is_negative() { -1.0 } else { 1.0 }
}

pub(crate) fn biguint_to_f64(n: &BigUint) -> f64 {
    if n.is_zero() {
        0.0
    } else {
        ln_biguint(n).exp()
    }
}

fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        (n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn ln_big_rational(r: &BigRational) -> f64 {
    ln_biguint(&r.numer().magnitude().clone()) - ln_biguint(&r.denom().magnitude().clone())
}

fn pow_signed(base: &BigRational, exp: i64) -> BigRational {
    let p = base.pow(exp.unsigned_abs() as i32);
    if exp < 0 {
        p.recip()
    } else {
        p
    }
}

/// A nonnegative real of the form `c · Π bᵢ^{eᵢ}` with `c` rational, `bᵢ ≥ 2`
/// integers and `0 < eᵢ < 1` rational.
#[derive(Clone, Debug)]
pub struct Radical {
    coef: BigRational,
    factors: Vec<(BigUint, Rational)>,
}

impl Radical {
    pub fn zero() -> Self {
        Self::from_ratio(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_ratio(BigRational::one())
    }

    pub fn from_ratio(coef: BigRational) -> Self {
        assert!(!coef.is_negative(), "radicals are nonnegative");
        Radical { coef, factors: Vec::new() }
    }

    pub fn from_integer(n: u128) -> Self {
        Self::from_ratio(BigRational::from_integer(BigInt::from(n)))
    }

    /// `base^exp`. A zero base requires a positive exponent; `0^0 = 1`.
    pub fn power(base: u64, exp: Rational) -> Self {
        Self::power_big(BigUint::from(base), exp)
    }

    fn power_big(base: BigUint, exp: Rational) -> Self {
        if exp.is_zero() || base.is_one() {
            return Self::one();
        }
        if base.is_zero() {
            assert!(exp.is_positive(), "0 raised to a negative power");
            return Self::zero();
        }
        let mut r = Self::one();
        r.push_factor(base, exp);
        r
    }

    pub fn coefficient(&self) -> &BigRational {
        &self.coef
    }

    pub fn is_zero(&self) -> bool {
        self.coef.is_zero()
    }

    fn push_factor(&mut self, base: BigUint, exp: Rational) {
        if base.is_one() || exp.is_zero() {
            return;
        }
        let whole = exp.floor();
        let frac = exp - whole;
        let b = BigRational::from_integer(BigInt::from(base.clone()));
        self.coef *= pow_signed(&b, whole.to_integer());
        if frac.is_zero() {
            return;
        }
        match self.factors.iter_mut().find(|(fb, _)| *fb == base) {
            Some(slot) => {
                let e = slot.1 + frac;
                if e >= Rational::one() {
                    self.coef *= b;
                    slot.1 = e - Rational::one();
                } else {
                    slot.1 = e;
                }
            }
            None => self.factors.push((base, frac)),
        }
        self.factors.retain(|(_, e)| !e.is_zero());
        self.factors.sort();
    }

    pub fn mul(&self, other: &Radical) -> Radical {
        if self.is_zero() || other.is_zero() {
            return Radical::zero();
        }
        let mut out = Radical::from_ratio(&self.coef * &other.coef);
        for (b, e) in self.factors.iter().chain(other.factors.iter()) {
            out.push_factor(b.clone(), *e);
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Radical {
        self.mul(&Radical::from_ratio(c.clone()))
    }

    /// `self^r` for rational `r` (requires `self > 0` when `r ≤ 0`).
    pub fn pow(&self, r: Rational) -> Radical {
        if r.is_zero() {
            return Radical::one();
        }
        if self.is_zero() {
            assert!(r.is_positive(), "0 raised to a negative power");
            return Radical::zero();
        }
        let mut out = Radical::one();
        if r.is_integer() {
            out.coef = pow_signed(&self.coef, r.to_integer());
        } else {
            out.push_factor(self.coef.numer().magnitude().clone(), r);
            out.push_factor(self.coef.denom().magnitude().clone(), -r);
        }
        for (b, e) in &self.factors {
            out.push_factor(b.clone(), *e * r);
        }
        out
    }

    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_big_rational(&self.coef) + self.factors.iter().map(|(b, e)| e.to_f64().unwrap() * ln_biguint(b)).sum::<f64>()
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.ln().exp()
        }
    }

    fn common_power(&self) -> i64 {
        self.factors.iter().fold(1i64, |acc, (_, e)| acc.lcm(e.denom()))
    }

    fn raised(&self, power: i64) -> BigRational {
        let mut acc = pow_signed(&self.coef, power);
        for (b, e) in &self.factors {
            let n = (*e * Rational::from_integer(power)).to_integer();
            acc *= pow_signed(&BigRational::from_integer(BigInt::from(b.clone())), n);
        }
        acc
    }

    /// The exact rational value, when the radical happens to be rational.
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.factors.is_empty() {
            return Some(self.coef.clone());
        }
        let power = self.common_power();
        let v = self.raised(power);
        let root = |n: &BigInt| -> Option<BigInt> {
            let r = n.nth_root(power as u32);
            (r.pow(power as u32) == *n).then_some(r)
        };
        Some(BigRational::new(root(v.numer())?, root(v.denom())?))
    }

    pub fn exact_cmp(&self, other: &Radical) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (la, lb) = (self.ln(), other.ln());
        if (la - lb).abs() > 1e-9 * (1.0 + la.abs().max(lb.abs())) {
            return la.partial_cmp(&lb).unwrap();
        }
        let power = self.common_power().lcm(&other.common_power());
        self.raised(power).cmp(&other.raised(power))
    }
}

impl PartialEq for Radical {
    fn eq(&self, other: &Self) -> bool {
        self.exact_cmp(other) == Ordering::Equal
    }
}

impl Eq for Radical {}

impl PartialOrd for Radical {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Radical {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exact_cmp(other)
    }
}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.to_rational() {
            return write!(f, "{r}");
        }
        write!(f, "{}", self.coef)?;
        for (b, e) in &self.factors {
            write!(f, "*{b}^({e})")?;
        }
        Ok(())
    }
}

/// An operator value: exact for lattice families, floating (53-bit) where
/// logarithmic prime weights enter.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(Radical),
    Approx(f64),
}

impl Value {
    pub fn zero_like(exact: bool) -> Value {
        if exact {
            Value::Exact(Radical::zero())
        } else {
            Value::Approx(0.0)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64(),
            Value::Approx(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Approx(x) => *x == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Radical> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a.mul(b)),
            _ => Value::Approx(self.to_f64() * other.to_f64()),
        }
    }

    /// Exact when both sides are exact, otherwise a float comparison.
    pub fn compare(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(x) => write!(f, "{x:.12e}"),
        }
    }
}
