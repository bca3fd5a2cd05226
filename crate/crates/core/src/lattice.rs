//! Lattice points on balls, `k`-spheres and annuli.
//!
//! Everything here is exact: enumeration descends coordinate by coordinate
//! with integer `k`-th root bounds, and counts are integers. Multilinear
//! surfaces in `Z^{ℓd}` are never enumerated directly; they are obtained from
//! per-factor count tables by additive convolution.

use std::fmt;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::arith::{checked_pow, iroot, power_norm, window_floor, Rational};
use crate::error::{invalid, Error, Result};
use crate::primes::{self, Progression};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "lattice points need at least one coordinate");
        LatticePoint(coords)
    }

    pub fn origin(d: usize) -> Self {
        Self::new(vec![0; d])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self, k: u32) -> u64 {
        power_norm(&self.0, k)
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint::new(v)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Ball,
    Sphere,
    Annulus,
    PrimeSphere,
    PrimeBall,
    GeneralAdditive,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ball => "ball",
            Family::Sphere => "sphere",
            Family::Annulus => "annulus",
            Family::PrimeSphere => "prime_sphere",
            Family::PrimeBall => "prime_ball",
            Family::GeneralAdditive => "general_additive",
        }
    }

    pub fn parse(text: &str) -> Option<Family> {
        Some(match text.trim() {
            "ball" => Family::Ball,
            "sphere" => Family::Sphere,
            "annulus" => Family::Annulus,
            "prime_sphere" => Family::PrimeSphere,
            "prime_ball" => Family::PrimeBall,
            "general_additive" => Family::GeneralAdditive,
            _ => return None,
        })
    }

    pub fn is_prime(self) -> bool {
        matches!(self, Family::PrimeSphere | Family::PrimeBall)
    }
}

/// How prime vectors are weighted: by `Π log p_j`, or by 1 (exact mode).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Log,
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Integer,
    Prime,
}

/// One additive piece `h_i(u) = Σ_j |u_j|^k` of a general surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component {
    pub d: usize,
    pub k: u32,
    pub factor: FactorKind,
}

impl Component {
    /// `h_i(u)`, or `None` when `u` is outside the factor's domain (prime
    /// factors only accept vectors of positive primes).
    pub fn eval(&self, u: &[i64]) -> Option<u64> {
        if self.factor == FactorKind::Prime && !u.iter().all(|&c| c >= 2 && primes::is_prime(c as u64)) {
            return None;
        }
        Some(power_norm(u, self.k))
    }
}

/// How component values combine into the defining function `h(u₁,…,u_ℓ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Combiner {
    #[default]
    Sum,
    Product,
}

/// Whether the surface is `h ≤ λ` or `h = λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Relation {
    AtMost,
    #[default]
    Equal,
}

/// Per-slot progressions `Γ^i` together with the ambient progression `Γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionConstraints {
    pub slots: Vec<Progression>,
    pub ambient: Progression,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceSpec {
    pub family: Family,
    pub d: usize,
    pub k: u32,
    pub ell: usize,
    pub theta: Option<Rational>,
    pub width_multiplier: Rational,
    pub progressions: Option<ProgressionConstraints>,
    pub weighting: Weighting,
    pub components: Vec<Component>,
    pub combiner: Combiner,
    pub relation: Relation,
}

impl SurfaceSpec {
    fn base(family: Family, d: usize, k: u32, ell: usize) -> Self {
        SurfaceSpec {
            family,
            d,
            k,
            ell,
            theta: None,
            width_multiplier: Rational::from_integer(1),
            progressions: None,
            weighting: Weighting::Log,
            components: Vec::new(),
            combiner: Combiner::Sum,
            relation: Relation::Equal,
        }
    }

    pub fn ball(d: usize, k: u32, ell: usize) -> Self {
        Self::base(Family::Ball, d, k, ell)
    }

    pub fn sphere(d: usize, k: u32, ell: usize) -> Self {
        Self::base(Family::Sphere, d, k, ell)
    }

    pub fn annulus(d: usize, theta: Rational, ell: usize) -> Self {
        SurfaceSpec { theta: Some(theta), ..Self::base(Family::Annulus, d, 2, ell) }
    }

    pub fn prime_sphere(d: usize, k: u32, ell: usize, progressions: Option<ProgressionConstraints>) -> Self {
        SurfaceSpec { progressions, ..Self::base(Family::PrimeSphere, d, k, ell) }
    }

    pub fn prime_ball(d: usize, k: u32, ell: usize, progressions: Option<ProgressionConstraints>) -> Self {
        SurfaceSpec { progressions, ..Self::base(Family::PrimeBall, d, k, ell) }
    }

    pub fn general_additive(components: Vec<Component>, combiner: Combiner, relation: Relation) -> Self {
        let d = components.first().map_or(0, |c| c.d);
        let k = components.first().map_or(0, |c| c.k);
        let ell = components.len();
        SurfaceSpec { components, combiner, relation, ..Self::base(Family::GeneralAdditive, d, k, ell) }
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn with_width_multiplier(mut self, w: Rational) -> Self {
        self.width_multiplier = w;
        self
    }

    /// The ambient dimension `ℓd` of the full surface.
    pub fn total_dim(&self) -> usize {
        self.ell * self.d
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSurface(m.to_string()));
        if self.d == 0 || self.ell == 0 {
            return bad("d and ell must be positive");
        }
        match self.family {
            Family::Ball if self.k < 1 => return bad("ball degree must be at least 1"),
            Family::Sphere | Family::PrimeSphere | Family::PrimeBall if self.k < 2 => {
                return bad("degree must be at least 2")
            }
            Family::Annulus if self.k != 2 => return bad("annuli are quadratic"),
            _ => {}
        }
        match (self.family, self.theta) {
            (Family::Annulus, Some(t)) => {
                if t <= Rational::from_integer(0) || t >= Rational::from_integer(1) {
                    return bad("theta must lie strictly between 0 and 1");
                }
                if self.width_multiplier <= Rational::from_integer(0) {
                    return bad("width multiplier must be positive");
                }
            }
            (Family::Annulus, None) => return bad("annulus requires theta"),
            (_, Some(_)) => return bad("theta is only meaningful for annuli"),
            _ => {}
        }
        match (&self.progressions, self.family.is_prime()) {
            (Some(_), false) if self.family != Family::GeneralAdditive => {
                return bad("progressions apply to prime families")
            }
            (Some(p), _) if p.slots.len() != self.ell => return bad("one progression per slot is required"),
            _ => {}
        }
        if self.family == Family::GeneralAdditive {
            if self.components.is_empty() {
                return bad("general surfaces need components");
            }
            if self.components.iter().any(|c| c.d != self.d || c.k == 0) {
                return bad("components must share the dimension and have positive degree");
            }
        }
        Ok(())
    }
}

/// All `u ∈ Z^d` with `Σ_j |u_j|^k = λ`, in lexicographic order.
pub fn enumerate_sphere(d: usize, k: u32, lambda: u64) -> Vec<LatticePoint> {
    enumerate_norm_range(d, k, lambda, lambda)
}

/// All `u ∈ Z^d` with `lo ≤ Σ_j |u_j|^k ≤ hi`, in lexicographic order.
///
/// The outermost coordinate is split across rayon workers; the ordered collect
/// keeps the output identical for any pool size.
pub fn enumerate_norm_range(d: usize, k: u32, lo: u64, hi: u64) -> Vec<LatticePoint> {
    assert!(d >= 1 && k >= 1);
    if lo > hi {
        return Vec::new();
    }
    let bound = iroot(hi, k) as i64;
    let chunks: Vec<Vec<LatticePoint>> = (-bound..=bound)
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            let used = checked_pow(c.unsigned_abs(), k).unwrap();
            let mut prefix = vec![c];
            descend(d - 1, k, lo.saturating_sub(used), hi - used, &mut prefix, &mut out);
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

fn descend(left: usize, k: u32, lo: u64, hi: u64, prefix: &mut Vec<i64>, out: &mut Vec<LatticePoint>) {
    if left == 0 {
        if lo == 0 {
            out.push(LatticePoint(prefix.clone()));
        }
        return;
    }
    let bound = iroot(hi, k) as i64;
    for c in -bound..=bound {
        let used = checked_pow(c.unsigned_abs(), k).unwrap();
        prefix.push(c);
        descend(left - 1, k, lo.saturating_sub(used), hi - used, prefix, out);
        prefix.pop();
    }
}

/// `#{u ∈ Z^d : Σ_j |u_j|^k ≤ λ}` by coordinate descent with a closed-form
/// innermost coordinate.
pub fn count_ball(d: usize, k: u32, lambda: u64) -> BigUint {
    fn go(d: usize, k: u32, budget: u64) -> u128 {
        let bound = iroot(budget, k);
        if d == 1 {
            return 2 * bound as u128 + 1;
        }
        let mut total = go(d - 1, k, budget);
        for c in 1..=bound {
            total += 2 * go(d - 1, k, budget - checked_pow(c, k).unwrap());
        }
        total
    }
    BigUint::from(go(d, k, lambda))
}

/// The points of the annulus `{x ∈ Z^d : λ − w·λ^θ < |x|² ≤ λ}` in
/// lexicographic order; the lower cutoff is decided exactly.
pub fn enumerate_annulus(d: usize, theta: Rational, lambda: u64, width_multiplier: Rational) -> Vec<LatticePoint> {
    let lo = window_floor(lambda, width_multiplier, theta);
    enumerate_norm_range(d, 2, lo, lambda)
}

/// Arithmetic used by count tables: exact integers or 53-bit floats.
pub trait Weight: Copy + Send + Sync + PartialEq + fmt::Debug + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn plus(self, other: Self) -> Self;
    fn times(self, other: Self) -> Self;
    fn minus(self, other: Self) -> Self;
    fn from_count(n: u128) -> Self;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

impl Weight for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn plus(self, other: Self) -> Self {
        self.checked_add(other).expect("exact weight overflow")
    }
    fn times(self, other: Self) -> Self {
        self.checked_mul(other).expect("exact weight overflow")
    }
    fn minus(self, other: Self) -> Self {
        self.checked_sub(other).expect("negative exact weight")
    }
    fn from_count(n: u128) -> Self {
        n
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn times(self, other: Self) -> Self {
        self * other
    }
    fn minus(self, other: Self) -> Self {
        self - other
    }
    fn from_count(n: u128) -> Self {
        n as f64
    }
}

/// `(a * b)[n] = Σ_{i+j=n} a[i]·b[j]`, truncated to the length of `a`.
pub fn convolve<W: Weight>(a: &[W], b: &[W]) -> Vec<W> {
    let mut out = vec![W::zero(); a.len()];
    let support: Vec<(usize, W)> = b.iter().copied().enumerate().filter(|(_, y)| !y.is_zero()).collect();
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for &(j, y) in support.iter().take_while(|&&(j, _)| i + j < a.len()) {
            out[i + j] = out[i + j].plus(x.times(y));
        }
    }
    out
}

/// `r_{d,k}(μ) = #{u ∈ Z^d : Σ|u_j|^k = μ}` for `μ ≤ max`.
pub fn sphere_counts(d: usize, k: u32, max: u64) -> Vec<u128> {
    let len = max as usize + 1;
    let mut one_dim = vec![0u128; len];
    one_dim[0] = 1;
    for c in 1..=iroot(max, k) {
        one_dim[checked_pow(c, k).unwrap() as usize] += 2;
    }
    let mut table = one_dim.clone();
    for _ in 1..d {
        table = convolve(&table, &one_dim);
    }
    table
}

/// Running sums `Σ_{μ ≤ n} t[μ]`.
pub fn cumulative<W: Weight>(t: &[W]) -> Vec<W> {
    let mut acc = W::zero();
    t.iter()
        .map(|&x| {
            acc = acc.plus(x);
            acc
        })
        .collect()
}

/// A surface count, exact or weighted by logarithms of primes.
#[derive(Clone, Debug, PartialEq)]
pub enum Tally {
    Exact(BigUint),
    Weighted(f64),
}

impl Tally {
    pub fn to_f64(&self) -> f64 {
        match self {
            Tally::Exact(n) => crate::arith::biguint_to_f64(n),
            Tally::Weighted(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Tally::Exact(n) => *n == BigUint::from(0u8),
            Tally::Weighted(x) => *x == 0.0,
        }
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tally::Exact(n) => write!(f, "{n}"),
            Tally::Weighted(x) => write!(f, "{x:.12e}"),
        }
    }
}

/// Per-slot count table `t(μ)`: lattice vectors (or prime vectors) `u` with
/// `h(u) = μ`, optionally restricted to `h(u)` in a progression.
pub(crate) fn slot_table<W: Weight>(
    d: usize,
    k: u32,
    prime: bool,
    progression: Option<&Progression>,
    max: u64,
    weight_of_prime: impl Fn(u64) -> W,
) -> Vec<W> {
    let mut table: Vec<W> = if prime {
        primes::prime_power_table(d, k, max, weight_of_prime)
    } else {
        sphere_counts(d, k, max).into_iter().map(|c| W::from_count(c)).collect()
    };
    if let Some(g) = progression {
        for (mu, t) in table.iter_mut().enumerate() {
            if !g.contains(mu as u64) {
                *t = W::zero();
            }
        }
    }
    table
}

/// Surface sizes `N(λ)` for `λ ≤ max` in `Z^{ℓd}`: `B(λ)`, `N(λ)`, `A(λ)` or
/// the weighted `P(λ)`, depending on the family.
pub fn surface_tallies(spec: &SurfaceSpec, max: u64) -> Result<Vec<Tally>> {
    spec.validate()?;
    let exact = !(spec.family.is_prime() && spec.weighting == Weighting::Log)
        && !(spec.family == Family::GeneralAdditive
            && spec.weighting == Weighting::Log
            && spec.components.iter().any(|c| c.factor == FactorKind::Prime));
    if exact {
        let t = surface_table::<u128>(spec, max, |_| 1)?;
        Ok(t.into_iter().map(|c| Tally::Exact(BigUint::from(c))).collect())
    } else {
        let t = surface_table::<f64>(spec, max, |p| (p as f64).ln())?;
        Ok(t.into_iter().map(Tally::Weighted).collect())
    }
}

pub(crate) fn surface_table<W: Weight>(
    spec: &SurfaceSpec,
    max: u64,
    weight_of_prime: impl Fn(u64) -> W + Copy,
) -> Result<Vec<W>> {
    if spec.combiner == Combiner::Product {
        return Err(Error::Unsupported("multiplicative surfaces have no additive count table".into()));
    }
    let slots: Vec<(usize, u32, bool)> = if spec.family == Family::GeneralAdditive {
        spec.components.iter().map(|c| (c.d, c.k, c.factor == FactorKind::Prime)).collect()
    } else {
        vec![(spec.d, spec.k, spec.family.is_prime()); spec.ell]
    };
    let mut total: Option<Vec<W>> = None;
    for (i, &(d, k, prime)) in slots.iter().enumerate() {
        let g = spec.progressions.as_ref().map(|p| &p.slots[i]);
        let t = slot_table(d, k, prime, g, max, weight_of_prime);
        total = Some(match total {
            None => t,
            Some(acc) => convolve(&acc, &t),
        });
    }
    let level = total.expect("at least one slot");
    let mut out = match (spec.family, spec.relation) {
        (Family::Ball | Family::PrimeBall, _) | (Family::GeneralAdditive, Relation::AtMost) => cumulative(&level),
        (Family::Annulus, _) => {
            let theta = spec.theta.ok_or_else(|| invalid("theta", "missing"))?;
            let cum = cumulative(&level);
            (0..=max)
                .map(|lam| {
                    let lo = window_floor(lam, spec.width_multiplier, theta);
                    let below = if lo == 0 { W::zero() } else { cum[lo as usize - 1] };
                    cum[lam as usize].minus(below)
                })
                .collect()
        }
        _ => level,
    };
    if let Some(p) = &spec.progressions {
        for (lam, v) in out.iter_mut().enumerate() {
            if !p.ambient.contains(lam as u64) {
                *v = W::zero();
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AsymptoticDiagnostic {
    pub lambdas: Vec<u64>,
    pub counts: Vec<Tally>,
    pub phi: Rational,
    pub ratios: Vec<f64>,
    /// `max |ratio_i / ratio_last − 1|` over the top half of the λ range.
    pub stabilization: f64,
}

/// Ratios `N(λ)/λ^φ` over a λ sequence, with a stabilization metric.
pub fn asymptotic_diagnostic(spec: &SurfaceSpec, lambdas: &[u64], phi: Rational) -> Result<AsymptoticDiagnostic> {
    if lambdas.is_empty() {
        return Err(Error::EmptyParameterSet("lambdas"));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("lambdas", "must be strictly increasing"));
    }
    let max = *lambdas.last().unwrap();
    let all = surface_tallies(spec, max)?;
    let counts: Vec<Tally> = lambdas.iter().map(|&l| all[l as usize].clone()).collect();
    let phi_f = *phi.numer() as f64 / *phi.denom() as f64;
    let ratios: Vec<f64> = lambdas
        .iter()
        .zip(&counts)
        .map(|(&l, c)| if c.is_zero() { 0.0 } else { c.to_f64() / (l as f64).powf(phi_f) })
        .collect();
    let last = *ratios.last().unwrap();
    let top = &ratios[ratios.len() / 2..];
    let stabilization = if last == 0.0 {
        if top.iter().all(|&r| r == 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        top.iter().map(|&r| (r / last - 1.0).abs()).fold(0.0, f64::max)
    };
    Ok(AsymptoticDiagnostic { lambdas: lambdas.to_vec(), counts, phi, ratios, stabilization })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[i64]]) -> Vec<LatticePoint> {
        v.iter().map(|c| LatticePoint::new(c.to_vec())).collect()
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(enumerate_sphere(2, 2, 0), pts(&[&[0, 0]]));
        assert_eq!(
            enumerate_sphere(2, 2, 5),
            pts(&[&[-2, -1], &[-2, 1], &[-1, -2], &[-1, 2], &[1, -2], &[1, 2], &[2, -1], &[2, 1]])
        );
        assert!(enumerate_sphere(2, 2, 3).is_empty());
    }

    #[test]
    fn ball_examples() {
        assert_eq!(count_ball(1, 2, 0), BigUint::from(1u8));
        assert_eq!(count_ball(2, 2, 2), BigUint::from(9u8));
        assert_eq!(count_ball(1, 2, 4), BigUint::from(5u8));
    }

    #[test]
    fn annulus_examples() {
        let half = Rational::new(1, 2);
        let one = Rational::from_integer(1);
        let a = enumerate_annulus(2, half, 25, one);
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|p| p.norm(2) == 25));
        assert_eq!(enumerate_annulus(2, half, 4, one), pts(&[&[-2, 0], &[0, -2], &[0, 2], &[2, 0]]));
        // width 10·√9 = 30 > 9: the whole ball including the origin
        let full = enumerate_annulus(2, half, 9, Rational::from_integer(10));
        assert_eq!(full.len() as u64, 29);
        assert_eq!(BigUint::from(full.len()), count_ball(2, 2, 9));
        // width exactly λ: origin sits on the excluded lower cutoff
        let punctured = enumerate_annulus(2, half, 9, Rational::from_integer(3));
        assert_eq!(punctured.len(), 28);
    }

    #[test]
    fn thin_annulus_is_the_sphere() {
        let w = Rational::new(1, 1000);
        for lam in 1..60 {
            assert_eq!(enumerate_annulus(3, Rational::new(1, 2), lam, w), enumerate_sphere(3, 2, lam));
        }
    }

    #[test]
    fn tables_match_enumeration() {
        for (d, k) in [(1, 2), (2, 3), (3, 2)] {
            let t = sphere_counts(d, k, 80);
            for lam in 0..=80u64 {
                assert_eq!(t[lam as usize], enumerate_sphere(d, k, lam).len() as u128);
            }
        }
    }

    #[test]
    fn annulus_tallies_match_enumeration() {
        let spec = SurfaceSpec::annulus(2, Rational::new(1, 3), 2);
        let t = surface_tallies(&spec, 40).unwrap();
        for lam in 1..=40u64 {
            let n = enumerate_annulus(4, Rational::new(1, 3), lam, Rational::from_integer(1)).len();
            assert_eq!(t[lam as usize], Tally::Exact(BigUint::from(n)));
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SurfaceSpec::ball(2, 2, 2).validate().is_ok());
        assert!(SurfaceSpec::sphere(2, 1, 2).validate().is_err());
        assert!(SurfaceSpec::annulus(5, Rational::new(3, 2), 2).validate().is_err());
        let mut s = SurfaceSpec::ball(2, 2, 2);
        s.theta = Some(Rational::new(1, 2));
        assert!(s.validate().is_err());
        assert!(SurfaceSpec::ball(0, 2, 2).validate().is_err());
    }

    #[test]
    fn diagnostic_edge_cases() {
        let spec = SurfaceSpec::sphere(1, 2, 1);
        assert!(asymptotic_diagnostic(&spec, &[], Rational::from_integer(1)).is_err());
        let d = asymptotic_diagnostic(&spec, &[2, 3, 5, 6, 7], Rational::new(-1, 2)).unwrap();
        assert!(d.ratios.iter().all(|&r| r == 0.0));
        assert_eq!(d.stabilization, 0.0);
    }
}
