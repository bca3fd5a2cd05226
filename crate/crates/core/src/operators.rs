//! Grid functions and the discrete averaging / maximal operators.
//!
//! Every operator is evaluated pointwise through the additive structure of
//! its surface. For a point `x` each input `f_i` induces a *radial profile*
//! `μ ↦ Σ_{h(x−y)=μ} f_i(y)`; the `ℓ`-fold additive convolution of the
//! profiles is the histogram of `Σ_i h(u_i)` weighted by `Π f_i(x−u_i)`, and
//! every average over a ball, sphere or annulus is a prefix or window sum of
//! that histogram. Suprema over `λ` are exact maxima over finite candidate
//! sets, compared without rounding (see [`Radical`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{ceil_scaled_power, checked_pow, iroot, parse_rational, window_floor, Radical, Rational, Value};
use crate::error::{invalid, Error, Result};
use crate::lattice::{self, FactorKind, Family, LatticePoint, Relation, SurfaceSpec, Weight, Weighting};
use crate::primes::{self, Progression};

/// A finitely supported nonnegative function on `Z^d` with exact rational
/// values. Zero values are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridFunction {
    dim: usize,
    values: BTreeMap<LatticePoint, BigRational>,
}

impl GridFunction {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1);
        GridFunction { dim, values: BTreeMap::new() }
    }

    /// Builds a function from `(point, value)` pairs, rejecting negative
    /// values, wrong dimensions and repeated points.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (LatticePoint, BigRational)>) -> Result<Self> {
        let mut f = GridFunction::zero(dim);
        for (p, v) in pairs {
            if f.values.contains_key(&p) {
                return Err(invalid("values", format!("duplicate point {p}")));
            }
            f.set(p, v)?;
        }
        Ok(f)
    }

    pub fn from_integers(dim: usize, pairs: impl IntoIterator<Item = (Vec<i64>, u64)>) -> Result<Self> {
        Self::from_pairs(
            dim,
            pairs.into_iter().map(|(c, v)| (LatticePoint::new(c), BigRational::from_integer(BigInt::from(v)))),
        )
    }

    pub fn delta(point: LatticePoint) -> Self {
        let mut f = GridFunction::zero(point.dim());
        f.values.insert(point, BigRational::one());
        f
    }

    pub fn set(&mut self, p: LatticePoint, v: BigRational) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: p.dim() });
        }
        if v.is_negative() {
            return Err(invalid("values", format!("negative value at {p}")));
        }
        if v.is_zero() {
            self.values.remove(&p);
        } else {
            self.values.insert(p, v);
        }
        Ok(())
    }

    pub fn get(&self, p: &LatticePoint) -> BigRational {
        self.values.get(p).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &BigRational)> {
        self.values.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &LatticePoint> {
        self.values.keys()
    }

    pub fn translate(&self, shift: &LatticePoint) -> Self {
        GridFunction { dim: self.dim, values: self.values.iter().map(|(p, v)| (p.add(shift), v.clone())).collect() }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        assert!(!c.is_negative());
        if c.is_zero() {
            return GridFunction::zero(self.dim);
        }
        GridFunction { dim: self.dim, values: self.values.iter().map(|(p, v)| (p.clone(), v * c)).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut out = self.clone();
        for (p, v) in &other.values {
            let s = out.get(p) + v;
            out.set(p.clone(), s)?;
        }
        Ok(out)
    }

    /// Per-coordinate bounding box of the support.
    pub fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.values.keys();
        let first = it.next()?.coords().to_vec();
        let (mut lo, mut hi) = (first.clone(), first);
        for p in it {
            for (j, &c) in p.coords().iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        Some((lo, hi))
    }

    /// Parses the text format: one support point per line, `x₁ … x_d num/den`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut pairs = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line: i + 1, reason };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < 2 {
                return Err(err("expected coordinates followed by a value".into()));
            }
            let (coords, value) = tokens.split_at(tokens.len() - 1);
            let coords: Vec<i64> = coords
                .iter()
                .map(|t| t.parse::<i64>().map_err(|_| err(format!("bad coordinate `{t}`"))))
                .collect::<Result<_>>()?;
            let value = parse_big_rational(value[0]).ok_or_else(|| err(format!("bad value `{}`", value[0])))?;
            if value.is_negative() {
                return Err(err("negative value".into()));
            }
            match dim {
                None => dim = Some(coords.len()),
                Some(d) if d != coords.len() => return Err(err(format!("expected {d} coordinates"))),
                _ => {}
            }
            let p = LatticePoint::new(coords);
            if !seen.insert(p.clone()) {
                return Err(err(format!("duplicate point {p}")));
            }
            pairs.push((p, value));
        }
        let dim = dim.ok_or(Error::Parse { line: 0, reason: "no support points".into() })?;
        Self::from_pairs(dim, pairs)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, v) in &self.values {
            let coords: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
            s.push_str(&format!("{} {}/{}\n", coords.join(" "), v.numer(), v.denom()));
        }
        s
    }

    pub fn lp_norm(&self, p: Exponent) -> Value {
        let vals: Vec<Value> = self.values.values().map(|v| Value::Exact(Radical::from_ratio(v.clone()))).collect();
        lp_norm(&vals, p)
    }
}

fn parse_big_rational(t: &str) -> Option<BigRational> {
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => t.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Operator output on a finite set of points. Points with value zero are
/// omitted.
#[derive(Clone, Debug)]
pub struct ValueGrid {
    pub dim: usize,
    pub exact: bool,
    pub values: BTreeMap<LatticePoint, Value>,
}

impl ValueGrid {
    pub fn get(&self, p: &LatticePoint) -> Value {
        self.values.get(p).cloned().unwrap_or_else(|| Value::zero_like(self.exact))
    }

    pub fn lp_norm(&self, p: Exponent) -> Value {
        let vals: Vec<Value> = self.values.values().cloned().collect();
        lp_norm(&vals, p)
    }
}

/// An `ℓ^p` exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational),
    Infinity,
}

impl Exponent {
    pub fn parse(t: &str) -> Option<Exponent> {
        let t = t.trim();
        if t == "inf" || t == "∞" {
            return Some(Exponent::Infinity);
        }
        parse_rational(t).filter(|r| *r > Rational::zero()).map(Exponent::Finite)
    }
}

/// `(Σ |v|^p)^{1/p}`. Exact when all values are rational and `p` is an
/// integer (or `∞`); otherwise a 53-bit float.
pub fn lp_norm(values: &[Value], p: Exponent) -> Value {
    let exact = values.iter().all(Value::is_exact);
    match p {
        Exponent::Infinity => {
            values.iter().cloned().max_by(|a, b| a.compare(b)).unwrap_or_else(|| Value::zero_like(exact))
        }
        Exponent::Finite(p) => {
            assert!(p > Rational::zero(), "exponent must be positive");
            if exact && p.is_integer() {
                let rationals: Option<Vec<BigRational>> =
                    values.iter().map(|v| v.as_exact().unwrap().to_rational()).collect();
                if let Some(rs) = rationals {
                    let n = p.to_integer() as i32;
                    let sum: BigRational = rs.iter().map(|r| r.pow(n)).sum();
                    return Value::Exact(Radical::from_ratio(sum).pow(p.recip()));
                }
            }
            let pf = p.to_f64().unwrap();
            let sum: f64 = values.iter().map(|v| v.to_f64().powf(pf)).sum();
            Value::Approx(sum.powf(1.0 / pf))
        }
    }
}

/// How an average is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizationMode {
    /// Divide by the number of surface points (`B(λ)`, `N(λ)`, `A(λ)`) or by
    /// the weighted `P(λ)`.
    ExactCount,
    /// Divide by `λ^φ`. `λ = 0` is normalized by `1`.
    PowerLaw(Rational),
}

/// A finite evaluation region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Box { lo: Vec<i64>, hi: Vec<i64> },
    Points(Vec<LatticePoint>),
}

impl Region {
    pub fn cube(d: usize, radius: i64) -> Region {
        Region::Box { lo: vec![-radius; d], hi: vec![radius; d] }
    }

    pub fn points(&self) -> Vec<LatticePoint> {
        match self {
            Region::Points(p) => p.clone(),
            Region::Box { lo, hi } => {
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Vec::new();
                }
                let mut out = Vec::new();
                let mut cur = lo.clone();
                loop {
                    out.push(LatticePoint::new(cur.clone()));
                    let mut j = cur.len();
                    loop {
                        if j == 0 {
                            return out;
                        }
                        j -= 1;
                        if cur[j] < hi[j] {
                            cur[j] += 1;
                            for t in cur.iter_mut().skip(j + 1) {
                                *t = 0;
                            }
                            for (t, l) in cur.iter_mut().zip(lo).skip(j + 1) {
                                *t = *l;
                            }
                            break;
                        }
                    }
                }
            }
        }
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        match self {
            Region::Points(ps) => ps.contains(p),
            Region::Box { lo, hi } => p.coords().iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| l <= c && c <= h),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Region::Box { lo, hi } => {
                let l: Vec<String> = lo.iter().map(|c| c.to_string()).collect();
                let h: Vec<String> = hi.iter().map(|c| c.to_string()).collect();
                format!("[{}]..[{}]", l.join(" "), h.join(" "))
            }
            Region::Points(ps) => format!("{} points", ps.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximalConfig {
    /// The finite truncation of the supremum, ascending and deduplicated.
    pub lambda_set: Vec<u64>,
    pub normalization: NormalizationMode,
    pub progression: Option<Progression>,
    /// Evaluation region; defaults to the box outside which the output vanishes.
    pub region: Option<Region>,
}

impl MaximalConfig {
    pub fn new(lambdas: impl IntoIterator<Item = u64>, normalization: NormalizationMode) -> Self {
        let mut lambda_set: Vec<u64> = lambdas.into_iter().collect();
        lambda_set.sort_unstable();
        lambda_set.dedup();
        MaximalConfig { lambda_set, normalization, progression: None, region: None }
    }

    /// `{λ : lo ≤ λ ≤ hi, λ ∈ Γ}`.
    pub fn in_progression(lo: u64, hi: u64, gamma: Progression, normalization: NormalizationMode) -> Self {
        let mut c = Self::new((lo..=hi).filter(|&l| gamma.contains(l)), normalization);
        c.progression = Some(gamma);
        c
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    pub fn max_lambda(&self) -> u64 {
        *self.lambda_set.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_set.is_empty() {
            return Err(Error::EmptyParameterSet("lambda_set"));
        }
        if let Some(g) = &self.progression {
            if let Some(l) = self.lambda_set.iter().find(|&&l| !g.contains(l)) {
                return Err(invalid("lambda_set", format!("{l} is not in {g}")));
            }
        }
        Ok(())
    }
}

/// The defining relation of a compiled surface in terms of `t = Σ_i h_i(u_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `t ≤ λ`
    AtMost,
    /// `t = λ`
    Equal,
    /// `λ − w·λ^θ < t ≤ λ`
    Window { theta: Rational, width: Rational },
    /// `b − w·λ^θ < t ≤ b` for some upper cutoff `0 ≤ b ≤ λ`; the supremum
    /// runs over both `λ` and `b`.
    ShiftedWindow { theta: Rational, width: Rational },
}

/// One factor of a compiled surface: `h(u) = Σ_j |u_j|^k` over `Z^d` (or over
/// vectors of positive primes), optionally with `h(u)` restricted to a
/// progression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotRule {
    pub d: usize,
    pub k: u32,
    pub prime: bool,
    pub progression: Option<Progression>,
}

/// A surface ready for evaluation: one rule per input slot plus a shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surface {
    pub slots: Vec<SlotRule>,
    pub shape: Shape,
    pub weighting: Weighting,
    /// Used for `ExactCount` normalization.
    pub count_spec: Option<SurfaceSpec>,
}

/// The linear maximal operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearKind {
    HlBall { k: u32 },
    Sphere { k: u32 },
    Annulus { theta: Rational },
    ShiftedAnnulus { theta: Rational },
    PrimeHl { k: u32 },
    PrimeSphere { k: u32 },
}

impl LinearKind {
    pub fn name(&self) -> String {
        match self {
            LinearKind::HlBall { k } => format!("M_HL[k={k}]"),
            LinearKind::Sphere { k } => format!("A*[k={k}]"),
            LinearKind::Annulus { theta } => format!("S*[theta={theta}]"),
            LinearKind::ShiftedAnnulus { theta } => format!("S*shift[theta={theta}]"),
            LinearKind::PrimeHl { k } => format!("M_HL^primes[k={k}]"),
            LinearKind::PrimeSphere { k } => format!("A*^primes[k={k}]"),
        }
    }
}

impl Surface {
    pub fn from_spec(spec: &SurfaceSpec) -> Result<Surface> {
        spec.validate()?;
        let slot_prog = |i: usize| spec.progressions.as_ref().map(|p| p.slots[i]);
        let uniform = |prime: bool| -> Vec<SlotRule> {
            (0..spec.ell).map(|i| SlotRule { d: spec.d, k: spec.k, prime, progression: slot_prog(i) }).collect()
        };
        let (slots, shape) = match spec.family {
            Family::Ball => (uniform(false), Shape::AtMost),
            Family::Sphere => (uniform(false), Shape::Equal),
            Family::Annulus => {
                (uniform(false), Shape::Window { theta: spec.theta.unwrap(), width: spec.width_multiplier })
            }
            Family::PrimeSphere => (uniform(true), Shape::Equal),
            Family::PrimeBall => (uniform(true), Shape::AtMost),
            Family::GeneralAdditive => {
                if spec.combiner != lattice::Combiner::Sum {
                    return Err(Error::Unsupported("multiplicative surfaces are not sliceable".into()));
                }
                let slots = spec
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| SlotRule {
                        d: c.d,
                        k: c.k,
                        prime: c.factor == FactorKind::Prime,
                        progression: slot_prog(i),
                    })
                    .collect();
                let shape = match spec.relation {
                    Relation::AtMost => Shape::AtMost,
                    Relation::Equal => Shape::Equal,
                };
                (slots, shape)
            }
        };
        Ok(Surface { slots, shape, weighting: spec.weighting, count_spec: Some(spec.clone()) })
    }

    pub fn linear(kind: LinearKind, d: usize, progression: Option<Progression>, weighting: Weighting) -> Surface {
        let rule = |k: u32, prime: bool| SlotRule { d, k, prime, progression };
        let one = Rational::one();
        let (slot, shape, spec) = match kind {
            LinearKind::HlBall { k } => (rule(k, false), Shape::AtMost, Some(SurfaceSpec::ball(d, k, 1))),
            LinearKind::Sphere { k } => (rule(k, false), Shape::Equal, Some(SurfaceSpec::sphere(d, k, 1))),
            LinearKind::Annulus { theta } => {
                (rule(2, false), Shape::Window { theta, width: one }, Some(SurfaceSpec::annulus(d, theta, 1)))
            }
            LinearKind::ShiftedAnnulus { theta } => (rule(2, false), Shape::ShiftedWindow { theta, width: one }, None),
            LinearKind::PrimeHl { k } => (rule(k, true), Shape::AtMost, None),
            LinearKind::PrimeSphere { k } => (rule(k, true), Shape::Equal, None),
        };
        let count_spec = spec.or_else(|| {
            let constraints = progression
                .map(|g| lattice::ProgressionConstraints { slots: vec![g], ambient: Progression::new(0, 1).unwrap() });
            match kind {
                LinearKind::PrimeHl { k } => Some(SurfaceSpec::prime_ball(d, k, 1, constraints)),
                LinearKind::PrimeSphere { k } => Some(SurfaceSpec::prime_sphere(d, k, 1, constraints)),
                _ => None,
            }
        });
        let count_spec = count_spec.map(|s| s.with_weighting(weighting));
        Surface { slots: vec![slot], shape, weighting, count_spec }
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    /// Whether evaluation is exact: everything except log-weighted primes.
    pub fn is_exact(&self) -> bool {
        self.weighting == Weighting::Unit || self.slots.iter().all(|s| !s.prime)
    }

    /// The surface with only the given slots (same shape and weighting).
    pub fn restrict(&self, keep: &[usize], shape: Shape) -> Surface {
        Surface {
            slots: keep.iter().map(|&i| self.slots[i].clone()).collect(),
            shape,
            weighting: self.weighting,
            count_spec: None,
        }
    }

    /// The natural power-law exponent: `Σ d_i/k_i`, minus one for equality
    /// surfaces, and `Σ d_i/2 − 1 + θ` for annuli.
    pub fn default_phi(&self) -> Rational {
        let volume: Rational = self.slots.iter().map(|s| Rational::new(s.d as i64, s.k as i64)).sum();
        match self.shape {
            Shape::AtMost => volume,
            Shape::Equal => volume - Rational::one(),
            Shape::Window { theta, .. } | Shape::ShiftedWindow { theta, .. } => volume - Rational::one() + theta,
        }
    }

    pub fn name(&self) -> String {
        let shape = match self.shape {
            Shape::AtMost => "ball".to_string(),
            Shape::Equal => "sphere".to_string(),
            Shape::Window { theta, .. } => format!("annulus[theta={theta}]"),
            Shape::ShiftedWindow { theta, .. } => format!("shifted_annulus[theta={theta}]"),
        };
        let s = &self.slots[0];
        let prime = if self.slots.iter().any(|s| s.prime) { "prime_" } else { "" };
        format!("{prime}{shape}[l={},d={},k={}]", self.arity(), s.d, s.k)
    }
}

/// Arithmetic of raw sums during evaluation.
pub(crate) trait Accum: Weight + PartialOrd {
    const EXACT: bool;
    fn ln(self) -> f64;
    fn as_u128(self) -> u128;
    fn with_log(self, w: f64) -> Self;
}

impl Accum for u128 {
    const EXACT: bool = true;
    fn ln(self) -> f64 {
        (self as f64).ln()
    }
    fn as_u128(self) -> u128 {
        self
    }
    fn with_log(self, _: f64) -> Self {
        unreachable!("log weights are never exact")
    }
}

impl Accum for f64 {
    const EXACT: bool = false;
    fn ln(self) -> f64 {
        self.ln()
    }
    fn as_u128(self) -> u128 {
        unreachable!("float sums have no exact value")
    }
    fn with_log(self, w: f64) -> Self {
        self * w
    }
}

/// Input functions prepared for a surface: integer numerators over a common
/// scale in exact mode, floats otherwise.
#[derive(Clone, Debug)]
pub(crate) enum Inputs {
    Exact { slots: Vec<Vec<(Vec<i64>, u128)>>, scale: BigRational },
    Approx { slots: Vec<Vec<(Vec<i64>, f64)>> },
}

impl Inputs {
    pub(crate) fn prepare(surface: &Surface, fs: &[&GridFunction]) -> Result<Inputs> {
        if fs.len() != surface.arity() {
            return Err(Error::Arity { expected: surface.arity(), found: fs.len() });
        }
        for (f, s) in fs.iter().zip(&surface.slots) {
            if f.dim() != s.d {
                return Err(Error::DimensionMismatch { expected: s.d, found: f.dim() });
            }
        }
        if surface.is_exact() {
            let mut scale = BigRational::one();
            let mut slots = Vec::new();
            for f in fs {
                let den = f.values.values().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
                scale /= BigRational::from_integer(den.clone());
                let pts = f
                    .values
                    .iter()
                    .map(|(p, v)| {
                        let n = (v * BigRational::from_integer(den.clone())).to_integer();
                        let n = n.to_u128().ok_or_else(|| invalid("values", "numerators exceed 128 bits"))?;
                        Ok((p.coords().to_vec(), n))
                    })
                    .collect::<Result<Vec<_>>>()?;
                slots.push(pts);
            }
            Ok(Inputs::Exact { slots, scale })
        } else {
            let slots = fs
                .iter()
                .map(|f| {
                    f.values.iter().map(|(p, v)| (p.coords().to_vec(), crate::arith::rational_to_f64(v))).collect()
                })
                .collect();
            Ok(Inputs::Approx { slots })
        }
    }

    fn coords(&self, slot: usize) -> Box<dyn Iterator<Item = &Vec<i64>> + '_> {
        match self {
            Inputs::Exact { slots, .. } => Box::new(slots[slot].iter().map(|(c, _)| c)),
            Inputs::Approx { slots } => Box::new(slots[slot].iter().map(|(c, _)| c)),
        }
    }
}

#[derive(Clone, Debug)]
enum Norm {
    Power(Rational),
    Count { exact: Vec<u128>, approx: Vec<f64> },
}

/// A surface together with a truncated parameter set, with every exact
/// cutoff precomputed.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub(crate) surface: Surface,
    lambdas: Vec<u64>,
    max_lambda: u64,
    norm: Norm,
    /// Window floors (annulus) or ceil widths (shifted annulus) per λ.
    cutoffs: Vec<u64>,
    is_prime: Vec<bool>,
}

impl Plan {
    pub(crate) fn new(surface: &Surface, lambdas: &[u64], normalization: NormalizationMode) -> Result<Plan> {
        if lambdas.is_empty() {
            return Err(Error::EmptyParameterSet("lambda_set"));
        }
        let max_lambda = *lambdas.iter().max().unwrap();
        let norm = match normalization {
            NormalizationMode::PowerLaw(phi) => Norm::Power(phi),
            NormalizationMode::ExactCount => {
                let spec = surface
                    .count_spec
                    .as_ref()
                    .ok_or_else(|| Error::Unsupported(format!("exact-count normalization for {}", surface.name())))?;
                if surface.is_exact() {
                    let exact = lattice::surface_table::<u128>(spec, max_lambda, |_| 1)?;
                    Norm::Count { approx: exact.iter().map(|&c| c as f64).collect(), exact }
                } else {
                    let approx = lattice::surface_table::<f64>(spec, max_lambda, |p| (p as f64).ln())?;
                    Norm::Count { exact: Vec::new(), approx }
                }
            }
        };
        let cutoffs = match surface.shape {
            Shape::Window { theta, width } => lambdas.iter().map(|&l| window_floor(l, width, theta)).collect(),
            Shape::ShiftedWindow { theta, width } => {
                lambdas.iter().map(|&l| ceil_scaled_power(width, l, theta)).collect()
            }
            _ => Vec::new(),
        };
        let coord_bound = surface.slots.iter().map(|s| iroot(max_lambda, s.k)).max().unwrap_or(0);
        let mut is_prime = vec![false; coord_bound as usize + 1];
        for p in primes::sieve(coord_bound) {
            is_prime[p as usize] = true;
        }
        let mut lambdas = lambdas.to_vec();
        lambdas.sort_unstable();
        lambdas.dedup();
        Ok(Plan { surface: surface.clone(), lambdas, max_lambda, norm, cutoffs, is_prime })
    }

    pub(crate) fn max_lambda(&self) -> u64 {
        self.max_lambda
    }

    pub(crate) fn eval(&self, inputs: &Inputs, x: &[i64]) -> Value {
        match inputs {
            Inputs::Exact { slots, scale } => match self.best::<u128>(slots, x) {
                None => Value::Exact(Radical::zero()),
                Some((raw, lam)) if scale.is_one() => Value::Exact(self.exact_value(raw, lam)),
                Some((raw, lam)) => Value::Exact(self.exact_value(raw, lam).scale(scale)),
            },
            Inputs::Approx { slots } => match self.best::<f64>(slots, x) {
                None => Value::Approx(0.0),
                Some((raw, lam)) => Value::Approx(raw * self.norm_factor_f64(lam)),
            },
        }
    }

    /// Minimal `h(x − y)` over the admissible support points of one slot.
    pub(crate) fn min_reach(&self, inputs: &Inputs, slot: usize, x: &[i64]) -> Option<u64> {
        let rule = &self.surface.slots[slot];
        inputs.coords(slot).filter_map(|y| self.offset_level(rule, x, y)).min()
    }

    /// `h(x − y)` when the offset is admissible for the slot and within range.
    fn offset_level(&self, rule: &SlotRule, x: &[i64], y: &[i64]) -> Option<u64> {
        let mut mu = 0u64;
        for (a, b) in x.iter().zip(y) {
            let c = a - b;
            if rule.prime && (c < 2 || c as u64 >= self.is_prime.len() as u64 || !self.is_prime[c as usize]) {
                return None;
            }
            mu = mu.checked_add(checked_pow(c.unsigned_abs(), rule.k)?)?;
            if mu > self.max_lambda {
                return None;
            }
        }
        match &rule.progression {
            Some(g) if !g.contains(mu) => None,
            _ => Some(mu),
        }
    }

    fn profile<W: Accum>(&self, slot: usize, data: &[(Vec<i64>, W)], x: &[i64]) -> Vec<(u64, W)> {
        let rule = &self.surface.slots[slot];
        let log = rule.prime && self.surface.weighting == Weighting::Log;
        let mut out: Vec<(u64, W)> = data
            .iter()
            .filter_map(|(y, w)| {
                let mu = self.offset_level(rule, x, y)?;
                if !log {
                    return Some((mu, *w));
                }
                let u: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                Some((mu, w.with_log(primes::log_weight(&u))))
            })
            .collect();
        merge_sorted(&mut out);
        out
    }

    fn histogram<W: Accum>(&self, slots: &[Vec<(Vec<i64>, W)>], x: &[i64]) -> Vec<(u64, W)> {
        let mut acc: Vec<(u64, W)> = vec![(0, W::one())];
        for (i, data) in slots.iter().enumerate() {
            let p = self.profile(i, data, x);
            if p.is_empty() {
                return Vec::new();
            }
            let mut next = Vec::with_capacity(acc.len() * p.len());
            for &(a, wa) in &acc {
                for &(b, wb) in &p {
                    if a + b > self.max_lambda {
                        break;
                    }
                    next.push((a + b, wa.times(wb)));
                }
            }
            merge_sorted(&mut next);
            acc = next;
        }
        acc
    }

    fn score_ln<W: Accum>(&self, raw: W, lam: u64) -> Option<f64> {
        match &self.norm {
            Norm::Power(phi) => Some(raw.ln() - phi.to_f64().unwrap() * (lam.max(1) as f64).ln()),
            Norm::Count { approx, .. } => {
                let n = approx[lam as usize];
                (n > 0.0).then(|| raw.ln() - n.ln())
            }
        }
    }

    fn exact_value(&self, raw: u128, lam: u64) -> Radical {
        match &self.norm {
            Norm::Power(phi) => Radical::from_integer(raw).mul(&Radical::power(lam.max(1), -*phi)),
            Norm::Count { exact, .. } => {
                let n = exact[lam as usize];
                if n == 0 {
                    Radical::zero()
                } else {
                    let g = raw.gcd(&n);
                    Radical::from_ratio(BigRational::new_raw(BigInt::from(raw / g), BigInt::from(n / g)))
                }
            }
        }
    }

    fn norm_factor_f64(&self, lam: u64) -> f64 {
        match &self.norm {
            Norm::Power(phi) => (lam.max(1) as f64).powf(-phi.to_f64().unwrap()),
            Norm::Count { approx, .. } => {
                let n = approx[lam as usize];
                if n > 0.0 {
                    1.0 / n
                } else {
                    0.0
                }
            }
        }
    }

    fn beats<W: Accum>(&self, a: (W, u64), b: (W, u64)) -> bool {
        let (Some(sa), Some(sb)) = (self.score_ln(a.0, a.1), self.score_ln(b.0, b.1)) else {
            return self.score_ln(a.0, a.1).is_some();
        };
        let tol = 1e-9 * (1.0 + sa.abs().max(sb.abs()));
        if sa > sb + tol {
            return true;
        }
        if sa < sb - tol {
            return false;
        }
        if W::EXACT {
            self.exact_value(a.0.as_u128(), a.1) > self.exact_value(b.0.as_u128(), b.1)
        } else {
            sa > sb
        }
    }

    /// The maximizing `(raw sum, λ)` over the parameter set, earliest λ on ties.
    fn best<W: Accum>(&self, slots: &[Vec<(Vec<i64>, W)>], x: &[i64]) -> Option<(W, u64)> {
        let hist = self.histogram(slots, x);
        if hist.is_empty() {
            return None;
        }
        let prefix = crate::lattice::cumulative(&hist.iter().map(|&(_, w)| w).collect::<Vec<_>>());
        let cum = |t: i64| -> W {
            if t < 0 {
                return W::zero();
            }
            let i = hist.partition_point(|&(mu, _)| mu <= t as u64);
            if i == 0 {
                W::zero()
            } else {
                prefix[i - 1]
            }
        };
        let mut best: Option<(W, u64)> = None;
        let mut consider = |raw: W, lam: u64| {
            if raw.is_zero() || self.score_ln(raw, lam).is_none() {
                return;
            }
            if best.is_none_or(|b| self.beats((raw, lam), b)) {
                best = Some((raw, lam));
            }
        };
        let decreasing = match &self.norm {
            Norm::Power(phi) => *phi >= Rational::zero(),
            Norm::Count { .. } => true,
        };
        match self.surface.shape {
            Shape::AtMost if decreasing => {
                // between jumps of the prefix sum the normalization only grows
                let mut last = None;
                for &(t, _) in &hist {
                    let i = self.lambdas.partition_point(|&l| l < t);
                    if i == self.lambdas.len() {
                        break;
                    }
                    let lam = self.lambdas[i];
                    if last != Some(lam) {
                        last = Some(lam);
                        consider(cum(lam as i64), lam);
                    }
                }
            }
            Shape::AtMost => {
                for &lam in &self.lambdas {
                    consider(cum(lam as i64), lam);
                }
            }
            Shape::Equal => {
                for &(t, w) in &hist {
                    if self.lambdas.binary_search(&t).is_ok() {
                        consider(w, t);
                    }
                }
            }
            Shape::Window { .. } => {
                for (&lam, &floor) in self.lambdas.iter().zip(&self.cutoffs) {
                    let raw = cum(lam as i64).minus(cum(floor as i64 - 1));
                    consider(raw, lam);
                }
            }
            Shape::ShiftedWindow { .. } => {
                // window sums peak at histogram entries; keep a running maximum
                // while the window length is unchanged
                let (mut top, mut scanned, mut cur_len): (Option<W>, usize, Option<u64>) = (None, 0, None);
                for (&lam, &len) in self.lambdas.iter().zip(&self.cutoffs) {
                    if cur_len != Some(len) {
                        (top, scanned, cur_len) = (None, 0, Some(len));
                    }
                    while scanned < hist.len() && hist[scanned].0 <= lam {
                        let b = hist[scanned].0 as i64;
                        let raw = cum(b).minus(cum(b - len as i64));
                        if top.is_none_or(|t| raw > t) {
                            top = Some(raw);
                        }
                        scanned += 1;
                    }
                    if let Some(raw) = top {
                        consider(raw, lam);
                    }
                }
            }
        }
        best
    }
}

fn merge_sorted<W: Weight>(v: &mut Vec<(u64, W)>) {
    v.sort_by_key(|&(mu, _)| mu);
    let mut out: Vec<(u64, W)> = Vec::with_capacity(v.len());
    for &(mu, w) in v.iter() {
        match out.last_mut() {
            Some((m, acc)) if *m == mu => *acc = acc.plus(w),
            _ => out.push((mu, w)),
        }
    }
    *v = out;
}

/// The box outside which an operator on `fs` vanishes for every `λ` up to
/// `max_lambda`: each slot dilates its support's bounding box by the reach
/// `⌊λ^{1/k}⌋` (positive offsets in `[2, reach]` for prime slots), and the
/// slots are intersected.
pub fn default_region(surface: &Surface, fs: &[&GridFunction], max_lambda: u64) -> Region {
    let d = surface.slots[0].d;
    let (mut lo, mut hi) = (vec![i64::MIN; d], vec![i64::MAX; d]);
    for (f, rule) in fs.iter().zip(&surface.slots) {
        let reach = iroot(max_lambda, rule.k) as i64;
        let Some((blo, bhi)) = f.bounding_box() else {
            return Region::Points(Vec::new());
        };
        for j in 0..d {
            let (l, h) = if rule.prime { (blo[j] + 2, bhi[j] + reach) } else { (blo[j] - reach, bhi[j] + reach) };
            lo[j] = lo[j].max(l);
            hi[j] = hi[j].min(h);
        }
    }
    Region::Box { lo, hi }
}

/// Points of `region` (or of the default region) at which the operator can
/// be nonzero: every slot reaches `x` and the minimal reaches sum to at most
/// the largest `λ`.
pub(crate) fn active_points(
    plan: &Plan,
    inputs: &Inputs,
    fs: &[&GridFunction],
    region: Option<&Region>,
) -> Vec<LatticePoint> {
    let surface = &plan.surface;
    let max = plan.max_lambda();
    let (anchor, f) = fs.iter().enumerate().min_by_key(|(_, f)| f.len()).expect("at least one slot");
    let rule = &surface.slots[anchor];
    let offsets: Vec<LatticePoint> = if rule.prime {
        lattice::enumerate_norm_range(rule.d, rule.k, 0, max)
            .into_iter()
            .filter(|u| u.coords().iter().all(|&c| c >= 2 && primes::is_prime(c as u64)))
            .collect()
    } else {
        lattice::enumerate_norm_range(rule.d, rule.k, 0, max)
    };
    let supports: Vec<&LatticePoint> = f.support().collect();
    let keep = |x: &[i64]| {
        let mut total = 0u64;
        for slot in 0..surface.arity() {
            match plan.min_reach(inputs, slot, x) {
                Some(m) => total += m,
                None => return false,
            }
        }
        total <= max
    };
    let mut found: Vec<LatticePoint> = supports
        .par_iter()
        .flat_map_iter(|y| {
            let mut buf = vec![0i64; y.dim()];
            let mut hits = Vec::new();
            for u in &offsets {
                for ((b, a), c) in buf.iter_mut().zip(y.coords()).zip(u.coords()) {
                    *b = a + c;
                }
                if keep(&buf) {
                    let x = LatticePoint::new(buf.clone());
                    if region.is_none_or(|r| r.contains(&x)) {
                        hits.push(x);
                    }
                }
            }
            hits
        })
        .collect();
    found.sort_unstable();
    found.dedup();
    found
}

/// Evaluates a plan at every point, in parallel, preserving point order.
pub(crate) fn evaluate_points(plan: &Plan, inputs: &Inputs, points: &[LatticePoint]) -> Vec<Value> {
    points.par_iter().map(|x| plan.eval(inputs, x.coords())).collect()
}

fn check_lambda_admissible(spec: &SurfaceSpec, lambda: u64) -> Result<()> {
    if let Some(p) = &spec.progressions {
        if !p.ambient.contains(lambda) {
            return Err(invalid("lambda", format!("{lambda} is not in the ambient progression {}", p.ambient)));
        }
    }
    Ok(())
}

/// `T_λ(f₁,…,f_ℓ)(x)`: the normalized sum of `Π f_i(x − u_i)` over the
/// surface at `λ`. Zero when the surface misses every input.
pub fn multilinear_average(
    spec: &SurfaceSpec,
    fs: &[&GridFunction],
    lambda: u64,
    norm: NormalizationMode,
    x: &LatticePoint,
) -> Result<Value> {
    let surface = Surface::from_spec(spec)?;
    check_lambda_admissible(spec, lambda)?;
    if x.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, found: x.dim() });
    }
    let plan = Plan::new(&surface, &[lambda], norm)?;
    let inputs = Inputs::prepare(&surface, fs)?;
    Ok(plan.eval(&inputs, x.coords()))
}

/// `sup_{λ ∈ Λ} T_λ(f₁,…,f_ℓ)` over a finite `Λ`, on the configured region.
pub fn maximal_function(spec: &SurfaceSpec, fs: &[&GridFunction], config: &MaximalConfig) -> Result<ValueGrid> {
    config.validate()?;
    for &l in &config.lambda_set {
        check_lambda_admissible(spec, l)?;
    }
    let surface = Surface::from_spec(spec)?;
    evaluate_surface(&surface, fs, config)
}

pub(crate) fn evaluate_surface(surface: &Surface, fs: &[&GridFunction], config: &MaximalConfig) -> Result<ValueGrid> {
    config.validate()?;
    let plan = Plan::new(surface, &config.lambda_set, config.normalization)?;
    let inputs = Inputs::prepare(surface, fs)?;
    let region = config.region.clone().unwrap_or_else(|| default_region(surface, fs, plan.max_lambda()));
    let points = region.points();
    let values = evaluate_points(&plan, &inputs, &points);
    Ok(ValueGrid {
        dim: surface.slots[0].d,
        exact: surface.is_exact(),
        values: points.into_iter().zip(values).filter(|(_, v)| !v.is_zero()).collect(),
    })
}

/// The linear maximal operators on a single function.
pub fn linear_maximal(kind: LinearKind, f: &GridFunction, config: &MaximalConfig) -> Result<ValueGrid> {
    linear_maximal_weighted(kind, f, config, Weighting::Log)
}

pub fn linear_maximal_weighted(
    kind: LinearKind,
    f: &GridFunction,
    config: &MaximalConfig,
    weighting: Weighting,
) -> Result<ValueGrid> {
    let prime = matches!(kind, LinearKind::PrimeHl { .. } | LinearKind::PrimeSphere { .. });
    if config.progression.is_some() && !prime {
        return Err(invalid("progression", "progressions only apply to prime operators"));
    }
    let surface = Surface::linear(kind, f.dim(), None, weighting);
    evaluate_surface(&surface, &[f], config)
}

/// Largest `λ` at which an operator on `fs` can be nonzero somewhere in
/// `region`; beyond it ball averages only decay and sphere or annulus
/// averages vanish, so truncating the supremum there loses nothing.
pub fn sufficient_lambda_max(surface: &Surface, fs: &[&GridFunction], region: &Region) -> u64 {
    let (lo, hi) = match region {
        Region::Box { lo, hi } => (lo.clone(), hi.clone()),
        Region::Points(ps) => {
            let f = GridFunction::from_pairs(surface.slots[0].d, ps.iter().map(|p| (p.clone(), BigRational::one())))
                .expect("distinct points");
            f.bounding_box().unwrap_or((vec![0; surface.slots[0].d], vec![0; surface.slots[0].d]))
        }
    };
    let mut bound = 0u64;
    for (f, rule) in fs.iter().zip(&surface.slots) {
        let Some((blo, bhi)) = f.bounding_box() else { return 0 };
        let mut h = 0u64;
        for j in 0..rule.d {
            let far = (hi[j] - blo[j]).abs().max((lo[j] - bhi[j]).abs()) as u64;
            h += checked_pow(far, rule.k).expect("reach overflows");
        }
        bound += h;
    }
    match surface.shape {
        Shape::Window { theta, width } | Shape::ShiftedWindow { theta, width } => {
            let mut lam = bound.max(1);
            while window_floor(lam, width, theta) <= bound {
                lam += 1;
            }
            lam
        }
        _ => bound,
    }
}

/// `max over trials of ‖T*(f₁,…,f_ℓ)‖_r / Π ‖f_i‖_{p_i}`: an empirical lower
/// bound for the operator norm.
pub fn ratio_norm_probe(
    spec: &SurfaceSpec,
    input_exponents: &[Exponent],
    r: Exponent,
    trials: &[Vec<GridFunction>],
    config: &MaximalConfig,
) -> Result<f64> {
    if input_exponents.len() != spec.ell {
        return Err(Error::Arity { expected: spec.ell, found: input_exponents.len() });
    }
    let mut best = 0.0f64;
    for trial in trials {
        let refs: Vec<&GridFunction> = trial.iter().collect();
        let out = maximal_function(spec, &refs, config)?;
        let num = out.lp_norm(r).to_f64();
        let den: f64 = trial.iter().zip(input_exponents).map(|(f, &p)| f.lp_norm(p).to_f64()).product();
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

impl fmt::Display for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn is<T: Send + Sync>() {}
    is::<Plan>();
    is::<Inputs>();
    is::<BigUint>();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact(v: &Value) -> BigRational {
        v.as_exact().unwrap().to_rational().unwrap()
    }

    fn delta0(d: usize) -> GridFunction {
        GridFunction::delta(LatticePoint::origin(d))
    }

    #[test]
    fn bilinear_ball_average_with_exact_count() {
        let f = delta0(1);
        let v = multilinear_average(
            &SurfaceSpec::ball(1, 2, 2),
            &[&f, &f],
            2,
            NormalizationMode::ExactCount,
            &LatticePoint::new(vec![0]),
        )
        .unwrap();
        assert_eq!(exact(&v), q(1, 9));
    }

    #[test]
    fn zero_input_annihilates() {
        let f = delta0(2);
        let z = GridFunction::zero(2);
        for spec in
            [SurfaceSpec::ball(2, 2, 2), SurfaceSpec::sphere(2, 2, 2), SurfaceSpec::annulus(2, Rational::new(1, 2), 2)]
        {
            let v = multilinear_average(
                &spec,
                &[&f, &z],
                4,
                NormalizationMode::PowerLaw(Rational::one()),
                &LatticePoint::origin(2),
            )
            .unwrap();
            assert!(v.is_zero());
        }
    }

    #[test]
    fn degenerate_sphere_normalization() {
        let f = delta0(1);
        let v = multilinear_average(
            &SurfaceSpec::sphere(1, 2, 2),
            &[&f, &f],
            0,
            NormalizationMode::PowerLaw(Rational::zero()),
            &LatticePoint::new(vec![0]),
        )
        .unwrap();
        assert_eq!(exact(&v), q(1, 1));
    }

    #[test]
    fn linear_hl_of_delta() {
        let cfg = MaximalConfig::new(1..=100, NormalizationMode::PowerLaw(Rational::new(1, 2)))
            .with_region(Region::cube(1, 3));
        let out = linear_maximal(LinearKind::HlBall { k: 2 }, &delta0(1), &cfg).unwrap();
        let at = |x: i64| exact(&out.get(&LatticePoint::new(vec![x])));
        assert_eq!(at(0), q(1, 1));
        assert_eq!(at(1), q(1, 1));
        assert_eq!(at(-1), q(1, 1));
        assert_eq!(at(2), q(1, 2));
        assert_eq!(at(3), q(1, 3));
        assert_eq!(at(-3), q(1, 3));
    }

    #[test]
    fn spherical_maximal_single_point() {
        // d = 5, power law λ^{3/2}: at |x|² = λ the value is λ^{-3/2}
        let cfg = MaximalConfig::new([9, 14], NormalizationMode::PowerLaw(Rational::new(3, 2))).with_region(
            Region::Points(vec![
                LatticePoint::new(vec![3, 0, 0, 0, 0]),
                LatticePoint::new(vec![1, 2, 3, 0, 0]),
                LatticePoint::new(vec![1, 1, 0, 0, 0]),
            ]),
        );
        let out = linear_maximal(LinearKind::Sphere { k: 2 }, &delta0(5), &cfg).unwrap();
        assert_eq!(
            out.get(&LatticePoint::new(vec![3, 0, 0, 0, 0])).as_exact().unwrap(),
            &Radical::power(9, Rational::new(-3, 2))
        );
        assert_eq!(
            out.get(&LatticePoint::new(vec![1, 2, 3, 0, 0])).as_exact().unwrap(),
            &Radical::power(14, Rational::new(-3, 2))
        );
        assert!(out.get(&LatticePoint::new(vec![1, 1, 0, 0, 0])).is_zero());
    }

    #[test]
    fn far_supports_give_zero() {
        let f = GridFunction::delta(LatticePoint::new(vec![-50]));
        let g = GridFunction::delta(LatticePoint::new(vec![50]));
        let cfg =
            MaximalConfig::new(1..=100, NormalizationMode::PowerLaw(Rational::one())).with_region(Region::cube(1, 10));
        let out = maximal_function(&SurfaceSpec::ball(1, 2, 2), &[&f, &g], &cfg).unwrap();
        assert!(out.values.is_empty());
    }

    #[test]
    fn maximal_function_is_monotone_in_the_parameter_set() {
        let f = GridFunction::from_integers(1, [(vec![0], 3), (vec![2], 1)]).unwrap();
        let g = GridFunction::from_integers(1, [(vec![1], 2), (vec![-3], 5)]).unwrap();
        let spec = SurfaceSpec::ball(1, 2, 2);
        let phi = NormalizationMode::PowerLaw(Rational::one());
        let small = MaximalConfig::new([3, 7, 20], phi).with_region(Region::cube(1, 8));
        let large = MaximalConfig::new([1, 3, 5, 7, 11, 20, 40], phi).with_region(Region::cube(1, 8));
        let a = maximal_function(&spec, &[&f, &g], &small).unwrap();
        let b = maximal_function(&spec, &[&f, &g], &large).unwrap();
        for p in Region::cube(1, 8).points() {
            assert!(b.get(&p).compare(&a.get(&p)).is_ge());
        }
    }

    #[test]
    fn shifted_annulus_majorizes_annulus() {
        let f = GridFunction::from_integers(2, [(vec![0, 0], 1), (vec![1, 2], 4), (vec![-2, 1], 2)]).unwrap();
        let theta = Rational::new(1, 2);
        let cfg = MaximalConfig::new(1..=40, NormalizationMode::PowerLaw(theta)).with_region(Region::cube(2, 6));
        let a = linear_maximal(LinearKind::Annulus { theta }, &f, &cfg).unwrap();
        let s = linear_maximal(LinearKind::ShiftedAnnulus { theta }, &f, &cfg).unwrap();
        for p in Region::cube(2, 6).points() {
            assert!(s.get(&p).compare(&a.get(&p)).is_ge(), "at {p}");
        }
    }

    #[test]
    fn norms() {
        let d = delta0(2);
        for p in [Exponent::Finite(Rational::one()), Exponent::Finite(Rational::new(3, 2)), Exponent::Infinity] {
            assert!((d.lp_norm(p).to_f64() - 1.0).abs() < 1e-15);
        }
        let two = GridFunction::from_integers(1, [(vec![0], 1), (vec![4], 1)]).unwrap();
        assert_eq!(exact(&two.lp_norm(Exponent::Finite(Rational::one()))), q(2, 1));
        assert_eq!(exact(&two.lp_norm(Exponent::Infinity)), q(1, 1));
        let f = GridFunction::from_pairs(
            1,
            [(vec![0], q(1, 1)), (vec![1], q(1, 2)), (vec![2], q(1, 4))]
                .into_iter()
                .map(|(c, v)| (LatticePoint::new(c), v)),
        )
        .unwrap();
        let l2 = f.lp_norm(Exponent::Finite(Rational::from_integer(2))).to_f64();
        assert!((l2 - 1.145644).abs() < 1e-6);
        assert_eq!(exact(&f.lp_norm(Exponent::Finite(Rational::one()))), q(7, 4));
    }

    #[test]
    fn text_format() {
        let f = GridFunction::parse("# two points\n0 1 3/4\n-2 5 2\n").unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.get(&LatticePoint::new(vec![0, 1])), q(3, 4));
        assert_eq!(GridFunction::parse(&f.to_text()).unwrap(), f);
        assert!(GridFunction::parse("0 -1/2").is_err());
        assert!(GridFunction::parse("0 1\n0 2").is_err());
        assert!(GridFunction::parse("0 1\n0 1 2").is_err());
        assert!(GridFunction::parse("").is_err());
        assert!(GridFunction::parse("a 1").is_err());
    }

    #[test]
    fn probe_edge_cases() {
        let spec = SurfaceSpec::ball(1, 2, 2);
        let cfg = MaximalConfig::new(1..=20, NormalizationMode::PowerLaw(Rational::one()));
        let ps = [Exponent::Finite(Rational::from_integer(2)); 2];
        let r = Exponent::Finite(Rational::one());
        assert_eq!(ratio_norm_probe(&spec, &ps, r, &[], &cfg).unwrap(), 0.0);
        let f = GridFunction::from_integers(1, [(vec![0], 1), (vec![1], 2)]).unwrap();
        let g = GridFunction::from_integers(1, [(vec![2], 1)]).unwrap();
        let base = ratio_norm_probe(&spec, &ps, r, &[vec![f.clone(), g.clone()]], &cfg).unwrap();
        let seven = f.scale(&q(7, 1));
        let scaled = ratio_norm_probe(&spec, &ps, r, &[vec![seven, g.clone()]], &cfg).unwrap();
        assert!((base - scaled).abs() <= 1e-12 * base);
        let more = ratio_norm_probe(&spec, &ps, r, &[vec![f, g.clone()], vec![delta0(1), g]], &cfg).unwrap();
        assert!(more >= base);
    }

    #[test]
    fn errors() {
        let f = delta0(2);
        let g = delta0(1);
        let spec = SurfaceSpec::ball(2, 2, 2);
        let x = LatticePoint::origin(2);
        let n = NormalizationMode::PowerLaw(Rational::one());
        assert!(matches!(multilinear_average(&spec, &[&f, &g], 3, n, &x), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(multilinear_average(&spec, &[&f], 3, n, &x), Err(Error::Arity { .. })));
        let empty = MaximalConfig::new([], n);
        assert!(matches!(maximal_function(&spec, &[&f, &f], &empty), Err(Error::EmptyParameterSet(_))));
    }
}
