//! Slice-and-dice dominations, the checker for the structural conditions of
//! the slicing method, and the exponent arithmetic of the boundedness results.
//!
//! A multilinear maximal operator is bounded pointwise by a product of
//! lower-arity maximal operators: one slot is frozen and averaged over a ball,
//! the remaining slots over the induced surface. [`verify_domination`]
//! evaluates both sides exactly and reports the largest excess.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{Rational, Value};
use crate::error::{invalid, Error, Result};
use crate::lattice::{self, Combiner, Component, FactorKind, Family, LatticePoint, Relation, SurfaceSpec};
use crate::operators::{
    active_points, default_region, evaluate_points, GridFunction, Inputs, NormalizationMode, Plan, Region, Shape,
    Surface, ValueGrid,
};
use crate::primes::{sumset_check, Progression};

/// Relative tolerance for comparisons involving logarithmic prime weights.
pub const PRIME_TOLERANCE: f64 = 1e-9;

/// How far the right-hand side is sliced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SliceDepth {
    /// One linear factor times the remaining `(ℓ−1)`-linear maximal operator.
    #[default]
    Once,
    /// Slice repeatedly until every factor is linear.
    Full,
}

#[derive(Clone, Debug)]
pub struct DominationConfig {
    /// Both sides take suprema over `λ ≤ lambda_max`.
    pub lambda_max: u64,
    /// Restricts the evaluation points; defaults to the region where the
    /// left-hand side can be nonzero.
    pub region: Option<Region>,
    /// The input slot sliced off first.
    pub slot: usize,
    pub depth: SliceDepth,
    /// Keep one row per evaluated point in the report.
    pub keep_rows: bool,
    /// When false the hypotheses are not checked. Used to exhibit failures
    /// outside the admissible range.
    pub check_preconditions: bool,
}

impl DominationConfig {
    pub fn new(lambda_max: u64) -> Self {
        DominationConfig {
            lambda_max,
            region: None,
            slot: 0,
            depth: SliceDepth::Once,
            keep_rows: false,
            check_preconditions: true,
        }
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    pub fn with_slot(mut self, slot: usize) -> Self {
        self.slot = slot;
        self
    }

    pub fn with_depth(mut self, depth: SliceDepth) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_rows(mut self) -> Self {
        self.keep_rows = true;
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.check_preconditions = false;
        self
    }
}

/// A maximal operator acting on some of the inputs: surface, parameter set
/// and power-law exponent.
#[derive(Clone, Debug)]
pub struct Factor {
    pub surface: Surface,
    /// Indices of the inputs this factor acts on.
    pub inputs: Vec<usize>,
    pub lambdas: Vec<u64>,
    pub phi: Rational,
}

impl Factor {
    pub fn describe(&self) -> String {
        let args: Vec<String> = self.inputs.iter().map(|i| format!("f{}", i + 1)).collect();
        let lo = self.lambdas.first().copied().unwrap_or(0);
        let hi = self.lambdas.last().copied().unwrap_or(0);
        format!("{}[phi={},lambda={}..{}]({})", self.surface.name(), self.phi, lo, hi, args.join(","))
    }

    fn restrict(&self, inputs: &[usize]) -> Vec<usize> {
        inputs.iter().map(|&j| self.inputs[j]).collect()
    }
}

/// The two sides of a slicing inequality.
#[derive(Clone, Debug)]
pub struct SlicePlan {
    pub lhs: Factor,
    pub rhs: Vec<Factor>,
}

impl SlicePlan {
    pub fn rhs_id(&self) -> String {
        let parts: Vec<String> = self.rhs.iter().map(Factor::describe).collect();
        parts.join(" * ")
    }
}

#[derive(Clone, Debug)]
pub enum Applicability {
    Applicable(Box<SlicePlan>),
    NotApplicable(String),
}

fn lhs_factor(spec: &SurfaceSpec, lambda_max: u64) -> Result<Factor> {
    if spec.family == Family::GeneralAdditive {
        return Err(Error::Unsupported("general additive surfaces have no registered linear factors".into()));
    }
    let surface = Surface::from_spec(spec)?;
    let ambient = spec.progressions.as_ref().map(|p| p.ambient);
    let lambdas: Vec<u64> = (1..=lambda_max).filter(|&l| ambient.is_none_or(|g| g.contains(l))).collect();
    if lambdas.is_empty() {
        return Err(Error::EmptyParameterSet("lambda_set"));
    }
    let phi = surface.default_phi();
    Ok(Factor { inputs: (0..spec.ell).collect(), surface, lambdas, phi })
}

/// Splits `factor` into a ball-type factor on its input at position `pos`
/// and a factor on the rest.
fn slice_once(factor: &Factor, pos: usize, lambda_max: u64) -> std::result::Result<(Factor, Factor), String> {
    let surface = &factor.surface;
    let mut rule = surface.slots[pos].clone();
    // the linear ball average ignores any progression on the sliced slot
    rule.progression = None;
    let rate = |d: usize, k: u32| Rational::new(d as i64, k as i64);
    let one_phi = rate(rule.d, rule.k);
    let one = Factor {
        surface: Surface { slots: vec![rule], shape: Shape::AtMost, weighting: surface.weighting, count_spec: None },
        inputs: vec![factor.inputs[pos]],
        lambdas: (1..=lambda_max).collect(),
        phi: one_phi,
    };
    let keep: Vec<usize> = (0..surface.arity()).filter(|&i| i != pos).collect();
    let volume: Rational = keep.iter().map(|&i| rate(surface.slots[i].d, surface.slots[i].k)).sum();
    let (shape, lambdas, phi) = match surface.shape {
        Shape::AtMost => (Shape::AtMost, (1..=lambda_max).collect(), volume),
        Shape::Equal => {
            let phi = volume - Rational::one();
            if phi < Rational::zero() {
                return Err(format!(
                    "the remaining sphere exponent {phi} is negative: need (l-1)d >= k for the induced radius bound"
                ));
            }
            (Shape::Equal, (0..=lambda_max).collect(), phi)
        }
        Shape::Window { theta, width } | Shape::ShiftedWindow { theta, width } => {
            (Shape::ShiftedWindow { theta, width }, factor.lambdas.clone(), volume - Rational::one() + theta)
        }
    };
    let rest = Factor { surface: surface.restrict(&keep, shape), inputs: factor.restrict(&keep), lambdas, phi };
    Ok((one, rest))
}

/// The right-hand side prescribed by the slicing argument for `spec`, or the
/// reason the argument does not apply.
pub fn slice_plan(spec: &SurfaceSpec, config: &DominationConfig) -> Result<Applicability> {
    let lhs = lhs_factor(spec, config.lambda_max)?;
    if config.slot >= spec.ell {
        return Err(invalid("slot", format!("slot {} out of range for l = {}", config.slot, spec.ell)));
    }
    if config.check_preconditions && spec.family.is_prime() {
        let Some(p) = &spec.progressions else {
            return Ok(Applicability::NotApplicable("prime surfaces need per-slot progressions".into()));
        };
        let report = sumset_check(&p.slots, &p.ambient);
        if !report.holds {
            return Ok(Applicability::NotApplicable(format!(
                "sumset condition fails mod {}: witness residue {}",
                report.modulus,
                report.witness.unwrap_or(0)
            )));
        }
    }
    if spec.ell == 1 {
        return Ok(Applicability::Applicable(Box::new(SlicePlan { rhs: vec![lhs.clone()], lhs })));
    }
    let mut rhs = Vec::new();
    let mut current = lhs.clone();
    let mut pos = config.slot;
    loop {
        let (one, rest) = match slice_once(&current, pos, config.lambda_max) {
            Ok(pair) => pair,
            Err(reason) if config.check_preconditions => return Ok(Applicability::NotApplicable(reason)),
            Err(_) => force_slice(&current, pos, config.lambda_max),
        };
        rhs.push(one);
        if config.depth == SliceDepth::Once || rest.inputs.len() == 1 {
            rhs.push(rest);
            break;
        }
        current = rest;
        pos = 0;
    }
    Ok(Applicability::Applicable(Box::new(SlicePlan { lhs, rhs })))
}

/// The sphere slicing with a negative remaining exponent.
fn force_slice(factor: &Factor, pos: usize, lambda_max: u64) -> (Factor, Factor) {
    let mut relaxed = factor.clone();
    relaxed.surface.shape = Shape::AtMost;
    let (one, mut rest) = slice_once(&relaxed, pos, lambda_max).expect("ball slicing always applies");
    rest.surface.shape = Shape::Equal;
    rest.lambdas = (0..=lambda_max).collect();
    rest.phi -= Rational::one();
    (one, rest)
}

fn evaluate_factor(factor: &Factor, fs: &[&GridFunction], points: &[LatticePoint]) -> Result<Vec<Value>> {
    let plan = Plan::new(&factor.surface, &factor.lambdas, NormalizationMode::PowerLaw(factor.phi))?;
    let sub: Vec<&GridFunction> = factor.inputs.iter().map(|&i| fs[i]).collect();
    let inputs = Inputs::prepare(&factor.surface, &sub)?;
    Ok(evaluate_points(&plan, &inputs, points))
}

fn evaluate_product(factors: &[Factor], fs: &[&GridFunction], points: &[LatticePoint]) -> Result<Vec<Value>> {
    let mut acc: Option<Vec<Value>> = None;
    for factor in factors {
        let vals = evaluate_factor(factor, fs, points)?;
        acc = Some(match acc {
            None => vals,
            Some(prev) => prev.iter().zip(&vals).map(|(a, b)| a.mul(b)).collect(),
        });
    }
    Ok(acc.unwrap_or_default())
}

/// The pointwise product of the linear and lower-arity maximal functions
/// that bound the multilinear one, on `config.region` or the default region
/// of the left-hand side.
pub fn slice_rhs(spec: &SurfaceSpec, fs: &[&GridFunction], config: &DominationConfig) -> Result<ValueGrid> {
    let plan = match slice_plan(spec, config)? {
        Applicability::Applicable(p) => p,
        Applicability::NotApplicable(reason) => return Err(Error::Unsupported(reason)),
    };
    Inputs::prepare(&plan.lhs.surface, fs)?;
    let region = config.region.clone().unwrap_or_else(|| default_region(&plan.lhs.surface, fs, config.lambda_max));
    let points = region.points();
    let values = evaluate_product(&plan.rhs, fs, &points)?;
    Ok(ValueGrid {
        dim: spec.d,
        exact: plan.lhs.surface.is_exact(),
        values: points.into_iter().zip(values).filter(|(_, v)| !v.is_zero()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Dominated,
    Violated,
    NotApplicable(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Dominated => "dominated",
            Verdict::Violated => "violated",
            Verdict::NotApplicable(_) => "not_applicable",
        }
    }
}

/// Both sides of the inequality at one point.
#[derive(Clone, Debug)]
pub struct PointComparison {
    pub point: LatticePoint,
    pub lhs: Value,
    pub rhs: Value,
}

impl PointComparison {
    /// `lhs − rhs` as an exact fraction when both sides are rational.
    pub fn exact_difference(&self) -> Option<BigRational> {
        let a = self.lhs.as_exact()?.to_rational()?;
        let b = self.rhs.as_exact()?.to_rational()?;
        Some(a - b)
    }

    pub fn difference_f64(&self) -> f64 {
        self.lhs.to_f64() - self.rhs.to_f64()
    }

    /// `lhs − rhs`, exact when rational and otherwise in scientific notation.
    pub fn difference_text(&self) -> String {
        match self.exact_difference() {
            Some(q) => format_fraction(&q),
            None => format!("{:.15e}", self.difference_f64()),
        }
    }

    /// Whether `lhs > rhs`: exactly for exact values, with relative tolerance
    /// [`PRIME_TOLERANCE`] otherwise.
    pub fn violates(&self) -> bool {
        match (&self.lhs, &self.rhs) {
            (Value::Exact(a), Value::Exact(b)) => a > b,
            _ => self.lhs.to_f64() > self.rhs.to_f64() * (1.0 + PRIME_TOLERANCE),
        }
    }
}

pub fn format_fraction(q: &BigRational) -> String {
    if q.denom() == &BigInt::one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Clone, Debug)]
pub struct DominationReport {
    pub lhs_id: String,
    pub rhs_id: String,
    pub region: String,
    pub lambda_max: u64,
    pub exact: bool,
    /// Points where the left-hand side can be nonzero; elsewhere it vanishes
    /// and domination is trivial.
    pub points_evaluated: usize,
    pub violations: usize,
    /// The point maximizing `lhs − rhs`, earliest on ties.
    pub witness: Option<PointComparison>,
    pub verdict: Verdict,
    pub rows: Vec<PointComparison>,
}

impl DominationReport {
    pub fn is_dominated(&self) -> bool {
        self.verdict == Verdict::Dominated
    }

    /// `max(lhs − rhs)` over the evaluated points.
    pub fn max_violation_text(&self) -> String {
        self.witness.as_ref().map_or_else(|| "none".to_string(), PointComparison::difference_text)
    }

    pub fn csv_header() -> &'static str {
        "lhs,rhs,region,lambda_max,points,violations,max_violation,witness,verdict"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            quote(&self.lhs_id),
            quote(&self.rhs_id),
            quote(&self.region),
            self.lambda_max,
            self.points_evaluated,
            self.violations,
            self.max_violation_text(),
            quote(&self.witness.as_ref().map_or_else(String::new, |w| w.point.to_string())),
            self.verdict.label()
        )
    }
}

impl fmt::Display for DominationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.verdict {
            Verdict::NotApplicable(reason) => write!(f, "not applicable: {reason}"),
            v => match &self.witness {
                Some(w) => write!(f, "{}, max_violation = {} at witness x={}", v.label(), w.difference_text(), w.point),
                None => write!(f, "{}, left-hand side vanishes on the region", v.label()),
            },
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Evaluates both sides of the slicing inequality at every point where the
/// left-hand side can be nonzero and reports the largest excess.
pub fn verify_domination(
    spec: &SurfaceSpec,
    fs: &[&GridFunction],
    config: &DominationConfig,
) -> Result<DominationReport> {
    let applicability = slice_plan(spec, config)?;
    let plan = match applicability {
        Applicability::Applicable(p) => p,
        Applicability::NotApplicable(reason) => {
            return Ok(DominationReport {
                lhs_id: Surface::from_spec(spec)?.name(),
                rhs_id: String::new(),
                region: config.region.as_ref().map_or_else(|| "default".into(), Region::describe),
                lambda_max: config.lambda_max,
                exact: Surface::from_spec(spec)?.is_exact(),
                points_evaluated: 0,
                violations: 0,
                witness: None,
                verdict: Verdict::NotApplicable(reason),
                rows: Vec::new(),
            })
        }
    };
    let lhs = &plan.lhs;
    let lhs_plan = Plan::new(&lhs.surface, &lhs.lambdas, NormalizationMode::PowerLaw(lhs.phi))?;
    let inputs = Inputs::prepare(&lhs.surface, fs)?;
    let region = config.region.clone().unwrap_or_else(|| default_region(&lhs.surface, fs, config.lambda_max));
    let points = active_points(&lhs_plan, &inputs, fs, Some(&region));
    let lhs_values = evaluate_points(&lhs_plan, &inputs, &points);
    let rhs_values = evaluate_product(&plan.rhs, fs, &points)?;
    let points_evaluated = points.len();

    let mut violations = 0;
    let mut witness: Option<PointComparison> = None;
    let mut rows = Vec::new();
    for ((point, l), r) in points.into_iter().zip(lhs_values).zip(rhs_values) {
        let row = PointComparison { point, lhs: l, rhs: r };
        if row.violates() {
            violations += 1;
        }
        let better = match &witness {
            None => true,
            Some(w) => match (row.violates(), w.violates()) {
                (true, false) => true,
                (false, true) => false,
                _ => row.difference_f64() > w.difference_f64(),
            },
        };
        if better {
            witness = Some(row.clone());
        }
        if config.keep_rows {
            rows.push(row);
        }
    }
    Ok(DominationReport {
        lhs_id: lhs.describe(),
        rhs_id: plan.rhs_id(),
        region: region.describe(),
        lambda_max: config.lambda_max,
        exact: lhs.surface.is_exact(),
        points_evaluated,
        violations,
        witness,
        verdict: if violations == 0 { Verdict::Dominated } else { Verdict::Violated },
        rows,
    })
}

// ---------------------------------------------------------------------------
// Exponent arithmetic

fn ratio(n: i64, d: i64) -> Result<Rational> {
    if d == 0 {
        return Err(invalid("d", "zero denominator"));
    }
    Ok(Rational::new(n, d))
}

/// The critical exponent `r_c` below which the Dirac-delta series diverges.
pub fn critical_r(family: Family, d: usize, k: u32, ell: usize, theta: Option<Rational>) -> Result<Rational> {
    let (d, k, ell) = (d as i64, k as i64, ell as i64);
    if d < 1 || ell < 1 {
        return Err(invalid("d", "d and ell must be positive"));
    }
    match family {
        Family::Ball | Family::PrimeBall => ratio(1, ell),
        Family::Sphere | Family::PrimeSphere => {
            if ell * d <= k {
                return Err(invalid("k", format!("need l*d > k, got l*d = {} and k = {k}", ell * d)));
            }
            ratio(d, ell * d - k)
        }
        Family::Annulus => {
            let theta = theta.ok_or_else(|| invalid("theta", "annulus needs theta"))?;
            let den = Rational::from_integer(ell * d - 2) + theta * 2;
            if den <= Rational::zero() {
                return Err(invalid("theta", "l*d - 2 + 2*theta must be positive"));
            }
            Ok(Rational::from_integer(d) / den)
        }
        Family::GeneralAdditive => Err(Error::Unsupported("no closed form for general surfaces".into())),
    }
}

/// `r_0`, `p_0` and the `r`-thresholds of the sphere and prime-sphere results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    /// `(2+2δ)/((ℓ−1)(2+2δ) + (1+2δ))`
    pub r0: Rational,
    /// `max{1 + 1/(1+2δ), d/(d−k)}`
    pub p0: Rational,
    /// `max{r_0, d/(ℓd−k)}`
    pub sphere_r: Rational,
    /// `p/((ℓ−1)p + 1)` with `p = p_{k,d}`
    pub prime_r: Rational,
}

pub fn sufficient_r_and_p(d: usize, k: u32, ell: usize, delta0: Rational, p_kd: Rational) -> Result<Thresholds> {
    if delta0 < Rational::zero() {
        return Err(invalid("delta0", "must be nonnegative"));
    }
    if p_kd <= Rational::one() {
        return Err(invalid("p_kd", "must exceed 1"));
    }
    if d as u64 <= k as u64 {
        return Err(invalid("d", format!("p_0 needs d > k, got d = {d}, k = {k}")));
    }
    let one = Rational::one();
    let two = Rational::from_integer(2);
    let l1 = Rational::from_integer(ell as i64 - 1);
    let r0 = (two + two * delta0) / (l1 * (two + two * delta0) + (one + two * delta0));
    let p0 = (one + one / (one + two * delta0)).max(ratio(d as i64, d as i64 - k as i64)?);
    let sphere_r = r0.max(critical_r(Family::Sphere, d, k, ell, None)?);
    let prime_r = p_kd / (l1 * p_kd + one);
    Ok(Thresholds { r0, p0, sphere_r, prime_r })
}

/// `p_d/(2p_d + 1)`, the bilinear threshold of the general slicing theorem.
pub fn framework_r_threshold(p_d: Rational) -> Result<Rational> {
    if p_d <= Rational::one() {
        return Err(invalid("p_d", "must exceed 1"));
    }
    Ok(p_d / (p_d * 2 + 1))
}

/// `d/(d − 2 + 2θ)`, the linear annular exponent, for `θ ∈ [0, 1]`.
pub fn annulus_p0(theta: Rational, d: usize) -> Result<Rational> {
    if theta < Rational::zero() || theta > Rational::one() {
        return Err(invalid("theta", "must lie in [0, 1]"));
    }
    let den = Rational::from_integer(d as i64 - 2) + theta * 2;
    if den <= Rational::zero() {
        return Err(invalid("d", "d - 2 + 2*theta must be positive"));
    }
    Ok(Rational::from_integer(d as i64) / den)
}

/// The open region of `(1/p, 1/q)` for which a bilinear bound can hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentRegion {
    pub family: Family,
    pub d: usize,
    pub k: u32,
    pub theta: Option<Rational>,
    pub ell: usize,
    /// `1/r_c`: the region is `0 ≤ 1/p, 1/q < 1` with `1/p + 1/q < threshold`.
    pub threshold: Rational,
    /// Polygon vertices, counterclockwise from the origin.
    pub vertices: Vec<(Rational, Rational)>,
}

pub fn exponent_region(
    family: Family,
    d: usize,
    k: u32,
    theta: Option<Rational>,
    ell: usize,
) -> Result<ExponentRegion> {
    let threshold = critical_r(family, d, k, ell, theta)?.recip();
    let (zero, one) = (Rational::zero(), Rational::one());
    let vertices = if threshold >= Rational::from_integer(2) {
        vec![(zero, zero), (one, zero), (one, one), (zero, one)]
    } else if threshold > one {
        let s = threshold - one;
        vec![(zero, zero), (one, zero), (one, s), (s, one), (zero, one)]
    } else {
        vec![(zero, zero), (threshold, zero), (zero, threshold)]
    };
    Ok(ExponentRegion { family, d, k, theta, ell, threshold, vertices })
}

impl ExponentRegion {
    /// Membership of `(1/p, 1/q)`. With `strict` the critical lines are
    /// excluded. With `r` given, also requires `1/r ≤ 1/p + 1/q` and
    /// `1/r < threshold`.
    pub fn contains(&self, x: Rational, y: Rational, r: Option<Rational>, strict: bool) -> bool {
        let (zero, one) = (Rational::zero(), Rational::one());
        let below = |a: Rational, b: Rational| if strict { a < b } else { a <= b };
        if x < zero || y < zero || !below(x, one) || !below(y, one) || !below(x + y, self.threshold) {
            return false;
        }
        match r {
            Some(r) if r > zero => x + y >= r.recip() && below(r.recip(), self.threshold),
            Some(_) => false,
            None => true,
        }
    }
}

// ---------------------------------------------------------------------------
// Framework conditions

/// `φ(d) = slope·d + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffinePhi {
    pub slope: Rational,
    pub offset: Rational,
}

impl AffinePhi {
    pub fn eval(&self, d: usize) -> Rational {
        self.slope * Rational::from_integer(d as i64) + self.offset
    }
}

#[derive(Clone, Debug)]
pub struct FrameworkConfig {
    pub lambda_lo: u64,
    pub lambda_hi: u64,
    /// Surface holes at or above the onset fail condition 3.
    pub onset: u64,
    /// Condition 2 probes `[−radius, radius]^d` for each component.
    pub probe_radius: i64,
    /// Condition 1 is checked in every dimension up to this bound.
    pub max_dim: usize,
}

impl FrameworkConfig {
    pub fn new(lambda_lo: u64, lambda_hi: u64, onset: u64) -> Self {
        FrameworkConfig { lambda_lo, lambda_hi, onset, probe_radius: 3, max_dim: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FrameworkWitness {
    ExponentMismatch { dim: usize, found: Rational, expected: Rational },
    Structural { reason: String, pair: Option<(LatticePoint, LatticePoint)> },
    Lambda(u64),
}

impl fmt::Display for FrameworkWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameworkWitness::ExponentMismatch { dim, found, expected } => {
                write!(f, "dimension {dim}: difference {found}, expected {expected}")
            }
            FrameworkWitness::Structural { reason, pair: Some((u, v)) } => write!(f, "{reason} at u={u} v={v}"),
            FrameworkWitness::Structural { reason, pair: None } => write!(f, "{reason}"),
            FrameworkWitness::Lambda(l) => write!(f, "lambda={l}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionStatus {
    Pass,
    Fail,
    /// Not evaluable because an earlier structural condition failed.
    Skipped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResult {
    pub index: usize,
    pub status: ConditionStatus,
    pub witness: Option<FrameworkWitness>,
    pub note: String,
}

impl ConditionResult {
    pub fn passed(&self) -> bool {
        self.status == ConditionStatus::Pass
    }

    fn pass(index: usize, note: impl Into<String>) -> Self {
        ConditionResult { index, status: ConditionStatus::Pass, witness: None, note: note.into() }
    }

    fn fail(index: usize, witness: FrameworkWitness, note: impl Into<String>) -> Self {
        ConditionResult { index, status: ConditionStatus::Fail, witness: Some(witness), note: note.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameworkReport {
    pub conditions: Vec<ConditionResult>,
    /// Surface holes below the onset.
    pub early_holes: Vec<u64>,
}

impl FrameworkReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(ConditionResult::passed)
    }

    pub fn condition(&self, index: usize) -> &ConditionResult {
        &self.conditions[index - 1]
    }
}

fn components_of(spec: &SurfaceSpec) -> Vec<Component> {
    if spec.family == Family::GeneralAdditive {
        return spec.components.clone();
    }
    let factor = if spec.family.is_prime() { FactorKind::Prime } else { FactorKind::Integer };
    vec![Component { d: spec.d, k: spec.k, factor }; spec.ell]
}

fn probe_box(d: usize, radius: i64) -> Vec<LatticePoint> {
    Region::cube(d, radius).points()
}

fn condition_one(
    spec: &SurfaceSpec,
    comps: &[Component],
    phi: &dyn Fn(usize) -> Rational,
    cfg: &FrameworkConfig,
) -> ConditionResult {
    let k = comps[0].k as i64;
    let ell = spec.ell.max(comps.len());
    for dim in 1..=cfg.max_dim.max(spec.d) {
        let found = phi(ell * dim) - phi((ell - 1) * dim);
        let expected = Rational::new(dim as i64, k);
        if found != expected {
            return ConditionResult::fail(
                1,
                FrameworkWitness::ExponentMismatch { dim, found, expected },
                "phi(l d) - phi((l-1) d) must equal d/k",
            );
        }
    }
    ConditionResult::pass(1, format!("phi(l d) - phi((l-1) d) = d/{k} for d <= {}", cfg.max_dim.max(spec.d)))
}

fn condition_two(spec: &SurfaceSpec, comps: &[Component], cfg: &FrameworkConfig) -> ConditionResult {
    let boxes: Vec<Vec<LatticePoint>> = comps.iter().map(|c| probe_box(c.d, cfg.probe_radius)).collect();
    // each component maps into the nonnegative integers by construction; the
    // probe confirms it is defined on the whole box (prime factors excepted)
    for (c, pts) in comps.iter().zip(&boxes) {
        if c.factor == FactorKind::Integer && pts.iter().any(|u| c.eval(u.coords()).is_none()) {
            return ConditionResult::fail(
                2,
                FrameworkWitness::Structural { reason: "undefined component".into(), pair: None },
                "",
            );
        }
    }
    if spec.combiner == Combiner::Product && comps.len() >= 2 {
        let (a, b) = (&comps[0], &comps[1]);
        for u in &boxes[0] {
            let Some(hu) = a.eval(u.coords()) else { continue };
            for v in &boxes[1] {
                let Some(hv) = b.eval(v.coords()) else { continue };
                if hu * hv != hu + hv {
                    return ConditionResult::fail(
                        2,
                        FrameworkWitness::Structural {
                            reason: format!(
                                "h(u,v) = h1(u)*h2(v) = {} differs from h1(u)+h2(v) = {}",
                                hu * hv,
                                hu + hv
                            ),
                            pair: Some((u.clone(), v.clone())),
                        },
                        "variables mix through a product",
                    );
                }
            }
        }
        return ConditionResult::fail(
            2,
            FrameworkWitness::Structural { reason: "multiplicative combiner".into(), pair: None },
            "variables mix through a product",
        );
    }
    ConditionResult::pass(
        2,
        format!("h = sum of {} nonnegative components on [-{r},{r}]^d", comps.len(), r = cfg.probe_radius),
    )
}

fn allowable(spec: &SurfaceSpec, lambda: u64) -> bool {
    spec.progressions.as_ref().is_none_or(|p| p.ambient.contains(lambda))
}

fn slot_tables(spec: &SurfaceSpec, comps: &[Component], max: u64) -> Vec<Vec<u128>> {
    comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let g = spec.progressions.as_ref().map(|p| &p.slots[i]);
            lattice::slot_table::<u128>(c.d, c.k, c.factor == FactorKind::Prime, g, max, |_| 1)
        })
        .collect()
}

fn projection_condition(
    index: usize,
    slot: usize,
    spec: &SurfaceSpec,
    comps: &[Component],
    tables: &[Vec<u128>],
    cfg: &FrameworkConfig,
) -> ConditionResult {
    if comps.len() < 2 || slot >= comps.len() {
        return ConditionResult::pass(index, "single slot: the projection is the identity");
    }
    let rest = tables
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != slot)
        .map(|(_, t)| t.clone())
        .reduce(|a, b| lattice::convolve(&a, &b))
        .expect("at least one other slot");
    let declared: Option<Progression> = spec.progressions.as_ref().map(|p| p.slots[slot]);
    let own = &tables[slot];
    let (shape_equal, window) = match (spec.family, spec.relation) {
        (Family::Ball | Family::PrimeBall, _) | (Family::GeneralAdditive, Relation::AtMost) => (false, None),
        (Family::Annulus, _) => (true, spec.theta.map(|t| (t, spec.width_multiplier))),
        _ => (true, None),
    };
    let rest_cum = lattice::cumulative(&rest);
    let decomposable = |lam: u64| -> Option<u64> {
        // the smallest admissible η with a point (u, rest) on the surface
        for eta in 0..=lam {
            if own[eta as usize] == 0 || declared.is_some_and(|g| !g.contains(eta)) {
                continue;
            }
            let left = lam - eta;
            let hit = if !shape_equal {
                rest_cum[left as usize] > 0
            } else if let Some((theta, w)) = window {
                let lo = crate::arith::window_floor(lam, w, theta);
                (lo.saturating_sub(eta)..=left).any(|t| t + eta >= lo && rest[t as usize] > 0)
            } else {
                rest[left as usize] > 0
            };
            if hit {
                return Some(eta);
            }
        }
        None
    };
    let start = cfg.lambda_lo.max(cfg.onset);
    for lam in start..=cfg.lambda_hi {
        if allowable(spec, lam) && decomposable(lam).is_none() {
            return ConditionResult::fail(
                index,
                FrameworkWitness::Lambda(lam),
                format!("no admissible eta{} for this lambda", slot + 1),
            );
        }
    }
    let set = declared.map_or_else(|| "N".to_string(), |g| g.to_string());
    ConditionResult::pass(
        index,
        format!("every allowable lambda in [{start},{}] projects to eta{} in {set}", cfg.lambda_hi, slot + 1),
    )
}

/// Checks the five structural conditions of the slicing method for `spec`
/// with normalization exponent `φ` on the configured probe ranges.
pub fn check_framework(
    spec: &SurfaceSpec,
    phi: &dyn Fn(usize) -> Rational,
    cfg: &FrameworkConfig,
) -> Result<FrameworkReport> {
    spec.validate()?;
    if cfg.lambda_lo > cfg.lambda_hi {
        return Err(Error::EmptyParameterSet("lambda_probe_range"));
    }
    let comps = components_of(spec);
    let mut conditions = vec![condition_one(spec, &comps, phi, cfg), condition_two(spec, &comps, cfg)];
    if !conditions[1].passed() {
        for index in 3..=5 {
            conditions.push(ConditionResult {
                index,
                status: ConditionStatus::Skipped,
                witness: None,
                note: "requires an additive surface".into(),
            });
        }
        return Ok(FrameworkReport { conditions, early_holes: Vec::new() });
    }
    let tallies = lattice::surface_tallies(spec, cfg.lambda_hi)?;
    let holes: Vec<u64> =
        (cfg.lambda_lo..=cfg.lambda_hi).filter(|&l| allowable(spec, l) && tallies[l as usize].is_zero()).collect();
    let (early, late): (Vec<u64>, Vec<u64>) = holes.into_iter().partition(|&l| l < cfg.onset);
    conditions.push(match late.first() {
        Some(&l) => {
            ConditionResult::fail(3, FrameworkWitness::Lambda(l), format!("{} holes at or above the onset", late.len()))
        }
        None => ConditionResult::pass(3, format!("no holes in [{},{}]", cfg.onset.max(cfg.lambda_lo), cfg.lambda_hi)),
    });
    let tables = slot_tables(spec, &comps, cfg.lambda_hi);
    conditions.push(projection_condition(4, 0, spec, &comps, &tables, cfg));
    conditions.push(projection_condition(5, 1, spec, &comps, &tables, cfg));
    Ok(FrameworkReport { conditions, early_holes: early })
}
