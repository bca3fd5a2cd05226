//! Dirac-delta lower bounds for the multilinear maximal operators.
//!
//! With every input equal to `δ₀` the only contributing tuple at `x` is
//! `u₁ = … = u_ℓ = x`, so choosing `λ = ℓ·h(x)` gives
//! `T*(δ₀,…,δ₀)(x) ≥ (ℓ·h(x))^{−φ}` (times `(Π log x_j)^ℓ` on prime
//! surfaces). The `r`-th power series of these values converges exactly when
//! `r` exceeds the critical exponent; finite partial sums are classified by
//! the decay of dyadic shell sums.

use std::fmt;

use rayon::prelude::*;

use crate::arith::{Radical, Rational, Value};
use crate::error::{invalid, Error, Result};
use crate::lattice::{sphere_counts, Family, LatticePoint, SurfaceSpec, Weighting};
use crate::operators::Surface;
use crate::primes;
use crate::slicing::critical_r;

/// Shell ratios below this are read as geometric decay.
pub const CONVERGENT_RATIO: f64 = 0.9;
/// Shell ratios at or above this are read as non-decaying.
pub const DIVERGENT_RATIO: f64 = 0.5;

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The exponent `φ` of the family's power-law normalization.
fn series_phi(spec: &SurfaceSpec) -> Result<Rational> {
    match spec.family {
        Family::Ball | Family::Sphere | Family::Annulus | Family::PrimeSphere | Family::PrimeBall => {
            Ok(Surface::from_spec(spec)?.default_phi())
        }
        Family::GeneralAdditive => Err(Error::Unsupported("no delta series for general surfaces".into())),
    }
}

fn check_r(r: Rational) -> Result<()> {
    if r <= Rational::from_integer(0) {
        return Err(invalid("r", "must be positive"));
    }
    Ok(())
}

/// Whether a point with `h(x) = n` contributes: for prime families `n` must
/// lie in every slot progression and `ℓn` in the ambient one.
fn admissible_level(spec: &SurfaceSpec, n: u64) -> bool {
    match &spec.progressions {
        Some(p) if spec.family.is_prime() => {
            p.slots.iter().all(|g| g.contains(n)) && p.ambient.contains(spec.ell as u64 * n)
        }
        _ => true,
    }
}

/// The `r`-th power of the delta lower bound at `x`, or `None` when `x`
/// carries no term (the origin, non-prime points of prime families, or
/// excluded progression classes).
pub fn delta_term(spec: &SurfaceSpec, x: &LatticePoint, r: Rational) -> Result<Option<Value>> {
    check_r(r)?;
    let phi = series_phi(spec)?;
    let n = x.norm(spec.k);
    if n == 0 || !admissible_level(spec, n) {
        return Ok(None);
    }
    if spec.family.is_prime() && !x.coords().iter().all(|&c| c >= 2 && primes::is_prime(c as u64)) {
        return Ok(None);
    }
    let lambda = spec.ell as u64 * n;
    let base = Radical::power(lambda, -phi * r);
    if spec.family.is_prime() && spec.weighting == Weighting::Log {
        let w = primes::log_weight(x.coords()).powf(spec.ell as f64 * to_f64(r));
        return Ok(Some(Value::Approx(w * base.to_f64())));
    }
    Ok(Some(Value::Exact(base)))
}

/// `terms[n]`: the total of the delta terms over all `x` with `h(x) = n`.
fn level_terms(spec: &SurfaceSpec, r: Rational, max_level: u64) -> Result<Vec<f64>> {
    let phi = to_f64(series_phi(spec)?);
    let rf = to_f64(r);
    let counts: Vec<f64> = if spec.family.is_prime() {
        let power = if spec.weighting == Weighting::Log { spec.ell as f64 * rf } else { 0.0 };
        primes::prime_power_table::<f64>(spec.d, spec.k, max_level, |p| (p as f64).ln().powf(power))
    } else {
        sphere_counts(spec.d, spec.k, max_level).into_iter().map(|c| c as f64).collect()
    };
    Ok(counts
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            if n == 0 || c == 0.0 || !admissible_level(spec, n as u64) {
                0.0
            } else {
                c * (-(phi * rf) * ((spec.ell * n) as f64).ln()).exp()
            }
        })
        .collect())
}

fn level_of(radius: u64, k: u32) -> Result<u64> {
    crate::arith::checked_pow(radius, k).ok_or_else(|| invalid("radii", "radius^k overflows"))
}

/// `Σ_{0 < h(x) ≤ R^k}` of the delta terms.
pub fn delta_partial_sum(spec: &SurfaceSpec, r: Rational, radius: u64) -> Result<f64> {
    check_r(r)?;
    spec.validate()?;
    let max = level_of(radius, spec.k)?;
    Ok(level_terms(spec, r, max)?.iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl SeriesVerdict {
    pub fn label(self) -> &'static str {
        match self {
            SeriesVerdict::Convergent => "convergent",
            SeriesVerdict::Divergent => "divergent",
            SeriesVerdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for SeriesVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Partial sums at each radius of a ladder, the shell sums between
/// consecutive radii, and the resulting verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub radii: Vec<u64>,
    pub partial_sums: Vec<f64>,
    /// `shells[j]` sums the levels in `(R_j, R_{j+1}]`.
    pub shells: Vec<f64>,
    pub ratios: Vec<f64>,
    pub verdict: SeriesVerdict,
}

fn check_ladder(radii: &[u64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(invalid("radii", "need at least four radii (three shells)"));
    }
    if radii[0] == 0 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radii", "must be positive and strictly increasing"));
    }
    Ok(())
}

fn classify_terms(terms: &[f64], radii: &[u64], k: u32) -> Result<Classification> {
    let levels: Vec<u64> = radii.iter().map(|&r| level_of(r, k)).collect::<Result<_>>()?;
    let sum = |lo: u64, hi: u64| -> f64 { terms[lo as usize + 1..=hi as usize].iter().sum() };
    let inner = sum(0, levels[0]);
    let shells: Vec<f64> = levels.windows(2).map(|w| sum(w[0], w[1])).collect();
    let mut partial_sums = vec![inner];
    for s in &shells {
        partial_sums.push(partial_sums.last().unwrap() + s);
    }
    let ratios: Vec<f64> = shells.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN }).collect();
    let verdict = if ratios.iter().any(|r| !r.is_finite()) {
        SeriesVerdict::Inconclusive
    } else if ratios.iter().all(|&r| r < CONVERGENT_RATIO) {
        SeriesVerdict::Convergent
    } else if ratios.iter().all(|&r| r >= DIVERGENT_RATIO) {
        SeriesVerdict::Divergent
    } else {
        SeriesVerdict::Inconclusive
    };
    Ok(Classification { radii: radii.to_vec(), partial_sums, shells, ratios, verdict })
}

/// Classifies `Σ_{x ∈ Z^d∖0} |x|^{−s}` from shell sums over the ladder.
pub fn classify_power_sum(d: usize, s: Rational, radii: &[u64]) -> Result<Classification> {
    check_ladder(radii)?;
    let max = level_of(*radii.last().unwrap(), 2)?;
    let sf = to_f64(s);
    let terms: Vec<f64> = sphere_counts(d, 2, max)
        .into_iter()
        .enumerate()
        .map(|(n, c)| if n == 0 || c == 0 { 0.0 } else { c as f64 * (-(sf / 2.0) * (n as f64).ln()).exp() })
        .collect();
    classify_terms(&terms, radii, 2)
}

/// Classifies the delta series of `spec` at exponent `r`.
pub fn classify_delta_series(spec: &SurfaceSpec, r: Rational, radii: &[u64]) -> Result<Classification> {
    check_r(r)?;
    check_ladder(radii)?;
    spec.validate()?;
    let max = level_of(*radii.last().unwrap(), spec.k)?;
    let terms = level_terms(spec, r, max)?;
    classify_terms(&terms, radii, spec.k)
}

/// One line of the sharpness table.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessRow {
    pub r: Rational,
    pub radius: u64,
    pub partial_sum: f64,
    /// Ratio of the shell ending at this radius to the previous shell.
    pub shell_ratio: Option<f64>,
    pub verdict: SeriesVerdict,
}

/// `[largest divergent r, smallest convergent r]`; a missing side means the
/// grid never reached it.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalEstimate {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
    /// False when some divergent `r` exceeds some convergent `r`.
    pub monotone: bool,
    pub rows: Vec<SharpnessRow>,
}

impl CriticalEstimate {
    pub fn contains(&self, r: Rational) -> bool {
        self.lower.is_none_or(|l| l <= r) && self.upper.is_none_or(|u| r <= u)
    }

    pub fn is_one_sided(&self) -> bool {
        self.lower.is_none() || self.upper.is_none()
    }

    pub fn width(&self) -> Option<Rational> {
        Some(self.upper? - self.lower?)
    }
}

pub fn sharpness_csv_header() -> &'static str {
    "family,d,k,l,theta,r,R,partial_sum,shell_ratio,verdict"
}

pub fn sharpness_csv_row(spec: &SurfaceSpec, row: &SharpnessRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{:.12e},{},{}",
        spec.family.name(),
        spec.d,
        spec.k,
        spec.ell,
        spec.theta.map_or_else(String::new, |t| t.to_string()),
        row.r,
        row.radius,
        row.partial_sum,
        row.shell_ratio.map_or_else(String::new, |x| format!("{x:.9}")),
        row.verdict
    )
}

/// Brackets the critical exponent by classifying the delta series on a grid.
pub fn estimate_critical_exponent(spec: &SurfaceSpec, r_grid: &[Rational], radii: &[u64]) -> Result<CriticalEstimate> {
    if r_grid.is_empty() {
        return Err(Error::EmptyParameterSet("r_grid"));
    }
    let mut grid = r_grid.to_vec();
    grid.sort();
    grid.dedup();
    let results: Vec<(Rational, Classification)> =
        grid.par_iter().map(|&r| classify_delta_series(spec, r, radii).map(|c| (r, c))).collect::<Result<_>>()?;
    if results.iter().all(|(_, c)| c.verdict == SeriesVerdict::Inconclusive) {
        return Err(Error::Inconclusive);
    }
    let lower = results.iter().filter(|(_, c)| c.verdict == SeriesVerdict::Divergent).map(|(r, _)| *r).max();
    let upper = results.iter().filter(|(_, c)| c.verdict == SeriesVerdict::Convergent).map(|(r, _)| *r).min();
    let monotone = match (lower, upper) {
        (Some(l), Some(u)) => l < u,
        _ => true,
    };
    let mut rows = Vec::new();
    for (r, c) in &results {
        for (j, (&radius, &partial_sum)) in c.radii.iter().zip(&c.partial_sums).enumerate() {
            rows.push(SharpnessRow {
                r: *r,
                radius,
                partial_sum,
                shell_ratio: if j >= 2 { Some(c.ratios[j - 2]) } else { None },
                verdict: c.verdict,
            });
        }
    }
    Ok(CriticalEstimate { lower, upper, monotone, rows })
}

/// The exact critical exponent of `spec`.
pub fn spec_critical_r(spec: &SurfaceSpec) -> Result<Rational> {
    critical_r(spec.family, spec.d, spec.k, spec.ell, spec.theta)
}
