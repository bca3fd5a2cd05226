//! Primes, prime vectors with logarithmic weights, and residue-class
//! arithmetic for the progressions that restrict prime surfaces.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::arith::{checked_pow, iroot};
use crate::error::{invalid, Error, Result};
use crate::lattice::{convolve, LatticePoint, Weight};

/// Primes `≤ n` in ascending order (sieve of Eratosthenes).
pub fn sieve(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut i = 2;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    (2..=n).filter(|&i| !composite[i]).map(|i| i as u64).collect()
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

/// The residue class `a mod m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Progression {
    residue: u64,
    modulus: u64,
}

impl Progression {
    pub fn new(residue: u64, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(invalid("progressions", "modulus must be positive"));
        }
        if residue >= modulus {
            return Err(invalid("progressions", format!("residue {residue} not reduced mod {modulus}")));
        }
        Ok(Progression { residue, modulus })
    }

    /// `a mod m` with `a` reduced first.
    pub fn reduced(a: i64, modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(invalid("progressions", "modulus must be positive"));
        }
        Self::new(a.rem_euclid(modulus as i64) as u64, modulus)
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn contains(&self, lambda: u64) -> bool {
        lambda % self.modulus == self.residue
    }
}

impl fmt::Display for Progression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

impl FromStr for Progression {
    type Err = Error;

    /// Parses `"a mod m"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("progressions", format!("expected `a mod m`, found `{}`", s.trim()));
        let mut parts = s.split_whitespace();
        let a: i64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        if parts.next() != Some("mod") {
            return Err(bad());
        }
        let m: u64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Progression::reduced(a, m)
    }
}

pub fn progression_membership(lambda: i64, gamma: &Progression) -> bool {
    lambda.rem_euclid(gamma.modulus as i64) as u64 == gamma.residue
}

/// A vector of positive primes with weight `Π_j log p_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoint {
    pub point: LatticePoint,
    pub weight: f64,
}

pub fn log_weight(coords: &[i64]) -> f64 {
    coords.iter().map(|&c| (c as f64).ln()).product()
}

/// All `p = (p₁,…,p_d)` with positive prime coordinates and `Σ p_j^k = λ`,
/// lexicographic.
pub fn enumerate_prime_sphere(d: usize, k: u32, lambda: u64) -> Vec<WeightedPoint> {
    let primes = sieve(iroot(lambda, k));
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(d);
    fn go(left: usize, k: u32, budget: u64, primes: &[u64], prefix: &mut Vec<i64>, out: &mut Vec<WeightedPoint>) {
        if left == 0 {
            if budget == 0 {
                out.push(WeightedPoint { weight: log_weight(prefix), point: LatticePoint::new(prefix.clone()) });
            }
            return;
        }
        for &p in primes {
            let pk = checked_pow(p, k).unwrap();
            if pk > budget {
                break;
            }
            prefix.push(p as i64);
            go(left - 1, k, budget - pk, primes, prefix, out);
            prefix.pop();
        }
    }
    go(d, k, lambda, &primes, &mut prefix, &mut out);
    out
}

/// `P(λ) = Σ Π_j log p_j` over the prime sphere; `0` when it is empty.
pub fn weighted_count(d: usize, k: u32, lambda: u64) -> f64 {
    enumerate_prime_sphere(d, k, lambda).iter().map(|w| w.weight).sum()
}

/// `t(μ) = Σ_{p prime vector, Σ p_j^k = μ} w(p₁)⋯w(p_d)` for `μ ≤ max`,
/// built by convolving the one-coordinate table `d` times.
pub fn prime_power_table<W: Weight>(d: usize, k: u32, max: u64, weight: impl Fn(u64) -> W) -> Vec<W> {
    let mut one = vec![W::zero(); max as usize + 1];
    for p in sieve(iroot(max, k)) {
        one[checked_pow(p, k).unwrap() as usize] = weight(p);
    }
    let mut table = one.clone();
    for _ in 1..d {
        table = convolve(&table, &one);
    }
    table
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumsetReport {
    pub holds: bool,
    /// Common modulus `M`, the lcm of all moduli.
    pub modulus: u64,
    /// On failure, a residue mod `M` in the symmetric difference.
    pub witness: Option<u64>,
}

fn lift(g: &Progression, modulus: u64) -> Vec<bool> {
    let mut set = vec![false; modulus as usize];
    let mut r = g.residue;
    while r < modulus {
        set[r as usize] = true;
        r += g.modulus;
    }
    set
}

/// Checks `Σ_i Γ^i = Γ` as residue classes modulo the lcm of all moduli.
pub fn sumset_check(gammas: &[Progression], ambient: &Progression) -> SumsetReport {
    let modulus = gammas.iter().fold(ambient.modulus, |acc, g| acc.lcm(&g.modulus));
    let m = modulus as usize;
    let mut sums = vec![false; m];
    sums[0] = true;
    for g in gammas {
        let lifted = lift(g, modulus);
        let mut next = vec![false; m];
        for (s, _) in sums.iter().enumerate().filter(|(_, &b)| b) {
            for (r, _) in lifted.iter().enumerate().filter(|(_, &b)| b) {
                next[(s + r) % m] = true;
            }
        }
        sums = next;
    }
    let target = lift(ambient, modulus);
    let witness =
        (0..m).find(|&r| sums[r] && !target[r]).or_else(|| (0..m).find(|&r| target[r] && !sums[r])).map(|r| r as u64);
    SumsetReport { holds: witness.is_none(), modulus, witness }
}

/// One solution of `Σ p_j^k + Σ q_j^k = λ` with both halves odd, and the
/// rearrangement found for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rearrangement {
    pub original: (Vec<u64>, Vec<u64>),
    pub rearranged: Option<(Vec<u64>, Vec<u64>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParityReport {
    /// No prime solutions within the coordinate bound.
    Vacuous,
    Checked {
        solutions: usize,
        /// Solutions whose two half-sums are already even.
        even_split: usize,
        /// Solutions with both half-sums odd.
        odd_split: Vec<Rearrangement>,
    },
}

impl ParityReport {
    /// Odd-split solutions for which no even rearrangement exists.
    pub fn failures(&self) -> Vec<&Rearrangement> {
        match self {
            ParityReport::Vacuous => Vec::new(),
            ParityReport::Checked { odd_split, .. } => odd_split.iter().filter(|r| r.rearranged.is_none()).collect(),
        }
    }

    /// Whether some solution (original or rearranged) has both halves even.
    pub fn has_even_representative(&self) -> bool {
        match self {
            ParityReport::Vacuous => false,
            ParityReport::Checked { even_split, odd_split, .. } => {
                *even_split > 0 || odd_split.iter().any(|r| r.rearranged.is_some())
            }
        }
    }
}

fn half_sum(v: &[u64], k: u32) -> u64 {
    v.iter().map(|&p| checked_pow(p, k).unwrap()).sum()
}

/// Brute-forces prime solutions `(p, q) ∈ (primes ≤ bound)^{2d}` of
/// `Σ p_j^k + Σ q_j^k = λ` and, for every solution with both half-sums odd,
/// searches the coordinate permutations for one with both half-sums even.
pub fn parity_rearrangement_check(d: usize, k: u32, lambda: u64, coordinate_bound: u64) -> Result<ParityReport> {
    if d == 0 || !d.is_multiple_of(2) {
        return Err(invalid("d", "must be even"));
    }
    if k.is_multiple_of(2) {
        return Err(invalid("k", "must be odd"));
    }
    if !lambda.is_multiple_of(2) {
        return Err(invalid("lambda", "must be even"));
    }
    let primes = sieve(coordinate_bound);
    let mut solutions = Vec::new();
    let mut full = Vec::with_capacity(2 * d);
    fn go(left: usize, k: u32, budget: u64, primes: &[u64], full: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            if budget == 0 {
                out.push(full.clone());
            }
            return;
        }
        for &p in primes {
            let pk = checked_pow(p, k).unwrap();
            if pk > budget {
                break;
            }
            full.push(p);
            go(left - 1, k, budget - pk, primes, full, out);
            full.pop();
        }
    }
    go(2 * d, k, lambda, &primes, &mut full, &mut solutions);
    if solutions.is_empty() {
        return Ok(ParityReport::Vacuous);
    }
    let mut even_split = 0;
    let mut odd_split = Vec::new();
    for s in &solutions {
        let (p, q) = s.split_at(d);
        match (half_sum(p, k) % 2, half_sum(q, k) % 2) {
            (0, 0) => even_split += 1,
            (1, 1) => odd_split
                .push(Rearrangement { original: (p.to_vec(), q.to_vec()), rearranged: even_rearrangement(s, d, k) }),
            _ => unreachable!("halves of an even total share parity"),
        }
    }
    Ok(ParityReport::Checked { solutions: solutions.len(), even_split, odd_split })
}

fn even_rearrangement(coords: &[u64], d: usize, k: u32) -> Option<(Vec<u64>, Vec<u64>)> {
    let n = coords.len();
    (0u32..1 << n).filter(|m| m.count_ones() as usize == d).find_map(|mask| {
        let (mut p, mut q) = (Vec::new(), Vec::new());
        for (i, &c) in coords.iter().enumerate() {
            if mask >> i & 1 == 1 {
                p.push(c)
            } else {
                q.push(c)
            }
        }
        let ok = half_sum(&p, k).is_multiple_of(2) && half_sum(&q, k).is_multiple_of(2);
        debug_assert_eq!(half_sum(&p, k) + half_sum(&q, k), half_sum(coords, k));
        ok.then_some((p, q))
    })
}
