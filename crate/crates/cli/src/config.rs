//! Experiment configuration: one TOML key-value file per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slicedice_core::arith::parse_rational;
use slicedice_core::lattice::{Combiner, Component, FactorKind, Family, ProgressionConstraints, Relation, Weighting};
use slicedice_core::operators::NormalizationMode;
use slicedice_core::slicing::SliceDepth;
use slicedice_core::{Progression, Rational, SurfaceSpec};

use crate::RunError;

pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("count", "surface counts, shell conservation and the brute-force oracle"),
    ("diagnose_asymptotic", "stabilization of N(lambda)/lambda^phi"),
    ("evaluate_operator", "truncated multilinear maximal function of input files"),
    ("verify_slicing", "exact check of the slicing domination on files or random instances"),
    ("framework_check", "the five structural conditions of the general slicing theorem"),
    ("sharpness", "critical-exponent bracket from the Dirac-delta series"),
    ("progressions", "residue-class membership, sumsets and prime parity rearrangements"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Count,
    DiagnoseAsymptotic,
    EvaluateOperator,
    VerifySlicing,
    FrameworkCheck,
    Sharpness,
    Progressions,
}

impl Experiment {
    fn parse(s: &str) -> Option<Experiment> {
        Some(match s {
            "count" => Experiment::Count,
            "diagnose_asymptotic" => Experiment::DiagnoseAsymptotic,
            "evaluate_operator" => Experiment::EvaluateOperator,
            "verify_slicing" => Experiment::VerifySlicing,
            "framework_check" => Experiment::FrameworkCheck,
            "sharpness" => Experiment::Sharpness,
            "progressions" => Experiment::Progressions,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Count => "count",
            Experiment::DiagnoseAsymptotic => "diagnose_asymptotic",
            Experiment::EvaluateOperator => "evaluate_operator",
            Experiment::VerifySlicing => "verify_slicing",
            Experiment::FrameworkCheck => "framework_check",
            Experiment::Sharpness => "sharpness",
            Experiment::Progressions => "progressions",
        }
    }
}

/// A rational written as an integer, a decimal or a `"a/b"` string.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn to_rational(&self, field: &str) -> Result<Rational, RunError> {
        let parsed = match self {
            Num::Int(n) => Some(Rational::from_integer(*n)),
            Num::Float(x) => parse_rational(&x.to_string()),
            Num::Text(t) => parse_rational(t),
        };
        parsed.ok_or_else(|| RunError::config(field, "expected a rational such as 3, 0.625 or 5/8"))
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// The raw file contents. Every key is optional; each experiment checks the
/// ones it needs.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub family: Option<String>,
    pub d: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub k: Option<u32>,
    pub ks: Option<Vec<u32>>,
    pub ell: Option<usize>,
    pub theta: Option<Num>,
    pub thetas: Option<Vec<Num>>,
    pub width_multiplier: Option<Num>,
    pub weighting: Option<String>,
    pub combiner: Option<String>,
    pub progressions: Option<OneOrMany<String>>,
    pub ambient: Option<String>,
    pub lambda_min: Option<u64>,
    pub lambda_max: Option<u64>,
    pub lambdas: Option<Vec<u64>>,
    pub inputs: Option<Vec<String>>,
    pub region_radius: Option<i64>,
    pub normalization: Option<String>,
    pub phi: Option<Num>,
    pub slot: Option<usize>,
    pub depth: Option<String>,
    pub unchecked: Option<bool>,
    pub instances: Option<usize>,
    pub max_value: Option<u64>,
    pub support_radius: Option<i64>,
    pub support_size: Option<usize>,
    pub tolerance: Option<f64>,
    pub oracle: Option<bool>,
    pub onset: Option<u64>,
    pub phi_offset: Option<Num>,
    pub r_grid: Option<Vec<Num>>,
    pub radii: Option<Vec<u64>>,
    pub p: Option<Vec<Num>>,
    pub r: Option<Num>,
    pub delta0: Option<Num>,
    pub p_kd: Option<Num>,
    pub exhaustive_modulus: Option<u64>,
    pub parity: Option<bool>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// A parsed config with paths resolved against the config file.
#[derive(Clone, Debug)]
pub struct Config {
    pub raw: RawConfig,
    pub experiment: Experiment,
    pub base_dir: PathBuf,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Config, RunError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| RunError::Config(e.message().to_string()))?;
        let name = raw.experiment.as_deref().ok_or_else(|| RunError::config("experiment", "missing"))?;
        let experiment = Experiment::parse(name)
            .ok_or_else(|| RunError::config("experiment", format!("unknown experiment `{name}`")))?;
        let cfg = Config { raw, experiment, base_dir };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks fields shared by all experiments so errors surface before any
    /// work is done.
    fn validate(&self) -> Result<(), RunError> {
        self.progression_constraints()?;
        self.input_paths()?;
        if self.raw.workers == Some(0) {
            return Err(RunError::config("workers", "must be positive"));
        }
        if let (Some(lo), Some(hi)) = (self.raw.lambda_min, self.raw.lambda_max) {
            if lo > hi {
                return Err(RunError::config("lambda_min", "exceeds lambda_max"));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<Family, RunError> {
        let name = self.raw.family.as_deref().ok_or_else(|| RunError::config("family", "missing"))?;
        Family::parse(name).ok_or_else(|| RunError::config("family", format!("unknown family `{name}`")))
    }

    pub fn dims(&self) -> Result<Vec<usize>, RunError> {
        match (&self.raw.dims, self.raw.d) {
            (Some(v), _) if !v.is_empty() => Ok(v.clone()),
            (Some(_), _) => Err(RunError::config("dims", "must not be empty")),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Err(RunError::config("d", "missing")),
        }
    }

    pub fn d(&self) -> Result<usize, RunError> {
        self.raw.d.ok_or_else(|| RunError::config("d", "missing"))
    }

    pub fn ks(&self) -> Vec<u32> {
        match (&self.raw.ks, self.raw.k) {
            (Some(v), _) if !v.is_empty() => v.clone(),
            (_, Some(k)) => vec![k],
            _ => vec![2],
        }
    }

    pub fn k(&self) -> u32 {
        self.raw.k.unwrap_or(2)
    }

    pub fn ell(&self) -> usize {
        self.raw.ell.unwrap_or(2)
    }

    pub fn theta(&self) -> Result<Option<Rational>, RunError> {
        self.raw.theta.as_ref().map(|t| t.to_rational("theta")).transpose()
    }

    pub fn thetas(&self) -> Result<Vec<Option<Rational>>, RunError> {
        match &self.raw.thetas {
            Some(v) if !v.is_empty() => v.iter().map(|t| t.to_rational("thetas").map(Some)).collect(),
            _ => Ok(vec![self.theta()?]),
        }
    }

    pub fn rational(&self, field: &'static str, value: &Option<Num>) -> Result<Option<Rational>, RunError> {
        value.as_ref().map(|v| v.to_rational(field)).transpose()
    }

    pub fn rationals(&self, field: &'static str, value: &Option<Vec<Num>>) -> Result<Option<Vec<Rational>>, RunError> {
        value.as_ref().map(|v| v.iter().map(|x| x.to_rational(field)).collect()).transpose()
    }

    pub fn weighting(&self) -> Result<Weighting, RunError> {
        match self.raw.weighting.as_deref() {
            None | Some("log") => Ok(Weighting::Log),
            Some("unit") => Ok(Weighting::Unit),
            Some(w) => Err(RunError::config("weighting", format!("expected `log` or `unit`, found `{w}`"))),
        }
    }

    pub fn depth(&self) -> Result<SliceDepth, RunError> {
        match self.raw.depth.as_deref() {
            None | Some("once") => Ok(SliceDepth::Once),
            Some("full") => Ok(SliceDepth::Full),
            Some(x) => Err(RunError::config("depth", format!("expected `once` or `full`, found `{x}`"))),
        }
    }

    /// `exact_count`, `power_law` (the family's exponent) or `power_law:φ`.
    pub fn normalization(&self, default_phi: Rational) -> Result<NormalizationMode, RunError> {
        match self.raw.normalization.as_deref() {
            None | Some("exact_count") => Ok(NormalizationMode::ExactCount),
            Some("power_law") => Ok(NormalizationMode::PowerLaw(default_phi)),
            Some(s) => match s.strip_prefix("power_law:").and_then(parse_rational) {
                Some(phi) => Ok(NormalizationMode::PowerLaw(phi)),
                None => Err(RunError::config(
                    "normalization",
                    format!("expected `exact_count`, `power_law` or `power_law:phi`, found `{s}`"),
                )),
            },
        }
    }

    pub fn progression_constraints(&self) -> Result<Option<ProgressionConstraints>, RunError> {
        let Some(slots) = &self.raw.progressions else {
            return Ok(None);
        };
        let slots: Vec<Progression> = slots
            .to_vec()
            .iter()
            .map(|s| s.parse::<Progression>())
            .collect::<Result<_, _>>()
            .map_err(RunError::from_core_config)?;
        if slots.is_empty() {
            return Err(RunError::config("progressions", "must list at least one class"));
        }
        let ambient = match &self.raw.ambient {
            Some(a) => a
                .parse::<Progression>()
                .map_err(|_| RunError::config("ambient", format!("expected `a mod m`, found `{}`", a.trim())))?,
            None => return Err(RunError::config("ambient", "required together with `progressions`")),
        };
        Ok(Some(ProgressionConstraints { slots, ambient }))
    }

    pub fn input_paths(&self) -> Result<Vec<PathBuf>, RunError> {
        let Some(inputs) = &self.raw.inputs else {
            return Ok(Vec::new());
        };
        inputs
            .iter()
            .map(|p| {
                let path = self.base_dir.join(p);
                if path.is_file() {
                    Ok(path)
                } else {
                    Err(RunError::config("inputs", format!("no such file `{p}`")))
                }
            })
            .collect()
    }

    /// The surface for dimension `d`, degree `k` and width exponent `theta`.
    pub fn spec_with(&self, d: usize, k: u32, theta: Option<Rational>) -> Result<SurfaceSpec, RunError> {
        let family = self.family()?;
        let ell = self.ell();
        let progressions = self.progression_constraints()?;
        if progressions.is_some() && !family.is_prime() {
            return Err(RunError::config("progressions", "only prime families take progressions"));
        }
        let mut spec = match family {
            Family::Ball => SurfaceSpec::ball(d, k, ell),
            Family::Sphere => SurfaceSpec::sphere(d, k, ell),
            Family::Annulus => {
                let theta = theta.ok_or_else(|| RunError::config("theta", "required for the annulus"))?;
                SurfaceSpec::annulus(d, theta, ell)
            }
            Family::PrimeSphere => SurfaceSpec::prime_sphere(d, k, ell, progressions),
            Family::PrimeBall => SurfaceSpec::prime_ball(d, k, ell, progressions),
            Family::GeneralAdditive => {
                let combiner = match self.raw.combiner.as_deref() {
                    None | Some("sum") => Combiner::Sum,
                    Some("product") => Combiner::Product,
                    Some(c) => {
                        return Err(RunError::config("combiner", format!("expected `sum` or `product`, found `{c}`")))
                    }
                };
                let c = Component { d, k, factor: FactorKind::Integer };
                SurfaceSpec::general_additive(vec![c; ell], combiner, Relation::Equal)
            }
        };
        if let Some(w) = self.rational("width_multiplier", &self.raw.width_multiplier)? {
            spec = spec.with_width_multiplier(w);
        }
        spec = spec.with_weighting(self.weighting()?);
        spec.validate().map_err(RunError::from_core_config)?;
        Ok(spec)
    }

    pub fn spec(&self) -> Result<SurfaceSpec, RunError> {
        self.spec_with(self.d()?, self.k(), self.theta()?)
    }

    /// The explicit `lambdas` list, or `lambda_min..=lambda_max`.
    pub fn lambdas(&self, default_min: u64) -> Result<Vec<u64>, RunError> {
        if let Some(l) = &self.raw.lambdas {
            if l.is_empty() {
                return Err(RunError::config("lambdas", "must not be empty"));
            }
            return Ok(l.clone());
        }
        let hi = self.lambda_max()?;
        Ok((self.raw.lambda_min.unwrap_or(default_min)..=hi).collect())
    }

    pub fn lambda_max(&self) -> Result<u64, RunError> {
        self.raw.lambda_max.ok_or_else(|| RunError::config("lambda_max", "missing"))
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed.unwrap_or(0)
    }
}
