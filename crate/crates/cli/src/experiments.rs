use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use slicedice_core::arith::iroot;
use slicedice_core::lattice::{
    asymptotic_diagnostic, count_ball, enumerate_sphere, sphere_counts, surface_tallies, Family,
};
use slicedice_core::operators::{default_region, maximal_function, GridFunction, MaximalConfig, Region, Surface};
use slicedice_core::primes::{parity_rearrangement_check, progression_membership, sumset_check, ParityReport};
use slicedice_core::sharpness::{estimate_critical_exponent, sharpness_csv_header, spec_critical_r};
use slicedice_core::slicing::{
    annulus_p0, check_framework, critical_r, exponent_region, framework_r_threshold, sufficient_r_and_p,
    ConditionStatus, DominationConfig, DominationReport, FrameworkConfig, Verdict,
};
use slicedice_core::{Error, LatticePoint, Progression, Rational, SurfaceSpec};

use crate::config::{Config, Experiment};
use crate::{Report, RunError};

pub(crate) fn run(cfg: &Config, seed: u64) -> Result<Report, RunError> {
    let mut report = match cfg.experiment {
        Experiment::Count => count(cfg)?,
        Experiment::DiagnoseAsymptotic => diagnose(cfg)?,
        Experiment::EvaluateOperator => evaluate_operator(cfg)?,
        Experiment::VerifySlicing => verify_slicing(cfg, seed)?,
        Experiment::FrameworkCheck => framework(cfg)?,
        Experiment::Sharpness => sharpness(cfg)?,
        Experiment::Progressions => progressions(cfg)?,
    };
    let Json::Object(body) = &mut report.summary else { unreachable!("summaries are objects") };
    body.insert("experiment".into(), json!(cfg.experiment.name()));
    body.insert("seed".into(), json!(seed));
    body.insert("parameters".into(), parameters(cfg));
    if let Some(msg) = &report.internal_failure {
        body.insert("internal_failure".into(), json!(msg));
    }
    Ok(report)
}

/// The config as written, minus the worker count.
fn parameters(cfg: &Config) -> Json {
    let mut v = serde_json::to_value(&cfg.raw).expect("config serializes");
    if let Json::Object(m) = &mut v {
        m.retain(|k, v| !v.is_null() && k != "workers" && k != "experiment" && k != "seed");
    }
    v
}

fn anchor(family: Family) -> &'static str {
    match family {
        Family::Ball | Family::PrimeBall => "Thm 1",
        Family::Sphere => "Thm 2",
        Family::Annulus => "Thm 4",
        Family::PrimeSphere => "Thm 6",
        Family::GeneralAdditive => "Thm 7",
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    std::iter::once("anchor").chain(cols.iter().copied()).map(String::from).collect()
}

fn row(anchor: &str, fields: Vec<String>) -> Vec<String> {
    std::iter::once(anchor.to_string()).chain(fields).collect()
}

fn opt_rational(r: Option<Rational>) -> Json {
    r.map_or(Json::Null, |r| json!(r.to_string()))
}

fn report(summary: Json, header: Vec<String>, rows: Vec<Vec<String>>) -> Report {
    Report { summary, header, rows, internal_failure: None }
}

// ---------------------------------------------------------------------------

fn count(cfg: &Config) -> Result<Report, RunError> {
    let lambdas = cfg.lambdas(0)?;
    let max = *lambdas.iter().max().expect("nonempty");
    let oracle = cfg.raw.oracle.unwrap_or(false);
    let family = cfg.raw.family.as_ref().map(|_| cfg.family()).transpose()?;
    let a = family.map_or("Thm 1", anchor);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for &d in &cfg.dims()? {
        for &k in &cfg.ks() {
            let shells = sphere_counts(d, k, max);
            let surface = match family {
                Some(_) => Some(surface_tallies(&cfg.spec_with(d, k, cfg.theta()?)?, max)?),
                None => None,
            };
            let brute = if oracle { Some(box_oracle(d, k, max)) } else { None };
            let mut running: u128 = 0;
            let mut level = 0u64;
            let mut sorted = lambdas.clone();
            sorted.sort_unstable();
            let mut ball_at = BTreeMap::new();
            for &lam in &sorted {
                while level <= lam {
                    running += shells[level as usize];
                    level += 1;
                }
                ball_at.insert(lam, running);
            }
            for &lam in &lambdas {
                let ball = count_ball(d, k, lam);
                checked += 1;
                if ball != ball_at[&lam].into() {
                    failures.push(format!(
                        "d={d} k={k} lambda={lam}: shells sum to {} but the ball has {ball}",
                        ball_at[&lam]
                    ));
                }
                let oracle_cell = match &brute {
                    Some(b) => {
                        let pts = enumerate_sphere(d, k, lam);
                        let ok = b.get(&lam).map_or(pts.is_empty(), |want| *want == pts)
                            && pts.len() as u128 == shells[lam as usize];
                        if !ok {
                            failures.push(format!("d={d} k={k} lambda={lam}: enumeration differs from the box oracle"));
                        }
                        if ok { "match" } else { "mismatch" }.to_string()
                    }
                    None => "skipped".to_string(),
                };
                rows.push(row(
                    a,
                    vec![
                        d.to_string(),
                        k.to_string(),
                        lam.to_string(),
                        shells[lam as usize].to_string(),
                        ball.to_string(),
                        surface.as_ref().map_or_else(String::new, |s| s[lam as usize].to_string()),
                        oracle_cell,
                    ],
                ));
            }
        }
    }
    let summary = json!({
        "anchor": a,
        "verdict": if failures.is_empty() { "consistent" } else { "inconsistent" },
        "results": {
            "checks": checked,
            "conservation": if failures.is_empty() { "exact" } else { "failed" },
            "oracle": if oracle { "box enumeration" } else { "skipped" },
            "failures": failures,
        },
        "truncation": { "lambda_max": max },
    });
    let mut r =
        report(summary, header(&["d", "k", "lambda", "sphere_count", "ball_count", "surface_count", "oracle"]), rows);
    if !failures.is_empty() {
        r.internal_failure = Some(failures.join("; "));
    }
    Ok(r)
}

/// Every point of the box `[−R, R]^d` with `R = ⌊max^{1/k}⌋`, bucketed by
/// norm in lexicographic order.
fn box_oracle(d: usize, k: u32, max: u64) -> BTreeMap<u64, Vec<LatticePoint>> {
    let radius = iroot(max, k) as i64;
    let mut out: BTreeMap<u64, Vec<LatticePoint>> = BTreeMap::new();
    let mut coords = vec![-radius; d];
    loop {
        let p = LatticePoint::new(coords.clone());
        let n = p.norm(k);
        if n <= max {
            out.entry(n).or_default().push(p);
        }
        let mut j = d;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if coords[j] < radius {
                coords[j] += 1;
                break;
            }
            coords[j] = -radius;
        }
    }
}

// ---------------------------------------------------------------------------

fn diagnose(cfg: &Config) -> Result<Report, RunError> {
    let spec = cfg.spec()?;
    let lambdas = cfg.lambdas(1)?;
    let natural = Surface::from_spec(&spec)?.default_phi();
    let phi = cfg.rational("phi", &cfg.raw.phi)?.unwrap_or(natural);
    let tolerance = cfg.raw.tolerance.unwrap_or(0.1);
    let diag = asymptotic_diagnostic(&spec, &lambdas, phi)?;
    let a = anchor(spec.family);
    let rows = diag
        .lambdas
        .iter()
        .zip(&diag.counts)
        .zip(&diag.ratios)
        .map(|((l, c), r)| row(a, vec![l.to_string(), c.to_string(), format!("{r:.12e}")]))
        .collect();
    let stable = diag.stabilization <= tolerance;
    let summary = json!({
        "anchor": a,
        "verdict": if stable { "stable" } else { "unstable" },
        "results": {
            "phi": phi.to_string(),
            "natural_phi": natural.to_string(),
            "stabilization": diag.stabilization,
            "tolerance": tolerance,
            "final_ratio": diag.ratios.last(),
        },
        "truncation": { "lambda_min": lambdas.first(), "lambda_max": lambdas.last(), "samples": lambdas.len() },
    });
    Ok(report(summary, header(&["lambda", "count", "ratio"]), rows))
}

// ---------------------------------------------------------------------------

fn read_inputs(cfg: &Config) -> Result<Vec<GridFunction>, RunError> {
    cfg.input_paths()?
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            GridFunction::parse(&text).map_err(|e| RunError::config("inputs", format!("{}: {e}", p.display())))
        })
        .collect()
}

fn evaluate_operator(cfg: &Config) -> Result<Report, RunError> {
    let spec = cfg.spec()?;
    let fs = read_inputs(cfg)?;
    if fs.len() != spec.ell {
        return Err(RunError::config("inputs", format!("expected {} files, found {}", spec.ell, fs.len())));
    }
    let refs: Vec<&GridFunction> = fs.iter().collect();
    let surface = Surface::from_spec(&spec)?;
    let lambdas = cfg.lambdas(1)?;
    let mut mc = MaximalConfig::new(lambdas.clone(), cfg.normalization(surface.default_phi())?);
    let region = match cfg.raw.region_radius {
        Some(r) => Region::cube(spec.d, r),
        None => default_region(&surface, &refs, mc.max_lambda()),
    };
    mc = mc.with_region(region.clone());
    let grid = maximal_function(&spec, &refs, &mc)?;
    let a = anchor(spec.family);
    let rows: Vec<Vec<String>> = grid
        .values
        .iter()
        .map(|(p, v)| row(a, vec![p.to_string(), v.to_string(), format!("{:.12e}", v.to_f64())]))
        .collect();
    let sup = grid.values.values().max_by(|x, y| x.compare(y));
    let summary = json!({
        "anchor": a,
        "verdict": "evaluated",
        "results": {
            "operator": surface.name(),
            "nonzero_points": grid.values.len(),
            "exact": grid.exact,
            "sup": sup.map(|v| v.to_string()),
        },
        "truncation": { "lambda_min": lambdas.first(), "lambda_max": lambdas.last(), "region": region.describe() },
    });
    Ok(report(summary, header(&["point", "value", "value_f64"]), rows))
}

// ---------------------------------------------------------------------------

struct Instance {
    spec: SurfaceSpec,
    theta: Option<Rational>,
    fs: Vec<GridFunction>,
}

fn random_function(rng: &mut ChaCha8Rng, d: usize, radius: i64, size: usize, max_value: u64) -> GridFunction {
    let mut pairs = BTreeMap::new();
    for _ in 0..size {
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
        pairs.insert(p, rng.gen_range(1..=max_value));
    }
    GridFunction::from_integers(d, pairs).expect("valid random function")
}

fn instances(cfg: &Config, seed: u64) -> Result<Vec<Instance>, RunError> {
    if cfg.raw.inputs.is_some() {
        let spec = cfg.spec()?;
        let fs = read_inputs(cfg)?;
        return Ok(vec![Instance { theta: spec.theta, spec, fs }]);
    }
    let n = cfg.raw.instances.ok_or_else(|| RunError::config("instances", "give `inputs` or `instances`"))?;
    let dims = cfg.dims()?;
    let thetas = cfg.thetas()?;
    let radius = cfg.raw.support_radius.unwrap_or(6);
    let size = cfg.raw.support_size.unwrap_or(3);
    let max_value = cfg.raw.max_value.unwrap_or(9);
    if radius < 0 || size == 0 || max_value == 0 {
        return Err(RunError::config("support_radius", "support radius, size and max_value must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = dims[i % dims.len()];
        let theta = thetas[(i / dims.len()) % thetas.len()];
        let spec = cfg.spec_with(d, cfg.k(), theta)?;
        let fs = (0..spec.ell).map(|_| random_function(&mut rng, d, radius, size, max_value)).collect();
        out.push(Instance { spec, theta, fs });
    }
    Ok(out)
}

fn verify_slicing(cfg: &Config, seed: u64) -> Result<Report, RunError> {
    let lambda_max = cfg.lambda_max()?;
    let mut dc = DominationConfig::new(lambda_max).with_slot(cfg.raw.slot.unwrap_or(0)).with_depth(cfg.depth()?);
    if cfg.raw.unchecked.unwrap_or(false) {
        dc = dc.unchecked();
    }
    let insts = instances(cfg, seed)?;
    let results: Vec<DominationReport> = insts
        .par_iter()
        .map(|inst| {
            let mut c = dc.clone();
            if let Some(r) = cfg.raw.region_radius {
                c = c.with_region(Region::cube(inst.spec.d, r));
            }
            let refs: Vec<&GridFunction> = inst.fs.iter().collect();
            slicedice_core::slicing::verify_domination(&inst.spec, &refs, &c)
        })
        .collect::<Result<_, Error>>()?;
    let a = anchor(insts[0].spec.family);
    let mut rows = Vec::new();
    let (mut dominated, mut violated, mut not_applicable, mut violations) = (0, 0, 0, 0usize);
    let mut worst: Option<(usize, f64, String)> = None;
    for (i, (inst, rep)) in insts.iter().zip(&results).enumerate() {
        match rep.verdict {
            Verdict::Dominated => dominated += 1,
            Verdict::Violated => violated += 1,
            Verdict::NotApplicable(_) => not_applicable += 1,
        }
        violations += rep.violations;
        if let Some(w) = &rep.witness {
            let diff = w.difference_f64();
            if worst.as_ref().is_none_or(|(_, best, _)| diff > *best) {
                worst = Some((i, diff, rep.max_violation_text()));
            }
        }
        rows.push(row(
            a,
            vec![
                i.to_string(),
                inst.spec.d.to_string(),
                inst.theta.map_or_else(String::new, |t| t.to_string()),
                rep.lhs_id.clone(),
                rep.rhs_id.clone(),
                rep.region.clone(),
                rep.lambda_max.to_string(),
                rep.points_evaluated.to_string(),
                rep.violations.to_string(),
                rep.max_violation_text(),
                rep.witness.as_ref().map_or_else(String::new, |w| w.point.to_string()),
                rep.verdict.label().to_string(),
                rep.to_string(),
            ],
        ));
    }
    let verdict = if violated > 0 {
        "violated"
    } else if dominated > 0 {
        "dominated"
    } else {
        "not_applicable"
    };
    let sumset = cfg
        .progression_constraints()?
        .map(|pc| sumset_check(&pc.slots, &pc.ambient))
        .map(|rep| json!({ "holds": rep.holds, "modulus": rep.modulus, "witness": rep.witness }));
    let summary = json!({
        "anchor": a,
        "verdict": verdict,
        "sumset": sumset,
        "results": {
            "instances": insts.len(),
            "dominated": dominated,
            "violated": violated,
            "not_applicable": not_applicable,
            "violating_points": violations,
            "worst_instance": worst.as_ref().map(|w| w.0),
            "max_violation": worst.as_ref().map(|w| w.2.clone()),
            "report": if insts.len() == 1 { Some(results[0].to_string()) } else { None },
        },
        "truncation": { "lambda_max": lambda_max, "region_radius": cfg.raw.region_radius },
    });
    let mut r = report(
        summary,
        header(&[
            "instance",
            "d",
            "theta",
            "lhs",
            "rhs",
            "region",
            "lambda_max",
            "points",
            "violations",
            "max_violation",
            "witness",
            "verdict",
            "report",
        ]),
        rows,
    );
    if violated > 0 && dc.check_preconditions {
        r.internal_failure = Some(format!("{violated} admissible instances violate the slicing inequality"));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------

fn default_offset(spec: &SurfaceSpec) -> Rational {
    match spec.family {
        Family::Ball | Family::PrimeBall | Family::GeneralAdditive => Rational::zero(),
        Family::Sphere | Family::PrimeSphere => -Rational::one(),
        Family::Annulus => spec.theta.unwrap_or_else(Rational::zero) - Rational::one(),
    }
}

fn framework(cfg: &Config) -> Result<Report, RunError> {
    let spec = cfg.spec()?;
    let slope = Rational::new(1, spec.k as i64);
    let offset = cfg.rational("phi_offset", &cfg.raw.phi_offset)?.unwrap_or_else(|| default_offset(&spec));
    let phi = move |d: usize| slope * Rational::from_integer(d as i64) + offset;
    let lo = cfg.raw.lambda_min.unwrap_or(1);
    let hi = cfg.lambda_max()?;
    let onset = cfg.raw.onset.unwrap_or(1);
    let rep = check_framework(&spec, &phi, &FrameworkConfig::new(lo, hi, onset))?;
    let a = "Thm 7";
    let rows = rep
        .conditions
        .iter()
        .map(|c| {
            let status = match c.status {
                ConditionStatus::Pass => "pass",
                ConditionStatus::Fail => "fail",
                ConditionStatus::Skipped => "skipped",
            };
            row(
                a,
                vec![
                    c.index.to_string(),
                    status.to_string(),
                    c.witness.as_ref().map_or_else(String::new, |w| w.to_string()),
                    c.note.clone(),
                ],
            )
        })
        .collect();
    let failed: Vec<usize> =
        rep.conditions.iter().filter(|c| c.status == ConditionStatus::Fail).map(|c| c.index).collect();
    let summary = json!({
        "anchor": a,
        "verdict": if rep.passed() { "pass" } else { "fail" },
        "results": {
            "surface": spec.family.name(),
            "phi": if offset.is_negative() {
                format!("d/{} - {}", spec.k, -offset)
            } else {
                format!("d/{} + {}", spec.k, offset)
            },
            "failed_conditions": failed,
            "early_holes": rep.early_holes,
            "onset": onset,
        },
        "truncation": { "lambda_min": lo, "lambda_max": hi },
    });
    Ok(report(summary, header(&["condition", "status", "witness", "note"]), rows))
}

// ---------------------------------------------------------------------------

fn exponent_arithmetic(cfg: &Config, spec: &SurfaceSpec) -> Result<Json, RunError> {
    let mut out = serde_json::Map::new();
    let crit = critical_r(spec.family, spec.d, spec.k, spec.ell, spec.theta).ok();
    out.insert("critical_r".into(), opt_rational(crit));
    if let Some(theta) = spec.theta {
        out.insert("annulus_p0".into(), opt_rational(annulus_p0(theta, spec.d).ok()));
        out.insert("annulus_p0_theta0".into(), opt_rational(annulus_p0(Rational::zero(), spec.d).ok()));
        out.insert("annulus_p0_theta1".into(), opt_rational(annulus_p0(Rational::one(), spec.d).ok()));
    }
    let delta0 = cfg.rational("delta0", &cfg.raw.delta0)?;
    let p_kd = cfg.rational("p_kd", &cfg.raw.p_kd)?;
    if let (Some(delta0), Some(p_kd)) = (delta0, p_kd) {
        let t = sufficient_r_and_p(spec.d, spec.k, spec.ell, delta0, p_kd)?;
        out.insert("r0".into(), json!(t.r0.to_string()));
        out.insert("p0".into(), json!(t.p0.to_string()));
        out.insert("sphere_r".into(), json!(t.sphere_r.to_string()));
        out.insert("prime_r".into(), json!(t.prime_r.to_string()));
        out.insert("framework_r".into(), json!(framework_r_threshold(p_kd)?.to_string()));
    }
    let ps = cfg.rationals("p", &cfg.raw.p)?;
    if let Some(ps) = ps {
        if ps.len() != 2 {
            return Err(RunError::config("p", "give the two input exponents of a bilinear bound"));
        }
        if ps.iter().any(|p| *p <= Rational::zero()) {
            return Err(RunError::config("p", "exponents must be positive"));
        }
        let region = exponent_region(spec.family, spec.d, spec.k, spec.theta, 2)?;
        let r = cfg.rational("r", &cfg.raw.r)?;
        let (x, y) = (ps[0].recip(), ps[1].recip());
        out.insert("region_threshold".into(), json!(region.threshold.to_string()));
        out.insert("in_open_region".into(), json!(region.contains(x, y, r, true)));
    }
    Ok(Json::Object(out))
}

fn sharpness(cfg: &Config) -> Result<Report, RunError> {
    let spec = cfg.spec()?;
    let a = anchor(spec.family);
    let exponents = exponent_arithmetic(cfg, &spec)?;
    let grid = cfg.rationals("r_grid", &cfg.raw.r_grid)?;
    let radii = cfg.raw.radii.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    let cols: Vec<&str> = sharpness_csv_header().split(',').collect();
    let Some(grid) = grid else {
        let summary = json!({
            "anchor": a,
            "verdict": "exponents_only",
            "results": { "exponents": exponents },
            "truncation": {},
        });
        return Ok(report(summary, header(&cols), Vec::new()));
    };
    let critical = spec_critical_r(&spec).ok();
    let (verdict, bracket, rows) = match estimate_critical_exponent(&spec, &grid, &radii) {
        Ok(est) => {
            let verdict = match critical {
                Some(c) if !est.contains(c) => "excludes_critical",
                _ if !est.monotone => "non_monotone",
                _ if est.is_one_sided() => "one_sided",
                _ => "bracketed",
            };
            let theta = spec.theta.map_or_else(String::new, |t| t.to_string());
            let rows = est
                .rows
                .iter()
                .map(|r| {
                    row(
                        a,
                        vec![
                            spec.family.name().to_string(),
                            spec.d.to_string(),
                            spec.k.to_string(),
                            spec.ell.to_string(),
                            theta.clone(),
                            r.r.to_string(),
                            r.radius.to_string(),
                            format!("{:.12e}", r.partial_sum),
                            r.shell_ratio.map_or_else(String::new, |x| format!("{x:.9}")),
                            r.verdict.to_string(),
                        ],
                    )
                })
                .collect();
            let bracket = json!({
                "lower": opt_rational(est.lower),
                "upper": opt_rational(est.upper),
                "width": opt_rational(est.width()),
                "contains_critical": critical.map(|c| est.contains(c)),
            });
            (verdict, bracket, rows)
        }
        Err(Error::Inconclusive) => ("inconclusive", Json::Null, Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let summary = json!({
        "anchor": a,
        "verdict": verdict,
        "results": { "bracket": bracket, "exponents": exponents },
        "truncation": { "radii": radii },
    });
    Ok(report(summary, header(&cols), rows))
}

// ---------------------------------------------------------------------------

fn progressions(cfg: &Config) -> Result<Report, RunError> {
    let a = "Thm 6";
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut results = serde_json::Map::new();
    let push = |rows: &mut Vec<Vec<String>>, check: &str, subject: String, expected: String, found: String| {
        let agree = if expected == found { "yes" } else { "no" };
        rows.push(row(a, vec![check.into(), subject, expected, found, agree.into()]));
    };

    if let Some(pc) = cfg.progression_constraints()? {
        let rep = sumset_check(&pc.slots, &pc.ambient);
        let slots: Vec<String> = pc.slots.iter().map(Progression::to_string).collect();
        let subject = format!("{} -> {}", slots.join(" + "), pc.ambient);
        let found = if rep.holds {
            "holds".to_string()
        } else {
            format!("fails at {} mod {}", rep.witness.unwrap(), rep.modulus)
        };
        push(&mut rows, "sumset", subject, "holds".into(), found.clone());
        results.insert("sumset".into(), json!({ "holds": rep.holds, "modulus": rep.modulus, "witness": rep.witness }));
        if cfg.raw.lambda_max.is_some() || cfg.raw.lambdas.is_some() {
            let lambdas = cfg.lambdas(0)?;
            for g in pc.slots.iter().chain(std::iter::once(&pc.ambient)) {
                let members: Vec<u64> = lambdas.iter().copied().filter(|&l| g.contains(l)).collect();
                for &l in &members {
                    push(&mut rows, "member", format!("{l} in {g}"), "yes".into(), "yes".into());
                }
                results.insert(format!("members of {g}"), json!(members.len()));
            }
        }
    }

    if let Some(m) = cfg.raw.exhaustive_modulus {
        let per_modulus: Vec<(u64, usize, Vec<String>)> = (1..=m).into_par_iter().map(exhaustive_residues).collect();
        let mut total = 0;
        for (modulus, checks, errs) in per_modulus {
            total += checks;
            let found =
                if errs.is_empty() { "0 disagreements".to_string() } else { format!("{} disagreements", errs.len()) };
            push(&mut rows, "exhaustive", format!("mod {modulus}"), "0 disagreements".into(), found);
            failures.extend(errs);
        }
        let mixed = mixed_moduli(24);
        total += mixed.0;
        push(
            &mut rows,
            "exhaustive",
            "mixed moduli <= 24".into(),
            "0 disagreements".into(),
            format!("{} disagreements", mixed.1.len()),
        );
        failures.extend(mixed.1);
        results.insert("exhaustive_checks".into(), json!(total));
    }

    if cfg.raw.parity.unwrap_or(false) {
        let d = cfg.d()?;
        let k = cfg.k();
        let lambdas: Vec<u64> = cfg.lambdas(2)?.into_iter().filter(|l| l % 2 == 0).collect();
        let reps: Vec<(u64, ParityReport)> = lambdas
            .par_iter()
            .map(|&l| parity_rearrangement_check(d, k, l, iroot(l, k).max(2)).map(|r| (l, r)))
            .collect::<Result<_, Error>>()?;
        let (mut solutions, mut fails, mut vacuous) = (0, 0, 0);
        for (l, rep) in &reps {
            let (n, f) = match rep {
                ParityReport::Vacuous => {
                    vacuous += 1;
                    (0, 0)
                }
                ParityReport::Checked { solutions, .. } => (*solutions, rep.failures().len()),
            };
            solutions += n;
            fails += f;
            push(&mut rows, "parity", format!("lambda={l}"), "0 failures".into(), format!("{f} failures"));
        }
        results.insert(
            "parity".into(),
            json!({ "d": d, "k": k, "lambdas": reps.len(), "vacuous": vacuous, "solutions": solutions, "failures": fails }),
        );
    }

    let disagreements = rows.iter().filter(|r| r[5] == "no").count();
    results.insert("disagreements".into(), json!(disagreements));
    let summary = json!({
        "anchor": a,
        "verdict": if disagreements == 0 { "consistent" } else { "inconsistent" },
        "results": results,
        "truncation": { "exhaustive_modulus": cfg.raw.exhaustive_modulus, "lambda_max": cfg.raw.lambda_max },
    });
    let mut r = report(summary, header(&["check", "subject", "expected", "found", "agree"]), rows);
    if !failures.is_empty() {
        r.internal_failure =
            Some(format!("residue arithmetic disagrees: {}", failures[..failures.len().min(5)].join("; ")));
    }
    Ok(r)
}

/// Membership over `[−2m, 2m]` and two-class sumsets modulo `m`, each against
/// direct residue arithmetic.
fn exhaustive_residues(m: u64) -> (u64, usize, Vec<String>) {
    let mut errs = Vec::new();
    let mut checks = 0;
    let mi = m as i64;
    for a in 0..m {
        let g = Progression::new(a, m).expect("valid class");
        for lam in -2 * mi..=2 * mi {
            checks += 1;
            if progression_membership(lam, &g) != (lam.rem_euclid(mi) as u64 == a) {
                errs.push(format!("{lam} in {g}"));
            }
        }
        for b in 0..m {
            let h = Progression::new(b, m).expect("valid class");
            let sum = (a + b) % m;
            for c in [sum, (sum + 1) % m] {
                checks += 1;
                let amb = Progression::new(c, m).expect("valid class");
                if sumset_check(&[g, h], &amb).holds != (c == sum) {
                    errs.push(format!("{g} + {h} = {amb}"));
                }
            }
        }
    }
    (m, checks, errs)
}

/// `(a mod m₁) + (b mod m₂) = (a + b) mod gcd(m₁, m₂)` for all small moduli.
fn mixed_moduli(bound: u64) -> (usize, Vec<String>) {
    let gcd = |mut x: u64, mut y: u64| {
        while y != 0 {
            (x, y) = (y, x % y);
        }
        x
    };
    let mut errs = Vec::new();
    let mut checks = 0;
    for m1 in 1..=bound {
        for m2 in 1..=bound {
            let g = gcd(m1, m2);
            for a in 0..m1 {
                for b in 0..m2 {
                    let (p, q) = (Progression::new(a, m1).unwrap(), Progression::new(b, m2).unwrap());
                    let target = Progression::new((a + b) % g, g).unwrap();
                    checks += 1;
                    if !sumset_check(&[p, q], &target).holds {
                        errs.push(format!("{p} + {q} = {target}"));
                    }
                    if g > 1 {
                        checks += 1;
                        let wrong = Progression::new((a + b + 1) % g, g).unwrap();
                        if sumset_check(&[p, q], &wrong).holds {
                            errs.push(format!("{p} + {q} != {wrong}"));
                        }
                    }
                }
            }
        }
    }
    (checks, errs)
}
