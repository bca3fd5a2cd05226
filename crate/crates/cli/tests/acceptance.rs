//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Runs every case at one worker, then again
//! at 4 and 8 workers for the determinism check.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde_json::Value as Json;
use slicedice_cli::{evaluate, Config, Report, RunOptions};
use slicedice_core::arith::parse_rational;
use slicedice_core::Rational;

type Check = fn(&[Report]) -> Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    cases: Vec<String>,
    check: Check,
}

fn toml(lines: &[&str]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

fn run_case(text: &str, workers: usize) -> Result<Report, String> {
    let cfg = Config::parse(text, PathBuf::from(".")).map_err(|e| e.to_string())?;
    evaluate(&cfg, &RunOptions { workers: Some(workers), seed: None }).map_err(|e| e.to_string())
}

fn bytes(r: &Report) -> String {
    format!("{}{}", r.summary_json(), r.csv().expect("csv renders"))
}

fn at<'a>(j: &'a Json, path: &str) -> &'a Json {
    path.split('.').fold(j, |v, key| &v[key])
}

fn text(j: &Json, path: &str) -> String {
    match at(j, path) {
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn rational(j: &Json, path: &str) -> Result<Rational, String> {
    parse_rational(&text(j, path)).ok_or_else(|| format!("{path} is not a rational: {}", text(j, path)))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn column<'a>(r: &'a Report, name: &str) -> impl Iterator<Item = &'a str> {
    let idx = r.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"));
    r.rows.iter().map(move |row| row[idx].as_str())
}

fn slicing_config(family: &str, extra: &[&str], instances: usize, seed: u64) -> String {
    let mut lines = vec![
        "experiment = \"verify_slicing\"".to_string(),
        format!("family = \"{family}\""),
        format!("instances = {instances}"),
        "max_value = 9".to_string(),
        format!("seed = {seed}"),
    ];
    lines.extend(extra.iter().map(|s| s.to_string()));
    lines.join("\n") + "\n"
}

/// Every instance admissible and dominated with no violating point.
fn all_dominated(r: &Report, expect: usize) -> Result<(), String> {
    let s = &r.summary;
    ensure(text(s, "verdict") == "dominated", || format!("verdict {}", text(s, "verdict")))?;
    ensure(at(s, "results.instances") == expect, || format!("instances {}", text(s, "results.instances")))?;
    ensure(at(s, "results.dominated") == expect, || format!("dominated {}", text(s, "results.dominated")))?;
    ensure(at(s, "results.violating_points") == 0, || {
        format!("violating points {}", text(s, "results.violating_points"))
    })?;
    for v in column(r, "violations") {
        ensure(v == "0", || format!("instance with {v} violations"))?;
    }
    Ok(())
}

fn max_violation(r: &Report) -> String {
    text(&r.summary, "results.max_violation")
}

fn criteria() -> Vec<Criterion> {
    let mut out = Vec::new();

    out.push(Criterion {
        id: 1,
        title: "exact ball slicing domination (200 bilinear + 50 trilinear)",
        limit: Duration::from_secs(120),
        cases: [(2, 200), (3, 50)]
            .iter()
            .map(|&(ell, n)| {
                let ell_line = format!("ell = {ell}");
                slicing_config(
                    "ball",
                    &[
                        "dims = [1, 2, 3]",
                        "k = 2",
                        &ell_line,
                        "lambda_max = 300",
                        "support_radius = 6",
                        "support_size = 4",
                    ],
                    n,
                    1,
                )
            })
            .collect(),
        check: |rs| {
            all_dominated(&rs[0], 200)?;
            all_dominated(&rs[1], 50)?;
            for r in rs {
                let mv = parse_rational(&max_violation(r)).ok_or("max_violation is not exact")?;
                ensure(mv <= Rational::from_integer(0), || format!("max_violation {mv}"))?;
            }
            Ok(format!("max_violation {} / {}", max_violation(&rs[0]), max_violation(&rs[1])))
        },
    });

    out.push(Criterion {
        id: 2,
        title: "sphere slicing domination, d in 2..=5, k = 2",
        limit: Duration::from_secs(120),
        cases: vec![slicing_config(
            "sphere",
            &["dims = [2, 3, 4, 5]", "k = 2", "ell = 2", "lambda_max = 50", "support_radius = 3", "support_size = 3"],
            100,
            2,
        )],
        check: |rs| {
            all_dominated(&rs[0], 100)?;
            Ok(format!("100/100 dominated, max_violation {}", max_violation(&rs[0])))
        },
    });

    out.push(Criterion {
        id: 3,
        title: "shifted annular slicing domination, d = 5",
        limit: Duration::from_secs(300),
        cases: vec![slicing_config(
            "annulus",
            &[
                "d = 5",
                "thetas = [\"1/4\", \"1/2\", \"3/4\"]",
                "ell = 2",
                "lambda_max = 40",
                "support_radius = 2",
                "support_size = 3",
            ],
            100,
            3,
        )],
        check: |rs| {
            all_dominated(&rs[0], 100)?;
            Ok(format!("100/100 dominated, max_violation {}", max_violation(&rs[0])))
        },
    });

    let prime = |k: u32, weighting: &str| {
        let (slots, ambient, lambda_max) = match k {
            2 => ("[\"2 mod 24\", \"2 mod 24\"]", "4 mod 24", 300),
            _ => ("[\"0 mod 2\", \"0 mod 2\", \"0 mod 2\"]", "0 mod 2", 5000),
        };
        let lines = [
            "d = 2".to_string(),
            format!("k = {k}"),
            format!("ell = {k}"),
            format!("progressions = {slots}"),
            format!("ambient = \"{ambient}\""),
            format!("weighting = \"{weighting}\""),
            format!("lambda_max = {lambda_max}"),
            "support_radius = 6".to_string(),
            format!("support_size = {}", if k == 2 { 4 } else { 6 }),
        ];
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        slicing_config("prime_sphere", &refs, 25, 4)
    };
    out.push(Criterion {
        id: 4,
        title: "prime slicing domination with per-slot progressions, d = 2, k in {2, 3}",
        limit: Duration::from_secs(300),
        cases: vec![prime(2, "log"), prime(2, "unit"), prime(3, "log"), prime(3, "unit")],
        check: |rs| {
            let mut active = 0;
            for r in rs {
                all_dominated(r, 25)?;
                ensure(at(&r.summary, "sumset.holds") == true, || "sumset condition fails".into())?;
                active += column(r, "points").filter(|p| *p != "0").count();
            }
            ensure(active >= 50, || format!("only {active} of 100 instances reach the surface"))?;
            let exact = parse_rational(&max_violation(&rs[1])).ok_or("unit-weight k = 2 max_violation is not exact")?;
            ensure(exact < Rational::from_integer(0), || format!("unit max_violation {exact}"))?;
            Ok(format!("100/100 dominated, {active} instances non-vacuous, unit k=2 max_violation {exact}"))
        },
    });

    out.push(Criterion {
        id: 5,
        title: "counting conservation and box-oracle equivalence",
        limit: Duration::from_secs(60),
        cases: vec![toml(&[
            "experiment = \"count\"",
            "dims = [1, 2, 3]",
            "ks = [2, 3, 4]",
            "lambda_max = 200",
            "oracle = true",
        ])],
        check: |rs| {
            let s = &rs[0].summary;
            ensure(text(s, "verdict") == "consistent", || format!("verdict {}", text(s, "verdict")))?;
            ensure(text(s, "results.conservation") == "exact", || "conservation not exact".into())?;
            ensure(at(s, "results.failures").as_array().is_some_and(Vec::is_empty), || text(s, "results.failures"))?;
            ensure(rs[0].rows.len() == 9 * 201, || format!("{} rows", rs[0].rows.len()))?;
            ensure(column(&rs[0], "oracle").all(|o| o == "match"), || "oracle mismatch".into())?;
            Ok(format!("{} checks, all exact", text(s, "results.checks")))
        },
    });

    let diag = |family: &str, d: u32, phi: Option<&str>| {
        let mut lines = vec![
            "experiment = \"diagnose_asymptotic\"".to_string(),
            format!("family = \"{family}\""),
            format!("d = {d}"),
            "k = 2".to_string(),
            "ell = 1".to_string(),
            "lambda_min = 1000".to_string(),
            "lambda_max = 10000".to_string(),
            "tolerance = 0.1".to_string(),
        ];
        if let Some(p) = phi {
            lines.push(format!("phi = {p}"));
        }
        lines.join("\n") + "\n"
    };
    out.push(Criterion {
        id: 6,
        title: "ball-count ratio stabilizes; sphere with a wrong exponent does not",
        limit: Duration::from_secs(120),
        cases: vec![diag("ball", 2, None), diag("ball", 4, None), diag("sphere", 4, Some("2"))],
        check: |rs| {
            let mut spreads = Vec::new();
            for r in &rs[..2] {
                let s = &r.summary;
                let spread = at(s, "results.stabilization").as_f64().ok_or("no stabilization")?;
                ensure(text(s, "verdict") == "stable" && spread <= 0.1, || format!("ball spread {spread}"))?;
                spreads.push(format!("{spread:.4}"));
            }
            let s = &rs[2].summary;
            ensure(text(s, "verdict") == "unstable", || "wrong exponent reported stable".into())?;
            Ok(format!("ball spreads {} (d=2, d=4), wrong-phi sphere unstable", spreads.join(", ")))
        },
    });

    let exps = |lines: &[&str]| {
        let mut all = vec!["experiment = \"sharpness\""];
        all.extend_from_slice(lines);
        toml(&all)
    };
    out.push(Criterion {
        id: 7,
        title: "critical-exponent arithmetic matches the golden table",
        limit: Duration::from_secs(1),
        cases: vec![
            exps(&["family = \"ball\"", "d = 3", "k = 2", "ell = 2"]),
            exps(&["family = \"ball\"", "d = 2", "k = 2", "ell = 3"]),
            exps(&["family = \"sphere\"", "d = 5", "k = 2", "ell = 2", "delta0 = \"1/10\"", "p_kd = 8"]),
            exps(&["family = \"sphere\"", "d = 7", "k = 2", "ell = 2", "delta0 = 0", "p_kd = \"7/5\""]),
            exps(&["family = \"sphere\"", "d = 7", "k = 2", "ell = 3", "delta0 = 0", "p_kd = \"7/5\""]),
            exps(&["family = \"annulus\"", "d = 5", "k = 2", "ell = 2", "theta = \"1/2\""]),
            exps(&["family = \"annulus\"", "d = 7", "k = 2", "ell = 2", "theta = \"1/4\""]),
        ],
        check: |rs| {
            // Worked by hand from the closed forms.
            let golden: [&[(&str, &str)]; 7] = [
                &[("critical_r", "1/2")],
                &[("critical_r", "1/3")],
                &[
                    ("critical_r", "5/8"),
                    ("r0", "11/17"),
                    ("p0", "11/6"),
                    ("sphere_r", "11/17"),
                    ("prime_r", "8/9"),
                    ("framework_r", "8/17"),
                ],
                &[
                    ("critical_r", "7/12"),
                    ("r0", "2/3"),
                    ("p0", "2"),
                    ("sphere_r", "2/3"),
                    ("prime_r", "7/12"),
                    ("framework_r", "7/19"),
                ],
                &[("critical_r", "7/19"), ("r0", "2/5"), ("sphere_r", "2/5"), ("prime_r", "7/19")],
                &[
                    ("critical_r", "5/9"),
                    ("annulus_p0", "5/4"),
                    ("annulus_p0_theta0", "5/3"),
                    ("annulus_p0_theta1", "1"),
                ],
                &[
                    ("critical_r", "14/25"),
                    ("annulus_p0", "14/11"),
                    ("annulus_p0_theta0", "7/5"),
                    ("annulus_p0_theta1", "1"),
                ],
            ];
            let mut n = 0;
            for (r, table) in rs.iter().zip(golden) {
                for (key, want) in table {
                    let got = text(&r.summary, &format!("results.exponents.{key}"));
                    ensure(got == *want, || format!("{key}: got {got}, want {want}"))?;
                    n += 1;
                }
            }
            Ok(format!("{n} golden values exact"))
        },
    });

    let bracket = |lines: &[&str]| {
        let mut all = vec!["experiment = \"sharpness\"", "k = 2", "ell = 2", "radii = [8, 16, 32, 64]"];
        all.extend_from_slice(lines);
        toml(&all)
    };
    let ball_grid = "r_grid = [0.3, 0.4, 0.5, 0.6, 0.7]";
    out.push(Criterion {
        id: 8,
        title: "sharpness brackets contain the critical exponent with width <= 1/5",
        limit: Duration::from_secs(180),
        cases: vec![
            bracket(&["family = \"ball\"", "d = 1", ball_grid]),
            bracket(&["family = \"ball\"", "d = 3", ball_grid]),
            bracket(&["family = \"sphere\"", "d = 5", "r_grid = [0.45, 0.55, 0.625, 0.7, 0.8]"]),
            bracket(&["family = \"annulus\"", "d = 5", "theta = \"1/2\"", "r_grid = [0.45, 0.5, \"5/9\", 0.6, 0.65]"]),
        ],
        check: |rs| {
            let mut shown = Vec::new();
            for (r, crit) in rs.iter().zip(["1/2", "1/2", "5/8", "5/9"]) {
                let s = &r.summary;
                ensure(text(s, "verdict") == "bracketed", || format!("verdict {}", text(s, "verdict")))?;
                let (lo, hi) = (rational(s, "results.bracket.lower")?, rational(s, "results.bracket.upper")?);
                let c = parse_rational(crit).unwrap();
                ensure(lo <= c && c <= hi, || format!("[{lo}, {hi}] misses {c}"))?;
                ensure(hi - lo <= Rational::new(1, 5), || format!("[{lo}, {hi}] wider than 1/5"))?;
                shown.push(format!("[{lo}, {hi}]"));
            }
            Ok(shown.join(" "))
        },
    });

    out.push(Criterion {
        id: 9,
        title: "progression membership, sumsets and parity rearrangement",
        limit: Duration::from_secs(60),
        cases: vec![toml(&[
            "experiment = \"progressions\"",
            "progressions = [\"5 mod 24\", \"17 mod 240\"]",
            "ambient = \"22 mod 24\"",
            "lambda_min = 2",
            "lambda_max = 200",
            "exhaustive_modulus = 240",
            "parity = true",
            "d = 2",
            "k = 3",
        ])],
        check: |rs| {
            let s = &rs[0].summary;
            ensure(text(s, "verdict") == "consistent", || format!("verdict {}", text(s, "verdict")))?;
            ensure(at(s, "results.disagreements") == 0, || text(s, "results.disagreements"))?;
            ensure(at(s, "results.sumset.holds") == true, || "sumset fails".into())?;
            ensure(at(s, "results.parity.failures") == 0, || text(s, "results.parity"))?;
            ensure(column(&rs[0], "agree").all(|a| a == "yes"), || "a detail row disagrees".into())?;
            Ok(format!(
                "{} exhaustive checks, parity over {} even lambdas",
                text(s, "results.exhaustive_checks"),
                text(s, "results.parity.lambdas")
            ))
        },
    });

    let framework = |lines: &[&str]| {
        let mut all = vec!["experiment = \"framework_check\"", "k = 2", "ell = 2"];
        all.extend_from_slice(lines);
        toml(&all)
    };
    out.push(Criterion {
        id: 10,
        title: "framework conditions for the four families; product surface fails condition 2",
        limit: Duration::from_secs(60),
        cases: vec![
            framework(&["family = \"ball\"", "d = 2", "lambda_max = 200", "onset = 1", "phi_offset = 0"]),
            framework(&["family = \"sphere\"", "d = 5", "lambda_max = 200", "onset = 1"]),
            framework(&["family = \"annulus\"", "d = 5", "theta = \"1/2\"", "lambda_max = 200", "onset = 1"]),
            framework(&[
                "family = \"prime_sphere\"",
                "d = 5",
                "progressions = [\"5 mod 24\", \"5 mod 24\"]",
                "ambient = \"10 mod 24\"",
                "lambda_max = 1000",
                "onset = 131",
            ]),
            framework(&[
                "family = \"general_additive\"",
                "combiner = \"product\"",
                "d = 2",
                "lambda_max = 200",
                "onset = 1",
            ]),
            framework(&["family = \"ball\"", "d = 2", "lambda_max = 200", "onset = 1", "phi_offset = -1"]),
        ],
        check: |rs| {
            let failed = |r: &Report| at(&r.summary, "results.failed_conditions").clone();
            for (i, r) in rs.iter().enumerate().filter(|&(i, _)| i != 4) {
                ensure(text(&r.summary, "verdict") == "pass", || format!("case {i} fails {}", failed(r)))?;
            }
            ensure(failed(&rs[4]) == serde_json::json!([2]), || format!("product surface fails {}", failed(&rs[4])))?;
            for r in [&rs[0], &rs[5]] {
                let cond1 = r.rows.iter().find(|row| row[1] == "1").ok_or("no condition 1 row")?;
                ensure(cond1[2] == "pass", || format!("condition 1 {}", cond1[2]))?;
            }
            Ok("families pass (prime onset 131), product fails only condition 2, C in {0, -1} pass condition 1".into())
        },
    });

    out
}

fn main() -> ExitCode {
    let criteria = criteria();
    let mut all_pass = true;
    let mut baseline: Vec<Vec<Option<String>>> = Vec::new();

    for c in &criteria {
        let start = Instant::now();
        let reports: Result<Vec<Report>, String> = c.cases.iter().map(|t| run_case(t, 1)).collect();
        let elapsed = start.elapsed();
        let outcome = reports.as_ref().map_err(Clone::clone).and_then(|rs| (c.check)(rs)).and_then(|msg| {
            ensure(elapsed <= c.limit, || format!("took {elapsed:.1?}, limit {:?}", c.limit))?;
            Ok(msg)
        });
        baseline.push(match &reports {
            Ok(rs) => rs.iter().map(|r| Some(bytes(r))).collect(),
            Err(_) => vec![None; c.cases.len()],
        });
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                all_pass = false;
                ("FAIL", m)
            }
        };
        println!("criterion {:>2} {tag}: {} ({elapsed:.2?}; {msg})", c.id, c.title);
    }

    let start = Instant::now();
    let mut mismatches = Vec::new();
    for workers in [4, 8] {
        for (c, base) in criteria.iter().zip(&baseline) {
            for (j, (case, want)) in c.cases.iter().zip(base).enumerate() {
                let got = run_case(case, workers).ok().map(|r| bytes(&r));
                if want.is_none() || got != *want {
                    mismatches.push(format!("criterion {} case {j} at {workers} workers", c.id));
                }
            }
        }
    }
    let cases: usize = criteria.iter().map(|c| c.cases.len()).sum();
    if mismatches.is_empty() {
        println!(
            "criterion 11 PASS: reports byte-identical across 1, 4 and 8 workers ({:.2?}; {cases} cases)",
            start.elapsed()
        );
    } else {
        all_pass = false;
        println!("criterion 11 FAIL: reports differ across worker counts ({})", mismatches.join(", "));
    }

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
