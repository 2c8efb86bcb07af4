//! End-to-end checks of the engine on a problem file, one line per
//! criterion.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::Serialize;

use lieze_core::fixtures;
use lieze_core::properties;
use lieze_core::verify::{residual_at, Candidate};
use lieze_core::{Error, Result};

use crate::commands::{self, Input, Options};
use crate::report::{Report, Status, Verdict, TOOL, VERSION};

const SYMMETRY_BUDGET: Duration = Duration::from_secs(120);
const MIN_POINTS: usize = 20;
const PROPERTY_CASES: usize = 500;
/// Agreement required between our residuals and the oracle's, relative to
/// the term scale.
const ORACLE_TOL: f64 = 1e-10;
const EPSILONS: [&str; 4] = ["1/2", "-1/2", "1", "-1"];

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_digest: String,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
}

impl Summary {
    pub fn first_failure(&self) -> Option<&Criterion> {
        self.criteria.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let width = self.criteria.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.criteria {
            let mark = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark}  {}  {:<width$}  {}\n", c.id, c.name, c.detail));
        }
        out
    }
}

fn criterion(id: u32, name: &'static str, outcome: Result<(bool, String)>) -> Criterion {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Criterion { id, name, pass, detail }
}

fn symmetry_recovery(sym: &Result<Report>, elapsed: Duration) -> Result<(bool, String)> {
    let report = sym.as_ref().map_err(Clone::clone)?;
    let g = report.generators.as_ref().expect("symmetries fills generators");
    let (matches, against) = match &g.reference {
        Some(r) => (r.verdict == Verdict::Pass, r.labels.join(",")),
        None => (false, "no reference fields".into()),
    };
    let in_time = elapsed < SYMMETRY_BUDGET;
    Ok((
        g.dimension == 5 && matches && in_time,
        format!(
            "dimension {} {}, span {} [{against}]{}",
            g.dimension,
            g.scope,
            if matches { "equals" } else { "differs from" },
            if in_time { "" } else { ", over time budget" }
        ),
    ))
}

fn table_check(report: &Report, expected: usize) -> (bool, bool, String) {
    let c = report.commutators.as_ref().expect("commute fills commutators");
    let identities = c.antisymmetric && c.jacobi && c.closed;
    let Some(r) = &c.reference else {
        return (false, identities, "no reference".into());
    };
    (
        r.matched == expected && r.total == expected,
        identities,
        format!("{}/{}", r.matched, r.total),
    )
}

fn commutator_tables(main: &Input, opts: &Options) -> Result<(bool, String)> {
    let bundled = Input::from_bytes("algebra", fixtures::REDUCED_ALGEBRA.as_bytes().to_vec())?;
    let (a, ia, da) = table_check(&commands::commute(main, opts)?, 25);
    let (b, ib, db) = table_check(&commands::commute(&bundled, opts)?, 16);
    let identities = ia && ib;
    Ok((
        a && b && identities,
        format!(
            "{da} and {db} entries match, antisymmetry and Jacobi {}",
            if identities { "exact" } else { "violated" }
        ),
    ))
}

fn on_manifold(sym: &Result<Report>) -> Result<(bool, String)> {
    let report = sym.as_ref().map_err(Clone::clone)?;
    let g = report.generators.as_ref().expect("symmetries fills generators");
    let worst = g
        .generators
        .iter()
        .map(|x| x.on_manifold.max_normalized)
        .fold(0.0, f64::max);
    let points = g.generators.iter().map(|x| x.on_manifold.points).min().unwrap_or(0);
    let ok = !g.generators.is_empty()
        && points >= MIN_POINTS
        && g.generators.iter().all(|x| x.on_manifold.verdict == Verdict::Pass);
    Ok((
        ok,
        format!(
            "{} generators, max normalized {worst:.2e} at {points} points",
            g.generators.len()
        ),
    ))
}

fn reduction_consistency(report: &Result<Report>) -> Result<(bool, String)> {
    let report = report.as_ref().map_err(Clone::clone)?;
    let rs = &report.reductions;
    let consistent = rs
        .iter()
        .filter(|r| r.consistency.verdict == Verdict::Pass && r.consistency.points >= MIN_POINTS && r.fiber_free)
        .count();
    let compared = rs.iter().filter(|r| r.comparison.is_some()).count();
    let flagged = rs
        .iter()
        .filter(|r| r.comparison.as_ref().is_some_and(|c| c.flagged))
        .count();
    let worst = rs.iter().map(|r| r.consistency.max_relative).fold(0.0, f64::max);
    Ok((
        !rs.is_empty() && consistent == rs.len() && compared == rs.len(),
        format!(
            "{consistent}/{} consistent (max rel {worst:.2e}), {compared} compared, {flagged} flagged",
            rs.len()
        ),
    ))
}

fn oracle_agreement(main: &Input, opts: &Options) -> Result<(bool, String)> {
    let spec = &main.spec;
    let delta = spec.equation_poly().ok_or_else(|| Error::Input("no equation".into()))?;
    let dep = spec
        .dependent
        .clone()
        .ok_or_else(|| Error::Input("no dependent variable".into()))?;
    let sol = spec
        .solution("sec33b")
        .ok_or_else(|| Error::Input("no solution named sec33b".into()))?;
    let cand = Candidate::from_spec(sol, &spec.independents)?;
    let bad = |what: &str| Error::Input(format!("oracle: {what}"));
    let oracle: serde_json::Value = serde_json::from_str(fixtures::RADICAL_ORACLE).map_err(|e| bad(&e.to_string()))?;
    let rows = oracle["points"].as_array().ok_or_else(|| bad("no points"))?;
    let text = |v: &serde_json::Value, k: &str| v[k].as_str().map(str::to_string).ok_or_else(|| bad(k));
    let mut points = Vec::new();
    for row in rows {
        let mut p = Vec::new();
        for v in &spec.independents {
            let q: BigRational = text(row, v.name())?.parse().map_err(|_| bad(v.name()))?;
            p.push((v.clone(), q));
        }
        points.push(p);
    }
    let mut settings = spec.settings.clone();
    if let Some(s) = opts.seed {
        settings.seed = s;
    }
    let ours = residual_at(&delta, &dep, &spec.independents, &cand, &settings, &points)?;
    let mut agree = ours.points.len() == rows.len();
    for (p, row) in ours.points.iter().zip(rows) {
        let r: f64 = text(row, "residual")?.parse().map_err(|_| bad("residual"))?;
        let s: f64 = text(row, "scale")?.parse().map_err(|_| bad("scale"))?;
        agree &= (p.residual - r).abs() <= ORACLE_TOL * s && (p.scale - s).abs() <= ORACLE_TOL * s;
    }
    let verdict = oracle["verdict_pass"].as_bool().ok_or_else(|| bad("verdict_pass"))?;
    Ok((
        agree && ours.pass == verdict,
        format!(
            "radical solution {} at {} oracle points (oracle {}), residuals {}",
            Verdict::of(ours.pass).as_str(),
            ours.points.len(),
            Verdict::of(verdict).as_str(),
            if agree { "agree" } else { "disagree" }
        ),
    ))
}

fn solution_verification(main: &Input, opts: &Options) -> Result<(bool, String)> {
    let mut exact = Vec::new();
    for name in ["eq216", "exp"] {
        let o = Options {
            solution: Some(name.into()),
            ..opts.clone()
        };
        let r = commands::verify(main, &o)?;
        let v = &r.verifications[0];
        exact.push(v.status == Status::Pass && v.exact && v.structural.is_some());
    }
    let (oracle, detail) = oracle_agreement(main, opts)?;
    let both = exact.iter().all(|&b| b);
    Ok((
        both && oracle,
        format!(
            "x-independent solutions {}, {detail}",
            if both { "exactly zero" } else { "not exactly zero" }
        ),
    ))
}

fn transformed_solutions(main: &Input, opts: &Options, all: &Report) -> Result<(bool, String)> {
    let passing: Vec<&str> = all
        .verifications
        .iter()
        .filter(|v| v.status == Status::Pass)
        .map(|v| v.name.as_str())
        .collect();
    let (mut checks, mut passed) = (0, 0);
    let mut first = None;
    for name in &passing {
        for f in &main.spec.fields {
            for eps in EPSILONS {
                let o = Options {
                    solution: Some(name.to_string()),
                    transform: Some(format!("{}:{eps}", f.name)),
                    ..opts.clone()
                };
                let r = commands::verify(main, &o)?;
                checks += 1;
                if r.verifications[0].status == Status::Pass {
                    passed += 1;
                } else if first.is_none() {
                    first = Some(format!("{name} under {}:{eps}", f.name));
                }
            }
        }
    }
    let mut detail = format!("{passed}/{checks} transformed checks over {} solutions", passing.len());
    if let Some(f) = first {
        detail.push_str(&format!(", first failure {f}"));
    }
    Ok((checks >= MIN_POINTS && passed == checks, detail))
}

fn property_suites(seed: u64) -> (bool, String) {
    let suites = properties::all(seed, PROPERTY_CASES);
    let failed: Vec<String> = suites
        .iter()
        .filter(|s| !s.passed())
        .map(|s| format!("{} ({} failures)", s.name, s.failures))
        .collect();
    let detail = if failed.is_empty() {
        format!("{} suites x {PROPERTY_CASES} cases", suites.len())
    } else {
        format!("failing: {}", failed.join(", "))
    };
    (failed.is_empty(), detail)
}

fn determinism(main: &Input, opts: &Options, first: &[String]) -> Result<(bool, String)> {
    let again = rendered(main, opts);
    let same = again.len() == first.len() && again.iter().zip(first).all(|(a, b)| a == b);
    Ok((same, format!("{} reports re-rendered byte for byte", first.len())))
}

fn rendered(main: &Input, opts: &Options) -> Vec<String> {
    let reduce = Options {
        stage2: true,
        ..opts.clone()
    };
    [commands::reduce(main, &reduce), commands::verify(main, opts)]
        .into_iter()
        .map(|r| r.map(|r| r.to_json()).unwrap_or_else(|e| e.to_string()))
        .collect()
}

/// Runs every criterion on `main`, or on the bundled problem when `None`.
pub fn run(main: Option<&Input>, opts: &Options) -> Result<Summary> {
    let bundled;
    let main = match main {
        Some(m) => m,
        None => {
            bundled = Input::from_bytes("zoomeron.lie", fixtures::ZOOMERON.as_bytes().to_vec())?;
            &bundled
        }
    };
    let opts = Options {
        subst: None,
        solution: None,
        transform: None,
        all: false,
        stage2: false,
        reference: None,
        ..opts.clone()
    };
    let seed = opts.seed.unwrap_or(main.spec.settings.seed);
    let start = Instant::now();
    let sym = commands::symmetries(main, &opts);
    let elapsed = start.elapsed();
    let reduce_opts = Options {
        stage2: true,
        ..opts.clone()
    };
    let reductions = commands::reduce(main, &reduce_opts);
    let all = commands::verify(main, &opts);
    let first_render = rendered(main, &opts);
    let criteria = vec![
        criterion(1, "symmetry-recovery", symmetry_recovery(&sym, elapsed)),
        criterion(2, "commutator-tables", commutator_tables(main, &opts)),
        criterion(3, "on-manifold-invariance", on_manifold(&sym)),
        criterion(4, "reduction-consistency", reduction_consistency(&reductions)),
        criterion(5, "solution-verification", solution_verification(main, &opts)),
        criterion(
            6,
            "symmetries-map-solutions",
            all.and_then(|a| transformed_solutions(main, &opts, &a)),
        ),
        criterion(7, "property-suites", Ok(property_suites(seed))),
        criterion(8, "determinism", determinism(main, &opts, &first_render)),
    ];
    let pass = criteria.iter().all(|c| c.pass);
    Ok(Summary {
        tool: TOOL,
        version: VERSION,
        input_digest: lieze_core::sampling::digest(&main.bytes),
        seed,
        criteria,
        pass,
    })
}
