//! One line per acceptance criterion, each with its pinned tolerance.
//! The checks go through the library directly rather than through
//! `selftest`, so the two act as independent routes.

use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::BigRational;

use lieze::commands::{self, Input, Options};
use lieze_core::expr::Symbol;
use lieze_core::fixtures;
use lieze_core::parser::{parse_problem, ProblemSpec};
use lieze_core::properties;
use lieze_core::symmetry::{
    commutator_table, determining_system, on_manifold_check, rank_of, reference_entries, same_span, solve_nullspace,
    table_is_antisymmetric, table_mismatches, Ansatz, VectorField,
};
use lieze_core::verify::{residual, residual_at, residual_mapped, transform_solution, Candidate, GroupAction};

const SYMMETRY_BUDGET: Duration = Duration::from_secs(120);
const MANIFOLD_TOL: f64 = 1e-8;
const CONSISTENCY_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;
const ORACLE_AGREEMENT: f64 = 1e-10;
const MIN_POINTS: usize = 20;
const PROPERTY_CASES: usize = 500;
const SEED: u64 = 42;

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn spec() -> ProblemSpec {
    parse_problem(fixtures::ZOOMERON).unwrap()
}

fn fields(spec: &ProblemSpec) -> Vec<(String, VectorField)> {
    let dep = spec.dependent.clone().unwrap();
    spec.fields
        .iter()
        .map(|f| {
            (
                f.name.clone(),
                VectorField::from_spec(f, &spec.independents, &dep).unwrap(),
            )
        })
        .collect()
}

fn computed(spec: &ProblemSpec) -> Vec<VectorField> {
    let a = Ansatz::new(spec.independents.clone(), spec.dependent.clone().unwrap(), spec.ansatz);
    let sys = determining_system(&spec.equation_poly().unwrap(), &a, spec.leading.as_ref().unwrap()).unwrap();
    solve_nullspace(&sys, &a)
}

fn symmetry_recovery(spec: &ProblemSpec) -> Line {
    let start = Instant::now();
    let found = computed(spec);
    let elapsed = start.elapsed();
    let declared: Vec<VectorField> = fields(spec).into_iter().map(|(_, f)| f).collect();
    let union: Vec<VectorField> = found.iter().chain(&declared).cloned().collect();
    let ranks = (rank_of(&found), rank_of(&declared), rank_of(&union));
    Line {
        id: 1,
        name: "symmetry-recovery",
        pass: found.len() == 5 && ranks == (5, 5, 5) && same_span(&found, &declared) && elapsed < SYMMETRY_BUDGET,
        detail: format!(
            "nullity {}, ranks (computed, declared, union) = {ranks:?}, budget 120 s",
            found.len()
        ),
    }
}

fn table_matches(text: &str, entries: usize) -> (bool, String) {
    let spec = parse_problem(text).unwrap();
    let (labels, basis): (Vec<String>, Vec<VectorField>) = fields(&spec).into_iter().unzip();
    let table = commutator_table(labels.clone(), basis).unwrap();
    let reference = reference_entries(spec.commutators.as_ref().unwrap(), &labels).unwrap();
    let wrong = table_mismatches(&table, &reference).len();
    let n = labels.len() * labels.len();
    let ok = n == entries
        && wrong == 0
        && table.antisymmetric()
        && table.jacobi()
        && table.closed()
        && table_is_antisymmetric(&reference);
    (ok, format!("{}/{n}", n - wrong))
}

fn commutator_tables() -> Line {
    let (a, da) = table_matches(fixtures::ZOOMERON, 25);
    let (b, db) = table_matches(fixtures::REDUCED_ALGEBRA, 16);
    Line {
        id: 2,
        name: "commutator-tables",
        pass: a && b,
        detail: format!("{da} and {db} exact entries, antisymmetry and Jacobi exact zeros"),
    }
}

fn on_manifold(spec: &ProblemSpec) -> Line {
    let delta = spec.equation_poly().unwrap();
    let leading = spec.leading.clone().unwrap();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (i, g) in computed(spec).iter().enumerate() {
        let c = on_manifold_check(
            &delta,
            &leading,
            g,
            MIN_POINTS,
            SEED,
            &format!("acceptance/manifold/{i}"),
        )
        .unwrap();
        worst = worst.max(c.max_normalized);
        pass &= c.points >= MIN_POINTS && c.max_normalized <= MANIFOLD_TOL;
    }
    Line {
        id: 3,
        name: "on-manifold-invariance",
        pass,
        detail: format!("max normalized {worst:.2e} <= {MANIFOLD_TOL:e} at {MIN_POINTS} points per generator"),
    }
}

fn reduction_consistency() -> Line {
    let input = Input::from_bytes("zoomeron.lie", fixtures::ZOOMERON.as_bytes().to_vec()).unwrap();
    let opts = Options {
        stage2: true,
        seed: Some(SEED),
        ..Options::default()
    };
    let report = commands::reduce(&input, &opts).unwrap();
    let rs = &report.reductions;
    let consistent = rs
        .iter()
        .filter(|r| r.consistency.points >= MIN_POINTS && r.consistency.max_relative <= CONSISTENCY_TOL)
        .count();
    let flagged: Vec<&str> = rs
        .iter()
        .filter_map(|r| r.comparison.as_ref().filter(|c| c.flagged).map(|_| r.name.as_str()))
        .collect();
    let diagnosed = rs.iter().all(|r| {
        r.comparison
            .as_ref()
            .is_some_and(|c| !c.ratios.is_empty() && (!c.flagged || c.alignment.is_some()))
    });
    let noted = flagged
        .iter()
        .all(|n| report.diagnostics.iter().any(|d| d.starts_with(&format!("{n}:"))));
    Line {
        id: 4,
        name: "reduction-consistency",
        pass: rs.len() == 12 && consistent == 12 && diagnosed && noted,
        detail: format!(
            "{consistent}/{} identities <= {CONSISTENCY_TOL:e}, {} reference mismatches flagged with ratios",
            rs.len(),
            flagged.len()
        ),
    }
}

fn q(s: &str) -> BigRational {
    s.parse().unwrap()
}

fn solution_verification(spec: &ProblemSpec) -> Line {
    let delta = spec.equation_poly().unwrap();
    let u: Symbol = "u".into();
    let mut exact = true;
    for name in ["eq216", "exp"] {
        let c = Candidate::from_spec(spec.solution(name).unwrap(), &spec.independents).unwrap();
        let r = residual(&delta, &u, &spec.independents, &c, &spec.settings).unwrap();
        exact &= r.pass && r.exact && r.max_abs == 0.0 && r.structural == Some("x".into());
    }
    let oracle: serde_json::Value = serde_json::from_str(fixtures::RADICAL_ORACLE).unwrap();
    let rows = oracle["points"].as_array().unwrap();
    let points: Vec<Vec<(Symbol, BigRational)>> = rows
        .iter()
        .map(|p| {
            ["x", "y", "t"]
                .iter()
                .map(|v| (Symbol::new(v), q(p[v].as_str().unwrap())))
                .collect()
        })
        .collect();
    let c = Candidate::from_spec(spec.solution("sec33b").unwrap(), &spec.independents).unwrap();
    let r = residual_at(&delta, &u, &spec.independents, &c, &spec.settings, &points).unwrap();
    let agree = r.points.iter().zip(rows).all(|(p, o)| {
        let res: f64 = o["residual"].as_str().unwrap().parse().unwrap();
        let scale: f64 = o["scale"].as_str().unwrap().parse().unwrap();
        (p.residual - res).abs() <= ORACLE_AGREEMENT * scale
    });
    let verdict = oracle["verdict_pass"].as_bool().unwrap();
    Line {
        id: 5,
        name: "solution-verification",
        pass: exact && r.points.len() == 5 && agree && r.pass == verdict,
        detail: format!(
            "exact zeros {exact}, radical verdict {} vs oracle {} at 5 points (agreement {ORACLE_AGREEMENT:e})",
            r.pass, verdict
        ),
    }
}

fn symmetries_map_solutions(spec: &ProblemSpec) -> Line {
    let delta = spec.equation_poly().unwrap();
    let u: Symbol = "u".into();
    let mut settings = spec.settings.clone();
    settings.tol = RESIDUAL_TOL;
    let (mut checks, mut passed) = (0, 0);
    for s in &spec.solutions {
        let Ok(c) = Candidate::from_spec(s, &spec.independents) else {
            continue;
        };
        if !residual(&delta, &u, &spec.independents, &c, &settings).unwrap().pass {
            continue;
        }
        for (label, field) in fields(spec) {
            for eps in ["1/2", "-1/2", "1", "-1"] {
                let a = GroupAction::new(label.clone(), field.clone(), q(eps)).unwrap();
                let moved = transform_solution(&c, &a).unwrap();
                let map = a.point_map(&a.epsilon);
                let r = residual_mapped(&delta, &u, &spec.independents, &moved, &settings, &map).unwrap();
                checks += 1;
                passed += usize::from(r.pass);
            }
        }
    }
    Line {
        id: 6,
        name: "symmetries-map-solutions",
        pass: checks >= MIN_POINTS && passed == checks,
        detail: format!("{passed}/{checks} transformed solutions within {RESIDUAL_TOL:e}"),
    }
}

fn property_suites() -> Line {
    let suites = properties::all(SEED, PROPERTY_CASES);
    let failing: Vec<&str> = suites.iter().filter(|s| !s.passed()).map(|s| s.name).collect();
    Line {
        id: 7,
        name: "property-suites",
        pass: suites.len() == 6 && suites.iter().all(|s| s.cases >= PROPERTY_CASES) && failing.is_empty(),
        detail: format!(
            "{} suites x {PROPERTY_CASES} cases, seed {SEED}, failing {failing:?}",
            suites.len()
        ),
    }
}

fn determinism() -> Line {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_lieze"))
            .args(["selftest", "--json"])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap_or_default();
    let booleans = parsed["criteria"]
        .as_array()
        .is_some_and(|cs| cs.len() == 8 && cs.iter().all(|c| c["pass"].is_boolean()));
    Line {
        id: 8,
        name: "determinism",
        pass: a.status.success() && b.status.success() && booleans && a.stdout == b.stdout,
        detail: format!(
            "two selftest --json runs, {} bytes, identical {}",
            a.stdout.len(),
            a.stdout == b.stdout
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let spec = spec();
    let lines = [
        symmetry_recovery(&spec),
        commutator_tables(),
        on_manifold(&spec),
        reduction_consistency(),
        solution_verification(&spec),
        symmetries_map_solutions(&spec),
        property_suites(),
        determinism(),
    ];
    for l in &lines {
        println!(
            "criterion {} {:<26} {}  {}",
            l.id,
            l.name,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail
        );
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failing criteria {failed:?}");
}

#[test]
fn selftest_agrees_with_the_direct_checks() {
    let summary = lieze::selftest::run(None, &Options::default()).unwrap();
    assert!(summary.pass, "{}", summary.to_text());
    assert_eq!(
        summary.criteria.iter().map(|c| c.id).collect::<Vec<_>>(),
        (1..=8).collect::<Vec<_>>()
    );
    assert!(summary.criteria.iter().all(|c| c.pass));
}
