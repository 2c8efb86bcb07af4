use std::io::Write;
use std::process::{Command, Output};

use lieze_core::fixtures;
use lieze_core::parser::{parse_expression, parse_problem};
use lieze_core::symmetry::{span_contains, VectorField};
use serde_json::Value;
use tempfile::NamedTempFile;

fn file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn lieze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lieze")).args(args).output().unwrap()
}

fn run_on(text: &str, args: &[&str]) -> Output {
    let f = file(text);
    let path = f.path().to_str().unwrap().to_string();
    let mut all = vec![args[0], path.as_str()];
    all.extend(&args[1..]);
    lieze(&all)
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Rebuilds the generators of a `symmetries` report as fields of a problem
/// file, so the check also covers re-parsing of the printed coefficients.
fn generators_of(report: &Value) -> Vec<VectorField> {
    let mut text = String::from("independent x y t\ndependent u\n");
    for g in report["generators"]["generators"].as_array().unwrap() {
        text.push_str(&format!("field {} {{", g["label"].as_str().unwrap()));
        for (v, c) in g["components"].as_object().unwrap() {
            text.push_str(&format!(" {v} = {};", c.as_str().unwrap()));
        }
        text.push_str(" }\n");
    }
    let spec = parse_problem(&text).unwrap();
    spec.fields
        .iter()
        .map(|f| VectorField::from_spec(f, &spec.independents, &"u".into()).unwrap())
        .collect()
}

#[test]
fn symmetries_recover_the_declared_span() {
    let r = json(&run_on(fixtures::ZOOMERON, &["symmetries", "--format", "json"]));
    let g = &r["generators"];
    assert_eq!(g["dimension"], 5);
    assert_eq!(g["reference"]["verdict"], "PASS");
    assert_eq!(g["excluded_locus"][0], "u = 0");
    assert_eq!(g["scope"], "within ansatz (2,1)");
    assert!(r["diagnostics"][0].as_str().unwrap().contains("c4 = t*dt"));
    assert_eq!(r["settings"]["seed"], 42);
    assert_eq!(
        r["input_digest"].as_str().unwrap(),
        lieze_core::sampling::digest(fixtures::ZOOMERON.as_bytes())
    );
}

#[test]
fn smaller_ansatz_is_contained_in_the_default_one() {
    let big = generators_of(&json(&run_on(fixtures::ZOOMERON, &["symmetries", "--format", "json"])));
    let small = generators_of(&json(&run_on(
        fixtures::ZOOMERON,
        &["symmetries", "--ansatz", "1,1", "--format", "json"],
    )));
    assert!(!small.is_empty());
    assert!(small.iter().all(|f| span_contains(&big, f)));
}

#[test]
fn reference_basis_from_another_file() {
    let reference = file(fixtures::ZOOMERON);
    let text = fixtures::ZOOMERON;
    let cut = text.find("# Generator basis").unwrap()..text.find("# Infinitesimals").unwrap();
    let problem = format!("{}{}", &text[..cut.start], &text[cut.end..]);
    let out = run_on(
        &problem,
        &[
            "symmetries",
            "--format",
            "json",
            "--reference",
            reference.path().to_str().unwrap(),
        ],
    );
    let r = json(&out);
    assert_eq!(r["generators"]["reference"]["labels"].as_array().unwrap().len(), 5);
    assert_eq!(r["generators"]["reference"]["verdict"], "PASS");
    let own = json(&run_on(&problem, &["symmetries", "--format", "json"]));
    assert!(own["generators"]["reference"].is_null());
}

#[test]
fn missing_equation_is_an_input_error() {
    let out = run_on("independent x\ndependent u\n", &["symmetries"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no equation"));
}

#[test]
fn syntax_errors_exit_with_two() {
    let out = run_on("independent x\ndependent u\nequation u +\n", &["symmetries"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert_eq!(lieze(&["symmetries", "/no/such/file.lie"]).status.code(), Some(2));
    assert_eq!(
        run_on(fixtures::ZOOMERON, &["symmetries", "--ansatz", "two"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(lieze(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn commutator_tables() {
    let r = json(&run_on(fixtures::ZOOMERON, &["commute", "--format", "json"]));
    let c = &r["commutators"];
    assert_eq!(c["reference"]["matched"], 25);
    assert_eq!(c["entries"][2][4], "-2*V5");
    assert_eq!(c["jacobi"], true);
    let r = json(&run_on(fixtures::REDUCED_ALGEBRA, &["commute", "--format", "json"]));
    assert_eq!(r["commutators"]["reference"]["matched"], 16);
}

#[test]
fn single_field_gives_a_zero_table() {
    let r = json(&run_on(
        "independent x\ndependent u\nfield A { x = x; }\n",
        &["commute", "--format", "json"],
    ));
    assert_eq!(r["commutators"]["entries"], serde_json::json!([["0"]]));
    assert!(r["commutators"]["structure_constants"].as_array().unwrap().is_empty());
}

#[test]
fn dependent_basis_is_an_engine_error() {
    let out = run_on(
        "independent x\ndependent u\nfield A { x = 1; }\nfield B { x = 2; }\n",
        &["commute"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("linearly dependent"));
}

#[test]
fn translation_reduction_matches_its_reference() {
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &["reduce", "--subst", "V4", "--format", "json"],
    ));
    let red = r["reductions"].as_array().unwrap();
    assert_eq!(red.len(), 1);
    let cmp = &red[0]["comparison"];
    assert_eq!(cmp["proportional"], true);
    assert_eq!(cmp["alignment"]["difference"], "0");
    assert_eq!(red[0]["consistency"]["verdict"], "PASS");
    let e = parse_expression(red[0]["equation"].as_str().unwrap()).unwrap();
    assert_eq!(e.to_poly().to_string(), red[0]["equation"].as_str().unwrap());
}

#[test]
fn second_stage_mismatch_is_flagged_not_failed() {
    let out = run_on(
        fixtures::ZOOMERON,
        &["reduce", "--subst", "V1", "--stage2", "--format", "json"],
    );
    let r = json(&out);
    let red = r["reductions"].as_array().unwrap();
    assert_eq!(red.len(), 2);
    assert_eq!(red[1]["name"], "V1/stage2");
    assert_eq!(red[1]["comparison"]["flagged"], true);
    assert_eq!(red[1]["comparison"]["ratios"].as_array().unwrap().len(), 4);
    assert!(r["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d.as_str().unwrap().starts_with("V1/stage2:")));
}

#[test]
fn unknown_substitution_is_an_input_error() {
    let out = run_on(fixtures::ZOOMERON, &["reduce", "--subst", "missing"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rank_deficient_substitution_is_an_engine_error() {
    let start = fixtures::ZOOMERON.find("substitution V4").unwrap();
    let at = start + fixtures::ZOOMERON[start..].find("delta = y;").unwrap();
    let broken = format!(
        "{}delta = x;{}",
        &fixtures::ZOOMERON[..at],
        &fixtures::ZOOMERON[at + 10..]
    );
    let out = run_on(&broken, &["reduce", "--subst", "V4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("rank"));
}

#[test]
fn similarity_solution_is_exact() {
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &["verify", "--solution", "eq216", "--format", "json"],
    ));
    let v = &r["verifications"][0];
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["exact"], true);
    assert_eq!(v["structural"], "x");
    assert_eq!(v["points"].as_array().unwrap().len(), 20);
}

#[test]
fn translated_solution_still_passes() {
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &[
            "verify",
            "--solution",
            "eq216",
            "--transform",
            "V5:1.0",
            "--format",
            "json",
        ],
    ));
    assert_eq!(r["verifications"][0]["status"], "PASS");
    assert_eq!(r["verifications"][0]["transform"], "V5:1");
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &[
            "verify",
            "--solution",
            "sec33b_constrained",
            "--transform",
            "V3:0.5",
            "--format",
            "json",
        ],
    ));
    assert_eq!(r["verifications"][0]["status"], "PASS");
}

#[test]
fn radical_solution_fails_like_the_oracle() {
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &["verify", "--solution", "sec33b", "--format", "json"],
    ));
    let oracle: Value = serde_json::from_str(fixtures::RADICAL_ORACLE).unwrap();
    let pass = r["verifications"][0]["status"] == "PASS";
    assert_eq!(pass, oracle["verdict_pass"].as_bool().unwrap());
}

#[test]
fn special_functions_are_skipped() {
    let out = run_on(fixtures::ZOOMERON, &["verify", "--all", "--format", "json"]);
    let r = json(&out);
    let status: Vec<(&str, &str)> = r["verifications"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v["name"].as_str().unwrap(), v["status"].as_str().unwrap()))
        .collect();
    assert!(status.contains(&("erfi", "SKIPPED")));
    assert!(status.contains(&("airy", "SKIPPED")));
    assert!(status.contains(&("eq216", "PASS")));
}

#[test]
fn empty_domain_fails_sampling() {
    let text = format!("{}\nsolution neg {{\n    u = (-x)^(1/2);\n}}\n", fixtures::ZOOMERON);
    let r = json(&run_on(&text, &["verify", "--solution", "neg", "--format", "json"]));
    assert_eq!(r["verifications"][0]["status"], "FAILED-SAMPLING");
}

#[test]
fn bad_transforms_are_input_errors() {
    for t in ["V9:1", "V1", "V1:x"] {
        let out = run_on(fixtures::ZOOMERON, &["verify", "--solution", "eq216", "--transform", t]);
        assert_eq!(out.status.code(), Some(2), "{t}");
    }
}

#[test]
fn settings_overrides_are_echoed() {
    let r = json(&run_on(
        fixtures::ZOOMERON,
        &[
            "verify",
            "--solution",
            "exp",
            "--seed",
            "7",
            "--points",
            "5",
            "--tol",
            "1e-6",
            "--format",
            "json",
        ],
    ));
    assert_eq!(r["settings"]["seed"], 7);
    assert_eq!(r["settings"]["points"], 5);
    assert_eq!(r["verifications"][0]["tolerance"], 1e-6);
    assert_eq!(r["verifications"][0]["points"].as_array().unwrap().len(), 5);
    let out = run_on(fixtures::ZOOMERON, &["verify", "--points", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn text_reports_are_byte_stable() {
    let a = run_on(fixtures::ZOOMERON, &["reduce", "--stage2"]);
    let b = run_on(fixtures::ZOOMERON, &["reduce", "--stage2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn selftest_passes_on_the_bundled_problem() {
    let out = lieze(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

#[test]
fn corrupted_reference_table_fails_the_commutator_criterion() {
    let corrupted = fixtures::ZOOMERON.replace("V3: 0, 0, 0, -2*V4, -2*V5;", "V3: 0, 0, 0, -2*V4, 2*V5;");
    assert_ne!(corrupted, fixtures::ZOOMERON);
    let out = run_on(&corrupted, &["selftest", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("criterion 2 (commutator-tables)"));
    let s: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["pass"], false);
    assert_eq!(s["criteria"][1]["pass"], false);
    assert_eq!(s["criteria"][0]["pass"], true);
}
