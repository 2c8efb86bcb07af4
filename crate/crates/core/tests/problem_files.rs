use lieze_core::parser::{parse_problem, SolutionBody};

const ZOOMERON: &str = include_str!("../fixtures/zoomeron.lie");
const ALGEBRA: &str = include_str!("../fixtures/zoomeron_v4v5_algebra.lie");

#[test]
fn bundled_problem_parses() {
    let spec = parse_problem(ZOOMERON).unwrap();
    assert_eq!(spec.independents.len(), 3);
    assert_eq!(spec.equation_poly().unwrap().len(), 10);
    assert_eq!(spec.leading.as_ref().unwrap().to_string(), "D(u,t,t,x,y)");
    assert_eq!(spec.fields.len(), 5);
    assert_eq!(spec.commutators.as_ref().unwrap().rows.len(), 5);
    let names: Vec<_> = spec.substitutions.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["V1", "V3", "V4", "G25", "V2aV4", "V4V5"]);
    assert!(spec.substitutions.iter().all(|s| s.stage1.reference.is_some()));
    assert!(spec
        .substitutions
        .iter()
        .all(|s| s.stage2.as_ref().is_some_and(|s2| s2.reference.is_some())));
    assert!(matches!(
        &spec.solution("erfi").unwrap().body,
        SolutionBody::Unsupported { function } if function == "erfi"
    ));
    assert!(matches!(
        &spec.solution("airy").unwrap().body,
        SolutionBody::Unsupported { function } if function == "Ai"
    ));
    assert!(matches!(spec.solution("sec33b").unwrap().body, SolutionBody::Closed(_)));
    assert_eq!(spec.settings.exclude.len(), 1);
}

#[test]
fn reduced_algebra_parses() {
    let spec = parse_problem(ALGEBRA).unwrap();
    assert!(spec.equation.is_none());
    assert_eq!(spec.fields.len(), 4);
}
