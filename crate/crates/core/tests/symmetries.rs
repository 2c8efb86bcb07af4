use lieze_core::linalg::{self, Matrix};
use lieze_core::parser::{parse_problem, ProblemSpec};
use lieze_core::symmetry::{
    apply_prolonged, back_substitutes, commutator_table, determining_system, determining_system_symbolic,
    on_manifold_check, prolong, reference_entries, same_span, solve_nullspace, span_contains, table_is_antisymmetric,
    table_mismatches, Ansatz, VectorField,
};

const ZOOMERON: &str = include_str!("../fixtures/zoomeron.lie");
const ALGEBRA: &str = include_str!("../fixtures/zoomeron_v4v5_algebra.lie");

fn problem() -> ProblemSpec {
    parse_problem(ZOOMERON).unwrap()
}

fn fields(spec: &ProblemSpec) -> Vec<VectorField> {
    let dep = spec.dependent.clone().unwrap();
    spec.fields
        .iter()
        .map(|f| VectorField::from_spec(f, &spec.independents, &dep).unwrap())
        .collect()
}

fn ansatz(spec: &ProblemSpec) -> Ansatz {
    Ansatz::new(spec.independents.clone(), spec.dependent.clone().unwrap(), spec.ansatz)
}

#[test]
fn five_dimensional_algebra_within_ansatz() {
    let spec = problem();
    let a = ansatz(&spec);
    assert_eq!(a.len(), 80);
    let sys = determining_system(&spec.equation_poly().unwrap(), &a, spec.leading.as_ref().unwrap()).unwrap();
    assert_eq!(sys.cleared_power, 1);
    let ns = linalg::nullspace(&sys.matrix());
    assert_eq!(ns.len(), 5);
    assert!(ns.iter().all(|v| back_substitutes(&sys, v)));
    let generators = solve_nullspace(&sys, &a);
    assert!(same_span(&generators, &fields(&spec)));
}

#[test]
fn columnwise_and_symbolic_systems_agree() {
    let spec = problem();
    let a = ansatz(&spec);
    let delta = spec.equation_poly().unwrap();
    let leading = spec.leading.clone().unwrap();
    let fast = determining_system(&delta, &a, &leading).unwrap();
    let slow = determining_system_symbolic(&delta, &a, &leading).unwrap();
    assert_eq!(fast.cleared_power, slow.cleared_power);
    assert!(linalg::same_row_space(&fast.matrix(), &slow.matrix()));
    assert_eq!(fast.rows.len(), slow.rows.len());
}

#[test]
fn x_translation_annihilates_delta() {
    let spec = problem();
    let dx = &fields(&spec)[4];
    let pv = prolong(dx, 4).unwrap();
    assert!(apply_prolonged(&pv, &spec.equation_poly().unwrap()).unwrap().is_zero());
}

#[test]
fn generators_are_symmetries_on_the_manifold() {
    let spec = problem();
    let delta = spec.equation_poly().unwrap();
    let leading = spec.leading.clone().unwrap();
    for (i, f) in fields(&spec).iter().enumerate() {
        let c = on_manifold_check(&delta, &leading, f, 20, 42, &format!("manifold-{i}")).unwrap();
        assert!(c.max_normalized <= 1e-8, "V{} residual {}", i + 1, c.max_normalized);
    }
}

#[test]
fn a_non_symmetry_is_detected_on_the_manifold() {
    let spec = problem();
    let delta = spec.equation_poly().unwrap();
    let leading = spec.leading.clone().unwrap();
    let dep = spec.dependent.clone().unwrap();
    let p = |s: &str| lieze_core::parser::parse_expression(s).unwrap().to_poly();
    let bogus = VectorField::new(spec.independents.clone(), dep, vec![p("x"), p("0"), p("0")], p("0"));
    let c = on_manifold_check(&delta, &leading, &bogus, 20, 42, "bogus").unwrap();
    assert!(c.max_normalized > 1e-3);
}

#[test]
fn commutator_table_matches_reference() {
    let spec = problem();
    let labels: Vec<String> = spec.fields.iter().map(|f| f.name.clone()).collect();
    let table = commutator_table(labels.clone(), fields(&spec)).unwrap();
    let reference = reference_entries(spec.commutators.as_ref().unwrap(), &labels).unwrap();
    assert!(table_mismatches(&table, &reference).is_empty());
    assert!(table.closed() && table.antisymmetric() && table.jacobi());
}

#[test]
fn verbatim_fifth_row_breaks_antisymmetry() {
    let verbatim = ZOOMERON.replace("V5: 0, 0, 2*V5, 0, 0;", "V5: 0, 0, 0, 2*V5, 0;");
    assert_ne!(verbatim, ZOOMERON);
    let spec = parse_problem(&verbatim).unwrap();
    let labels: Vec<String> = spec.fields.iter().map(|f| f.name.clone()).collect();
    let reference = reference_entries(spec.commutators.as_ref().unwrap(), &labels).unwrap();
    assert!(!table_is_antisymmetric(&reference));
    let table = commutator_table(labels, fields(&spec)).unwrap();
    assert_eq!(table_mismatches(&table, &reference), vec![(4, 2), (4, 3)]);
}

#[test]
fn reduced_equation_algebra_table() {
    let spec = parse_problem(ALGEBRA).unwrap();
    let labels: Vec<String> = spec.fields.iter().map(|f| f.name.clone()).collect();
    let table = commutator_table(labels.clone(), fields(&spec)).unwrap();
    let reference = reference_entries(spec.commutators.as_ref().unwrap(), &labels).unwrap();
    assert!(table_mismatches(&table, &reference).is_empty(), "{table}");
    assert!(table.antisymmetric() && table.jacobi());
}

#[test]
fn smaller_ansatz_is_contained() {
    let spec = problem();
    let delta = spec.equation_poly().unwrap();
    let leading = spec.leading.clone().unwrap();
    let big = ansatz(&spec);
    let mut small_degrees = spec.ansatz;
    small_degrees.independent = 1;
    let small = Ansatz::new(
        spec.independents.clone(),
        spec.dependent.clone().unwrap(),
        small_degrees,
    );
    let gs = solve_nullspace(&determining_system(&delta, &small, &leading).unwrap(), &small);
    let gb = solve_nullspace(&determining_system(&delta, &big, &leading).unwrap(), &big);
    let coords: Vec<_> = gs.iter().map(|g| big.coordinates(g).unwrap()).collect();
    let span = Matrix::from_rows(big.len(), gb.iter().map(|g| big.coordinates(g).unwrap()).collect());
    let mut stacked = span.clone();
    coords.into_iter().for_each(|c| stacked.push_row(c));
    assert_eq!(linalg::rank(&stacked), linalg::rank(&span));
}

#[test]
fn printed_infinitesimal_family_against_computed_span() {
    let spec = problem();
    let a = ansatz(&spec);
    let sys = determining_system(&spec.equation_poly().unwrap(), &a, spec.leading.as_ref().unwrap()).unwrap();
    let generators = solve_nullspace(&sys, &a);
    let family = &spec.infinitesimals[0];
    let dirs = VectorField::family_directions(family, &spec.independents, &"u".into()).unwrap();
    let outside: Vec<String> = dirs
        .iter()
        .filter(|(_, f)| !span_contains(&generators, f))
        .map(|(c, f)| format!("{c}: {f}"))
        .collect();
    assert_eq!(outside, vec!["c4: t*dt".to_string()]);
    let dt = &fields(&spec)[3];
    assert!(span_contains(&generators, dt));
}
