//! The analysis commands. Each reads a problem file, runs one stage of the
//! engine and fills the matching report section.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_rational::BigRational;

use lieze_core::expr::{lift_dependent, JetCoordinate, Poly, Symbol, Var};
use lieze_core::parser::{parse_expression, parse_problem, AnsatzDegrees, ProblemSpec};
use lieze_core::reduction::{
    align_with_reference, apply_similarity, check_consistency, equations_proportional, second_stage_reduce,
    ChangeOfVariables, ReducedEquation,
};
use lieze_core::symmetry::{
    commutator_table, determining_system, format_combination, on_manifold_check, reference_entries, same_span,
    solve_nullspace, span_contains, table_is_antisymmetric, table_mismatches, Ansatz, Entry, VectorField,
};
use lieze_core::verify::{residual, residual_mapped, transform_solution, Candidate, GroupAction, ResidualReport};
use lieze_core::{Error, Result};

use crate::report::{
    AlignmentEntry, CommutatorSection, ComparisonEntry, ConsistencyEntry, Generator, GeneratorSection, ManifoldEntry,
    PointEntry, ReductionEntry, Report, SpanMatch, Status, StructureConstant, TableMatch, Verdict, VerificationEntry,
};

/// Normalized residual allowed for `Pr(V)(delta)` on the solution manifold.
pub const MANIFOLD_TOL: f64 = 1e-8;
/// Relative spread allowed for the ratio of two proportional equations.
pub const PROPORTIONALITY_TOL: f64 = 1e-8;

/// A problem file held in memory together with its parse.
#[derive(Clone, Debug)]
pub struct Input {
    pub name: String,
    pub bytes: Vec<u8>,
    pub spec: ProblemSpec,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self::from_bytes(name, bytes)
    }

    pub fn from_bytes(name: impl Into<String>, bytes: Vec<u8>) -> Result<Self> {
        let name = name.into();
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Input(format!("{name} is not UTF-8")))?;
        let spec = parse_problem(text)?;
        Ok(Input { name, bytes, spec })
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub ansatz: Option<AnsatzDegrees>,
    pub subst: Option<String>,
    pub stage2: bool,
    pub solution: Option<String>,
    pub all: bool,
    pub transform: Option<String>,
    pub reference: Option<Input>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub points: Option<usize>,
}

/// The problem with command-line overrides applied.
struct Problem<'a> {
    input: &'a Input,
    spec: ProblemSpec,
    degrees: AnsatzDegrees,
}

impl<'a> Problem<'a> {
    fn new(input: &'a Input, opts: &Options) -> Result<Self> {
        let mut spec = input.spec.clone();
        if let Some(s) = opts.seed {
            spec.settings.seed = s;
        }
        if let Some(t) = opts.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Input(format!("tolerance must be positive, got {t}")));
            }
            spec.settings.tol = t;
        }
        if let Some(n) = opts.points {
            if n == 0 {
                return Err(Error::Input("at least one sample point is required".into()));
            }
            spec.settings.points = n;
        }
        let degrees = opts.ansatz.unwrap_or(spec.ansatz);
        Ok(Problem { input, spec, degrees })
    }

    fn report(&self, command: &str) -> Report {
        Report::new(
            command,
            &self.input.bytes,
            &self.spec.settings,
            [self.degrees.independent, self.degrees.dependent],
        )
    }

    fn dependent(&self) -> Result<Symbol> {
        self.spec
            .dependent
            .clone()
            .ok_or_else(|| Error::Input(format!("{} declares no dependent variable", self.input.name)))
    }

    fn equation(&self) -> Result<(Poly, Symbol)> {
        let dep = self.dependent()?;
        let delta = self
            .spec
            .equation_poly()
            .ok_or_else(|| Error::Input(format!("{} has no equation", self.input.name)))?;
        Ok((delta, dep))
    }

    fn leading(&self) -> Result<JetCoordinate> {
        self.spec
            .leading
            .clone()
            .ok_or_else(|| Error::Input(format!("{} declares no leading derivative", self.input.name)))
    }

    fn fields(&self) -> Result<Vec<(String, VectorField)>> {
        declared_fields(&self.spec)
    }
}

fn declared_fields(spec: &ProblemSpec) -> Result<Vec<(String, VectorField)>> {
    let Some(dep) = spec.dependent.clone() else {
        return Ok(Vec::new());
    };
    spec.fields
        .iter()
        .map(|f| Ok((f.name.clone(), VectorField::from_spec(f, &spec.independents, &dep)?)))
        .collect()
}

fn components(f: &VectorField) -> BTreeMap<String, String> {
    f.variables()
        .into_iter()
        .zip(f.components())
        .filter(|(_, c)| !c.is_zero())
        .map(|(v, c)| (v.to_string(), c.to_string()))
        .collect()
}

/// Basis of the point symmetries within the polynomial ansatz.
pub fn symmetries(input: &Input, opts: &Options) -> Result<Report> {
    let pb = Problem::new(input, opts)?;
    let (delta, dep) = pb.equation()?;
    let leading = pb.leading()?;
    let ansatz = Ansatz::new(pb.spec.independents.clone(), dep.clone(), pb.degrees);
    let sys = determining_system(&delta, &ansatz, &leading)?;
    let found = solve_nullspace(&sys, &ansatz);
    let settings = &pb.spec.settings;
    let mut generators = Vec::new();
    for (i, g) in found.iter().enumerate() {
        let label = format!("G{}", i + 1);
        let check = on_manifold_check(
            &delta,
            &leading,
            g,
            settings.points,
            settings.seed,
            &format!("manifold/{label}"),
        )?;
        generators.push(Generator {
            components: components(g),
            printed: g.to_string(),
            on_manifold: ManifoldEntry {
                points: check.points,
                max_normalized: check.max_normalized,
                tolerance: MANIFOLD_TOL,
                seed: settings.seed,
                verdict: Verdict::of(check.points >= 1 && check.max_normalized <= MANIFOLD_TOL),
            },
            label,
        });
    }
    let (source, reference) = match &opts.reference {
        Some(r) => (r.name.clone(), declared_fields(&r.spec)?),
        None => (input.name.clone(), pb.fields()?),
    };
    let reference = if reference.is_empty() {
        None
    } else {
        let fields: Vec<VectorField> = reference.iter().map(|(_, f)| f.clone()).collect();
        Some(SpanMatch {
            source,
            labels: reference.iter().map(|(l, _)| l.clone()).collect(),
            verdict: Verdict::of(same_span(&found, &fields)),
            missing: reference
                .iter()
                .filter(|(_, f)| !span_contains(&found, f))
                .map(|(l, f)| format!("{l} = {f}"))
                .collect(),
            extra: generators
                .iter()
                .zip(&found)
                .filter(|(_, g)| !span_contains(&fields, g))
                .map(|(e, g)| format!("{} = {g}", e.label))
                .collect(),
        })
    };
    let scope = format!("within ansatz ({},{})", pb.degrees.independent, pb.degrees.dependent);
    let mut report = pb.report("symmetries");
    for family in &pb.spec.infinitesimals {
        for (c, f) in VectorField::family_directions(family, &pb.spec.independents, &dep)? {
            if !span_contains(&found, &f) {
                report.diagnostics.push(format!(
                    "infinitesimal family {}: direction {c} = {f} is not a symmetry {scope}",
                    family.name
                ));
            }
        }
    }
    if let Some(r) = &reference {
        if r.verdict == Verdict::Fail {
            report
                .diagnostics
                .push(format!("computed span differs from the fields of {} {scope}", r.source));
        }
    }
    report.generators = Some(GeneratorSection {
        scope,
        unknowns: ansatz.len(),
        equations: sys.nrows(),
        cleared_power: sys.cleared_power,
        excluded_locus: match (sys.cleared_power, sys.kappa.as_single_term()) {
            (0, _) => Vec::new(),
            (_, Some(_)) => sys.kappa.vars().into_iter().map(|v| format!("{v} = 0")).collect(),
            (_, None) => vec![format!("{} = 0", sys.kappa)],
        },
        dimension: found.len(),
        generators,
        reference,
    });
    Ok(report)
}

/// Commutator table of the declared fields, or of the computed basis when
/// the file declares none.
pub fn commute(input: &Input, opts: &Options) -> Result<Report> {
    let pb = Problem::new(input, opts)?;
    let mut basis = pb.fields()?;
    if basis.is_empty() {
        let (delta, dep) = pb.equation()?;
        let ansatz = Ansatz::new(pb.spec.independents.clone(), dep, pb.degrees);
        let sys = determining_system(&delta, &ansatz, &pb.leading()?)?;
        basis = solve_nullspace(&sys, &ansatz)
            .into_iter()
            .enumerate()
            .map(|(i, g)| (format!("G{}", i + 1), g))
            .collect();
    }
    if basis.is_empty() {
        return Err(Error::Input(format!("{} yields an empty basis", input.name)));
    }
    let labels: Vec<String> = basis.iter().map(|(l, _)| l.clone()).collect();
    let printed: Vec<String> = basis.iter().map(|(_, f)| f.to_string()).collect();
    let table = commutator_table(labels.clone(), basis.into_iter().map(|(_, f)| f).collect())?;
    let mut report = pb.report("commute");
    let mut entries = Vec::new();
    let mut constants = Vec::new();
    for (i, row) in table.entries.iter().enumerate() {
        let mut cells = Vec::new();
        for (j, e) in row.iter().enumerate() {
            match e {
                Entry::Combination(c) => {
                    cells.push(format_combination(c, &labels));
                    for (k, v) in c.iter().enumerate() {
                        if *v != BigRational::from_integer(0.into()) {
                            constants.push(StructureConstant {
                                i: labels[i].clone(),
                                j: labels[j].clone(),
                                k: labels[k].clone(),
                                value: v.to_string(),
                            });
                        }
                    }
                }
                Entry::NotInSpan(f) => {
                    cells.push("NOT-IN-SPAN".into());
                    report.diagnostics.push(format!(
                        "[{}, {}] = {f} leaves the span of the basis",
                        labels[i], labels[j]
                    ));
                }
            }
        }
        entries.push(cells);
    }
    let (source, spec) = match &opts.reference {
        Some(r) => (r.name.clone(), &r.spec),
        None => (input.name.clone(), &pb.spec),
    };
    let reference = match &spec.commutators {
        Some(c) => {
            let expected = reference_entries(c, &labels)?;
            let mismatches: Vec<String> = table_mismatches(&table, &expected)
                .into_iter()
                .map(|(i, j)| format!("[{}, {}]", labels[i], labels[j]))
                .collect();
            let n = labels.len();
            if !mismatches.is_empty() {
                report.diagnostics.push(format!(
                    "{} of {} entries differ from the table in {source}",
                    mismatches.len(),
                    n * n
                ));
            }
            Some(TableMatch {
                source,
                matched: n * n - mismatches.len(),
                total: n * n,
                mismatches,
                reference_antisymmetric: table_is_antisymmetric(&expected),
            })
        }
        None => None,
    };
    report.commutators = Some(CommutatorSection {
        basis: printed,
        entries,
        structure_constants: constants,
        antisymmetric: table.antisymmetric(),
        jacobi: table.jacobi(),
        closed: table.closed(),
        reference,
        labels,
    });
    Ok(report)
}

fn compare(re: &ReducedEquation, reference: &Poly, seed: u64, section: &str) -> Result<ComparisonEntry> {
    let r = lift_dependent(reference, &re.function);
    let fiber: BTreeSet<Var> = re
        .expression
        .vars()
        .into_iter()
        .chain(r.vars())
        .filter(|v| v.as_jet().is_some_and(|j| j.dependent() == &re.function))
        .collect();
    let p = equations_proportional(&re.expression, &r, &fiber, seed, PROPORTIONALITY_TOL, section)?;
    let alignment = align_with_reference(&re.expression, &r, &re.function).map(|a| AlignmentEntry {
        exact: a.exact(),
        power: a.power,
        multiplier: a.multiplier.to_string(),
        difference: a.difference.to_string(),
    });
    Ok(ComparisonEntry {
        reference: r.to_string(),
        proportional: p.proportional,
        flagged: !p.proportional,
        base_points: p.base_points,
        fiber_points: p.fiber_points,
        ratios: p.ratios,
        max_spread: p.max_spread,
        factor_varies: p.factor_varies,
        tolerance: p.tolerance,
        seed,
        alignment,
    })
}

fn mismatch_note(name: &str, c: &ComparisonEntry) -> String {
    let mut s = format!("{name}: reduced equation is not proportional to the reference");
    if let Some(a) = &c.alignment {
        if a.exact {
            s.push_str(&format!(
                "; it equals the reference times {} after multiplying by the function to the power {}",
                a.multiplier, a.power
            ));
        } else {
            s.push_str(&format!(
                "; closest alignment (power {}, multiplier {}) leaves {}",
                a.power, a.multiplier, a.difference
            ));
        }
    }
    s
}

fn reduction_entry(
    name: &str,
    stage: u32,
    source: &Poly,
    cov: &ChangeOfVariables,
    re: &ReducedEquation,
    reference: Option<&Poly>,
    pb: &Problem,
) -> Result<(ReductionEntry, Option<String>)> {
    let settings = &pb.spec.settings;
    let c = check_consistency(source, cov, re, settings, name)?;
    let comparison = reference
        .map(|r| compare(re, r, settings.seed, &format!("compare/{name}")))
        .transpose()?;
    let note = comparison
        .as_ref()
        .filter(|c| c.flagged)
        .map(|c| mismatch_note(name, c));
    Ok((
        ReductionEntry {
            name: name.to_string(),
            stage,
            function: re.function.to_string(),
            variables: re.variables.iter().map(Symbol::to_string).collect(),
            order: re.order(),
            equation: re.expression.to_string(),
            factor: re.factor.to_string(),
            fiber_free: re.fiber_free,
            consistency: ConsistencyEntry {
                verdict: Verdict::of(c.passed() && c.points >= settings.points),
                points: c.points,
                max_relative: c.max_relative,
                tolerance: c.tolerance,
                resampled: c.resampled,
                seed: settings.seed,
            },
            comparison,
        },
        note,
    ))
}

/// Similarity reductions with their consistency checks and comparisons
/// against the reference equations.
pub fn reduce(input: &Input, opts: &Options) -> Result<Report> {
    let pb = Problem::new(input, opts)?;
    let (delta, _) = pb.equation()?;
    let chosen: Vec<_> = match &opts.subst {
        Some(n) => vec![pb
            .spec
            .substitution(n)
            .ok_or_else(|| Error::Input(format!("no substitution named {n}")))?],
        None => pb.spec.substitutions.iter().collect(),
    };
    if chosen.is_empty() {
        return Err(Error::Input(format!("{} declares no substitutions", input.name)));
    }
    if opts.stage2 {
        if let Some(s) = chosen.iter().find(|s| s.stage2.is_none()) {
            if opts.subst.is_some() {
                return Err(Error::Input(format!("substitution {} has no second stage", s.name)));
            }
        }
    }
    let mut report = pb.report("reduce");
    let seed = pb.spec.settings.seed;
    for s in chosen {
        let cov = ChangeOfVariables::from_stage(&s.stage1, &pb.spec.independents)?;
        cov.check_rank(&pb.spec.independents, seed, &s.name)?;
        let re = apply_similarity(&delta, &cov)?;
        let reference = s.stage1.reference.as_ref().map(|e| e.to_poly());
        let (entry, note) = reduction_entry(&s.name, 1, &delta, &cov, &re, reference.as_ref(), &pb)?;
        report.reductions.push(entry);
        report.diagnostics.extend(note);
        if !re.fiber_free {
            report.diagnostics.push(format!(
                "{}: reduced equation still depends on the eliminated variables",
                s.name
            ));
        }
        if let (true, Some(st2)) = (opts.stage2, &s.stage2) {
            let name = format!("{}/stage2", s.name);
            let cov2 = ChangeOfVariables::from_stage(st2, &s.stage1.new_vars)?;
            cov2.check_rank(&s.stage1.new_vars, seed, &name)?;
            let re2 = second_stage_reduce(&re, &cov2)?;
            let reference = st2.reference.as_ref().map(|e| e.to_poly());
            let (entry, note) = reduction_entry(&name, 2, &re.expression, &cov2, &re2, reference.as_ref(), &pb)?;
            report.reductions.push(entry);
            report.diagnostics.extend(note);
        }
    }
    Ok(report)
}

/// `GEN:EPS` with `EPS` rational (`1/2`) or decimal (`0.5`).
pub fn parse_transform(s: &str) -> Result<(String, BigRational)> {
    let (generator, eps) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Input(format!("transform '{s}' is not of the form GEN:EPS")))?;
    let eps = parse_expression(eps.trim())
        .ok()
        .and_then(|e| e.to_poly().as_constant())
        .ok_or_else(|| Error::Input(format!("'{eps}' is not a rational group parameter")))?;
    Ok((generator.trim().to_string(), eps))
}

fn verification(name: &str, solution: &Poly, transform: Option<String>, r: ResidualReport) -> VerificationEntry {
    VerificationEntry {
        name: name.to_string(),
        status: if r.pass { Status::Pass } else { Status::Fail },
        transform,
        solution: Some(solution.to_string()),
        reason: None,
        seed: r.seed,
        tolerance: r.tolerance,
        max_abs: r.max_abs,
        median_abs: r.median_abs,
        max_normalized: r.max_normalized,
        exact: r.exact,
        structural: r.structural.map(|s| s.to_string()),
        excluded: r.excluded,
        points: r
            .points
            .into_iter()
            .map(|p| PointEntry {
                coordinates: p
                    .coordinates
                    .into_iter()
                    .map(|(s, v)| (s.to_string(), v.to_string()))
                    .collect(),
                residual: p.residual,
                scale: p.scale,
                normalized: p.normalized,
                exact_zero: p.exact_zero,
            })
            .collect(),
    }
}

fn unsampled(name: &str, status: Status, transform: Option<String>, reason: String, pb: &Problem) -> VerificationEntry {
    VerificationEntry {
        name: name.to_string(),
        status,
        transform,
        solution: None,
        reason: Some(reason),
        seed: pb.spec.settings.seed,
        tolerance: pb.spec.settings.tol,
        max_abs: 0.0,
        median_abs: 0.0,
        max_normalized: 0.0,
        exact: false,
        structural: None,
        excluded: BTreeMap::new(),
        points: Vec::new(),
    }
}

/// Residuals of the named closed-form solutions, optionally after moving
/// them along the flow of a declared generator.
pub fn verify(input: &Input, opts: &Options) -> Result<Report> {
    let pb = Problem::new(input, opts)?;
    let (delta, dep) = pb.equation()?;
    let chosen: Vec<_> = match (&opts.solution, opts.all) {
        (Some(n), false) => vec![pb
            .spec
            .solution(n)
            .ok_or_else(|| Error::Input(format!("no solution named {n}")))?],
        (Some(_), true) => return Err(Error::Input("--solution and --all are exclusive".into())),
        (None, _) => pb.spec.solutions.iter().collect(),
    };
    if chosen.is_empty() {
        return Err(Error::Input(format!("{} declares no solutions", input.name)));
    }
    let action = match &opts.transform {
        Some(t) => {
            let (label, eps) = parse_transform(t)?;
            let (_, field) = pb
                .fields()?
                .into_iter()
                .find(|(l, _)| *l == label)
                .ok_or_else(|| Error::Input(format!("no field named {label}")))?;
            Some(GroupAction::new(label, field, eps)?)
        }
        None => None,
    };
    let shown = action.as_ref().map(|a| format!("{}:{}", a.label, a.epsilon));
    let mut report = pb.report("verify");
    let settings = &pb.spec.settings;
    let independents = &pb.spec.independents;
    for s in chosen {
        let candidate = match Candidate::from_spec(s, independents) {
            Ok(c) => c,
            Err(Error::UnsupportedFunction(f)) => {
                let reason = format!("uses unsupported function {f}");
                report
                    .verifications
                    .push(unsampled(&s.name, Status::Skipped, shown.clone(), reason, &pb));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (candidate, outcome) = match &action {
            Some(a) => {
                let moved = transform_solution(&candidate, a)?;
                let map = a.point_map(&a.epsilon);
                let r = residual_mapped(&delta, &dep, independents, &moved, settings, &map);
                (moved, r)
            }
            None => {
                let r = residual(&delta, &dep, independents, &candidate, settings);
                (candidate, r)
            }
        };
        match outcome {
            Ok(r) => report
                .verifications
                .push(verification(&s.name, &candidate.u, shown.clone(), r)),
            Err(Error::EmptySampleRegion(why)) => {
                report
                    .verifications
                    .push(unsampled(&s.name, Status::FailedSampling, shown.clone(), why, &pb));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_parameters() {
        let (g, e) = parse_transform("V3:0.5").unwrap();
        assert_eq!(g, "V3");
        assert_eq!(e, BigRational::new(1.into(), 2.into()));
        assert_eq!(
            parse_transform("V1:-3/4").unwrap().1,
            BigRational::new((-3).into(), 4.into())
        );
        assert!(parse_transform("V1").is_err());
        assert!(parse_transform("V1:x").is_err());
    }
}
