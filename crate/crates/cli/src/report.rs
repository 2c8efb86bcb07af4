//! Structured command output. Reports carry no timings or paths, so the
//! same file, flags and seed always serialize to the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use lieze_core::parser::Settings;

pub const TOOL: &str = "lieze";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the problem file bytes.
    pub input_digest: String,
    pub settings: SettingsEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generators: Option<GeneratorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutators: Option<CommutatorSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reductions: Vec<ReductionEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verifications: Vec<VerificationEntry>,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn new(command: &str, input: &[u8], settings: &Settings, ansatz: [u32; 2]) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            input_digest: lieze_core::sampling::digest(input),
            settings: SettingsEcho::new(settings, ansatz),
            generators: None,
            commutators: None,
            reductions: Vec::new(),
            verifications: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.settings;
        let _ = writeln!(out, "{} {} {}", self.tool, self.version, self.command);
        let _ = writeln!(out, "input    sha256:{}", self.input_digest);
        let _ = writeln!(
            out,
            "settings seed={} tol={:e} points={} ansatz=({},{}) box={}:{}",
            s.seed, s.tolerance, s.points, s.ansatz[0], s.ansatz[1], s.sample_box[0], s.sample_box[1]
        );
        if let Some(g) = &self.generators {
            g.render(&mut out);
        }
        if let Some(c) = &self.commutators {
            c.render(&mut out);
        }
        if !self.reductions.is_empty() {
            let _ = writeln!(out, "\nreductions");
            for r in &self.reductions {
                r.render(&mut out);
            }
        }
        if !self.verifications.is_empty() {
            let _ = writeln!(out, "\nverifications");
            let rows: Vec<Vec<String>> = self.verifications.iter().map(VerificationEntry::row).collect();
            out.push_str(&table(
                &[
                    "solution",
                    "status",
                    "points",
                    "max |r|",
                    "max |r|/scale",
                    "exact",
                    "note",
                ],
                &rows,
            ));
        }
        if !self.diagnostics.is_empty() {
            let _ = writeln!(out, "\ndiagnostics");
            for d in &self.diagnostics {
                let _ = writeln!(out, "  - {d}");
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SettingsEcho {
    pub seed: u64,
    pub tolerance: f64,
    pub points: usize,
    pub ansatz: [u32; 2],
    pub exclude: Vec<String>,
    pub sample_box: [String; 2],
}

impl SettingsEcho {
    fn new(s: &Settings, ansatz: [u32; 2]) -> Self {
        SettingsEcho {
            seed: s.seed,
            tolerance: s.tol,
            points: s.points,
            ansatz,
            exclude: s.exclude.iter().map(|v| format!("{v}=0")).collect(),
            sample_box: [s.box_lo.to_string(), s.box_hi.to_string()],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifoldEntry {
    pub points: usize,
    pub max_normalized: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Generator {
    pub label: String,
    /// Coefficient of each `d<var>`, in the expression language.
    pub components: BTreeMap<String, String>,
    pub printed: String,
    pub on_manifold: ManifoldEntry,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpanMatch {
    pub source: String,
    pub labels: Vec<String>,
    pub verdict: Verdict,
    /// Reference fields outside the computed span.
    pub missing: Vec<String>,
    /// Computed generators outside the reference span.
    pub extra: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorSection {
    /// Results hold within a polynomial ansatz of these degrees.
    pub scope: String,
    pub unknowns: usize,
    pub equations: usize,
    pub cleared_power: u32,
    pub excluded_locus: Vec<String>,
    pub dimension: usize,
    pub generators: Vec<Generator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<SpanMatch>,
}

impl GeneratorSection {
    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "\ngenerators ({})", self.scope);
        let _ = writeln!(
            out,
            "  {} unknowns, {} determining equations, cleared by power {}",
            self.unknowns, self.equations, self.cleared_power
        );
        for l in &self.excluded_locus {
            let _ = writeln!(out, "  excluded locus: {l}");
        }
        let _ = writeln!(out, "  dimension {}", self.dimension);
        let rows: Vec<Vec<String>> = self
            .generators
            .iter()
            .map(|g| {
                vec![
                    g.label.clone(),
                    g.printed.clone(),
                    format!("{:.3e}", g.on_manifold.max_normalized),
                    g.on_manifold.verdict.as_str().into(),
                ]
            })
            .collect();
        out.push_str(&table(&["label", "field", "on-manifold", "verdict"], &rows));
        if let Some(r) = &self.reference {
            let _ = writeln!(
                out,
                "  span vs {} [{}]: {}",
                r.source,
                r.labels.join(", "),
                r.verdict.as_str()
            );
            for m in &r.missing {
                let _ = writeln!(out, "    not computed: {m}");
            }
            for m in &r.extra {
                let _ = writeln!(out, "    not in reference: {m}");
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureConstant {
    pub i: String,
    pub j: String,
    pub k: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableMatch {
    pub source: String,
    pub matched: usize,
    pub total: usize,
    pub mismatches: Vec<String>,
    pub reference_antisymmetric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorSection {
    pub labels: Vec<String>,
    pub basis: Vec<String>,
    /// Entry `[i][j]` is `[V_i, V_j]` in the basis.
    pub entries: Vec<Vec<String>>,
    pub structure_constants: Vec<StructureConstant>,
    pub antisymmetric: bool,
    pub jacobi: bool,
    pub closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<TableMatch>,
}

impl CommutatorSection {
    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "\ncommutators");
        for (l, b) in self.labels.iter().zip(&self.basis) {
            let _ = writeln!(out, "  {l} = {b}");
        }
        let mut header = vec!["[ , ]"];
        header.extend(self.labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = self
            .labels
            .iter()
            .zip(&self.entries)
            .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().cloned()).collect())
            .collect();
        out.push_str(&table(&header, &rows));
        let _ = writeln!(
            out,
            "  antisymmetric {}  jacobi {}  closed {}",
            yes(self.antisymmetric),
            yes(self.jacobi),
            yes(self.closed)
        );
        if let Some(r) = &self.reference {
            let _ = writeln!(out, "  vs {}: {}/{} entries match", r.source, r.matched, r.total);
            for m in &r.mismatches {
                let _ = writeln!(out, "    mismatch {m}");
            }
            if !r.reference_antisymmetric {
                let _ = writeln!(out, "    reference table is not antisymmetric");
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyEntry {
    pub points: usize,
    pub max_relative: f64,
    pub tolerance: f64,
    pub resampled: usize,
    pub seed: u64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlignmentEntry {
    /// The reference matches `expression * F^power / multiplier` up to `difference`.
    pub power: i32,
    pub multiplier: String,
    pub difference: String,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonEntry {
    pub reference: String,
    pub proportional: bool,
    pub flagged: bool,
    pub base_points: usize,
    pub fiber_points: usize,
    pub ratios: Vec<f64>,
    pub max_spread: f64,
    pub factor_varies: bool,
    pub tolerance: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionEntry {
    pub name: String,
    pub stage: u32,
    pub function: String,
    pub variables: Vec<String>,
    pub order: usize,
    pub equation: String,
    pub factor: String,
    pub fiber_free: bool,
    pub consistency: ConsistencyEntry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonEntry>,
}

impl ReductionEntry {
    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "  {} (stage {}): {}({}) order {}",
            self.name,
            self.stage,
            self.function,
            self.variables.join(", "),
            self.order
        );
        let _ = writeln!(out, "    factor      {}", self.factor);
        let _ = writeln!(out, "    equation    {}", self.equation);
        let c = &self.consistency;
        let _ = writeln!(
            out,
            "    consistency {} at {} points, max rel {:.3e} (tol {:e})",
            c.verdict.as_str(),
            c.points,
            c.max_relative,
            c.tolerance
        );
        if let Some(cmp) = &self.comparison {
            let verdict = if cmp.proportional { "PROPORTIONAL" } else { "MISMATCH" };
            let ratios: Vec<String> = cmp.ratios.iter().map(|r| format!("{r:.6e}")).collect();
            let _ = writeln!(
                out,
                "    reference   {verdict}{} ratios [{}] spread {:.3e}",
                if cmp.flagged { " (flagged)" } else { "" },
                ratios.join(", "),
                cmp.max_spread
            );
            if let Some(a) = &cmp.alignment {
                let _ = writeln!(
                    out,
                    "    alignment   power {} multiplier {} difference {}",
                    a.power, a.multiplier, a.difference
                );
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "SKIPPED")]
    Skipped,
    #[serde(rename = "FAILED-SAMPLING")]
    FailedSampling,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
            Status::FailedSampling => "FAILED-SAMPLING",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointEntry {
    pub coordinates: BTreeMap<String, String>,
    pub residual: f64,
    pub scale: f64,
    pub normalized: f64,
    pub exact_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationEntry {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub seed: u64,
    pub tolerance: f64,
    pub max_abs: f64,
    pub median_abs: f64,
    pub max_normalized: f64,
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural: Option<String>,
    pub excluded: BTreeMap<String, usize>,
    pub points: Vec<PointEntry>,
}

impl VerificationEntry {
    fn row(&self) -> Vec<String> {
        let note = match (&self.reason, &self.structural) {
            (Some(r), _) => r.clone(),
            (None, Some(v)) => format!("equation annihilates {v}-independent functions"),
            (None, None) => String::new(),
        };
        let sampled = !matches!(self.status, Status::Skipped | Status::FailedSampling);
        let name = match &self.transform {
            Some(t) => format!("{} @ {t}", self.name),
            None => self.name.clone(),
        };
        vec![
            name,
            self.status.as_str().into(),
            self.points.len().to_string(),
            if sampled {
                format!("{:.3e}", self.max_abs)
            } else {
                "-".into()
            },
            if sampled {
                format!("{:.3e}", self.max_normalized)
            } else {
                "-".into()
            },
            yes(self.exact).into(),
            note,
        ]
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Left-aligned columns separated by two spaces, indented by two.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::from(" ");
        for (c, w) in cells.zip(&widths) {
            let _ = write!(s, " {c:<w$} ");
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&mut header.iter().copied());
    for r in rows {
        out.push_str(&line(&mut r.iter().map(String::as_str)));
    }
    out
}
