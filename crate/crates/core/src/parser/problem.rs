use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::expr::{describe, parse_expr, syntax, Cursor, Kind, Scope};
use super::lexer::{lex, Tok, Token};
use super::ParseError;
use crate::expr::{Expr, JetCoordinate, Poly, Symbol, Var};

/// Degrees of the polynomial ansatz for the infinitesimals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnsatzDegrees {
    pub independent: u32,
    pub dependent: u32,
}

impl Default for AnsatzDegrees {
    fn default() -> Self {
        AnsatzDegrees {
            independent: 2,
            dependent: 1,
        }
    }
}

/// Sampling and tolerance settings shared by every randomized check.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    pub points: usize,
    /// Variables whose value must stay away from zero.
    pub exclude: Vec<Symbol>,
    pub box_lo: BigRational,
    pub box_hi: BigRational,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 42,
            tol: 1e-9,
            points: 20,
            exclude: Vec::new(),
            box_lo: BigRational::from_integer(BigInt::from(1)),
            box_hi: BigRational::from_integer(BigInt::from(3)),
        }
    }
}

/// One stage of a similarity substitution: `dep = A * G(new vars)` with the
/// new variables given as functions of the old ones.
#[derive(Clone, Debug, PartialEq)]
pub struct StageSpec {
    /// The dependent variable being replaced.
    pub dependent: Symbol,
    /// Right-hand side of `dep = ...`, linear in the new function.
    pub dependent_expr: Expr,
    pub function: Symbol,
    pub new_vars: Vec<Symbol>,
    pub forward: Vec<(Symbol, Expr)>,
    /// Old variables expressed through new variables and spectators.
    pub inverse: Vec<(Symbol, Expr)>,
    /// Coordinates completing the new variables to a full chart. A spectator
    /// without a definition is an old variable kept as is.
    pub spectators: Vec<(Symbol, Option<Expr>)>,
    pub reference: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionSpec {
    pub name: String,
    pub stage1: StageSpec,
    pub stage2: Option<StageSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolutionBody {
    Closed(Expr),
    /// Uses a function outside the supported grammar.
    Unsupported {
        function: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSpec {
    pub name: String,
    pub body: SolutionBody,
    pub bindings: Vec<(Symbol, BigRational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    /// Coefficient per variable name; absent variables have coefficient 0.
    pub components: Vec<(Symbol, Expr)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorSpec {
    /// Row label and one entry per column, in field declaration order.
    pub rows: Vec<(String, Vec<Expr>)>,
}

/// A family of infinitesimals depending linearly on parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct InfinitesimalSpec {
    pub name: String,
    pub params: Vec<Symbol>,
    pub components: Vec<(Symbol, Expr)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub independents: Vec<Symbol>,
    pub dependent: Option<Symbol>,
    pub constants: Vec<Symbol>,
    pub equation: Option<Expr>,
    pub leading: Option<JetCoordinate>,
    pub ansatz: AnsatzDegrees,
    pub settings: Settings,
    pub substitutions: Vec<SubstitutionSpec>,
    pub solutions: Vec<SolutionSpec>,
    pub fields: Vec<FieldSpec>,
    pub commutators: Option<CommutatorSpec>,
    pub infinitesimals: Vec<InfinitesimalSpec>,
}

impl ProblemSpec {
    /// The equation in normal form, with the dependent variable as a jet.
    pub fn equation_poly(&self) -> Option<Poly> {
        self.equation.as_ref().map(Expr::to_poly)
    }

    pub fn substitution(&self, name: &str) -> Option<&SubstitutionSpec> {
        self.substitutions.iter().find(|s| s.name == name)
    }

    pub fn solution(&self, name: &str) -> Option<&SolutionSpec> {
        self.solutions.iter().find(|s| s.name == name)
    }

    fn base_scope(&self) -> Scope {
        let mut s = Scope::closed()
            .with(&self.independents, Kind::Variable)
            .with(&self.constants, Kind::Variable);
        if let Some(d) = &self.dependent {
            s.declare(d.name(), Kind::Dependent);
        }
        s
    }
}

struct Parser<'a> {
    cur: Cursor<'a>,
    spec: ProblemSpec,
}

fn validation(t: &Token, message: impl Into<String>) -> ParseError {
    ParseError::Validation(format!("line {}: {}", t.line, message.into()))
}

impl<'a> Parser<'a> {
    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        let t = self.cur.next();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            _ => Err(syntax(t, format!("expected end of line, found {}", describe(&t.tok)))),
        }
    }

    fn names_to_eol(&mut self) -> Result<Vec<(&'a Token, Symbol)>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Ident(n) = &self.cur.peek().tok {
            let t = self.cur.next();
            out.push((t, Symbol::new(n)));
        }
        Ok(out)
    }

    fn declare_names(&mut self) -> Result<Vec<Symbol>, ParseError> {
        let names = self.names_to_eol()?;
        if names.is_empty() {
            return Err(syntax(self.cur.peek(), "expected at least one name"));
        }
        let mut seen: BTreeSet<Symbol> = self
            .spec
            .independents
            .iter()
            .chain(&self.spec.constants)
            .chain(&self.spec.dependent)
            .cloned()
            .collect();
        let mut out = Vec::new();
        for (t, s) in names {
            if is_reserved(s.name()) {
                return Err(syntax(t, format!("'{s}' is a reserved word")));
            }
            if !seen.insert(s.clone()) {
                return Err(validation(t, format!("'{s}' is declared twice")));
            }
            out.push(s);
        }
        self.end_of_statement()?;
        Ok(out)
    }

    fn number(&mut self) -> Result<(&'a Token, BigRational), ParseError> {
        let neg = self.cur.eat_punct('-');
        let t = self.cur.next();
        match &t.tok {
            Tok::Number(n) => Ok((t, if neg { -n.clone() } else { n.clone() })),
            other => Err(syntax(t, format!("expected a number, found {}", describe(other)))),
        }
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        let (t, n) = self.number()?;
        if !n.is_integer() {
            return Err(syntax(t, "expected a non-negative integer"));
        }
        n.to_integer()
            .to_u64()
            .ok_or_else(|| syntax(t, "expected a non-negative integer"))
    }

    fn key(&mut self) -> Result<(&'a Token, &'a str), ParseError> {
        let (t, k) = self.cur.expect_ident()?;
        self.cur.expect_punct('=')?;
        Ok((t, k))
    }

    fn statement(&mut self) -> Result<bool, ParseError> {
        self.cur.skip_newlines = false;
        let t = self.cur.next();
        let kw = match &t.tok {
            Tok::Eof => return Ok(false),
            Tok::Newline => return Ok(true),
            Tok::Ident(k) => k.as_str(),
            other => return Err(syntax(t, format!("expected a statement, found {}", describe(other)))),
        };
        match kw {
            "independent" => {
                let names = self.declare_names()?;
                self.spec.independents.extend(names);
            }
            "dependent" => {
                if self.spec.dependent.is_some() {
                    return Err(validation(t, "exactly one dependent variable is supported"));
                }
                let names = self.declare_names()?;
                if names.len() != 1 {
                    return Err(validation(t, "exactly one dependent variable is supported"));
                }
                self.spec.dependent = names.into_iter().next();
            }
            "constant" => {
                let names = self.declare_names()?;
                self.spec.constants.extend(names);
            }
            "equation" => {
                if self.spec.dependent.is_none() {
                    return Err(validation(t, "'equation' requires a prior 'dependent' declaration"));
                }
                if matches!(self.cur.peek().tok, Tok::Newline | Tok::Eof) {
                    return Err(validation(t, "equation has an empty body"));
                }
                let scope = self.spec.base_scope();
                let e = parse_expr(&mut self.cur, &scope)?;
                self.end_of_statement()?;
                self.spec.equation = Some(e);
            }
            "leading" => {
                let scope = self.spec.base_scope();
                let at = self.cur.peek();
                let e = parse_expr(&mut self.cur, &scope)?;
                self.end_of_statement()?;
                match e {
                    Expr::Jet(j) if j.order() > 0 => self.spec.leading = Some(j),
                    _ => return Err(syntax(at, "leading must be a derivative D(u, ...)")),
                }
            }
            "ansatz" => {
                while !matches!(self.cur.peek().tok, Tok::Newline | Tok::Eof) {
                    let (kt, k) = self.key()?;
                    let v = self.integer()? as u32;
                    match k {
                        "indep_degree" => self.spec.ansatz.independent = v,
                        "dep_degree" => self.spec.ansatz.dependent = v,
                        _ => return Err(syntax(kt, format!("unknown ansatz key '{k}'"))),
                    }
                }
                self.end_of_statement()?;
            }
            "settings" => self.settings()?,
            "substitution" => {
                let (_, name) = self.cur.expect_ident()?;
                let dependent = self
                    .spec
                    .dependent
                    .clone()
                    .ok_or_else(|| validation(t, "'substitution' requires a prior 'dependent' declaration"))?;
                let scope = self.spec.base_scope();
                let (stage1, stage2) = self.stage(&scope, &dependent, &self.spec.independents.clone(), true)?;
                self.spec.substitutions.push(SubstitutionSpec {
                    name: name.to_string(),
                    stage1,
                    stage2,
                });
            }
            "solution" => self.solution()?,
            "field" => self.field()?,
            "commutators" => self.commutators(t)?,
            "infinitesimal" => self.infinitesimal()?,
            other => return Err(syntax(t, format!("unknown statement '{other}'"))),
        }
        Ok(true)
    }

    fn settings(&mut self) -> Result<(), ParseError> {
        while !matches!(self.cur.peek().tok, Tok::Newline | Tok::Eof) {
            let (kt, k) = self.cur.expect_ident()?;
            if k == "exclude" {
                let st = self.cur.next();
                let Tok::Str(body) = &st.tok else {
                    return Err(syntax(st, "expected a quoted predicate such as \"u=0\""));
                };
                let compact: String = body.chars().filter(|c| !c.is_whitespace()).collect();
                let Some(name) = compact.strip_suffix("=0") else {
                    return Err(syntax(st, "only predicates of the form \"name=0\" are supported"));
                };
                self.spec.settings.exclude.push(Symbol::new(name));
                continue;
            }
            self.cur.expect_punct('=')?;
            match k {
                "seed" => self.spec.settings.seed = self.integer()?,
                "points" => self.spec.settings.points = self.integer()? as usize,
                "tol" => {
                    let (nt, v) = self.number()?;
                    let v = v.to_f64().unwrap_or(f64::NAN);
                    if v.is_nan() || v <= 0.0 {
                        return Err(syntax(nt, "tolerance must be positive"));
                    }
                    self.spec.settings.tol = v;
                }
                "box" => {
                    let (_, lo) = self.number()?;
                    self.cur.expect_punct(':')?;
                    let (ht, hi) = self.number()?;
                    if hi <= lo {
                        return Err(syntax(ht, "box upper bound must exceed the lower bound"));
                    }
                    self.spec.settings.box_lo = lo;
                    self.spec.settings.box_hi = hi;
                }
                _ => return Err(syntax(kt, format!("unknown setting '{k}'"))),
            }
        }
        self.end_of_statement()
    }

    fn open_block(&mut self) -> Result<(), ParseError> {
        self.cur.skip_newlines = true;
        self.cur.expect_punct('{')
    }

    fn stage(
        &mut self,
        outer: &Scope,
        dependent: &Symbol,
        old_vars: &[Symbol],
        allow_nested: bool,
    ) -> Result<(StageSpec, Option<StageSpec>), ParseError> {
        self.open_block()?;
        let mut scope = outer.clone();
        let mut function: Option<(Symbol, Vec<Symbol>)> = None;
        let mut dependent_expr = None;
        let mut forward = Vec::new();
        let mut inverse = Vec::new();
        let mut spectators = Vec::new();
        let mut reference = None;
        let mut nested = None;
        let open_tok = self.cur.peek();
        while !self.cur.eat_punct('}') {
            let (t, word) = self.cur.expect_ident()?;
            match word {
                "function" => {
                    let (_, fname) = self.cur.expect_ident()?;
                    self.cur.expect_punct('(')?;
                    let mut vars = Vec::new();
                    loop {
                        let (_, v) = self.cur.expect_ident()?;
                        vars.push(Symbol::new(v));
                        if !self.cur.eat_punct(',') {
                            break;
                        }
                    }
                    self.cur.expect_punct(')')?;
                    scope.declare(fname, Kind::Dependent);
                    for v in &vars {
                        scope.declare(v.name(), Kind::Variable);
                    }
                    function = Some((Symbol::new(fname), vars));
                }
                "invert" => {
                    let (vt, v) = self.cur.expect_ident()?;
                    if !old_vars.iter().any(|o| o.name() == v) {
                        return Err(syntax(vt, format!("'{v}' is not a variable of the original equation")));
                    }
                    self.cur.expect_punct('=')?;
                    inverse.push((Symbol::new(v), parse_expr(&mut self.cur, &scope)?));
                }
                "spectator" => {
                    let (vt, v) = self.cur.expect_ident()?;
                    if self.cur.eat_punct('=') {
                        let e = parse_expr(&mut self.cur, &scope)?;
                        scope.declare(v, Kind::Variable);
                        spectators.push((Symbol::new(v), Some(e)));
                    } else {
                        if !old_vars.iter().any(|o| o.name() == v) {
                            return Err(syntax(vt, format!("'{v}' is not a variable of the original equation")));
                        }
                        spectators.push((Symbol::new(v), None));
                    }
                }
                "reference" => {
                    reference = Some(parse_expr(&mut self.cur, &scope)?);
                }
                "stage2" => {
                    if !allow_nested {
                        return Err(syntax(t, "stages nest only one level deep"));
                    }
                    let Some((f, vars)) = &function else {
                        return Err(syntax(t, "'function' must precede 'stage2'"));
                    };
                    let mut inner = scope.clone();
                    inner.declare(f.name(), Kind::Dependent);
                    let (s2, _) = self.stage(&inner, f, vars, false)?;
                    self.cur.skip_newlines = true;
                    nested = Some(s2);
                    continue;
                }
                name if name == dependent.name() => {
                    self.cur.expect_punct('=')?;
                    dependent_expr = Some(parse_expr(&mut self.cur, &scope)?);
                }
                name => {
                    let Some((_, vars)) = &function else {
                        return Err(syntax(t, "'function' must come first in a substitution"));
                    };
                    if !vars.iter().any(|v| v.name() == name) {
                        return Err(syntax(t, format!("'{name}' is not a variable of the new function")));
                    }
                    self.cur.expect_punct('=')?;
                    forward.push((Symbol::new(name), parse_expr(&mut self.cur, &scope)?));
                }
            }
            self.cur.expect_punct(';')?;
        }
        let Some((function, new_vars)) = function else {
            return Err(validation(open_tok, "substitution lacks a 'function' declaration"));
        };
        let Some(dependent_expr) = dependent_expr else {
            return Err(validation(
                open_tok,
                format!("substitution does not define '{dependent}'"),
            ));
        };
        for v in &new_vars {
            if !forward.iter().any(|(n, _)| n == v) {
                return Err(validation(open_tok, format!("substitution does not define '{v}'")));
            }
        }
        let stage = StageSpec {
            dependent: dependent.clone(),
            dependent_expr,
            function,
            new_vars,
            forward,
            inverse,
            spectators,
            reference,
        };
        Ok((stage, nested))
    }

    fn bindings(&mut self, out: &mut Vec<(Symbol, BigRational)>) -> Result<(), ParseError> {
        loop {
            let (t, name) = self.cur.expect_ident()?;
            if !self.spec.constants.iter().any(|c| c.name() == name) {
                return Err(ParseError::UnknownSymbol {
                    line: t.line,
                    column: t.column,
                    name: name.to_string(),
                });
            }
            self.cur.expect_punct('=')?;
            let at = self.cur.peek();
            let value = parse_expr(&mut self.cur, &Scope::closed())?;
            let Some(v) = value.to_poly().as_constant() else {
                return Err(syntax(at, "binding must be a rational constant"));
            };
            out.push((Symbol::new(name), v));
            if !self.cur.eat_punct(',') {
                return Ok(());
            }
        }
    }

    fn skip_to_semicolon(&mut self) {
        while !matches!(self.cur.peek().tok, Tok::Punct(';') | Tok::Punct('}') | Tok::Eof) {
            self.cur.next();
        }
    }

    fn solution(&mut self) -> Result<(), ParseError> {
        let (_, name) = self.cur.expect_ident()?;
        self.open_block()?;
        let dependent = self.spec.dependent.clone();
        let scope = Scope::closed()
            .with(&self.spec.independents, Kind::Variable)
            .with(&self.spec.constants, Kind::Variable);
        let mut body = None;
        let mut bindings = Vec::new();
        let open_tok = self.cur.peek();
        while !self.cur.eat_punct('}') {
            let (t, word) = self.cur.expect_ident()?;
            if word == "bind" {
                self.bindings(&mut bindings)?;
            } else if dependent.as_ref().is_some_and(|d| d.name() == word) {
                self.cur.expect_punct('=')?;
                body = Some(match parse_expr(&mut self.cur, &scope) {
                    Ok(e) => SolutionBody::Closed(e),
                    Err(ParseError::UnsupportedFunction { name, .. }) => {
                        self.skip_to_semicolon();
                        SolutionBody::Unsupported { function: name }
                    }
                    Err(e) => return Err(e),
                });
            } else {
                return Err(syntax(t, format!("unexpected '{word}' in solution block")));
            }
            self.cur.expect_punct(';')?;
        }
        let body = body.ok_or_else(|| validation(open_tok, format!("solution '{name}' has no formula")))?;
        if self.spec.solutions.iter().any(|s| s.name == name) {
            return Err(validation(open_tok, format!("solution '{name}' is defined twice")));
        }
        self.spec.solutions.push(SolutionSpec {
            name: name.to_string(),
            body,
            bindings,
        });
        Ok(())
    }

    fn components(&mut self, scope: &Scope) -> Result<Vec<(Symbol, Expr)>, ParseError> {
        let mut out: Vec<(Symbol, Expr)> = Vec::new();
        while !self.cur.eat_punct('}') {
            let (t, v) = self.cur.expect_ident()?;
            let known = self
                .spec
                .independents
                .iter()
                .chain(&self.spec.dependent)
                .any(|s| s.name() == v);
            if !known {
                return Err(ParseError::UnknownSymbol {
                    line: t.line,
                    column: t.column,
                    name: v.to_string(),
                });
            }
            if out.iter().any(|(s, _)| s.name() == v) {
                return Err(validation(t, format!("component '{v}' given twice")));
            }
            self.cur.expect_punct('=')?;
            out.push((Symbol::new(v), parse_expr(&mut self.cur, scope)?));
            self.cur.expect_punct(';')?;
        }
        Ok(out)
    }

    fn field(&mut self) -> Result<(), ParseError> {
        let (t, name) = self.cur.expect_ident()?;
        if self.spec.fields.iter().any(|f| f.name == name) {
            return Err(validation(t, format!("field '{name}' is defined twice")));
        }
        self.open_block()?;
        let scope = self.spec.base_scope();
        let components = self.components(&scope)?;
        self.spec.fields.push(FieldSpec {
            name: name.to_string(),
            components,
        });
        Ok(())
    }

    fn commutators(&mut self, kw: &Token) -> Result<(), ParseError> {
        self.open_block()?;
        let names: Vec<Symbol> = self.spec.fields.iter().map(|f| Symbol::new(&f.name)).collect();
        if names.is_empty() {
            return Err(validation(kw, "'commutators' must follow the field declarations"));
        }
        let scope = Scope::closed().with(&names, Kind::Field);
        let mut rows = Vec::new();
        while !self.cur.eat_punct('}') {
            let (t, label) = self.cur.expect_ident()?;
            if !names.iter().any(|n| n.name() == label) {
                return Err(ParseError::UnknownSymbol {
                    line: t.line,
                    column: t.column,
                    name: label.to_string(),
                });
            }
            self.cur.expect_punct(':')?;
            let mut entries = Vec::new();
            loop {
                entries.push(parse_expr(&mut self.cur, &scope)?);
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
            if entries.len() != names.len() {
                return Err(validation(
                    t,
                    format!("row '{label}' has {} entries, expected {}", entries.len(), names.len()),
                ));
            }
            self.cur.expect_punct(';')?;
            rows.push((label.to_string(), entries));
        }
        self.spec.commutators = Some(CommutatorSpec { rows });
        Ok(())
    }

    fn infinitesimal(&mut self) -> Result<(), ParseError> {
        let (_, name) = self.cur.expect_ident()?;
        self.open_block()?;
        let mut scope = self.spec.base_scope();
        let (t, word) = self.cur.expect_ident()?;
        if word != "params" {
            return Err(syntax(t, "an infinitesimal block starts with 'params'"));
        }
        let mut params = Vec::new();
        while let Tok::Ident(p) = &self.cur.peek().tok {
            self.cur.next();
            scope.declare(p, Kind::Variable);
            params.push(Symbol::new(p));
        }
        self.cur.expect_punct(';')?;
        let components = self.components(&scope)?;
        self.spec.infinitesimals.push(InfinitesimalSpec {
            name: name.to_string(),
            params,
            components,
        });
        Ok(())
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "D" | "exp" | "sqrt")
}

/// Parses a whole problem file and validates cross-references.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        cur: Cursor::new(&toks),
        spec: ProblemSpec {
            independents: Vec::new(),
            dependent: None,
            constants: Vec::new(),
            equation: None,
            leading: None,
            ansatz: AnsatzDegrees::default(),
            settings: Settings::default(),
            substitutions: Vec::new(),
            solutions: Vec::new(),
            fields: Vec::new(),
            commutators: None,
            infinitesimals: Vec::new(),
        },
    };
    while p.statement()? {}
    validate(&p.spec)?;
    Ok(p.spec)
}

fn validate(spec: &ProblemSpec) -> Result<(), ParseError> {
    if let Some(leading) = &spec.leading {
        let Some(eq) = spec.equation_poly() else {
            return Err(ParseError::Validation("'leading' given without an equation".into()));
        };
        let lead = Var::Jet(leading.clone());
        if !eq.contains_var(&lead) || eq.diff(&lead).is_zero() {
            return Err(ParseError::Validation(format!(
                "leading derivative {leading} does not occur in the equation"
            )));
        }
        if Some(leading.dependent()) != spec.dependent.as_ref() {
            return Err(ParseError::Validation(format!(
                "leading derivative {leading} is not a derivative of the dependent variable"
            )));
        }
    }
    if let Some(table) = &spec.commutators {
        if table.rows.len() != spec.fields.len() {
            return Err(ParseError::Validation(format!(
                "commutator table has {} rows for {} fields",
                table.rows.len(),
                spec.fields.len()
            )));
        }
    }
    let mut names = BTreeSet::new();
    for s in &spec.substitutions {
        if !names.insert(&s.name) {
            return Err(ParseError::Validation(format!(
                "substitution '{}' is defined twice",
                s.name
            )));
        }
    }
    Ok(())
}
