use std::fmt;
use std::sync::Arc;

/// An interned variable or constant name.
///
/// Symbols order lexicographically by name, which is what makes normalized
/// output byte-reproducible across runs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Symbol {
    fn from(name: &str) -> Self {
        Symbol::new(name)
    }
}

/// A derivative of a dependent variable, identified by the multiset of
/// independent variables it is differentiated by.
///
/// The multiset is kept sorted, so `D(u,x,y)` and `D(u,y,x)` are the same
/// coordinate. The empty multiset is the dependent variable itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetCoordinate {
    dependent: Symbol,
    index: Vec<Symbol>,
}

impl JetCoordinate {
    pub fn new(dependent: Symbol, index: impl IntoIterator<Item = Symbol>) -> Self {
        let mut index: Vec<Symbol> = index.into_iter().collect();
        index.sort();
        JetCoordinate { dependent, index }
    }

    /// The order-zero coordinate, i.e. the dependent variable itself.
    pub fn base(dependent: Symbol) -> Self {
        JetCoordinate {
            dependent,
            index: Vec::new(),
        }
    }

    pub fn dependent(&self) -> &Symbol {
        &self.dependent
    }

    pub fn index(&self) -> &[Symbol] {
        &self.index
    }

    pub fn order(&self) -> usize {
        self.index.len()
    }

    /// Multiplicity of `var` in the multi-index.
    pub fn count(&self, var: &Symbol) -> usize {
        self.index.iter().filter(|s| *s == var).count()
    }

    /// The coordinate differentiated once more by `var`.
    pub fn extend(&self, var: &Symbol) -> Self {
        let mut index = self.index.clone();
        let pos = index.partition_point(|s| s <= var);
        index.insert(pos, var.clone());
        JetCoordinate {
            dependent: self.dependent.clone(),
            index,
        }
    }

    /// The coordinate with one occurrence of `var` removed, if present.
    pub fn reduce(&self, var: &Symbol) -> Option<Self> {
        let pos = self.index.iter().position(|s| s == var)?;
        let mut index = self.index.clone();
        index.remove(pos);
        Some(JetCoordinate {
            dependent: self.dependent.clone(),
            index,
        })
    }
}

impl fmt::Display for JetCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.is_empty() {
            return write!(f, "{}", self.dependent);
        }
        write!(f, "D({}", self.dependent)?;
        for s in &self.index {
            write!(f, ",{s}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for JetCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A leaf variable of the normal form: either a plain symbol or a jet
/// coordinate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Sym(Symbol),
    Jet(JetCoordinate),
}

impl Var {
    pub fn sym(name: &str) -> Self {
        Var::Sym(Symbol::new(name))
    }

    pub fn as_jet(&self) -> Option<&JetCoordinate> {
        match self {
            Var::Jet(j) => Some(j),
            Var::Sym(_) => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Var::Sym(s) => Some(s),
            Var::Jet(_) => None,
        }
    }
}

impl From<Symbol> for Var {
    fn from(s: Symbol) -> Self {
        Var::Sym(s)
    }
}

impl From<JetCoordinate> for Var {
    fn from(j: JetCoordinate) -> Self {
        Var::Jet(j)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Sym(s) => write!(f, "{s}"),
            Var::Jet(j) => write!(f, "{j}"),
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
