//! First-order terms, positions and the symbol table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sexpr::{self, Bracket, ReadError, Sexp, Span};

pub type Name = Arc<str>;

/// Head symbol of the equation term built by [`Equation::to_term`].
pub const EQ: &str = "=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Function,
    Constructor,
    Defined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: Name,
    pub arity: usize,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("{span}: `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        span: Span,
    },
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { name: String, span: Span },
    #[error("{span}: variable `{name}` used as a function head")]
    VariableHead { name: String, span: Span },
    #[error("{span}: unexpected {what} in a plain term")]
    Unexpected { what: &'static str, span: Span },
    #[error("{0}: empty application")]
    EmptyApplication(Span),
    #[error("symbol `{0}` declared twice with different arities")]
    Redeclared(String),
}

/// Symbol table plus declared variables.
///
/// Identifiers that start with an uppercase letter, and identifiers declared
/// through [`Signature::declare_var`], are variables. Every other identifier
/// must be a declared symbol, unless the table is permissive, in which case
/// undeclared lowercase identifiers are declared as functions on first use.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    symbols: BTreeMap<Name, Symbol>,
    vars: BTreeMap<Name, Option<Name>>,
    permissive: bool,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn permissive() -> Self {
        Signature {
            permissive: true,
            ..Self::default()
        }
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    pub fn declare(&mut self, name: &str, arity: usize, kind: SymbolKind) -> Result<(), TermError> {
        if let Some(s) = self.symbols.get(name) {
            if s.arity != arity {
                return Err(TermError::Redeclared(name.to_string()));
            }
            return Ok(());
        }
        let name: Name = name.into();
        self.symbols.insert(name.clone(), Symbol { name, arity, kind });
        Ok(())
    }

    /// Declares `name` as a variable of the given sort (if known).
    pub fn declare_var(&mut self, name: &str, sort: Option<&str>) {
        self.vars.insert(name.into(), sort.map(Into::into));
    }

    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn var_sort(&self, name: &str) -> Option<&str> {
        self.vars.get(name).and_then(|s| s.as_deref())
    }

    pub fn is_var_name(&self, name: &str) -> bool {
        self.vars.contains_key(name) || name.chars().next().is_some_and(|c| c.is_uppercase())
    }

    pub fn parse_term(&mut self, text: &str) -> Result<Term, TermError> {
        let e = sexpr::read_one(text)?;
        self.term_from_sexp(&e)
    }

    pub fn term_from_sexp(&mut self, e: &Sexp) -> Result<Term, TermError> {
        match e {
            Sexp::Atom(a, span) => {
                if self.is_var_name(a) {
                    return Ok(Term::Var(a.as_str().into()));
                }
                self.head(a, 0, *span)?;
                Ok(Term::App(a.as_str().into(), Vec::new()))
            }
            Sexp::List(Bracket::Paren, items, span) => {
                let (head, args) = items.split_first().ok_or(TermError::EmptyApplication(*span))?;
                let Sexp::Atom(h, hspan) = head else {
                    return Err(TermError::Unexpected {
                        what: "compound head",
                        span: head.span(),
                    });
                };
                let args = args
                    .iter()
                    .map(|a| self.term_from_sexp(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.head(h, args.len(), *hspan)?;
                Ok(Term::App(h.as_str().into(), args))
            }
            Sexp::List(Bracket::Brace, _, span) => Err(TermError::Unexpected {
                what: "wavefront",
                span: *span,
            }),
            Sexp::List(Bracket::Square, _, span) => Err(TermError::Unexpected {
                what: "wavehole",
                span: *span,
            }),
        }
    }

    /// Checks (or, when permissive, records) the use of `name` with `arity` arguments.
    pub(crate) fn head(&mut self, name: &str, arity: usize, span: Span) -> Result<(), TermError> {
        if self.is_var_name(name) {
            return Err(TermError::VariableHead {
                name: name.to_string(),
                span,
            });
        }
        match self.symbols.get(name) {
            Some(s) if s.arity == arity => Ok(()),
            Some(s) => Err(TermError::Arity {
                name: name.to_string(),
                expected: s.arity,
                found: arity,
                span,
            }),
            None if self.permissive || name == EQ => {
                self.declare(name, arity, SymbolKind::Function)
            }
            None => Err(TermError::UnknownSymbol {
                name: name.to_string(),
                span,
            }),
        }
    }
}

/// A path of 1-based child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Self {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Position) -> Self {
        let mut p = self.0.clone();
        p.extend_from_slice(&other.0);
        Position(p)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("position {0} is not valid in this term")]
pub struct InvalidPosition(pub Position);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    App(Name, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(head.into(), args)
    }

    pub fn constant(name: &str) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn head(&self) -> Option<&str> {
        match self {
            Term::App(h, _) => Some(h),
            Term::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, a) => a,
            Term::Var(_) => &[],
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in order of first (leftmost, preorder) occurrence.
    pub fn vars_in_order(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.visit(&mut |_, t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn occurs(&self, v: &str) -> bool {
        match self {
            Term::Var(w) => &**w == v,
            Term::App(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Preorder (leftmost-outermost) traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&Position, &'a Term)) {
        fn go<'a>(t: &'a Term, p: &mut Vec<usize>, f: &mut impl FnMut(&Position, &'a Term)) {
            f(&Position(p.clone()), t);
            for (i, a) in t.args().iter().enumerate() {
                p.push(i + 1);
                go(a, p, f);
                p.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    /// All positions in preorder.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        self.visit(&mut |p, _| out.push(p.clone()));
        out
    }

    /// All positions in postorder (leftmost-innermost first).
    pub fn positions_innermost(&self) -> Vec<Position> {
        fn go(t: &Term, p: &mut Vec<usize>, out: &mut Vec<Position>) {
            for (i, a) in t.args().iter().enumerate() {
                p.push(i + 1);
                go(a, p, out);
                p.pop();
            }
            out.push(Position(p.clone()));
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn subterm_at(&self, p: &Position) -> Result<&Term, InvalidPosition> {
        let mut t = self;
        for &i in &p.0 {
            t = i
                .checked_sub(1)
                .and_then(|i| t.args().get(i))
                .ok_or_else(|| InvalidPosition(p.clone()))?;
        }
        Ok(t)
    }

    pub fn replace_at(&self, p: &Position, u: Term) -> Result<Term, InvalidPosition> {
        fn go(t: &Term, path: &[usize], u: Term) -> Option<Term> {
            let Some((&i, rest)) = path.split_first() else {
                return Some(u);
            };
            let Term::App(h, args) = t else { return None };
            let idx = i.checked_sub(1)?;
            let child = args.get(idx)?;
            let mut args = args.clone();
            args[idx] = go(child, rest, u)?;
            Some(Term::App(h.clone(), args))
        }
        go(self, &p.0, u).ok_or_else(|| InvalidPosition(p.clone()))
    }

    /// Renames every variable through `f`.
    pub fn rename(&self, f: &impl Fn(&Name) -> Name) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| a.rename(f)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(h, args) if args.is_empty() => f.write_str(h),
            Term::App(h, args) => {
                write!(f, "({h}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// An equation between two terms. Orientation, where it matters, is left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    /// The equation as the binary term `(= lhs rhs)`; positions `[1]` and `[2]` are the sides.
    pub fn to_term(&self) -> Term {
        Term::App(EQ.into(), vec![self.lhs.clone(), self.rhs.clone()])
    }

    pub fn from_term(t: &Term) -> Option<Equation> {
        match t {
            Term::App(h, args) if &**h == EQ && args.len() == 2 => {
                Some(Equation::new(args[0].clone(), args[1].clone()))
            }
            _ => None,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs == self.rhs
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = self.lhs.vars();
        self.rhs.collect_vars(&mut out);
        out
    }

    pub fn swap(&self) -> Equation {
        Equation::new(self.rhs.clone(), self.lhs.clone())
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> Equation {
        Equation::new(f(&self.lhs), f(&self.rhs))
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Returns a variable name based on `base` that is not in `taken`.
pub fn fresh_name(base: &str, taken: &BTreeSet<Name>) -> Name {
    if !taken.contains(base) {
        return base.into();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken.contains(n.as_str()))
        .unwrap()
        .into()
}
