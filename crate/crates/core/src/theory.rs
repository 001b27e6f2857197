//! Theories: datatypes, variable declarations, recursive definitions,
//! lemmas and conjectures, read from s-expression files.
//!
//! ```text
//! (datatype list (nil) (cons elem list))
//! (vars x y : list)
//! (def (append nil c) c)
//! (def (append (cons a b) c) (cons a (append b c)))
//! (lemma NAME lhs rhs)
//! (conjecture NAME lhs rhs)
//! ```
//!
//! Argument sorts that are not datatypes (such as `elem` above) are opaque.
//! Definitions are named `f.k` for the k-th equation defining `f`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::annotation::AnnTerm;
use crate::rewrite::Rule;
use crate::ripple::{ann_equation, derive_wave_rules, WaveRule};
use crate::sexpr::{self, ReadError, Sexp, Span};
use crate::term::{Equation, Name, Signature, SymbolKind, Term, TermError, EQ};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub name: Name,
    /// Argument sorts.
    pub args: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datatype {
    pub name: Name,
    pub constructors: Vec<Constructor>,
}

impl Datatype {
    pub fn constructor(&self, name: &str) -> Option<&Constructor> {
        self.constructors.iter().find(|c| &*c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaStatus {
    /// Stated in the theory, not yet proved.
    Stated,
    Proved,
    Assumed,
}

impl fmt::Display for LemmaStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaStatus::Stated => "stated",
            LemmaStatus::Proved => "proved",
            LemmaStatus::Assumed => "assumed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub name: Name,
    pub equation: Equation,
    pub status: LemmaStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("{span}: {message}")]
    Form { message: String, span: Span },
    #[error("`{name}` is declared twice")]
    Duplicate { name: String },
    #[error("`{function}` has no equation for {missing}")]
    Incomplete { function: String, missing: String },
    #[error("definition {name}: {message}")]
    BadDefinition { name: String, message: String },
    #[error("sort clash in {context}: {a} vs {b}")]
    SortClash { context: String, a: String, b: String },
}

fn form_error(message: impl Into<String>, span: Span) -> TheoryError {
    TheoryError::Form {
        message: message.into(),
        span,
    }
}

#[derive(Debug, Clone)]
pub struct Theory {
    pub signature: Signature,
    pub datatypes: Vec<Datatype>,
    pub defs: Vec<Rule>,
    pub lemmas: Vec<Lemma>,
    pub conjectures: Vec<(Name, Equation)>,
    /// Sorts of symbol argument slots; index 0 is the result.
    slot_sorts: BTreeMap<(Name, usize), Name>,
}

impl Theory {
    pub fn parse(text: &str) -> Result<Theory, TheoryError> {
        let forms = sexpr::read_all(text)?;
        let mut th = Theory {
            signature: Signature::new(),
            datatypes: Vec::new(),
            defs: Vec::new(),
            lemmas: Vec::new(),
            conjectures: Vec::new(),
            slot_sorts: BTreeMap::new(),
        };
        // Declarations first, so definitions may appear in any order.
        for f in &forms {
            let (kw, items, span) = keyword(f)?;
            match kw {
                "datatype" => th.read_datatype(items, span)?,
                "vars" => th.read_vars(items, span)?,
                "def" => th.declare_defined(items, span)?,
                "lemma" | "conjecture" => {}
                other => return Err(form_error(format!("unknown form `{other}`"), span)),
            }
        }
        let mut counts: BTreeMap<Name, usize> = BTreeMap::new();
        let mut names = BTreeSet::new();
        for f in &forms {
            let (kw, items, span) = keyword(f)?;
            match kw {
                "def" => {
                    let (l, r) = match items {
                        [l, r] => (l, r),
                        [_, l, r] => (l, r),
                        _ => return Err(form_error("expected (def LHS RHS)", span)),
                    };
                    let lhs = th.signature.term_from_sexp(l)?;
                    let rhs = th.signature.term_from_sexp(r)?;
                    let head: Name = lhs.head().expect("declared in the first pass").into();
                    let name = match items {
                        [Sexp::Atom(n, _), _, _] => n.clone(),
                        _ => {
                            let k = counts.entry(head.clone()).or_default();
                            *k += 1;
                            format!("{head}.{k}")
                        }
                    };
                    if !names.insert(name.clone()) {
                        return Err(TheoryError::Duplicate { name });
                    }
                    th.defs.push(Rule::new(&name, lhs, rhs));
                }
                "lemma" | "conjecture" => {
                    let [Sexp::Atom(name, _), l, r] = items else {
                        return Err(form_error(format!("expected ({kw} NAME LHS RHS)"), span));
                    };
                    if !names.insert(name.clone()) {
                        return Err(TheoryError::Duplicate { name: name.clone() });
                    }
                    let eq = Equation::new(th.signature.term_from_sexp(l)?, th.signature.term_from_sexp(r)?);
                    if kw == "lemma" {
                        th.lemmas.push(Lemma {
                            name: name.as_str().into(),
                            equation: eq,
                            status: LemmaStatus::Stated,
                        });
                    } else {
                        th.conjectures.push((name.as_str().into(), eq));
                    }
                }
                _ => {}
            }
        }
        th.infer_slot_sorts()?;
        Ok(th)
    }

    fn read_datatype(&mut self, items: &[Sexp], span: Span) -> Result<(), TheoryError> {
        let Some((Sexp::Atom(name, _), ctors)) = items.split_first() else {
            return Err(form_error("expected (datatype NAME (CTOR SORT...)...)", span));
        };
        if self.datatypes.iter().any(|d| &*d.name == name.as_str()) {
            return Err(TheoryError::Duplicate { name: name.clone() });
        }
        let mut constructors = Vec::new();
        for c in ctors {
            let parts: Vec<&str> = match c {
                Sexp::List(sexpr::Bracket::Paren, xs, _) => xs.iter().filter_map(Sexp::as_atom).collect(),
                Sexp::Atom(a, _) => vec![a.as_str()],
                _ => Vec::new(),
            };
            let arity_ok = matches!(c, Sexp::List(_, xs, _) if xs.len() == parts.len()) || matches!(c, Sexp::Atom(..));
            let Some((cname, args)) = parts.split_first().filter(|_| arity_ok) else {
                return Err(form_error("malformed constructor", c.span()));
            };
            if self.signature.symbol(cname).is_some() {
                return Err(TheoryError::Duplicate { name: cname.to_string() });
            }
            self.signature.declare(cname, args.len(), SymbolKind::Constructor)?;
            constructors.push(Constructor {
                name: (*cname).into(),
                args: args.iter().map(|a| (*a).into()).collect(),
            });
        }
        if constructors.is_empty() {
            return Err(form_error(format!("datatype `{name}` has no constructors"), span));
        }
        self.datatypes.push(Datatype {
            name: name.as_str().into(),
            constructors,
        });
        Ok(())
    }

    fn read_vars(&mut self, items: &[Sexp], span: Span) -> Result<(), TheoryError> {
        let atoms: Option<Vec<&str>> = items.iter().map(Sexp::as_atom).collect();
        let atoms = atoms.ok_or_else(|| form_error("expected (vars NAME... [: SORT])", span))?;
        let (names, sort) = match atoms.iter().position(|a| *a == ":") {
            Some(i) if i + 2 == atoms.len() => (&atoms[..i], Some(atoms[i + 1])),
            Some(_) => return Err(form_error("expected exactly one sort after `:`", span)),
            None => (&atoms[..], None),
        };
        for n in names {
            if self.signature.symbol(n).is_some() {
                return Err(TheoryError::Duplicate { name: n.to_string() });
            }
            self.signature.declare_var(n, sort);
        }
        Ok(())
    }

    fn declare_defined(&mut self, items: &[Sexp], span: Span) -> Result<(), TheoryError> {
        let lhs = match items {
            [l, _] | [_, l, _] => l,
            _ => return Err(form_error("expected (def LHS RHS)", span)),
        };
        match lhs {
            Sexp::List(sexpr::Bracket::Paren, xs, _) if !xs.is_empty() => {
                let Some(h) = xs[0].as_atom() else {
                    return Err(form_error("definition head must be a symbol", lhs.span()));
                };
                if let Some(s) = self.signature.symbol(h) {
                    if s.kind == SymbolKind::Constructor {
                        return Err(form_error(format!("cannot define constructor `{h}`"), lhs.span()));
                    }
                }
                self.signature.declare(h, xs.len() - 1, SymbolKind::Defined)?;
            }
            Sexp::Atom(h, _) if !self.signature.is_var_name(h) => {
                self.signature.declare(h, 0, SymbolKind::Defined)?;
            }
            _ => return Err(form_error("definition left side must be an application", lhs.span())),
        }
        Ok(())
    }

    pub fn datatype(&self, name: &str) -> Option<&Datatype> {
        self.datatypes.iter().find(|d| &*d.name == name)
    }

    /// The datatype a constructor belongs to.
    pub fn datatype_of_constructor(&self, ctor: &str) -> Option<&Datatype> {
        self.datatypes.iter().find(|d| d.constructor(ctor).is_some())
    }

    pub fn is_constructor(&self, name: &str) -> bool {
        self.signature.symbol(name).is_some_and(|s| s.kind == SymbolKind::Constructor)
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.signature.symbol(name).is_some_and(|s| s.kind == SymbolKind::Defined)
    }

    pub fn defs_of<'a>(&'a self, f: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.defs.iter().filter(move |r| r.lhs.head() == Some(f))
    }

    pub fn conjecture(&self, name: &str) -> Option<&Equation> {
        self.conjectures.iter().find(|(n, _)| &**n == name).map(|(_, e)| e)
    }

    pub fn lemma(&self, name: &str) -> Option<&Lemma> {
        self.lemmas.iter().find(|l| &*l.name == name)
    }

    /// Parses `(= L R)` or `L = R` into an equation over this theory.
    pub fn parse_equation(&self, text: &str) -> Result<Equation, TheoryError> {
        let mut sig = self.signature.clone();
        if let Some((l, r)) = split_infix(text) {
            return Ok(Equation::new(sig.parse_term(l)?, sig.parse_term(r)?));
        }
        let t = sig.parse_term(text)?;
        Equation::from_term(&t).ok_or_else(|| {
            form_error(
                "expected an equation `(= L R)` or `L = R`",
                Span {
                    offset: 0,
                    line: 1,
                    column: 1,
                },
            )
        })
    }

    /// Parses an annotated equation `(= L R)` or `L = R` into its term form.
    pub fn parse_ann_equation(&self, text: &str) -> Result<AnnTerm, TheoryError> {
        let mut sig = self.signature.clone();
        if let Some((l, r)) = split_infix(text) {
            return Ok(ann_equation(sig.parse_ann_term(l)?, sig.parse_ann_term(r)?));
        }
        let t = sig.parse_ann_term(text)?;
        match &t {
            AnnTerm::App(f, args) if &**f == EQ && args.len() == 2 => Ok(t),
            _ => Err(form_error(
                "expected an equation `(= L R)` or `L = R`",
                Span {
                    offset: 0,
                    line: 1,
                    column: 1,
                },
            )),
        }
    }

    /// Parses a term over this theory.
    pub fn parse_term(&self, text: &str) -> Result<Term, TheoryError> {
        Ok(self.signature.clone().parse_term(text)?)
    }

    /// Rewrite rules for simplification: definitions, then usable lemmas.
    pub fn rewrite_rules(&self) -> Vec<Rule> {
        let mut rules = self.defs.clone();
        rules.extend(
            self.lemmas
                .iter()
                .filter(|l| l.status != LemmaStatus::Stated)
                .map(|l| Rule::from_equation(&l.name, &l.equation)),
        );
        rules
    }

    /// Wave rules from definitions and usable lemmas, in that order.
    pub fn wave_rules(&self) -> Vec<WaveRule> {
        self.rewrite_rules()
            .iter()
            .flat_map(|r| derive_wave_rules(&r.name, &r.equation()))
            .collect()
    }

    /// Adds a lemma (replacing one of the same name).
    pub fn install_lemma(&mut self, name: &str, equation: Equation, status: LemmaStatus) {
        self.lemmas.retain(|l| &*l.name != name);
        self.lemmas.push(Lemma {
            name: name.into(),
            equation,
            status,
        });
    }

    /// Sort of argument `i` of `f` (0 is the result sort), when known.
    pub fn slot_sort(&self, f: &str, i: usize) -> Option<&Name> {
        self.slot_sorts.get(&(Name::from(f), i))
    }

    /// Sort of variable `v` in `eq`: declared, or read off an argument slot it fills.
    pub fn var_sort(&self, eq: &Equation, v: &str) -> Option<Name> {
        if let Some(s) = self.signature.var_sort(v) {
            return Some(s.into());
        }
        let mut found = None;
        for (side, other) in [(&eq.lhs, &eq.rhs), (&eq.rhs, &eq.lhs)] {
            if side == &Term::var(v) {
                if let Some(h) = other.head() {
                    found = found.or_else(|| self.slot_sort(h, 0).cloned());
                }
            }
            side.visit(&mut |_, t| {
                if let Term::App(f, args) = t {
                    for (i, a) in args.iter().enumerate() {
                        if a == &Term::var(v) && found.is_none() {
                            found = self.slot_sort(f, i + 1).cloned();
                        }
                    }
                }
            });
        }
        found
    }

    fn infer_slot_sorts(&mut self) -> Result<(), TheoryError> {
        let mut uf = SortUnion::default();
        for d in &self.datatypes {
            for c in &d.constructors {
                let root = uf.slot(Slot::Sym(c.name.clone(), 0));
                uf.know(root, &d.name, &c.name)?;
                for (i, s) in c.args.iter().enumerate() {
                    let k = uf.slot(Slot::Sym(c.name.clone(), i + 1));
                    uf.know(k, s, &c.name)?;
                }
            }
        }
        let eqs: Vec<(String, Equation)> = self
            .defs
            .iter()
            .map(|r| (r.name.to_string(), r.equation()))
            .chain(self.lemmas.iter().map(|l| (l.name.to_string(), l.equation.clone())))
            .chain(self.conjectures.iter().map(|(n, e)| (n.to_string(), e.clone())))
            .collect();
        for (k, (name, eq)) in eqs.iter().enumerate() {
            let l = uf.term(&eq.lhs, k, &self.signature, name)?;
            let r = uf.term(&eq.rhs, k, &self.signature, name)?;
            uf.union(l, r, name)?;
        }
        self.slot_sorts = uf.symbol_sorts();
        Ok(())
    }

    /// Validates definitions: shape, orientation and constructor completeness.
    pub fn check(&self) -> Result<(), TheoryError> {
        for r in &self.defs {
            let bad = |message: String| TheoryError::BadDefinition {
                name: r.name.to_string(),
                message,
            };
            for a in r.lhs.args() {
                let mut ok = true;
                a.visit(&mut |_, t| {
                    if let Term::App(h, _) = t {
                        ok &= self.is_constructor(h);
                    }
                });
                if !ok {
                    return Err(bad(format!("argument `{a}` is not a constructor pattern")));
                }
            }
            let lv = r.lhs.vars();
            if let Some(v) = r.rhs.vars().into_iter().find(|v| !lv.contains(v)) {
                return Err(bad(format!("right side variable `{v}` does not occur on the left")));
            }
        }
        let defined: BTreeSet<&str> = self.defs.iter().filter_map(|r| r.lhs.head()).collect();
        for f in defined {
            let rows: Vec<Vec<Term>> = self.defs_of(f).map(|r| r.lhs.args().to_vec()).collect();
            if let Some(missing) = self.uncovered(rows) {
                let shown = Term::app(f, missing);
                return Err(TheoryError::Incomplete {
                    function: f.to_string(),
                    missing: format!("`{}`", shown),
                });
            }
        }
        Ok(())
    }

    /// A pattern row (with `_` for anything) matched by no row, if one exists.
    fn uncovered(&self, rows: Vec<Vec<Term>>) -> Option<Vec<Term>> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() {
            return Some(Vec::new());
        }
        if width == 0 {
            return None;
        }
        let ctor_dt = rows
            .iter()
            .find_map(|r| r[0].head().and_then(|h| self.datatype_of_constructor(h)));
        match ctor_dt {
            None => {
                let rest: Vec<Vec<Term>> = rows.into_iter().map(|r| r[1..].to_vec()).collect();
                self.uncovered(rest).map(|mut m| {
                    m.insert(0, Term::var("_"));
                    m
                })
            }
            Some(dt) => {
                for c in &dt.constructors {
                    let n = c.args.len();
                    let spec: Vec<Vec<Term>> = rows
                        .iter()
                        .filter_map(|r| match &r[0] {
                            Term::Var(_) => {
                                Some((0..n).map(|_| Term::var("_")).chain(r[1..].iter().cloned()).collect())
                            }
                            Term::App(h, args) if *h == c.name => {
                                Some(args.iter().cloned().chain(r[1..].iter().cloned()).collect())
                            }
                            Term::App(..) => None,
                        })
                        .collect();
                    if let Some(m) = self.uncovered(spec) {
                        let (head, tail) = m.split_at(n.min(m.len()));
                        let mut out = vec![Term::app(&c.name, head.to_vec())];
                        out.extend(tail.iter().cloned());
                        return Some(out);
                    }
                }
                None
            }
        }
    }
}

fn split_infix(text: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '=' if depth == 0 => return Some((&text[..i], &text[i + 1..])),
            _ => {}
        }
    }
    None
}

fn keyword(f: &Sexp) -> Result<(&str, &[Sexp], Span), TheoryError> {
    match f {
        Sexp::List(sexpr::Bracket::Paren, items, span) => match items.split_first() {
            Some((Sexp::Atom(kw, _), rest)) => Ok((kw.as_str(), rest, *span)),
            _ => Err(form_error("expected a keyword form", *span)),
        },
        other => Err(form_error("expected a parenthesized form", other.span())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Slot {
    Sym(Name, usize),
    Var(usize, Name),
}

#[derive(Default)]
struct SortUnion {
    ids: HashMap<Slot, usize>,
    parent: Vec<usize>,
    sort: Vec<Option<Name>>,
}

impl SortUnion {
    fn slot(&mut self, s: Slot) -> usize {
        if let Some(&i) = self.ids.get(&s) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.sort.push(None);
        self.ids.insert(s, i);
        i
    }

    fn find(&mut self, i: usize) -> usize {
        let p = self.parent[i];
        if p == i {
            return i;
        }
        let r = self.find(p);
        self.parent[i] = r;
        r
    }

    fn know(&mut self, i: usize, sort: &str, ctx: &str) -> Result<(), TheoryError> {
        let r = self.find(i);
        match &self.sort[r] {
            Some(s) if &**s != sort => Err(TheoryError::SortClash {
                context: ctx.to_string(),
                a: s.to_string(),
                b: sort.to_string(),
            }),
            _ => {
                self.sort[r] = Some(sort.into());
                Ok(())
            }
        }
    }

    fn union(&mut self, a: usize, b: usize, ctx: &str) -> Result<(), TheoryError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        self.parent[rb] = ra;
        if let Some(s) = self.sort[rb].take() {
            self.know(ra, &s, ctx)?;
        }
        Ok(())
    }

    fn term(&mut self, t: &Term, eq: usize, sig: &Signature, ctx: &str) -> Result<usize, TheoryError> {
        match t {
            Term::Var(v) => {
                let i = self.slot(Slot::Var(eq, v.clone()));
                if let Some(s) = sig.var_sort(v) {
                    self.know(i, s, ctx)?;
                }
                Ok(i)
            }
            Term::App(f, args) => {
                for (k, a) in args.iter().enumerate() {
                    let ai = self.term(a, eq, sig, ctx)?;
                    let si = self.slot(Slot::Sym(f.clone(), k + 1));
                    self.union(si, ai, ctx)?;
                }
                Ok(self.slot(Slot::Sym(f.clone(), 0)))
            }
        }
    }

    fn symbol_sorts(&mut self) -> BTreeMap<(Name, usize), Name> {
        let slots: Vec<(Slot, usize)> = self.ids.iter().map(|(s, i)| (s.clone(), *i)).collect();
        let mut out = BTreeMap::new();
        for (s, i) in slots {
            if let Slot::Sym(f, k) = s {
                if &*f == EQ {
                    continue;
                }
                let r = self.find(i);
                if let Some(sort) = &self.sort[r] {
                    out.insert((f, k), sort.clone());
                }
            }
        }
        out
    }
}
