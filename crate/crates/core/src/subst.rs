//! Substitutions, one-way matching and syntactic unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Substitution {
    bindings: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: &str, t: Term) -> Self {
        let mut s = Self::new();
        s.bindings.insert(v.into(), t);
        s
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn insert(&mut self, v: Name, t: Term) {
        self.bindings.insert(v, t);
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.bindings.keys()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// No bound variable occurs in the range.
    pub fn is_idempotent(&self) -> bool {
        self.bindings
            .values()
            .all(|t| self.bindings.keys().all(|v| !t.occurs(v)))
    }

    /// `self` restricted to the given variables.
    pub fn restrict(&self, vars: &BTreeSet<Name>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Substitution {
            bindings: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        f.write_str("}")
    }
}

/// Applies `s` to `t`.
pub fn apply_subst(s: &Substitution, t: &Term) -> Term {
    s.apply(t)
}

/// Matches `pattern` against `target`, binding every pattern variable.
/// Target variables are never bound.
pub fn match_first_order(pattern: &Term, target: &Term) -> Option<Substitution> {
    match_with(pattern, target, &|_| true, Substitution::new())
}

/// Matching where only variables accepted by `bindable` may be bound; the
/// rest must occur identically in the target. Extends `init`.
pub fn match_with(
    pattern: &Term,
    target: &Term,
    bindable: &dyn Fn(&str) -> bool,
    init: Substitution,
) -> Option<Substitution> {
    let mut s = init;
    if match_into(pattern, target, bindable, &mut s) {
        Some(s)
    } else {
        None
    }
}

fn match_into(
    p: &Term,
    t: &Term,
    bindable: &dyn Fn(&str) -> bool,
    s: &mut Substitution,
) -> bool {
    match p {
        Term::Var(v) if bindable(v) => match s.bindings.get(v) {
            Some(b) => b == t,
            None => {
                s.bindings.insert(v.clone(), t.clone());
                true
            }
        },
        Term::Var(_) => p == t,
        Term::App(h, args) => match t {
            Term::App(h2, args2) if h == h2 && args.len() == args2.len() => args
                .iter()
                .zip(args2)
                .all(|(a, b)| match_into(a, b, bindable, s)),
            _ => false,
        },
    }
}

/// Most general unifier with occurs check; every variable may be bound.
pub fn unify_first_order(s: &Term, t: &Term) -> Option<Substitution> {
    unify_with(s, t, &|_| false)
}

/// Most general unifier treating variables accepted by `rigid` as constants.
///
/// The result is idempotent.
pub fn unify_with(s: &Term, t: &Term, rigid: &dyn Fn(&str) -> bool) -> Option<Substitution> {
    let mut sub = Substitution::new();
    let mut work = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = work.pop() {
        let a = sub.apply(&a);
        let b = sub.apply(&b);
        if a == b {
            continue;
        }
        match (&a, &b) {
            (Term::Var(v), other) | (other, Term::Var(v)) if !rigid(v) => {
                if other.occurs(v) {
                    return None;
                }
                bind(&mut sub, v.clone(), other.clone());
            }
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                work.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
            }
            _ => return None,
        }
    }
    Some(sub)
}

/// Adds `v -> t`, keeping the substitution idempotent.
fn bind(sub: &mut Substitution, v: Name, t: Term) {
    let single = Substitution::singleton(&v, t.clone());
    for val in sub.bindings.values_mut() {
        *val = single.apply(val);
    }
    sub.bindings.insert(v, t);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Signature;

    fn p(s: &str) -> Term {
        let mut sig = Signature::permissive();
        sig.declare_var("x", None);
        sig.declare_var("e", None);
        sig.declare_var("a", None);
        sig.declare_var("b", None);
        sig.declare_var("c", None);
        sig.parse_term(s).unwrap()
    }

    #[test]
    fn apply_examples() {
        let s = Substitution::singleton("x", Term::constant("nil"));
        assert_eq!(s.apply(&p("(append x nil)")), p("(append nil nil)"));
        assert_eq!(Substitution::new().apply(&p("(append x nil)")), p("(append x nil)"));
        let s: Substitution = [
            ("b".into(), p("x")),
            ("a".into(), p("e")),
            ("c".into(), p("nil")),
        ]
        .into_iter()
        .collect();
        assert_eq!(s.apply(&p("(cons a (append b c))")), p("(cons e (append x nil))"));
    }

    #[test]
    fn match_examples() {
        let s = match_first_order(&p("(append a c)"), &p("(append x nil)")).unwrap();
        assert_eq!(s.get("a"), Some(&p("x")));
        assert_eq!(s.get("c"), Some(&p("nil")));
        assert!(match_first_order(&p("(cons a a)"), &p("(cons e x)")).is_none());
    }

    fn q(s: &str) -> Term {
        Signature::permissive().parse_term(s).unwrap()
    }

    #[test]
    fn unify_examples() {
        let s = unify_first_order(&q("(f X a)"), &q("(f b Y)")).unwrap();
        assert_eq!(s.get("X"), Some(&q("b")));
        assert_eq!(s.get("Y"), Some(&q("a")));
        assert!(unify_first_order(&q("X"), &q("(f X)")).is_none());
        assert!(unify_first_order(&q("(f X)"), &q("(g X)")).is_none());
    }

    #[test]
    fn unify_is_idempotent_on_chains() {
        let s = unify_first_order(&q("(f X Y Z)"), &q("(f Y Z a)")).unwrap();
        assert!(s.is_idempotent());
        assert_eq!(s.apply(&q("X")), q("a"));
    }

    #[test]
    fn rigid_variables_act_as_constants() {
        assert!(unify_with(&q("(f X)"), &q("(f a)"), &|v| v == "X").is_none());
        assert!(unify_with(&q("(f X)"), &q("(f X)"), &|v| v == "X").is_some());
        assert!(match_with(&q("(f X)"), &q("(f X)"), &|v| v != "X", Substitution::new()).is_some());
        assert!(match_with(&q("(f X)"), &q("(f a)"), &|v| v != "X", Substitution::new()).is_none());
    }
}
