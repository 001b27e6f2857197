//! Plain (unannotated) oriented rewriting.

use std::fmt;

use thiserror::Error;

use crate::subst::match_first_order;
use crate::term::{Equation, Name, Position, Term};

/// An oriented rewrite rule `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: Name,
    pub lhs: Term,
    pub rhs: Term,
}

impl Rule {
    pub fn new(name: &str, lhs: Term, rhs: Term) -> Self {
        Rule {
            name: name.into(),
            lhs,
            rhs,
        }
    }

    pub fn from_equation(name: &str, eq: &Equation) -> Self {
        Rule::new(name, eq.lhs.clone(), eq.rhs.clone())
    }

    pub fn equation(&self) -> Equation {
        Equation::new(self.lhs.clone(), self.rhs.clone())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.name, self.lhs, self.rhs)
    }
}

/// Rewrites the subterm at `pos` with `lhs -> rhs`, if `lhs` matches there.
pub fn rewrite_at(t: &Term, pos: &Position, lhs: &Term, rhs: &Term) -> Option<Term> {
    let sub = t.subterm_at(pos).ok()?;
    let s = match_first_order(lhs, sub)?;
    t.replace_at(pos, s.apply(rhs)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    LeftmostInnermost,
    LeftmostOutermost,
}

/// One applied rewrite: the rule (by index into the rule list) and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub rule: usize,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rewriting did not reach a normal form within {bound} steps")]
pub struct BoundExceeded {
    pub bound: usize,
    pub partial: Term,
    pub steps: Vec<Step>,
}

/// Finds the first redex under `strategy`: the position and the first rule (in list order) applying there.
pub fn find_redex(t: &Term, rules: &[Rule], strategy: Strategy) -> Option<(Position, usize, Term)> {
    let positions = match strategy {
        Strategy::LeftmostInnermost => t.positions_innermost(),
        Strategy::LeftmostOutermost => t.positions(),
    };
    for p in positions {
        let sub = t.subterm_at(&p).expect("own position");
        if sub.is_var() {
            continue;
        }
        for (i, r) in rules.iter().enumerate() {
            if let Some(s) = match_first_order(&r.lhs, sub) {
                let out = t.replace_at(&p, s.apply(&r.rhs)).expect("own position");
                return Some((p, i, out));
            }
        }
    }
    None
}

/// Rewrites to normal form, taking at most `bound` steps.
pub fn normalize(
    t: &Term,
    rules: &[Rule],
    strategy: Strategy,
    bound: usize,
) -> Result<(Term, Vec<Step>), BoundExceeded> {
    let mut cur = t.clone();
    let mut steps = Vec::new();
    while let Some((position, rule, next)) = find_redex(&cur, rules, strategy) {
        if steps.len() == bound {
            return Err(BoundExceeded {
                bound,
                partial: cur,
                steps,
            });
        }
        steps.push(Step { rule, position });
        cur = next;
    }
    Ok((cur, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Signature;

    fn sig() -> Signature {
        let mut s = Signature::permissive();
        for v in ["a", "b", "c", "x"] {
            s.declare_var(v, None);
        }
        s
    }

    fn append_rules(s: &mut Signature) -> Vec<Rule> {
        vec![
            Rule::new("append.1", s.parse_term("(append nil c)").unwrap(), s.parse_term("c").unwrap()),
            Rule::new(
                "append.2",
                s.parse_term("(append (cons a b) c)").unwrap(),
                s.parse_term("(cons a (append b c))").unwrap(),
            ),
        ]
    }

    #[test]
    fn normalizes_append() {
        let mut s = sig();
        let rules = append_rules(&mut s);
        let t = s.parse_term("(append (cons p (cons q nil)) x)").unwrap();
        let (n, steps) = normalize(&t, &rules, Strategy::LeftmostInnermost, 10).unwrap();
        assert_eq!(n.to_string(), "(cons p (cons q x))");
        assert_eq!(steps.len(), 3);
        let nil = s.parse_term("(append nil nil)").unwrap();
        assert_eq!(normalize(&nil, &rules, Strategy::LeftmostInnermost, 10).unwrap().0.to_string(), "nil");
    }

    #[test]
    fn bound_is_reported() {
        let mut s = sig();
        let loop_rule = vec![Rule::new("loop", s.parse_term("(f a)").unwrap(), s.parse_term("(f (f a))").unwrap())];
        let t = s.parse_term("(f x)").unwrap();
        let err = normalize(&t, &loop_rule, Strategy::LeftmostOutermost, 5).unwrap_err();
        assert_eq!(err.steps.len(), 5);
    }

    #[test]
    fn rewrite_at_position() {
        let mut s = sig();
        let rules = append_rules(&mut s);
        let t = s.parse_term("(f (append nil x))").unwrap();
        let r = &rules[0];
        assert_eq!(rewrite_at(&t, &Position(vec![1]), &r.lhs, &r.rhs).unwrap().to_string(), "(f x)");
        assert!(rewrite_at(&t, &Position(vec![]), &r.lhs, &r.rhs).is_none());
    }
}
