//! Independent proof checking.
//!
//! The checker ignores annotations entirely. It knows how to apply an
//! equation at a position, how to instantiate a structural induction
//! scheme, and that `t = t` holds. Every node of a proof tree is replayed
//! with only these operations and the theory's definitions, plus lemmas
//! introduced by lemma nodes above it.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::prover::{Goal, NodeKind, ProofNode};
use crate::rewrite::rewrite_at;
use crate::subst::Substitution;
use crate::term::{Equation, Name, Position, Term};
use crate::theory::{LemmaStatus, Theory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node {}: {message}", path_string(.path))]
pub struct ReplayError {
    /// Child indices from the root to the offending node.
    pub path: Vec<usize>,
    pub message: String,
}

fn path_string(p: &[usize]) -> String {
    if p.is_empty() {
        return "root".to_string();
    }
    p.iter().map(ToString::to_string).collect::<Vec<_>>().join(".")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub nodes: usize,
    /// Lemmas taken on trust.
    pub assumed: Vec<Name>,
}

/// Checks that `tree` proves `conjecture` from the theory's definitions.
pub fn replay_conjecture(tree: &ProofNode, conjecture: &Equation, th: &Theory) -> Result<ReplayReport, ReplayError> {
    if tree.goal != Goal::new(conjecture.clone()) {
        return Err(ReplayError {
            path: Vec::new(),
            message: format!("tree proves `{}`, not `{conjecture}`", tree.goal),
        });
    }
    replay(tree, th)
}

/// Checks every node of `tree`.
pub fn replay(tree: &ProofNode, th: &Theory) -> Result<ReplayReport, ReplayError> {
    let rules: Vec<(Name, Equation)> = th.defs.iter().map(|r| (r.name.clone(), r.equation())).collect();
    let mut checker = Checker {
        th,
        report: ReplayReport::default(),
    };
    let mut path = Vec::new();
    checker.node(tree, &rules, &mut path)?;
    Ok(checker.report)
}

struct Checker<'a> {
    th: &'a Theory,
    report: ReplayReport,
}

impl Checker<'_> {
    fn node(&mut self, n: &ProofNode, rules: &[(Name, Equation)], path: &mut Vec<usize>) -> Result<(), ReplayError> {
        self.report.nodes += 1;
        let fail = |path: &[usize], message: String| ReplayError {
            path: path.to_vec(),
            message,
        };
        let g = &n.goal;
        let goal_term = g.conclusion.to_term();
        let only_child = |path: &[usize]| match n.children.as_slice() {
            [c] => Ok(c),
            _ => Err(fail(path, format!("{} node needs exactly one child", n.kind.label()))),
        };
        match &n.kind {
            NodeKind::Open(reason) => return Err(fail(path, format!("open goal `{g}` ({reason})"))),
            NodeKind::Reflexivity => {
                if !n.children.is_empty() || !g.conclusion.is_trivial() {
                    return Err(fail(path, format!("`{g}` is not an instance of t = t")));
                }
            }
            NodeKind::Simplify(steps) => {
                let child = only_child(path)?;
                let mut cur = goal_term;
                for s in steps {
                    let eq = lookup(rules, &s.rule).ok_or_else(|| fail(path, format!("unknown rule `{}`", s.rule)))?;
                    cur = rewrite_at(&cur, &s.position, &eq.lhs, &eq.rhs)
                        .ok_or_else(|| fail(path, format!("{} does not apply at {} in {cur}", s.rule, s.position)))?;
                }
                self.same_context(n, child, &cur, path)?;
            }
            NodeKind::Ripple(trace) => {
                let child = only_child(path)?;
                if trace.initial.erase() != goal_term {
                    return Err(fail(path, "ripple trace does not start at the goal".into()));
                }
                let mut cur = goal_term;
                for s in &trace.steps {
                    if s.before.erase() != cur {
                        return Err(fail(path, "ripple steps do not chain".into()));
                    }
                    let eq = lookup(rules, &s.rule.name)
                        .ok_or_else(|| fail(path, format!("unknown rule `{}`", s.rule.name)))?;
                    let next = rewrite_at(&cur, &s.position, &eq.lhs, &eq.rhs)
                        .ok_or_else(|| fail(path, format!("{} does not apply at {} in {cur}", s.rule.name, s.position)))?;
                    if next != s.after.erase() {
                        return Err(fail(path, format!("step {} {} does not produce the recorded term", s.rule.name, s.position)));
                    }
                    cur = next;
                }
                self.same_context(n, child, &cur, path)?;
            }
            NodeKind::Fertilize { hypothesis, position, .. } => {
                let child = only_child(path)?;
                if !g.hypotheses.contains(hypothesis) && !g.hypotheses.contains(&hypothesis.swap()) {
                    return Err(fail(path, format!("`{hypothesis}` is not a hypothesis")));
                }
                let next = rewrite_exact(&goal_term, position, hypothesis)
                    .ok_or_else(|| fail(path, format!("hypothesis does not occur at {position}")))?;
                self.same_context(n, child, &next, path)?;
            }
            NodeKind::Induction(scheme) => {
                let v = &scheme.variable;
                let dt = self
                    .th
                    .datatype(&scheme.datatype)
                    .ok_or_else(|| fail(path, format!("unknown datatype `{}`", scheme.datatype)))?;
                if self.th.var_sort(&g.conclusion, v).as_deref() != Some(&*dt.name) {
                    return Err(fail(path, format!("`{v}` is not of sort {}", dt.name)));
                }
                if n.children.len() != dt.constructors.len() || scheme.cases.len() != dt.constructors.len() {
                    return Err(fail(path, "one case per constructor is required".into()));
                }
                let mut others = g.conclusion.vars();
                others.remove(v);
                for (i, ((c, case), child)) in dt.constructors.iter().zip(&scheme.cases).zip(&n.children).enumerate() {
                    let names: Vec<&Name> = case.args.iter().map(|(a, _)| a).collect();
                    let distinct: BTreeSet<&Name> = names.iter().copied().collect();
                    if case.constructor != c.name || names.len() != c.args.len() || distinct.len() != names.len() {
                        return Err(fail(path, format!("case {} does not instantiate `{}`", i + 1, c.name)));
                    }
                    if let Some(a) = names.iter().find(|a| others.contains(**a)) {
                        return Err(fail(path, format!("case variable `{a}` is not fresh")));
                    }
                    let cterm = Term::app(&c.name, names.iter().map(|a| Term::Var((*a).clone())).collect());
                    let inst = |t: Term| {
                        let s = Substitution::singleton(v, t);
                        g.conclusion.map(|x| s.apply(x))
                    };
                    let expected = Goal {
                        hypotheses: names
                            .iter()
                            .zip(&c.args)
                            .filter(|(_, s)| **s == dt.name)
                            .map(|(a, _)| inst(Term::Var((*a).clone())))
                            .collect(),
                        conclusion: inst(cterm),
                    };
                    if child.goal != expected {
                        return Err(fail(path, format!("case {} has goal `{}`, expected `{}`", i + 1, child.goal, expected)));
                    }
                }
            }
            NodeKind::LemmaUse { name, equation, status } => {
                let cont = match (status, n.children.as_slice()) {
                    (LemmaStatus::Proved, [proof, cont]) => {
                        if proof.goal != Goal::new(equation.clone()) {
                            return Err(fail(path, format!("lemma proof is for `{}`", proof.goal)));
                        }
                        path.push(0);
                        self.node(proof, rules, path)?;
                        path.pop();
                        cont
                    }
                    (LemmaStatus::Assumed, [cont]) => {
                        self.report.assumed.push(name.clone());
                        cont
                    }
                    _ => return Err(fail(path, format!("lemma `{name}` is neither proved nor assumed"))),
                };
                if cont.goal != *g {
                    return Err(fail(path, "lemma continuation changes the goal".into()));
                }
                let mut extended = rules.to_vec();
                extended.push((name.clone(), equation.clone()));
                path.push(n.children.len() - 1);
                self.node(cont, &extended, path)?;
                path.pop();
                return Ok(());
            }
        }
        for (i, c) in n.children.iter().enumerate() {
            path.push(i);
            self.node(c, rules, path)?;
            path.pop();
        }
        Ok(())
    }

    /// The child keeps the hypotheses and has `conclusion` as its goal.
    fn same_context(&self, n: &ProofNode, child: &ProofNode, conclusion: &Term, path: &[usize]) -> Result<(), ReplayError> {
        let expected = Equation::from_term(conclusion);
        if child.goal.hypotheses != n.goal.hypotheses || expected.as_ref() != Some(&child.goal.conclusion) {
            return Err(ReplayError {
                path: path.to_vec(),
                message: format!("child goal `{}` does not follow from `{}`", child.goal, n.goal),
            });
        }
        Ok(())
    }
}

fn lookup<'r>(rules: &'r [(Name, Equation)], name: &str) -> Option<&'r Equation> {
    rules.iter().rev().find(|(n, _)| &**n == name).map(|(_, e)| e)
}

/// Replaces the subterm at `pos`, which must be exactly `eq.lhs`, by `eq.rhs`.
fn rewrite_exact(t: &Term, pos: &Position, eq: &Equation) -> Option<Term> {
    if t.subterm_at(pos).ok()? != &eq.lhs {
        return None;
    }
    t.replace_at(pos, eq.rhs.clone()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prover::{prove, Budget};

    fn theory() -> Theory {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../theories/list.thy")).unwrap();
        Theory::parse(&text).unwrap()
    }

    #[test]
    fn accepts_closed_proofs() {
        let th = theory();
        for (name, eq) in &th.conjectures {
            let tree = prove(eq, &th, Budget::default());
            if tree.is_closed() {
                replay_conjecture(&tree, eq, &th).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn rejects_open_and_corrupted() {
        let th = theory();
        let rev = th.conjecture("rev_rev").unwrap();
        assert!(replay(&prove(rev, &th, Budget::default()), &th).is_err());
        let eq = th.conjecture("append_nil").unwrap();
        let mut tree = prove(eq, &th, Budget::default());
        if let NodeKind::Simplify(steps) = &mut tree.children[0].kind {
            steps[0].position = Position(vec![2]);
        }
        let err = replay(&tree, &th).unwrap_err();
        assert_eq!(err.path, vec![0]);
        let other = th.conjecture("plus_zero").unwrap();
        assert!(replay_conjecture(&prove(eq, &th, Budget::default()), other, &th).is_err());
    }
}
