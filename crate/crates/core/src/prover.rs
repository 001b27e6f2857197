//! Structural-induction proof planning.
//!
//! A goal is first closed by reflexivity if possible, then simplified with
//! the definitions and usable lemmas. Otherwise the prover inducts on the
//! variable chosen by recursion analysis. Base cases are simplified; step
//! cases are annotated against the hypothesis by difference matching,
//! rippled, fertilized and simplified. A step case that does not close is
//! attempted again as a fresh goal one induction level deeper.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::annotation::AnnTerm;
use crate::difference::{dmatch_all, dmatch_first};
use crate::rewrite::{find_redex, Rule, Strategy};
use crate::ripple::{ann_equation, fertilize, render_goal, ripple, RippleOutcome, RippleTrace, WaveRule};
use crate::term::{fresh_name, Equation, Name, Position, Term};
use crate::theory::{LemmaStatus, Theory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub ripple_steps: usize,
    pub simplify_steps: usize,
    pub induction_depth: usize,
    /// Bound on all rewrite, ripple and induction steps of one proof attempt.
    pub total_steps: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            ripple_steps: 50,
            simplify_steps: 200,
            induction_depth: 2,
            total_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Goal {
    pub hypotheses: Vec<Equation>,
    pub conclusion: Equation,
}

impl Goal {
    pub fn new(conclusion: Equation) -> Goal {
        Goal {
            hypotheses: Vec::new(),
            conclusion,
        }
    }

    fn with(&self, conclusion: Equation) -> Goal {
        Goal {
            hypotheses: self.hypotheses.clone(),
            conclusion,
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductionCase {
    pub constructor: Name,
    /// The constructor's arguments; recursive ones are flagged.
    pub args: Vec<(Name, bool)>,
    pub goal: Goal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductionScheme {
    pub variable: Name,
    pub datatype: Name,
    pub cases: Vec<InductionCase>,
}

/// One plain rewrite inside a simplification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteStep {
    pub rule: Name,
    /// Position in the equation term `(= L R)`.
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Induction(InductionScheme),
    Simplify(Vec<RewriteStep>),
    Ripple(RippleTrace),
    Fertilize {
        /// The hypothesis as used, oriented left to right.
        hypothesis: Equation,
        position: Position,
        before: AnnTerm,
        after: AnnTerm,
    },
    Reflexivity,
    /// Children: the lemma's proof (unless assumed), then the continuation.
    LemmaUse {
        name: Name,
        equation: Equation,
        status: LemmaStatus,
    },
    Open(String),
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Induction(_) => "induction",
            NodeKind::Simplify(_) => "simplify",
            NodeKind::Ripple(_) => "ripple",
            NodeKind::Fertilize { .. } => "fertilize",
            NodeKind::Reflexivity => "reflexivity",
            NodeKind::LemmaUse { .. } => "lemma",
            NodeKind::Open(_) => "open",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub goal: Goal,
    pub kind: NodeKind,
    pub children: Vec<ProofNode>,
}

pub type ProofTree = ProofNode;

impl ProofNode {
    fn leaf(goal: Goal, kind: NodeKind) -> ProofNode {
        ProofNode {
            goal,
            kind,
            children: Vec::new(),
        }
    }

    fn open(goal: Goal, reason: impl Into<String>) -> ProofNode {
        ProofNode::leaf(goal, NodeKind::Open(reason.into()))
    }

    pub fn is_closed(&self) -> bool {
        !matches!(self.kind, NodeKind::Open(_)) && self.children.iter().all(ProofNode::is_closed)
    }

    /// Goals of the open leaves, left to right.
    pub fn open_goals(&self) -> Vec<&Goal> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let NodeKind::Open(_) = n.kind {
                out.push(&n.goal);
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ProofNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    /// Preorder list of every node.
    pub fn nodes(&self) -> Vec<&ProofNode> {
        let mut out = Vec::new();
        self.walk(&mut |n| out.push(n));
        out
    }

    /// Conclusions of the inductions on the path to the first open leaf,
    /// followed by that leaf's conclusion.
    pub fn goal_history(&self) -> Vec<Equation> {
        fn go(n: &ProofNode, acc: &mut Vec<Equation>) -> bool {
            if let NodeKind::Open(_) = n.kind {
                acc.push(n.goal.conclusion.clone());
                return true;
            }
            let pushed = matches!(n.kind, NodeKind::Induction(_));
            if pushed {
                acc.push(n.goal.conclusion.clone());
            }
            if n.children.iter().any(|c| go(c, acc)) {
                return true;
            }
            if pushed {
                acc.pop();
            }
            false
        }
        let mut acc = Vec::new();
        go(self, &mut acc);
        acc
    }

    /// Indented rendering, one node per line; with `trace`, rewrite and
    /// ripple steps are listed under their nodes.
    pub fn render(&self, trace: bool) -> String {
        let mut out = String::new();
        self.render_into(0, trace, &mut out);
        out
    }

    fn render_into(&self, depth: usize, trace: bool, out: &mut String) {
        let pad = "  ".repeat(depth);
        let head = match &self.kind {
            NodeKind::Induction(s) => format!("induction on {} : {}", s.variable, s.datatype),
            NodeKind::LemmaUse { name, equation, status } => format!("lemma {name} ({status}): {equation}"),
            NodeKind::Open(reason) => format!("open ({reason})"),
            k => k.label().to_string(),
        };
        out.push_str(&format!("{pad}{head} | {}\n", self.goal.conclusion));
        if trace {
            let inner = "  ".repeat(depth + 1);
            match &self.kind {
                NodeKind::Simplify(steps) => {
                    for s in steps {
                        out.push_str(&format!("{inner}. {} {}\n", s.rule, s.position));
                    }
                }
                NodeKind::Ripple(t) => {
                    for line in t.lines() {
                        out.push_str(&format!("{inner}. {line}\n"));
                    }
                }
                NodeKind::Fertilize {
                    hypothesis,
                    position,
                    before,
                    after,
                } => out.push_str(&format!(
                    "{inner}. {hypothesis} {position} {} ~> {}\n",
                    render_goal(before),
                    render_goal(after)
                )),
                _ => {}
            }
        }
        for c in &self.children {
            c.render_into(depth + 1, trace, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProveError {
    #[error("the conjecture has no variables to induct on")]
    Ground,
    #[error("no variable of the conjecture has a datatype sort")]
    NoInductiveVariable,
}

/// Argument positions (1-based) of `f` at which some defining equation has a non-variable.
pub fn recursive_positions(th: &Theory, f: &str) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for r in th.defs_of(f) {
        for (i, a) in r.lhs.args().iter().enumerate() {
            if !a.is_var() {
                out.insert(i + 1);
            }
        }
    }
    out
}

/// Induction schemes for the conclusion's variables, best first.
///
/// Variables are ranked by how often they occur directly at recursive
/// argument positions of defined functions; ties go to the leftmost.
pub fn recursion_analysis(goal: &Goal, th: &Theory) -> Result<Vec<InductionScheme>, ProveError> {
    let eq = &goal.conclusion;
    let vars = eq.to_term().vars_in_order();
    if vars.is_empty() {
        return Err(ProveError::Ground);
    }
    let mut score = vec![0usize; vars.len()];
    eq.to_term().visit(&mut |_, t| {
        if let Term::App(f, args) = t {
            let rec = recursive_positions(th, f);
            for (i, a) in args.iter().enumerate() {
                if let Term::Var(v) = a {
                    if rec.contains(&(i + 1)) {
                        let k = vars.iter().position(|w| w == v).expect("collected");
                        score[k] += 1;
                    }
                }
            }
        }
    });
    let mut ranked: Vec<usize> = (0..vars.len()).collect();
    ranked.sort_by_key(|&k| std::cmp::Reverse(score[k]));
    let schemes: Vec<InductionScheme> = ranked
        .into_iter()
        .filter_map(|k| scheme_for(goal, &vars[k], th))
        .collect();
    if schemes.is_empty() {
        return Err(ProveError::NoInductiveVariable);
    }
    Ok(schemes)
}

/// Structural induction on `v`. The first recursive argument of each
/// constructor reuses the name `v`; other arguments get fresh names.
pub fn scheme_for(goal: &Goal, v: &Name, th: &Theory) -> Option<InductionScheme> {
    let eq = &goal.conclusion;
    let sort = th.var_sort(eq, v)?;
    let dt = th.datatype(&sort)?;
    let mut cases = Vec::new();
    for c in &dt.constructors {
        let mut taken: BTreeSet<Name> = eq.vars();
        taken.remove(v);
        let mut reused = false;
        let mut args = Vec::new();
        for s in &c.args {
            let recursive = *s == dt.name;
            let name = if recursive && !reused {
                reused = true;
                v.clone()
            } else {
                let base = if recursive { v.to_string() } else { sort_base(th, s) };
                fresh_var(th, s, &base, &taken)
            };
            taken.insert(name.clone());
            args.push((name, recursive));
        }
        let inst = |arg: Term| crate::subst::Substitution::singleton(v, arg);
        let cterm = Term::app(&c.name, args.iter().map(|(n, _)| Term::Var(n.clone())).collect());
        let conclusion = eq.map(|t| inst(cterm.clone()).apply(t));
        let hypotheses = args
            .iter()
            .filter(|(_, r)| *r)
            .map(|(n, _)| eq.map(|t| inst(Term::Var(n.clone())).apply(t)))
            .collect();
        cases.push(InductionCase {
            constructor: c.name.clone(),
            args,
            goal: Goal { hypotheses, conclusion },
        });
    }
    Some(InductionScheme {
        variable: v.clone(),
        datatype: dt.name.clone(),
        cases,
    })
}

fn sort_base(th: &Theory, sort: &str) -> String {
    if th.datatype(sort).is_none() {
        return "e".to_string();
    }
    sort.chars().next().map_or("v".to_string(), |c| c.to_string())
}

/// A name not in `taken` whose declared sort, if any, is `sort`.
fn fresh_var(th: &Theory, sort: &str, base: &str, taken: &BTreeSet<Name>) -> Name {
    let mut blocked = taken.clone();
    loop {
        let n = fresh_name(base, &blocked);
        match th.signature.var_sort(&n) {
            Some(s) if s != sort => {
                blocked.insert(n);
            }
            _ if th.signature.symbol(&n).is_some() => {
                blocked.insert(n);
            }
            _ => return n,
        }
    }
}

/// Leftmost-innermost rewriting with `rules` to normal form, at most `bound` steps.
/// Returns the normal form and the steps taken, or the steps taken so far on overflow.
pub fn simplify_with(t: &Term, rules: &[Rule], bound: usize) -> Result<(Term, Vec<RewriteStep>), Vec<RewriteStep>> {
    let mut cur = t.clone();
    let mut steps = Vec::new();
    while let Some((position, rule, next)) = find_redex(&cur, rules, Strategy::LeftmostInnermost) {
        if steps.len() == bound {
            return Err(steps);
        }
        steps.push(RewriteStep {
            rule: rules[rule].name.clone(),
            position,
        });
        cur = next;
    }
    Ok((cur, steps))
}

/// Normal form of `t` under the theory's definitions and usable lemmas.
pub fn simplify(t: &Term, th: &Theory, bound: usize) -> Option<Term> {
    simplify_with(t, &th.rewrite_rules(), bound).ok().map(|(n, _)| n)
}

/// Alternatives tried for annotating each side of a step case.
const ANNOTATION_ALTERNATIVES: usize = 8;

struct Prover<'a> {
    th: &'a Theory,
    rules: Vec<Rule>,
    wave_rules: Vec<WaveRule>,
    budget: Budget,
    spent: usize,
}

impl Prover<'_> {
    fn spend(&mut self, n: usize) -> bool {
        self.spent += n;
        self.spent <= self.budget.total_steps
    }

    fn prove_goal(&mut self, goal: Goal, depth: usize) -> ProofNode {
        if goal.conclusion.is_trivial() {
            return ProofNode::leaf(goal, NodeKind::Reflexivity);
        }
        let eq_term = goal.conclusion.to_term();
        let (simp, steps) = match simplify_with(&eq_term, &self.rules, self.budget.simplify_steps) {
            Ok(r) => r,
            Err(_) => return ProofNode::open(goal, "simplification bound exceeded"),
        };
        if !self.spend(steps.len()) {
            return ProofNode::open(goal, "step budget exhausted");
        }
        if !steps.is_empty() {
            let next = goal.with(Equation::from_term(&simp).expect("equation"));
            let child = self.after_simplify(next, depth);
            return ProofNode {
                goal,
                kind: NodeKind::Simplify(steps),
                children: vec![child],
            };
        }
        self.induct(goal, depth)
    }

    fn after_simplify(&mut self, goal: Goal, depth: usize) -> ProofNode {
        if goal.conclusion.is_trivial() {
            return ProofNode::leaf(goal, NodeKind::Reflexivity);
        }
        self.induct(goal, depth)
    }

    fn induct(&mut self, goal: Goal, depth: usize) -> ProofNode {
        if depth >= self.budget.induction_depth {
            return ProofNode::open(goal, "induction depth reached");
        }
        let scheme = match recursion_analysis(&goal, self.th) {
            Ok(mut s) => s.remove(0),
            Err(e) => return ProofNode::open(goal, e.to_string()),
        };
        if !self.spend(1) {
            return ProofNode::open(goal, "step budget exhausted");
        }
        let children = scheme
            .cases
            .iter()
            .map(|case| {
                if case.goal.hypotheses.is_empty() {
                    self.prove_goal(case.goal.clone(), depth + 1)
                } else {
                    self.step_case(case.goal.clone(), depth)
                }
            })
            .collect();
        ProofNode {
            goal,
            kind: NodeKind::Induction(scheme),
            children,
        }
    }

    /// Annotations of `target` against `pattern`: the greedy match first, then the others.
    fn annotations(pattern: &Term, target: &Term) -> Vec<AnnTerm> {
        let mut out: Vec<AnnTerm> = dmatch_first(pattern, target).into_iter().map(|m| m.annotated_target).collect();
        for m in dmatch_all(pattern, target, ANNOTATION_ALTERNATIVES) {
            if !out.contains(&m.annotated_target) {
                out.push(m.annotated_target);
            }
        }
        out
    }

    fn step_case(&mut self, goal: Goal, depth: usize) -> ProofNode {
        let ih = goal.hypotheses[0].clone();
        let c = &goal.conclusion;
        let lefts = Self::annotations(&ih.lhs, &c.lhs);
        let rights = Self::annotations(&ih.rhs, &c.rhs);
        let mut chosen: Option<RippleTrace> = None;
        'search: for l in &lefts {
            for r in &rights {
                let start = ann_equation(l.clone(), r.clone());
                if !start.is_annotated() {
                    continue;
                }
                let trace = ripple(&start, &self.wave_rules, Some(&ih), self.budget.ripple_steps);
                let done = trace.outcome == RippleOutcome::FullyRippled;
                if chosen.is_none() || done {
                    chosen = Some(trace);
                }
                if done {
                    break 'search;
                }
            }
        }
        let Some(trace) = chosen.filter(|t| !t.steps.is_empty()) else {
            return self.prove_goal(goal, depth + 1);
        };
        if !self.spend(trace.steps.len()) {
            return ProofNode::open(goal, "step budget exhausted");
        }
        let rippled = goal.with(Equation::from_term(&trace.last().erase()).expect("equation"));
        let child = if trace.outcome == RippleOutcome::FullyRippled {
            self.fertilize_and_close(rippled, trace.last().clone(), depth)
        } else {
            self.prove_goal(rippled, depth + 1)
        };
        ProofNode {
            goal,
            kind: NodeKind::Ripple(trace),
            children: vec![child],
        }
    }

    fn fertilize_and_close(&mut self, goal: Goal, annotated: AnnTerm, depth: usize) -> ProofNode {
        let fert = goal.hypotheses.iter().find_map(|h| fertilize(&annotated, h).ok());
        let Some(f) = fert else {
            return self.prove_goal(goal, depth + 1);
        };
        let next = goal.with(Equation::from_term(&f.after.erase()).expect("equation"));
        let child = self.prove_goal(next, depth + 1);
        ProofNode {
            goal,
            kind: NodeKind::Fertilize {
                hypothesis: f.used,
                position: f.position,
                before: annotated,
                after: f.after,
            },
            children: vec![child],
        }
    }
}

/// Proves `conjecture` using the theory's definitions and its proved or
/// assumed lemmas. Stated lemmas are not used.
pub fn prove(conjecture: &Equation, th: &Theory, budget: Budget) -> ProofTree {
    let mut p = Prover {
        th,
        rules: th.rewrite_rules(),
        wave_rules: th.wave_rules(),
        budget,
        spent: 0,
    };
    p.prove_goal(Goal::new(conjecture.clone()), 0)
}

/// Makes the theory's stated lemmas usable, then proves `conjecture`.
///
/// With `assume` the lemmas are taken on trust; otherwise each is proved in
/// order (earlier lemmas available to later ones) and only the proved ones
/// are installed. Each lemma appears as a lemma node above the main proof.
pub fn prove_with_lemmas(conjecture: &Equation, th: &Theory, budget: Budget, assume: bool) -> (ProofTree, Theory) {
    let mut th = th.clone();
    let mut wrappers: Vec<(Name, Equation, LemmaStatus, Option<ProofTree>)> = Vec::new();
    let stated: Vec<_> = th
        .lemmas
        .iter()
        .filter(|l| l.status == LemmaStatus::Stated)
        .map(|l| (l.name.clone(), l.equation.clone()))
        .collect();
    for (name, eq) in stated {
        if assume {
            th.install_lemma(&name, eq.clone(), LemmaStatus::Assumed);
            wrappers.push((name, eq, LemmaStatus::Assumed, None));
            continue;
        }
        let proof = prove(&eq, &th, budget);
        if proof.is_closed() {
            th.install_lemma(&name, eq.clone(), LemmaStatus::Proved);
            wrappers.push((name, eq, LemmaStatus::Proved, Some(proof)));
        }
    }
    let mut tree = prove(conjecture, &th, budget);
    for (name, equation, status, proof) in wrappers.into_iter().rev() {
        tree = wrap_lemma(name, equation, status, proof, tree);
    }
    (tree, th)
}

/// A lemma node whose continuation is `tree`.
pub fn wrap_lemma(
    name: Name,
    equation: Equation,
    status: LemmaStatus,
    proof: Option<ProofTree>,
    tree: ProofTree,
) -> ProofTree {
    let mut children: Vec<ProofNode> = proof.into_iter().collect();
    let goal = tree.goal.clone();
    children.push(tree);
    ProofNode {
        goal,
        kind: NodeKind::LemmaUse { name, equation, status },
        children,
    }
}
