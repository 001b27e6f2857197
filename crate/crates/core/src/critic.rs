//! Divergence critic.
//!
//! A failed proof leaves a sequence of goals, one per nested step case.
//! Difference matching each goal against its successor exposes the
//! wavefronts that every induction adds. When the same context keeps
//! appearing at one site, the critic speculates the wave rule that would
//! have moved it out of the way, tests it on small ground instances,
//! proves it and retries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::annotation::AnnTerm;
use crate::difference::{dmatch_first, DMatch};
use crate::prover::{prove, wrap_lemma, Budget, ProofTree};
use crate::replay::replay_conjecture;
use crate::rewrite::{normalize, Strategy};
use crate::ripple::derive_wave_rules;
use crate::subst::Substitution;
use crate::term::{Equation, Name, Position, SymbolKind, Term, EQ};
use crate::theory::{LemmaStatus, Theory};

/// Placeholder variable marking the hole of a context.
pub const HOLE: &str = "_";

/// Consecutive confirming matches needed to report divergence.
pub const DIVERGENCE_THRESHOLD: usize = 2;

/// Recursive constructor nesting used for ground instances.
pub const GROUND_DEPTH: usize = 4;

/// One wavefront found by matching goal `i` against goal `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sighting {
    /// Index of the pattern goal.
    pub pair: usize,
    /// Position of the wavefront in the target goal's equation term.
    pub position: Position,
    /// The wavefront with its hole replaced by [`HOLE`].
    pub context: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivergenceReport {
    pub goals: Vec<Equation>,
    /// `matches[i]` annotates goal `i + 1` against goal `i`.
    pub matches: Vec<Option<DMatch>>,
    /// The accumulating context, its sightings in order.
    pub chain: Vec<Sighting>,
}

impl DivergenceReport {
    pub fn evidence(&self) -> usize {
        self.chain.len()
    }

    pub fn context(&self) -> &Term {
        &self.chain[0].context
    }

    pub fn position(&self) -> &Position {
        &self.chain[0].position
    }
}

impl fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "context {} at {} in goal {}, evidence {}",
            self.context(),
            self.position(),
            self.chain[0].pair + 2,
            self.evidence()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateStatus {
    Speculated,
    /// A ground instance on which the sides evaluate differently.
    Refuted(Substitution),
    Proved,
    Assumed,
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateStatus::Speculated => f.write_str("speculated"),
            CandidateStatus::Refuted(s) => write!(f, "refuted by {s}"),
            CandidateStatus::Proved => f.write_str("proved"),
            CandidateStatus::Assumed => f.write_str("assumed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaCandidate {
    pub equation: Equation,
    /// Ground subterms replaced by fresh variables.
    pub generalized: Vec<(Term, Name)>,
    pub status: CandidateStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticError {
    #[error("no lemma candidate admits a wave rule")]
    NoCandidate,
}

/// Finds an accumulating wavefront context in a goal sequence.
pub fn detect_divergence(goals: &[Equation]) -> Option<DivergenceReport> {
    let terms: Vec<Term> = goals.iter().map(Equation::to_term).collect();
    let matches: Vec<Option<DMatch>> = terms.windows(2).map(|w| dmatch_first(&w[0], &w[1])).collect();
    let sightings: Vec<Vec<Sighting>> = matches
        .iter()
        .enumerate()
        .map(|(i, m)| m.as_ref().map(|m| sightings(i, &m.annotated_target)).unwrap_or_default())
        .collect();
    let mut best: Option<Vec<Sighting>> = None;
    for start in 0..sightings.len() {
        for first in &sightings[start] {
            let mut chain = vec![first.clone()];
            for next in &sightings[start + 1..] {
                let last = chain.last().unwrap();
                match next.iter().find(|s| continues(last, s)) {
                    Some(s) => chain.push(s.clone()),
                    None => break,
                }
            }
            if best.as_ref().is_none_or(|b| chain.len() > b.len()) {
                best = Some(chain);
            }
        }
    }
    let chain = best.filter(|c| c.len() >= DIVERGENCE_THRESHOLD)?;
    Some(DivergenceReport {
        goals: goals.to_vec(),
        matches,
        chain,
    })
}

/// Wavefronts strictly below the sides of an annotated equation.
fn sightings(pair: usize, t: &AnnTerm) -> Vec<Sighting> {
    t.fronts()
        .into_iter()
        .filter(|(p, f)| p.len() >= 2 && f.hole_count() == 1)
        .map(|(position, f)| Sighting {
            pair,
            position,
            context: context_of(f),
        })
        .collect()
}

fn context_of(front: &AnnTerm) -> Term {
    fn go(t: &AnnTerm) -> Term {
        match t {
            AnnTerm::Var(v) => Term::Var(v.clone()),
            AnnTerm::Hole(_) => Term::var(HOLE),
            AnnTerm::Front(x) => go(x),
            AnnTerm::App(f, args) => Term::App(f.clone(), args.iter().map(go).collect()),
        }
    }
    go(front)
}

/// `b` repeats `a` at the same site or nested inside its hole.
fn continues(a: &Sighting, b: &Sighting) -> bool {
    if b.pair != a.pair + 1 || canonical(&a.context) != canonical(&b.context) {
        return false;
    }
    let hole = hole_path(&a.context);
    b.position == a.position || b.position == a.position.concat(&hole)
}

fn hole_path(c: &Term) -> Position {
    let mut out = Position::root();
    c.visit(&mut |p, t| {
        if t == &Term::var(HOLE) {
            out = p.clone();
        }
    });
    out
}

/// Renames variables in order of first occurrence, keeping the hole.
fn canonical(t: &Term) -> Term {
    let order: Vec<Name> = t.vars_in_order().into_iter().filter(|v| &**v != HOLE).collect();
    let map: BTreeMap<Name, Name> = order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), Name::from(format!("#{i}"))))
        .collect();
    t.rename(&|v| map.get(v).cloned().unwrap_or_else(|| v.clone()))
}

fn plug(c: &Term, u: &Term) -> Term {
    c.replace_at(&hole_path(c), u.clone()).expect("hole path is valid")
}

/// Speculates lemmas that would ripple the accumulated context outward.
///
/// The left side is the blocked site with one context layer around a fresh
/// variable; the right side applies some symbol to the site without it.
/// Candidates that do not yield a wave rule are dropped. The rest are tested
/// on ground instances and ranked: unrefuted first, then by size.
pub fn propose_lemma(report: &DivergenceReport, th: &Theory) -> Result<Vec<LemmaCandidate>, CriticError> {
    let ctx = report.context();
    if ctx.is_var() {
        return Err(CriticError::NoCandidate);
    }
    let site = &report.chain[0];
    let goal = report.goals[site.pair + 1].to_term();
    let parent = Position(site.position.0[..site.position.len() - 1].to_vec());
    let taken: BTreeSet<Name> = goal.vars().into_iter().chain(ctx.vars()).collect();
    let hole_var = crate::term::fresh_name("X", &taken);
    let blocked = goal.subterm_at(&parent).expect("front position is valid");
    if blocked.head() == Some(EQ) {
        return Err(CriticError::NoCandidate);
    }
    let slot = *site.position.0.last().unwrap();
    let bare = blocked
        .replace_at(&Position(vec![slot]), Term::Var(hole_var.clone()))
        .unwrap();
    let lhs = blocked
        .replace_at(&Position(vec![slot]), plug(ctx, &Term::Var(hole_var.clone())))
        .unwrap();

    let mut atoms: Vec<Term> = Vec::new();
    ctx.visit(&mut |_, t| {
        if !t.occurs(HOLE) && !atoms.contains(t) {
            atoms.push(t.clone());
        }
    });
    for (i, a) in blocked.args().iter().enumerate() {
        if i + 1 != slot && !atoms.contains(a) {
            atoms.push(a.clone());
        }
    }

    let mut raw: Vec<Equation> = Vec::new();
    for sym in th.signature.symbols() {
        if sym.kind == SymbolKind::Function || sym.arity == 0 {
            continue;
        }
        let fillers = vec![atoms.clone(); sym.arity - 1];
        for j in 0..sym.arity {
            for others in crate::annotation::product(fillers.clone()) {
                let mut args = others;
                args.insert(j, bare.clone());
                let rhs = Term::App(sym.name.clone(), args);
                let eq = Equation::new(lhs.clone(), rhs);
                if well_sorted(&eq, th) {
                    raw.push(eq);
                }
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for eq in raw {
        let (gen, map) = generalize(&eq);
        let versions = if map.is_empty() {
            vec![(eq, map)]
        } else {
            vec![(gen, map), (eq, Vec::new())]
        };
        for (e, generalized) in versions {
            let (e, renaming) = rename_canonical(&e);
            if !seen.insert(e.clone()) || derive_wave_rules("candidate", &e).is_empty() {
                continue;
            }
            let generalized = generalized
                .into_iter()
                .map(|(t, v)| (t, renaming.get(&v).cloned().unwrap_or(v)))
                .collect();
            let status = match refute(&e, th) {
                Some(s) => CandidateStatus::Refuted(s),
                None => CandidateStatus::Speculated,
            };
            out.push(LemmaCandidate {
                equation: e,
                generalized,
                status,
            });
        }
    }
    if out.is_empty() {
        return Err(CriticError::NoCandidate);
    }
    out.sort_by_key(|c| (matches!(c.status, CandidateStatus::Refuted(_)), c.equation.to_term().size()));
    Ok(out)
}

fn sort_of(eq: &Equation, t: &Term, th: &Theory) -> Option<Name> {
    match t {
        Term::Var(v) => th.var_sort(eq, v),
        Term::App(f, _) => th.slot_sort(f, 0).cloned(),
    }
}

/// Checks argument and side sorts wherever they are known.
fn well_sorted(eq: &Equation, th: &Theory) -> bool {
    let clash = |a: Option<Name>, b: Option<Name>| matches!((a, b), (Some(a), Some(b)) if a != b);
    if clash(sort_of(eq, &eq.lhs, th), sort_of(eq, &eq.rhs, th)) {
        return false;
    }
    let mut ok = true;
    eq.rhs.visit(&mut |_, t| {
        if let Term::App(f, args) = t {
            for (i, a) in args.iter().enumerate() {
                if clash(th.slot_sort(f, i + 1).cloned(), sort_of(eq, a, th)) {
                    ok = false;
                }
            }
        }
    });
    ok
}

/// Replaces maximal ground subterms occurring on both sides by fresh variables.
fn generalize(eq: &Equation) -> (Equation, Vec<(Term, Name)>) {
    fn maximal_ground(t: &Term, out: &mut Vec<Term>) {
        if t.is_ground() {
            if !out.contains(t) {
                out.push(t.clone());
            }
        } else {
            for a in t.args() {
                maximal_ground(a, out);
            }
        }
    }
    fn contains(t: &Term, u: &Term) -> bool {
        let mut found = false;
        t.visit(&mut |_, s| found |= s == u);
        found
    }
    fn replace(t: &Term, u: &Term, v: &Term) -> Term {
        if t == u {
            return v.clone();
        }
        match t {
            Term::Var(_) => t.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| replace(a, u, v)).collect()),
        }
    }
    let mut grounds = Vec::new();
    maximal_ground(&eq.lhs, &mut grounds);
    grounds.retain(|g| contains(&eq.rhs, g));
    let mut taken = eq.vars();
    let mut map = Vec::new();
    let mut out = eq.clone();
    for g in grounds {
        let v = crate::term::fresh_name("G", &taken);
        taken.insert(v.clone());
        out = out.map(|t| replace(t, &g, &Term::Var(v.clone())));
        map.push((g, v));
    }
    (out, map)
}

/// Renames variables to X, Y, Z, ... in order of first occurrence.
fn rename_canonical(eq: &Equation) -> (Equation, BTreeMap<Name, Name>) {
    const BASE: [&str; 6] = ["X", "Y", "Z", "U", "V", "W"];
    let mut order = eq.lhs.vars_in_order();
    for v in eq.rhs.vars_in_order() {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let map: BTreeMap<Name, Name> = order
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let n = match BASE.get(i) {
                Some(b) => b.to_string(),
                None => format!("X{i}"),
            };
            (v, Name::from(n))
        })
        .collect();
    let eq = eq.map(|t| t.rename(&|v| map[v].clone()));
    (eq, map)
}

/// Ground values of `sort` with at most `depth` nested recursive constructors.
///
/// Sorts without a datatype get two opaque constants.
pub fn ground_values(th: &Theory, sort: Option<&str>, depth: usize) -> Vec<Term> {
    let Some(dt) = sort.and_then(|s| th.datatype(s)) else {
        return vec![Term::constant("#a"), Term::constant("#b")];
    };
    let mut out = Vec::new();
    for c in &dt.constructors {
        let recursive = c.args.contains(&dt.name);
        if recursive && depth == 0 {
            continue;
        }
        let choices: Vec<Vec<Term>> = c
            .args
            .iter()
            .map(|s| {
                if *s == dt.name {
                    ground_values(th, Some(s), depth - 1)
                } else {
                    ground_values(th, Some(s), depth.min(1))
                }
            })
            .collect();
        for args in crate::annotation::product(choices) {
            out.push(Term::App(c.name.clone(), args));
        }
    }
    out
}

/// A ground instance on which the sides normalize to different terms.
pub fn refute(eq: &Equation, th: &Theory) -> Option<Substitution> {
    let vars: Vec<Name> = eq.vars().into_iter().collect();
    let domains: Vec<Vec<Term>> = vars
        .iter()
        .map(|v| ground_values(th, th.var_sort(eq, v).as_deref(), GROUND_DEPTH))
        .collect();
    for values in crate::annotation::product(domains) {
        let s = vars.iter().cloned().zip(values).collect::<Substitution>();
        let eval = |t: &Term| normalize(&s.apply(t), &th.defs, Strategy::LeftmostInnermost, 10_000).ok();
        if let (Some((l, _)), Some((r, _))) = (eval(&eq.lhs), eval(&eq.rhs)) {
            if l != r {
                return Some(s);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticConfig {
    pub budget: Budget,
    /// Nesting of critic runs allowed inside lemma proofs.
    pub depth: usize,
    /// Install unproved, unrefuted candidates as assumed.
    pub assume: bool,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            budget: Budget::default(),
            depth: 1,
            assume: false,
        }
    }
}

/// Everything a critic run produced.
#[derive(Debug, Clone)]
pub struct CriticRun {
    /// Goal sequence of the first failed attempt.
    pub history: Vec<Equation>,
    pub report: Option<DivergenceReport>,
    pub candidates: Vec<LemmaCandidate>,
    pub tree: ProofTree,
    /// The theory with any installed lemma.
    pub theory: Theory,
}

/// Proves `conjecture`, patching a diverging attempt with a speculated lemma.
pub fn patch_and_retry(conjecture: &Equation, th: &Theory, budget: Budget) -> ProofTree {
    run_critic(conjecture, th, CriticConfig { budget, ..CriticConfig::default() }).tree
}

pub fn run_critic(conjecture: &Equation, th: &Theory, config: CriticConfig) -> CriticRun {
    let tree = prove(conjecture, th, config.budget);
    let mut run = CriticRun {
        history: Vec::new(),
        report: None,
        candidates: Vec::new(),
        tree,
        theory: th.clone(),
    };
    if run.tree.is_closed() {
        return run;
    }
    run.history = run.tree.goal_history();
    run.report = detect_divergence(&run.history);
    let Some(report) = &run.report else {
        return run;
    };
    run.candidates = propose_lemma(report, th).unwrap_or_default();
    let name = fresh_lemma_name(th);
    for i in 0..run.candidates.len() {
        if run.candidates[i].status != CandidateStatus::Speculated {
            continue;
        }
        let eq = run.candidates[i].equation.clone();
        let proof = if config.depth == 0 {
            prove(&eq, th, config.budget)
        } else {
            let inner = CriticConfig {
                depth: config.depth - 1,
                ..config
            };
            run_critic(&eq, th, inner).tree
        };
        let (status, proof) = if proof.is_closed() && replay_conjecture(&proof, &eq, th).is_ok() {
            (LemmaStatus::Proved, Some(proof))
        } else if config.assume {
            (LemmaStatus::Assumed, None)
        } else {
            continue;
        };
        let mut patched = th.clone();
        patched.install_lemma(&name, eq.clone(), status);
        let retry = prove(conjecture, &patched, config.budget);
        if !retry.is_closed() {
            continue;
        }
        run.candidates[i].status = match status {
            LemmaStatus::Proved => CandidateStatus::Proved,
            _ => CandidateStatus::Assumed,
        };
        run.tree = wrap_lemma(name, eq, status, proof, retry);
        run.theory = patched;
        break;
    }
    run
}

fn fresh_lemma_name(th: &Theory) -> Name {
    let taken: BTreeSet<Name> = th
        .defs
        .iter()
        .map(|r| r.name.clone())
        .chain(th.lemmas.iter().map(|l| l.name.clone()))
        .collect();
    (1..)
        .map(|i| Name::from(format!("critic.{i}")))
        .find(|n| !taken.contains(n))
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theory() -> Theory {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../theories/list.thy")).unwrap();
        Theory::parse(&text).unwrap()
    }

    #[test]
    fn rev_rev_diverges_at_rev_argument() {
        let th = theory();
        let tree = prove(th.conjecture("rev_rev").unwrap(), &th, Budget::default());
        let r = detect_divergence(&tree.goal_history()).unwrap();
        assert_eq!(r.evidence(), 2);
        assert_eq!(r.position(), &Position(vec![1, 1]));
        assert_eq!(canonical(r.context()).to_string(), "(append _ (cons #0 nil))");
    }

    #[test]
    fn constant_sequence_does_not_diverge() {
        let th = theory();
        let g = th.conjecture("rev_rev").unwrap().clone();
        assert!(detect_divergence(&[g.clone(), g.clone(), g]).is_none());
    }

    #[test]
    fn successor_nesting_diverges() {
        let goals: Vec<Equation> = (0..4)
            .map(|k| {
                let mut t = Term::var("x");
                for _ in 0..k {
                    t = Term::app("s", vec![t]);
                }
                Equation::new(Term::app("f", vec![Term::app("g", vec![t])]), Term::var("x"))
            })
            .collect();
        let r = detect_divergence(&goals).unwrap();
        assert_eq!(r.evidence(), 3);
        assert_eq!(r.context(), &Term::app("s", vec![Term::var(HOLE)]));
    }

    #[test]
    fn rev_lemma_is_first_candidate() {
        let th = theory();
        let tree = prove(th.conjecture("rev_rev").unwrap(), &th, Budget::default());
        let r = detect_divergence(&tree.goal_history()).unwrap();
        let cands = propose_lemma(&r, &th).unwrap();
        assert_eq!(cands[0].equation.to_string(), "(rev (append X (cons Y nil))) = (cons Y (rev X))");
        assert_eq!(cands[0].status, CandidateStatus::Speculated);
        assert!(cands
            .iter()
            .any(|c| c.equation.to_string() == "(rev (append X (cons Y nil))) = (append (rev X) (cons Y nil))"
                && matches!(c.status, CandidateStatus::Refuted(_))));
    }

    #[test]
    fn critic_closes_rev_rev() {
        let th = theory();
        let conj = th.conjecture("rev_rev").unwrap();
        let run = run_critic(conj, &th, CriticConfig::default());
        assert!(run.tree.is_closed());
        assert_eq!(run.tree.kind.label(), "lemma");
        replay_conjecture(&run.tree, conj, &th).unwrap();
    }

    #[test]
    fn provable_conjecture_bypasses_critic() {
        let th = theory();
        let conj = th.conjecture("append_nil").unwrap();
        let run = run_critic(conj, &th, CriticConfig::default());
        assert!(run.report.is_none());
        assert_eq!(run.tree, prove(conj, &th, Budget::default()));
    }
}
