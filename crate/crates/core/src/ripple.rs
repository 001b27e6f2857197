//! Wave rules, rippling and fertilization.
//!
//! Goals are equations whose sides carry annotations. They are handled as a
//! single annotated term `(= L R)`, so step positions start with 1 or 2.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::annotation::{measure_less, AnnTerm, Measure, Region};
use crate::difference::for_each_dunifier;
use crate::subst::Substitution;
use crate::term::{Equation, Name, Position, Term, EQ};

/// Why a wave rule is admissible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    /// A skeleton shared by both sides.
    pub skeleton: Term,
    pub lhs_measure: Measure,
    pub rhs_measure: Measure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveRule {
    pub name: Name,
    /// The oriented equation this rule annotates.
    pub source: Equation,
    pub lhs: AnnTerm,
    pub rhs: AnnTerm,
    pub certificate: Certificate,
}

impl WaveRule {
    pub fn cost(&self) -> usize {
        self.lhs.annotation_cost() + self.rhs.annotation_cost()
    }
}

impl fmt::Display for WaveRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} => {}", self.name, self.lhs, self.rhs)
    }
}

/// Every admissible annotation of `eq` as a wave rule, cheapest first.
pub fn derive_wave_rules(name: &str, eq: &Equation) -> Vec<WaveRule> {
    let mut found: BTreeMap<(usize, BTreeSet<Position>, BTreeSet<Position>), WaveRule> = BTreeMap::new();
    for_each_dunifier(&eq.lhs, &eq.rhs, &|_| true, |_, l, r| {
        let (lm, rm) = (l.measure(), r.measure());
        if !measure_less(&rm, &lm) {
            return;
        }
        let key = (
            l.annotation_cost() + r.annotation_cost(),
            l.material_positions(),
            r.material_positions(),
        );
        if found.contains_key(&key) {
            return;
        }
        let rs = r.skeletons();
        let skeleton = l.skeletons().into_iter().find(|s| rs.contains(s)).expect("shared skeleton");
        found.insert(
            key,
            WaveRule {
                name: name.into(),
                source: eq.clone(),
                lhs: l.clone(),
                rhs: r.clone(),
                certificate: Certificate {
                    skeleton,
                    lhs_measure: lm,
                    rhs_measure: rm,
                },
            },
        );
    });
    found.into_values().collect()
}

/// The annotated equation `(= l r)`.
pub fn ann_equation(l: AnnTerm, r: AnnTerm) -> AnnTerm {
    AnnTerm::App(EQ.into(), vec![l, r])
}

/// Splits an annotated equation into its sides.
pub fn sides(goal: &AnnTerm) -> Option<(&AnnTerm, &AnnTerm)> {
    match goal {
        AnnTerm::App(h, args) if &**h == EQ && args.len() == 2 => Some((&args[0], &args[1])),
        _ => None,
    }
}

/// Renders an annotated equation as `L = R`, anything else as itself.
pub fn render_goal(goal: &AnnTerm) -> String {
    match sides(goal) {
        Some((l, r)) => format!("{l} = {r}"),
        None => goal.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RippleStep {
    pub rule: WaveRule,
    pub position: Position,
    pub subst: Substitution,
    pub before: AnnTerm,
    pub after: AnnTerm,
    /// Whether the skeleton set is unchanged (always true when every front of `before` has one hole).
    pub skeletons_equal: bool,
}

impl fmt::Display for RippleStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} ~> {}",
            self.rule.name,
            self.position,
            render_goal(&self.before),
            render_goal(&self.after)
        )?;
        if !self.skeletons_equal {
            f.write_str(" (skeleton set narrowed)")?;
        }
        Ok(())
    }
}

/// Matches a rule side against a goal node, marks included. Rule variables
/// bind any goal node that is not a wavehole.
fn amatch(p: &AnnTerm, t: &AnnTerm, s: &mut BTreeMap<Name, AnnTerm>) -> bool {
    match (p, t) {
        (AnnTerm::Var(v), _) => {
            if matches!(t, AnnTerm::Hole(_)) {
                return false;
            }
            match s.get(v) {
                Some(b) => b == t,
                None => {
                    s.insert(v.clone(), t.clone());
                    true
                }
            }
        }
        (AnnTerm::Front(x), AnnTerm::Front(y)) | (AnnTerm::Hole(x), AnnTerm::Hole(y)) => amatch(x, y, s),
        (AnnTerm::App(f, ps), AnnTerm::App(g, ts)) if f == g && ps.len() == ts.len() => {
            ps.iter().zip(ts).all(|(a, b)| amatch(a, b, s))
        }
        _ => false,
    }
}

fn instantiate(t: &AnnTerm, s: &BTreeMap<Name, AnnTerm>) -> AnnTerm {
    match t {
        AnnTerm::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        AnnTerm::App(h, args) => AnnTerm::App(h.clone(), args.iter().map(|a| instantiate(a, s)).collect()),
        AnnTerm::Front(x) => AnnTerm::front(instantiate(x, s)),
        AnnTerm::Hole(x) => AnnTerm::hole(instantiate(x, s)),
    }
}

fn single_holed(t: &AnnTerm) -> bool {
    t.fronts().iter().all(|(_, f)| f.hole_count() == 1)
}

/// Applies `rule` at `pos` if it matches there and the result passes the
/// well-formedness, skeleton and measure checks.
pub fn apply_wave_rule(goal: &AnnTerm, rule: &WaveRule, pos: &Position) -> Option<RippleStep> {
    let node = goal.subterm_at(pos)?;
    let (inner, in_hole) = match node {
        AnnTerm::Hole(x) => (&**x, true),
        _ => (node, false),
    };
    let mut s = BTreeMap::new();
    if !amatch(&rule.lhs, inner, &mut s) {
        return None;
    }
    let mut replacement = instantiate(&rule.rhs, &s);
    if in_hole {
        replacement = AnnTerm::hole(replacement);
    }
    let after = goal.replace_at(pos, replacement)?.normalize();
    if !after.is_wat() || !measure_less(&after.measure(), &goal.measure()) {
        return None;
    }
    let (before_sk, after_sk) = (goal.skeletons(), after.skeletons());
    if before_sk.is_disjoint(&after_sk) {
        return None;
    }
    let skeletons_equal = before_sk == after_sk;
    if !skeletons_equal && single_holed(goal) {
        return None;
    }
    Some(RippleStep {
        rule: rule.clone(),
        position: pos.clone(),
        subst: s.into_iter().map(|(v, a)| (v, a.erase())).collect(),
        before: goal.clone(),
        after,
        skeletons_equal,
    })
}

/// Positions where a wave rule may apply: skeleton nodes, hole contents and front slots.
fn skeleton_positions(goal: &AnnTerm) -> Vec<Position> {
    goal.regions()
        .into_iter()
        .filter(|(_, r)| *r == Region::Skeleton)
        .map(|(p, _)| p)
        .collect()
}

/// Every single wave-rule step, ordered by rule and then leftmost-outermost position.
pub fn ripple_step(goal: &AnnTerm, rules: &[WaveRule]) -> Vec<RippleStep> {
    if !goal.is_annotated() {
        return Vec::new();
    }
    let positions = skeleton_positions(goal);
    let mut out = Vec::new();
    for rule in rules {
        for p in &positions {
            out.extend(apply_wave_rule(goal, rule, p));
        }
    }
    out
}

fn first_step(goal: &AnnTerm, rules: &[WaveRule]) -> Option<RippleStep> {
    if !goal.is_annotated() {
        return None;
    }
    let positions = skeleton_positions(goal);
    rules
        .iter()
        .find_map(|rule| positions.iter().find_map(|p| apply_wave_rule(goal, rule, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RippleOutcome {
    /// No wavefront stands between the skeleton and the hypothesis.
    FullyRippled,
    Blocked,
    /// Rippled and then rewritten with the hypothesis.
    Fertilized,
}

impl fmt::Display for RippleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RippleOutcome::FullyRippled => "fully rippled",
            RippleOutcome::Blocked => "blocked",
            RippleOutcome::Fertilized => "fertilized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RippleTrace {
    pub initial: AnnTerm,
    pub steps: Vec<RippleStep>,
    pub outcome: RippleOutcome,
}

impl RippleTrace {
    pub fn last(&self) -> &AnnTerm {
        self.steps.last().map_or(&self.initial, |s| &s.after)
    }

    /// One line per step.
    pub fn lines(&self) -> Vec<String> {
        self.steps.iter().map(RippleStep::to_string).collect()
    }
}

/// Default bound on the number of ripple steps.
pub const RIPPLE_BUDGET: usize = 50;

/// Applies the first available step until none applies or `budget` steps
/// were taken. With a hypothesis the result is fully rippled when the
/// hypothesis can fertilize it; without one, when every wavefront sits at
/// the root of a side.
pub fn ripple(goal: &AnnTerm, rules: &[WaveRule], hypothesis: Option<&Equation>, budget: usize) -> RippleTrace {
    let mut steps: Vec<RippleStep> = Vec::new();
    let mut cur = goal.clone();
    while steps.len() < budget {
        let Some(step) = first_step(&cur, rules) else { break };
        cur = step.after.clone();
        steps.push(step);
    }
    let done = match hypothesis {
        Some(h) => fertilize(&cur, h).is_ok(),
        None => cur.fronts().iter().all(|(p, _)| p.len() <= 1),
    };
    RippleTrace {
        initial: goal.clone(),
        steps,
        outcome: if done { RippleOutcome::FullyRippled } else { RippleOutcome::Blocked },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FertilizeError {
    #[error("goal is already trivial")]
    Trivial,
    #[error("hypothesis does not occur in the skeleton of the goal")]
    NotApplicable,
}

/// The result of one fertilization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fertilization {
    pub position: Position,
    /// The hypothesis as used, oriented left to right.
    pub used: Equation,
    pub after: AnnTerm,
}

/// Rewrites the goal once with the hypothesis at the leftmost-innermost
/// unannotated skeleton subterm equal to one of its sides, trying left to
/// right before right to left. Hypothesis variables are held fixed.
pub fn fertilize(goal: &AnnTerm, hypothesis: &Equation) -> Result<Fertilization, FertilizeError> {
    if let Some((l, r)) = sides(goal) {
        if l.erase() == r.erase() {
            return Err(FertilizeError::Trivial);
        }
    }
    let mut positions = skeleton_positions(goal);
    positions.sort_by(innermost_order);
    let orientations = [hypothesis.clone(), hypothesis.swap()];
    for (k, used) in orientations.iter().enumerate() {
        if k == 1 && used.lhs.is_var() {
            continue;
        }
        for p in &positions {
            let node = goal.subterm_at(p).expect("own position");
            let (inner, in_hole) = match node {
                AnnTerm::Hole(x) => (&**x, true),
                _ => (node, false),
            };
            if inner.is_annotated() || inner.erase() != used.lhs {
                continue;
            }
            let mut replacement = AnnTerm::from(&used.rhs);
            if in_hole {
                replacement = AnnTerm::hole(replacement);
            }
            let after = goal.replace_at(p, replacement).expect("own position").normalize();
            return Ok(Fertilization {
                position: p.clone(),
                used: used.clone(),
                after,
            });
        }
    }
    Err(FertilizeError::NotApplicable)
}

/// Leftmost-innermost order: descendants before ancestors, left before right.
fn innermost_order(a: &Position, b: &Position) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    for (x, y) in a.0.iter().zip(&b.0) {
        if x != y {
            return x.cmp(y);
        }
    }
    match a.len().cmp(&b.len()) {
        Ordering::Greater => Ordering::Less,
        Ordering::Less => Ordering::Greater,
        Ordering::Equal => Ordering::Equal,
    }
}

/// Ripples, then fertilizes with the hypothesis when it applies.
pub fn ripple_and_fertilize(
    goal: &AnnTerm,
    rules: &[WaveRule],
    hypothesis: &Equation,
    budget: usize,
) -> (RippleTrace, Option<Fertilization>) {
    let mut trace = ripple(goal, rules, Some(hypothesis), budget);
    let fert = fertilize(trace.last(), hypothesis).ok();
    if fert.is_some() {
        trace.outcome = RippleOutcome::Fertilized;
    }
    (trace, fert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Signature;

    fn sig() -> Signature {
        let mut s = Signature::permissive();
        for v in ["x", "e", "a", "b", "c"] {
            s.declare_var(v, None);
        }
        s
    }

    fn t(text: &str) -> Term {
        sig().parse_term(text).unwrap()
    }

    fn ann(text: &str) -> AnnTerm {
        sig().parse_ann_term(text).unwrap()
    }

    fn goal(l: &str, r: &str) -> AnnTerm {
        ann_equation(ann(l), ann(r))
    }

    fn append_rules() -> Vec<WaveRule> {
        let mut rules = derive_wave_rules("append.1", &Equation::new(t("(append nil c)"), t("c")));
        rules.extend(derive_wave_rules(
            "append.2",
            &Equation::new(t("(append (cons a b) c)"), t("(cons a (append b c))")),
        ));
        rules
    }

    #[test]
    fn append_rule_is_derived() {
        let rules = derive_wave_rules(
            "append.2",
            &Equation::new(t("(append (cons a b) c)"), t("(cons a (append b c))")),
        );
        let r = rules
            .iter()
            .find(|r| r.lhs == ann("(append {cons a [b]} c)") && r.rhs == ann("{cons a [(append b c)]}"))
            .expect("append rule");
        assert_eq!(r.certificate.skeleton, t("(append b c)"));
        for r in &rules {
            assert!(r.lhs.skeletons().contains(&r.certificate.skeleton));
            assert!(r.rhs.skeletons().contains(&r.certificate.skeleton));
            assert!(measure_less(&r.rhs.measure(), &r.lhs.measure()));
        }
        let costs: Vec<usize> = rules.iter().map(WaveRule::cost).collect();
        assert!(costs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identity_has_no_wave_rule() {
        assert!(derive_wave_rules("id", &Equation::new(t("x"), t("x"))).is_empty());
    }

    #[test]
    fn append_step() {
        let g = goal("(append {cons e [x]} nil)", "{cons e [x]}");
        let steps = ripple_step(&g, &append_rules());
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].after, goal("{cons e [(append x nil)]}", "{cons e [x]}"));
        assert_eq!(steps[0].position, Position(vec![1]));
        assert!(ripple_step(&ann_equation(ann("(append x nil)"), ann("x")), &append_rules()).is_empty());
    }

    #[test]
    fn append_nil_ripples_and_fertilizes() {
        let g = goal("(append {cons e [x]} nil)", "{cons e [x]}");
        let ih = Equation::new(t("(append x nil)"), t("x"));
        let trace = ripple(&g, &append_rules(), Some(&ih), RIPPLE_BUDGET);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.outcome, RippleOutcome::FullyRippled);
        let f = fertilize(trace.last(), &ih).unwrap();
        assert_eq!(f.after, goal("{cons e [x]}", "{cons e [x]}"));
        assert_eq!(f.position, Position(vec![1, 2]));
        assert_eq!(fertilize(&f.after, &ih), Err(FertilizeError::Trivial));
        assert_eq!(
            trace.lines(),
            ["append.2 [1] (append {cons e [x]} nil) = {cons e [x]} ~> {cons e [(append x nil)]} = {cons e [x]}"]
        );
    }

    #[test]
    fn unannotated_goal_takes_no_steps() {
        let g = goal("(append x nil)", "x");
        let trace = ripple(&g, &append_rules(), None, RIPPLE_BUDGET);
        assert!(trace.steps.is_empty());
        assert_eq!(trace.outcome, RippleOutcome::FullyRippled);
    }
}
