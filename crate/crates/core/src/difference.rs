//! Difference matching and difference unification.
//!
//! Difference matching annotates only the target: the pattern, after
//! instantiation, must be one of the skeletons of the annotated target.
//! Difference unification annotates both sides and unifies a skeleton of
//! each. Variables occurring in both inputs are held fixed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::annotation::{all_annotations, material_shapes, product, AnnTerm};
use crate::search::{lfs_first, Expansion, FnTree};
use crate::subst::{unify_with, Substitution};
use crate::term::{Name, Position, Term};

/// A difference match of a pattern against a target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DMatch {
    pub subst: Substitution,
    pub annotated_target: AnnTerm,
}

impl DMatch {
    pub fn cost(&self) -> usize {
        self.annotated_target.annotation_cost()
    }
}

/// A difference unifier of two terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DUnifier {
    pub subst: Substitution,
    pub annotated_left: AnnTerm,
    pub annotated_right: AnnTerm,
    pub annotation_cost: usize,
}

impl DUnifier {
    fn new(subst: Substitution, annotated_left: AnnTerm, annotated_right: AnnTerm) -> Self {
        let annotation_cost = annotated_left.annotation_cost() + annotated_right.annotation_cost();
        DUnifier {
            subst,
            annotated_left,
            annotated_right,
            annotation_cost,
        }
    }

    fn sort_key(&self) -> (usize, BTreeSet<Position>, BTreeSet<Position>, &Substitution) {
        (
            self.annotation_cost,
            self.annotated_left.material_positions(),
            self.annotated_right.material_positions(),
            &self.subst,
        )
    }
}

fn pattern_bindable(pattern: &Term, target: &Term) -> impl Fn(&str) -> bool {
    let rigid = target.vars();
    let own = pattern.vars();
    move |v: &str| own.contains(v) && !rigid.contains(v)
}

// ---------------------------------------------------------------------------
// First match

type MemoKey = (usize, usize, Vec<(Name, Term)>);
type MemoEntry = Option<(Vec<(Name, Term)>, AnnTerm)>;

struct First<'a> {
    bindable: &'a dyn Fn(&str) -> bool,
    memo: HashMap<MemoKey, MemoEntry>,
    pattern_vars: HashMap<usize, Vec<Name>>,
    visits: usize,
}

fn addr(t: &Term) -> usize {
    t as *const Term as usize
}

impl First<'_> {
    fn vars_of(&mut self, p: &Term) -> Vec<Name> {
        let bindable = self.bindable;
        self.pattern_vars
            .entry(addr(p))
            .or_insert_with(|| p.vars().into_iter().filter(|v| bindable(v)).collect())
            .clone()
    }

    /// `stable` is true while `p` points into the caller's pattern, which
    /// makes its address usable as a memo key.
    fn go(&mut self, p: &Term, t: &Term, s: &Substitution, stable: bool) -> Option<(Substitution, AnnTerm)> {
        self.visits += 1;
        if let Term::Var(x) = p {
            if (self.bindable)(x) {
                if let Some(b) = s.get(x) {
                    let b = b.clone();
                    return self.go(&b, t, s, false);
                }
                let mut s2 = s.clone();
                s2.insert(x.clone(), t.clone());
                return Some((s2, AnnTerm::from(t)));
            }
        }
        if !stable {
            return self.compute(p, t, s, false);
        }
        let vars = self.vars_of(p);
        let bound: Vec<(Name, Term)> = vars
            .iter()
            .filter_map(|v| s.get(v).map(|b| (v.clone(), b.clone())))
            .collect();
        let key = (addr(p), addr(t), bound);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone().map(|(added, a)| {
                let mut s2 = s.clone();
                for (v, b) in added {
                    s2.insert(v, b);
                }
                (s2, a)
            });
        }
        let res = self.compute(p, t, s, true);
        let entry = res.as_ref().map(|(s2, a)| {
            let added = vars
                .iter()
                .filter_map(|v| s2.get(v).map(|b| (v.clone(), b.clone())))
                .collect();
            (added, a.clone())
        });
        self.memo.insert(key, entry);
        res
    }

    fn compute(&mut self, p: &Term, t: &Term, s: &Substitution, stable: bool) -> Option<(Substitution, AnnTerm)> {
        match (p, t) {
            (Term::Var(x), Term::Var(y)) if x == y => return Some((s.clone(), AnnTerm::Var(y.clone()))),
            (Term::App(f, ps), Term::App(g, ts)) if f == g && ps.len() == ts.len() => {
                let mut cur = s.clone();
                let mut kids = Vec::with_capacity(ts.len());
                for (pi, ti) in ps.iter().zip(ts) {
                    match self.go(pi, ti, &cur, stable) {
                        Some((s2, a)) => {
                            cur = s2;
                            kids.push(a);
                        }
                        None => break,
                    }
                }
                if kids.len() == ts.len() {
                    return Some((cur, AnnTerm::App(g.clone(), kids)));
                }
            }
            _ => {}
        }
        let Term::App(g, ts) = t else { return None };
        for (i, ti) in ts.iter().enumerate() {
            if let Some((s2, a)) = self.go(p, ti, s, stable) {
                let mut hole = Some(a);
                let kids = ts
                    .iter()
                    .enumerate()
                    .map(|(j, tj)| match (j == i).then(|| hole.take()).flatten() {
                        Some(a) => AnnTerm::hole(a),
                        None => AnnTerm::from(tj),
                    })
                    .collect();
                return Some((s2, AnnTerm::front(AnnTerm::App(g.clone(), kids))));
            }
        }
        None
    }
}

/// One difference match, found greedily: a free pattern variable takes the
/// whole target, matching heads are descended, and otherwise the target
/// root is hidden in a wavefront with a single hole.
pub fn dmatch_first(pattern: &Term, target: &Term) -> Option<DMatch> {
    dmatch_first_counted(pattern, target).0
}

/// [`dmatch_first`] together with the number of node visits it made.
pub fn dmatch_first_counted(pattern: &Term, target: &Term) -> (Option<DMatch>, usize) {
    let bindable = pattern_bindable(pattern, target);
    let mut search = First {
        bindable: &bindable,
        memo: HashMap::new(),
        pattern_vars: HashMap::new(),
        visits: 0,
    };
    let res = search.go(pattern, target, &Substitution::new(), true);
    let visits = search.visits;
    let found = res.map(|(subst, a)| DMatch {
        subst,
        annotated_target: a.normalize(),
    });
    // Greedy descent commits to the first binding of a repeated variable.
    if found.is_none() && !is_linear(pattern) {
        return (dmatch_all(pattern, target, 1).pop(), visits);
    }
    (found, visits)
}

fn is_linear(t: &Term) -> bool {
    let vars = t.vars_in_order();
    let mut count = 0;
    t.visit(&mut |_, s| count += s.is_var() as usize);
    count == vars.len()
}

// ---------------------------------------------------------------------------
// All matches

struct All<'a> {
    bindable: &'a dyn Fn(&str) -> bool,
}

type Partial = (Substitution, AnnTerm);

impl All<'_> {
    /// Every normalized annotation of `t` (with the substitution extending
    /// `s`) having `s'(p)` as a skeleton.
    fn gen(&self, p: &Term, t: &Term, s: &Substitution) -> Vec<Partial> {
        if let Term::Var(x) = p {
            if (self.bindable)(x) {
                if let Some(b) = s.get(x) {
                    let b = b.clone();
                    return self.gen(&b, t, s);
                }
                let mut out = Vec::new();
                for a in all_annotations(t, true) {
                    for sk in a.skeletons() {
                        let mut s2 = s.clone();
                        s2.insert(x.clone(), sk);
                        out.push((s2, a.clone()));
                    }
                }
                return out;
            }
        }
        // Every pattern node survives in the skeleton.
        if p.size() > t.size() {
            return Vec::new();
        }
        let mut out = Vec::new();
        match (p, t) {
            (Term::Var(x), Term::Var(y)) if x == y => out.push((s.clone(), AnnTerm::Var(y.clone()))),
            (Term::App(f, ps), Term::App(g, ts)) if f == g && ps.len() == ts.len() => {
                let mut partial: Vec<(Substitution, Vec<AnnTerm>)> = vec![(s.clone(), Vec::new())];
                for (pi, ti) in ps.iter().zip(ts) {
                    let mut next = Vec::new();
                    for (s1, kids) in &partial {
                        for (s2, a) in self.gen(pi, ti, s1) {
                            let mut k = kids.clone();
                            k.push(a);
                            next.push((s2, k));
                        }
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial.into_iter().map(|(s2, kids)| (s2, AnnTerm::App(g.clone(), kids))));
            }
            _ => {}
        }
        if !t.args().is_empty() {
            out.extend(
                self.focused(p, t, s)
                    .into_iter()
                    .map(|(s2, m)| (s2, AnnTerm::front(m))),
            );
        }
        out
    }

    /// `t` as wavefront material with one distinguished hole whose content
    /// carries the match of `p`.
    fn focused(&self, p: &Term, t: &Term, s: &Substitution) -> Vec<Partial> {
        let Term::App(g, ts) = t else { return Vec::new() };
        let mut out = Vec::new();
        for (j, tj) in ts.iter().enumerate() {
            let mut focus: Vec<Partial> = self
                .gen(p, tj, s)
                .into_iter()
                .filter(|(_, a)| !a.is_front())
                .map(|(s2, a)| (s2, AnnTerm::hole(a)))
                .collect();
            focus.extend(self.focused(p, tj, s));
            if focus.is_empty() {
                continue;
            }
            let others: Vec<Vec<AnnTerm>> = ts
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, ti)| free_child(ti))
                .collect();
            for rest in product(others) {
                for (s2, f) in &focus {
                    let mut kids = rest.clone();
                    kids.insert(j, f.clone());
                    out.push((s2.clone(), AnnTerm::App(g.clone(), kids)));
                }
            }
        }
        out
    }
}

/// A child of wavefront material that is not the distinguished hole.
fn free_child(t: &Term) -> Vec<AnnTerm> {
    let mut opts: Vec<AnnTerm> = all_annotations(t, false).into_iter().map(AnnTerm::hole).collect();
    opts.extend(material_shapes(t).into_iter().map(|(m, _)| m));
    opts
}

/// Every difference match, cheapest first, at most `cap` of them.
pub fn dmatch_all(pattern: &Term, target: &Term, cap: usize) -> Vec<DMatch> {
    let bindable = pattern_bindable(pattern, target);
    let all = All { bindable: &bindable };
    let found: BTreeSet<Partial> = all.gen(pattern, target, &Substitution::new()).into_iter().collect();
    let mut keyed: Vec<(usize, BTreeSet<Position>, DMatch)> = found
        .into_iter()
        .map(|(subst, a)| {
            (
                a.annotation_cost(),
                a.material_positions(),
                DMatch {
                    subst,
                    annotated_target: a,
                },
            )
        })
        .collect();
    keyed.sort_by(|x, y| (x.0, &x.1, &x.2.subst).cmp(&(y.0, &y.1, &y.2.subst)));
    keyed.into_iter().take(cap).map(|(_, _, m)| m).collect()
}

// ---------------------------------------------------------------------------
// Difference unification

/// Calls `f` with every (substitution, left, right) triple where some
/// skeleton of each annotation unify under the substitution. A triple is
/// reported once per distinct unifier.
pub fn for_each_dunifier(
    s: &Term,
    t: &Term,
    rigid: &dyn Fn(&str) -> bool,
    mut f: impl FnMut(&Substitution, &AnnTerm, &AnnTerm),
) {
    let left = by_skeleton(s);
    let right = by_skeleton(t);
    for (ss, ls) in &left {
        for (st, rs) in &right {
            let Some(sigma) = unify_with(ss, st, rigid) else { continue };
            for a in ls {
                for b in rs {
                    f(&sigma, a, b);
                }
            }
        }
    }
}

fn by_skeleton(t: &Term) -> BTreeMap<Term, Vec<AnnTerm>> {
    let mut m: BTreeMap<Term, Vec<AnnTerm>> = BTreeMap::new();
    for a in all_annotations(t, true) {
        for sk in a.skeletons() {
            m.entry(sk).or_default().push(a.clone());
        }
    }
    m
}

/// Every difference unifier, cheapest first, at most `cap` of them.
/// Variables occurring in both terms are held fixed.
pub fn dunify(s: &Term, t: &Term, cap: usize) -> Vec<DUnifier> {
    let shared = shared_vars(s, t);
    dunify_with(s, t, &|v: &str| shared.contains(v), cap)
}

/// [`dunify`] with an explicit set of fixed variables.
pub fn dunify_with(s: &Term, t: &Term, rigid: &dyn Fn(&str) -> bool, cap: usize) -> Vec<DUnifier> {
    let mut seen = BTreeSet::new();
    for_each_dunifier(s, t, rigid, |sigma, a, b| {
        seen.insert((sigma.clone(), a.clone(), b.clone()));
    });
    let mut out: Vec<DUnifier> = seen.into_iter().map(|(sg, a, b)| DUnifier::new(sg, a, b)).collect();
    out.sort_by_cached_key(|u| {
        let (c, l, r, s) = u.sort_key();
        (c, l, r, s.clone())
    });
    out.truncate(cap);
    out
}

fn shared_vars(s: &Term, t: &Term) -> BTreeSet<Name> {
    s.vars().intersection(&t.vars()).cloned().collect()
}

/// A difference unifier of least annotation cost, or `None` if there is none.
///
/// Runs left-first search over one decision per node of `s` and then of
/// `t` in preorder: the left branch puts the node in wavefront material,
/// the right branch keeps it in the skeleton. The number of left branches
/// is therefore the annotation cost.
pub fn dunify_minimal(s: &Term, t: &Term) -> Option<DUnifier> {
    let shared = shared_vars(s, t);
    dunify_minimal_with(s, t, &|v: &str| shared.contains(v))
}

/// [`dunify_minimal`] with an explicit set of fixed variables.
pub fn dunify_minimal_with(s: &Term, t: &Term, rigid: &dyn Fn(&str) -> bool) -> Option<DUnifier> {
    let nodes = Nodes::of(&[s, t]);
    let n = nodes.positions.len();
    let tree = FnTree::new((0usize, Vec::<bool>::new()), n, |(i, chosen): &(usize, Vec<bool>)| {
        if *i == n {
            return Expansion::Leaf(evaluate(s, t, &nodes, chosen, rigid));
        }
        if let Some(&true) = chosen.last() {
            // The node just made material starts a wavefront at a leaf.
            let last = i - 1;
            if nodes.is_leaf[last] && nodes.parent[last].is_none_or(|q| !chosen[q]) {
                return Expansion::Leaf(None);
            }
        }
        let mut l = chosen.clone();
        l.push(true);
        let mut r = chosen.clone();
        r.push(false);
        Expansion::Branch((i + 1, l), (i + 1, r))
    });
    lfs_first(&tree, |v| v.is_some()).ok().flatten().and_then(|v| v.value)
}

/// Preorder node table over several terms.
struct Nodes {
    /// (which term, position).
    positions: Vec<(usize, Position)>,
    parent: Vec<Option<usize>>,
    is_leaf: Vec<bool>,
}

impl Nodes {
    fn of(terms: &[&Term]) -> Nodes {
        let mut nodes = Nodes {
            positions: Vec::new(),
            parent: Vec::new(),
            is_leaf: Vec::new(),
        };
        for (k, t) in terms.iter().enumerate() {
            let mut stack: Vec<usize> = Vec::new();
            t.visit(&mut |p, sub| {
                while let Some(&top) = stack.last() {
                    if nodes.positions[top].1.is_prefix_of(p) && nodes.positions[top].1 != *p {
                        break;
                    }
                    stack.pop();
                }
                nodes.parent.push(stack.last().copied());
                stack.push(nodes.positions.len());
                nodes.positions.push((k, p.clone()));
                nodes.is_leaf.push(sub.args().is_empty());
            });
        }
        nodes
    }
}

fn evaluate(s: &Term, t: &Term, nodes: &Nodes, chosen: &[bool], rigid: &dyn Fn(&str) -> bool) -> Option<DUnifier> {
    let mut ms = BTreeSet::new();
    let mut mt = BTreeSet::new();
    for ((k, p), &c) in nodes.positions.iter().zip(chosen) {
        if c {
            if *k == 0 { &mut ms } else { &mut mt }.insert(p.clone());
        }
    }
    let a = AnnTerm::from_material(s, &ms);
    let b = AnnTerm::from_material(t, &mt);
    if !a.is_wat() || !b.is_wat() {
        return None;
    }
    let right = b.skeletons();
    for ss in a.skeletons() {
        for st in &right {
            if let Some(sigma) = unify_with(&ss, st, rigid) {
                return Some(DUnifier::new(sigma, a, b));
            }
        }
    }
    None
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

    /// Only uppercase names are variables.
    fn q(text: &str) -> Term {
        Signature::permissive().parse_term(text).unwrap()
    }

    fn qa(text: &str) -> AnnTerm {
        Signature::permissive().parse_ann_term(text).unwrap()
    }

    fn assert_sound(p: &Term, target: &Term, m: &DMatch) {
        assert_eq!(m.annotated_target.erase(), *target);
        assert!(m.annotated_target.is_wat());
        assert_eq!(m.annotated_target, m.annotated_target.normalize());
        assert!(m.annotated_target.skeletons().contains(&m.subst.apply(p)));
    }

    #[test]
    fn first_annotates_conclusion() {
        let m = dmatch_first(&t("(append x nil)"), &t("(append (cons e x) nil)")).unwrap();
        assert!(m.subst.is_empty());
        assert_eq!(m.annotated_target, ann("(append {cons e [x]} nil)"));
    }

    #[test]
    fn first_identity_and_hidden_root() {
        let p = t("(append (cons e x) nil)");
        let m = dmatch_first(&p, &p).unwrap();
        assert_eq!(m.cost(), 0);
        assert!(m.subst.is_empty());
        let m = dmatch_first(&q("(f A)"), &q("(g (f a))")).unwrap();
        assert_eq!(m.subst.get("A"), Some(&q("a")));
        assert_eq!(m.annotated_target, qa("{g [(f a)]}"));
        assert!(dmatch_first(&q("(f a)"), &q("(g b)")).is_none());
    }

    #[test]
    fn first_handles_repeated_variables() {
        let p = q("(f X X)");
        let target = q("(f (g a) a)");
        let m = dmatch_first(&p, &target).unwrap();
        assert_sound(&p, &target, &m);
        assert_eq!(m.annotated_target, qa("(f {g [a]} a)"));
    }

    #[test]
    fn all_contains_first_and_is_sound() {
        let p = t("(append x nil)");
        let target = t("(append (cons e x) nil)");
        let all = dmatch_all(&p, &target, usize::MAX);
        assert!(all.iter().any(|m| m.annotated_target == ann("(append {cons e [x]} nil)")));
        for m in &all {
            assert_sound(&p, &target, m);
        }
        let costs: Vec<usize> = all.iter().map(DMatch::cost).collect();
        assert!(costs.windows(2).all(|w| w[0] <= w[1]));
        let once = dmatch_all(&target, &target, usize::MAX);
        assert_eq!(once.len(), 1);
        assert_eq!(once[0].cost(), 0);
        assert_eq!(dmatch_all(&p, &target, 1).len(), 1);
    }

    #[test]
    fn all_matches_annotation_enumeration() {
        let p = t("(f X)");
        let target = t("(g (f (f a)) (f a))");
        let bindable = |v: &str| v == "X";
        let mut expected = BTreeSet::new();
        for a in all_annotations(&target, true) {
            for sk in a.skeletons() {
                if let Some(s) = crate::subst::match_with(&p, &sk, &bindable, Substitution::new()) {
                    expected.insert((s, a.clone()));
                }
            }
        }
        let got: BTreeSet<(Substitution, AnnTerm)> = dmatch_all(&p, &target, usize::MAX)
            .into_iter()
            .map(|m| (m.subst, m.annotated_target))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn dunify_degenerates_to_unification() {
        let us = dunify(&q("(f X a)"), &q("(f b Y)"), usize::MAX);
        assert_eq!(us[0].annotation_cost, 0);
        assert_eq!(us[0].subst.get("X"), Some(&q("b")));
        assert_eq!(us[0].subst.get("Y"), Some(&q("a")));
        let cost0: Vec<_> = us.iter().filter(|u| u.annotation_cost == 0).collect();
        assert_eq!(cost0.len(), 1);
    }

    #[test]
    fn dunify_finds_wave_rule_annotation() {
        let l = t("(append (cons a b) c)");
        let r = t("(cons a (append b c))");
        let us = dunify(&l, &r, usize::MAX);
        let wanted = (ann("(append {cons a [b]} c)"), ann("{cons a [(append b c)]}"));
        assert!(us
            .iter()
            .any(|u| (u.annotated_left.clone(), u.annotated_right.clone()) == wanted && u.subst.is_empty()));
        for u in &us {
            let sl: BTreeSet<Term> = u.annotated_left.skeletons().iter().map(|x| u.subst.apply(x)).collect();
            let sr: BTreeSet<Term> = u.annotated_right.skeletons().iter().map(|x| u.subst.apply(x)).collect();
            assert!(!sl.is_disjoint(&sr));
        }
        let min = dunify_minimal(&l, &r).unwrap();
        assert_eq!(min.annotation_cost, us[0].annotation_cost);
    }

    #[test]
    fn minimal_edge_cases() {
        let g = q("(f a b)");
        assert_eq!(dunify_minimal(&g, &g).unwrap().annotation_cost, 0);
        assert!(dunify_minimal(&q("a"), &q("b")).is_none());
        assert!(dunify(&q("a"), &q("b"), usize::MAX).is_empty());
        let u = dunify_minimal(&q("(g a)"), &q("a")).unwrap();
        assert_eq!(u.annotation_cost, 1);
        assert_eq!(u.annotated_left, qa("{g [a]}"));
    }
}
