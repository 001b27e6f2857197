//! Brute-force oracles and term generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rippling::ripple::WaveRule;
use rippling::subst::match_with;
use rippling::{AnnTerm, Substitution, Term};

/// Every mark placement on `t` that is well formed, normalized and deduplicated.
///
/// Internal nodes may carry nothing, a front, a hole, or a hole around a
/// front. Leaves may carry nothing or a hole; a front at a leaf can never
/// contain a hole, so those placements are skipped up front.
pub fn mark_placements(t: &Term) -> Vec<AnnTerm> {
    fn go(t: &Term) -> Vec<AnnTerm> {
        let bases: Vec<AnnTerm> = match t {
            Term::Var(v) => vec![AnnTerm::Var(v.clone())],
            Term::App(h, args) => {
                let mut acc: Vec<Vec<AnnTerm>> = vec![vec![]];
                for a in args {
                    let opts = go(a);
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            opts.iter().map(move |o| {
                                let mut p = prefix.clone();
                                p.push(o.clone());
                                p
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(|kids| AnnTerm::App(h.clone(), kids)).collect()
            }
        };
        let mut out = Vec::new();
        for b in bases {
            out.push(b.clone());
            out.push(AnnTerm::hole(b.clone()));
            if !t.args().is_empty() {
                out.push(AnnTerm::front(b.clone()));
                out.push(AnnTerm::hole(AnnTerm::front(b)));
            }
        }
        out
    }
    let set: BTreeSet<AnnTerm> = go(t).into_iter().filter(AnnTerm::is_wat).map(|a| a.normalize()).collect();
    set.into_iter().collect()
}

/// Annotations of `t` grouped by skeleton.
pub fn skeleton_index(t: &Term) -> BTreeMap<Term, Vec<AnnTerm>> {
    let mut m: BTreeMap<Term, Vec<AnnTerm>> = BTreeMap::new();
    for a in mark_placements(t) {
        for s in a.skeletons() {
            m.entry(s).or_default().push(a.clone());
        }
    }
    m
}

/// Every (substitution, annotated target) with `subst(pattern)` a skeleton of the annotation.
pub fn dmatch_oracle(
    pattern: &Term,
    index: &BTreeMap<Term, Vec<AnnTerm>>,
    bindable: &dyn Fn(&str) -> bool,
) -> BTreeSet<(Substitution, AnnTerm)> {
    let mut out = BTreeSet::new();
    for (sk, anns) in index {
        if let Some(s) = match_with(pattern, sk, bindable, Substitution::new()) {
            for a in anns {
                out.insert((s.clone(), a.clone()));
            }
        }
    }
    out
}

/// All terms with at most `max` nodes built from the given symbols (name, arity).
pub fn terms_up_to(symbols: &[(&str, usize)], max: usize) -> Vec<Term> {
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max + 1];
    for n in 1..=max {
        let mut here = Vec::new();
        for &(name, arity) in symbols {
            if arity == 0 {
                if n == 1 {
                    here.push(leaf(name));
                }
                continue;
            }
            for split in compositions(n - 1, arity) {
                let mut acc: Vec<Vec<Term>> = vec![vec![]];
                for &k in &split {
                    acc = acc
                        .into_iter()
                        .flat_map(|p| {
                            by_size[k].iter().map(move |c| {
                                let mut p = p.clone();
                                p.push(c.clone());
                                p
                            })
                        })
                        .collect();
                }
                here.extend(acc.into_iter().map(|args| Term::app(name, args)));
            }
        }
        by_size[n] = here;
    }
    by_size.into_iter().flatten().collect()
}

fn leaf(name: &str) -> Term {
    if name.chars().next().is_some_and(char::is_uppercase) {
        Term::var(name)
    } else {
        Term::constant(name)
    }
}

/// Ordered ways to write `n` as a sum of `parts` positive integers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return if n >= 1 { vec![vec![n]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Whether variables first occur in the order X, Y, ... (one representative per renaming).
pub fn canonical_vars(t: &Term, names: &[&str]) -> bool {
    let order = t.vars_in_order();
    order.iter().zip(names).all(|(v, n)| &**v == *n)
}

/// Least total annotation cost over all pairs of mark placements whose
/// skeletons unify, treating `rigid` variables as constants.
pub fn dunify_min_oracle(s: &Term, t: &Term, rigid: &dyn Fn(&str) -> bool) -> Option<usize> {
    let left = skeleton_index(s);
    let right = skeleton_index(t);
    let mut best: Option<usize> = None;
    for (ss, ls) in &left {
        let lmin = ls.iter().map(AnnTerm::annotation_cost).min().unwrap();
        for (st, rs) in &right {
            let rmin = rs.iter().map(AnnTerm::annotation_cost).min().unwrap();
            if best.is_some_and(|b| b <= lmin + rmin) {
                continue;
            }
            if rippling::subst::unify_with(ss, st, rigid).is_some() {
                best = Some(lmin + rmin);
            }
        }
    }
    best
}

/// A random term with at most `max` nodes.
pub fn random_term(rng: &mut impl rand::Rng, symbols: &[(&str, usize)], max: usize) -> Term {
    fn go(rng: &mut impl rand::Rng, symbols: &[(&str, usize)], budget: &mut usize) -> Term {
        *budget -= 1;
        let fits: Vec<&(&str, usize)> = symbols.iter().filter(|(_, a)| *a <= *budget).collect();
        let &(name, arity) = fits[rng.gen_range(0..fits.len())];
        let args = (0..arity)
            .map(|i| {
                let rest = arity - i - 1;
                let mut b = *budget - rest;
                let t = go(rng, symbols, &mut b);
                *budget = b + rest;
                t
            })
            .collect::<Vec<_>>();
        if arity == 0 {
            leaf(name)
        } else {
            Term::app(name, args)
        }
    }
    let mut budget = max;
    go(rng, symbols, &mut budget)
}

/// Wavefront material per skeleton depth, computed from node positions.
///
/// Each material node is charged to the depth of its wavefront's root, the
/// number of skeleton nodes on the path above that root. Trailing zeros are
/// trimmed.
pub fn measure_oracle(t: &AnnTerm) -> Vec<usize> {
    fn walk(t: &AnnTerm, material: bool, p: &mut Vec<usize>, out: &mut BTreeMap<Vec<usize>, bool>) {
        match t {
            AnnTerm::Front(x) => walk(x, true, p, out),
            AnnTerm::Hole(x) => walk(x, false, p, out),
            AnnTerm::Var(_) => {
                out.insert(p.clone(), material);
            }
            AnnTerm::App(_, args) => {
                out.insert(p.clone(), material);
                for (i, a) in args.iter().enumerate() {
                    p.push(i + 1);
                    walk(a, material, p, out);
                    p.pop();
                }
            }
        }
    }
    let mut nodes = BTreeMap::new();
    walk(t, false, &mut Vec::new(), &mut nodes);
    let mut m: Vec<usize> = Vec::new();
    for (p, &material) in &nodes {
        if !material {
            continue;
        }
        let mut root = p.len();
        while root > 0 && nodes[&p[..root - 1]] {
            root -= 1;
        }
        let depth = (0..root).filter(|&k| !nodes[&p[..k]]).count();
        if m.len() <= depth {
            m.resize(depth + 1, 0);
        }
        m[depth] += 1;
    }
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

/// A wave rule's left side, instantiated with random plain terms and
/// placed inside a random plain context.
pub fn random_ripple_goal(rng: &mut impl rand::Rng, rules: &[WaveRule], symbols: &[(&str, usize)]) -> AnnTerm {
    let rule = &rules[rng.gen_range(0..rules.len())];
    let mut s = Substitution::new();
    for v in rule.source.vars() {
        let max = rng.gen_range(1..5);
        s.insert(v, random_term(rng, symbols, max));
    }
    let mut goal = rule.lhs.apply_plain(&s);
    for _ in 0..rng.gen_range(0..3) {
        let (f, arity) = loop {
            let (f, a) = symbols[rng.gen_range(0..symbols.len())];
            if a > 0 {
                break (f, a);
            }
        };
        let slot = rng.gen_range(0..arity);
        let args = (0..arity)
            .map(|i| {
                if i == slot {
                    goal.clone()
                } else {
                    plain(&random_term(rng, symbols, 3))
                }
            })
            .collect();
        goal = AnnTerm::App(f.into(), args);
    }
    goal
}

pub fn plain(t: &Term) -> AnnTerm {
    match t {
        Term::Var(v) => AnnTerm::Var(v.clone()),
        Term::App(f, args) => AnnTerm::App(f.clone(), args.iter().map(plain).collect()),
    }
}
