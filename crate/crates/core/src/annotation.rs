//! Annotated terms: wavefronts, waveholes, skeletons and the termination measure.
//!
//! Marks live on the term nodes themselves. A `Front` wraps the node at
//! which a wavefront starts; everything below it is wavefront material
//! until a `Hole` is reached, whose content is again an annotated term.
//! Positions are always positions of the erased term, so the wrappers are
//! transparent to paths.

use std::collections::BTreeSet;
use std::fmt;

use crate::sexpr::{self, Bracket, Sexp};
use crate::term::{Name, Position, Signature, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnTerm {
    Var(Name),
    App(Name, Vec<AnnTerm>),
    Front(Box<AnnTerm>),
    Hole(Box<AnnTerm>),
}

/// Which part of an annotated term a position falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Skeleton material, including wavehole contents and the slot a wavefront occupies.
    Skeleton,
    /// Strictly inside wavefront material.
    Material,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatViolation {
    /// A wavefront without any wavehole strictly below it.
    HoleExistence,
    /// A wavefront inside wavefront material without an intervening wavehole.
    NestedFront,
    /// A wavehole that is not inside wavefront material.
    HoleOutsideFront,
    /// A variable marked as a wavefront.
    VariableFront,
}

impl fmt::Display for WatViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WatViolation::HoleExistence => "wavefront without a wavehole",
            WatViolation::NestedFront => "wavefront nested in wavefront material",
            WatViolation::HoleOutsideFront => "wavehole outside a wavefront",
            WatViolation::VariableFront => "variable marked as a wavefront",
        })
    }
}

pub type SkeletonSet = BTreeSet<Term>;

/// Wavefront sizes indexed by skeleton depth, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Measure(pub Vec<usize>);

impl Measure {
    pub fn get(&self, depth: usize) -> usize {
        self.0.get(depth).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    fn trimmed(mut v: Vec<usize>) -> Measure {
        while v.last() == Some(&0) {
            v.pop();
        }
        Measure(v)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Strict order on measures: compare from the deepest entry upwards; the
/// smaller measure has the smaller entry at the deepest index where they differ.
pub fn measure_less(a: &Measure, b: &Measure) -> bool {
    let n = a.0.len().max(b.0.len());
    for d in (0..n).rev() {
        let (x, y) = (a.get(d), b.get(d));
        if x != y {
            return x < y;
        }
    }
    false
}

impl From<&Term> for AnnTerm {
    fn from(t: &Term) -> Self {
        match t {
            Term::Var(v) => AnnTerm::Var(v.clone()),
            Term::App(h, args) => AnnTerm::App(h.clone(), args.iter().map(AnnTerm::from).collect()),
        }
    }
}

impl AnnTerm {
    pub fn front(inner: AnnTerm) -> AnnTerm {
        AnnTerm::Front(Box::new(inner))
    }

    pub fn hole(inner: AnnTerm) -> AnnTerm {
        AnnTerm::Hole(Box::new(inner))
    }

    /// The underlying variable or application node, below any marks.
    pub fn core(&self) -> &AnnTerm {
        match self {
            AnnTerm::Front(t) | AnnTerm::Hole(t) => t.core(),
            _ => self,
        }
    }

    /// Whether this node is a wavehole and whether it starts a wavefront.
    fn marks(&self) -> (bool, bool) {
        let hole = matches!(self, AnnTerm::Hole(_));
        let mut t = self;
        let mut front = false;
        while let AnnTerm::Front(x) | AnnTerm::Hole(x) = t {
            front |= matches!(t, AnnTerm::Front(_));
            t = x;
        }
        (hole, front)
    }

    fn core_args(&self) -> &[AnnTerm] {
        match self.core() {
            AnnTerm::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_front(&self) -> bool {
        matches!(self, AnnTerm::Front(_))
    }

    pub fn is_annotated(&self) -> bool {
        match self {
            AnnTerm::Var(_) => false,
            AnnTerm::App(_, args) => args.iter().any(AnnTerm::is_annotated),
            AnnTerm::Front(_) | AnnTerm::Hole(_) => true,
        }
    }

    /// Removes every mark.
    pub fn erase(&self) -> Term {
        match self {
            AnnTerm::Var(v) => Term::Var(v.clone()),
            AnnTerm::App(h, args) => Term::App(h.clone(), args.iter().map(AnnTerm::erase).collect()),
            AnnTerm::Front(t) | AnnTerm::Hole(t) => t.erase(),
        }
    }

    /// Node at erased position `p`, including any marks wrapped around it.
    pub fn subterm_at(&self, p: &Position) -> Option<&AnnTerm> {
        let mut t = self;
        for &i in &p.0 {
            t = t.core_args().get(i.checked_sub(1)?)?;
        }
        Some(t)
    }

    /// Replaces the node at erased position `p` (marks included) with `u`.
    pub fn replace_at(&self, p: &Position, u: AnnTerm) -> Option<AnnTerm> {
        fn go(t: &AnnTerm, path: &[usize], u: AnnTerm) -> Option<AnnTerm> {
            let Some((&i, rest)) = path.split_first() else {
                return Some(u);
            };
            match t {
                AnnTerm::Var(_) => None,
                AnnTerm::Front(x) => Some(AnnTerm::Front(Box::new(go(x, path, u)?))),
                AnnTerm::Hole(x) => Some(AnnTerm::Hole(Box::new(go(x, path, u)?))),
                AnnTerm::App(h, args) => {
                    let idx = i.checked_sub(1)?;
                    let child = args.get(idx)?;
                    let mut args = args.clone();
                    args[idx] = go(child, rest, u)?;
                    Some(AnnTerm::App(h.clone(), args))
                }
            }
        }
        go(self, &p.0, u)
    }

    /// Preorder positions tagged with the region they belong to.
    pub fn regions(&self) -> Vec<(Position, Region)> {
        fn go(t: &AnnTerm, p: &mut Vec<usize>, material: bool, out: &mut Vec<(Position, Region)>) {
            let (hole, front) = t.marks();
            let region = if material && !hole { Region::Material } else { Region::Skeleton };
            let inner_material = front || (material && !hole);
            out.push((Position(p.clone()), region));
            for (i, a) in t.core_args().iter().enumerate() {
                p.push(i + 1);
                go(a, p, inner_material, out);
                p.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), false, &mut out);
        out
    }

    /// Positions of wavefront material nodes (the front node itself included, holes excluded).
    pub fn material_positions(&self) -> BTreeSet<Position> {
        fn go(t: &AnnTerm, p: &mut Vec<usize>, material: bool, out: &mut BTreeSet<Position>) {
            let (hole, front) = t.marks();
            let material = front || (material && !hole);
            if material {
                out.insert(Position(p.clone()));
            }
            for (i, a) in t.core_args().iter().enumerate() {
                p.push(i + 1);
                go(a, p, material, out);
                p.pop();
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), false, &mut out);
        out
    }

    /// Number of wavefront material nodes, wavehole contents excluded.
    pub fn annotation_cost(&self) -> usize {
        self.material_positions().len()
    }

    /// Builds the annotation of `t` whose wavefront material is exactly `material`.
    ///
    /// Material nodes whose parent is not material start a wavefront; non-material
    /// children of material nodes become waveholes. The result is not checked.
    pub fn from_material(t: &Term, material: &BTreeSet<Position>) -> AnnTerm {
        fn go(t: &Term, p: &mut Vec<usize>, parent: bool, m: &BTreeSet<Position>) -> AnnTerm {
            let here = m.contains(&Position(p.clone()));
            let node = match t {
                Term::Var(v) => AnnTerm::Var(v.clone()),
                Term::App(h, args) => {
                    let mut out = Vec::with_capacity(args.len());
                    for (i, a) in args.iter().enumerate() {
                        p.push(i + 1);
                        out.push(go(a, p, here, m));
                        p.pop();
                    }
                    AnnTerm::App(h.clone(), out)
                }
            };
            match (parent, here) {
                (false, true) => AnnTerm::front(node),
                (true, false) => AnnTerm::hole(node),
                _ => node,
            }
        }
        go(t, &mut Vec::new(), false, material)
    }

    /// Merges every wavehole whose content is itself a wavefront into the
    /// enclosing wavefront. Erasure, skeletons, cost and measure are unchanged.
    pub fn normalize(&self) -> AnnTerm {
        fn go(t: &AnnTerm, material: bool) -> AnnTerm {
            match t {
                AnnTerm::Var(_) => t.clone(),
                AnnTerm::App(h, args) => {
                    AnnTerm::App(h.clone(), args.iter().map(|a| go(a, material)).collect())
                }
                AnnTerm::Front(x) => AnnTerm::front(go(x, true)),
                AnnTerm::Hole(x) if material => match &**x {
                    AnnTerm::Front(y) if matches!(**y, AnnTerm::App(..)) => go(y, true),
                    _ => AnnTerm::hole(go(x, false)),
                },
                AnnTerm::Hole(x) => AnnTerm::hole(go(x, false)),
            }
        }
        go(self, false)
    }

    /// Checks the four well-formedness conditions; reports the first violation in preorder.
    pub fn wat_violation(&self) -> Option<(WatViolation, Position)> {
        fn holes_in_material(t: &AnnTerm) -> usize {
            match t {
                AnnTerm::Hole(_) => 1,
                AnnTerm::Var(_) => 0,
                AnnTerm::App(_, args) => args.iter().map(holes_in_material).sum(),
                AnnTerm::Front(x) => holes_in_material(x),
            }
        }
        fn go(t: &AnnTerm, p: &mut Vec<usize>, material: bool) -> Option<(WatViolation, Position)> {
            let here = || Position(p.clone());
            match t {
                AnnTerm::Var(_) => None,
                AnnTerm::App(_, args) => {
                    for (i, a) in args.iter().enumerate() {
                        p.push(i + 1);
                        let r = go(a, p, material);
                        p.pop();
                        if r.is_some() {
                            return r;
                        }
                    }
                    None
                }
                AnnTerm::Front(x) => {
                    if material {
                        return Some((WatViolation::NestedFront, here()));
                    }
                    match &**x {
                        AnnTerm::Var(_) => Some((WatViolation::VariableFront, here())),
                        AnnTerm::Front(_) => Some((WatViolation::NestedFront, here())),
                        AnnTerm::Hole(_) => Some((WatViolation::HoleExistence, here())),
                        AnnTerm::App(_, args) => {
                            if args.iter().map(holes_in_material).sum::<usize>() == 0 {
                                return Some((WatViolation::HoleExistence, here()));
                            }
                            for (i, a) in args.iter().enumerate() {
                                p.push(i + 1);
                                let r = go(a, p, true);
                                p.pop();
                                if r.is_some() {
                                    return r;
                                }
                            }
                            None
                        }
                    }
                }
                AnnTerm::Hole(x) => {
                    if !material {
                        return Some((WatViolation::HoleOutsideFront, here()));
                    }
                    go(x, p, false)
                }
            }
        }
        go(self, &mut Vec::new(), false)
    }

    pub fn is_wat(&self) -> bool {
        self.wat_violation().is_none()
    }

    /// Every skeleton: each wavefront is replaced by the skeleton of one of its holes.
    pub fn skeletons(&self) -> SkeletonSet {
        self.skeleton_list().into_iter().collect()
    }

    fn skeleton_list(&self) -> Vec<Term> {
        match self {
            AnnTerm::Var(v) => vec![Term::Var(v.clone())],
            AnnTerm::App(h, args) => {
                let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
                for a in args {
                    let opts = a.skeleton_list();
                    let mut next = Vec::with_capacity(acc.len() * opts.len());
                    for prefix in &acc {
                        for o in &opts {
                            let mut v = prefix.clone();
                            v.push(o.clone());
                            next.push(v);
                        }
                    }
                    acc = next;
                    acc.sort();
                    acc.dedup();
                }
                acc.into_iter().map(|args| Term::App(h.clone(), args)).collect()
            }
            AnnTerm::Front(x) => {
                let mut out = Vec::new();
                x.for_each_hole(&mut |h| out.extend(h.skeleton_list()));
                out.sort();
                out.dedup();
                out
            }
            AnnTerm::Hole(x) => x.skeleton_list(),
        }
    }

    /// Calls `f` on the content of every hole of the wavefront material rooted here.
    fn for_each_hole<'a>(&'a self, f: &mut impl FnMut(&'a AnnTerm)) {
        match self {
            AnnTerm::Hole(x) => f(x),
            AnnTerm::Var(_) => {}
            AnnTerm::App(_, args) => args.iter().for_each(|a| a.for_each_hole(f)),
            AnnTerm::Front(x) => x.for_each_hole(f),
        }
    }

    /// Number of holes of the wavefront rooted here (0 if this is not a wavefront).
    pub fn hole_count(&self) -> usize {
        match self {
            AnnTerm::Front(x) => {
                let mut n = 0;
                x.for_each_hole(&mut |_| n += 1);
                n
            }
            _ => 0,
        }
    }

    /// Every wavefront, with its erased position.
    pub fn fronts(&self) -> Vec<(Position, &AnnTerm)> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a AnnTerm, p: &mut Vec<usize>, out: &mut Vec<(Position, &'a AnnTerm)>) {
            if let AnnTerm::Front(_) = t {
                out.push((Position(p.clone()), t));
            }
            let inner = match t {
                AnnTerm::Front(x) | AnnTerm::Hole(x) => {
                    if let AnnTerm::Front(_) | AnnTerm::Hole(_) = **x {
                        return go(x, p, out);
                    }
                    &**x
                }
                _ => t,
            };
            if let AnnTerm::App(_, args) = inner {
                for (i, a) in args.iter().enumerate() {
                    p.push(i + 1);
                    go(a, p, out);
                    p.pop();
                }
            }
        }
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Positions of the holes of the wavefront rooted here, relative to it.
    pub fn hole_paths(&self) -> Vec<Position> {
        fn go(t: &AnnTerm, p: &mut Vec<usize>, out: &mut Vec<Position>) {
            match t {
                AnnTerm::Hole(_) => out.push(Position(p.clone())),
                AnnTerm::Var(_) => {}
                AnnTerm::Front(x) => go(x, p, out),
                AnnTerm::App(_, args) => {
                    for (i, a) in args.iter().enumerate() {
                        p.push(i + 1);
                        go(a, p, out);
                        p.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        if let AnnTerm::Front(x) = self {
            go(x, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Termination measure: wavefront material per skeleton depth.
    ///
    /// A wavefront's depth is the number of skeleton nodes strictly above it.
    /// That depth is the same in every skeleton containing the wavefront, so
    /// the maximum over skeleton choices is simply this value.
    pub fn measure(&self) -> Measure {
        fn material(t: &AnnTerm) -> usize {
            match t {
                AnnTerm::Hole(_) => 0,
                AnnTerm::Var(_) => 1,
                AnnTerm::App(_, args) => 1 + args.iter().map(material).sum::<usize>(),
                AnnTerm::Front(x) => material(x),
            }
        }
        fn go(t: &AnnTerm, depth: usize, m: &mut Vec<usize>) {
            match t {
                AnnTerm::Var(_) => {}
                AnnTerm::App(_, args) => args.iter().for_each(|a| go(a, depth + 1, m)),
                AnnTerm::Hole(x) => go(x, depth, m),
                AnnTerm::Front(x) => {
                    if m.len() <= depth {
                        m.resize(depth + 1, 0);
                    }
                    m[depth] += material(x);
                    x.for_each_hole(&mut |h| go(h, depth, m));
                }
            }
        }
        let mut m = Vec::new();
        go(self, 0, &mut m);
        Measure::trimmed(m)
    }

    /// Applies a plain substitution to the variables (marks untouched).
    pub fn apply_plain(&self, s: &crate::subst::Substitution) -> AnnTerm {
        match self {
            AnnTerm::Var(v) => match s.get(v) {
                Some(t) => AnnTerm::from(t),
                None => self.clone(),
            },
            AnnTerm::App(h, args) => AnnTerm::App(h.clone(), args.iter().map(|a| a.apply_plain(s)).collect()),
            AnnTerm::Front(x) => AnnTerm::front(x.apply_plain(s)),
            AnnTerm::Hole(x) => AnnTerm::hole(x.apply_plain(s)),
        }
    }

    pub fn rename(&self, f: &impl Fn(&Name) -> Name) -> AnnTerm {
        match self {
            AnnTerm::Var(v) => AnnTerm::Var(f(v)),
            AnnTerm::App(h, args) => AnnTerm::App(h.clone(), args.iter().map(|a| a.rename(f)).collect()),
            AnnTerm::Front(x) => AnnTerm::front(x.rename(f)),
            AnnTerm::Hole(x) => AnnTerm::hole(x.rename(f)),
        }
    }
}

/// Every normalized well-formed annotation of `t`.
///
/// Normalized means no wavehole's content is itself a wavefront, so each
/// annotation corresponds to exactly one set of wavefront material nodes.
/// With `front_at_root` false the root is not allowed to start a wavefront.
pub fn all_annotations(t: &Term, front_at_root: bool) -> Vec<AnnTerm> {
    let mut out = plain_rooted(t);
    if front_at_root {
        out.extend(front_rooted(t));
    }
    out
}

fn plain_rooted(t: &Term) -> Vec<AnnTerm> {
    match t {
        Term::Var(v) => vec![AnnTerm::Var(v.clone())],
        Term::App(h, args) => product(args.iter().map(|a| all_annotations(a, true)).collect())
            .into_iter()
            .map(|args| AnnTerm::App(h.clone(), args))
            .collect(),
    }
}

/// Annotations of `t` where the root starts a wavefront.
pub fn front_rooted(t: &Term) -> Vec<AnnTerm> {
    if t.args().is_empty() {
        return Vec::new();
    }
    material_shapes(t)
        .into_iter()
        .filter(|(_, holes)| *holes > 0)
        .map(|(m, _)| AnnTerm::front(m))
        .collect()
}

/// `t` as wavefront material: each child is either more material or a hole.
pub(crate) fn material_shapes(t: &Term) -> Vec<(AnnTerm, usize)> {
    match t {
        Term::Var(v) => vec![(AnnTerm::Var(v.clone()), 0)],
        Term::App(h, args) if args.is_empty() => vec![(AnnTerm::App(h.clone(), vec![]), 0)],
        Term::App(h, args) => {
            let per_child: Vec<Vec<(AnnTerm, usize)>> = args
                .iter()
                .map(|a| {
                    let mut opts: Vec<(AnnTerm, usize)> = all_annotations(a, false)
                        .into_iter()
                        .map(|x| (AnnTerm::hole(x), 1))
                        .collect();
                    opts.extend(material_shapes(a));
                    opts
                })
                .collect();
            product(per_child)
                .into_iter()
                .map(|kids| {
                    let holes = kids.iter().map(|(_, n)| n).sum();
                    (AnnTerm::App(h.clone(), kids.into_iter().map(|(k, _)| k).collect()), holes)
                })
                .collect()
        }
    }
}

pub(crate) fn product<T: Clone>(lists: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for opts in lists {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for prefix in &acc {
            for o in &opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

impl fmt::Display for AnnTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnTerm::Var(v) => f.write_str(v),
            AnnTerm::App(h, args) if args.is_empty() => f.write_str(h),
            AnnTerm::App(h, args) => {
                write!(f, "({h}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            AnnTerm::Front(x) => match &**x {
                AnnTerm::App(h, args) => {
                    write!(f, "{{{h}")?;
                    for a in args {
                        write!(f, " {a}")?;
                    }
                    f.write_str("}")
                }
                other => write!(f, "{{{other}}}"),
            },
            AnnTerm::Hole(x) => write!(f, "[{x}]"),
        }
    }
}

impl Signature {
    /// Parses the annotated syntax: `{head args..}` is a wavefront, `[t]` a wavehole.
    pub fn parse_ann_term(&mut self, text: &str) -> Result<AnnTerm, TermError> {
        let e = sexpr::read_one(text)?;
        self.ann_from_sexp(&e)
    }

    pub fn ann_from_sexp(&mut self, e: &Sexp) -> Result<AnnTerm, TermError> {
        match e {
            Sexp::Atom(..) => Ok(AnnTerm::from(&self.term_from_sexp(e)?)),
            Sexp::List(b, items, span) => {
                if *b == Bracket::Square {
                    return match items.as_slice() {
                        [x] => Ok(AnnTerm::hole(self.ann_from_sexp(x)?)),
                        _ => Err(TermError::Unexpected {
                            what: "wavehole with other than one term",
                            span: *span,
                        }),
                    };
                }
                let (head, rest) = items.split_first().ok_or(TermError::EmptyApplication(*span))?;
                let app = match head {
                    Sexp::Atom(h, hspan) if !(self.is_var_name(h) && *b == Bracket::Brace && rest.is_empty()) => {
                        let args = rest
                            .iter()
                            .map(|a| self.ann_from_sexp(a))
                            .collect::<Result<Vec<_>, _>>()?;
                        self.head(h, args.len(), *hspan)?;
                        AnnTerm::App(h.as_str().into(), args)
                    }
                    _ if *b == Bracket::Brace && rest.is_empty() => self.ann_from_sexp(head)?,
                    _ => {
                        return Err(TermError::Unexpected {
                            what: "compound head",
                            span: head.span(),
                        })
                    }
                };
                Ok(if *b == Bracket::Brace { AnnTerm::front(app) } else { app })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::permissive();
        for v in ["x", "e", "y"] {
            s.declare_var(v, None);
        }
        s
    }

    fn a(text: &str) -> AnnTerm {
        sig().parse_ann_term(text).unwrap()
    }

    fn t(text: &str) -> Term {
        sig().parse_term(text).unwrap()
    }

    #[test]
    fn parse_and_print_round_trip() {
        for s in [
            "(append {cons e [x]} nil)",
            "{cons e [(append x nil)]}",
            "{f [a] (g [b])}",
            "{x}",
            "[x]",
            "{h}",
        ] {
            assert_eq!(a(s).to_string(), s);
        }
    }

    #[test]
    fn erase_examples() {
        assert_eq!(a("{cons e [x]}").erase(), t("(cons e x)"));
        assert_eq!(a("(append x nil)").erase(), t("(append x nil)"));
    }

    #[test]
    fn skeleton_examples() {
        let s = a("{cons e [x]}").skeletons();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![t("x")]);
        let s = a("(append {cons e [x]} nil)").skeletons();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![t("(append x nil)")]);
        assert_eq!(a("(g {f [a] [b]})").skeletons().len(), 2);
        assert_eq!(a("(g {f [a] [b]} {f [c] [d]})").skeletons().len(), 4);
    }

    #[test]
    fn wat_examples() {
        assert!(a("(append {cons e [x]} nil) ").is_wat());
        assert_eq!(a("{cons e x}").wat_violation(), Some((WatViolation::HoleExistence, Position::root())));
        assert_eq!(a("(f [x])").wat_violation(), Some((WatViolation::HoleOutsideFront, Position(vec![1]))));
        assert_eq!(a("(f {x})").wat_violation().unwrap().0, WatViolation::VariableFront);
        assert_eq!(a("{f {g [x]}}").wat_violation().unwrap().0, WatViolation::NestedFront);
        assert!(a("{f [{g [x]}]}").is_wat());
        assert_eq!(a("{f [[x]]}").wat_violation().unwrap().0, WatViolation::HoleOutsideFront);
    }

    #[test]
    fn measure_examples() {
        assert!(a("(append x nil)").measure().is_zero());
        let before = a("(append {cons e [x]} nil)").measure();
        let after = a("{cons e [(append x nil)]}").measure();
        assert_eq!(before, Measure(vec![0, 2]));
        assert_eq!(after, Measure(vec![2]));
        assert!(measure_less(&after, &before));
        assert!(!measure_less(&before, &after));
        assert!(!measure_less(&before, &before));
        assert!(measure_less(&Measure::default(), &after));
    }

    #[test]
    fn normalize_merges_directly_nested_fronts() {
        let n = a("{g [{f [a]}]}").normalize();
        assert_eq!(n.to_string(), "{g (f [a])}");
        assert_eq!(n.annotation_cost(), 2);
        let n = a("{f [{g [x]}] [y]}").normalize();
        assert_eq!(n.to_string(), "{f (g [x]) [y]}");
        assert_eq!(n.skeletons(), a("{f [{g [x]}] [y]}").skeletons());
    }

    #[test]
    fn material_round_trip() {
        let x = a("(append {cons e [x]} nil)");
        let m = x.material_positions();
        assert_eq!(m.len(), 2);
        assert_eq!(AnnTerm::from_material(&x.erase(), &m), x);
    }

    #[test]
    fn enumerates_annotations() {
        // (g a): plain, or {g [a]}
        let all = all_annotations(&t("(g a)"), true);
        assert_eq!(all.len(), 2);
        for x in all_annotations(&t("(f (g a) b)"), true) {
            assert!(x.is_wat(), "{x}");
            assert_eq!(x.normalize(), x);
        }
    }

    #[test]
    fn fronts_and_hole_paths() {
        let x = a("(rev {append [(rev x)] (cons e nil)})");
        let fr = x.fronts();
        assert_eq!(fr.len(), 1);
        assert_eq!(fr[0].0, Position(vec![1]));
        assert_eq!(fr[0].1.hole_paths(), vec![Position(vec![1])]);
    }

    #[test]
    fn regions_mark_material() {
        let x = a("(append {cons e [x]} nil)");
        let r = x.regions();
        let mat: Vec<_> = r.iter().filter(|(_, g)| *g == Region::Material).map(|(p, _)| p.clone()).collect();
        assert_eq!(mat, vec![Position(vec![1, 1])]);
    }
}
