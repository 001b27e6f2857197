//! Left-first search over binary choice trees.
//!
//! Leaves are visited in nondecreasing order of the number of left branches
//! on their path. Within one left-count level the order is depth-first with
//! the right child before the left child. The tree is expanded once and kept
//! in memory; each level is a fresh depth-first pass over the stored nodes.

use std::fmt;

use thiserror::Error;

/// Result of expanding one node of a choice tree.
pub enum Expansion<S, V> {
    Leaf(V),
    /// `Branch(left, right)`.
    Branch(S, S),
}

pub trait ChoiceTree {
    type State;
    type Value;

    fn root(&self) -> Self::State;
    fn expand(&self, state: &Self::State) -> Expansion<Self::State, Self::Value>;
    /// Every leaf must be reached within this many branches.
    fn max_depth(&self) -> usize;
}

/// A choice tree given by a root state and an expansion closure.
pub struct FnTree<S, F> {
    root: S,
    expand: F,
    max_depth: usize,
}

impl<S, V, F> FnTree<S, F>
where
    S: Clone,
    F: Fn(&S) -> Expansion<S, V>,
{
    pub fn new(root: S, max_depth: usize, expand: F) -> Self {
        FnTree {
            root,
            expand,
            max_depth,
        }
    }
}

impl<S, V, F> ChoiceTree for FnTree<S, F>
where
    S: Clone,
    F: Fn(&S) -> Expansion<S, V>,
{
    type State = S;
    type Value = V;

    fn root(&self) -> S {
        self.root.clone()
    }

    fn expand(&self, state: &S) -> Expansion<S, V> {
        (self.expand)(state)
    }

    fn max_depth(&self) -> usize {
        self.max_depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    L,
    R,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::L => "L",
            Dir::R => "R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafVisit<V> {
    pub value: V,
    pub path: Vec<Dir>,
    pub left_count: usize,
}

impl<V> LeafVisit<V> {
    pub fn path_string(&self) -> String {
        self.path.iter().map(Dir::to_string).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("choice tree exceeded its depth bound of {bound}")]
    DepthExceeded { bound: usize },
}

enum Slot<S, V> {
    Pending(S),
    Leaf(V),
    Branch(usize, usize),
    Taken,
}

/// The in-memory expansion of a choice tree.
struct Arena<'t, T: ChoiceTree> {
    tree: &'t T,
    slots: Vec<Slot<T::State, T::Value>>,
}

impl<'t, T: ChoiceTree> Arena<'t, T> {
    fn new(tree: &'t T) -> Self {
        Arena {
            tree,
            slots: vec![Slot::Pending(tree.root())],
        }
    }

    fn force(&mut self, i: usize, depth: usize) -> Result<(), SearchError> {
        if !matches!(self.slots[i], Slot::Pending(_)) {
            return Ok(());
        }
        let Slot::Pending(state) = std::mem::replace(&mut self.slots[i], Slot::Taken) else {
            unreachable!()
        };
        match self.tree.expand(&state) {
            Expansion::Leaf(v) => self.slots[i] = Slot::Leaf(v),
            Expansion::Branch(l, r) => {
                if depth >= self.tree.max_depth() {
                    return Err(SearchError::DepthExceeded {
                        bound: self.tree.max_depth(),
                    });
                }
                let li = self.slots.len();
                self.slots.push(Slot::Pending(l));
                self.slots.push(Slot::Pending(r));
                self.slots[i] = Slot::Branch(li, li + 1);
            }
        }
        Ok(())
    }

    /// Depth-first pass over leaves with exactly `k` left branches, right child first.
    /// Returns whether some left branch was cut because the budget `k` was used up.
    fn level(
        &mut self,
        k: usize,
        visit: &mut dyn FnMut(&T::Value, &[Dir]) -> bool,
    ) -> Result<LevelOutcome, SearchError> {
        let mut cut = false;
        let mut path = Vec::new();
        let stop = self.walk(0, 0, k, &mut path, &mut cut, visit)?;
        Ok(if stop {
            LevelOutcome::Stopped
        } else if cut {
            LevelOutcome::More
        } else {
            LevelOutcome::Exhausted
        })
    }

    fn walk(
        &mut self,
        i: usize,
        lefts: usize,
        k: usize,
        path: &mut Vec<Dir>,
        cut: &mut bool,
        visit: &mut dyn FnMut(&T::Value, &[Dir]) -> bool,
    ) -> Result<bool, SearchError> {
        self.force(i, path.len())?;
        match self.slots[i] {
            Slot::Leaf(ref v) => Ok(lefts == k && visit(v, path)),
            Slot::Branch(l, r) => {
                path.push(Dir::R);
                let stop = self.walk(r, lefts, k, path, cut, visit)?;
                path.pop();
                if stop {
                    return Ok(true);
                }
                if lefts == k {
                    *cut = true;
                    return Ok(false);
                }
                path.push(Dir::L);
                let stop = self.walk(l, lefts + 1, k, path, cut, visit)?;
                path.pop();
                Ok(stop)
            }
            Slot::Pending(_) | Slot::Taken => unreachable!("forced above"),
        }
    }
}

enum LevelOutcome {
    Stopped,
    More,
    Exhausted,
}

fn run<T: ChoiceTree>(
    tree: &T,
    visit: &mut dyn FnMut(&T::Value, &[Dir]) -> bool,
) -> Result<(), SearchError> {
    let mut arena = Arena::new(tree);
    for k in 0..=tree.max_depth() {
        match arena.level(k, visit)? {
            LevelOutcome::Stopped | LevelOutcome::Exhausted => return Ok(()),
            LevelOutcome::More => {}
        }
    }
    Ok(())
}

fn to_visit<V: Clone>(v: &V, path: &[Dir]) -> LeafVisit<V> {
    LeafVisit {
        value: v.clone(),
        path: path.to_vec(),
        left_count: path.iter().filter(|d| **d == Dir::L).count(),
    }
}

/// Every leaf, in left-first order.
pub fn lfs<T>(tree: &T) -> Result<Vec<LeafVisit<T::Value>>, SearchError>
where
    T: ChoiceTree,
    T::Value: Clone,
{
    let mut out = Vec::new();
    run(tree, &mut |v, path| {
        out.push(to_visit(v, path));
        false
    })?;
    Ok(out)
}

/// The first leaf in left-first order accepted by `accept`; it has the
/// fewest left branches among accepted leaves.
pub fn lfs_first<T>(
    tree: &T,
    mut accept: impl FnMut(&T::Value) -> bool,
) -> Result<Option<LeafVisit<T::Value>>, SearchError>
where
    T: ChoiceTree,
    T::Value: Clone,
{
    let mut found = None;
    run(tree, &mut |v, path| {
        if accept(v) {
            found = Some(to_visit(v, path));
            true
        } else {
            false
        }
    })?;
    Ok(found)
}
