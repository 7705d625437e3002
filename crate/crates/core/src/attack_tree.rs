//! Attack trees over pairs of state sets.
//!
//! Every node carries its goal `(I, s)`: starting anywhere in `I`, reach `s`.
//! [`is_valid`] decides whether the leaves are realizable one-step transitions
//! that compose to the root goal.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kripke::{sat, witness_path, Bounds, CtlFormula, KripkeStructure, StateSet, TransitionSystem};

/// The goal pair of a node: initial states and target states.
pub type Goal<S> = (StateSet<S>, StateSet<S>);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum AttackTree<S: Ord> {
    Base(Goal<S>),
    And(Vec<AttackTree<S>>, Goal<S>),
    Or(Vec<AttackTree<S>>, Goal<S>),
}

impl<S: Ord + Clone> AttackTree<S> {
    pub fn base(from: StateSet<S>, to: StateSet<S>) -> Self {
        Self::Base((from, to))
    }

    pub fn and(children: Vec<Self>, from: StateSet<S>, to: StateSet<S>) -> Self {
        Self::And(children, (from, to))
    }

    pub fn or(children: Vec<Self>, from: StateSet<S>, to: StateSet<S>) -> Self {
        Self::Or(children, (from, to))
    }

    pub fn goal(&self) -> &Goal<S> {
        match self {
            Self::Base(g) | Self::And(_, g) | Self::Or(_, g) => g,
        }
    }

    pub fn children(&self) -> &[Self] {
        match self {
            Self::Base(_) => &[],
            Self::And(c, _) | Self::Or(c, _) => c,
        }
    }

    /// The node at `position` (a path of child indices from the root).
    pub fn get(&self, position: &[usize]) -> Option<&Self> {
        match position.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i)?.get(rest),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Self::size).sum::<usize>()
    }

    /// Positions of all `Base` leaves, in left-to-right order.
    pub fn leaf_positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_leaves(&mut path, &mut out);
        out
    }

    fn collect_leaves(&self, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match self {
            Self::Base(_) => out.push(path.clone()),
            Self::And(c, _) | Self::Or(c, _) => {
                for (i, child) in c.iter().enumerate() {
                    path.push(i);
                    child.collect_leaves(path, out);
                    path.pop();
                }
            }
        }
    }
}

/// The goal pair of the root.
pub fn attack_of<S: Ord + Clone>(t: &AttackTree<S>) -> Goal<S> {
    t.goal().clone()
}

/// The validity predicate.
///
/// - `Base (I, s)`: every state of `I` has a successor in `s`.
/// - `And`: `[]` needs `I ⊆ s`; `[a]` needs `a` valid with goal exactly
///   `(I, s)`; `a # l` needs `a` valid, `fst (attack a) = I` and
///   `And l (snd (attack a), s)` valid.
/// - `Or`: `[]` needs `I ⊆ s`; `[a]` needs `a` valid with
///   `fst (attack a) ⊇ I` and `snd (attack a) ⊆ s`; `a # l` needs `a` valid,
///   `fst (attack a) ⊆ I`, `snd (attack a) ⊆ s` and
///   `Or l (I - fst (attack a), s)` valid.
///
/// The single-child `Or` clause uses `⊇` on the initial sets while the cons
/// clause uses `⊆`. Both are implemented as stated, not reconciled.
pub fn is_valid<T: TransitionSystem>(t: &AttackTree<T::State>, sys: &T) -> bool {
    match t {
        AttackTree::Base((from, to)) => from
            .iter()
            .all(|x| sys.successors(x).iter().any(|y| to.contains(y))),
        AttackTree::And(children, (from, to)) => and_valid(children, from, to, sys),
        AttackTree::Or(children, (from, to)) => or_valid(children, from, to, sys),
    }
}

fn and_valid<T: TransitionSystem>(
    children: &[AttackTree<T::State>],
    from: &StateSet<T::State>,
    to: &StateSet<T::State>,
    sys: &T,
) -> bool {
    match children {
        [] => from.is_subset(to),
        [a] => {
            let (af, at) = a.goal();
            is_valid(a, sys) && af == from && at == to
        }
        [a, rest @ ..] => {
            let (af, at) = a.goal();
            is_valid(a, sys) && af == from && and_valid(rest, at, to, sys)
        }
    }
}

fn or_valid<T: TransitionSystem>(
    children: &[AttackTree<T::State>],
    from: &StateSet<T::State>,
    to: &StateSet<T::State>,
    sys: &T,
) -> bool {
    match children {
        [] => from.is_subset(to),
        [a] => {
            let (af, at) = a.goal();
            is_valid(a, sys) && af.is_superset(from) && at.is_subset(to)
        }
        [a, rest @ ..] => {
            let (af, at) = a.goal();
            if !(is_valid(a, sys) && af.is_subset(from) && at.is_subset(to)) {
                return false;
            }
            let remaining: StateSet<T::State> = from.difference(af).cloned().collect();
            or_valid(rest, &remaining, to, sys)
        }
    }
}

/// Builds a valid tree with goal `(init, goal)` if every state of `init`
/// reaches `goal` in `m`.
///
/// The shape is an `Or` over one `And` chain per initial state; each chain
/// follows a shortest path with singleton intermediate sets. A single initial
/// state yields its chain directly, and `init ⊆ goal` yields `And([], …)`.
pub fn synthesize<T: TransitionSystem>(
    m: &KripkeStructure<T>,
    init: &StateSet<T::State>,
    goal: &StateSet<T::State>,
) -> Result<Option<AttackTree<T::State>>> {
    if init.is_empty() {
        return Err(Error::EmptyInitialSet);
    }
    m.mask_of(init)?;
    if init.is_subset(goal) {
        return Ok(Some(AttackTree::And(Vec::new(), (init.clone(), goal.clone()))));
    }
    let mut chains = Vec::with_capacity(init.len());
    for i in init {
        let Some(path) = crate::kripke::shortest_path(m, i, goal) else {
            return Ok(None);
        };
        chains.push(chain(&path, goal));
    }
    if chains.len() == 1 {
        return Ok(chains.pop());
    }
    Ok(Some(AttackTree::Or(chains, (init.clone(), goal.clone()))))
}

fn chain<S: Ord + Clone>(path: &[S], goal: &StateSet<S>) -> AttackTree<S> {
    let single = |s: &S| StateSet::from([s.clone()]);
    let start = single(&path[0]);
    let mut steps = Vec::with_capacity(path.len().saturating_sub(1));
    for w in path.windows(2) {
        steps.push((single(&w[0]), single(&w[1])));
    }
    if let Some(last) = steps.last_mut() {
        last.1 = goal.clone();
    }
    let children = steps.into_iter().map(AttackTree::Base).collect();
    AttackTree::And(children, (start, goal.clone()))
}

/// Replaces the `Base` leaf at `position` by `replacement`, which must attack
/// the same goal.
pub fn expand_leaf<S: Ord + Clone>(
    t: &AttackTree<S>,
    position: &[usize],
    replacement: AttackTree<S>,
) -> Result<AttackTree<S>> {
    let not_a_leaf = || Error::NotALeaf { position: format!("{position:?}") };
    match t.get(position) {
        Some(AttackTree::Base(g)) => {
            if replacement.goal() != g {
                return Err(Error::EndpointMismatch);
            }
        }
        _ => return Err(not_a_leaf()),
    }
    Ok(replace_at(t, position, replacement))
}

fn replace_at<S: Ord + Clone>(t: &AttackTree<S>, position: &[usize], new: AttackTree<S>) -> AttackTree<S> {
    let Some((&i, rest)) = position.split_first() else {
        return new;
    };
    let rebuild = |c: &[AttackTree<S>]| {
        let mut c = c.to_vec();
        c[i] = replace_at(&c[i], rest, new);
        c
    };
    match t {
        AttackTree::Base(_) => unreachable!("position checked before replacement"),
        AttackTree::And(c, g) => AttackTree::And(rebuild(c), g.clone()),
        AttackTree::Or(c, g) => AttackTree::Or(rebuild(c), g.clone()),
    }
}

/// Checks the correctness direction on one instance: a valid tree with goal
/// `(I, s)` implies `EF s` from every state of `I`.
pub fn check_at_ef<T: TransitionSystem>(t: &AttackTree<T::State>, sys: T, bounds: Bounds) -> Result<bool> {
    if !is_valid(t, &sys) {
        return Err(Error::TreeNotValid);
    }
    let (from, to) = attack_of(t);
    let m = KripkeStructure::build(sys, from, bounds)?;
    let target = to.into_iter().filter(|s| m.contains(s)).collect();
    sat(&m, &CtlFormula::ef(CtlFormula::Atom(target)))
}

/// A witness path for the tree's goal, from the Kripke structure over its
/// initial set. Useful for printing alongside a tree.
pub fn goal_witness<T: TransitionSystem>(
    t: &AttackTree<T::State>,
    sys: T,
    bounds: Bounds,
) -> Result<Option<Vec<T::State>>> {
    let (from, to) = attack_of(t);
    let m = KripkeStructure::build(sys, from, bounds)?;
    Ok(witness_path(&m, &to))
}

/// Indented rendering with `N(…)`, `AND(…)` and `OR(…)` markers, two spaces
/// per level. `show` formats a state set.
pub fn render_tree<S: Ord>(t: &AttackTree<S>, show: &dyn Fn(&StateSet<S>) -> String) -> String {
    let mut out = String::new();
    render_into(t, show, 0, &mut out);
    out
}

fn render_into<S: Ord>(t: &AttackTree<S>, show: &dyn Fn(&StateSet<S>) -> String, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    let (tag, (from, to)) = match t {
        AttackTree::Base(g) => ("N", g),
        AttackTree::And(_, g) => ("AND", g),
        AttackTree::Or(_, g) => ("OR", g),
    };
    out.push_str(&format!("{tag}({}, {})\n", show(from), show(to)));
    if let AttackTree::And(c, _) | AttackTree::Or(c, _) = t {
        for child in c {
            render_into(child, show, depth + 1, out);
        }
    }
}
