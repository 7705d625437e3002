//! Finite transition systems, Kripke structures and CTL evaluation.
//!
//! States are ordered values; every set handed out by this module is a
//! [`BTreeSet`], so iteration order (and everything derived from it, such as
//! witness paths and counterexamples) is canonical.
//!
//! A [`KripkeStructure`] stores its states sorted, together with successor and
//! predecessor index lists. CTL operators are evaluated on boolean masks over
//! those indices: EF as a least fixpoint, AG as a greatest fixpoint.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A finite set of states in canonical order.
pub type StateSet<S> = BTreeSet<S>;

/// Default hard cap on the number of states explored.
pub const DEFAULT_STATE_CAP: usize = 100_000;

/// A deterministic successor enumerator.
///
/// Implementations must return equal sets for equal states.
pub trait TransitionSystem {
    type State: Ord + Clone;

    fn successors(&self, state: &Self::State) -> StateSet<Self::State>;
}

impl<T: TransitionSystem + ?Sized> TransitionSystem for &T {
    type State = T::State;

    fn successors(&self, state: &Self::State) -> StateSet<Self::State> {
        (**self).successors(state)
    }
}

/// A transition system given by an explicit successor table. States missing
/// from the table have no successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitSystem<S: Ord> {
    edges: BTreeMap<S, StateSet<S>>,
}

impl<S: Ord + Clone> ExplicitSystem<S> {
    pub fn new() -> Self {
        Self { edges: BTreeMap::new() }
    }

    pub fn from_edges<I: IntoIterator<Item = (S, S)>>(edges: I) -> Self {
        let mut sys = Self::new();
        for (a, b) in edges {
            sys.add_edge(a, b);
        }
        sys
    }

    pub fn add_edge(&mut self, from: S, to: S) {
        self.edges.entry(from).or_default().insert(to);
    }

    pub fn edges(&self) -> impl Iterator<Item = (&S, &S)> {
        self.edges.iter().flat_map(|(a, bs)| bs.iter().map(move |b| (a, b)))
    }
}

impl<S: Ord + Clone> Default for ExplicitSystem<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Ord + Clone> TransitionSystem for ExplicitSystem<S> {
    type State = S;

    fn successors(&self, state: &S) -> StateSet<S> {
        self.edges.get(state).cloned().unwrap_or_default()
    }
}

/// Adapts a closure `Fn(&S) -> StateSet<S>` into a [`TransitionSystem`].
pub struct FnSystem<S, F> {
    f: F,
    _state: core::marker::PhantomData<fn(&S) -> S>,
}

impl<S, F> FnSystem<S, F> {
    pub fn new(f: F) -> Self {
        Self { f, _state: core::marker::PhantomData }
    }
}

impl<S, F> core::fmt::Debug for FnSystem<S, F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("FnSystem")
    }
}

impl<S: Ord + Clone, F: Fn(&S) -> StateSet<S>> TransitionSystem for FnSystem<S, F> {
    type State = S;

    fn successors(&self, state: &S) -> StateSet<S> {
        (self.f)(state)
    }
}

/// Exploration limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Exceeding this many states is an error.
    pub state_cap: usize,
    /// Stop expanding states at this BFS depth; reported as truncation.
    pub depth: Option<usize>,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { state_cap: DEFAULT_STATE_CAP, depth: None }
    }
}

impl Bounds {
    pub fn with_cap(state_cap: usize) -> Self {
        Self { state_cap, depth: None }
    }
}

/// Result of [`compute_reachable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reachable<S: Ord> {
    pub states: StateSet<S>,
    /// True when the depth bound cut off states that have unexplored successors.
    pub truncated: bool,
}

/// Breadth-first exploration shared by [`compute_reachable`] and the Kripke
/// constructors. States are numbered in discovery order.
struct Exploration<S> {
    index: BTreeMap<S, usize>,
    order: Vec<S>,
    succ: Vec<Vec<usize>>,
    truncated: bool,
}

fn explore<T: TransitionSystem>(
    sys: &T,
    roots: impl IntoIterator<Item = T::State>,
    bounds: Bounds,
) -> Result<Exploration<T::State>> {
    let mut index: BTreeMap<T::State, usize> = BTreeMap::new();
    let mut order: Vec<T::State> = Vec::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for root in roots {
        if !index.contains_key(&root) {
            if order.len() >= bounds.state_cap {
                return Err(Error::StateExplosion { cap: bounds.state_cap });
            }
            index.insert(root.clone(), order.len());
            queue.push_back(order.len());
            order.push(root);
            depth.push(0);
        }
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let mut frontier = Vec::new();
    while let Some(i) = queue.pop_front() {
        if bounds.depth.is_some_and(|d| depth[i] >= d) {
            frontier.push(i);
            continue;
        }
        let next = sys.successors(&order[i]);
        let mut out = Vec::with_capacity(next.len());
        for t in next {
            let j = match index.get(&t) {
                Some(&j) => j,
                None => {
                    if order.len() >= bounds.state_cap {
                        return Err(Error::StateExplosion { cap: bounds.state_cap });
                    }
                    let j = order.len();
                    index.insert(t.clone(), j);
                    order.push(t);
                    depth.push(depth[i] + 1);
                    succ.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            out.push(j);
        }
        succ[i] = out;
    }
    // States at the depth bound keep the edges that stay inside the explored set.
    let mut truncated = false;
    for i in frontier {
        let mut out = Vec::new();
        for t in sys.successors(&order[i]) {
            match index.get(&t) {
                Some(&j) => out.push(j),
                None => truncated = true,
            }
        }
        succ[i] = out;
    }
    Ok(Exploration { index, order, succ, truncated })
}

/// Least superset of `init` closed under successors (cut at `bounds.depth`).
pub fn compute_reachable<T: TransitionSystem>(
    init: &StateSet<T::State>,
    sys: &T,
    bounds: Bounds,
) -> Result<Reachable<T::State>> {
    let ex = explore(sys, init.iter().cloned(), bounds)?;
    Ok(Reachable { states: ex.index.into_keys().collect(), truncated: ex.truncated })
}

/// Builds the Kripke structure whose states are those reachable from `init`.
pub fn build_kripke<T: TransitionSystem>(
    init: &StateSet<T::State>,
    sys: T,
    bounds: Bounds,
) -> Result<KripkeStructure<T>> {
    KripkeStructure::build(sys, init.clone(), bounds)
}

/// A finite Kripke structure: states, initial states and the transition
/// system they were generated from.
pub struct KripkeStructure<T: TransitionSystem> {
    system: T,
    states: Vec<T::State>,
    init: Vec<usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    truncated: bool,
}

impl<T> core::fmt::Debug for KripkeStructure<T>
where
    T: TransitionSystem,
    T::State: core::fmt::Debug,
{
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("KripkeStructure")
            .field("states", &self.states.len())
            .field("init", &self.init.len())
            .field("truncated", &self.truncated)
            .finish()
    }
}

impl<T: TransitionSystem> KripkeStructure<T> {
    /// States reachable from `init`.
    pub fn build(system: T, init: StateSet<T::State>, bounds: Bounds) -> Result<Self> {
        let ex = explore(&system, init.iter().cloned(), bounds)?;
        Ok(Self::from_exploration(system, ex, &init))
    }

    /// States reachable from `universe ∪ init`, with `init` as initial states.
    ///
    /// Unlike [`KripkeStructure::build`] this may contain states that are not
    /// reachable from an initial state.
    pub fn over_universe(
        system: T,
        universe: StateSet<T::State>,
        init: StateSet<T::State>,
        bounds: Bounds,
    ) -> Result<Self> {
        let roots = init.iter().chain(universe.iter()).cloned();
        let ex = explore(&system, roots, bounds)?;
        Ok(Self::from_exploration(system, ex, &init))
    }

    fn from_exploration(system: T, ex: Exploration<T::State>, init: &StateSet<T::State>) -> Self {
        let n = ex.order.len();
        let mut rank = vec![0usize; n];
        let mut states = Vec::with_capacity(n);
        for (pos, (state, discovered)) in ex.index.into_iter().enumerate() {
            rank[discovered] = pos;
            states.push(state);
        }
        let mut succ = vec![Vec::new(); n];
        for (discovered, out) in ex.succ.into_iter().enumerate() {
            let mut mapped: Vec<usize> = out.into_iter().map(|j| rank[j]).collect();
            mapped.sort_unstable();
            mapped.dedup();
            succ[rank[discovered]] = mapped;
        }
        let mut pred = vec![Vec::new(); n];
        for (i, out) in succ.iter().enumerate() {
            for &j in out {
                pred[j].push(i);
            }
        }
        let init = init
            .iter()
            .map(|s| states.binary_search(s).expect("initial state explored"))
            .collect();
        Self { system, states, init, succ, pred, truncated: ex.truncated }
    }

    pub fn system(&self) -> &T {
        &self.system
    }

    /// All states, sorted.
    pub fn states(&self) -> &[T::State] {
        &self.states
    }

    pub fn state_set(&self) -> StateSet<T::State> {
        self.states.iter().cloned().collect()
    }

    pub fn init_set(&self) -> StateSet<T::State> {
        self.init.iter().map(|&i| self.states[i].clone()).collect()
    }

    pub fn init_indices(&self) -> &[usize] {
        &self.init
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn state(&self, index: usize) -> &T::State {
        &self.states[index]
    }

    pub fn index_of(&self, state: &T::State) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    pub fn contains(&self, state: &T::State) -> bool {
        self.index_of(state).is_some()
    }

    /// Successor indices of `index`, ascending.
    pub fn successor_indices(&self, index: usize) -> &[usize] {
        &self.succ[index]
    }

    pub fn predecessor_indices(&self, index: usize) -> &[usize] {
        &self.pred[index]
    }

    pub fn transition_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// States satisfying `pred`.
    pub fn filter(&self, pred: impl Fn(&T::State) -> bool) -> StateSet<T::State> {
        self.states.iter().filter(|s| pred(s)).cloned().collect()
    }

    /// Membership mask of `set`; fails if `set` has states outside the structure.
    pub fn mask_of(&self, set: &StateSet<T::State>) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.states.len()];
        let mut foreign = 0;
        for s in set {
            match self.index_of(s) {
                Some(i) => mask[i] = true,
                None => foreign += 1,
            }
        }
        if foreign > 0 {
            return Err(Error::ForeignAtom { count: foreign });
        }
        Ok(mask)
    }

    /// Like [`KripkeStructure::mask_of`] but silently drops foreign states.
    pub fn mask_within(&self, set: &StateSet<T::State>) -> Vec<bool> {
        let mut mask = vec![false; self.states.len()];
        for s in set {
            if let Some(i) = self.index_of(s) {
                mask[i] = true;
            }
        }
        mask
    }

    pub fn set_of(&self, mask: &[bool]) -> StateSet<T::State> {
        mask.iter()
            .zip(&self.states)
            .filter(|(m, _)| **m)
            .map(|(_, s)| s.clone())
            .collect()
    }

    /// Indices reachable from `sources` (inclusive) along stored edges.
    pub fn forward_mask(&self, sources: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &self.succ[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// Shortest path (as indices) from any of `sources` to a state in `goal`.
    /// Sources are tried in the order given; ties go to the earliest source and
    /// the smallest successor index.
    pub fn shortest_path_indices(&self, sources: &[usize], goal: &[bool]) -> Option<Vec<usize>> {
        let n = self.states.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &s in sources {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(i) = queue.pop_front() {
            if goal[i] {
                let mut path = vec![i];
                let mut cur = i;
                while parent[cur] != usize::MAX {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &j in &self.succ[i] {
                if !seen[j] {
                    seen[j] = true;
                    parent[j] = i;
                    queue.push_back(j);
                }
            }
        }
        None
    }

    fn ex(&self, target: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.states.len()];
        for (j, &t) in target.iter().enumerate() {
            if t {
                for &i in &self.pred[j] {
                    out[i] = true;
                }
            }
        }
        out
    }

    fn ax(&self, target: &[bool]) -> Vec<bool> {
        self.succ.iter().map(|out| out.iter().all(|&j| target[j])).collect()
    }

    fn eval_mask(&self, f: &CtlFormula<T::State>) -> Result<Vec<bool>> {
        Ok(match f {
            CtlFormula::Atom(set) => self.mask_of(set)?,
            CtlFormula::Not(g) => self.eval_mask(g)?.into_iter().map(|b| !b).collect(),
            CtlFormula::And(g, h) => {
                let a = self.eval_mask(g)?;
                let b = self.eval_mask(h)?;
                a.into_iter().zip(b).map(|(x, y)| x && y).collect()
            }
            CtlFormula::Or(g, h) => {
                let a = self.eval_mask(g)?;
                let b = self.eval_mask(h)?;
                a.into_iter().zip(b).map(|(x, y)| x || y).collect()
            }
            CtlFormula::EX(g) => self.ex(&self.eval_mask(g)?),
            CtlFormula::AX(g) => self.ax(&self.eval_mask(g)?),
            CtlFormula::EF(g) => {
                // lfp Z. g ∨ EX Z
                let target = self.eval_mask(g)?;
                let mut z = vec![false; self.states.len()];
                loop {
                    let step = self.ex(&z);
                    let next: Vec<bool> =
                        target.iter().zip(step).map(|(a, b)| *a || b).collect();
                    if next == z {
                        break z;
                    }
                    z = next;
                }
            }
            CtlFormula::AG(g) => {
                // gfp Z. g ∧ AX Z
                let target = self.eval_mask(g)?;
                let mut z = vec![true; self.states.len()];
                loop {
                    let step = self.ax(&z);
                    let next: Vec<bool> =
                        target.iter().zip(step).map(|(a, b)| *a && b).collect();
                    if next == z {
                        break z;
                    }
                    z = next;
                }
            }
        })
    }
}

/// CTL formulas over state-set atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CtlFormula<S: Ord> {
    Atom(StateSet<S>),
    EX(Box<CtlFormula<S>>),
    AX(Box<CtlFormula<S>>),
    EF(Box<CtlFormula<S>>),
    AG(Box<CtlFormula<S>>),
    Not(Box<CtlFormula<S>>),
    And(Box<CtlFormula<S>>, Box<CtlFormula<S>>),
    Or(Box<CtlFormula<S>>, Box<CtlFormula<S>>),
}

impl<S: Ord> CtlFormula<S> {
    pub fn atom(set: StateSet<S>) -> Self {
        Self::Atom(set)
    }

    pub fn ex(f: Self) -> Self {
        Self::EX(Box::new(f))
    }

    pub fn ax(f: Self) -> Self {
        Self::AX(Box::new(f))
    }

    pub fn ef(f: Self) -> Self {
        Self::EF(Box::new(f))
    }

    pub fn ag(f: Self) -> Self {
        Self::AG(Box::new(f))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Self::Not(Box::new(f))
    }

    pub fn and(f: Self, g: Self) -> Self {
        Self::And(Box::new(f), Box::new(g))
    }

    pub fn or(f: Self, g: Self) -> Self {
        Self::Or(Box::new(f), Box::new(g))
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Atom(_) => 1,
            Self::EX(f) | Self::AX(f) | Self::EF(f) | Self::AG(f) | Self::Not(f) => 1 + f.depth(),
            Self::And(f, g) | Self::Or(f, g) => 1 + f.depth().max(g.depth()),
        }
    }
}

/// The states of `m` satisfying `f`.
pub fn eval_ctl<T: TransitionSystem>(
    m: &KripkeStructure<T>,
    f: &CtlFormula<T::State>,
) -> Result<StateSet<T::State>> {
    Ok(m.set_of(&m.eval_mask(f)?))
}

/// `M ⊢ f`: every initial state satisfies `f`.
pub fn sat<T: TransitionSystem>(m: &KripkeStructure<T>, f: &CtlFormula<T::State>) -> Result<bool> {
    let mask = m.eval_mask(f)?;
    Ok(m.init.iter().all(|&i| mask[i]))
}

/// A shortest path from some initial state to a state in `goal`.
pub fn witness_path<T: TransitionSystem>(
    m: &KripkeStructure<T>,
    goal: &StateSet<T::State>,
) -> Option<Vec<T::State>> {
    let goal = m.mask_within(goal);
    m.shortest_path_indices(&m.init, &goal)
        .map(|p| p.into_iter().map(|i| m.states[i].clone()).collect())
}

/// A shortest path from `start` to a state in `goal`.
pub fn shortest_path<T: TransitionSystem>(
    m: &KripkeStructure<T>,
    start: &T::State,
    goal: &StateSet<T::State>,
) -> Option<Vec<T::State>> {
    let start = m.index_of(start)?;
    let goal = m.mask_within(goal);
    m.shortest_path_indices(&[start], &goal)
        .map(|p| p.into_iter().map(|i| m.states[i].clone()).collect())
}
