//! Infrastructure states and the transition rules of the four refinement
//! levels.
//!
//! | level | data store | system |
//! |-------|------------|--------|
//! | 1 | plain data per location | [`PlainSemantics`] |
//! | 2 | DLM-labeled data per location, unrestricted `eval` | [`LabeledSemantics`] |
//! | 3 | as level 2, processing only through label functions | [`LabeledSemantics`] |
//! | 4 | a ledger from labeled data to location sets | [`LedgerSemantics`] |
//!
//! Every rule leaves `gra`, `cgra` and `delta` untouched; only `move` changes
//! `agra`. Free choices in rules (which datum to put, which reader set) range
//! over the finite universes of an [`Environment`].

mod labeled;
mod ledger;
mod plain;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::ops::Deref;

use crate::infra::{
    policy_enables, Action, ActorTable, ActorValue, Credentials, Datum, Dlm, Identity, LabelFun, Location,
    Policies, PolicyContext,
};
use crate::error::{Error, Result};
use crate::kripke::StateSet;

pub use labeled::{LabeledSemantics, LabeledStore};
pub use ledger::{check_ledger, ledger_invariant, Ledger, LedgerSemantics};
pub use plain::{PlainSemantics, PlainStore};

/// A shared immutable value. Equality and ordering compare contents, with a
/// pointer-equality shortcut.
pub struct Shared<T>(Arc<T>);

impl<T> Shared<T> {
    pub fn new(value: T) -> Self {
        Self(Arc::new(value))
    }
}

impl<T> Clone for Shared<T> {
    fn clone(&self) -> Self {
        Self(self.0.clone())
    }
}

impl<T> Deref for Shared<T> {
    type Target = T;

    fn deref(&self) -> &T {
        &self.0
    }
}

impl<T: fmt::Debug> fmt::Debug for Shared<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<T: PartialEq> PartialEq for Shared<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl<T: Eq> Eq for Shared<T> {}

impl<T: Ord> PartialOrd for Shared<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Ord> Ord for Shared<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl<T: Hash> Hash for Shared<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

pub type Edges = BTreeSet<(Location, Location)>;
pub type CredentialTable = BTreeMap<Identity, Credentials>;

/// An infrastructure graph with data store `D`.
///
/// `agra` never holds empty entries, so equal placements compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Igraph<D> {
    pub agra: BTreeMap<Location, BTreeSet<Identity>>,
    pub lgra: D,
    pub gra: Shared<Edges>,
    pub cgra: Shared<CredentialTable>,
}

impl<D> Igraph<D> {
    pub fn actors_at(&self, l: &Location) -> impl Iterator<Item = &Identity> {
        self.agra.get(l).into_iter().flatten()
    }

    /// All placed identities with their location, in canonical order.
    pub fn placements(&self) -> impl Iterator<Item = (&Location, &Identity)> {
        self.agra.iter().flat_map(|(l, ids)| ids.iter().map(move |h| (l, h)))
    }

    pub fn location_of(&self, h: &Identity) -> Option<&Location> {
        self.placements().find(|(_, g)| *g == h).map(|(l, _)| l)
    }

    pub fn is_placed(&self, h: &Identity) -> bool {
        self.location_of(h).is_some()
    }

    fn with_store<E>(&self, lgra: E) -> Igraph<E> {
        Igraph { agra: self.agra.clone(), lgra, gra: self.gra.clone(), cgra: self.cgra.clone() }
    }
}

/// An infrastructure state: graph, local policies, and the `Actor` function
/// in force.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Infrastructure<D> {
    pub graph: Igraph<D>,
    pub delta: Shared<Policies>,
    pub actors: Shared<ActorTable>,
}

impl<D> PolicyContext for Infrastructure<D> {
    fn resides_at(&self, id: &Identity, l: &Location) -> bool {
        self.graph.agra.get(l).is_some_and(|ids| ids.contains(id))
    }

    fn credentials(&self, id: &Identity) -> Option<&Credentials> {
        self.graph.cgra.get(id)
    }

    fn actors(&self) -> &ActorTable {
        &self.actors
    }
}

impl<D: Clone> Infrastructure<D> {
    /// `enables I l a act`.
    pub fn enables(&self, l: &Location, a: &Identity, act: Action) -> bool {
        policy_enables(self.delta.get(l), self, a, act)
    }

    pub fn actor(&self, h: &Identity) -> ActorValue {
        self.actors.actor(h)
    }

    /// Same infrastructure with another data store.
    pub fn with_store<E>(&self, lgra: E) -> Infrastructure<E> {
        Infrastructure { graph: self.graph.with_store(lgra), delta: self.delta.clone(), actors: self.actors.clone() }
    }

    fn with_lgra(&self, lgra: D) -> Self {
        self.with_store(lgra)
    }

    /// Relocates `h` from `from` to `to`.
    pub fn move_actor(&self, h: &Identity, from: &Location, to: &Location) -> Self {
        let mut next = self.clone();
        if let Some(ids) = next.graph.agra.get_mut(from) {
            ids.remove(h);
            if ids.is_empty() {
                next.graph.agra.remove(from);
            }
        }
        next.graph.agra.entry(to.clone()).or_default().insert(h.clone());
        next
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Options {
    /// Delete removes only the labeled item instead of every copy of its datum.
    pub buggy_delete: bool,
    /// Level-4 `put` requires that no label holds the datum yet.
    pub consensus_put: bool,
}

/// The finite universes the rules draw their free choices from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Environment {
    /// The nodes of the graph.
    pub locations: BTreeSet<Location>,
    /// Data that may exist anywhere in the system.
    pub data: BTreeSet<Datum>,
    /// Reader sets that `put` may attach.
    pub reader_family: BTreeSet<BTreeSet<Identity>>,
    /// Data each identity can `put`. An actor knows what any of its aliased
    /// identities knows.
    pub knowledge: BTreeMap<Identity, BTreeSet<Datum>>,
    /// Transformers available to `eval` and `process`.
    pub label_funs: Vec<LabelFun>,
    pub options: Options,
    /// The identity allowed to overwrite ledger entries held by another label.
    pub controller: Option<Identity>,
}

impl Environment {
    /// Data `h` may put, restricted to the data universe.
    pub fn knows(&self, actors: &ActorTable, h: &Identity) -> BTreeSet<Datum> {
        actors
            .aliased_with(h)
            .filter_map(|j| self.knowledge.get(j))
            .flatten()
            .filter(|d| self.data.contains(*d))
            .cloned()
            .collect()
    }

    /// Outputs of the label functions on `n` that stay inside the universe.
    pub fn transforms(&self, n: &Datum) -> BTreeSet<Datum> {
        self.label_funs
            .iter()
            .map(|f| f.transformer.apply(n))
            .filter(|d| self.data.contains(d))
            .collect()
    }

    pub fn is_controller(&self, actors: &ActorTable, h: &Identity) -> bool {
        self.controller.as_ref().is_some_and(|c| actors.actor(c) == actors.actor(h))
    }
}

/// Transition rule names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Get,
    Put,
    Move,
    Eval,
    Process,
    Delete,
    Erase,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Get => "get_data",
            Self::Put => "put",
            Self::Move => "move",
            Self::Eval => "eval",
            Self::Process => "process",
            Self::Delete => "del_data",
            Self::Erase => "erase",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rule instance and the state it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing<S> {
    pub rule: Rule,
    pub actor: Identity,
    /// Where the rule acts: the actor's location, or the move target.
    pub location: Location,
    pub datum: Option<Datum>,
    pub target: S,
}

impl<S> fmt::Display for Firing<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} by {} at {}", self.rule, self.actor, self.location)?;
        if let Some(d) = &self.datum {
            write!(f, " on {d}")?;
        }
        Ok(())
    }
}

/// A transition system whose steps are named rule instances.
pub trait RuleSystem {
    type State: Ord + Clone;

    /// All rule instances enabled in `state`, in a deterministic order.
    fn firings(&self, state: &Self::State) -> Vec<Firing<Self::State>>;

    /// The first rule instance leading from `from` to `to`.
    fn explain(&self, from: &Self::State, to: &Self::State) -> Option<Firing<Self::State>> {
        self.firings(from).into_iter().find(|f| f.target == *to)
    }

    fn rule_successors(&self, state: &Self::State) -> StateSet<Self::State> {
        self.firings(state).into_iter().map(|f| f.target).collect()
    }
}

macro_rules! transition_system_via_rules {
    ($ty:ty) => {
        impl $crate::kripke::TransitionSystem for $ty {
            type State = <$ty as $crate::semantics::RuleSystem>::State;

            fn successors(&self, state: &Self::State) -> $crate::kripke::StateSet<Self::State> {
                $crate::semantics::RuleSystem::rule_successors(self, state)
            }
        }
    };
}
pub(crate) use transition_system_via_rules;

/// Firings shared by every level: `move` to any other node whose policy
/// enables it.
fn move_firings<D: Clone + Ord>(env: &Environment, state: &Infrastructure<D>, out: &mut Vec<Firing<Infrastructure<D>>>) {
    for (l, h) in state.graph.placements() {
        for target in &env.locations {
            if target != l && state.enables(target, h, Action::Move) {
                out.push(Firing {
                    rule: Rule::Move,
                    actor: h.clone(),
                    location: target.clone(),
                    datum: None,
                    target: state.move_actor(h, l, target),
                });
            }
        }
    }
}

/// Actor-valued label from an identity-valued one.
pub fn actor_label(actors: &ActorTable, owner: &Identity, readers: &BTreeSet<Identity>) -> Dlm<ActorValue> {
    Dlm { owner: actors.actor(owner), readers: readers.iter().map(|r| actors.actor(r)).collect() }
}

/// Read access to the data of a store, uniform across levels.
pub trait StoreView {
    /// Items at `l` as (owner, datum); the owner is absent at level 1.
    fn items_at(&self, actors: &ActorTable, l: &Location) -> Vec<(Option<ActorValue>, Datum)>;

    fn locations(&self) -> BTreeSet<Location>;
}

impl StoreView for PlainStore {
    fn items_at(&self, _: &ActorTable, l: &Location) -> Vec<(Option<ActorValue>, Datum)> {
        self.get(l).into_iter().flatten().map(|d| (None, d.clone())).collect()
    }

    fn locations(&self) -> BTreeSet<Location> {
        self.keys().cloned().collect()
    }
}

impl StoreView for LabeledStore {
    fn items_at(&self, _: &ActorTable, l: &Location) -> Vec<(Option<ActorValue>, Datum)> {
        self.get(l).into_iter().flatten().map(|(lab, d)| (Some(lab.owner.clone()), d.clone())).collect()
    }

    fn locations(&self) -> BTreeSet<Location> {
        self.keys().cloned().collect()
    }
}

impl StoreView for Ledger {
    fn items_at(&self, actors: &ActorTable, l: &Location) -> Vec<(Option<ActorValue>, Datum)> {
        self.iter()
            .filter(|(_, ls)| ls.contains(l))
            .map(|((lab, d), _)| (Some(actors.actor(&lab.owner)), d.clone()))
            .collect()
    }

    fn locations(&self) -> BTreeSet<Location> {
        self.values().flatten().cloned().collect()
    }
}

impl<D: StoreView> Infrastructure<D> {
    pub fn items_at(&self, l: &Location) -> Vec<(Option<ActorValue>, Datum)> {
        self.graph.lgra.items_at(&self.actors, l)
    }

    /// Locations that hold some item.
    pub fn data_locations(&self) -> BTreeSet<Location> {
        self.graph.lgra.locations()
    }
}

/// `Doctor@hospital Eve@home | cloud: Patient:42`; unlabeled data shows the
/// datum alone.
impl<D: StoreView> fmt::Display for Infrastructure<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (l, h) in self.graph.placements() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{h}@{l}")?;
        }
        for l in self.data_locations() {
            write!(f, " | {l}:")?;
            for (owner, d) in self.items_at(&l) {
                match owner {
                    Some(o) => write!(f, " {o}:{d}")?,
                    None => write!(f, " {d}")?,
                }
            }
        }
        Ok(())
    }
}

/// The firings that relate consecutive states of `path`. Fails with
/// [`Error::BrokenTrace`] at the first pair no rule connects.
pub fn replay<R: RuleSystem>(sys: &R, path: &[R::State]) -> Result<Vec<Firing<R::State>>> {
    path.windows(2)
        .enumerate()
        .map(|(i, w)| sys.explain(&w[0], &w[1]).ok_or(Error::BrokenTrace { step: i }))
        .collect()
}
