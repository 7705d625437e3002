//! Refinement maps between adjacent levels.

use alloc::collections::BTreeSet;

use crate::error::Result;
use crate::infra::{fmap_set, ActorTable, ActorValue, Dlm, Identity, LabeledData, Location};
use crate::refinement::StateMap;
use crate::semantics::{check_ledger, Infrastructure, LabeledStore, Ledger, PlainStore};

pub type PlainState = Infrastructure<PlainStore>;
pub type LabeledState = Infrastructure<LabeledStore>;
pub type LedgerState = Infrastructure<Ledger>;

/// Level 2 to level 1: drops the labels, `fmap snd` per location.
pub fn refmap_two_to_one(s: &LabeledState) -> PlainState {
    let store = s.graph.lgra.iter().map(|(l, items)| (l.clone(), fmap_set(|x: &LabeledData<ActorValue>| x.1.clone(), items)));
    s.with_store(store.collect())
}

/// Level 3 to level 2: the representations coincide.
pub fn refmap_three_to_two(s: &LabeledState) -> LabeledState {
    s.clone()
}

/// `(s, sl) ↦ (Actor s, fmap Actor sl)`.
pub fn dlm_to_dlm(actors: &ActorTable, label: &Dlm<Identity>) -> Dlm<ActorValue> {
    Dlm { owner: actors.actor(&label.owner), readers: fmap_set(|r| actors.actor(r), &label.readers) }
}

/// The labeled data the ledger places at `l`, with labels mapped through
/// [`dlm_to_dlm`].
pub fn ledger_to_loc(actors: &ActorTable, ld: &Ledger, l: &Location) -> BTreeSet<LabeledData<ActorValue>> {
    ld.iter()
        .filter(|(_, ls)| ls.contains(l))
        .map(|((lab, d), _)| (dlm_to_dlm(actors, lab), d.clone()))
        .collect()
}

/// Level 4 to level 3: the ledger unfolded into per-location stores.
pub fn refmap_four_to_three(s: &LedgerState) -> Result<LabeledState> {
    check_ledger(&s.graph.lgra)?;
    let locations: BTreeSet<&Location> = s.graph.lgra.values().flatten().collect();
    let store = locations.into_iter().map(|l| (l.clone(), ledger_to_loc(&s.actors, &s.graph.lgra, l)));
    Ok(s.with_store(store.collect()))
}

/// [`refmap_two_to_one`] as a [`StateMap`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoToOne;

impl StateMap<LabeledState, PlainState> for TwoToOne {
    fn map_state(&self, s: &LabeledState) -> Option<PlainState> {
        Some(refmap_two_to_one(s))
    }
}

/// [`refmap_three_to_two`] as a [`StateMap`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ThreeToTwo;

impl StateMap<LabeledState, LabeledState> for ThreeToTwo {
    fn map_state(&self, s: &LabeledState) -> Option<LabeledState> {
        Some(refmap_three_to_two(s))
    }
}

/// [`refmap_four_to_three`] as a [`StateMap`]; undefined on corrupt ledgers.
#[derive(Debug, Clone, Copy, Default)]
pub struct FourToThree;

impl StateMap<LedgerState, LabeledState> for FourToThree {
    fn map_state(&self, s: &LedgerState) -> Option<LabeledState> {
        refmap_four_to_three(s).ok()
    }
}
