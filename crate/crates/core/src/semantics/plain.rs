//! Level 1: unlabeled data.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{move_firings, transition_system_via_rules, Environment, Firing, Infrastructure, Rule, RuleSystem};
use crate::infra::{Action, Datum, Location};

/// Data per location; no empty entries.
pub type PlainStore = BTreeMap<Location, BTreeSet<Datum>>;

type State = Infrastructure<PlainStore>;

fn insert(store: &PlainStore, l: &Location, d: &Datum) -> PlainStore {
    let mut next = store.clone();
    next.entry(l.clone()).or_default().insert(d.clone());
    next
}

fn remove(store: &PlainStore, l: &Location, d: &Datum) -> PlainStore {
    let mut next = store.clone();
    if let Some(ds) = next.get_mut(l) {
        ds.remove(d);
        if ds.is_empty() {
            next.remove(l);
        }
    }
    next
}

/// Level-1 rules.
///
/// - `get_data`: an actor at `l`, get-enabled at `l'`, copies a datum of `l'`
///   to `l`.
/// - `put`: an actor put-enabled at its location adds a datum it knows.
/// - `eval`: an actor eval-enabled at its location replaces a datum there by
///   a transformer's output.
/// - `del_data`: while some actor is placed, a datum is removed from one
///   location.
/// - `erase`: while some actor is placed, a datum is removed everywhere.
/// - `move`: an actor moves to any other node whose policy enables `move`.
#[derive(Debug, Clone)]
pub struct PlainSemantics {
    pub env: Arc<Environment>,
}

impl PlainSemantics {
    pub fn new(env: Environment) -> Self {
        Self { env: Arc::new(env) }
    }
}

impl RuleSystem for PlainSemantics {
    type State = State;

    fn firings(&self, s: &State) -> Vec<Firing<State>> {
        let env = &*self.env;
        let store = &s.graph.lgra;
        let mut out = Vec::new();
        let fire = |rule, actor: &_, location: &Location, datum: &Datum, lgra| Firing {
            rule,
            actor: crate::infra::Identity::clone(actor),
            location: location.clone(),
            datum: Some(datum.clone()),
            target: s.with_lgra(lgra),
        };
        for (l, h) in s.graph.placements() {
            for src in &env.locations {
                if s.enables(src, h, Action::Get) {
                    for d in store.get(src).into_iter().flatten() {
                        out.push(fire(Rule::Get, h, l, d, insert(store, l, d)));
                    }
                }
            }
            if s.enables(l, h, Action::Put) {
                for d in env.knows(&s.actors, h) {
                    out.push(fire(Rule::Put, h, l, &d, insert(store, l, &d)));
                }
            }
            if s.enables(l, h, Action::Eval) {
                for d in store.get(l).into_iter().flatten() {
                    for g in env.transforms(d) {
                        out.push(fire(Rule::Eval, h, l, d, insert(&remove(store, l, d), l, &g)));
                    }
                }
            }
        }
        if let Some((_, h)) = s.graph.placements().next() {
            for (l, ds) in store {
                for d in ds {
                    out.push(fire(Rule::Delete, h, l, d, remove(store, l, d)));
                }
            }
            let all: BTreeSet<&Datum> = store.values().flatten().collect();
            for d in all {
                let mut next = store.clone();
                next.retain(|_, ds| {
                    ds.remove(d);
                    !ds.is_empty()
                });
                let first = store.iter().find(|(_, ds)| ds.contains(d)).map(|(l, _)| l);
                out.push(fire(Rule::Erase, h, first.expect("datum is stored somewhere"), d, next));
            }
        }
        move_firings(env, s, &mut out);
        out
    }
}

transition_system_via_rules!(PlainSemantics);
