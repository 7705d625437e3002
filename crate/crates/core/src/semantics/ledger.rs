//! Level 4: a ledger from labeled data to the locations holding it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{move_firings, transition_system_via_rules, Environment, Firing, Infrastructure, Rule, RuleSystem};
use crate::error::{Error, Result};
use crate::infra::{has_access, Action, Datum, Dlm, Identity, LabeledData, Location};

/// Labeled data (identity labels) to nonempty location sets. Absent keys map
/// to the empty set.
pub type Ledger = BTreeMap<LabeledData<Identity>, BTreeSet<Location>>;

type State = Infrastructure<Ledger>;

/// Per datum, all labels map to `∅` or exactly one label maps to a nonempty
/// set. Entries holding an empty set are ignored.
pub fn ledger_invariant(ld: &Ledger) -> bool {
    first_duplicate(ld).is_none()
}

fn first_duplicate(ld: &Ledger) -> Option<&Datum> {
    let mut seen = BTreeSet::new();
    ld.iter().filter(|(_, ls)| !ls.is_empty()).map(|((_, d), _)| d).find(|d| !seen.insert(*d))
}

/// Fails with [`Error::CorruptLedger`] naming the first datum held under two
/// labels.
pub fn check_ledger(ld: &Ledger) -> Result<()> {
    match first_duplicate(ld) {
        Some(d) => Err(Error::CorruptLedger { datum: d.as_str().into() }),
        None => Ok(()),
    }
}

fn holders<'a>(ld: &'a Ledger, n: &'a Datum) -> impl Iterator<Item = &'a LabeledData<Identity>> {
    ld.iter().filter(move |((_, d), ls)| d == n && !ls.is_empty()).map(|(k, _)| k)
}

fn set(ld: &Ledger, key: &LabeledData<Identity>, ls: BTreeSet<Location>) -> Ledger {
    let mut next = ld.clone();
    if ls.is_empty() {
        next.remove(key);
    } else {
        next.insert(key.clone(), ls);
    }
    next
}

/// Level-4 rules.
///
/// - `get_data`: an actor at `l`, get-enabled at `l'`, owning or reading an
///   entry whose locations include `l'`, adds `l` to them.
/// - `put`: an actor put-enabled at its location enters a datum it knows
///   under its own label. A fresh datum gets `{l}`; a datum already held
///   under the same label gets `l` added. A datum held under another label
///   is taken over (the other entry cleared) only by the controller. With
///   `consensus_put` no label may hold the datum yet.
/// - `process`: an actor eval-enabled at `l`, owning or reading an entry that
///   includes `l`, moves `l` from that entry to the transformed datum under
///   the same label.
/// - `del_data`: a placed owner clears its entry, deleting the datum
///   everywhere at once.
/// - `move`: as at level 1.
///
/// Inputs are expected to satisfy [`ledger_invariant`]; every rule preserves
/// it.
#[derive(Debug, Clone)]
pub struct LedgerSemantics {
    pub env: Arc<Environment>,
}

impl LedgerSemantics {
    pub fn new(env: Environment) -> Self {
        Self { env: Arc::new(env) }
    }
}

impl RuleSystem for LedgerSemantics {
    type State = State;

    fn firings(&self, s: &State) -> Vec<Firing<State>> {
        let env = &*self.env;
        let ld = &s.graph.lgra;
        let mut out = Vec::new();
        let fire = |rule, actor: &Identity, location: &Location, datum: &Datum, ledger| Firing {
            rule,
            actor: actor.clone(),
            location: location.clone(),
            datum: Some(datum.clone()),
            target: s.with_lgra(ledger),
        };
        for (l, h) in s.graph.placements() {
            for src in &env.locations {
                if !s.enables(src, h, Action::Get) {
                    continue;
                }
                for (key, ls) in ld {
                    if ls.contains(src) && has_access(h, key) {
                        let mut grown = ls.clone();
                        grown.insert(l.clone());
                        out.push(fire(Rule::Get, h, l, &key.1, set(ld, key, grown)));
                    }
                }
            }
            if s.enables(l, h, Action::Put) {
                for n in env.knows(&s.actors, h) {
                    let held: Vec<&LabeledData<Identity>> = holders(ld, &n).collect();
                    if env.options.consensus_put && !held.is_empty() {
                        continue;
                    }
                    for hs in &env.reader_family {
                        let key = (Dlm { owner: h.clone(), readers: hs.clone() }, n.clone());
                        let next = match held.as_slice() {
                            [] => set(ld, &key, BTreeSet::from([l.clone()])),
                            [k] if **k == key => {
                                let mut grown = ld[&key].clone();
                                grown.insert(l.clone());
                                set(ld, &key, grown)
                            }
                            _ if env.is_controller(&s.actors, h) => {
                                let mut next = ld.clone();
                                next.retain(|(_, d), _| *d != n);
                                set(&next, &key, BTreeSet::from([l.clone()]))
                            }
                            _ => continue,
                        };
                        out.push(fire(Rule::Put, h, l, &n, next));
                    }
                }
            }
            if s.enables(l, h, Action::Eval) {
                for (key, ls) in ld {
                    if !ls.contains(l) || !has_access(h, key) {
                        continue;
                    }
                    for m in env.transforms(&key.1) {
                        if m == key.1 {
                            out.push(fire(Rule::Process, h, l, &key.1, ld.clone()));
                            continue;
                        }
                        let new_key = (key.0.clone(), m.clone());
                        if holders(ld, &m).any(|k| *k != new_key) {
                            continue;
                        }
                        let mut shrunk = ls.clone();
                        shrunk.remove(l);
                        let mut grown = ld.get(&new_key).cloned().unwrap_or_default();
                        grown.insert(l.clone());
                        let next = set(&set(ld, key, shrunk), &new_key, grown);
                        out.push(fire(Rule::Process, h, l, &key.1, next));
                    }
                }
            }
        }
        for (_, h) in s.graph.placements() {
            for (key, ls) in ld {
                if key.0.owner == *h {
                    let first = ls.first().expect("stored location sets are nonempty");
                    out.push(fire(Rule::Delete, h, first, &key.1, set(ld, key, BTreeSet::new())));
                }
            }
        }
        move_firings(env, s, &mut out);
        out
    }
}

transition_system_via_rules!(LedgerSemantics);
