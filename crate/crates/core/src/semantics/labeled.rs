//! Levels 2 and 3: DLM-labeled data.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{
    actor_label, move_firings, transition_system_via_rules, Environment, Firing, Infrastructure, Rule, RuleSystem,
};
use crate::infra::{has_access, Action, ActorValue, Datum, Dlm, Identity, LabeledData, Location};

/// Labeled data per location; no empty entries.
pub type LabeledStore = BTreeMap<Location, BTreeSet<LabeledData<ActorValue>>>;

type State = Infrastructure<LabeledStore>;
type Item = LabeledData<ActorValue>;

fn insert(store: &LabeledStore, l: &Location, item: Item) -> LabeledStore {
    let mut next = store.clone();
    next.entry(l.clone()).or_default().insert(item);
    next
}

/// Removes, at `l`, every item matching `pred`.
fn remove_where(store: &LabeledStore, l: &Location, pred: impl Fn(&Item) -> bool) -> LabeledStore {
    let mut next = store.clone();
    if let Some(items) = next.get_mut(l) {
        items.retain(|x| !pred(x));
        if items.is_empty() {
            next.remove(l);
        }
    }
    next
}

/// Level-2 and level-3 rules.
///
/// - `get_data`: an actor at `l`, get-enabled at `l'`, copies an item of `l'`
///   it owns or reads to `l`.
/// - `put`: an actor put-enabled at its location adds a datum it knows,
///   labeled with itself as owner and a reader set from the family.
/// - `eval` (level 2): an actor eval-enabled at its location rewrites any
///   item there; the new label is the old one or the actor's own with the old
///   readers. All copies of the old datum at that location are replaced.
/// - `process` (level 3, replaces `eval`): as `eval`, but only for items the
///   actor owns or reads, and the label is kept.
/// - `del_data`: a placed owner removes its item at one location, together
///   with every other copy of the datum there. With `buggy_delete` only the
///   owner's labeled item is removed.
/// - `erase`: a placed owner removes its datum from every location.
/// - `move`: as at level 1.
#[derive(Debug, Clone)]
pub struct LabeledSemantics {
    pub env: Arc<Environment>,
    /// Level 3 when set: `process` instead of `eval`.
    pub privacy: bool,
}

impl LabeledSemantics {
    pub fn level2(env: Environment) -> Self {
        Self { env: Arc::new(env), privacy: false }
    }

    pub fn level3(env: Environment) -> Self {
        Self { env: Arc::new(env), privacy: true }
    }

    pub fn level(&self) -> u8 {
        if self.privacy {
            3
        } else {
            2
        }
    }
}

impl RuleSystem for LabeledSemantics {
    type State = State;

    fn firings(&self, s: &State) -> Vec<Firing<State>> {
        let env = &*self.env;
        let store = &s.graph.lgra;
        let mut out = Vec::new();
        let fire = |rule, actor: &Identity, location: &Location, datum: &Datum, lgra| Firing {
            rule,
            actor: actor.clone(),
            location: location.clone(),
            datum: Some(datum.clone()),
            target: s.with_lgra(lgra),
        };
        for (l, h) in s.graph.placements() {
            let a = s.actor(h);
            for src in &env.locations {
                if s.enables(src, h, Action::Get) {
                    for item in store.get(src).into_iter().flatten() {
                        if has_access(&a, item) {
                            out.push(fire(Rule::Get, h, l, &item.1, insert(store, l, item.clone())));
                        }
                    }
                }
            }
            if s.enables(l, h, Action::Put) {
                for n in env.knows(&s.actors, h) {
                    for hs in &env.reader_family {
                        let item = (actor_label(&s.actors, h, hs), n.clone());
                        out.push(fire(Rule::Put, h, l, &n, insert(store, l, item)));
                    }
                }
            }
            if s.enables(l, h, Action::Eval) {
                for (lab, n) in store.get(l).into_iter().flatten() {
                    let labels: BTreeSet<Dlm<ActorValue>> = if self.privacy {
                        if !has_access(&a, &(lab.clone(), n.clone())) {
                            continue;
                        }
                        BTreeSet::from([lab.clone()])
                    } else {
                        BTreeSet::from([lab.clone(), Dlm { owner: a.clone(), readers: lab.readers.clone() }])
                    };
                    let cleared = remove_where(store, l, |x| x.1 == *n);
                    let rule = if self.privacy { Rule::Process } else { Rule::Eval };
                    for g in env.transforms(n) {
                        for lab2 in &labels {
                            out.push(fire(rule, h, l, n, insert(&cleared, l, (lab2.clone(), g.clone()))));
                        }
                    }
                }
            }
        }
        for (_, h) in s.graph.placements() {
            let a = s.actor(h);
            for (l, items) in store {
                for item in items.iter().filter(|x| x.0.owner == a) {
                    let next = if env.options.buggy_delete {
                        remove_where(store, l, |x| x == item)
                    } else {
                        remove_where(store, l, |x| x.1 == item.1)
                    };
                    out.push(fire(Rule::Delete, h, l, &item.1, next));
                }
            }
            let owned: BTreeSet<(&Datum, &Location)> = store
                .iter()
                .flat_map(|(l, items)| items.iter().filter(|x| x.0.owner == a).map(move |x| (&x.1, l)))
                .collect();
            let mut seen = BTreeSet::new();
            for (n, l) in owned {
                if !seen.insert(n) {
                    continue;
                }
                let mut next = store.clone();
                next.retain(|_, items| {
                    items.retain(|x| x.1 != *n);
                    !items.is_empty()
                });
                out.push(fire(Rule::Erase, h, l, n, next));
            }
        }
        move_firings(env, s, &mut out);
        out
    }
}

transition_system_via_rules!(LabeledSemantics);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infra::{ActorTable, LabelFun, PolicyPredicate};
    use crate::kripke::TransitionSystem;
    use crate::semantics::{Igraph, Options, Shared};

    fn label(owner: &str, readers: &[&str]) -> Dlm<ActorValue> {
        let t = ActorTable::new(["P", "D", "E"].map(Identity::new));
        Dlm { owner: t.actor(&owner.into()), readers: readers.iter().map(|r| t.actor(&(*r).into())).collect() }
    }

    fn state(placement: &[(&str, &str)], data: &[(&str, Dlm<ActorValue>, &str)]) -> State {
        let all = BTreeSet::from(Action::ALL);
        let mut delta = crate::infra::Policies::new();
        for l in ["a", "b"] {
            delta.insert(l.into(), [(PolicyPredicate::True, all.clone())].into());
        }
        let mut agra: BTreeMap<Location, BTreeSet<Identity>> = BTreeMap::new();
        for (h, l) in placement {
            agra.entry((*l).into()).or_default().insert((*h).into());
        }
        let mut lgra = LabeledStore::new();
        for (l, lab, d) in data {
            lgra.entry((*l).into()).or_default().insert((lab.clone(), (*d).into()));
        }
        Infrastructure {
            graph: Igraph {
                agra,
                lgra,
                gra: Shared::new([("a".into(), "b".into())].into()),
                cgra: Shared::new(BTreeMap::new()),
            },
            delta: Shared::new(delta),
            actors: Shared::new(ActorTable::new(["P", "D", "E"].map(Identity::new))),
        }
    }

    fn env(buggy: bool) -> Environment {
        Environment {
            locations: ["a", "b"].map(Location::new).into(),
            data: ["n"].map(Datum::new).into(),
            label_funs: alloc::vec![LabelFun::identity()],
            options: Options { buggy_delete: buggy, consensus_put: false },
            ..Environment::default()
        }
    }

    #[test]
    fn reader_gets_item() {
        let s = state(&[("D", "a")], &[("b", label("P", &["D"]), "n")]);
        let t = state(&[("D", "a")], &[("a", label("P", &["D"]), "n"), ("b", label("P", &["D"]), "n")]);
        assert!(LabeledSemantics::level2(env(false)).successors(&s).contains(&t));
    }

    #[test]
    fn stranger_cannot_get() {
        let s = state(&[("E", "a")], &[("b", label("P", &["D"]), "n")]);
        let sem = LabeledSemantics::level2(env(false));
        assert!(sem.firings(&s).iter().all(|f| f.rule != Rule::Get));
    }

    #[test]
    fn fixed_delete_removes_all_copies() {
        let s = state(&[("P", "b")], &[("a", label("P", &[]), "n"), ("a", label("E", &[]), "n")]);
        let sem = LabeledSemantics::level2(env(false));
        let deletes: Vec<_> = sem.firings(&s).into_iter().filter(|f| f.rule == Rule::Delete).collect();
        assert_eq!(deletes.len(), 1);
        assert!(deletes[0].target.graph.lgra.is_empty());
        let buggy = LabeledSemantics::level2(env(true));
        let deletes: Vec<_> = buggy.firings(&s).into_iter().filter(|f| f.rule == Rule::Delete).collect();
        assert_eq!(deletes[0].target, state(&[("P", "b")], &[("a", label("E", &[]), "n")]));
    }

    #[test]
    fn eval_can_relabel_but_process_cannot() {
        let s = state(&[("E", "a")], &[("a", label("P", &["D"]), "n")]);
        let stolen = state(&[("E", "a")], &[("a", label("E", &["D"]), "n")]);
        assert!(LabeledSemantics::level2(env(false)).successors(&s).contains(&stolen));
        let l3 = LabeledSemantics::level3(env(false));
        assert!(!l3.successors(&s).contains(&stolen));
        assert!(l3.firings(&s).iter().all(|f| f.rule != Rule::Process));
        let reader = state(&[("D", "a")], &[("a", label("P", &["D"]), "n")]);
        assert!(l3.firings(&reader).iter().any(|f| f.rule == Rule::Process && f.target == reader));
    }

    #[test]
    fn no_label_funs_no_processing() {
        let s = state(&[("D", "a")], &[("a", label("P", &["D"]), "n")]);
        let sem = LabeledSemantics::level3(Environment { label_funs: Vec::new(), ..env(false) });
        assert!(sem.firings(&s).iter().all(|f| f.rule != Rule::Process));
    }
}
