//! Formula evaluation and rendering against a built model of any level.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use refrisk_core::casestudy::{render_trace, Trace};
use refrisk_core::infra::{Datum, Identity, Location};
use refrisk_core::kripke::{eval_ctl, witness_path, CtlFormula};
use refrisk_core::semantics::{Infrastructure, RuleSystem, StoreView};
use refrisk_core::{KripkeStructure, StateSet, TransitionSystem};

use crate::expr::{parse_formula, Formula, Pred, Temporal};
use crate::schema::ModelFile;
use crate::CliError;

/// A model file together with its Kripke structure.
pub struct Analysis<'f, T: TransitionSystem> {
    pub file: &'f ModelFile,
    pub kripke: KripkeStructure<T>,
    named: RefCell<BTreeMap<String, StateSet<T::State>>>,
}

impl<T: TransitionSystem> std::fmt::Debug for Analysis<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analysis").field("states", &self.kripke.len()).finish()
    }
}

impl<'f, T, D> Analysis<'f, T>
where
    T: TransitionSystem<State = Infrastructure<D>> + RuleSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    pub fn new(file: &'f ModelFile, kripke: KripkeStructure<T>) -> Self {
        Self { file, kripke, named: RefCell::new(BTreeMap::new()) }
    }

    /// The states satisfying `f`.
    pub fn eval(&self, f: &Formula) -> Result<StateSet<Infrastructure<D>>, CliError> {
        let ctl = self.compile(f, &mut Vec::new())?;
        Ok(eval_ctl(&self.kripke, &ctl)?)
    }

    pub fn eval_str(&self, src: &str) -> Result<StateSet<Infrastructure<D>>, CliError> {
        let f = parse_formula(src).map_err(|e| CliError::Usage(format!("in {src:?}: {e}")))?;
        self.eval(&f)
    }

    fn named(&self, name: &str, stack: &mut Vec<String>) -> Result<StateSet<Infrastructure<D>>, CliError> {
        if let Some(s) = self.named.borrow().get(name) {
            return Ok(s.clone());
        }
        let decl = self.file.sets.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.file.sets.keys().map(String::as_str).collect();
            CliError::Usage(format!("unknown set {name:?}; the model declares {}", list(&known)))
        })?;
        if stack.iter().any(|n| n == name) {
            stack.push(name.into());
            return Err(CliError::Schema {
                line: decl.line,
                path: format!("sets.{name}"),
                message: format!("sets refer to each other in a cycle: {}", stack.join(" -> ")),
            });
        }
        stack.push(name.into());
        let f = parse_formula(&decl.expr).map_err(|message| CliError::Schema {
            line: decl.line,
            path: format!("sets.{name}"),
            message,
        })?;
        let ctl = self.compile(&f, stack)?;
        stack.pop();
        let set = eval_ctl(&self.kripke, &ctl)?;
        self.named.borrow_mut().insert(name.into(), set.clone());
        Ok(set)
    }

    fn compile(&self, f: &Formula, stack: &mut Vec<String>) -> Result<CtlFormula<Infrastructure<D>>, CliError> {
        let k = &self.kripke;
        Ok(match f {
            Formula::True => CtlFormula::atom(k.state_set()),
            Formula::False => CtlFormula::atom(BTreeSet::new()),
            Formula::Init => CtlFormula::atom(k.init_set()),
            Formula::Name(n) => CtlFormula::atom(self.named(n, stack)?),
            Formula::States(ids) => {
                let mut set = BTreeSet::new();
                for &i in ids {
                    if i >= k.len() {
                        return Err(CliError::Usage(format!("state index {i} out of range; the model has {} states", k.len())));
                    }
                    set.insert(k.state(i).clone());
                }
                CtlFormula::atom(set)
            }
            Formula::Pred(p) => CtlFormula::atom(self.predicate(p)?),
            Formula::Temporal(op, g) => {
                let g = self.compile(g, stack)?;
                match op {
                    Temporal::EX => CtlFormula::ex(g),
                    Temporal::AX => CtlFormula::ax(g),
                    Temporal::EF => CtlFormula::ef(g),
                    Temporal::AG => CtlFormula::ag(g),
                }
            }
            Formula::Not(g) => CtlFormula::not(self.compile(g, stack)?),
            Formula::And(a, b) => CtlFormula::and(self.compile(a, stack)?, self.compile(b, stack)?),
            Formula::Or(a, b) => CtlFormula::or(self.compile(a, stack)?, self.compile(b, stack)?),
        })
    }

    fn location(&self, l: &str) -> Result<Location, CliError> {
        let l = Location::new(l);
        if !self.file.spec.locations.contains(&l) {
            return Err(CliError::Usage(format!("unknown location {l:?}")));
        }
        Ok(l)
    }

    fn identity(&self, h: &str) -> Result<Identity, CliError> {
        let h = Identity::new(h);
        if !self.file.spec.identities.contains(&h) {
            return Err(CliError::Usage(format!("unknown identity {h:?}")));
        }
        Ok(h)
    }

    fn predicate(&self, p: &Pred) -> Result<StateSet<Infrastructure<D>>, CliError> {
        let k = &self.kripke;
        Ok(match p {
            Pred::At { subject, location } => {
                let l = self.location(location)?;
                let h = Identity::new(subject);
                let d = Datum::new(subject);
                if self.file.spec.identities.contains(&h) {
                    k.filter(|s| s.graph.location_of(&h) == Some(&l))
                } else if self.file.spec.data.contains(&d) {
                    k.filter(|s| s.items_at(&l).iter().any(|(_, x)| *x == d))
                } else {
                    return Err(CliError::Usage(format!("{subject:?} is neither an identity nor a datum")));
                }
            }
            Pred::Enabled { actor, action, location } => {
                let h = self.identity(actor)?;
                let l = self.location(location)?;
                k.filter(|s| s.enables(&l, &h, *action))
            }
            Pred::Owns { actor, datum } => {
                let h = self.identity(actor)?;
                let d = Datum::new(datum);
                if !self.file.spec.data.contains(&d) {
                    return Err(CliError::Usage(format!("unknown datum {datum:?}")));
                }
                k.filter(|s| {
                    let a = s.actor(&h);
                    s.data_locations()
                        .iter()
                        .any(|l| s.items_at(l).iter().any(|(o, x)| *x == d && o.as_ref() == Some(&a)))
                })
            }
        })
    }

    /// A declared set name, `init`, `true`, `false` or the state indices.
    pub fn show_set(&self, set: &StateSet<Infrastructure<D>>) -> String {
        for name in self.file.sets.keys() {
            if self.named(name, &mut Vec::new()).is_ok_and(|s| s == *set) {
                return name.clone();
            }
        }
        if *set == self.kripke.init_set() {
            return "init".into();
        }
        if set.is_empty() {
            return "false".into();
        }
        if set.len() == self.kripke.len() {
            return "true".into();
        }
        let ids: Vec<String> =
            set.iter().filter_map(|s| self.kripke.index_of(s)).map(|i| i.to_string()).collect();
        format!("states[{}]", ids.join(", "))
    }

    /// A shortest path from the initial states into `goal`, replay-checked.
    pub fn witness(&self, goal: &StateSet<Infrastructure<D>>) -> Result<Option<Trace>, CliError> {
        match witness_path(&self.kripke, goal) {
            Some(path) => Ok(Some(render_trace(self.kripke.system(), &path)?)),
            None => Ok(None),
        }
    }
}

fn list(xs: &[&str]) -> String {
    if xs.is_empty() {
        "no sets".into()
    } else {
        xs.join(", ")
    }
}
