//! Level-agnostic model descriptions and the Kripke structures built from
//! them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::infra::{ActorTable, Credentials, Datum, Dlm, Identity, LabelFun, Location, Policies};
use crate::kripke::{Bounds, KripkeStructure};
use crate::refmaps::{LabeledState, LedgerState, PlainState};
use crate::semantics::{
    actor_label, check_ledger, Environment, Igraph, Infrastructure, LabeledSemantics, LabeledStore, Ledger,
    LedgerSemantics, Options, PlainSemantics, PlainStore, Shared,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    One,
    Two,
    Three,
    Four,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::One, Level::Two, Level::Three, Level::Four];

    pub fn number(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
            Self::Four => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.number() == n)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// A datum initially stored at a location. Levels 2 to 4 need the label;
/// level 1 ignores it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InitialItem {
    pub location: Location,
    pub label: Option<Dlm<Identity>>,
    pub datum: Datum,
}

/// Everything needed to build the initial state and the transition system of
/// one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub level: Level,
    pub locations: BTreeSet<Location>,
    pub edges: BTreeSet<(Location, Location)>,
    pub identities: BTreeSet<Identity>,
    pub aliases: BTreeMap<Identity, Identity>,
    pub placements: BTreeMap<Identity, Location>,
    pub credentials: BTreeMap<Identity, Credentials>,
    pub policies: Policies,
    pub data: BTreeSet<Datum>,
    pub reader_family: BTreeSet<BTreeSet<Identity>>,
    pub knowledge: BTreeMap<Identity, BTreeSet<Datum>>,
    pub label_funs: Vec<LabelFun>,
    pub options: Options,
    pub controller: Option<Identity>,
    pub initial: Vec<InitialItem>,
}

fn schema(msg: String) -> Error {
    Error::Schema(msg)
}

impl ModelSpec {
    /// Cross-reference checks: every name used is declared.
    pub fn validate(&self) -> Result<()> {
        let loc = |l: &Location, what: &str| {
            if self.locations.contains(l) {
                Ok(())
            } else {
                Err(schema(format!("{what} refers to undeclared location {l:?}")))
            }
        };
        let id = |i: &Identity, what: &str| {
            if self.identities.contains(i) {
                Ok(())
            } else {
                Err(schema(format!("{what} refers to undeclared identity {i:?}")))
            }
        };
        let datum = |d: &Datum, what: &str| {
            if self.data.contains(d) {
                Ok(())
            } else {
                Err(schema(format!("{what} refers to datum {d:?} outside the data universe")))
            }
        };
        for (a, b) in &self.edges {
            loc(a, "edge")?;
            loc(b, "edge")?;
        }
        for (i, l) in &self.placements {
            id(i, "placement")?;
            loc(l, "placement")?;
        }
        for i in self.credentials.keys() {
            id(i, "credentials")?;
        }
        for i in self.knowledge.keys() {
            id(i, "knowledge")?;
        }
        for ds in self.knowledge.values() {
            for d in ds {
                datum(d, "knowledge")?;
            }
        }
        for hs in &self.reader_family {
            for h in hs {
                id(h, "reader family")?;
            }
        }
        if let Some(c) = &self.controller {
            id(c, "controller")?;
        }
        let creds: BTreeSet<String> = self.credentials.values().flat_map(|c| c.creds.iter().cloned()).collect();
        for (l, policy) in &self.policies {
            loc(l, "policy")?;
            for (p, acts) in policy {
                if acts.is_empty() {
                    return Err(schema(format!("policy at {l:?} has an empty action set")));
                }
                p.validate(&self.locations, &self.identities, &creds)?;
            }
        }
        for item in &self.initial {
            loc(&item.location, "initial data")?;
            datum(&item.datum, "initial data")?;
            match &item.label {
                Some(lab) => {
                    id(&lab.owner, "label")?;
                    for r in &lab.readers {
                        id(r, "label")?;
                    }
                }
                None if self.level != Level::One => {
                    return Err(schema(format!(
                        "initial datum {:?} at {:?} needs a label at level {}",
                        item.datum, item.location, self.level
                    )))
                }
                None => {}
            }
        }
        self.actor_table()?;
        if self.level == Level::Four {
            check_ledger(&self.ledger())?;
        }
        Ok(())
    }

    pub fn actor_table(&self) -> Result<ActorTable> {
        let mut t = ActorTable::new(self.identities.iter().cloned());
        for (a, b) in &self.aliases {
            t.alias(a.clone(), b.clone())?;
        }
        Ok(t)
    }

    pub fn environment(&self) -> Environment {
        Environment {
            locations: self.locations.clone(),
            data: self.data.clone(),
            reader_family: self.reader_family.clone(),
            knowledge: self.knowledge.clone(),
            label_funs: self.label_funs.clone(),
            options: self.options,
            controller: self.controller.clone(),
        }
    }

    fn infrastructure<D>(&self, lgra: D) -> Result<Infrastructure<D>> {
        let mut agra: BTreeMap<Location, BTreeSet<Identity>> = BTreeMap::new();
        for (h, l) in &self.placements {
            agra.entry(l.clone()).or_default().insert(h.clone());
        }
        Ok(Infrastructure {
            graph: Igraph {
                agra,
                lgra,
                gra: Shared::new(self.edges.clone()),
                cgra: Shared::new(self.credentials.clone()),
            },
            delta: Shared::new(self.policies.clone()),
            actors: Shared::new(self.actor_table()?),
        })
    }

    pub fn plain_state(&self) -> Result<PlainState> {
        let mut store = PlainStore::new();
        for item in &self.initial {
            store.entry(item.location.clone()).or_default().insert(item.datum.clone());
        }
        self.infrastructure(store)
    }

    pub fn labeled_state(&self) -> Result<LabeledState> {
        let actors = self.actor_table()?;
        let mut store = LabeledStore::new();
        for item in &self.initial {
            let lab = item.label.as_ref().ok_or_else(|| schema(format!("datum {:?} has no label", item.datum)))?;
            let lab = actor_label(&actors, &lab.owner, &lab.readers);
            store.entry(item.location.clone()).or_default().insert((lab, item.datum.clone()));
        }
        self.infrastructure(store)
    }

    fn ledger(&self) -> Ledger {
        let mut ld = Ledger::new();
        for item in &self.initial {
            if let Some(lab) = &item.label {
                ld.entry((lab.clone(), item.datum.clone())).or_default().insert(item.location.clone());
            }
        }
        ld
    }

    pub fn ledger_state(&self) -> Result<LedgerState> {
        let ld = self.ledger();
        check_ledger(&ld)?;
        self.infrastructure(ld)
    }

    /// The same model at another level.
    pub fn at_level(&self, level: Level) -> Self {
        Self { level, ..self.clone() }
    }

    /// The level-1 Kripke structure, whatever the declared level.
    pub fn build_plain(&self, bounds: Bounds) -> Result<KripkeStructure<PlainSemantics>> {
        self.validate()?;
        KripkeStructure::build(PlainSemantics::new(self.environment()), BTreeSet::from([self.plain_state()?]), bounds)
    }

    /// The level-2 structure, or level 3 when `privacy` is set.
    pub fn build_labeled(&self, privacy: bool, bounds: Bounds) -> Result<KripkeStructure<LabeledSemantics>> {
        self.validate()?;
        let env = self.environment();
        let sem = if privacy { LabeledSemantics::level3(env) } else { LabeledSemantics::level2(env) };
        KripkeStructure::build(sem, BTreeSet::from([self.labeled_state()?]), bounds)
    }

    pub fn build_ledger(&self, bounds: Bounds) -> Result<KripkeStructure<LedgerSemantics>> {
        self.validate()?;
        KripkeStructure::build(LedgerSemantics::new(self.environment()), BTreeSet::from([self.ledger_state()?]), bounds)
    }

    /// Builds the Kripke structure of the model's level.
    pub fn build(&self, bounds: Bounds) -> Result<Model> {
        Ok(match self.level {
            Level::One => Model::One(self.build_plain(bounds)?),
            Level::Two => Model::Two(self.build_labeled(false, bounds)?),
            Level::Three => Model::Three(self.build_labeled(true, bounds)?),
            Level::Four => Model::Four(self.build_ledger(bounds)?),
        })
    }
}

/// A built model at one of the four levels.
#[derive(Debug)]
pub enum Model {
    One(KripkeStructure<PlainSemantics>),
    Two(KripkeStructure<LabeledSemantics>),
    Three(KripkeStructure<LabeledSemantics>),
    Four(KripkeStructure<LedgerSemantics>),
}

impl Model {
    pub fn level(&self) -> Level {
        match self {
            Self::One(_) => Level::One,
            Self::Two(_) => Level::Two,
            Self::Three(_) => Level::Three,
            Self::Four(_) => Level::Four,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::One(k) => k.len(),
            Self::Two(k) | Self::Three(k) => k.len(),
            Self::Four(k) => k.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transition_count(&self) -> usize {
        match self {
            Self::One(k) => k.transition_count(),
            Self::Two(k) | Self::Three(k) => k.transition_count(),
            Self::Four(k) => k.transition_count(),
        }
    }

    pub fn is_truncated(&self) -> bool {
        match self {
            Self::One(k) => k.is_truncated(),
            Self::Two(k) | Self::Three(k) => k.is_truncated(),
            Self::Four(k) => k.is_truncated(),
        }
    }
}
