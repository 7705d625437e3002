//! Infrastructure vocabulary: names, actions, credentials, the policy
//! predicate language, actor aliasing and DLM labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(name: &str) -> Self {
                Self(Arc::from(name))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(name: &str) -> Self {
                Self::new(name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", &*self.0)
            }
        }
    };
}

name_type!(
    /// A node of the infrastructure graph.
    Location
);
name_type!(
    /// An actor identity.
    Identity
);
name_type!(
    /// A data value.
    Datum
);
name_type!(
    /// The value of `Actor` on an identity. Aliased identities share one value,
    /// named after the identity at the end of the alias chain.
    ActorValue
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Get,
    Move,
    Eval,
    Put,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Get, Action::Move, Action::Eval, Action::Put];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Get => "get",
            Self::Move => "move",
            Self::Eval => "eval",
            Self::Put => "put",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Credentials and roles held by one identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Credentials {
    pub creds: BTreeSet<String>,
    pub roles: BTreeSet<String>,
}

impl Credentials {
    pub fn with_creds<'a>(creds: impl IntoIterator<Item = &'a str>) -> Self {
        Self { creds: creds.into_iter().map(String::from).collect(), roles: BTreeSet::new() }
    }
}

/// The `Actor` function: identities mapped to actor values through an
/// aliasing table. With an empty table it is injective.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorTable {
    identities: BTreeSet<Identity>,
    aliases: BTreeMap<Identity, Identity>,
}

impl ActorTable {
    pub fn new(identities: impl IntoIterator<Item = Identity>) -> Self {
        Self { identities: identities.into_iter().collect(), aliases: BTreeMap::new() }
    }

    /// Declares `from ↦ to`: both identities denote the same actor.
    pub fn alias(&mut self, from: Identity, to: Identity) -> Result<()> {
        for id in [&from, &to] {
            if !self.identities.contains(id) {
                return Err(Error::Schema(format!("alias refers to undeclared identity {id:?}")));
            }
        }
        let previous = self.aliases.insert(from.clone(), to);
        if self.identities.iter().any(|i| self.root(i).is_none()) {
            match previous {
                Some(p) => self.aliases.insert(from.clone(), p),
                None => self.aliases.remove(&from),
            };
            return Err(Error::Schema(format!("aliasing cycle through {from:?}")));
        }
        Ok(())
    }

    pub fn with_alias(mut self, from: &str, to: &str) -> Result<Self> {
        self.alias(from.into(), to.into())?;
        Ok(self)
    }

    fn root<'a>(&'a self, id: &'a Identity) -> Option<&'a Identity> {
        let mut cur = id;
        for _ in 0..=self.aliases.len() {
            match self.aliases.get(cur) {
                Some(next) => cur = next,
                None => return Some(cur),
            }
        }
        None
    }

    pub fn actor(&self, id: &Identity) -> ActorValue {
        let root = self.root(id).unwrap_or(id);
        ActorValue(root.0.clone())
    }

    pub fn identities(&self) -> &BTreeSet<Identity> {
        &self.identities
    }

    pub fn aliases(&self) -> &BTreeMap<Identity, Identity> {
        &self.aliases
    }

    pub fn is_declared(&self, id: &Identity) -> bool {
        self.identities.contains(id)
    }

    /// Declared identities denoting the same actor as `id`.
    pub fn aliased_with(&self, id: &Identity) -> impl Iterator<Item = &Identity> {
        let target = self.actor(id);
        self.identities.iter().filter(move |j| self.actor(j) == target)
    }
}

/// Conditions of local policies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyPredicate {
    True,
    HasCredential(String),
    ResidesAt(Location),
    IdentityIs(Identity),
    And(Vec<PolicyPredicate>),
    Or(Vec<PolicyPredicate>),
    Not(alloc::boxed::Box<PolicyPredicate>),
}

impl PolicyPredicate {
    /// Rejects references to undeclared locations, identities or credentials.
    pub fn validate(
        &self,
        locations: &BTreeSet<Location>,
        identities: &BTreeSet<Identity>,
        credentials: &BTreeSet<String>,
    ) -> Result<()> {
        match self {
            Self::True => Ok(()),
            Self::HasCredential(c) if credentials.contains(c) => Ok(()),
            Self::HasCredential(c) => Err(Error::Schema(format!("unknown credential {c:?}"))),
            Self::ResidesAt(l) if locations.contains(l) => Ok(()),
            Self::ResidesAt(l) => Err(Error::Schema(format!("unknown location {l:?}"))),
            Self::IdentityIs(i) if identities.contains(i) => Ok(()),
            Self::IdentityIs(i) => Err(Error::Schema(format!("unknown identity {i:?}"))),
            Self::And(ps) | Self::Or(ps) => {
                ps.iter().try_for_each(|p| p.validate(locations, identities, credentials))
            }
            Self::Not(p) => p.validate(locations, identities, credentials),
        }
    }
}

/// A local policy: pairs of a condition and the actions it enables.
pub type LocalPolicy = BTreeSet<(PolicyPredicate, BTreeSet<Action>)>;

/// Local policies per location; a missing location has the empty policy.
pub type Policies = BTreeMap<Location, LocalPolicy>;

/// The parts of a graph that policy predicates may inspect.
pub trait PolicyContext {
    fn resides_at(&self, id: &Identity, l: &Location) -> bool;
    fn credentials(&self, id: &Identity) -> Option<&Credentials>;
    fn actors(&self) -> &ActorTable;
}

pub fn eval_policy_pred(p: &PolicyPredicate, graph: &impl PolicyContext, a: &Identity) -> bool {
    match p {
        PolicyPredicate::True => true,
        PolicyPredicate::HasCredential(c) => graph.credentials(a).is_some_and(|cr| cr.creds.contains(c)),
        PolicyPredicate::ResidesAt(l) => graph.resides_at(a, l),
        PolicyPredicate::IdentityIs(n) => graph.actors().actor(a) == graph.actors().actor(n),
        PolicyPredicate::And(ps) => ps.iter().all(|q| eval_policy_pred(q, graph, a)),
        PolicyPredicate::Or(ps) => ps.iter().any(|q| eval_policy_pred(q, graph, a)),
        PolicyPredicate::Not(q) => !eval_policy_pred(q, graph, a),
    }
}

/// `∃ (p, e) ∈ policy. act ∈ e ∧ p a`.
pub fn policy_enables(policy: Option<&LocalPolicy>, graph: &impl PolicyContext, a: &Identity, act: Action) -> bool {
    policy.is_some_and(|ps| {
        ps.iter().any(|(p, acts)| acts.contains(&act) && eval_policy_pred(p, graph, a))
    })
}

/// `{f x | x ∈ s}`.
pub fn fmap_set<T, U: Ord>(f: impl Fn(&T) -> U, s: &BTreeSet<T>) -> BTreeSet<U> {
    s.iter().map(f).collect()
}

/// A DLM label: owner and readers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dlm<P: Ord> {
    pub owner: P,
    pub readers: BTreeSet<P>,
}

impl<P: Ord> Dlm<P> {
    pub fn new(owner: P, readers: impl IntoIterator<Item = P>) -> Self {
        Self { owner, readers: readers.into_iter().collect() }
    }
}

impl<P: Ord + fmt::Display> fmt::Display for Dlm<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {{", self.owner)?;
        for (i, r) in self.readers.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("})")
    }
}

/// A labeled data item.
pub type LabeledData<P> = (Dlm<P>, Datum);

/// `owns` or `a ∈ readers`.
pub fn has_access<P: Ord>(a: &P, d: &LabeledData<P>) -> bool {
    d.0.owner == *a || d.0.readers.contains(a)
}

/// Data transformers available to `eval` and `process`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Transformer {
    Identity,
    /// Replaces any datum by a fixed one.
    Constant(Datum),
    /// Appends a suffix.
    Suffix(String),
}

impl Transformer {
    pub fn apply(&self, d: &Datum) -> Datum {
        match self {
            Self::Identity => d.clone(),
            Self::Constant(c) => c.clone(),
            Self::Suffix(s) => Datum::new(&format!("{d}{s}")),
        }
    }
}

/// A named label-preserving function. Its transformer only ever sees the
/// datum, so the label cannot change.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelFun {
    pub name: String,
    pub transformer: Transformer,
}

impl LabelFun {
    pub fn new(name: &str, transformer: Transformer) -> Self {
        Self { name: name.into(), transformer }
    }

    pub fn identity() -> Self {
        Self::new("id", Transformer::Identity)
    }
}

/// `f ↕ x`: the datum is transformed, the label returned untouched.
pub fn apply_label_fun<P: Ord + Clone>(f: &LabelFun, x: &LabeledData<P>) -> LabeledData<P> {
    (x.0.clone(), f.transformer.apply(&x.1))
}
