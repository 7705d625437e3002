//! Model files: TOML, schema version 1.
//!
//! ```toml
//! schema = 1
//! level = 2
//!
//! [graph]
//! locations = ["home", "cloud"]
//! edges = [["home", "cloud"]]
//!
//! [actors]
//! identities = ["Patient", "Eve"]
//! placements = { Patient = "home", Eve = "home" }
//!
//! [[policy]]
//! location = "cloud"
//! when = "true"
//! actions = ["get", "move"]
//!
//! [data]
//! universe = ["42"]
//! reader_sets = [[]]
//!
//! [[store]]
//! location = "cloud"
//! datum = "42"
//! owner = "Patient"
//!
//! [sets]
//! HC = "{Eve at cloud}"
//! ```
//!
//! Level 4 files list their initial data as `[[ledger]]` entries with a
//! `locations` array instead of `[[store]]` items.

use std::collections::{BTreeMap, BTreeSet};

use refrisk_core::infra::{
    Action, Credentials, Datum, Dlm, Identity, LabelFun, Location, Policies, PolicyPredicate, Transformer,
};
use refrisk_core::kripke::Bounds;
use refrisk_core::model::{InitialItem, Level, ModelSpec};
use refrisk_core::semantics::Options;
use indexmap::IndexMap;
use serde::Deserialize;
use toml::Spanned;

use crate::expr;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema: Spanned<u32>,
    level: Spanned<u8>,
    graph: RawGraph,
    actors: RawActors,
    #[serde(default)]
    credentials: BTreeMap<Spanned<String>, RawCredentials>,
    #[serde(default)]
    policy: Vec<RawPolicy>,
    #[serde(default)]
    data: RawData,
    store: Option<Spanned<Vec<RawStoreItem>>>,
    ledger: Option<Spanned<Vec<RawLedgerEntry>>>,
    #[serde(default)]
    options: RawOptions,
    #[serde(default)]
    bounds: RawBounds,
    #[serde(default)]
    sets: IndexMap<String, Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    locations: Vec<Spanned<String>>,
    #[serde(default)]
    edges: Vec<Spanned<(String, String)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActors {
    identities: Vec<Spanned<String>>,
    #[serde(default)]
    placements: BTreeMap<Spanned<String>, Spanned<String>>,
    #[serde(default)]
    aliases: BTreeMap<Spanned<String>, Spanned<String>>,
    controller: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCredentials {
    #[serde(default)]
    creds: Vec<String>,
    #[serde(default)]
    roles: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    location: Spanned<String>,
    #[serde(default = "always")]
    when: Spanned<String>,
    actions: Spanned<Vec<String>>,
}

fn always() -> Spanned<String> {
    Spanned::new(0..0, "true".into())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    #[serde(default)]
    universe: Vec<String>,
    #[serde(default)]
    reader_sets: Vec<Spanned<Vec<String>>>,
    #[serde(default)]
    knowledge: BTreeMap<Spanned<String>, Spanned<Vec<String>>>,
    label_funs: Option<Vec<RawLabelFun>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabelFun {
    name: String,
    transformer: Spanned<String>,
    value: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStoreItem {
    location: Spanned<String>,
    datum: Spanned<String>,
    owner: Option<Spanned<String>>,
    #[serde(default)]
    readers: Vec<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLedgerEntry {
    owner: Spanned<String>,
    #[serde(default)]
    readers: Vec<Spanned<String>>,
    datum: Spanned<String>,
    locations: Vec<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default)]
    buggy_delete: bool,
    #[serde(default)]
    consensus_put: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    state_cap: Option<usize>,
    depth: Option<usize>,
}

/// A named state set and the line it was declared on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDecl {
    pub expr: String,
    pub line: usize,
}

/// A parsed and cross-checked model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub spec: ModelSpec,
    pub bounds: Bounds,
    /// In declaration order.
    pub sets: IndexMap<String, SetDecl>,
}

/// 1-based line of a byte offset.
pub fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
    locations: BTreeSet<Location>,
    identities: BTreeSet<Identity>,
    data: BTreeSet<Datum>,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, path: &str, msg: impl Into<String>) -> Result<T, CliError> {
        Err(CliError::Schema { line: line_of(self.text, span.start), path: path.into(), message: msg.into() })
    }

    fn location(&self, s: &Spanned<String>, path: &str) -> Result<Location, CliError> {
        let l = Location::new(s.get_ref());
        if !self.locations.contains(&l) {
            return self.err(s.span(), path, format!("undeclared location {:?}", s.get_ref()));
        }
        Ok(l)
    }

    fn identity(&self, s: &Spanned<String>, path: &str) -> Result<Identity, CliError> {
        let i = Identity::new(s.get_ref());
        if !self.identities.contains(&i) {
            return self.err(s.span(), path, format!("undeclared identity {:?}", s.get_ref()));
        }
        Ok(i)
    }

    fn datum(&self, s: &Spanned<String>, path: &str) -> Result<Datum, CliError> {
        let d = Datum::new(s.get_ref());
        if !self.data.contains(&d) {
            return self.err(s.span(), path, format!("datum {:?} is not in data.universe", s.get_ref()));
        }
        Ok(d)
    }
}

pub fn parse_model(text: &str) -> Result<ModelFile, CliError> {
    let raw: RawModel = toml::from_str(text).map_err(|e| CliError::Schema {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        path: "document".into(),
        message: e.message().to_string(),
    })?;
    let mut ctx = Ctx { text, locations: BTreeSet::new(), identities: BTreeSet::new(), data: BTreeSet::new() };
    if *raw.schema.get_ref() != SCHEMA_VERSION {
        return ctx.err(raw.schema.span(), "schema", format!("unsupported schema version {}", raw.schema.get_ref()));
    }
    let level = match Level::from_number(*raw.level.get_ref()) {
        Some(l) => l,
        None => return ctx.err(raw.level.span(), "level", "level must be 1, 2, 3 or 4"),
    };

    ctx.locations = raw.graph.locations.iter().map(|l| Location::new(l.get_ref())).collect();
    ctx.identities = raw.actors.identities.iter().map(|i| Identity::new(i.get_ref())).collect();
    ctx.data = raw.data.universe.iter().map(|d| Datum::new(d)).collect();

    let mut edges = BTreeSet::new();
    for (i, e) in raw.graph.edges.iter().enumerate() {
        let path = format!("graph.edges[{i}]");
        let (a, b) = e.get_ref();
        let at = |name: &String| Spanned::new(e.span(), name.clone());
        edges.insert((ctx.location(&at(a), &path)?, ctx.location(&at(b), &path)?));
    }

    let mut placements = BTreeMap::new();
    for (h, l) in &raw.actors.placements {
        let path = format!("actors.placements.{}", h.get_ref());
        placements.insert(ctx.identity(h, &path)?, ctx.location(l, &path)?);
    }
    let mut aliases = BTreeMap::new();
    for (from, to) in &raw.actors.aliases {
        let path = format!("actors.aliases.{}", from.get_ref());
        aliases.insert(ctx.identity(from, &path)?, ctx.identity(to, &path)?);
    }
    let controller = raw.actors.controller.as_ref().map(|c| ctx.identity(c, "actors.controller")).transpose()?;

    let mut credentials = BTreeMap::new();
    for (h, c) in &raw.credentials {
        let path = format!("credentials.{}", h.get_ref());
        let mut creds = Credentials::with_creds(c.creds.iter().map(String::as_str));
        creds.roles = c.roles.iter().cloned().collect();
        credentials.insert(ctx.identity(h, &path)?, creds);
    }
    let known_creds: BTreeSet<String> = credentials.values().flat_map(|c: &Credentials| c.creds.iter().cloned()).collect();

    let mut policies = Policies::new();
    for (i, p) in raw.policy.iter().enumerate() {
        let path = format!("policy[{i}]");
        let l = ctx.location(&p.location, &path)?;
        let when = expr::parse_policy(p.when.get_ref())
            .or_else(|e| ctx.err(p.when.span(), &format!("{path}.when"), e))?;
        check_policy(&ctx, &when, &known_creds).or_else(|e| ctx.err(p.when.span(), &format!("{path}.when"), e))?;
        let mut actions = BTreeSet::new();
        for a in p.actions.get_ref() {
            match Action::parse(a) {
                Some(a) => actions.insert(a),
                None => return ctx.err(p.actions.span(), &format!("{path}.actions"), format!("unknown action {a:?}")),
            };
        }
        if actions.is_empty() {
            return ctx.err(p.actions.span(), &format!("{path}.actions"), "empty action set");
        }
        policies.entry(l).or_default().insert((when, actions));
    }

    let mut reader_family = BTreeSet::new();
    for (i, hs) in raw.data.reader_sets.iter().enumerate() {
        let path = format!("data.reader_sets[{i}]");
        let set = hs.get_ref().iter().map(|h| ctx.identity(&Spanned::new(hs.span(), h.clone()), &path));
        reader_family.insert(set.collect::<Result<BTreeSet<_>, _>>()?);
    }
    let mut knowledge = BTreeMap::new();
    for (h, ds) in &raw.data.knowledge {
        let path = format!("data.knowledge.{}", h.get_ref());
        let known = ds.get_ref().iter().map(|d| ctx.datum(&Spanned::new(ds.span(), d.clone()), &path));
        knowledge.insert(ctx.identity(h, &path)?, known.collect::<Result<BTreeSet<_>, _>>()?);
    }
    let label_funs = match &raw.data.label_funs {
        None => vec![LabelFun::identity()],
        Some(fs) => fs
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let path = format!("data.label_funs[{i}]");
                let t = match (f.transformer.get_ref().as_str(), &f.value) {
                    ("identity", None) => Transformer::Identity,
                    ("constant", Some(v)) => Transformer::Constant(Datum::new(v)),
                    ("suffix", Some(v)) => Transformer::Suffix(v.clone()),
                    ("identity", Some(_)) => return ctx.err(f.transformer.span(), &path, "identity takes no value"),
                    ("constant" | "suffix", None) => {
                        return ctx.err(f.transformer.span(), &path, "this transformer needs a value")
                    }
                    (other, _) => {
                        return ctx.err(
                            f.transformer.span(),
                            &path,
                            format!("unknown transformer {other:?}; expected identity, constant or suffix"),
                        )
                    }
                };
                Ok(LabelFun::new(&f.name, t))
            })
            .collect::<Result<_, _>>()?,
    };

    let mut initial = Vec::new();
    match (level, &raw.store, &raw.ledger) {
        (Level::Four, Some(s), _) => return ctx.err(s.span(), "store", "level 4 keeps its data in [[ledger]] entries"),
        (Level::Four, None, None) => return ctx.err(raw.level.span(), "ledger", "a level 4 model needs a [[ledger]] section"),
        (Level::Four, None, Some(ledger)) => {
            for (i, e) in ledger.get_ref().iter().enumerate() {
                let path = format!("ledger[{i}]");
                let label = Dlm::new(
                    ctx.identity(&e.owner, &path)?,
                    e.readers.iter().map(|r| ctx.identity(r, &path)).collect::<Result<Vec<_>, _>>()?,
                );
                let datum = ctx.datum(&e.datum, &path)?;
                if e.locations.is_empty() {
                    return ctx.err(e.datum.span(), &path, "a ledger entry needs at least one location");
                }
                for l in &e.locations {
                    initial.push(InitialItem {
                        location: ctx.location(l, &path)?,
                        label: Some(label.clone()),
                        datum: datum.clone(),
                    });
                }
            }
        }
        (_, _, Some(l)) => return ctx.err(l.span(), "ledger", "only level 4 models have a ledger"),
        (_, store, None) => {
            for (i, item) in store.iter().flat_map(|s| s.get_ref()).enumerate() {
                let path = format!("store[{i}]");
                let label = match &item.owner {
                    Some(o) => Some(Dlm::new(
                        ctx.identity(o, &path)?,
                        item.readers.iter().map(|r| ctx.identity(r, &path)).collect::<Result<Vec<_>, _>>()?,
                    )),
                    None if level != Level::One => {
                        return ctx.err(item.datum.span(), &path, format!("level {level} data needs an owner"))
                    }
                    None => None,
                };
                initial.push(InitialItem {
                    location: ctx.location(&item.location, &path)?,
                    label,
                    datum: ctx.datum(&item.datum, &path)?,
                });
            }
        }
    }

    let spec = ModelSpec {
        level,
        locations: ctx.locations.clone(),
        edges,
        identities: ctx.identities.clone(),
        aliases,
        placements,
        credentials,
        policies,
        data: ctx.data.clone(),
        reader_family,
        knowledge,
        label_funs,
        options: Options { buggy_delete: raw.options.buggy_delete, consensus_put: raw.options.consensus_put },
        controller,
        initial,
    };
    // remaining checks (alias cycles, corrupt ledgers) have no span of their own
    spec.validate().map_err(|e| CliError::Schema { line: 0, path: "model".into(), message: e.to_string() })?;

    let mut bounds = Bounds::default();
    if let Some(cap) = raw.bounds.state_cap {
        bounds.state_cap = cap;
    }
    bounds.depth = raw.bounds.depth;

    let mut sets = IndexMap::new();
    for (name, e) in &raw.sets {
        if expr::is_reserved(name) || !expr::is_name(name) {
            return ctx.err(e.span(), &format!("sets.{name}"), "not a usable set name");
        }
        expr::parse_formula(e.get_ref()).or_else(|m| ctx.err(e.span(), &format!("sets.{name}"), m))?;
        sets.insert(name.clone(), SetDecl { expr: e.get_ref().clone(), line: line_of(text, e.span().start) });
    }
    Ok(ModelFile { spec, bounds, sets })
}

fn check_policy(ctx: &Ctx<'_>, p: &PolicyPredicate, creds: &BTreeSet<String>) -> Result<(), String> {
    p.validate(&ctx.locations, &ctx.identities, creds).map_err(|e| e.to_string())
}
