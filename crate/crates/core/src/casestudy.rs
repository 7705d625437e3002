//! The IoT healthcare scenario at all four levels, its attacks, and the
//! checks run on it.
//!
//! Patient lives at `home` and owns the datum `"42"`, initially stored in the
//! `cloud` and readable by Doctor, who works at the `hospital`. Eve starts at
//! `home` and is free to move to the cloud. The default universes are small:
//! the only datum is `"42"` and the only reader set is `{Doctor}`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::attack_tree::{is_valid, render_tree, synthesize, AttackTree};
use crate::error::Result;
use crate::infra::{Action, Credentials, Datum, Dlm, Identity, LabelFun, Location, Policies, PolicyPredicate};
use crate::kripke::{sat, witness_path, Bounds, CtlFormula, KripkeStructure, StateSet, TransitionSystem};
use crate::model::{InitialItem, Level, ModelSpec};
use crate::refinement::{check_strong_mt_reachable, transfer_ef, StateMap};
use crate::refmaps::{refmap_two_to_one, FourToThree, LabeledState, LedgerState, ThreeToTwo, TwoToOne};
use crate::semantics::{
    ledger_invariant, replay, Infrastructure, LabeledSemantics, Ledger, LedgerSemantics, Options, PlainSemantics,
    Rule, RuleSystem, StoreView,
};

pub const HOME: &str = "home";
pub const SPHONE: &str = "sphone";
pub const CLOUD: &str = "cloud";
pub const HOSPITAL: &str = "hospital";
pub const PATIENT: &str = "Patient";
pub const DOCTOR: &str = "Doctor";
pub const EVE: &str = "Eve";
pub const CONTROLLER: &str = "Controller";
pub const DATUM: &str = "42";

/// The System and Attack columns of the iterated analysis, one row per
/// analysed system.
pub const TABLE: [(&str, &str); 5] = [
    ("Initial Fusion system home-cloud-hospital", "Eve can perform action get at cloud"),
    ("Access control by DLM labels", "Eve can perform action eval at cloud; changes label to her own"),
    ("Privacy preserving functions type label_fun", "Eve puts Bob's data labelled as her own"),
    ("Global blockchain", "Eve is an insider impersonating the blockchain controller"),
    ("Consensus (for example Nakamoto) blockchain", "no attack known yet"),
];

/// Attack text for a row whose attack query failed.
pub const NO_ATTACK_FOUND: &str = "no attack found";

fn all_actions() -> BTreeSet<Action> {
    Action::ALL.into()
}

/// home and cloud are open; sphone needs the PIN; hospital needs presence
/// there and the signing key.
pub fn hc_policies() -> Policies {
    let open = PolicyPredicate::True;
    let pin = PolicyPredicate::HasCredential("PIN".into());
    let hospital = PolicyPredicate::And(vec![
        PolicyPredicate::ResidesAt(HOSPITAL.into()),
        PolicyPredicate::HasCredential("skey".into()),
    ]);
    [(HOME, open.clone()), (SPHONE, pin), (CLOUD, open), (HOSPITAL, hospital)]
        .into_iter()
        .map(|(l, p)| (Location::new(l), [(p, all_actions())].into()))
        .collect()
}

/// Variations of the scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HcConfig {
    pub options: Options,
    /// Eve is an alias of the ledger controller, and so knows what it knows.
    pub insider: bool,
    /// Eve knows the patient's datum and may put it.
    pub eve_knows_datum: bool,
}

impl HcConfig {
    pub fn with_options(options: Options) -> Self {
        Self { options, ..Self::default() }
    }
}

/// The scenario at `level`.
pub fn hc_spec(level: Level, cfg: &HcConfig) -> ModelSpec {
    let ids = |xs: &[&str]| xs.iter().map(|x| Identity::new(x)).collect::<BTreeSet<_>>();
    let datum = || BTreeSet::from([Datum::new(DATUM)]);
    let mut aliases = BTreeMap::new();
    if cfg.insider {
        aliases.insert(Identity::new(EVE), Identity::new(CONTROLLER));
    }
    let mut knowledge = BTreeMap::from([(Identity::new(PATIENT), datum()), (Identity::new(CONTROLLER), datum())]);
    if cfg.eve_knows_datum {
        knowledge.insert(Identity::new(EVE), datum());
    }
    ModelSpec {
        level,
        locations: [HOME, SPHONE, CLOUD, HOSPITAL].map(Location::new).into(),
        edges: [(HOME, CLOUD), (SPHONE, CLOUD), (CLOUD, HOSPITAL)]
            .map(|(a, b)| (Location::new(a), Location::new(b)))
            .into(),
        identities: ids(&[PATIENT, DOCTOR, EVE, CONTROLLER]),
        aliases,
        placements: [(PATIENT, HOME), (DOCTOR, HOSPITAL), (EVE, HOME)]
            .map(|(i, l)| (Identity::new(i), Location::new(l)))
            .into(),
        credentials: [(PATIENT, "PIN"), (DOCTOR, "skey")]
            .map(|(i, c)| (Identity::new(i), Credentials::with_creds([c])))
            .into(),
        policies: hc_policies(),
        data: datum(),
        reader_family: [ids(&[DOCTOR])].into(),
        knowledge,
        label_funs: vec![LabelFun::identity()],
        options: cfg.options,
        controller: Some(CONTROLLER.into()),
        initial: vec![InitialItem {
            location: CLOUD.into(),
            label: Some(Dlm::new(PATIENT.into(), [DOCTOR.into()])),
            datum: DATUM.into(),
        }],
    }
}

/// The actors entitled to data in the cloud.
pub fn hc_actors() -> BTreeSet<Identity> {
    [PATIENT, DOCTOR].map(Identity::new).into()
}

/// `a ∉ hc_actors → ¬ enables I cloud (Actor a) get`.
pub fn global_policy_holds<D: Clone>(s: &Infrastructure<D>, a: &Identity) -> bool {
    hc_actors().contains(a) || !s.enables(&CLOUD.into(), a, Action::Get)
}

pub fn eve_at_cloud<D>(s: &Infrastructure<D>) -> bool {
    s.graph.actors_at(&CLOUD.into()).any(|h| h.as_str() == EVE)
}

/// Eve may perform `act` at the cloud.
pub fn eve_enabled_at_cloud<D: Clone>(s: &Infrastructure<D>, act: Action) -> bool {
    s.enables(&CLOUD.into(), &EVE.into(), act)
}

/// Every stored copy of the patient's datum is owned by Patient.
pub fn patient_owns_datum<D: StoreView + Clone>(s: &Infrastructure<D>) -> bool {
    let patient = s.actor(&PATIENT.into());
    s.data_locations()
        .iter()
        .flat_map(|l| s.items_at(l))
        .filter(|(_, d)| d.as_str() == DATUM)
        .all(|(owner, _)| owner.is_none_or(|o| o == patient))
}

/// Some stored copy of the patient's datum is owned by Eve.
pub fn eve_owns_datum<D: StoreView + Clone>(s: &Infrastructure<D>) -> bool {
    let eve = s.actor(&EVE.into());
    s.data_locations()
        .iter()
        .flat_map(|l| s.items_at(l))
        .any(|(owner, d)| d.as_str() == DATUM && owner == Some(eve.clone()))
}

/// A built level with the named state sets of the analysis.
#[derive(Debug)]
pub struct Scenario<T: TransitionSystem> {
    pub level: Level,
    pub kripke: KripkeStructure<T>,
    /// The initial states.
    pub ihc: StateSet<T::State>,
    /// Eve is in the cloud.
    pub hc: StateSet<T::State>,
    /// The global policy fails for Eve.
    pub shc: StateSet<T::State>,
    /// Eve may eval at the cloud.
    pub eval_attack: StateSet<T::State>,
    /// Eve may put at the cloud.
    pub put_attack: StateSet<T::State>,
}

impl<T, D> Scenario<T>
where
    T: TransitionSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    fn new(level: Level, kripke: KripkeStructure<T>) -> Self {
        let eve = Identity::new(EVE);
        Self {
            level,
            ihc: kripke.init_set(),
            hc: kripke.filter(eve_at_cloud),
            shc: kripke.filter(|s| !global_policy_holds(s, &eve)),
            eval_attack: kripke.filter(|s| eve_enabled_at_cloud(s, Action::Eval)),
            put_attack: kripke.filter(|s| eve_enabled_at_cloud(s, Action::Put)),
            kripke,
        }
    }

    pub fn named_sets(&self) -> [(&'static str, &StateSet<T::State>); 5] {
        [
            ("Ihc", &self.ihc),
            ("HC", &self.hc),
            ("shc", &self.shc),
            ("eval_attack", &self.eval_attack),
            ("put_attack", &self.put_attack),
        ]
    }

    /// A set's name, the state of a singleton, or its size.
    pub fn show_set(&self, set: &StateSet<T::State>) -> String {
        if let Some((name, _)) = self.named_sets().into_iter().find(|(_, s)| *s == set) {
            return name.into();
        }
        match set.first() {
            Some(s) if set.len() == 1 => format!("{{{s}}}"),
            _ => format!("<{} states>", set.len()),
        }
    }

    /// `[N(Ihc, HC), N(HC, shc)] AND (Ihc, shc)`: Eve moves to the cloud,
    /// then the cloud policy lets her get.
    pub fn two_step_tree(&self) -> AttackTree<T::State> {
        AttackTree::and(
            vec![AttackTree::base(self.ihc.clone(), self.hc.clone()), AttackTree::base(self.hc.clone(), self.shc.clone())],
            self.ihc.clone(),
            self.shc.clone(),
        )
    }
}

pub fn scenario_one(cfg: &HcConfig, bounds: Bounds) -> Result<Scenario<PlainSemantics>> {
    Ok(Scenario::new(Level::One, hc_spec(Level::One, cfg).build_plain(bounds)?))
}

pub fn scenario_two(cfg: &HcConfig, bounds: Bounds) -> Result<Scenario<LabeledSemantics>> {
    Ok(Scenario::new(Level::Two, hc_spec(Level::Two, cfg).build_labeled(false, bounds)?))
}

pub fn scenario_three(cfg: &HcConfig, bounds: Bounds) -> Result<Scenario<LabeledSemantics>> {
    Ok(Scenario::new(Level::Three, hc_spec(Level::Three, cfg).build_labeled(true, bounds)?))
}

pub fn scenario_four(cfg: &HcConfig, bounds: Bounds) -> Result<Scenario<LedgerSemantics>> {
    Ok(Scenario::new(Level::Four, hc_spec(Level::Four, cfg).build_ledger(bounds)?))
}

fn owned_by_eve(s: &LedgerState, key: &(Dlm<Identity>, Datum)) -> bool {
    s.actor(&key.0.owner) == s.actor(&EVE.into())
}

fn datum_holder(s: &LedgerState) -> Option<&(Dlm<Identity>, Datum)> {
    s.graph.lgra.iter().find(|((_, d), ls)| d.as_str() == DATUM && !ls.is_empty()).map(|(k, _)| k)
}

/// Targets of steps in which the patient's datum passes in one step from a
/// holder other than Eve to Eve.
pub fn overwrite_set(m: &KripkeStructure<LedgerSemantics>) -> StateSet<LedgerState> {
    let mut out = StateSet::new();
    for (i, s) in m.states().iter().enumerate() {
        let Some(before) = datum_holder(s) else { continue };
        if owned_by_eve(s, before) {
            continue;
        }
        for &j in m.successor_indices(i) {
            let t = m.state(j);
            if datum_holder(t).is_some_and(|after| owned_by_eve(t, after)) {
                out.insert(t.clone());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TableRow {
    pub system: String,
    pub attack: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModelStats {
    pub name: String,
    pub level: u8,
    pub states: usize,
    pub transitions: usize,
    pub truncated: bool,
}

fn stats<T: TransitionSystem>(name: &str, level: Level, m: &KripkeStructure<T>) -> ModelStats {
    ModelStats {
        name: name.into(),
        level: level.number(),
        states: m.len(),
        transitions: m.transition_count(),
        truncated: m.is_truncated(),
    }
}

/// One step of a witness trace: the firing and the state it reaches.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TraceStep {
    pub rule: String,
    pub firing: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trace {
    pub start: String,
    pub steps: Vec<TraceStep>,
}

/// The firings of `path`, replayed through the rules.
pub fn render_trace<R: RuleSystem>(sys: &R, path: &[R::State]) -> Result<Trace>
where
    R::State: core::fmt::Display,
{
    let firings = replay(sys, path)?;
    Ok(Trace {
        start: path.first().map(ToString::to_string).unwrap_or_default(),
        steps: firings
            .into_iter()
            .map(|f| TraceStep { rule: f.rule.as_str().into(), firing: f.to_string(), state: f.target.to_string() })
            .collect(),
    })
}

/// An `EF` query on one model, with its witness and a synthesized tree.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AttackCheck {
    pub model: String,
    pub query: String,
    pub holds: bool,
    pub witness: Option<Trace>,
    pub tree: Option<String>,
    /// The synthesized tree re-checked by the validity predicate.
    pub tree_valid: bool,
}

fn attack_check<R, D>(
    model: &str,
    sc: &Scenario<R>,
    name: &str,
    goal: &StateSet<Infrastructure<D>>,
) -> Result<AttackCheck>
where
    R: RuleSystem<State = Infrastructure<D>> + TransitionSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    let m = &sc.kripke;
    let holds = sat(m, &CtlFormula::ef(CtlFormula::atom(goal.clone())))?;
    let mut check = AttackCheck {
        model: model.into(),
        query: format!("EF {name}"),
        holds,
        witness: None,
        tree: None,
        tree_valid: false,
    };
    if holds {
        if let Some(path) = witness_path(m, goal) {
            check.witness = Some(render_trace(m.system(), &path)?);
        }
        if let Some(tree) = synthesize(m, &sc.ihc, goal)? {
            check.tree_valid = is_valid(&tree, m.system());
            check.tree = Some(render_tree(&tree, &|s| if s == goal { name.into() } else { sc.show_set(s) }));
        }
    }
    Ok(check)
}

/// The refinement check of one iteration against the level below, with an
/// `EF` property carried over by the refinement map.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RefinementCheck {
    pub map: String,
    pub method: String,
    pub holds: bool,
    pub pairs_checked: usize,
    pub counterexample: Option<String>,
    pub property: String,
    pub refined_ef: bool,
    pub abstract_ef: bool,
}

impl RefinementCheck {
    /// Refinement holds and the property transfer is preserved.
    pub fn passed(&self) -> bool {
        self.holds && (!self.refined_ef || self.abstract_ef)
    }
}

fn refinement_check<TA, TR, E>(
    map: &str,
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
    property: (&str, &StateSet<TR::State>),
) -> Result<RefinementCheck>
where
    TA: TransitionSystem,
    TR: TransitionSystem,
    TA::State: core::fmt::Display,
    TR::State: core::fmt::Display,
    E: StateMap<TR::State, TA::State>,
{
    let verdict = check_strong_mt_reachable(k, e, k2)?;
    let mut check = RefinementCheck {
        map: map.into(),
        method: "strong-reachable".into(),
        holds: verdict.holds(),
        pairs_checked: verdict.pairs_checked,
        counterexample: verdict.counterexample.map(|c| {
            format!(
                "{}: {} -> {} maps to {} -> {}",
                c.reason.as_str(),
                c.refined_step.0,
                c.refined_step.1,
                c.abstract_images.0,
                c.abstract_images.1
            )
        }),
        property: property.0.into(),
        refined_ef: false,
        abstract_ef: false,
    };
    if check.holds {
        let transfer = transfer_ef(k, e, k2, property.1)?;
        check.refined_ef = transfer.refined_ef;
        check.abstract_ef = transfer.abstract_ef;
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IterationReport {
    pub iteration: u8,
    pub rows: Vec<TableRow>,
    pub models: Vec<ModelStats>,
    pub attacks: Vec<AttackCheck>,
    /// Iteration 1: the two-step tree `[N(Ihc, HC), N(HC, shc)]` is valid.
    pub two_step_tree: Option<String>,
    pub two_step_tree_valid: Option<bool>,
    /// Iteration 1: `Ihc ⊆ shc`, so a zero-step attack also exists.
    pub zero_step_witness: Option<bool>,
    pub refinement: Option<RefinementCheck>,
    /// Iteration 3: the patient's datum never changes owner.
    pub ownership_preserved: Option<bool>,
}

impl IterationReport {
    fn new(iteration: u8) -> Self {
        Self {
            iteration,
            rows: Vec::new(),
            models: Vec::new(),
            attacks: Vec::new(),
            two_step_tree: None,
            two_step_tree_valid: None,
            zero_step_witness: None,
            refinement: None,
            ownership_preserved: None,
        }
    }

    fn row(&mut self, index: usize, found: bool) {
        let (system, attack) = TABLE[index];
        let attack = if found { attack } else { NO_ATTACK_FOUND };
        self.rows.push(TableRow { system: system.into(), attack: attack.into() });
    }

    /// The attack check of `model` for `query`, if it was run.
    pub fn find_attack(&self, model: &str, query: &str) -> Option<&AttackCheck> {
        self.attacks.iter().find(|a| a.model == model && a.query == query)
    }

    /// Every attack check that holds came with a valid synthesized tree.
    pub fn trees_valid(&self) -> bool {
        self.attacks.iter().all(|a| !a.holds || a.tree_valid)
    }
}

/// Runs iteration `n` of the analysis: the level-`n` attack queries and, from
/// level 2 on, the refinement check against level `n - 1`.
///
/// Iteration 4 analyses the insider model twice, without and with the
/// consensus precondition on `put`, and so yields two table rows.
pub fn run_iteration(n: u8, options: Options, bounds: Bounds) -> Result<IterationReport> {
    let cfg = HcConfig::with_options(options);
    let mut report = IterationReport::new(n);
    match n {
        1 => {
            let sc = scenario_one(&cfg, bounds)?;
            report.models.push(stats("hc", Level::One, &sc.kripke));
            let check = attack_check("hc", &sc, "shc", &sc.shc)?;
            let tree = sc.two_step_tree();
            report.two_step_tree_valid = Some(is_valid(&tree, sc.kripke.system()));
            report.two_step_tree = Some(render_tree(&tree, &|s| sc.show_set(s)));
            report.zero_step_witness = Some(sc.ihc.is_subset(&sc.shc));
            report.row(0, check.holds && report.two_step_tree_valid == Some(true));
            report.attacks.push(check);
        }
        2 => {
            let sc = scenario_two(&cfg, bounds)?;
            let abs = scenario_one(&cfg, bounds)?;
            report.models.push(stats("hc", Level::Two, &sc.kripke));
            let eval = attack_check("hc", &sc, "eval_attack", &sc.eval_attack)?;
            let relabel = sc.kripke.filter(eve_owns_datum);
            let relabel = attack_check("hc", &sc, "eve_owns_datum", &relabel)?;
            report.row(1, eval.holds && relabel.holds);
            report.attacks.extend([eval, relabel]);
            report.refinement =
                Some(refinement_check("two_to_one", &abs.kripke, &TwoToOne, &sc.kripke, ("eval_attack", &sc.eval_attack))?);
        }
        3 => {
            let sc = scenario_three(&cfg, bounds)?;
            let abs = scenario_two(&cfg, bounds)?;
            let knowing = scenario_three(&HcConfig { eve_knows_datum: true, ..cfg }, bounds)?;
            report.models.push(stats("hc", Level::Three, &sc.kripke));
            report.models.push(stats("hc-eve-knows-datum", Level::Three, &knowing.kripke));
            let put = attack_check("hc", &sc, "put_attack", &sc.put_attack)?;
            let stolen = knowing.kripke.filter(eve_owns_datum);
            let stolen = attack_check("hc-eve-knows-datum", &knowing, "eve_owns_datum", &stolen)?;
            report.ownership_preserved = Some(priv_pres_holds(&sc.kripke)?);
            report.row(2, put.holds && stolen.holds);
            report.attacks.extend([put, stolen]);
            report.refinement =
                Some(refinement_check("three_to_two", &abs.kripke, &ThreeToTwo, &sc.kripke, ("put_attack", &sc.put_attack))?);
        }
        4 => {
            let sc = scenario_four(&cfg, bounds)?;
            let abs = scenario_three(&cfg, bounds)?;
            report.models.push(stats("hc", Level::Four, &sc.kripke));
            for (row, consensus) in [(3, false), (4, true)] {
                let insider = HcConfig {
                    options: Options { consensus_put: consensus, ..options },
                    insider: true,
                    eve_knows_datum: false,
                };
                let name = if consensus { "hc-insider-consensus" } else { "hc-insider" };
                let isc = scenario_four(&insider, bounds)?;
                report.models.push(stats(name, Level::Four, &isc.kripke));
                let goal = overwrite_set(&isc.kripke);
                let check = attack_check(name, &isc, "overwrite", &goal)?;
                if consensus {
                    let (system, attack) = TABLE[row];
                    let attack = if check.holds { TABLE[3].1 } else { attack };
                    report.rows.push(TableRow { system: system.into(), attack: attack.into() });
                } else {
                    report.row(row, check.holds);
                }
                report.attacks.push(check);
            }
            report.refinement = Some(refinement_check("four_to_three", &abs.kripke, &FourToThree, &sc.kripke, ("HC", &sc.hc))?);
        }
        _ => return Err(crate::Error::Schema(format!("no iteration {n}; iterations are 1 to 4"))),
    }
    Ok(report)
}

/// `AG` of [`patient_owns_datum`].
pub fn priv_pres_holds<T, D>(m: &KripkeStructure<T>) -> Result<bool>
where
    T: TransitionSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    sat(m, &CtlFormula::ag(CtlFormula::atom(m.filter(patient_owns_datum))))
}

/// Ownership preservation on the full level-3 model.
pub fn check_priv_pres(options: Options, bounds: Bounds) -> Result<bool> {
    priv_pres_holds(&scenario_three(&HcConfig::with_options(options), bounds)?.kripke)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LedgerConReport {
    pub model: String,
    pub states: usize,
    /// States holding one datum under two different labels.
    pub label_conflicts: usize,
    /// States violating the ledger invariant.
    pub invariant_violations: usize,
}

impl LedgerConReport {
    pub fn holds(&self) -> bool {
        self.label_conflicts == 0 && self.invariant_violations == 0
    }
}

/// Two nonempty entries for the same datum carry the same label.
pub fn labels_consistent(ld: &Ledger) -> bool {
    let live: Vec<_> = ld.iter().filter(|(_, ls)| !ls.is_empty()).map(|(k, _)| k).collect();
    live.iter().all(|(lab, d)| live.iter().all(|(lab2, d2)| d != d2 || lab == lab2))
}

/// Scans every reachable level-4 state of the scenario under `cfg`.
pub fn check_ledger_con(cfg: &HcConfig, bounds: Bounds) -> Result<LedgerConReport> {
    let sc = scenario_four(cfg, bounds)?;
    let states = sc.kripke.states();
    let model = match (cfg.insider, cfg.options.consensus_put) {
        (false, _) => "hc",
        (true, false) => "hc-insider",
        (true, true) => "hc-insider-consensus",
    };
    Ok(LedgerConReport {
        model: model.into(),
        states: states.len(),
        label_conflicts: states.iter().filter(|s| !labels_consistent(&s.graph.lgra)).count(),
        invariant_violations: states.iter().filter(|s| !ledger_invariant(&s.graph.lgra)).count(),
    })
}

/// The counterexample of the buggy delete, replayed through both levels.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DeleteCounterexample {
    pub reason: String,
    pub rule: String,
    pub firing: String,
    pub refined_step: (String, String),
    pub abstract_images: (String, String),
    /// The refined step is a rule instance of level 2.
    pub refined_step_replays: bool,
    /// The images are not one level-1 step apart.
    pub abstract_step_missing: bool,
    /// The deleted datum was stored under two labels at the deleting location.
    pub doubly_labeled: bool,
    pub witness: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegressionReport {
    pub buggy_holds: bool,
    pub counterexample: Option<DeleteCounterexample>,
    pub fixed_holds: bool,
}

impl RegressionReport {
    /// The buggy rule breaks refinement with a replayable delete on a doubly
    /// labeled datum, and the fixed rule does not.
    pub fn as_expected(&self) -> bool {
        self.fixed_holds
            && !self.buggy_holds
            && self.counterexample.as_ref().is_some_and(|c| {
                c.rule == Rule::Delete.as_str() && c.refined_step_replays && c.abstract_step_missing && c.doubly_labeled
            })
    }
}

fn labels_at(s: &LabeledState, l: &Location, d: &Datum) -> usize {
    s.graph.lgra.get(l).map_or(0, |items| items.iter().filter(|(_, x)| x == d).count())
}

/// Level 2 against level 1, with the buggy and the fixed delete rule.
pub fn regression_design_error(cfg: &HcConfig, bounds: Bounds) -> Result<RegressionReport> {
    let run = |buggy: bool| -> Result<_> {
        let cfg = HcConfig { options: Options { buggy_delete: buggy, ..cfg.options }, ..*cfg };
        let abs = hc_spec(Level::One, &cfg).build_plain(bounds)?;
        let refined = hc_spec(Level::Two, &cfg).build_labeled(false, bounds)?;
        let verdict = check_strong_mt_reachable(&abs, &TwoToOne, &refined)?;
        Ok((abs, refined, verdict))
    };
    let (_, _, fixed) = run(false)?;
    let (abs, refined, buggy) = run(true)?;
    let counterexample = match &buggy.counterexample {
        None => None,
        Some(c) => {
            let (s, t) = &c.refined_step;
            let firing = refined.system().explain(s, t);
            let (a, b) = (refmap_two_to_one(s), refmap_two_to_one(t));
            let doubly_labeled = firing
                .as_ref()
                .and_then(|f| f.datum.as_ref().map(|d| labels_at(s, &f.location, d) >= 2))
                .unwrap_or(false);
            let witness = match witness_path(&refined, &BTreeSet::from([s.clone()])) {
                Some(mut path) => {
                    path.push(t.clone());
                    Some(render_trace(refined.system(), &path)?)
                }
                None => None,
            };
            Some(DeleteCounterexample {
                reason: c.reason.as_str().into(),
                rule: firing.as_ref().map_or("", |f| f.rule.as_str()).into(),
                firing: firing.as_ref().map(ToString::to_string).unwrap_or_default(),
                refined_step: (s.to_string(), t.to_string()),
                abstract_images: (c.abstract_images.0.to_string(), c.abstract_images.1.to_string()),
                refined_step_replays: firing.is_some(),
                abstract_step_missing: a == c.abstract_images.0
                    && b == c.abstract_images.1
                    && !abs.system().successors(&a).contains(&b),
                doubly_labeled,
                witness,
            })
        }
    };
    Ok(RegressionReport { buggy_holds: buggy.holds(), counterexample, fixed_holds: fixed.holds() })
}

/// All requested iterations plus the cross-cutting checks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CaseStudyReport {
    pub iterations: Vec<IterationReport>,
    pub priv_pres: Option<bool>,
    pub ledger_con: Vec<LedgerConReport>,
    pub regression: Option<RegressionReport>,
}

impl CaseStudyReport {
    pub fn rows(&self) -> Vec<&TableRow> {
        self.iterations.iter().flat_map(|it| &it.rows).collect()
    }
}

/// Runs the requested iterations in ascending order. The theorem checks and
/// the delete regression run when `checks` is set.
pub fn run_case_study(iterations: &[u8], options: Options, checks: bool, bounds: Bounds) -> Result<CaseStudyReport> {
    let wanted: BTreeSet<u8> = iterations.iter().copied().collect();
    let mut report = CaseStudyReport { iterations: Vec::new(), priv_pres: None, ledger_con: Vec::new(), regression: None };
    for n in wanted {
        report.iterations.push(run_iteration(n, options, bounds)?);
    }
    if checks {
        report.priv_pres = Some(check_priv_pres(options, bounds)?);
        for (insider, consensus) in [(false, false), (true, false), (true, true)] {
            let cfg = HcConfig {
                options: Options { consensus_put: consensus, ..options },
                insider,
                eve_knows_datum: false,
            };
            report.ledger_con.push(check_ledger_con(&cfg, bounds)?);
        }
        report.regression = Some(regression_design_error(&HcConfig::with_options(options), bounds)?);
    }
    Ok(report)
}

/// `| System | Attack |` table of the rows.
pub fn render_table<'a>(rows: impl IntoIterator<Item = &'a TableRow>) -> String {
    let mut out = String::from("| System | Attack |\n|---|---|\n");
    for r in rows {
        out.push_str(&format!("| {} | {} |\n", r.system, r.attack));
    }
    out
}
