//! Command line definition and dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use refrisk_core::attack_tree::{attack_of, check_at_ef, is_valid, synthesize};
use refrisk_core::casestudy::{run_case_study, CaseStudyReport, ModelStats, TableRow, TABLE};
use refrisk_core::kripke::{sat, Bounds, CtlFormula};
use refrisk_core::model::Model;
use refrisk_core::refinement::{
    check_refinement_direct, check_strong_mt, check_strong_mt_reachable, FailureReason, Identity, RefinementVerdict, StateMap,
};
use refrisk_core::refmaps::{FourToThree, ThreeToTwo, TwoToOne};
use refrisk_core::semantics::{Infrastructure, Options, RuleSystem, StoreView};
use refrisk_core::{KripkeStructure, StateSet, TransitionSystem};

use crate::analysis::Analysis;
use crate::expr::{parse_formula, Formula, Temporal};
use crate::report::{AttackReport, Body, CtlReport, ParseSummary, RefinementReport, Report, StepReport};
use crate::schema::{parse_model, ModelFile, SCHEMA_VERSION};
use crate::tree::{describe, parse_tree, render_doc, render_node, resolve, TreeDoc};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "refrisk", version, about = "Model checking, attack trees and refinement for infrastructure models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Fail when exploration exceeds this many states.
    #[arg(long, global = true)]
    pub state_cap: Option<usize>,
    /// Stop exploring at this depth; results are then marked truncated.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Comma separated: buggy_delete, consensus_put.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    pub options: Vec<OptionName>,
    /// The verdict the command asserts; the exit code is 1 when it differs.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    pub expect: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptionName {
    #[value(name = "buggy_delete")]
    BuggyDelete,
    #[value(name = "consensus_put")]
    ConsensusPut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapName {
    #[value(name = "two_to_one")]
    TwoToOne,
    #[value(name = "three_to_two")]
    ThreeToTwo,
    #[value(name = "four_to_three")]
    FourToThree,
    #[value(name = "identity")]
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Every reachable refined state maps into the abstract reachable set
    Direct,
    /// Every refined step is simulated; the refined model holds only explored
    /// states, so this matches strong-reachable unless --depth cuts exploration
    Strong,
    /// Every refined step from a reachable state is simulated
    StrongReachable,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model file.
    Parse {
        #[arg(long)]
        model: PathBuf,
    },
    /// Decide a CTL formula on a model.
    CheckCtl {
        #[arg(long)]
        model: PathBuf,
        formula: String,
    },
    /// Validate or synthesize attack trees.
    Attack {
        #[command(subcommand)]
        mode: AttackMode,
    },
    /// Check that a refined model refines an abstract one under a map.
    CheckRefinement {
        /// The refined model.
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "abstract")]
        abstract_model: PathBuf,
        #[arg(long, value_enum)]
        map: MapName,
        #[arg(long, value_enum, default_value_t = Method::StrongReachable)]
        method: Method,
    },
    /// Run the built-in healthcare case study.
    CaseStudy {
        /// Iterations to run; all four by default.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        iterations: Vec<u8>,
        /// Skip the ownership, ledger and delete-regression checks.
        #[arg(long)]
        skip_checks: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum AttackMode {
    /// Check a tree document against a model.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Also require the root's target set to equal this set.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Build a tree from a shortest witness per initial state.
    Synthesize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, default_value = "init")]
        from: String,
        /// Write the tree document here.
        #[arg(long)]
        emit_tree: Option<PathBuf>,
    },
}

impl Cli {
    fn option_flags(&self) -> Options {
        let mut o = Options::default();
        for f in &self.options {
            match f {
                OptionName::BuggyDelete => o.buggy_delete = true,
                OptionName::ConsensusPut => o.consensus_put = true,
            }
        }
        o
    }

    fn bounds(&self, base: Bounds) -> Bounds {
        Bounds { state_cap: self.state_cap.unwrap_or(base.state_cap), depth: self.depth.or(base.depth) }
    }

    fn load(&self, path: &Path) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        let mut file = parse_model(&text)?;
        let flags = self.option_flags();
        file.spec.options.buggy_delete |= flags.buggy_delete;
        file.spec.options.consensus_put |= flags.consensus_put;
        file.bounds = self.bounds(file.bounds);
        Ok(file)
    }

    fn echo(&self) -> String {
        let mut parts = vec![match &self.command {
            Command::Parse { model } => format!("parse --model {}", model.display()),
            Command::CheckCtl { model, formula } => format!("check-ctl --model {} {formula:?}", model.display()),
            Command::Attack { mode: AttackMode::Validate { model, tree, goal } } => {
                let goal = goal.as_ref().map(|g| format!(" --goal {g:?}")).unwrap_or_default();
                format!("attack validate --model {} --tree {}{goal}", model.display(), tree.display())
            }
            Command::Attack { mode: AttackMode::Synthesize { model, goal, from, .. } } => {
                format!("attack synthesize --model {} --goal {goal:?} --from {from:?}", model.display())
            }
            Command::CheckRefinement { model, abstract_model, map, method } => format!(
                "check-refinement --abstract {} --model {} --map {} --method {}",
                abstract_model.display(),
                model.display(),
                value_name(*map),
                value_name(*method)
            ),
            Command::CaseStudy { iterations, skip_checks } => {
                let mut words = vec!["case-study".to_string()];
                words.extend(iterations.iter().map(ToString::to_string));
                if *skip_checks {
                    words.push("--skip-checks".into());
                }
                words.join(" ")
            }
        }];
        if !self.options.is_empty() {
            let os: Vec<String> = self.options.iter().map(|o| value_name(*o)).collect();
            parts.push(format!("--options {}", os.join(",")));
        }
        if let Some(c) = self.state_cap {
            parts.push(format!("--state-cap {c}"));
        }
        if let Some(d) = self.depth {
            parts.push(format!("--depth {d}"));
        }
        if !self.expect {
            parts.push("--expect false".into());
        }
        parts.join(" ")
    }
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value().expect("no skipped values").get_name().to_string()
}

fn model_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn stats<T: TransitionSystem>(name: &str, level: u8, k: &KripkeStructure<T>) -> ModelStats {
    ModelStats {
        name: name.into(),
        level,
        states: k.len(),
        transitions: k.transition_count(),
        truncated: k.is_truncated(),
    }
}

/// Runs `$body` with `$k` bound to the Kripke structure of any level.
macro_rules! each_level {
    ($model:expr, $k:ident => $body:expr) => {
        match $model {
            Model::One($k) => $body,
            Model::Two($k) | Model::Three($k) => $body,
            Model::Four($k) => $body,
        }
    };
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let command = cli.echo();
    let (verdict, body) = match &cli.command {
        Command::Parse { model } => {
            let f = cli.load(model)?;
            let s = &f.spec;
            let summary = ParseSummary {
                level: s.level.number(),
                locations: s.locations.len(),
                edges: s.edges.len(),
                identities: s.identities.len(),
                data: s.data.len(),
                sets: f.sets.keys().cloned().collect(),
            };
            (true, Body::Parse(summary))
        }
        Command::CheckCtl { model, formula } => {
            let f = cli.load(model)?;
            let parsed = parse_formula(formula).map_err(|e| CliError::Usage(format!("in formula: {e}")))?;
            let level = f.spec.level.number();
            let r = each_level!(f.spec.build(f.bounds)?, k => {
                check_ctl(&Analysis::new(&f, k), &model_name(model), level, &parsed)?
            });
            (r.holds, Body::Ctl(r))
        }
        Command::Attack { mode } => {
            let r = match mode {
                AttackMode::Validate { model, tree, goal } => {
                    let text = std::fs::read_to_string(tree)
                        .map_err(|source| CliError::Io { path: tree.display().to_string(), source })?;
                    let doc = parse_tree(&text)?;
                    let f = cli.load(model)?;
                    let level = f.spec.level.number();
                    let r = each_level!(f.spec.build(f.bounds)?, k => {
                        validate(&Analysis::new(&f, k), &model_name(model), level, &doc, goal.as_deref(), f.bounds)?
                    });
                    r
                }
                AttackMode::Synthesize { model, goal, from, emit_tree } => {
                    let f = cli.load(model)?;
                    let level = f.spec.level.number();
                    let r = each_level!(f.spec.build(f.bounds)?, k => {
                        synthesize_tree(&Analysis::new(&f, k), &model_name(model), level, goal, from, f.bounds)?
                    });
                    if let (Some(path), Some(doc)) = (emit_tree, &r.tree_document) {
                        std::fs::write(path, doc)
                            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
                    }
                    r
                }
            };
            (r.holds, Body::Attack(r))
        }
        Command::CheckRefinement { model, abstract_model, map, method } => {
            let r = check_refinement(cli, abstract_model, model, *map, *method)?;
            (r.holds, Body::Refinement(r))
        }
        Command::CaseStudy { iterations, skip_checks } => {
            let its: Vec<u8> = if iterations.is_empty() { vec![1, 2, 3, 4] } else { iterations.clone() };
            let report = run_case_study(&its, cli.option_flags(), !skip_checks, cli.bounds(Bounds::default()))?;
            (case_study_as_expected(&report), Body::CaseStudy(report))
        }
    };
    Ok(Report { command, verdict, expected: cli.expect, body })
}

/// The table rows expected for the iterations of the report.
pub fn expected_rows(iterations: impl IntoIterator<Item = u8>) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for n in iterations {
        let idx: &[usize] = match n {
            1 => &[0],
            2 => &[1],
            3 => &[2],
            4 => &[3, 4],
            _ => &[],
        };
        rows.extend(idx.iter().map(|&i| TableRow { system: TABLE[i].0.into(), attack: TABLE[i].1.into() }));
    }
    rows
}

/// Every row, tree, refinement and theorem check came out as in the
/// analysis of the scenario.
pub fn case_study_as_expected(r: &CaseStudyReport) -> bool {
    let rows: Vec<TableRow> = r.rows().into_iter().cloned().collect();
    rows == expected_rows(r.iterations.iter().map(|it| it.iteration))
        && r.iterations.iter().all(|it| it.trees_valid() && it.refinement.as_ref().is_none_or(|c| c.passed()))
        && r.priv_pres != Some(false)
        && r.ledger_con.iter().all(|l| l.holds())
        && r.regression.as_ref().is_none_or(|g| g.as_expected())
}

fn check_ctl<T, D>(a: &Analysis<'_, T>, name: &str, level: u8, f: &Formula) -> Result<CtlReport, CliError>
where
    T: TransitionSystem<State = Infrastructure<D>> + RuleSystem<State = Infrastructure<D>>,
    D: StoreView + Clone + Ord,
{
    let eval = a.eval(f)?;
    let holds = sat(&a.kripke, &CtlFormula::atom(eval.clone()))?;
    let witness = match f {
        Formula::Temporal(Temporal::EF, g) if holds => a.witness(&a.eval(g)?)?,
        Formula::Temporal(Temporal::AG, g) if !holds => {
            let inside = a.eval(g)?;
            let outside: StateSet<Infrastructure<D>> =
                a.kripke.states().iter().filter(|s| !inside.contains(*s)).cloned().collect();
            a.witness(&outside)?
        }
        _ => None,
    };
    Ok(CtlReport {
        model: stats(name, level, &a.kripke),
        formula: f.to_string(),
        holds,
        satisfying_states: eval.len(),
        witness,
    })
}

fn validate<T, D>(
    a: &Analysis<'_, T>,
    name: &str,
    level: u8,
    doc: &TreeDoc,
    goal: Option<&str>,
    bounds: Bounds,
) -> Result<AttackReport, CliError>
where
    T: TransitionSystem<State = Infrastructure<D>> + RuleSystem<State = Infrastructure<D>> + Clone,
    D: StoreView + Clone + Ord,
{
    let t = resolve(a, &doc.tree)?;
    let valid = is_valid(&t, a.kripke.system());
    let reaches = if valid { Some(check_at_ef(&t, a.kripke.system().clone(), bounds)?) } else { None };
    let mut note = None;
    let goal_ok = match goal {
        Some(g) => {
            let ok = attack_of(&t).1 == a.eval_str(g)?;
            if !ok {
                note = Some(format!("the root's target set is not {g}"));
            }
            ok
        }
        None => true,
    };
    Ok(AttackReport {
        model: stats(name, level, &a.kripke),
        mode: "validate".into(),
        goal: goal.map_or_else(|| doc.tree.to.clone(), String::from),
        holds: valid && goal_ok,
        tree: Some(render_node(&doc.tree)),
        tree_document: None,
        tree_valid: Some(valid),
        reaches_goal: reaches,
        witness: None,
        note,
    })
}

fn synthesize_tree<T, D>(
    a: &Analysis<'_, T>,
    name: &str,
    level: u8,
    goal: &str,
    from: &str,
    bounds: Bounds,
) -> Result<AttackReport, CliError>
where
    T: TransitionSystem<State = Infrastructure<D>> + RuleSystem<State = Infrastructure<D>> + Clone,
    D: StoreView + Clone + Ord,
{
    let goal_set = a.eval_str(goal)?;
    let from_set = a.eval_str(from)?;
    let mut report = AttackReport {
        model: stats(name, level, &a.kripke),
        mode: "synthesize".into(),
        goal: goal.into(),
        holds: false,
        tree: None,
        tree_document: None,
        tree_valid: None,
        reaches_goal: None,
        witness: None,
        note: None,
    };
    match synthesize(&a.kripke, &from_set, &goal_set)? {
        None => {
            let bound = if a.kripke.is_truncated() { " (exploration was truncated)" } else { "" };
            report.note = Some(format!("no attack under bounds{bound}"));
        }
        Some(t) => {
            let valid = is_valid(&t, a.kripke.system());
            report.tree_valid = Some(valid);
            report.reaches_goal = Some(valid && check_at_ef(&t, a.kripke.system().clone(), bounds)?);
            report.holds = valid;
            // name the endpoints as the user wrote them
            let show = |s: &StateSet<Infrastructure<D>>| {
                if *s == goal_set {
                    goal.to_string()
                } else if *s == from_set {
                    from.to_string()
                } else {
                    a.show_set(s)
                }
            };
            let doc = TreeDoc { schema: SCHEMA_VERSION, tree: describe(&t, &show) };
            report.tree = Some(render_node(&doc.tree));
            report.tree_document = Some(render_doc(&doc));
            if from_set == a.kripke.init_set() {
                report.witness = a.witness(&goal_set)?;
            }
        }
    }
    Ok(report)
}

fn check_refinement(
    cli: &Cli,
    abstract_path: &Path,
    refined_path: &Path,
    map: MapName,
    method: Method,
) -> Result<RefinementReport, CliError> {
    let af = cli.load(abstract_path)?;
    let rf = cli.load(refined_path)?;
    let (al, rl) = (af.spec.level.number(), rf.spec.level.number());
    let wanted = match map {
        MapName::TwoToOne => Some((1, 2)),
        MapName::ThreeToTwo => Some((2, 3)),
        MapName::FourToThree => Some((3, 4)),
        MapName::Identity => None,
    };
    if wanted.is_some_and(|w| w != (al, rl)) || (wanted.is_none() && al != rl) {
        let need = match wanted {
            Some((a, r)) => format!("an abstract level {a} model and a refined level {r} model"),
            None => "two models of the same level".into(),
        };
        return Err(CliError::Usage(format!(
            "map {} needs {need}; got abstract level {al} and refined level {rl}",
            value_name(map)
        )));
    }
    let am = af.spec.build(af.bounds)?;
    let rm = rf.spec.build(rf.bounds)?;
    let names = (model_name(abstract_path), model_name(refined_path));
    let r = match (&am, &rm) {
        (Model::One(a), Model::Two(r)) => refine(a, &TwoToOne, r, method, (al, rl), &names)?,
        (Model::Two(a), Model::Three(r)) => refine(a, &ThreeToTwo, r, method, (al, rl), &names)?,
        (Model::Three(a), Model::Four(r)) => refine(a, &FourToThree, r, method, (al, rl), &names)?,
        (Model::One(a), Model::One(r)) => refine(a, &Identity, r, method, (al, rl), &names)?,
        (Model::Two(a) | Model::Three(a), Model::Two(r) | Model::Three(r)) => {
            refine(a, &Identity, r, method, (al, rl), &names)?
        }
        (Model::Four(a), Model::Four(r)) => refine(a, &Identity, r, method, (al, rl), &names)?,
        _ => unreachable!("levels checked above"),
    };
    Ok(RefinementReport { map: value_name(map), ..r })
}

fn refine<TA, TR, DA, DR, E>(
    k: &KripkeStructure<TA>,
    e: &E,
    k2: &KripkeStructure<TR>,
    method: Method,
    levels: (u8, u8),
    names: &(String, String),
) -> Result<RefinementReport, CliError>
where
    TA: TransitionSystem<State = Infrastructure<DA>>,
    TR: TransitionSystem<State = Infrastructure<DR>> + RuleSystem<State = Infrastructure<DR>>,
    DA: StoreView + Clone + Ord,
    DR: StoreView + Clone + Ord,
    E: StateMap<Infrastructure<DR>, Infrastructure<DA>>,
{
    // the refined structure holds the explored states only, so `strong`
    // ranges over the same steps as `strong-reachable` plus any states a
    // depth bound left unexpanded
    let v: RefinementVerdict<Infrastructure<DR>, Infrastructure<DA>> = match method {
        Method::Direct => check_refinement_direct(k, e, k2)?,
        Method::Strong => check_strong_mt(k, e, k2)?,
        Method::StrongReachable => check_strong_mt_reachable(k, e, k2)?,
    };
    let counterexample = v.counterexample.as_ref().map(|c| {
        let (s, t) = &c.refined_step;
        let firing = match c.reason {
            FailureReason::StepNotSimulated => k2.system().explain(s, t),
            _ => None,
        };
        StepReport {
            reason: c.reason.as_str().into(),
            refined_step: (s.to_string(), t.to_string()),
            abstract_images: (c.abstract_images.0.to_string(), c.abstract_images.1.to_string()),
            rule: firing.as_ref().map(|f| f.rule.as_str().into()),
            firing: firing.as_ref().map(ToString::to_string),
        }
    });
    Ok(RefinementReport {
        map: String::new(),
        method: value_name(method),
        abstract_model: stats(&names.0, levels.0, k),
        refined_model: stats(&names.1, levels.1, k2),
        holds: v.holds(),
        pairs_checked: v.pairs_checked,
        counterexample,
    })
}
