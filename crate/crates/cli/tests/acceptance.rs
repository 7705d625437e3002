//! End-to-end acceptance suite: one pass/fail line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use common::{
    closure_oracle, ef_oracle, graph, refinement_instance, subset, tape, transformer, valid_tree, RefinementInstance,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use refrisk::report::{Body, Report};
use refrisk::{run, Cli};
use refrisk_core::attack_tree::{attack_of, check_at_ef, is_valid, synthesize};
use refrisk_core::casestudy::{check_ledger_con, check_priv_pres, regression_design_error, run_iteration, HcConfig};
use refrisk_core::infra::fmap_set;
use refrisk_core::kripke::{build_kripke, eval_ctl, Bounds, CtlFormula, ExplicitSystem};
use refrisk_core::refinement::{check_refinement_direct, check_strong_mt, check_strong_mt_reachable, transfer_ef};
use refrisk_core::semantics::Options;
use refrisk_core::{Error, KripkeStructure};

type Outcome = Result<String, String>;

fn model(n: u8) -> String {
    format!("{}/models/hc_level{n}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[&str]) -> Result<(Report, Duration), String> {
    let start = Instant::now();
    let r = run(&Cli::parse_from(std::iter::once("refrisk").chain(args.iter().copied()))).map_err(|e| e.to_string())?;
    Ok((r, start.elapsed()))
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_1() -> Outcome {
    let (r, took) = cli(&["case-study", "1", "--skip-checks"])?;
    let Body::CaseStudy(cs) = &r.body else { return Err("not a case-study report".into()) };
    let it = cs.iterations.first().ok_or("no iteration")?;
    let shc = it.find_attack("hc", "EF shc").ok_or("no shc check")?;
    ensure(shc.holds, "EF shc is false")?;
    ensure(it.two_step_tree_valid == Some(true), "the two-step tree is not valid")?;
    ensure(took < Duration::from_secs(10), format!("took {took:.1?}"))?;
    Ok(format!("EF shc true, two-step tree valid, {took:.1?}"))
}

fn attack_round_trip(level: u8, goal: &str, dir: &Path) -> Outcome {
    let formula = format!("EF {goal}");
    let (ctl, t1) = cli(&["check-ctl", "--model", &model(level), &formula])?;
    ensure(ctl.verdict, format!("{formula} false on level {level}"))?;
    let out = dir.join(format!("tree{level}.toml"));
    let out = out.to_str().unwrap();
    let (syn, t2) = cli(&["attack", "synthesize", "--model", &model(level), "--goal", goal, "--emit-tree", out])?;
    ensure(syn.verdict, format!("no tree synthesized on level {level}"))?;
    let (val, t3) = cli(&["attack", "validate", "--model", &model(level), "--tree", out, "--goal", goal])?;
    ensure(val.verdict, format!("synthesized tree for level {level} does not re-validate"))?;
    let worst = t1.max(t2).max(t3);
    ensure(worst < Duration::from_secs(30), format!("level {level} took {worst:.1?}"))?;
    Ok(format!("level {level} {formula} true, tree re-validates, slowest {worst:.1?}"))
}

fn criterion_2() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = attack_round_trip(2, "{Eve eval-enabled at cloud}", dir.path())?;
    let b = attack_round_trip(3, "{Eve put-enabled at cloud}", dir.path())?;
    Ok(format!("{a}; {b}"))
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for (abs, refined, map) in [(1, 2, "two_to_one"), (2, 3, "three_to_two"), (3, 4, "four_to_three")] {
        let (r, _) = cli(&["check-refinement", "--abstract", &model(abs), "--model", &model(refined), "--map", map])?;
        let Body::Refinement(rr) = &r.body else { return Err("not a refinement report".into()) };
        ensure(!rr.abstract_model.truncated && !rr.refined_model.truncated, format!("{map}: truncated"))?;
        ensure(rr.holds, format!("{map}: {:?}", rr.counterexample))?;
        parts.push(format!("{map} holds ({} pairs)", rr.pairs_checked));
    }
    Ok(parts.join(", "))
}

fn criterion_4() -> Outcome {
    let reg = regression_design_error(&HcConfig::default(), Bounds::default()).map_err(|e| e.to_string())?;
    ensure(reg.fixed_holds, "fixed delete breaks refinement")?;
    let c = reg.counterexample.as_ref().ok_or("buggy delete has no counterexample")?;
    ensure(reg.as_expected(), format!("unexpected counterexample {c:?}"))?;
    ensure(c.witness.is_some(), "counterexample has no replayed witness")?;
    let (r, _) = cli(&[
        "check-refinement",
        "--abstract",
        &model(1),
        "--model",
        &model(2),
        "--map",
        "two_to_one",
        "--options",
        "buggy_delete",
        "--expect",
        "false",
    ])?;
    let Body::Refinement(rr) = &r.body else { return Err("not a refinement report".into()) };
    let step = rr.counterexample.as_ref().ok_or("cli: no counterexample")?;
    ensure(!rr.holds && step.rule.as_deref() == Some("del_data"), format!("cli: {step:?}"))?;
    Ok(format!("buggy: {} ({}); fixed holds", c.firing, c.reason))
}

fn criterion_5() -> Outcome {
    let holds = check_priv_pres(Options::default(), Bounds::default()).map_err(|e| e.to_string())?;
    ensure(holds, "ownership not preserved")?;
    Ok("AG patient owns datum holds on level 3".into())
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for (insider, consensus) in [(false, false), (true, false), (true, true)] {
        let cfg = HcConfig {
            options: Options { consensus_put: consensus, ..Options::default() },
            insider,
            eve_knows_datum: false,
        };
        let r = check_ledger_con(&cfg, Bounds::default()).map_err(|e| e.to_string())?;
        ensure(r.holds(), format!("{r:?}"))?;
        parts.push(format!("{} {} states", r.model, r.states));
    }
    Ok(format!("no conflicts, invariant everywhere: {}", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let it = run_iteration(4, Options::default(), Bounds::default()).map_err(|e| e.to_string())?;
    let insider = it.find_attack("hc-insider", "EF overwrite").ok_or("no insider check")?.holds;
    let consensus = it.find_attack("hc-insider-consensus", "EF overwrite").ok_or("no consensus check")?.holds;
    ensure(insider && !consensus, format!("insider {insider}, consensus {consensus}"))?;
    let last = it.rows.last().ok_or("no rows")?;
    ensure(last.attack == "no attack known yet", format!("last row {last:?}"))?;
    Ok("overwrite reachable for the insider, unreachable with consensus".into())
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, max_global_rejects: 100_000, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Runs `cases` accepted cases and counts them.
fn suite<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String>
where
    S::Value: std::fmt::Debug,
{
    let count = Cell::new(0u32);
    let res = runner(cases).run(&strategy, |v| {
        test(v)?;
        count.set(count.get() + 1);
        Ok(())
    });
    match res {
        Ok(()) if count.get() == cases => Ok(format!("{name} {cases}/{cases}")),
        Ok(()) => Err(format!("{name}: ran {} of {cases}", count.get())),
        Err(TestError::Fail(why, v)) => Err(format!("{name}: {why} on {v:?}")),
        Err(TestError::Abort(why)) => Err(format!("{name}: aborted, {why}")),
    }
}

fn image(map: &BTreeMap<u32, u32>, s: &BTreeSet<u32>) -> BTreeSet<u32> {
    s.iter().map(|x| map[x]).collect()
}

fn universe(g: &common::Graph, init: &BTreeSet<u32>) -> KripkeStructure<ExplicitSystem<u32>> {
    KripkeStructure::over_universe(g.system(), g.nodes(), init.clone(), Bounds::default()).unwrap()
}

fn direct_oracle(r: &RefinementInstance) -> bool {
    r.refined_init.iter().all(|&s0| {
        let a0 = r.map[&s0];
        let reach = closure_oracle(&r.abstract_graph, &[a0].into());
        r.abstract_init.contains(&a0)
            && closure_oracle(&r.refined, &[s0].into()).iter().all(|s| reach.contains(&r.map[s]))
    })
}

fn criterion_8() -> Outcome {
    let results = [
        suite("EF/BFS", 200, (graph(50, 3), tape()), |(g, mut t)| {
            let m = KripkeStructure::over_universe(g.system(), g.nodes(), [0].into(), Bounds::default()).unwrap();
            let goal = subset(g.n, &mut t);
            let ef = eval_ctl(&m, &CtlFormula::ef(CtlFormula::atom(goal.clone()))).unwrap();
            prop_assert_eq!(ef, ef_oracle(&g, &g.nodes(), &goal));
            Ok(())
        }),
        suite("AT_EF", 500, (graph(15, 3), tape()), |(g, mut t)| {
            let g = g.totalized();
            let from = subset(g.n, &mut t);
            let tree = valid_tree(&g, from, 3, &mut t);
            prop_assert!(is_valid(&tree, &g.system()));
            prop_assert!(check_at_ef(&tree, g.system(), Bounds::default()).unwrap());
            Ok(())
        }),
        suite("completeness", 200, (graph(15, 2), tape()), |(g, mut t)| {
            let mut init = subset(g.n, &mut t);
            init.insert(0);
            let m = build_kripke(&init, g.system(), Bounds::default()).unwrap();
            let goal = subset(g.n, &mut t);
            prop_assume!(init.is_subset(&ef_oracle(&g, &m.state_set(), &goal)));
            let tree = synthesize(&m, &init, &goal).unwrap();
            prop_assert!(tree.is_some());
            let tree = tree.unwrap();
            prop_assert_eq!(attack_of(&tree), (init, goal));
            prop_assert!(is_valid(&tree, &g.system()));
            Ok(())
        }),
        suite("refinement chain", 100, refinement_instance(), |r| {
            let k = universe(&r.abstract_graph, &r.abstract_init);
            let k2 = universe(&r.refined, &r.refined_init);
            let strong = check_strong_mt(&k, &r.map, &k2).unwrap().holds();
            let reachable = check_strong_mt_reachable(&k, &r.map, &k2).unwrap().holds();
            let direct = check_refinement_direct(&k, &r.map, &k2).unwrap().holds();
            prop_assert!(!strong || reachable);
            prop_assert!(!reachable || direct);
            prop_assert_eq!(direct, direct_oracle(&r));
            Ok(())
        }),
        suite(
            "fmap delete lemma",
            1000,
            (
                proptest::collection::btree_set((0u8..6, 0u8..6), 1..12),
                any::<u8>(),
                proptest::collection::vec(0u8..4, 1..8),
                any::<prop::sample::Index>(),
            ),
            |(s, kind, table, pick)| {
                let f = transformer(kind, &table);
                let n = *pick.get(&s.iter().collect::<Vec<_>>());
                let fnv = f(n);
                let pruned: BTreeSet<(u8, u8)> = s.iter().filter(|y| f(y) != fnv).copied().collect();
                let mut rhs = fmap_set(&f, &s);
                rhs.remove(&fnv);
                prop_assert_eq!(fmap_set(&f, &pruned), rhs);
                Ok(())
            },
        ),
        suite("transfer", 100, (refinement_instance(), tape()), |(r, mut t)| {
            let k = universe(&r.abstract_graph, &r.abstract_init);
            let k2 = build_kripke(&r.refined_init, r.refined.system(), Bounds::default()).unwrap();
            let target: BTreeSet<u32> = subset(r.refined.n, &mut t).intersection(&k2.state_set()).copied().collect();
            match transfer_ef(&k, &r.map, &k2, &target) {
                Ok(res) => {
                    let refined_ef = r.refined_init.is_subset(&ef_oracle(&r.refined, &r.refined.nodes(), &target));
                    let abs_goal = image(&r.map, &target);
                    let abstract_ef =
                        r.abstract_init.is_subset(&ef_oracle(&r.abstract_graph, &r.abstract_graph.nodes(), &abs_goal));
                    prop_assert_eq!(res.refined_ef, refined_ef);
                    prop_assert_eq!(res.abstract_ef, abstract_ef);
                    prop_assert!(!refined_ef || abstract_ef);
                }
                Err(Error::NotARefinement) => prop_assert!(!direct_oracle(&r)),
                Err(Error::InitialCoverage) => {
                    prop_assert!(!r.abstract_init.is_subset(&image(&r.map, &r.refined_init)))
                }
                Err(e) => prop_assert!(false, "unexpected error {}", e),
            }
            Ok(())
        }),
    ];
    let mut passed = Vec::new();
    for r in results {
        passed.push(r?);
    }
    Ok(passed.join(", "))
}

fn main() -> ExitCode {
    let criteria: [fn() -> Outcome; 8] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        match c() {
            Ok(detail) => println!("criterion {}: PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 8 criteria fail");
        ExitCode::FAILURE
    }
}
