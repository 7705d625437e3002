use std::path::PathBuf;
use std::process::Command as Process;

use clap::Parser;
use proptest::prelude::*;
use refrisk::expr::{parse_formula, Formula, Pred, Temporal};
use refrisk::report::Body;
use refrisk::schema::parse_model;
use refrisk::{run, Cli, CliError};
use refrisk_core::casestudy::{hc_spec, HcConfig};
use refrisk_core::infra::Action;
use refrisk_core::model::Level;

fn model(n: u8) -> String {
    format!("{}/models/hc_level{n}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn read_model(n: u8) -> String {
    std::fs::read_to_string(model(n)).unwrap()
}

fn cli(args: &[&str]) -> Cli {
    Cli::parse_from(std::iter::once("refrisk").chain(args.iter().copied()))
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn schema_error(text: &str) -> (usize, String, String) {
    match parse_model(text).unwrap_err() {
        CliError::Schema { line, path, message } => (line, path, message),
        other => panic!("expected a schema error, got {other}"),
    }
}

#[test]
fn bundled_models_match_the_builtin_scenario() {
    for n in 1..=4 {
        let f = parse_model(&read_model(n)).unwrap();
        let level = Level::from_number(n).unwrap();
        assert_eq!(f.spec, hc_spec(level, &HcConfig::default()), "level {n}");
        assert_eq!(f.spec.locations.len(), 4);
        assert_eq!(f.spec.edges.len(), 3);
    }
}

#[test]
fn undeclared_edge_endpoint() {
    let text = read_model(1).replace(r#"["cloud", "hospital"]"#, r#"["cloud", "moon"]"#);
    let (line, path, message) = schema_error(&text);
    let expected_line = text.lines().position(|l| l.contains("moon")).unwrap() + 1;
    assert_eq!(line, expected_line);
    assert_eq!(path, "graph.edges[2]");
    assert!(message.contains("moon"));
}

#[test]
fn level_four_needs_a_ledger() {
    let text = read_model(4);
    let cut = text.find("[[ledger]]").unwrap();
    let end = text.find("[sets]").unwrap();
    let without = format!("{}{}", &text[..cut], &text[end..]);
    let (_, path, _) = schema_error(&without);
    assert_eq!(path, "ledger");
    let store = text.replace("[[ledger]]", "[[store]]").replace("locations = [\"cloud\"]", "location = \"cloud\"");
    assert_eq!(schema_error(&store).1, "store");
    let ledger_at_two = read_model(2)
        .replace("[[store]]\nlocation = \"cloud\"", "[[ledger]]\nlocations = [\"cloud\"]");
    assert_eq!(schema_error(&ledger_at_two).1, "ledger");
}

#[test]
fn schema_errors_name_the_place() {
    let text = read_model(1).replace("level = 1", "level = 1\nflavour = \"mint\"");
    let (line, _, message) = schema_error(&text);
    assert_eq!(line, 4);
    assert!(message.contains("flavour"));

    let text = read_model(2).replace("schema = 1", "schema = 7");
    assert!(schema_error(&text).2.contains("version 7"));

    let text = read_model(1).replace("when = \"has PIN\"", "when = \"has\"");
    let (line, path, _) = schema_error(&text);
    assert_eq!(path, "policy[1].when");
    assert_eq!(line, text.lines().position(|l| l.contains("when = \"has\"")).unwrap() + 1);

    let text = read_model(1).replace("when = \"has PIN\"", "when = \"has TOKEN\"");
    assert!(schema_error(&text).2.contains("TOKEN"));

    let text = read_model(2).replace("owner = \"Patient\"\n", "");
    assert!(schema_error(&text).2.contains("needs an owner"));

    let text = read_model(3).replace(r#"transformer = "identity""#, r#"transformer = "shell", value = "rm""#);
    assert!(schema_error(&text).2.contains("unknown transformer"));

    let text = read_model(1).replace("actions = [\"get\", \"move\", \"eval\", \"put\"]", "actions = [\"fly\"]");
    assert!(schema_error(&text).2.contains("fly"));

    let text = read_model(1).replace("Eve = \"home\"", "Mallory = \"home\"");
    assert_eq!(schema_error(&text).1, "actors.placements.Mallory");

    let text = read_model(1).replace("HC = \"{Eve at cloud}\"", "HC = \"{Eve at\"");
    assert_eq!(schema_error(&text).1, "sets.HC");
}

#[test]
fn transformer_catalog() {
    let text = read_model(3).replace(
        r#"label_funs = [{ name = "id", transformer = "identity" }]"#,
        r#"label_funs = [{ name = "avg", transformer = "constant", value = "avg" }, { name = "tag", transformer = "suffix", value = "'" }]"#,
    );
    let f = parse_model(&text).unwrap();
    assert_eq!(f.spec.label_funs.len(), 2);
}

#[test]
fn ctl_queries() {
    let r = run(&cli(&["check-ctl", "--model", &model(1), "EF shc"])).unwrap();
    assert!(r.verdict);
    let Body::Ctl(c) = &r.body else { panic!() };
    assert!(c.holds && c.witness.is_some());

    let r = run(&cli(&["check-ctl", "--model", &model(1), "AG true"])).unwrap();
    assert!(r.verdict);

    let r = run(&cli(&["check-ctl", "--model", &model(4), "AG not HC"])).unwrap();
    assert!(!r.verdict);
    let Body::Ctl(c) = &r.body else { panic!() };
    let w = c.witness.as_ref().unwrap();
    assert!(w.steps.last().unwrap().state.contains("Eve@cloud"));
    assert_eq!(w.steps.last().unwrap().rule, "move");

    let r = run(&cli(&["check-ctl", "--model", &model(3), "EF {Eve owns 42}"])).unwrap();
    assert!(!r.verdict);
}

#[test]
fn ctl_usage_errors() {
    for f in ["EF nothing", "EF {Eve at moon}", "EF {Zed at cloud}", "EF (", "states[99999]"] {
        let err = run(&cli(&["check-ctl", "--model", &model(1), f])).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)), "{f}: {err}");
    }
}

const TWO_STEP: &str = r#"schema = 1

[tree]
node = "and"
from = "Ihc"
to = "shc"

[[tree.children]]
node = "base"
from = "Ihc"
to = "HC"

[[tree.children]]
node = "base"
from = "HC"
to = "shc"
"#;

#[test]
fn two_step_tree_document() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_temp(&dir, "two.toml", TWO_STEP);
    let r = run(&cli(&["attack", "validate", "--model", &model(1), "--tree", tree.to_str().unwrap(), "--goal", "shc"]))
        .unwrap();
    assert!(r.verdict);
    let Body::Attack(a) = &r.body else { panic!() };
    assert_eq!(a.tree.as_deref(), Some("AND(Ihc, shc)\n  N(Ihc, HC)\n  N(HC, shc)\n"));
    assert_eq!(a.reaches_goal, Some(true));

    // children of an and node must chain
    let broken = write_temp(&dir, "broken.toml", &TWO_STEP.replace("from = \"HC\"", "from = \"Ihc\""));
    let r = run(&cli(&["attack", "validate", "--model", &model(1), "--tree", broken.to_str().unwrap()])).unwrap();
    assert!(!r.verdict);

    let wrong_goal =
        run(&cli(&["attack", "validate", "--model", &model(1), "--tree", tree.to_str().unwrap(), "--goal", "HC"])).unwrap();
    assert!(!wrong_goal.verdict);

    let skip = write_temp(&dir, "skip.toml", "schema = 1\n[tree]\nnode = \"base\"\nfrom = \"Ihc\"\nto = \"HC and {Eve at home}\"\n");
    let r = run(&cli(&["attack", "validate", "--model", &model(1), "--tree", skip.to_str().unwrap()])).unwrap();
    assert!(!r.verdict);
}

#[test]
fn malformed_tree_documents() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("kind.toml", "schema = 1\n[tree]\nnode = \"xor\"\nfrom = \"Ihc\"\nto = \"HC\"\n"),
        ("missing.toml", "schema = 1\n[tree]\nnode = \"base\"\nfrom = \"Ihc\"\n"),
        ("version.toml", "schema = 2\n[tree]\nnode = \"base\"\nfrom = \"Ihc\"\nto = \"HC\"\n"),
        (
            "children.toml",
            "schema = 1\n[tree]\nnode = \"base\"\nfrom = \"Ihc\"\nto = \"HC\"\n[[tree.children]]\nnode = \"base\"\nfrom = \"Ihc\"\nto = \"HC\"\n",
        ),
    ] {
        let p = write_temp(&dir, name, text);
        let err = run(&cli(&["attack", "validate", "--model", &model(1), "--tree", p.to_str().unwrap()])).unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }), "{name}: {err}");
    }
}

#[test]
fn synthesized_trees_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("put.toml");
    let r = run(&cli(&["attack", "synthesize", "--model", &model(3), "--goal", "put_attack", "--emit-tree", out.to_str().unwrap()]))
        .unwrap();
    assert!(r.verdict);
    let r = run(&cli(&["attack", "validate", "--model", &model(3), "--tree", out.to_str().unwrap(), "--goal", "put_attack"]))
        .unwrap();
    assert!(r.verdict);

    let out = dir.path().join("hc.toml");
    let r = run(&cli(&["attack", "synthesize", "--model", &model(4), "--goal", "HC", "--emit-tree", out.to_str().unwrap()]))
        .unwrap();
    let Body::Attack(a) = &r.body else { panic!() };
    assert_eq!(a.tree.as_deref(), Some("AND(init, HC)\n  N(init, HC)\n"));
    let back = run(&cli(&["attack", "validate", "--model", &model(4), "--tree", out.to_str().unwrap()])).unwrap();
    assert!(back.verdict);
}

#[test]
fn unreachable_goal() {
    let r = run(&cli(&["attack", "synthesize", "--model", &model(3), "--goal", "{Eve owns 42}"])).unwrap();
    assert!(!r.verdict);
    assert!(r.text().contains("no attack under bounds"));
}

#[test]
fn refinement_commands() {
    let r = run(&cli(&["check-refinement", "--abstract", &model(3), "--model", &model(3), "--map", "identity"])).unwrap();
    assert!(r.verdict);
    let r = run(&cli(&["check-refinement", "--abstract", &model(3), "--model", &model(4), "--map", "four_to_three", "--method", "direct"]))
        .unwrap();
    assert!(r.verdict);
    let err = run(&cli(&["check-refinement", "--abstract", &model(1), "--model", &model(3), "--map", "two_to_one"])).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    let err = run(&cli(&["check-refinement", "--abstract", &model(1), "--model", &model(3), "--map", "identity"])).unwrap_err();
    assert!(err.to_string().contains("same level"));
}

#[test]
fn consensus_row() {
    let r = run(&cli(&["case-study", "4", "--skip-checks", "--options", "consensus_put"])).unwrap();
    assert!(r.verdict);
    assert!(r.text().contains("| Consensus (for example Nakamoto) blockchain | no attack known yet |"));
    let one = run(&cli(&["case-study", "1", "--skip-checks"])).unwrap();
    let text = one.text();
    let table: Vec<&str> = text.lines().filter(|l| l.starts_with("| ")).collect();
    assert_eq!(table.len(), 2);
}

fn binary(args: &[&str]) -> (i32, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_refrisk")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn exit_codes() {
    assert_eq!(binary(&["check-ctl", "--model", &model(1), "EF shc"]).0, 0);
    assert_eq!(binary(&["check-ctl", "--model", &model(1), "EF shc", "--expect", "false"]).0, 1);
    assert_eq!(binary(&["check-ctl", "--model", &model(3), "EF {Eve owns 42}"]).0, 1);
    assert_eq!(binary(&["check-ctl", "--model", &model(3), "EF {Eve owns 42}", "--expect", "false"]).0, 0);
    assert_eq!(binary(&["check-ctl", "--model", "/nonexistent.toml", "EF shc"]).0, 2);
    assert_eq!(binary(&["check-ctl", "--model", &model(1), "EF (("]).0, 2);
    assert_eq!(binary(&["frobnicate"]).0, 2);
    assert_eq!(binary(&["check-ctl", "--model", &model(1), "EF shc", "--state-cap", "3"]).0, 2);
}

#[test]
fn reports_are_byte_identical() {
    for args in [
        vec!["check-ctl", "--model", &model(4), "EF HC"],
        vec!["attack", "synthesize", "--model", &model(3), "--goal", "HC", "--format", "structured"],
        vec!["case-study", "1", "3", "--skip-checks", "--format", "structured"],
    ] {
        let a = binary(&args);
        let b = binary(&args);
        assert_eq!(a.0, 0);
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn structured_output_is_json() {
    let (_, out) = binary(&["check-ctl", "--model", &model(1), "EF HC", "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "ctl");
    assert_eq!(v["holds"], true);
    assert_eq!(v["witness"]["steps"][0]["rule"], "move");
}

fn pred() -> impl Strategy<Value = Pred> {
    let name = prop::sample::select(vec!["Eve", "Patient", "42", "cloud", "home"]);
    prop_oneof![
        (name.clone(), name.clone()).prop_map(|(s, l)| Pred::At { subject: s.into(), location: l.into() }),
        (name.clone(), prop::sample::select(Action::ALL.to_vec()), name.clone())
            .prop_map(|(a, action, l)| Pred::Enabled { actor: a.into(), action, location: l.into() }),
        (name.clone(), name).prop_map(|(a, d)| Pred::Owns { actor: a.into(), datum: d.into() }),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        Just(Formula::Init),
        prop::sample::select(vec!["HC", "shc", "x_1"]).prop_map(|n| Formula::Name(n.into())),
        prop::collection::vec(0usize..50, 0..3).prop_map(Formula::States),
        pred().prop_map(Formula::Pred),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec![Temporal::EX, Temporal::AX, Temporal::EF, Temporal::AG]), inner.clone())
                .prop_map(|(t, f)| Formula::Temporal(t, Box::new(f))),
            inner.clone().prop_map(|f| Formula::Not(Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
        ]
    })
}

// Right-nested conjunctions print like left-nested ones; compare the
// printed forms, which fix the meaning.
proptest! {
    #[test]
    fn formulas_print_and_parse_back(f in formula()) {
        let printed = f.to_string();
        let back = parse_formula(&printed).unwrap();
        prop_assert_eq!(back.to_string(), printed);
    }
}

#[test]
fn bundled_shc_matches_the_global_policy() {
    use refrisk_core::casestudy::{scenario_four, scenario_one, scenario_three, scenario_two};
    let cfg = HcConfig::default();
    let b = refrisk_core::kripke::Bounds::default();
    let expected = [
        scenario_one(&cfg, b).unwrap().shc.len(),
        scenario_two(&cfg, b).unwrap().shc.len(),
        scenario_three(&cfg, b).unwrap().shc.len(),
        scenario_four(&cfg, b).unwrap().shc.len(),
    ];
    for n in 1..=4u8 {
        let r = run(&cli(&["check-ctl", "--model", &model(n), "shc"])).unwrap();
        let Body::Ctl(c) = &r.body else { panic!() };
        assert_eq!(c.satisfying_states, expected[n as usize - 1], "level {n}");
    }
}
