//! Command reports and their text rendering.

use std::fmt::Write;

use refrisk_core::casestudy::{render_table, CaseStudyReport, ModelStats, Trace};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: bool,
    pub expected: bool,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    Parse(ParseSummary),
    Ctl(CtlReport),
    Attack(AttackReport),
    Refinement(RefinementReport),
    CaseStudy(CaseStudyReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct ParseSummary {
    pub level: u8,
    pub locations: usize,
    pub edges: usize,
    pub identities: usize,
    pub data: usize,
    pub sets: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CtlReport {
    pub model: ModelStats,
    pub formula: String,
    pub holds: bool,
    pub satisfying_states: usize,
    /// For `EF g` that holds, a path into `g`; for `AG g` that fails, a path
    /// out of `g`.
    pub witness: Option<Trace>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackReport {
    pub model: ModelStats,
    pub mode: String,
    pub goal: String,
    /// Validate: the tree is valid. Synthesize: a tree was found.
    pub holds: bool,
    pub tree: Option<String>,
    pub tree_document: Option<String>,
    pub tree_valid: Option<bool>,
    /// Every initial state of the tree reaches its target set.
    pub reaches_goal: Option<bool>,
    pub witness: Option<Trace>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub reason: String,
    pub refined_step: (String, String),
    pub abstract_images: (String, String),
    pub rule: Option<String>,
    pub firing: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub map: String,
    pub method: String,
    pub abstract_model: ModelStats,
    pub refined_model: ModelStats,
    pub holds: bool,
    pub pairs_checked: usize,
    pub counterexample: Option<StepReport>,
}

fn stats_line(m: &ModelStats) -> String {
    let trunc = if m.truncated { ", truncated" } else { "" };
    format!("{} (level {}): {} states, {} transitions{trunc}", m.name, m.level, m.states, m.transitions)
}

fn trace_lines(out: &mut String, title: &str, t: &Trace) {
    let _ = writeln!(out, "{title}:");
    let _ = writeln!(out, "  0. {}", t.start);
    for (i, s) in t.steps.iter().enumerate() {
        let _ = writeln!(out, "  {}. [{}] {}", i + 1, s.firing, s.state);
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

impl Report {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        match &self.body {
            Body::Parse(p) => {
                let _ = writeln!(
                    out,
                    "level {}: {} locations, {} edges, {} identities, {} data",
                    p.level, p.locations, p.edges, p.identities, p.data
                );
                if !p.sets.is_empty() {
                    let _ = writeln!(out, "sets: {}", p.sets.join(", "));
                }
            }
            Body::Ctl(c) => {
                let _ = writeln!(out, "model: {}", stats_line(&c.model));
                let _ = writeln!(out, "formula: {}", c.formula);
                let _ = writeln!(out, "satisfying states: {}", c.satisfying_states);
                let _ = writeln!(out, "holds: {}", yes(c.holds));
                if let Some(t) = &c.witness {
                    trace_lines(&mut out, "witness", t);
                }
            }
            Body::Attack(a) => {
                let _ = writeln!(out, "model: {}", stats_line(&a.model));
                let _ = writeln!(out, "mode: {}", a.mode);
                let _ = writeln!(out, "goal: {}", a.goal);
                if let Some(t) = &a.tree {
                    let _ = writeln!(out, "tree:");
                    for line in t.lines() {
                        let _ = writeln!(out, "  {line}");
                    }
                }
                if let Some(v) = a.tree_valid {
                    let _ = writeln!(out, "valid: {}", yes(v));
                }
                if let Some(v) = a.reaches_goal {
                    let _ = writeln!(out, "reaches goal: {}", yes(v));
                }
                if let Some(n) = &a.note {
                    let _ = writeln!(out, "{n}");
                }
                if let Some(t) = &a.witness {
                    trace_lines(&mut out, "witness", t);
                }
            }
            Body::Refinement(r) => {
                let _ = writeln!(out, "abstract: {}", stats_line(&r.abstract_model));
                let _ = writeln!(out, "refined: {}", stats_line(&r.refined_model));
                let _ = writeln!(out, "map: {}, method: {}", r.map, r.method);
                let _ = writeln!(out, "pairs checked: {}", r.pairs_checked);
                let _ = writeln!(out, "holds: {}", yes(r.holds));
                if let Some(c) = &r.counterexample {
                    let _ = writeln!(out, "counterexample ({}):", c.reason);
                    if let Some(f) = &c.firing {
                        let _ = writeln!(out, "  step: {f}");
                    }
                    let _ = writeln!(out, "  refined:  {}", c.refined_step.0);
                    let _ = writeln!(out, "         -> {}", c.refined_step.1);
                    let _ = writeln!(out, "  images:   {}", c.abstract_images.0);
                    let _ = writeln!(out, "         -> {}", c.abstract_images.1);
                }
            }
            Body::CaseStudy(cs) => case_study_text(&mut out, cs),
        }
        let _ = writeln!(out, "verdict: {} (expected {})", yes(self.verdict), yes(self.expected));
        out
    }
}

fn case_study_text(out: &mut String, cs: &CaseStudyReport) {
    out.push_str(&render_table(cs.rows()));
    for it in &cs.iterations {
        let _ = writeln!(out, "\niteration {}", it.iteration);
        for m in &it.models {
            let _ = writeln!(out, "  model {}", stats_line(m));
        }
        for a in &it.attacks {
            let valid = if a.tree.is_some() { format!(", tree valid: {}", yes(a.tree_valid)) } else { String::new() };
            let _ = writeln!(out, "  {} on {}: {}{valid}", a.query, a.model, yes(a.holds));
        }
        if let Some(t) = &it.two_step_tree {
            let _ = writeln!(out, "  two-step tree (valid: {}):", yes(it.two_step_tree_valid == Some(true)));
            for line in t.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
        if let Some(z) = it.zero_step_witness {
            let _ = writeln!(out, "  initial state already in shc: {}", yes(z));
        }
        if let Some(o) = it.ownership_preserved {
            let _ = writeln!(out, "  ownership preserved: {}", yes(o));
        }
        if let Some(r) = &it.refinement {
            let _ = writeln!(
                out,
                "  refinement {} ({}): {} after {} pairs; EF {} refined {}, abstract {}",
                r.map,
                r.method,
                yes(r.holds),
                r.pairs_checked,
                r.property,
                yes(r.refined_ef),
                yes(r.abstract_ef)
            );
            if let Some(c) = &r.counterexample {
                let _ = writeln!(out, "    counterexample: {c}");
            }
        }
    }
    if cs.priv_pres.is_some() || !cs.ledger_con.is_empty() || cs.regression.is_some() {
        let _ = writeln!(out, "\nchecks");
    }
    if let Some(p) = cs.priv_pres {
        let _ = writeln!(out, "  ownership preserved on all paths (level 3): {}", yes(p));
    }
    for l in &cs.ledger_con {
        let _ = writeln!(
            out,
            "  ledger consistency on {}: {} ({} states, {} label conflicts, {} invariant violations)",
            l.model,
            yes(l.holds()),
            l.states,
            l.label_conflicts,
            l.invariant_violations
        );
    }
    if let Some(r) = &cs.regression {
        let _ = writeln!(out, "  delete regression: fixed rule holds: {}, buggy rule holds: {}", yes(r.fixed_holds), yes(r.buggy_holds));
        if let Some(c) = &r.counterexample {
            let _ = writeln!(out, "    {} ({}), doubly labeled: {}", c.firing, c.reason, yes(c.doubly_labeled));
            let _ = writeln!(out, "    refined:  {}", c.refined_step.0);
            let _ = writeln!(out, "           -> {}", c.refined_step.1);
            let _ = writeln!(out, "    images:   {}", c.abstract_images.0);
            let _ = writeln!(out, "           -> {}", c.abstract_images.1);
        }
    }
}
