//! Random instances and brute-force oracles shared by the property tests and
//! the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use refrisk_core::attack_tree::AttackTree;
use refrisk_core::kripke::ExplicitSystem;

/// A digraph on `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    pub n: u32,
    pub edges: BTreeSet<(u32, u32)>,
}

impl Graph {
    pub fn system(&self) -> ExplicitSystem<u32> {
        ExplicitSystem::from_edges(self.edges.iter().copied())
    }

    pub fn nodes(&self) -> BTreeSet<u32> {
        (0..self.n).collect()
    }

    pub fn successors(&self, x: u32) -> impl Iterator<Item = u32> + '_ {
        self.edges.range((x, 0)..=(x, u32::MAX)).map(|&(_, y)| y)
    }

    /// Adds a self-loop to every node without successors.
    pub fn totalized(mut self) -> Self {
        for x in 0..self.n {
            if self.successors(x).next().is_none() {
                self.edges.insert((x, x));
            }
        }
        self
    }
}

pub fn graph(max_nodes: u32, density: u32) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        let max_edges = (n * density) as usize;
        proptest::collection::btree_set((0..n, 0..n), 0..=max_edges).prop_map(move |edges| Graph { n, edges })
    })
}

pub fn subset(n: u32, tape: &mut Tape) -> BTreeSet<u32> {
    (0..n).filter(|_| tape.coin(2)).collect()
}

/// A stream of random choices drawn up front, so that instances built from
/// it are deterministic and shrinkable.
#[derive(Debug, Clone)]
pub struct Tape {
    vals: Vec<u32>,
    pos: usize,
}

impl Tape {
    pub fn new(vals: Vec<u32>) -> Self {
        Self { vals, pos: 0 }
    }

    /// A value in `0..bound`; zero once the tape runs out.
    pub fn next(&mut self, bound: u32) -> u32 {
        let v = self.vals.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        if bound == 0 {
            0
        } else {
            v % bound
        }
    }

    /// True with probability `1 / odds`.
    pub fn coin(&mut self, odds: u32) -> bool {
        self.next(odds) == 0
    }

    pub fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs[self.next(xs.len() as u32) as usize].clone()
    }
}

pub fn tape() -> impl Strategy<Value = Tape> {
    proptest::collection::vec(any::<u32>(), 256).prop_map(Tape::new)
}

/// Warshall closure of the adjacency matrix, then the rows of `init`.
#[allow(clippy::needless_range_loop)]
pub fn closure_oracle(g: &Graph, init: &BTreeSet<u32>) -> BTreeSet<u32> {
    let n = g.n as usize;
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        m[i][i] = true;
    }
    for &(a, b) in &g.edges {
        m[a as usize][b as usize] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for &i in init {
        for j in 0..n {
            if m[i as usize][j] {
                out.insert(j as u32);
            }
        }
    }
    out
}

/// States that reach `goal`, by backward breadth-first search over `within`.
pub fn ef_oracle(g: &Graph, within: &BTreeSet<u32>, goal: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut pred: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in &g.edges {
        if within.contains(&a) && within.contains(&b) {
            pred.entry(b).or_default().push(a);
        }
    }
    let mut seen: BTreeSet<u32> = goal.intersection(within).copied().collect();
    let mut queue: VecDeque<u32> = seen.iter().copied().collect();
    while let Some(x) = queue.pop_front() {
        for &p in pred.get(&x).into_iter().flatten() {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
    }
    seen
}

/// Greatest set inside `f ∩ within` closed under successors, by repeatedly
/// removing states with a successor outside it.
pub fn ag_oracle(g: &Graph, within: &BTreeSet<u32>, f: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut cur: BTreeSet<u32> = f.intersection(within).copied().collect();
    loop {
        let bad: Vec<u32> =
            cur.iter().copied().filter(|&x| g.successors(x).any(|y| within.contains(&y) && !cur.contains(&y))).collect();
        if bad.is_empty() {
            return cur;
        }
        for x in bad {
            cur.remove(&x);
        }
    }
}

/// A valid tree whose initial set is `from`, over a graph in which every node
/// has a successor.
pub fn valid_tree(g: &Graph, from: BTreeSet<u32>, depth: u32, tape: &mut Tape) -> AttackTree<u32> {
    let extras = |tape: &mut Tape| -> BTreeSet<u32> { (0..g.n).filter(|_| tape.coin(6)).collect() };
    let kind = if depth == 0 { 0 } else { tape.next(3) };
    match kind {
        0 => {
            let mut to = extras(tape);
            for &x in &from {
                let succ: Vec<u32> = g.successors(x).collect();
                to.insert(tape.pick(&succ));
            }
            AttackTree::Base((from, to))
        }
        1 => {
            let k = tape.next(4);
            if k == 0 {
                let mut to = extras(tape);
                to.extend(from.iter().copied());
                return AttackTree::And(Vec::new(), (from, to));
            }
            let mut cur = from.clone();
            let mut children = Vec::new();
            for _ in 0..k {
                let child = valid_tree(g, cur, depth - 1, tape);
                cur = child.goal().1.clone();
                children.push(child);
            }
            AttackTree::And(children, (from, cur))
        }
        _ => {
            if from.is_empty() {
                return AttackTree::Or(Vec::new(), (from, extras(tape)));
            }
            let parts = 1 + tape.next(3);
            let mut buckets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); parts as usize];
            for &x in &from {
                buckets[tape.next(parts) as usize].insert(x);
            }
            buckets.retain(|b| !b.is_empty());
            let mut to = extras(tape);
            let mut children = Vec::new();
            for b in buckets {
                let child = valid_tree(g, b, depth - 1, tape);
                to.extend(child.goal().1.iter().copied());
                children.push(child);
            }
            AttackTree::Or(children, (from, to))
        }
    }
}

/// A refined graph, a state map into an abstract graph built from its image
/// with some edges dropped and some added, and initial sets on both sides.
#[derive(Debug, Clone)]
pub struct RefinementInstance {
    pub refined: Graph,
    pub refined_init: BTreeSet<u32>,
    pub map: BTreeMap<u32, u32>,
    pub abstract_graph: Graph,
    pub abstract_init: BTreeSet<u32>,
}

pub fn refinement_instance() -> impl Strategy<Value = RefinementInstance> {
    (graph(8, 2), 1..=6u32, tape()).prop_map(|(refined, n, mut tape)| {
        let map: BTreeMap<u32, u32> = (0..refined.n).map(|x| (x, tape.next(n))).collect();
        let mut edges = BTreeSet::new();
        for &(a, b) in &refined.edges {
            if !tape.coin(10) {
                edges.insert((map[&a], map[&b]));
            }
        }
        for _ in 0..tape.next(4) {
            edges.insert((tape.next(n), tape.next(n)));
        }
        let mut refined_init = subset(refined.n, &mut tape);
        if refined_init.is_empty() {
            refined_init.insert(0);
        }
        let mut abstract_init: BTreeSet<u32> = refined_init.iter().map(|x| map[x]).collect();
        if tape.coin(8) {
            abstract_init.remove(&map[&0]);
        }
        if tape.coin(8) {
            abstract_init.insert(tape.next(n));
        }
        RefinementInstance { refined, refined_init, map, abstract_graph: Graph { n, edges }, abstract_init }
    })
}

/// One of a few element transformers for the finite-set map law.
pub fn transformer(kind: u8, table: &[u8]) -> impl Fn(&(u8, u8)) -> u8 + '_ {
    move |&(a, b)| match kind % 4 {
        0 => b,
        1 => a,
        2 => a.wrapping_add(b) % 5,
        _ => table[(a as usize + b as usize) % table.len()],
    }
}
