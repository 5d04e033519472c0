//! Bisimulation checkers over finite LTSs: strong step, branching step
//! (divergence-insensitive, Groote–Vaandrager style), and rooted branching
//! step. All three run partition refinement on the disjoint union of the
//! two systems; the rooted variant adds a strong one-step root condition
//! on top of the branching partition.
//!
//! Termination (√) is observable: strong matching requires it exactly,
//! branching matching reaches it through inert τ-steps.

use crate::semantics::{Lts, TAU_LABEL};
use serde_json::json;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strong,
    Branching,
    RootedBranching,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    /// blocks over the disjoint union: left states keep their indices,
    /// right states are offset by the left state count
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Counterexample {
    /// a distinguishing experiment found by the strong game
    Experiment { from_left: bool, tree: Experiment },
    /// a weak trace one side performs and the other cannot
    Trace { from_left: bool, labels: Vec<String>, terminates: bool },
    /// inequivalent, but trace- and termination-compatible within the
    /// search depth: the difference is in the branching structure
    Structural { explanation: String },
}

/// Distinguishing experiment: perform a step, then defeat every answer of
/// the opponent (a branch point), or observe a termination mismatch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Experiment {
    Step { label: String, answers: Vec<Experiment> },
    NoMatch { label: String },
    Termination { leader_terminates: bool },
    DepthLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub relation: Option<Partition>,
    pub counterexample: Option<Counterexample>,
}

impl EquivalenceVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let mut o = serde_json::Map::new();
        o.insert("equivalent".into(), json!(self.equivalent));
        if let Some(p) = &self.relation {
            o.insert("blocks".into(), json!(p.blocks));
        }
        if let Some(c) = &self.counterexample {
            o.insert("counterexample".into(), counterexample_json(c));
        }
        serde_json::Value::Object(o)
    }
}

pub fn counterexample_json(c: &Counterexample) -> serde_json::Value {
    match c {
        Counterexample::Experiment { from_left, tree } => json!({
            "kind": "experiment",
            "leader": if *from_left { "left" } else { "right" },
            "tree": experiment_json(tree),
        }),
        Counterexample::Trace { from_left, labels, terminates } => json!({
            "kind": "trace",
            "leader": if *from_left { "left" } else { "right" },
            "labels": labels,
            "terminates": terminates,
        }),
        Counterexample::Structural { explanation } => json!({
            "kind": "structural",
            "explanation": explanation,
        }),
    }
}

fn experiment_json(e: &Experiment) -> serde_json::Value {
    match e {
        Experiment::Step { label, answers } => json!({
            "step": label,
            "answers": answers.iter().map(experiment_json).collect::<Vec<_>>(),
        }),
        Experiment::NoMatch { label } => json!({ "no_match": label }),
        Experiment::Termination { leader_terminates } => json!({ "termination": leader_terminates }),
        Experiment::DepthLimit => json!({ "depth_limit": true }),
    }
}

/// Disjoint union of two LTSs with interned labels.
struct Union {
    n1: usize,
    n: usize,
    labels: Vec<String>,
    tau: Option<usize>,
    out: Vec<Vec<(usize, usize)>>,
    term: Vec<bool>,
}

impl Union {
    fn new(l1: &Lts, l2: &Lts) -> Union {
        let n1 = l1.n_states();
        let n = n1 + l2.n_states();
        let mut labels: Vec<String> = Vec::new();
        let mut map: BTreeMap<String, usize> = BTreeMap::new();
        let mut out = vec![Vec::new(); n];
        let mut term = vec![false; n];
        let label_id = |labels: &mut Vec<String>, map: &mut BTreeMap<String, usize>, s: &str| -> usize {
            if let Some(&i) = map.get(s) {
                i
            } else {
                let i = labels.len();
                labels.push(s.to_string());
                map.insert(s.to_string(), i);
                i
            }
        };
        for (f, l, t) in &l1.trans {
            let id = label_id(&mut labels, &mut map, l);
            out[*f].push((id, *t));
        }
        for (f, l, t) in &l2.trans {
            let id = label_id(&mut labels, &mut map, l);
            out[n1 + *f].push((id, n1 + *t));
        }
        for &i in &l1.terminating {
            term[i] = true;
        }
        for &i in &l2.terminating {
            term[n1 + i] = true;
        }
        for v in &mut out {
            v.sort();
            v.dedup();
        }
        let tau = map.get(TAU_LABEL).copied();
        Union { n1, n, labels, tau, out, term }
    }

    fn is_tau(&self, l: usize) -> bool {
        Some(l) == self.tau
    }
}

/// Coarsest strong-step partition: signature refinement with termination
/// as the initial splitter.
fn strong_partition(u: &Union) -> Vec<usize> {
    let mut block: Vec<usize> = u.term.iter().map(|&t| usize::from(t)).collect();
    loop {
        let mut sigs: BTreeMap<(usize, BTreeSet<(usize, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0usize; u.n];
        for s in 0..u.n {
            let sig: BTreeSet<(usize, usize)> = u.out[s].iter().map(|&(l, t)| (l, block[t])).collect();
            let key = (block[s], sig);
            let id = sigs.len();
            let e = sigs.entry(key).or_insert(id);
            next[s] = *e;
        }
        if sigs.len() == block.iter().collect::<BTreeSet<_>>().len() {
            return next;
        }
        block = next;
    }
}

/// States inert-τ-reachable from `s` (τ-steps staying inside s's block),
/// including `s` itself.
fn inert_closure(u: &Union, block: &[usize], s: usize) -> Vec<usize> {
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(x) = stack.pop() {
        for &(l, t) in &u.out[x] {
            if u.is_tau(l) && block[t] == block[s] && seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen.into_iter().collect()
}

/// Branching signature: the non-inert (label, target block) observations
/// reachable through inert stuttering, plus the reachable-√ flag.
fn branching_sig(u: &Union, block: &[usize], s: usize) -> (BTreeSet<(usize, usize)>, bool) {
    let mut sig = BTreeSet::new();
    let mut term = false;
    for x in inert_closure(u, block, s) {
        if u.term[x] {
            term = true;
        }
        for &(l, t) in &u.out[x] {
            if u.is_tau(l) && block[t] == block[s] {
                continue;
            }
            sig.insert((l, block[t]));
        }
    }
    (sig, term)
}

/// Coarsest divergence-insensitive branching-step partition.
fn branching_partition(u: &Union) -> Vec<usize> {
    let mut block = vec![0usize; u.n];
    loop {
        let mut sigs: BTreeMap<(usize, BTreeSet<(usize, usize)>, bool), usize> = BTreeMap::new();
        let mut next = vec![0usize; u.n];
        for s in 0..u.n {
            let (sig, term) = branching_sig(u, &block, s);
            let key = (block[s], sig, term);
            let id = sigs.len();
            let e = sigs.entry(key).or_insert(id);
            next[s] = *e;
        }
        if sigs.len() == block.iter().collect::<BTreeSet<_>>().len() {
            return next;
        }
        block = next;
    }
}

fn partition_from_blocks(block: &[usize]) -> Partition {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, &b) in block.iter().enumerate() {
        groups.entry(b).or_default().push(s);
    }
    Partition { blocks: groups.into_values().collect() }
}

pub fn strong_step_bisim(l1: &Lts, l2: &Lts) -> EquivalenceVerdict {
    let u = Union::new(l1, l2);
    let block = strong_partition(&u);
    if block[l1.init] == block[u.n1 + l2.init] {
        EquivalenceVerdict { equivalent: true, relation: Some(partition_from_blocks(&block)), counterexample: None }
    } else {
        let tree = distinguish_strong(&u, &block, l1.init, u.n1 + l2.init, 32);
        EquivalenceVerdict {
            equivalent: false,
            relation: None,
            counterexample: Some(tree),
        }
    }
}

pub fn branching_bisim(l1: &Lts, l2: &Lts) -> EquivalenceVerdict {
    let u = Union::new(l1, l2);
    let block = branching_partition(&u);
    if block[l1.init] == block[u.n1 + l2.init] {
        EquivalenceVerdict { equivalent: true, relation: Some(partition_from_blocks(&block)), counterexample: None }
    } else {
        EquivalenceVerdict {
            equivalent: false,
            relation: None,
            counterexample: Some(weak_counterexample(&u, l1.init, u.n1 + l2.init)),
        }
    }
}

pub fn rooted_branching_bisim(l1: &Lts, l2: &Lts) -> EquivalenceVerdict {
    let u = Union::new(l1, l2);
    let block = branching_partition(&u);
    let (r1, r2) = (l1.init, u.n1 + l2.init);
    let root_ok = u.term[r1] == u.term[r2]
        && strong_match_into(&u, &block, r1, r2)
        && strong_match_into(&u, &block, r2, r1);
    if root_ok {
        EquivalenceVerdict { equivalent: true, relation: Some(partition_from_blocks(&block)), counterexample: None }
    } else {
        let cex = if block[r1] != block[r2] {
            weak_counterexample(&u, r1, r2)
        } else {
            root_counterexample(&u, &block, r1, r2)
        };
        EquivalenceVerdict { equivalent: false, relation: None, counterexample: Some(cex) }
    }
}

pub fn check(l1: &Lts, l2: &Lts, mode: Mode) -> EquivalenceVerdict {
    match mode {
        Mode::Strong => strong_step_bisim(l1, l2),
        Mode::Branching => branching_bisim(l1, l2),
        Mode::RootedBranching => rooted_branching_bisim(l1, l2),
    }
}

/// Every move of `from` is matched by a move of `to` with the same label
/// into the same branching block.
fn strong_match_into(u: &Union, block: &[usize], from: usize, to: usize) -> bool {
    u.out[from].iter().all(|&(l, t)| u.out[to].iter().any(|&(l2, t2)| l2 == l && block[t2] == block[t]))
}

/// Quotient by the strong or branching partition. Branching quotients drop
/// inert τ-transitions.
pub fn minimize(l: &Lts, mode: Mode) -> Lts {
    let empty = Lts { states: vec![], init: 0, trans: vec![], terminating: BTreeSet::new() };
    let u = Union::new(l, &empty);
    let branching = !matches!(mode, Mode::Strong);
    let block = if branching { branching_partition(&u) } else { strong_partition(&u) };
    // renumber blocks by first occurrence so output is deterministic
    let mut order: Vec<usize> = Vec::new();
    let mut renum: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..u.n {
        renum.entry(block[s]).or_insert_with(|| {
            order.push(s);
            order.len() - 1
        });
    }
    let nb = order.len();
    let mut trans: Vec<(usize, String, usize)> = Vec::new();
    for s in 0..u.n {
        for &(lid, t) in &u.out[s] {
            if branching && u.is_tau(lid) && block[s] == block[t] {
                continue;
            }
            trans.push((renum[&block[s]], u.labels[lid].clone(), renum[&block[t]]));
        }
    }
    trans.sort();
    trans.dedup();
    let mut terminating = BTreeSet::new();
    for s in 0..u.n {
        let b = renum[&block[s]];
        let t = if branching { branching_sig(&u, &block, s).1 } else { u.term[s] };
        if t {
            terminating.insert(b);
        }
    }
    let states = (0..nb).map(|b| l.states[order[b]].clone()).collect();
    Lts { states, init: renum[&block[l.init]], trans, terminating }
}

/// Recursive strong distinguishing experiment between union states `i`
/// (leader) and `j`, valid whenever their strong blocks differ.
fn distinguish_strong(u: &Union, block: &[usize], i: usize, j: usize, depth: usize) -> Counterexample {
    let from_left = i < u.n1;
    let tree = distinguish_rec(u, block, i, j, depth);
    Counterexample::Experiment { from_left, tree }
}

fn distinguish_rec(u: &Union, block: &[usize], i: usize, j: usize, depth: usize) -> Experiment {
    if u.term[i] != u.term[j] {
        return Experiment::Termination { leader_terminates: u.term[i] };
    }
    if depth == 0 {
        return Experiment::DepthLimit;
    }
    // a leader move every answer of which lands in a different block
    for &(l, it) in &u.out[i] {
        let answers: Vec<usize> = u.out[j].iter().filter(|&&(l2, _)| l2 == l).map(|&(_, jt)| jt).collect();
        if answers.is_empty() {
            return Experiment::NoMatch { label: u.labels[l].clone() };
        }
        if answers.iter().all(|&jt| block[jt] != block[it]) {
            return Experiment::Step {
                label: u.labels[l].clone(),
                answers: answers.iter().map(|&jt| distinguish_rec(u, block, it, jt, depth - 1)).collect(),
            };
        }
    }
    // the distinguishing move belongs to the other side: swap the game
    for &(l, jt) in &u.out[j] {
        let answers: Vec<usize> = u.out[i].iter().filter(|&&(l2, _)| l2 == l).map(|&(_, it)| it).collect();
        if answers.is_empty() {
            return Experiment::NoMatch { label: u.labels[l].clone() };
        }
        if answers.iter().all(|&it| block[it] != block[jt]) {
            return Experiment::Step {
                label: u.labels[l].clone(),
                answers: answers.iter().map(|&it| distinguish_rec(u, block, jt, it, depth - 1)).collect(),
            };
        }
    }
    Experiment::DepthLimit
}

fn tau_closure(u: &Union, set: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = set.clone();
    let mut stack: Vec<usize> = set.iter().copied().collect();
    while let Some(x) = stack.pop() {
        for &(l, t) in &u.out[x] {
            if u.is_tau(l) && seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen
}

/// Shortest weak trace (visible labels, with a final termination
/// observation) that one root can perform and the other cannot; falls back
/// to a structural report when the systems are weak-trace compatible.
fn weak_counterexample(u: &Union, r1: usize, r2: usize) -> Counterexample {
    for (leader, follower, from_left) in [(r1, r2, true), (r2, r1, false)] {
        if let Some((labels, terminates)) = weak_trace_search(u, leader, follower) {
            return Counterexample::Trace { from_left, labels, terminates };
        }
    }
    Counterexample::Structural {
        explanation: "no distinguishing weak trace within depth 32; the systems differ in branching structure (a τ-choice point is committed on one side only)".into(),
    }
}

fn weak_trace_search(u: &Union, leader: usize, follower: usize) -> Option<(Vec<String>, bool)> {
    type Key = (usize, BTreeSet<usize>);
    let start: Key = (leader, tau_closure(u, &BTreeSet::from([follower])));
    let mut seen: BTreeSet<Key> = BTreeSet::from([start.clone()]);
    let mut queue: VecDeque<(Key, Vec<String>)> = VecDeque::from([(start, vec![])]);
    while let Some(((i, js), trace)) = queue.pop_front() {
        if trace.len() > 32 {
            break;
        }
        // termination observation: leader weakly terminates, follower set cannot
        let leader_term = tau_closure(u, &BTreeSet::from([i])).iter().any(|&x| u.term[x]);
        let follower_term = js.iter().any(|&x| u.term[x]);
        if leader_term && !follower_term {
            return Some((trace, true));
        }
        for x in tau_closure(u, &BTreeSet::from([i])) {
            for &(l, t) in &u.out[x] {
                if u.is_tau(l) {
                    continue;
                }
                let mut next_js = BTreeSet::new();
                for &j in &js {
                    for &(l2, t2) in &u.out[j] {
                        if l2 == l {
                            next_js.insert(t2);
                        }
                    }
                }
                let mut trace2 = trace.clone();
                trace2.push(u.labels[l].clone());
                if next_js.is_empty() {
                    return Some((trace2, false));
                }
                let key = (t, tau_closure(u, &next_js));
                if seen.insert(key.clone()) {
                    queue.push_back((key, trace2));
                }
            }
        }
    }
    None
}

/// Root-condition failure with branching-equal roots: report the
/// unmatched initial move.
fn root_counterexample(u: &Union, block: &[usize], r1: usize, r2: usize) -> Counterexample {
    if u.term[r1] != u.term[r2] {
        return Counterexample::Structural {
            explanation: format!(
                "root condition: one initial state terminates immediately and the other does not ({} vs {})",
                u.term[r1], u.term[r2]
            ),
        };
    }
    for (a, b, side) in [(r1, r2, "left"), (r2, r1, "right")] {
        for &(l, t) in &u.out[a] {
            if !u.out[b].iter().any(|&(l2, t2)| l2 == l && block[t2] == block[t]) {
                return Counterexample::Structural {
                    explanation: format!(
                        "root condition: the {side} initial state moves by {} into a class the other side cannot reach with the same label in one step",
                        u.labels[l]
                    ),
                };
            }
        }
    }
    Counterexample::Structural { explanation: "root condition violated".into() }
}
