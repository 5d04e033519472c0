//! Families of small LTSs used to cross-check the partition-refinement
//! checkers against the definitional oracle.

use rand::Rng;
use saptc::semantics::Lts;
use std::collections::BTreeSet;

pub fn lts(n: usize, edges: &[(usize, &str, usize)], term: &[usize]) -> Lts {
    Lts {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        init: 0,
        trans: edges.iter().map(|(f, l, t)| (*f, l.to_string(), *t)).collect(),
        terminating: term.iter().copied().collect(),
    }
}

/// Exhaustive: every 1-state system over {a, tau}, and every 2-state
/// system with at most 3 transitions over {a, tau}, each with every
/// termination marking.
pub fn enumerated_family() -> Vec<Lts> {
    let mut out = Vec::new();
    // 1-state systems: edge set over {(0,a,0), (0,tau,0)}
    let one_edges = [(0usize, "a", 0usize), (0, "tau", 0)];
    for mask in 0u32..(1 << one_edges.len()) {
        let edges: Vec<_> = one_edges
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, e)| *e)
            .collect();
        for term_mask in 0u32..2 {
            let term: Vec<usize> = if term_mask == 1 { vec![0] } else { vec![] };
            out.push(lts(1, &edges, &term));
        }
    }
    // 2-state systems: all edge sets of size <= 3 over 2 x {a,tau} x 2
    let mut all_edges = Vec::new();
    for f in 0..2usize {
        for l in ["a", "tau"] {
            for t in 0..2usize {
                all_edges.push((f, l, t));
            }
        }
    }
    for mask in 0u32..(1 << all_edges.len()) {
        if mask.count_ones() > 3 {
            continue;
        }
        let edges: Vec<_> = all_edges
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, e)| *e)
            .collect();
        for term_mask in 0u32..4 {
            let term: Vec<usize> = (0..2).filter(|s| term_mask & (1 << s) != 0).collect();
            out.push(lts(2, &edges, &term));
        }
    }
    out
}

/// Handcrafted discriminating shapes up to 6 states: inert and non-inert
/// tau, the weak-vs-branching separator, root-condition shapes, fair
/// tau-loops, termination through silence, and a true step label.
pub fn zoo() -> Vec<Lts> {
    vec![
        lts(1, &[], &[]),                                     // delta
        lts(1, &[], &[0]),                                    // epsilon
        lts(2, &[(0, "a", 1)], &[1]),                         // a
        lts(3, &[(0, "tau", 1), (1, "a", 2)], &[2]),          // tau a
        lts(3, &[(0, "a", 1), (1, "tau", 2)], &[2]),          // a tau
        lts(4, &[(0, "a", 1), (1, "tau", 2), (2, "b", 3)], &[3]), // a tau b
        lts(3, &[(0, "a", 1), (1, "b", 2)], &[2]),            // a b
        lts(2, &[(0, "tau", 0), (0, "a", 1)], &[1]),          // fair loop to a
        lts(2, &[(0, "tau", 0)], &[]),                        // pure divergence
        lts(2, &[(0, "tau", 1)], &[1]),                       // tau to termination
        // a(tau a + b) and its weak-but-not-branching sibling + aa
        lts(4, &[(0, "a", 1), (1, "tau", 2), (1, "b", 3), (2, "a", 3)], &[3]),
        lts(
            5,
            &[(0, "a", 1), (1, "tau", 2), (1, "b", 4), (2, "a", 4), (0, "a", 3), (3, "a", 4)],
            &[4],
        ),
        // B2: a(tau(b+c)+b) vs a(b+c), with c := a to stay at two labels
        lts(4, &[(0, "a", 1), (1, "tau", 2), (1, "b", 3), (2, "b", 3), (2, "a", 3)], &[3]),
        lts(3, &[(0, "a", 1), (1, "b", 2), (1, "a", 2)], &[2]),
        // nondeterminism vs determinism
        lts(4, &[(0, "a", 1), (0, "a", 2), (1, "b", 3)], &[2, 3]),
        lts(3, &[(0, "a", 1), (1, "b", 2)], &[1, 2]),
        // a step label next to its interleaving
        lts(2, &[(0, "{a, b}", 1)], &[1]),
        lts(4, &[(0, "a", 1), (1, "b", 3), (0, "b", 2), (2, "a", 3)], &[3]),
        // six-state tau ladder
        lts(
            6,
            &[(0, "tau", 1), (1, "tau", 2), (2, "a", 3), (3, "tau", 4), (4, "b", 5), (1, "a", 3)],
            &[5],
        ),
        // termination choice under tau
        lts(3, &[(0, "tau", 1), (0, "a", 2)], &[1, 2]),
        lts(2, &[(0, "a", 1)], &[0, 1]),
    ]
}

/// Seeded random systems: up to `max_states` states, labels drawn from
/// {a, b, tau}, at most 2n transitions.
pub fn random_lts<R: Rng>(rng: &mut R, max_states: usize) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let labels = ["a", "b", "tau"];
    let m = rng.gen_range(0..=2 * n);
    let mut edges = BTreeSet::new();
    for _ in 0..m {
        edges.insert((
            rng.gen_range(0..n),
            labels[rng.gen_range(0..labels.len())].to_string(),
            rng.gen_range(0..n),
        ));
    }
    let mut terminating = BTreeSet::new();
    for s in 0..n {
        if rng.gen_bool(0.3) {
            terminating.insert(s);
        }
    }
    Lts {
        states: (0..n).map(|i| format!("s{i}")).collect(),
        init: 0,
        trans: edges.into_iter().collect(),
        terminating,
    }
}
