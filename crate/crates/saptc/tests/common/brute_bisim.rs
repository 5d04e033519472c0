//! Definitional bisimulation oracle: greatest-fixpoint computation by
//! deleting violating pairs from the full relation, following the
//! definitions clause by clause. Deliberately naive and independent of the
//! partition-refinement implementation.

use saptc::semantics::{Lts, TAU_LABEL};
use std::collections::BTreeSet;

pub struct Sys {
    pub n: usize,
    pub out: Vec<Vec<(String, usize)>>,
    pub term: Vec<bool>,
    pub init: usize,
}

impl Sys {
    pub fn of(l: &Lts) -> Sys {
        let n = l.n_states();
        let mut out = vec![Vec::new(); n];
        for (f, lab, t) in &l.trans {
            out[*f].push((lab.clone(), *t));
        }
        let mut term = vec![false; n];
        for &i in &l.terminating {
            term[i] = true;
        }
        Sys { n, out, term, init: l.init }
    }

    /// all states reachable by zero or more tau-transitions
    fn tau_star(&self, s: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([s]);
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            for (l, t) in &self.out[x] {
                if l == TAU_LABEL && seen.insert(*t) {
                    stack.push(*t);
                }
            }
        }
        seen.into_iter().collect()
    }
}

fn rel_get(r: &[Vec<bool>], i: usize, j: usize) -> bool {
    r[i][j]
}

/// Strong step bisimulation, computed as the greatest relation where
/// every move is matched by an identically labelled move into the
/// relation, and termination is matched exactly.
pub fn strong_gfp(a: &Sys, b: &Sys) -> Vec<Vec<bool>> {
    let mut r = vec![vec![true; b.n]; a.n];
    loop {
        let mut changed = false;
        for i in 0..a.n {
            for j in 0..b.n {
                if !r[i][j] {
                    continue;
                }
                let ok = a.term[i] == b.term[j]
                    && a.out[i].iter().all(|(l, it)| {
                        b.out[j].iter().any(|(l2, jt)| l2 == l && rel_get(&r, *it, *jt))
                    })
                    && b.out[j].iter().all(|(l, jt)| {
                        a.out[i].iter().any(|(l2, it)| l2 == l && rel_get(&r, *it, *jt))
                    });
                if !ok {
                    r[i][j] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

pub fn strong_oracle(l1: &Lts, l2: &Lts) -> bool {
    let (a, b) = (Sys::of(l1), Sys::of(l2));
    strong_gfp(&a, &b)[a.init][b.init]
}

/// Branching step bisimulation clauses, greatest fixpoint:
/// a move i -X-> i' is matched either silently (X = tau and (i', j) still
/// related) or by a stutter j -tau*-> j0 with (i, j0) related followed by
/// j0 -X-> j' with (i', j') related; termination is matched through the
/// same checked stutter.
pub fn branching_gfp(a: &Sys, b: &Sys) -> Vec<Vec<bool>> {
    let mut r = vec![vec![true; b.n]; a.n];
    loop {
        let mut changed = false;
        for i in 0..a.n {
            for j in 0..b.n {
                if !r[i][j] {
                    continue;
                }
                if !branching_pair_ok(a, b, &r, i, j) {
                    r[i][j] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

fn branching_pair_ok(a: &Sys, b: &Sys, r: &[Vec<bool>], i: usize, j: usize) -> bool {
    // clause 1: moves of the left state
    for (l, it) in &a.out[i] {
        let silent = l == TAU_LABEL && r[*it][j];
        let matched = silent
            || b.tau_star(j).iter().any(|&j0| {
                r[i][j0]
                    && b.out[j0].iter().any(|(l2, jt)| l2 == l && r[*it][*jt])
            });
        if !matched {
            return false;
        }
    }
    // clause 2: moves of the right state
    for (l, jt) in &b.out[j] {
        let silent = l == TAU_LABEL && r[i][*jt];
        let matched = silent
            || a.tau_star(i).iter().any(|&i0| {
                r[i0][j]
                    && a.out[i0].iter().any(|(l2, it)| l2 == l && r[*it][*jt])
            });
        if !matched {
            return false;
        }
    }
    // clauses 3 and 4: termination through a checked stutter
    if a.term[i] && !b.tau_star(j).iter().any(|&j0| r[i][j0] && b.term[j0]) {
        return false;
    }
    if b.term[j] && !a.tau_star(i).iter().any(|&i0| r[i0][j] && a.term[i0]) {
        return false;
    }
    true
}

pub fn branching_oracle(l1: &Lts, l2: &Lts) -> bool {
    let (a, b) = (Sys::of(l1), Sys::of(l2));
    branching_gfp(&a, &b)[a.init][b.init]
}

/// Rooted clauses: initial moves matched strongly (tau included, labels
/// exact) into branching-bisimilar residues; termination exact at the
/// roots.
pub fn rooted_branching_oracle(l1: &Lts, l2: &Lts) -> bool {
    let (a, b) = (Sys::of(l1), Sys::of(l2));
    let br = branching_gfp(&a, &b);
    let (i, j) = (a.init, b.init);
    if a.term[i] != b.term[j] {
        return false;
    }
    let fwd = a.out[i]
        .iter()
        .all(|(l, it)| b.out[j].iter().any(|(l2, jt)| l2 == l && br[*it][*jt]));
    let bwd = b.out[j]
        .iter()
        .all(|(l, jt)| a.out[i].iter().any(|(l2, it)| l2 == l && br[*it][*jt]));
    fwd && bwd
}
