//! The SOS interpreter: transitions of ⟨term, state⟩ configurations and
//! breadth-first LTS construction.
//!
//! Design notes that matter for correctness:
//! - `∥` synchronizes: both sides step together and the labels merge
//!   (τ components dissolve into the visible part). A side that can
//!   terminate silently gets out of the way: the other side's moves pass
//!   through. There is no interleaving at `∥`.
//! - `≬` adds to that: communication pairs (γ) and the solo interleavings,
//!   with the idle side carried along in the residue.
//! - Receives with unbound argument variables never fire alone; they are
//!   offers that only a matching send can consume, substituting the
//!   received values into the receiver's continuation.
//! - Shadow placeholders move with a pseudo-label that must fuse with a
//!   real occurrence of the shadowed action on the opposite side of a
//!   parallel operator; an enabled fusion suppresses the plain move.
//! - Coupled channels (declared `couple X ~ Y`) force same-kind actions on
//!   X and Y to fire jointly with equal arguments when both are ready.

use crate::message::{self, Binding};
use crate::term::{expand_sum, ActionEvent, ActionKind, ProtocolModel, Term, TermError};
use serde_json::json;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreshnessMode {
    Nondeterministic,
    Honest,
    Replayed,
}

#[derive(Clone, Debug)]
pub struct BuildConfig {
    pub max_states: usize,
    pub freshness: FreshnessMode,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { max_states: 100_000, freshness: FreshnessMode::Nondeterministic }
    }
}

/// The data-state component of a configuration. Value plumbing in models
/// happens by substitution into receiver continuations, so protocol runs
/// keep this constant; explicit bindings are still honored when supplied.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataState {
    pub bindings: Binding,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Tau,
    /// nonempty, sorted multiset of ground events
    Step(Vec<ActionEvent>),
}

impl Label {
    pub fn single(e: ActionEvent) -> Label {
        Label::Step(vec![e])
    }

    fn merge(&self, other: &Label) -> Label {
        match (self, other) {
            (Label::Tau, Label::Tau) => Label::Tau,
            (Label::Tau, l) | (l, Label::Tau) => l.clone(),
            (Label::Step(a), Label::Step(b)) => {
                let mut v = a.clone();
                v.extend(b.iter().cloned());
                v.sort();
                Label::Step(v)
            }
        }
    }

    pub fn events(&self) -> &[ActionEvent] {
        match self {
            Label::Tau => &[],
            Label::Step(v) => v,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => write!(f, "tau"),
            Label::Step(v) => {
                if v.len() == 1 {
                    return write!(f, "{}", v[0]);
                }
                write!(f, "{{")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SemError {
    #[error("guard argument not ground: {0}")]
    UngroundGuard(String),
    #[error("action argument not ground: {0}")]
    UngroundAction(String),
    #[error("undefined recursion variable {0}")]
    UndefinedVar(String),
    #[error("state space exceeded the bound of {0} states")]
    StateSpaceExceeded(usize),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Three-valued guard verdict: nondeterministic atoms yield Both and the
/// derivation explores both outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tri {
    True,
    False,
    Both,
}

impl Tri {
    fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Both => Tri::Both,
        }
    }
    fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, x) | (x, Tri::True) => x,
            _ => Tri::Both,
        }
    }
    fn or(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::True, _) | (_, Tri::True) => Tri::True,
            (Tri::False, x) | (x, Tri::False) => x,
            _ => Tri::Both,
        }
    }
    pub fn may_hold(self) -> bool {
        self != Tri::False
    }
}

pub fn eval_guard(g: &crate::term::Guard, s: &DataState, mode: FreshnessMode) -> Result<Tri, SemError> {
    use crate::term::Guard as G;
    Ok(match g {
        G::TrueG => Tri::True,
        G::FalseG => Tri::False,
        G::Atom(_, args) => {
            for a in args {
                if message::has_var(&message::substitute(a, &s.bindings)) {
                    return Err(SemError::UngroundGuard(g.to_string()));
                }
            }
            match mode {
                FreshnessMode::Nondeterministic => Tri::Both,
                FreshnessMode::Honest => Tri::True,
                FreshnessMode::Replayed => Tri::False,
            }
        }
        G::Eq(l, r) | G::Neq(l, r) => {
            let l = message::substitute(l, &s.bindings);
            let r = message::substitute(r, &s.bindings);
            if message::has_var(&l) || message::has_var(&r) {
                return Err(SemError::UngroundGuard(g.to_string()));
            }
            let eq = l == r;
            let truth = if matches!(g, G::Eq(_, _)) { eq } else { !eq };
            if truth {
                Tri::True
            } else {
                Tri::False
            }
        }
        G::Not(inner) => eval_guard(inner, s, mode)?.not(),
        G::And(l, r) => eval_guard(l, s, mode)?.and(eval_guard(r, s, mode)?),
        G::Or(l, r) => eval_guard(l, s, mode)?.or(eval_guard(r, s, mode)?),
    })
}

/// Environment a derivation runs in: recursion equations (sums already
/// expanded) and coupled channel pairs.
#[derive(Clone, Debug, Default)]
pub struct ModelEnv {
    pub equations: Vec<(String, Term)>,
    pub couples: Vec<(String, String)>,
}

impl ModelEnv {
    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.equations.iter().find(|(n, _)| n == x).map(|(_, t)| t)
    }

    fn partner(&self, chan: &str) -> Option<&str> {
        for (a, b) in &self.couples {
            if a == chan {
                return Some(b);
            }
            if b == chan {
                return Some(a);
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum MLabel {
    Real(Label),
    /// pseudo-move of a shadow placeholder waiting to fuse with `e`
    Shadow(ActionEvent),
    /// receive with unbound pattern variables, waiting for a send
    Offer(ActionEvent),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Move {
    label: MLabel,
    next: Option<Term>,
    state: DataState,
}

fn combine_residue(a: Option<Term>, b: Option<Term>) -> Option<Term> {
    match (a, b) {
        (None, None) => None,
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y),
        (Some(x), Some(y)) => Some(Term::between(x, y)),
    }
}

/// γ core with a shared receiver-side binding: a ground send matched against
/// a receive pattern extends `theta` consistently or leaves it untouched.
fn try_pair(send: &ActionEvent, recv: &ActionEvent, theta: &mut Binding) -> Option<ActionEvent> {
    if send.args.len() != recv.args.len() || !send.is_ground() {
        return None;
    }
    let snapshot = theta.clone();
    for (pat, val) in recv.args.iter().zip(&send.args) {
        if !message::match_msg(pat, val, theta) {
            *theta = snapshot;
            return None;
        }
    }
    let chan = send.name.strip_prefix("s_").expect("send kind");
    Some(ActionEvent::new(format!("c_{chan}"), send.args.clone()))
}

/// send/receive orientation of a communicable pair: Some(true) when `a`
/// sends and `b` receives on the same channel, Some(false) the other way
fn orientation(a: &ActionEvent, b: &ActionEvent) -> Option<bool> {
    match (a.kind(), b.kind()) {
        (ActionKind::Send(c1), ActionKind::Recv(c2)) if c1 == c2 => Some(true),
        (ActionKind::Recv(c1), ActionKind::Send(c2)) if c1 == c2 => Some(false),
        _ => None,
    }
}

/// All ways to let k ≥ 1 send/receive pairs across two slices communicate
/// component-wise; unpaired components stay visible in the merged slice.
/// Returns the merged multiset and the per-side receiver substitutions.
fn comm_matchings(v1: &[ActionEvent], v2: &[ActionEvent]) -> Vec<(Vec<ActionEvent>, Binding, Binding)> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        v1: &[ActionEvent],
        v2: &[ActionEvent],
        i: usize,
        used2: &mut Vec<bool>,
        keep1: &mut Vec<ActionEvent>,
        cs: &mut Vec<ActionEvent>,
        th1: &mut Binding,
        th2: &mut Binding,
        out: &mut Vec<(Vec<ActionEvent>, Binding, Binding)>,
    ) {
        if i == v1.len() {
            if !cs.is_empty() {
                let mut merged = cs.clone();
                merged.extend(keep1.iter().cloned());
                merged.extend(
                    v2.iter().zip(used2.iter()).filter(|(_, u)| !**u).map(|(e, _)| e.clone()),
                );
                merged.sort();
                out.push((merged, th1.clone(), th2.clone()));
            }
            return;
        }
        keep1.push(v1[i].clone());
        go(v1, v2, i + 1, used2, keep1, cs, th1, th2, out);
        keep1.pop();
        for j in 0..v2.len() {
            if used2[j] {
                continue;
            }
            let Some(left_sends) = orientation(&v1[i], &v2[j]) else { continue };
            let snap1 = th1.clone();
            let snap2 = th2.clone();
            let c = if left_sends {
                try_pair(&v1[i], &v2[j], th2)
            } else {
                try_pair(&v2[j], &v1[i], th1)
            };
            if let Some(c) = c {
                used2[j] = true;
                cs.push(c);
                go(v1, v2, i + 1, used2, keep1, cs, th1, th2, out);
                cs.pop();
                used2[j] = false;
            }
            *th1 = snap1;
            *th2 = snap2;
        }
    }
    let mut out = Vec::new();
    let mut used2 = vec![false; v2.len()];
    go(
        v1,
        v2,
        0,
        &mut used2,
        &mut Vec::new(),
        &mut Vec::new(),
        &mut Binding::new(),
        &mut Binding::new(),
        &mut out,
    );
    out
}

/// Do these two labels violate a coupling constraint? (Paired channels may
/// only step together with equal arguments.)
fn couple_pair_ok(env: &ModelEnv, l1: &Label, l2: &Label) -> bool {
    for a in l1.events() {
        if let Some(ch) = a.channel() {
            if let Some(partner) = env.partner(&ch) {
                for b in l2.events() {
                    if let Some(ch2) = b.channel() {
                        if ch2 == partner && same_kind(a, b) && a.args != b.args {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

fn same_kind(a: &ActionEvent, b: &ActionEvent) -> bool {
    matches!(
        (a.kind(), b.kind()),
        (ActionKind::Send(_), ActionKind::Send(_))
            | (ActionKind::Recv(_), ActionKind::Recv(_))
            | (ActionKind::Comm(_), ActionKind::Comm(_))
    )
}

/// Is a solo move with label `l` suppressed because the opposite side
/// co-enables a mandatory partner: a fusable shadow, or a coupled action?
fn solo_suppressed(env: &ModelEnv, l: &MLabel, opposite: &[Move]) -> bool {
    let MLabel::Real(label) = l else { return false };
    for e in label.events() {
        // shadow fusion is mandatory
        for m in opposite {
            if let MLabel::Shadow(se) = &m.label {
                if se == e {
                    return true;
                }
            }
        }
        // coupled channels must fire jointly when both are ready
        if let Some(ch) = e.channel() {
            if let Some(partner) = env.partner(&ch) {
                for m in opposite {
                    if let MLabel::Real(ol) = &m.label {
                        if ol.events().iter().any(|oe| {
                            oe.channel().as_deref() == Some(partner) && same_kind(e, oe)
                        }) {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

fn merge_states(a: &DataState, b: &DataState) -> DataState {
    if a == b {
        return a.clone();
    }
    let mut out = a.clone();
    for (k, v) in &b.bindings {
        out.bindings.entry(k.clone()).or_insert_with(|| v.clone());
    }
    out
}

/// Synchronization, fusion, and (for `≬`) communication pairs of two move
/// sets. Shared by `∥` and `≬`.
fn paired_moves(
    env: &ModelEnv,
    mx: &[Move],
    my: &[Move],
    with_comm: bool,
    out: &mut Vec<Move>,
) {
    for m1 in mx {
        for m2 in my {
            match (&m1.label, &m2.label) {
                (MLabel::Real(l1), MLabel::Real(l2)) => {
                    if couple_pair_ok(env, l1, l2) {
                        out.push(Move {
                            label: MLabel::Real(l1.merge(l2)),
                            next: combine_residue(m1.next.clone(), m2.next.clone()),
                            state: merge_states(&m1.state, &m2.state),
                        });
                    }
                    if with_comm {
                        if let (Label::Step(v1), Label::Step(v2)) = (l1, l2) {
                            for (merged, th1, th2) in comm_matchings(v1, v2) {
                                let rx = m1.next.clone().map(|t| {
                                    if th1.is_empty() { t } else { t.substitute_msgs(&th1) }
                                });
                                let ry = m2.next.clone().map(|t| {
                                    if th2.is_empty() { t } else { t.substitute_msgs(&th2) }
                                });
                                out.push(Move {
                                    label: MLabel::Real(Label::Step(merged)),
                                    next: combine_residue(rx, ry),
                                    state: merge_states(&m1.state, &m2.state),
                                });
                            }
                        }
                    }
                }
                // an unbound receive meeting a slice with a matching send:
                // communication only, other components stay visible
                (MLabel::Real(Label::Step(v1)), MLabel::Offer(pat)) if with_comm => {
                    for (k, e) in v1.iter().enumerate() {
                        if orientation(e, pat) != Some(true) {
                            continue;
                        }
                        let mut theta = Binding::new();
                        if let Some(c) = try_pair(e, pat, &mut theta) {
                            let mut merged: Vec<ActionEvent> =
                                v1.iter().enumerate().filter(|(x, _)| *x != k).map(|(_, ev)| ev.clone()).collect();
                            merged.push(c);
                            merged.sort();
                            out.push(Move {
                                label: MLabel::Real(Label::Step(merged)),
                                next: combine_residue(
                                    m1.next.clone(),
                                    m2.next.clone().map(|t| t.substitute_msgs(&theta)),
                                ),
                                state: merge_states(&m1.state, &m2.state),
                            });
                        }
                    }
                }
                (MLabel::Offer(pat), MLabel::Real(Label::Step(v2))) if with_comm => {
                    for (k, e) in v2.iter().enumerate() {
                        if orientation(e, pat) != Some(true) {
                            continue;
                        }
                        let mut theta = Binding::new();
                        if let Some(c) = try_pair(e, pat, &mut theta) {
                            let mut merged: Vec<ActionEvent> =
                                v2.iter().enumerate().filter(|(x, _)| *x != k).map(|(_, ev)| ev.clone()).collect();
                            merged.push(c);
                            merged.sort();
                            out.push(Move {
                                label: MLabel::Real(Label::Step(merged)),
                                next: combine_residue(
                                    m1.next.clone().map(|t| t.substitute_msgs(&theta)),
                                    m2.next.clone(),
                                ),
                                state: merge_states(&m1.state, &m2.state),
                            });
                        }
                    }
                }
                // shadow fusion: the real label survives, both sides advance
                (MLabel::Real(l1), MLabel::Shadow(se)) => {
                    if l1.events().iter().any(|e| e == se) {
                        out.push(Move {
                            label: MLabel::Real(l1.clone()),
                            next: combine_residue(m1.next.clone(), m2.next.clone()),
                            state: merge_states(&m1.state, &m2.state),
                        });
                    }
                }
                (MLabel::Shadow(se), MLabel::Real(l2)) => {
                    if l2.events().iter().any(|e| e == se) {
                        out.push(Move {
                            label: MLabel::Real(l2.clone()),
                            next: combine_residue(m1.next.clone(), m2.next.clone()),
                            state: merge_states(&m1.state, &m2.state),
                        });
                    }
                }
                _ => {}
            }
        }
    }
}

pub struct Derivation<'a> {
    pub env: &'a ModelEnv,
    pub cfg: &'a BuildConfig,
}

impl<'a> Derivation<'a> {
    pub fn new(env: &'a ModelEnv, cfg: &'a BuildConfig) -> Self {
        Derivation { env, cfg }
    }

    /// Public transitions: real labels only.
    pub fn transitions(&self, t: &Term, s: &DataState) -> Result<Vec<(Label, Option<Term>, DataState)>, SemError> {
        let mut out: Vec<(Label, Option<Term>, DataState)> = self
            .moves(t, s)?
            .into_iter()
            .filter_map(|m| match m.label {
                MLabel::Real(l) => Some((l, m.next.map(|n| canonicalize(&n)), m.state)),
                _ => None,
            })
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn moves(&self, t: &Term, s: &DataState) -> Result<Vec<Move>, SemError> {
        let mut out = Vec::new();
        self.moves_into(t, s, &mut out)?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn moves_into(&self, t: &Term, s: &DataState, out: &mut Vec<Move>) -> Result<(), SemError> {
        match t {
            Term::Delta | Term::Epsilon | Term::Shadow(None, _) => {}
            Term::Tau => out.push(Move { label: MLabel::Real(Label::Tau), next: None, state: s.clone() }),
            Term::Act(e) => {
                let e = e.substitute(&s.bindings).normalize();
                if e.is_ground() {
                    out.push(Move { label: MLabel::Real(Label::single(e)), next: None, state: s.clone() });
                } else if matches!(e.kind(), ActionKind::Recv(_)) {
                    out.push(Move { label: MLabel::Offer(e), next: None, state: s.clone() });
                } else {
                    return Err(SemError::UngroundAction(e.to_string()));
                }
            }
            Term::Shadow(Some(e), _) => {
                let e = e.substitute(&s.bindings).normalize();
                if !e.is_ground() {
                    return Err(SemError::UngroundAction(e.to_string()));
                }
                out.push(Move { label: MLabel::Shadow(e), next: None, state: s.clone() });
            }
            Term::Guard(g, p) => {
                if eval_guard(g, s, self.cfg.freshness)?.may_hold() {
                    self.moves_into(p, s, out)?;
                }
            }
            Term::Seq(p, q) => {
                for m in self.moves(p, s)? {
                    let next = Some(match m.next {
                        Some(p2) => Term::seq(p2, q.as_ref().clone()),
                        None => q.as_ref().clone(),
                    });
                    out.push(Move { label: m.label, next, state: m.state });
                }
                if self.can_terminate(p, s)? {
                    self.moves_into(q, s, out)?;
                }
            }
            Term::Alt(p, q) => {
                self.moves_into(p, s, out)?;
                self.moves_into(q, s, out)?;
            }
            Term::Var(x) => {
                let def = self.env.lookup(x).ok_or_else(|| SemError::UndefinedVar(x.clone()))?.clone();
                self.moves_into(&def, s, out)?;
            }
            Term::Theta(p) => self.moves_into(p, s, out)?,
            Term::Unless(p, _) => self.moves_into(p, s, out)?,
            Term::Encap(h, p) => {
                for m in self.moves(p, s)? {
                    let blocked = match &m.label {
                        MLabel::Real(l) => l.events().iter().any(|e| h.iter().any(|pat| pat.matches(e))),
                        MLabel::Offer(e) => h.iter().any(|pat| pat.name == e.name),
                        MLabel::Shadow(_) => false,
                    };
                    if !blocked {
                        out.push(Move {
                            label: m.label,
                            next: m.next.map(|n| Term::Encap(h.clone(), Box::new(n))),
                            state: m.state,
                        });
                    }
                }
            }
            Term::Abstract(i, p) => {
                for m in self.moves(p, s)? {
                    let label = match &m.label {
                        MLabel::Real(Label::Step(v)) => {
                            let kept: Vec<ActionEvent> =
                                v.iter().filter(|e| !i.iter().any(|pat| pat.matches(e))).cloned().collect();
                            if kept.is_empty() {
                                MLabel::Real(Label::Tau)
                            } else {
                                MLabel::Real(Label::Step(kept))
                            }
                        }
                        other => other.clone(),
                    };
                    out.push(Move {
                        label,
                        next: m.next.map(|n| Term::Abstract(i.clone(), Box::new(n))),
                        state: m.state,
                    });
                }
            }
            Term::Par(x, y) => {
                let mx = self.moves(x, s)?;
                let my = self.moves(y, s)?;
                paired_moves(self.env, &mx, &my, false, out);
                // a silently terminating side lets the other's moves through
                if self.can_terminate(x, s)? {
                    for m in &my {
                        if !solo_suppressed(self.env, &m.label, &mx) {
                            out.push(m.clone());
                        }
                    }
                }
                if self.can_terminate(y, s)? {
                    for m in &mx {
                        if !solo_suppressed(self.env, &m.label, &my) {
                            out.push(m.clone());
                        }
                    }
                }
            }
            Term::Comm(x, y) => {
                let mx = self.moves(x, s)?;
                let my = self.moves(y, s)?;
                let mut pairs = Vec::new();
                paired_moves(self.env, &mx, &my, true, &mut pairs);
                // keep only the γ results: single comm-events
                out.extend(pairs.into_iter().filter(|m| {
                    matches!(&m.label, MLabel::Real(Label::Step(v))
                        if v.len() == 1 && matches!(v[0].kind(), ActionKind::Comm(_)))
                }));
            }
            Term::Between(x, y) => {
                let mx = self.moves(x, s)?;
                let my = self.moves(y, s)?;
                paired_moves(self.env, &mx, &my, true, out);
                for m in &mx {
                    if solo_suppressed(self.env, &m.label, &my) {
                        continue;
                    }
                    out.push(Move {
                        label: m.label.clone(),
                        next: Some(match &m.next {
                            Some(x2) => Term::between(x2.clone(), y.as_ref().clone()),
                            None => y.as_ref().clone(),
                        }),
                        state: m.state.clone(),
                    });
                }
                for m in &my {
                    if solo_suppressed(self.env, &m.label, &mx) {
                        continue;
                    }
                    out.push(Move {
                        label: m.label.clone(),
                        next: Some(match &m.next {
                            Some(y2) => Term::between(x.as_ref().clone(), y2.clone()),
                            None => x.as_ref().clone(),
                        }),
                        state: m.state.clone(),
                    });
                }
            }
            Term::Sum(_, _, _) => {
                debug_assert!(false, "sums must be expanded before derivation");
            }
        }
        Ok(())
    }

    /// The termination predicate √.
    pub fn can_terminate(&self, t: &Term, s: &DataState) -> Result<bool, SemError> {
        self.can_terminate_rec(t, s, &mut Vec::new())
    }

    fn can_terminate_rec(&self, t: &Term, s: &DataState, visiting: &mut Vec<String>) -> Result<bool, SemError> {
        Ok(match t {
            Term::Epsilon | Term::Shadow(None, _) => true,
            Term::Delta | Term::Tau | Term::Act(_) | Term::Shadow(Some(_), _) => false,
            Term::Seq(p, q) => {
                self.can_terminate_rec(p, s, visiting)? && self.can_terminate_rec(q, s, visiting)?
            }
            Term::Alt(p, q) => {
                self.can_terminate_rec(p, s, visiting)? || self.can_terminate_rec(q, s, visiting)?
            }
            Term::Par(x, y) | Term::Between(x, y) => {
                self.can_terminate_rec(x, s, visiting)? && self.can_terminate_rec(y, s, visiting)?
            }
            Term::Comm(_, _) => false,
            Term::Guard(g, p) => {
                eval_guard(g, s, self.cfg.freshness)?.may_hold() && self.can_terminate_rec(p, s, visiting)?
            }
            Term::Theta(p) | Term::Encap(_, p) | Term::Abstract(_, p) => self.can_terminate_rec(p, s, visiting)?,
            Term::Unless(p, _) => self.can_terminate_rec(p, s, visiting)?,
            Term::Var(x) => {
                if visiting.contains(x) {
                    false
                } else {
                    let def = self.env.lookup(x).ok_or_else(|| SemError::UndefinedVar(x.clone()))?.clone();
                    visiting.push(x.clone());
                    let r = self.can_terminate_rec(&def, s, visiting)?;
                    visiting.pop();
                    r
                }
            }
            Term::Sum(_, _, _) => false,
        })
    }
}

/// Canonical state representative: sound unit laws (x+δ, δ·x, ε·x, x·ε),
/// alternative flattening/sorting/deduplication, right-associated
/// sequencing, guard-literal resolution, Θ/◁ transparency.
pub fn canonicalize(t: &Term) -> Term {
    match t {
        Term::Act(e) => Term::Act(e.normalize()),
        Term::Shadow(e, i) => Term::Shadow(e.as_ref().map(|e| e.normalize()), *i),
        Term::Delta | Term::Epsilon | Term::Tau | Term::Var(_) => t.clone(),
        Term::Theta(p) => canonicalize(p),
        Term::Unless(p, _) => canonicalize(p),
        Term::Seq(p, q) => {
            let p = canonicalize(p);
            let q = canonicalize(q);
            match (p, q) {
                (Term::Delta, _) => Term::Delta,
                (Term::Epsilon, q) => q,
                (p, Term::Epsilon) => p,
                // reassociate to the right so chains have one spelling
                (Term::Seq(a, b), q) => canonicalize(&Term::seq(*a, Term::seq(*b, q))),
                (Term::Guard(g, body), q) if *body == Term::Epsilon => Term::guard(g, q),
                (p, q) => Term::seq(p, q),
            }
        }
        Term::Alt(_, _) => {
            let mut summands = Vec::new();
            flatten_alt(t, &mut summands);
            let mut canon: Vec<Term> = summands.iter().map(canonicalize).collect();
            canon.retain(|x| *x != Term::Delta);
            canon.sort();
            canon.dedup();
            Term::alt_all(canon)
        }
        Term::Par(x, y) => Term::par(canonicalize(x), canonicalize(y)),
        Term::Comm(x, y) => Term::comm(canonicalize(x), canonicalize(y)),
        Term::Between(x, y) => Term::between(canonicalize(x), canonicalize(y)),
        Term::Encap(h, p) => Term::Encap(h.clone(), Box::new(canonicalize(p))),
        Term::Abstract(i, p) => Term::Abstract(i.clone(), Box::new(canonicalize(p))),
        Term::Guard(g, p) => match g {
            crate::term::Guard::TrueG => canonicalize(p),
            crate::term::Guard::FalseG => Term::Delta,
            _ => Term::guard(g.clone(), canonicalize(p)),
        },
        Term::Sum(v, d, b) => Term::Sum(v.clone(), d.clone(), Box::new(canonicalize(b))),
    }
}

fn flatten_alt(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Alt(a, b) => {
            flatten_alt(a, out);
            flatten_alt(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Explicit finite LTS. Labels are canonical strings ("tau" or the sorted
/// multiset rendering) so exported and imported systems compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<String>,
    pub init: usize,
    pub trans: Vec<(usize, String, usize)>,
    pub terminating: BTreeSet<usize>,
}

pub const TAU_LABEL: &str = "tau";

impl Lts {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "schema": "saptc-lts/1",
            "states": self.states,
            "init": self.init,
            "trans": self.trans.iter().map(|(f, l, t)| json!({"from": f, "label": l, "to": t})).collect::<Vec<_>>(),
            "term": self.terminating.iter().collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Lts> {
        let states = v.get("states")?.as_array()?.iter().map(|s| s.as_str().map(String::from)).collect::<Option<Vec<_>>>()?;
        let init = v.get("init")?.as_u64()? as usize;
        let mut trans = Vec::new();
        for e in v.get("trans")?.as_array()? {
            trans.push((
                e.get("from")?.as_u64()? as usize,
                e.get("label")?.as_str()?.to_string(),
                e.get("to")?.as_u64()? as usize,
            ));
        }
        let terminating = v
            .get("term")?
            .as_array()?
            .iter()
            .map(|x| x.as_u64().map(|n| n as usize))
            .collect::<Option<BTreeSet<_>>>()?;
        Some(Lts { states, init, trans, terminating })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=circle];\n");
        for (i, _name) in self.states.iter().enumerate() {
            let shape = if self.terminating.contains(&i) { "doublecircle" } else { "circle" };
            let marker = if i == self.init { ", style=bold" } else { "" };
            s.push_str(&format!("  s{i} [shape={shape}{marker}, label=\"{i}\"];\n"));
        }
        for (f, l, t) in &self.trans {
            let esc = l.replace('\\', "\\\\").replace('"', "\\\"");
            s.push_str(&format!("  s{f} -> s{t} [label=\"{esc}\"];\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth-first closure of `transitions` from a root term. States are
/// canonical (term, state) pairs; indexing follows discovery order, so the
/// construction is deterministic.
pub fn build_lts(root: &Term, env: &ModelEnv, cfg: &BuildConfig) -> Result<Lts, SemError> {
    let der = Derivation::new(env, cfg);
    let root = canonicalize(root);
    let s0 = DataState::default();
    let mut index: indexmap::IndexMap<(Term, DataState), usize> = indexmap::IndexMap::new();
    index.insert((root.clone(), s0.clone()), 0);
    let mut queue = std::collections::VecDeque::from([(root, s0)]);
    let mut trans = Vec::new();
    let mut terminating = BTreeSet::new();
    let mut explored = 0usize;
    while let Some((t, s)) = queue.pop_front() {
        let from = index[&(t.clone(), s.clone())];
        if der.can_terminate(&t, &s)? {
            terminating.insert(from);
        }
        for (label, next, s2) in der.transitions(&t, &s)? {
            let key = match next {
                Some(n) => (n, s2),
                // √ is a fresh terminal configuration: an ε state
                None => (Term::Epsilon, s2),
            };
            let to = match index.get(&key) {
                Some(&i) => i,
                None => {
                    let i = index.len();
                    if i >= cfg.max_states {
                        return Err(SemError::StateSpaceExceeded(cfg.max_states));
                    }
                    index.insert(key.clone(), i);
                    queue.push_back(key);
                    i
                }
            };
            trans.push((from, label.to_string(), to));
        }
        explored += 1;
        let _ = explored;
    }
    let states = index.keys().map(|(t, _)| t.to_string()).collect();
    Ok(Lts { states, init: 0, trans, terminating })
}

/// Build the composition LTS of a protocol model.
pub fn generate_lts(model: &ProtocolModel, cfg: &BuildConfig) -> Result<Lts, SemError> {
    let env = model_env(model)?;
    let comp = expand_sum(&model.composition, &model.domains)?;
    build_lts(&comp, &env, cfg)
}

/// Build the LTS of the model's declared external-behavior specification.
pub fn generate_spec_lts(model: &ProtocolModel, cfg: &BuildConfig) -> Result<Lts, SemError> {
    let mut equations = Vec::new();
    for (n, t) in &model.spec.equations {
        equations.push((n.clone(), expand_sum(t, &model.domains)?));
    }
    crate::term::validate_guarded(&equations)?;
    let env = ModelEnv { equations, couples: vec![] };
    build_lts(&Term::Var(model.spec.entry.clone()), &env, cfg)
}

/// Expand and validate a model's principal equations.
pub fn model_env(model: &ProtocolModel) -> Result<ModelEnv, SemError> {
    let mut equations = Vec::new();
    for p in &model.principals {
        for (n, t) in &p.equations {
            equations.push((n.clone(), expand_sum(t, &model.domains)?));
        }
    }
    crate::term::validate_guarded(&equations)?;
    Ok(ModelEnv { equations, couples: model.couples.clone() })
}
