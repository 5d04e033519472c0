//! Equational normalization of closed, recursion-free terms to basic
//! sum-of-prefixes form, and the `prove_equal` oracle built on it.
//!
//! Every rule is an oriented axiom applied at the root of a redex; the
//! engine drives rules over all positions to a fixpoint under a step
//! budget. Commutativity and associativity of `+` and of event-atom `∥`
//! are not rewrite rules: canonical ordering (flatten, sort, deduplicate)
//! handles them between steps. The rewriter is a sound prover, not a
//! complete one: terms whose normal forms differ yield `Unknown`.

use crate::message::Binding;
use crate::semantics::{eval_guard, DataState, FreshnessMode, Tri};
use crate::term::{ActionEvent, ActionKind, Guard, Pattern, Term};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteMode {
    Strong,
    RootedBranching,
}

/// Equivalence level at which a rule is sound against the transition
/// semantics. Branching-level rules (the guard-τ laws) are never used by
/// `prove_equal`, whose modes stop at rooted branching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleLevel {
    Strong,
    RootedBranching,
    Branching,
}

#[derive(Clone, Debug)]
pub struct RuleCtx {
    /// declared conflict pairs (action names); empty in every catalogued
    /// model, which makes the conflict-elimination laws vacuous
    pub conflicts: Vec<(String, String)>,
    /// ambient state set quantified over by the guard-validity laws
    pub states: Vec<DataState>,
    pub freshness: FreshnessMode,
    pub budget: usize,
}

impl Default for RuleCtx {
    fn default() -> Self {
        RuleCtx {
            conflicts: vec![],
            states: vec![DataState::default()],
            freshness: FreshnessMode::Nondeterministic,
            budget: 1_000_000,
        }
    }
}

impl RuleCtx {
    fn conflicted(&self, a: &str, b: &str) -> bool {
        self.conflicts.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// definitely true in every ambient state
    fn always(&self, g: &Guard) -> bool {
        self.states.iter().all(|s| eval_guard(g, s, self.freshness) == Ok(Tri::True))
    }

    /// definitely false in every ambient state
    #[allow(dead_code)]
    fn never(&self, g: &Guard) -> bool {
        self.states.iter().all(|s| eval_guard(g, s, self.freshness) == Ok(Tri::False))
    }

    /// the guards decide the same way in every ambient state (used by the
    /// weakest-precondition laws; the state is unchanged by events here,
    /// so wp(e, φ) is φ's own truth table)
    fn same_table(&self, g: &Guard, h: &Guard) -> bool {
        self.states.iter().all(|s| {
            matches!(
                (eval_guard(g, s, self.freshness), eval_guard(h, s, self.freshness)),
                (Ok(Tri::True), Ok(Tri::True)) | (Ok(Tri::False), Ok(Tri::False))
            )
        })
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("term contains recursion variable {0}")]
    ContainsRecursion(String),
    #[error("term is not closed: {0}")]
    NotClosed(String),
}

/// Normal form wrapper: an Alt-chain of prefix summands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicTerm(pub Term);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Proof {
    Proven,
    Unknown,
}

type ApplyFn = fn(&Term, &RuleCtx) -> Option<Term>;

pub struct Rule {
    pub name: &'static str,
    pub level: RuleLevel,
    /// rules kept out of the normalization pipeline exist for the
    /// per-rule soundness suite only (their pipeline direction is covered
    /// by another rule or by canonical ordering)
    pub in_pipeline: bool,
    pub apply: ApplyFn,
}

// ---------------------------------------------------------------------
// small matchers

fn as_guard_atom(t: &Term) -> Option<&Guard> {
    match t {
        Term::Guard(g, body) if **body == Term::Epsilon => Some(g),
        _ => None,
    }
}

/// event-atom multiset: a single action or a ∥-tree of actions
fn event_multiset(t: &Term) -> Option<Vec<ActionEvent>> {
    match t {
        Term::Act(e) => Some(vec![e.clone()]),
        Term::Par(a, b) => {
            let mut v = event_multiset(a)?;
            v.extend(event_multiset(b)?);
            Some(v)
        }
        _ => None,
    }
}

fn multiset_term(mut events: Vec<ActionEvent>) -> Term {
    events.sort();
    let mut it = events.into_iter();
    let first = Term::Act(it.next().expect("nonempty multiset"));
    it.fold(first, |acc, e| Term::par(acc, Term::Act(e)))
}

/// communication function: a send and a receive on one channel merge,
/// binding the receive pattern against the sent values
fn gamma_rw(e1: &ActionEvent, e2: &ActionEvent) -> Option<(ActionEvent, Binding, bool)> {
    let (send, recv, recv_left) = match (e1.kind(), e2.kind()) {
        (ActionKind::Send(c1), ActionKind::Recv(c2)) if c1 == c2 => (e1, e2, false),
        (ActionKind::Recv(c1), ActionKind::Send(c2)) if c1 == c2 => (e2, e1, true),
        _ => return None,
    };
    if send.args.len() != recv.args.len() || !send.is_ground() {
        return None;
    }
    let mut theta = Binding::new();
    for (pat, val) in recv.args.iter().zip(&send.args) {
        if !crate::message::match_msg(pat, val, &mut theta) {
            return None;
        }
    }
    let chan = send.name.strip_prefix("s_").expect("send");
    Some((ActionEvent::new(format!("c_{chan}"), send.args.clone()), theta, recv_left))
}

fn alt_list(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    fn walk(t: &Term, out: &mut Vec<Term>) {
        match t {
            Term::Alt(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            other => out.push(other.clone()),
        }
    }
    walk(t, &mut out);
    out
}

// ---------------------------------------------------------------------
// summand decomposition for the merge expansions

#[derive(Clone, Debug, PartialEq, Eq)]
enum Prefix {
    Events(Vec<ActionEvent>),
    Tau,
    Shadow(ActionEvent, u32),
}

#[derive(Clone, Debug)]
struct Summand {
    prefix: Prefix,
    rest: Term,
}

/// Decompose a term into prefix summands plus an ε-flag. Succeeds only on
/// terms already in head-normal shape: an Alt of prefix·rest, bare
/// prefixes, ε, δ.
fn summands(t: &Term) -> Option<(Vec<Summand>, bool)> {
    let mut out = Vec::new();
    let mut eps = false;
    for s in alt_list(t) {
        match &s {
            Term::Epsilon => eps = true,
            Term::Delta => {}
            Term::Tau => out.push(Summand { prefix: Prefix::Tau, rest: Term::Epsilon }),
            Term::Shadow(Some(e), i) => out.push(Summand { prefix: Prefix::Shadow(e.clone(), *i), rest: Term::Epsilon }),
            Term::Shadow(None, _) => eps = true,
            Term::Seq(h, rest) => match h.as_ref() {
                Term::Tau => out.push(Summand { prefix: Prefix::Tau, rest: rest.as_ref().clone() }),
                Term::Shadow(Some(e), i) => {
                    out.push(Summand { prefix: Prefix::Shadow(e.clone(), *i), rest: rest.as_ref().clone() })
                }
                Term::Shadow(None, _) => return None,
                other => out.push(Summand { prefix: Prefix::Events(event_multiset(other)?), rest: rest.as_ref().clone() }),
            },
            other => out.push(Summand { prefix: Prefix::Events(event_multiset(other)?), rest: Term::Epsilon }),
        }
    }
    Some((out, eps))
}

fn seq_of(prefix: &Prefix, rest: Term) -> Term {
    let head = match prefix {
        Prefix::Events(v) => multiset_term(v.clone()),
        Prefix::Tau => Term::Tau,
        Prefix::Shadow(e, i) => Term::Shadow(Some(e.clone()), *i),
    };
    if rest == Term::Epsilon {
        head
    } else {
        Term::seq(head, rest)
    }
}

/// label merge of two synchronized prefixes (τ dissolves, shadows fuse)
fn sync_prefix(a: &Prefix, b: &Prefix) -> Option<Prefix> {
    match (a, b) {
        (Prefix::Tau, Prefix::Tau) => Some(Prefix::Tau),
        (Prefix::Tau, p) | (p, Prefix::Tau) => Some(p.clone()),
        (Prefix::Events(x), Prefix::Events(y)) => {
            let mut v = x.clone();
            v.extend(y.iter().cloned());
            v.sort();
            Some(Prefix::Events(v))
        }
        (Prefix::Shadow(e, _), Prefix::Events(v)) | (Prefix::Events(v), Prefix::Shadow(e, _)) => {
            if v.contains(e) {
                Some(Prefix::Events(v.clone()))
            } else {
                None
            }
        }
        (Prefix::Shadow(_, _), Prefix::Shadow(_, _)) => None,
    }
}

fn between_or_rest(x: Term, y: Term) -> Term {
    match (x, y) {
        (Term::Epsilon, y) => y,
        (x, Term::Epsilon) => x,
        (x, y) => Term::between(x, y),
    }
}

/// a solo step of one side is blocked when the other side co-enables a
/// fusable shadow of one of its events
fn solo_blocked(p: &Prefix, other: &[Summand]) -> bool {
    if let Prefix::Events(v) = p {
        other.iter().any(|s| matches!(&s.prefix, Prefix::Shadow(e, _) if v.contains(e)))
    } else {
        false
    }
}

/// Full-merge expansion of x≬y from head-normal operands: synchronized
/// pairs, communications, and solo steps carrying the other side along.
fn expand_between(x: &Term, y: &Term, _ctx: &RuleCtx) -> Option<Term> {
    let (sx, ex) = summands(x)?;
    let (sy, ey) = summands(y)?;
    let mut acc: Vec<Term> = Vec::new();
    for a in &sx {
        for b in &sy {
            if let Some(p) = sync_prefix(&a.prefix, &b.prefix) {
                acc.push(seq_of(&p, between_or_rest(a.rest.clone(), b.rest.clone())));
            }
            if let (Prefix::Events(v1), Prefix::Events(v2)) = (&a.prefix, &b.prefix) {
                if v1.len() == 1 && v2.len() == 1 {
                    if let Some((c, theta, recv_left)) = gamma_rw(&v1[0], &v2[0]) {
                        let (ra, rb) = if recv_left {
                            (a.rest.substitute_msgs(&theta), b.rest.clone())
                        } else {
                            (a.rest.clone(), b.rest.substitute_msgs(&theta))
                        };
                        acc.push(seq_of(&Prefix::Events(vec![c]), between_or_rest(ra, rb)));
                    }
                }
            }
        }
    }
    for a in &sx {
        if solo_blocked(&a.prefix, &sy) {
            continue;
        }
        acc.push(seq_of(&a.prefix, between_or_rest(a.rest.clone(), y.clone())));
    }
    for b in &sy {
        if solo_blocked(&b.prefix, &sx) {
            continue;
        }
        acc.push(seq_of(&b.prefix, between_or_rest(x.clone(), b.rest.clone())));
    }
    if ex && ey {
        acc.push(Term::Epsilon);
    }
    Some(Term::alt_all(acc))
}

/// ∥ expansion: synchronized pairs only, plus the pass-through of a side
/// whose partner can terminate.
fn expand_par(x: &Term, y: &Term, _ctx: &RuleCtx) -> Option<Term> {
    let (sx, ex) = summands(x)?;
    let (sy, ey) = summands(y)?;
    let mut acc: Vec<Term> = Vec::new();
    for a in &sx {
        for b in &sy {
            if let Some(p) = sync_prefix(&a.prefix, &b.prefix) {
                acc.push(seq_of(&p, between_or_rest(a.rest.clone(), b.rest.clone())));
            }
        }
    }
    if ex {
        for b in &sy {
            if !solo_blocked(&b.prefix, &sx) {
                acc.push(seq_of(&b.prefix, b.rest.clone()));
            }
        }
    }
    if ey {
        for a in &sx {
            if !solo_blocked(&a.prefix, &sy) {
                acc.push(seq_of(&a.prefix, a.rest.clone()));
            }
        }
    }
    if ex && ey {
        acc.push(Term::Epsilon);
    }
    Some(Term::alt_all(acc))
}

/// | expansion: single-event communication pairs only.
fn expand_comm(x: &Term, y: &Term, _ctx: &RuleCtx) -> Option<Term> {
    let (sx, _) = summands(x)?;
    let (sy, _) = summands(y)?;
    let mut acc: Vec<Term> = Vec::new();
    for a in &sx {
        for b in &sy {
            if let (Prefix::Events(v1), Prefix::Events(v2)) = (&a.prefix, &b.prefix) {
                if v1.len() == 1 && v2.len() == 1 {
                    if let Some((c, theta, recv_left)) = gamma_rw(&v1[0], &v2[0]) {
                        let (ra, rb) = if recv_left {
                            (a.rest.substitute_msgs(&theta), b.rest.clone())
                        } else {
                            (a.rest.clone(), b.rest.substitute_msgs(&theta))
                        };
                        acc.push(seq_of(&Prefix::Events(vec![c]), between_or_rest(ra, rb)));
                    }
                }
            }
        }
    }
    Some(Term::alt_all(acc))
}

// ---------------------------------------------------------------------
// the oriented rules

fn r_a3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Alt(a, b) if a == b => Some(a.as_ref().clone()),
        _ => None,
    }
}

fn r_a4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(xy, z) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::seq(x.as_ref().clone(), z.as_ref().clone()),
                Term::seq(y.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_a5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(xy, z) => match xy.as_ref() {
            Term::Seq(x, y) => Some(Term::seq(
                x.as_ref().clone(),
                Term::seq(y.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_a6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Alt(x, d) if **d == Term::Delta => Some(x.as_ref().clone()),
        Term::Alt(d, x) if **d == Term::Delta => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_a7(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(d, _) if **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_a8(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(e, x) if **e == Term::Epsilon => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_a9(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(x, e) if **e == Term::Epsilon => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_g1(t: &Term, _: &RuleCtx) -> Option<Term> {
    // φ·¬φ = δ, for guards whose truth is decided (no may-valued atoms)
    match t {
        Term::Guard(g, body) if g.is_decidable() => match body.as_ref() {
            Term::Guard(h, inner) if **inner == Term::Epsilon && *h == g.negate() => Some(Term::Delta),
            _ => None,
        },
        _ => None,
    }
}

fn r_g2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Alt(a, b) => {
            let (g, h) = (as_guard_atom(a)?, as_guard_atom(b)?);
            if g.is_decidable() && (*h == g.negate() || *g == h.negate()) {
                Some(Term::Epsilon)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn r_g3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(_, body) if **body == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_g4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) => match body.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::guard(g.clone(), x.as_ref().clone()),
                Term::guard(g.clone(), y.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g5(t: &Term, _: &RuleCtx) -> Option<Term> {
    // φ(x·y) = (φx)·y, provided x is not itself a bare guard chain that
    // refolding would bounce back
    match t {
        Term::Guard(g, body) => match body.as_ref() {
            Term::Seq(x, y) if as_guard_atom(x).is_none() && **x != Term::Epsilon => Some(Term::seq(
                Term::guard(g.clone(), x.as_ref().clone()),
                y.as_ref().clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g6(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (φ+ψ)x = φx+ψx: the A4 shape with guard summands
    match t {
        Term::Seq(gs, x) => match gs.as_ref() {
            Term::Alt(a, b) if as_guard_atom(a).is_some() && as_guard_atom(b).is_some() => Some(Term::alt(
                Term::seq(a.as_ref().clone(), x.as_ref().clone()),
                Term::seq(b.as_ref().clone(), x.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g7(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (φ·ψ)·x = φ·(ψ·x): the A5 shape with a guard head
    match t {
        Term::Seq(gp, x) => match gp.as_ref() {
            Term::Seq(g, p) if as_guard_atom(g).is_some() => Some(Term::seq(
                g.as_ref().clone(),
                Term::seq(p.as_ref().clone(), x.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g8(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) if **body == Term::Epsilon && ctx.always(g) => Some(Term::Epsilon),
        _ => None,
    }
}

fn r_g9(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    // a chain of guards unsatisfiable at every state collapses to δ
    let mut guards = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Guard(g, body) => {
                guards.push(g.clone());
                cur = body;
            }
            Term::Epsilon => break,
            _ => return None,
        }
    }
    if guards.is_empty() {
        return None;
    }
    let dead_everywhere = ctx.states.iter().all(|s| {
        guards.iter().any(|g| eval_guard(g, s, ctx.freshness) == Ok(Tri::False))
    });
    if dead_everywhere {
        Some(Term::Delta)
    } else {
        None
    }
}

fn wp_drop(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    // wp(e,φ)·e·φ = wp(e,φ)·e and its negated dual ¬wp(e,φ)·e·¬φ =
    // ¬wp(e,φ)·e. The state is untouched by events, so wp(e,φ) is φ's own
    // truth table, and in both laws the leading guard's table equals the
    // trailing guard's (the two negations of the dual cancel).
    match t {
        Term::Guard(g, body) => match body.as_ref() {
            Term::Seq(act, tail) if matches!(**act, Term::Act(_)) => match tail.as_ref() {
                Term::Guard(phi, rest) if ctx.same_table(g, phi) => Some(Term::guard(
                    g.clone(),
                    Term::seq(act.as_ref().clone(), rest.as_ref().clone()),
                )),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_g10(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    wp_drop(t, ctx)
}

fn r_g11(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    wp_drop(t, ctx)
}

// --- merge operators ---

/// expansions are only progress if they change the canonical form; an
/// event-multiset prefix expands to itself and must be left alone
fn progressed(t: &Term, out: Term) -> Option<Term> {
    if rcanon(&out) == rcanon(t) {
        None
    } else {
        Some(out)
    }
}

fn r_p1(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Between(x, y) => progressed(t, expand_between(x, y, ctx)?),
        _ => None,
    }
}

fn r_p2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(e1, ey) => {
            let v1 = event_multiset(e1)?;
            match ey.as_ref() {
                Term::Seq(e2, y) => {
                    let mut v = v1;
                    v.extend(event_multiset(e2)?);
                    Some(Term::seq(multiset_term(v), y.as_ref().clone()))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

fn r_p3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(ex, e2) => {
            let v2 = event_multiset(e2)?;
            match ex.as_ref() {
                Term::Seq(e1, x) => {
                    let mut v = event_multiset(e1)?;
                    v.extend(v2);
                    Some(Term::seq(multiset_term(v), x.as_ref().clone()))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

fn r_p4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(ex, ey) => match (ex.as_ref(), ey.as_ref()) {
            (Term::Seq(e1, x), Term::Seq(e2, y)) => {
                let mut v = event_multiset(e1)?;
                v.extend(event_multiset(e2)?);
                Some(Term::seq(
                    multiset_term(v),
                    Term::between(x.as_ref().clone(), y.as_ref().clone()),
                ))
            }
            _ => None,
        },
        _ => None,
    }
}

fn r_p5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(xy, z) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::par(x.as_ref().clone(), z.as_ref().clone()),
                Term::par(y.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_p6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(x, yz) => match yz.as_ref() {
            Term::Alt(y, z) => Some(Term::alt(
                Term::par(x.as_ref().clone(), y.as_ref().clone()),
                Term::par(x.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_p7(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(d, _) if **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_p8(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(_, d) if **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_p9(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(e, x) if **e == Term::Epsilon => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_p10(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(x, e) if **e == Term::Epsilon => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_c1(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(a, b) => match (a.as_ref(), b.as_ref()) {
            (Term::Act(e1), Term::Act(e2)) => {
                let _ = ctx;
                match gamma_rw(e1, e2) {
                    Some((c, _, _)) => Some(Term::Act(c)),
                    None => Some(Term::Delta),
                }
            }
            _ => None,
        },
        _ => None,
    }
}

fn r_c2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(a, ey) => match (a.as_ref(), ey.as_ref()) {
            (Term::Act(e1), Term::Seq(h, y)) => match h.as_ref() {
                Term::Act(e2) => match gamma_rw(e1, e2) {
                    Some((c, theta, recv_left)) => {
                        let y2 = if recv_left { y.as_ref().clone() } else { y.substitute_msgs(&theta) };
                        Some(Term::seq(Term::Act(c), y2))
                    }
                    None => Some(Term::Delta),
                },
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_c3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(ex, b) => match (ex.as_ref(), b.as_ref()) {
            (Term::Seq(h, x), Term::Act(e2)) => match h.as_ref() {
                Term::Act(e1) => match gamma_rw(e1, e2) {
                    Some((c, theta, recv_left)) => {
                        let x2 = if recv_left { x.substitute_msgs(&theta) } else { x.as_ref().clone() };
                        Some(Term::seq(Term::Act(c), x2))
                    }
                    None => Some(Term::Delta),
                },
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_c4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(ex, ey) => match (ex.as_ref(), ey.as_ref()) {
            (Term::Seq(h1, x), Term::Seq(h2, y)) => match (h1.as_ref(), h2.as_ref()) {
                (Term::Act(e1), Term::Act(e2)) => match gamma_rw(e1, e2) {
                    Some((c, theta, recv_left)) => {
                        let (x2, y2) = if recv_left {
                            (x.substitute_msgs(&theta), y.as_ref().clone())
                        } else {
                            (x.as_ref().clone(), y.substitute_msgs(&theta))
                        };
                        Some(Term::seq(Term::Act(c), Term::between(x2, y2)))
                    }
                    None => Some(Term::Delta),
                },
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_c5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(xy, z) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::comm(x.as_ref().clone(), z.as_ref().clone()),
                Term::comm(y.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_c6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(x, yz) => match yz.as_ref() {
            Term::Alt(y, z) => Some(Term::alt(
                Term::comm(x.as_ref().clone(), y.as_ref().clone()),
                Term::comm(x.as_ref().clone(), z.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_c7(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(d, _) if **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_c8(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(_, d) if **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_c9(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(e, _) if **e == Term::Epsilon => Some(Term::Delta),
        _ => None,
    }
}

fn r_c10(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(_, e) if **e == Term::Epsilon => Some(Term::Delta),
        _ => None,
    }
}

// --- conflict elimination Θ and unless ◁ ---

fn r_ce1(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(x) if event_multiset(x).is_some() => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_ce2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(x) if **x == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_ce3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(x) if **x == Term::Epsilon => Some(Term::Epsilon),
        _ => None,
    }
}

fn r_ce4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(xy) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::Unless(Box::new(Term::Theta(x.clone())), y.clone()),
                Term::Unless(Box::new(Term::Theta(y.clone())), x.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_ce5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(xy) => match xy.as_ref() {
            Term::Seq(x, y) => Some(Term::seq(Term::Theta(x.clone()), Term::Theta(y.clone()))),
            _ => None,
        },
        _ => None,
    }
}

fn r_ce6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(xy) => match xy.as_ref() {
            Term::Par(x, y) => Some(Term::alt(
                Term::par(Term::Unless(Box::new(Term::Theta(x.clone())), y.clone()), y.as_ref().clone()),
                Term::par(Term::Unless(Box::new(Term::Theta(y.clone())), x.clone()), x.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_ce7(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(xy) => match xy.as_ref() {
            Term::Comm(x, y) => Some(Term::alt(
                Term::comm(Term::Unless(Box::new(Term::Theta(x.clone())), y.clone()), y.as_ref().clone()),
                Term::comm(Term::Unless(Box::new(Term::Theta(y.clone())), x.clone()), x.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g23(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Theta(x) if as_guard_atom(x).is_some() => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_u1(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(x, y) => match (x.as_ref(), y.as_ref()) {
            (Term::Act(e1), Term::Act(e2)) if ctx.conflicted(&e1.name, &e2.name) => Some(Term::Tau),
            _ => None,
        },
        _ => None,
    }
}

fn r_u4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(e, d) if **d == Term::Delta && event_multiset(e).is_some() => Some(e.as_ref().clone()),
        _ => None,
    }
}

fn r_u5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(d, e) if **d == Term::Delta && event_multiset(e).is_some() => Some(Term::Delta),
        _ => None,
    }
}

fn r_u6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(e, eps) if **eps == Term::Epsilon && event_multiset(e).is_some() => Some(e.as_ref().clone()),
        _ => None,
    }
}

fn r_u7(t: &Term, _: &RuleCtx) -> Option<Term> {
    // ε◁e: nothing to suppress in a process with no steps
    match t {
        Term::Unless(eps, e) if **eps == Term::Epsilon && event_multiset(e).is_some() => Some(Term::Epsilon),
        _ => None,
    }
}

fn r_u8(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(xy, z) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::Unless(x.clone(), z.clone()),
                Term::Unless(y.clone(), z.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u9(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(xy, z) => match xy.as_ref() {
            Term::Seq(x, y) => Some(Term::seq(
                Term::Unless(x.clone(), z.clone()),
                Term::Unless(y.clone(), z.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u10(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(xy, z) => match xy.as_ref() {
            Term::Par(x, y) => Some(Term::par(
                Term::Unless(x.clone(), z.clone()),
                Term::Unless(y.clone(), z.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u11(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(xy, z) => match xy.as_ref() {
            Term::Comm(x, y) => Some(Term::comm(
                Term::Unless(x.clone(), z.clone()),
                Term::Unless(y.clone(), z.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u12(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(x, yz) => match yz.as_ref() {
            Term::Alt(y, z) => Some(Term::Unless(
                Box::new(Term::Unless(x.clone(), y.clone())),
                z.clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u13(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(x, yz) => match yz.as_ref() {
            Term::Seq(y, z) => Some(Term::Unless(
                Box::new(Term::Unless(x.clone(), y.clone())),
                z.clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u14(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(x, yz) => match yz.as_ref() {
            Term::Par(y, z) => Some(Term::Unless(
                Box::new(Term::Unless(x.clone(), y.clone())),
                z.clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u15(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Unless(x, yz) => match yz.as_ref() {
            Term::Comm(y, z) => Some(Term::Unless(
                Box::new(Term::Unless(x.clone(), y.clone())),
                z.clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_u_default(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    // with no declared conflicts the suppressed set is empty and ◁ keeps
    // its left operand verbatim
    match t {
        Term::Unless(x, _) if ctx.conflicts.is_empty() => Some(x.as_ref().clone()),
        _ => None,
    }
}

// --- encapsulation ---

fn encap_matches(h: &[Pattern], e: &ActionEvent) -> bool {
    h.iter().any(|p| p.matches(e))
}

fn r_d1(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(h, x) => match x.as_ref() {
            Term::Act(e) if !encap_matches(h, e) => Some(x.as_ref().clone()),
            Term::Tau => Some(Term::Tau),
            _ => None,
        },
        _ => None,
    }
}

fn r_d2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(h, x) => match x.as_ref() {
            Term::Act(e) if encap_matches(h, e) => Some(Term::Delta),
            _ => None,
        },
        _ => None,
    }
}

fn r_d3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(_, x) if **x == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_d4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(h, xy) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::Encap(h.clone(), x.clone()),
                Term::Encap(h.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_d5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(h, xy) => match xy.as_ref() {
            Term::Seq(x, y) => Some(Term::seq(
                Term::Encap(h.clone(), x.clone()),
                Term::Encap(h.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_d6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(h, xy) => match xy.as_ref() {
            Term::Par(x, y) => Some(Term::par(
                Term::Encap(h.clone(), x.clone()),
                Term::Encap(h.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_d_eps(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(_, x) if **x == Term::Epsilon => Some(Term::Epsilon),
        _ => None,
    }
}

fn r_g24(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Encap(_, x) if as_guard_atom(x).is_some() => Some(x.as_ref().clone()),
        _ => None,
    }
}

// --- guard/parallel laws ---

fn r_g12(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) => match body.as_ref() {
            Term::Par(x, y) => Some(Term::par(
                Term::guard(g.clone(), x.as_ref().clone()),
                Term::guard(g.clone(), y.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g13(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) => match body.as_ref() {
            Term::Comm(x, y) => Some(Term::comm(
                Term::guard(g.clone(), x.as_ref().clone()),
                Term::guard(g.clone(), y.as_ref().clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_g14(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(g, d) if as_guard_atom(g).is_some() && **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_g15(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(d, g) if **d == Term::Delta && as_guard_atom(g).is_some() => Some(Term::Delta),
        _ => None,
    }
}

fn r_g16(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(g, d) if as_guard_atom(g).is_some() && **d == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_g17(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(d, g) if **d == Term::Delta && as_guard_atom(g).is_some() => Some(Term::Delta),
        _ => None,
    }
}

fn r_g18(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(g, e) if as_guard_atom(g).is_some() && **e == Term::Epsilon => Some(g.as_ref().clone()),
        _ => None,
    }
}

fn r_g19(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(e, g) if **e == Term::Epsilon && as_guard_atom(g).is_some() => Some(g.as_ref().clone()),
        _ => None,
    }
}

fn r_g20(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(g, e) if as_guard_atom(g).is_some() && **e == Term::Epsilon => Some(Term::Delta),
        _ => None,
    }
}

fn r_g21(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(e, g) if **e == Term::Epsilon && as_guard_atom(g).is_some() => Some(Term::Delta),
        _ => None,
    }
}

fn r_g22(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(a, b) => {
            let (g, h) = (as_guard_atom(a)?, as_guard_atom(b)?);
            if g.is_decidable() && (*h == g.negate() || *g == h.negate()) {
                Some(Term::Delta)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn r_g25(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    // ∥-chain of guards jointly unsatisfiable at every state
    let mut guards = Vec::new();
    fn collect(t: &Term, out: &mut Vec<Guard>) -> bool {
        match t {
            Term::Par(a, b) => collect(a, out) && collect(b, out),
            Term::Guard(g, body) if **body == Term::Epsilon => {
                out.push(g.clone());
                true
            }
            _ => false,
        }
    }
    if !matches!(t, Term::Par(_, _)) || !collect(t, &mut guards) || guards.len() < 2 {
        return None;
    }
    let dead = ctx.states.iter().all(|s| {
        guards.iter().any(|g| eval_guard(g, s, ctx.freshness) == Ok(Tri::False))
    });
    if dead {
        Some(Term::Delta)
    } else {
        None
    }
}

fn r_guard_pull(t: &Term, _: &RuleCtx) -> Option<Term> {
    // engine direction of the guard/merge laws: a guard heading one
    // operand of ∥ or | gates the whole merge (no solo steps exist there)
    match t {
        Term::Par(a, b) => match (a.as_ref(), b.as_ref()) {
            (Term::Guard(g, x), _) if **x != Term::Epsilon => {
                Some(Term::guard(g.clone(), Term::par(x.as_ref().clone(), b.as_ref().clone())))
            }
            (_, Term::Guard(g, y)) if **y != Term::Epsilon => {
                Some(Term::guard(g.clone(), Term::par(a.as_ref().clone(), y.as_ref().clone())))
            }
            _ => None,
        },
        Term::Comm(a, b) => match (a.as_ref(), b.as_ref()) {
            (Term::Guard(g, x), _) if **x != Term::Epsilon => {
                Some(Term::guard(g.clone(), Term::comm(x.as_ref().clone(), b.as_ref().clone())))
            }
            (_, Term::Guard(g, y)) if **y != Term::Epsilon => {
                Some(Term::guard(g.clone(), Term::comm(a.as_ref().clone(), y.as_ref().clone())))
            }
            _ => None,
        },
        _ => None,
    }
}

fn r_par_exp(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(x, y) => progressed(t, expand_par(x, y, ctx)?),
        _ => None,
    }
}

fn r_comm_exp(t: &Term, ctx: &RuleCtx) -> Option<Term> {
    match t {
        Term::Comm(x, y) => progressed(t, expand_comm(x, y, ctx)?),
        _ => None,
    }
}

// --- abstraction ---

fn abs_matches(i: &[Pattern], e: &ActionEvent) -> bool {
    i.iter().any(|p| p.matches(e))
}

fn r_ti1(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(i, x) => match x.as_ref() {
            Term::Act(e) if !abs_matches(i, e) => Some(x.as_ref().clone()),
            Term::Tau => Some(Term::Tau),
            _ => None,
        },
        _ => None,
    }
}

fn r_ti2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(i, x) => match x.as_ref() {
            Term::Act(e) if abs_matches(i, e) => Some(Term::Tau),
            _ => None,
        },
        _ => None,
    }
}

fn r_ti3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(_, x) if **x == Term::Delta => Some(Term::Delta),
        _ => None,
    }
}

fn r_ti4(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(i, xy) => match xy.as_ref() {
            Term::Alt(x, y) => Some(Term::alt(
                Term::Abstract(i.clone(), x.clone()),
                Term::Abstract(i.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_ti5(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(i, xy) => match xy.as_ref() {
            Term::Seq(x, y) => Some(Term::seq(
                Term::Abstract(i.clone(), x.clone()),
                Term::Abstract(i.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_ti6(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(i, xy) => match xy.as_ref() {
            Term::Par(x, y) => Some(Term::par(
                Term::Abstract(i.clone(), x.clone()),
                Term::Abstract(i.clone(), y.clone()),
            )),
            _ => None,
        },
        _ => None,
    }
}

fn r_ti_eps(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Abstract(_, x) if **x == Term::Epsilon => Some(Term::Epsilon),
        _ => None,
    }
}

fn r_g28(t: &Term, _: &RuleCtx) -> Option<Term> {
    // guards are never members of the abstracted event set here
    match t {
        Term::Abstract(_, x) if as_guard_atom(x).is_some() => Some(x.as_ref().clone()),
        _ => None,
    }
}

// --- silent step (branching/rooted-branching levels) ---

fn event_head(t: &Term) -> Option<()> {
    event_multiset(t).map(|_| ())
}

fn r_b1(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(e, tau) if **tau == Term::Tau && event_head(e).is_some() => Some(e.as_ref().clone()),
        _ => None,
    }
}

/// e·(τ·(x+y)+x) = e·(x+y): inside a prefixed body, a τ-summand whose
/// continuation covers the other summands absorbs them.
fn tau_absorb(body: &Term) -> Option<Term> {
    let l = alt_list(body);
    for (k, s) in l.iter().enumerate() {
        let cont = match s {
            Term::Tau => Term::Epsilon,
            Term::Seq(h, c) if **h == Term::Tau => c.as_ref().clone(),
            _ => continue,
        };
        let cont_summands = alt_list(&cont);
        let rest: Vec<&Term> = l.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, t)| t).collect();
        if rest.iter().all(|r| cont_summands.contains(r)) {
            return Some(cont);
        }
    }
    None
}

fn r_b2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(e, body) if event_head(e).is_some() => {
            tau_absorb(body).map(|c| Term::seq(e.as_ref().clone(), c))
        }
        _ => None,
    }
}

fn r_b3(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Par(x, tau) if **tau == Term::Tau && **x != Term::Epsilon => Some(x.as_ref().clone()),
        Term::Par(tau, x) if **tau == Term::Tau && **x != Term::Epsilon => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_g26(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) if **body == Term::Tau => Some(Term::guard(g.clone(), Term::Epsilon)),
        _ => None,
    }
}

fn r_g27(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Guard(g, body) => tau_absorb(body).map(|c| Term::guard(g.clone(), c)),
        _ => None,
    }
}

// --- shadow constant ---

fn r_sc1(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(s, x) if matches!(**s, Term::Shadow(None, _)) => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn r_sc2(t: &Term, _: &RuleCtx) -> Option<Term> {
    match t {
        Term::Seq(x, s) if matches!(**s, Term::Shadow(None, _)) => Some(x.as_ref().clone()),
        _ => None,
    }
}

fn shadow_of(t: &Term) -> Option<&ActionEvent> {
    match t {
        Term::Shadow(Some(e), _) => Some(e),
        _ => None,
    }
}

fn r_sc3(t: &Term, _: &RuleCtx) -> Option<Term> {
    // Ⓢ^e ∥ e = e (either side), and the mismatch case deadlocks
    match t {
        Term::Par(a, b) => match (shadow_of(a), shadow_of(b)) {
            (Some(se), None) => match b.as_ref() {
                Term::Act(e) => Some(if se == e { Term::Act(e.clone()) } else { Term::Delta }),
                _ => None,
            },
            (None, Some(se)) => match a.as_ref() {
                Term::Act(e) => Some(if se == e { Term::Act(e.clone()) } else { Term::Delta }),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_sc4(t: &Term, _: &RuleCtx) -> Option<Term> {
    // e ∥ (Ⓢ^e·y) = e·y
    match t {
        Term::Par(a, sy) => match (a.as_ref(), sy.as_ref()) {
            (Term::Act(e), Term::Seq(s, y)) => {
                let se = shadow_of(s)?;
                Some(if se == e {
                    Term::seq(Term::Act(e.clone()), y.as_ref().clone())
                } else {
                    Term::Delta
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn r_sc5(t: &Term, _: &RuleCtx) -> Option<Term> {
    // Ⓢ^e ∥ (e·y) = e·y
    match t {
        Term::Par(s, ey) => match (s.as_ref(), ey.as_ref()) {
            (Term::Shadow(Some(se), _), Term::Seq(h, y)) => match h.as_ref() {
                Term::Act(e) => Some(if se == e {
                    Term::seq(Term::Act(e.clone()), y.as_ref().clone())
                } else {
                    Term::Delta
                }),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_sc6(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (e·x) ∥ Ⓢ^e = e·x
    match t {
        Term::Par(ex, s) => match (ex.as_ref(), s.as_ref()) {
            (Term::Seq(h, x), Term::Shadow(Some(se), _)) => match h.as_ref() {
                Term::Act(e) => Some(if se == e {
                    Term::seq(Term::Act(e.clone()), x.as_ref().clone())
                } else {
                    Term::Delta
                }),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_sc7(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (Ⓢ^e·x) ∥ e = e·x
    match t {
        Term::Par(sx, b) => match (sx.as_ref(), b.as_ref()) {
            (Term::Seq(s, x), Term::Act(e)) => {
                let se = shadow_of(s)?;
                Some(if se == e {
                    Term::seq(Term::Act(e.clone()), x.as_ref().clone())
                } else {
                    Term::Delta
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn r_sc8(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (e·x) ∥ (Ⓢ^e·y) = e·(x≬y)
    match t {
        Term::Par(ex, sy) => match (ex.as_ref(), sy.as_ref()) {
            (Term::Seq(h, x), Term::Seq(s, y)) => match (h.as_ref(), shadow_of(s)) {
                (Term::Act(e), Some(se)) => Some(if se == e {
                    Term::seq(
                        Term::Act(e.clone()),
                        Term::between(x.as_ref().clone(), y.as_ref().clone()),
                    )
                } else {
                    Term::Delta
                }),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn r_sc9(t: &Term, _: &RuleCtx) -> Option<Term> {
    // (Ⓢ^e·x) ∥ (e·y) = e·(x≬y)
    match t {
        Term::Par(sx, ey) => match (sx.as_ref(), ey.as_ref()) {
            (Term::Seq(s, x), Term::Seq(h, y)) => match (shadow_of(s), h.as_ref()) {
                (Some(se), Term::Act(e)) => Some(if se == e {
                    Term::seq(
                        Term::Act(e.clone()),
                        Term::between(x.as_ref().clone(), y.as_ref().clone()),
                    )
                } else {
                    Term::Delta
                }),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

// ---------------------------------------------------------------------
// rule table

pub static RULES: &[Rule] = &[
    Rule { name: "A3", level: RuleLevel::Strong, in_pipeline: true, apply: r_a3 },
    Rule { name: "A6", level: RuleLevel::Strong, in_pipeline: true, apply: r_a6 },
    Rule { name: "A7", level: RuleLevel::Strong, in_pipeline: true, apply: r_a7 },
    Rule { name: "A8", level: RuleLevel::Strong, in_pipeline: true, apply: r_a8 },
    Rule { name: "A9", level: RuleLevel::Strong, in_pipeline: true, apply: r_a9 },
    Rule { name: "A4", level: RuleLevel::Strong, in_pipeline: true, apply: r_a4 },
    Rule { name: "A5", level: RuleLevel::Strong, in_pipeline: true, apply: r_a5 },
    Rule { name: "G7", level: RuleLevel::Strong, in_pipeline: true, apply: r_g7 },
    Rule { name: "G6", level: RuleLevel::Strong, in_pipeline: true, apply: r_g6 },
    Rule { name: "SC1", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc1 },
    Rule { name: "SC2", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc2 },
    Rule { name: "SC3", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc3 },
    Rule { name: "SC4", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc4 },
    Rule { name: "SC5", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc5 },
    Rule { name: "SC6", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc6 },
    Rule { name: "SC7", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc7 },
    Rule { name: "SC8", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc8 },
    Rule { name: "SC9", level: RuleLevel::Strong, in_pipeline: true, apply: r_sc9 },
    Rule { name: "B1", level: RuleLevel::RootedBranching, in_pipeline: true, apply: r_b1 },
    Rule { name: "B2", level: RuleLevel::RootedBranching, in_pipeline: true, apply: r_b2 },
    Rule { name: "B3", level: RuleLevel::RootedBranching, in_pipeline: true, apply: r_b3 },
    Rule { name: "G26", level: RuleLevel::Branching, in_pipeline: false, apply: r_g26 },
    Rule { name: "G27", level: RuleLevel::Branching, in_pipeline: false, apply: r_g27 },
    Rule { name: "G1", level: RuleLevel::Strong, in_pipeline: true, apply: r_g1 },
    Rule { name: "G2", level: RuleLevel::Strong, in_pipeline: true, apply: r_g2 },
    Rule { name: "G3", level: RuleLevel::Strong, in_pipeline: true, apply: r_g3 },
    Rule { name: "G4", level: RuleLevel::Strong, in_pipeline: true, apply: r_g4 },
    Rule { name: "G5", level: RuleLevel::Strong, in_pipeline: true, apply: r_g5 },
    Rule { name: "G8", level: RuleLevel::Strong, in_pipeline: true, apply: r_g8 },
    Rule { name: "G9", level: RuleLevel::Strong, in_pipeline: true, apply: r_g9 },
    Rule { name: "G10", level: RuleLevel::Strong, in_pipeline: true, apply: r_g10 },
    Rule { name: "G11", level: RuleLevel::Strong, in_pipeline: true, apply: r_g11 },
    Rule { name: "CE1", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce1 },
    Rule { name: "CE2", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce2 },
    Rule { name: "CE3", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce3 },
    Rule { name: "G23", level: RuleLevel::Strong, in_pipeline: true, apply: r_g23 },
    Rule { name: "CE4", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce4 },
    Rule { name: "CE5", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce5 },
    Rule { name: "CE6", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce6 },
    Rule { name: "CE7", level: RuleLevel::Strong, in_pipeline: true, apply: r_ce7 },
    Rule { name: "U1", level: RuleLevel::RootedBranching, in_pipeline: true, apply: r_u1 },
    Rule { name: "U-empty", level: RuleLevel::Strong, in_pipeline: true, apply: r_u_default },
    Rule { name: "U4", level: RuleLevel::Strong, in_pipeline: true, apply: r_u4 },
    Rule { name: "U5", level: RuleLevel::Strong, in_pipeline: true, apply: r_u5 },
    Rule { name: "U6", level: RuleLevel::Strong, in_pipeline: true, apply: r_u6 },
    Rule { name: "U7", level: RuleLevel::Strong, in_pipeline: true, apply: r_u7 },
    Rule { name: "U8", level: RuleLevel::Strong, in_pipeline: true, apply: r_u8 },
    Rule { name: "U9", level: RuleLevel::Strong, in_pipeline: true, apply: r_u9 },
    Rule { name: "U10", level: RuleLevel::Strong, in_pipeline: true, apply: r_u10 },
    Rule { name: "U11", level: RuleLevel::Strong, in_pipeline: true, apply: r_u11 },
    Rule { name: "U12", level: RuleLevel::Strong, in_pipeline: true, apply: r_u12 },
    Rule { name: "U13", level: RuleLevel::Strong, in_pipeline: true, apply: r_u13 },
    Rule { name: "U14", level: RuleLevel::Strong, in_pipeline: true, apply: r_u14 },
    Rule { name: "U15", level: RuleLevel::Strong, in_pipeline: true, apply: r_u15 },
    Rule { name: "D1", level: RuleLevel::Strong, in_pipeline: true, apply: r_d1 },
    Rule { name: "D2", level: RuleLevel::Strong, in_pipeline: true, apply: r_d2 },
    Rule { name: "D3", level: RuleLevel::Strong, in_pipeline: true, apply: r_d3 },
    Rule { name: "D4", level: RuleLevel::Strong, in_pipeline: true, apply: r_d4 },
    Rule { name: "D5", level: RuleLevel::Strong, in_pipeline: true, apply: r_d5 },
    Rule { name: "D6", level: RuleLevel::Strong, in_pipeline: true, apply: r_d6 },
    Rule { name: "D-eps", level: RuleLevel::Strong, in_pipeline: true, apply: r_d_eps },
    Rule { name: "G24", level: RuleLevel::Strong, in_pipeline: true, apply: r_g24 },
    Rule { name: "TI1", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti1 },
    Rule { name: "TI2", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti2 },
    Rule { name: "TI3", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti3 },
    Rule { name: "TI4", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti4 },
    Rule { name: "TI5", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti5 },
    Rule { name: "TI6", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti6 },
    Rule { name: "TI-eps", level: RuleLevel::Strong, in_pipeline: true, apply: r_ti_eps },
    Rule { name: "G28", level: RuleLevel::Strong, in_pipeline: true, apply: r_g28 },
    Rule { name: "G14", level: RuleLevel::Strong, in_pipeline: true, apply: r_g14 },
    Rule { name: "G15", level: RuleLevel::Strong, in_pipeline: true, apply: r_g15 },
    Rule { name: "G16", level: RuleLevel::Strong, in_pipeline: true, apply: r_g16 },
    Rule { name: "G17", level: RuleLevel::Strong, in_pipeline: true, apply: r_g17 },
    Rule { name: "G18", level: RuleLevel::Strong, in_pipeline: true, apply: r_g18 },
    Rule { name: "G19", level: RuleLevel::Strong, in_pipeline: true, apply: r_g19 },
    Rule { name: "G20", level: RuleLevel::Strong, in_pipeline: true, apply: r_g20 },
    Rule { name: "G21", level: RuleLevel::Strong, in_pipeline: true, apply: r_g21 },
    Rule { name: "G22", level: RuleLevel::Strong, in_pipeline: true, apply: r_g22 },
    Rule { name: "G25", level: RuleLevel::Strong, in_pipeline: true, apply: r_g25 },
    Rule { name: "P7", level: RuleLevel::Strong, in_pipeline: true, apply: r_p7 },
    Rule { name: "P8", level: RuleLevel::Strong, in_pipeline: true, apply: r_p8 },
    Rule { name: "P9", level: RuleLevel::Strong, in_pipeline: true, apply: r_p9 },
    Rule { name: "P10", level: RuleLevel::Strong, in_pipeline: true, apply: r_p10 },
    Rule { name: "C7", level: RuleLevel::Strong, in_pipeline: true, apply: r_c7 },
    Rule { name: "C8", level: RuleLevel::Strong, in_pipeline: true, apply: r_c8 },
    Rule { name: "C9", level: RuleLevel::Strong, in_pipeline: true, apply: r_c9 },
    Rule { name: "C10", level: RuleLevel::Strong, in_pipeline: true, apply: r_c10 },
    Rule { name: "P5", level: RuleLevel::Strong, in_pipeline: true, apply: r_p5 },
    Rule { name: "P6", level: RuleLevel::Strong, in_pipeline: true, apply: r_p6 },
    Rule { name: "C5", level: RuleLevel::Strong, in_pipeline: true, apply: r_c5 },
    Rule { name: "C6", level: RuleLevel::Strong, in_pipeline: true, apply: r_c6 },
    Rule { name: "guard-pull", level: RuleLevel::Strong, in_pipeline: true, apply: r_guard_pull },
    Rule { name: "G12", level: RuleLevel::Strong, in_pipeline: false, apply: r_g12 },
    Rule { name: "G13", level: RuleLevel::Strong, in_pipeline: false, apply: r_g13 },
    Rule { name: "P2", level: RuleLevel::Strong, in_pipeline: true, apply: r_p2 },
    Rule { name: "P3", level: RuleLevel::Strong, in_pipeline: true, apply: r_p3 },
    Rule { name: "P4", level: RuleLevel::Strong, in_pipeline: true, apply: r_p4 },
    Rule { name: "C1", level: RuleLevel::Strong, in_pipeline: true, apply: r_c1 },
    Rule { name: "C2", level: RuleLevel::Strong, in_pipeline: true, apply: r_c2 },
    Rule { name: "C3", level: RuleLevel::Strong, in_pipeline: true, apply: r_c3 },
    Rule { name: "C4", level: RuleLevel::Strong, in_pipeline: true, apply: r_c4 },
    Rule { name: "P1", level: RuleLevel::Strong, in_pipeline: true, apply: r_p1 },
    Rule { name: "P-exp", level: RuleLevel::Strong, in_pipeline: true, apply: r_par_exp },
    Rule { name: "C-exp", level: RuleLevel::Strong, in_pipeline: true, apply: r_comm_exp },
];

pub fn rule_by_name(name: &str) -> Option<&'static Rule> {
    RULES.iter().find(|r| r.name == name)
}

// ---------------------------------------------------------------------
// canonical ordering and the engine

/// Flatten/sort/deduplicate commutative-associative structure without
/// consulting the rule table: + fully; ∥, |, ≬ by operand order (their
/// step semantics is symmetric); ·-chains right-associated; bare-guard
/// prefixes folded into guard application.
pub fn rcanon(t: &Term) -> Term {
    match t {
        Term::Alt(_, _) => {
            let mut parts: Vec<Term> = alt_list(t).iter().map(rcanon).collect();
            parts.retain(|p| *p != Term::Delta);
            parts.sort();
            parts.dedup();
            Term::alt_all(parts)
        }
        Term::Seq(a, b) => {
            let a = rcanon(a);
            let b = rcanon(b);
            match (a, b) {
                (Term::Seq(x, y), b) => rcanon(&Term::seq(*x, Term::seq(*y, b))),
                (Term::Guard(g, body), b) if *body == Term::Epsilon => Term::guard(g, b),
                (a, b) => Term::seq(a, b),
            }
        }
        Term::Guard(g, body) => {
            let body = rcanon(body);
            match body {
                Term::Guard(h, inner) if h == *g => Term::guard(g.clone(), *inner),
                body => Term::guard(g.clone(), body),
            }
        }
        Term::Par(a, b) => order_sym(Term::Par, rcanon(a), rcanon(b), true),
        Term::Comm(a, b) => order_sym(Term::Comm, rcanon(a), rcanon(b), false),
        Term::Between(a, b) => order_sym(Term::Between, rcanon(a), rcanon(b), false),
        Term::Theta(x) => Term::Theta(Box::new(rcanon(x))),
        Term::Unless(x, y) => Term::Unless(Box::new(rcanon(x)), Box::new(rcanon(y))),
        Term::Encap(h, x) => Term::Encap(h.clone(), Box::new(rcanon(x))),
        Term::Abstract(i, x) => Term::Abstract(i.clone(), Box::new(rcanon(x))),
        Term::Act(e) => Term::Act(e.normalize()),
        Term::Shadow(e, i) => Term::Shadow(e.as_ref().map(|e| e.normalize()), *i),
        other => other.clone(),
    }
}

fn order_sym(mk: fn(Box<Term>, Box<Term>) -> Term, a: Term, b: Term, flatten_events: bool) -> Term {
    if flatten_events {
        if let (Some(mut va), Some(vb)) = (event_multiset(&a), event_multiset(&b)) {
            va.extend(vb);
            return multiset_term(va);
        }
    }
    if b < a {
        mk(Box::new(b), Box::new(a))
    } else {
        mk(Box::new(a), Box::new(b))
    }
}

fn pipeline_step(t: &Term, ctx: &RuleCtx, rooted: bool) -> Option<Term> {
    for rule in RULES {
        if !rule.in_pipeline {
            continue;
        }
        if !rooted && rule.level != RuleLevel::Strong {
            continue;
        }
        if rule.level == RuleLevel::Branching {
            continue;
        }
        if let Some(t2) = (rule.apply)(t, ctx) {
            return Some(t2);
        }
    }
    // descend left to right
    match t {
        Term::Seq(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Alt(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Par(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Comm(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Between(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Unless(a, b) => descend2(t, a, b, ctx, rooted),
        Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) => {
            pipeline_step(x, ctx, rooted).map(|x2| rebuild1(t, x2))
        }
        _ => None,
    }
}

fn descend2(t: &Term, a: &Term, b: &Term, ctx: &RuleCtx, rooted: bool) -> Option<Term> {
    if let Some(a2) = pipeline_step(a, ctx, rooted) {
        return Some(rebuild2(t, a2, b.clone()));
    }
    pipeline_step(b, ctx, rooted).map(|b2| rebuild2(t, a.clone(), b2))
}

fn rebuild1(t: &Term, x: Term) -> Term {
    match t {
        Term::Theta(_) => Term::Theta(Box::new(x)),
        Term::Encap(h, _) => Term::Encap(h.clone(), Box::new(x)),
        Term::Abstract(i, _) => Term::Abstract(i.clone(), Box::new(x)),
        Term::Guard(g, _) => Term::guard(g.clone(), x),
        _ => unreachable!(),
    }
}

fn rebuild2(t: &Term, a: Term, b: Term) -> Term {
    match t {
        Term::Seq(_, _) => Term::seq(a, b),
        Term::Alt(_, _) => Term::alt(a, b),
        Term::Par(_, _) => Term::par(a, b),
        Term::Comm(_, _) => Term::comm(a, b),
        Term::Between(_, _) => Term::between(a, b),
        Term::Unless(_, _) => Term::Unless(Box::new(a), Box::new(b)),
        _ => unreachable!(),
    }
}

fn check_input(t: &Term) -> Result<(), RewriteError> {
    let mut rv = std::collections::BTreeSet::new();
    t.rec_vars(&mut rv);
    if let Some(v) = rv.iter().next() {
        return Err(RewriteError::ContainsRecursion(v.clone()));
    }
    if contains_sum(t) {
        return Err(RewriteError::NotClosed("sum binder present (expand domains first)".into()));
    }
    Ok(())
}

fn contains_sum(t: &Term) -> bool {
    match t {
        Term::Sum(_, _, _) => true,
        Term::Seq(a, b) | Term::Alt(a, b) | Term::Par(a, b) | Term::Comm(a, b) | Term::Between(a, b) => {
            contains_sum(a) || contains_sum(b)
        }
        Term::Unless(a, b) => contains_sum(a) || contains_sum(b),
        Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) => contains_sum(x),
        _ => false,
    }
}

fn normalize_in(t: &Term, ctx: &RuleCtx, rooted: bool) -> Result<Term, RewriteError> {
    check_input(t)?;
    let mut cur = rcanon(t);
    let mut steps = 0usize;
    while let Some(next) = pipeline_step(&cur, ctx, rooted) {
        cur = rcanon(&next);
        steps += 1;
        if steps >= ctx.budget {
            break;
        }
    }
    Ok(cur)
}

/// Normalize a closed, recursion-free, sum-expanded term. Strong-level
/// rules only: the result is strongly equivalent to the input.
pub fn to_basic_term(t: &Term, ctx: &RuleCtx) -> Result<BasicTerm, RewriteError> {
    Ok(BasicTerm(normalize_in(t, ctx, false)?))
}

/// Equational prover: equal normal forms prove the equation at the chosen
/// level; different normal forms prove nothing.
pub fn prove_equal(p: &Term, q: &Term, mode: RewriteMode, ctx: &RuleCtx) -> Result<Proof, RewriteError> {
    let rooted = matches!(mode, RewriteMode::RootedBranching);
    let np = normalize_in(p, ctx, rooted)?;
    let nq = normalize_in(q, ctx, rooted)?;
    Ok(if np == nq { Proof::Proven } else { Proof::Unknown })
}
