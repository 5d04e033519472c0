//! Process terms, guards, recursive specifications, protocol models.

use crate::message::{self, Binding, Msg};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionEvent {
    pub name: String,
    pub args: Vec<Msg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Send(String),
    Recv(String),
    Comm(String),
    Internal,
}

impl ActionEvent {
    pub fn new(name: impl Into<String>, args: Vec<Msg>) -> Self {
        ActionEvent { name: name.into(), args }
    }

    pub fn bare(name: impl Into<String>) -> Self {
        ActionEvent { name: name.into(), args: Vec::new() }
    }

    /// s_/r_/c_ prefixes carry channel structure; everything else is an
    /// internal computation step.
    pub fn kind(&self) -> ActionKind {
        if let Some(ch) = self.name.strip_prefix("s_") {
            ActionKind::Send(ch.to_string())
        } else if let Some(ch) = self.name.strip_prefix("r_") {
            ActionKind::Recv(ch.to_string())
        } else if let Some(ch) = self.name.strip_prefix("c_") {
            ActionKind::Comm(ch.to_string())
        } else {
            ActionKind::Internal
        }
    }

    pub fn channel(&self) -> Option<String> {
        match self.kind() {
            ActionKind::Send(c) | ActionKind::Recv(c) | ActionKind::Comm(c) => Some(c),
            ActionKind::Internal => None,
        }
    }

    pub fn substitute(&self, b: &Binding) -> ActionEvent {
        ActionEvent {
            name: self.name.clone(),
            args: self.args.iter().map(|a| message::substitute(a, b)).collect(),
        }
    }

    pub fn normalize(&self) -> ActionEvent {
        ActionEvent {
            name: self.name.clone(),
            args: self.args.iter().map(message::normalize).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(message::has_var)
    }
}

impl fmt::Display for ActionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Action-name pattern for encapsulation/abstraction sets: a bare name
/// matches any argument list, a name with arguments matches exactly.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    pub name: String,
    pub args: Option<Vec<Msg>>,
}

impl Pattern {
    pub fn name(n: impl Into<String>) -> Self {
        Pattern { name: n.into(), args: None }
    }

    pub fn matches(&self, e: &ActionEvent) -> bool {
        self.name == e.name
            && match &self.args {
                None => true,
                Some(args) => args.len() == e.args.len() && args.iter().zip(&e.args).all(|(p, a)| message::msg_equal(p, a)),
            }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if let Some(args) = &self.args {
            write!(f, "(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    TrueG,
    FalseG,
    Atom(String, Vec<Msg>),
    Eq(Msg, Msg),
    Neq(Msg, Msg),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn substitute(&self, b: &Binding) -> Guard {
        match self {
            Guard::TrueG | Guard::FalseG => self.clone(),
            Guard::Atom(p, args) => Guard::Atom(p.clone(), args.iter().map(|a| message::substitute(a, b)).collect()),
            Guard::Eq(l, r) => Guard::Eq(message::substitute(l, b), message::substitute(r, b)),
            Guard::Neq(l, r) => Guard::Neq(message::substitute(l, b), message::substitute(r, b)),
            Guard::Not(g) => Guard::Not(Box::new(g.substitute(b))),
            Guard::And(l, r) => Guard::And(Box::new(l.substitute(b)), Box::new(r.substitute(b))),
            Guard::Or(l, r) => Guard::Or(Box::new(l.substitute(b)), Box::new(r.substitute(b))),
        }
    }

    pub fn has_var(&self) -> bool {
        match self {
            Guard::TrueG | Guard::FalseG => false,
            Guard::Atom(_, args) => args.iter().any(message::has_var),
            Guard::Eq(l, r) | Guard::Neq(l, r) => message::has_var(l) || message::has_var(r),
            Guard::Not(g) => g.has_var(),
            Guard::And(l, r) | Guard::Or(l, r) => l.has_var() || r.has_var(),
        }
    }

    /// Free of nondeterministic atoms, so truth is decided by the state alone.
    pub fn is_decidable(&self) -> bool {
        match self {
            Guard::TrueG | Guard::FalseG | Guard::Eq(_, _) | Guard::Neq(_, _) => true,
            Guard::Atom(_, _) => false,
            Guard::Not(g) => g.is_decidable(),
            Guard::And(l, r) | Guard::Or(l, r) => l.is_decidable() && r.is_decidable(),
        }
    }

    pub fn negate(&self) -> Guard {
        match self {
            Guard::TrueG => Guard::FalseG,
            Guard::FalseG => Guard::TrueG,
            Guard::Eq(l, r) => Guard::Neq(l.clone(), r.clone()),
            Guard::Neq(l, r) => Guard::Eq(l.clone(), r.clone()),
            Guard::Not(g) => g.as_ref().clone(),
            other => Guard::Not(Box::new(other.clone())),
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // precedence: not > and > or
        fn go(g: &Guard, f: &mut fmt::Formatter<'_>, level: u8) -> fmt::Result {
            let prec = match g {
                Guard::Or(_, _) => 0,
                Guard::And(_, _) => 1,
                _ => 2,
            };
            if prec < level {
                write!(f, "(")?;
            }
            match g {
                Guard::TrueG => write!(f, "true")?,
                Guard::FalseG => write!(f, "false")?,
                Guard::Atom(p, args) => {
                    write!(f, "{p}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Guard::Eq(l, r) => write!(f, "{l} == {r}")?,
                Guard::Neq(l, r) => write!(f, "{l} != {r}")?,
                Guard::Not(inner) => {
                    write!(f, "not ")?;
                    go(inner, f, 2)?;
                }
                Guard::And(l, r) => {
                    go(l, f, 2)?;
                    write!(f, " and ")?;
                    go(r, f, 2)?;
                }
                Guard::Or(l, r) => {
                    go(l, f, 1)?;
                    write!(f, " or ")?;
                    go(r, f, 1)?;
                }
            }
            if prec < level {
                write!(f, ")")?;
            }
            Ok(())
        }
        go(self, f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Act(ActionEvent),
    Delta,
    Epsilon,
    Tau,
    /// `None` is the bare shadow (terminates silently); `Some(e)` is the
    /// placeholder that must fuse with a matching `e` in a parallel
    /// component. The index separates multiple shadows of one action.
    Shadow(Option<ActionEvent>, u32),
    Seq(Box<Term>, Box<Term>),
    Alt(Box<Term>, Box<Term>),
    Par(Box<Term>, Box<Term>),
    Comm(Box<Term>, Box<Term>),
    Between(Box<Term>, Box<Term>),
    Theta(Box<Term>),
    Unless(Box<Term>, Box<Term>),
    Encap(Vec<Pattern>, Box<Term>),
    Abstract(Vec<Pattern>, Box<Term>),
    Guard(Guard, Box<Term>),
    Var(String),
    Sum(String, String, Box<Term>),
}

impl Term {
    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Box::new(a), Box::new(b))
    }
    pub fn alt(a: Term, b: Term) -> Term {
        Term::Alt(Box::new(a), Box::new(b))
    }
    pub fn par(a: Term, b: Term) -> Term {
        Term::Par(Box::new(a), Box::new(b))
    }
    pub fn comm(a: Term, b: Term) -> Term {
        Term::Comm(Box::new(a), Box::new(b))
    }
    pub fn between(a: Term, b: Term) -> Term {
        Term::Between(Box::new(a), Box::new(b))
    }
    pub fn guard(g: Guard, t: Term) -> Term {
        Term::Guard(g, Box::new(t))
    }
    pub fn act(name: &str, args: Vec<Msg>) -> Term {
        Term::Act(ActionEvent::new(name, args))
    }

    /// Left-assoc alternative of a non-empty list; empty list is deadlock.
    /// Right-assoc choice of a list; empty choice is δ.
    pub fn alt_all(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::Delta,
            1 => ts.pop().unwrap(),
            _ => {
                let last = ts.pop().unwrap();
                ts.into_iter().rev().fold(last, |acc, t| Term::alt(t, acc))
            }
        }
    }

    /// Right-assoc sequence of a non-empty list.
    pub fn seq_all(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::Epsilon,
            1 => ts.pop().unwrap(),
            _ => {
                let last = ts.pop().unwrap();
                ts.into_iter().rev().fold(last, |acc, t| Term::seq(t, acc))
            }
        }
    }

    /// Substitute message variables in every action/guard/shadow argument.
    /// Inner sum binders shadow outer bindings of the same name.
    pub fn substitute_msgs(&self, b: &Binding) -> Term {
        if b.is_empty() {
            return self.clone();
        }
        match self {
            Term::Act(e) => Term::Act(e.substitute(b)),
            Term::Delta | Term::Epsilon | Term::Tau | Term::Var(_) => self.clone(),
            Term::Shadow(e, i) => Term::Shadow(e.as_ref().map(|e| e.substitute(b)), *i),
            Term::Seq(x, y) => Term::seq(x.substitute_msgs(b), y.substitute_msgs(b)),
            Term::Alt(x, y) => Term::alt(x.substitute_msgs(b), y.substitute_msgs(b)),
            Term::Par(x, y) => Term::par(x.substitute_msgs(b), y.substitute_msgs(b)),
            Term::Comm(x, y) => Term::comm(x.substitute_msgs(b), y.substitute_msgs(b)),
            Term::Between(x, y) => Term::between(x.substitute_msgs(b), y.substitute_msgs(b)),
            Term::Theta(x) => Term::Theta(Box::new(x.substitute_msgs(b))),
            Term::Unless(x, y) => Term::Unless(Box::new(x.substitute_msgs(b)), Box::new(y.substitute_msgs(b))),
            Term::Encap(h, x) => Term::Encap(h.clone(), Box::new(x.substitute_msgs(b))),
            Term::Abstract(i, x) => Term::Abstract(i.clone(), Box::new(x.substitute_msgs(b))),
            Term::Guard(g, x) => Term::guard(g.substitute(b), x.substitute_msgs(b)),
            Term::Sum(v, dom, body) => {
                if b.contains_key(v) {
                    let mut inner = b.clone();
                    inner.remove(v);
                    Term::Sum(v.clone(), dom.clone(), Box::new(body.substitute_msgs(&inner)))
                } else {
                    Term::Sum(v.clone(), dom.clone(), Box::new(body.substitute_msgs(b)))
                }
            }
        }
    }

    pub fn action_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Act(e) => {
                out.insert(e.name.clone());
            }
            Term::Shadow(Some(e), _) => {
                out.insert(e.name.clone());
            }
            Term::Seq(x, y) | Term::Alt(x, y) | Term::Par(x, y) | Term::Comm(x, y) | Term::Between(x, y) | Term::Unless(x, y) => {
                x.action_names(out);
                y.action_names(out);
            }
            Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) | Term::Sum(_, _, x) => {
                x.action_names(out)
            }
            _ => {}
        }
    }

    pub fn rec_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Seq(x, y) | Term::Alt(x, y) | Term::Par(x, y) | Term::Comm(x, y) | Term::Between(x, y) | Term::Unless(x, y) => {
                x.rec_vars(out);
                y.rec_vars(out);
            }
            Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) | Term::Sum(_, _, x) => {
                x.rec_vars(out)
            }
            _ => {}
        }
    }

    pub fn is_recursion_free(&self) -> bool {
        let mut vars = BTreeSet::new();
        self.rec_vars(&mut vars);
        vars.is_empty()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_term(self, f, 0)
    }
}

// precedence tiers: 0 alt, 1 par/comm/between, 2 seq, 3 atom. A sum's
// body swallows the rest of the sequence level, so sums parenthesize
// like a choice.
fn tier(t: &Term) -> u8 {
    match t {
        Term::Alt(_, _) | Term::Sum(_, _, _) => 0,
        Term::Par(_, _) | Term::Comm(_, _) | Term::Between(_, _) => 1,
        Term::Seq(_, _) => 2,
        _ => 3,
    }
}

fn print_term(t: &Term, f: &mut fmt::Formatter<'_>, level: u8) -> fmt::Result {
    let me = tier(t);
    if me < level {
        write!(f, "(")?;
    }
    match t {
        Term::Act(e) => write!(f, "{e}")?,
        Term::Delta => write!(f, "delta")?,
        Term::Epsilon => write!(f, "eps")?,
        Term::Tau => write!(f, "tau")?,
        Term::Shadow(None, _) => write!(f, "@")?,
        Term::Shadow(Some(e), i) => {
            write!(f, "@{}", e.name)?;
            if *i != 0 {
                write!(f, "#{i}")?;
            }
            if !e.args.is_empty() {
                write!(f, "(")?;
                for (k, a) in e.args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")?;
            }
        }
        Term::Seq(x, y) => {
            // right-assoc chain prints flat
            print_term(x, f, 3)?;
            write!(f, " . ")?;
            print_term(y, f, 2)?;
        }
        Term::Alt(x, y) => {
            // right-assoc chain prints flat
            print_term(x, f, 1)?;
            write!(f, " + ")?;
            print_term(y, f, 0)?;
        }
        Term::Par(x, y) => {
            print_left_tier1(x, t, f)?;
            write!(f, " || ")?;
            print_term(y, f, 2)?;
        }
        Term::Comm(x, y) => {
            print_left_tier1(x, t, f)?;
            write!(f, " | ")?;
            print_term(y, f, 2)?;
        }
        Term::Between(x, y) => {
            print_left_tier1(x, t, f)?;
            write!(f, " <> ")?;
            print_term(y, f, 2)?;
        }
        Term::Theta(x) => {
            write!(f, "theta(")?;
            print_term(x, f, 0)?;
            write!(f, ")")?;
        }
        Term::Unless(x, y) => {
            write!(f, "unless(")?;
            print_term(x, f, 0)?;
            write!(f, ", ")?;
            print_term(y, f, 0)?;
            write!(f, ")")?;
        }
        Term::Encap(h, x) => {
            write!(f, "encap{{")?;
            for (i, p) in h.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, "}}(")?;
            print_term(x, f, 0)?;
            write!(f, ")")?;
        }
        Term::Abstract(i_set, x) => {
            write!(f, "abs{{")?;
            for (i, p) in i_set.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, "}}(")?;
            print_term(x, f, 0)?;
            write!(f, ")")?;
        }
        Term::Guard(g, x) => {
            write!(f, "[{g}]")?;
            if **x != Term::Epsilon {
                write!(f, " ")?;
                print_term(x, f, 3)?;
            }
        }
        Term::Var(x) => write!(f, "{x}")?,
        Term::Sum(v, dom, body) => {
            write!(f, "sum {v} in {dom} . ")?;
            print_term(body, f, 2)?;
        }
    }
    if me < level {
        write!(f, ")")?;
    }
    Ok(())
}

/// Same-operator left children stay flat (left-assoc tier), anything else
/// in tier 1 gets parentheses so `||`/`|`/`<>` never mix silently.
fn print_left_tier1(x: &Term, parent: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let same = matches!(
        (x, parent),
        (Term::Par(_, _), Term::Par(_, _)) | (Term::Comm(_, _), Term::Comm(_, _)) | (Term::Between(_, _), Term::Between(_, _))
    );
    print_term(x, f, if same { 1 } else { 2 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecursiveSpec {
    pub name: String,
    pub equations: Vec<(String, Term)>,
    pub entry: String,
}

impl RecursiveSpec {
    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.equations.iter().find(|(n, _)| n == x).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolModel {
    pub name: String,
    pub domains: Vec<(String, Vec<Msg>)>,
    pub principals: Vec<RecursiveSpec>,
    pub composition: Term,
    pub h: Vec<Pattern>,
    pub i: Vec<Pattern>,
    pub spec: RecursiveSpec,
    /// channels whose same-kind actions must fire jointly with equal
    /// arguments when both ends are ready
    pub couples: Vec<(String, String)>,
    /// declared conflict pairs (#), honored by the rewriter only
    pub conflicts: Vec<(String, String)>,
}

impl ProtocolModel {
    pub fn domain(&self, name: &str) -> Option<&[Msg]> {
        self.domains.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_slice())
    }

    /// Every equation across principals and spec, by qualified name.
    /// Names are global: equation names must not collide between principals.
    pub fn all_equations(&self) -> Vec<(String, Term)> {
        let mut out = Vec::new();
        for p in &self.principals {
            out.extend(p.equations.iter().cloned());
        }
        out
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("unguarded recursion through {}", cycle.join(" -> "))]
    Guardedness { cycle: Vec<String> },
    #[error("unknown domain {0}")]
    UnknownDomain(String),
    #[error("undefined recursion variable {0}")]
    UndefinedVar(String),
}

/// Replace every sum binder by the alternative over its domain, in
/// left-associated domain order. An empty domain is deadlock.
pub fn expand_sum(t: &Term, domains: &[(String, Vec<Msg>)]) -> Result<Term, TermError> {
    Ok(match t {
        Term::Sum(v, dom, body) => {
            let values = domains
                .iter()
                .find(|(n, _)| n == dom)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| TermError::UnknownDomain(dom.clone()))?;
            let body = expand_sum(body, domains)?;
            let mut arms = Vec::new();
            for value in values {
                let mut b = Binding::new();
                b.insert(v.clone(), value);
                arms.push(body.substitute_msgs(&b));
            }
            Term::alt_all(arms)
        }
        Term::Act(_) | Term::Delta | Term::Epsilon | Term::Tau | Term::Shadow(_, _) | Term::Var(_) => t.clone(),
        Term::Seq(x, y) => Term::seq(expand_sum(x, domains)?, expand_sum(y, domains)?),
        Term::Alt(x, y) => Term::alt(expand_sum(x, domains)?, expand_sum(y, domains)?),
        Term::Par(x, y) => Term::par(expand_sum(x, domains)?, expand_sum(y, domains)?),
        Term::Comm(x, y) => Term::comm(expand_sum(x, domains)?, expand_sum(y, domains)?),
        Term::Between(x, y) => Term::between(expand_sum(x, domains)?, expand_sum(y, domains)?),
        Term::Theta(x) => Term::Theta(Box::new(expand_sum(x, domains)?)),
        Term::Unless(x, y) => Term::Unless(Box::new(expand_sum(x, domains)?), Box::new(expand_sum(y, domains)?)),
        Term::Encap(h, x) => Term::Encap(h.clone(), Box::new(expand_sum(x, domains)?)),
        Term::Abstract(i, x) => Term::Abstract(i.clone(), Box::new(expand_sum(x, domains)?)),
        Term::Guard(g, x) => Term::guard(g.clone(), expand_sum(x, domains)?),
    })
}

/// Can the term complete without performing a real action? (τ, ε, shadows
/// and guards do not count as guarding prefixes.)
fn weakly_transparent(t: &Term, eqs: &[(String, Term)], visiting: &mut Vec<String>) -> bool {
    match t {
        Term::Act(_) | Term::Delta => false,
        Term::Epsilon | Term::Tau | Term::Shadow(_, _) => true,
        Term::Seq(x, y) => weakly_transparent(x, eqs, visiting) && weakly_transparent(y, eqs, visiting),
        Term::Alt(x, y) => weakly_transparent(x, eqs, visiting) || weakly_transparent(y, eqs, visiting),
        Term::Par(x, y) | Term::Comm(x, y) | Term::Between(x, y) => {
            weakly_transparent(x, eqs, visiting) && weakly_transparent(y, eqs, visiting)
        }
        Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) | Term::Sum(_, _, x) => {
            weakly_transparent(x, eqs, visiting)
        }
        Term::Unless(x, _) => weakly_transparent(x, eqs, visiting),
        Term::Var(v) => {
            if visiting.contains(v) {
                // a cycle of silent steps is itself unguarded
                return true;
            }
            match eqs.iter().find(|(n, _)| n == v) {
                Some((_, def)) => {
                    visiting.push(v.clone());
                    let r = weakly_transparent(def, eqs, visiting);
                    visiting.pop();
                    r
                }
                None => false,
            }
        }
    }
}

/// Recursion variables reachable before any guarding action prefix.
fn unguarded_vars(t: &Term, eqs: &[(String, Term)], out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Act(_) | Term::Delta | Term::Epsilon | Term::Tau | Term::Shadow(_, _) => {}
        Term::Seq(x, y) => {
            unguarded_vars(x, eqs, out);
            let mut visiting = Vec::new();
            if weakly_transparent(x, eqs, &mut visiting) {
                unguarded_vars(y, eqs, out);
            }
        }
        Term::Alt(x, y) | Term::Par(x, y) | Term::Comm(x, y) | Term::Between(x, y) => {
            unguarded_vars(x, eqs, out);
            unguarded_vars(y, eqs, out);
        }
        Term::Unless(x, y) => {
            unguarded_vars(x, eqs, out);
            unguarded_vars(y, eqs, out);
        }
        Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) | Term::Sum(_, _, x) => {
            unguarded_vars(x, eqs, out)
        }
    }
}

/// Every cycle through the equation graph must pass a real action prefix;
/// τ/ε/shadow prefixes alone admit an infinite silent run.
pub fn validate_guarded(equations: &[(String, Term)]) -> Result<(), TermError> {
    // defined-ness first
    for (_, t) in equations {
        let mut used = BTreeSet::new();
        t.rec_vars(&mut used);
        for v in used {
            if !equations.iter().any(|(n, _)| *n == v) {
                return Err(TermError::UndefinedVar(v));
            }
        }
    }
    // edge X -> Y iff Y occurs unguarded in the definition of X
    let mut edges: Vec<(String, Vec<String>)> = Vec::new();
    for (name, t) in equations {
        let mut out = BTreeSet::new();
        unguarded_vars(t, equations, &mut out);
        edges.push((name.clone(), out.into_iter().collect()));
    }
    // cycle detection with explicit stack for the error report
    let lookup = |n: &str| edges.iter().find(|(m, _)| m == n).map(|(_, vs)| vs.as_slice()).unwrap_or(&[]);
    let mut done: BTreeSet<String> = BTreeSet::new();
    for (start, _) in &edges {
        if done.contains(start) {
            continue;
        }
        let mut stack: Vec<(String, usize)> = vec![(start.clone(), 0)];
        let mut path: Vec<String> = vec![start.clone()];
        while let Some((node, idx)) = stack.last().cloned() {
            let next = lookup(&node).get(idx).cloned();
            match next {
                Some(succ) => {
                    stack.last_mut().unwrap().1 += 1;
                    if let Some(pos) = path.iter().position(|p| *p == succ) {
                        let mut cycle: Vec<String> = path[pos..].to_vec();
                        cycle.push(succ);
                        return Err(TermError::Guardedness { cycle });
                    }
                    if !done.contains(&succ) {
                        stack.push((succ.clone(), 0));
                        path.push(succ);
                    }
                }
                None => {
                    done.insert(node);
                    stack.pop();
                    path.pop();
                }
            }
        }
    }
    Ok(())
}

/// All action names occurring syntactically (after sum expansion), plus the
/// derived communication names for channels with both a send and a receive.
pub fn alphabet(model: &ProtocolModel) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    let mut collect = |t: &Term| {
        if let Ok(expanded) = expand_sum(t, &model.domains) {
            expanded.action_names(&mut names);
        } else {
            t.action_names(&mut names);
        }
    };
    for p in &model.principals {
        for (_, t) in &p.equations {
            collect(t);
        }
    }
    collect(&model.composition);
    let mut comms = BTreeSet::new();
    for n in &names {
        if let Some(ch) = n.strip_prefix("s_") {
            if names.contains(&format!("r_{ch}")) {
                comms.insert(format!("c_{ch}"));
            }
        }
    }
    names.extend(comms);
    names
}
