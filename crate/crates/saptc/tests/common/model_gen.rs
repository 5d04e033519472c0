//! Random protocol models exercising the whole surface grammar while
//! staying resolution-consistent: message variables appear only where a
//! binder or a receive argument justifies them, receive arguments never
//! carry plain alphabetic constants (those positions bind), and every
//! non-entry equation restarts itself so no continuation chain folds.
//! Such models are fixpoints of the parser's post-passes, so
//! parse ∘ pretty must reproduce them exactly.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saptc::message::{EncKind, Msg};
use saptc::term::{ActionEvent, ActionKind, Guard, Pattern, ProtocolModel, RecursiveSpec, Term};

const VARS: &[&str] = &["d1", "x", "y", "dm"];
const CONSTS: &[&str] = &["A", "B", "M", "T"];
const EVENTS: &[&str] = &["af", "bf", "work"];
const CHANNELS: &[&str] = &["CA", "CB", "CAB", "CM"];
const KEYS: &[&str] = &["k_AB", "k_AT", "pk_A", "sk_A"];
const NONCES: &[&str] = &["NA", "NB"];

pub struct ModelGen {
    rng: ChaCha8Rng,
}

impl ModelGen {
    pub fn new(seed: u64) -> Self {
        ModelGen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.gen_range(0..xs.len())]
    }

    fn msg(&mut self, d: usize, recv: bool) -> Msg {
        if d == 0 || self.rng.gen_bool(0.45) {
            return match self.rng.gen_range(0..8) {
                0 if !recv => Msg::Const(self.pick(CONSTS).into()),
                0 | 1 => Msg::Var(self.pick(VARS).into()),
                2 => Msg::Const(self.rng.gen_range(0..3).to_string()),
                3 => match self.pick(KEYS) {
                    k if k.starts_with("pk_") => Msg::PubKey(k.into()),
                    k if k.starts_with("sk_") => Msg::PrivKey(k.into()),
                    k => Msg::SymKey(k.into()),
                },
                4 => Msg::Nonce(self.pick(NONCES).into()),
                5 => Msg::Bottom,
                6 => Msg::Top,
                _ => Msg::Zero,
            };
        }
        let kind = match self.rng.gen_range(0..3) {
            0 => EncKind::Sym,
            1 => EncKind::Pub,
            _ => EncKind::Priv,
        };
        let sub = |g: &mut Self| Box::new(g.msg(d - 1, recv));
        match self.rng.gen_range(0..10) {
            0 => Msg::Tuple((0..self.rng.gen_range(2..4)).map(|_| self.msg(d - 1, recv)).collect()),
            1 => Msg::Enc(kind, sub(self), sub(self)),
            2 => Msg::Dec(kind, sub(self), sub(self)),
            3 => Msg::Sign(sub(self), sub(self)),
            4 => Msg::DeSign(sub(self), sub(self)),
            5 => Msg::Hash(sub(self)),
            6 => Msg::Mac(sub(self), sub(self)),
            7 => Msg::Xor(vec![self.msg(d - 1, recv), self.msg(d - 1, recv)]),
            8 => Msg::Succ(sub(self)),
            _ => Msg::Half(sub(self), self.rng.gen_range(1..3)),
        }
    }

    fn guard(&mut self, d: usize) -> Guard {
        if d == 0 || self.rng.gen_bool(0.5) {
            return match self.rng.gen_range(0..4) {
                0 => Guard::TrueG,
                1 => Guard::FalseG,
                2 => Guard::Atom(
                    if self.rng.gen_bool(0.5) { "fresh" } else { "valid" }.into(),
                    vec![self.msg(1, false)],
                ),
                _ => {
                    let l = self.msg(1, false);
                    let r = self.msg(1, false);
                    if self.rng.gen_bool(0.5) {
                        Guard::Eq(l, r)
                    } else {
                        Guard::Neq(l, r)
                    }
                }
            };
        }
        match self.rng.gen_range(0..3) {
            0 => Guard::Not(Box::new(self.guard(d - 1))),
            1 => Guard::And(Box::new(self.guard(d - 1)), Box::new(self.guard(d - 1))),
            _ => Guard::Or(Box::new(self.guard(d - 1)), Box::new(self.guard(d - 1))),
        }
    }

    fn event(&mut self) -> ActionEvent {
        match self.rng.gen_range(0..4) {
            0 => ActionEvent::bare(self.pick(EVENTS)),
            k => {
                let prefix = ["r_", "s_", "c_"][k - 1];
                let name = format!("{prefix}{}", self.pick(CHANNELS));
                let recv = prefix == "r_";
                let args = (0..self.rng.gen_range(0..3)).map(|_| self.msg(1, recv)).collect();
                ActionEvent::new(name, args)
            }
        }
    }

    fn patterns(&mut self) -> Vec<Pattern> {
        let mut ps: Vec<Pattern> = Vec::new();
        for _ in 0..self.rng.gen_range(1..3) {
            let name = if self.rng.gen_bool(0.5) {
                self.pick(EVENTS).to_string()
            } else {
                format!("{}{}", ["r_", "s_", "c_"][self.rng.gen_range(0..3)], self.pick(CHANNELS))
            };
            let args = if self.rng.gen_bool(0.25) {
                Some(vec![Msg::Const(self.pick(CONSTS).into())])
            } else {
                None
            };
            let p = Pattern { name, args };
            if !ps.contains(&p) {
                ps.push(p);
            }
        }
        ps
    }

    fn term(&mut self, d: usize, eqnames: &[String], domains: &[String]) -> Term {
        if d == 0 || self.rng.gen_bool(0.3) {
            return match self.rng.gen_range(0..8) {
                0 | 1 => Term::Act(self.event()),
                2 => Term::Delta,
                3 => Term::Epsilon,
                4 => Term::Tau,
                5 => Term::Shadow(None, 0),
                6 => Term::Shadow(Some(self.event()), self.rng.gen_range(0..3)),
                _ if !eqnames.is_empty() => {
                    Term::Var(eqnames[self.rng.gen_range(0..eqnames.len())].clone())
                }
                _ => Term::Act(self.event()),
            };
        }
        let sub = |g: &mut Self| g.term(d - 1, eqnames, domains);
        match self.rng.gen_range(0..12) {
            0 | 1 => Term::seq(sub(self), sub(self)),
            2 | 3 => Term::alt(sub(self), sub(self)),
            4 => Term::par(sub(self), sub(self)),
            5 => Term::comm(sub(self), sub(self)),
            6 => Term::between(sub(self), sub(self)),
            7 => {
                let g = self.guard(2);
                let body = if self.rng.gen_bool(0.2) { Term::Epsilon } else { sub(self) };
                Term::Guard(g, Box::new(body))
            }
            8 => Term::Theta(Box::new(sub(self))),
            9 => Term::Unless(Box::new(sub(self)), Box::new(sub(self))),
            10 => {
                let ps = self.patterns();
                if self.rng.gen_bool(0.5) {
                    Term::Encap(ps, Box::new(sub(self)))
                } else {
                    Term::Abstract(ps, Box::new(sub(self)))
                }
            }
            _ => {
                let v = self.pick(VARS).to_string();
                let dom = domains[self.rng.gen_range(0..domains.len())].clone();
                Term::Sum(v, dom, Box::new(sub(self)))
            }
        }
    }

    /// A term with no model context: no recursion variables, classified
    /// against its own binders only, as `parse_term` will see it.
    pub fn standalone_term(&mut self) -> Term {
        let t = self.term(3, &[], &["Delta".to_string()]);
        let mut vars = BTreeSet::new();
        binding_names(&t, &mut vars);
        classify_term(&t, &vars)
    }

    pub fn model(&mut self, idx: usize) -> ProtocolModel {
        let mut domains = vec![(
            "Delta".to_string(),
            (0..self.rng.gen_range(1..4)).map(|i| Msg::Const(format!("D{i}"))).collect::<Vec<_>>(),
        )];
        if self.rng.gen_bool(0.3) {
            domains.push(("Aux".to_string(), vec![Msg::Const("M0".into()), Msg::Bottom]));
        }
        let domain_names: Vec<String> = domains.iter().map(|(n, _)| n.clone()).collect();

        let agent_count = self.rng.gen_range(1..4);
        let mut eqnames: Vec<String> = Vec::new();
        let mut layouts = Vec::new();
        for a in 0..agent_count {
            let base = ["A", "B", "C"][a];
            let count = self.rng.gen_range(1..3);
            let names: Vec<String> = (0..count).map(|k| format!("{base}{k}")).collect();
            eqnames.extend(names.iter().cloned());
            layouts.push((base.to_string(), names));
        }
        let spec_names = vec!["X0".to_string()];
        eqnames.extend(spec_names.iter().cloned());

        let mut principals = Vec::new();
        for (base, names) in &layouts {
            let mut equations = Vec::new();
            for (k, n) in names.iter().enumerate() {
                let body = self.term(3, &eqnames, &domain_names);
                let body = if k == 0 {
                    body
                } else {
                    // non-entry equations restart themselves so they are
                    // genuine loops, never foldable continuations
                    Term::alt(Term::seq(Term::Act(self.event()), Term::Var(n.clone())), body)
                };
                equations.push((n.clone(), body));
            }
            let spec = RecursiveSpec { name: base.clone(), entry: equations[0].0.clone(), equations };
            principals.push(consistent_block(spec));
        }

        let spec_body = self.term(3, &eqnames, &domain_names);
        let spec = consistent_block(RecursiveSpec {
            name: "spec".into(),
            equations: vec![(spec_names[0].clone(), spec_body)],
            entry: spec_names[0].clone(),
        });

        let mut composition = Term::Var(principals[0].entry.clone());
        for p in &principals[1..] {
            let rhs = Term::Var(p.entry.clone());
            composition = match self.rng.gen_range(0..3) {
                0 => Term::par(composition, rhs),
                1 => Term::comm(composition, rhs),
                _ => Term::between(composition, rhs),
            };
        }
        if self.rng.gen_bool(0.7) {
            composition = Term::Encap(self.patterns(), Box::new(composition));
        }
        if self.rng.gen_bool(0.7) {
            composition = Term::Abstract(self.patterns(), Box::new(composition));
        }

        let mut couples = Vec::new();
        if self.rng.gen_bool(0.3) {
            couples.push(("A1".to_string(), "A2".to_string()));
        }
        let mut conflicts = Vec::new();
        if self.rng.gen_bool(0.3) {
            conflicts.push((self.pick(EVENTS).to_string(), self.pick(EVENTS).to_string()));
        }

        let mut model = ProtocolModel {
            name: format!("rand-{idx}"),
            domains,
            principals,
            composition,
            h: Vec::new(),
            i: Vec::new(),
            spec,
            couples,
            conflicts,
        };
        let (h, i) = encap_abs_sets(&model);
        model.h = h;
        model.i = i;
        model
    }
}

/// Reclassify Var/Const leaves the way the parser will: a name is a
/// variable iff some sum in the block binds it or a receive argument
/// mentions it.
fn consistent_block(mut block: RecursiveSpec) -> RecursiveSpec {
    let mut vars = BTreeSet::new();
    for (_, b) in &block.equations {
        binding_names(b, &mut vars);
    }
    for (_, b) in block.equations.iter_mut() {
        *b = classify_term(b, &vars);
    }
    block
}

fn binding_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Sum(v, _, body) => {
            out.insert(v.clone());
            binding_names(body, out);
        }
        Term::Act(e) => {
            if matches!(e.kind(), ActionKind::Recv(_)) {
                for a in &e.args {
                    msg_vars(a, out);
                }
            }
        }
        Term::Seq(x, y)
        | Term::Alt(x, y)
        | Term::Par(x, y)
        | Term::Comm(x, y)
        | Term::Between(x, y)
        | Term::Unless(x, y) => {
            binding_names(x, out);
            binding_names(y, out);
        }
        Term::Theta(x) | Term::Encap(_, x) | Term::Abstract(_, x) | Term::Guard(_, x) => {
            binding_names(x, out)
        }
        _ => {}
    }
}

fn msg_vars(m: &Msg, out: &mut BTreeSet<String>) {
    match m {
        Msg::Var(n) => {
            out.insert(n.clone());
        }
        Msg::Hash(x) | Msg::Succ(x) | Msg::Half(x, _) => msg_vars(x, out),
        Msg::Tuple(xs) | Msg::Xor(xs) => xs.iter().for_each(|x| msg_vars(x, out)),
        Msg::Enc(_, k, b) | Msg::Dec(_, k, b) | Msg::Sign(k, b) | Msg::Mac(k, b) | Msg::DeSign(k, b) => {
            msg_vars(k, out);
            msg_vars(b, out);
        }
        _ => {}
    }
}

fn classify_msg(m: &Msg, vars: &BTreeSet<String>) -> Msg {
    match m {
        Msg::Var(n) | Msg::Const(n) if n.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
            if vars.contains(n) {
                Msg::Var(n.clone())
            } else {
                Msg::Const(n.clone())
            }
        }
        Msg::Hash(x) => Msg::Hash(Box::new(classify_msg(x, vars))),
        Msg::Succ(x) => Msg::Succ(Box::new(classify_msg(x, vars))),
        Msg::Half(x, p) => Msg::Half(Box::new(classify_msg(x, vars)), *p),
        Msg::Tuple(xs) => Msg::Tuple(xs.iter().map(|x| classify_msg(x, vars)).collect()),
        Msg::Xor(xs) => Msg::Xor(xs.iter().map(|x| classify_msg(x, vars)).collect()),
        Msg::Enc(k, a, b) => {
            Msg::Enc(*k, Box::new(classify_msg(a, vars)), Box::new(classify_msg(b, vars)))
        }
        Msg::Dec(k, a, b) => {
            Msg::Dec(*k, Box::new(classify_msg(a, vars)), Box::new(classify_msg(b, vars)))
        }
        Msg::Sign(a, b) => Msg::Sign(Box::new(classify_msg(a, vars)), Box::new(classify_msg(b, vars))),
        Msg::DeSign(a, b) => {
            Msg::DeSign(Box::new(classify_msg(a, vars)), Box::new(classify_msg(b, vars)))
        }
        Msg::Mac(a, b) => Msg::Mac(Box::new(classify_msg(a, vars)), Box::new(classify_msg(b, vars))),
        _ => m.clone(),
    }
}

fn classify_guard(g: &Guard, vars: &BTreeSet<String>) -> Guard {
    match g {
        Guard::TrueG | Guard::FalseG => g.clone(),
        Guard::Atom(p, args) => {
            Guard::Atom(p.clone(), args.iter().map(|a| classify_msg(a, vars)).collect())
        }
        Guard::Eq(l, r) => Guard::Eq(classify_msg(l, vars), classify_msg(r, vars)),
        Guard::Neq(l, r) => Guard::Neq(classify_msg(l, vars), classify_msg(r, vars)),
        Guard::Not(x) => Guard::Not(Box::new(classify_guard(x, vars))),
        Guard::And(l, r) => {
            Guard::And(Box::new(classify_guard(l, vars)), Box::new(classify_guard(r, vars)))
        }
        Guard::Or(l, r) => {
            Guard::Or(Box::new(classify_guard(l, vars)), Box::new(classify_guard(r, vars)))
        }
    }
}

fn classify_term(t: &Term, vars: &BTreeSet<String>) -> Term {
    match t {
        Term::Act(e) => Term::Act(ActionEvent::new(
            e.name.clone(),
            e.args.iter().map(|a| classify_msg(a, vars)).collect(),
        )),
        Term::Shadow(e, i) => Term::Shadow(
            e.as_ref().map(|e| {
                ActionEvent::new(e.name.clone(), e.args.iter().map(|a| classify_msg(a, vars)).collect())
            }),
            *i,
        ),
        Term::Var(_) | Term::Delta | Term::Epsilon | Term::Tau => t.clone(),
        Term::Seq(x, y) => Term::seq(classify_term(x, vars), classify_term(y, vars)),
        Term::Alt(x, y) => Term::alt(classify_term(x, vars), classify_term(y, vars)),
        Term::Par(x, y) => Term::par(classify_term(x, vars), classify_term(y, vars)),
        Term::Comm(x, y) => Term::comm(classify_term(x, vars), classify_term(y, vars)),
        Term::Between(x, y) => Term::between(classify_term(x, vars), classify_term(y, vars)),
        Term::Theta(x) => Term::Theta(Box::new(classify_term(x, vars))),
        Term::Unless(x, y) => {
            Term::Unless(Box::new(classify_term(x, vars)), Box::new(classify_term(y, vars)))
        }
        Term::Encap(ps, x) => Term::Encap(
            ps.iter().map(|p| classify_pattern(p, vars)).collect(),
            Box::new(classify_term(x, vars)),
        ),
        Term::Abstract(ps, x) => Term::Abstract(
            ps.iter().map(|p| classify_pattern(p, vars)).collect(),
            Box::new(classify_term(x, vars)),
        ),
        Term::Guard(g, x) => Term::Guard(classify_guard(g, vars), Box::new(classify_term(x, vars))),
        Term::Sum(v, dom, body) => {
            Term::Sum(v.clone(), dom.clone(), Box::new(classify_term(body, vars)))
        }
    }
}

fn classify_pattern(p: &Pattern, vars: &BTreeSet<String>) -> Pattern {
    Pattern {
        name: p.name.clone(),
        args: p.args.as_ref().map(|args| args.iter().map(|a| classify_msg(a, vars)).collect()),
    }
}

/// Same union the parser computes for the model's h and i fields.
fn encap_abs_sets(m: &ProtocolModel) -> (Vec<Pattern>, Vec<Pattern>) {
    fn walk(t: &Term, h: &mut Vec<Pattern>, i: &mut Vec<Pattern>) {
        match t {
            Term::Encap(ps, x) => {
                for p in ps {
                    if !h.contains(p) {
                        h.push(p.clone());
                    }
                }
                walk(x, h, i);
            }
            Term::Abstract(ps, x) => {
                for p in ps {
                    if !i.contains(p) {
                        i.push(p.clone());
                    }
                }
                walk(x, h, i);
            }
            Term::Seq(x, y)
            | Term::Alt(x, y)
            | Term::Par(x, y)
            | Term::Comm(x, y)
            | Term::Between(x, y)
            | Term::Unless(x, y) => {
                walk(x, h, i);
                walk(y, h, i);
            }
            Term::Theta(x) | Term::Guard(_, x) | Term::Sum(_, _, x) => walk(x, h, i),
            _ => {}
        }
    }
    let mut h = Vec::new();
    let mut i = Vec::new();
    walk(&m.composition, &mut h, &mut i);
    for spec in &m.principals {
        for (_, body) in &spec.equations {
            walk(body, &mut h, &mut i);
        }
    }
    for (_, body) in &m.spec.equations {
        walk(body, &mut h, &mut i);
    }
    (h, i)
}
