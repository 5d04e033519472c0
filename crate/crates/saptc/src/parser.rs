//! Text format for protocol models: lexer, recursive-descent parser, and
//! the canonical pretty-printer. `parse` and `pretty` are mutually inverse
//! on canonical text (AST equality); the generator-driven round-trip suite
//! lives in tests/parser_roundtrip.rs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::message::{EncKind, Msg};
use crate::term::{ActionEvent, ActionKind, Guard, Pattern, ProtocolModel, RecursiveSpec, Term};

/// Parse failure at a byte offset, with the token set that would have been
/// accepted there. `expected` is never empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    fn new(position: usize, expected: &[&str], found: impl Into<String>) -> Self {
        ParseError {
            position,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: expected ", self.position)?;
        for (i, e) in self.expected.iter().enumerate() {
            if i > 0 {
                write!(f, "{}", if i + 1 == self.expected.len() { " or " } else { ", " })?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Assign,
    Comma,
    Dot,
    Plus,
    Tilde,
    At,
    HashSign,
    ParOp,
    CommOp,
    BetweenOp,
    EqEq,
    NeqOp,
    Eof,
}

fn tok_desc(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Num(s) => format!("'{s}'"),
        Tok::Eof => "end of input".to_string(),
        p => format!("'{}'", punct_str(p)),
    }
}

fn punct_str(t: &Tok) -> &'static str {
    match t {
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::Assign => "=",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Plus => "+",
        Tok::Tilde => "~",
        Tok::At => "@",
        Tok::HashSign => "#",
        Tok::ParOp => "||",
        Tok::CommOp => "|",
        Tok::BetweenOp => "<>",
        Tok::EqEq => "==",
        Tok::NeqOp => "!=",
        _ => unreachable!(),
    }
}

struct Token {
    tok: Tok,
    pos: usize,
}

/// Keywords, plus every message-function name; none of these can name an
/// event, equation, channel, domain, or protocol.
const RESERVED: &[&str] = &[
    "protocol", "domain", "agent", "compose", "spec", "couple", "conflict", "sum", "in", "delta",
    "eps", "tau", "theta", "unless", "encap", "abs", "true", "false", "not", "and", "or", "fresh",
    "valid", "nonce", "hash", "mac", "xor", "succ", "half1", "half2", "sign", "de_sign", "enc_s",
    "enc_p", "enc_v", "dec_s", "dec_p", "dec_v", "bottom", "top", "zero",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let cs: Vec<(usize, char)> = src.char_indices().collect();
    let n = cs.len();
    let mut toks = Vec::new();
    let mut i = 0;
    let byte_at = |j: usize| if j < n { cs[j].0 } else { src.len() };
    while i < n {
        let (pos, c) = cs[i];
        match c {
            c if c.is_whitespace() => i += 1,
            // '#' glued between an identifier character and a digit is the
            // shadow-index marker; anywhere else it opens a line comment
            '#' if !(i > 0
                && (cs[i - 1].1.is_ascii_alphanumeric() || cs[i - 1].1 == '_')
                && i + 1 < n
                && cs[i + 1].1.is_ascii_digit()) =>
            {
                while i < n && cs[i].1 != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i + 1;
                while j < n {
                    let cj = cs[j].1;
                    if cj.is_ascii_alphanumeric() || cj == '_' {
                        j += 1;
                    } else if cj == '-' && j + 1 < n && cs[j + 1].1.is_ascii_alphanumeric() {
                        j += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Token { tok: Tok::Ident(src[pos..byte_at(j)].to_string()), pos });
                i = j;
            }
            c if c.is_ascii_digit() => {
                let mut j = i + 1;
                while j < n && cs[j].1.is_ascii_digit() {
                    j += 1;
                }
                toks.push(Token { tok: Tok::Num(src[pos..byte_at(j)].to_string()), pos });
                i = j;
            }
            _ => {
                let (tok, width) = match c {
                    '{' => (Tok::LBrace, 1),
                    '}' => (Tok::RBrace, 1),
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    '[' => (Tok::LBrack, 1),
                    ']' => (Tok::RBrack, 1),
                    ',' => (Tok::Comma, 1),
                    '.' => (Tok::Dot, 1),
                    '+' => (Tok::Plus, 1),
                    '~' => (Tok::Tilde, 1),
                    '@' => (Tok::At, 1),
                    '#' => (Tok::HashSign, 1),
                    '=' if i + 1 < n && cs[i + 1].1 == '=' => (Tok::EqEq, 2),
                    '=' => (Tok::Assign, 1),
                    '!' if i + 1 < n && cs[i + 1].1 == '=' => (Tok::NeqOp, 2),
                    '|' if i + 1 < n && cs[i + 1].1 == '|' => (Tok::ParOp, 2),
                    '|' => (Tok::CommOp, 1),
                    '<' if i + 1 < n && cs[i + 1].1 == '>' => (Tok::BetweenOp, 2),
                    // aliases for the notation the models are usually written in
                    '≬' => (Tok::BetweenOp, 1),
                    'τ' => (Tok::Ident("tau".into()), 1),
                    '∂' => (Tok::Ident("encap".into()), 1),
                    _ => {
                        return Err(ParseError::new(pos, &["a token"], format!("'{c}'")));
                    }
                };
                toks.push(Token { tok, pos });
                i += width;
            }
        }
    }
    toks.push(Token { tok: Tok::Eof, pos: src.len() });
    Ok(toks)
}

/// `rCA`-style shorthand for channel actions expands to the canonical
/// underscored spelling; everything else is left alone.
fn canon_event(name: &str) -> String {
    let b = name.as_bytes();
    if b.len() >= 2 && matches!(b[0], b'r' | b's' | b'c') && b[1].is_ascii_uppercase() {
        format!("{}_{}", &name[..1], &name[1..])
    } else {
        name.to_string()
    }
}

// ---------------------------------------------------------------------------
// parser

struct P {
    toks: Vec<Token>,
    i: usize,
}

impl P {
    fn cur(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.i + 1).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.i].pos
    }

    fn bump(&mut self) {
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
    }

    fn err<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), expected, tok_desc(self.cur())))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.cur() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(&[&format!("'{}'", punct_str(&t))])
        }
    }

    fn at_kw(&self, w: &str) -> bool {
        matches!(self.cur(), Tok::Ident(s) if s == w)
    }

    fn eat_kw(&mut self, w: &str) -> bool {
        if self.at_kw(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, w: &str) -> Result<(), ParseError> {
        if self.eat_kw(w) {
            Ok(())
        } else {
            self.err(&[&format!("'{w}'")])
        }
    }

    /// A non-reserved identifier.
    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.cur() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.err(&[what]),
        }
    }

    // --- messages ---

    fn msg(&mut self) -> Result<Msg, ParseError> {
        match self.cur().clone() {
            Tok::Num(d) => {
                self.bump();
                Ok(Msg::Const(d))
            }
            Tok::LParen => {
                self.bump();
                let mut xs = vec![self.msg()?];
                while self.eat(&Tok::Comma) {
                    xs.push(self.msg()?);
                }
                self.expect(Tok::RParen)?;
                Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Msg::Tuple(xs) })
            }
            Tok::Ident(w) => self.msg_ident(&w),
            _ => self.err(&["a message"]),
        }
    }

    fn msg_ident(&mut self, w: &str) -> Result<Msg, ParseError> {
        let enc_kind = |w: &str| match w.as_bytes()[w.len() - 1] {
            b's' => EncKind::Sym,
            b'p' => EncKind::Pub,
            _ => EncKind::Priv,
        };
        let m = match w {
            "bottom" => {
                self.bump();
                Msg::Bottom
            }
            "top" => {
                self.bump();
                Msg::Top
            }
            "zero" => {
                self.bump();
                Msg::Zero
            }
            "nonce" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let tag = self.name("a nonce tag")?;
                self.expect(Tok::RParen)?;
                Msg::Nonce(tag)
            }
            "hash" => Msg::Hash(Box::new(self.unary(w)?)),
            "succ" => Msg::Succ(Box::new(self.unary(w)?)),
            "half1" => Msg::Half(Box::new(self.unary(w)?), 1),
            "half2" => Msg::Half(Box::new(self.unary(w)?), 2),
            "mac" => {
                let (k, b) = self.binary(w)?;
                Msg::Mac(Box::new(k), Box::new(b))
            }
            "sign" => {
                let (k, b) = self.binary(w)?;
                Msg::Sign(Box::new(k), Box::new(b))
            }
            "de_sign" => {
                let (k, b) = self.binary(w)?;
                Msg::DeSign(Box::new(k), Box::new(b))
            }
            "enc_s" | "enc_p" | "enc_v" => {
                let (k, b) = self.binary(w)?;
                Msg::Enc(enc_kind(w), Box::new(k), Box::new(b))
            }
            "dec_s" | "dec_p" | "dec_v" => {
                let (k, b) = self.binary(w)?;
                Msg::Dec(enc_kind(w), Box::new(k), Box::new(b))
            }
            "xor" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut xs = vec![self.msg()?];
                while self.eat(&Tok::Comma) {
                    xs.push(self.msg()?);
                }
                self.expect(Tok::RParen)?;
                Msg::Xor(xs)
            }
            _ if RESERVED.contains(&w) => return self.err(&["a message"]),
            _ if w.starts_with("k_") => {
                self.bump();
                Msg::SymKey(w.to_string())
            }
            _ if w.starts_with("pk_") => {
                self.bump();
                Msg::PubKey(w.to_string())
            }
            _ if w.starts_with("sk_") => {
                self.bump();
                Msg::PrivKey(w.to_string())
            }
            // variable or constant: settled by the block-level resolution pass
            _ => {
                self.bump();
                Msg::Var(w.to_string())
            }
        };
        Ok(m)
    }

    fn unary(&mut self, w: &str) -> Result<Msg, ParseError> {
        self.expect_kw(w)?;
        self.expect(Tok::LParen)?;
        let m = self.msg()?;
        self.expect(Tok::RParen)?;
        Ok(m)
    }

    fn binary(&mut self, w: &str) -> Result<(Msg, Msg), ParseError> {
        self.expect_kw(w)?;
        self.expect(Tok::LParen)?;
        let a = self.msg()?;
        self.expect(Tok::Comma)?;
        let b = self.msg()?;
        self.expect(Tok::RParen)?;
        Ok((a, b))
    }

    fn msg_args(&mut self) -> Result<Vec<Msg>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.cur() != &Tok::RParen {
            args.push(self.msg()?);
            while self.eat(&Tok::Comma) {
                args.push(self.msg()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // --- guards ---

    fn gexpr(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.gand()?;
        while self.eat_kw("or") {
            g = Guard::Or(Box::new(g), Box::new(self.gand()?));
        }
        Ok(g)
    }

    fn gand(&mut self) -> Result<Guard, ParseError> {
        let mut g = self.gnot()?;
        while self.eat_kw("and") {
            g = Guard::And(Box::new(g), Box::new(self.gnot()?));
        }
        Ok(g)
    }

    fn gnot(&mut self) -> Result<Guard, ParseError> {
        if self.eat_kw("not") {
            Ok(Guard::Not(Box::new(self.gnot()?)))
        } else {
            self.gprim()
        }
    }

    fn gprim(&mut self) -> Result<Guard, ParseError> {
        match self.cur().clone() {
            Tok::Ident(w) if w == "true" => {
                self.bump();
                Ok(Guard::TrueG)
            }
            Tok::Ident(w) if w == "false" => {
                self.bump();
                Ok(Guard::FalseG)
            }
            Tok::Ident(w) if w == "fresh" || w == "valid" => {
                self.bump();
                let args = self.msg_args()?;
                Ok(Guard::Atom(w, args))
            }
            Tok::LParen => {
                // try a parenthesized guard first, fall back to a message
                // comparison whose left side is a tuple
                let save = self.i;
                self.bump();
                if let Ok(g) = self.gexpr() {
                    if self.eat(&Tok::RParen) {
                        return Ok(g);
                    }
                }
                self.i = save;
                self.cmp_guard()
            }
            _ => self.cmp_guard(),
        }
    }

    fn cmp_guard(&mut self) -> Result<Guard, ParseError> {
        let l = self.msg()?;
        if self.eat(&Tok::EqEq) {
            Ok(Guard::Eq(l, self.msg()?))
        } else if self.eat(&Tok::NeqOp) {
            Ok(Guard::Neq(l, self.msg()?))
        } else {
            self.err(&["'=='", "'!='"])
        }
    }

    // --- terms ---
    // choice ::= tier1 ('+' choice)?            right-assoc
    // tier1  ::= seq (('||'|'|'|'<>') seq)*     left-assoc
    // seq    ::= primary ('.' seq)?             right-assoc
    // a sum swallows the rest of its sequence level, so it can open any
    // of the three tiers

    fn choice(&mut self) -> Result<Term, ParseError> {
        let t = self.tier1()?;
        if self.eat(&Tok::Plus) {
            Ok(Term::alt(t, self.choice()?))
        } else {
            Ok(t)
        }
    }

    fn tier1(&mut self) -> Result<Term, ParseError> {
        let mut t = self.seq()?;
        loop {
            t = match self.cur() {
                Tok::ParOp => {
                    self.bump();
                    Term::par(t, self.seq()?)
                }
                Tok::CommOp => {
                    self.bump();
                    Term::comm(t, self.seq()?)
                }
                Tok::BetweenOp => {
                    self.bump();
                    Term::between(t, self.seq()?)
                }
                _ => return Ok(t),
            };
        }
    }

    fn seq(&mut self) -> Result<Term, ParseError> {
        // an unparenthesized sum swallows the rest of its sequence level
        if self.at_kw("sum") {
            return self.sum_expr();
        }
        let t = self.primary()?;
        if self.eat(&Tok::Dot) {
            Ok(Term::seq(t, self.seq()?))
        } else {
            Ok(t)
        }
    }

    fn sum_expr(&mut self) -> Result<Term, ParseError> {
        self.expect_kw("sum")?;
        let v = self.name("a binder name")?;
        self.expect_kw("in")?;
        let dom = self.name("a domain name")?;
        self.expect(Tok::Dot)?;
        let body = self.seq()?;
        Ok(Term::Sum(v, dom, Box::new(body)))
    }

    /// Can the current token open a guard body? An identifier that starts
    /// the next equation (`name =`) does not.
    fn guard_body_follows(&self) -> bool {
        match self.cur() {
            Tok::LParen | Tok::LBrack | Tok::At => true,
            Tok::Ident(w) => {
                let opens_term =
                    matches!(w.as_str(), "delta" | "eps" | "tau" | "theta" | "unless" | "encap" | "abs");
                if RESERVED.contains(&w.as_str()) && !opens_term {
                    return false;
                }
                self.peek2() != &Tok::Assign
            }
            _ => false,
        }
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.cur().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.choice()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::LBrack => {
                self.bump();
                let g = self.gexpr()?;
                self.expect(Tok::RBrack)?;
                let body = if self.guard_body_follows() { self.primary()? } else { Term::Epsilon };
                Ok(Term::Guard(g, Box::new(body)))
            }
            Tok::At => {
                self.bump();
                match self.cur().clone() {
                    // an identifier opening the next equation belongs to it,
                    // not to a bare shadow
                    Tok::Ident(w)
                        if !RESERVED.contains(&w.as_str()) && self.peek2() != &Tok::Assign =>
                    {
                        self.bump();
                        let mut idx = 0u32;
                        if self.eat(&Tok::HashSign) {
                            match self.cur().clone() {
                                Tok::Num(d) => {
                                    self.bump();
                                    idx = d.parse().unwrap_or(0);
                                }
                                _ => return self.err(&["a shadow index"]),
                            }
                        }
                        let args =
                            if self.cur() == &Tok::LParen { self.msg_args()? } else { Vec::new() };
                        Ok(Term::Shadow(Some(ActionEvent::new(canon_event(&w), args)), idx))
                    }
                    _ => Ok(Term::Shadow(None, 0)),
                }
            }
            Tok::Ident(w) => match w.as_str() {
                "delta" => {
                    self.bump();
                    Ok(Term::Delta)
                }
                "eps" => {
                    self.bump();
                    Ok(Term::Epsilon)
                }
                "tau" => {
                    self.bump();
                    Ok(Term::Tau)
                }
                "theta" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let t = self.choice()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::Theta(Box::new(t)))
                }
                "unless" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let x = self.choice()?;
                    self.expect(Tok::Comma)?;
                    let y = self.choice()?;
                    self.expect(Tok::RParen)?;
                    Ok(Term::Unless(Box::new(x), Box::new(y)))
                }
                "encap" => {
                    self.bump();
                    let (ps, t) = self.pattern_apply()?;
                    Ok(Term::Encap(ps, Box::new(t)))
                }
                "abs" => {
                    self.bump();
                    let (ps, t) = self.pattern_apply()?;
                    Ok(Term::Abstract(ps, Box::new(t)))
                }
                _ if RESERVED.contains(&w.as_str()) => self.err(&["a term"]),
                _ => {
                    self.bump();
                    if self.cur() == &Tok::LParen {
                        let args = self.msg_args()?;
                        Ok(Term::Act(ActionEvent::new(canon_event(&w), args)))
                    } else {
                        // recursion variable or bare event: settled once all
                        // equation names are known
                        Ok(Term::Var(w))
                    }
                }
            },
            _ => self.err(&["a term"]),
        }
    }

    fn pattern_apply(&mut self) -> Result<(Vec<Pattern>, Term), ParseError> {
        self.expect(Tok::LBrace)?;
        let mut ps = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            ps.push(self.pattern()?);
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::LParen)?;
        let t = self.choice()?;
        self.expect(Tok::RParen)?;
        Ok((ps, t))
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let n = canon_event(&self.name("an action name")?);
        let args = if self.cur() == &Tok::LParen { Some(self.msg_args()?) } else { None };
        Ok(Pattern { name: n, args })
    }

    // --- model sections ---

    fn eqn_follows(&self) -> bool {
        matches!(self.cur(), Tok::Ident(w) if !RESERVED.contains(&w.as_str()))
            && self.peek2() == &Tok::Assign
    }

    fn equations(&mut self, seen: &mut BTreeSet<String>) -> Result<Vec<(String, Term)>, ParseError> {
        let mut eqs = Vec::new();
        while self.eqn_follows() {
            let pos = self.pos();
            let n = self.name("an equation name")?;
            if !seen.insert(n.clone()) {
                return Err(ParseError::new(
                    pos,
                    &["an unused equation name"],
                    format!("'{n}' (already defined)"),
                ));
            }
            self.expect(Tok::Assign)?;
            eqs.push((n, self.choice()?));
        }
        if eqs.is_empty() {
            return self.err(&["an equation"]);
        }
        Ok(eqs)
    }

    fn model(&mut self) -> Result<ProtocolModel, ParseError> {
        self.expect_kw("protocol")?;
        let name = self.name("a protocol name")?;
        self.expect(Tok::LBrace)?;

        let mut domains = Vec::new();
        while self.eat_kw("domain") {
            let dn = self.name("a domain name")?;
            self.expect(Tok::Assign)?;
            self.expect(Tok::LBrace)?;
            let mut members = vec![self.msg()?];
            while self.eat(&Tok::Comma) {
                members.push(self.msg()?);
            }
            self.expect(Tok::RBrace)?;
            domains.push((dn, members));
        }

        let mut seen = BTreeSet::new();
        let mut principals = Vec::new();
        while self.eat_kw("agent") {
            let an = self.name("an agent name")?;
            self.expect(Tok::LBrace)?;
            let eqs = self.equations(&mut seen)?;
            self.expect(Tok::RBrace)?;
            let entry = eqs[0].0.clone();
            principals.push(RecursiveSpec { name: an, equations: eqs, entry });
        }

        self.expect_kw("compose")?;
        self.expect(Tok::Assign)?;
        let composition = self.choice()?;

        self.expect_kw("spec")?;
        self.expect(Tok::LBrace)?;
        let spec_eqs = self.equations(&mut seen)?;
        self.expect(Tok::RBrace)?;
        let spec =
            RecursiveSpec { name: "spec".into(), equations: spec_eqs.clone(), entry: spec_eqs[0].0.clone() };

        let mut couples = Vec::new();
        while self.eat_kw("couple") {
            let a = self.name("a channel name")?;
            self.expect(Tok::Tilde)?;
            let b = self.name("a channel name")?;
            couples.push((a, b));
        }
        let mut conflicts = Vec::new();
        while self.eat_kw("conflict") {
            let a = canon_event(&self.name("an action name")?);
            self.expect(Tok::Tilde)?;
            let b = canon_event(&self.name("an action name")?);
            conflicts.push((a, b));
        }

        self.expect(Tok::RBrace)?;
        if self.cur() != &Tok::Eof {
            return self.err(&["end of input"]);
        }

        let mut m = ProtocolModel {
            name,
            domains,
            principals,
            composition,
            h: Vec::new(),
            i: Vec::new(),
            spec,
            couples,
            conflicts,
        };
        resolve_model(&mut m);
        inline_model(&mut m);
        let (h, i) = encap_abs_sets(&m);
        m.h = h;
        m.i = i;
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// name resolution
//
// The parser reads every plain identifier in message position as a variable
// and every bare identifier in term position as a recursion variable. A
// block-level pass then decides which is which: a message identifier is a
// variable iff some sum in the block binds it or it occurs in a receive
// argument (receive arguments are binding occurrences); a term identifier is
// a recursion variable iff it names an equation.

fn msg_vars(m: &Msg, out: &mut BTreeSet<String>) {
    match m {
        Msg::Var(n) => {
            out.insert(n.clone());
        }
        Msg::Const(_)
        | Msg::SymKey(_)
        | Msg::PubKey(_)
        | Msg::PrivKey(_)
        | Msg::Nonce(_)
        | Msg::Bottom
        | Msg::Top
        | Msg::Zero => {}
        Msg::Hash(x) | Msg::Succ(x) | Msg::Half(x, _) => msg_vars(x, out),
        Msg::Tuple(xs) | Msg::Xor(xs) => {
            for x in xs {
                msg_vars(x, out);
            }
        }
        Msg::Enc(_, k, b) | Msg::Dec(_, k, b) | Msg::Sign(k, b) | Msg::Mac(k, b) | Msg::DeSign(k, b) => {
            msg_vars(k, out);
            msg_vars(b, out);
        }
    }
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

fn fix_msg(m: &Msg, vars: &BTreeSet<String>) -> Msg {
    match m {
        Msg::Var(n) => {
            if vars.contains(n) {
                Msg::Var(n.clone())
            } else {
                Msg::Const(n.clone())
            }
        }
        Msg::Hash(x) => Msg::Hash(Box::new(fix_msg(x, vars))),
        Msg::Succ(x) => Msg::Succ(Box::new(fix_msg(x, vars))),
        Msg::Half(x, p) => Msg::Half(Box::new(fix_msg(x, vars)), *p),
        Msg::Tuple(xs) => Msg::Tuple(xs.iter().map(|x| fix_msg(x, vars)).collect()),
        Msg::Xor(xs) => Msg::Xor(xs.iter().map(|x| fix_msg(x, vars)).collect()),
        Msg::Enc(k, a, b) => Msg::Enc(*k, Box::new(fix_msg(a, vars)), Box::new(fix_msg(b, vars))),
        Msg::Dec(k, a, b) => Msg::Dec(*k, Box::new(fix_msg(a, vars)), Box::new(fix_msg(b, vars))),
        Msg::Sign(a, b) => Msg::Sign(Box::new(fix_msg(a, vars)), Box::new(fix_msg(b, vars))),
        Msg::DeSign(a, b) => Msg::DeSign(Box::new(fix_msg(a, vars)), Box::new(fix_msg(b, vars))),
        Msg::Mac(a, b) => Msg::Mac(Box::new(fix_msg(a, vars)), Box::new(fix_msg(b, vars))),
        _ => m.clone(),
    }
}

fn fix_guard(g: &Guard, vars: &BTreeSet<String>) -> Guard {
    match g {
        Guard::TrueG | Guard::FalseG => g.clone(),
        Guard::Atom(p, args) => Guard::Atom(p.clone(), args.iter().map(|a| fix_msg(a, vars)).collect()),
        Guard::Eq(l, r) => Guard::Eq(fix_msg(l, vars), fix_msg(r, vars)),
        Guard::Neq(l, r) => Guard::Neq(fix_msg(l, vars), fix_msg(r, vars)),
        Guard::Not(x) => Guard::Not(Box::new(fix_guard(x, vars))),
        Guard::And(l, r) => Guard::And(Box::new(fix_guard(l, vars)), Box::new(fix_guard(r, vars))),
        Guard::Or(l, r) => Guard::Or(Box::new(fix_guard(l, vars)), Box::new(fix_guard(r, vars))),
    }
}

fn fix_pattern(p: &Pattern, vars: &BTreeSet<String>) -> Pattern {
    Pattern {
        name: p.name.clone(),
        args: p.args.as_ref().map(|args| args.iter().map(|a| fix_msg(a, vars)).collect()),
    }
}

fn resolve_term(t: &Term, eqnames: &BTreeSet<String>, vars: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(n) => {
            if eqnames.contains(n) {
                t.clone()
            } else {
                Term::Act(ActionEvent::bare(canon_event(n)))
            }
        }
        Term::Act(e) => Term::Act(ActionEvent::new(
            e.name.clone(),
            e.args.iter().map(|a| fix_msg(a, vars)).collect(),
        )),
        Term::Shadow(e, i) => Term::Shadow(
            e.as_ref().map(|e| {
                ActionEvent::new(e.name.clone(), e.args.iter().map(|a| fix_msg(a, vars)).collect())
            }),
            *i,
        ),
        Term::Delta | Term::Epsilon | Term::Tau => t.clone(),
        Term::Seq(x, y) => Term::seq(resolve_term(x, eqnames, vars), resolve_term(y, eqnames, vars)),
        Term::Alt(x, y) => Term::alt(resolve_term(x, eqnames, vars), resolve_term(y, eqnames, vars)),
        Term::Par(x, y) => Term::par(resolve_term(x, eqnames, vars), resolve_term(y, eqnames, vars)),
        Term::Comm(x, y) => Term::comm(resolve_term(x, eqnames, vars), resolve_term(y, eqnames, vars)),
        Term::Between(x, y) => {
            Term::between(resolve_term(x, eqnames, vars), resolve_term(y, eqnames, vars))
        }
        Term::Theta(x) => Term::Theta(Box::new(resolve_term(x, eqnames, vars))),
        Term::Unless(x, y) => Term::Unless(
            Box::new(resolve_term(x, eqnames, vars)),
            Box::new(resolve_term(y, eqnames, vars)),
        ),
        Term::Encap(ps, x) => Term::Encap(
            ps.iter().map(|p| fix_pattern(p, vars)).collect(),
            Box::new(resolve_term(x, eqnames, vars)),
        ),
        Term::Abstract(ps, x) => Term::Abstract(
            ps.iter().map(|p| fix_pattern(p, vars)).collect(),
            Box::new(resolve_term(x, eqnames, vars)),
        ),
        Term::Guard(g, x) => Term::Guard(fix_guard(g, vars), Box::new(resolve_term(x, eqnames, vars))),
        Term::Sum(v, dom, body) => {
            Term::Sum(v.clone(), dom.clone(), Box::new(resolve_term(body, eqnames, vars)))
        }
    }
}

fn resolve_model(m: &mut ProtocolModel) {
    let mut eqnames = BTreeSet::new();
    for p in &m.principals {
        eqnames.extend(p.equations.iter().map(|(n, _)| n.clone()));
    }
    eqnames.extend(m.spec.equations.iter().map(|(n, _)| n.clone()));

    let no_vars = BTreeSet::new();
    for (_, members) in &mut m.domains {
        for x in members.iter_mut() {
            *x = fix_msg(x, &no_vars);
        }
    }
    for block in m.principals.iter_mut().chain(std::iter::once(&mut m.spec)) {
        let mut vars = BTreeSet::new();
        for (_, body) in &block.equations {
            binding_names(body, &mut vars);
        }
        for (_, body) in block.equations.iter_mut() {
            *body = resolve_term(body, &eqnames, &vars);
        }
    }
    let mut cvars = BTreeSet::new();
    binding_names(&m.composition, &mut cvars);
    m.composition = resolve_term(&m.composition, &eqnames, &cvars);
}

// ---------------------------------------------------------------------------
// continuation inlining
//
// Paper-style blocks spell one behavior as a chain of numbered equations
// (A, A2, A3, ...) whose later members mention data bound earlier in the
// chain. Substituting the chain back together puts those occurrences under
// their binders. Only equations that cannot restart themselves without
// passing through a protected equation are folded; genuine loops stay.

fn subst_rec_var(t: &Term, name: &str, repl: &Term) -> Term {
    match t {
        Term::Var(n) if n == name => repl.clone(),
        Term::Var(_) | Term::Act(_) | Term::Delta | Term::Epsilon | Term::Tau | Term::Shadow(_, _) => {
            t.clone()
        }
        Term::Seq(x, y) => Term::seq(subst_rec_var(x, name, repl), subst_rec_var(y, name, repl)),
        Term::Alt(x, y) => Term::alt(subst_rec_var(x, name, repl), subst_rec_var(y, name, repl)),
        Term::Par(x, y) => Term::par(subst_rec_var(x, name, repl), subst_rec_var(y, name, repl)),
        Term::Comm(x, y) => Term::comm(subst_rec_var(x, name, repl), subst_rec_var(y, name, repl)),
        Term::Between(x, y) => {
            Term::between(subst_rec_var(x, name, repl), subst_rec_var(y, name, repl))
        }
        Term::Theta(x) => Term::Theta(Box::new(subst_rec_var(x, name, repl))),
        Term::Unless(x, y) => Term::Unless(
            Box::new(subst_rec_var(x, name, repl)),
            Box::new(subst_rec_var(y, name, repl)),
        ),
        Term::Encap(ps, x) => Term::Encap(ps.clone(), Box::new(subst_rec_var(x, name, repl))),
        Term::Abstract(ps, x) => Term::Abstract(ps.clone(), Box::new(subst_rec_var(x, name, repl))),
        Term::Guard(g, x) => Term::Guard(g.clone(), Box::new(subst_rec_var(x, name, repl))),
        Term::Sum(v, dom, body) => {
            Term::Sum(v.clone(), dom.clone(), Box::new(subst_rec_var(body, name, repl)))
        }
    }
}

fn term_refs(t: &Term) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    t.rec_vars(&mut s);
    s
}

/// Can `start` reach itself in the block's reference graph without stepping
/// through a protected equation?
fn restarts(start: &str, refs: &BTreeMap<String, BTreeSet<String>>, protected: &BTreeSet<String>) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<String> = refs.get(start).map(|r| r.iter().cloned().collect()).unwrap_or_default();
    while let Some(m) = stack.pop() {
        if m == start {
            return true;
        }
        if !seen.insert(m.clone()) || protected.contains(&m) {
            continue;
        }
        if let Some(rs) = refs.get(&m) {
            stack.extend(rs.iter().cloned());
        }
    }
    false
}

fn inline_block(block: &mut RecursiveSpec, protected: &BTreeSet<String>) {
    loop {
        let names: BTreeSet<String> = block.equations.iter().map(|(n, _)| n.clone()).collect();
        let refs: BTreeMap<String, BTreeSet<String>> = block
            .equations
            .iter()
            .map(|(n, b)| (n.clone(), term_refs(b).intersection(&names).cloned().collect()))
            .collect();
        let referenced: BTreeSet<&String> = refs.values().flatten().collect();
        let candidates: BTreeSet<String> = names
            .iter()
            .filter(|n| {
                !protected.contains(*n) && referenced.contains(n) && !restarts(n, &refs, protected)
            })
            .cloned()
            .collect();
        // fold a chain sink first so bodies are complete when substituted
        let Some(sink) = candidates
            .iter()
            .find(|c| refs[*c].intersection(&candidates).next().is_none())
            .cloned()
        else {
            return;
        };
        let body = block.equations.iter().find(|(n, _)| *n == sink).unwrap().1.clone();
        block.equations.retain(|(n, _)| *n != sink);
        for (_, b) in block.equations.iter_mut() {
            *b = subst_rec_var(b, &sink, &body);
        }
    }
}

fn inline_model(m: &mut ProtocolModel) {
    let block_count = m.principals.len() + 1;
    for bi in 0..block_count {
        let mut protected: BTreeSet<String> = term_refs(&m.composition);
        for (oi, other) in m.principals.iter().enumerate() {
            if oi != bi {
                for (_, b) in &other.equations {
                    protected.extend(term_refs(b));
                }
            }
        }
        if bi != m.principals.len() {
            for (_, b) in &m.spec.equations {
                protected.extend(term_refs(b));
            }
        }
        let block = if bi == m.principals.len() { &mut m.spec } else { &mut m.principals[bi] };
        protected.insert(block.entry.clone());
        inline_block(block, &protected);
    }
}

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

// ---------------------------------------------------------------------------
// entry points

pub fn parse(src: &str) -> Result<ProtocolModel, ParseError> {
    let toks = lex(src)?;
    let mut p = P { toks, i: 0 };
    if p.cur() == &Tok::Eof {
        return p.err(&["'protocol'"]);
    }
    p.model()
}

/// A standalone term with no model context: every bare identifier is an
/// event, message identifiers resolve against the term's own binders.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut p = P { toks, i: 0 };
    let t = p.choice()?;
    if p.cur() != &Tok::Eof {
        return p.err(&["end of input"]);
    }
    let mut vars = BTreeSet::new();
    binding_names(&t, &mut vars);
    Ok(resolve_term(&t, &BTreeSet::new(), &vars))
}

pub fn pretty(m: &ProtocolModel) -> String {
    let mut s = String::new();
    s.push_str(&format!("protocol {} {{\n", m.name));
    for (dn, members) in &m.domains {
        let ms: Vec<String> = members.iter().map(|x| x.to_string()).collect();
        s.push_str(&format!("  domain {dn} = {{ {} }}\n", ms.join(", ")));
    }
    for p in &m.principals {
        s.push_str(&format!("\n  agent {} {{\n", p.name));
        for (n, b) in &p.equations {
            s.push_str(&format!("    {n} = {b}\n"));
        }
        s.push_str("  }\n");
    }
    s.push_str(&format!("\n  compose = {}\n", m.composition));
    s.push_str("\n  spec {\n");
    for (n, b) in &m.spec.equations {
        s.push_str(&format!("    {n} = {b}\n"));
    }
    s.push_str("  }\n");
    if !m.couples.is_empty() || !m.conflicts.is_empty() {
        s.push('\n');
    }
    for (a, b) in &m.couples {
        s.push_str(&format!("  couple {a} ~ {b}\n"));
    }
    for (a, b) in &m.conflicts {
        s.push_str(&format!("  conflict {a} ~ {b}\n"));
    }
    s.push_str("}\n");
    s
}
