//! Symbolic cryptographic messages and their equational normal forms.
//!
//! Decryption, like encryption, is a constructor: a decrypt whose argument
//! is a matching-key ciphertext cancels to the plaintext, any other decrypt
//! is an opaque value in its own right (what an attacker holding the wrong
//! key actually has). Xor lists are kept flattened, sorted, and free of
//! even-multiplicity elements, so structural equality of normal forms
//! decides the equational theory.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EncKind {
    /// shared-key scheme, cancelled by the same key
    Sym,
    /// public-key scheme: enc under pk_s, dec under sk_s
    Pub,
    /// private-key scheme: enc under sk_s, dec under pk_s
    Priv,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Msg {
    Const(String),
    Var(String),
    SymKey(String),
    PubKey(String),
    PrivKey(String),
    Nonce(String),
    Tuple(Vec<Msg>),
    Enc(EncKind, Box<Msg>, Box<Msg>),
    /// opaque decryption attempt: key, argument
    Dec(EncKind, Box<Msg>, Box<Msg>),
    Sign(Box<Msg>, Box<Msg>),
    /// opaque signature-opening attempt: key, argument
    DeSign(Box<Msg>, Box<Msg>),
    Hash(Box<Msg>),
    Mac(Box<Msg>, Box<Msg>),
    Xor(Vec<Msg>),
    Succ(Box<Msg>),
    /// an undecryptable fragment of a ciphertext: body, part 1 or 2
    Half(Box<Msg>, u8),
    Bottom,
    Top,
    Zero,
}

pub type Binding = BTreeMap<String, Msg>;

/// pk_/sk_ name pairs belong together when their trailing seed agrees.
fn seed(name: &str) -> &str {
    name.strip_prefix("pk_")
        .or_else(|| name.strip_prefix("sk_"))
        .unwrap_or(name)
}

/// May `dec_kind` under `dec_key` open a ciphertext built with `enc_key`?
fn dec_cancels(kind: EncKind, dec_key: &Msg, enc_key: &Msg) -> bool {
    match kind {
        EncKind::Sym => dec_key == enc_key,
        EncKind::Pub => matches!((dec_key, enc_key), (Msg::PrivKey(d), Msg::PubKey(e)) if seed(d) == seed(e)),
        EncKind::Priv => matches!((dec_key, enc_key), (Msg::PubKey(d), Msg::PrivKey(e)) if seed(d) == seed(e)),
    }
}

/// The ciphertext-side dual: encrypting an opaque decrypt under the paired
/// key restores the original argument.
fn enc_cancels(kind: EncKind, enc_key: &Msg, dec_key: &Msg) -> bool {
    match kind {
        EncKind::Sym => enc_key == dec_key,
        EncKind::Pub => matches!((enc_key, dec_key), (Msg::PubKey(e), Msg::PrivKey(d)) if seed(e) == seed(d)),
        EncKind::Priv => matches!((enc_key, dec_key), (Msg::PrivKey(e), Msg::PubKey(d)) if seed(e) == seed(d)),
    }
}

/// Unique normal form; idempotent and total.
pub fn normalize(m: &Msg) -> Msg {
    match m {
        Msg::Const(_)
        | Msg::Var(_)
        | Msg::SymKey(_)
        | Msg::PubKey(_)
        | Msg::PrivKey(_)
        | Msg::Nonce(_)
        | Msg::Bottom
        | Msg::Top
        | Msg::Zero => m.clone(),
        Msg::Tuple(xs) => Msg::Tuple(xs.iter().map(normalize).collect()),
        Msg::Enc(kind, key, body) => {
            let key = normalize(key);
            let body = normalize(body);
            if let Msg::Dec(dk, dkey, arg) = &body {
                if *dk == *kind && enc_cancels(*kind, &key, dkey) {
                    return arg.as_ref().clone();
                }
            }
            Msg::Enc(*kind, Box::new(key), Box::new(body))
        }
        Msg::Dec(kind, key, arg) => {
            let key = normalize(key);
            let arg = normalize(arg);
            if let Msg::Enc(ek, ekey, body) = &arg {
                if *ek == *kind && dec_cancels(*kind, &key, ekey) {
                    return body.as_ref().clone();
                }
            }
            Msg::Dec(*kind, Box::new(key), Box::new(arg))
        }
        Msg::Sign(key, body) => Msg::Sign(Box::new(normalize(key)), Box::new(normalize(body))),
        Msg::DeSign(key, arg) => {
            let key = normalize(key);
            let arg = normalize(arg);
            if let (Msg::PubKey(p), Msg::Sign(skey, body)) = (&key, &arg) {
                if matches!(skey.as_ref(), Msg::PrivKey(s) if seed(s) == seed(p)) {
                    return body.as_ref().clone();
                }
            }
            Msg::DeSign(Box::new(key), Box::new(arg))
        }
        Msg::Hash(b) => Msg::Hash(Box::new(normalize(b))),
        Msg::Mac(k, b) => Msg::Mac(Box::new(normalize(k)), Box::new(normalize(b))),
        Msg::Succ(b) => {
            let b = normalize(b);
            if b == Msg::Bottom {
                Msg::Bottom
            } else {
                Msg::Succ(Box::new(b))
            }
        }
        Msg::Half(b, part) => Msg::Half(Box::new(normalize(b)), *part),
        Msg::Xor(xs) => {
            let mut counts: BTreeMap<Msg, usize> = BTreeMap::new();
            let mut stack: Vec<Msg> = xs.iter().map(normalize).collect();
            while let Some(x) = stack.pop() {
                match x {
                    Msg::Xor(inner) => stack.extend(inner),
                    Msg::Zero => {}
                    other => *counts.entry(other).or_insert(0) += 1,
                }
            }
            let mut out: Vec<Msg> = counts.into_iter().filter(|(_, n)| n % 2 == 1).map(|(m, _)| m).collect();
            match out.len() {
                0 => Msg::Zero,
                1 => out.pop().unwrap(),
                _ => Msg::Xor(out),
            }
        }
    }
}

/// Equality in the equational theory.
pub fn msg_equal(a: &Msg, b: &Msg) -> bool {
    normalize(a) == normalize(b)
}

/// Replace bound variables, then renormalize (replacement can expose a
/// cancellation).
pub fn substitute(m: &Msg, b: &Binding) -> Msg {
    fn replace(m: &Msg, b: &Binding) -> Msg {
        match m {
            Msg::Var(v) => b.get(v).cloned().unwrap_or_else(|| m.clone()),
            Msg::Tuple(xs) => Msg::Tuple(xs.iter().map(|x| replace(x, b)).collect()),
            Msg::Xor(xs) => Msg::Xor(xs.iter().map(|x| replace(x, b)).collect()),
            Msg::Enc(k, x, y) => Msg::Enc(*k, Box::new(replace(x, b)), Box::new(replace(y, b))),
            Msg::Dec(k, x, y) => Msg::Dec(*k, Box::new(replace(x, b)), Box::new(replace(y, b))),
            Msg::Sign(x, y) => Msg::Sign(Box::new(replace(x, b)), Box::new(replace(y, b))),
            Msg::DeSign(x, y) => Msg::DeSign(Box::new(replace(x, b)), Box::new(replace(y, b))),
            Msg::Mac(x, y) => Msg::Mac(Box::new(replace(x, b)), Box::new(replace(y, b))),
            Msg::Hash(x) => Msg::Hash(Box::new(replace(x, b))),
            Msg::Succ(x) => Msg::Succ(Box::new(replace(x, b))),
            Msg::Half(x, p) => Msg::Half(Box::new(replace(x, b)), *p),
            other => other.clone(),
        }
    }
    normalize(&replace(m, b))
}

/// Does any variable occur (bound occurrences are resolved earlier)?
pub fn has_var(m: &Msg) -> bool {
    match m {
        Msg::Var(_) => true,
        Msg::Tuple(xs) | Msg::Xor(xs) => xs.iter().any(has_var),
        Msg::Enc(_, a, b) | Msg::Dec(_, a, b) | Msg::Sign(a, b) | Msg::DeSign(a, b) | Msg::Mac(a, b) => {
            has_var(a) || has_var(b)
        }
        Msg::Hash(a) | Msg::Succ(a) | Msg::Half(a, _) => has_var(a),
        _ => false,
    }
}

/// Collect free variable names.
pub fn vars_of(m: &Msg, out: &mut Vec<String>) {
    match m {
        Msg::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Msg::Tuple(xs) | Msg::Xor(xs) => xs.iter().for_each(|x| vars_of(x, out)),
        Msg::Enc(_, a, b) | Msg::Dec(_, a, b) | Msg::Sign(a, b) | Msg::DeSign(a, b) | Msg::Mac(a, b) => {
            vars_of(a, out);
            vars_of(b, out);
        }
        Msg::Hash(a) | Msg::Succ(a) | Msg::Half(a, _) => vars_of(a, out),
        _ => {}
    }
}

/// One-way matching: bind `pattern`'s variables so it equals `value`.
/// Both sides are assumed normalized; returns None on mismatch.
pub fn match_msg(pattern: &Msg, value: &Msg, binding: &mut Binding) -> bool {
    match (pattern, value) {
        (Msg::Var(v), _) => match binding.get(v) {
            Some(prev) => prev == value,
            None => {
                binding.insert(v.clone(), value.clone());
                true
            }
        },
        (Msg::Tuple(xs), Msg::Tuple(ys)) | (Msg::Xor(xs), Msg::Xor(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_msg(x, y, binding))
        }
        (Msg::Enc(k1, a1, b1), Msg::Enc(k2, a2, b2)) | (Msg::Dec(k1, a1, b1), Msg::Dec(k2, a2, b2)) => {
            k1 == k2 && match_msg(a1, a2, binding) && match_msg(b1, b2, binding)
        }
        (Msg::Sign(a1, b1), Msg::Sign(a2, b2))
        | (Msg::DeSign(a1, b1), Msg::DeSign(a2, b2))
        | (Msg::Mac(a1, b1), Msg::Mac(a2, b2)) => match_msg(a1, a2, binding) && match_msg(b1, b2, binding),
        (Msg::Hash(a1), Msg::Hash(a2)) | (Msg::Succ(a1), Msg::Succ(a2)) => match_msg(a1, a2, binding),
        (Msg::Half(a1, p1), Msg::Half(a2, p2)) => p1 == p2 && match_msg(a1, a2, binding),
        _ => pattern == value,
    }
}

/// Name classification used by the parser: key prefixes are meaningful,
/// anything else is a plain constant.
pub fn classify_ident(name: &str) -> Msg {
    if name.starts_with("k_") {
        Msg::SymKey(name.into())
    } else if name.starts_with("pk_") {
        Msg::PubKey(name.into())
    } else if name.starts_with("sk_") {
        Msg::PrivKey(name.into())
    } else {
        Msg::Const(name.into())
    }
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, xs: &[Msg]) -> fmt::Result {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        let enc_tag = |k: &EncKind| match k {
            EncKind::Sym => "s",
            EncKind::Pub => "p",
            EncKind::Priv => "v",
        };
        match self {
            Msg::Const(n) | Msg::Var(n) | Msg::SymKey(n) | Msg::PubKey(n) | Msg::PrivKey(n) => write!(f, "{n}"),
            Msg::Nonce(t) => write!(f, "nonce({t})"),
            Msg::Tuple(xs) => {
                write!(f, "(")?;
                list(f, xs)?;
                write!(f, ")")
            }
            Msg::Enc(k, key, body) => write!(f, "enc_{}({key}, {body})", enc_tag(k)),
            Msg::Dec(k, key, arg) => write!(f, "dec_{}({key}, {arg})", enc_tag(k)),
            Msg::Sign(k, b) => write!(f, "sign({k}, {b})"),
            Msg::DeSign(k, b) => write!(f, "de_sign({k}, {b})"),
            Msg::Hash(b) => write!(f, "hash({b})"),
            Msg::Mac(k, b) => write!(f, "mac({k}, {b})"),
            Msg::Xor(xs) => {
                write!(f, "xor(")?;
                list(f, xs)?;
                write!(f, ")")
            }
            Msg::Succ(b) => write!(f, "succ({b})"),
            Msg::Half(b, p) => write!(f, "half{p}({b})"),
            Msg::Bottom => write!(f, "bottom"),
            Msg::Top => write!(f, "top"),
            Msg::Zero => write!(f, "zero"),
        }
    }
}
