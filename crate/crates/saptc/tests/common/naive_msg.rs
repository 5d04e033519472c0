//! Fixpoint oracle for the message equations: apply one law at one position
//! per step until no law applies, then sort xor argument lists. No sharing
//! with `saptc::message::normalize`, which works bottom-up with multiset
//! counting instead.

use saptc::message::{EncKind, Msg};

fn key_cancels(kind: EncKind, dec_key: &Msg, enc_key: &Msg) -> bool {
    match kind {
        EncKind::Sym => dec_key == enc_key,
        EncKind::Pub => match (dec_key, enc_key) {
            (Msg::PrivKey(d), Msg::PubKey(e)) => seed(d) == seed(e),
            _ => false,
        },
        EncKind::Priv => match (dec_key, enc_key) {
            (Msg::PubKey(d), Msg::PrivKey(e)) => seed(d) == seed(e),
            _ => false,
        },
    }
}

fn seed(name: &str) -> &str {
    name.strip_prefix("pk_")
        .or_else(|| name.strip_prefix("sk_"))
        .unwrap_or(name)
}

/// One law application at the outermost position where any law matches,
/// searching depth-first. Returns None when the term is a normal form
/// (up to xor argument order).
fn step(m: &Msg) -> Option<Msg> {
    // Law at the root first.
    if let Some(next) = step_root(m) {
        return Some(next);
    }
    // Otherwise recurse into the first child that can move.
    rebuild_first_child(m)
}

fn step_root(m: &Msg) -> Option<Msg> {
    match m {
        // DEC_k(ENC_k(D)) = D, all three key forms
        Msg::Dec(kind, key, arg) => {
            if let Msg::Enc(ek, ekey, body) = arg.as_ref() {
                if *kind == *ek && key_cancels(*kind, key, ekey) {
                    return Some(body.as_ref().clone());
                }
            }
            None
        }
        // ENC_k(DEC_k(D)) = D, the ciphertext-side dual
        Msg::Enc(kind, key, body) => {
            if let Msg::Dec(dk, dkey, arg) = body.as_ref() {
                if *kind == *dk {
                    let ok = match kind {
                        EncKind::Sym => key == dkey,
                        EncKind::Pub => key_cancels(*kind, dkey, key),
                        EncKind::Priv => key_cancels(*kind, dkey, key),
                    };
                    if ok {
                        return Some(arg.as_ref().clone());
                    }
                }
            }
            None
        }
        // DE-SIGN_pk(SIGN_sk(D)) = D
        Msg::DeSign(key, arg) => {
            if let (Msg::PubKey(p), Msg::Sign(skey, body)) = (key.as_ref(), arg.as_ref()) {
                if let Msg::PrivKey(s) = skey.as_ref() {
                    if seed(p) == seed(s) {
                        return Some(body.as_ref().clone());
                    }
                }
            }
            None
        }
        Msg::Succ(b) if **b == Msg::Bottom => Some(Msg::Bottom),
        Msg::Xor(args) => {
            // associativity: splice one nested xor
            if let Some(i) = args.iter().position(|a| matches!(a, Msg::Xor(_))) {
                let mut out = args.clone();
                if let Msg::Xor(inner) = out.remove(i) {
                    out.splice(i..i, inner);
                }
                return Some(Msg::Xor(out));
            }
            // unit: drop one zero
            if let Some(i) = args.iter().position(|a| *a == Msg::Zero) {
                let mut out = args.clone();
                out.remove(i);
                return Some(Msg::Xor(out));
            }
            // nilpotence: delete one equal pair
            for i in 0..args.len() {
                for j in i + 1..args.len() {
                    if args[i] == args[j] {
                        let mut out = args.clone();
                        out.remove(j);
                        out.remove(i);
                        return Some(Msg::Xor(out));
                    }
                }
            }
            // collapse degenerate lists
            match args.len() {
                0 => Some(Msg::Zero),
                1 => Some(args[0].clone()),
                _ => None,
            }
        }
        _ => None,
    }
}

fn rebuild_first_child(m: &Msg) -> Option<Msg> {
    let mut kids = children(m);
    for k in kids.iter_mut() {
        if let Some(next) = step(k) {
            *k = next;
            return Some(with_children(m, kids));
        }
    }
    None
}

fn children(m: &Msg) -> Vec<Msg> {
    match m {
        Msg::Tuple(xs) | Msg::Xor(xs) => xs.clone(),
        Msg::Enc(_, a, b) | Msg::Dec(_, a, b) | Msg::Sign(a, b) | Msg::DeSign(a, b) | Msg::Mac(a, b) => {
            vec![a.as_ref().clone(), b.as_ref().clone()]
        }
        Msg::Hash(a) | Msg::Succ(a) | Msg::Half(a, _) => vec![a.as_ref().clone()],
        _ => vec![],
    }
}

fn with_children(m: &Msg, kids: Vec<Msg>) -> Msg {
    let mut it = kids.into_iter();
    let mut two = || {
        let a = Box::new(it.next().unwrap());
        let b = Box::new(it.next().unwrap());
        (a, b)
    };
    match m {
        Msg::Tuple(_) => Msg::Tuple(it.collect()),
        Msg::Xor(_) => Msg::Xor(it.collect()),
        Msg::Enc(k, _, _) => {
            let (a, b) = two();
            Msg::Enc(*k, a, b)
        }
        Msg::Dec(k, _, _) => {
            let (a, b) = two();
            Msg::Dec(*k, a, b)
        }
        Msg::Sign(_, _) => {
            let (a, b) = two();
            Msg::Sign(a, b)
        }
        Msg::DeSign(_, _) => {
            let (a, b) = two();
            Msg::DeSign(a, b)
        }
        Msg::Mac(_, _) => {
            let (a, b) = two();
            Msg::Mac(a, b)
        }
        Msg::Hash(_) => Msg::Hash(Box::new(it.next().unwrap())),
        Msg::Succ(_) => Msg::Succ(Box::new(it.next().unwrap())),
        Msg::Half(_, p) => Msg::Half(Box::new(it.next().unwrap()), *p),
        other => other.clone(),
    }
}

fn sort_xors(m: &Msg) -> Msg {
    let sorted_kids: Vec<Msg> = children(m).iter().map(sort_xors).collect();
    let rebuilt = if sorted_kids.is_empty() { m.clone() } else { with_children(m, sorted_kids) };
    if let Msg::Xor(mut xs) = rebuilt {
        xs.sort();
        Msg::Xor(xs)
    } else {
        rebuilt
    }
}

/// The oracle normal form. Sorting xor lists can expose a new pair to
/// cancel (equal-up-to-order elements), so alternate the two passes until
/// nothing changes.
pub fn naive_normalize(m: &Msg) -> Msg {
    let mut cur = m.clone();
    for _ in 0..10_000 {
        match step(&cur) {
            Some(next) => cur = next,
            None => {
                let sorted = sort_xors(&cur);
                if sorted == cur {
                    return cur;
                }
                cur = sorted;
            }
        }
    }
    panic!("oracle did not reach a fixpoint: {cur:?}");
}
