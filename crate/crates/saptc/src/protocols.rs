//! Built-in protocol models and the verification pipeline.
//!
//! Every catalogue entry is a source template: `source(name, n)` renders the
//! model text with the payload domain `Delta` instantiated to `n` constants,
//! and `builtin` parses that text. The corpus files under `corpus/` hold
//! exactly `source(name, 1)`, so a report computed from the embedded model
//! and one computed from the parsed file cannot drift apart.
//!
//! Verification builds the LTS of the composition and of the declared
//! specification, then decides rooted branching bisimilarity.

use std::time::{Duration, Instant};

use serde_json::json;

use crate::equivalence::{
    counterexample_json, minimize, rooted_branching_bisim, Counterexample, Mode,
};
use crate::parser::{parse, ParseError};
use crate::semantics::{generate_lts, generate_spec_lts, BuildConfig, SemError};
use crate::term::{ProtocolModel, RecursiveSpec};

// ---------------------------------------------------------------------------
// catalogue

struct Entry {
    name: &'static str,
    /// section marker printed by `list`, for cross-referencing write-ups
    anchor: &'static str,
    template: &'static str,
}

static ENTRIES: &[Entry] = &[
    Entry { name: "private-channel", anchor: "§4.8.1", template: PRIVATE_CHANNEL },
    Entry { name: "sym-secure-comm", anchor: "§4.8.2", template: SYM_SECURE_COMM },
    Entry { name: "sym-replay-attack", anchor: "§4.8.3", template: SYM_REPLAY_ATTACK },
    Entry { name: "kesc", anchor: "§5.1", template: KESC },
    Entry { name: "kepc-mitm", anchor: "§5.2", template: KEPC_MITM },
    Entry { name: "interlock-mitm", anchor: "§5.3", template: INTERLOCK_MITM },
    Entry { name: "keds-mitm", anchor: "§5.4", template: KEDS_MITM },
    Entry { name: "kmt", anchor: "§5.5", template: KMT },
    Entry { name: "kmb", anchor: "§5.6", template: KMB },
    Entry { name: "mutual-auth-interlock", anchor: "§6.1", template: MUTUAL_AUTH_INTERLOCK },
    Entry { name: "skid", anchor: "§6.2", template: SKID },
    Entry { name: "wide-mouth-frog", anchor: "§7.1", template: WIDE_MOUTH_FROG },
    Entry { name: "yahalom", anchor: "§7.2", template: YAHALOM },
    Entry { name: "needham-schroeder", anchor: "§7.3", template: NEEDHAM_SCHROEDER },
    Entry { name: "otway-rees", anchor: "§7.4", template: OTWAY_REES },
];

/// All built-in protocol names, in catalogue order.
pub fn catalogue() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// Section marker for a catalogue entry.
pub fn anchor(name: &str) -> Option<&'static str> {
    ENTRIES.iter().find(|e| e.name == name).map(|e| e.anchor)
}

fn entry(name: &str) -> Result<&'static Entry, ProtocolError> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| ProtocolError::UnknownProtocol(name.into()))
}

// ---------------------------------------------------------------------------
// errors, config, reports

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown protocol: {0}")]
    UnknownProtocol(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    /// number of distinct payload constants in Delta
    pub delta_size: usize,
    pub max_states: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { delta_size: 1, max_states: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    MatchesSpec,
    Deviates(Counterexample),
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub protocol: String,
    pub verdict: Verdict,
    pub lts_states: usize,
    pub lts_transitions: usize,
    /// state count of the branching-bisimulation quotient of the composition
    pub minimized_states: usize,
    pub wall_time: Duration,
    pub config: VerifyConfig,
}

impl VerificationReport {
    pub fn matches_spec(&self) -> bool {
        self.verdict == Verdict::MatchesSpec
    }

    /// Stable serialization; wall time is deliberately left out so two runs
    /// over the same model compare byte-identical.
    pub fn to_json(&self) -> serde_json::Value {
        let verdict = match &self.verdict {
            Verdict::MatchesSpec => json!("matches_spec"),
            Verdict::Deviates(c) => json!({ "deviates": counterexample_json(c) }),
        };
        json!({
            "protocol": self.protocol,
            "verdict": verdict,
            "lts_states": self.lts_states,
            "lts_transitions": self.lts_transitions,
            "minimized_states": self.minimized_states,
            "config": {
                "delta_size": self.config.delta_size,
                "max_states": self.config.max_states,
            },
        })
    }
}

// ---------------------------------------------------------------------------
// entry points

fn delta_domain(n: usize) -> String {
    let ds: Vec<String> = (0..n.max(1)).map(|k| format!("D{k}")).collect();
    format!("domain Delta = {{ {} }}", ds.join(", "))
}

/// Render a catalogue entry's model text with `Delta` at the given size.
pub fn source(name: &str, delta_size: usize) -> Result<String, ProtocolError> {
    Ok(entry(name)?.template.replace("@DELTA@", &delta_domain(delta_size)))
}

/// Parse a catalogue entry at the given payload-domain size.
pub fn builtin(name: &str, delta_size: usize) -> Result<ProtocolModel, ProtocolError> {
    Ok(parse(&source(name, delta_size)?)?)
}

/// The declared external-behavior specification of a catalogue entry.
pub fn specification(name: &str, delta_size: usize) -> Result<RecursiveSpec, ProtocolError> {
    Ok(builtin(name, delta_size)?.spec)
}

/// Verify a catalogue entry against its declared specification.
pub fn verify(name: &str, cfg: &VerifyConfig) -> Result<VerificationReport, ProtocolError> {
    let model = builtin(name, cfg.delta_size)?;
    verify_model(&model, cfg)
}

/// Verify an already-parsed model against its declared specification.
pub fn verify_model(model: &ProtocolModel, cfg: &VerifyConfig) -> Result<VerificationReport, ProtocolError> {
    let start = Instant::now();
    let bc = BuildConfig { max_states: cfg.max_states, ..BuildConfig::default() };
    let lts = generate_lts(model, &bc)?;
    let spec = generate_spec_lts(model, &bc)?;
    let verdict = rooted_branching_bisim(&lts, &spec);
    let minimized = minimize(&lts, Mode::Branching);
    let verdict = if verdict.equivalent {
        Verdict::MatchesSpec
    } else {
        Verdict::Deviates(verdict.counterexample.expect("inequivalent verdicts carry a counterexample"))
    };
    Ok(VerificationReport {
        protocol: model.name.clone(),
        verdict,
        lts_states: lts.states.len(),
        lts_transitions: lts.trans.len(),
        minimized_states: minimized.states.len(),
        wall_time: start.elapsed(),
        config: cfg.clone(),
    })
}

// ---------------------------------------------------------------------------
// models
//
// Layout conventions shared by all entries: principals are written as short
// equation chains; a `Sys` block ties one protocol round together and loops,
// so the external behavior is the round body repeated. Channel ends that
// must synchronize are encapsulated; communications and cryptographic
// bookkeeping actions are abstracted.

const PRIVATE_CHANNEL: &str = r#"protocol private-channel {
  @DELTA@

  agent A {
    A = sum D in Delta . r_CA(D) . A2
    A2 = af . A3
    A3 = s_CAB(D)
  }

  agent B {
    B = r_CAB(D) . B2
    B2 = bf . B3
    B3 = s_CB(D)
  }

  agent Sys {
    P = abs{c_CAB, af, bf}(encap{r_CAB, s_CAB}(A <> B)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CA(D) . s_CB(D) . X
  }
}
"#;

const SYM_SECURE_COMM: &str = r#"protocol sym-secure-comm {
  @DELTA@

  agent A {
    A = sum D in Delta . r_CA(D) . A2
    A2 = enc_kAB(D) . A3
    A3 = s_CAB(enc_s(k_AB, D)) || s_CAE(enc_s(k_AB, D))
  }

  agent B {
    B = r_CAB(enc_s(k_AB, D)) . B2
    B2 = dec_kAB(enc_s(k_AB, D)) . B3
    B3 = s_CB(dec_s(k_AB, enc_s(k_AB, D)))
  }

  agent E {
    E = r_CAE(enc_s(k_AB, D)) . E2
    E2 = dec_kE(enc_s(k_AB, D)) . E3
    E3 = [k_E != k_AB] s_CE(dec_s(k_E, enc_s(k_AB, D)))
       + [k_E == k_AB] s_CE(D)
  }

  agent Sys {
    P = abs{c_CAB, c_CAE, enc_kAB, dec_kAB, dec_kE}(
          encap{r_CAB, s_CAB, r_CAE, s_CAE}(A <> B <> E)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CA(D) . (s_CB(D) <> s_CE(dec_s(k_E, enc_s(k_AB, D)))) . X
  }
}
"#;

const SYM_REPLAY_ATTACK: &str = r#"protocol sym-replay-attack {
  @DELTA@

  agent A {
    A = sum D in Delta . r_CA(D) . A2
    A2 = enc_kAB(D) . A3
    A3 = s_CAB(enc_s(k_AB, D)) || s_CAE(enc_s(k_AB, D))
  }

  # Bob serves the direct copy and the replayed copy independently.
  agent B {
    B = BA <> BE
    BA = r_CAB(enc_s(k_AB, D)) . dec_kAB(enc_s(k_AB, D)) . s_CB(dec_s(k_AB, enc_s(k_AB, D)))
    BE = r_CEB(enc_s(k_AB, Dr)) . dec_kAB(enc_s(k_AB, Dr)) . s_CB(dec_s(k_AB, enc_s(k_AB, Dr)))
  }

  agent E {
    E = r_CAE(enc_s(k_AB, D)) . E2
    E2 = dec_kE(enc_s(k_AB, D)) . E3
    E3 = s_CEB(enc_s(k_AB, D))
  }

  agent Sys {
    P = abs{c_CAB, c_CAE, c_CEB, enc_kAB, dec_kAB, dec_kE}(
          encap{r_CAB, s_CAB, r_CAE, s_CAE, r_CEB, s_CEB}(A <> B <> E)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CA(D) . (s_CB(D) <> s_CB(D)) . X
  }
}
"#;

const KESC: &str = r#"protocol kesc {
  @DELTA@

  # Trent provisions the session key k_AB under the long-term keys k_AT and
  # k_BT; Alice relays Bob's copy, then the data flows under k_AB.
  agent A {
    A = sum D in Delta . r_CA(D) . A2
    A2 = s_CAT(M) . A3
    A3 = r_CTA(enc_s(k_AT, k_AB), enc_s(k_BT, k_AB)) . A4
    A4 = dec_kAT(enc_s(k_AT, k_AB)) . A5
    A5 = s_CAB(enc_s(k_BT, k_AB)) . A6
    A6 = enc_kAB(D) . A7
    A7 = s_CAB(enc_s(k_AB, D))
  }

  agent B {
    B = r_CAB(enc_s(k_BT, k_AB)) . B2
    B2 = dec_kBT(enc_s(k_BT, k_AB)) . B3
    B3 = r_CAB(enc_s(k_AB, D)) . B4
    B4 = dec_kAB(enc_s(k_AB, D)) . B5
    B5 = s_CB(D)
  }

  agent T {
    T = r_CAT(M) . T2
    T2 = rsg_kAB . T3
    T3 = (enc_kAT(k_AB) || enc_kBT(k_AB)) . T4
    T4 = s_CTA(enc_s(k_AT, k_AB), enc_s(k_BT, k_AB))
  }

  agent Sys {
    P = abs{c_CAT, c_CTA, c_CAB, rsg_kAB, enc_kAT, enc_kBT, dec_kAT, enc_kAB, dec_kBT, dec_kAB}(
          encap{r_CAT, s_CAT, r_CTA, s_CTA, r_CAB, s_CAB}(A <> B <> T)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CA(D) . s_CB(D) . X
  }
}
"#;

const KEPC_MITM: &str = r#"protocol kepc-mitm {
  @DELTA@

  # Mallory intercepts the key request, substitutes his own public key, and
  # leaks every payload on C_M before re-encrypting it for Bob.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = s_CAM(Me) . A3
    A3 = r_CMA(pk_M) . A4
    A4 = enc_pkM(D) . A5
    A5 = s_CAM(enc_p(pk_M, D))
  }

  agent B {
    B = r_CMB(Me) . B2
    B2 = s_CBM(pk_B) . B3
    B3 = r_CMB(enc_p(pk_B, D)) . B4
    B4 = dec_skB(enc_p(pk_B, D)) . B5
    B5 = s_CBO(D)
  }

  agent Ma {
    Ma = r_CAM(Me) . Ma2
    Ma2 = s_CMB(Me) . Ma3
    Ma3 = r_CBM(pk_B) . Ma4
    Ma4 = s_CMA(pk_M) . Ma5
    Ma5 = r_CAM(enc_p(pk_M, D)) . Ma6
    Ma6 = dec_skM(enc_p(pk_M, D)) . Ma7
    Ma7 = s_CM(D) . Ma8
    Ma8 = enc_pkB(D) . Ma9
    Ma9 = s_CMB(enc_p(pk_B, D))
  }

  agent Sys {
    P = abs{c_CAM, c_CMB, c_CBM, c_CMA, enc_pkM, dec_skB, dec_skM, enc_pkB}(
          encap{r_CAM, s_CAM, r_CMB, s_CMB, r_CBM, s_CBM, r_CMA, s_CMA}(A <> B <> Ma)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . s_CM(D) . s_CBO(D) . X
  }
}
"#;

const INTERLOCK_MITM: &str = r#"protocol interlock-mitm {
  @DELTA@
  domain Forged = { DA_f, DB_f }

  # Ciphertexts travel as two halves and neither half decrypts alone, so
  # Mallory must substitute his own payloads wholesale; the receivers
  # recombine the halves under an equality guard.
  agent A {
    A = sum DA in Delta . r_CAI(DA) . A2
    A2 = enc_pkM(DA) . A3
    A3 = s_CAM(half1(enc_p(pk_M, DA))) . A4
    A4 = r_CMA(half1(enc_p(pk_A, Db1))) . A5
    A5 = s_CAM(half2(enc_p(pk_M, DA))) . A6
    A6 = r_CMA(half2(enc_p(pk_A, Db2))) . A7
    A7 = [Db1 == Db2] dec_skA(enc_p(pk_A, Db1)) . A8
    A8 = s_CAO(Db1)
  }

  agent B {
    B = r_CMB(half1(enc_p(pk_B, Da1))) . B2
    B2 = sum DB in Delta . r_CBI(DB) . B3
    B3 = enc_pkM(DB) . B4
    B4 = s_CBM(half1(enc_p(pk_M, DB))) . B5
    B5 = r_CMB(half2(enc_p(pk_B, Da2))) . B6
    B6 = [Da1 == Da2] dec_skB(enc_p(pk_B, Da1)) . B7
    B7 = s_CBO(Da1) . B8
    B8 = s_CBM(half2(enc_p(pk_M, DB)))
  }

  agent Ma {
    Ma = r_CAM(half1(enc_p(pk_M, Da))) . Ma2
    Ma2 = enc_pkB(DA_f) . Ma3
    Ma3 = s_CMB(half1(enc_p(pk_B, DA_f))) . Ma4
    Ma4 = r_CBM(half1(enc_p(pk_M, Db))) . Ma5
    Ma5 = enc_pkA(DB_f) . Ma6
    Ma6 = s_CMA(half1(enc_p(pk_A, DB_f))) . Ma7
    Ma7 = r_CAM(half2(enc_p(pk_M, Da2))) . Ma8
    Ma8 = s_CMB(half2(enc_p(pk_B, DA_f))) . Ma9
    Ma9 = r_CBM(half2(enc_p(pk_M, Db2))) . Ma10
    Ma10 = s_CMA(half2(enc_p(pk_A, DB_f)))
  }

  agent Sys {
    P = abs{c_CAM, c_CMB, c_CBM, c_CMA, enc_pkM, enc_pkB, enc_pkA, dec_skA, dec_skB}(
          encap{r_CAM, s_CAM, r_CMB, s_CMB, r_CBM, s_CBM, r_CMA, s_CMA}(A <> B <> Ma)) . P
  }

  compose = P

  spec {
    X = sum DA in Delta . r_CAI(DA) . sum DB in Delta . r_CBI(DB) . s_CBO(DA_f) . s_CAO(DB_f) . X
  }
}
"#;

const KEDS_MITM: &str = r#"protocol keds-mitm {
  @DELTA@

  # Trent-signed public keys carry the owner's identity; Alice checks the
  # identity before encrypting, so Mallory only ever harvests bottom.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = s_CAM(Me) . A3
    A3 = r_CMA(sign(sk_T, (d1, d2))) . A4
    A4 = de_sign_pkT(sign(sk_T, (d1, d2))) . A5
    A5 = [d1 == B] enc_pkB(D) . s_CAM(enc_p(pk_B, D))
       + [d1 != B] enc_pkM(bottom) . s_CAM(enc_p(pk_M, bottom))
  }

  agent B {
    B = r_CMB(Me) . B2
    B2 = s_CBM(sign(sk_T, (B, pk_B))) . B3
    B3 = r_CMB(enc_p(pk_B, bottom)) . B4
    B4 = dec_skB(enc_p(pk_B, bottom)) . B5
    B5 = s_CBO(bottom)
  }

  agent Ma {
    Ma = r_CAM(Me) . Ma2
    Ma2 = s_CMB(Me) . Ma3
    Ma3 = r_CBM(sign(sk_T, (B, pk_B))) . Ma4
    Ma4 = s_CMA(sign(sk_T, (M, pk_M))) . Ma5
    Ma5 = r_CAM(enc_p(pk_M, d3)) . Ma6
    Ma6 = dec_skM(enc_p(pk_M, d3)) . Ma7
    Ma7 = s_CM(bottom) . Ma8
    Ma8 = enc_pkB(bottom) . Ma9
    Ma9 = s_CMB(enc_p(pk_B, bottom))
  }

  agent Sys {
    P = abs{c_CAM, c_CMB, c_CBM, c_CMA, de_sign_pkT, enc_pkB, enc_pkM, dec_skB, dec_skM}(
          encap{r_CAM, s_CAM, r_CMB, s_CMB, r_CBM, s_CBM, r_CMA, s_CMA}(A <> B <> Ma)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . s_CM(bottom) . s_CBO(bottom) . X
  }
}
"#;

const KMT: &str = r#"protocol kmt {
  @DELTA@

  # One-shot key and message transmission: the session key rides along,
  # wrapped under Bob's signed public key.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = de_sign_pkT(sign(sk_T, (B, pk_B))) . A3
    A3 = rsg_kAB . A4
    A4 = enc_kAB(D) . A5
    A5 = enc_pkB(k_AB) . A6
    A6 = s_CAB(enc_p(pk_B, k_AB), enc_s(k_AB, D))
  }

  agent B {
    B = r_CAB(enc_p(pk_B, k_AB), enc_s(k_AB, D)) . B2
    B2 = dec_skB(enc_p(pk_B, k_AB)) . B3
    B3 = dec_kAB(enc_s(k_AB, D)) . B4
    B4 = s_CBO(D)
  }

  agent Sys {
    P = abs{c_CAB, de_sign_pkT, rsg_kAB, enc_kAB, enc_pkB, dec_skB, dec_kAB}(
          encap{r_CAB, s_CAB}(A <> B)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . s_CBO(D) . X
  }
}
"#;

const KMB: &str = r#"protocol kmb {
  @DELTA@

  # Broadcast variant of kmt: one session key k, wrapped separately for Bob,
  # Carol, and Dave, all three packages leaving in one joint send.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = (de_sign_pkT(sign(sk_T, (B, pk_B))) || de_sign_pkT(sign(sk_T, (C, pk_C))) || de_sign_pkT(sign(sk_T, (Da, pk_Da)))) . A3
    A3 = rsg_k . A4
    A4 = enc_k(D) . A5
    A5 = (enc_pkB(k) || enc_pkC(k) || enc_pkDa(k)) . A6
    A6 = s_CAB(enc_p(pk_B, k), enc_s(k, D)) || s_CAC(enc_p(pk_C, k), enc_s(k, D)) || s_CAD(enc_p(pk_Da, k), enc_s(k, D))
  }

  agent B {
    B = r_CAB(enc_p(pk_B, k), enc_s(k, D)) . B2
    B2 = dec_skB(enc_p(pk_B, k)) . B3
    B3 = dec_k(enc_s(k, D)) . B4
    B4 = s_CBO(D)
  }

  agent C {
    C = r_CAC(enc_p(pk_C, k), enc_s(k, D)) . C2
    C2 = dec_skC(enc_p(pk_C, k)) . C3
    C3 = dec_k(enc_s(k, D)) . C4
    C4 = s_CCO(D)
  }

  agent Da {
    Da = r_CAD(enc_p(pk_Da, k), enc_s(k, D)) . Da2
    Da2 = dec_skDa(enc_p(pk_Da, k)) . Da3
    Da3 = dec_k(enc_s(k, D)) . Da4
    Da4 = s_CDO(D)
  }

  agent Sys {
    P = abs{c_CAB, c_CAC, c_CAD, de_sign_pkT, rsg_k, enc_k, enc_pkB, enc_pkC, enc_pkDa, dec_k, dec_skB, dec_skC, dec_skDa}(
          encap{r_CAB, s_CAB, r_CAC, s_CAC, r_CAD, s_CAD}(A <> B <> C <> Da)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . (s_CBO(D) <> s_CCO(D) <> s_CDO(D)) . X
  }
}
"#;

const MUTUAL_AUTH_INTERLOCK: &str = r#"protocol mutual-auth-interlock {
  @DELTA@
  domain Forged = { PA_f, PB_f }

  # Interlock run where the payloads are passwords: the halves still pin
  # Mallory to substituting fabricated passwords wholesale, so each side
  # authenticates against a password Mallory chose.
  agent A {
    A = sum PA in Delta . r_CAI(PA) . A2
    A2 = enc_pkM(PA) . A3
    A3 = s_CAM(half1(enc_p(pk_M, PA))) . A4
    A4 = r_CMA(half1(enc_p(pk_A, Pb1))) . A5
    A5 = s_CAM(half2(enc_p(pk_M, PA))) . A6
    A6 = r_CMA(half2(enc_p(pk_A, Pb2))) . A7
    A7 = [Pb1 == Pb2] dec_skA(enc_p(pk_A, Pb1)) . A8
    A8 = s_CAO(Pb1)
  }

  agent B {
    B = r_CMB(half1(enc_p(pk_B, Pa1))) . B2
    B2 = sum PB in Delta . r_CBI(PB) . B3
    B3 = enc_pkM(PB) . B4
    B4 = s_CBM(half1(enc_p(pk_M, PB))) . B5
    B5 = r_CMB(half2(enc_p(pk_B, Pa2))) . B6
    B6 = [Pa1 == Pa2] dec_skB(enc_p(pk_B, Pa1)) . B7
    B7 = s_CBO(Pa1) . B8
    B8 = s_CBM(half2(enc_p(pk_M, PB)))
  }

  agent Ma {
    Ma = r_CAM(half1(enc_p(pk_M, Pa))) . Ma2
    Ma2 = enc_pkB(PA_f) . Ma3
    Ma3 = s_CMB(half1(enc_p(pk_B, PA_f))) . Ma4
    Ma4 = r_CBM(half1(enc_p(pk_M, Pb))) . Ma5
    Ma5 = enc_pkA(PB_f) . Ma6
    Ma6 = s_CMA(half1(enc_p(pk_A, PB_f))) . Ma7
    Ma7 = r_CAM(half2(enc_p(pk_M, Pa2))) . Ma8
    Ma8 = s_CMB(half2(enc_p(pk_B, PA_f))) . Ma9
    Ma9 = r_CBM(half2(enc_p(pk_M, Pb2))) . Ma10
    Ma10 = s_CMA(half2(enc_p(pk_A, PB_f)))
  }

  agent Sys {
    P = abs{c_CAM, c_CMB, c_CBM, c_CMA, enc_pkM, enc_pkB, enc_pkA, dec_skA, dec_skB}(
          encap{r_CAM, s_CAM, r_CMB, s_CMB, r_CBM, s_CBM, r_CMA, s_CMA}(A <> B <> Ma)) . P
  }

  compose = P

  spec {
    X = sum PA in Delta . r_CAI(PA) . sum PB in Delta . r_CBI(PB) . s_CBO(PA_f) . s_CAO(PB_f) . X
  }
}
"#;

const SKID: &str = r#"protocol skid {
  @DELTA@

  # Challenge-response on a shared MAC key: the payload rides the third
  # message, and each side checks the other's MAC before going on.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = rsg_RA . A3
    A3 = s_CAB(RA) . A4
    A4 = r_CBA(dB, dRb, dMacB) . A5
    A5 = mac_kAB(RA, dRb, dB) . A6
    A6 = [dMacB == mac(k_AB, (RA, dRb, dB))] mac_kAB(dRb, A) . A7
    A7 = enc_kAB(D) . A8
    A8 = s_CAB(A, mac(k_AB, (dRb, A)), enc_s(k_AB, D))
  }

  agent B {
    B = r_CAB(RA) . B2
    B2 = rsg_RB . B3
    B3 = mac_kAB(RA, RB, B) . B4
    B4 = s_CBA(B, RB, mac(k_AB, (RA, RB, B))) . B5
    B5 = r_CAB(dA, dMacA, enc_s(k_AB, D)) . B6
    B6 = mac_kAB(RB, dA) . B7
    B7 = [dMacA == mac(k_AB, (RB, dA))] dec_kAB(enc_s(k_AB, D)) . B8
    B8 = s_CBO(D)
  }

  agent Sys {
    P = abs{c_CAB, c_CBA, rsg_RA, rsg_RB, mac_kAB, enc_kAB, dec_kAB}(
          encap{r_CAB, s_CAB, r_CBA, s_CBA}(A <> B)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . s_CBO(D) . X
  }
}
"#;

const WIDE_MOUTH_FROG: &str = r#"protocol wide-mouth-frog {
  @DELTA@

  # Trent relays a session key both ways; the data message carries its own
  # time stamp, and Bob's staleness check on it decides between delivery and
  # a joint failure report.  Stamp checks on the key exchange itself compare
  # against the round's expected stamps, so their failure arms stay dead.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = rsg_kAB . A3
    A3 = enc_kAT(TA, B, k_AB) . A4
    A4 = s_CAT(A, enc_s(k_AT, (TA, B, k_AB))) . A5
    A5 = r_CTA(dTA) . A6
    A6 = r_CBA(dBA) . A7
    A7 = [dTA == top and dBA == top] A8 + [dTA == bottom or dBA == bottom] A10
    A8 = enc_kAB(TAD, D) . A9
    A9 = s_CAB(TAD, enc_s(k_AB, D))
    A10 = s_CAO(bottom)
  }

  agent T {
    T = r_CAT(dA, enc_s(k_AT, (dTa, dB, kab))) . T2
    T2 = dec_kAT(enc_s(k_AT, (dTa, dB, kab))) . T3
    T3 = [dTa == TA] enc_kBT(TB, dA, kab) . T4
       + [dTa != TA] (s_CTA(bottom) || s_CTB(bottom))
    T4 = s_CTA(top) || s_CTB(enc_s(k_BT, (TB, dA, kab)))
  }

  agent B {
    B = r_CTB(bottom) . s_CBA(bottom)
      + r_CTB(enc_s(k_BT, (dTb, dA, kab))) . B3
    B3 = dec_kBT(enc_s(k_BT, (dTb, dA, kab))) . B4
    B4 = [dTb == TB] s_CBA(top) . B5 + [dTb != TB] s_CBA(bottom)
    B5 = r_CAB(dTad, enc_s(kab, D)) . B6
    B6 = dec_kAB(enc_s(kab, D)) . B7
    B7 = [fresh(dTad)] s_CBO(D)
       + [not fresh(dTad)] (s_CAO(bottom) || s_CBO(bottom))
  }

  agent Sys {
    P = abs{c_CAT, c_CTA, c_CBA, c_CAB, c_CTB, rsg_kAB, enc_kAT, dec_kAT, enc_kBT, dec_kBT, enc_kAB, dec_kAB}(
          encap{r_CAT, s_CAT, r_CTA, s_CTA, r_CBA, s_CBA, r_CAB, s_CAB, r_CTB, s_CTB}(A <> T <> B)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . ((s_CAO(bottom) || s_CBO(bottom)) + s_CBO(D)) . X
  }
}
"#;

const YAHALOM: &str = r#"protocol yahalom {
  @DELTA@

  # Bob opens with a nonce, Trent mints the session key, and Alice forwards
  # Bob's sealed copy alongside the payload.  Bob's check of the returned
  # nonce is the live branch point; Alice's own nonce check stays a decided
  # equality whose failure arm is dead in an honest run.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = rsg_RA . A3
    A3 = s_CAB(A, RA) . A4
    A4 = r_CTA(enc_s(k_AT, (dB, kab, dRa, dRb)), dBlob) . A5
    A5 = dec_kAT(enc_s(k_AT, (dB, kab, dRa, dRb))) . A6
    A6 = [dRa == RA] A7 + [dRa != RA] A9
    A7 = enc_kAB(dRb, D) . A8
    A8 = s_CAB(dBlob, enc_s(kab, (dRb, D)))
    A9 = s_CAB(bottom)
  }

  agent B {
    B = r_CAB(dA, dRa) . B2
    B2 = rsg_RB . B3
    B3 = enc_kBT(dA, dRa, RB) . B4
    B4 = s_CBT(enc_s(k_BT, (dA, dRa, RB))) . B5
    B5 = r_CAB(bottom) . s_CBO(bottom)
       + r_CAB(enc_s(k_BT, (dA2, kab)), enc_s(kab, (dRb, D))) . B7
    B7 = dec_kBT(enc_s(k_BT, (dA2, kab))) . B8
    B8 = dec_kAB(enc_s(kab, (dRb, D))) . B9
    B9 = [valid(dRb)] s_CBO(D) + [not valid(dRb)] s_CBO(bottom)
  }

  agent T {
    T = r_CBT(enc_s(k_BT, (dA, dRa, dRb))) . T2
    T2 = dec_kBT(enc_s(k_BT, (dA, dRa, dRb))) . T3
    T3 = rsg_kAB . T4
    T4 = enc_kAT(B, k_AB, dRa, dRb) . T5
    T5 = enc_kBT(dA, k_AB) . T6
    T6 = s_CTA(enc_s(k_AT, (B, k_AB, dRa, dRb)), enc_s(k_BT, (dA, k_AB)))
  }

  agent Sys {
    P = abs{c_CAB, c_CBT, c_CTA, rsg_RA, rsg_RB, rsg_kAB, enc_kBT, dec_kBT, enc_kAT, dec_kAT, enc_kAB, dec_kAB}(
          encap{r_CAB, s_CAB, r_CBT, s_CBT, r_CTA, s_CTA}(A <> B <> T)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . (s_CBO(bottom) + s_CBO(D)) . X
  }
}
"#;

const NEEDHAM_SCHROEDER: &str = r#"protocol needham-schroeder {
  @DELTA@

  # Trent hands Alice the session key plus a sealed copy for Bob; the
  # challenge nonce travels as succ(RB) so the decremented reply is its
  # pattern-matched argument.  Alice's echo check guards the bottom-relay
  # arm; Bob's reply check is the live branch point.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = rsg_RA . A3
    A3 = s_CAT(A, B, RA) . A4
    A4 = r_CTA(enc_s(k_AT, (dRa, dB, kab, dBlob))) . A5
    A5 = dec_kAT(enc_s(k_AT, (dRa, dB, kab, dBlob))) . A6
    A6 = [dRa == RA] A7 + [dRa != RA] s_CAB(bottom) . A8
    A7 = s_CAB(dBlob) . A8
    A8 = r_CBA(bottom) . A13
      + r_CBA(enc_s(kab, succ(dRb))) . A10
    A10 = dec_kAB(enc_s(kab, succ(dRb))) . A11
    A11 = enc_kAB(dRb, D) . A12
    A12 = s_CAB(enc_s(kab, (dRb, D)))
    A13 = s_CAB(bottom)
  }

  agent B {
    B = r_CAB(bottom) . B2f
      + r_CAB(enc_s(k_BT, (dA, kab))) . B3
    B2f = (s_CBO(bottom) || s_CBA(bottom)) . B7
    B3 = dec_kBT(enc_s(k_BT, (dA, kab))) . B4
    B4 = rsg_RB . B5
    B5 = enc_kAB(succ(RB)) . B6
    B6 = s_CBA(enc_s(kab, succ(RB))) . B7
    B7 = r_CAB(bottom) . s_CBO(bottom)
      + r_CAB(enc_s(kab, (dRb1, D))) . B9
    B9 = dec_kAB(enc_s(kab, (dRb1, D))) . B10
    B10 = [valid(dRb1)] s_CBO(D) + [not valid(dRb1)] s_CBO(bottom)
  }

  agent T {
    T = r_CAT(dA, dB, dRa) . T2
    T2 = rsg_kAB . T3
    T3 = enc_kBT(dA, k_AB) . T4
    T4 = enc_kAT(dRa, dB, k_AB, enc_s(k_BT, (dA, k_AB))) . T5
    T5 = s_CTA(enc_s(k_AT, (dRa, dB, k_AB, enc_s(k_BT, (dA, k_AB)))))
  }

  agent Sys {
    P = abs{c_CAT, c_CTA, c_CAB, c_CBA, rsg_RA, rsg_RB, rsg_kAB, enc_kBT, dec_kBT, enc_kAT, dec_kAT, enc_kAB, dec_kAB}(
          encap{r_CAT, s_CAT, r_CTA, s_CTA, r_CAB, s_CAB, r_CBA, s_CBA}(A <> B <> T)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . (s_CBO(bottom) + s_CBO(D)) . X
  }
}
"#;

const OTWAY_REES: &str = r#"protocol otway-rees {
  @DELTA@

  # Both parties seal the run index and their nonce for Trent inside one
  # four-field request; Trent re-keys both blobs.  Bob forwards Alice's blob
  # untouched both ways, and his staleness check on the data nonce is the
  # live branch point.
  agent A {
    A = sum D in Delta . r_CAI(D) . A2
    A2 = rsg_I . rsg_RA . A3
    A3 = enc_kAT(RA, I, A, B) . A4
    A4 = s_CAB(I, A, B, enc_s(k_AT, (RA, I, A, B))) . A5
    A5 = r_CBA(bottom) . s_CAB(bottom)
      + r_CBA(dI, enc_s(k_AT, (dRa, kab))) . A7
    A7 = dec_kAT(enc_s(k_AT, (dRa, kab))) . A8
    A8 = [dRa == RA and dI == I] A9 + [dRa != RA or dI != I] A12
    A9 = rsg_RD . A10
    A10 = enc_kAB(RD, D) . A11
    A11 = s_CAB(enc_s(kab, (RD, D)))
    A12 = s_CAB(bottom)
  }

  agent B {
    B = r_CAB(dI, dA, dB, dBlobA) . B2
    B2 = rsg_RB . B3
    B3 = enc_kBT(RB, dI, dA, dB) . B4
    B4 = s_CBT(dI, dA, dB, dBlobA, enc_s(k_BT, (RB, dI, dA, dB))) . B5
    B5 = r_CTB(dI2, dBlobA2, enc_s(k_BT, (dRb, kab))) . B6
    B6 = dec_kBT(enc_s(k_BT, (dRb, kab))) . B7
    B7 = [dRb == RB and dI2 == dI] s_CBA(dI, dBlobA2) . B8
      + [dRb != RB or dI2 != dI] s_CBA(bottom) . B8
    B8 = r_CAB(bottom) . s_CBO(bottom)
      + r_CAB(enc_s(kab, (dRd, D))) . B10
    B10 = dec_kAB(enc_s(kab, (dRd, D))) . B11
    B11 = [fresh(dRd)] s_CBO(D) + [not fresh(dRd)] s_CBO(bottom)
  }

  agent T {
    T = r_CBT(dI, dA, dB, enc_s(k_AT, (dRa, dIa, dAa, dBa)), enc_s(k_BT, (dRb, dIb, dAb, dBb))) . T2
    T2 = dec_kAT(enc_s(k_AT, (dRa, dIa, dAa, dBa))) . T3
    T3 = dec_kBT(enc_s(k_BT, (dRb, dIb, dAb, dBb))) . T4
    T4 = rsg_kAB . T5
    T5 = enc_kAT(dRa, k_AB) . T6
    T6 = enc_kBT(dRb, k_AB) . T7
    T7 = s_CTB(dI, enc_s(k_AT, (dRa, k_AB)), enc_s(k_BT, (dRb, k_AB)))
  }

  agent Sys {
    P = abs{c_CAB, c_CBA, c_CBT, c_CTB, rsg_I, rsg_RA, rsg_RB, rsg_RD, rsg_kAB, enc_kAT, dec_kAT, enc_kBT, dec_kBT, enc_kAB, dec_kAB}(
          encap{r_CAB, s_CAB, r_CBA, s_CBA, r_CBT, s_CBT, r_CTB, s_CTB}(A <> B <> T)) . P
  }

  compose = P

  spec {
    X = sum D in Delta . r_CAI(D) . (s_CBO(bottom) + s_CBO(D)) . X
  }
}
"#;
