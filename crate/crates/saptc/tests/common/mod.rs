//! Shared test oracles. Everything here is deliberately naive: independent
//! re-statements of the algebraic laws and relation definitions, used to
//! cross-check the engine implementations.

#![allow(dead_code)]

pub mod brute_bisim;
pub mod redex_gen;
pub mod lts_family;
pub mod model_gen;
pub mod naive_msg;
