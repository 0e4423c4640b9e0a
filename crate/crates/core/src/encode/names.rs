//! Deterministic variable names shared by the encoder and the decoder.

use crate::events::Eid;
use crate::prog::Iid;

pub fn cf(p: &str, iid: Iid) -> String {
    format!("{p}cf_{iid}")
}

pub fn ex(p: &str, e: Eid) -> String {
    format!("{p}ex_{e}")
}

/// Value read or written by an event.
pub fn val_event(p: &str, e: Eid) -> String {
    format!("{p}val_e{e}")
}

/// SSA version `k` of a register of thread `tid`.
pub fn val_reg(p: &str, tid: &str, reg: &str, k: u32) -> String {
    format!("{p}val_{tid}.{reg}.{k}")
}

pub fn rel(p: &str, label: &str, a: Eid, b: Eid) -> String {
    format!("{p}rel_{label}_{a}_{b}")
}

pub fn phi(p: &str, label: &str, a: Eid, b: Eid) -> String {
    format!("{p}phi_{label}_{a}_{b}")
}

pub fn psi(p: &str, axiom: &str, e: Eid) -> String {
    format!("{p}psi_{axiom}_{e}")
}

pub fn cyc(p: &str, axiom: &str, e: Eid) -> String {
    format!("{p}C_{axiom}_{e}")
}

pub fn cyc_edge(p: &str, axiom: &str, a: Eid, b: Eid) -> String {
    format!("{p}Cedge_{axiom}_{a}_{b}")
}

pub fn clk(p: &str, e: Eid) -> String {
    format!("{p}clk_{e}")
}

pub fn viol(p: &str, axiom: &str) -> String {
    format!("{p}viol_{axiom}")
}

/// Final value of a location.
pub fn fin(p: &str, loc: &str) -> String {
    format!("{p}fin_{loc}")
}

/// Qualified axiom label, `ns.label`.
pub fn axiom(ns: &str, label: &str) -> String {
    format!("{ns}.{label}")
}
