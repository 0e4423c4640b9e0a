//! Pretty-printer producing re-parseable `.lit` text.

use super::{Expr, Instr, InstrKind, Pred, Program};
use std::fmt::{self, Write};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0 => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Reg(r) => f.write_str(r),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Bool(b) => write!(f, "{b}"),
            Pred::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Pred::And(a, b) => write!(f, "({a} && {b})"),
            Pred::Or(a, b) => write!(f, "({a} || {b})"),
            Pred::Not(a) => write!(f, "!({a})"),
        }
    }
}

fn flatten<'a>(i: &'a Instr, out: &mut Vec<&'a Instr>) {
    match &i.kind {
        InstrKind::Seq(a, b) => {
            flatten(a, out);
            flatten(b, out);
        }
        _ => out.push(i),
    }
}

fn write_block(out: &mut String, i: &Instr, depth: usize) {
    let mut items = Vec::new();
    flatten(i, &mut items);
    let pad = "  ".repeat(depth);
    for (k, s) in items.iter().enumerate() {
        out.push_str(&pad);
        write_stmt(out, s, depth);
        if k + 1 < items.len() {
            out.push(';');
        }
        out.push('\n');
    }
}

fn write_stmt(out: &mut String, i: &Instr, depth: usize) {
    let pad = "  ".repeat(depth);
    match &i.kind {
        InstrKind::Local { reg, expr } => write!(out, "{reg} = {expr}").unwrap(),
        InstrKind::Load { reg, loc } => write!(out, "{reg} <- {loc}").unwrap(),
        InstrKind::Store { loc, reg } => write!(out, "{loc} := {reg}").unwrap(),
        InstrKind::Fence(k) => out.push_str(k.name()),
        InstrKind::Skip => out.push_str("skip"),
        InstrKind::If { cond, then, els } => {
            writeln!(out, "if ({cond}) {{").unwrap();
            write_block(out, then, depth + 1);
            if matches!(els.kind, InstrKind::Skip) {
                write!(out, "{pad}}}").unwrap();
            } else {
                writeln!(out, "{pad}}} else {{").unwrap();
                write_block(out, els, depth + 1);
                write!(out, "{pad}}}").unwrap();
            }
        }
        InstrKind::While { cond, body } => {
            writeln!(out, "while ({cond}) {{").unwrap();
            write_block(out, body, depth + 1);
            write!(out, "{pad}}}").unwrap();
        }
        InstrKind::Seq(..) => unreachable!("sequences are flattened"),
    }
    if let Some(h) = i.hl {
        write!(out, " @hl={h}").unwrap();
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = format!("program {}\n", self.name);
        for (loc, v) in &self.init {
            writeln!(out, "init {loc} = {v}").unwrap();
        }
        for t in &self.threads {
            writeln!(out, "thread {}", t.tid).unwrap();
            write_block(&mut out, &t.body, 1);
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use crate::prog::parse_program;

    #[test]
    fn round_trip() {
        let src = "program p\ninit x = 2\nthread t0\n r0 <- x;\n if (r0 = 1 && !(r0 < -3)) { y := r0; mfence } else { r1 = r0 * (2 - r0) };\n while (r0 != 0) { r0 <- x @hl=4 }\nthread t1\n skip";
        let p = parse_program(src).unwrap();
        let q = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, q);
    }
}
