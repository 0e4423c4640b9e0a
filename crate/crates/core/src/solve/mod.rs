//! SMT-LIB 2 emission and an external solver driven as a subprocess.

mod sexp;

use crate::encode::{BoolExpr, Formula, IntExpr};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};
use thiserror::Error;
use wait_timeout::ChildExt;

pub use sexp::{parse_sexps, Sexp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub status: Status,
    pub assignment: HashMap<String, Value>,
    pub elapsed: Duration,
}

impl SolverResult {
    pub fn bool(&self, name: &str) -> Option<bool> {
        match self.assignment.get(name) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.assignment.get(name) {
            Some(Value::Int(i)) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("cannot run solver `{cmd}`: {source}")]
    Spawn { cmd: String, source: std::io::Error },
    #[error("unexpected solver output: {0}")]
    Output(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// How to invoke the solver: a command template with a `{file}` placeholder.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub template: String,
    pub timeout: Duration,
}

pub const DEFAULT_TEMPLATE: &str = "z3 {file}";

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            template: std::env::var("PORTHOS_SOLVER").unwrap_or_else(|_| DEFAULT_TEMPLATE.to_string()),
            timeout: Duration::from_secs(600),
        }
    }
}

/// The logic header matching the shape of the formula's integer atoms.
pub fn logic(f: &Formula) -> &'static str {
    if f.nonlinear {
        "QF_NIA"
    } else if f.arithmetic || f.ints.is_empty() {
        "QF_LIA"
    } else {
        "QF_IDL"
    }
}

fn symbol(out: &mut String, name: &str) {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        out.push_str(name);
    } else {
        out.push('|');
        out.push_str(name);
        out.push('|');
    }
}

fn int(out: &mut String, e: &IntExpr) {
    match e {
        IntExpr::Const(c) if *c < 0 => {
            let _ = write!(out, "(- {})", c.unsigned_abs());
        }
        IntExpr::Const(c) => {
            let _ = write!(out, "{c}");
        }
        IntExpr::Var(v) => symbol(out, v),
        IntExpr::Add(a, b) => binary(out, "+", a, b),
        IntExpr::Sub(a, b) => binary(out, "-", a, b),
        IntExpr::Mul(a, b) => binary(out, "*", a, b),
    }
}

fn binary(out: &mut String, op: &str, a: &IntExpr, b: &IntExpr) {
    let _ = write!(out, "({op} ");
    int(out, a);
    out.push(' ');
    int(out, b);
    out.push(')');
}

fn boolean(out: &mut String, e: &BoolExpr) {
    let nary = |out: &mut String, op: &str, parts: &[&BoolExpr]| {
        let _ = write!(out, "({op}");
        for p in parts {
            out.push(' ');
            boolean(out, p);
        }
        out.push(')');
    };
    match e {
        BoolExpr::True => out.push_str("true"),
        BoolExpr::False => out.push_str("false"),
        BoolExpr::Var(v) => symbol(out, v),
        BoolExpr::Not(a) => nary(out, "not", &[a]),
        BoolExpr::And(v) => nary(out, "and", &v.iter().collect::<Vec<_>>()),
        BoolExpr::Or(v) => nary(out, "or", &v.iter().collect::<Vec<_>>()),
        BoolExpr::Implies(a, b) => nary(out, "=>", &[a, b]),
        BoolExpr::Iff(a, b) => nary(out, "=", &[a, b]),
        BoolExpr::Lt(a, b) => binary(out, "<", a, b),
        BoolExpr::Le(a, b) => binary(out, "<=", a, b),
        BoolExpr::Eq(a, b) => binary(out, "=", a, b),
    }
}

/// SMT-LIB 2 text for `f`, ending in `check-sat` and a `get-value` of the decode set.
pub fn emit_smt(f: &Formula) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(set-option :produce-models true)");
    let _ = writeln!(out, "(set-logic {})", logic(f));
    let mut decls: Vec<(&str, &str)> = f.bools.iter().map(|n| (&**n, "Bool")).chain(f.ints.iter().map(|n| (&**n, "Int"))).collect();
    decls.sort_unstable();
    for (n, sort) in decls {
        out.push_str("(declare-const ");
        symbol(&mut out, n);
        let _ = writeln!(out, " {sort})");
    }
    for a in &f.assertions {
        out.push_str("(assert ");
        boolean(&mut out, a);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n");
    if !f.decode.is_empty() {
        out.push_str("(get-value (");
        for (i, n) in f.decode.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            symbol(&mut out, n);
        }
        out.push_str("))\n");
    }
    out
}

/// Run the solver on SMT-LIB text; a timeout yields `Unknown`.
pub fn run_solver(text: &str, cfg: &SolverConfig) -> Result<SolverResult, SolveError> {
    let mut file = tempfile::Builder::new().prefix("porthos-").suffix(".smt2").tempfile()?;
    std::io::Write::write_all(&mut file, text.as_bytes())?;
    let path = file.path().to_string_lossy().to_string();
    let mut words = cfg.template.split_whitespace().map(|w| w.replace("{file}", &path));
    let prog = words.next().ok_or_else(|| SolveError::Output("empty solver command".into()))?;
    let mut args: Vec<String> = words.collect();
    if !cfg.template.contains("{file}") {
        args.push(path.clone());
    }
    let start = Instant::now();
    let mut child = Command::new(&prog)
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SolveError::Spawn { cmd: cfg.template.clone(), source })?;
    let drain = |mut r: Box<dyn Read + Send>| {
        std::thread::spawn(move || {
            let mut s = String::new();
            let _ = r.read_to_string(&mut s);
            s
        })
    };
    let reader = drain(Box::new(child.stdout.take().expect("piped")));
    let errors = drain(Box::new(child.stderr.take().expect("piped")));
    let finished = child.wait_timeout(cfg.timeout)?;
    if finished.is_none() {
        let _ = child.kill();
        let _ = child.wait();
        let _ = reader.join();
        let _ = errors.join();
        return Ok(SolverResult { status: Status::Unknown, assignment: HashMap::new(), elapsed: start.elapsed() });
    }
    let output = reader.join().map_err(|_| SolveError::Output("reader thread panicked".into()))?;
    let stderr = errors.join().unwrap_or_default();
    let status = finished.expect("checked above");
    let mut res = parse_output(&output).map_err(|e| match e {
        SolveError::Output(first) if first.is_empty() => {
            SolveError::Output(format!("no answer from solver ({status}); stderr: {}", stderr.trim()))
        }
        e => e,
    })?;
    res.elapsed = start.elapsed();
    Ok(res)
}

/// Parse `sat`/`unsat`/`unknown` followed by an optional `get-value` answer.
pub fn parse_output(output: &str) -> Result<SolverResult, SolveError> {
    let trimmed = output.trim_start();
    let first = trimmed.lines().next().unwrap_or("").trim();
    let status = match first {
        "sat" => Status::Sat,
        "unsat" => Status::Unsat,
        "unknown" | "timeout" => Status::Unknown,
        _ => return Err(SolveError::Output(first.to_string())),
    };
    let mut assignment = HashMap::new();
    if status == Status::Sat {
        let rest = &trimmed[first.len()..];
        let exprs = parse_sexps(rest).map_err(SolveError::Output)?;
        for e in exprs {
            let Sexp::List(pairs) = e else {
                return Err(SolveError::Output(format!("{e:?}")));
            };
            if matches!(pairs.first(), Some(Sexp::Atom(a)) if a == "error") {
                return Err(SolveError::Output(format!("{pairs:?}")));
            }
            for p in pairs {
                let (name, value) = match &p {
                    Sexp::List(v) if v.len() == 2 => (v[0].as_symbol(), v[1].as_value()),
                    _ => (None, None),
                };
                match (name, value) {
                    (Some(n), Some(v)) => {
                        assignment.insert(n, v);
                    }
                    _ => return Err(SolveError::Output(format!("{p:?}"))),
                }
            }
        }
    }
    Ok(SolverResult { status, assignment, elapsed: Duration::ZERO })
}

/// Emit and solve in one step.
pub fn solve(f: &Formula, cfg: &SolverConfig) -> Result<SolverResult, SolveError> {
    run_solver(&emit_smt(f), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_order() {
        let mut f = Formula::new();
        let b = f.bool_var("b", true);
        let x = f.int_var("x", true);
        let a = f.bool_var("a", true);
        f.assert(BoolExpr::implies(a, BoolExpr::and([b, BoolExpr::lt(x, IntExpr::Const(-2))])));
        let text = emit_smt(&f);
        assert!(text.contains("(set-logic QF_IDL)"));
        let a = text.find("(declare-const a Bool)").unwrap();
        let b = text.find("(declare-const b Bool)").unwrap();
        assert!(a < b);
        assert!(text.contains("(< x (- 2))"));
        assert!(text.ends_with("(get-value (a b x))\n"));
        assert_eq!(text, emit_smt(&f));
        let mut g = Formula::new();
        g.bool_var("p", false);
        assert_eq!(logic(&g), "QF_LIA");
    }

    #[test]
    fn parse_models() {
        let r = parse_output("sat\n((a true)\n (x (- 3))\n (y 4))\n").unwrap();
        assert_eq!(r.status, Status::Sat);
        assert_eq!(r.bool("a"), Some(true));
        assert_eq!(r.int("x"), Some(-3));
        let r = parse_output("unsat\n(error \"model is not available\")\n").unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert!(r.assignment.is_empty());
        assert!(parse_output("segfault").is_err());
    }
}
