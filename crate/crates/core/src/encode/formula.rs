//! Solver-agnostic constraint IR over Boolean and integer variables.

use std::collections::BTreeSet;
use std::sync::Arc;

pub type Name = Arc<str>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IntExpr {
    Const(i64),
    Var(Name),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    True,
    False,
    Var(Name),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Implies(Box<BoolExpr>, Box<BoolExpr>),
    Iff(Box<BoolExpr>, Box<BoolExpr>),
    Lt(IntExpr, IntExpr),
    Le(IntExpr, IntExpr),
    Eq(IntExpr, IntExpr),
}

impl IntExpr {
    pub fn is_const(&self) -> bool {
        matches!(self, IntExpr::Const(_))
    }
}

impl BoolExpr {
    pub fn and(parts: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                BoolExpr::True => {}
                BoolExpr::False => return BoolExpr::False,
                BoolExpr::And(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => BoolExpr::True,
            1 => out.pop().unwrap(),
            _ => BoolExpr::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                BoolExpr::False => {}
                BoolExpr::True => return BoolExpr::True,
                BoolExpr::Or(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => BoolExpr::False,
            1 => out.pop().unwrap(),
            _ => BoolExpr::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> BoolExpr {
        match e {
            BoolExpr::True => BoolExpr::False,
            BoolExpr::False => BoolExpr::True,
            BoolExpr::Not(inner) => *inner,
            e => BoolExpr::Not(Box::new(e)),
        }
    }

    pub fn implies(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        match (a, b) {
            (BoolExpr::False, _) | (_, BoolExpr::True) => BoolExpr::True,
            (BoolExpr::True, b) => b,
            (a, BoolExpr::False) => BoolExpr::not(a),
            (a, b) => BoolExpr::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        match (a, b) {
            (BoolExpr::True, e) | (e, BoolExpr::True) => e,
            (BoolExpr::False, e) | (e, BoolExpr::False) => BoolExpr::not(e),
            (a, b) if a == b => BoolExpr::True,
            (a, b) => BoolExpr::Iff(Box::new(a), Box::new(b)),
        }
    }

    pub fn lt(a: IntExpr, b: IntExpr) -> BoolExpr {
        match (&a, &b) {
            (IntExpr::Const(x), IntExpr::Const(y)) => Self::constant(x < y),
            _ => BoolExpr::Lt(a, b),
        }
    }

    pub fn le(a: IntExpr, b: IntExpr) -> BoolExpr {
        match (&a, &b) {
            (IntExpr::Const(x), IntExpr::Const(y)) => Self::constant(x <= y),
            _ => BoolExpr::Le(a, b),
        }
    }

    pub fn eq(a: IntExpr, b: IntExpr) -> BoolExpr {
        match (&a, &b) {
            (IntExpr::Const(x), IntExpr::Const(y)) => Self::constant(x == y),
            _ if a == b => BoolExpr::True,
            _ => BoolExpr::Eq(a, b),
        }
    }

    pub fn constant(b: bool) -> BoolExpr {
        if b {
            BoolExpr::True
        } else {
            BoolExpr::False
        }
    }
}

/// Declarations plus assertions; every referenced variable is declared.
#[derive(Clone, Debug, Default)]
pub struct Formula {
    pub bools: BTreeSet<Name>,
    pub ints: BTreeSet<Name>,
    pub assertions: Vec<BoolExpr>,
    /// Variables whose values are requested from the solver.
    pub decode: BTreeSet<Name>,
    /// Data arithmetic (`+`, `-`, `*`) appears in some assertion.
    pub arithmetic: bool,
    /// A product of two non-constant terms appears.
    pub nonlinear: bool,
}

impl Formula {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assert `e`, splitting top-level conjunctions.
    pub fn assert(&mut self, e: BoolExpr) {
        match e {
            BoolExpr::True => {}
            BoolExpr::And(parts) => self.assertions.extend(parts),
            e => self.assertions.push(e),
        }
    }

    pub fn bool_var(&mut self, name: &str, decode: bool) -> BoolExpr {
        let n = self.intern_name(name, true);
        if decode {
            self.decode.insert(n.clone());
        }
        BoolExpr::Var(n)
    }

    pub fn int_var(&mut self, name: &str, decode: bool) -> IntExpr {
        let n = self.intern_name(name, false);
        if decode {
            self.decode.insert(n.clone());
        }
        IntExpr::Var(n)
    }

    fn intern_name(&mut self, name: &str, boolean: bool) -> Name {
        let set = if boolean { &mut self.bools } else { &mut self.ints };
        if let Some(n) = set.get(name) {
            return n.clone();
        }
        let n: Name = Arc::from(name);
        set.insert(n.clone());
        n
    }

    pub fn note_arith(&mut self, e: &IntExpr) {
        match e {
            IntExpr::Const(_) | IntExpr::Var(_) => {}
            IntExpr::Add(a, b) | IntExpr::Sub(a, b) => {
                self.arithmetic = true;
                self.note_arith(a);
                self.note_arith(b);
            }
            IntExpr::Mul(a, b) => {
                self.arithmetic = true;
                if !a.is_const() && !b.is_const() {
                    self.nonlinear = true;
                }
                self.note_arith(a);
                self.note_arith(b);
            }
        }
    }

    /// Conjoin another formula over (possibly) shared variables.
    pub fn extend(&mut self, other: Formula) {
        self.bools.extend(other.bools);
        self.ints.extend(other.ints);
        self.decode.extend(other.decode);
        self.assertions.extend(other.assertions);
        self.arithmetic |= other.arithmetic;
        self.nonlinear |= other.nonlinear;
    }

    pub fn num_vars(&self) -> usize {
        self.bools.len() + self.ints.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let mut f = Formula::new();
        let a = f.bool_var("a", false);
        assert_eq!(BoolExpr::and([BoolExpr::True, a.clone()]), a);
        assert_eq!(BoolExpr::or([BoolExpr::False]), BoolExpr::False);
        assert_eq!(BoolExpr::implies(a.clone(), BoolExpr::False), BoolExpr::not(a.clone()));
        assert_eq!(BoolExpr::iff(a.clone(), a.clone()), BoolExpr::True);
        assert_eq!(BoolExpr::lt(IntExpr::Const(1), IntExpr::Const(2)), BoolExpr::True);
        f.assert(BoolExpr::and([a.clone(), BoolExpr::not(a)]));
        assert_eq!(f.assertions.len(), 2);
    }
}
