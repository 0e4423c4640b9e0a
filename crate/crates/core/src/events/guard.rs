use crate::prog::Iid;
use std::collections::BTreeSet;

/// Positive Boolean condition over instruction-execution flags.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    True,
    False,
    Cf(Iid),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    pub fn and(parts: Vec<Guard>) -> Guard {
        let mut out = BTreeSet::new();
        for p in parts {
            match p {
                Guard::True => {}
                Guard::False => return Guard::False,
                Guard::And(inner) => out.extend(inner),
                g => {
                    out.insert(g);
                }
            }
        }
        match out.len() {
            0 => Guard::True,
            1 => out.into_iter().next().unwrap(),
            _ => Guard::And(out.into_iter().collect()),
        }
    }

    pub fn or(parts: Vec<Guard>) -> Guard {
        let mut out = BTreeSet::new();
        for p in parts {
            match p {
                Guard::False => {}
                Guard::True => return Guard::True,
                Guard::Or(inner) => out.extend(inner),
                g => {
                    out.insert(g);
                }
            }
        }
        match out.len() {
            0 => Guard::False,
            1 => out.into_iter().next().unwrap(),
            _ => Guard::Or(out.into_iter().collect()),
        }
    }

    pub fn eval(&self, executed: &impl Fn(Iid) -> bool) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Cf(i) => executed(*i),
            Guard::And(v) => v.iter().all(|g| g.eval(executed)),
            Guard::Or(v) => v.iter().any(|g| g.eval(executed)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplification() {
        assert_eq!(Guard::and(vec![Guard::True, Guard::Cf(1)]), Guard::Cf(1));
        assert_eq!(Guard::or(vec![Guard::False, Guard::Cf(1), Guard::Cf(1)]), Guard::Cf(1));
        assert_eq!(Guard::and(vec![Guard::Cf(2), Guard::False]), Guard::False);
        let g = Guard::or(vec![Guard::and(vec![Guard::Cf(1), Guard::Cf(2)]), Guard::Cf(3)]);
        assert!(g.eval(&|i| i == 3));
        assert!(!g.eval(&|i| i == 1));
    }
}
