//! Dense binary relations over a fixed universe of events `0..n`.

use std::collections::BTreeSet;
use std::fmt;

/// A set of pairs `(a, b)` with `a, b < n`, stored as one bit row per source.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Relation { n, words, bits: vec![0; words * n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// Identity over the members of `set`.
    pub fn identity(n: usize, set: &[bool]) -> Self {
        let mut r = Self::empty(n);
        for (e, &m) in set.iter().enumerate() {
            if m {
                r.insert(e, e);
            }
        }
        r
    }

    /// `s1 × s2` as a relation.
    pub fn product(n: usize, s1: &[bool], s2: &[bool]) -> Self {
        let mut r = Self::empty(n);
        for a in (0..n).filter(|&a| s1[a]) {
            for b in (0..n).filter(|&b| s2[b]) {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let w = &mut self.bits[a * self.words + b / 64];
        let mask = 1u64 << (b % 64);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.bits[a * self.words + b / 64] &= !(1u64 << (b % 64));
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    /// Targets of `a`, in increasing order.
    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(a).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| self.successors(a).map(move |b| (a, b)))
    }

    pub fn to_set(&self) -> BTreeSet<(usize, usize)> {
        self.pairs().collect()
    }

    pub fn union(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a | b)
    }

    pub fn inter(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a & b)
    }

    pub fn diff(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a & !b)
    }

    fn zip(&self, o: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.n, o.n);
        Relation {
            n: self.n,
            words: self.words,
            bits: self.bits.iter().zip(&o.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union_with(&mut self, o: &Self) -> bool {
        let mut changed = false;
        for (a, &b) in self.bits.iter_mut().zip(&o.bits) {
            let nv = *a | b;
            changed |= nv != *a;
            *a = nv;
        }
        changed
    }

    /// Relational composition `self ; o`.
    pub fn compose(&self, o: &Self) -> Self {
        let mut r = Self::empty(self.n);
        for a in 0..self.n {
            let dst = a * self.words;
            for m in self.successors(a) {
                let src = m * o.words;
                for i in 0..self.words {
                    r.bits[dst + i] |= o.bits[src + i];
                }
            }
        }
        r
    }

    pub fn inverse(&self) -> Self {
        Self::from_pairs(self.n, self.pairs().map(|(a, b)| (b, a)))
    }

    /// Transitive closure (Warshall over bit rows).
    pub fn plus(&self) -> Self {
        let mut r = self.clone();
        for k in 0..self.n {
            let krow: Vec<u64> = r.row(k).to_vec();
            for a in 0..self.n {
                if r.contains(a, k) {
                    let dst = a * r.words;
                    for (d, k) in r.bits[dst..dst + r.words].iter_mut().zip(&krow) {
                        *d |= k;
                    }
                }
            }
        }
        r
    }

    pub fn is_acyclic(&self) -> bool {
        let p = self.plus();
        (0..self.n).all(|e| !p.contains(e, e))
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|e| !self.contains(e, e))
    }

    /// Restrict both endpoints to members of `set`.
    pub fn restrict(&self, set: &[bool]) -> Self {
        Self::from_pairs(self.n, self.pairs().filter(|&(a, b)| set[a] && set[b]))
    }

    /// Events occurring as source or target.
    pub fn support(&self) -> Vec<bool> {
        let mut s = vec![false; self.n];
        for (a, b) in self.pairs() {
            s[a] = true;
            s[b] = true;
        }
        s
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_and_closure() {
        let r = Relation::from_pairs(4, [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(r.compose(&r).to_set(), [(0, 2), (1, 3)].into());
        assert_eq!(r.plus().len(), 6);
        assert!(r.is_acyclic());
        let mut c = r.clone();
        c.insert(3, 0);
        assert!(!c.is_acyclic());
    }

    #[test]
    fn wide_universe() {
        let r = Relation::from_pairs(130, [(0, 129), (129, 64)]);
        assert_eq!(r.plus().to_set(), [(0, 64), (0, 129), (129, 64)].into());
        assert_eq!(r.inverse().to_set(), [(129, 0), (64, 129)].into());
    }
}
