use std::fmt;

use crate::scalar::Scalar;

use super::product::ProductMc;

/// An observation: a letter, or `⊥` ("not seen").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Letter(usize),
    Skip,
}

/// A set of product pairs, stored sorted and deduplicated so that equality and
/// hashing are structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Belief(Vec<usize>);

impl Belief {
    pub fn empty() -> Self {
        Belief(Vec::new())
    }

    pub fn singleton(pair: usize) -> Self {
        Belief(vec![pair])
    }

    pub fn pairs(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, pair: usize) -> bool {
        self.0.binary_search(&pair).is_ok()
    }

    pub fn is_subset(&self, other: &Belief) -> bool {
        self.0.iter().all(|x| other.contains(*x))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for Belief {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Belief(v)
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Successor sets of the belief automaton: `Δ((s,q), a)` for every letter and
/// `Δ((s,q), ⊥)` as their union.
#[derive(Debug, Clone)]
pub struct BeliefNfa {
    letter_succ: Vec<Vec<Vec<usize>>>,
    skip_succ: Vec<Vec<usize>>,
    num_letters: usize,
}

impl BeliefNfa {
    pub fn new<T: Scalar>(p: &ProductMc<T>) -> Self {
        let n = p.num_pairs();
        let k = p.num_letters();
        let mut letter_succ = vec![vec![Vec::new(); k]; n];
        let mut skip_succ = vec![Vec::new(); n];
        for x in 0..n {
            for e in p.edges(x) {
                letter_succ[x][e.letter].push(e.target);
                skip_succ[x].push(e.target);
            }
            for v in letter_succ[x].iter_mut() {
                v.sort_unstable();
                v.dedup();
            }
            skip_succ[x].sort_unstable();
            skip_succ[x].dedup();
        }
        Self {
            letter_succ,
            skip_succ,
            num_letters: k,
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.skip_succ.len()
    }

    pub fn num_letters(&self) -> usize {
        self.num_letters
    }

    /// `Δ((s,q), o)`.
    pub fn successors(&self, pair: usize, o: Observation) -> &[usize] {
        match o {
            Observation::Letter(a) => &self.letter_succ[pair][a],
            Observation::Skip => &self.skip_succ[pair],
        }
    }

    /// `Δ(B, o)`.
    pub fn step(&self, b: &Belief, o: Observation) -> Belief {
        b.iter()
            .flat_map(|x| self.successors(x, o).iter().copied())
            .collect()
    }

    /// `Δ(B, υ)` for a whole observation sequence.
    pub fn run(&self, b: &Belief, prefix: &[Observation]) -> Belief {
        prefix.iter().fold(b.clone(), |acc, &o| self.step(&acc, o))
    }

    /// `Δ(B, ⊥^k)`.
    pub fn skip_n(&self, b: &Belief, k: u64) -> Belief {
        let mut cur = b.clone();
        for _ in 0..k {
            cur = self.step(&cur, Observation::Skip);
        }
        cur
    }
}
