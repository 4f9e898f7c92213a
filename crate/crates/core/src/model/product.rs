use crate::error::AnalysisError;
use crate::linalg::{Matrix, SparseChain};
use crate::scalar::Scalar;

use super::dfa::Dfa;
use super::mc::{Edge, Mc};

/// Composition of a chain with a property automaton.
///
/// Pairs `(s, q)` are indexed as `s * |Q| + q`, so index order coincides with
/// the lexicographic order on (state index, automaton-state index). All pairs
/// are kept, reachable or not.
#[derive(Debug, Clone)]
pub struct ProductMc<T> {
    mc: Mc<T>,
    dfa: Dfa,
    out: Vec<Vec<Edge<T>>>,
}

impl<T: Scalar> ProductMc<T> {
    /// `M'(a)((s,q),(s',q')) = M(a)(s,s')` when `q' = δ(q,a)`.
    pub fn compose(mc: &Mc<T>, dfa: &Dfa) -> Result<Self, AnalysisError> {
        let dfa = dfa
            .with_alphabet(mc.letters())
            .ok_or(AnalysisError::AlphabetMismatch)?;
        let nq = dfa.num_states();
        let mut out = Vec::with_capacity(mc.num_states() * nq);
        for s in 0..mc.num_states() {
            for q in 0..nq {
                out.push(
                    mc.edges(s)
                        .iter()
                        .map(|e| Edge {
                            letter: e.letter,
                            target: e.target * nq + dfa.next(q, e.letter),
                            prob: e.prob.clone(),
                        })
                        .collect(),
                );
            }
        }
        Ok(Self {
            mc: mc.clone(),
            dfa,
            out,
        })
    }

    pub fn mc(&self) -> &Mc<T> {
        &self.mc
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn num_pairs(&self) -> usize {
        self.out.len()
    }

    pub fn num_letters(&self) -> usize {
        self.mc.num_letters()
    }

    pub fn pair(&self, s: usize, q: usize) -> usize {
        s * self.dfa.num_states() + q
    }

    /// `(mc state, automaton state)` of a pair index.
    pub fn split(&self, pair: usize) -> (usize, usize) {
        let nq = self.dfa.num_states();
        (pair / nq, pair % nq)
    }

    pub fn initial(&self) -> usize {
        self.pair(self.mc.initial(), self.dfa.initial())
    }

    pub fn is_accepting(&self, pair: usize) -> bool {
        self.split(pair).1 == self.dfa.accepting()
    }

    pub fn edges(&self, pair: usize) -> &[Edge<T>] {
        &self.out[pair]
    }

    /// Human-readable `s,q`.
    pub fn pair_name(&self, pair: usize) -> String {
        let (s, q) = self.split(pair);
        format!("{},{}", self.mc.state_name(s), self.dfa.state_name(q))
    }

    /// Looks up a pair by its `s,q` spelling.
    pub fn pair_by_name(&self, s: &str, q: &str) -> Option<usize> {
        Some(self.pair(self.mc.state_index(s)?, self.dfa.state_index(q)?))
    }

    /// Pairs reachable from the initial pair.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_pairs()];
        let mut stack = vec![self.initial()];
        seen[self.initial()] = true;
        while let Some(x) = stack.pop() {
            for e in &self.out[x] {
                if !seen[e.target] {
                    seen[e.target] = true;
                    stack.push(e.target);
                }
            }
        }
        seen
    }

    /// Dense `M'(a)`.
    pub fn matrix(&self, letter: usize) -> Matrix<T> {
        let n = self.num_pairs();
        let mut m: Matrix<T> = Matrix::zeros(n, n);
        for (x, edges) in self.out.iter().enumerate() {
            for e in edges.iter().filter(|e| e.letter == letter) {
                m[(x, e.target)] = m[(x, e.target)].clone() + e.prob.clone();
            }
        }
        m
    }

    /// Dense `M'(⊥) = Σ_a M'(a)`.
    pub fn skip_matrix(&self) -> Matrix<T> {
        let n = self.num_pairs();
        let mut m: Matrix<T> = Matrix::zeros(n, n);
        for (x, edges) in self.out.iter().enumerate() {
            for e in edges {
                m[(x, e.target)] = m[(x, e.target)].clone() + e.prob.clone();
            }
        }
        m
    }

    /// The product viewed as an unlabelled chain.
    pub fn chain(&self) -> SparseChain<T> {
        self.out
            .iter()
            .map(|edges| edges.iter().map(|e| (e.target, e.prob.clone())).collect())
            .collect()
    }

    /// Distribution after one unobserved step from `dist`.
    pub fn skip_step(&self, dist: &[T]) -> Vec<T> {
        let mut next = vec![T::zero(); self.num_pairs()];
        for (x, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for e in &self.out[x] {
                next[e.target] = next[e.target].clone() + mass.clone() * e.prob.clone();
            }
        }
        next
    }
}
