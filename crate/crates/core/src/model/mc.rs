use crate::error::ParseError;
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};

/// One labelled transition: emit `letter` and move to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub letter: usize,
    pub target: usize,
    pub prob: T,
}

/// Labelled Markov chain. States and letters are interned to dense indices in
/// input order; `out[s]` holds the nonzero transitions of `s` sorted by
/// `(letter, target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mc<T> {
    states: Vec<String>,
    letters: Vec<String>,
    initial: usize,
    out: Vec<Vec<Edge<T>>>,
}

impl<T: Scalar> Mc<T> {
    /// Builds a chain from `(source, letter, target, probability)` tuples.
    /// Parallel tuples are summed; zero entries are dropped.
    pub fn new(
        states: Vec<String>,
        letters: Vec<String>,
        initial: usize,
        transitions: impl IntoIterator<Item = (usize, usize, usize, T)>,
    ) -> Result<Self, ParseError> {
        let n = states.len();
        let mut out: Vec<Vec<Edge<T>>> = vec![Vec::new(); n];
        for (src, letter, target, prob) in transitions {
            assert!(src < n && target < n && letter < letters.len(), "index out of range");
            out[src].push(Edge { letter, target, prob });
        }
        for (s, edges) in out.iter_mut().enumerate() {
            edges.sort_by_key(|e| (e.letter, e.target));
            let mut merged: Vec<Edge<T>> = Vec::with_capacity(edges.len());
            for e in edges.drain(..) {
                match merged.last_mut() {
                    Some(last) if last.letter == e.letter && last.target == e.target => {
                        last.prob = last.prob.clone() + e.prob;
                    }
                    _ => merged.push(e),
                }
            }
            let mut sum = T::zero();
            for e in &merged {
                if e.prob.is_negative() || e.prob > T::one() {
                    return Err(ParseError::NotStochastic {
                        state: states[s].clone(),
                        sum: format!("an entry equal to {}", e.prob),
                    });
                }
                sum = sum + e.prob.clone();
            }
            if !(sum.clone() - T::one()).is_negligible() {
                return Err(ParseError::NotStochastic {
                    state: states[s].clone(),
                    sum: sum.to_string(),
                });
            }
            merged.retain(|e| !e.prob.is_zero());
            *edges = merged;
        }
        Ok(Self {
            states,
            letters,
            initial,
            out,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_letters(&self) -> usize {
        self.letters.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn letter_name(&self, a: usize) -> &str {
        &self.letters[a]
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|l| l == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn edges(&self, s: usize) -> &[Edge<T>] {
        &self.out[s]
    }

    /// `M(a)(s, t)`.
    pub fn prob(&self, letter: usize, s: usize, t: usize) -> T {
        self.out[s]
            .iter()
            .find(|e| e.letter == letter && e.target == t)
            .map(|e| e.prob.clone())
            .unwrap_or_else(T::zero)
    }

    /// Dense `M(a)`.
    pub fn matrix(&self, letter: usize) -> Matrix<T> {
        let n = self.num_states();
        let mut m: Matrix<T> = Matrix::zeros(n, n);
        for (s, edges) in self.out.iter().enumerate() {
            for e in edges.iter().filter(|e| e.letter == letter) {
                m[(s, e.target)] = e.prob.clone();
            }
        }
        m
    }

    /// For a non-hidden chain, the target state `<a>` of every letter that
    /// occurs (`None` for letters with an all-zero matrix). Returns `None`
    /// when some letter leads to two different states.
    pub fn non_hidden_targets(&self) -> Option<Vec<Option<usize>>> {
        let mut target: Vec<Option<usize>> = vec![None; self.num_letters()];
        for edges in &self.out {
            for e in edges {
                match target[e.letter] {
                    None => target[e.letter] = Some(e.target),
                    Some(t) if t != e.target => return None,
                    _ => {}
                }
            }
        }
        Some(target)
    }

    /// Whether every letter identifies its successor state.
    pub fn is_non_hidden(&self) -> bool {
        self.non_hidden_targets().is_some()
    }

    /// First letter that reaches two different states, if any.
    pub fn hidden_witness(&self) -> Option<&str> {
        let mut target: Vec<Option<usize>> = vec![None; self.num_letters()];
        for edges in &self.out {
            for e in edges {
                match target[e.letter] {
                    None => target[e.letter] = Some(e.target),
                    Some(t) if t != e.target => return Some(&self.letters[e.letter]),
                    _ => {}
                }
            }
        }
        None
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mc<U> {
        Mc {
            states: self.states.clone(),
            letters: self.letters.clone(),
            initial: self.initial,
            out: self
                .out
                .iter()
                .map(|edges| {
                    edges
                        .iter()
                        .map(|e| Edge {
                            letter: e.letter,
                            target: e.target,
                            prob: f(&e.prob),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl Mc<Rational> {
    /// Converts exact probabilities into another scalar type.
    pub fn to_scalar<U: Scalar>(&self) -> Mc<U> {
        self.map_scalar(U::from_rational)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parallel_edges_are_summed() {
        let mc = Mc::new(
            names(&["s"]),
            names(&["a"]),
            0,
            vec![(0, 0, 0, ratio(1, 2)), (0, 0, 0, ratio(1, 2))],
        )
        .unwrap();
        assert_eq!(mc.edges(0).len(), 1);
        assert_eq!(mc.prob(0, 0, 0), ratio(1, 1));
    }

    #[test]
    fn row_sum_must_be_one() {
        let err = Mc::new(
            names(&["s0", "s1"]),
            names(&["a"]),
            0,
            vec![(0, 0, 1, ratio(3, 4)), (1, 0, 1, ratio(1, 1))],
        )
        .unwrap_err();
        assert_eq!(
            err,
            ParseError::NotStochastic {
                state: "s0".into(),
                sum: "3/4".into()
            }
        );
    }

    #[test]
    fn hidden_detection() {
        let mc = Mc::new(
            names(&["s0", "s1", "s2"]),
            names(&["a"]),
            0,
            vec![
                (0, 0, 1, ratio(1, 2)),
                (0, 0, 2, ratio(1, 2)),
                (1, 0, 1, ratio(1, 1)),
                (2, 0, 2, ratio(1, 1)),
            ],
        )
        .unwrap();
        assert!(!mc.is_non_hidden());
        assert_eq!(mc.hidden_witness(), Some("a"));
    }
}
