use crate::error::ParseError;

/// Deterministic automaton with a single absorbing accepting state.
///
/// A word is accepted once some prefix reaches the accepting state, so every
/// input automaton can be brought into this shape without changing its
/// language; [`Dfa::new`] performs that normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    states: Vec<String>,
    letters: Vec<String>,
    delta: Vec<Vec<usize>>,
    initial: usize,
    accepting: usize,
}

impl Dfa {
    /// Builds and normalizes an automaton.
    ///
    /// `delta[q][a]` may be `None` only for accepting states, whose outgoing
    /// transitions never influence the language. With exactly one accepting
    /// state it becomes absorbing; with several (or none) a fresh absorbing
    /// sink replaces them.
    pub fn new(
        mut states: Vec<String>,
        letters: Vec<String>,
        delta: Vec<Vec<Option<usize>>>,
        initial: usize,
        accepting: &[usize],
    ) -> Result<Self, ParseError> {
        let mut is_acc = vec![false; states.len()];
        for &f in accepting {
            is_acc[f] = true;
        }
        for (q, row) in delta.iter().enumerate() {
            if is_acc[q] {
                continue;
            }
            for (a, t) in row.iter().enumerate() {
                if t.is_none() {
                    return Err(ParseError::DfaNotTotal {
                        state: states[q].clone(),
                        letter: letters[a].clone(),
                    });
                }
            }
        }

        let mut acc_list: Vec<usize> = (0..states.len()).filter(|&q| is_acc[q]).collect();
        acc_list.dedup();
        let sink = if acc_list.len() == 1 {
            acc_list[0]
        } else {
            let mut name = "accept".to_string();
            while states.contains(&name) {
                name.push('\'');
            }
            states.push(name);
            states.len() - 1
        };
        let n = states.len();
        let redirect = |t: usize| if t < is_acc.len() && is_acc[t] { sink } else { t };
        let mut full: Vec<Vec<usize>> = Vec::with_capacity(n);
        for q in 0..n {
            let row = if q == sink || (q < is_acc.len() && is_acc[q]) {
                vec![sink; letters.len()]
            } else {
                delta[q].iter().map(|t| redirect(t.expect("checked above"))).collect()
            };
            full.push(row);
        }
        Ok(Self {
            states,
            letters,
            delta: full,
            initial: redirect(initial),
            accepting: sink,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> usize {
        self.accepting
    }

    /// `δ(q, a)`.
    pub fn next(&self, q: usize, letter: usize) -> usize {
        self.delta[q][letter]
    }

    /// Runs the automaton from the initial state; `true` once the accepting
    /// state has been visited.
    pub fn accepts_prefix(&self, word: &[usize]) -> bool {
        let mut q = self.initial;
        if q == self.accepting {
            return true;
        }
        for &a in word {
            q = self.next(q, a);
            if q == self.accepting {
                return true;
            }
        }
        false
    }

    /// Re-indexes the letters to follow `order` (a permutation of this
    /// automaton's alphabet by name). Returns `None` if the alphabets differ.
    pub fn with_alphabet(&self, order: &[String]) -> Option<Dfa> {
        if order.len() != self.letters.len() {
            return None;
        }
        let map: Option<Vec<usize>> = order
            .iter()
            .map(|name| self.letters.iter().position(|l| l == name))
            .collect();
        let map = map?;
        Some(Dfa {
            states: self.states.clone(),
            letters: order.to_vec(),
            delta: self
                .delta
                .iter()
                .map(|row| map.iter().map(|&old| row[old]).collect())
                .collect(),
            initial: self.initial,
            accepting: self.accepting,
        })
    }
}
