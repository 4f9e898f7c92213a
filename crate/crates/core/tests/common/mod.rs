//! Brute-force reference implementations, written against the raw chain and
//! automaton only (no product, belief automaton, or graph search from the
//! library), with explicit word-length bounds.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use selmon::{Dfa, Mc};

pub type Pair = (usize, usize);
pub type Bel = BTreeSet<Pair>;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Obs {
    Letter(usize),
    Skip,
}

pub struct Oracle<'a> {
    mc: &'a Mc,
    dfa: &'a Dfa,
    /// `(s, q)` → 0 (never accepts), 1 (surely accepts), 2 (undecided).
    class: HashMap<Pair, u8>,
    can_decide: HashMap<(usize, Bel), bool>,
    very_confused: HashMap<Bel, bool>,
}

impl<'a> Oracle<'a> {
    pub fn new(mc: &'a Mc, dfa: &'a Dfa) -> Self {
        let mut o = Oracle {
            mc,
            dfa,
            class: HashMap::new(),
            can_decide: HashMap::new(),
            very_confused: HashMap::new(),
        };
        let pairs: Vec<Pair> = (0..mc.num_states())
            .flat_map(|s| (0..dfa.num_states()).map(move |q| (s, q)))
            .collect();
        let reach: HashMap<Pair, HashSet<Pair>> =
            pairs.iter().map(|&x| (x, o.reachable_pairs(x))).collect();
        let never: HashSet<Pair> = pairs
            .iter()
            .copied()
            .filter(|x| !reach[x].iter().any(|y| y.1 == dfa.accepting()))
            .collect();
        for &x in &pairs {
            let c = if never.contains(&x) {
                0
            } else if !reach[&x].iter().any(|y| never.contains(y)) {
                1
            } else {
                2
            };
            o.class.insert(x, c);
        }
        o
    }

    pub fn pairs(&self) -> usize {
        self.mc.num_states() * self.dfa.num_states()
    }

    fn succ(&self, (s, q): Pair) -> Vec<(usize, Pair)> {
        self.mc
            .edges(s)
            .iter()
            .map(|e| (e.letter, (e.target, self.dfa.next(q, e.letter))))
            .collect()
    }

    fn reachable_pairs(&self, x: Pair) -> HashSet<Pair> {
        let mut seen = HashSet::from([x]);
        let mut stack = vec![x];
        while let Some(y) = stack.pop() {
            for (_, z) in self.succ(y) {
                if seen.insert(z) {
                    stack.push(z);
                }
            }
        }
        seen
    }

    pub fn pair_class(&self, x: Pair) -> u8 {
        self.class[&x]
    }

    pub fn step(&self, b: &Bel, o: Obs) -> Bel {
        b.iter()
            .flat_map(|&x| self.succ(x))
            .filter(|(a, _)| match o {
                Obs::Letter(l) => *a == l,
                Obs::Skip => true,
            })
            .map(|(_, y)| y)
            .collect()
    }

    /// Nonempty and all pairs share one zero/one class.
    pub fn deciding(&self, b: &Bel) -> bool {
        let mut classes = b.iter().map(|x| self.class[x]);
        match classes.next() {
            None => false,
            Some(2) => false,
            Some(c) => classes.all(|d| d == c),
        }
    }

    /// Word-length bound for questions over beliefs only.
    fn belief_bound(&self) -> usize {
        1 << self.pairs()
    }

    /// Word-length bound for questions over `(state, belief)` configurations.
    fn config_bound(&self) -> usize {
        self.mc.num_states() << self.pairs()
    }

    /// Configurations `(t, Δ(B,u))` for words `u` of length exactly one,
    /// extended from a set of configurations.
    fn next_layer(&self, layer: &BTreeSet<(usize, Bel)>) -> BTreeSet<(usize, Bel)> {
        let mut out = BTreeSet::new();
        for (s, b) in layer {
            for e in self.mc.edges(*s) {
                out.insert((e.target, self.step(b, Obs::Letter(e.letter))));
            }
        }
        out
    }

    /// All configurations reachable by words of length at most the bound,
    /// enumerated length by length (stopping early once a layer repeats).
    fn configs_within_bound(&self, start: BTreeSet<(usize, Bel)>) -> BTreeSet<(usize, Bel)> {
        let mut all = start.clone();
        let mut layer = start;
        let mut layers_seen = HashSet::new();
        for _ in 0..self.config_bound() {
            if !layers_seen.insert(layer.clone()) {
                break;
            }
            layer = self.next_layer(&layer);
            all.extend(layer.iter().cloned());
        }
        all
    }

    fn starts(b: &Bel) -> BTreeSet<(usize, Bel)> {
        b.iter().map(|&(s, _)| (s, b.clone())).collect()
    }

    /// Some word of bounded length from the configuration yields a
    /// deciding belief.
    fn can_decide(&mut self, config: &(usize, Bel)) -> bool {
        if let Some(&v) = self.can_decide.get(config) {
            return v;
        }
        let start = BTreeSet::from([config.clone()]);
        let v = self
            .configs_within_bound(start)
            .iter()
            .any(|(_, b)| self.deciding(b));
        self.can_decide.insert(config.clone(), v);
        v
    }

    pub fn is_confused(&mut self, b: &Bel) -> bool {
        if b.is_empty() {
            return false;
        }
        let configs = self.configs_within_bound(Self::starts(b));
        configs.iter().any(|c| !self.can_decide(c))
    }

    pub fn is_very_confused(&mut self, b: &Bel) -> bool {
        if b.is_empty() {
            return true;
        }
        if let Some(&v) = self.very_confused.get(b) {
            return v;
        }
        let letters = self.mc.num_letters();
        let mut layer: BTreeSet<Bel> = BTreeSet::from([b.clone()]);
        let mut seen_layers = HashSet::new();
        let mut found = false;
        for _ in 0..=self.belief_bound() {
            if layer.iter().any(|x| self.deciding(x)) {
                found = true;
                break;
            }
            if !seen_layers.insert(layer.clone()) {
                break;
            }
            layer = layer
                .iter()
                .flat_map(|x| (0..letters).map(move |a| (x, a)))
                .map(|(x, a)| self.step(x, Obs::Letter(a)))
                .filter(|x| !x.is_empty())
                .collect();
        }
        self.very_confused.insert(b.clone(), !found);
        !found
    }

    pub fn is_finitary(&mut self, b: &Bel) -> bool {
        if b.is_empty() {
            return true;
        }
        let configs = self.configs_within_bound(Self::starts(b));
        for c in &configs {
            let reach = self.configs_within_bound(BTreeSet::from([c.clone()]));
            let ok = reach
                .iter()
                .any(|(_, x)| self.deciding(x) || self.is_very_confused(x));
            if !ok {
                return false;
            }
        }
        true
    }

    /// Beliefs reachable from `{(s0,q0)}` under letters and skips.
    pub fn reachable_beliefs(&self) -> Vec<Bel> {
        let b0 = Bel::from([(self.mc.initial(), self.dfa.initial())]);
        let mut seen = BTreeSet::from([b0.clone()]);
        let mut stack = vec![b0];
        let obs: Vec<Obs> = (0..self.mc.num_letters())
            .map(Obs::Letter)
            .chain([Obs::Skip])
            .collect();
        while let Some(b) = stack.pop() {
            for &o in &obs {
                let n = self.step(&b, o);
                if seen.insert(n.clone()) {
                    stack.push(n);
                }
            }
        }
        seen.into_iter().collect()
    }
}
