//! Qualitative classification of pairs, beliefs, and observation prefixes.
//!
//! Pair-level questions (is `Pr_s(L_q)` zero or one?) are graph searches in
//! the product. Belief-level questions (confused, very confused, finitary)
//! are answered on the [`BeliefGraph`]: the product of the chain with the
//! determinized belief automaton, explored from the belief of interest. The
//! "almost surely eventually" conditions reduce to plain graph reachability
//! because the graph is finite.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::AnalysisError;
use crate::linalg::{can_reach, SparseChain};
use crate::model::{Belief, BeliefNfa, Observation, ProductMc};
use crate::scalar::Scalar;

/// Default bound on explored belief-graph nodes.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

/// Zero/one classification of `Pr_s(L_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    /// `Pr_s(L_q) = 0`.
    NegativelyDeciding,
    /// `Pr_s(L_q) = 1`.
    PositivelyDeciding,
    Undecided,
}

impl PairClass {
    pub fn is_deciding(self) -> bool {
        self != PairClass::Undecided
    }
}

/// Verdict carried by a deciding belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

/// Classifies every pair of the product (reachable or not).
///
/// A pair is *not* negatively deciding iff some accepting pair is reachable
/// from it; it is *not* positively deciding iff some negatively deciding pair
/// is reachable from it.
pub fn classify_pairs<T: Scalar>(p: &ProductMc<T>) -> Vec<PairClass> {
    let n = p.num_pairs();
    let succ: SparseChain<()> = (0..n)
        .map(|x| p.edges(x).iter().map(|e| (e.target, ())).collect())
        .collect();
    let accepting: Vec<bool> = (0..n).map(|x| p.is_accepting(x)).collect();
    let reaches_accepting = can_reach(&succ, &accepting);
    let negative: Vec<bool> = reaches_accepting.iter().map(|r| !r).collect();
    let reaches_negative = can_reach(&succ, &negative);
    (0..n)
        .map(|x| {
            if negative[x] {
                PairClass::NegativelyDeciding
            } else if !reaches_negative[x] {
                PairClass::PositivelyDeciding
            } else {
                PairClass::Undecided
            }
        })
        .collect()
}

/// All predicates of one belief (or of the observation prefix leading to it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeliefClass {
    pub enabled: bool,
    pub negatively_deciding: bool,
    pub positively_deciding: bool,
    pub confused: bool,
    pub very_confused: bool,
    pub finitary: bool,
}

impl BeliefClass {
    pub fn deciding(&self) -> bool {
        self.negatively_deciding || self.positively_deciding
    }
}

/// Product of the chain with the determinized belief automaton.
///
/// A node `(s, B)` moves on letter `a` with probability `M(a)(s,s')` to
/// `(s', Δ(B,a))`. Every node belief contains a pair whose chain component is
/// the node's state, so node beliefs are never empty.
#[derive(Debug, Clone)]
pub struct BeliefGraph<T> {
    nodes: Vec<(usize, Belief)>,
    edges: Vec<Vec<(usize, usize, T)>>,
    deciding: Vec<Option<Polarity>>,
    index: HashMap<(usize, Belief), usize>,
}

impl<T: Scalar> BeliefGraph<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(mc state, belief)` of a node.
    pub fn node(&self, i: usize) -> (usize, &Belief) {
        (self.nodes[i].0, &self.nodes[i].1)
    }

    pub fn node_index(&self, state: usize, belief: &Belief) -> Option<usize> {
        self.index.get(&(state, belief.clone())).copied()
    }

    /// `(letter, successor node, probability)` triples.
    pub fn edges(&self, i: usize) -> &[(usize, usize, T)] {
        &self.edges[i]
    }

    pub fn deciding(&self, i: usize) -> Option<Polarity> {
        self.deciding[i]
    }

    /// The graph as an unlabelled chain over node indices.
    pub fn chain(&self) -> SparseChain<T> {
        self.edges
            .iter()
            .map(|es| es.iter().map(|(_, j, p)| (*j, p.clone())).collect())
            .collect()
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, p: &ProductMc<T>, very_confused: Option<&[bool]>) -> String {
        let mut out = String::from("digraph belief_graph {\n");
        for (i, (s, b)) in self.nodes.iter().enumerate() {
            let pairs: Vec<String> = b.iter().map(|x| p.pair_name(x)).collect();
            let shape = match (self.deciding[i], very_confused.map(|v| v[i])) {
                (Some(Polarity::Positive), _) => "doublecircle",
                (Some(Polarity::Negative), _) => "doubleoctagon",
                (None, Some(true)) => "box",
                _ => "ellipse",
            };
            let _ = writeln!(
                out,
                "  n{} [shape={}, label=\"{} | {{{}}}\"];",
                i,
                shape,
                p.mc().state_name(*s),
                pairs.join(" ")
            );
        }
        for (i, es) in self.edges.iter().enumerate() {
            for (a, j, prob) in es {
                let _ = writeln!(
                    out,
                    "  n{} -> n{} [label=\"{} {}\"];",
                    i,
                    j,
                    prob,
                    p.mc().letter_name(*a)
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Answers qualitative questions about one product.
#[derive(Debug, Clone)]
pub struct Analyzer<'a, T> {
    p: &'a ProductMc<T>,
    nfa: BeliefNfa,
    classes: Vec<PairClass>,
    cap: usize,
}

impl<'a, T: Scalar> Analyzer<'a, T> {
    pub fn new(p: &'a ProductMc<T>) -> Self {
        Self::with_cap(p, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(p: &'a ProductMc<T>, cap: usize) -> Self {
        Self {
            p,
            nfa: BeliefNfa::new(p),
            classes: classify_pairs(p),
            cap,
        }
    }

    pub fn product(&self) -> &'a ProductMc<T> {
        self.p
    }

    pub fn nfa(&self) -> &BeliefNfa {
        &self.nfa
    }

    pub fn pair_classes(&self) -> &[PairClass] {
        &self.classes
    }

    pub fn initial_belief(&self) -> Belief {
        Belief::singleton(self.p.initial())
    }

    /// Polarity of a nonempty deciding belief; `None` for the empty belief
    /// and for beliefs that are not deciding.
    pub fn polarity(&self, b: &Belief) -> Option<Polarity> {
        let mut it = b.iter().map(|x| self.classes[x]);
        let first = it.next()?;
        let pol = match first {
            PairClass::NegativelyDeciding => Polarity::Negative,
            PairClass::PositivelyDeciding => Polarity::Positive,
            PairClass::Undecided => return None,
        };
        it.all(|c| c == first).then_some(pol)
    }

    /// Deciding in the literal sense: the empty belief is vacuously deciding
    /// with both polarities.
    pub fn is_deciding(&self, b: &Belief) -> bool {
        b.is_empty() || self.polarity(b).is_some()
    }

    /// Explores the belief graph from `roots` until closure.
    pub fn belief_graph(
        &self,
        roots: impl IntoIterator<Item = (usize, Belief)>,
    ) -> Result<BeliefGraph<T>, AnalysisError> {
        let mc = self.p.mc();
        let mut graph = BeliefGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            deciding: Vec::new(),
            index: HashMap::new(),
        };
        let add = |g: &mut BeliefGraph<T>, key: (usize, Belief)| -> Result<usize, AnalysisError> {
            if let Some(&i) = g.index.get(&key) {
                return Ok(i);
            }
            if g.nodes.len() >= self.cap {
                return Err(AnalysisError::CapExceeded { cap: self.cap });
            }
            let i = g.nodes.len();
            g.deciding.push(self.polarity(&key.1));
            g.nodes.push(key.clone());
            g.edges.push(Vec::new());
            g.index.insert(key, i);
            Ok(i)
        };
        for root in roots {
            add(&mut graph, root)?;
        }
        let mut i = 0;
        while i < graph.nodes.len() {
            let (s, b) = graph.nodes[i].clone();
            let mut step_cache: Vec<Option<Belief>> = vec![None; mc.num_letters()];
            let mut out = Vec::new();
            for e in mc.edges(s) {
                let next_b = step_cache[e.letter]
                    .get_or_insert_with(|| self.nfa.step(&b, Observation::Letter(e.letter)))
                    .clone();
                let j = add(&mut graph, (e.target, next_b))?;
                out.push((e.letter, j, e.prob.clone()));
            }
            graph.edges[i] = out;
            i += 1;
        }
        Ok(graph)
    }

    /// Belief graph rooted at `{(s, B) : (s, q) ∈ B}`.
    pub fn belief_graph_of(&self, b: &Belief) -> Result<BeliefGraph<T>, AnalysisError> {
        let mut states: Vec<usize> = b.iter().map(|x| self.p.split(x).0).collect();
        states.dedup();
        self.belief_graph(states.into_iter().map(|s| (s, b.clone())))
    }

    /// Very-confused flags for several beliefs at once, sharing one
    /// exploration of the letter-labelled determinized belief automaton.
    pub fn very_confused_many(&self, beliefs: &[Belief]) -> Result<Vec<bool>, AnalysisError> {
        let mut index: HashMap<Belief, usize> = HashMap::new();
        let mut nodes: Vec<Belief> = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();
        for b in beliefs.iter().filter(|b| !b.is_empty()) {
            if !index.contains_key(b) {
                if nodes.len() >= self.cap {
                    return Err(AnalysisError::CapExceeded { cap: self.cap });
                }
                index.insert(b.clone(), nodes.len());
                nodes.push(b.clone());
                succ.push(Vec::new());
                queue.push_back(nodes.len() - 1);
            }
        }
        while let Some(i) = queue.pop_front() {
            let b = nodes[i].clone();
            let mut out = Vec::new();
            for a in 0..self.nfa.num_letters() {
                let next = self.nfa.step(&b, Observation::Letter(a));
                if next.is_empty() {
                    continue;
                }
                let j = match index.get(&next) {
                    Some(&j) => j,
                    None => {
                        if nodes.len() >= self.cap {
                            return Err(AnalysisError::CapExceeded { cap: self.cap });
                        }
                        index.insert(next.clone(), nodes.len());
                        nodes.push(next);
                        succ.push(Vec::new());
                        queue.push_back(nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                out.push((j, ()));
            }
            succ[i] = out.into_iter().map(|(j, _)| j).collect();
        }
        let chain: SparseChain<()> = succ
            .iter()
            .map(|s| s.iter().map(|&j| (j, ())).collect())
            .collect();
        let good: Vec<bool> = nodes.iter().map(|b| self.polarity(b).is_some()).collect();
        let reaches_good = can_reach(&chain, &good);
        Ok(beliefs
            .iter()
            .map(|b| b.is_empty() || !reaches_good[index[b]])
            .collect())
    }

    /// No continuation over letters leads to a nonempty deciding belief.
    pub fn is_very_confused(&self, b: &Belief) -> Result<bool, AnalysisError> {
        Ok(self.very_confused_many(std::slice::from_ref(b))?[0])
    }

    /// With positive probability, observing everything from now on never
    /// yields a deciding belief.
    pub fn is_confused(&self, b: &Belief) -> Result<bool, AnalysisError> {
        if b.is_empty() {
            return Ok(false);
        }
        let g = self.belief_graph_of(b)?;
        let target: Vec<bool> = (0..g.len()).map(|i| g.deciding(i).is_some()).collect();
        Ok(!can_reach(&g.chain(), &target).iter().all(|r| *r))
    }

    /// Deciding-or-very-confused marks for every node of `g`.
    pub fn dv_marks(&self, g: &BeliefGraph<T>) -> Result<Vec<bool>, AnalysisError> {
        let mut distinct: Vec<Belief> = g.nodes.iter().map(|(_, b)| b.clone()).collect();
        distinct.sort();
        distinct.dedup();
        let vc = self.very_confused_many(&distinct)?;
        let vc_of: HashMap<&Belief, bool> = distinct.iter().zip(vc).collect();
        Ok((0..g.len())
            .map(|i| g.deciding(i).is_some() || vc_of[&g.nodes[i].1])
            .collect())
    }

    /// Almost surely, full observation reaches a deciding or very confused
    /// belief.
    pub fn is_finitary(&self, b: &Belief) -> Result<bool, AnalysisError> {
        if b.is_empty() {
            return Ok(true);
        }
        let g = self.belief_graph_of(b)?;
        let target = self.dv_marks(&g)?;
        Ok(can_reach(&g.chain(), &target).iter().all(|r| *r))
    }

    pub fn classify_belief(&self, b: &Belief) -> Result<BeliefClass, AnalysisError> {
        let polarity = self.polarity(b);
        Ok(BeliefClass {
            enabled: !b.is_empty(),
            negatively_deciding: b.is_empty() || polarity == Some(Polarity::Negative),
            positively_deciding: b.is_empty() || polarity == Some(Polarity::Positive),
            confused: self.is_confused(b)?,
            very_confused: self.is_very_confused(b)?,
            finitary: self.is_finitary(b)?,
        })
    }

    /// Classifies an observation prefix through its belief `Δ(B0, υ)`.
    pub fn classify_prefix(&self, prefix: &[Observation]) -> Result<BeliefClass, AnalysisError> {
        for o in prefix {
            if let Observation::Letter(a) = o {
                if *a >= self.p.num_letters() {
                    return Err(AnalysisError::UnknownLetter(a.to_string()));
                }
            }
        }
        let b = self.nfa.run(&self.initial_belief(), prefix);
        self.classify_belief(&b)
    }

    /// A diagnoser exists iff the empty prefix is not confused.
    pub fn diagnoser_exists(&self) -> Result<bool, AnalysisError> {
        Ok(!self.is_confused(&self.initial_belief())?)
    }

    /// The optimal expected cost is finite iff the empty prefix is finitary.
    pub fn cinf_is_finite(&self) -> Result<bool, AnalysisError> {
        self.is_finitary(&self.initial_belief())
    }
}

/// Parses a comma-separated observation prefix; `_` stands for `⊥`.
pub fn parse_prefix<T: Scalar>(p: &ProductMc<T>, text: &str) -> Result<Vec<Observation>, AnalysisError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            if t == "_" {
                Ok(Observation::Skip)
            } else {
                p.mc()
                    .letter_index(t)
                    .map(Observation::Letter)
                    .ok_or_else(|| AnalysisError::UnknownLetter(t.to_string()))
            }
        })
        .collect()
}
