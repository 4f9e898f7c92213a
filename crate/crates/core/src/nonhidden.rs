//! Analyses that only make sense when every letter determines its target
//! state: language equivalence of pairs, settledness, `cras`, and the
//! procrastination chain `M_pro(K)`.

use std::collections::VecDeque;
use std::fmt;

use crate::error::AnalysisError;
use crate::model::{Belief, BeliefNfa, Observation, ProductMc};
use crate::qualitative::{classify_pairs, PairClass};
use crate::scalar::Scalar;

/// Upper bound `K` on the number of consecutive skips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(u64),
    Unbounded,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(k) => write!(f, "{}", k),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Bound {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "∞" => Ok(Bound::Unbounded),
            _ => s
                .parse()
                .map(Bound::Finite)
                .map_err(|_| AnalysisError::InvalidArgument(format!("invalid bound '{}'", s))),
        }
    }
}

/// `cras(B)`: the largest number of skips after which the belief is still
/// not confused. `Finite(-1)` means the belief is already confused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cras {
    Finite(i64),
    Infinite,
}

impl fmt::Display for Cras {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cras::Finite(k) => write!(f, "{}", k),
            Cras::Infinite => f.write_str("inf"),
        }
    }
}

/// Language-equivalence classes of the letter-only belief automaton with
/// accepting set `{(s,q) : Pr_s(L_q) = 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivTable {
    class: Vec<usize>,
    representative: Vec<usize>,
}

impl EquivTable {
    /// Moore refinement over `succ[x][a]` (missing = implicit rejecting sink).
    /// Class ids are numbered by their least member, which is also the
    /// representative.
    pub fn refine(succ: &[Vec<Option<usize>>], accepting: &[bool]) -> Self {
        let n = succ.len();
        let dead = n;
        let letters = succ.first().map_or(0, Vec::len);
        let mut class: Vec<usize> = (0..=n)
            .map(|x| usize::from(x < n && accepting[x]))
            .collect();
        let mut count = 0;
        loop {
            let mut ids = std::collections::HashMap::new();
            let next: Vec<usize> = (0..=n)
                .map(|x| {
                    let sig: Vec<usize> = if x == dead {
                        vec![class[dead]; letters + 1]
                    } else {
                        std::iter::once(class[x])
                            .chain(succ[x].iter().map(|t| class[t.unwrap_or(dead)]))
                            .collect()
                    };
                    let fresh = ids.len();
                    *ids.entry(sig).or_insert(fresh)
                })
                .collect();
            let new_count = ids.len();
            class = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        let mut renumber = vec![usize::MAX; n + 1];
        let mut representative = Vec::new();
        let mut out = Vec::with_capacity(n);
        for x in 0..n {
            let c = class[x];
            if renumber[c] == usize::MAX {
                renumber[c] = representative.len();
                representative.push(x);
            }
            out.push(renumber[c]);
        }
        Self {
            class: out,
            representative,
        }
    }

    pub fn class(&self, x: usize) -> usize {
        self.class[x]
    }

    pub fn num_classes(&self) -> usize {
        self.representative.len()
    }

    pub fn representative(&self, x: usize) -> usize {
        self.representative[self.class[x]]
    }

    pub fn equivalent(&self, x: usize, y: usize) -> bool {
        self.class[x] == self.class[y]
    }

    /// All pairs of `b` are language equivalent.
    pub fn is_settled(&self, b: &Belief) -> bool {
        let mut it = b.iter().map(|x| self.class[x]);
        match it.next() {
            None => true,
            Some(c) => it.all(|d| d == c),
        }
    }

    /// `res(B)`: one representative per class present in `b`.
    pub fn restrict(&self, b: &Belief) -> Belief {
        b.iter().map(|x| self.representative(x)).collect()
    }
}

/// Analyses of a product whose chain is non-hidden.
#[derive(Debug, Clone)]
pub struct NonHidden<'a, T> {
    p: &'a ProductMc<T>,
    nfa: BeliefNfa,
    classes: Vec<PairClass>,
    equiv: EquivTable,
    /// `target[a] = <a>`.
    target: Vec<Option<usize>>,
    /// `dist[x][y]`: shortest path in the pair graph from `(x,y)` into the
    /// unsettledness witness set; `None` if unreachable. Symmetric.
    dist: Vec<Vec<Option<u64>>>,
}

impl<'a, T: Scalar> NonHidden<'a, T> {
    pub fn new(p: &'a ProductMc<T>) -> Result<Self, AnalysisError> {
        let target = p.mc().non_hidden_targets().ok_or_else(|| {
            AnalysisError::NotNonHidden {
                letter: p.mc().hidden_witness().unwrap_or_default().to_string(),
            }
        })?;
        let nfa = BeliefNfa::new(p);
        let classes = classify_pairs(p);
        let n = p.num_pairs();
        let succ: Vec<Vec<Option<usize>>> = (0..n)
            .map(|x| {
                (0..p.num_letters())
                    .map(|a| nfa.successors(x, Observation::Letter(a)).first().copied())
                    .collect()
            })
            .collect();
        let accepting: Vec<bool> = classes
            .iter()
            .map(|c| *c == PairClass::PositivelyDeciding)
            .collect();
        let equiv = EquivTable::refine(&succ, &accepting);
        let mut nh = Self {
            p,
            nfa,
            classes,
            equiv,
            target,
            dist: Vec::new(),
        };
        nh.dist = nh.pair_distances();
        Ok(nh)
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

    pub fn equivalence(&self) -> &EquivTable {
        &self.equiv
    }

    /// `<a>`, if the letter occurs at all.
    pub fn letter_target(&self, a: usize) -> Option<usize> {
        self.target[a]
    }

    /// `(x, y)` are both able to emit some `a` after which they land in
    /// inequivalent pairs.
    fn splits(&self, x: usize, y: usize) -> bool {
        (0..self.p.num_letters()).any(|a| {
            let o = Observation::Letter(a);
            match (
                self.nfa.successors(x, o).first(),
                self.nfa.successors(y, o).first(),
            ) {
                (Some(&u), Some(&v)) => !self.equiv.equivalent(u, v),
                _ => false,
            }
        })
    }

    /// Backward BFS from the witness set over the (symmetric) pair graph
    /// whose edges go from `(x,y)` to every `(x',y')` inside `Δ({x,y}, ⊥)`.
    fn pair_distances(&self) -> Vec<Vec<Option<u64>>> {
        let n = self.p.num_pairs();
        let mut pred: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n * n];
        for x in 0..n {
            for y in x..n {
                let mut post: Vec<usize> = self
                    .nfa
                    .successors(x, Observation::Skip)
                    .iter()
                    .chain(self.nfa.successors(y, Observation::Skip))
                    .copied()
                    .collect();
                post.sort_unstable();
                post.dedup();
                for (i, &u) in post.iter().enumerate() {
                    for &v in &post[i..] {
                        pred[u * n + v].push((x, y));
                    }
                }
            }
        }
        let mut dist: Vec<Vec<Option<u64>>> = vec![vec![None; n]; n];
        let mut queue = VecDeque::new();
        for x in 0..n {
            for y in x..n {
                if self.splits(x, y) {
                    dist[x][y] = Some(0);
                    dist[y][x] = Some(0);
                    queue.push_back((x, y));
                }
            }
        }
        while let Some((u, v)) = queue.pop_front() {
            let d = dist[u][v].expect("queued nodes have a distance");
            for &(x, y) in &pred[u * n + v] {
                if dist[x][y].is_none() {
                    dist[x][y] = Some(d + 1);
                    dist[y][x] = Some(d + 1);
                    queue.push_back((x, y));
                }
            }
        }
        dist
    }

    pub fn is_settled(&self, b: &Belief) -> bool {
        self.equiv.is_settled(b)
    }

    /// Confused iff some letter leads to an unsettled belief.
    pub fn is_confused(&self, b: &Belief) -> bool {
        (0..self.p.num_letters())
            .any(|a| !self.is_settled(&self.nfa.step(b, Observation::Letter(a))))
    }

    pub fn cras(&self, b: &Belief) -> Cras {
        let pairs = b.pairs();
        let best = pairs
            .iter()
            .enumerate()
            .flat_map(|(i, &x)| pairs[i..].iter().filter_map(move |&y| self.dist[x][y]))
            .min();
        match best {
            None => Cras::Infinite,
            Some(d) => {
                let n = self.p.num_pairs() as u64;
                let c = d as i64 - 1;
                assert!(c < (n * n) as i64, "cras exceeds the |S|²|Q|² bound");
                Cras::Finite(c)
            }
        }
    }

    pub fn cras_pair(&self, x: usize) -> Cras {
        self.cras(&Belief::singleton(x))
    }

    /// `k(s,q) = min(K, cras(s,q))`; `None` when both are infinite.
    pub fn skip_count(&self, x: usize, bound: Bound) -> Option<u64> {
        match (self.cras_pair(x), bound) {
            (Cras::Finite(c), Bound::Finite(k)) => Some(k.min(c.max(0) as u64)),
            (Cras::Finite(c), Bound::Unbounded) => Some(c.max(0) as u64),
            (Cras::Infinite, Bound::Finite(k)) => Some(k),
            (Cras::Infinite, Bound::Unbounded) => None,
        }
    }

    /// Distribution over pairs after `k` unobserved steps from `x`.
    pub fn skip_distribution(&self, x: usize, k: u64) -> Vec<T> {
        let mut dist = vec![T::zero(); self.p.num_pairs()];
        dist[x] = T::one();
        for _ in 0..k {
            dist = self.p.skip_step(&dist);
        }
        dist
    }

    /// Outgoing row of `x` in `M_pro(K)`.
    pub fn procrastination_row(&self, x: usize, bound: Bound) -> Vec<ProEdge<T>> {
        if self.classes[x].is_deciding() {
            return vec![ProEdge {
                letter: None,
                target: x,
                prob: T::one(),
            }];
        }
        let Some(k) = self.skip_count(x, bound) else {
            return vec![ProEdge {
                letter: None,
                target: x,
                prob: T::one(),
            }];
        };
        let dist = self.skip_distribution(x, k);
        let mut row: Vec<ProEdge<T>> = Vec::new();
        for (y, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for e in self.p.edges(y) {
                let contribution = mass.clone() * e.prob.clone();
                match row
                    .iter_mut()
                    .find(|r| r.letter == Some(e.letter) && r.target == e.target)
                {
                    Some(r) => r.prob = r.prob.clone() + contribution,
                    None => row.push(ProEdge {
                        letter: Some(e.letter),
                        target: e.target,
                        prob: contribution,
                    }),
                }
            }
        }
        row.sort_by_key(|r| (r.letter, r.target));
        row
    }

    /// `M_pro(K)`, built for the pairs reachable from the initial pair.
    pub fn procrastination_mc(&self, bound: Bound) -> ProcrastinationMc<T> {
        let n = self.p.num_pairs();
        let mut rows: Vec<Option<Vec<ProEdge<T>>>> = vec![None; n];
        let mut unbounded = vec![false; n];
        let init = self.p.initial();
        let mut stack = vec![init];
        while let Some(x) = stack.pop() {
            if rows[x].is_some() {
                continue;
            }
            unbounded[x] = !self.classes[x].is_deciding() && self.skip_count(x, bound).is_none();
            let row = self.procrastination_row(x, bound);
            for e in &row {
                if rows[e.target].is_none() {
                    stack.push(e.target);
                }
            }
            rows[x] = Some(row);
        }
        ProcrastinationMc {
            rows,
            deciding: self.classes.iter().map(|c| c.is_deciding()).collect(),
            unbounded,
            initial: init,
        }
    }
}

/// One transition of `M_pro(K)`; `letter: None` is the `$` self-loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ProEdge<T> {
    pub letter: Option<usize>,
    pub target: usize,
    pub prob: T,
}

/// The chain of letters observed by the procrastination policy.
#[derive(Debug, Clone)]
pub struct ProcrastinationMc<T> {
    rows: Vec<Option<Vec<ProEdge<T>>>>,
    deciding: Vec<bool>,
    unbounded: Vec<bool>,
    initial: usize,
}

impl<T: Scalar> ProcrastinationMc<T> {
    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Row of `x`, or `None` for pairs never reached.
    pub fn row(&self, x: usize) -> Option<&[ProEdge<T>]> {
        self.rows[x].as_deref()
    }

    pub fn is_deciding(&self, x: usize) -> bool {
        self.deciding[x]
    }

    /// Non-deciding pair whose row is the `$` convention because both the
    /// bound and `cras` are infinite.
    pub fn is_unbounded(&self, x: usize) -> bool {
        self.unbounded[x]
    }

    pub fn num_pairs(&self) -> usize {
        self.rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::scalar::{ratio, Rational};

    fn pair(p: &ProductMc<Rational>, s: &str, q: &str) -> usize {
        p.pair_by_name(s, q).unwrap()
    }

    #[test]
    fn hidden_model_is_rejected() {
        let p = examples::two_branch();
        assert_eq!(
            NonHidden::new(&p).unwrap_err(),
            AnalysisError::NotNonHidden { letter: "a".into() }
        );
    }

    #[test]
    fn skip_once_beliefs() {
        let p = examples::skip_once();
        let nh = NonHidden::new(&p).unwrap();
        let b0 = Belief::singleton(p.initial());
        let b1 = nh.nfa().skip_n(&b0, 1);
        let b2 = nh.nfa().skip_n(&b0, 2);
        let b3 = nh.nfa().step(&b2, Observation::Letter(p.mc().letter_index("b").unwrap()));
        assert_eq!(
            b1,
            [pair(&p, "sb", "q0"), pair(&p, "sc", "f")].into_iter().collect()
        );
        assert_eq!(
            b3,
            [pair(&p, "sb", "q0"), pair(&p, "sb", "f")].into_iter().collect()
        );
        assert!(!nh.equivalence().equivalent(pair(&p, "sb", "q0"), pair(&p, "sb", "f")));
        assert!(!nh.is_settled(&b3));
        assert!(nh.is_confused(&b2));
        assert!(!nh.is_confused(&b0) && !nh.is_confused(&b1));
        assert_eq!(nh.cras(&b0), Cras::Finite(1));
        assert_eq!(nh.cras(&b1), Cras::Finite(0));
        assert_eq!(nh.cras(&b2), Cras::Finite(-1));
        assert_eq!(nh.cras(&b3), Cras::Finite(-1));
        assert_eq!(nh.cras_pair(pair(&p, "sb", "q0")), Cras::Infinite);
        assert_eq!(nh.cras_pair(pair(&p, "sa", "f")), Cras::Infinite);
    }

    #[test]
    fn accepting_pairs_with_identical_futures_are_equivalent() {
        let p = examples::skip_once();
        let nh = NonHidden::new(&p).unwrap();
        let eq = nh.equivalence();
        // both accept everything they can emit, but they emit different letters
        assert!(!eq.equivalent(pair(&p, "sa", "f"), pair(&p, "sc", "f")));
        assert!(eq.equivalent(pair(&p, "sa", "f"), pair(&p, "sa", "f")));
        assert!(eq.is_settled(&Belief::empty()));

        let p = examples::product(
            "[mc]\ninitial s\ntrans s a 1/2 t\ntrans s b 1/2 u\ntrans t c 1 t\ntrans u c 1 t\n\
             [dfa]\ninitial q0\naccepting f\ntrans q0 a f\ntrans q0 b f\ntrans q0 c q0\n",
        );
        let nh = NonHidden::new(&p).unwrap();
        let (tf, uf) = (pair(&p, "t", "f"), pair(&p, "u", "f"));
        assert!(nh.equivalence().equivalent(tf, uf));
        assert_eq!(nh.equivalence().representative(uf), tf.min(uf));
        assert_eq!(nh.equivalence().restrict(&[tf, uf].into_iter().collect()).len(), 1);
    }

    #[test]
    fn skip_once_procrastination_rows() {
        let p = examples::skip_once();
        let nh = NonHidden::new(&p).unwrap();
        let m = nh.procrastination_mc(Bound::Finite(1));
        let row = m.row(p.initial()).unwrap();
        let b = p.mc().letter_index("b").unwrap();
        let a = p.mc().letter_index("a").unwrap();
        let mut expected = vec![
            ProEdge { letter: Some(a), target: pair(&p, "sa", "f"), prob: ratio(1, 2) },
            ProEdge { letter: Some(b), target: pair(&p, "sb", "q0"), prob: ratio(1, 2) },
        ];
        expected.sort_by_key(|e| (e.letter, e.target));
        assert_eq!(row, &expected[..]);
        for x in [pair(&p, "sa", "f"), pair(&p, "sb", "q0")] {
            assert_eq!(m.row(x).unwrap(), &[ProEdge { letter: None, target: x, prob: ratio(1, 1) }]);
        }
    }

    #[test]
    fn geometric_wait_self_loop() {
        let p = examples::geometric_wait();
        let nh = NonHidden::new(&p).unwrap();
        assert_eq!(nh.cras_pair(p.initial()), Cras::Infinite);
        for k in [0u64, 1, 3] {
            let m = nh.procrastination_mc(Bound::Finite(k));
            let row = m.row(p.initial()).unwrap();
            let stay = Rational::new(1.into(), num_bigint::BigInt::from(3).pow(k as u32 + 1));
            let leave = (ratio(1, 1) - stay.clone()) / ratio(2, 1);
            let probs: Vec<Rational> = row.iter().map(|e| e.prob.clone()).collect();
            assert_eq!(probs, vec![stay, leave.clone(), leave]);
        }
    }

    #[test]
    fn refine_on_a_tiny_automaton() {
        // 0 -a-> 1 (accepting), 2 -a-> 2 (rejecting loop), 3 has no edges
        let succ = vec![vec![Some(1)], vec![None], vec![Some(2)], vec![None]];
        let acc = vec![false, true, false, false];
        let eq = EquivTable::refine(&succ, &acc);
        assert!(eq.equivalent(2, 3));
        assert!(!eq.equivalent(0, 2));
        assert_eq!(eq.representative(3), 2);
        assert_eq!(eq.num_classes(), 3);
    }
}
