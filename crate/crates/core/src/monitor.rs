//! Procrastination monitors: compilation, execution tables, and the
//! line-oriented monitor file.
//!
//! ```text
//! [monitor]
//! start n0
//! node n0 pair sa,q0 skip 1
//! edge n0 b n1
//! edge n0 a n2
//! node n1 pair sb,q0 skip 0
//! verdict n1 no
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{AnalysisError, ParseError};
use crate::model::{check_ident, syntax, tokenize, Belief, Observation, ProductMc};
use crate::nonhidden::{Bound, NonHidden};
use crate::qualitative::PairClass;
use crate::scalar::Scalar;

/// What a monitor node does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action<L> {
    /// Stop and report whether the property holds.
    Verdict(bool),
    /// Skip `skip` letters, observe the next one, and move along `edges`.
    Observe { skip: u64, edges: Vec<(L, usize)> },
}

/// A monitor over names, as stored in a monitor file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorTable {
    pub start: usize,
    pub nodes: Vec<TableNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableNode {
    pub id: String,
    pub state: String,
    pub dfa_state: String,
    pub action: Action<String>,
}

/// A monitor resolved against a product: pairs and letters are indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monitor {
    start: usize,
    pairs: Vec<usize>,
    actions: Vec<Action<usize>>,
    /// `next[node][letter]`, for observing nodes.
    next: Vec<Vec<Option<usize>>>,
}

impl Monitor {
    fn from_parts(start: usize, pairs: Vec<usize>, actions: Vec<Action<usize>>, letters: usize) -> Self {
        let next = actions
            .iter()
            .map(|a| {
                let mut row = vec![None; letters];
                if let Action::Observe { edges, .. } = a {
                    for &(l, j) in edges {
                        row[l] = Some(j);
                    }
                }
                row
            })
            .collect();
        Self {
            start,
            pairs,
            actions,
            next,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, node: usize) -> usize {
        self.pairs[node]
    }

    pub fn action(&self, node: usize) -> &Action<usize> {
        &self.actions[node]
    }

    /// Successor of an observing node on `letter`.
    pub fn next(&self, node: usize, letter: usize) -> Option<usize> {
        self.next[node][letter]
    }

    pub fn to_table<T: Scalar>(&self, p: &ProductMc<T>) -> MonitorTable {
        let nodes = self
            .pairs
            .iter()
            .zip(&self.actions)
            .enumerate()
            .map(|(i, (&x, action))| {
                let (s, q) = p.split(x);
                TableNode {
                    id: format!("n{}", i),
                    state: p.mc().state_name(s).to_string(),
                    dfa_state: p.dfa().state_name(q).to_string(),
                    action: match action {
                        Action::Verdict(v) => Action::Verdict(*v),
                        Action::Observe { skip, edges } => Action::Observe {
                            skip: *skip,
                            edges: edges
                                .iter()
                                .map(|&(a, j)| (p.mc().letter_name(a).to_string(), j))
                                .collect(),
                        },
                    },
                }
            })
            .collect();
        MonitorTable {
            start: self.start,
            nodes,
        }
    }
}

/// Compiles the procrastination monitor `ρ_pro(K)`.
///
/// Nodes are language-equivalence representatives reachable from the
/// initial pair. With `K = ∞` a non-deciding node of infinite `cras` has no
/// finite skip count and compilation fails.
pub fn compile_monitor<T: Scalar>(nh: &NonHidden<'_, T>, bound: Bound) -> Result<Monitor, AnalysisError> {
    let p = nh.product();
    let eq = nh.equivalence();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut actions: Vec<Action<usize>> = Vec::new();
    let start = eq.representative(p.initial());
    index.insert(start, 0);
    pairs.push(start);
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i];
        let action = match nh.pair_classes()[x] {
            PairClass::PositivelyDeciding => Action::Verdict(true),
            PairClass::NegativelyDeciding => Action::Verdict(false),
            PairClass::Undecided => {
                let skip = nh.skip_count(x, bound).ok_or_else(|| {
                    let (s, q) = p.split(x);
                    AnalysisError::UnboundedSkip {
                        state: p.mc().state_name(s).to_string(),
                        dfa_state: p.dfa().state_name(q).to_string(),
                    }
                })?;
                let after = nh.nfa().skip_n(&Belief::singleton(x), skip);
                let mut edges = Vec::new();
                for a in 0..p.num_letters() {
                    let b = nh.nfa().step(&after, Observation::Letter(a));
                    if b.is_empty() {
                        continue;
                    }
                    let r = eq.restrict(&b);
                    assert_eq!(r.len(), 1, "observed belief is not settled");
                    let y = r.pairs()[0];
                    let j = *index.entry(y).or_insert_with(|| {
                        pairs.push(y);
                        pairs.len() - 1
                    });
                    edges.push((a, j));
                }
                Action::Observe { skip, edges }
            }
        };
        actions.push(action);
        i += 1;
    }
    Ok(Monitor::from_parts(0, pairs, actions, p.num_letters()))
}

impl MonitorTable {
    /// Resolves names against a product.
    pub fn resolve<T: Scalar>(&self, p: &ProductMc<T>) -> Result<Monitor, AnalysisError> {
        let mismatch = |what: String| AnalysisError::MonitorMismatch(what);
        let mut pairs = Vec::with_capacity(self.nodes.len());
        let mut actions = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let x = p
                .pair_by_name(&node.state, &node.dfa_state)
                .ok_or_else(|| mismatch(format!("unknown pair {},{}", node.state, node.dfa_state)))?;
            pairs.push(x);
            actions.push(match &node.action {
                Action::Verdict(v) => Action::Verdict(*v),
                Action::Observe { skip, edges } => Action::Observe {
                    skip: *skip,
                    edges: edges
                        .iter()
                        .map(|(l, j)| {
                            p.mc()
                                .letter_index(l)
                                .map(|a| (a, *j))
                                .ok_or_else(|| mismatch(format!("unknown letter {}", l)))
                        })
                        .collect::<Result<_, _>>()?,
                },
            });
        }
        Ok(Monitor::from_parts(self.start, pairs, actions, p.num_letters()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[monitor]\n");
        let _ = writeln!(out, "start {}", self.nodes[self.start].id);
        for node in &self.nodes {
            let skip = match &node.action {
                Action::Observe { skip, .. } => *skip,
                Action::Verdict(_) => 0,
            };
            let _ = writeln!(
                out,
                "node {} pair {},{} skip {}",
                node.id, node.state, node.dfa_state, skip
            );
            match &node.action {
                Action::Verdict(v) => {
                    let _ = writeln!(out, "verdict {} {}", node.id, if *v { "yes" } else { "no" });
                }
                Action::Observe { edges, .. } => {
                    for (l, j) in edges {
                        let _ = writeln!(out, "edge {} {} {}", node.id, l, self.nodes[*j].id);
                    }
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        struct Raw {
            id: String,
            state: String,
            dfa_state: String,
            skip: u64,
            verdict: Option<bool>,
            edges: Vec<(String, String, usize)>,
        }
        let mut raw: Vec<Raw> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut start: Option<(String, usize)> = None;
        let mut in_section = false;
        let find = |ids: &HashMap<String, usize>, line: usize, id: &str| {
            ids.get(id).copied().ok_or_else(|| ParseError::UnknownReference {
                line,
                kind: "node",
                name: id.to_string(),
            })
        };
        for (line, tokens) in tokenize(text) {
            match tokens.as_slice() {
                ["[monitor]"] => in_section = true,
                _ if !in_section => return Err(syntax(line, "expected [monitor]")),
                ["start", id] => {
                    check_ident(line, id)?;
                    start = Some((id.to_string(), line));
                }
                ["node", id, "pair", pair, "skip", k] => {
                    check_ident(line, id)?;
                    if ids.contains_key(*id) {
                        return Err(syntax(line, format!("duplicate node '{}'", id)));
                    }
                    let (s, q) = pair
                        .split_once(',')
                        .ok_or_else(|| syntax(line, format!("invalid pair '{}'", pair)))?;
                    check_ident(line, s)?;
                    check_ident(line, q)?;
                    let skip = k
                        .parse()
                        .map_err(|_| syntax(line, format!("invalid skip count '{}'", k)))?;
                    ids.insert(id.to_string(), raw.len());
                    raw.push(Raw {
                        id: id.to_string(),
                        state: s.to_string(),
                        dfa_state: q.to_string(),
                        skip,
                        verdict: None,
                        edges: Vec::new(),
                    });
                }
                ["edge", from, letter, to] => {
                    check_ident(line, letter)?;
                    let i = find(&ids, line, from)?;
                    if raw[i].verdict.is_some() {
                        return Err(syntax(line, format!("verdict node '{}' has an edge", from)));
                    }
                    raw[i].edges.push((letter.to_string(), to.to_string(), line));
                }
                ["verdict", id, v] => {
                    let i = find(&ids, line, id)?;
                    let v = match *v {
                        "yes" => true,
                        "no" => false,
                        _ => return Err(syntax(line, format!("invalid verdict '{}'", v))),
                    };
                    if !raw[i].edges.is_empty() || raw[i].verdict.is_some() {
                        return Err(syntax(line, format!("node '{}' cannot take a verdict", id)));
                    }
                    raw[i].verdict = Some(v);
                }
                _ => return Err(syntax(line, "unrecognized monitor line")),
            }
        }
        if !in_section {
            return Err(ParseError::MissingSection("monitor"));
        }
        let (start_id, start_line) = start.ok_or(ParseError::MissingSection("start"))?;
        let start = find(&ids, start_line, &start_id)?;
        let mut nodes = Vec::with_capacity(raw.len());
        for r in &raw {
            let action = match r.verdict {
                Some(v) => Action::Verdict(v),
                None => Action::Observe {
                    skip: r.skip,
                    edges: r
                        .edges
                        .iter()
                        .map(|(l, to, line)| Ok((l.clone(), find(&ids, *line, to)?)))
                        .collect::<Result<_, ParseError>>()?,
                },
            };
            nodes.push(TableNode {
                id: r.id.clone(),
                state: r.state.clone(),
                dfa_state: r.dfa_state.clone(),
                action,
            });
        }
        Ok(Self { start, nodes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn skip_once_monitor() {
        let p = examples::skip_once();
        let nh = NonHidden::new(&p).unwrap();
        for k in [1, 5] {
            let m = compile_monitor(&nh, Bound::Finite(k)).unwrap();
            let start = m.start();
            assert_eq!(m.pair(start), p.initial());
            assert!(matches!(m.action(start), Action::Observe { skip: 1, .. }));
            let b = p.mc().letter_index("b").unwrap();
            let a = p.mc().letter_index("a").unwrap();
            let c = p.mc().letter_index("c").unwrap();
            assert_eq!(m.action(m.next(start, b).unwrap()), &Action::Verdict(false));
            assert_eq!(m.action(m.next(start, a).unwrap()), &Action::Verdict(true));
            assert_eq!(m.next(start, c), None);
        }
    }

    #[test]
    fn geometric_wait_monitor_without_skips() {
        let p = examples::geometric_wait();
        let nh = NonHidden::new(&p).unwrap();
        let m = compile_monitor(&nh, Bound::Finite(0)).unwrap();
        let letter = |l: &str| p.mc().letter_index(l).unwrap();
        let s = m.start();
        assert!(matches!(m.action(s), Action::Observe { skip: 0, .. }));
        assert_eq!(m.next(s, letter("a")), Some(s));
        assert_eq!(m.action(m.next(s, letter("b")).unwrap()), &Action::Verdict(false));
        assert_eq!(m.action(m.next(s, letter("c")).unwrap()), &Action::Verdict(true));
        assert_eq!(
            compile_monitor(&nh, Bound::Unbounded).unwrap_err(),
            AnalysisError::UnboundedSkip {
                state: "sa".into(),
                dfa_state: "q0".into()
            }
        );
    }

    #[test]
    fn deciding_start_is_a_single_verdict() {
        let p = examples::product("[mc]\ninitial s\ntrans s a 1 s\n[dfa]\ninitial q\naccepting q\n");
        let nh = NonHidden::new(&p).unwrap();
        let m = compile_monitor(&nh, Bound::Unbounded).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.action(0), &Action::Verdict(true));
    }

    #[test]
    fn monitor_file_round_trip() {
        let p = examples::skip_once();
        let nh = NonHidden::new(&p).unwrap();
        let m = compile_monitor(&nh, Bound::Finite(3)).unwrap();
        let table = m.to_table(&p);
        let text = table.to_text();
        let parsed = MonitorTable::parse(&text).unwrap();
        assert_eq!(parsed, table);
        assert_eq!(parsed.to_text(), text);
        assert_eq!(parsed.resolve(&p).unwrap(), m);
    }

    #[test]
    fn monitor_parse_errors() {
        assert_eq!(
            MonitorTable::parse("[monitor]\nstart n0\nedge n0 a n1\n").unwrap_err(),
            ParseError::UnknownReference {
                line: 3,
                kind: "node",
                name: "n0".into()
            }
        );
        assert!(matches!(
            MonitorTable::parse("[monitor]\nnode n0 pair s,q skip x\n").unwrap_err(),
            ParseError::Syntax { line: 2, .. }
        ));
        assert_eq!(
            MonitorTable::parse("").unwrap_err(),
            ParseError::MissingSection("monitor")
        );
    }
}
