//! Random model generators, built-in properties, and flowgraph import.

use num_bigint::BigInt;
use rand::seq::index::sample;
use rand::{Rng, RngCore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{AnalysisError, ParseError};
use crate::model::{check_ident, syntax, tokenize, Dfa, Mc, ProductMc};
use crate::qualitative::{classify_pairs, PairClass};
use crate::scalar::Rational;

/// Probabilities are rounded to multiples of `2^-PRECISION`.
const PRECISION: u32 = 32;

/// Parameters of a random chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub states: usize,
    /// Ignored for non-hidden chains, which use one letter per state.
    pub letters: usize,
    /// Each state gets between 1 and `out_degree` transitions.
    pub out_degree: usize,
    /// Dirichlet concentration.
    pub alpha: f64,
    pub seed: u64,
    pub non_hidden: bool,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            states: 5,
            letters: 2,
            out_degree: 2,
            alpha: 1.0,
            seed: 0,
            non_hidden: true,
        }
    }
}

impl GenSpec {
    fn check(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::InvalidArgument(m.to_string()));
        if self.states == 0 {
            return bad("at least one state is required");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !self.non_hidden && self.letters == 0 {
            return bad("at least one letter is required");
        }
        let slots = if self.non_hidden {
            self.states
        } else {
            self.states * self.letters
        };
        if self.out_degree == 0 || self.out_degree > slots {
            return bad(&format!(
                "out-degree must lie in 1..={} for this state and letter count",
                slots
            ));
        }
        Ok(())
    }
}

/// Draws a Dirichlet(α,…,α) vector of length `n` and rounds it to exact
/// rationals with denominator `2^32`, every entry at least `2^-32`, summing
/// to one.
pub fn dirichlet_row(rng: &mut impl Rng, n: usize, alpha: f64) -> Vec<Rational> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha is positive");
    let mut x: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = x.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        x = vec![1.0; n];
    }
    let total: f64 = x.iter().sum();
    let unit = 1i64 << PRECISION;
    let mut units: Vec<i64> = x
        .iter()
        .map(|v| ((v / total) * unit as f64).round().max(1.0) as i64)
        .collect();
    let residual = unit - units.iter().sum::<i64>();
    let largest = (0..n).max_by_key(|&i| (units[i], std::cmp::Reverse(i))).unwrap_or(0);
    units[largest] += residual;
    assert!(units[largest] >= 1, "rounding residual too large");
    units
        .into_iter()
        .map(|u| Rational::new(BigInt::from(u), BigInt::from(unit)))
        .collect()
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{}{}", prefix, i)).collect()
}

/// Random chain per `spec`. States are `s0…`; a non-hidden chain uses letter
/// `a<i>` for every transition into `s<i>`.
pub fn generate_mc(spec: &GenSpec) -> Result<Mc<Rational>, AnalysisError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.states;
    let letters = if spec.non_hidden { n } else { spec.letters };
    let mut transitions = Vec::new();
    for s in 0..n {
        let degree = rng.random_range(1..=spec.out_degree);
        let slots = if spec.non_hidden { n } else { n * letters };
        let mut chosen = sample(&mut rng, slots, degree).into_vec();
        chosen.sort_unstable();
        let probs = dirichlet_row(&mut rng, degree, spec.alpha);
        for (slot, p) in chosen.into_iter().zip(probs) {
            let (letter, target) = if spec.non_hidden {
                (slot, slot)
            } else {
                (slot % letters, slot / letters)
            };
            transitions.push((s, letter, target, p));
        }
    }
    Mc::new(names("s", n), names("a", letters), 0, transitions)
        .map_err(|e| AnalysisError::InvalidArgument(e.to_string()))
}

/// Random automaton with `states` states over `letters`. The last state is
/// accepting and absorbing; with three or more states the one before it is
/// a rejecting sink, so that both outcomes stay possible.
pub fn random_dfa(letters: &[String], states: usize, seed: u64) -> Dfa {
    assert!(states >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let f = states - 1;
    let sink = (states >= 3).then_some(states - 2);
    let delta = (0..states)
        .map(|q| {
            letters
                .iter()
                .map(|_| {
                    if q == f {
                        None
                    } else if Some(q) == sink {
                        Some(q)
                    } else {
                        Some(rng.random_range(0..states))
                    }
                })
                .collect()
        })
        .collect();
    Dfa::new(names("q", states), letters.to_vec(), delta, 0, &[f]).expect("total by construction")
}

/// Whether `Pr(L)` from the initial pair is neither zero nor one.
fn is_undecided(mc: &Mc<Rational>, dfa: &Dfa) -> bool {
    let p = ProductMc::compose(mc, dfa).expect("alphabets agree by construction");
    classify_pairs(&p)[p.initial()] == PairClass::Undecided
}

/// Redraws from `draw` (fed with consecutive sub-seeds) until the property
/// is undecided at the start, giving up after 1000 draws.
fn nontrivial(seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> (Mc<Rational>, Dfa)) -> (Mc<Rational>, Dfa) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = draw(&mut rng);
    for _ in 0..1000 {
        if is_undecided(&model.0, &model.1) {
            break;
        }
        model = draw(&mut rng);
    }
    model
}

/// A random non-hidden chain with at most `max_states` states and a random
/// 2 to 4 state property that is undecided at the start.
pub fn random_non_hidden_model(max_states: usize, seed: u64) -> (Mc<Rational>, Dfa) {
    nontrivial(seed, |rng| {
        let states = rng.random_range(1..=max_states);
        let spec = GenSpec {
            states,
            letters: states,
            out_degree: rng.random_range(1..=states.min(3)),
            alpha: 1.0,
            seed: rng.next_u64(),
            non_hidden: true,
        };
        let mc = generate_mc(&spec).expect("valid spec");
        let dfa = random_dfa(mc.letters(), rng.random_range(2..=4), rng.next_u64());
        (mc, dfa)
    })
}

/// A random, possibly hidden chain and a property undecided at the start,
/// whose product has at most `max_pairs` pairs.
pub fn random_small_model(max_pairs: usize, seed: u64) -> (Mc<Rational>, Dfa) {
    nontrivial(seed, |rng| {
        let q = rng.random_range(2..=3usize.min(max_pairs).max(2));
        let states = rng.random_range(1..=(max_pairs / q).max(1));
        let letters = rng.random_range(1..=2);
        let spec = GenSpec {
            states,
            letters,
            out_degree: rng.random_range(1..=(states * letters).min(3)),
            alpha: 1.0,
            seed: rng.next_u64(),
            non_hidden: false,
        };
        let mc = generate_mc(&spec).expect("valid spec");
        let dfa = random_dfa(mc.letters(), q, rng.next_u64());
        (mc, dfa)
    })
}

/// Built-in properties over a given alphabet:
///
/// * `iterator`: `next` twice without `hasNext` in between. Letters named
///   `next`/`next_*` and `hasNext`/`hasNext_*` play those roles; all other
///   letters are neutral.
/// * `reach:a` (or `reach_letter(a)`): some `a` occurs.
/// * `parity:a,m` (or `parity-position(a,m)`): some position divisible by
///   `m` (counting from 1) carries `a`.
pub fn builtin_property(name: &str, letters: &[String]) -> Result<Dfa, AnalysisError> {
    let unknown = || AnalysisError::InvalidArgument(format!("unknown property '{}'", name));
    let args = |prefix: &str, open: &str| -> Option<String> {
        name.strip_prefix(prefix)
            .map(str::to_string)
            .or_else(|| name.strip_prefix(open)?.strip_suffix(')').map(str::to_string))
    };
    if name == "iterator" {
        return Ok(iterator_property(letters));
    }
    if let Some(a) = args("reach:", "reach_letter(") {
        return Ok(parity_property(letters, a.trim(), 1));
    }
    if let Some(rest) = args("parity:", "parity-position(") {
        let (a, m) = rest.split_once(',').ok_or_else(unknown)?;
        let m: usize = m.trim().parse().map_err(|_| unknown())?;
        if m == 0 {
            return Err(AnalysisError::InvalidArgument("period must be positive".into()));
        }
        return Ok(parity_property(letters, a.trim(), m));
    }
    Err(unknown())
}

fn with_letter(letters: &[String], a: &str) -> Vec<String> {
    let mut all = letters.to_vec();
    if !all.iter().any(|l| l == a) {
        all.push(a.to_string());
    }
    all
}

fn iterator_property(letters: &[String]) -> Dfa {
    let is = |l: &str, base: &str| l == base || l.starts_with(&format!("{}_", base));
    let (ok, armed, fail) = (0, 1, 2);
    let row = |q: usize| -> Vec<Option<usize>> {
        letters
            .iter()
            .map(|l| {
                Some(if is(l, "next") {
                    if q == ok { armed } else { fail }
                } else if is(l, "hasNext") {
                    ok
                } else {
                    q
                })
            })
            .collect()
    };
    let delta = vec![row(ok), row(armed), vec![None; letters.len()]];
    Dfa::new(
        vec!["ok".into(), "armed".into(), "fail".into()],
        letters.to_vec(),
        delta,
        ok,
        &[fail],
    )
    .expect("total by construction")
}

fn parity_property(letters: &[String], a: &str, m: usize) -> Dfa {
    let letters = with_letter(letters, a);
    let f = m;
    let delta = (0..=m)
        .map(|q| {
            letters
                .iter()
                .map(|l| {
                    if q == f {
                        None
                    } else if q == m - 1 {
                        Some(if l == a { f } else { 0 })
                    } else {
                        Some(q + 1)
                    }
                })
                .collect()
        })
        .collect();
    let mut states = names("q", m);
    states.push("f".into());
    Dfa::new(states, letters, delta, 0, &[f]).expect("total by construction")
}

/// A control-flow graph whose edges carry event names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowgraphSpec {
    pub vertices: Vec<String>,
    pub entry: usize,
    /// `(source, event, target)`.
    pub edges: Vec<(usize, String, usize)>,
}

impl FlowgraphSpec {
    /// Parses `[flowgraph]`, `entry <v>`, `edge <v> <event> <w>` lines.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut vertices: Vec<String> = Vec::new();
        let mut intern = |v: &str| -> usize {
            match vertices.iter().position(|x| x == v) {
                Some(i) => i,
                None => {
                    vertices.push(v.to_string());
                    vertices.len() - 1
                }
            }
        };
        let mut entry = None;
        let mut edges = Vec::new();
        let mut in_section = false;
        for (line, tokens) in tokenize(text) {
            match tokens.as_slice() {
                ["[flowgraph]"] => in_section = true,
                _ if !in_section => return Err(syntax(line, "expected [flowgraph]")),
                ["entry", v] => {
                    check_ident(line, v)?;
                    entry = Some(intern(v));
                }
                ["edge", v, event, w] => {
                    for t in [v, event, w] {
                        check_ident(line, t)?;
                    }
                    let (v, w) = (intern(v), intern(w));
                    edges.push((v, event.to_string(), w));
                }
                _ => return Err(syntax(line, "unrecognized flowgraph line")),
            }
        }
        if !in_section {
            return Err(ParseError::MissingSection("flowgraph"));
        }
        let entry = entry.ok_or(ParseError::MissingSection("entry"))?;
        Ok(Self {
            vertices,
            entry,
            edges,
        })
    }

    /// Attaches Dirichlet probabilities to the out-edges of every vertex.
    /// Vertices without out-edges loop on a fresh `quiescent` letter.
    pub fn to_mc(&self, alpha: f64, seed: u64) -> Result<Mc<Rational>, AnalysisError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(AnalysisError::InvalidArgument("alpha must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut letters: Vec<String> = Vec::new();
        for (_, e, _) in &self.edges {
            if !letters.contains(e) {
                letters.push(e.clone());
            }
        }
        let mut quiescent = "quiescent".to_string();
        while letters.contains(&quiescent) {
            quiescent.push('_');
        }
        let mut quiescent_index = None;
        let mut transitions = Vec::new();
        for v in 0..self.vertices.len() {
            let out: Vec<&(usize, String, usize)> = self.edges.iter().filter(|e| e.0 == v).collect();
            if out.is_empty() {
                let q = *quiescent_index.get_or_insert_with(|| {
                    letters.push(quiescent.clone());
                    letters.len() - 1
                });
                transitions.push((v, q, v, Rational::from_integer(1.into())));
                continue;
            }
            let probs = dirichlet_row(&mut rng, out.len(), alpha);
            for ((_, e, w), p) in out.into_iter().zip(probs) {
                let a = letters.iter().position(|l| l == e).expect("interned above");
                transitions.push((v, a, *w, p));
            }
        }
        Mc::new(self.vertices.clone(), letters, self.entry, transitions)
            .map_err(|e| AnalysisError::InvalidArgument(e.to_string()))
    }
}
