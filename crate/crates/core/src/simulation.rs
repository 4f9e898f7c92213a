//! Monte-Carlo execution of observation policies on sampled runs.
//!
//! Every trial draws its own run from a ChaCha stream derived from the master
//! seed and the trial index, so trial `i` can be replayed alone. Letters are
//! chosen by comparing a uniform 64-bit integer against exact cumulative
//! thresholds, which keeps sampling free of floating-point bias.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::AnalysisError;
use crate::model::ProductMc;
use crate::monitor::{Action, Monitor};
use crate::qualitative::{Analyzer, BeliefGraph, PairClass, Polarity};
use crate::scalar::Scalar;

/// Observation policy under test.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Observe everything until the prefix is deciding.
    SeeAll,
    /// Observe everything until the prefix is deciding or very confused.
    Smart,
    /// Follow a compiled monitor.
    Monitor { name: String, monitor: Monitor },
}

impl Policy {
    pub fn name(&self) -> &str {
        match self {
            Policy::SeeAll => "seeall",
            Policy::Smart => "smart",
            Policy::Monitor { name, .. } => name,
        }
    }
}

/// How a single policy run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Verdict(bool),
    /// The smart policy stopped on a very confused prefix.
    GaveUp,
    /// The run hit the step limit first.
    Truncated,
}

/// One policy on one run: observed letters, outcome, and the number of
/// letters emitted when it stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyRun {
    pub cost: u64,
    pub outcome: Outcome,
    pub stop: usize,
}

/// Exact inverse-CDF sampler for the product chain.
#[derive(Debug, Clone)]
pub struct Sampler {
    /// Per pair: `(cumulative threshold, letter, target)`.
    table: Vec<Vec<(u128, usize, usize)>>,
}

impl Sampler {
    pub fn new<T: Scalar>(p: &ProductMc<T>) -> Self {
        let table = (0..p.num_pairs())
            .map(|x| {
                let mut cum = T::zero();
                p.edges(x)
                    .iter()
                    .map(|e| {
                        cum = cum.clone() + e.prob.clone();
                        (cum.dyadic_ceil(), e.letter, e.target)
                    })
                    .collect()
            })
            .collect();
        Self { table }
    }

    /// Picks the first transition whose cumulative probability exceeds
    /// `draw / 2^64`.
    pub fn step(&self, pair: usize, draw: u64) -> (usize, usize) {
        let row = &self.table[pair];
        let i = row.partition_point(|(t, _, _)| *t <= draw as u128);
        let (_, a, y) = row[i.min(row.len() - 1)];
        (a, y)
    }
}

/// A lazily extended sampled run: `pairs[i]` is the hidden product pair
/// after `letters[..i]`.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub letters: Vec<usize>,
    pub pairs: Vec<usize>,
    max_steps: usize,
    rng: ChaCha8Rng,
}

impl RunTrace {
    pub fn new(initial: usize, seed: u64, stream: u64, max_steps: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            letters: Vec::new(),
            pairs: vec![initial],
            max_steps,
            rng,
        }
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// The `i`-th letter, sampling further as needed; `None` past the limit.
    pub fn letter(&mut self, sampler: &Sampler, i: usize) -> Option<usize> {
        if i >= self.max_steps {
            return None;
        }
        while self.letters.len() <= i {
            let x = *self.pairs.last().expect("trace has an initial pair");
            let (a, y) = sampler.step(x, self.rng.next_u64());
            self.letters.push(a);
            self.pairs.push(y);
        }
        Some(self.letters[i])
    }
}

/// Samples a full run of `max_steps` letters.
pub fn sample_run<T: Scalar>(p: &ProductMc<T>, seed: u64, max_steps: usize) -> RunTrace {
    let sampler = Sampler::new(p);
    let mut trace = RunTrace::new(p.initial(), seed, 0, max_steps);
    if max_steps > 0 {
        trace.letter(&sampler, max_steps - 1);
    }
    trace
}

/// Everything needed to run policies on one product.
pub struct Simulator<'a, T> {
    p: &'a ProductMc<T>,
    sampler: Sampler,
    graph: BeliefGraph<T>,
    dv: Vec<bool>,
    classes: Vec<PairClass>,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(an: &Analyzer<'a, T>) -> Result<Self, AnalysisError> {
        let p = an.product();
        let graph = an.belief_graph([(p.mc().initial(), an.initial_belief())])?;
        let dv = an.dv_marks(&graph)?;
        Ok(Self {
            p,
            sampler: Sampler::new(p),
            graph,
            dv,
            classes: an.pair_classes().to_vec(),
        })
    }

    pub fn trace(&self, seed: u64, trial: u64, max_steps: usize) -> RunTrace {
        RunTrace::new(self.p.initial(), seed, trial, max_steps)
    }

    /// Belief-graph node after the first `len` letters of the trace.
    fn node_after(&self, trace: &mut RunTrace, len: usize) -> usize {
        let mut node = 0;
        for i in 0..len {
            let a = trace.letter(&self.sampler, i).expect("prefix already sampled");
            let s = self.p.split(trace.pairs[i + 1]).0;
            node = self
                .graph
                .edges(node)
                .iter()
                .find(|(l, j, _)| *l == a && self.graph.node(*j).0 == s)
                .map(|(_, j, _)| *j)
                .expect("sampled letter follows a chain transition");
        }
        node
    }

    pub fn run_policy(&self, trace: &mut RunTrace, policy: &Policy) -> Result<PolicyRun, AnalysisError> {
        match policy {
            Policy::SeeAll | Policy::Smart => {
                let smart = matches!(policy, Policy::Smart);
                let mut node = 0;
                let mut i = 0;
                loop {
                    if let Some(pol) = self.graph.deciding(node) {
                        let outcome = Outcome::Verdict(pol == Polarity::Positive);
                        return Ok(PolicyRun { cost: i as u64, outcome, stop: i });
                    }
                    if smart && self.dv[node] {
                        return Ok(PolicyRun { cost: i as u64, outcome: Outcome::GaveUp, stop: i });
                    }
                    let Some(a) = trace.letter(&self.sampler, i) else {
                        return Ok(PolicyRun { cost: i as u64, outcome: Outcome::Truncated, stop: i });
                    };
                    let s = self.p.split(trace.pairs[i + 1]).0;
                    node = self
                        .graph
                        .edges(node)
                        .iter()
                        .find(|(l, j, _)| *l == a && self.graph.node(*j).0 == s)
                        .map(|(_, j, _)| *j)
                        .expect("sampled letter follows a chain transition");
                    i += 1;
                }
            }
            Policy::Monitor { monitor, .. } => {
                let mut node = monitor.start();
                let mut pos = 0usize;
                let mut cost = 0u64;
                loop {
                    match monitor.action(node) {
                        Action::Verdict(v) => {
                            return Ok(PolicyRun { cost, outcome: Outcome::Verdict(*v), stop: pos });
                        }
                        Action::Observe { skip, .. } => {
                            let at = pos.saturating_add(usize::try_from(*skip).unwrap_or(usize::MAX));
                            let Some(a) = trace.letter(&self.sampler, at) else {
                                let stop = at.min(trace.max_steps());
                                return Ok(PolicyRun { cost, outcome: Outcome::Truncated, stop });
                            };
                            pos = at + 1;
                            cost += 1;
                            node = monitor.next(node, a).ok_or_else(|| {
                                AnalysisError::MonitorMismatch(format!(
                                    "node {} has no edge for letter {}",
                                    node,
                                    self.p.mc().letter_name(a)
                                ))
                            })?;
                        }
                    }
                }
            }
        }
    }

    /// A verdict is correct when the hidden pair at the stop is compatible
    /// with it and the fully observed prefix decides the same way.
    pub fn verdict_is_correct(&self, trace: &mut RunTrace, run: &PolicyRun) -> bool {
        let Outcome::Verdict(v) = run.outcome else {
            return true;
        };
        let hidden = self.classes[trace.pairs[run.stop]];
        let node = self.node_after(trace, run.stop);
        let full = self.graph.deciding(node);
        if v {
            hidden != PairClass::NegativelyDeciding && full == Some(Polarity::Positive)
        } else {
            hidden != PairClass::PositivelyDeciding && full == Some(Polarity::Negative)
        }
    }

    /// Runs every policy on `trials` independent runs.
    pub fn simulate(
        &self,
        policies: &[Policy],
        trials: u64,
        seed: u64,
        max_steps: usize,
    ) -> Result<SimReport, AnalysisError> {
        let totals = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut trace = self.trace(seed, t, max_steps);
                policies
                    .iter()
                    .map(|pol| {
                        let run = self.run_policy(&mut trace, pol)?;
                        let correct = self.verdict_is_correct(&mut trace, &run);
                        Ok(Tally::single(&run, correct))
                    })
                    .collect::<Result<Vec<Tally>, AnalysisError>>()
            })
            .try_reduce(
                || vec![Tally::default(); policies.len()],
                |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
            )?;
        Ok(SimReport {
            trials,
            seed,
            policies: policies
                .iter()
                .zip(totals)
                .map(|(p, t)| t.summary(p.name()))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    runs: u64,
    cost_sum: u128,
    cost_sq_sum: u128,
    yes: u64,
    no: u64,
    gave_up: u64,
    truncated: u64,
    incorrect: u64,
}

impl Tally {
    fn single(run: &PolicyRun, correct: bool) -> Self {
        let mut t = Tally {
            runs: 1,
            incorrect: u64::from(!correct),
            ..Tally::default()
        };
        match run.outcome {
            Outcome::Verdict(true) => t.yes = 1,
            Outcome::Verdict(false) => t.no = 1,
            Outcome::GaveUp => t.gave_up = 1,
            Outcome::Truncated => t.truncated = 1,
        }
        if run.outcome != Outcome::Truncated {
            t.cost_sum = run.cost as u128;
            t.cost_sq_sum = (run.cost as u128) * (run.cost as u128);
        }
        t
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            runs: self.runs + o.runs,
            cost_sum: self.cost_sum + o.cost_sum,
            cost_sq_sum: self.cost_sq_sum + o.cost_sq_sum,
            yes: self.yes + o.yes,
            no: self.no + o.no,
            gave_up: self.gave_up + o.gave_up,
            truncated: self.truncated + o.truncated,
            incorrect: self.incorrect + o.incorrect,
        }
    }

    fn summary(self, name: &str) -> PolicyStats {
        let n = (self.runs - self.truncated) as u128;
        let (mean, stddev) = if n == 0 {
            (None, None)
        } else {
            let mean = self.cost_sum as f64 / n as f64;
            let sd = if n > 1 {
                let num = n * self.cost_sq_sum - self.cost_sum * self.cost_sum;
                Some(((num as f64) / ((n * (n - 1)) as f64)).sqrt())
            } else {
                None
            };
            (Some(mean), sd)
        };
        PolicyStats {
            name: name.to_string(),
            mean_cost: mean,
            stddev,
            decided: self.yes + self.no,
            undecided: self.gave_up + self.truncated,
            verdicts: Verdicts {
                yes: self.yes,
                no: self.no,
            },
            incorrect: self.incorrect,
            gave_up: self.gave_up,
            truncated: self.truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub yes: u64,
    pub no: u64,
}

/// Aggregated results of one policy. The mean and standard deviation are
/// taken over runs that were not truncated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyStats {
    pub name: String,
    pub mean_cost: Option<f64>,
    pub stddev: Option<f64>,
    pub undecided: u64,
    pub decided: u64,
    pub verdicts: Verdicts,
    pub incorrect: u64,
    pub gave_up: u64,
    pub truncated: u64,
}

impl PolicyStats {
    /// Standard error of the mean cost.
    pub fn standard_error(&self) -> Option<f64> {
        let n = self.decided + self.gave_up;
        Some(self.stddev? / (n as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: u64,
    pub seed: u64,
    pub policies: Vec<PolicyStats>,
}
