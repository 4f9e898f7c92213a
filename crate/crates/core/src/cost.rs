//! Exact expected observation costs and decision probabilities.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::error::AnalysisError;
use crate::linalg::{expected_absorption_cost, hitting_probabilities, SparseChain};
use crate::model::ProductMc;
use crate::nonhidden::{Bound, NonHidden, ProcrastinationMc};
use crate::qualitative::Analyzer;
use crate::scalar::{decimal_string, fraction_string, Rational, Scalar};

/// Default `K` values for cost reports.
pub const DEFAULT_K_SWEEP: [u64; 8] = [0, 1, 2, 4, 8, 16, 32, 64];

/// Probability that observing every letter eventually yields a deciding
/// belief.
pub fn decision_probability<T: Scalar>(an: &Analyzer<'_, T>) -> Result<T, AnalysisError> {
    let g = an.belief_graph([(an.product().mc().initial(), an.initial_belief())])?;
    let target: Vec<bool> = (0..g.len()).map(|i| g.deciding(i).is_some()).collect();
    Ok(hitting_probabilities(&g.chain(), &target)?.swap_remove(0))
}

/// Expected cost of the policy that observes until the prefix is deciding
/// or very confused; `None` when it is infinite.
pub fn expected_smart_cost<T: Scalar>(an: &Analyzer<'_, T>) -> Result<Option<T>, AnalysisError> {
    let g = an.belief_graph([(an.product().mc().initial(), an.initial_belief())])?;
    let dv = an.dv_marks(&g)?;
    let terminal: Vec<Option<T>> = dv.iter().map(|&d| d.then(T::zero)).collect();
    Ok(expected_absorption_cost(&g.chain(), &terminal)?.swap_remove(0))
}

/// Expected number of observed letters until `$` in `M_pro(K)`. With
/// `K = ∞` non-deciding pairs of infinite `cras` count as one final
/// observation, which yields `c_inf`.
pub fn procrastination_cost<T: Scalar>(nh: &NonHidden<'_, T>, bound: Bound) -> Result<T, AnalysisError> {
    let m = nh.procrastination_mc(bound);
    let (chain, terminal) = pro_chain(&m);
    let cost = expected_absorption_cost(&chain, &terminal)?;
    Ok(cost[0]
        .clone()
        .expect("the procrastination policy decides almost surely"))
}

/// `E(C_pro(K))` for a finite `K`.
pub fn expected_pro_cost<T: Scalar>(nh: &NonHidden<'_, T>, k: u64) -> Result<T, AnalysisError> {
    procrastination_cost(nh, Bound::Finite(k))
}

/// The infimum of expected costs over all feasible policies.
pub fn compute_cinf<T: Scalar>(nh: &NonHidden<'_, T>) -> Result<T, AnalysisError> {
    procrastination_cost(nh, Bound::Unbounded)
}

/// Compacts the built rows of `M_pro` into a chain whose state 0 is the
/// initial pair; `$`-loops become terminal states.
fn pro_chain<T: Scalar>(m: &ProcrastinationMc<T>) -> (SparseChain<T>, Vec<Option<T>>) {
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut order = vec![m.initial()];
    index.insert(m.initial(), 0);
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        for e in m.row(x).expect("reachable rows are built") {
            if !index.contains_key(&e.target) {
                index.insert(e.target, order.len());
                order.push(e.target);
            }
        }
        i += 1;
    }
    let mut chain = Vec::with_capacity(order.len());
    let mut terminal = Vec::with_capacity(order.len());
    for &x in &order {
        if m.is_deciding(x) {
            terminal.push(Some(T::zero()));
            chain.push(Vec::new());
        } else if m.is_unbounded(x) {
            terminal.push(Some(T::one()));
            chain.push(Vec::new());
        } else {
            terminal.push(None);
            chain.push(
                m.row(x)
                    .unwrap()
                    .iter()
                    .map(|e| (index[&e.target], e.prob.clone()))
                    .collect(),
            );
        }
    }
    (chain, terminal)
}

/// Summary of all cost figures of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub decision_probability: Rational,
    /// `None` stands for an infinite expectation.
    pub expected_smart: Option<Rational>,
    /// Only available for non-hidden chains.
    pub cinf: Option<Rational>,
    pub pro: Vec<(u64, Rational)>,
}

impl CostReport {
    pub fn compute(p: &ProductMc<Rational>, ks: &[u64], cap: usize) -> Result<Self, AnalysisError> {
        let an = Analyzer::with_cap(p, cap);
        let decision_probability = decision_probability(&an)?;
        let expected_smart = expected_smart_cost(&an)?;
        let (cinf, pro) = match NonHidden::new(p) {
            Ok(nh) => {
                let pro = ks
                    .iter()
                    .map(|&k| Ok((k, expected_pro_cost(&nh, k)?)))
                    .collect::<Result<Vec<_>, AnalysisError>>()?;
                (Some(compute_cinf(&nh)?), pro)
            }
            Err(AnalysisError::NotNonHidden { .. }) => (None, Vec::new()),
            Err(e) => return Err(e),
        };
        Ok(Self {
            decision_probability,
            expected_smart,
            cinf,
            pro,
        })
    }

    /// `c_inf / E(C_smart)`, defined when both are known and the
    /// denominator is finite and nonzero.
    pub fn ratio(&self) -> Option<Rational> {
        let smart = self.expected_smart.as_ref()?;
        if num_traits::Zero::is_zero(smart) {
            return None;
        }
        Some(self.cinf.as_ref()? / smart)
    }

    fn entries(&self) -> Vec<(String, Entry)> {
        let mut out = vec![(
            "expected_smart".to_string(),
            self.expected_smart.clone().map_or(Entry::Infinite, Entry::Exact),
        )];
        if let Some(c) = &self.cinf {
            out.push(("cinf".to_string(), Entry::Exact(c.clone())));
        }
        for (k, v) in &self.pro {
            out.push((format!("pro.K{}", k), Entry::Exact(v.clone())));
        }
        out.push((
            "decision_probability".to_string(),
            Entry::Exact(self.decision_probability.clone()),
        ));
        out.push((
            "ratio".to_string(),
            self.ratio().map_or(Entry::Undefined, Entry::Exact),
        ));
        out
    }

    /// `key = num/den (decimal)` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, entry) in self.entries() {
            let value = match entry {
                Entry::Exact(r) => format!("{} ({})", fraction_string(&r), decimal_string(&r, 12)),
                Entry::Infinite => "inf".to_string(),
                Entry::Undefined => "undefined".to_string(),
            };
            let _ = writeln!(out, "{} = {}", key, value);
        }
        out
    }

    /// Flat JSON object; exact values become `{"exact": "n/d", "decimal": "…"}`,
    /// infinite ones `"inf"`, undefined ones `null`.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (key, entry) in self.entries() {
            let value = match entry {
                Entry::Exact(r) => json!({
                    "exact": fraction_string(&r),
                    "decimal": decimal_string(&r, 12),
                }),
                Entry::Infinite => json!("inf"),
                Entry::Undefined => Value::Null,
            };
            map.insert(key, value);
        }
        Value::Object(map)
    }
}

enum Entry {
    Exact(Rational),
    Infinite,
    Undefined,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::qualitative::DEFAULT_NODE_CAP;
    use crate::scalar::ratio;
    use num_bigint::BigInt;

    #[test]
    fn two_branch_costs() {
        let p = examples::two_branch();
        let an = Analyzer::new(&p);
        assert_eq!(decision_probability(&an).unwrap(), ratio(1, 2));
        assert_eq!(expected_smart_cost(&an).unwrap(), None);
    }

    #[test]
    fn skip_once_costs() {
        let p = examples::skip_once();
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        assert_eq!(decision_probability(&an).unwrap(), ratio(1, 1));
        assert_eq!(expected_smart_cost(&an).unwrap(), Some(ratio(1, 1)));
        assert_eq!(compute_cinf(&nh).unwrap(), ratio(1, 1));
        assert_eq!(expected_pro_cost(&nh, 1).unwrap(), ratio(1, 1));
    }

    #[test]
    fn geometric_wait_costs() {
        let p = examples::geometric_wait();
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        assert_eq!(expected_smart_cost(&an).unwrap(), Some(ratio(3, 2)));
        assert_eq!(compute_cinf(&nh).unwrap(), ratio(1, 1));
        assert_eq!(expected_pro_cost(&nh, 0).unwrap(), ratio(3, 2));
        assert_eq!(expected_pro_cost(&nh, 3).unwrap(), ratio(81, 80));
        for k in [5u32, 20] {
            let third = Rational::new(1.into(), BigInt::from(3).pow(k + 1));
            let expected = ratio(1, 1) / (ratio(1, 1) - third);
            assert_eq!(expected_pro_cost(&nh, k as u64).unwrap(), expected);
        }
    }

    #[test]
    fn deciding_initial_pair_costs_nothing() {
        let p = examples::product("[mc]\ninitial s\ntrans s a 1 s\n[dfa]\ninitial q\ntrans q a q\n");
        let nh = NonHidden::new(&p).unwrap();
        assert_eq!(compute_cinf(&nh).unwrap(), ratio(0, 1));
        assert_eq!(expected_pro_cost(&nh, 4).unwrap(), ratio(0, 1));
        let report = CostReport::compute(&p, &[0], DEFAULT_NODE_CAP).unwrap();
        assert_eq!(report.expected_smart, Some(ratio(0, 1)));
        assert_eq!(report.ratio(), None);
    }

    #[test]
    fn float_instantiation_agrees() {
        let p = examples::geometric_wait();
        let pf = ProductMc::compose(&p.mc().to_scalar::<f64>(), p.dfa()).unwrap();
        let nh = NonHidden::new(&pf).unwrap();
        assert!((expected_pro_cost(&nh, 0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn report_rendering() {
        let p = examples::geometric_wait();
        let report = CostReport::compute(&p, &[0, 3], DEFAULT_NODE_CAP).unwrap();
        let text = report.to_text();
        assert!(text.contains("expected_smart = 3/2 (1.50000000000)\n"));
        assert!(text.contains("cinf = 1/1 (1.00000000000)\n"));
        assert!(text.contains("pro.K3 = 81/80 (1.01250000000)\n"));
        assert!(text.contains("ratio = 2/3 (0.666666666667)\n"));
        let json = report.to_json();
        assert_eq!(json["ratio"]["exact"], "2/3");
        assert_eq!(json["pro.K0"]["exact"], "3/2");

        let hidden = CostReport::compute(&examples::two_branch(), &[0], DEFAULT_NODE_CAP).unwrap();
        assert_eq!(hidden.to_json()["expected_smart"], "inf");
        assert!(hidden.to_json()["ratio"].is_null());
        assert!(hidden.to_text().contains("decision_probability = 1/2 (0.500000000000)"));
    }
}
