//! Batch experiment: `c_inf / E(C_smart)` over many generated models.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cost::{compute_cinf, expected_smart_cost};
use crate::error::AnalysisError;
use crate::generate::{builtin_property, generate_mc, random_dfa, GenSpec};
use crate::model::ProductMc;
use crate::nonhidden::NonHidden;
use crate::qualitative::Analyzer;
use crate::scalar::{decimal_string, fraction_string, ratio, Rational, Scalar};

/// Ratios of one batch, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub ratios: Vec<Rational>,
    /// Models discarded because their initial pair was already deciding, so
    /// the ratio is undefined.
    pub skipped: usize,
}

/// One model of the batch: `(c_inf, E(C_smart))`, or `None` when the
/// initial pair already decides.
fn evaluate(
    template: &GenSpec,
    property: Option<&str>,
    seed: u64,
    cap: usize,
) -> Result<Option<(Rational, Rational)>, AnalysisError> {
    let spec = GenSpec {
        seed,
        non_hidden: true,
        ..template.clone()
    };
    let mc = generate_mc(&spec)?;
    let dfa = match property {
        Some(name) => builtin_property(name, mc.letters())?,
        None => random_dfa(mc.letters(), 4, seed),
    };
    let p = ProductMc::compose(&mc, &dfa)?;
    let an = Analyzer::with_cap(&p, cap);
    if an.pair_classes()[p.initial()].is_deciding() {
        return Ok(None);
    }
    let nh = NonHidden::new(&p)?;
    let cinf = compute_cinf(&nh)?;
    let smart = expected_smart_cost(&an)?.expect("non-hidden chains are finitary");
    Ok(Some((cinf, smart)))
}

/// Evaluates `count` models with consecutive seeds starting at
/// `template.seed`, drawing replacements for models with an undefined
/// ratio. Gives up after `10 * count` draws.
pub fn run_batch(
    template: &GenSpec,
    property: Option<&str>,
    count: usize,
    cap: usize,
) -> Result<BatchReport, AnalysisError> {
    let mut ratios = Vec::with_capacity(count);
    let mut skipped = 0;
    let mut next_seed = template.seed;
    let limit = template.seed.saturating_add(10 * count as u64);
    while ratios.len() < count {
        if next_seed >= limit {
            return Err(AnalysisError::InvalidArgument(format!(
                "only {} of {} models have a defined ratio",
                ratios.len(),
                count
            )));
        }
        let want = (count - ratios.len()) as u64;
        let seeds: Vec<u64> = (next_seed..next_seed.saturating_add(want).min(limit)).collect();
        next_seed += seeds.len() as u64;
        let results = seeds
            .par_iter()
            .map(|&s| evaluate(template, property, s, cap))
            .collect::<Result<Vec<_>, _>>()?;
        for r in results {
            match r {
                Some((cinf, smart)) => ratios.push(cinf / smart),
                None => skipped += 1,
            }
        }
    }
    Ok(BatchReport { ratios, skipped })
}

impl BatchReport {
    pub fn median(&self) -> Option<Rational> {
        let mut sorted = self.ratios.clone();
        sorted.sort();
        let n = sorted.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(sorted[n / 2].clone()),
            _ => Some((&sorted[n / 2 - 1] + &sorted[n / 2]) * ratio(1, 2)),
        }
    }

    pub fn geometric_mean(&self) -> Option<f64> {
        if self.ratios.is_empty() {
            return None;
        }
        let log_sum: f64 = self.ratios.iter().map(|r| r.approx().ln()).sum();
        Some((log_sum / self.ratios.len() as f64).exp())
    }

    pub fn all_in_unit_interval(&self) -> bool {
        self.ratios
            .iter()
            .all(|r| *r > ratio(0, 1) && *r <= ratio(1, 1))
    }

    pub fn min(&self) -> Option<&Rational> {
        self.ratios.iter().min()
    }

    pub fn max(&self) -> Option<&Rational> {
        self.ratios.iter().max()
    }

    /// One header line and one data line, in the column layout
    /// `models  Median  GAvg  min  max`.
    pub fn to_text(&self) -> String {
        let fmt = |r: Option<&Rational>| r.map_or("-".to_string(), |r| decimal_string(r, 3));
        let median = self.median();
        format!(
            "{:>8} {:>8} {:>8} {:>8} {:>8}\n{:>8} {:>8} {:>8} {:>8} {:>8}\n",
            "models",
            "Median",
            "GAvg",
            "min",
            "max",
            self.ratios.len(),
            fmt(median.as_ref()),
            self.geometric_mean().map_or("-".to_string(), |g| format!("{:.2}", g)),
            fmt(self.min()),
            fmt(self.max()),
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "models": self.ratios.len(),
            "skipped": self.skipped,
            "median": self.median().map(|m| fraction_string(&m)),
            "median_decimal": self.median().map(|m| m.approx()),
            "geometric_mean": self.geometric_mean(),
            "all_in_unit_interval": self.all_in_unit_interval(),
            "ratios": self.ratios.iter().map(fraction_string).collect::<Vec<_>>(),
        })
    }
}
