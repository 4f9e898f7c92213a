use std::collections::BTreeSet;

use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::sample::subsequence;

use selmon::cost::{compute_cinf, decision_probability, expected_pro_cost, expected_smart_cost, CostReport};
use selmon::generate::{dirichlet_row, generate_mc, random_dfa, random_non_hidden_model, random_small_model, GenSpec};
use selmon::monitor::{compile_monitor, MonitorTable};
use selmon::nonhidden::{Bound, Cras, NonHidden};
use selmon::qualitative::{Analyzer, PairClass};
use selmon::simulation::{Outcome, Policy, Simulator};
use selmon::{load_model, write_model, Belief, Mc, Observation, ProductMc, Rational};

fn small(seed: u64) -> ProductMc {
    let (mc, dfa) = random_small_model(6, seed);
    ProductMc::compose(&mc, &dfa).unwrap()
}

fn non_hidden(max_states: usize, seed: u64) -> ProductMc {
    let (mc, dfa) = random_non_hidden_model(max_states, seed);
    ProductMc::compose(&mc, &dfa).unwrap()
}

fn observations(p: &ProductMc) -> Vec<Observation> {
    (0..p.num_letters())
        .map(Observation::Letter)
        .chain([Observation::Skip])
        .collect()
}

/// Beliefs reachable from `{(s0,q0)}` under letters and skips.
fn reachable_beliefs(p: &ProductMc, an: &Analyzer<'_, Rational>) -> Vec<Belief> {
    let obs = observations(p);
    let mut seen = BTreeSet::from([an.initial_belief()]);
    let mut stack = vec![an.initial_belief()];
    while let Some(b) = stack.pop() {
        for &o in &obs {
            let n = an.nfa().step(&b, o);
            if seen.insert(n.clone()) {
                stack.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

/// Probability of emitting `word` from the initial state, computed on the
/// chain alone.
fn word_mass_mc(mc: &Mc, word: &[usize]) -> Rational {
    let mut dist = vec![Rational::zero(); mc.num_states()];
    dist[mc.initial()] = Rational::one();
    for &a in word {
        let mut next = vec![Rational::zero(); mc.num_states()];
        for (s, w) in dist.iter().enumerate() {
            for t in 0..mc.num_states() {
                next[t] += w * mc.prob(a, s, t);
            }
        }
        dist = next;
    }
    dist.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

fn word_mass_product(p: &ProductMc, word: &[usize]) -> Rational {
    let mut dist = vec![Rational::zero(); p.num_pairs()];
    dist[p.initial()] = Rational::one();
    for &a in word {
        let mut next = vec![Rational::zero(); p.num_pairs()];
        for (x, w) in dist.iter().enumerate() {
            for e in p.edges(x).iter().filter(|e| e.letter == a) {
                next[e.target] += w * &e.prob;
            }
        }
        dist = next;
    }
    dist.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

/// The same model file with its transition lines in another order, which
/// changes the interned state and letter indices.
fn reorder(text: &str, order: &[usize]) -> String {
    let (mc_part, dfa_part) = text.split_once("[dfa]\n").unwrap();
    let shuffle = |part: &str, head: usize| {
        let lines: Vec<&str> = part.lines().collect();
        let (h, body) = lines.split_at(head);
        let mut body: Vec<&str> = body.to_vec();
        let n = body.len();
        for (i, &j) in order.iter().enumerate() {
            if n > 1 {
                body.swap(i % n, j % n);
            }
        }
        let mut out: Vec<&str> = h.to_vec();
        out.extend(body);
        out.join("\n") + "\n"
    };
    format!("{}[dfa]\n{}", shuffle(mc_part, 2), shuffle(dfa_part, 2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loaded_rows_sum_to_one(seed in any::<u64>(), states in 1usize..6, letters in 1usize..3) {
        let spec = GenSpec { states, letters, out_degree: 1, seed, non_hidden: false, ..GenSpec::default() };
        let mc = generate_mc(&spec).unwrap();
        let dfa = random_dfa(mc.letters(), 2, seed);
        let (mc, _) = load_model(&write_model(&mc, &dfa)).unwrap();
        for s in 0..mc.num_states() {
            let sum = mc.edges(s).iter().fold(Rational::zero(), |acc, e| acc + &e.prob);
            prop_assert_eq!(sum, Rational::one());
        }
    }

    #[test]
    fn dirichlet_rows_are_exact(seed in any::<u64>(), n in 1usize..8, alpha in 0.05f64..50.0) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let row = dirichlet_row(&mut rng, n, alpha);
        prop_assert_eq!(row.len(), n);
        prop_assert!(row.iter().all(|p| *p > Rational::zero()));
        prop_assert_eq!(row.iter().fold(Rational::zero(), |a, x| a + x), Rational::one());
    }

    #[test]
    fn skip_step_is_union_of_letter_steps(seed in 0u64..10_000, pick in subsequence((0..6usize).collect::<Vec<_>>(), 0..=6)) {
        let p = small(seed);
        let an = Analyzer::new(&p);
        let b: Belief = pick.into_iter().filter(|&x| x < p.num_pairs()).collect();
        let skip = an.nfa().step(&b, Observation::Skip);
        let union: Belief = (0..p.num_letters())
            .flat_map(|a| an.nfa().step(&b, Observation::Letter(a)).pairs().to_vec())
            .collect();
        prop_assert_eq!(skip, union);
    }

    #[test]
    fn belief_step_is_monotone(
        seed in 0u64..10_000,
        small_set in subsequence((0..6usize).collect::<Vec<_>>(), 0..=6),
        extra in subsequence((0..6usize).collect::<Vec<_>>(), 0..=6),
    ) {
        let p = small(seed);
        let an = Analyzer::new(&p);
        let b: Belief = small_set.iter().copied().filter(|&x| x < p.num_pairs()).collect();
        let bigger: Belief = small_set.into_iter().chain(extra).filter(|&x| x < p.num_pairs()).collect();
        for o in observations(&p) {
            prop_assert!(an.nfa().step(&b, o).is_subset(&an.nfa().step(&bigger, o)));
        }
    }

    #[test]
    fn product_preserves_word_probabilities(seed in 0u64..10_000, word in proptest::collection::vec(0usize..2, 0..=6)) {
        let (mc, dfa) = random_small_model(8, seed);
        let p = ProductMc::compose(&mc, &dfa).unwrap();
        let word: Vec<usize> = word.into_iter().filter(|&a| a < mc.num_letters()).collect();
        prop_assert_eq!(word_mass_mc(&mc, &word), word_mass_product(&p, &word));
    }

    #[test]
    fn belief_predicates_are_consistent(seed in 0u64..10_000) {
        let p = small(seed);
        let an = Analyzer::new(&p);
        for b in reachable_beliefs(&p, &an) {
            let c = an.classify_belief(&b).unwrap();
            if !b.is_empty() && c.deciding() {
                prop_assert!(!c.confused, "deciding belief {} is confused", b);
            }
            if !b.is_empty() && c.very_confused {
                prop_assert!(c.confused, "very confused belief {} is not confused", b);
            }
        }
    }

    #[test]
    fn prefix_classification_matches_belief(seed in 0u64..10_000, prefix in proptest::collection::vec(0usize..3, 0..=4)) {
        let p = small(seed);
        let an = Analyzer::new(&p);
        let prefix: Vec<Observation> = prefix
            .into_iter()
            .map(|a| if a < p.num_letters() { Observation::Letter(a) } else { Observation::Skip })
            .collect();
        let b = an.nfa().run(&an.initial_belief(), &prefix);
        prop_assert_eq!(an.classify_prefix(&prefix).unwrap(), an.classify_belief(&b).unwrap());
    }

    #[test]
    fn diagnosability_and_costs_agree(seed in 0u64..10_000) {
        let p = small(seed);
        let an = Analyzer::new(&p);
        let diagnosable = an.diagnoser_exists().unwrap();
        let finitary = an.is_finitary(&an.initial_belief()).unwrap();
        if diagnosable {
            prop_assert!(an.cinf_is_finite().unwrap());
        }
        prop_assert_eq!(decision_probability(&an).unwrap() == Rational::one(), diagnosable);
        prop_assert_eq!(expected_smart_cost(&an).unwrap().is_some(), finitary);
        prop_assert_eq!(an.cinf_is_finite().unwrap(), finitary);
    }

    #[test]
    fn non_hidden_models_are_diagnosable(seed in 0u64..10_000) {
        let p = non_hidden(5, seed);
        prop_assert!(p.mc().is_non_hidden());
        prop_assert!(Analyzer::new(&p).diagnoser_exists().unwrap());
    }

    #[test]
    fn generated_non_hidden_chains_are_diagnosable(seed in any::<u64>(), states in 1usize..7, degree in 1usize..4) {
        let spec = GenSpec { states, out_degree: degree.min(states), seed, ..GenSpec::default() };
        let mc = generate_mc(&spec).unwrap();
        prop_assert!(mc.is_non_hidden());
        let dfa = random_dfa(mc.letters(), 3, seed);
        let p = ProductMc::compose(&mc, &dfa).unwrap();
        prop_assert!(Analyzer::new(&p).diagnoser_exists().unwrap());
    }

    #[test]
    fn non_hidden_confusion_matches_general(seed in 0u64..10_000) {
        let p = non_hidden(4, seed);
        prop_assume!(p.num_pairs() <= 12);
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        for b in reachable_beliefs(&p, &an) {
            prop_assert_eq!(nh.is_confused(&b), an.is_confused(&b).unwrap(), "belief {}", b);
        }
    }

    #[test]
    fn cras_is_bounded_and_skips_stay_unconfused(seed in 0u64..10_000) {
        let p = non_hidden(5, seed);
        let nh = NonHidden::new(&p).unwrap();
        let n = p.num_pairs() as i64;
        let reachable = p.reachable();
        for x in (0..p.num_pairs()).filter(|&x| reachable[x]) {
            let b = Belief::singleton(x);
            if nh.is_confused(&b) {
                continue;
            }
            match nh.cras_pair(x) {
                Cras::Finite(k) => {
                    prop_assert!(k < n * n);
                    for j in 0..=k as u64 {
                        prop_assert!(!nh.is_confused(&nh.nfa().skip_n(&b, j)));
                    }
                    prop_assert!(nh.is_confused(&nh.nfa().skip_n(&b, k as u64 + 1)));
                }
                Cras::Infinite => {
                    for j in 0..=(2 * n) as u64 {
                        prop_assert!(!nh.is_confused(&nh.nfa().skip_n(&b, j)));
                    }
                }
            }
        }
    }

    #[test]
    fn procrastination_rows_are_stochastic(seed in 0u64..10_000, k in prop_oneof![Just(None), (0u64..20).prop_map(Some)]) {
        let p = non_hidden(5, seed);
        let nh = NonHidden::new(&p).unwrap();
        let bound = k.map_or(Bound::Unbounded, Bound::Finite);
        let m = nh.procrastination_mc(bound);
        for x in 0..m.num_pairs() {
            if let Some(row) = m.row(x) {
                let sum = row.iter().fold(Rational::zero(), |acc, e| acc + &e.prob);
                prop_assert_eq!(sum, Rational::one(), "row {}", x);
            }
        }
        prop_assert!(m.row(m.initial()).is_some());
    }

    #[test]
    fn cinf_is_a_lower_bound(seed in 0u64..10_000, k in 0u64..40) {
        let p = non_hidden(5, seed);
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        let cinf = compute_cinf(&nh).unwrap();
        prop_assert!(cinf <= expected_pro_cost(&nh, k).unwrap());
        prop_assert!(cinf <= expected_smart_cost(&an).unwrap().unwrap());
    }

    #[test]
    fn monitor_table_round_trips(seed in 0u64..10_000, k in 0u64..6) {
        let p = non_hidden(5, seed);
        let nh = NonHidden::new(&p).unwrap();
        let monitor = compile_monitor(&nh, Bound::Finite(k)).unwrap();
        let table = monitor.to_table(&p);
        let parsed = MonitorTable::parse(&table.to_text()).unwrap();
        prop_assert_eq!(&parsed, &table);
        prop_assert_eq!(parsed.resolve(&p).unwrap(), monitor);
    }

    #[test]
    fn see_all_decides_first(seed in 0u64..10_000, k in 0u64..4, trial in 0u64..50) {
        let p = non_hidden(4, seed);
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        let sim = Simulator::new(&an).unwrap();
        let policies = [
            Policy::Smart,
            Policy::Monitor { name: "pro".into(), monitor: compile_monitor(&nh, Bound::Finite(k)).unwrap() },
        ];
        let mut trace = sim.trace(seed, trial, 2_000);
        let all = sim.run_policy(&mut trace, &Policy::SeeAll).unwrap();
        for policy in &policies {
            let run = sim.run_policy(&mut trace, policy).unwrap();
            prop_assert!(sim.verdict_is_correct(&mut trace, &run));
            if let Outcome::Verdict(v) = run.outcome {
                prop_assert_eq!(all.outcome, Outcome::Verdict(v));
                prop_assert!(all.stop <= run.stop);
                prop_assert!(run.cost <= all.cost);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn permuted_model_gives_identical_costs(seed in 0u64..10_000, order in proptest::collection::vec(0usize..64, 0..12)) {
        let (mc, dfa) = random_non_hidden_model(5, seed);
        let text = write_model(&mc, &dfa);
        let (mc2, dfa2) = load_model(&reorder(&text, &order)).unwrap();
        let a = CostReport::compute(&ProductMc::compose(&mc, &dfa).unwrap(), &[0, 3, 16], 100_000).unwrap();
        let b = CostReport::compute(&ProductMc::compose(&mc2, &dfa2).unwrap(), &[0, 3, 16], 100_000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn monitor_decides_as_often_as_see_all(seed in 0u64..10_000) {
        let p = non_hidden(4, seed);
        let an = Analyzer::new(&p);
        let nh = NonHidden::new(&p).unwrap();
        let sim = Simulator::new(&an).unwrap();
        let monitor = compile_monitor(&nh, Bound::Finite(4)).unwrap();
        let trials = 400u64;
        let report = sim
            .simulate(&[Policy::SeeAll, Policy::Monitor { name: "pro".into(), monitor }], trials, seed, 5_000)
            .unwrap();
        let freq = |i: usize| report.policies[i].decided as f64 / trials as f64;
        let (f0, f1) = (freq(0), freq(1));
        let pooled = (f0 + f1) / 2.0;
        let se = (2.0 * pooled * (1.0 - pooled) / trials as f64).sqrt().max(1.0 / trials as f64);
        prop_assert!((f0 - f1).abs() <= 5.0 * se, "see-all {} vs monitor {}", f0, f1);
        prop_assert_eq!(report.policies[0].incorrect + report.policies[1].incorrect, 0);
    }
}

#[test]
fn pair_classes_are_closed_under_steps() {
    for seed in 0..200 {
        let p = small(seed);
        let an = Analyzer::new(&p);
        for x in 0..p.num_pairs() {
            let c = an.pair_classes()[x];
            if c == PairClass::Undecided {
                continue;
            }
            for e in p.edges(x) {
                assert_eq!(an.pair_classes()[e.target], c, "seed {} pair {}", seed, x);
            }
        }
    }
}
