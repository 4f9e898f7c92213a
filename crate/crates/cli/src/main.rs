//! `selmon` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 parse or validation error,
//! 3 belief exploration cap exceeded, 4 capability error.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use selmon::cost::{CostReport, DEFAULT_K_SWEEP};
use selmon::generate::{builtin_property, generate_mc, random_dfa, FlowgraphSpec, GenSpec};
use selmon::monitor::{compile_monitor, MonitorTable};
use selmon::nonhidden::{Bound, NonHidden};
use selmon::qualitative::{parse_prefix, Analyzer, PairClass, DEFAULT_NODE_CAP};
use selmon::simulation::{Policy, SimReport, Simulator};
use selmon::{batch, load_model, write_model, AnalysisError, ParseError, ProductMc};

#[derive(Parser, Debug)]
#[command(name = "selmon", version, about = "Cost-aware monitoring of Markov chains")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Maximum number of belief-graph nodes to explore.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_CAP)]
    cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a model file parses and is well formed.
    Validate { file: PathBuf },
    /// Qualitative summary of a model.
    Analyze {
        file: PathBuf,
        /// Write the belief graph from the initial belief as Graphviz.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Classify the belief reached by an observation prefix.
    Classify {
        file: PathBuf,
        /// Comma-separated letters, `_` for a skipped letter.
        #[arg(long, default_value = "")]
        prefix: String,
    },
    /// Compile the procrastination monitor of a non-hidden model.
    Compile {
        file: PathBuf,
        /// Skip bound, a number or `inf`.
        #[arg(short = 'K', long = "K", value_parser = parse_bound)]
        k: Bound,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact expected costs.
    Cost {
        file: PathBuf,
        /// Skip bounds for the procrastination costs.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_K_SWEEP)]
        k_sweep: Vec<u64>,
    },
    /// Monte-Carlo simulation of observation policies.
    Simulate {
        file: PathBuf,
        /// Policies to run; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', default_values = ["seeall", "smart"])]
        policy: Vec<PolicyName>,
        /// Skip bound of the procrastination policy.
        #[arg(short = 'K', long = "K", default_value_t = 8)]
        k: u64,
        /// Use a compiled monitor file for the procrastination policy.
        #[arg(long)]
        monitor: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Generate a random model file.
    Gen {
        #[command(flatten)]
        spec: GenArgs,
        /// Built-in property: iterator, reach:<a>, parity:<a>,<m>.
        #[arg(long)]
        property: Option<String>,
        /// States of the random automaton used when no property is given.
        #[arg(long, default_value_t = 4)]
        dfa_states: usize,
        /// Build the chain from a flowgraph file instead of a random digraph.
        #[arg(long)]
        flowgraph: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cost ratio c_inf / E(C_smart) over generated non-hidden models.
    Batch {
        #[command(flatten)]
        spec: GenArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        property: Option<String>,
    },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 5)]
    states: usize,
    /// Letter count of hidden chains.
    #[arg(long, default_value_t = 2)]
    letters: usize,
    #[arg(long, default_value_t = 2)]
    out_degree: usize,
    /// Dirichlet concentration.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Allow several states to share a letter.
    #[arg(long)]
    hidden: bool,
}

impl GenArgs {
    fn to_spec(&self) -> GenSpec {
        GenSpec {
            states: self.states,
            letters: self.letters,
            out_degree: self.out_degree,
            alpha: self.alpha,
            seed: self.seed,
            non_hidden: !self.hidden,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PolicyName {
    Seeall,
    Smart,
    Pro,
}

fn parse_bound(s: &str) -> Result<Bound, String> {
    s.parse().map_err(|e: AnalysisError| e.to_string())
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::new(2, e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::CapExceeded { .. } => 3,
            AnalysisError::NotNonHidden { .. }
            | AnalysisError::UnboundedSkip { .. }
            | AnalysisError::SingularSystem => 4,
            AnalysisError::AlphabetMismatch | AnalysisError::MonitorMismatch(_) => 2,
            AnalysisError::UnknownLetter(_) | AnalysisError::InvalidArgument(_) => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{}: {}", path.display(), e)))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::new(1, format!("{}: {}", path.display(), e)))
}

fn load_product(path: &Path) -> Result<ProductMc, Failure> {
    let (mc, dfa) = load_model(&read(path)?)?;
    Ok(ProductMc::compose(&mc, &dfa)?)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn validate(cli: &Cli, file: &Path) -> CliResult {
    let p = load_product(file)?;
    let mc = p.mc();
    if cli.json {
        print_json(&json!({
            "valid": true,
            "states": mc.num_states(),
            "letters": mc.num_letters(),
            "dfa_states": p.dfa().num_states(),
            "non_hidden": mc.is_non_hidden(),
        }));
    } else {
        println!(
            "ok: {} states, {} letters, {} automaton states, {}",
            mc.num_states(),
            mc.num_letters(),
            p.dfa().num_states(),
            if mc.is_non_hidden() { "non-hidden" } else { "hidden" }
        );
    }
    Ok(())
}

fn analyze(cli: &Cli, file: &Path, dot: Option<&Path>) -> CliResult {
    let p = load_product(file)?;
    let an = Analyzer::with_cap(&p, cli.cap);
    let reachable = p.reachable();
    let mut counts = [0usize; 3];
    for (x, class) in an.pair_classes().iter().enumerate() {
        if reachable[x] {
            counts[match class {
                PairClass::NegativelyDeciding => 0,
                PairClass::PositivelyDeciding => 1,
                PairClass::Undecided => 2,
            }] += 1;
        }
    }
    let nh = NonHidden::new(&p).ok();
    let classes = nh.as_ref().map(|nh| {
        (0..p.num_pairs())
            .filter(|&x| reachable[x])
            .map(|x| nh.equivalence().class(x))
            .collect::<BTreeSet<_>>()
            .len()
    });
    let diagnosable = an.diagnoser_exists()?;
    let cinf_finite = an.cinf_is_finite()?;
    let graph = an.belief_graph_of(&an.initial_belief())?;
    if let Some(path) = dot {
        let marks = an.dv_marks(&graph)?;
        write(path, &graph.to_dot(&p, Some(&marks)))?;
    }
    if cli.json {
        print_json(&json!({
            "non_hidden": nh.is_some(),
            "diagnosable": diagnosable,
            "cinf_finite": cinf_finite,
            "pairs": p.num_pairs(),
            "reachable_pairs": counts.iter().sum::<usize>(),
            "pair_classes": {
                "negatively_deciding": counts[0],
                "positively_deciding": counts[1],
                "undecided": counts[2],
            },
            "equivalence_classes": classes,
            "belief_graph_nodes": graph.len(),
        }));
    } else {
        println!("non-hidden: {}", yes_no(nh.is_some()));
        println!("diagnosable: {}", yes_no(diagnosable));
        println!("cinf finite: {}", yes_no(cinf_finite));
        println!(
            "reachable pairs: {} ({} negatively deciding, {} positively deciding, {} undecided)",
            counts.iter().sum::<usize>(),
            counts[0],
            counts[1],
            counts[2]
        );
        if let Some(n) = classes {
            println!("equivalence classes of reachable pairs: {}", n);
        }
        println!("belief graph nodes: {}", graph.len());
    }
    Ok(())
}

fn classify(cli: &Cli, file: &Path, prefix: &str) -> CliResult {
    let p = load_product(file)?;
    let an = Analyzer::with_cap(&p, cli.cap);
    let obs = parse_prefix(&p, prefix)?;
    let belief = an.nfa().run(&an.initial_belief(), &obs);
    let c = an.classify_belief(&belief)?;
    let pairs: Vec<String> = belief.iter().map(|x| p.pair_name(x)).collect();
    let fields = [
        ("enabled", c.enabled),
        ("negatively_deciding", c.negatively_deciding),
        ("positively_deciding", c.positively_deciding),
        ("confused", c.confused),
        ("very_confused", c.very_confused),
        ("finitary", c.finitary),
    ];
    if cli.json {
        let mut v = json!({ "belief": pairs });
        for (k, b) in fields {
            v[k] = json!(b);
        }
        print_json(&v);
    } else {
        println!("belief: {{{}}}", pairs.join(" "));
        for (k, b) in fields {
            println!("{}: {}", k.replace('_', " "), yes_no(b));
        }
    }
    Ok(())
}

fn compile(cli: &Cli, file: &Path, k: Bound, output: Option<&Path>) -> CliResult {
    let p = load_product(file)?;
    let nh = NonHidden::new(&p)?;
    let monitor = compile_monitor(&nh, k)?;
    let text = monitor.to_table(&p).to_text();
    match output {
        Some(path) => {
            write(path, &text)?;
            if cli.json {
                print_json(&json!({ "nodes": monitor.len(), "K": k.to_string(), "output": path }));
            } else {
                println!("wrote {} nodes to {}", monitor.len(), path.display());
            }
        }
        None => print!("{}", text),
    }
    Ok(())
}

fn cost(cli: &Cli, file: &Path, ks: &[u64]) -> CliResult {
    let p = load_product(file)?;
    let report = CostReport::compute(&p, ks, cli.cap)?;
    if cli.json {
        print_json(&report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if report.cinf.is_none() {
        return Err(Failure::new(
            4,
            "the chain is hidden; cinf and procrastination costs need a non-hidden chain",
        ));
    }
    Ok(())
}

fn print_sim(report: &SimReport) {
    println!("trials {} seed {}", report.trials, report.seed);
    println!(
        "{:<10} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "policy", "mean", "stddev", "decided", "undecided", "yes", "no", "incorrect"
    );
    let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{:.6}", v));
    for s in &report.policies {
        println!(
            "{:<10} {:>12} {:>12} {:>9} {:>9} {:>9} {:>9} {:>9}",
            s.name,
            num(s.mean_cost),
            num(s.stddev),
            s.decided,
            s.undecided,
            s.verdicts.yes,
            s.verdicts.no,
            s.incorrect
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    cli: &Cli,
    file: &Path,
    names: &[PolicyName],
    k: u64,
    monitor: Option<&Path>,
    trials: u64,
    seed: u64,
    max_steps: usize,
) -> CliResult {
    let p = load_product(file)?;
    let an = Analyzer::with_cap(&p, cli.cap);
    let mut policies = Vec::new();
    for name in names {
        policies.push(match name {
            PolicyName::Seeall => Policy::SeeAll,
            PolicyName::Smart => Policy::Smart,
            PolicyName::Pro => {
                let monitor = match monitor {
                    Some(path) => MonitorTable::parse(&read(path)?)?.resolve(&p)?,
                    None => compile_monitor(&NonHidden::new(&p)?, Bound::Finite(k))?,
                };
                Policy::Monitor {
                    name: "pro".into(),
                    monitor,
                }
            }
        });
    }
    let report = Simulator::new(&an)?.simulate(&policies, trials, seed, max_steps)?;
    if cli.json {
        print_json(&serde_json::to_value(&report).expect("report serializes"));
    } else {
        print_sim(&report);
    }
    Ok(())
}

fn gen(
    spec: &GenArgs,
    property: Option<&str>,
    dfa_states: usize,
    flowgraph: Option<&Path>,
    output: Option<&Path>,
) -> CliResult {
    let mc = match flowgraph {
        Some(path) => FlowgraphSpec::parse(&read(path)?)?.to_mc(spec.alpha, spec.seed)?,
        None => generate_mc(&spec.to_spec())?,
    };
    let dfa = match property {
        Some(name) => builtin_property(name, mc.letters())?,
        None if dfa_states == 0 => return Err(Failure::new(1, "--dfa-states must be positive")),
        None => random_dfa(mc.letters(), dfa_states, spec.seed),
    };
    let text = write_model(&mc, &dfa);
    match output {
        Some(path) => write(path, &text),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn run_batch(cli: &Cli, spec: &GenArgs, count: usize, property: Option<&str>) -> CliResult {
    if spec.hidden {
        return Err(Failure::new(4, "batch runs need non-hidden chains"));
    }
    let report = batch::run_batch(&spec.to_spec(), property, count, cli.cap)?;
    if cli.json {
        print_json(&report.to_json());
    } else {
        print!("{}", report.to_text());
        if report.skipped > 0 {
            println!("({} models with a deciding initial pair replaced)", report.skipped);
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Validate { file } => validate(cli, file),
        Command::Analyze { file, dot } => analyze(cli, file, dot.as_deref()),
        Command::Classify { file, prefix } => classify(cli, file, prefix),
        Command::Compile { file, k, output } => compile(cli, file, *k, output.as_deref()),
        Command::Cost { file, k_sweep } => cost(cli, file, k_sweep),
        Command::Simulate {
            file,
            policy,
            k,
            monitor,
            trials,
            seed,
            max_steps,
        } => simulate(cli, file, policy, *k, monitor.as_deref(), *trials, *seed, *max_steps),
        Command::Gen {
            spec,
            property,
            dfa_states,
            flowgraph,
            output,
        } => gen(
            spec,
            property.as_deref(),
            *dfa_states,
            flowgraph.as_deref(),
            output.as_deref(),
        ),
        Command::Batch {
            spec,
            count,
            property,
        } => run_batch(cli, spec, *count, property.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
