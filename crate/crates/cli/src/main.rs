use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clb_cli::{run, RunSpec, Verb, USAGE_EXIT};
use clb_core::Strategy;

/// Coupled logical bisimulation workbench for the pure λ-calculus.
#[derive(Parser)]
#[command(name = "clb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed term to a value.
    Eval {
        term: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Print the reduction sequence of a closed term.
    Trace {
        term: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Bounded contextual equivalence of two closed terms.
    Equiv {
        left: String,
        right: String,
        /// Only evaluation contexts.
        #[arg(long)]
        ev_only: bool,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Check that a coupled relation is a coupled logical bisimulation.
    CheckClb {
        relation: String,
        /// Call-by-value: drop the abstraction-pairing clause.
        #[arg(long)]
        env: bool,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Check that a relation is an applicative bisimulation.
    CheckAb {
        relation: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Check that a relation is a logical bisimulation.
    CheckLb {
        relation: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Check a progression up to a technique, e.g. `pev`, `ctx`, `red:50.ctx`, `nu(3):pev`.
    CheckUpto {
        relation: String,
        #[arg(long)]
        technique: String,
        #[arg(long)]
        env: bool,
        /// Also check that iterates 0..=K progress to their successors.
        #[arg(long, value_name = "K")]
        harness: Option<usize>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Validate up-to axioms on generated samples (and any given relation files).
    ValidateAxioms {
        relations: Vec<String>,
        #[arg(long)]
        technique: String,
        /// Comma-separated axiom names, or `all`.
        #[arg(long)]
        axiom: Option<String>,
        /// Number of generated sample relations.
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Generate a seeded corpus of closed terms.
    GenCorpus {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_size: u64,
        #[command(flatten)]
        knobs: Knobs,
    },
}

#[derive(Args)]
struct Knobs {
    #[arg(long, default_value_t = Strategy::Cbn)]
    strategy: Strategy,
    #[arg(long, default_value_t = 1000)]
    fuel: u64,
    #[arg(long, default_value_t = 6)]
    ctx_bound: usize,
    #[arg(long, default_value_t = 6)]
    closure_bound: usize,
    #[arg(long, default_value_t = 10)]
    verify_factor: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

type Tweak = Box<dyn FnOnce(&mut RunSpec)>;

fn spec_of(command: Command) -> (RunSpec, bool) {
    let (verb, inputs, knobs, extra): (Verb, Vec<String>, Knobs, Tweak) = match command {
        Command::Eval { term, knobs } => (Verb::Eval, vec![term], knobs, Box::new(|_| {})),
        Command::Trace { term, knobs } => (Verb::Trace, vec![term], knobs, Box::new(|_| {})),
        Command::Equiv {
            left,
            right,
            ev_only,
            knobs,
        } => (Verb::Equiv, vec![left, right], knobs, Box::new(move |s| s.ev_only = ev_only)),
        Command::CheckClb { relation, env, knobs } => (
            Verb::CheckClb,
            vec![relation],
            knobs,
            Box::new(move |s| s.up_to_environment = env),
        ),
        Command::CheckAb { relation, knobs } => (Verb::CheckAb, vec![relation], knobs, Box::new(|_| {})),
        Command::CheckLb { relation, knobs } => (Verb::CheckLb, vec![relation], knobs, Box::new(|_| {})),
        Command::CheckUpto {
            relation,
            technique,
            env,
            harness,
            knobs,
        } => (
            Verb::CheckUpto,
            vec![relation],
            knobs,
            Box::new(move |s| {
                s.technique = Some(technique);
                s.up_to_environment = env;
                s.harness = harness;
            }),
        ),
        Command::ValidateAxioms {
            relations,
            technique,
            axiom,
            count,
            knobs,
        } => (
            Verb::ValidateAxioms,
            relations,
            knobs,
            Box::new(move |s| {
                s.technique = Some(technique);
                s.axiom = axiom;
                s.count = count;
            }),
        ),
        Command::GenCorpus { count, max_size, knobs } => (
            Verb::GenCorpus,
            Vec::new(),
            knobs,
            Box::new(move |s| {
                s.count = count;
                s.max_size = max_size;
            }),
        ),
    };
    let mut spec = RunSpec::new(verb, knobs.strategy, inputs);
    spec.fuel = knobs.fuel;
    spec.ctx_bound = knobs.ctx_bound;
    spec.closure_bound = knobs.closure_bound;
    spec.verify_factor = knobs.verify_factor;
    spec.seed = knobs.seed;
    spec.output = knobs.output;
    extra(&mut spec);
    (spec, knobs.json)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (spec, json) = spec_of(cli.command);
    let report = match run(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE_EXIT as u8);
        }
    };
    let text = report.to_json();
    if let Some(path) = &spec.output {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(USAGE_EXIT as u8);
        }
    }
    if json {
        print!("{text}");
    } else {
        print!("{}", report.summary());
    }
    ExitCode::from(report.exit_code as u8)
}
