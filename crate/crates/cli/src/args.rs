use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gradedmt::generate::{Bounds, DEFAULT_BUDGET};

#[derive(Parser, Debug)]
#[command(name = "gradedmt", version, about = "Graded first-order model theory over finite MTL-chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Work budget for enumerations and searches.
    #[arg(long, global = true, env = "GRADEDMT_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BoundArgs {
    /// Connective and quantifier depth of generated formulas [default: 2,
    /// or 0 for diagrams].
    #[arg(long)]
    pub depth: Option<usize>,

    /// Variables available to generated formulas (default: the depth, at least 1).
    #[arg(long)]
    pub vars: Option<usize>,

    /// Include the inner truth constants `val(a)`.
    #[arg(long)]
    pub truth_constants: bool,
}

impl BoundArgs {
    pub fn bounds(&self, budget: u64) -> Bounds {
        self.bounds_or(2, budget)
    }

    pub fn bounds_or(&self, depth: usize, budget: u64) -> Bounds {
        let mut b = Bounds::depth(self.depth.unwrap_or(depth))
            .with_truth_constants(self.truth_constants)
            .with_budget(budget);
        if let Some(v) = self.vars {
            b = b.with_vars(v);
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Diag,
    Eldiag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Compare {
    Satisfaction,
    Values,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Generated Forall(1) sentences on random structures and their substructures.
    LosTarskiLemma,
    /// Generated Exists(1) sentences; passes when violations are found.
    ExistsControl,
    /// Generated Forall(2) sentences on random chains of structures.
    UnionLemma,
    /// Diagram side against embedding side on every small pair.
    DiagramSweep,
    Counterexample,
    Amalgamation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BundledInstance {
    Identity,
    Existential,
    UniversalExistential,
    Counterexample,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Value of a formula in a structure.
    Eval {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        formula: String,
        /// Assignment `x=label`; repeatable.
        #[arg(long = "assign", value_name = "VAR=LABEL")]
        assign: Vec<String>,
    },
    /// Prenex class of a formula.
    Classify {
        #[arg(long)]
        formula: String,
    },
    /// Is one structure a substructure of another?
    CheckSub {
        #[arg(long)]
        sub: PathBuf,
        #[arg(long)]
        sup: PathBuf,
    },
    /// All substructures of a structure.
    EnumSubs {
        #[arg(long)]
        structure: PathBuf,
        /// Also restrict to subalgebras of the chain.
        #[arg(long)]
        subalgebras: bool,
    },
    /// First strong homomorphism between two structures.
    FindHom {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Search over algebra maps too instead of fixing the identity.
        #[arg(long)]
        free_algebra: bool,
    },
    /// First strong embedding between two structures.
    FindEmbed {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        free_algebra: bool,
    },
    /// Diagram of a structure, as a theory.
    Diagram {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Diag)]
        kind: Kind,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Nesting of function symbols in diagram terms.
        #[arg(long)]
        term_depth: Option<usize>,
    },
    /// Compare "target models the diagram" with "source embeds into target".
    CheckDiagram {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Diag)]
        kind: Kind,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long)]
        term_depth: Option<usize>,
    },
    /// Bounded elementary equivalence.
    Equiv {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long, value_enum, default_value_t = Compare::Satisfaction)]
        compare: Compare,
    },
    /// Union of a chain of structures.
    Union {
        #[arg(long)]
        chain: PathBuf,
        /// Save the union as a structure file.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Tarski–Vaught checks on a chain of structures.
    CheckChain {
        #[arg(long)]
        chain: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Do the Exists(n) sentences true on the left hold on the right?
    ImpliesExists {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Element labels named as parameters, comma separated.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Bounded search for an amalgam.
    Amalgamate {
        #[arg(long, required_unless_present = "bundled")]
        left: Option<PathBuf>,
        #[arg(long, required_unless_present = "bundled")]
        right: Option<PathBuf>,
        /// Shared substructure of both sides
        #[arg(long)]
        common: Option<PathBuf>,
        /// Comma separated labels of the common part used as parameters
        #[arg(long, value_delimiter = ',')]
        generators: Vec<String>,
        /// Use a built-in instance instead of files
        #[arg(long, value_enum, conflicts_with_all = ["left", "right", "common"])]
        bundled: Option<BundledInstance>,
        /// Quantifier alternation bound of the transferred sentences
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Largest amalgam domain to try
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Does a theory entail a sentence on all models up to a size?
    Consequence {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value = "bundled:godel4")]
        algebra: String,
        #[arg(long, default_value_t = 3)]
        max_domain: usize,
    },
    /// Generated Forall(1) sentences entailed by a theory on small models.
    UniversalConsequences {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long, default_value = "bundled:godel4")]
        algebra: String,
        #[arg(long, default_value_t = 3)]
        max_domain: usize,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// The constant-predicate counterexample on the bundled pair.
    Counterexample {
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Largest chain for random instances, or the chain size of the sweep.
        #[arg(long)]
        chain_size: Option<usize>,
        /// Largest random domain, or the largest target of the sweep.
        #[arg(long)]
        max_domain: Option<usize>,
        /// Largest source of the sweep.
        #[arg(long, default_value_t = 2)]
        max_source: usize,
        /// Override the suite bounds.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        vars: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Classify { .. } => "classify",
            Command::CheckSub { .. } => "check-sub",
            Command::EnumSubs { .. } => "enum-subs",
            Command::FindHom { .. } => "find-hom",
            Command::FindEmbed { .. } => "find-embed",
            Command::Diagram { .. } => "diagram",
            Command::CheckDiagram { .. } => "check-diagram",
            Command::Equiv { .. } => "equiv",
            Command::Union { .. } => "union",
            Command::CheckChain { .. } => "check-chain",
            Command::ImpliesExists { .. } => "implies-exists",
            Command::Amalgamate { .. } => "amalgamate",
            Command::Consequence { .. } => "consequence",
            Command::UniversalConsequences { .. } => "universal-consequences",
            Command::Counterexample { .. } => "counterexample",
            Command::Verify { .. } => "verify",
        }
    }
}
