use std::path::PathBuf;

use chronovec::embedding::Method;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "chronovec", version, about = "Temporal word embeddings from time-stamped corpora")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; every key has a default.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file (directory for `pipeline`).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Training threads. More than one gives up bitwise reproducibility.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Period label (count, neighbors) or period policy (similarity).
    #[arg(long, global = true)]
    pub period: Option<String>,

    /// Comma-separated replacement fractions for `eval smoothness`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "A,B,..")]
    pub alpha_grid: Option<Vec<f64>>,

    /// Rows to report for rankings and neighbor lists
    #[arg(long, global = true)]
    pub top_k: Option<usize>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus files; replaces `corpus.inputs` from the configuration.
    #[arg(long = "input", value_name = "FILE")]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VocabArg {
    /// Vocabulary written by `vocab`; built from the corpus when absent.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize and bucket a corpus, writing it back as n-gram TSV.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Build the vocabulary (`word TAB count`).
    Vocab {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Count windowed co-occurrences per period.
    Count {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        vocab: VocabArg,
    },
    /// Train embeddings.
    Train {
        /// One of ppmi, svd, tsvd, sgns, tsgns, dw2v
        #[arg(value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        vocab: VocabArg,
        /// Tagged skip-gram only: write a resumable checkpoint here.
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Epochs between checkpoints; only at the end when absent.
        #[arg(long, value_name = "N", requires = "checkpoint")]
        checkpoint_every: Option<u32>,
        /// Tagged skip-gram only: continue from this checkpoint.
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
    },
    /// Align independently trained periods.
    Align {
        #[command(subcommand)]
        kind: AlignCommand,
    },
    /// Evaluate embeddings.
    Eval {
        #[command(subcommand)]
        kind: EvalCommand,
    },
    /// Export vectors as word2vec text or print an artifact's provenance.
    Export {
        /// Embedding file, report or other chronovec artifact.
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        /// Print the command line that produced the artifact.
        #[arg(long)]
        provenance: bool,
    },
    /// Ingest, train, align and evaluate as configured.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Generate a synthetic corpus with planted changes.
    Synth {
        /// Where to write the planted structure as JSON.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AlignCommand {
    /// Chain orthogonal Procrustes maps into the last period's frame.
    Procrustes {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        /// Also write the adjacent rotation matrices.
        #[arg(long, value_name = "FILE")]
        maps: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PeriodPair {
    /// Earlier period label; the first period by default.
    #[arg(long)]
    pub from: Option<String>,
    /// Later period label; the last period by default.
    #[arg(long)]
    pub to: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Mean cosine of probe words across perturbed context overlap.
    Smoothness {
        #[command(flatten)]
        input: InputArgs,
        /// Methods to compare; `eval.smoothness_methods` by default.
        #[arg(long = "method", value_parser = parse_method)]
        methods: Vec<Method>,
        /// Probe words; `eval.smoothness.probe_words` by default.
        #[arg(long = "probe", value_name = "WORD")]
        probes: Vec<String>,
    },
    /// Spearman against human similarity judgments.
    Similarity {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        /// `word1 word2 score` lines; `eval.similarity_pairs` by default.
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,
    },
    /// Correlation of vector norms with normalized word frequency.
    Norms {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        vocab: VocabArg,
        /// One word per line; `eval.norm_words` or every word by default.
        #[arg(long, value_name = "FILE")]
        words: Option<PathBuf>,
    },
    /// Words ranked by how far they moved.
    Displacement {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        #[command(flatten)]
        periods: PeriodPair,
    },
    /// Known shifted words against controls.
    Shifts {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        #[command(flatten)]
        periods: PeriodPair,
        #[arg(long, value_name = "FILE")]
        shifted: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        control: Option<PathBuf>,
    },
    /// Nearest (word, period) keys of a word in one period.
    Neighbors {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        #[arg(long)]
        word: String,
        /// Restrict candidates to these period labels.
        #[arg(long, value_delimiter = ',', value_name = "L,..")]
        targets: Vec<String>,
    },
    /// A word's path through time with its neighbors, in 2-D.
    Trajectory {
        #[arg(long, value_name = "FILE")]
        emb: PathBuf,
        #[arg(long)]
        word: String,
        /// Period labels to include; all by default.
        #[arg(long, value_delimiter = ',', value_name = "L,..")]
        periods: Vec<String>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: chronovec::Error| e.to_string())
}
