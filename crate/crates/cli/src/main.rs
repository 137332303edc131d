mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Degradation-based quality measurement for genome sequence collections.
#[derive(Debug, Parser)]
#[command(name = "degradex", version, about)]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Plain-text `key = value` configuration; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Handling of non-ACGT symbols: reject, drop or replace.
    #[arg(long, global = true, value_name = "POLICY")]
    pub ambiguous: Option<String>,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Clone, Args)]
pub struct MutationArgs {
    /// Per-base substitution probability per iteration.
    #[arg(long)]
    pub p_snp: Option<f64>,
    /// Per-base insertion-start probability.
    #[arg(long)]
    pub p_ins: Option<f64>,
    /// Per-base deletion-start probability.
    #[arg(long)]
    pub p_del: Option<f64>,
    /// Inversions per megabase per iteration.
    #[arg(long)]
    pub p_inv: Option<f64>,
    /// Tandem duplications per megabase per iteration.
    #[arg(long)]
    pub p_dup: Option<f64>,
    /// Translocations per megabase per iteration.
    #[arg(long)]
    pub p_trans: Option<f64>,
    /// Geometric parameter of indel lengths.
    #[arg(long)]
    pub indel_len_geom_p: Option<f64>,
    #[arg(long)]
    pub sv_len_min: Option<usize>,
    #[arg(long)]
    pub sv_len_max: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Degrade every genome and write one FASTA per checkpoint plus an event log.
    Degrade {
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2000)]
        iters: u64,
        /// Comma-separated iterations to snapshot (default: 0 and --iters).
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Per-genome n-gram entropies and distances to a reference.
    Metrics {
        input: PathBuf,
        /// N-gram orders.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        n: Vec<usize>,
        /// FASTA whose first record is the reference.
        #[arg(long, conflicts_with = "reference_id")]
        reference: Option<PathBuf>,
        /// Use this genome of the input as the reference.
        #[arg(long)]
        reference_id: Option<String>,
        /// Resamples for the Markov null threshold of the Hellinger distance.
        #[arg(long)]
        null_samples: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Output CSV (standard output when absent).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Checkpointed metric trajectories and quadratic fits for a corpus.
    Trajectory {
        corpus: PathBuf,
        out: PathBuf,
        /// triplet_entropy, entropy_delta, hellingerN, hamming, levenshtein.
        #[arg(long, value_delimiter = ',')]
        measures: Option<Vec<String>>,
        /// parent, start or reference:<id>.
        #[arg(long)]
        origin: Option<String>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        /// entropy or entropy_delta.
        #[arg(long)]
        fit_target: Option<String>,
        /// Fits CSV (genome_id,c0,c1,c2,r2).
        #[arg(long)]
        fits: Option<PathBuf>,
        /// Plot-data CSV (x,y,series) of the triplet entropy.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Repeated-window counts across degradation iterations.
    Repeats {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "20,25,29,35,40")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,100,200,300,400,500")]
        iters: Vec<u64>,
        /// Genome to analyse (default: the first record).
        #[arg(long)]
        genome: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Reverse-complement palindrome counts across degradation iterations.
    Palindromes {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "6,8,10,12,14,16")]
        h: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,100,200,300,400,500")]
        iters: Vec<u64>,
        #[arg(long)]
        genome: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Hierarchical clustering of triplet distributions or quadratic fits.
    Cluster {
        /// FASTA for `triplets`, fits CSV for `fits`.
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long, value_parser = ["triplets", "fits"])]
        features: String,
        /// complete, ward (ward.D) or ward.D2.
        #[arg(long)]
        linkage: Option<String>,
        #[arg(long, conflicts_with = "k_range")]
        k: Option<usize>,
        /// Search range for the cluster count, e.g. 2..20.
        #[arg(long)]
        k_range: Option<String>,
    },
    /// Contingency table of two cluster assignment CSVs.
    Crosstab {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Full analysis: plant, trajectories, fits, clustering, report.
    Pipeline {
        /// Corpus FASTA (taken from the manifest when rerunning).
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Rerun the configuration recorded in a previous manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Number of degraded copies to plant.
        #[arg(long)]
        plant: Option<usize>,
        #[arg(long)]
        plant_iters: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        #[arg(long)]
        linkage: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        small_cluster_fraction: Option<f64>,
        #[arg(long)]
        fit_target: Option<String>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Append degraded copies of randomly chosen genomes.
    Plant {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 2000)]
        iters: u64,
        /// Provenance CSV (original_id,planted_id,iterations).
        #[arg(long)]
        provenance: Option<PathBuf>,
        #[command(flatten)]
        mutation: MutationArgs,
    },
    /// Generate a synthetic corpus.
    Simulate {
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        genomes: usize,
        #[arg(long, default_value_t = 10_000)]
        length: usize,
        /// markov, uniform or repeats.
        #[arg(long, default_value = "markov")]
        model: String,
        /// Markov order.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Base composition A,C,G,T of the Markov model.
        #[arg(long, value_delimiter = ',', default_value = "0.35,0.15,0.15,0.35")]
        composition: Vec<f64>,
        /// Dirichlet concentration of the transition rows.
        #[arg(long, default_value_t = 4.0)]
        concentration: f64,
        /// Motif length and copies for `repeats`.
        #[arg(long, default_value_t = 29)]
        motif: usize,
        #[arg(long, default_value_t = 100)]
        copies: usize,
    },
}

/// Bad flag values discovered after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<degradex::Error>() {
            return if e.is_data_error() { EXIT_DATA } else { EXIT_INTERNAL };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if degradex::error::io_is_data_error(e) { EXIT_DATA } else { EXIT_INTERNAL };
        }
    }
    EXIT_INTERNAL
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
