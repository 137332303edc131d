//! Degradation-based quality measurement for genome sequence databases.
//!
//! Genomes are degraded by repeated simulated mutation, and the way their
//! n-gram statistics move toward maximal entropy is used as a quality
//! signal. The crate is organised bottom-up:
//!
//! * [`sequence_io`]: FASTA parsing, alphabet sanitising, reverse complement.
//! * [`mutation`]: seeded SNP/indel/structural mutation and iterated degradation.
//! * [`metrics`]: Hamming/Levenshtein distances, n-gram distributions,
//!   transition matrices, Hellinger distance, entropy and null thresholds.
//! * [`structure`]: repeated-window and reverse-complement palindrome counts.
//! * [`trajectory`]: checkpointed metric trajectories and quadratic fits.
//! * [`cluster`]: standardisation, hierarchical clustering, MDS, cross-tabs.
//! * [`pipeline`]: outlier planting, the end-to-end run and its manifest.

pub mod cluster;
pub mod error;
pub mod metrics;
pub mod mutation;
pub mod pipeline;
pub mod rng;
pub mod sequence_io;
pub mod structure;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
pub use sequence_io::Genome;
