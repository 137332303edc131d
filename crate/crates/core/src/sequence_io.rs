//! FASTA input/output and the nucleotide alphabet.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// The canonical alphabet, in index order.
pub const BASES: [u8; 4] = *b"ACGT";

/// Index of a canonical base (A=0, C=1, G=2, T=3).
#[inline]
pub fn base_index(base: u8) -> Option<usize> {
    match base {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

#[inline]
pub fn complement(base: u8) -> u8 {
    match base {
        b'A' => b'T',
        b'T' => b'A',
        b'C' => b'G',
        b'G' => b'C',
        other => other,
    }
}

pub fn reverse_complement(seq: &[u8]) -> Vec<u8> {
    seq.iter().rev().map(|&b| complement(b)).collect()
}

/// An identified base string over `{A,C,G,T}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub id: String,
    pub description: String,
    bases: Vec<u8>,
}

impl Genome {
    /// Builds a genome from already-canonical bases.
    pub fn new(id: impl Into<String>, bases: Vec<u8>) -> Result<Self> {
        let id = id.into();
        if bases.is_empty() {
            return Err(Error::EmptyRecord(id));
        }
        if let Some((position, &b)) = bases.iter().enumerate().find(|(_, &b)| base_index(b).is_none()) {
            return Err(Error::AmbiguousBase {
                position,
                symbol: b as char,
            });
        }
        Ok(Genome {
            id,
            description: String::new(),
            bases,
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// Caller guarantees `bases` is non-empty and canonical.
    pub(crate) fn from_canonical(id: String, bases: Vec<u8>) -> Self {
        debug_assert!(!bases.is_empty());
        debug_assert!(bases.iter().all(|&b| base_index(b).is_some()));
        Genome {
            id,
            description: String::new(),
            bases,
        }
    }

    pub fn bases(&self) -> &[u8] {
        &self.bases
    }

    pub fn into_bases(self) -> Vec<u8> {
        self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// What to do with symbols outside `{A,C,G,T}` (after uppercasing).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguityPolicy {
    Reject,
    Drop,
    /// Replace each ambiguous symbol with a uniform base drawn from a
    /// generator seeded with this value.
    Replace { seed: u64 },
}

impl fmt::Display for AmbiguityPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmbiguityPolicy::Reject => f.write_str("reject"),
            AmbiguityPolicy::Drop => f.write_str("drop"),
            AmbiguityPolicy::Replace { .. } => f.write_str("replace"),
        }
    }
}

/// Parses `reject`, `drop` or `replace`; `replace` gets seed 0 until the
/// caller supplies the run seed with [`AmbiguityPolicy::with_seed`].
impl FromStr for AmbiguityPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(AmbiguityPolicy::Reject),
            "drop" => Ok(AmbiguityPolicy::Drop),
            "replace" | "random-replace" => Ok(AmbiguityPolicy::Replace { seed: 0 }),
            other => Err(Error::InvalidConfig(format!("unknown ambiguity policy `{other}`"))),
        }
    }
}

impl AmbiguityPolicy {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            AmbiguityPolicy::Replace { .. } => AmbiguityPolicy::Replace { seed },
            other => other,
        }
    }
}

/// Uppercases `raw` and resolves non-ACGT symbols according to `policy`.
/// Whitespace is always removed.
pub fn sanitize(raw: &[u8], policy: AmbiguityPolicy) -> Result<Vec<u8>> {
    let mut replacer = match policy {
        AmbiguityPolicy::Replace { seed } => Some(rng::rng_from_seed(seed)),
        _ => None,
    };
    let mut out = Vec::with_capacity(raw.len());
    for (position, &b) in raw.iter().filter(|b| !b.is_ascii_whitespace()).enumerate() {
        let upper = b.to_ascii_uppercase();
        if base_index(upper).is_some() {
            out.push(upper);
            continue;
        }
        match (&policy, replacer.as_mut()) {
            (AmbiguityPolicy::Reject, _) => {
                return Err(Error::AmbiguousBase {
                    position,
                    symbol: b as char,
                })
            }
            (AmbiguityPolicy::Drop, _) => {}
            (_, Some(r)) => out.push(BASES[r.random_range(0..4)]),
            (_, None) => unreachable!(),
        }
    }
    Ok(out)
}

/// Reads every record of a FASTA stream.
///
/// Under [`AmbiguityPolicy::Replace`] each record gets its own replacement
/// stream keyed by the record id, so records do not influence each other.
pub fn parse_fasta<R: BufRead>(mut reader: R, policy: AmbiguityPolicy) -> Result<Vec<Genome>> {
    let mut genomes = Vec::new();
    let mut current: Option<(String, String, Vec<u8>)> = None;
    let mut line = Vec::new();
    let mut line_no = 0usize;
    let mut saw_content = false;

    let finish = |(id, description, raw): (String, String, Vec<u8>)| -> Result<Genome> {
        let record_policy = match policy {
            AmbiguityPolicy::Replace { seed } => AmbiguityPolicy::Replace {
                seed: rng::derive_seed(seed, &id),
            },
            p => p,
        };
        let bases = sanitize(&raw, record_policy)?;
        if bases.is_empty() {
            return Err(Error::EmptyRecord(id));
        }
        Ok(Genome::from_canonical(id, bases).with_description(description))
    };

    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        line_no += 1;
        let trimmed = line.trim_ascii();
        if trimmed.is_empty() {
            continue;
        }
        saw_content = true;
        if let Some(header) = trimmed.strip_prefix(b">") {
            if let Some(done) = current.take() {
                genomes.push(finish(done)?);
            }
            let header = String::from_utf8_lossy(header);
            let header = header.trim();
            let (id, description) = match header.split_once(char::is_whitespace) {
                Some((id, rest)) => (id.to_string(), rest.trim().to_string()),
                None => (header.to_string(), String::new()),
            };
            current = Some((id, description, Vec::new()));
        } else {
            match current.as_mut() {
                Some((_, _, raw)) => raw.extend_from_slice(trimmed),
                None => return Err(Error::MalformedHeader { line: line_no }),
            }
        }
    }
    if let Some(done) = current.take() {
        genomes.push(finish(done)?);
    }
    if !saw_content {
        return Err(Error::EmptyFasta);
    }
    Ok(genomes)
}

pub fn read_fasta_file(path: &std::path::Path, policy: AmbiguityPolicy) -> Result<Vec<Genome>> {
    let file = std::fs::File::open(path)?;
    parse_fasta(std::io::BufReader::new(file), policy)
}

/// Writes genomes as FASTA, wrapping sequence lines at `width` bases.
pub fn write_fasta<W: Write>(mut out: W, genomes: &[Genome], width: usize) -> Result<()> {
    let width = width.max(1);
    for g in genomes {
        if g.description.is_empty() {
            writeln!(out, ">{}", g.id)?;
        } else {
            writeln!(out, ">{} {}", g.id, g.description)?;
        }
        for chunk in g.bases().chunks(width) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_fasta_file(path: &std::path::Path, genomes: &[Genome], width: usize) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_fasta(&mut w, genomes, width)?;
    w.flush()?;
    Ok(())
}
