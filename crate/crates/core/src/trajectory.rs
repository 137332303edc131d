//! Checkpointed degradation trajectories and their quadratic summaries.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{entropy, hamming, hellinger_probs, levenshtein, ngram_distribution};
use crate::mutation::{degrade_with, MutationConfig};
use crate::rng::{self, SimRng};
use crate::sequence_io::Genome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    /// Entropy of the triplet distribution, in nats.
    TripletEntropy,
    /// Triplet entropy minus its value at checkpoint 0.
    EntropyDelta,
    /// Hellinger distance between order-`n` distributions and the origin's.
    Hellinger(usize),
    Hamming,
    Levenshtein,
}

impl Measure {
    fn is_distance(self) -> bool {
        matches!(self, Measure::Hellinger(_) | Measure::Hamming | Measure::Levenshtein)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::TripletEntropy => f.write_str("triplet_entropy"),
            Measure::EntropyDelta => f.write_str("entropy_delta"),
            Measure::Hellinger(n) => write!(f, "hellinger{n}"),
            Measure::Hamming => f.write_str("hamming"),
            Measure::Levenshtein => f.write_str("levenshtein"),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    /// Accepts the display names plus `hamming_origin`,
    /// `levenshtein_origin`, `hellinger:N` and `hellinger_to_parent(N)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "triplet_entropy" => return Ok(Measure::TripletEntropy),
            "entropy_delta" => return Ok(Measure::EntropyDelta),
            "hamming" | "hamming_origin" => return Ok(Measure::Hamming),
            "levenshtein" | "levenshtein_origin" => return Ok(Measure::Levenshtein),
            _ => {}
        }
        let order = s
            .strip_prefix("hellinger_to_parent(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("hellinger:"))
            .or_else(|| s.strip_prefix("hellinger"));
        match order.map(str::parse::<usize>) {
            Some(Ok(n)) if (1..=crate::metrics::MAX_ORDER).contains(&n) => Ok(Measure::Hellinger(n)),
            _ => Err(Error::InvalidConfig(format!("unknown measure `{s}`"))),
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What distance measures are taken from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// The 0-iteration ancestor of the trajectory (the start itself when the
    /// start was not pre-degraded).
    Parent,
    /// The trajectory's own starting sequence.
    Start,
    /// Another genome, identified by id.
    Reference(String),
}

impl FromStr for Origin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parent" => Ok(Origin::Parent),
            "start" => Ok(Origin::Start),
            _ => match s.strip_prefix("reference:").or_else(|| s.strip_prefix("reference=")) {
                Some(id) if !id.is_empty() => Ok(Origin::Reference(id.to_string())),
                _ => Err(Error::InvalidConfig(format!(
                    "unknown origin `{s}` (expected parent, start or reference:<id>)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    Entropy,
    EntropyDelta,
}

impl FromStr for FitTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" | "triplet_entropy" => Ok(FitTarget::Entropy),
            "entropy_delta" | "delta" => Ok(FitTarget::EntropyDelta),
            _ => Err(Error::InvalidConfig(format!("unknown fit target `{s}`"))),
        }
    }
}

pub const DEFAULT_CHECKPOINTS: [u64; 5] = [0, 250, 500, 1000, 2000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub checkpoints: Vec<u64>,
    pub measures: Vec<Measure>,
    pub origin: Origin,
    pub fit_target: FitTarget,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            measures: vec![Measure::TripletEntropy],
            origin: Origin::Parent,
            fit_target: FitTarget::Entropy,
        }
    }
}

impl TrajectorySpec {
    pub fn validate(&self, config: &MutationConfig) -> Result<()> {
        let last = *self
            .checkpoints
            .last()
            .ok_or_else(|| Error::InvalidConfig("no checkpoints".into()))?;
        crate::mutation::validate_checkpoints(&self.checkpoints, last)?;
        if self.measures.is_empty() {
            return Err(Error::InvalidConfig("no measures requested".into()));
        }
        if self.measures.contains(&Measure::Hamming) && !config.preserves_length() {
            return Err(Error::HammingWithIndels);
        }
        Ok(())
    }

    pub fn iterations(&self) -> u64 {
        self.checkpoints.last().copied().unwrap_or(0)
    }
}

/// Measure values of one genome at every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub genome_id: String,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub measures: Vec<Measure>,
    /// `values[m][c]` is measure `m` at checkpoint `c`.
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn series(&self, measure: Measure) -> Option<&[f64]> {
        let i = self.measures.iter().position(|&m| m == measure)?;
        Some(&self.values[i])
    }
}

/// Sequences distance measures may be taken from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Anchors<'a> {
    /// Ancestor of a pre-degraded start.
    pub parent: Option<&'a [u8]>,
    pub reference: Option<&'a Genome>,
}

fn triplet_entropy(seq: &[u8]) -> Result<f64> {
    Ok(entropy(&ngram_distribution(seq, 3)?))
}

/// Evaluates distance measures against one fixed origin sequence.
struct OriginProbe<'a> {
    origin: &'a [u8],
    hellinger: Vec<(usize, Vec<f64>)>,
}

impl<'a> OriginProbe<'a> {
    fn new(origin: &'a [u8], measures: &[Measure]) -> Result<Self> {
        let hellinger = measures
            .iter()
            .filter_map(|m| match m {
                Measure::Hellinger(n) => Some(*n),
                _ => None,
            })
            .map(|n| Ok((n, ngram_distribution(origin, n)?.probabilities())))
            .collect::<Result<_>>()?;
        Ok(OriginProbe { origin, hellinger })
    }

    fn distance(&self, measure: Measure, seq: &[u8]) -> Result<f64> {
        Ok(match measure {
            Measure::Hamming => hamming(seq, self.origin)? as f64,
            Measure::Levenshtein => levenshtein(seq, self.origin) as f64,
            Measure::Hellinger(n) => {
                let reference = &self.hellinger.iter().find(|(k, _)| *k == n).expect("prepared order").1;
                hellinger_probs(&ngram_distribution(seq, n)?.probabilities(), reference)
            }
            _ => unreachable!("not a distance"),
        })
    }
}

/// Degrades `start` and evaluates every measure at every checkpoint.
///
/// Distances are incremental: the checkpoint-0 distance to the origin is
/// subtracted, so every distance curve starts at 0.
pub fn run_trajectory(
    start: &Genome,
    anchors: Anchors<'_>,
    config: &MutationConfig,
    spec: &TrajectorySpec,
    seed: u64,
) -> Result<Trajectory> {
    spec.validate(config)?;
    let origin: &[u8] = match &spec.origin {
        Origin::Parent => anchors.parent.unwrap_or(start.bases()),
        Origin::Start => start.bases(),
        Origin::Reference(id) => match anchors.reference {
            Some(r) if &r.id == id => r.bases(),
            _ => return Err(Error::UnknownGenome(id.clone())),
        },
    };
    let probe = if spec.measures.iter().any(|m| m.is_distance()) {
        Some(OriginProbe::new(origin, &spec.measures)?)
    } else {
        None
    };
    let mut values = vec![Vec::with_capacity(spec.checkpoints.len()); spec.measures.len()];
    let mut rng: SimRng = rng::rng_from_seed(seed);
    let mut base_entropy = None;
    degrade_with(
        start.bases(),
        config,
        spec.iterations(),
        &spec.checkpoints,
        &mut rng,
        |_, seq| {
            let needs_entropy = spec
                .measures
                .iter()
                .any(|m| matches!(m, Measure::TripletEntropy | Measure::EntropyDelta));
            let h = if needs_entropy { Some(triplet_entropy(seq)?) } else { None };
            if base_entropy.is_none() {
                base_entropy = h;
            }
            for (m, out) in spec.measures.iter().zip(values.iter_mut()) {
                let v = match m {
                    Measure::TripletEntropy => h.expect("computed"),
                    Measure::EntropyDelta => h.expect("computed") - base_entropy.expect("computed"),
                    d => probe.as_ref().expect("distance probe").distance(*d, seq)?,
                };
                out.push(v);
            }
            Ok(())
        },
        |_, _| {},
    )?;
    for (m, series) in spec.measures.iter().zip(values.iter_mut()) {
        if m.is_distance() {
            let first = series[0];
            for v in series.iter_mut() {
                *v -= first;
            }
        }
    }
    Ok(Trajectory {
        genome_id: start.id.clone(),
        seed,
        checkpoints: spec.checkpoints.clone(),
        measures: spec.measures.clone(),
        values,
    })
}

/// `value ≈ c0 + c1·t + c2·t²` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `1 - SS_res / SS_tot`; defined as 1 for flat data.
    pub r2: f64,
}

impl QuadraticFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.c0 + t * (self.c1 + t * self.c2)
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Ordinary least squares on `{1, t, t²}`.
///
/// The abscissa is mapped to `[0, 1]` and the response centred before the
/// normal equations are solved; coefficients are reported in original units.
pub fn quadratic_fit(ts: &[f64], ys: &[f64]) -> Result<QuadraticFit> {
    if ts.len() != ys.len() {
        return Err(Error::InvalidConfig(format!("{} abscissae but {} values", ts.len(), ys.len())));
    }
    let mut distinct: Vec<f64> = ts.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateDesign(distinct.len()));
    }
    let t0 = distinct[0];
    let width = distinct[distinct.len() - 1] - t0;
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;

    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&t, &y) in ts.iter().zip(ys) {
        let s = (t - t0) / width;
        let row = [1.0, s, s * s];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * (y - mean);
        }
    }
    let [a, b, c] = solve3(ata, aty).ok_or(Error::DegenerateDesign(distinct.len()))?;

    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&t, &y) in ts.iter().zip(ys) {
        let s = (t - t0) / width;
        let r = (y - mean) - (a + s * (b + s * c));
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
    }
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };

    // y = mean + a + b·s + c·s², s = (t - t0)/w
    let c2 = c / (width * width);
    let c1 = b / width - 2.0 * c * t0 / (width * width);
    let c0 = mean + a - b * t0 / width + c * t0 * t0 / (width * width);
    Ok(QuadraticFit { c0, c1, c2, r2 })
}

/// One genome's failure inside a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFailure {
    pub genome_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub genomes: usize,
    pub min_r2: f64,
    /// 1st percentile of R² (99% of fits are at least this good).
    pub p01_r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub trajectories: Vec<Trajectory>,
    pub fits: Vec<(String, QuadraticFit)>,
    pub failures: Vec<GenomeFailure>,
    pub summary: Option<FitSummary>,
}

/// Runs one trajectory per genome in parallel and fits a quadratic to each
/// genome's triplet-entropy curve.
///
/// Genome `g` uses the stream seeded by `derive_seed(master_seed, g.id)`, so
/// outputs do not depend on corpus order or thread count. Results are sorted
/// by genome id. Failures of individual genomes are collected, not fatal.
pub fn batch_run(corpus: &[Genome], config: &MutationConfig, spec: &TrajectorySpec, master_seed: u64) -> Result<BatchResult> {
    if corpus.is_empty() {
        return Err(Error::CorpusEmpty);
    }
    let mut spec = spec.clone();
    if !spec.measures.contains(&Measure::TripletEntropy) {
        spec.measures.push(Measure::TripletEntropy);
    }
    spec.validate(config)?;
    let reference = match &spec.origin {
        Origin::Reference(id) => Some(
            corpus
                .iter()
                .find(|g| &g.id == id)
                .ok_or_else(|| Error::UnknownGenome(id.clone()))?,
        ),
        _ => None,
    };
    let anchors = Anchors { parent: None, reference };
    let ts: Vec<f64> = spec.checkpoints.iter().map(|&t| t as f64).collect();

    let mut order: Vec<&Genome> = corpus.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.bases().cmp(b.bases())));
    let outcomes: Vec<Result<(Trajectory, QuadraticFit), (String, Error)>> = order
        .par_iter()
        .map(|g| {
            let seed = rng::derive_seed(master_seed, &g.id);
            let run = || -> Result<(Trajectory, QuadraticFit)> {
                let traj = run_trajectory(g, anchors, config, &spec, seed)?;
                let h = traj.series(Measure::TripletEntropy).expect("entropy measured");
                let ys: Vec<f64> = match spec.fit_target {
                    FitTarget::Entropy => h.to_vec(),
                    FitTarget::EntropyDelta => h.iter().map(|v| v - h[0]).collect(),
                };
                let fit = quadratic_fit(&ts, &ys)?;
                Ok((traj, fit))
            };
            run().map_err(|e| (g.id.clone(), e))
        })
        .collect();

    let mut result = BatchResult {
        trajectories: Vec::new(),
        fits: Vec::new(),
        failures: Vec::new(),
        summary: None,
    };
    for outcome in outcomes {
        match outcome {
            Ok((traj, fit)) => {
                result.fits.push((traj.genome_id.clone(), fit));
                result.trajectories.push(traj);
            }
            Err((genome_id, e)) => {
                log::warn!("trajectory for {genome_id} failed: {e}");
                result.failures.push(GenomeFailure {
                    genome_id,
                    message: e.to_string(),
                })
            }
        }
    }
    result.summary = fit_summary(&result.fits);
    Ok(result)
}

pub fn fit_summary(fits: &[(String, QuadraticFit)]) -> Option<FitSummary> {
    if fits.is_empty() {
        return None;
    }
    let mut r2: Vec<f64> = fits.iter().map(|(_, f)| f.r2).collect();
    r2.sort_by(f64::total_cmp);
    let k = ((0.01 * r2.len() as f64).ceil() as usize).max(1);
    Some(FitSummary {
        genomes: r2.len(),
        min_r2: r2[0],
        p01_r2: r2[k - 1],
    })
}

/// Long-format CSV: `genome_id,checkpoint,measure,value`.
pub fn write_trajectories_csv<W: Write>(out: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["genome_id", "checkpoint", "measure", "value"])?;
    for t in trajectories {
        for (m, series) in t.measures.iter().zip(&t.values) {
            for (c, v) in t.checkpoints.iter().zip(series) {
                w.write_record([t.genome_id.as_str(), &c.to_string(), &m.to_string(), &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `genome_id,c0,c1,c2,r2`.
pub fn write_fits_csv<W: Write>(out: W, fits: &[(String, QuadraticFit)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["genome_id", "c0", "c1", "c2", "r2"])?;
    for (id, f) in fits {
        w.write_record([id.as_str(), &f.c0.to_string(), &f.c1.to_string(), &f.c2.to_string(), &f.r2.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `genome_id,c0,c1,c2,r2` CSV as written by [`write_fits_csv`].
pub fn read_fits_csv<R: std::io::Read>(input: R) -> Result<Vec<(String, QuadraticFit)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidConfig(format!("fits row {}: bad column {}", line + 2, i + 1)))
        };
        let fit = QuadraticFit {
            c0: field(1)?,
            c1: field(2)?,
            c2: field(3)?,
            r2: field(4)?,
        };
        out.push((rec.get(0).unwrap_or_default().to_string(), fit));
    }
    Ok(out)
}

/// Plot data: `x,y,series` with x the iteration and one series per genome.
pub fn write_plot_csv<W: Write>(out: W, trajectories: &[Trajectory], measure: Measure) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "series"])?;
    for t in trajectories {
        if let Some(series) = t.series(measure) {
            for (c, v) in t.checkpoints.iter().zip(series) {
                w.write_record([&c.to_string(), &v.to_string(), t.genome_id.as_str()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::synth;

    fn genome(id: &str, len: usize, seed: u64) -> Genome {
        Genome::new(id, synth::uniform_iid(len, &mut rng_from_seed(seed))).unwrap()
    }

    #[test]
    fn measure_and_origin_names() {
        for m in [Measure::TripletEntropy, Measure::EntropyDelta, Measure::Hellinger(4), Measure::Hamming, Measure::Levenshtein] {
            assert_eq!(m.to_string().parse::<Measure>().unwrap(), m);
        }
        assert_eq!("hellinger_to_parent(2)".parse::<Measure>().unwrap(), Measure::Hellinger(2));
        assert_eq!("levenshtein_origin".parse::<Measure>().unwrap(), Measure::Levenshtein);
        assert!("hellinger0".parse::<Measure>().is_err());
        assert_eq!("reference:NC_1".parse::<Origin>().unwrap(), Origin::Reference("NC_1".into()));
        assert!("elsewhere".parse::<Origin>().is_err());
    }

    #[test]
    fn zero_rate_trajectory_is_flat() {
        let g = genome("g", 2000, 1);
        let spec = TrajectorySpec {
            checkpoints: vec![0, 10, 20],
            measures: vec![Measure::TripletEntropy, Measure::EntropyDelta, Measure::Hellinger(2), Measure::Hamming, Measure::Levenshtein],
            ..TrajectorySpec::default()
        };
        let t = run_trajectory(&g, Anchors::default(), &MutationConfig::zero(), &spec, 3).unwrap();
        let h = t.series(Measure::TripletEntropy).unwrap();
        assert!(h.iter().all(|&v| v == h[0]));
        for m in [Measure::EntropyDelta, Measure::Hellinger(2), Measure::Hamming, Measure::Levenshtein] {
            assert!(t.series(m).unwrap().iter().all(|&v| v == 0.0), "{m}");
        }
    }

    #[test]
    fn origins() {
        let parent = genome("p", 1500, 2);
        let start = Genome::new(
            "s",
            crate::mutation::degrade_to(parent.bases(), &MutationConfig::default(), 300, &mut rng_from_seed(4)).unwrap(),
        )
        .unwrap();
        let reference = genome("r", 1500, 5);
        let base = TrajectorySpec {
            checkpoints: vec![0, 50, 100],
            measures: vec![Measure::Hamming],
            ..TrajectorySpec::default()
        };
        let anchors = Anchors {
            parent: Some(parent.bases()),
            reference: Some(&reference),
        };
        for origin in [Origin::Parent, Origin::Start, Origin::Reference("r".into())] {
            let spec = TrajectorySpec { origin, ..base.clone() };
            let t = run_trajectory(&start, anchors, &MutationConfig::default(), &spec, 9).unwrap();
            assert_eq!(t.values[0][0], 0.0);
        }
        let spec = TrajectorySpec {
            origin: Origin::Reference("missing".into()),
            ..base.clone()
        };
        assert!(matches!(run_trajectory(&start, anchors, &MutationConfig::default(), &spec, 9), Err(Error::UnknownGenome(_))));
        let indels = MutationConfig {
            p_ins: 1e-4,
            ..MutationConfig::default()
        };
        assert!(matches!(run_trajectory(&start, anchors, &indels, &base, 9), Err(Error::HammingWithIndels)));
    }

    #[test]
    fn exact_quadratic_is_recovered() {
        let ts = [0.0, 250.0, 500.0, 1000.0, 2000.0];
        let ys: Vec<f64> = ts.iter().map(|t| 3.9 + 2.5e-4 * t - 6.0e-8 * t * t).collect();
        let f = quadratic_fit(&ts, &ys).unwrap();
        assert!((f.c0 - 3.9).abs() < 1e-9);
        assert!((f.c1 - 2.5e-4).abs() < 1e-9);
        assert!((f.c2 + 6.0e-8).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_data_convention() {
        let f = quadratic_fit(&[0.0, 1.0, 2.0, 3.0], &[4.0; 4]).unwrap();
        assert_eq!((f.c0, f.c1, f.c2, f.r2), (4.0, 0.0, 0.0, 1.0));
        assert!(matches!(quadratic_fit(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateDesign(2))));
        assert!(quadratic_fit(&[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn batch_is_order_independent() {
        let corpus: Vec<Genome> = (0..6).map(|i| genome(&format!("g{i}"), 1500, i)).collect();
        let spec = TrajectorySpec {
            checkpoints: vec![0, 20, 40, 80],
            ..TrajectorySpec::default()
        };
        let cfg = MutationConfig::snp_only(5e-3);
        let a = batch_run(&corpus, &cfg, &spec, 42).unwrap();
        let mut reversed = corpus.clone();
        reversed.reverse();
        let b = batch_run(&reversed, &cfg, &spec, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fits.len(), 6);
        let single = batch_run(&corpus[..1], &cfg, &spec, 42).unwrap();
        let direct = run_trajectory(&corpus[0], Anchors::default(), &cfg, &spec, rng::derive_seed(42, "g0")).unwrap();
        assert_eq!(single.trajectories[0], direct);
        let ts: Vec<f64> = spec.checkpoints.iter().map(|&t| t as f64).collect();
        assert_eq!(single.fits[0].1, quadratic_fit(&ts, direct.series(Measure::TripletEntropy).unwrap()).unwrap());
        assert!(matches!(batch_run(&[], &cfg, &spec, 1), Err(Error::CorpusEmpty)));
    }

    #[test]
    fn batch_records_failures() {
        let corpus = vec![genome("ok", 500, 1), Genome::new("tiny", b"AC".to_vec()).unwrap()];
        let r = batch_run(&corpus, &MutationConfig::default(), &TrajectorySpec::default(), 1).unwrap();
        assert_eq!(r.fits.len(), 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].genome_id, "tiny");
    }
}
