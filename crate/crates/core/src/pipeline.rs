//! End-to-end corpus analysis: optional outlier planting, degradation
//! trajectories, quadratic summaries, clustering and the outlier report.
//!
//! Every artifact is rendered in memory first, so a run's output tree is a
//! pure function of the corpus bytes and the [`RunConfig`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{
    self, ClusterModel, ClusterTree, CrossTab, Embedding, FeatureMatrix, KSelection, Linkage,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::mutation::{self, MutationConfig};
use crate::rng;
use crate::sequence_io::{self, AmbiguityPolicy, Genome};
use crate::trajectory::{self, BatchResult, FitTarget, Measure, Origin, QuadraticFit, TrajectorySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantSpec {
    pub count: usize,
    pub iterations: u64,
    /// Appended to the source id to form the planted id.
    pub suffix: String,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            count: 0,
            iterations: 2000,
            suffix: "_degraded".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Linkage for the clustering of quadratic coefficients.
    pub linkage: Linkage,
    /// Fixed cluster count; chosen by Calinski–Harabasz when absent.
    pub k: Option<usize>,
    /// Upper end of the automatic search range `2..=k_max`.
    pub k_max: usize,
    /// Clusters smaller than this fraction of the corpus are flagged.
    pub small_cluster_fraction: f64,
    /// Also cluster the triplet distributions and cross-tabulate.
    pub triplets: bool,
    pub triplet_linkage: Linkage,
    pub triplet_k: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            linkage: Linkage::WardD,
            k: None,
            k_max: 20,
            small_cluster_fraction: 0.02,
            triplets: true,
            triplet_linkage: Linkage::Complete,
            triplet_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub corpus: PathBuf,
    /// Not part of the manifest, so reruns into other directories match.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub seed: u64,
    pub ambiguous: String,
    pub mutation: MutationConfig,
    pub trajectory: TrajectorySpec,
    pub clustering: ClusterConfig,
    pub planting: PlantSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            output_dir: PathBuf::from("degradex-out"),
            seed: 0,
            ambiguous: "replace".into(),
            mutation: MutationConfig::default(),
            trajectory: TrajectorySpec::default(),
            clustering: ClusterConfig::default(),
            planting: PlantSpec::default(),
        }
    }
}

/// Keys accepted by [`RunConfig::set`] besides the mutation keys.
pub const RUN_KEYS: [&str; 17] = [
    "corpus",
    "output",
    "seed",
    "ambiguous",
    "checkpoints",
    "measures",
    "origin",
    "fit_target",
    "linkage",
    "k",
    "k_max",
    "small_cluster_fraction",
    "triplets",
    "triplet_linkage",
    "triplet_k",
    "plant_count",
    "plant_iterations",
];

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_k(value: &str) -> Result<Option<usize>> {
    match value {
        "auto" | "" => Ok(None),
        v => v
            .parse()
            .map(Some)
            .map_err(|e| Error::InvalidConfig(format!("k = {v}: {e}"))),
    }
}

impl RunConfig {
    pub fn ambiguity_policy(&self) -> Result<AmbiguityPolicy> {
        Ok(self
            .ambiguous
            .parse::<AmbiguityPolicy>()?
            .with_seed(rng::derive_seed(self.seed, "ambiguity")))
    }

    pub fn validate(&self) -> Result<()> {
        self.mutation.validate()?;
        self.trajectory.validate(&self.mutation)?;
        self.ambiguity_policy()?;
        let f = self.clustering.small_cluster_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!("small_cluster_fraction {f} outside (0, 1)")));
        }
        if self.clustering.k_max < 2 {
            return Err(Error::InvalidConfig("k_max must be at least 2".into()));
        }
        Ok(())
    }

    /// Sets one field from a textual key. Mutation keys may be given bare
    /// (`p_snp`) or prefixed (`mutation.p_snp`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |e: &dyn fmt::Display| Error::InvalidConfig(format!("{key} = {value}: {e}"));
        match key {
            "corpus" => self.corpus = PathBuf::from(value),
            "output" | "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "ambiguous" => {
                value.parse::<AmbiguityPolicy>()?;
                self.ambiguous = value.to_string();
            }
            "checkpoints" => self.trajectory.checkpoints = parse_list(value).map_err(|e| bad(&e))?,
            "measures" => self.trajectory.measures = parse_list::<Measure>(value)?,
            "origin" => self.trajectory.origin = value.parse::<Origin>()?,
            "fit_target" => self.trajectory.fit_target = value.parse::<FitTarget>()?,
            "linkage" => self.clustering.linkage = value.parse()?,
            "k" => self.clustering.k = parse_k(value)?,
            "k_max" => self.clustering.k_max = value.parse().map_err(|e| bad(&e))?,
            "small_cluster_fraction" => {
                self.clustering.small_cluster_fraction = value.parse().map_err(|e| bad(&e))?
            }
            "triplets" => self.clustering.triplets = value.parse().map_err(|e| bad(&e))?,
            "triplet_linkage" => self.clustering.triplet_linkage = value.parse()?,
            "triplet_k" => self.clustering.triplet_k = parse_k(value)?,
            "plant_count" => self.planting.count = value.parse().map_err(|e| bad(&e))?,
            "plant_iterations" => self.planting.iterations = value.parse().map_err(|e| bad(&e))?,
            "plant_suffix" => self.planting.suffix = value.to_string(),
            other => {
                let field = other.strip_prefix("mutation.").unwrap_or(other);
                if field == "seed" || !mutation::CONFIG_KEYS.contains(&field) {
                    return Err(Error::InvalidConfig(format!("unknown configuration key `{other}`")));
                }
                self.mutation.set(field, value)?;
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        pairs.iter().try_for_each(|(k, v)| self.set(k, v))
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub original_id: String,
    pub planted_id: String,
    pub iterations: u64,
}

/// Appends `spec.count` degraded copies of genomes chosen uniformly without
/// replacement. Selection and degradation depend only on the seed and the
/// genome ids, not on corpus order.
pub fn plant_outliers(
    corpus: &[Genome],
    spec: &PlantSpec,
    config: &MutationConfig,
    seed: u64,
) -> Result<(Vec<Genome>, Vec<Provenance>)> {
    if spec.count > corpus.len() {
        return Err(Error::CountTooLarge {
            count: spec.count,
            size: corpus.len(),
        });
    }
    let mut out = corpus.to_vec();
    if spec.count == 0 {
        return Ok((out, Vec::new()));
    }
    config.validate()?;
    let mut by_id: Vec<&Genome> = corpus.iter().collect();
    by_id.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.bases().cmp(b.bases())));
    let mut picks = index::sample(&mut rng::stream(seed, "plant-select"), by_id.len(), spec.count).into_vec();
    picks.sort_unstable();

    let mut taken: HashSet<String> = corpus.iter().map(|g| g.id.clone()).collect();
    let mut provenance = Vec::with_capacity(picks.len());
    for &i in &picks {
        let original = &by_id[i].id;
        let base = format!("{original}{}", spec.suffix);
        let mut planted = base.clone();
        let mut j = 2;
        while taken.contains(&planted) {
            planted = format!("{base}{j}");
            j += 1;
        }
        taken.insert(planted.clone());
        provenance.push(Provenance {
            original_id: original.clone(),
            planted_id: planted,
            iterations: spec.iterations,
        });
    }
    let degraded: Vec<Result<Genome>> = picks
        .par_iter()
        .zip(&provenance)
        .map(|(&i, p)| {
            let mut rng = rng::stream(seed, &format!("plant:{}", p.planted_id));
            let bases = mutation::degrade_to(by_id[i].bases(), config, spec.iterations, &mut rng)?;
            Ok(Genome::from_canonical(p.planted_id.clone(), bases)
                .with_description(format!("degraded copy of {} ({} iterations)", p.original_id, p.iterations)))
        })
        .collect();
    for g in degraded {
        out.push(g?);
    }
    Ok((out, provenance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Bulk,
    SmallCluster,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Bulk => "bulk",
            Flag::SmallCluster => "small-cluster",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeReport {
    pub genome_id: String,
    pub cluster: usize,
    pub cluster_size: usize,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub r2: f64,
    pub flag: Flag,
    /// Source genome when this one was planted.
    pub planted_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub small: bool,
    /// Distance from this centroid to the closest other centroid.
    pub nearest_centroid_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub small_cluster_fraction: f64,
    /// Clusters with fewer members than this are small.
    pub size_threshold: f64,
    pub genomes: usize,
    pub clusters: Vec<ClusterSummary>,
    /// Cluster size → number of clusters of that size.
    pub size_histogram: BTreeMap<usize, usize>,
    pub flagged: Vec<String>,
    pub rows: Vec<GenomeReport>,
}

impl OutlierReport {
    pub fn row(&self, id: &str) -> Option<&GenomeReport> {
        self.rows.iter().find(|r| r.genome_id == id)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["genome_id", "cluster", "cluster_size", "c0", "c1", "c2", "r2", "flag", "planted_from"])?;
        for r in &self.rows {
            w.write_record([
                r.genome_id.clone(),
                r.cluster.to_string(),
                r.cluster_size.to_string(),
                r.c0.to_string(),
                r.c1.to_string(),
                r.c2.to_string(),
                r.r2.to_string(),
                r.flag.to_string(),
                r.planted_from.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flags members of clusters smaller than `threshold × n`. Flags depend only
/// on cluster sizes; provenance is carried alongside, never used.
pub fn flag_outliers(
    model: &ClusterModel,
    fits: &[(String, QuadraticFit)],
    threshold: f64,
    centroids: &[Vec<f64>],
    provenance: &[Provenance],
) -> OutlierReport {
    let n = model.ids.len();
    let size_threshold = threshold * n as f64;
    let clusters: Vec<ClusterSummary> = model
        .sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| ClusterSummary {
            cluster: i + 1,
            size,
            small: (size as f64) < size_threshold && model.k() > 1,
            nearest_centroid_distance: centroids
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i && i < centroids.len())
                .map(|(_, c)| {
                    c.iter()
                        .zip(&centroids[i])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .min_by(f64::total_cmp),
        })
        .collect();
    let mut size_histogram = BTreeMap::new();
    for &s in &model.sizes {
        *size_histogram.entry(s).or_insert(0) += 1;
    }
    let fit_of: BTreeMap<&str, &QuadraticFit> = fits.iter().map(|(id, f)| (id.as_str(), f)).collect();
    let planted_from: BTreeMap<&str, &str> = provenance
        .iter()
        .map(|p| (p.planted_id.as_str(), p.original_id.as_str()))
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for (id, &label) in model.ids.iter().zip(&model.labels) {
        let summary = &clusters[label - 1];
        let flag = if summary.small { Flag::SmallCluster } else { Flag::Bulk };
        if flag == Flag::SmallCluster {
            flagged.push(id.clone());
        }
        let fit = fit_of.get(id.as_str());
        rows.push(GenomeReport {
            genome_id: id.clone(),
            cluster: label,
            cluster_size: summary.size,
            c0: fit.map_or(f64::NAN, |f| f.c0),
            c1: fit.map_or(f64::NAN, |f| f.c1),
            c2: fit.map_or(f64::NAN, |f| f.c2),
            r2: fit.map_or(f64::NAN, |f| f.r2),
            flag,
            planted_from: planted_from.get(id.as_str()).map(|s| s.to_string()),
        });
    }
    OutlierReport {
        small_cluster_fraction: threshold,
        size_threshold,
        genomes: n,
        clusters,
        size_histogram,
        flagged,
        rows,
    }
}

/// One clustering of one feature set and everything derived from it.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub raw: FeatureMatrix,
    pub standardized: FeatureMatrix,
    pub tree: ClusterTree,
    pub selection: Option<KSelection>,
    pub model: ClusterModel,
    pub centroids: Vec<Vec<f64>>,
    /// Absent when there are fewer than three clusters.
    pub embedding: Option<Embedding>,
}

/// Standardises `raw`, clusters it, and cuts at `k` or, when `k` is absent,
/// at the Calinski–Harabasz choice within `k_range` (clipped to `2..=n-1`).
impl Clustering {
    /// Variance explained by the cut for every non-constant feature.
    pub fn variance_explained(&self) -> Result<Vec<(String, Option<f64>)>> {
        let s = &self.standardized;
        let keep: Vec<usize> = (0..s.columns.len()).filter(|j| !s.constant_columns.contains(j)).collect();
        let values: Vec<Vec<f64>> = s.values.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
        let fractions = if keep.is_empty() {
            Vec::new()
        } else {
            cluster::variance_explained(&values, &self.model.labels)?
        };
        Ok(s.columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.clone(), keep.iter().position(|&x| x == j).map(|i| fractions[i])))
            .collect())
    }
}

/// `feature,fraction`, with `NA` for constant features.
pub fn write_variance_explained<W: std::io::Write>(out: W, rows: &[(String, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "fraction"])?;
    for (c, v) in rows {
        w.write_record([c.clone(), v.map_or("NA".to_string(), |v| v.to_string())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cluster_features(raw: FeatureMatrix, linkage: Linkage, k: Option<usize>, k_range: (usize, usize)) -> Result<Clustering> {
    let standardized = cluster::standardize(&raw).map_err(|e| e.at_stage("standardize"))?;
    let tree = cluster::hclust(&standardized, linkage).map_err(|e| e.at_stage("hclust"))?;
    let n = standardized.rows();
    let (k, selection) = match k {
        Some(k) => (k, None),
        None if n < 3 => (1, None),
        None => {
            let (lo, hi) = (k_range.0.max(2), k_range.1.min(n - 1));
            let sel = cluster::select_k(&tree, &standardized, lo, hi).map_err(|e| e.at_stage("select_k"))?;
            (sel.k, Some(sel))
        }
    };
    let model = cluster::cut_tree(&tree, k).map_err(|e| e.at_stage("cut_tree"))?;
    let centroids = cluster::centroids(&standardized.values, &model.labels);
    let embedding = if k >= 3 {
        let d = cluster::euclidean_distances(&centroids);
        Some(cluster::classical_mds(&d, k, 2).map_err(|e| e.at_stage("mds"))?)
    } else {
        None
    };
    Ok(Clustering {
        raw,
        standardized,
        tree,
        selection,
        model,
        centroids,
        embedding,
    })
}

/// Quadratic coefficients as a feature matrix, one row per fitted genome.
pub fn fit_features(fits: &[(String, QuadraticFit)]) -> Result<FeatureMatrix> {
    FeatureMatrix::new(
        fits.iter().map(|(id, _)| id.clone()).collect(),
        vec!["c0".into(), "c1".into(), "c2".into()],
        fits.iter().map(|(_, f)| f.coefficients().to_vec()).collect(),
    )
}

/// 64-component triplet distributions of the given genomes, in `ids` order.
pub fn triplet_features(corpus: &[Genome], ids: &[String]) -> Result<FeatureMatrix> {
    let by_id: BTreeMap<&str, &Genome> = corpus.iter().map(|g| (g.id.as_str(), g)).collect();
    let rows = ids
        .par_iter()
        .map(|id| {
            let g = by_id.get(id.as_str()).ok_or_else(|| Error::UnknownGenome(id.clone()))?;
            Ok(metrics::ngram_distribution(g.bases(), 3)?.probabilities())
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(ids.to_vec(), (0..64).map(|i| metrics::word_string(i, 3)).collect(), rows)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub corpus: Vec<Genome>,
    pub provenance: Vec<Provenance>,
    pub batch: BatchResult,
    pub fits: Clustering,
    /// Per feature; `None` for columns that were constant.
    pub variance_explained: Vec<(String, Option<f64>)>,
    pub triplets: Option<Clustering>,
    pub crosstab: Option<CrossTab>,
    pub report: OutlierReport,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    genomes: usize,
    fitted: usize,
    fit_summary: Option<trajectory::FitSummary>,
    failures: &'a [trajectory::GenomeFailure],
    fit_clusters: usize,
    triplet_clusters: Option<usize>,
    variance_explained: BTreeMap<&'a str, Option<f64>>,
    provenance: &'a [Provenance],
    outliers: &'a OutlierReport,
}

/// Rendered output files, keyed by relative path.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Artifacts(pub BTreeMap<String, Vec<u8>>);

impl Artifacts {
    pub fn put(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.0.insert(name.to_string(), buf);
        Ok(())
    }

    pub fn put_clustering(&mut self, tag: &str, c: &Clustering) -> Result<()> {
        self.put(&format!("features_{tag}.csv"), |b| c.raw.write_csv(b))?;
        self.put(&format!("features_{tag}_standardized.csv"), |b| c.standardized.write_csv(b))?;
        self.put(&format!("dendrogram_{tag}.nwk"), |b| {
            b.extend_from_slice(c.tree.to_newick().as_bytes());
            b.push(b'\n');
            Ok(())
        })?;
        self.put(&format!("merges_{tag}.csv"), |b| c.tree.write_merges_csv(b))?;
        if let Some(sel) = &c.selection {
            self.put(&format!("k_selection_{tag}.csv"), |b| sel.write_csv(b))?;
        }
        self.put(&format!("assignments_{tag}.csv"), |b| c.model.write_csv(b))?;
        let labels: Vec<String> = (1..=c.model.k()).map(|l| l.to_string()).collect();
        let centroids = FeatureMatrix {
            row_ids: labels.clone(),
            columns: c.standardized.columns.clone(),
            values: c.centroids.clone(),
            standardized: true,
            constant_columns: Vec::new(),
        };
        self.put(&format!("centroids_{tag}.csv"), |b| centroids.write_csv(b))?;
        if let Some(e) = &c.embedding {
            self.put(&format!("mds_{tag}.csv"), |b| e.write_csv(b, &labels))?;
        }
        Ok(())
    }

    /// Writes every artifact under `dir`, creating it as needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.0 {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Runs every stage on an in-memory corpus, rendering artifacts into `out`
/// as each stage completes.
pub fn analyze(corpus: Vec<Genome>, config: &RunConfig, out: &mut Artifacts) -> Result<PipelineOutput> {
    if corpus.is_empty() {
        return Err(Error::CorpusEmpty);
    }
    config.validate().map_err(|e| e.at_stage("config"))?;

    let (corpus, provenance) = plant_outliers(&corpus, &config.planting, &config.mutation, config.seed)
        .map_err(|e| e.at_stage("plant"))?;
    if !provenance.is_empty() {
        let planted: Vec<Genome> = corpus[corpus.len() - provenance.len()..].to_vec();
        out.put("planted.fa", |b| sequence_io::write_fasta(b, &planted, 70))?;
        out.put("provenance.csv", |b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["original_id", "planted_id", "iterations"])?;
            for p in &provenance {
                w.write_record([p.original_id.as_str(), &p.planted_id, &p.iterations.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }

    log::info!("running trajectories for {} genomes", corpus.len());
    let batch = trajectory::batch_run(&corpus, &config.mutation, &config.trajectory, config.seed)
        .map_err(|e| e.at_stage("trajectories"))?;
    out.put("trajectories.csv", |b| trajectory::write_trajectories_csv(b, &batch.trajectories))?;
    out.put("fits.csv", |b| trajectory::write_fits_csv(b, &batch.fits))?;
    if let Some(first) = batch.trajectories.first() {
        for &m in &first.measures {
            out.put(&format!("plot_{m}.csv"), |b| trajectory::write_plot_csv(b, &batch.trajectories, m))?;
        }
    }

    log::info!("clustering quadratic coefficients");
    let raw = fit_features(&batch.fits).map_err(|e| e.at_stage("fits"))?;
    let cc = &config.clustering;
    let fits = cluster_features(raw, cc.linkage, cc.k, (2, cc.k_max))?;
    out.put_clustering("fits", &fits)?;
    let variance_explained = fits.variance_explained().map_err(|e| e.at_stage("variance_explained"))?;
    out.put("variance_explained_fits.csv", |b| write_variance_explained(b, &variance_explained))?;

    let (triplets, crosstab) = if cc.triplets {
        log::info!("clustering triplet distributions");
        let raw = triplet_features(&corpus, &fits.model.ids).map_err(|e| e.at_stage("triplets"))?;
        let t = cluster_features(raw, cc.triplet_linkage, cc.triplet_k, (2, cc.k_max))?;
        out.put_clustering("triplets", &t)?;
        let table = cluster::cross_tabulate(&fits.model.assignments(), &t.model.assignments())
            .map_err(|e| e.at_stage("crosstab"))?;
        out.put("crosstab.csv", |b| table.write_csv(b))?;
        (Some(t), Some(table))
    } else {
        (None, None)
    };

    let report = flag_outliers(&fits.model, &batch.fits, cc.small_cluster_fraction, &fits.centroids, &provenance);
    out.put("outliers.csv", |b| report.write_csv(b))?;
    let summary = RunSummary {
        genomes: corpus.len(),
        fitted: batch.fits.len(),
        fit_summary: batch.summary,
        failures: &batch.failures,
        fit_clusters: fits.model.k(),
        triplet_clusters: triplets.as_ref().map(|t| t.model.k()),
        variance_explained: variance_explained.iter().map(|(c, v)| (c.as_str(), *v)).collect(),
        provenance: &provenance,
        outliers: &report,
    };
    out.put("report.json", |b| {
        serde_json::to_writer_pretty(&mut *b, &summary)?;
        b.push(b'\n');
        Ok(())
    })?;

    Ok(PipelineOutput {
        corpus,
        provenance,
        batch,
        fits,
        variance_explained,
        triplets,
        crosstab,
        report,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// `complete`, or `failed` with the error in `error`.
    pub status: String,
    pub error: Option<String>,
    pub corpus_sha256: String,
    pub config: RunConfig,
    /// Relative path → SHA-256 of every other file in the output tree.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    /// The configuration to rerun this manifest into `output_dir`.
    pub fn rerun_config(&self, output_dir: PathBuf) -> RunConfig {
        RunConfig {
            output_dir,
            ..self.config.clone()
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Reads the corpus named in `config`, runs [`analyze`] and writes the
/// output tree plus `manifest.json`. When a stage fails, whatever was
/// produced is still written and the manifest is marked `failed`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    run_pipeline_checked(config, None)
}

/// As [`run_pipeline`], refusing to run when the corpus hash differs from
/// `expected_sha256`.
pub fn run_pipeline_checked(config: &RunConfig, expected_sha256: Option<&str>) -> Result<PipelineOutput> {
    let raw = fs::read(&config.corpus)?;
    let corpus_sha256 = sha256_hex(&raw);
    if let Some(expected) = expected_sha256 {
        if expected != corpus_sha256 {
            return Err(Error::InvalidConfig(format!(
                "corpus {} does not match the manifest (sha256 {corpus_sha256}, expected {expected})",
                config.corpus.display()
            )));
        }
    }
    let mut artifacts = Artifacts::default();
    let result = config
        .ambiguity_policy()
        .and_then(|policy| sequence_io::parse_fasta(&raw[..], policy))
        .map_err(|e| e.at_stage("read corpus"))
        .and_then(|corpus| analyze(corpus, config, &mut artifacts));
    let manifest = Manifest {
        tool: "degradex".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        status: if result.is_ok() { "complete" } else { "failed" }.into(),
        error: result.as_ref().err().map(|e| e.to_string()),
        corpus_sha256,
        config: config.clone(),
        files: artifacts.0.iter().map(|(k, v)| (k.clone(), sha256_hex(v))).collect(),
    };
    artifacts.write_to(&config.output_dir)?;
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(config.output_dir.join(MANIFEST_FILE), bytes)?;
    result
}
