use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use degradex::cluster::{self, FeatureMatrix, Linkage};
use degradex::metrics;
use degradex::mutation::{self, MutationEvent};
use degradex::pipeline::{self, Artifacts, Manifest, RunConfig};
use degradex::rng;
use degradex::sequence_io::{self, Genome};
use degradex::structure::{self, StructureKind};
use degradex::synth;
use degradex::trajectory;

use crate::{Cli, Command, MutationArgs, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Shared settings: defaults, then the config file, then global flags.
fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let pairs = pipeline::parse_key_values(&text)?;
        cfg.apply(&pairs).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(policy) = &cli.ambiguous {
        cfg.set("ambiguous", policy).map_err(|e| usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn apply_mutation(cfg: &mut RunConfig, args: &MutationArgs) -> Result<()> {
    let floats = [
        ("p_snp", args.p_snp),
        ("p_ins", args.p_ins),
        ("p_del", args.p_del),
        ("p_inv", args.p_inv),
        ("p_dup", args.p_dup),
        ("p_trans", args.p_trans),
        ("indel_len_geom_p", args.indel_len_geom_p),
    ];
    for (key, value) in floats {
        if let Some(v) = value {
            cfg.set(key, &v.to_string())?;
        }
    }
    if let Some(v) = args.sv_len_min {
        cfg.mutation.sv_len_min = v;
    }
    if let Some(v) = args.sv_len_max {
        cfg.mutation.sv_len_max = v;
    }
    cfg.mutation.validate()?;
    Ok(())
}

fn read_corpus(path: &Path, cfg: &RunConfig) -> Result<Vec<Genome>> {
    let genomes = sequence_io::read_fasta_file(path, cfg.ambiguity_policy()?)
        .with_context(|| format!("reading {}", path.display()))?;
    log::info!("read {} genomes from {}", genomes.len(), path.display());
    Ok(genomes)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn pick_genome(corpus: Vec<Genome>, id: Option<&str>) -> Result<Genome> {
    match id {
        Some(id) => corpus
            .into_iter()
            .find(|g| g.id == id)
            .ok_or_else(|| degradex::Error::UnknownGenome(id.to_string()).into()),
        None => {
            if corpus.len() > 1 {
                log::warn!("input has {} genomes; using the first", corpus.len());
            }
            Ok(corpus.into_iter().next().expect("parser rejects empty input"))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Degrade {
            input,
            out_dir,
            iters,
            checkpoints,
            mutation,
        } => {
            apply_mutation(&mut cfg, &mutation)?;
            degrade(&cfg, &input, &out_dir, iters, checkpoints)
        }
        Command::Metrics {
            input,
            n,
            reference,
            reference_id,
            null_samples,
            alpha,
            out,
        } => metrics_cmd(&cfg, &input, &n, reference.as_deref(), reference_id.as_deref(), null_samples, alpha, out.as_deref()),
        Command::Trajectory {
            corpus,
            out,
            measures,
            origin,
            checkpoints,
            fit_target,
            fits,
            plot,
            mutation,
        } => {
            apply_mutation(&mut cfg, &mutation)?;
            if let Some(m) = measures {
                cfg.set("measures", &m.join(","))?;
            }
            if let Some(o) = origin {
                cfg.set("origin", &o)?;
            }
            if let Some(c) = checkpoints {
                cfg.trajectory.checkpoints = c;
            }
            if let Some(t) = fit_target {
                cfg.set("fit_target", &t)?;
            }
            trajectory_cmd(&cfg, &corpus, &out, fits.as_deref(), plot.as_deref())
        }
        Command::Repeats {
            input,
            k,
            iters,
            genome,
            out,
            mutation,
        } => {
            apply_mutation(&mut cfg, &mutation)?;
            attrition(&cfg, &input, &k, &iters, genome.as_deref(), out.as_deref(), StructureKind::Repeats)
        }
        Command::Palindromes {
            input,
            h,
            iters,
            genome,
            out,
            mutation,
        } => {
            apply_mutation(&mut cfg, &mutation)?;
            attrition(&cfg, &input, &h, &iters, genome.as_deref(), out.as_deref(), StructureKind::Palindromes)
        }
        Command::Cluster {
            input,
            out_dir,
            features,
            linkage,
            k,
            k_range,
        } => cluster_cmd(&cfg, &input, &out_dir, &features, linkage.as_deref(), k, k_range.as_deref()),
        Command::Crosstab { a, b, out } => {
            let read = |p: &Path| -> Result<Vec<(String, usize)>> {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                Ok(cluster::read_assignments_csv(f)?)
            };
            let table = cluster::cross_tabulate(&read(&a)?, &read(&b)?)?;
            let mut w = output(out.as_deref())?;
            table.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Pipeline {
            corpus,
            out,
            manifest,
            plant,
            plant_iters,
            checkpoints,
            linkage,
            k,
            k_max,
            small_cluster_fraction,
            fit_target,
            mutation,
        } => {
            let mut expected_sha = None;
            if let Some(path) = manifest {
                let m = Manifest::read(&path).with_context(|| format!("reading {}", path.display()))?;
                expected_sha = Some(m.corpus_sha256.clone());
                cfg = m.rerun_config(out.clone());
            }
            if let Some(c) = corpus {
                cfg.corpus = c;
            }
            if cfg.corpus.as_os_str().is_empty() {
                return Err(usage("no corpus given (pass a FASTA path, `corpus` in --config, or --manifest)"));
            }
            cfg.output_dir = out;
            apply_mutation(&mut cfg, &mutation)?;
            if let Some(v) = plant {
                cfg.planting.count = v;
            }
            if let Some(v) = plant_iters {
                cfg.planting.iterations = v;
            }
            if let Some(c) = checkpoints {
                cfg.trajectory.checkpoints = c;
            }
            if let Some(v) = linkage {
                cfg.set("linkage", &v)?;
            }
            if let Some(v) = k {
                cfg.clustering.k = Some(v);
            }
            if let Some(v) = k_max {
                cfg.clustering.k_max = v;
            }
            if let Some(v) = small_cluster_fraction {
                cfg.clustering.small_cluster_fraction = v;
            }
            if let Some(v) = fit_target {
                cfg.set("fit_target", &v)?;
            }
            let result = pipeline::run_pipeline_checked(&cfg, expected_sha.as_deref())?;
            let r = &result.report;
            log::info!(
                "{} genomes in {} clusters; {} flagged; outputs in {}",
                r.genomes,
                r.clusters.len(),
                r.flagged.len(),
                cfg.output_dir.display()
            );
            Ok(())
        }
        Command::Plant {
            input,
            output,
            count,
            iters,
            provenance,
            mutation,
        } => {
            apply_mutation(&mut cfg, &mutation)?;
            let corpus = read_corpus(&input, &cfg)?;
            let spec = pipeline::PlantSpec {
                count,
                iterations: iters,
                ..Default::default()
            };
            let (all, prov) = pipeline::plant_outliers(&corpus, &spec, &cfg.mutation, cfg.seed)?;
            sequence_io::write_fasta_file(&output, &all, 70)?;
            if let Some(p) = provenance {
                let mut w = csv::Writer::from_writer(create(&p)?);
                w.write_record(["original_id", "planted_id", "iterations"])?;
                for r in &prov {
                    w.write_record([r.original_id.as_str(), &r.planted_id, &r.iterations.to_string()])?;
                }
                w.flush()?;
            }
            Ok(())
        }
        Command::Simulate {
            output,
            genomes,
            length,
            model,
            order,
            composition,
            concentration,
            motif,
            copies,
        } => simulate(&cfg, &output, genomes, length, &model, order, &composition, concentration, motif, copies),
    }
}

fn write_events<W: Write>(w: &mut csv::Writer<W>, id: &str, events: &[(u64, MutationEvent)]) -> Result<()> {
    for (t, e) in events {
        w.write_record([
            id,
            &t.to_string(),
            &e.kind.to_string(),
            &e.position.to_string(),
            &e.length.to_string(),
            std::str::from_utf8(&e.payload).unwrap_or_default(),
            &e.target.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(())
}

fn degrade(cfg: &RunConfig, input: &Path, out_dir: &Path, iters: u64, checkpoints: Option<Vec<u64>>) -> Result<()> {
    let checkpoints = checkpoints.unwrap_or_else(|| if iters == 0 { vec![0] } else { vec![0, iters] });
    mutation::validate_checkpoints(&checkpoints, iters).map_err(|e| usage(e.to_string()))?;
    let corpus = read_corpus(input, cfg)?;
    let runs: Vec<degradex::Result<mutation::DegradedSeries>> = corpus
        .par_iter()
        .map(|g| {
            let mut r = rng::stream(cfg.seed, &g.id);
            mutation::degrade(g.bases(), &cfg.mutation, iters, &checkpoints, &mut r)
        })
        .collect();
    let runs = runs.into_iter().collect::<degradex::Result<Vec<_>>>()?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (ci, t) in checkpoints.iter().enumerate() {
        let snapshot: Vec<Genome> = corpus
            .iter()
            .zip(&runs)
            .map(|(g, s)| Genome::new(g.id.clone(), s.snapshots[ci].1.clone()))
            .collect::<degradex::Result<_>>()?;
        sequence_io::write_fasta_file(&out_dir.join(format!("iteration_{t}.fa")), &snapshot, 70)?;
    }
    let mut w = csv::Writer::from_writer(create(&out_dir.join("events.csv"))?);
    w.write_record(["genome_id", "iteration", "kind", "position", "length", "payload", "target"])?;
    for (g, s) in corpus.iter().zip(&runs) {
        write_events(&mut w, &g.id, &s.events)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn metrics_cmd(
    cfg: &RunConfig,
    input: &Path,
    orders: &[usize],
    reference: Option<&Path>,
    reference_id: Option<&str>,
    null_samples: Option<usize>,
    alpha: f64,
    out: Option<&Path>,
) -> Result<()> {
    let corpus = read_corpus(input, cfg)?;
    let reference = match (reference, reference_id) {
        (Some(path), _) => Some(pick_genome(read_corpus(path, cfg)?, None)?),
        (None, Some(id)) => Some(pick_genome(corpus.clone(), Some(id))?),
        (None, None) => None,
    };
    let rows: Vec<Result<Vec<Vec<String>>>> = corpus
        .par_iter()
        .map(|g| {
            let (ham, lev) = match &reference {
                Some(r) => (
                    metrics::hamming(g.bases(), r.bases()).map(|d| d.to_string()).unwrap_or_default(),
                    metrics::levenshtein(g.bases(), r.bases()).to_string(),
                ),
                None => (String::new(), String::new()),
            };
            let mut rows = Vec::new();
            for &n in orders {
                let dist = metrics::ngram_distribution(g.bases(), n)?;
                let h = metrics::entropy(&dist);
                let hel = match &reference {
                    Some(r) => metrics::hellinger(&dist, &metrics::ngram_distribution(r.bases(), n)?)?.to_string(),
                    None => String::new(),
                };
                let null = match null_samples {
                    Some(s) => {
                        let seed = rng::derive_seed(cfg.seed, &format!("null:{}:{n}", g.id));
                        metrics::null_threshold(g.bases(), n, alpha, s, seed)?.to_string()
                    }
                    None => String::new(),
                };
                rows.push(vec![
                    g.id.clone(),
                    n.to_string(),
                    h.to_string(),
                    (h / metrics::max_entropy(n)).to_string(),
                    hel,
                    ham.clone(),
                    lev.clone(),
                    null,
                ]);
            }
            Ok(rows)
        })
        .collect();
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record([
        "genome_id",
        "n",
        "entropy",
        "max_entropy_fraction",
        "hellinger_to_reference",
        "hamming_to_reference",
        "levenshtein_to_reference",
        "null_threshold",
    ])?;
    for genome_rows in rows {
        for row in genome_rows? {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn trajectory_cmd(cfg: &RunConfig, corpus: &Path, out: &Path, fits: Option<&Path>, plot: Option<&Path>) -> Result<()> {
    let genomes = read_corpus(corpus, cfg)?;
    let batch = trajectory::batch_run(&genomes, &cfg.mutation, &cfg.trajectory, cfg.seed)?;
    trajectory::write_trajectories_csv(create(out)?, &batch.trajectories)?;
    if let Some(p) = fits {
        trajectory::write_fits_csv(create(p)?, &batch.fits)?;
    }
    if let Some(p) = plot {
        trajectory::write_plot_csv(create(p)?, &batch.trajectories, trajectory::Measure::TripletEntropy)?;
    }
    if let Some(s) = batch.summary {
        log::info!("{} fits: min R² {:.4}, 1st percentile {:.4}", s.genomes, s.min_r2, s.p01_r2);
    }
    for f in &batch.failures {
        log::warn!("{}: {}", f.genome_id, f.message);
    }
    Ok(())
}

fn attrition(
    cfg: &RunConfig,
    input: &Path,
    lengths: &[usize],
    iters: &[u64],
    genome: Option<&str>,
    out: Option<&Path>,
    kind: StructureKind,
) -> Result<()> {
    let g = pick_genome(read_corpus(input, cfg)?, genome)?;
    let mut r = rng::stream(cfg.seed, &g.id);
    let table = structure::attrition_table(g.bases(), &cfg.mutation, iters, lengths, kind, &mut r)?;
    let mut w = output(out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| usage(format!("--k-range `{s}` is not of the form A..B")))?;
    let num = |x: &str| {
        x.trim_start_matches('=')
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("--k-range `{s}` is not of the form A..B")))
    };
    Ok((num(a)?, num(b)?))
}

fn cluster_cmd(
    cfg: &RunConfig,
    input: &Path,
    out_dir: &Path,
    features: &str,
    linkage: Option<&str>,
    k: Option<usize>,
    k_range: Option<&str>,
) -> Result<()> {
    let default_linkage = if features == "fits" { cfg.clustering.linkage } else { cfg.clustering.triplet_linkage };
    let linkage = match linkage {
        Some(l) => l.parse::<Linkage>().map_err(|e| usage(e.to_string()))?,
        None => default_linkage,
    };
    let range = match k_range {
        Some(s) => parse_range(s)?,
        None => (2, cfg.clustering.k_max),
    };
    let raw: FeatureMatrix = if features == "fits" {
        let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
        pipeline::fit_features(&trajectory::read_fits_csv(f)?)?
    } else {
        let corpus = read_corpus(input, cfg)?;
        let ids: Vec<String> = corpus.iter().map(|g| g.id.clone()).collect();
        pipeline::triplet_features(&corpus, &ids)?
    };
    let c = pipeline::cluster_features(raw, linkage, k, range)?;
    let mut art = Artifacts::default();
    art.put_clustering(features, &c)?;
    let ve = c.variance_explained()?;
    art.put(&format!("variance_explained_{features}.csv"), |b| pipeline::write_variance_explained(b, &ve))?;
    art.write_to(out_dir)?;
    log::info!("{} rows in {} clusters", c.model.ids.len(), c.model.k());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    cfg: &RunConfig,
    output: &PathBuf,
    genomes: usize,
    length: usize,
    model: &str,
    order: usize,
    composition: &[f64],
    concentration: f64,
    motif: usize,
    copies: usize,
) -> Result<()> {
    let mut r = rng::stream(cfg.seed, "simulate");
    let corpus: Vec<Genome> = match model {
        "uniform" => (0..genomes)
            .map(|i| Genome::new(format!("sim{i:04}"), synth::uniform_iid(length, &mut r)))
            .collect::<degradex::Result<_>>()?,
        "markov" => {
            let comp: [f64; 4] = composition
                .try_into()
                .map_err(|_| usage("--composition needs four values"))?;
            let m = synth::MarkovModel::random(order, comp, concentration, &mut r)?;
            (0..genomes)
                .map(|i| Genome::new(format!("sim{i:04}"), m.generate(length, &mut r)))
                .collect::<degradex::Result<_>>()?
        }
        "repeats" => {
            let spacer = (length / copies.max(1)).saturating_sub(motif).max(1);
            (0..genomes)
                .map(|i| Genome::new(format!("sim{i:04}"), synth::repeat_rich(copies, motif, spacer, &mut r)))
                .collect::<degradex::Result<_>>()?
        }
        other => return Err(usage(format!("unknown model `{other}` (markov, uniform or repeats)"))),
    };
    sequence_io::write_fasta_file(output, &corpus, 70)?;
    Ok(())
}
