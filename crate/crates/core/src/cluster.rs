//! Hierarchical clustering of genome feature vectors and the summaries built
//! on it: cluster-count selection, centroids, classical MDS of the
//! centroids, variance explained and cross-tabulation of two partitions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are genomes, columns named features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub standardized: bool,
    /// Columns that were constant when standardised (left at 0).
    pub constant_columns: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if row_ids.len() != values.len() {
            return Err(Error::InvalidConfig(format!("{} ids for {} rows", row_ids.len(), values.len())));
        }
        if let Some(bad) = values.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::InvalidConfig(format!("row {bad} does not have {} features", columns.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("feature values must be finite".into()));
        }
        Ok(FeatureMatrix {
            row_ids,
            columns,
            values,
            standardized: false,
            constant_columns: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["genome_id".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.row_ids.iter().zip(&self.values) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column-wise z-scores using the sample standard deviation.
pub fn standardize(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let n = matrix.rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let mut out = matrix.clone();
    out.standardized = true;
    out.constant_columns.clear();
    for j in 0..matrix.columns.len() {
        let col = matrix.values.iter().map(|r| r[j]);
        let (lo, hi) = col.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo == hi {
            out.constant_columns.push(j);
            for row in &mut out.values {
                row[j] = 0.0;
            }
            continue;
        }
        let mean = col.clone().sum::<f64>() / n as f64;
        let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        for row in &mut out.values {
            row[j] = (row[j] - mean) / sd;
        }
    }
    Ok(out)
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dense symmetric Euclidean distance matrix, row-major `n × n`.
pub fn euclidean_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for (j, v) in out.iter_mut().enumerate() {
            *v = squared_euclidean(&rows[i], &rows[j]).sqrt();
        }
    });
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Complete,
    /// Ward's recurrence applied to unsquared Euclidean distances.
    WardD,
    /// Ward's recurrence on squared distances; heights reported unsquared.
    WardD2,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Complete => "complete",
            Linkage::WardD => "ward",
            Linkage::WardD2 => "ward.D2",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Linkage::Complete),
            "ward" | "ward.D" | "ward_d" => Ok(Linkage::WardD),
            "ward.D2" | "ward_d2" | "ward2" => Ok(Linkage::WardD2),
            _ => Err(Error::InvalidConfig(format!("unknown linkage `{s}`"))),
        }
    }
}

impl Linkage {
    /// Lance–Williams update: distance from `k` to the union of `i` and `j`.
    pub fn update(self, d_ki: f64, d_kj: f64, d_ij: f64, n_i: usize, n_j: usize, n_k: usize) -> f64 {
        match self {
            Linkage::Complete => d_ki.max(d_kj),
            Linkage::WardD | Linkage::WardD2 => {
                let (ni, nj, nk) = (n_i as f64, n_j as f64, n_k as f64);
                ((ni + nk) * d_ki + (nj + nk) * d_kj - nk * d_ij) / (ni + nj + nk)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Node ids: leaves are `0..n`, merge `s` creates node `n + s`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub ids: Vec<String>,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
    /// Leaves in dendrogram display order.
    pub leaf_order: Vec<usize>,
}

/// Agglomerative clustering of the rows of `matrix` on Euclidean distance.
pub fn hclust(matrix: &FeatureMatrix, linkage: Linkage) -> Result<ClusterTree> {
    let d = euclidean_distances(&matrix.values);
    hclust_distances(matrix.row_ids.clone(), &d, linkage)
}

/// Agglomerative clustering from a dense `n × n` distance matrix.
///
/// At each step the pair with the smallest distance merges; ties go to the
/// pair whose (older id, younger id) is lexicographically smallest, where
/// leaves are oldest and merged nodes are numbered in creation order. Each
/// active cluster caches its nearest neighbour, so a step costs `O(n)` plus
/// a rescan for the rows whose neighbour was consumed.
pub fn hclust_distances(ids: Vec<String>, distances: &[f64], linkage: Linkage) -> Result<ClusterTree> {
    let n = ids.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if distances.len() != n * n {
        return Err(Error::InvalidConfig(format!("distance matrix must be {n}x{n}")));
    }
    let mut d = distances.to_vec();
    if linkage == Linkage::WardD2 {
        for v in &mut d {
            *v *= *v;
        }
    }
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let pair_key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };

    let better = |dist: f64, key: (usize, usize), best: f64, best_key: (usize, usize)| {
        dist < best || (dist == best && key < best_key)
    };
    let nearest = |i: usize, d: &[f64], node: &[usize], active: &[bool]| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut best_key = (usize::MAX, usize::MAX);
        for j in 0..n {
            if j == i || !active[j] {
                continue;
            }
            let key = pair_key(node[i], node[j]);
            if better(d[i * n + j], key, best.0, best_key) {
                best = (d[i * n + j], j);
                best_key = key;
            }
        }
        best
    };
    let mut nn: Vec<(f64, usize)> = (0..n).map(|i| nearest(i, &d, &node, &active)).collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut pick = usize::MAX;
        let mut best = f64::INFINITY;
        let mut best_key = (usize::MAX, usize::MAX);
        for i in (0..n).filter(|&i| active[i]) {
            let (dist, j) = nn[i];
            let key = pair_key(node[i], node[j]);
            if pick == usize::MAX || better(dist, key, best, best_key) {
                pick = i;
                best = dist;
                best_key = key;
            }
        }
        let (a, b) = (pick, nn[pick].1);
        let (keep, gone) = if node[a] < node[b] { (a, b) } else { (b, a) };
        let height = if linkage == Linkage::WardD2 { best.max(0.0).sqrt() } else { best };
        merges.push(Merge {
            left: node[keep],
            right: node[gone],
            height,
            size: size[keep] + size[gone],
        });

        let d_ab = d[keep * n + gone];
        for k in 0..n {
            if !active[k] || k == keep || k == gone {
                continue;
            }
            let v = linkage.update(d[k * n + keep], d[k * n + gone], d_ab, size[keep], size[gone], size[k]);
            d[k * n + keep] = v;
            d[keep * n + k] = v;
        }
        active[gone] = false;
        size[keep] += size[gone];
        node[keep] = n + step;

        nn[keep] = nearest(keep, &d, &node, &active);
        for k in 0..n {
            if !active[k] || k == keep {
                continue;
            }
            let (dist, j) = nn[k];
            if j == keep || j == gone {
                nn[k] = nearest(k, &d, &node, &active);
            } else {
                let v = d[k * n + keep];
                if better(v, pair_key(node[k], node[keep]), dist, pair_key(node[k], node[j])) {
                    nn[k] = (v, keep);
                }
            }
        }
    }
    let leaf_order = leaf_order(n, &merges);
    Ok(ClusterTree {
        ids,
        linkage,
        merges,
        leaf_order,
    })
}

fn leaf_order(n: usize, merges: &[Merge]) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![n + merges.len() - 1];
    while let Some(v) = stack.pop() {
        if v < n {
            order.push(v);
        } else {
            let m = &merges[v - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
    order
}

impl ClusterTree {
    pub fn leaves(&self) -> usize {
        self.ids.len()
    }

    /// Parenthesised tree with branch lengths (Newick).
    pub fn to_newick(&self) -> String {
        let n = self.leaves();
        let height = |v: usize| if v < n { 0.0 } else { self.merges[v - n].height };
        let clean = |s: &str| s.replace(['(', ')', ',', ':', ';', ' ', '\''], "_");
        // Iterative post-order to cope with deep trees.
        let mut out = String::new();
        enum Step {
            Enter(usize, f64),
            Between,
            Leave(usize, f64),
        }
        let root = n + self.merges.len() - 1;
        let mut stack = vec![Step::Enter(root, height(root))];
        while let Some(step) = stack.pop() {
            match step {
                Step::Enter(v, parent_h) if v < n => {
                    out.push_str(&clean(&self.ids[v]));
                    out.push_str(&format!(":{}", parent_h));
                }
                Step::Enter(v, parent_h) => {
                    let m = &self.merges[v - n];
                    out.push('(');
                    stack.push(Step::Leave(v, parent_h));
                    stack.push(Step::Enter(m.right, m.height - height(m.right)));
                    stack.push(Step::Between);
                    stack.push(Step::Enter(m.left, m.height - height(m.left)));
                }
                Step::Between => out.push(','),
                Step::Leave(v, parent_h) => {
                    out.push(')');
                    if v != root {
                        out.push_str(&format!(":{}", parent_h));
                    }
                }
            }
        }
        out.push(';');
        out
    }

    /// `step,left,right,height,size`.
    pub fn write_merges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "left", "right", "height", "size"])?;
        for (s, m) in self.merges.iter().enumerate() {
            w.write_record([s.to_string(), m.left.to_string(), m.right.to_string(), m.height.to_string(), m.size.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A flat partition: every row gets a label in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterModel {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.labels[i])
    }

    pub fn size_of_label(&self, label: usize) -> usize {
        self.sizes[label - 1]
    }

    /// Label of the largest cluster (smallest label on ties).
    pub fn largest(&self) -> usize {
        let mut best = 1;
        for (i, &s) in self.sizes.iter().enumerate() {
            if s > self.sizes[best - 1] {
                best = i + 1;
            }
        }
        best
    }

    pub fn assignments(&self) -> Vec<(String, usize)> {
        self.ids.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    /// `genome_id,cluster`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["genome_id", "cluster"])?;
        for (id, l) in self.ids.iter().zip(&self.labels) {
            w.write_record([id.as_str(), &l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a `genome_id,cluster` CSV.
pub fn read_assignments_csv<R: Read>(input: R) -> Result<Vec<(String, usize)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        let label = rec
            .get(1)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("bad cluster label for `{id}`")))?;
        out.push((id, label));
    }
    Ok(out)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
}

/// Applies the first `n - k` merges. Clusters are numbered by the position
/// of their first leaf in dendrogram order.
pub fn cut_tree(tree: &ClusterTree, k: usize) -> Result<ClusterModel> {
    let n = tree.leaves();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    let mut uf = UnionFind((0..2 * n - 1).collect());
    for (s, m) in tree.merges.iter().take(n - k).enumerate() {
        let node = n + s;
        let (l, r) = (uf.find(m.left), uf.find(m.right));
        uf.0[l] = node;
        uf.0[r] = node;
    }
    let mut label_of_root: HashMap<usize, usize> = HashMap::new();
    let mut labels = vec![0; n];
    for &leaf in &tree.leaf_order {
        let root = uf.find(leaf);
        let next = label_of_root.len() + 1;
        labels[leaf] = *label_of_root.entry(root).or_insert(next);
    }
    let mut sizes = vec![0; k];
    for &l in &labels {
        sizes[l - 1] += 1;
    }
    Ok(ClusterModel {
        ids: tree.ids.clone(),
        labels,
        sizes,
    })
}

/// Per-cluster feature means, indexed by label − 1.
pub fn centroids(values: &[Vec<f64>], labels: &[usize]) -> Vec<Vec<f64>> {
    let k = labels.iter().copied().max().unwrap_or(0);
    let dim = values.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in values.iter().zip(labels) {
        counts[l - 1] += 1;
        for (s, v) in sums[l - 1].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

/// Between- and within-cluster sums of squares per feature.
fn sums_of_squares(values: &[Vec<f64>], labels: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len() as f64;
    let dim = values.first().map_or(0, Vec::len);
    let cents = centroids(values, labels);
    let grand: Vec<f64> = (0..dim).map(|j| values.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mut total = vec![0.0; dim];
    let mut within = vec![0.0; dim];
    for (row, &l) in values.iter().zip(labels) {
        for j in 0..dim {
            total[j] += (row[j] - grand[j]).powi(2);
            within[j] += (row[j] - cents[l - 1][j]).powi(2);
        }
    }
    (total, within)
}

/// Calinski–Harabasz index of a partition; infinite when clusters are tight
/// points.
pub fn calinski_harabasz(values: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = values.len();
    let k = labels.iter().copied().max().unwrap_or(1);
    let (total, within) = sums_of_squares(values, labels);
    let t: f64 = total.iter().sum();
    let w: f64 = within.iter().sum();
    if w <= 0.0 {
        return f64::INFINITY;
    }
    ((t - w) / (k - 1) as f64) / (w / (n - k) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// `(k, Calinski–Harabasz index)` for every candidate.
    pub table: Vec<(usize, f64)>,
}

impl KSelection {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "calinski_harabasz", "selected"])?;
        for (k, ch) in &self.table {
            w.write_record([k.to_string(), ch.to_string(), (*k == self.k).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Picks the cut in `lo..=hi` with the largest Calinski–Harabasz index
/// (smallest `k` on ties).
pub fn select_k(tree: &ClusterTree, matrix: &FeatureMatrix, lo: usize, hi: usize) -> Result<KSelection> {
    let n = tree.leaves();
    if lo < 2 || hi > n.saturating_sub(1) || lo > hi {
        return Err(Error::BadRange {
            lo,
            hi,
            max: n.saturating_sub(1),
        });
    }
    let (total, _) = sums_of_squares(&matrix.values, &vec![1; n]);
    if total.iter().sum::<f64>() == 0.0 {
        return Err(Error::DegenerateData("all rows are identical".into()));
    }
    let mut table = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let model = cut_tree(tree, k)?;
        table.push((k, calinski_harabasz(&matrix.values, &model.labels)));
    }
    let mut best = table[0];
    for &(k, ch) in &table[1..] {
        if ch > best.1 {
            best = (k, ch);
        }
    }
    Ok(KSelection { k: best.0, table })
}

/// Fraction of each feature's variation explained by cluster membership,
/// `1 - within SS / total SS`.
pub fn variance_explained(values: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    let (total, within) = sums_of_squares(values, labels);
    total
        .iter()
        .zip(&within)
        .enumerate()
        .map(|(j, (&t, &w))| {
            if t == 0.0 {
                Err(Error::DegenerateData(format!("feature {j} has no variation")))
            } else {
                Ok((1.0 - w / t).clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Low-dimensional coordinates from classical (Torgerson) scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: Vec<Vec<f64>>,
    /// Leading eigenvalues of the double-centred matrix, clamped at 0.
    pub eigenvalues: Vec<f64>,
}

/// Classical MDS of a dense `n × n` distance matrix into `dims` dimensions.
///
/// Each axis is oriented so that its first clearly nonzero coordinate is
/// positive.
pub fn classical_mds(distances: &[f64], n: usize, dims: usize) -> Result<Embedding> {
    if n < 3 {
        return Err(Error::TooFewPoints { got: n, required: 3 });
    }
    if distances.len() != n * n {
        return Err(Error::InvalidConfig(format!("distance matrix must be {n}x{n}")));
    }
    let scale = distances.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..n {
        if distances[i * n + i].abs() > 1e-12 * scale {
            return Err(Error::AsymmetricInput);
        }
        for j in 0..i {
            if (distances[i * n + j] - distances[j * n + i]).abs() > 1e-9 * scale {
                return Err(Error::AsymmetricInput);
            }
        }
    }
    let sq = DMatrix::from_fn(n, n, |i, j| {
        let d = 0.5 * (distances[i * n + j] + distances[j * n + i]);
        d * d
    });
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let dims = dims.min(n);
    let mut coords = vec![vec![0.0; dims]; n];
    let mut eigenvalues = Vec::with_capacity(dims);
    for (axis, &e) in order.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[e].max(0.0);
        eigenvalues.push(lambda);
        let root = lambda.sqrt();
        let v = eig.eigenvectors.column(e);
        let tiny = 1e-9 * root.max(f64::MIN_POSITIVE) * (1.0 / (n as f64).sqrt());
        let sign = v
            .iter()
            .find(|x| (*x * root).abs() > tiny)
            .map_or(1.0, |x| x.signum());
        for i in 0..n {
            coords[i][axis] = sign * v[i] * root;
        }
    }
    Ok(Embedding { coords, eigenvalues })
}

impl Embedding {
    pub fn write_csv<W: Write>(&self, out: W, labels: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dims = self.eigenvalues.len();
        let mut header = vec!["cluster".to_string()];
        header.extend((1..=dims).map(|d| format!("dim{d}")));
        w.write_record(&header)?;
        for (label, row) in labels.iter().zip(&self.coords) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts of genomes per (row cluster, column cluster) with margins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTab {
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

pub fn cross_tabulate(a: &[(String, usize)], b: &[(String, usize)]) -> Result<CrossTab> {
    let index = |xs: &[(String, usize)], name: &str| -> Result<BTreeMap<String, usize>> {
        let mut m = BTreeMap::new();
        for (id, l) in xs {
            if m.insert(id.clone(), *l).is_some() {
                return Err(Error::IdMismatch(format!("duplicate id `{id}` in {name}")));
            }
        }
        Ok(m)
    };
    let ma = index(a, "rows")?;
    let mb = index(b, "columns")?;
    if let Some(id) = ma.keys().find(|id| !mb.contains_key(*id)).or_else(|| mb.keys().find(|id| !ma.contains_key(*id))) {
        return Err(Error::IdMismatch(format!("`{id}` is not in both assignments")));
    }
    let mut row_labels: Vec<usize> = ma.values().copied().collect();
    row_labels.sort_unstable();
    row_labels.dedup();
    let mut col_labels: Vec<usize> = mb.values().copied().collect();
    col_labels.sort_unstable();
    col_labels.dedup();
    let mut counts = vec![vec![0; col_labels.len()]; row_labels.len()];
    for (id, ra) in &ma {
        let i = row_labels.binary_search(ra).expect("label present");
        let j = col_labels.binary_search(&mb[id]).expect("label present");
        counts[i][j] += 1;
    }
    let row_sums: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..col_labels.len()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    let total = row_sums.iter().sum();
    Ok(CrossTab {
        row_labels,
        col_labels,
        counts,
        row_sums,
        col_sums,
        total,
    })
}

impl CrossTab {
    pub fn count(&self, row_label: usize, col_label: usize) -> usize {
        match (self.row_labels.binary_search(&row_label), self.col_labels.binary_search(&col_label)) {
            (Ok(i), Ok(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Rows are the first partition's clusters, columns the second's, with a
    /// `total` column and a `total` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["cluster".to_string()];
        header.extend(self.col_labels.iter().map(|l| l.to_string()));
        header.push("total".into());
        w.write_record(&header)?;
        for (i, l) in self.row_labels.iter().enumerate() {
            let mut rec = vec![l.to_string()];
            rec.extend(self.counts[i].iter().map(|c| c.to_string()));
            rec.push(self.row_sums[i].to_string());
            w.write_record(&rec)?;
        }
        let mut rec = vec!["total".to_string()];
        rec.extend(self.col_sums.iter().map(|c| c.to_string()));
        rec.push(self.total.to_string());
        w.write_record(&rec)?;
        w.flush()?;
        Ok(())
    }
}
