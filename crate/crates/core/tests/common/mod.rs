//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use degradex::cluster::Linkage;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

/// Full `(|a|+1) × (|b|+1)` edit-distance table.
pub fn levenshtein_table(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn hamming_loop(a: &[u8], b: &[u8]) -> usize {
    (0..a.len()).filter(|&i| a[i] != b[i]).count()
}

/// Windows whose word occurs at two or more positions.
pub fn repeated_windows(seq: &[u8], k: usize) -> usize {
    let mut counts: HashMap<&[u8], usize> = HashMap::new();
    for w in seq.windows(k) {
        *counts.entry(w).or_insert(0) += 1;
    }
    seq.windows(k).filter(|w| counts[w] >= 2).count()
}

fn pairs(x: u8, y: u8) -> bool {
    matches!((x, y), (b'A', b'T') | (b'T', b'A') | (b'C', b'G') | (b'G', b'C'))
}

/// Inter-base centres with at least `h` complementary pairs around them.
pub fn palindrome_centres(seq: &[u8], h: usize) -> usize {
    (1..seq.len())
        .filter(|&c| c >= h && c + h <= seq.len() && (0..h).all(|i| pairs(seq[c - 1 - i], seq[c + i])))
        .count()
}

/// Agglomeration that rescans every active pair at every step.
pub fn hclust_exhaustive(points: &[Vec<f64>], linkage: Linkage) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let euclid = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let squared = linkage == Linkage::WardD2;
    let mut dist: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(&points[i], &points[j]);
            dist.insert((i, j), if squared { d * d } else { d });
        }
    }
    let mut size: BTreeMap<usize, usize> = (0..n).map(|i| (i, 1)).collect();
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let (&(a, b), &d) = dist
            .iter()
            .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(y.0)))
            .unwrap();
        let new = n + step;
        let (na, nb) = (size[&a], size[&b]);
        let others: Vec<usize> = size.keys().copied().filter(|&k| k != a && k != b).collect();
        for k in others {
            let get = |x: usize, y: usize| dist[&(x.min(y), x.max(y))];
            let nk = size[&k] as f64;
            let (dka, dkb) = (get(k, a), get(k, b));
            let v = match linkage {
                Linkage::Complete => dka.max(dkb),
                _ => ((na as f64 + nk) * dka + (nb as f64 + nk) * dkb - nk * d) / (na as f64 + nb as f64 + nk),
            };
            dist.insert((k, new), v);
        }
        dist.retain(|&(x, y), _| x != a && x != b && y != a && y != b);
        size.remove(&a);
        size.remove(&b);
        size.insert(new, na + nb);
        merges.push((a, b, if squared { d.sqrt() } else { d }));
    }
    merges
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// Least squares on `{1, t, t²}` by exact rational Gauss–Jordan elimination
/// of the unscaled normal equations.
pub fn exact_quadratic(ts: &[f64], ys: &[f64]) -> [f64; 3] {
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); 4]; 3];
    for (&t, &y) in ts.iter().zip(ys) {
        let t = exact(t);
        let y = exact(y);
        let powers = [BigRational::one(), t.clone(), &t * &t];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = &m[i][j] + &powers[i] * &powers[j];
            }
            m[i][3] = &m[i][3] + &powers[i] * &y;
        }
    }
    for col in 0..3 {
        let pivot = (col..3).find(|&r| !m[r][col].is_zero()).unwrap();
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for k in 0..4 {
            m[col][k] = &m[col][k] / &p;
        }
        for r in 0..3 {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for k in 0..4 {
                    let v = &f * &m[col][k];
                    m[r][k] = &m[r][k] - v;
                }
            }
        }
    }
    [0, 1, 2].map(|i| m[i][3].to_f64().unwrap())
}

/// Largest relative inner product between the residuals of `c0 + c1·t +
/// c2·t²` and the design columns, evaluated exactly.
pub fn residual_orthogonality(ts: &[f64], ys: &[f64], coef: [f64; 3]) -> f64 {
    use num::Signed;
    let c = coef.map(exact);
    let mut worst = 0.0f64;
    for power in 0..3usize {
        let mut dot = BigRational::zero();
        let mut norm = BigRational::zero();
        for (&t, &y) in ts.iter().zip(ys) {
            let te = exact(t);
            let pred = &c[0] + &te * (&c[1] + &te * &c[2]);
            let w = num::pow(te, power);
            dot = dot + (exact(y) - pred) * &w;
            norm = norm + (exact(y) * &w).abs();
        }
        if !norm.is_zero() {
            worst = worst.max((dot.abs() / norm).to_f64().unwrap());
        }
    }
    worst
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of the ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
