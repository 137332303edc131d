//! Distances between sequences and between their n-gram statistics.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::sequence_io::{base_index, BASES};

/// Largest supported word length for dense n-gram tables.
pub const MAX_ORDER: usize = 8;

pub fn hamming(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Unit-cost edit distance.
///
/// Uses the bit-parallel formulation (Myers, with Hyyrö's block chaining),
/// keeping one pair of 64-bit vertical delta vectors per 64 rows of the
/// shorter input. That is less memory than two rows of the classic DP and
/// `O(|a|·|b|/64)` time.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let m = pattern.len();
    if m == 0 {
        return text.len();
    }
    let blocks = m.div_ceil(64);
    // Match masks per (block, symbol) over the symbols present in the pattern.
    let mut slot = [u16::MAX; 256];
    let mut symbols = 0usize;
    for &c in pattern {
        if slot[c as usize] == u16::MAX {
            slot[c as usize] = symbols as u16;
            symbols += 1;
        }
    }
    let mut peq = vec![0u64; blocks * symbols];
    for (i, &c) in pattern.iter().enumerate() {
        peq[(i / 64) * symbols + slot[c as usize] as usize] |= 1u64 << (i % 64);
    }
    let mut pv = vec![!0u64; blocks];
    let mut mv = vec![0u64; blocks];
    let last_bit = 1u64 << ((m - 1) % 64);
    let mut score = m;
    for &c in text {
        // Top boundary row increases by one per column.
        let mut hin: i8 = 1;
        for blk in 0..blocks {
            let high = if blk + 1 == blocks { last_bit } else { 1u64 << 63 };
            let eq = match slot[c as usize] {
                u16::MAX => 0,
                k => peq[blk * symbols + k as usize],
            };
            let (p, mneg) = (pv[blk], mv[blk]);
            let xv = eq | mneg;
            let eq = if hin < 0 { eq | 1 } else { eq };
            let xh = (((eq & p).wrapping_add(p)) ^ p) | eq;
            let mut ph = mneg | !(xh | p);
            let mut mh = p & xh;
            let hout: i8 = if ph & high != 0 {
                1
            } else if mh & high != 0 {
                -1
            } else {
                0
            };
            ph <<= 1;
            mh <<= 1;
            if hin < 0 {
                mh |= 1;
            } else if hin > 0 {
                ph |= 1;
            }
            pv[blk] = mh | !(xv | ph);
            mv[blk] = ph & xv;
            hin = hout;
        }
        score = (score as isize + hin as isize) as usize;
    }
    score
}

/// Textbook edit distance with two DP rows, `O(|a|·|b|)` time.
pub fn levenshtein_two_row(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (j, &cl) in long.iter().enumerate() {
        cur[0] = j + 1;
        for (i, &cs) in short.iter().enumerate() {
            let sub = prev[i] + usize::from(cs != cl);
            cur[i + 1] = sub.min(prev[i + 1] + 1).min(cur[i] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Result of a band-limited edit distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditBound {
    Exact(usize),
    /// The true distance exceeds the band; this is a lower bound only.
    LowerBound(usize),
}

impl EditBound {
    pub fn value(self) -> usize {
        match self {
            EditBound::Exact(d) | EditBound::LowerBound(d) => d,
        }
    }
}

/// Edit distance restricted to DP cells within `band` of the main diagonal.
/// Exact whenever the distance is at most `band`.
pub fn levenshtein_banded(a: &[u8], b: &[u8], band: usize) -> EditBound {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let diff = long.len() - short.len();
    if diff > band {
        return EditBound::LowerBound(diff.max(band + 1));
    }
    const INF: usize = usize::MAX / 2;
    let n = short.len();
    let mut prev = vec![INF; n + 1];
    let mut cur = vec![INF; n + 1];
    for (i, v) in prev.iter_mut().enumerate().take(band.min(n) + 1) {
        *v = i;
    }
    for (j, &cl) in long.iter().enumerate() {
        let col = j + 1;
        let lo = col.saturating_sub(band);
        let hi = (col + band).min(n);
        cur.fill(INF);
        if lo == 0 {
            cur[0] = col;
        }
        for i in lo.max(1)..=hi {
            let sub = prev[i - 1] + usize::from(short[i - 1] != cl);
            cur[i] = sub.min(prev[i] + 1).min(cur[i - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[n];
    if d <= band {
        EditBound::Exact(d)
    } else {
        EditBound::LowerBound(band + 1)
    }
}

/// Empirical distribution of the length-`n` words of a sequence.
///
/// Words index a dense table of size `4^n`, reading the word as a base-4
/// number with the first base most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramDistribution {
    n: usize,
    counts: Vec<u64>,
    total: u64,
}

impl NGramDistribution {
    pub fn from_counts(n: usize, counts: Vec<u64>) -> Result<Self> {
        check_order(n)?;
        if counts.len() != 4usize.pow(n as u32) {
            return Err(Error::InvalidConfig(format!(
                "order {n} needs {} counts, got {}",
                4usize.pow(n as u32),
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidConfig("distribution with zero total".into()));
        }
        Ok(NGramDistribution { n, counts, total })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of windows, `|G| - n + 1`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn probability(&self, word: &[u8]) -> Option<f64> {
        if word.len() != self.n {
            return None;
        }
        word_index(word).map(|i| self.counts[i] as f64 / self.total as f64)
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidConfig(format!("word length {n} outside 1..={MAX_ORDER}")));
    }
    Ok(())
}

pub fn word_index(word: &[u8]) -> Option<usize> {
    word.iter().try_fold(0usize, |acc, &b| base_index(b).map(|i| acc * 4 + i))
}

pub fn word_string(index: usize, n: usize) -> String {
    (0..n)
        .rev()
        .map(|k| BASES[(index >> (2 * k)) & 3] as char)
        .collect()
}

/// Calls `f` with the index of every length-`n` window.
fn for_each_window(seq: &[u8], n: usize, mut f: impl FnMut(usize)) {
    let mask = (1usize << (2 * n)) - 1;
    let mut code = 0usize;
    for (i, &b) in seq.iter().enumerate() {
        code = ((code << 2) | base_index(b).expect("canonical bases")) & mask;
        if i + 1 >= n {
            f(code);
        }
    }
}

pub fn ngram_distribution(seq: &[u8], n: usize) -> Result<NGramDistribution> {
    check_order(n)?;
    if seq.len() < n {
        return Err(Error::GenomeTooShort {
            length: seq.len(),
            required: n,
        });
    }
    let mut counts = vec![0u64; 1 << (2 * n)];
    for_each_window(seq, n, |w| counts[w] += 1);
    let total = (seq.len() - n + 1) as u64;
    Ok(NGramDistribution { n, counts, total })
}

/// Conditional distribution of a base given the preceding `n - 1` bases.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<[f64; 4]>,
    support: Vec<u64>,
}

impl TransitionMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn contexts(&self) -> usize {
        self.rows.len()
    }

    /// The row for a context, or `None` when the context is never followed
    /// by a base in the genome.
    pub fn row(&self, context: usize) -> Option<&[f64; 4]> {
        (self.support[context] > 0).then(|| &self.rows[context])
    }

    pub fn is_empty_row(&self, context: usize) -> bool {
        self.support[context] == 0
    }

    /// Number of `n`-grams starting with this context.
    pub fn support(&self, context: usize) -> u64 {
        self.support[context]
    }

    pub fn prob(&self, context: usize, base: usize) -> f64 {
        self.rows[context][base]
    }
}

pub fn transition_matrix(seq: &[u8], n: usize) -> Result<TransitionMatrix> {
    let joint = ngram_distribution(seq, n)?;
    let contexts = 4usize.pow(n as u32 - 1);
    let mut rows = vec![[0.0; 4]; contexts];
    let mut support = vec![0u64; contexts];
    for ctx in 0..contexts {
        let c = &joint.counts[ctx * 4..ctx * 4 + 4];
        let s: u64 = c.iter().sum();
        support[ctx] = s;
        if s > 0 {
            for b in 0..4 {
                rows[ctx][b] = c[b] as f64 / s as f64;
            }
        }
    }
    Ok(TransitionMatrix { n, rows, support })
}

/// Rebuilds the order-`n` word probabilities from the order-`n-1`
/// distribution and the order-`n` transition matrix.
///
/// Every `(n-1)`-window except the final one (`terminal_context`) is followed
/// by a base, so `count_n(cb) = (count_{n-1}(c) - [c = terminal]) * T(b | c)`.
pub fn reconstruct_joint(lower: &NGramDistribution, matrix: &TransitionMatrix, terminal_context: &[u8]) -> Result<Vec<f64>> {
    if lower.n + 1 != matrix.n {
        return Err(Error::OrderMismatch {
            left: lower.n + 1,
            right: matrix.n,
        });
    }
    let terminal = word_index(terminal_context)
        .filter(|_| terminal_context.len() == lower.n)
        .ok_or_else(|| Error::InvalidConfig("terminal context must be a canonical (n-1)-word".into()))?;
    let total = (lower.total - 1) as f64;
    let mut out = vec![0.0; lower.counts.len() * 4];
    for (ctx, &c) in lower.counts.iter().enumerate() {
        let followed = (c - u64::from(ctx == terminal)) as f64;
        for b in 0..4 {
            out[ctx * 4 + b] = followed * matrix.rows[ctx][b] / total;
        }
    }
    Ok(out)
}

/// Hellinger distance between probability vectors on a shared support,
/// normalised to `[0, 1]`.
pub fn hellinger_probs(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (s / 2.0).sqrt().min(1.0)
}

pub fn hellinger(p: &NGramDistribution, q: &NGramDistribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::OrderMismatch { left: p.n, right: q.n });
    }
    Ok(hellinger_probs(&p.probabilities(), &q.probabilities()))
}

/// Shannon entropy in nats; zero-probability terms contribute nothing.
pub fn entropy_probs(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn entropy(p: &NGramDistribution) -> f64 {
    let t = p.total as f64;
    // Σ (c/t) ln(c/t) = (Σ c ln c)/t - ln t
    let s: f64 = p
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    (t.ln() - s / t).max(0.0)
}

/// `ln(4^n)`, the entropy of the uniform distribution over all n-words.
pub fn max_entropy(n: usize) -> f64 {
    n as f64 * 4f64.ln()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding: land on the last index with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws a sequence of `len` bases from the order-`n` Markov model fitted to
/// `seq`. Contexts that never occur in `seq` fall back to its base
/// composition.
pub fn markov_resample<R: Rng + ?Sized>(seq: &[u8], n: usize, len: usize, rng: &mut R) -> Result<Vec<u8>> {
    let matrix = transition_matrix(seq, n)?;
    let composition = ngram_distribution(seq, 1)?.probabilities();
    let mut out = Vec::with_capacity(len);
    if n > 1 {
        let start = ngram_distribution(seq, n - 1)?.probabilities();
        let w = sample_index(&start, rng);
        out.extend(word_string(w, n - 1).bytes().take(len));
    }
    let ctx_mask = 4usize.pow(n as u32 - 1);
    let mut ctx = out.iter().fold(0usize, |acc, &b| acc * 4 + base_index(b).unwrap_or(0)) % ctx_mask.max(1);
    while out.len() < len {
        let b = match matrix.row(ctx) {
            Some(row) => sample_index(row, rng),
            None => sample_index(&composition, rng),
        };
        out.push(BASES[b]);
        if n > 1 {
            ctx = (ctx * 4 + b) % ctx_mask;
        }
    }
    Ok(out)
}

/// Hellinger distances between `seq`'s order-`n` distribution and those of
/// `samples` Markov resamples of the same length. Sample `i` uses the stream
/// keyed by `(seed, i)`.
pub fn null_distances(seq: &[u8], n: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let reference = ngram_distribution(seq, n)?.probabilities();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &format!("null-sample-{i}"));
            let sample = markov_resample(seq, n, seq.len(), &mut r)?;
            let dist = ngram_distribution(&sample, n)?.probabilities();
            Ok(hellinger_probs(&dist, &reference))
        })
        .collect()
}

/// Monte-Carlo `(1 - alpha)` quantile of the Hellinger distance between a
/// genome and resamples of its own order-`n` Markov model. Distances above it
/// have an empirical p-value below `alpha`.
pub fn null_threshold(seq: &[u8], n: usize, alpha: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha = {alpha} is not in (0, 1)")));
    }
    if samples < 100 {
        return Err(Error::InvalidConfig(format!("null threshold needs at least 100 samples, got {samples}")));
    }
    let mut d = null_distances(seq, n, samples, seed)?;
    d.sort_by(f64::total_cmp);
    Ok(upper_quantile(&d, alpha))
}

/// Inverse-ECDF `(1 - alpha)` quantile of sorted values.
pub fn upper_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let k = ((1.0 - alpha) * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::synth;
    use proptest::prelude::*;

    fn full_matrix_levenshtein(a: &[u8], b: &[u8]) -> usize {
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

    fn dna(max: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0usize..4, 0..max).prop_map(|v| v.into_iter().map(|i| BASES[i]).collect())
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(b"ACGT", b"ACGT").unwrap(), 0);
        assert_eq!(hamming(b"AAAA", b"TTTT").unwrap(), 4);
        assert!(matches!(hamming(b"A", b"AC"), Err(Error::LengthMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein(b"", b"ACGT"), 4);
        assert_eq!(levenshtein(b"ACGT", b""), 4);
        assert_eq!(levenshtein(b"ACGTAC", b"ACGTAC"), 0);
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn levenshtein_multi_block_matches_two_row() {
        let mut rng = rng_from_seed(4);
        for (la, lb) in [(64, 64), (65, 63), (127, 200), (130, 128), (300, 257), (1000, 990)] {
            let a = synth::uniform_iid(la, &mut rng);
            let mut b = a.clone();
            b.truncate(lb.min(la));
            b.extend(synth::uniform_iid(lb.saturating_sub(la), &mut rng));
            for i in (0..b.len()).step_by(7) {
                b[i] = BASES[(i / 7) % 4];
            }
            assert_eq!(levenshtein(&a, &b), levenshtein_two_row(&a, &b), "{la}x{lb}");
        }
    }

    #[test]
    fn banded_is_exact_within_band() {
        let mut rng = rng_from_seed(9);
        let a = synth::uniform_iid(500, &mut rng);
        let mut b = a.clone();
        b.remove(100);
        b.insert(300, b'A');
        b[10] = if b[10] == b'C' { b'G' } else { b'C' };
        let d = levenshtein_two_row(&a, &b);
        assert_eq!(levenshtein_banded(&a, &b, 10), EditBound::Exact(d));
        let c = synth::uniform_iid(500, &mut rng);
        match levenshtein_banded(&a, &c, 5) {
            EditBound::LowerBound(v) => assert!(v <= levenshtein(&a, &c)),
            e => panic!("expected a lower bound, got {e:?}"),
        }
        assert_eq!(levenshtein_banded(b"AAAA", b"A", 1), EditBound::LowerBound(3));
    }

    #[test]
    fn ngram_examples() {
        let p = ngram_distribution(b"AAAA", 3).unwrap();
        assert_eq!(p.probability(b"AAA"), Some(1.0));
        assert_eq!(p.counts().iter().filter(|&&c| c > 0).count(), 1);
        let p = ngram_distribution(b"ACGT", 1).unwrap();
        assert!(p.probabilities().iter().all(|&x| x == 0.25));
        let p = ngram_distribution(b"ACGTACGT", 2).unwrap();
        assert_eq!(p.total(), 7);
        assert_eq!(p.probability(b"AC"), Some(2.0 / 7.0));
        assert_eq!(p.probability(b"TA"), Some(1.0 / 7.0));
        assert!(matches!(ngram_distribution(b"AC", 3), Err(Error::GenomeTooShort { length: 2, required: 3 })));
        assert_eq!(word_string(word_index(b"GATC").unwrap(), 4), "GATC");
    }

    #[test]
    fn transition_examples() {
        let t = transition_matrix(b"AAAA", 3).unwrap();
        assert_eq!(t.row(word_index(b"AA").unwrap()).unwrap()[0], 1.0);
        assert!(t.is_empty_row(word_index(b"CG").unwrap()));
        assert!(t.row(word_index(b"CG").unwrap()).is_none());
        let t = transition_matrix(b"ACAC", 2).unwrap();
        assert_eq!(t.prob(0, 1), 1.0);
        assert_eq!(t.prob(1, 0), 1.0);
        assert!(matches!(transition_matrix(b"AC", 3), Err(Error::GenomeTooShort { .. })));
    }

    #[test]
    fn reconstruction_from_lower_order() {
        let g = synth::uniform_iid(1000, &mut rng_from_seed(21));
        for n in 2..=4 {
            let lower = ngram_distribution(&g, n - 1).unwrap();
            let t = transition_matrix(&g, n).unwrap();
            let rebuilt = reconstruct_joint(&lower, &t, &g[g.len() - (n - 1)..]).unwrap();
            let direct = ngram_distribution(&g, n).unwrap().probabilities();
            for (a, b) in rebuilt.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
            for ctx in 0..t.contexts() {
                if let Some(row) = t.row(ctx) {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hellinger_examples() {
        let p = ngram_distribution(b"ACGTTGCA", 1).unwrap();
        assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        let a = ngram_distribution(b"AAAA", 1).unwrap();
        let c = ngram_distribution(b"CCGG", 1).unwrap();
        assert!((hellinger(&a, &c).unwrap() - 1.0).abs() < 1e-15);
        // (0.1, 0.2, 0.3, 0.4) vs (0.25, 0.25, 0.25, 0.25):
        // Σ(√p-√q)² = 0.0337722 + 0.0027864 + 0.0022774 + 0.0175445 = 0.0563805
        let p = NGramDistribution::from_counts(1, vec![1, 2, 3, 4]).unwrap();
        let q = NGramDistribution::from_counts(1, vec![1, 1, 1, 1]).unwrap();
        let by_hand = {
            let terms = [0.1f64, 0.2, 0.3, 0.4].map(|x| (x.sqrt() - 0.5).powi(2));
            (terms.iter().sum::<f64>() / 2.0).sqrt()
        };
        assert!((hellinger(&p, &q).unwrap() - by_hand).abs() < 1e-15);
        assert!((by_hand - (0.0563805f64 / 2.0).sqrt()).abs() < 1e-7);
        let pair = ngram_distribution(b"ACGT", 2).unwrap();
        assert!(matches!(hellinger(&p, &pair), Err(Error::OrderMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn entropy_examples() {
        let point = ngram_distribution(b"AAAAAA", 3).unwrap();
        assert_eq!(entropy(&point), 0.0);
        let uniform = NGramDistribution::from_counts(3, vec![5; 64]).unwrap();
        assert!((entropy(&uniform) - 64f64.ln()).abs() < 1e-12);
        assert!((64f64.ln() - 4.158883).abs() < 1e-6);
        let half = NGramDistribution::from_counts(1, vec![3, 3, 0, 0]).unwrap();
        assert!((entropy(&half) - 2f64.ln()).abs() < 1e-12);
        assert!((entropy_probs(&[0.5, 0.5, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(max_entropy(1), 4f64.ln());
        assert!((max_entropy(3) - 64f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn null_threshold_behaviour() {
        let g = synth::uniform_iid(2000, &mut rng_from_seed(1));
        let a = null_threshold(&g, 2, 0.01, 100, 5).unwrap();
        let b = null_threshold(&g, 2, 0.01, 100, 5).unwrap();
        assert_eq!(a, b);
        let d = null_distances(&g, 2, 100, 5).unwrap();
        let low = null_threshold(&g, 2, 0.999, 100, 5).unwrap();
        assert!(d.iter().all(|&x| low <= x));
        assert!(d.iter().filter(|&&x| x > a).count() <= 1);
        assert!(null_threshold(&g, 2, 0.01, 10, 5).is_err());
        assert!(null_threshold(&g, 2, 1.0, 100, 5).is_err());
        assert!(matches!(null_threshold(b"AC", 3, 0.01, 100, 5), Err(Error::GenomeTooShort { .. })));
    }

    #[test]
    fn null_threshold_shrinks_with_length() {
        let model = synth::MarkovModel::random(2, [0.3, 0.2, 0.2, 0.3], 4.0, &mut rng_from_seed(3)).unwrap();
        for n in [1, 3] {
            let mut prev = f64::INFINITY;
            for len in [1_000, 10_000, 100_000] {
                let mut mean = 0.0;
                for seed in 0..3 {
                    let g = model.generate(len, &mut rng_from_seed(100 + seed));
                    mean += null_threshold(&g, n, 0.01, 100, seed).unwrap() / 3.0;
                }
                assert!(mean < prev, "n={n} len={len}: {mean} !< {prev}");
                prev = mean;
            }
        }
    }

    proptest! {
        #[test]
        fn levenshtein_matches_textbook(a in dna(40), b in dna(40)) {
            let oracle = full_matrix_levenshtein(&a, &b);
            prop_assert_eq!(levenshtein(&a, &b), oracle);
            prop_assert_eq!(levenshtein_two_row(&a, &b), oracle);
            prop_assert!(levenshtein(&a, &b) >= a.len().abs_diff(b.len()));
        }

        #[test]
        fn hamming_bounds_levenshtein(pair in (1usize..60).prop_flat_map(|n| (proptest::collection::vec(0usize..4, n), proptest::collection::vec(0usize..4, n)))) {
            let a: Vec<u8> = pair.0.iter().map(|&i| BASES[i]).collect();
            let b: Vec<u8> = pair.1.iter().map(|&i| BASES[i]).collect();
            prop_assert!(hamming(&a, &b).unwrap() >= levenshtein(&a, &b));
        }

        #[test]
        fn hellinger_is_a_metric(seqs in proptest::collection::vec(dna(200).prop_filter("len", |s| s.len() >= 3), 3)) {
            let d: Vec<_> = seqs.iter().map(|s| ngram_distribution(s, 2).unwrap()).collect();
            let ab = hellinger(&d[0], &d[1]).unwrap();
            let ba = hellinger(&d[1], &d[0]).unwrap();
            let bc = hellinger(&d[1], &d[2]).unwrap();
            let ac = hellinger(&d[0], &d[2]).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn entropy_bounded_and_label_invariant(counts in proptest::collection::vec(0u64..50, 16), shift in 0usize..16) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let p = NGramDistribution::from_counts(2, counts.clone()).unwrap();
            let mut rotated = counts.clone();
            rotated.rotate_left(shift);
            let q = NGramDistribution::from_counts(2, rotated).unwrap();
            prop_assert!(entropy(&p) <= max_entropy(2) + 1e-12);
            prop_assert!((entropy(&p) - entropy(&q)).abs() < 1e-12);
            prop_assert!((entropy(&p) - entropy_probs(&p.probabilities())).abs() < 1e-12);
        }
    }
}
