//! Repeated windows and reverse-complement palindromes, and how their counts
//! fall as a genome is degraded.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mutation::{degrade, MutationConfig};
use crate::rng::SimRng;
use crate::sequence_io::{base_index, complement};

/// Multiplicative mixer for keys that are already well-distributed integers.
#[derive(Default)]
struct WordHasher(u64);

impl Hasher for WordHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, x: u64) {
        let mut z = (self.0 ^ x).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        self.0 = z ^ (z >> 31);
    }
}

type WordMap<V> = HashMap<u64, V, BuildHasherDefault<WordHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatProfile {
    pub k: usize,
    /// Windows whose word occurs at two or more positions.
    pub count: usize,
    /// Distinct words occurring at two or more positions.
    pub distinct_words: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PalindromeProfile {
    pub h: usize,
    /// Centres whose maximal palindromic half-length is at least `h`.
    pub count: usize,
}

const MERSENNE_61: u64 = (1 << 61) - 1;

fn mul_mod61(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// Key of every length-`k` window. For `k <= 32` keys are the packed 2-bit
/// words and therefore exact; longer windows get a Karp-Rabin hash modulo
/// `2^61 - 1`.
fn window_keys(seq: &[u8], k: usize) -> Vec<u64> {
    let windows = seq.len() + 1 - k;
    let mut keys = Vec::with_capacity(windows);
    if k <= 32 {
        let mask = if k == 32 { u64::MAX } else { (1u64 << (2 * k)) - 1 };
        let mut code = 0u64;
        for (i, &b) in seq.iter().enumerate() {
            code = ((code << 2) | base_index(b).expect("canonical bases") as u64) & mask;
            if i + 1 >= k {
                keys.push(code);
            }
        }
    } else {
        const BASE: u64 = 0x1F3D_5B79_A2C4_E681 % MERSENNE_61;
        let mut top = 1u64;
        for _ in 1..k {
            top = mul_mod61(top, BASE);
        }
        let digit = |b: u8| base_index(b).expect("canonical bases") as u64 + 1;
        let mut h = 0u64;
        for &b in &seq[..k] {
            h = (mul_mod61(h, BASE) + digit(b)) % MERSENNE_61;
        }
        keys.push(h);
        for i in k..seq.len() {
            let drop = mul_mod61(digit(seq[i - k]), top);
            h = (h + MERSENNE_61 - drop) % MERSENNE_61;
            h = (mul_mod61(h, BASE) + digit(seq[i])) % MERSENNE_61;
            keys.push(h);
        }
    }
    keys
}

/// Counts repeated windows of length `k` in expected `O(|G|)` time.
pub fn count_repeats(seq: &[u8], k: usize) -> Result<RepeatProfile> {
    if k == 0 || k > seq.len() {
        return Err(Error::GenomeTooShort {
            length: seq.len(),
            required: k.max(1),
        });
    }
    let keys = window_keys(seq, k);
    let mut tally: WordMap<u32> = WordMap::default();
    tally.reserve(keys.len());
    for &key in &keys {
        *tally.entry(key).or_default() += 1;
    }
    if k <= 32 {
        let repeated = tally.values().filter(|&&c| c >= 2);
        let (count, distinct_words) = repeated.fold((0usize, 0usize), |(n, d), &c| (n + c as usize, d + 1));
        return Ok(RepeatProfile { k, count, distinct_words });
    }
    // Hashed keys: confirm equal words among colliding windows.
    let mut groups: WordMap<Vec<usize>> = WordMap::default();
    for (pos, key) in keys.iter().enumerate() {
        if tally[key] >= 2 {
            groups.entry(*key).or_default().push(pos);
        }
    }
    let mut count = 0;
    let mut distinct_words = 0;
    for positions in groups.values_mut() {
        positions.sort_unstable_by(|&a, &b| seq[a..a + k].cmp(&seq[b..b + k]).then(a.cmp(&b)));
        let mut start = 0;
        while start < positions.len() {
            let word = &seq[positions[start]..positions[start] + k];
            let mut end = start + 1;
            while end < positions.len() && &seq[positions[end]..positions[end] + k] == word {
                end += 1;
            }
            if end - start >= 2 {
                count += end - start;
                distinct_words += 1;
            }
            start = end;
        }
    }
    Ok(RepeatProfile { k, count, distinct_words })
}

/// Maximal reverse-complement half-length at each of the `|G| - 1`
/// inter-base centres, capped at `cap`. Centre `c` sits between bases `c`
/// and `c + 1`.
pub fn palindrome_arms(seq: &[u8], cap: usize) -> Vec<usize> {
    let len = seq.len();
    (0..len.saturating_sub(1))
        .map(|c| {
            let mut arm = 0;
            while arm < cap && arm <= c && c + 1 + arm < len && seq[c - arm] == complement(seq[c + 1 + arm]) {
                arm += 1;
            }
            arm
        })
        .collect()
}

fn check_half_length(seq: &[u8], h: usize) -> Result<()> {
    if h == 0 || h > seq.len() / 2 {
        return Err(Error::GenomeTooShort {
            length: seq.len(),
            required: 2 * h.max(1),
        });
    }
    Ok(())
}

pub fn count_palindromes(seq: &[u8], h: usize) -> Result<PalindromeProfile> {
    Ok(palindrome_profile(seq, &[h])?[0])
}

/// Palindrome counts for several half-lengths from one scan.
pub fn palindrome_profile(seq: &[u8], hs: &[usize]) -> Result<Vec<PalindromeProfile>> {
    for &h in hs {
        check_half_length(seq, h)?;
    }
    let cap = hs.iter().copied().max().unwrap_or(0);
    let arms = palindrome_arms(seq, cap);
    Ok(hs
        .iter()
        .map(|&h| PalindromeProfile {
            h,
            count: arms.iter().filter(|&&a| a >= h).count(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Repeats,
    Palindromes,
}

/// Counts per checkpoint (rows) and length (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttritionTable {
    pub kind: StructureKind,
    pub lengths: Vec<usize>,
    pub iterations: Vec<u64>,
    pub counts: Vec<Vec<usize>>,
    /// Distinct repeated words, for repeat tables only.
    pub distinct: Option<Vec<Vec<usize>>>,
}

impl AttritionTable {
    pub fn column(&self, length: usize) -> Option<Vec<usize>> {
        let j = self.lengths.iter().position(|&l| l == length)?;
        Some(self.counts.iter().map(|row| row[j]).collect())
    }

    /// CSV with one row per iteration and one column per length; repeat
    /// tables append `distinct_<k>` columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iterations".to_string()];
        header.extend(self.lengths.iter().map(|l| l.to_string()));
        if self.distinct.is_some() {
            header.extend(self.lengths.iter().map(|l| format!("distinct_{l}")));
        }
        w.write_record(&header)?;
        for (i, t) in self.iterations.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.counts[i].iter().map(|c| c.to_string()));
            if let Some(d) = &self.distinct {
                row.extend(d[i].iter().map(|c| c.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Degrades `seq` through `iterations` and tabulates repeat or palindrome
/// counts at every grid point.
pub fn attrition_table(
    seq: &[u8],
    config: &MutationConfig,
    iterations: &[u64],
    lengths: &[usize],
    kind: StructureKind,
    rng: &mut SimRng,
) -> Result<AttritionTable> {
    if iterations.is_empty() || lengths.is_empty() {
        return Err(Error::InvalidConfig("attrition table needs iterations and lengths".into()));
    }
    let mut grid = iterations.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let last = *grid.last().expect("non-empty");
    let mut checkpoints = grid.clone();
    if checkpoints[0] != 0 {
        checkpoints.insert(0, 0);
    }
    let series = degrade(seq, config, last, &checkpoints, rng)?;
    let snapshots: Vec<_> = series.snapshots.into_iter().filter(|(t, _)| grid.contains(t)).collect();
    let rows: Vec<(Vec<usize>, Vec<usize>)> = snapshots
        .par_iter()
        .map(|(_, s)| match kind {
            StructureKind::Repeats => {
                let profiles = lengths.iter().map(|&k| count_repeats(s, k)).collect::<Result<Vec<_>>>()?;
                Ok((profiles.iter().map(|p| p.count).collect(), profiles.iter().map(|p| p.distinct_words).collect()))
            }
            StructureKind::Palindromes => {
                let profiles = palindrome_profile(s, lengths)?;
                Ok((profiles.iter().map(|p| p.count).collect(), Vec::new()))
            }
        })
        .collect::<Result<_>>()?;
    let (counts, distinct): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(AttritionTable {
        kind,
        lengths: lengths.to_vec(),
        iterations: grid,
        counts,
        distinct: (kind == StructureKind::Repeats).then_some(distinct),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sequence_io::BASES;
    use crate::synth;
    use proptest::prelude::*;

    fn brute_repeats(seq: &[u8], k: usize) -> usize {
        let mut tally: HashMap<&[u8], usize> = HashMap::new();
        for w in seq.windows(k) {
            *tally.entry(w).or_default() += 1;
        }
        seq.windows(k).filter(|w| tally[w] >= 2).count()
    }

    fn brute_palindromes(seq: &[u8], h: usize) -> usize {
        (h..=seq.len() - h)
            .filter(|&c| (0..h).all(|i| seq[c - 1 - i] == complement(seq[c + i])))
            .count()
    }

    #[test]
    fn repeat_examples() {
        assert_eq!(count_repeats(b"AAAA", 2).unwrap().count, 3);
        assert_eq!(count_repeats(b"AAAA", 2).unwrap().distinct_words, 1);
        assert_eq!(count_repeats(b"ACGT", 2).unwrap().count, 0);
        assert!(matches!(count_repeats(b"ACGT", 5), Err(Error::GenomeTooShort { .. })));
        assert!(count_repeats(b"ACGT", 0).is_err());
    }

    #[test]
    fn palindrome_examples() {
        assert_eq!(count_palindromes(b"ATTCGATTAATCGAAT", 8).unwrap().count, 1);
        assert_eq!(count_palindromes(b"AT", 1).unwrap().count, 1);
        assert_eq!(count_palindromes(b"AA", 1).unwrap().count, 0);
        assert!(count_palindromes(b"ACG", 2).is_err());
        assert!(count_palindromes(b"ACG", 0).is_err());
    }

    #[test]
    fn long_windows_use_verified_hashes() {
        let mut rng = rng_from_seed(12);
        let g = synth::repeat_rich(20, 45, 30, &mut rng);
        for k in [33, 40, 45, 46, 60] {
            assert_eq!(count_repeats(&g, k).unwrap().count, brute_repeats(&g, k), "k={k}");
        }
        // Motif windows plus windows running into spacers that happen to agree.
        let p = count_repeats(&g, 45).unwrap();
        assert!(p.count >= 20 && p.distinct_words >= 1);
    }

    #[test]
    fn attrition_identity_and_decay() {
        let mut rng = rng_from_seed(4);
        let g = synth::repeat_rich(100, 29, 40, &mut rng);
        let zero = attrition_table(&g, &MutationConfig::zero(), &[0, 100, 200], &[20, 29], StructureKind::Repeats, &mut rng).unwrap();
        assert!(zero.counts.iter().all(|row| *row == zero.counts[0]));
        assert!(zero.column(29).unwrap()[0] >= 100);
        let decayed = attrition_table(&g, &MutationConfig::snp_only(1e-3), &[0, 100, 500, 2000], &[29], StructureKind::Repeats, &mut rng).unwrap();
        let col = decayed.column(29).unwrap();
        assert!(col.windows(2).all(|w| w[0] >= w[1]), "{col:?}");
        assert_eq!(*col.last().unwrap(), 0);
        let mut csv = Vec::new();
        decayed.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with(&format!("iterations,29,distinct_29\n0,{},", col[0])), "{csv}");
    }

    #[test]
    fn palindrome_table_shape() {
        let mut rng = rng_from_seed(8);
        let g = synth::uniform_iid(20_000, &mut rng);
        let t = attrition_table(&g, &MutationConfig::default(), &[0, 100, 200], &[6, 8, 10], StructureKind::Palindromes, &mut rng).unwrap();
        assert_eq!(t.counts.len(), 3);
        assert!(t.distinct.is_none());
        for row in &t.counts {
            assert!(row.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    fn dna(min: usize, max: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0usize..4, min..max).prop_map(|v| v.into_iter().map(|i| BASES[i]).collect())
    }

    proptest! {
        #[test]
        fn repeats_match_brute_force(seq in dna(12, 400), k in 1usize..12) {
            let p = count_repeats(&seq, k).unwrap();
            prop_assert_eq!(p.count, brute_repeats(&seq, k));
            prop_assert!(p.count <= seq.len() - k + 1);
            if k < seq.len() {
                prop_assert!(p.count >= count_repeats(&seq, k + 1).unwrap().count);
            }
        }

        #[test]
        fn palindromes_match_brute_force(seq in dna(16, 400), h in 1usize..8) {
            prop_assert_eq!(count_palindromes(&seq, h).unwrap().count, brute_palindromes(&seq, h));
            prop_assert!(count_palindromes(&seq, h).unwrap().count >= count_palindromes(&seq, h + 1).unwrap().count);
        }
    }
}
