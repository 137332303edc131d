//! Simulated mutation: SNPs, short indels and structural events, applied once
//! or iterated with checkpoint snapshots.
//!
//! Point events use a per-base exclusive categorical draw over
//! `{SNP, insertion start, deletion start, nothing}`. The draw is realised by
//! geometric skipping between event sites, which gives the same per-base
//! distribution while costing time proportional to the number of events.
//! Structural events (inversion, tandem duplication, translocation) follow as
//! Poisson counts per megabase.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::sequence_io::{reverse_complement, BASES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MutationConfig {
    /// Per-base substitution probability per iteration.
    pub p_snp: f64,
    /// Per-base probability that an insertion starts after the base.
    pub p_ins: f64,
    /// Per-base probability that a deletion starts at the base.
    pub p_del: f64,
    /// Expected inversions per megabase per iteration.
    pub p_inv: f64,
    /// Expected tandem duplications per megabase per iteration.
    pub p_dup: f64,
    /// Expected translocations per megabase per iteration.
    pub p_trans: f64,
    /// Success probability of the geometric indel length (mean `1/p`).
    pub indel_len_geom_p: f64,
    pub sv_len_min: usize,
    pub sv_len_max: usize,
    pub seed: u64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            p_snp: 1e-3,
            p_ins: 0.0,
            p_del: 0.0,
            p_inv: 0.0,
            p_dup: 0.0,
            p_trans: 0.0,
            indel_len_geom_p: 0.5,
            sv_len_min: 50,
            sv_len_max: 1000,
            seed: 0,
        }
    }
}

pub const CONFIG_KEYS: [&str; 10] = [
    "p_snp",
    "p_ins",
    "p_del",
    "p_inv",
    "p_dup",
    "p_trans",
    "indel_len_geom_p",
    "sv_len_min",
    "sv_len_max",
    "seed",
];

impl MutationConfig {
    /// All event probabilities and rates zero.
    pub fn zero() -> Self {
        MutationConfig {
            p_snp: 0.0,
            ..MutationConfig::default()
        }
    }

    pub fn snp_only(p_snp: f64) -> Self {
        MutationConfig {
            p_snp,
            ..MutationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [("p_snp", self.p_snp), ("p_ins", self.p_ins), ("p_del", self.p_del)];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.p_snp + self.p_ins + self.p_del > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig("p_snp + p_ins + p_del exceeds 1".into()));
        }
        for (name, r) in [("p_inv", self.p_inv), ("p_dup", self.p_dup), ("p_trans", self.p_trans)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {r} must be a finite non-negative rate")));
            }
        }
        if !(self.indel_len_geom_p > 0.0 && self.indel_len_geom_p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "indel_len_geom_p = {} is not in (0, 1]",
                self.indel_len_geom_p
            )));
        }
        if self.sv_len_min < 2 || self.sv_len_max < self.sv_len_min {
            return Err(Error::InvalidConfig(format!(
                "structural length range {}..={} needs min >= 2 and max >= min",
                self.sv_len_min, self.sv_len_max
            )));
        }
        Ok(())
    }

    /// True when no event can change the sequence length.
    pub fn preserves_length(&self) -> bool {
        self.p_ins == 0.0 && self.p_del == 0.0 && self.p_dup == 0.0
    }

    pub fn is_identity(&self) -> bool {
        self.p_snp == 0.0
            && self.p_ins == 0.0
            && self.p_del == 0.0
            && self.p_inv == 0.0
            && self.p_dup == 0.0
            && self.p_trans == 0.0
    }

    /// Sets one field from its textual key, as used by config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| Error::InvalidConfig(format!("{key} = {value}: {e}"));
        let float = || value.parse::<f64>().map_err(|e| bad(&e));
        let int = || value.parse::<usize>().map_err(|e| bad(&e));
        match key {
            "p_snp" => self.p_snp = float()?,
            "p_ins" => self.p_ins = float()?,
            "p_del" => self.p_del = float()?,
            "p_inv" => self.p_inv = float()?,
            "p_dup" => self.p_dup = float()?,
            "p_trans" => self.p_trans = float()?,
            "indel_len_geom_p" => self.indel_len_geom_p = float()?,
            "sv_len_min" => self.sv_len_min = int()?,
            "sv_len_max" => self.sv_len_max = int()?,
            "seed" => self.seed = value.parse::<u64>().map_err(|e| bad(&e))?,
            _ => return Err(Error::InvalidConfig(format!("unknown mutation key `{key}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Snp,
    Ins,
    Del,
    Inv,
    Dup,
    Trans,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Snp => "SNP",
            EventKind::Ins => "INS",
            EventKind::Del => "DEL",
            EventKind::Inv => "INV",
            EventKind::Dup => "DUP",
            EventKind::Trans => "TRANS",
        })
    }
}

impl FromStr for EventKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "SNP" => EventKind::Snp,
            "INS" => EventKind::Ins,
            "DEL" => EventKind::Del,
            "INV" => EventKind::Inv,
            "DUP" => EventKind::Dup,
            "TRANS" => EventKind::Trans,
            _ => return Err(Error::InvalidConfig(format!("unknown event kind `{s}`"))),
        })
    }
}

/// One applied mutation. Point events are positioned in the coordinates of
/// the sequence before the iteration; structural events in the coordinates
/// of the sequence at the moment they were applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationEvent {
    pub kind: EventKind,
    pub position: usize,
    pub length: usize,
    /// Substituted base (SNP) or inserted bases (INS); empty otherwise.
    pub payload: Vec<u8>,
    /// Reinsertion offset of a translocated segment.
    pub target: Option<usize>,
}

fn substitute<R: Rng + ?Sized>(base: u8, rng: &mut R) -> u8 {
    // Uniform over the three other bases.
    let from = crate::sequence_io::base_index(base).unwrap_or(0);
    let step = rng.random_range(1..4);
    BASES[(from + step) % 4]
}

fn random_bases<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.random_range(0..4)]).collect()
}

/// Draws the point events of one iteration, ordered by position.
fn draw_point_events(len: usize, config: &MutationConfig, rng: &mut SimRng) -> Vec<MutationEvent> {
    let total = config.p_snp + config.p_ins + config.p_del;
    let mut events = Vec::new();
    if total <= 0.0 || len == 0 {
        return events;
    }
    let gap = Geometric::new(total.min(1.0)).expect("validated probability");
    let indel_len = Geometric::new(config.indel_len_geom_p).expect("validated probability");
    let mut pos = 0usize;
    loop {
        let skip = gap.sample(rng);
        pos = match usize::try_from(skip).ok().and_then(|s| pos.checked_add(s)) {
            Some(p) if p < len => p,
            _ => break,
        };
        let u = rng.random::<f64>() * total;
        if u < config.p_snp {
            events.push(MutationEvent {
                kind: EventKind::Snp,
                position: pos,
                length: 1,
                payload: Vec::new(),
                target: None,
            });
            pos += 1;
        } else if u < config.p_snp + config.p_ins {
            let n = 1 + indel_len.sample(rng).min(len as u64) as usize;
            events.push(MutationEvent {
                kind: EventKind::Ins,
                position: pos,
                length: n,
                payload: random_bases(n, rng),
                target: None,
            });
            pos += 1;
        } else {
            let n = (1 + indel_len.sample(rng).min(len as u64) as usize).min(len - pos);
            events.push(MutationEvent {
                kind: EventKind::Del,
                position: pos,
                length: n,
                payload: Vec::new(),
                target: None,
            });
            // Deleted bases draw no further events.
            pos += n;
        }
    }
    events
}

fn draw_structural_events(len: usize, config: &MutationConfig, rng: &mut SimRng) -> Vec<MutationEvent> {
    let mut events = Vec::new();
    for (kind, rate) in [
        (EventKind::Inv, config.p_inv),
        (EventKind::Dup, config.p_dup),
        (EventKind::Trans, config.p_trans),
    ] {
        if rate <= 0.0 {
            continue;
        }
        let mean = rate * len as f64 / 1e6;
        let count = if mean > 0.0 {
            Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        for _ in 0..count {
            let length = rng.random_range(config.sv_len_min..=config.sv_len_max);
            if length >= len {
                log::debug!("skipping {kind} of length {length} on a sequence of length {len}");
                continue;
            }
            let position = rng.random_range(0..=len - length);
            let target = (kind == EventKind::Trans).then(|| rng.random_range(0..=len - length));
            events.push(MutationEvent {
                kind,
                position,
                length,
                payload: Vec::new(),
                target,
            });
        }
    }
    // Right-to-left; ties keep draw order.
    events.sort_by(|a, b| b.position.cmp(&a.position));
    events
}

/// Applies sorted, non-overlapping point events to `seq`.
fn apply_point_events(seq: &mut Vec<u8>, events: &mut [MutationEvent], rng: &mut SimRng) {
    let changes_length = events.iter().any(|e| e.kind != EventKind::Snp);
    if !changes_length {
        for e in events.iter_mut() {
            let b = substitute(seq[e.position], rng);
            seq[e.position] = b;
            e.payload = vec![b];
        }
        return;
    }
    let mut out = Vec::with_capacity(seq.len() + 16);
    let mut cursor = 0usize;
    for e in events.iter_mut() {
        out.extend_from_slice(&seq[cursor..e.position]);
        match e.kind {
            EventKind::Snp => {
                let b = substitute(seq[e.position], rng);
                out.push(b);
                e.payload = vec![b];
                cursor = e.position + 1;
            }
            EventKind::Ins => {
                out.push(seq[e.position]);
                out.extend_from_slice(&e.payload);
                cursor = e.position + 1;
            }
            EventKind::Del => cursor = e.position + e.length,
            _ => unreachable!("structural event in point pass"),
        }
    }
    out.extend_from_slice(&seq[cursor..]);
    *seq = out;
}

fn apply_structural_event(seq: &mut Vec<u8>, e: &MutationEvent) {
    let range = e.position..e.position + e.length;
    match e.kind {
        EventKind::Inv => {
            let inverted = reverse_complement(&seq[range.clone()]);
            seq[range].copy_from_slice(&inverted);
        }
        EventKind::Dup => {
            let copy = seq[range.clone()].to_vec();
            seq.splice(range.end..range.end, copy);
        }
        EventKind::Trans => {
            let segment: Vec<u8> = seq.drain(range).collect();
            let target = e.target.unwrap_or(0).min(seq.len());
            seq.splice(target..target, segment);
        }
        _ => unreachable!("point event in structural pass"),
    }
}

/// Applies one iteration of mutation in place and returns the events.
/// A sequence that would become empty through deletions keeps one base.
pub fn mutate_in_place(seq: &mut Vec<u8>, config: &MutationConfig, rng: &mut SimRng) -> Vec<MutationEvent> {
    let mut events = draw_point_events(seq.len(), config, rng);
    if events.iter().all(|e| e.kind == EventKind::Del) && events.iter().map(|e| e.length).sum::<usize>() >= seq.len() {
        // Keep the first base so the genome stays non-empty.
        if let Some(first) = events.first_mut() {
            if first.position == 0 {
                first.length -= 1;
                first.position = 1;
            }
        }
        events.retain(|e| e.length > 0);
    }
    apply_point_events(seq, &mut events, rng);
    let structural = draw_structural_events(seq.len(), config, rng);
    for e in &structural {
        apply_structural_event(seq, e);
    }
    events.extend(structural);
    events
}

/// One iteration of mutation; returns the new sequence and its events.
pub fn mutate_once(bases: &[u8], config: &MutationConfig, rng: &mut SimRng) -> (Vec<u8>, Vec<MutationEvent>) {
    let mut seq = bases.to_vec();
    let events = mutate_in_place(&mut seq, config, rng);
    (seq, events)
}

/// Checks that checkpoints are strictly increasing, start at 0 and do not
/// exceed `iterations`.
pub fn validate_checkpoints(checkpoints: &[u64], iterations: u64) -> Result<()> {
    if checkpoints.first() != Some(&0) {
        return Err(Error::InvalidConfig("checkpoints must start with 0".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("checkpoints must be strictly increasing".into()));
    }
    if checkpoints.last().is_some_and(|&c| c > iterations) {
        return Err(Error::InvalidConfig(format!("checkpoint beyond {iterations} iterations")));
    }
    Ok(())
}

/// Iterates mutation `iterations` times, calling `on_checkpoint` with the
/// sequence at each checkpoint and `on_events` with every iteration's events.
/// Only the current sequence is held in memory.
pub fn degrade_with<F, E>(
    bases: &[u8],
    config: &MutationConfig,
    iterations: u64,
    checkpoints: &[u64],
    rng: &mut SimRng,
    mut on_checkpoint: F,
    mut on_events: E,
) -> Result<()>
where
    F: FnMut(u64, &[u8]) -> Result<()>,
    E: FnMut(u64, Vec<MutationEvent>),
{
    config.validate()?;
    validate_checkpoints(checkpoints, iterations)?;
    let mut seq = bases.to_vec();
    let mut next = checkpoints.iter().peekable();
    for t in 0..=iterations {
        if t > 0 {
            let events = mutate_in_place(&mut seq, config, rng);
            on_events(t, events);
        }
        if next.peek() == Some(&&t) {
            next.next();
            on_checkpoint(t, &seq)?;
        }
    }
    Ok(())
}

/// Snapshots and event log of a degradation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegradedSeries {
    pub snapshots: Vec<(u64, Vec<u8>)>,
    pub events: Vec<(u64, MutationEvent)>,
}

/// Iterated mutation returning the sequence at every checkpoint. An empty
/// checkpoint list means `[0, iterations]`.
pub fn degrade(
    bases: &[u8],
    config: &MutationConfig,
    iterations: u64,
    checkpoints: &[u64],
    rng: &mut SimRng,
) -> Result<DegradedSeries> {
    let default_points;
    let checkpoints = if checkpoints.is_empty() {
        default_points = if iterations == 0 { vec![0] } else { vec![0, iterations] };
        &default_points[..]
    } else {
        checkpoints
    };
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut events = Vec::new();
    degrade_with(
        bases,
        config,
        iterations,
        checkpoints,
        rng,
        |t, s| {
            snapshots.push((t, s.to_vec()));
            Ok(())
        },
        |t, evs| events.extend(evs.into_iter().map(|e| (t, e))),
    )?;
    Ok(DegradedSeries { snapshots, events })
}

/// Degrades and returns only the final sequence.
pub fn degrade_to(bases: &[u8], config: &MutationConfig, iterations: u64, rng: &mut SimRng) -> Result<Vec<u8>> {
    let mut last = Vec::new();
    let checkpoints: &[u64] = if iterations == 0 { &[0] } else { &[0, iterations] };
    degrade_with(
        bases,
        config,
        iterations,
        checkpoints,
        rng,
        |_, s| {
            last = s.to_vec();
            Ok(())
        },
        |_, _| {},
    )?;
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::synth;

    #[test]
    fn zero_config_is_identity() {
        let g = b"ACGTACGTTTGACA".to_vec();
        let mut rng = rng_from_seed(1);
        let (out, events) = mutate_once(&g, &MutationConfig::zero(), &mut rng);
        assert_eq!(out, g);
        assert!(events.is_empty());
        let series = degrade(&g, &MutationConfig::zero(), 500, &[0, 100, 500], &mut rng).unwrap();
        assert!(series.snapshots.iter().all(|(_, s)| *s == g));
    }

    #[test]
    fn forced_substitution_changes_every_base() {
        let cfg = MutationConfig::snp_only(1.0);
        for seed in 0..20 {
            let (out, events) = mutate_once(b"AAAA", &cfg, &mut rng_from_seed(seed));
            assert_eq!(out.len(), 4);
            assert!(out.iter().all(|&b| b != b'A'));
            assert_eq!(events.len(), 4);
        }
    }

    #[test]
    fn snp_count_concentrates() {
        // Binomial(1e6, 1e-3): mean 1000, sd ~31.6; mean over 100 seeds has sd ~3.2.
        let genome = synth::uniform_iid(1_000_000, &mut rng_from_seed(99));
        let cfg = MutationConfig::snp_only(1e-3);
        let total: usize = (1..=100u64)
            .map(|seed| mutate_once(&genome, &cfg, &mut rng_from_seed(seed)).1.len())
            .sum();
        let mean = total as f64 / 100.0;
        assert!((950.0..=1050.0).contains(&mean), "mean SNP count {mean}");
    }

    #[test]
    fn degrade_checkpoints_and_length() {
        let g = synth::uniform_iid(3000, &mut rng_from_seed(5));
        let cps = [0, 250, 500, 1000, 2000];
        let series = degrade(&g, &MutationConfig::default(), 2000, &cps, &mut rng_from_seed(3)).unwrap();
        assert_eq!(series.snapshots.len(), 5);
        assert_eq!(series.snapshots[0].1, g);
        for (t, s) in &series.snapshots {
            assert_eq!(s.len(), g.len(), "checkpoint {t}");
        }
        let only_zero = degrade(&g, &MutationConfig::default(), 0, &[0], &mut rng_from_seed(3)).unwrap();
        assert_eq!(only_zero.snapshots, vec![(0, g.clone())]);
    }

    #[test]
    fn degrade_is_deterministic() {
        let g = synth::uniform_iid(2000, &mut rng_from_seed(5));
        let cfg = MutationConfig {
            p_snp: 1e-3,
            p_ins: 2e-4,
            p_del: 2e-4,
            p_inv: 500.0,
            p_dup: 500.0,
            p_trans: 500.0,
            sv_len_min: 5,
            sv_len_max: 40,
            ..MutationConfig::default()
        };
        let a = degrade(&g, &cfg, 200, &[0, 50, 200], &mut rng_from_seed(11)).unwrap();
        let b = degrade(&g, &cfg, 200, &[0, 50, 200], &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
        let kinds: std::collections::HashSet<_> = a.events.iter().map(|(_, e)| e.kind).collect();
        assert_eq!(kinds.len(), 6, "all event kinds exercised: {kinds:?}");
    }

    #[test]
    fn events_are_consistent_with_lengths() {
        let g = synth::uniform_iid(5000, &mut rng_from_seed(8));
        let cfg = MutationConfig {
            p_snp: 1e-3,
            p_ins: 1e-3,
            p_del: 1e-3,
            p_dup: 400.0,
            sv_len_min: 5,
            sv_len_max: 30,
            ..MutationConfig::default()
        };
        let mut rng = rng_from_seed(2);
        let mut seq = g.clone();
        for _ in 0..50 {
            let before = seq.len() as i64;
            let events = mutate_in_place(&mut seq, &cfg, &mut rng);
            let delta: i64 = events
                .iter()
                .map(|e| match e.kind {
                    EventKind::Ins | EventKind::Dup => e.length as i64,
                    EventKind::Del => -(e.length as i64),
                    _ => 0,
                })
                .sum();
            assert_eq!(seq.len() as i64, before + delta);
            let point: Vec<_> = events.iter().filter(|e| matches!(e.kind, EventKind::Snp | EventKind::Ins | EventKind::Del)).collect();
            assert!(point.windows(2).all(|w| w[0].position < w[1].position));
        }
    }

    #[test]
    fn short_genome_skips_structural_events() {
        let cfg = MutationConfig {
            p_snp: 0.0,
            p_inv: 1e9,
            sv_len_min: 50,
            sv_len_max: 60,
            ..MutationConfig::default()
        };
        let (out, events) = mutate_once(b"ACGTACGT", &cfg, &mut rng_from_seed(1));
        assert_eq!(out, b"ACGTACGT");
        assert!(events.is_empty());
    }

    #[test]
    fn full_deletion_keeps_a_base() {
        let cfg = MutationConfig {
            p_snp: 0.0,
            p_del: 1.0,
            indel_len_geom_p: 0.01,
            ..MutationConfig::default()
        };
        for seed in 0..10 {
            let (out, _) = mutate_once(b"ACGTACGT", &cfg, &mut rng_from_seed(seed));
            assert!(!out.is_empty());
        }
    }

    #[test]
    fn config_validation_and_keys() {
        assert!(MutationConfig::default().validate().is_ok());
        let mut c = MutationConfig::default();
        c.p_snp = 0.7;
        c.p_del = 0.5;
        assert!(c.validate().is_err());
        let mut c = MutationConfig::default();
        c.indel_len_geom_p = 0.0;
        assert!(c.validate().is_err());
        let mut c = MutationConfig::default();
        c.sv_len_min = 1;
        assert!(c.validate().is_err());
        let mut c = MutationConfig::default();
        for key in CONFIG_KEYS {
            c.set(key, "3").unwrap_or_else(|e| panic!("{key}: {e}"));
        }
        assert!(c.set("p_bogus", "1").is_err());
        assert!(c.set("p_snp", "abc").is_err());
    }

    #[test]
    fn checkpoint_validation() {
        assert!(validate_checkpoints(&[0, 5, 10], 10).is_ok());
        assert!(validate_checkpoints(&[1, 5], 10).is_err());
        assert!(validate_checkpoints(&[0, 5, 5], 10).is_err());
        assert!(validate_checkpoints(&[0, 11], 10).is_err());
    }
}
