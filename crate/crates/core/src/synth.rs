//! Synthetic genome generators used for desk-scale experiments.

use rand::Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence_io::BASES;

/// I.i.d. uniform bases.
pub fn uniform_iid<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.random_range(0..4)]).collect()
}

fn draw_index<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    3
}

/// A homogeneous Markov chain over `{A,C,G,T}` whose next base depends on
/// the previous `order` bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    pub order: usize,
    pub composition: [f64; 4],
    /// `4^order` rows indexed by the context read as a base-4 number.
    pub rows: Vec<[f64; 4]>,
}

impl MarkovModel {
    /// Draws every transition row from a Dirichlet centred on
    /// `composition` with total concentration `concentration`. Small
    /// concentrations give strongly context-dependent chains.
    pub fn random<R: Rng + ?Sized>(order: usize, composition: [f64; 4], concentration: f64, rng: &mut R) -> Result<Self> {
        let total: f64 = composition.iter().sum();
        if order > 8 || composition.iter().any(|&p| p <= 0.0) || !(concentration > 0.0) {
            return Err(Error::InvalidConfig("Markov model needs order <= 8, positive composition and concentration".into()));
        }
        let alpha: [f64; 4] = composition.map(|p| p / total * concentration);
        let dirichlet = Dirichlet::new(alpha).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let rows = (0..4usize.pow(order as u32))
            .map(|_| {
                let row: [f64; 4] = dirichlet.sample(rng);
                row
            })
            .collect();
        Ok(MarkovModel {
            order,
            composition: composition.map(|p| p / total),
            rows,
        })
    }

    pub fn generate<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<u8> {
        let mask = 4usize.pow(self.order as u32);
        let mut ctx = 0usize;
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let b = if i < self.order {
                draw_index(&self.composition, rng)
            } else {
                draw_index(&self.rows[ctx], rng)
            };
            out.push(BASES[b]);
            if self.order > 0 {
                ctx = (ctx * 4 + b) % mask;
            }
        }
        out
    }
}

/// `copies` exact copies of one random motif separated by random spacers of
/// `spacer` bases (plus a leading spacer).
pub fn repeat_rich<R: Rng + ?Sized>(copies: usize, motif_len: usize, spacer: usize, rng: &mut R) -> Vec<u8> {
    let motif = uniform_iid(motif_len, rng);
    let mut out = Vec::with_capacity(copies * (motif_len + spacer) + spacer);
    for _ in 0..copies {
        out.extend(uniform_iid(spacer, rng));
        out.extend_from_slice(&motif);
    }
    out.extend(uniform_iid(spacer, rng));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn markov_rows_are_distributions() {
        let m = MarkovModel::random(2, [0.3, 0.2, 0.2, 0.3], 5.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(m.rows.len(), 16);
        for row in &m.rows {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let g = m.generate(1000, &mut rng_from_seed(2));
        assert_eq!(g.len(), 1000);
        assert!(g.iter().all(|b| BASES.contains(b)));
    }

    #[test]
    fn repeat_rich_layout() {
        let g = repeat_rich(100, 29, 50, &mut rng_from_seed(3));
        assert_eq!(g.len(), 100 * 79 + 50);
        assert_eq!(&g[50..79], &g[129..158]);
    }
}
