use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objectives::Placement;

/// Independent RNG stream for candidate `candidate` of iteration
/// `iteration`. Streams depend only on `(seed, iteration, candidate)`, so
/// sampling does not depend on evaluation order or thread count.
pub fn substream(seed: u64, iteration: usize, candidate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 32) | candidate as u64);
    rng
}

/// Includes node `n` independently with probability `probs[n]`.
pub fn sample_bernoulli<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Placement {
    Placement::from_mask(probs.iter().map(|&p| rng.random::<f64>() < p).collect())
}

/// Drops uniformly random stations until at most `k` remain. Feasible
/// placements are returned unchanged.
pub fn enforce_budget<R: Rng + ?Sized>(s: Placement, k: usize, rng: &mut R) -> Placement {
    let count = s.count();
    if count <= k {
        return s;
    }
    let selected: Vec<usize> = s.selected().collect();
    let mut mask = vec![false; s.len()];
    for keep in index::sample(rng, count, k) {
        mask[selected[keep]] = true;
    }
    Placement::from_mask(mask)
}

/// `pop_size` budget-feasible placements drawn from `probs`.
pub fn sample_population(
    probs: &[f64],
    pop_size: usize,
    budget: usize,
    seed: u64,
    iteration: usize,
) -> Vec<Placement> {
    (0..pop_size)
        .map(|candidate| {
            let mut rng = substream(seed, iteration, candidate);
            let raw = sample_bernoulli(probs, &mut rng);
            enforce_budget(raw, budget, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let none = sample_population(&[0.0; 8], 20, 3, 1, 1);
        assert!(none.iter().all(|p| p.count() == 0));
        let all = sample_population(&[1.0; 8], 20, 8, 1, 1);
        assert!(all.iter().all(|p| p.count() == 8));
    }

    #[test]
    fn bernoulli_frequency_matches_probability() {
        // 10000 draws per node: 3σ of the sample mean is 0.015.
        let probs = [0.5; 20];
        let pop = sample_population(&probs, 10_000, 20, 42, 1);
        for n in 0..20 {
            let freq = pop.iter().filter(|p| p.contains(n)).count() as f64 / 10_000.0;
            assert!((freq - 0.5).abs() < 0.02, "node {n}: {freq}");
        }
    }

    #[test]
    fn budget_repair_keeps_feasible_placements() {
        let s = Placement::from_indices(10, &[1, 4, 7]).unwrap();
        let mut rng = substream(0, 0, 0);
        assert_eq!(enforce_budget(s.clone(), 5, &mut rng), s);
    }

    #[test]
    fn budget_repair_returns_subset_of_size_k() {
        let s = Placement::from_indices(12, &[0, 1, 2, 4, 6, 8, 9, 11]).unwrap();
        for seed in 0..50 {
            let mut rng = substream(seed, 0, 0);
            let repaired = enforce_budget(s.clone(), 5, &mut rng);
            assert_eq!(repaired.count(), 5);
            assert!(repaired.selected().all(|n| s.contains(n)));
        }
    }

    #[test]
    fn budget_repair_removes_uniformly() {
        let s = Placement::from_indices(12, &[0, 1, 2, 4, 6, 8, 9, 11]).unwrap();
        let trials = 10_000;
        let mut kept = [0usize; 12];
        for seed in 0..trials {
            let mut rng = substream(seed, 7, 3);
            for n in enforce_budget(s.clone(), 5, &mut rng).selected() {
                kept[n] += 1;
            }
        }
        for n in s.selected() {
            let freq = kept[n] as f64 / trials as f64;
            assert!((freq - 5.0 / 8.0).abs() < 0.02, "node {n}: {freq}");
        }
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let mut first = substream(5, 2, 9);
        let mut second = substream(5, 2, 9);
        let a: Vec<u64> = (0..4).map(|_| first.random()).collect();
        let b: Vec<u64> = (0..4).map(|_| second.random()).collect();
        assert_eq!(a, b);
        let x: u64 = substream(5, 2, 9).random();
        let y: u64 = substream(5, 2, 10).random();
        let z: u64 = substream(5, 3, 9).random();
        assert!(x != y && x != z);
    }
}
