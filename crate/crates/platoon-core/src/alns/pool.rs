//! Adaptive operator pools: softmax selection over weights, segment scores,
//! and the smoothed weight update.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct PoolEntry<T> {
    pub op: T,
    pub weight: f64,
    pub score: f64,
    pub uses: u64,
}

#[derive(Debug, Clone)]
pub struct OperatorPool<T> {
    entries: Vec<PoolEntry<T>>,
}

impl<T: Copy> OperatorPool<T> {
    pub fn new(ops: impl IntoIterator<Item = T>) -> Self {
        Self {
            entries: ops
                .into_iter()
                .map(|op| PoolEntry { op, weight: 1.0, score: 0.0, uses: 0 })
                .collect(),
        }
    }

    /// Pool with explicit starting weights (weights and ops must zip).
    pub fn with_weights(ops: impl IntoIterator<Item = T>, weights: &[f64]) -> Self {
        let mut pool = Self::new(ops);
        assert_eq!(pool.entries.len(), weights.len());
        for (e, &w) in pool.entries.iter_mut().zip(weights) {
            e.weight = w;
        }
        pool
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn op(&self, idx: usize) -> T {
        self.entries[idx].op
    }

    pub fn entries(&self) -> &[PoolEntry<T>] {
        &self.entries
    }

    /// Softmax selection probabilities, numerically stabilized so large
    /// weights cannot overflow the exponentials.
    pub fn probabilities(&self, lambda: f64) -> Vec<f64> {
        let max_w = self.entries.iter().map(|e| e.weight).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> =
            self.entries.iter().map(|e| (lambda * (e.weight - max_w)).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    /// Roulette-wheel draw over the softmax probabilities.
    pub fn select<R: Rng>(&self, lambda: f64, rng: &mut R) -> usize {
        let probs = self.probabilities(lambda);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn mark_used(&mut self, idx: usize) {
        self.entries[idx].uses += 1;
    }

    pub fn credit(&mut self, idx: usize, points: f64) {
        self.entries[idx].score += points;
    }

    /// Segment-boundary update: w = (1 - r) w + r s, then scores reset.
    pub fn update_weights(&mut self, reaction: f64) {
        for e in &mut self.entries {
            // Same blend written as a single correction step, which keeps
            // round cases like (1 - 0.2) * 1 + 0.2 * 3 exact.
            e.weight += reaction * (e.score - e.weight);
            e.score = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_weights_give_uniform_probabilities() {
        let pool = OperatorPool::new([0u8, 1, 2]);
        let p = pool.probabilities(10.0);
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_matches_closed_form_for_one_zero() {
        let mut pool = OperatorPool::new([0u8, 1]);
        pool.entries[1].weight = 0.0;
        let p = pool.probabilities(10.0);
        let e10 = 10f64.exp();
        assert!((p[0] - e10 / (e10 + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e10 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn weight_update_formula() {
        let mut pool = OperatorPool::new([0u8, 1]);
        pool.credit(0, 3.0);
        pool.update_weights(0.2);
        assert!((pool.entries[0].weight - 1.4).abs() < 1e-12);
        assert!((pool.entries[0].score - 0.0).abs() < 1e-12);
        assert!((pool.entries[1].weight - 0.8).abs() < 1e-12);
    }

    #[test]
    fn unused_weight_decays_geometrically() {
        let mut pool = OperatorPool::new([0u8]);
        for _ in 0..3 {
            pool.update_weights(0.2);
        }
        assert!((pool.entries[0].weight - 0.8f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one_and_weights_stay_nonnegative() {
        let mut pool = OperatorPool::new([0u8, 1, 2, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..200 {
            let idx = pool.select(10.0, &mut rng);
            pool.mark_used(idx);
            if round % 3 == 0 {
                pool.credit(idx, [3.0, 2.0, 1.0][round % 3]);
            }
            if round % 50 == 49 {
                pool.update_weights(0.2);
            }
            let probs = pool.probabilities(10.0);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(pool.entries().iter().all(|e| e.weight >= 0.0));
        }
    }

    #[test]
    fn selection_matches_probabilities_monte_carlo() {
        let mut pool = OperatorPool::new([0u8, 1, 2]);
        pool.entries[0].weight = 0.3;
        pool.entries[1].weight = 0.2;
        pool.entries[2].weight = 0.1;
        let probs = pool.probabilities(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[pool.select(10.0, &mut rng)] += 1;
        }
        for i in 0..3 {
            let freq = counts[i] as f64 / n as f64;
            let sigma = (probs[i] * (1.0 - probs[i]) / n as f64).sqrt();
            assert!(
                (freq - probs[i]).abs() < 4.0 * sigma + 1e-4,
                "op {i}: freq {freq} vs p {}",
                probs[i]
            );
        }
    }
}
