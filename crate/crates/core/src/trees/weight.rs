use rand::Rng;

use crate::error::{Error, Result};

/// Sum tree over nonnegative weights for drawing an index with probability
/// proportional to its weight.
///
/// Weights are never normalized: changing one leaf touches only its path to
/// the root, and every other leaf keeps its exact bit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTree {
    len: usize,
    leaves: usize,
    nodes: Vec<f64>,
}

impl WeightTree {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeight(w));
        }
        let len = weights.len();
        let leaves = len.next_power_of_two();
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + len].copy_from_slice(weights);
        let mut tree = Self { len, leaves, nodes };
        tree.rebuild_sums();
        if tree.total() <= 0.0 {
            return Err(Error::ZeroTotal);
        }
        Ok(tree)
    }

    /// All leaves set to `weight`.
    pub fn uniform(len: usize, weight: f64) -> Result<Self> {
        Self::new(&vec![weight; len])
    }

    fn rebuild_sums(&mut self) {
        for v in (1..self.leaves).rev() {
            self.nodes[v] = self.nodes[2 * v] + self.nodes[2 * v + 1];
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> u32 {
        self.leaves.trailing_zeros()
    }

    /// Sum of all weights (the root node).
    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.nodes[self.leaves..self.leaves + self.len]
    }

    /// Sets leaf `i` to `w`, recomputing the sums on its root path.
    pub fn update(&mut self, i: usize, w: f64) -> Result<()> {
        if i >= self.len {
            return Err(Error::LeafOutOfRange {
                index: i,
                len: self.len,
            });
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeight(w));
        }
        let mut v = self.leaves + i;
        self.nodes[v] = w;
        while v > 1 {
            v /= 2;
            self.nodes[v] = self.nodes[2 * v] + self.nodes[2 * v + 1];
        }
        Ok(())
    }

    /// Multiplies leaf `i` by `factor`.
    #[inline]
    pub fn scale_leaf(&mut self, i: usize, factor: f64) -> Result<()> {
        let w = self.weight(i) * factor;
        self.update(i, w)
    }

    /// Draws an index with probability `weight(i) / total()` using a single
    /// uniform variate.
    ///
    /// `r` is drawn from `[0, total)` and walks down from the root: go left
    /// when `r <= left`, otherwise subtract `left` and go right. A child with
    /// zero weight is never entered, which keeps zero-weight and padding
    /// leaves unreachable even at the rounding boundaries.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroTotal);
        }
        let mut r = rng.random::<f64>() * total;
        let mut v = 1;
        while v < self.leaves {
            let left = self.nodes[2 * v];
            let right = self.nodes[2 * v + 1];
            let go_left = if right <= 0.0 {
                true
            } else if left <= 0.0 {
                false
            } else {
                r <= left
            };
            if go_left {
                v *= 2;
            } else {
                r -= left;
                v = 2 * v + 1;
            }
        }
        Ok(v - self.leaves)
    }

    /// Multiplies every weight by `factor`; the sampling distribution is
    /// unchanged.
    pub fn scale_all(&mut self, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidScale(factor));
        }
        if factor == 1.0 {
            return Ok(());
        }
        for w in &mut self.nodes[self.leaves..self.leaves + self.len] {
            *w *= factor;
        }
        self.rebuild_sums();
        Ok(())
    }

    /// Largest relative gap between an internal node and the sum of its
    /// children.
    pub fn max_sum_error(&self) -> f64 {
        let scale = self.total().max(f64::MIN_POSITIVE);
        (1..self.leaves)
            .map(|v| (self.nodes[v] - (self.nodes[2 * v] + self.nodes[2 * v + 1])).abs() / scale)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
        let total: u64 = counts.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&c, &p)| {
                let e = p * total as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let dof = probs.iter().filter(|&&p| p > 0.0).count() - 1;
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
    }

    #[test]
    fn build_examples() {
        assert_eq!(WeightTree::new(&[1.0; 4]).unwrap().total(), 4.0);
        assert_eq!(WeightTree::new(&[0.0, 5.0, 0.0, 0.0]).unwrap().total(), 5.0);
        let t = WeightTree::new(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.height(), 2);
        assert!(matches!(
            WeightTree::new(&[1.0, -1.0]),
            Err(Error::InvalidWeight(_))
        ));
        assert!(matches!(
            WeightTree::new(&[0.0, 0.0]),
            Err(Error::ZeroTotal)
        ));
        assert!(matches!(WeightTree::new(&[]), Err(Error::Empty)));
    }

    #[test]
    fn update_examples() {
        let mut t = WeightTree::new(&[1.0, 1.0]).unwrap();
        t.update(0, 3.0).unwrap();
        assert_eq!(t.total(), 4.0);
        assert!(t.update(0, -1.0).is_err());
        assert!(t.update(2, 1.0).is_err());

        let mut t = WeightTree::new(&[1.0, 2.0, 3.0]).unwrap();
        t.update(1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            assert_ne!(t.sample(&mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn update_leaves_other_leaves_bit_identical() {
        let mut t = WeightTree::new(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let before = t.weights().to_vec();
        t.scale_leaf(2, 1.7).unwrap();
        for i in [0, 1, 3, 4] {
            assert_eq!(before[i].to_bits(), t.weight(i).to_bits());
        }
    }

    #[test]
    fn random_updates_keep_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 777;
        let mut t = WeightTree::uniform(n, 1.0).unwrap();
        for _ in 0..10_000 {
            let i = rng.random_range(0..n);
            t.update(i, rng.random_range(0.0..10.0)).unwrap();
        }
        let direct: f64 = t.weights().iter().sum();
        assert!((t.total() - direct).abs() <= 1e-12 * t.total());
        assert_eq!(t.max_sum_error(), 0.0);
    }

    #[test]
    fn single_point_mass() {
        let t = WeightTree::new(&[0.0, 5.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..10_000).all(|_| t.sample(&mut rng).unwrap() == 1));
    }

    #[test]
    fn fair_coin_frequency() {
        let t = WeightTree::new(&[1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 1_000_000;
        let zeros = (0..draws)
            .filter(|_| t.sample(&mut rng).unwrap() == 0)
            .count();
        let freq = zeros as f64 / draws as f64;
        assert!((0.498..=0.502).contains(&freq), "{freq}");
    }

    #[test]
    fn chi_square_fit() {
        let t = WeightTree::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0u64; 4];
        for _ in 0..1_000_000 {
            counts[t.sample(&mut rng).unwrap()] += 1;
        }
        let p = chi_square_p(&counts, &[0.1, 0.2, 0.3, 0.4]);
        assert!(p > 0.001, "p = {p}, counts = {counts:?}");
    }

    #[test]
    fn scaling() {
        let mut t = WeightTree::new(&[0.3, 0.1, 0.6]).unwrap();
        let before = t.clone();
        t.scale_all(1.0).unwrap();
        assert_eq!(t, before);

        let mut t = WeightTree::new(&[1.0, 3.0]).unwrap();
        t.scale_all(0.5).unwrap();
        assert_eq!(t.total(), 2.0);
        assert_eq!(t.weight(1) / t.total(), 0.75);

        let w = [0.3, 0.1, 0.6, 1e-5, 7.0];
        let mut t = WeightTree::new(&w).unwrap();
        t.scale_all(1e-100).unwrap();
        t.scale_all(1e100).unwrap();
        let total: f64 = w.iter().sum();
        for (i, &wi) in w.iter().enumerate() {
            assert!((t.weight(i) / t.total() - wi / total).abs() <= 1e-12);
        }
        assert!(t.scale_all(0.0).is_err());
        assert!(t.scale_all(f64::INFINITY).is_err());
        assert!(t.scale_all(f64::NAN).is_err());
    }

    #[test]
    fn exact_scaling_preserves_draws() {
        let t = WeightTree::new(&[0.3, 0.1, 0.6, 2.5, 0.01]).unwrap();
        let mut scaled = t.clone();
        scaled.scale_all(0.125).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            assert_eq!(t.sample(&mut r1).unwrap(), scaled.sample(&mut r2).unwrap());
        }
    }
}
