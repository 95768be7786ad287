//! Fixed-capacity ring storage with uniform minibatch sampling.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
}

impl<T> ReplayBuffer<T> {
    /// A zero capacity is raised to one.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, evicting the oldest item when full.
    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.items.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `batch` distinct items chosen uniformly, or `None` (skip this update)
    /// while fewer than `batch` items are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&T>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        let picks = rand::seq::index::sample(rng, self.items.len(), batch);
        Some(picks.iter().map(|i| &self.items[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn underfull_buffer_signals_skip() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..4 {
            b.push(i);
        }
        assert!(b.sample(5, &mut rng).is_none());
        assert!(b.sample(0, &mut rng).is_none());
        assert_eq!(b.sample(4, &mut rng).unwrap().len(), 4);
    }

    #[test]
    fn overflow_evicts_oldest_first() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(i);
        }
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn batches_have_no_duplicates() {
        let mut b = ReplayBuffer::new(50);
        for i in 0..50 {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let batch = b.sample(30, &mut rng).unwrap();
            let set: HashSet<_> = batch.iter().collect();
            assert_eq!(set.len(), 30);
        }
    }

    #[test]
    fn single_item_sampling_is_uniform() {
        // 10⁶ draws over 20 items; χ² with 19 degrees of freedom, p = 0.01
        // critical value 36.191.
        let mut b = ReplayBuffer::new(20);
        for i in 0..20usize {
            b.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0u64; 20];
        for _ in 0..1_000_000 {
            counts[*b.sample(1, &mut rng).unwrap()[0]] += 1;
        }
        let e = 50_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 36.191, "chi2 {chi2}");
    }
}
