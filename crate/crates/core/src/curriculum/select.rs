//! Quantile-band filtering and goal selection strategies.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

/// Below this total weight, weighted selection falls back to uniform.
pub const WEIGHT_SUM_FLOOR: f64 = 1e-12;

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Indices whose density lies inside the inclusive `[Q_lower, Q_upper]`
/// empirical quantile band. May be empty.
pub fn band_indices(densities: &[f64], q_lower: f64, q_upper: f64) -> Vec<usize> {
    if densities.is_empty() {
        return Vec::new();
    }
    let mut sorted = densities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = empirical_quantile(&sorted, q_lower);
    let hi = empirical_quantile(&sorted, q_upper);
    densities
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= lo && d <= hi)
        .map(|(i, _)| i)
        .collect()
}

/// [`band_indices`], falling back to every index when the band is empty.
pub fn quantile_filter(densities: &[f64], q_lower: f64, q_upper: f64) -> Vec<usize> {
    let kept = band_indices(densities, q_lower, q_upper);
    if kept.is_empty() {
        (0..densities.len()).collect()
    } else {
        kept
    }
}

pub fn select_uniform<R: Rng + ?Sized>(count: usize, rng: &mut R) -> usize {
    rng.random_range(0..count)
}

/// Index drawn with probability `w_i / Σw`; uniform when `Σw < 1e-12` or the
/// weights are unusable. The flag reports whether the fallback fired.
pub fn select_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> (usize, bool) {
    let total: f64 = weights.iter().sum();
    let usable = total.is_finite() && weights.iter().all(|w| *w >= 0.0 && w.is_finite());
    if usable && total >= WEIGHT_SUM_FLOOR {
        if let Ok(dist) = WeightedIndex::new(weights) {
            return (dist.sample(rng), false);
        }
    }
    (select_uniform(weights.len(), rng), true)
}

/// `p(1 − p)`.
pub fn uncertainty(p: f64) -> f64 {
    p * (1.0 - p)
}

/// `|p − old_p|`.
pub fn learning_progress(p: f64, old_p: f64) -> f64 {
    (p - old_p).abs()
}

/// Euclidean distance to the nearest known goal; 0 with no known goals.
pub fn novelty(goal: &[f64], known: &[Vec<f64>]) -> f64 {
    known
        .iter()
        .map(|k| {
            k.iter()
                .zip(goal)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.min(d)))
        })
        .unwrap_or(0.0)
}

/// `β1·U + β2·LP + β3·N` per goal.
pub fn multiweighted_scores(
    p: &[f64],
    old_p: &[f64],
    goals: &[Vec<f64>],
    known: &[Vec<f64>],
    betas: [f64; 3],
) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            betas[0] * uncertainty(p[i])
                + betas[1] * learning_progress(p[i], old_p[i])
                + betas[2] * novelty(&goals[i], known)
        })
        .collect()
}

/// Rescales by the maximum so the largest value is 1. All-zero input stays
/// zero.
pub fn max_normalise(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 && max.is_finite() {
        values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; values.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_band_keeps_everything() {
        let d = [0.3, 0.1, 0.9, 0.5];
        assert_eq!(quantile_filter(&d, 0.0, 1.0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn band_matches_a_sort_oracle() {
        let d: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        let kept = quantile_filter(&d, 0.25, 0.75);
        // Linear interpolation: positions 24.75 and 74.25 of 1..=100.
        let (lo, hi) = (25.75, 75.25);
        let expect: Vec<usize> = (0..100).filter(|&i| d[i] >= lo && d[i] <= hi).collect();
        assert_eq!(kept, expect);
        assert_eq!(kept.len(), 50);
    }

    #[test]
    fn empty_band_falls_back_to_everything() {
        // Two points: the band [0.25, 0.5] spans (2.5, 5.0) and holds neither.
        let d = [0.0, 10.0];
        assert!(band_indices(&d, 0.25, 0.5).is_empty());
        assert_eq!(quantile_filter(&d, 0.25, 0.5), vec![0, 1]);
    }

    #[test]
    fn ties_keep_everything() {
        assert_eq!(quantile_filter(&[2.0; 7], 0.4, 0.6).len(), 7);
    }

    #[test]
    fn uniform_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 4];
        for _ in 0..100_000 {
            counts[select_uniform(4, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01);
        }
        assert_eq!(select_uniform(1, &mut rng), 0);
    }

    #[test]
    fn weighted_frequencies_and_fallback() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = [0.2, 0.3, 0.5];
        let mut counts = [0usize; 3];
        for _ in 0..100_000 {
            let (i, fell_back) = select_weighted(&w, &mut rng);
            assert!(!fell_back);
            counts[i] += 1;
        }
        for (c, p) in counts.iter().zip(w) {
            assert!((*c as f64 / 1e5 - p).abs() < 0.01);
        }
        let (_, fell_back) = select_weighted(&[1e-15; 3], &mut rng);
        assert!(fell_back);
        for _ in 0..100 {
            assert_eq!(select_weighted(&[0.0, 1.0, 0.0], &mut rng), (1, false));
        }
    }

    #[test]
    fn multiweighted_anchors() {
        assert_eq!(uncertainty(0.5), 0.25);
        assert_eq!(learning_progress(0.7, 0.7), 0.0);
        let g = vec![vec![1.0, 2.0]];
        assert_eq!(novelty(&g[0], &[vec![5.0, 5.0], vec![1.0, 2.0]]), 0.0);
        assert_eq!(novelty(&g[0], &[]), 0.0);
        assert!((novelty(&g[0], &[vec![4.0, 6.0]]) - 5.0).abs() < 1e-12);
        let s = multiweighted_scores(&[0.5], &[0.1], &g, &[vec![4.0, 6.0]], [1.0, 2.0, 3.0]);
        assert!((s[0] - (0.25 + 0.8 + 15.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wider_bands_keep_at_least_as_much(
            d in proptest::collection::vec(0.0f64..10.0, 2..60),
            a in 0.0f64..0.5, b in 0.5f64..1.0, widen in 0.0f64..0.5,
        ) {
            let narrow = band_indices(&d, a, b).len();
            let wide = band_indices(&d, (a - widen).max(0.0), (b + widen).min(1.0)).len();
            prop_assert!(wide >= narrow);
        }

        #[test]
        fn filter_is_the_band_or_everything(
            d in proptest::collection::vec(0.0f64..10.0, 2..60),
            a in 0.0f64..0.5, b in 0.5f64..1.0,
        ) {
            let band = band_indices(&d, a, b);
            let kept = quantile_filter(&d, a, b);
            prop_assert!(!kept.is_empty());
            if band.is_empty() {
                prop_assert_eq!(kept.len(), d.len());
            } else {
                prop_assert_eq!(kept, band);
            }
        }
    }

    #[test]
    fn equal_weights_match_uniform_selection() {
        // χ² over 5 cells, 4 degrees of freedom: p = 0.01 critical value 13.277.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 5];
        for _ in 0..100_000 {
            counts[select_weighted(&[0.7; 5], &mut rng).0] += 1;
        }
        let e = 20_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 13.277, "chi2 {chi2}");
    }
}
