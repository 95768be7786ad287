//! Diagonal-covariance Gaussian mixtures.
//!
//! Density, log-likelihood, sampling and the closed-form probability mass of
//! an axis-aligned box. With diagonal covariances the box integral factorises
//! per dimension, and each factor is a difference of normal CDFs:
//!
//! ```text
//! P(x ∈ [l, u]) = Σ_j φ_j ∏_i ½ (erf((u_i − μ_ji)/√(2Σ_ji)) − erf((l_i − μ_ji)/√(2Σ_ji)))
//! ```
//!
//! `erf`/`erfc` come from `libm`; tails switch to `erfc` so that
//! far-from-the-mean intervals do not cancel to zero.

use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Smallest variance the mixture density head will emit.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `P(lo ≤ X ≤ hi)` for `X ~ N(mean, var)`.
pub fn normal_interval_probability(mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    let s = (2.0 * var).sqrt();
    let a = (lo - mean) / s;
    let b = (hi - mean) / s;
    let p = if a >= 0.0 {
        0.5 * (erfc(a) - erfc(b))
    } else if b <= 0.0 {
        0.5 * (erfc(-b) - erfc(-a))
    } else {
        0.5 * (erf(b) - erf(a))
    };
    p.clamp(0.0, 1.0)
}

/// Weights `φ` (K), means `μ` (K×N) and diagonal variances `Σ` (K×N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    means: Array2<f64>,
    variances: Array2<f64>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, means: Array2<f64>, variances: Array2<f64>) -> Result<Self> {
        let p = Self {
            weights,
            means,
            variances,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds from flat row-major slices without copying semantics beyond
    /// the allocation.
    pub fn from_slices(weights: &[f64], means: &[f64], variances: &[f64]) -> Result<Self> {
        let k = weights.len();
        if k == 0 || !means.len().is_multiple_of(k) {
            return Err(shape_err("means length must be a multiple of K"));
        }
        let n = means.len() / k;
        let means =
            Array2::from_shape_vec((k, n), means.to_vec()).map_err(|e| shape_err(e.to_string()))?;
        let variances = Array2::from_shape_vec((k, n), variances.to_vec())
            .map_err(|e| shape_err(format!("variances: {e}")))?;
        Self::new(weights.to_vec(), means, variances)
    }

    /// Checks `φ` lies on the simplex (within 1e-9) and every variance is
    /// positive and finite.
    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 {
            return Err(Error::Validation(
                "mixture needs at least one component".into(),
            ));
        }
        if self.means.nrows() != k || self.variances.raw_dim() != self.means.raw_dim() {
            return Err(shape_err(format!(
                "mixture shapes disagree: K={k}, means {:?}, variances {:?}",
                self.means.shape(),
                self.variances.shape()
            )));
        }
        if self.means.ncols() == 0 {
            return Err(Error::Validation("goal dimension must be ≥ 1".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation(
                "mixture weights must be finite and ≥ 0".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("mixture weights sum to {total}")));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Validation("non-finite mixture mean".into()));
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Validation("variances must be finite and > 0".into()));
        }
        Ok(())
    }

    /// Raises every variance to at least `floor`.
    pub fn with_variance_floor(mut self, floor: f64) -> Self {
        self.variances.mapv_inplace(|v| v.max(floor));
        self
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> ArrayView2<'_, f64> {
        self.means.view()
    }

    pub fn variances(&self) -> ArrayView2<'_, f64> {
        self.variances.view()
    }

    /// Mixture mean `Σ_j φ_j μ_j`.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.weights
                    .iter()
                    .zip(self.means.column(i))
                    .map(|(w, m)| w * m)
                    .sum()
            })
            .collect()
    }

    /// Per-dimension mixture variance.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        (0..self.dim())
            .map(|i| {
                (0..self.components())
                    .map(|j| {
                        let d = self.means[[j, i]] - mean[i];
                        self.weights[j] * (self.variances[[j, i]] + d * d)
                    })
                    .sum()
            })
            .collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(shape_err(format!(
                "point has {} coordinates, mixture has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite point".into()));
        }
        Ok(())
    }

    /// Log density of component `j` at `x` without the weight.
    pub(crate) fn component_log_density(&self, j: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let var = self.variances[[j, i]];
            let d = xi - self.means[[j, i]];
            acc -= 0.5 * (LN_2PI + var.ln() + d * d / var);
        }
        acc
    }

    /// `ln p(x)` evaluated with log-sum-exp over components.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.log_pdf_unchecked(x))
    }

    pub(crate) fn log_pdf_unchecked(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                if w > 0.0 {
                    w.ln() + self.component_log_density(j, x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        log_sum_exp(&terms)
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// Draws `count` points: a categorical component choice on `φ`, then an
    /// independent Gaussian per dimension.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Array2<f64> {
        let choose = WeightedIndex::new(&self.weights).expect("validated weights");
        let n = self.dim();
        let mut out = Array2::zeros((count, n));
        for mut row in out.rows_mut() {
            let j = choose.sample(rng);
            for i in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                row[i] = self.means[[j, i]] + self.variances[[j, i]].sqrt() * z;
            }
        }
        out
    }

    /// Probability mass inside an axis-aligned box.
    pub fn box_probability(&self, region: &BoxRegion) -> Result<f64> {
        if region.dim() != self.dim() {
            return Err(shape_err(format!(
                "region has {} dimensions, mixture has {}",
                region.dim(),
                self.dim()
            )));
        }
        let total: f64 = (0..self.components())
            .map(|j| {
                let w = self.weights[j];
                if w == 0.0 {
                    return 0.0;
                }
                let mut p = w;
                for i in 0..self.dim() {
                    p *= normal_interval_probability(
                        self.means[[j, i]],
                        self.variances[[j, i]],
                        region.lower[i],
                        region.upper[i],
                    );
                }
                p
            })
            .sum();
        Ok(total.clamp(0.0, 1.0))
    }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Mean negative log-likelihood `−(1/B) Σ_b ln p_b(x_b)` of one target row
/// per mixture.
pub fn negative_log_likelihood(batch: &[MixtureParams], targets: ArrayView2<f64>) -> Result<f64> {
    if batch.is_empty() {
        return Err(shape_err("empty batch"));
    }
    if batch.len() != targets.nrows() {
        return Err(shape_err(format!(
            "{} mixtures for {} targets",
            batch.len(),
            targets.nrows()
        )));
    }
    let mut total = 0.0;
    for (params, row) in batch.iter().zip(targets.rows()) {
        let x = row.to_vec();
        total += params.log_pdf(&x)?;
    }
    let nll = -total / batch.len() as f64;
    if !nll.is_finite() {
        return Err(Error::Numeric(format!("negative log-likelihood is {nll}")));
    }
    Ok(nll)
}

/// Integration box `[lower_i, upper_i]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(shape_err(
                "region bounds must be non-empty and equally long",
            ));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l >= u {
                return Err(Error::Validation(format!(
                    "region dimension {i}: lower {l} must be < upper {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The hypercube `center ± half_width` in every dimension.
    pub fn hypercube(center: &[f64], half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Validation("hypercube half-width must be > 0".into()));
        }
        Self::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    /// Splits along dimension `dim` at `at` (which must lie strictly inside).
    pub fn split(&self, dim: usize, at: f64) -> Result<(Self, Self)> {
        let mut left_upper = self.upper.clone();
        left_upper[dim] = at;
        let mut right_lower = self.lower.clone();
        right_lower[dim] = at;
        Ok((
            Self::new(self.lower.clone(), left_upper)?,
            Self::new(right_lower, self.upper.clone())?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    fn standard() -> MixtureParams {
        MixtureParams::from_slices(&[1.0], &[0.0], &[1.0]).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, k: usize, n: usize) -> MixtureParams {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let w = raw.iter().map(|r| r / s).collect();
        let means = Array2::from_shape_fn((k, n), |_| rng.random_range(-2.0..2.0));
        let vars = Array2::from_shape_fn((k, n), |_| rng.random_range(0.2..1.5));
        MixtureParams::new(w, means, vars).unwrap()
    }

    /// Series expansion of erf, accurate for |x| ≤ 3 with enough terms.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn erf_agrees_with_series_oracle() {
        let mut x = -3.0;
        while x <= 3.0 {
            assert!((erf(x) - erf_series(x)).abs() < 1e-12, "x={x}");
            x += 0.01;
        }
        // Tabulated values.
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erfc(5.0) - 1.537_459_794_428_034_8e-12).abs() < 1e-25);
    }

    #[test]
    fn pdf_anchor_values() {
        assert!((standard().pdf(&[0.0]).unwrap() - INV_SQRT_2PI).abs() < 1e-15);
        let two = MixtureParams::from_slices(&[0.5, 0.5], &[-1.0, 1.0], &[1.0, 1.0]).unwrap();
        let expect = (-0.5f64).exp() * INV_SQRT_2PI;
        assert!((two.pdf(&[0.0]).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.241_971).abs() < 1e-6);
    }

    #[test]
    fn pdf_integrates_to_one_by_trapezoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let p = random_params(&mut rng, 3, 2);
            let (lo, hi, n) = (-9.0, 9.0, 600);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for a in 0..=n {
                for b in 0..=n {
                    let wa = if a == 0 || a == n { 0.5 } else { 1.0 };
                    let wb = if b == 0 || b == n { 0.5 } else { 1.0 };
                    let x = [lo + a as f64 * h, lo + b as f64 * h];
                    total += wa * wb * p.pdf(&x).unwrap();
                }
            }
            assert!((total * h * h - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(MixtureParams::from_slices(&[0.6, 0.6], &[0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(MixtureParams::from_slices(&[1.0], &[0.0], &[0.0]).is_err());
        assert!(MixtureParams::from_slices(&[1.0], &[f64::NAN], &[1.0]).is_err());
        assert!(MixtureParams::from_slices(&[1.5, -0.5], &[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(matches!(standard().pdf(&[0.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn nll_anchor_and_duplication() {
        let p = standard();
        let one = negative_log_likelihood(std::slice::from_ref(&p), array![[0.0]].view()).unwrap();
        assert!((one - 0.918_938_533_204_672_8).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch: Vec<_> = (0..4).map(|_| random_params(&mut rng, 2, 2)).collect();
        let targets = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let base = negative_log_likelihood(&batch, targets.view()).unwrap();
        let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let t2 = ndarray::concatenate(ndarray::Axis(0), &[targets.view(), targets.view()]).unwrap();
        let dup = negative_log_likelihood(&doubled, t2.view()).unwrap();
        assert!((base - dup).abs() < 1e-12);
    }

    #[test]
    fn nll_matches_linear_domain_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch: Vec<_> = (0..100).map(|_| random_params(&mut rng, 4, 2)).collect();
        let targets = Array2::from_shape_fn((100, 2), |_| rng.random_range(-2.0..2.0));
        let fast = negative_log_likelihood(&batch, targets.view()).unwrap();
        let mut acc = 0.0;
        for (p, row) in batch.iter().zip(targets.rows()) {
            let mut dens = 0.0;
            for j in 0..p.components() {
                let mut c = p.weights()[j];
                for i in 0..2 {
                    let v = p.variances()[[j, i]];
                    let d = row[i] - p.means()[[j, i]];
                    c *= (-d * d / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
                }
                dens += c;
            }
            acc += dens.ln();
        }
        assert!((fast - (-acc / 100.0)).abs() < 1e-9);
    }

    #[test]
    fn log_domain_survives_far_targets() {
        let p = MixtureParams::from_slices(&[0.5, 0.5], &[0.0, 1.0], &[1e-4, 1e-4]).unwrap();
        // log pdf around −5e5: linear domain underflows, log domain does not.
        let lp = p.log_pdf(&[10.0]).unwrap();
        assert!(lp.is_finite() && lp < -1e5);
        let nll = negative_log_likelihood(&[p], array![[0.3]].view()).unwrap();
        assert!(nll.is_finite());
    }

    #[test]
    fn degenerate_variance_samples_sit_on_the_mean() {
        let p = MixtureParams::from_slices(&[1.0], &[0.25, -3.0], &[1e-18, 1e-18]).unwrap();
        let s = p.sample(&mut ChaCha8Rng::seed_from_u64(0), 100);
        for row in s.rows() {
            assert!((row[0] - 0.25).abs() < 1e-8 && (row[1] + 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sample_mean_obeys_law_of_large_numbers() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_params(&mut rng, 3, 2);
        let m = 100_000;
        let s = p.sample(&mut rng, m);
        let mean = p.mean();
        let var = p.variance();
        for i in 0..2 {
            let emp = s.column(i).mean().unwrap();
            assert!((emp - mean[i]).abs() < 4.0 * var[i].sqrt() / (m as f64).sqrt());
        }
    }

    #[test]
    fn sample_component_frequencies_follow_weights() {
        let p = MixtureParams::from_slices(&[0.2, 0.3, 0.5], &[-10.0, 0.0, 10.0], &[1.0, 1.0, 1.0])
            .unwrap();
        let s = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 100_000);
        let mut counts = [0usize; 3];
        for x in s.column(0) {
            let j = [-10.0f64, 0.0, 10.0]
                .iter()
                .enumerate()
                .min_by(|a, b| (x - a.1).abs().total_cmp(&(x - b.1).abs()))
                .unwrap()
                .0;
            counts[j] += 1;
        }
        for (c, w) in counts.iter().zip([0.2, 0.3, 0.5]) {
            assert!((*c as f64 / 1e5 - w).abs() < 0.01);
        }
    }

    /// Composite Simpson integration of the standard normal density.
    fn simpson_normal(lo: f64, hi: f64) -> f64 {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        let f = |x: f64| INV_SQRT_2PI * (-0.5 * x * x).exp();
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn box_probability_one_sigma() {
        let oracle = simpson_normal(-1.0, 1.0);
        let p = standard()
            .box_probability(&BoxRegion::new(vec![-1.0], vec![1.0]).unwrap())
            .unwrap();
        assert!((p - oracle).abs() < 1e-12);
        assert!((p - 0.682_689).abs() < 1e-6);
    }

    #[test]
    fn box_probability_total_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng, 4, 3);
        let region = BoxRegion::new(vec![-200.0; 3], vec![200.0; 3]).unwrap();
        assert!((p.box_probability(&region).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hypercube_in_two_dimensions_with_monte_carlo() {
        let p = MixtureParams::from_slices(&[1.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let cube = BoxRegion::hypercube(&[0.0, 0.0], 1.0).unwrap();
        let exact = p.box_probability(&cube).unwrap();
        assert!((exact - 0.682_689_492_137_085_9f64.powi(2)).abs() < 1e-12);
        assert!((exact - 0.466_065).abs() < 1e-6);
        let s = p.sample(&mut ChaCha8Rng::seed_from_u64(8), 1_000_000);
        let hits = s
            .rows()
            .into_iter()
            .filter(|r| r[0].abs() <= 1.0 && r[1].abs() <= 1.0)
            .count();
        assert!((hits as f64 / 1e6 - exact).abs() < 2e-3);
    }

    #[test]
    fn far_tail_interval_does_not_cancel() {
        let p = normal_interval_probability(0.0, 1.0, 9.0, 10.0);
        // Φ̄(9) − Φ̄(10) ≈ 1.1286e-19; the erf form would give exactly 0.
        assert!(p > 1.1e-19 && p < 1.2e-19);
        let q = normal_interval_probability(0.0, 1.0, -10.0, -9.0);
        assert_eq!(p, q);
    }

    #[test]
    fn box_matches_density_for_small_cubes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let p = random_params(&mut rng, 3, 2);
            let g = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let eps = 1e-4;
            let mass = p
                .box_probability(&BoxRegion::hypercube(&g, eps).unwrap())
                .unwrap();
            let ratio = mass / (2.0 * eps).powi(2) / p.pdf(&g).unwrap();
            assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        }
    }

    #[test]
    fn region_validation() {
        assert!(BoxRegion::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxRegion::hypercube(&[0.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn box_probability_is_monotone_under_enlargement(
            seed in 0u64..1000, grow in 0.0f64..3.0, lo in -2.0f64..0.0, width in 0.01f64..3.0
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_params(&mut rng, 3, 2);
            let inner = BoxRegion::new(vec![lo, lo], vec![lo + width, lo + width]).unwrap();
            let outer = BoxRegion::new(
                vec![lo - grow, lo], vec![lo + width + grow, lo + width + 0.5 * grow]
            ).unwrap();
            prop_assert!(p.box_probability(&outer).unwrap() >= p.box_probability(&inner).unwrap());
        }

        #[test]
        fn box_probability_is_additive_over_partitions(
            seed in 0u64..1000, cut in 0.01f64..0.99, dim in 0usize..2
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_params(&mut rng, 3, 2);
            let whole = BoxRegion::new(vec![-1.5, -0.5], vec![1.0, 2.0]).unwrap();
            let at = whole.lower()[dim] + cut * (whole.upper()[dim] - whole.lower()[dim]);
            let (a, b) = whole.split(dim, at).unwrap();
            let sum = p.box_probability(&a).unwrap() + p.box_probability(&b).unwrap();
            prop_assert!((sum - p.box_probability(&whole).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn nll_is_invariant_under_component_permutation(seed in 0u64..1000, shift in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_params(&mut rng, 4, 2);
            let order: Vec<usize> = (0..4).map(|j| (j + shift) % 4).collect();
            let w: Vec<f64> = order.iter().map(|&j| p.weights()[j]).collect();
            let m = Array2::from_shape_fn((4, 2), |(r, c)| p.means()[[order[r], c]]);
            let v = Array2::from_shape_fn((4, 2), |(r, c)| p.variances()[[order[r], c]]);
            let q = MixtureParams::new(w, m, v).unwrap();
            let t = array![[0.3, -0.7]];
            let a = negative_log_likelihood(&[p], t.view()).unwrap();
            let b = negative_log_likelihood(&[q], t.view()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
