//! Estimators and the distinguisher battery.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::pke::CiphertextPmf;

mod battery;

pub use battery::{battery, BatteryConfig, BatteryReport, ObservedRun, TestOutcome, FAMILY_ALPHA};

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A distribution over `domain_bits`-bit integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    domain_bits: usize,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(domain_bits: usize, probs: Vec<f64>) -> Result<Self> {
        if domain_bits > 24 || probs.len() != 1 << domain_bits {
            return Err(Error::InvalidParams(format!(
                "{} probabilities for a {domain_bits}-bit domain",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParams("negative or NaN probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Pmf { domain_bits, probs })
    }

    pub fn uniform(domain_bits: usize) -> Self {
        let n = 1usize << domain_bits;
        Pmf {
            domain_bits,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(domain_bits: usize, value: u64) -> Result<Self> {
        let mut probs = vec![0.0; 1 << domain_bits];
        *probs.get_mut(value as usize).ok_or(Error::DomainMismatch)? = 1.0;
        Pmf::new(domain_bits, probs)
    }

    /// Empirical distribution of observed counts.
    pub fn from_counts(domain_bits: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::TooFewSamples {
                required: 1,
                actual: 0,
            });
        }
        Pmf::new(
            domain_bits,
            counts.iter().map(|&c| c as f64 / total as f64).collect(),
        )
    }

    /// Dense form of an enumerated ciphertext distribution.
    pub fn from_ciphertexts(pmf: &CiphertextPmf) -> Result<Self> {
        let bits = pmf.first().map(|(c, _)| c.len()).unwrap_or(0);
        let mut probs = vec![0.0; 1 << bits.min(24)];
        for (c, p) in pmf {
            if c.len() != bits {
                return Err(Error::DomainMismatch);
            }
            probs[c.to_u64() as usize] += p;
        }
        Pmf::new(bits, probs)
    }

    pub fn domain_bits(&self) -> usize {
        self.domain_bits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, value: u64) -> f64 {
        self.probs.get(value as usize).copied().unwrap_or(0.0)
    }

    pub fn collision_prob(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum()
    }

    pub fn min_entropy(&self) -> f64 {
        -self.probs.iter().cloned().fold(0.0, f64::max).log2()
    }
}

/// Half the L1 distance.
pub fn stat_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.domain_bits != q.domain_bits {
        return Err(Error::DomainMismatch);
    }
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// `max_A |p(A) - q(A)|`, attained by the set where `p` exceeds `q`.
pub fn stat_distance_max_set(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.domain_bits != q.domain_bits {
        return Err(Error::DomainMismatch);
    }
    let over: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).max(0.0))
        .sum();
    let under: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (b - a).max(0.0))
        .sum();
    Ok(over.max(under))
}

/// Half-L1 distance between two enumerated ciphertext distributions.
pub fn stat_distance_sparse(p: &CiphertextPmf, q: &CiphertextPmf) -> Result<f64> {
    let mut diff: HashMap<&BitStr, f64> = HashMap::new();
    let width = p.first().or(q.first()).map(|(c, _)| c.len());
    for (c, w) in p {
        *diff.entry(c).or_default() += w;
    }
    for (c, w) in q {
        *diff.entry(c).or_default() -= w;
    }
    if diff.keys().any(|c| Some(c.len()) != width) {
        return Err(Error::DomainMismatch);
    }
    Ok(0.5 * diff.values().map(|d| d.abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEstimate {
    pub estimate: f64,
    pub variance: f64,
}

impl CollisionEstimate {
    /// Rényi-2 entropy of the estimate. Equals min-entropy only for flat sources.
    pub fn renyi2(&self) -> f64 {
        -self.estimate.log2()
    }
}

/// Unbiased pair-counting estimate of `sum_x Pr[X=x]^2`.
pub fn collision_prob<T: Hash + Eq>(samples: &[T]) -> Result<CollisionEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: n,
        });
    }
    let mut counts: HashMap<&T, u64> = HashMap::new();
    for s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let cp = counts.values().map(|&c| (c * (c - 1)) as f64).sum::<f64>() / pairs;
    // U-statistic variance, with sum p^3 estimated from ordered triples.
    let variance = if n >= 3 {
        let cube = counts
            .values()
            .map(|&c| c as f64 * (c as f64 - 1.0) * (c as f64 - 2.0))
            .sum::<f64>()
            / (pairs * (nf - 2.0));
        (4.0 * (nf - 2.0) / pairs * (cube - cp * cp) + 2.0 / pairs * (cp - cp * cp)).max(0.0)
    } else {
        f64::NAN
    };
    Ok(CollisionEstimate {
        estimate: cp,
        variance,
    })
}

/// `|Pr[x >= y] - 1/2|` for `x, y` independent and uniform over `support`.
///
/// Panics on an empty support or strings of unequal or over-64-bit length.
pub fn gt_bias_exact(support: &[BitStr]) -> f64 {
    assert!(!support.is_empty(), "empty support");
    let width = support[0].len();
    assert!(width <= 64 && support.iter().all(|s| s.len() == width));
    let values: Vec<u64> = support.iter().map(BitStr::to_u64).collect();
    let mut ge = 0u64;
    for &x in &values {
        for &y in &values {
            ge += (x >= y) as u64;
        }
    }
    let n = values.len() as f64;
    (ge as f64 / (n * n) - 0.5).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_square_sf(statistic: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN)
}

/// Pearson goodness of fit to uniform over `2^bucket_bits` buckets. Each
/// sample falls in the bucket given by its low `bucket_bits` bits.
pub fn chi_square(samples: &[u64], bucket_bits: usize) -> Result<ChiSquareResult> {
    if bucket_bits == 0 || bucket_bits > 24 {
        return Err(Error::InvalidParams(format!("bucket_bits={bucket_bits}")));
    }
    let buckets = 1usize << bucket_bits;
    let required = 5 * buckets;
    if samples.len() < required {
        return Err(Error::TooFewSamples {
            required,
            actual: samples.len(),
        });
    }
    let mut counts = vec![0u64; buckets];
    for &s in samples {
        counts[(s as usize) & (buckets - 1)] += 1;
    }
    let expected = samples.len() as f64 / buckets as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = (buckets - 1) as f64;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    })
}

/// Two-sample chi-square test that two count vectors share a distribution.
/// Buckets empty in both samples are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() {
        return Err(Error::DomainMismatch);
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::TooFewSamples {
            required: 1,
            actual: 0,
        });
    }
    let total = na + nb;
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        let (ea, eb) = (col * na / total, col * nb / total);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = used.saturating_sub(1) as f64;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    })
}

/// Two-sided tail probability of a standard normal score.
pub fn normal_two_sided(z: f64) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * n.sf(z.abs())
}

/// Pooled two-proportion z score for `ka / na` against `kb / nb`.
pub fn two_proportion_z(ka: u64, na: u64, kb: u64, nb: u64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let pooled = (ka + kb) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (ka as f64 / na - kb as f64 / nb) / se
}

/// Sample Pearson correlation; 0 when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Fisher z score for the difference of two sample correlations.
pub fn correlation_difference_z(ra: f64, na: usize, rb: f64, nb: usize) -> f64 {
    if na < 4 || nb < 4 {
        return 0.0;
    }
    let clamp = |r: f64| r.clamp(-0.999_999, 0.999_999).atanh();
    (clamp(ra) - clamp(rb)) / (1.0 / (na - 3) as f64 + 1.0 / (nb - 3) as f64).sqrt()
}

/// Per-position one counts and pairwise co-occurrence counts over equal
/// length bit strings.
#[derive(Debug, Clone)]
pub struct BitStatistics {
    width: usize,
    samples: u64,
    ones: Vec<u64>,
    both: Vec<u64>,
}

impl BitStatistics {
    pub fn new(width: usize) -> Self {
        BitStatistics {
            width,
            samples: 0,
            ones: vec![0; width],
            both: vec![0; width * width],
        }
    }

    pub fn add(&mut self, s: &BitStr) -> Result<()> {
        if s.len() != self.width {
            return Err(Error::BadLength {
                expected: self.width,
                actual: s.len(),
            });
        }
        let set: Vec<usize> = (0..self.width).filter(|&i| s.get(i)).collect();
        for (k, &i) in set.iter().enumerate() {
            self.ones[i] += 1;
            let row = &mut self.both[i * self.width..(i + 1) * self.width];
            for &j in &set[k + 1..] {
                row[j] += 1;
            }
        }
        self.samples += 1;
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn ones(&self) -> &[u64] {
        &self.ones
    }

    /// Binomial z score of position `i` against a fair coin.
    pub fn z_score(&self, i: usize) -> f64 {
        let n = self.samples as f64;
        (self.ones[i] as f64 - n / 2.0) / (n / 4.0).sqrt()
    }

    pub fn max_abs_z(&self) -> f64 {
        (0..self.width)
            .map(|i| self.z_score(i).abs())
            .fold(0.0, f64::max)
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let n = self.samples as f64;
        let (pi, pj) = (self.ones[i] as f64 / n, self.ones[j] as f64 / n);
        let pij = self.both[i * self.width + j] as f64 / n;
        let denom = (pi * (1.0 - pi) * pj * (1.0 - pj)).sqrt();
        if denom == 0.0 {
            return 0.0;
        }
        (pij - pi * pj) / denom
    }

    /// The largest `|rho|` over all pairs, with the pair.
    pub fn max_abs_correlation(&self) -> (f64, usize, usize) {
        let mut best = (0.0, 0, 0);
        for i in 0..self.width {
            for j in i + 1..self.width {
                let r = self.correlation(i, j).abs();
                if r > best.0 {
                    best = (r, i, j);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn bernoulli(p: f64) -> Pmf {
        Pmf::new(1, vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let p = bernoulli(0.5);
        assert_eq!(stat_distance(&p, &p).unwrap(), 0.0);
        assert!((stat_distance(&p, &bernoulli(0.625)).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(
            stat_distance(&p, &Pmf::uniform(2)),
            Err(Error::DomainMismatch)
        ));
    }

    #[test]
    fn pmf_rejects_bad_input() {
        assert!(Pmf::new(1, vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(1, vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(2, vec![1.0]).is_err());
        assert_eq!(Pmf::point(3, 5).unwrap().collision_prob(), 1.0);
    }

    #[test]
    fn sparse_distance_matches_dense() {
        let a = vec![
            (BitStr::from_u64(1, 3), 0.25),
            (BitStr::from_u64(2, 3), 0.75),
        ];
        let b = vec![(BitStr::from_u64(2, 3), 0.5), (BitStr::from_u64(7, 3), 0.5)];
        let dense = stat_distance(
            &Pmf::from_ciphertexts(&a).unwrap(),
            &Pmf::from_ciphertexts(&b).unwrap(),
        )
        .unwrap();
        assert!((stat_distance_sparse(&a, &b).unwrap() - dense).abs() < 1e-15);
        assert!((dense - 0.5).abs() < 1e-15);
    }

    fn random_pmf(bits: usize, rng: &mut ChaCha20Rng) -> Pmf {
        let raw: Vec<f64> = (0..1 << bits).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        Pmf::new(bits, raw.iter().map(|x| x / total).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn distance_forms_agree_and_triangle_holds(seed in any::<u64>(), bits in 1usize..6) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (p, q, r) = (random_pmf(bits, &mut rng), random_pmf(bits, &mut rng), random_pmf(bits, &mut rng));
            let half_l1 = stat_distance(&p, &q).unwrap();
            prop_assert!((half_l1 - stat_distance_max_set(&p, &q).unwrap()).abs() < 1e-12);
            prop_assert!(half_l1 <= stat_distance(&p, &r).unwrap() + stat_distance(&r, &q).unwrap() + 1e-12);
            prop_assert!((0.0..=1.0).contains(&half_l1));
        }
    }

    #[test]
    fn collision_flat_and_constant() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for k in [4u32, 8] {
            let samples: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..1u64 << k)).collect();
            let est = collision_prob(&samples).unwrap();
            let flat = 2f64.powi(-(k as i32));
            assert!(
                (est.estimate - flat).abs() < 0.1 * flat,
                "k={k}: {}",
                est.estimate
            );
            assert!(est.variance > 0.0 && est.variance.sqrt() < 0.02 * flat);
        }
        assert_eq!(collision_prob(&[7u8; 50]).unwrap().estimate, 1.0);
        assert!(matches!(
            collision_prob(&[1u8]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn collision_variance_matches_spread() {
        // Empirical spread of the estimator over repeated trials.
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut estimates = Vec::new();
        let mut predicted = 0.0;
        for _ in 0..200 {
            let samples: Vec<u8> = (0..2000).map(|_| rng.gen_range(0..16u8)).collect();
            let e = collision_prob(&samples).unwrap();
            predicted += e.variance / 200.0;
            estimates.push(e.estimate);
        }
        let mean = estimates.iter().sum::<f64>() / 200.0;
        let observed = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 199.0;
        assert!(
            (observed / predicted - 1.0).abs() < 0.3,
            "{observed} vs {predicted}"
        );
    }

    #[test]
    fn gt_bias_examples() {
        let all2: Vec<BitStr> = (0..4).map(|x| BitStr::from_u64(x, 2)).collect();
        assert_eq!(gt_bias_exact(&all2), 0.125);
        assert_eq!(gt_bias_exact(&[BitStr::from_u64(3, 5)]), 0.5);
    }

    #[test]
    fn gt_bias_is_half_collision_on_flat_supports() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for m in 1..=8usize {
            for k in 0..=m {
                let mut values: Vec<u64> = (0..1u64 << m).collect();
                for i in 0..values.len() {
                    let j = rng.gen_range(i..values.len());
                    values.swap(i, j);
                }
                let support: Vec<BitStr> = values[..1 << k]
                    .iter()
                    .map(|&x| BitStr::from_u64(x, m))
                    .collect();
                assert_eq!(gt_bias_exact(&support), 2f64.powi(-(k as i32) - 1));
            }
        }
    }

    #[test]
    fn chi_square_uniform_p_values_are_uniform() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut ps: Vec<f64> = (0..400)
            .map(|_| {
                let s: Vec<u64> = (0..800).map(|_| rng.gen::<u64>()).collect();
                chi_square(&s, 4).unwrap().p_value
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        let n = ps.len() as f64;
        let ks = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
            .fold(0.0, f64::max);
        // Kolmogorov critical value at alpha = 0.001.
        assert!(ks < 1.95 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn chi_square_constant_and_short() {
        let r = chi_square(&[3u64; 1000], 4).unwrap();
        assert!(r.p_value < 1e-12);
        assert!(matches!(
            chi_square(&[0; 79], 4),
            Err(Error::TooFewSamples { required: 80, .. })
        ));
    }

    #[test]
    fn chi_square_survival_accuracy() {
        // Closed forms: dof 2 gives exp(-x/2); dof 4 gives exp(-x/2)(1 + x/2).
        for x in [0.1, 1.0, 7.5, 30.0, 80.0] {
            let two = chi_square_sf(x, 2.0);
            let four = chi_square_sf(x, 4.0);
            let e = (-x / 2.0f64).exp();
            assert!((two - e).abs() <= 1e-10 * e.max(1e-300), "x={x}");
            assert!(
                (four - e * (1.0 + x / 2.0)).abs() <= 1e-10 * e.max(1e-300),
                "x={x}"
            );
        }
    }

    #[test]
    fn homogeneity_detects_shift() {
        let same = chi_square_homogeneity(&[100, 100, 100], &[98, 103, 99]).unwrap();
        assert!(same.p_value > 0.5);
        assert_eq!(same.dof, 2.0);
        let shifted = chi_square_homogeneity(&[100, 100, 100, 0], &[0, 0, 0, 300]).unwrap();
        assert!(shifted.p_value < 1e-12);
    }

    #[test]
    fn proportions_and_correlations() {
        assert_eq!(two_proportion_z(50, 100, 50, 100), 0.0);
        let z = two_proportion_z(60, 100, 40, 100);
        assert!((z + two_proportion_z(40, 100, 60, 100)).abs() < 1e-15);
        assert!((normal_two_sided(1.959964) - 0.05).abs() < 1e-6);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 1.0);
        assert_eq!(correlation_difference_z(0.1, 100, 0.1, 200), 0.0);
    }

    #[test]
    fn bit_statistics_find_planted_correlation() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut stats = BitStatistics::new(16);
        for _ in 0..20_000 {
            let mut s = BitStr::random(16, &mut rng);
            let b = s.get(3);
            s.set(9, b);
            stats.add(&s).unwrap();
        }
        let (r, i, j) = stats.max_abs_correlation();
        assert_eq!((i, j), (3, 9));
        assert!((r - 1.0).abs() < 1e-9);
        assert!(stats.max_abs_z() < 5.0);
        assert!(stats.correlation(0, 1).abs() < 0.05);
    }
}
