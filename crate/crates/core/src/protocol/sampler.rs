//! Embedding strings into ciphertexts by rejection sampling.

use rand::RngCore;

use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::extractors::{ext_seeded, HashSeed};
use crate::pke::{CiphertextPmf, PublicKey, Scheme};

/// Re-encrypts `m` until the extractor output of the ciphertext equals
/// `target`. Returns the ciphertext and the number of encryptions used.
pub fn rejection_sample(
    scheme: &dyn Scheme,
    pk: &PublicKey,
    m: &BitStr,
    hash: &HashSeed,
    target: &BitStr,
    budget: u64,
    rng: &mut dyn RngCore,
) -> Result<(BitStr, u64)> {
    if budget == 0 {
        return Err(Error::InvalidParams(
            "rejection budget must be at least 1".into(),
        ));
    }
    let v = target.len();
    for attempt in 1..=budget {
        let c = scheme.enc(pk, m, rng)?;
        if &ext_seeded(hash, &c, v)? == target {
            return Ok((c, attempt));
        }
    }
    Err(Error::BudgetExhausted { attempts: budget })
}

/// Exact output distribution of [`rejection_sample`] with an unbounded
/// budget and a uniform `v`-bit target, for enumerable schemes. Fails when
/// some target has no ciphertext, since the sampler would never return.
pub fn sampler_pmf(
    scheme: &dyn Scheme,
    pk: &PublicKey,
    m: &BitStr,
    hash: &HashSeed,
    v: usize,
) -> Result<Option<CiphertextPmf>> {
    let Some(plain) = scheme.enumerate(pk, m) else {
        return Ok(None);
    };
    let targets = 1usize << v;
    let mut fiber_mass = vec![0.0f64; targets];
    let mut tagged = Vec::with_capacity(plain.len());
    for (c, w) in plain {
        let t = ext_seeded(hash, &c, v)?.to_u64() as usize;
        fiber_mass[t] += w;
        tagged.push((c, w, t));
    }
    if let Some(empty) = fiber_mass.iter().position(|&w| w == 0.0) {
        return Err(Error::InvalidParams(format!(
            "extractor output {empty} has no preimage among the ciphertexts"
        )));
    }
    let pick = 1.0 / targets as f64;
    Ok(Some(
        tagged
            .into_iter()
            .map(|(c, w, t)| (c, pick * w / fiber_mass[t]))
            .collect(),
    ))
}

/// Concatenated extractor outputs of `frames`.
pub fn recombine(hash: &HashSeed, frames: &[BitStr], v: usize) -> Result<BitStr> {
    let mut out = BitStr::empty();
    for c in frames {
        out.extend(&ext_seeded(hash, c, v)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractors::Gf64;
    use crate::pke::{lowent_scheme, ElGamal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn embeds_and_recovers() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let kp = s.gen(&mut rng);
        let hash = HashSeed::new(Gf64(rng.gen()), Gf64(rng.gen()));
        let secret = BitStr::random(32, &mut rng);
        let m = BitStr::random(128, &mut rng);
        let mut frames = Vec::new();
        for block in secret.blocks(4).unwrap() {
            let (c, n) = rejection_sample(&s, &kp.pk, &m, &hash, &block, 1024, &mut rng).unwrap();
            assert!(n >= 1);
            assert_eq!(s.dec(&kp.sk, &c).unwrap(), m);
            frames.push(c);
        }
        assert_eq!(recombine(&hash, &frames, 4).unwrap(), secret);
        assert_eq!(recombine(&hash, &[], 4).unwrap(), BitStr::empty());
    }

    #[test]
    fn immediate_hit_on_replay() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let kp = s.gen(&mut rng);
        let hash = HashSeed::new(Gf64(rng.gen()), Gf64(rng.gen()));
        let m = BitStr::zeros(128);
        let replay = ChaCha20Rng::seed_from_u64(99);
        let first = s.enc(&kp.pk, &m, &mut replay.clone()).unwrap();
        let target = ext_seeded(&hash, &first, 4).unwrap();
        let (c, n) =
            rejection_sample(&s, &kp.pk, &m, &hash, &target, 1, &mut replay.clone()).unwrap();
        assert_eq!((c, n), (first, 1));
    }

    #[test]
    fn constant_extractor_exhausts_budget() {
        // Zero entropy: every ciphertext identical, so most targets are unreachable.
        let s = lowent_scheme(0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = s.gen(&mut rng);
        let hash = HashSeed::new(Gf64(5), Gf64(7));
        let m = BitStr::zeros(128);
        let c = s.enc(&kp.pk, &m, &mut rng).unwrap();
        let mut target = ext_seeded(&hash, &c, 4).unwrap();
        target.set(0, !target.get(0));
        assert!(matches!(
            rejection_sample(&s, &kp.pk, &m, &hash, &target, 50, &mut rng),
            Err(Error::BudgetExhausted { attempts: 50 })
        ));
    }

    #[test]
    fn tampering_is_blockwise() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = s.gen(&mut rng);
        let hash = HashSeed::new(Gf64(rng.gen()), Gf64(rng.gen()));
        let secret = BitStr::random(16, &mut rng);
        let m = BitStr::zeros(128);
        let mut frames: Vec<BitStr> = secret
            .blocks(4)
            .unwrap()
            .iter()
            .map(|b| {
                rejection_sample(&s, &kp.pk, &m, &hash, b, 1024, &mut rng)
                    .unwrap()
                    .0
            })
            .collect();
        let flipped = !frames[2].get(100);
        frames[2].set(100, flipped);
        let diff = recombine(&hash, &frames, 4).unwrap().xor(&secret).unwrap();
        for i in (0..16).filter(|i| !(8..12).contains(i)) {
            assert!(!diff.get(i));
        }
    }

    fn balanced(hash: &HashSeed, pmf: &CiphertextPmf, v: usize) -> bool {
        let mut mass = vec![0.0; 1 << v];
        for (c, w) in pmf {
            mass[ext_seeded(hash, c, v).unwrap().to_u64() as usize] += w;
        }
        mass.iter()
            .all(|&x| (x - 1.0 / (1 << v) as f64).abs() < 1e-12)
    }

    #[test]
    fn exact_hiding_on_balanced_tiny_seeds() {
        use crate::pke::tiny_scheme;
        use crate::stats::stat_distance_sparse;
        let s = tiny_scheme();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = s.gen(&mut rng);
        let m = BitStr::from_u64(2, 2);
        let plain = s.enumerate(&kp.pk, &m).unwrap();
        let (mut equal, mut skewed) = (0, 0);
        for bits in 0..=255u64 {
            let hash = HashSeed::from_seed_bits(&BitStr::from_u64(bits, 8)).unwrap();
            match sampler_pmf(&s, &kp.pk, &m, &hash, 2) {
                Ok(Some(out)) => {
                    let d = stat_distance_sparse(&out, &plain).unwrap();
                    // Equality exactly when every extractor output has mass 2^-v.
                    assert_eq!(d < 1e-12, balanced(&hash, &plain, 2), "seed {bits}");
                    if d < 1e-12 {
                        equal += 1;
                    } else {
                        skewed += 1;
                    }
                }
                Ok(None) => unreachable!(),
                Err(_) => assert!(!balanced(&hash, &plain, 2)),
            }
        }
        assert!(equal > 0 && equal + skewed <= 256);
    }

    #[test]
    fn sampler_pmf_matches_sampling() {
        let s = lowent_scheme(4).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = s.gen(&mut rng);
        let m = BitStr::random(128, &mut rng);
        let hash = HashSeed::new(Gf64(rng.gen()), Gf64(rng.gen()));
        let Ok(Some(exact)) = sampler_pmf(&s, &kp.pk, &m, &hash, 1) else {
            panic!("16 ciphertexts should cover both one-bit outputs");
        };
        let mut counts = std::collections::HashMap::new();
        let n = 200_000;
        for _ in 0..n {
            let target = BitStr::random(1, &mut rng);
            let (c, _) =
                rejection_sample(&s, &kp.pk, &m, &hash, &target, 10_000, &mut rng).unwrap();
            *counts.entry(c).or_insert(0u64) += 1;
        }
        let l1: f64 = exact
            .iter()
            .map(|(c, w)| (*counts.get(c).unwrap_or(&0) as f64 / n as f64 - w).abs())
            .sum();
        assert!(l1 < 0.02, "L1 {l1}");
        assert_eq!(counts.len(), exact.len());
    }
}
