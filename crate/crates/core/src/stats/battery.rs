//! Two-sample distinguisher battery over transcripts.
//!
//! Each test compares the same statistic on two transcript sets. Test 3 and
//! test 5 read the extractor outputs an embedding party would have steered,
//! so a subliminal transcript that leaks through the seed or through its
//! hidden payload shows up there; test 1 and test 2 look at what the
//! observer's keys and the raw bits reveal.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use super::{
    chi_square_homogeneity, correlation_difference_z, normal_two_sided, pearson, two_proportion_z,
};
use crate::coverdist::CoverDist;
use crate::error::{Error, Result};
use crate::extractors::{ext_seeded, gt, HashSeed};
use crate::frame::{Role, TranscriptFrame};
use crate::params::SecurityParams;
use crate::pke::{Scheme, SecretKey};
use crate::protocol::Seed;

/// Family-wise rejection level.
pub const FAMILY_ALPHA: f64 = 0.001;

/// Widest histogram the extractor-uniformity test builds.
const MAX_BUCKET_BITS: usize = 12;

/// One transcript as an eavesdropper holds it.
#[derive(Debug, Clone)]
pub struct ObservedRun {
    pub frames: Vec<TranscriptFrame>,
    /// Secret keys of P0 and P1. Without them the decryption test is skipped.
    pub keys: Option<[SecretKey; 2]>,
}

#[derive(Debug, Clone)]
pub struct BatteryConfig {
    pub params: SecurityParams,
    pub scheme: Arc<dyn Scheme>,
    pub dist: CoverDist,
    /// Fixed extractor seed; by default each run's seed is recomputed from
    /// its own seed-phase frames.
    pub seed_hint: Option<HashSeed>,
    pub alpha: f64,
}

impl BatteryConfig {
    pub fn new(params: SecurityParams, scheme: Arc<dyn Scheme>, dist: CoverDist) -> Self {
        BatteryConfig {
            params,
            scheme,
            dist,
            seed_hint: None,
            alpha: FAMILY_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub name: &'static str,
    pub statistic: f64,
    /// Signed score where the test has one; flips sign when inputs swap.
    pub z: Option<f64>,
    pub p_value: f64,
    /// `p_value` times the number of tests run, capped at 1.
    pub corrected_p: f64,
    pub reject: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub alpha: f64,
    pub frames_a: usize,
    pub frames_b: usize,
    pub tests: Vec<TestOutcome>,
    pub pass: bool,
}

impl BatteryReport {
    pub fn test(&self, name: &str) -> Option<&TestOutcome> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "battery: {} vs {} frames, family alpha {}\n",
            self.frames_a, self.frames_b, self.alpha
        );
        for t in &self.tests {
            let z = t.z.map(|z| format!(" z={z:+.3}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "  {:<16} stat={:<12.4}{} p={:.3e} corrected={:.3e} {}{}",
                t.name,
                t.statistic,
                z,
                t.p_value,
                t.corrected_p,
                if t.reject { "REJECT" } else { "ok" },
                if t.note.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", t.note)
                }
            );
        }
        let _ = writeln!(s, "verdict: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "frames_a={}", self.frames_a);
        let _ = writeln!(s, "frames_b={}", self.frames_b);
        for t in &self.tests {
            let _ = writeln!(s, "{}.statistic={}", t.name, t.statistic);
            if let Some(z) = t.z {
                let _ = writeln!(s, "{}.z={}", t.name, z);
            }
            let _ = writeln!(s, "{}.p_value={}", t.name, t.p_value);
            let _ = writeln!(s, "{}.corrected_p={}", t.name, t.corrected_p);
            let _ = writeln!(s, "{}.reject={}", t.name, t.reject);
        }
        let _ = writeln!(s, "verdict={}", if self.pass { "pass" } else { "fail" });
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct RawTest {
    name: &'static str,
    statistic: f64,
    z: Option<f64>,
    p_value: f64,
    note: String,
}

/// Runs the battery on two transcript sets of equal total size.
pub fn battery(a: &[ObservedRun], b: &[ObservedRun], cfg: &BatteryConfig) -> Result<BatteryReport> {
    let frames_a: usize = a.iter().map(|r| r.frames.len()).sum();
    let frames_b: usize = b.iter().map(|r| r.frames.len()).sum();
    if frames_a != frames_b {
        return Err(Error::ShapeMismatch(format!(
            "{frames_a} vs {frames_b} frames"
        )));
    }
    let n_ct = cfg.params.n_ct;
    if let Some(f) = a
        .iter()
        .chain(b)
        .flat_map(|r| &r.frames)
        .find(|f| f.ciphertext.len() != n_ct)
    {
        return Err(Error::ShapeMismatch(format!(
            "{:?} round {} carries {} bits, profile expects {n_ct}",
            f.party,
            f.round,
            f.ciphertext.len()
        )));
    }

    let ext_a = extractor_outputs(a, cfg)?;
    let ext_b = extractor_outputs(b, cfg)?;
    let mut raw = Vec::new();
    if let Some(t) = decrypt_check(a, b, cfg)? {
        raw.push(t);
    }
    raw.push(bit_frequency(a, b, n_ct));
    raw.push(ext_uniformity(&ext_a, &ext_b, cfg.params.v)?);
    raw.push(gt_pairs(a, b)?);
    raw.push(ext_correlation(&ext_a, &ext_b));

    let family = raw.len() as f64;
    let tests: Vec<TestOutcome> = raw
        .into_iter()
        .map(|t| {
            let corrected_p = (t.p_value * family).min(1.0);
            TestOutcome {
                name: t.name,
                statistic: t.statistic,
                z: t.z,
                p_value: t.p_value,
                corrected_p,
                reject: !(corrected_p > cfg.alpha),
                note: t.note,
            }
        })
        .collect();
    Ok(BatteryReport {
        alpha: cfg.alpha,
        frames_a,
        frames_b,
        pass: tests.iter().all(|t| !t.reject),
        tests,
    })
}

/// Test 1: every frame decrypts, under the recipient's key, to a message
/// the cover distribution can produce.
fn decrypt_check(
    a: &[ObservedRun],
    b: &[ObservedRun],
    cfg: &BatteryConfig,
) -> Result<Option<RawTest>> {
    if a.iter().chain(b).any(|r| r.keys.is_none()) {
        log::warn!("decryption test skipped: observer keys missing");
        return Ok(None);
    }
    let mut bad = [0u64; 2];
    for (side, runs) in [a, b].into_iter().enumerate() {
        for run in runs {
            let keys = run.keys.as_ref().expect("checked above");
            for f in &run.frames {
                let sk = &keys[f.party.peer().index()];
                match cfg.scheme.dec(sk, &f.ciphertext) {
                    Ok(m) if cfg.dist.in_support(&m) => {}
                    _ => bad[side] += 1,
                }
            }
        }
    }
    let failures = bad[0] + bad[1];
    Ok(Some(RawTest {
        name: "decrypt",
        statistic: failures as f64,
        z: None,
        p_value: if failures == 0 { 1.0 } else { 0.0 },
        note: format!("{} + {} frames outside the cover support", bad[0], bad[1]),
    }))
}

fn count_bit_ones(runs: &[ObservedRun], n_ct: usize) -> (Vec<u64>, u64) {
    let mut ones = vec![0u64; n_ct];
    let mut total = 0;
    for f in runs.iter().flat_map(|r| &r.frames) {
        for (byte_index, &byte) in f.ciphertext.as_bytes().iter().enumerate() {
            for bit in 0..8 {
                if byte & (0x80 >> bit) != 0 {
                    ones[byte_index * 8 + bit] += 1;
                }
            }
        }
        total += 1;
    }
    (ones, total)
}

/// Test 2: two-proportion z test at every ciphertext bit position, with a
/// Bonferroni correction across positions.
fn bit_frequency(a: &[ObservedRun], b: &[ObservedRun], n_ct: usize) -> RawTest {
    let (ones_a, na) = count_bit_ones(a, n_ct);
    let (ones_b, nb) = count_bit_ones(b, n_ct);
    let (mut worst, mut at) = (0.0f64, 0);
    for i in 0..n_ct {
        let z = two_proportion_z(ones_a[i], na, ones_b[i], nb);
        if z.abs() > worst.abs() {
            worst = z;
            at = i;
        }
    }
    RawTest {
        name: "bit-frequency",
        statistic: worst.abs(),
        z: Some(worst),
        p_value: (normal_two_sided(worst) * n_ct as f64).min(1.0),
        note: format!("worst position {at}"),
    }
}

/// Per run and party, the extractor outputs of the frames after the seed
/// phase, in round order.
fn extractor_outputs(runs: &[ObservedRun], cfg: &BatteryConfig) -> Result<Vec<Vec<u64>>> {
    let d = cfg.params.d as u32;
    let mut out = Vec::new();
    for run in runs {
        let seed = match cfg.seed_hint {
            Some(h) => h,
            None => Seed::from_frames(&run.frames, cfg.params.d)?.hash,
        };
        for party in [Role::P0, Role::P1] {
            let mut frames: Vec<&TranscriptFrame> = run
                .frames
                .iter()
                .filter(|f| f.party == party && f.round > d)
                .collect();
            frames.sort_by_key(|f| f.round);
            let values = frames
                .iter()
                .map(|f| ext_seeded(&seed, &f.ciphertext, cfg.params.v).map(|e| e.to_u64()))
                .collect::<Result<Vec<_>>>()?;
            out.push(values);
        }
    }
    Ok(out)
}

fn histogram(outputs: &[Vec<u64>], bucket_bits: usize) -> Vec<u64> {
    let mut h = vec![0u64; 1 << bucket_bits];
    let mask = (1u64 << bucket_bits) - 1;
    for x in outputs.iter().flatten() {
        h[(x & mask) as usize] += 1;
    }
    h
}

/// Test 3: the extractor output histograms of the two sides agree.
fn ext_uniformity(a: &[Vec<u64>], b: &[Vec<u64>], v: usize) -> Result<RawTest> {
    let bucket_bits = v.min(MAX_BUCKET_BITS);
    let (ha, hb) = (histogram(a, bucket_bits), histogram(b, bucket_bits));
    if ha.iter().sum::<u64>() == 0 || hb.iter().sum::<u64>() == 0 {
        return Ok(RawTest {
            name: "ext-uniformity",
            statistic: 0.0,
            z: None,
            p_value: 1.0,
            note: "no frames past the seed phase".into(),
        });
    }
    let r = chi_square_homogeneity(&ha, &hb)?;
    Ok(RawTest {
        name: "ext-uniformity",
        statistic: r.statistic,
        z: None,
        p_value: r.p_value,
        note: format!("{} buckets, dof {}", ha.len(), r.dof),
    })
}

fn gt_counts(runs: &[ObservedRun]) -> Result<(u64, u64)> {
    let (mut ones, mut total) = (0, 0);
    for run in runs {
        for party in [Role::P0, Role::P1] {
            let mut frames: Vec<&TranscriptFrame> =
                run.frames.iter().filter(|f| f.party == party).collect();
            frames.sort_by_key(|f| f.round);
            for pair in frames.chunks_exact(2) {
                ones += gt(&pair[0].ciphertext, &pair[1].ciphertext)? as u64;
                total += 1;
            }
        }
    }
    Ok((ones, total))
}

/// Test 4: frequency of the greater-than bit over consecutive round pairs.
fn gt_pairs(a: &[ObservedRun], b: &[ObservedRun]) -> Result<RawTest> {
    let (ka, na) = gt_counts(a)?;
    let (kb, nb) = gt_counts(b)?;
    let z = if na == 0 || nb == 0 {
        0.0
    } else {
        two_proportion_z(ka, na, kb, nb)
    };
    Ok(RawTest {
        name: "gt-pairs",
        statistic: z.abs(),
        z: Some(z),
        p_value: normal_two_sided(z),
        note: format!("{ka}/{na} vs {kb}/{nb}"),
    })
}

fn lag_one(outputs: &[Vec<u64>]) -> (f64, usize) {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for seq in outputs {
        for w in seq.windows(2) {
            xs.push(w[0] as f64);
            ys.push(w[1] as f64);
        }
    }
    (pearson(&xs, &ys), xs.len())
}

/// Test 5: lag-one correlation of each party's extractor outputs.
fn ext_correlation(a: &[Vec<u64>], b: &[Vec<u64>]) -> RawTest {
    let (ra, na) = lag_one(a);
    let (rb, nb) = lag_one(b);
    let z = correlation_difference_z(ra, na, rb, nb);
    RawTest {
        name: "ext-correlation",
        statistic: z.abs(),
        z: Some(z),
        p_value: normal_two_sided(z),
        note: format!("rho {ra:+.4} vs {rb:+.4}"),
    }
}
