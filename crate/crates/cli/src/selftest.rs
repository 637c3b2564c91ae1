//! Exhaustive checks on instances small enough to enumerate.

use covertext::extractors::{gf_mul, small_mul, Gf64, HashSeed};
use covertext::peer_crypto::{
    chacha20_block, hchacha20, kex_finish, kex_from_exponent, prf_stream,
};
use covertext::pke::group::GroupParams;
use covertext::pke::{tiny_scheme, Scheme, SecretKey};
use covertext::protocol::sampler_pmf;
use covertext::stats::{gt_bias_exact, stat_distance_sparse, Pmf};
use covertext::BitStr;
use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::Failure;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tiny_correctness() -> Result<String, String> {
    let s = tiny_scheme();
    let mut count = 0;
    for k in 0..4 {
        let sk = SecretKey::new(BitStr::from_u64(k, 2));
        let pk = s.public_key(&sk).map_err(|e| e.to_string())?;
        for m in 0..4 {
            let m = BitStr::from_u64(m, 2);
            let pmf = s.enumerate(&pk, &m).ok_or("tiny scheme not enumerable")?;
            let total: f64 = pmf.iter().map(|(_, w)| w).sum();
            ensure((total - 1.0).abs() < 1e-12, || format!("mass {total}"))?;
            for (c, _) in &pmf {
                ensure(s.dec(&sk, c).ok().as_ref() == Some(&m), || {
                    format!("key {k}: {c:?} misdecrypts")
                })?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} ciphertexts decrypt correctly"))
}

fn gt_bias() -> Result<String, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut supports = 0;
    for m in 1..=8usize {
        for k in 0..=m {
            let mut values: Vec<u64> = (0..1u64 << m).collect();
            for i in 0..values.len() {
                let j = rng.gen_range(i..values.len());
                values.swap(i, j);
            }
            let chosen = &values[..1 << k];
            let support: Vec<BitStr> = chosen.iter().map(|&x| BitStr::from_u64(x, m)).collect();
            let mut probs = vec![0.0; 1 << m];
            for &x in chosen {
                probs[x as usize] = 1.0 / chosen.len() as f64;
            }
            let cp = Pmf::new(m, probs)
                .map_err(|e| e.to_string())?
                .collision_prob();
            let bias = gt_bias_exact(&support);
            ensure(
                bias == 2f64.powi(-(k as i32) - 1) && (bias - cp / 2.0).abs() < 1e-15,
                || format!("m={m} k={k}: bias {bias}, CP/2 {}", cp / 2.0),
            )?;
            supports += 1;
        }
    }
    Ok(format!(
        "{supports} flat supports meet the bound with equality"
    ))
}

fn exact_hiding() -> Result<String, String> {
    let s = tiny_scheme();
    let mut balanced = 0;
    for k in 0..4 {
        let sk = SecretKey::new(BitStr::from_u64(k, 2));
        let pk = s.public_key(&sk).map_err(|e| e.to_string())?;
        let m = BitStr::from_u64(k ^ 1, 2);
        let plain = s.enumerate(&pk, &m).ok_or("tiny scheme not enumerable")?;
        for bits in 0..=255u64 {
            let hash =
                HashSeed::from_seed_bits(&BitStr::from_u64(bits, 8)).map_err(|e| e.to_string())?;
            // Seeds leaving an extractor output without preimages are skipped.
            if let Ok(Some(out)) = sampler_pmf(&s, &pk, &m, &hash, 2) {
                let d = stat_distance_sparse(&out, &plain).map_err(|e| e.to_string())?;
                let flat = fiber_masses(&hash, &plain)
                    .iter()
                    .all(|&w| (w - 0.25).abs() < 1e-12);
                ensure((d < 1e-12) == flat, || {
                    format!("seed {bits}: distance {d}, balanced {flat}")
                })?;
                balanced += flat as u32;
            }
        }
    }
    ensure(balanced > 0, || "no balanced seed".into())?;
    Ok(format!(
        "distance 0 on all {balanced} balanced (key, seed) pairs"
    ))
}

fn fiber_masses(hash: &HashSeed, pmf: &[(BitStr, f64)]) -> [f64; 4] {
    let mut mass = [0.0; 4];
    for (c, w) in pmf {
        if let Ok(e) = covertext::extractors::ext_seeded(hash, c, 2) {
            mass[e.to_u64() as usize] += w;
        }
    }
    mass
}

/// Shift-and-add multiplication modulo x^64 + x^4 + x^3 + x + 1.
fn naive_gf_mul(mut a: u64, mut b: u64) -> u64 {
    let mut acc = 0u64;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        let carry = a >> 63;
        a <<= 1;
        if carry == 1 {
            a ^= 0x1b;
        }
        b >>= 1;
    }
    acc
}

fn gf_reference() -> Result<String, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..100_000 {
        let (a, b) = (rng.next_u64(), rng.next_u64());
        ensure(gf_mul(Gf64(a), Gf64(b)).0 == naive_gf_mul(a, b), || {
            format!("{a:#x} * {b:#x}")
        })?;
    }
    Ok("100000 products match shift-and-add".into())
}

fn small_fields() -> Result<String, String> {
    for v in [2usize, 4, 8, 16] {
        let order = (1u64 << v) - 1;
        for a in 1..=order {
            // a^(2^v - 1) = 1 for every nonzero a means every element is a unit.
            let (mut acc, mut base, mut e) = (1u64, a, order);
            while e > 0 {
                if e & 1 == 1 {
                    acc = small_mul(acc, base, v).map_err(|e| e.to_string())?;
                }
                base = small_mul(base, base, v).map_err(|e| e.to_string())?;
                e >>= 1;
            }
            ensure(acc == 1, || format!("GF(2^{v}): {a:#x} is not a unit"))?;
        }
    }
    Ok("GF(2^2), GF(2^4), GF(2^8), GF(2^16) are fields".into())
}

fn chacha_vectors() -> Result<String, String> {
    let key: [u8; 32] = std::array::from_fn(|i| i as u8);
    let nonce: [u8; 12] = [0, 0, 0, 9, 0, 0, 0, 0x4a, 0, 0, 0, 0];
    let block = hex::encode(chacha20_block(&key, 1, &nonce));
    ensure(
        block
            == "10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4e\
                d2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e",
        || format!("block {block}"),
    )?;
    let hnonce: [u8; 16] = [
        0, 0, 0, 9, 0, 0, 0, 0x4a, 0, 0, 0, 0, 0x31, 0x41, 0x59, 0x27,
    ];
    let sub = hchacha20(&key, &hnonce);
    ensure(
        hex::encode(sub) == "82413b4227b27bfed30e42508a877d73a0f9e4d58a74a853c12ec41326d3ecdc",
        || "hchacha20 vector".into(),
    )?;
    let mut reference = ChaCha20Rng::from_seed(sub);
    let mut expect = [0u8; 256];
    reference.fill_bytes(&mut expect);
    let stream = prf_stream(
        &BitStr::from_byte_vec(key.to_vec()),
        &BitStr::from_byte_vec(hnonce.to_vec()),
        2048,
    )
    .map_err(|e| e.to_string())?;
    ensure(stream.as_bytes() == expect, || {
        "prf_stream disagrees with reference ChaCha20".into()
    })?;
    Ok("RFC 8439 block, HChaCha20 and keystream vectors match".into())
}

fn kex_tiny() -> Result<String, String> {
    let g = GroupParams::tiny();
    let (p, two) = (BigUint::from(23u32), BigUint::from(2u32));
    let mut pairs = 0;
    for x in 1..11u32 {
        for y in 1..11u32 {
            for (sx, sy) in [(false, false), (true, false), (false, true), (true, true)] {
                let (a, ma) =
                    kex_from_exponent(&g, &BigUint::from(x), sx).map_err(|e| e.to_string())?;
                let (b, mb) =
                    kex_from_exponent(&g, &BigUint::from(y), sy).map_err(|e| e.to_string())?;
                let ka = kex_finish(a, &mb).map_err(|e| e.to_string())?;
                let kb = kex_finish(b, &ma).map_err(|e| e.to_string())?;
                let degenerate = two.modpow(&BigUint::from(2 * x * y), &p) == BigUint::from(1u32);
                ensure(ka == kb && ka.is_degenerate() == degenerate, || {
                    format!("x={x} y={y}")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} exponent and sign pairs agree"))
}

pub fn selftest_cmd() -> Result<(), Failure> {
    let checks: [(&str, Check); 7] = [
        ("tiny-correctness", tiny_correctness),
        ("gt-bias", gt_bias),
        ("exact-hiding", exact_hiding),
        ("gf-mul", gf_reference),
        ("small-fields", small_fields),
        ("chacha20", chacha_vectors),
        ("kex-tiny", kex_tiny),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(Failure::runtime(format!("{failed} self-test(s) failed")));
    }
    Ok(())
}
