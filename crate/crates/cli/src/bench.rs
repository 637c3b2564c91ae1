use std::time::Instant;

use clap::Args;
use covertext::extractors::{Gf64, HashSeed};
use covertext::protocol::{default_scheme, rejection_sample};
use covertext::{BitStr, ParamProfile, ProfileName};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::Failure;

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "desk")]
    profile: ProfileName,
    /// Rejection-sampled ciphertexts to produce.
    #[arg(long, default_value_t = 200)]
    embeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn bench_cmd(args: &BenchArgs) -> Result<(), Failure> {
    let params = ParamProfile::get(args.profile).resolved;
    let scheme = default_scheme(&params).map_err(Failure::usage)?;
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let keys = scheme.gen(&mut rng);
    let m = BitStr::random(scheme.msg_bits(), &mut rng);
    let hash = HashSeed::new(Gf64(rng.gen()), Gf64(rng.gen()));

    let plain = args.embeds.max(1) * 4;
    let start = Instant::now();
    for _ in 0..plain {
        scheme
            .enc(&keys.pk, &m, &mut rng)
            .map_err(Failure::runtime)?;
    }
    let enc_rate = plain as f64 / start.elapsed().as_secs_f64();

    let mut attempts = 0u64;
    let start = Instant::now();
    for _ in 0..args.embeds {
        let target = BitStr::random(params.v, &mut rng);
        let (_, n) = rejection_sample(
            scheme.as_ref(),
            &keys.pk,
            &m,
            &hash,
            &target,
            params.max_attempts,
            &mut rng,
        )
        .map_err(Failure::runtime)?;
        attempts += n;
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "profile={} scheme={} v={}",
        args.profile,
        scheme.id(),
        params.v
    );
    println!("encryptions_per_sec={enc_rate:.0}");
    println!("attempts_per_sec={:.0}", attempts as f64 / secs);
    println!(
        "mean_attempts={:.3}",
        attempts as f64 / args.embeds.max(1) as f64
    );
    println!("bits_per_ciphertext={}", params.v);
    println!(
        "hidden_bits_per_sec={:.1}",
        (args.embeds * params.v as u64) as f64 / secs
    );
    Ok(())
}
