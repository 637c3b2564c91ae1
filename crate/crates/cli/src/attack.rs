use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use covertext::io::{scheme_from_id, tap, Server, TranscriptHeader, TranscriptWriter};
use covertext::pke::{biasing_wrap, embed_bit_locally, LocalDecoder, Scheme};
use covertext::protocol::Mode;
use covertext::{BitStr, ParamProfile, ProfileName};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::Failure;

#[derive(Args)]
pub struct EavesdropArgs {
    /// Address the connecting party dials.
    #[arg(long)]
    listen: String,
    /// Address of the serving party.
    #[arg(long)]
    upstream: String,
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, default_value = "desk")]
    profile: ProfileName,
    /// Recorded in the transcript header when known.
    #[arg(long)]
    mode: Option<Mode>,
    /// Recorded in the header; lets the battery rebuild both key pairs.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn eavesdrop_cmd(args: &EavesdropArgs) -> Result<(), Failure> {
    let header = TranscriptHeader {
        profile: args.profile,
        mode: args.mode,
        rng_seed: args.seed,
    };
    let n_ct = ParamProfile::get(args.profile).resolved.n_ct;
    let server = Server::bind(&args.listen).map_err(Failure::runtime)?;
    let writer = TranscriptWriter::create(&args.transcript, &header).map_err(Failure::runtime)?;
    let frames = tap(server, &args.upstream, n_ct, writer).map_err(Failure::runtime)?;
    println!("frames={frames}");
    println!("transcript={}", args.transcript.display());
    Ok(())
}

#[derive(Args)]
pub struct AttackArgs {
    /// Re-encryption rounds of the biasing wrapper.
    #[arg(long, default_value_t = 10)]
    t: u32,
    /// Mandated base scheme: tiny, elg-512 or lowent-1024-128-K.
    #[arg(long, default_value = "tiny")]
    scheme: String,
    /// Ciphertext bit the strawman decodes; defaults to one that is uniform
    /// under the base scheme.
    #[arg(long)]
    bit: Option<usize>,
    /// Encryptions measured under the wrapper.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Strawman re-encryption budget per hidden bit.
    #[arg(long, default_value_t = 16)]
    budget: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn rate(hits: u64, n: u64) -> f64 {
    hits as f64 / n as f64
}

pub fn attack_cmd(args: &AttackArgs) -> Result<(), Failure> {
    let base = scheme_from_id(&args.scheme).map_err(Failure::usage)?;
    let bit = args.bit.unwrap_or(if args.scheme == "tiny" {
        0
    } else {
        base.ct_bits() - 1
    });
    if bit >= base.ct_bits() {
        return Err(Failure::usage(format!(
            "bit {bit} outside {}-bit ciphertexts",
            base.ct_bits()
        )));
    }
    if args.samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    let decoder = LocalDecoder::new(format!("bit{bit}"), move |c: &BitStr| c.get(bit));
    let biased =
        biasing_wrap(Arc::clone(&base), decoder.clone(), args.t).map_err(Failure::usage)?;
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let keys = base.gen(&mut rng);
    let m = BitStr::random(base.msg_bits(), &mut rng);
    println!("scheme={}", biased.id());

    let mut honest_hits = 0;
    for _ in 0..args.samples {
        honest_hits +=
            decoder.decode(&base.enc(&keys.pk, &m, &mut rng).map_err(Failure::runtime)?) as u64;
    }
    let mut hits = 0;
    for _ in 0..args.samples {
        hits += decoder.decode(
            &biased
                .enc(&keys.pk, &m, &mut rng)
                .map_err(Failure::runtime)?,
        ) as u64;
    }
    let measured = rate(hits, args.samples);
    let exact = |s: &dyn Scheme| {
        s.enumerate(&keys.pk, &m).map(|pmf| {
            pmf.iter()
                .filter(|(c, _)| decoder.decode(c))
                .map(|(_, w)| w)
                .sum::<f64>()
        })
    };
    let base_rate = exact(base.as_ref()).unwrap_or(rate(honest_hits, args.samples));
    let predicted = 1.0 - (1.0 - base_rate).powi(args.t as i32);
    let sigma = (predicted * (1.0 - predicted) / args.samples as f64).sqrt();
    println!("base_rate={base_rate:.6}");
    match exact(&biased) {
        Some(e) => println!("decoder_bias={e:.6} (exact)"),
        None => println!("decoder_bias={measured:.6} (measured)"),
    }
    println!("predicted={predicted:.6}");
    println!(
        "measured={measured:.6} over {} encryptions, sigma={sigma:.2e}",
        args.samples
    );

    let trials = (args.samples / 10).max(1);
    let mut errors = [0u64; 2];
    for (b, slot) in errors.iter_mut().enumerate() {
        for _ in 0..trials {
            let (_, ok) = embed_bit_locally(
                &biased,
                &keys.pk,
                &m,
                &decoder,
                b == 1,
                args.budget,
                &mut rng,
            )
            .map_err(Failure::runtime)?;
            *slot += !ok as u64;
        }
    }
    println!(
        "strawman budget={} error_bit0={:.4} error_bit1={:.4} over {trials} trials each",
        args.budget,
        rate(errors[0], trials),
        rate(errors[1], trials)
    );
    Ok(())
}
