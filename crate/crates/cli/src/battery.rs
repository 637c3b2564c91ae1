use std::path::PathBuf;

use clap::{Args, ValueEnum};
use covertext::io::{read_transcript, RunConfig, Transcript};
use covertext::protocol::party_keys;
use covertext::stats::{battery, BatteryConfig, ObservedRun};
use covertext::{BitStr, ParamProfile, Role};

use crate::Failure;

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
    Json,
}

#[derive(Args)]
pub struct BatteryArgs {
    /// Transcript files of the first population; repeatable.
    #[arg(long = "a", required = true)]
    a: Vec<PathBuf>,
    /// Transcript files of the second population; repeatable.
    #[arg(long = "b", required = true)]
    b: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Mandated scheme id; the profile's default otherwise.
    #[arg(long)]
    scheme: Option<String>,
    /// Cover distribution the decryption test checks against.
    #[arg(long)]
    cover: Option<String>,
    /// Fixed 128-bit extractor seed in hex instead of each run's own.
    #[arg(long)]
    seed_hint: Option<String>,
}

fn load(paths: &[PathBuf]) -> Result<Vec<Transcript>, Failure> {
    paths
        .iter()
        .map(|p| read_transcript(p).map_err(Failure::usage))
        .collect()
}

pub fn battery_cmd(args: &BatteryArgs) -> Result<(), Failure> {
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let profile = a[0].header.profile;
    if a.iter().chain(&b).any(|t| t.header.profile != profile) {
        return Err(Failure::usage("transcripts come from different profiles"));
    }
    let run_cfg = RunConfig {
        profile,
        scheme: args.scheme.clone(),
        cover: args.cover.clone(),
        ..RunConfig::default()
    };
    let scheme = run_cfg.scheme().map_err(Failure::usage)?;
    let dist = run_cfg.dist(scheme.msg_bits()).map_err(Failure::usage)?;
    let mut cfg = BatteryConfig::new(ParamProfile::get(profile).resolved, scheme.clone(), dist);
    if let Some(h) = &args.seed_hint {
        let bytes = hex::decode(h).map_err(Failure::usage)?;
        let bits = BitStr::from_byte_vec(bytes);
        cfg.seed_hint = Some(covertext::extractors::seed_from_bits(&bits).map_err(Failure::usage)?);
    }
    let observe = |ts: Vec<Transcript>| -> Vec<ObservedRun> {
        ts.into_iter()
            .map(|t| ObservedRun {
                keys: t
                    .header
                    .rng_seed
                    .map(|s| [Role::P0, Role::P1].map(|r| party_keys(scheme.as_ref(), s, r).sk)),
                frames: t.frames,
            })
            .collect()
    };
    let report = battery(&observe(a), &observe(b), &cfg).map_err(Failure::usage)?;
    match args.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Kv => print!("{}", report.to_kv()),
        Format::Json => println!("{}", report.to_json()),
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::runtime(
            "the battery distinguishes the two populations",
        ))
    }
}
