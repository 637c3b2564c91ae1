use std::time::Duration;

use covertext::io::{
    tcp_connect, write_key_files, write_transcript, KeyFile, RunConfig, Server, StreamLink,
    TranscriptHeader,
};
use covertext::protocol::{party_keys, run_local, run_party, Mode, PartyOutcome, RunOptions};
use covertext::{BitStr, Role, TranscriptFrame};

use crate::{Failure, RunArgs};

fn hex_of(m: &BitStr) -> String {
    hex::encode(m.as_bytes())
}

fn write_outputs(
    cfg: &RunConfig,
    opts: &RunOptions,
    frames: &[TranscriptFrame],
) -> Result<(), Failure> {
    if let Some(path) = &cfg.transcript {
        let header = TranscriptHeader {
            profile: cfg.profile,
            mode: Some(cfg.mode),
            rng_seed: Some(cfg.rng_seed),
        };
        write_transcript(path, &header, frames).map_err(Failure::runtime)?;
    }
    if let Some(path) = &cfg.keys {
        let files: Vec<KeyFile> = [Role::P0, Role::P1]
            .into_iter()
            .map(|r| {
                KeyFile::from_pair(
                    opts.scheme.as_ref(),
                    Some(r),
                    &party_keys(opts.scheme.as_ref(), opts.rng_seed, r),
                )
            })
            .collect();
        write_key_files(path, &files).map_err(Failure::runtime)?;
    }
    Ok(())
}

fn print_header(cfg: &RunConfig, opts: &RunOptions) {
    println!(
        "profile={} mode={} rngseed={} scheme={}",
        cfg.profile,
        cfg.mode,
        cfg.rng_seed,
        opts.scheme.id()
    );
}

pub fn run_local_cmd(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let opts = cfg.run_options().map_err(Failure::usage)?;
    let report = run_local(&opts).map_err(Failure::runtime)?;
    write_outputs(&cfg, &opts, &report.frames)?;
    print_header(&cfg, &opts);
    println!("frames={}", report.frames.len());
    if let Some(seed) = &report.seed {
        println!("seed={}", hex_of(&seed.bits));
    }
    if let Some(mean) = report.mean_attempts() {
        println!("mean_attempts={mean:.3}");
    }
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    for m in &opts.messages {
        println!("sent={}", hex_of(m));
    }
    for m in &report.recovered {
        println!("recovered={}", hex_of(m));
    }
    if cfg.mode == Mode::Subliminal && report.recovered != opts.messages {
        return Err(Failure::runtime(
            "recovered messages differ from those sent",
        ));
    }
    Ok(())
}

fn finish_party(
    cfg: &RunConfig,
    opts: &RunOptions,
    role: Role,
    out: PartyOutcome,
) -> Result<(), Failure> {
    write_outputs(cfg, opts, &out.frames)?;
    print_header(cfg, opts);
    println!("role=p{} frames={}", role.index(), out.frames.len());
    for d in &out.diagnostics {
        eprintln!("{d}");
    }
    for m in &out.recovered {
        println!("recovered={}", hex_of(m));
    }
    Ok(())
}

pub fn serve_cmd(listen: &str, args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let opts = cfg.run_options().map_err(Failure::usage)?;
    let server = Server::bind(listen).map_err(Failure::runtime)?;
    eprintln!(
        "listening on {}",
        server.local_addr().map_err(Failure::runtime)?
    );
    let stream = server.accept_one().map_err(Failure::runtime)?;
    let mut link = StreamLink::new(stream, Role::P0, opts.params.n_ct);
    let out = run_party(&opts, Role::P0, &mut link).map_err(Failure::runtime)?;
    finish_party(&cfg, &opts, Role::P0, out)
}

pub fn connect_cmd(peer: &str, args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let opts = cfg.run_options().map_err(Failure::usage)?;
    let stream = tcp_connect(peer, Duration::from_secs(10)).map_err(Failure::runtime)?;
    let mut link = StreamLink::new(stream, Role::P1, opts.params.n_ct);
    let out = run_party(&opts, Role::P1, &mut link).map_err(Failure::runtime)?;
    finish_party(&cfg, &opts, Role::P1, out)
}
