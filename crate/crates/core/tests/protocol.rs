use std::time::Instant;

use covertext::coverdist::CoverDist;
use covertext::protocol::{run_local, Mode, RunOptions};
use covertext::{resolve_profile, BitStr, Error, Phase, Role};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn desk_opts(mode: Mode, seed: u64, messages: Vec<BitStr>) -> RunOptions {
    let p = resolve_profile("desk").unwrap();
    RunOptions::new(
        p,
        mode,
        CoverDist::uniform_flat(96, 128).unwrap(),
        seed,
        messages,
    )
    .unwrap()
}

#[test]
fn desk_subliminal_round_trip() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let msgs = vec![BitStr::random(128, &mut rng), BitStr::random(128, &mut rng)];
    let t = Instant::now();
    let report = run_local(&desk_opts(Mode::Subliminal, 7, msgs.clone())).unwrap();
    eprintln!("desk run took {:?}", t.elapsed());
    assert_eq!(report.recovered, msgs);
    assert_eq!(report.frames.len(), 2 * (128 + 128 + 2 * 64));
    assert_eq!(report.attempts_histogram.len(), 2 * 128 + 2 * 64);
    let mean = report.mean_attempts().unwrap();
    assert!((8.0..32.0).contains(&mean), "{mean}");
}

#[test]
fn honest_run_has_same_shape() {
    let report = run_local(&desk_opts(Mode::Honest, 8, vec![BitStr::zeros(128); 2])).unwrap();
    assert!(report.recovered.is_empty());
    assert!(report.attempts_histogram.is_empty());
    assert_eq!(report.frames.len(), 768);
    assert!(report.frames.iter().all(|f| f.phase != Phase::CommPhase));
    assert!(report.seed.is_some());
}

#[test]
fn embed_before_setup_is_not_ready() {
    use covertext::protocol::PartyEngine;
    let opts = desk_opts(Mode::Subliminal, 1, vec![]);
    let mut e = PartyEngine::new(opts.engine_config(Role::P0)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    assert!(matches!(
        e.embed(&BitStr::zeros(128), &mut rng),
        Err(Error::NotReady(_))
    ));
}
