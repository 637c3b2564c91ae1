//! `covertext`: run, observe and test subliminal sessions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covertext::io::RunConfig;
use covertext::protocol::Mode;
use covertext::ProfileName;

mod attack;
mod battery;
mod bench;
mod run;
mod selftest;

#[derive(Parser)]
#[command(
    name = "covertext",
    version,
    about = "Subliminal messages inside mandated-scheme ciphertexts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run both parties in-process and print the run report.
    RunLocal(RunArgs),
    /// Act as P0: accept one TCP connection and run the protocol over it.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7643")]
        listen: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Act as P1: connect to a serving P0 (or a tap in front of it).
    Connect {
        #[arg(long, default_value = "127.0.0.1:7643")]
        peer: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Relay between a connecting P1 and a serving P0, recording every frame.
    Eavesdrop(attack::EavesdropArgs),
    /// Bias a locally decodable hidden bit with the re-encryption wrapper.
    AttackDemo(attack::AttackArgs),
    /// Compare two sets of transcript files with the distinguisher battery.
    Battery(battery::BatteryArgs),
    /// Run the exhaustive small-instance oracles.
    Selftest,
    /// Measure rejection-sampling throughput.
    Bench(bench::BenchArgs),
}

/// Options shared by the commands that run a party.
#[derive(Args, Clone, Default)]
pub struct RunArgs {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    profile: Option<ProfileName>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Mandated scheme id, e.g. elg-512 or tiny.
    #[arg(long)]
    scheme: Option<String>,
    /// Cover distribution: constant[:hex], flat:K or ngram[:path].
    #[arg(long)]
    cover: Option<String>,
    /// Hidden message in hex; repeat for one message per session.
    #[arg(long = "msg")]
    messages: Vec<String>,
    /// Overrides both the config file and COVERTEXT_RNG_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Write both parties' key pairs here.
    #[arg(long)]
    keys: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(Failure::usage)?,
            None => RunConfig::default(),
        };
        cfg.apply_env().map_err(Failure::usage)?;
        if let Some(p) = self.profile {
            cfg.profile = p;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if self.scheme.is_some() {
            cfg.scheme = self.scheme.clone();
        }
        if self.cover.is_some() {
            cfg.cover = self.cover.clone();
        }
        if !self.messages.is_empty() {
            cfg.messages = self
                .messages
                .iter()
                .map(|m| covertext::io::parse_message_hex(m))
                .collect::<Result<_, _>>()
                .map_err(Failure::usage)?;
        }
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        if self.transcript.is_some() {
            cfg.transcript = self.transcript.clone();
        }
        if self.keys.is_some() {
            cfg.keys = self.keys.clone();
        }
        Ok(cfg)
    }
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or parameter combinations: exit 2.
    Usage(String),
    /// The protocol or a check failed while running: exit 1.
    Runtime(String),
}

impl Failure {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunLocal(args) => run::run_local_cmd(&args),
        Command::Serve { listen, run } => run::serve_cmd(&listen, &run),
        Command::Connect { peer, run } => run::connect_cmd(&peer, &run),
        Command::Eavesdrop(args) => attack::eavesdrop_cmd(&args),
        Command::AttackDemo(args) => attack::attack_cmd(&args),
        Command::Battery(args) => battery::battery_cmd(&args),
        Command::Selftest => selftest::selftest_cmd(),
        Command::Bench(args) => bench::bench_cmd(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
