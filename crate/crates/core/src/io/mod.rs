//! Wire framing, transports, transcript files and configuration.

mod config;
mod transcript;
mod transport;
mod wire;

pub use config::{
    parse_kv, parse_message_hex, parse_role, read_key_files, scheme_from_id, write_key_files,
    KeyFile, Peer, RunConfig, RNG_SEED_ENV,
};
pub use transcript::{
    read_transcript, write_transcript, Transcript, TranscriptHeader, TranscriptWriter,
};
pub use transport::{
    channel_pair, tap, tcp_connect, tcp_serve, ChannelEnd, Server, StreamLink, CHANNEL_DEPTH,
};
pub use wire::{
    frame_decode, frame_encode, read_frame, write_frame, WireFrame, HEADER_LEN, MAGIC, VERSION,
};
