//! The hidden-layer primitives: a key exchange with random-looking messages
//! and a secret-key encryption scheme with random-looking ciphertexts.

mod chacha;
mod kex;
mod ske;

pub use chacha::{chacha20_block, hchacha20};
pub use kex::{kex_finish, kex_from_exponent, kex_round1, KexState, SharedKey};
pub use ske::{
    prf_stream, ske_dec, ske_enc, ske_gen, SkeCiphertext, SkeKey, KEY_BITS, MAX_STREAM_BITS,
};
