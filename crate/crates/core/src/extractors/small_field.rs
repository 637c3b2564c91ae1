//! GF(2^v) for v in {2, 4, 8, 16, 32}.

use crate::error::{Error, Result};

/// Reduction polynomial for each supported width, with the x^v term included.
pub(crate) fn modulus(v: usize) -> Result<u64> {
    Ok(match v {
        2 => 0b111,
        4 => 0b1_0011,
        8 => 0x11b,
        16 => 0x1_002b,
        32 => 0x1_0000_008d,
        _ => return Err(Error::BadV(v)),
    })
}

pub const SUPPORTED_WIDTHS: [usize; 5] = [2, 4, 8, 16, 32];

/// Product in GF(2^v); inputs must be below 2^v.
pub fn small_mul(a: u64, b: u64, v: usize) -> Result<u64> {
    let m = modulus(v)?;
    let mut a = a;
    let mut b = b;
    let mut r = 0u64;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        a <<= 1;
        if (a >> v) & 1 == 1 {
            a ^= m;
        }
        b >>= 1;
    }
    Ok(r)
}
