//! Fixed-length bit strings.
//!
//! Bits are packed most-significant-bit first, so for two strings of equal
//! length the lexicographic byte order is the order of their big-endian
//! integer values. Unused trailing bits of the last byte are always zero.

use std::cmp::Ordering;
use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitStr {
    len: usize,
    bytes: Vec<u8>,
}

fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

impl BitStr {
    pub fn zeros(len: usize) -> Self {
        BitStr {
            len,
            bytes: vec![0; byte_len(len)],
        }
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    /// Takes `len` bits from `bytes`; trailing bits past `len` are cleared.
    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != byte_len(len) {
            return Err(Error::BadLength {
                expected: byte_len(len) * 8,
                actual: bytes.len() * 8,
            });
        }
        let mut s = BitStr {
            len,
            bytes: bytes.to_vec(),
        };
        s.clear_padding();
        Ok(s)
    }

    /// Whole bytes, `8 * bytes.len()` bits.
    pub fn from_byte_vec(bytes: Vec<u8>) -> Self {
        BitStr {
            len: bytes.len() * 8,
            bytes,
        }
    }

    /// The `len` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mut s = Self::zeros(len);
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                s.set(i, true);
            }
        }
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::empty();
        for b in bits {
            s.push(b);
        }
        s
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; byte_len(len)];
        rng.fill_bytes(&mut bytes);
        let mut s = BitStr { len, bytes };
        s.clear_padding();
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for {} bits",
            self.len
        );
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for {} bits",
            self.len
        );
        let mask = 1u8 << (7 - i % 8);
        if bit {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Big-endian value of a string of at most 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64, "to_u64 on a {}-bit string", self.len);
        self.bits().fold(0u64, |acc, b| (acc << 1) | b as u64)
    }

    /// Compares the big-endian integer values of two equal-length strings.
    pub fn cmp_be(&self, other: &BitStr) -> Result<Ordering> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self.bytes.cmp(&other.bytes))
    }

    pub fn concat(&self, other: &BitStr) -> BitStr {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn extend(&mut self, other: &BitStr) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        for b in other.bits() {
            self.push(b);
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> BitStr {
        assert!(start + len <= self.len, "slice out of range");
        if start % 8 == 0 {
            let mut s = BitStr {
                len,
                bytes: self.bytes[start / 8..start / 8 + byte_len(len)].to_vec(),
            };
            s.clear_padding();
            return s;
        }
        BitStr::from_bits((start..start + len).map(|i| self.get(i)))
    }

    /// Splits into consecutive `width`-bit blocks; the length must divide evenly.
    pub fn blocks(&self, width: usize) -> Result<Vec<BitStr>> {
        if width == 0 || self.len % width != 0 {
            return Err(Error::BadLength {
                expected: self.len.next_multiple_of(width.max(1)),
                actual: self.len,
            });
        }
        Ok((0..self.len / width)
            .map(|i| self.slice(i * width, width))
            .collect())
    }

    /// First `len` bits, zero-extended at the end when the string is shorter.
    pub fn resized(&self, len: usize) -> BitStr {
        if len <= self.len {
            return self.slice(0, len);
        }
        let mut out = self.clone();
        out.extend(&BitStr::zeros(len - self.len));
        out
    }

    pub fn xor(&self, other: &BitStr) -> Result<BitStr> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(BitStr {
            len: self.len,
            bytes: self
                .bytes
                .iter()
                .zip(&other.bytes)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// `len:hex`, lowercase.
    pub fn to_hex(&self) -> String {
        format!("{}:{}", self.len, hex::encode(&self.bytes))
    }

    pub fn parse_hex(s: &str) -> Result<BitStr> {
        let (len, digits) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing length prefix in `{s}`")))?;
        let len: usize = len
            .parse()
            .map_err(|_| Error::Parse(format!("bad bit length `{len}`")))?;
        let bytes = hex::decode(digits).map_err(|e| Error::Parse(e.to_string()))?;
        let s = BitStr::from_bytes(len, &bytes)?;
        if s.bytes != bytes {
            return Err(Error::Parse("nonzero padding bits".into()));
        }
        Ok(s)
    }

    fn clear_padding(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xffu8 << (8 - rem);
            }
        }
    }
}

/// Order of the big-endian integer interpretations.
pub fn bitstr_cmp(x: &BitStr, y: &BitStr) -> Result<Ordering> {
    x.cmp_be(y)
}

impl fmt::Debug for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitStr({})", self.to_hex())
    }
}

impl fmt::Display for BitStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}
