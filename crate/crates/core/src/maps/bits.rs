//! Bit buffers and deterministic bit sources backing exact orbits.

use rand::RngCore;
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

/// Where new binary digits come from when an orbit needs to look further
/// ahead. Already materialized digits are never revisited.
pub enum BitSource {
    /// No further digits; the materialized prefix is all there is.
    Exhausted,
    /// Repeats `pattern` forever (continuing from `next`).
    Periodic { pattern: Vec<bool>, next: usize },
    /// Pinned PRNG stream; fair independent bits.
    Rng(Box<ChaCha12Rng>),
}

impl BitSource {
    fn next_word(&mut self) -> Option<u64> {
        match self {
            BitSource::Exhausted => None,
            BitSource::Periodic { pattern, next } => {
                let mut w = 0u64;
                for i in 0..64 {
                    let b = pattern[(*next + i) % pattern.len()];
                    if b {
                        w |= 1 << (63 - i);
                    }
                }
                *next = (*next + 64) % pattern.len();
                Some(w)
            }
            BitSource::Rng(rng) => Some(rng.next_u64()),
        }
    }
}

/// A growable bit string. Bit `i` of the stream sits at bit `63 - i % 64`
/// of word `i / 64`, so a 64-bit window starting at any offset is two
/// shifts and an or.
pub struct BitBuf {
    words: Vec<u64>,
    len: usize,
}

impl BitBuf {
    pub fn new() -> Self {
        BitBuf {
            words: Vec::new(),
            len: usize::MAX, // unbounded until a finite prefix is pinned
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (63 - i % 64);
            }
        }
        BitBuf {
            words,
            len: bits.len(),
        }
    }

    /// Number of materialized bits.
    pub fn materialized(&self) -> usize {
        self.words.len() * 64
    }

    /// Hard length limit (`usize::MAX` when extendable).
    pub fn limit(&self) -> usize {
        self.len
    }

    /// Ensure at least `n` bits are materialized, drawing from `source`.
    pub fn ensure(&mut self, n: usize, source: &mut BitSource) -> Result<()> {
        if n > self.len {
            return Err(Error::OrbitTruncated { position: self.len });
        }
        while self.words.len() * 64 < n {
            match source.next_word() {
                Some(w) => self.words.push(w),
                None => {
                    if self.len == usize::MAX {
                        self.len = self.words.len() * 64;
                    }
                    if self.len >= n {
                        return Ok(());
                    }
                    return Err(Error::OrbitTruncated {
                        position: self.words.len() * 64,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (63 - i % 64) & 1 == 1
    }

    /// 64 bits starting at offset `k`, zero padded past the end.
    pub fn window(&self, k: usize) -> u64 {
        let q = k / 64;
        let r = k % 64;
        let hi = self.words.get(q).copied().unwrap_or(0);
        if r == 0 {
            hi
        } else {
            let lo = self.words.get(q + 1).copied().unwrap_or(0);
            hi << r | lo >> (64 - r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_crosses_word_boundary() {
        let bits: Vec<bool> = (0..130).map(|i| i % 3 == 0).collect();
        let buf = BitBuf::from_bits(&bits);
        for k in 0..66 {
            let w = buf.window(k);
            for j in 0..64 {
                if k + j < 130 {
                    assert_eq!(w >> (63 - j) & 1 == 1, bits[k + j], "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn periodic_source_fills_words() {
        let mut src = BitSource::Periodic {
            pattern: vec![false, true],
            next: 0,
        };
        let mut buf = BitBuf::new();
        buf.ensure(100, &mut src).unwrap();
        for i in 0..100 {
            assert_eq!(buf.bit(i), i % 2 == 1);
        }
    }
}
