//! Exact doubling-map orbits on binary digit sequences.
//!
//! The doubling map is the left shift on binary expansions, so an orbit is
//! a digit stream plus a shift offset. Digits are materialized lazily from
//! a deterministic source; floating point never enters the dynamics (an
//! f64 orbit of `2x mod 1` collapses to 0 in about 53 steps).

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use rand_chacha::ChaCha12Rng;

use super::bits::{BitBuf, BitSource};
use crate::Result;

pub struct BinaryOrbit {
    buf: BitBuf,
    source: BitSource,
    position: usize,
}

impl BinaryOrbit {
    /// Orbit of a point with an i.i.d. fair bit expansion (Lebesgue-random).
    pub fn random(rng: ChaCha12Rng) -> Self {
        BinaryOrbit {
            buf: BitBuf::new(),
            source: BitSource::Rng(Box::new(rng)),
            position: 0,
        }
    }

    /// Orbit of the point whose expansion repeats `pattern` forever.
    pub fn periodic(pattern: Vec<bool>) -> Self {
        assert!(!pattern.is_empty());
        BinaryOrbit {
            buf: BitBuf::new(),
            source: BitSource::Periodic { pattern, next: 0 },
            position: 0,
        }
    }

    /// Orbit of a point given by a finite, non-extendable digit prefix.
    pub fn from_bits(bits: &[bool]) -> Self {
        BinaryOrbit {
            buf: BitBuf::from_bits(bits),
            source: BitSource::Exhausted,
            position: 0,
        }
    }

    pub fn zero() -> Self {
        Self::periodic(vec![false])
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Digit `i` of the *original* expansion (absolute index).
    pub fn digit(&mut self, i: usize) -> Result<bool> {
        self.buf.ensure(i + 1, &mut self.source)?;
        Ok(self.buf.bit(i))
    }

    /// One application of `T(x) = 2x mod 1`: advance the shift offset.
    pub fn step(&mut self) -> Result<()> {
        // The shifted point must still have at least one digit.
        self.buf.ensure(self.position + 2, &mut self.source)?;
        self.position += 1;
        Ok(())
    }

    /// Value of the current point from its next 53 digits, rounded down.
    /// Exact to within 2^-53, which is all the distance comparisons need.
    pub fn value_f64(&mut self) -> Result<f64> {
        self.buf.ensure(self.position + 64, &mut self.source).ok();
        Ok((self.buf.window(self.position) >> 11) as f64 * (1.0 / 9007199254740992.0))
    }

    /// Exact value of the current point truncated to `prefix` digits.
    pub fn value_rational(&mut self, prefix: usize) -> Result<Ratio<BigUint>> {
        let mut num = BigUint::ZERO;
        for i in 0..prefix {
            num <<= 1;
            if self.digit(self.position + i)? {
                num += 1u32;
            }
        }
        Ok(Ratio::new(num, BigUint::one() << prefix))
    }

    /// Materialize `n` digits past the current position and return the
    /// sequence of values along the next `n` shifts without consuming them.
    pub fn lookahead_values(&mut self, n: usize) -> Result<Vec<f64>> {
        self.buf.ensure(self.position + n + 64, &mut self.source).ok();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push((self.buf.window(self.position + k) >> 11) as f64 * (1.0 / 9007199254740992.0));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_doubles_to_half() {
        // digits 01 then zeros: x = 1/4
        let mut orbit = BinaryOrbit::from_bits(&[false, true, false, false]);
        orbit.step().unwrap();
        assert_eq!(orbit.value_f64().unwrap(), 0.5);
    }

    #[test]
    fn zero_is_fixed() {
        let mut orbit = BinaryOrbit::zero();
        for _ in 0..100 {
            orbit.step().unwrap();
            assert_eq!(orbit.value_f64().unwrap(), 0.0);
        }
    }

    #[test]
    fn one_third_has_period_two() {
        // 0101... = 1/3 -> 1010... = 2/3 -> 1/3
        let mut orbit = BinaryOrbit::periodic(vec![false, true]);
        let a = orbit.value_f64().unwrap();
        orbit.step().unwrap();
        let b = orbit.value_f64().unwrap();
        orbit.step().unwrap();
        let c = orbit.value_f64().unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a, c);
    }

    #[test]
    fn shift_consistency_exact() {
        // value after k steps equals 2^k * value mod 1, exactly on the prefix.
        let bits: Vec<bool> = (0..96).map(|i| (i * 7) % 3 == 1).collect();
        let mut orbit = BinaryOrbit::from_bits(&bits);
        let mut n0 = BigUint::ZERO;
        for &b in &bits {
            n0 <<= 1;
            if b {
                n0 += 1u32;
            }
        }
        for k in 1..32usize {
            orbit.step().unwrap();
            let vk = orbit.value_rational(96 - k).unwrap();
            // 2^k x mod 1 keeps digits k..96: numerator n0 mod 2^{96-k}
            let mask = (BigUint::one() << (96 - k)) - BigUint::one();
            let expect = Ratio::new(&n0 & &mask, BigUint::one() << (96 - k));
            assert_eq!(vk, expect, "k={k}");
        }
    }

    #[test]
    fn extension_preserves_materialized_digits() {
        use rand::SeedableRng;
        let rng = ChaCha12Rng::seed_from_u64(7);
        let mut orbit = BinaryOrbit::random(rng);
        let early: Vec<bool> = (0..40).map(|i| orbit.digit(i).unwrap()).collect();
        orbit.digit(5000).unwrap();
        let again: Vec<bool> = (0..40).map(|i| orbit.digit(i).unwrap()).collect();
        assert_eq!(early, again);
    }

    #[test]
    fn truncated_orbit_errors_past_prefix() {
        let mut orbit = BinaryOrbit::from_bits(&[true, false, true]);
        orbit.step().unwrap();
        orbit.step().unwrap();
        assert!(orbit.step().is_err());
    }
}
