//! Sampling initial points from the invariant measures of the three maps,
//! plus a uniform interface over their very different orbit types.

use num_bigint::BigUint;
use rand::RngCore;
use rand_chacha::ChaCha12Rng;

use super::binary::BinaryOrbit;
use super::cf_point::CFPoint;
use super::precision::{mp_step, MpAlpha, PrecisionReal};
use crate::{Error, Result};

/// Which map an experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Doubling,
    Gauss,
    MannevillePomeau,
}

/// CDF of the invariant density 1/((1+x) ln 2) of the continued-fraction map.
pub fn gauss_cdf(r: f64) -> f64 {
    (1.0 + r).ln() / std::f64::consts::LN_2
}

/// Inverse of [`gauss_cdf`]: the radius whose left interval has measure `u`.
pub fn gauss_inverse_cdf(u: f64) -> f64 {
    u.exp2() - 1.0
}

/// Draw the binary seed of a point distributed by the continued-fraction
/// invariant measure, as an exact dyadic rational with `bits` bits.
///
/// Rejection sampling against the density 1/((1+x) ln 2): propose x and w
/// uniform, accept iff w (1 + x) < 1 (acceptance rate ln 2). The test is
/// decided on nested integer enclosures of w (1 + x), drawing 64 more bits
/// of both numbers whenever the enclosure straddles 1, so acceptance is
/// exact rather than rounded.
pub fn sample_gauss_seed(rng: &mut ChaCha12Rng, bits: usize) -> BigUint {
    assert!(bits >= 64);
    loop {
        let mut x = BigUint::from(rng.next_u64());
        let mut w = BigUint::from(rng.next_u64());
        let mut n = 64u64;
        let accepted = loop {
            let one_plus_x = (BigUint::from(1u8) << n) + &x;
            let threshold = BigUint::from(1u8) << (2 * n);
            if (&w + 1u8) * (&one_plus_x + 1u8) <= threshold {
                break true;
            }
            if &w * &one_plus_x >= threshold {
                break false;
            }
            x = (x << 64) | BigUint::from(rng.next_u64());
            w = (w << 64) | BigUint::from(rng.next_u64());
            n += 64;
        };
        if !accepted {
            continue;
        }
        let mut seed = x;
        let mut have = n as usize;
        while have < bits {
            seed = (seed << 64) | BigUint::from(rng.next_u64());
            have += 64;
        }
        return seed >> (have - bits);
    }
}

/// A point of the continued-fraction map distributed by its invariant
/// measure, represented as an exact dyadic rational so its digits come out
/// of a single certified Euclid chain.
pub fn sample_gauss_point(rng: &mut ChaCha12Rng, bits: usize) -> CFPoint {
    CFPoint::from_dyadic_exact(sample_gauss_seed(rng, bits), bits)
}

/// Lebesgue-distributed doubling-map orbit.
pub fn sample_doubling_orbit(rng: ChaCha12Rng) -> BinaryOrbit {
    BinaryOrbit::random(rng)
}

/// A point approximately distributed by the absolutely continuous invariant
/// measure of the intermittent map: uniform start, `burn_in` steps of the
/// map. Resamples (up to 16 times) if the orbit lands exactly on 0.
pub fn sample_mp_point(
    rng: &mut ChaCha12Rng,
    alpha: &MpAlpha,
    prec: u32,
    burn_in: u32,
) -> Result<PrecisionReal> {
    for _ in 0..16 {
        let mut x = PrecisionReal::random(rng, prec, alpha);
        for _ in 0..burn_in {
            mp_step(&mut x, alpha);
        }
        if !x.is_zero() {
            return Ok(x);
        }
    }
    Err(Error::ExceptionalPoint)
}

/// Orbit values as a plain f64 stream, hiding the per-map representation.
pub trait ValueStream {
    /// Value of the current point.
    fn value(&mut self) -> Result<f64>;
    /// Advance one application of the map.
    fn advance(&mut self) -> Result<()>;
}

impl ValueStream for BinaryOrbit {
    fn value(&mut self) -> Result<f64> {
        self.value_f64()
    }
    fn advance(&mut self) -> Result<()> {
        self.step()
    }
}

impl ValueStream for CFPoint {
    fn value(&mut self) -> Result<f64> {
        self.value_f64()
    }
    fn advance(&mut self) -> Result<()> {
        self.gauss_step()
    }
}

/// Intermittent-map orbit bundling the point with its exponent.
pub struct MpOrbit {
    pub x: PrecisionReal,
    pub alpha: MpAlpha,
}

impl ValueStream for MpOrbit {
    fn value(&mut self) -> Result<f64> {
        Ok(self.x.value_f64())
    }
    fn advance(&mut self) -> Result<()> {
        mp_step(&mut self.x, &self.alpha);
        Ok(())
    }
}

/// Fast value-stream for the continued-fraction map in plain f64.
///
/// Not certified: used only where a cross-check against [`CFPoint`] backs
/// it up, for high-volume statistics whose per-sample horizon is short
/// enough that f64 error stays far below the statistical noise.
pub struct GaussF64Orbit {
    pub x: f64,
}

impl ValueStream for GaussF64Orbit {
    fn value(&mut self) -> Result<f64> {
        Ok(self.x)
    }
    fn advance(&mut self) -> Result<()> {
        if self.x <= 0.0 {
            return Err(Error::ExceptionalPoint);
        }
        let inv = 1.0 / self.x;
        self.x = inv - inv.floor();
        Ok(())
    }
}
