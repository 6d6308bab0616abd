//! Fixed-point arithmetic for the intermittent interval map
//!
//!   g(x) = x (1 + 2^a x^a)   on [0, 1/2),
//!   g(x) = 2x - 1            on [1, 1/2, 1).
//!
//! Points are unsigned fixed-point numbers with `prec` fraction bits.
//! The right branch is exact. On the left branch the identity
//! `2^a x^a = (2x)^a` reduces the update to one fractional power of a
//! fixed-point value, computed by integer root extraction, so every step
//! is within one ulp of the true map and, crucially, orbits never collapse
//! the way f64 orbits of an expanding map do.
//!
//! Exponents are rationals `num/den`. A fast u64/u128 path covers
//! `den == 1, num <= 2` and `den == 2, num == 1` at `prec <= 62`
//! (so in particular a = 1/2, 1, 2); everything else runs on big integers.

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;

use crate::stats::rational_approx;

/// Left-branch exponent as an exact small rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpAlpha {
    pub num: u64,
    pub den: u64,
}

impl MpAlpha {
    /// Recover the intended rational from an f64 like 0.5 or 2.0.
    /// Panics if no denominator up to 64 reproduces `alpha` to 1e-12.
    pub fn from_f64(alpha: f64) -> Self {
        assert!(alpha > 0.0, "exponent must be positive");
        let (num, den) = rational_approx(alpha, 64);
        assert!(
            (num as f64 / den as f64 - alpha).abs() < 1e-12,
            "exponent {alpha} is not a small rational"
        );
        MpAlpha { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn small_path(&self, prec: u32) -> bool {
        prec <= 62 && ((self.den == 1 && self.num <= 2) || (self.den == 2 && self.num == 1))
    }
}

/// A point of [0,1) with `prec` fraction bits.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecisionReal {
    Small { v: u64, prec: u32 },
    Big { v: BigUint, prec: u32 },
}

impl PrecisionReal {
    /// Choose the representation that `alpha` can run fast on.
    pub fn from_u64(v: u64, prec: u32, alpha: &MpAlpha) -> Self {
        if alpha.small_path(prec) {
            PrecisionReal::Small { v, prec }
        } else {
            PrecisionReal::Big {
                v: BigUint::from(v),
                prec,
            }
        }
    }

    /// Uniform draw from the `2^prec` grid points of [0,1).
    pub fn random(rng: &mut impl RngCore, prec: u32, alpha: &MpAlpha) -> Self {
        if alpha.small_path(prec) {
            let v = rng.next_u64() >> (64 - prec);
            PrecisionReal::Small { v, prec }
        } else {
            let words = (prec as usize).div_ceil(64);
            let mut v = BigUint::ZERO;
            for _ in 0..words {
                v = (v << 64) | BigUint::from(rng.next_u64());
            }
            v >>= words * 64 - prec as usize;
            PrecisionReal::Big { v, prec }
        }
    }

    pub fn from_f64(x: f64, prec: u32, alpha: &MpAlpha) -> Self {
        assert!((0.0..1.0).contains(&x));
        if alpha.small_path(prec) {
            PrecisionReal::Small {
                v: (x * (1u64 << prec) as f64) as u64,
                prec,
            }
        } else {
            // split into 32-bit chunks to stay inside f64 integer range
            let mut v = BigUint::ZERO;
            let mut frac = x;
            let mut left = prec;
            while left > 0 {
                let take = left.min(32);
                frac *= (1u64 << take) as f64;
                let digit = frac.floor();
                frac -= digit;
                v = (v << take) | BigUint::from(digit as u64);
                left -= take;
            }
            PrecisionReal::Big { v, prec }
        }
    }

    pub fn prec(&self) -> u32 {
        match self {
            PrecisionReal::Small { prec, .. } | PrecisionReal::Big { prec, .. } => *prec,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PrecisionReal::Small { v, .. } => *v == 0,
            PrecisionReal::Big { v, .. } => v.is_zero(),
        }
    }

    pub fn value_f64(&self) -> f64 {
        match self {
            PrecisionReal::Small { v, prec } => *v as f64 / (1u64 << prec) as f64,
            PrecisionReal::Big { v, prec } => {
                let p = *prec;
                let top = (v >> p.saturating_sub(53) as usize).to_u64().unwrap_or(u64::MAX);
                top as f64 / (1u64 << p.min(53)) as f64
            }
        }
    }
}

/// `floor(w^(num/den))` for a fixed-point `w` with `prec` fraction bits,
/// result again with `prec` fraction bits: floor((W^p 2^{prec(q-p)})^{1/q}).
fn pow_frac_big(w: &BigUint, prec: u32, alpha: &MpAlpha) -> BigUint {
    let p = alpha.num as i64;
    let q = alpha.den as i64;
    let e = prec as i64 * (q - p);
    // shift by 2^{q s} inside the root so the exponent is nonnegative,
    // then undo with >> s; floor composes through both operations
    let s = if e < 0 { (-e + q - 1) / q } else { 0 };
    let m = w.pow(alpha.num as u32) << (e + q * s) as u64;
    m.nth_root(alpha.den as u32) >> s as u64
}

fn mp_step_big(v: &mut BigUint, prec: u32, alpha: &MpAlpha) {
    let one = BigUint::one() << prec;
    let half = BigUint::one() << (prec - 1);
    if *v >= half {
        *v = (&*v << 1u8) - &one;
        return;
    }
    if v.is_zero() {
        return;
    }
    let t = pow_frac_big(&(&*v << 1u8), prec, alpha);
    let mut inc = (&*v * t + (BigUint::one() << (prec - 1))) >> prec;
    if inc.is_zero() {
        // the true map strictly increases on (0, 1/2); one ulp keeps the
        // orbit moving instead of freezing at a spurious fixed point
        inc = BigUint::one();
    }
    *v += inc;
    if *v >= one {
        *v = one - BigUint::one();
    }
}

fn mp_step_small(v: &mut u64, prec: u32, alpha: &MpAlpha) {
    let one = 1u64 << prec;
    let half = 1u64 << (prec - 1);
    if *v >= half {
        *v = (*v << 1) - one;
        return;
    }
    if *v == 0 {
        return;
    }
    let w2 = (*v as u128) << 1;
    let t: u128 = match (alpha.num, alpha.den) {
        (1, 1) => w2,
        (2, 1) => (w2 * w2) >> prec,
        (1, 2) => (w2 << prec).sqrt(),
        _ => unreachable!("small path only handles exponents 1/2, 1, 2"),
    };
    let mut inc = ((*v as u128 * t + (1u128 << (prec - 1))) >> prec) as u64;
    if inc == 0 {
        inc = 1;
    }
    *v += inc;
    if *v >= one {
        *v = one - 1;
    }
}

/// One application of the map, in place.
pub fn mp_step(x: &mut PrecisionReal, alpha: &MpAlpha) {
    match x {
        PrecisionReal::Small { v, prec } => mp_step_small(v, *prec, alpha),
        PrecisionReal::Big { v, prec } => mp_step_big(v, *prec, alpha),
    }
}

/// True whether the point lies in the right branch [1/2, 1).
pub fn mp_in_right_branch(x: &PrecisionReal) -> bool {
    match x {
        PrecisionReal::Small { v, prec } => *v >= 1u64 << (prec - 1),
        PrecisionReal::Big { v, prec } => *v >= &BigUint::one() << (*prec - 1),
    }
}

/// Derivative of the map at `x` (f64 is enough: it only feeds reference
/// law parameters, never the dynamics).
pub fn mp_derivative(x: f64, alpha: f64) -> f64 {
    if x >= 0.5 {
        2.0
    } else {
        1.0 + (alpha + 1.0) * (2.0 * x).powf(alpha)
    }
}
