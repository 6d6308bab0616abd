//! Batched continued-fraction digit extraction for exact rationals.
//!
//! The plain Euclid chain costs one big division per digit. Here digits
//! are extracted in batches from the leading 63 bits of the remainder
//! pair, certified by running the step on both ends of the truncation
//! interval (the same agreement argument as the interval points in
//! [`super::cf_point`]); the accumulated 2x2 step matrix is then applied
//! to the full-size remainders once per batch. Digits are identical to
//! the per-digit chain; only the cost changes.

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// Streaming CF digits of an exact rational in [0, 1).
pub struct CfDigitStream {
    /// remainder pair: digit a = floor(r_prev / r_cur)
    r_prev: BigUint,
    r_cur: BigUint,
    buffer: VecDeque<u64>,
    emitted: u64,
    done: bool,
}

impl CfDigitStream {
    /// Digits of `num / den`, requiring 0 ≤ num < den.
    pub fn new(num: BigUint, den: BigUint) -> Self {
        assert!(num < den);
        CfDigitStream {
            r_prev: den,
            r_cur: num,
            buffer: VecDeque::new(),
            emitted: 0,
            done: false,
        }
    }

    /// Digits of the dyadic rational `seed / 2^bits`.
    pub fn from_dyadic(seed: BigUint, bits: usize) -> Self {
        Self::new(seed, BigUint::from(1u8) << bits)
    }

    /// Number of digits handed out so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Next digit, or None when the (finite) expansion has terminated.
    pub fn next_digit(&mut self) -> Option<u64> {
        loop {
            if let Some(d) = self.buffer.pop_front() {
                self.emitted += 1;
                return Some(d);
            }
            if self.done {
                return None;
            }
            self.refill();
        }
    }

    fn refill(&mut self) {
        if self.r_cur.is_zero() {
            self.done = true;
            return;
        }
        let bits = self.r_prev.bits();
        if bits <= 64 {
            // endgame: run u64 Euclid to exhaustion
            let mut q = self.r_prev.to_u64().unwrap();
            let mut p = self.r_cur.to_u64().unwrap();
            while p != 0 {
                let a = q / p;
                self.buffer.push_back(a);
                let np = q - a * p;
                q = p;
                p = np;
            }
            self.r_prev = BigUint::from(q);
            self.r_cur = BigUint::ZERO;
            self.done = true;
            return;
        }
        let shift = (bits - 63) as usize;
        let q_top = (&self.r_prev >> shift).to_u64().unwrap();
        let p_top = (&self.r_cur >> shift).to_u64().unwrap();

        // two endpoint states bracketing the true ratio; a digit is valid
        // when both agree (floor of the ratio is monotone, so agreement on
        // the bracket pins it for the true pair)
        let (mut pa, mut qa) = (p_top + 1, q_top);
        let (mut pb, mut qb) = (p_top, q_top + 1);

        // accumulated step matrix, signed entries; |entry| stays below the
        // guard so the i128 products cannot overflow
        let (mut m00, mut m01, mut m10, mut m11): (i128, i128, i128, i128) = (1, 0, 0, 1);
        const GUARD: i128 = 1 << 62;
        let mut digits_in_batch = 0usize;

        loop {
            if pa == 0 || pb == 0 {
                break;
            }
            let aa = qa / pa;
            let ab = qb / pb;
            if aa != ab {
                break;
            }
            let a = aa;
            if a as i128 >= GUARD {
                break;
            }
            // matrix for one step: (prev, cur) <- (cur, prev - a*cur)
            let n00 = m10;
            let n01 = m11;
            let n10 = m00 - a as i128 * m10;
            let n11 = m01 - a as i128 * m11;
            if n10.abs() >= GUARD || n11.abs() >= GUARD {
                break;
            }
            m00 = n00;
            m01 = n01;
            m10 = n10;
            m11 = n11;
            let npa = qa - a * pa;
            qa = pa;
            pa = npa;
            let npb = qb - a * pb;
            qb = pb;
            pb = npb;
            self.buffer.push_back(a);
            digits_in_batch += 1;
        }

        if digits_in_batch == 0 {
            // truncation too coarse for even one digit: one exact big step.
            // Digits beyond u64 are emitted saturated; the remainder update
            // stays exact so later digits are unaffected.
            let a = &self.r_prev / &self.r_cur;
            self.buffer.push_back(a.to_u64().unwrap_or(u64::MAX));
            let nc = &self.r_prev - a * &self.r_cur;
            self.r_prev = std::mem::replace(&mut self.r_cur, nc);
            return;
        }

        let new_prev = apply_row(m00, m01, &self.r_prev, &self.r_cur);
        let new_cur = apply_row(m10, m11, &self.r_prev, &self.r_cur);
        self.r_prev = new_prev;
        self.r_cur = new_cur;
    }
}

/// `c0 * prev + c1 * cur` with signed coefficients; the true remainder is
/// nonnegative, so exactly the positive combination survives.
fn apply_row(c0: i128, c1: i128, prev: &BigUint, cur: &BigUint) -> BigUint {
    let pos = |c: i128, v: &BigUint| -> BigUint { BigUint::from(c.unsigned_abs()) * v };
    match (c0 >= 0, c1 >= 0) {
        (true, true) => pos(c0, prev) + pos(c1, cur),
        (true, false) => {
            let p = pos(c0, prev);
            let n = pos(c1, cur);
            assert!(p >= n, "remainder update went negative");
            p - n
        }
        (false, true) => {
            let p = pos(c1, cur);
            let n = pos(c0, prev);
            assert!(p >= n, "remainder update went negative");
            p - n
        }
        (false, false) => unreachable!("step matrices never have two negative entries per row"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::CFPoint;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn collect_all(stream: &mut CfDigitStream, cap: usize) -> Vec<u64> {
        let mut out = Vec::new();
        while out.len() < cap {
            match stream.next_digit() {
                Some(d) => out.push(d),
                None => break,
            }
        }
        out
    }

    #[test]
    fn small_rationals() {
        let mut s = CfDigitStream::new(BigUint::from(2u8), BigUint::from(5u8));
        assert_eq!(collect_all(&mut s, 10), vec![2, 2]);
        let mut s = CfDigitStream::new(BigUint::from(355u16), BigUint::from(1000u16));
        // 355/1000 = 71/200 = [2,1,4,2,6]
        assert_eq!(collect_all(&mut s, 10), vec![2, 1, 4, 2, 6]);
    }

    #[test]
    fn matches_per_digit_chain_on_random_seeds() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for bits in [64usize, 192, 1024, 4096] {
            for _ in 0..8 {
                let words = bits / 64;
                let mut seed = BigUint::ZERO;
                for _ in 0..words {
                    seed = (seed << 64) | BigUint::from(rng.next_u64());
                }
                let mut fast = CfDigitStream::from_dyadic(seed.clone(), bits);
                let fast_digits = collect_all(&mut fast, usize::MAX);
                let mut slow = CFPoint::from_dyadic_exact(seed, bits);
                let (slow_digits, _) = slow.digits(fast_digits.len() + 4);
                assert_eq!(fast_digits, slow_digits, "bits={bits}");
            }
        }
    }

    #[test]
    fn handles_huge_digits() {
        // x = 1/2^100 + 1/2^200: first digit is astronomically large; the
        // stream must not stall or mangle the remainder update
        let seed: BigUint = (BigUint::from(1u8) << 100u32) + BigUint::from(1u8);
        let mut s = CfDigitStream::from_dyadic(seed.clone(), 200);
        let d = collect_all(&mut s, 50);
        assert!(d[0] > (1u64 << 62) || d[0] == u64::MAX || d[0] >= (1u64 << 63));
        let mut slow = CFPoint::from_dyadic_exact(seed, 200);
        let (slow_digits, _) = slow.digits(d.len() + 2);
        assert_eq!(d, slow_digits);
    }

    #[test]
    fn digit_count_scales_with_entropy() {
        // denominators grow by e^{pi^2/(12 ln 2)} per digit (Levy), about
        // 1.71 bits per digit, so a 6400-bit seed yields roughly 3740 digits
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut seed = BigUint::ZERO;
        for _ in 0..100 {
            seed = (seed << 64) | BigUint::from(rng.next_u64());
        }
        let mut s = CfDigitStream::from_dyadic(seed, 6400);
        let d = collect_all(&mut s, usize::MAX);
        assert!(
            (3400..4100).contains(&d.len()),
            "unexpected digit count {}",
            d.len()
        );
    }
}
