//! Certified continued-fraction points for Gauss-map dynamics.
//!
//! A point is represented either as an exact rational or as a dyadic
//! interval `[N/2^P, (N+1)/2^P]` whose bits come from a deterministic
//! source. Digits are extracted with the Euclidean algorithm run on both
//! interval endpoints; a digit is emitted only when the endpoints agree,
//! so every emitted digit is constant across the certifying interval.
//! When a digit is ambiguous the interval is refined with more source
//! bits, up to a budget.
//!
//! The Gauss step is the left shift on the digit sequence, so `gauss_step`
//! just advances an offset; the certified digits themselves never change.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::bits::BitSource;
use crate::{Error, Result};

/// Euclid state for one interval endpoint: the value is `p/q` in [0,1].
#[derive(Clone)]
struct Endpoint {
    p: BigUint,
    q: BigUint,
}

impl Endpoint {
    /// Exact first digit (floor of q/p), or None at termination.
    fn digit_exact(&self) -> Option<BigUint> {
        if self.p.is_zero() {
            return None;
        }
        Some(&self.q / &self.p)
    }

    /// Apply `x -> 1/x - a` exactly.
    fn advance(&mut self, a: &BigUint) {
        let new_p = &self.q - a * &self.p;
        self.q = std::mem::replace(&mut self.p, new_p);
    }
}

/// Emitted digits saturate at u64::MAX; the internal states stay exact, so
/// a saturated digit never corrupts the ones after it.
fn saturate(a: &BigUint) -> u64 {
    a.to_u64().unwrap_or(u64::MAX)
}

pub struct CFPoint {
    seed: BigUint,
    seed_bits: usize,
    /// Degenerate certifying interval (the point is exactly `lo`).
    exact: bool,
    lo: Endpoint,
    hi: Endpoint,
    source: BitSource,
    budget_bits: usize,
    consumed_bits: usize,
    digits: Vec<u64>,
    offset: usize,
    terminated: bool,
}

impl CFPoint {
    /// Exact rational point `p/q` in [0,1).
    pub fn from_rational(p: u64, q: u64) -> Self {
        assert!(q > 0 && p < q);
        let end = Endpoint {
            p: BigUint::from(p),
            q: BigUint::from(q),
        };
        CFPoint {
            seed: BigUint::ZERO,
            seed_bits: 0,
            exact: true,
            lo: end.clone(),
            hi: end,
            source: BitSource::Exhausted,
            budget_bits: 0,
            consumed_bits: 0,
            digits: Vec::new(),
            offset: 0,
            terminated: false,
        }
    }

    /// Exact dyadic rational `seed / 2^bits`, no refinement.
    ///
    /// Used by the Monte Carlo estimators: the sampled point *is* this
    /// rational, so its digits are exact and only one Euclid chain runs.
    pub fn from_dyadic_exact(seed: BigUint, bits: usize) -> Self {
        let end = Endpoint {
            p: seed.clone(),
            q: BigUint::one() << bits,
        };
        CFPoint {
            seed,
            seed_bits: bits,
            exact: true,
            lo: end.clone(),
            hi: end,
            source: BitSource::Exhausted,
            budget_bits: bits,
            consumed_bits: bits,
            digits: Vec::new(),
            offset: 0,
            terminated: false,
        }
    }

    /// Interval point pinned to `[seed/2^bits, (seed+1)/2^bits]` with no
    /// refinement: only digits shared by the whole interval are certified,
    /// after which the budget reads as exhausted.
    pub fn from_dyadic_interval(seed: BigUint, bits: usize) -> Self {
        let mut point = CFPoint {
            seed,
            seed_bits: bits,
            exact: false,
            lo: Endpoint {
                p: BigUint::ZERO,
                q: BigUint::one(),
            },
            hi: Endpoint {
                p: BigUint::one(),
                q: BigUint::one(),
            },
            source: BitSource::Exhausted,
            budget_bits: bits,
            consumed_bits: bits,
            digits: Vec::new(),
            offset: 0,
            terminated: false,
        };
        point.rebuild();
        point
    }

    /// Interval point refined on demand from `source`, starting from
    /// `initial_bits` bits and never consuming more than `budget_bits`.
    pub fn with_source(mut source: BitSource, initial_bits: usize, budget_bits: usize) -> Result<Self> {
        let mut point = CFPoint {
            seed: BigUint::ZERO,
            seed_bits: 0,
            exact: false,
            lo: Endpoint {
                p: BigUint::ZERO,
                q: BigUint::one(),
            },
            hi: Endpoint {
                p: BigUint::one(),
                q: BigUint::one(),
            },
            source: BitSource::Exhausted,
            budget_bits,
            consumed_bits: 0,
            digits: Vec::new(),
            offset: 0,
            terminated: false,
        };
        while point.seed_bits < initial_bits {
            point.draw_bits(&mut source)?;
        }
        point.source = source;
        point.rebuild();
        Ok(point)
    }

    fn draw_bits(&mut self, source: &mut BitSource) -> Result<()> {
        if self.consumed_bits + 64 > self.budget_bits {
            return Err(Error::PrecisionExhausted {
                consumed: self.consumed_bits,
                budget: self.budget_bits,
            });
        }
        let mut tmp = crate::maps::bits::BitBuf::new();
        tmp.ensure(64, source).map_err(|_| Error::PrecisionExhausted {
            consumed: self.consumed_bits,
            budget: self.budget_bits,
        })?;
        let word = tmp.window(0);
        self.seed = (&self.seed << 64) | BigUint::from(word);
        self.seed_bits += 64;
        self.consumed_bits += 64;
        Ok(())
    }

    /// Recompute both endpoint states from the seed, replaying the already
    /// certified digits. Nesting of the refined interval inside the old one
    /// guarantees the replay is valid (endpoints stay inside the closed
    /// cylinder of the certified prefix).
    fn rebuild(&mut self) {
        let denom = BigUint::one() << self.seed_bits;
        self.lo = Endpoint {
            p: self.seed.clone(),
            q: denom.clone(),
        };
        self.hi = Endpoint {
            p: &self.seed + BigUint::one(),
            q: denom,
        };
        for &a in &self.digits.clone() {
            let a = BigUint::from(a);
            self.lo.advance(&a);
            self.hi.advance(&a);
        }
    }

    fn refine(&mut self) -> Result<()> {
        let mut source = std::mem::replace(&mut self.source, BitSource::Exhausted);
        let drawn = self.draw_bits(&mut source);
        self.source = source;
        drawn?;
        self.rebuild();
        Ok(())
    }

    /// Certify digits until at least `n` are available (or the expansion of
    /// an exact rational terminates first, reported as `DigitsExhausted`).
    fn certify(&mut self, n: usize) -> Result<()> {
        while self.digits.len() < n {
            if self.exact {
                match self.lo.digit_exact() {
                    Some(a) => {
                        self.lo.advance(&a);
                        self.digits.push(saturate(&a));
                    }
                    None => {
                        self.terminated = true;
                        return Err(Error::DigitsExhausted {
                            digits: self.digits.len(),
                        });
                    }
                }
            } else {
                // a_1 is non-increasing in x, so endpoint agreement
                // certifies the digit for the whole interval.
                match (self.lo.digit_exact(), self.hi.digit_exact()) {
                    (Some(a), Some(b)) if a == b => {
                        let emitted = saturate(&a);
                        // a rebuild replays u64 digits; a saturated digit in
                        // interval mode cannot be replayed faithfully
                        assert!(
                            emitted < u64::MAX,
                            "digit beyond u64 on an interval point"
                        );
                        self.lo.advance(&a);
                        self.hi.advance(&a);
                        // 1/x - a is decreasing: endpoints swap roles.
                        std::mem::swap(&mut self.lo, &mut self.hi);
                        self.digits.push(emitted);
                    }
                    _ => self.refine()?,
                }
            }
        }
        Ok(())
    }

    /// Digit `a_{i+1}` of the represented point (absolute index, ignoring
    /// any Gauss shifts already applied).
    pub fn digit(&mut self, i: usize) -> Result<u64> {
        self.certify(i + 1)?;
        Ok(self.digits[i])
    }

    /// First `m` digits of the current (shifted) point. On budget or
    /// termination errors the certified prefix is returned alongside.
    pub fn digits(&mut self, m: usize) -> (Vec<u64>, Option<Error>) {
        let err = self.certify(self.offset + m).err();
        let end = self.digits.len().min(self.offset + m);
        (self.digits[self.offset..end].to_vec(), err)
    }

    /// One application of the Gauss map: drop the leading digit.
    pub fn gauss_step(&mut self) -> Result<()> {
        self.certify(self.offset + 1)?;
        self.offset += 1;
        Ok(())
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn consumed_bits(&self) -> usize {
        self.consumed_bits
    }

    /// Value of the current point, from up to 24 leading digits. The
    /// truncation error is below `q^{-2}` of the 24th convergent, far
    /// beyond f64 resolution.
    pub fn value_f64(&mut self) -> Result<f64> {
        self.value_f64_at(0)
    }

    /// Value of `G^k` applied to the current point.
    pub fn value_f64_at(&mut self, k: usize) -> Result<f64> {
        let start = self.offset + k;
        match self.certify(start + 24) {
            Ok(()) | Err(Error::DigitsExhausted { .. }) => {}
            Err(e) => return Err(e),
        }
        if self.digits.len() <= start {
            // exact rational whose expansion ended: the point is 0
            return Ok(0.0);
        }
        let end = self.digits.len().min(start + 24);
        let mut v = 0.0_f64;
        for &a in self.digits[start..end].iter().rev() {
            v = 1.0 / (a as f64 + v);
        }
        Ok(v)
    }
}
