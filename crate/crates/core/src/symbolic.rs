//! Exact combinatorics of the doubling map's window event on binary words:
//! membership predicate, cylinder counting, box-dimension slopes, and the
//! prescribed-zero-run lower-bound family.
//!
//! A length-N word is compatible when for every window index m in [n, N]
//! some zero run of length L(m) = ceil(s m) starts at a position k <= m-1,
//! where a run touching the end of the word may be completed by future
//! zeros. Compatibility of a cylinder is exactly "some infinite extension
//! keeps hitting the shrinking dyadic targets from index n on".

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::stats::{linear_fit, LineFit};
use crate::{Error, Result};

/// Zero-run density s as an exact rational in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Density {
    pub num: u64,
    pub den: u64,
}

impl Density {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num >= 1 && num <= den, "density must lie in (0, 1]");
        Density { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Required run length L(m) = ceil(s m).
    pub fn run_len(self, m: usize) -> usize {
        let m = m as u64;
        ((self.num * m + self.den - 1) / self.den) as usize
    }
}

/// Direct evaluation of the compatibility predicate; the oracle for the
/// counting DP, kept free of incremental state on purpose.
pub fn eah_word_compatible(word: &[bool], s: Density, n: usize) -> bool {
    let len = word.len();
    assert!(len >= 1 && n >= 1);
    // run_from[k] = length of the zero run starting at k
    let mut run_from = vec![0usize; len + 1];
    for k in (0..len).rev() {
        run_from[k] = if word[k] { 0 } else { run_from[k + 1] + 1 };
    }
    // z = start of the trailing zero run (len if the word ends in a one)
    let z = (0..=len).find(|&k| run_from[k] == len - k).unwrap();
    // best_run[m] = max over k <= m-1 of run_from[k]
    let mut best = 0usize;
    for m in 1..=len {
        best = best.max(run_from[m - 1]);
        if m >= n {
            let contained = best >= s.run_len(m);
            let completable = z <= m - 1;
            if !contained && !completable {
                return false;
            }
        }
    }
    true
}

/// Incremental per-word form of the counting DP's transition: tracks the
/// trailing-run start `z` and the frontier `f` (largest m with every
/// m' in [n, m] already certified by a fully contained run).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrefixState {
    pub z: usize,
    pub f: usize,
}

impl PrefixState {
    pub fn start(n: usize) -> Self {
        PrefixState { z: 0, f: n - 1 }
    }

    /// Append one digit at position `p` (prefix length becomes p+1).
    pub fn push(&mut self, one: bool, p: usize, s: Density, n_cap: usize) {
        if one {
            self.z = p + 1;
        } else {
            // the trailing run [z, p+1) is the longest run usable for the
            // next frontier value; later starts only shorten it
            while self.f < n_cap && self.z <= self.f && self.z + s.run_len(self.f + 1) <= p + 1 {
                self.f += 1;
            }
        }
    }

    /// Accept after the full word: indices above the frontier must all be
    /// coverable by the trailing run, which needs z <= f (the first
    /// uncertified index is f+1 and requires a start at or before f).
    pub fn accepts(&self, word_len: usize) -> bool {
        self.f >= word_len || self.z <= self.f
    }
}

/// Exact number of compatible length-N words.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibleCount {
    pub word_len: usize,
    pub s: Density,
    pub n: usize,
    #[serde(serialize_with = "serialize_biguint_hex")]
    pub count: BigUint,
}

fn serialize_biguint_hex<S: serde::Serializer>(v: &BigUint, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&format!("{v:x}"))
}

impl CompatibleCount {
    /// log2 of the count, exact to f64 resolution.
    pub fn log2_count(&self) -> f64 {
        log2_biguint(&self.count)
    }
}

pub fn log2_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 53 {
        return (v.to_u64().unwrap() as f64).log2();
    }
    let top: u64 = (v >> (bits - 53)).to_u64().unwrap();
    (bits - 53) as f64 + (top as f64).log2()
}

/// Enumeration oracle: all 2^N words through the direct predicate.
pub fn brute_force_count(word_len: usize, s: Density, n: usize) -> Result<CompatibleCount> {
    if word_len > 24 {
        return Err(Error::ResourceGuard(format!(
            "brute force enumerates 2^{word_len} words; use count_compatible above N=24"
        )));
    }
    let mut word = vec![false; word_len];
    let mut count = 0u64;
    for bits in 0u64..(1u64 << word_len) {
        for (i, w) in word.iter_mut().enumerate() {
            *w = bits >> i & 1 == 1;
        }
        if eah_word_compatible(&word, s, n) {
            count += 1;
        }
    }
    Ok(CompatibleCount {
        word_len,
        s,
        n,
        count: BigUint::from(count),
    })
}

/// Exact count via the (z, f) dynamic program. Equal to
/// [`brute_force_count`] wherever both are defined; scales to N in the
/// thousands because only reachable (z, f) pairs are stored.
pub fn count_compatible(word_len: usize, s: Density, n: usize) -> Result<CompatibleCount> {
    if word_len > 2000 {
        return Err(Error::ResourceGuard(format!(
            "counting DP guard: N={word_len} > 2000; reduce N"
        )));
    }
    assert!(word_len >= 1 && n >= 1);
    let mut states: HashMap<PrefixState, BigUint> = HashMap::new();
    states.insert(PrefixState::start(n), BigUint::one());
    for p in 0..word_len {
        let mut next: HashMap<PrefixState, BigUint> = HashMap::with_capacity(states.len() * 2);
        for (state, ways) in &states {
            for one in [false, true] {
                let mut t = *state;
                t.push(one, p, s, word_len);
                *next.entry(t).or_insert_with(BigUint::zero) += ways;
            }
        }
        states = next;
    }
    let mut count = BigUint::zero();
    for (state, ways) in &states {
        if state.accepts(word_len) {
            count += ways;
        }
    }
    Ok(CompatibleCount {
        word_len,
        s,
        n,
        count,
    })
}

/// Least-squares slope of log2 count against N.
#[derive(Debug, Clone, Serialize)]
pub struct BoxDimEstimate {
    pub s: Density,
    pub n: usize,
    pub word_lens: Vec<usize>,
    pub log2_counts: Vec<f64>,
    pub fit: LineFit,
    pub residuals: Vec<f64>,
}

pub fn box_dim_estimate(s: Density, n: usize, word_lens: &[usize]) -> Result<BoxDimEstimate> {
    if word_lens.len() < 3 {
        return Err(Error::Empty(
            "slope estimation needs at least 3 word lengths".into(),
        ));
    }
    let counts: Result<Vec<f64>> = word_lens
        .par_iter()
        .map(|&len| count_compatible(len, s, n).map(|c| c.log2_count()))
        .collect();
    let log2_counts = counts?;
    let xs: Vec<f64> = word_lens.iter().map(|&l| l as f64).collect();
    let fit = linear_fit(&xs, &log2_counts);
    let residuals = xs
        .iter()
        .zip(&log2_counts)
        .map(|(&x, &y)| y - (fit.intercept + fit.slope * x))
        .collect();
    Ok(BoxDimEstimate {
        s,
        n,
        word_lens: word_lens.to_vec(),
        log2_counts,
        fit,
        residuals,
    })
}

/// Counting along a prescribed-run schedule: for each stage j = 1..k a
/// run of ceil(s m_j) zeros is pinned starting at position m_{j-1}, with
/// m_0 = 0, and the count of length-m_k words honouring all pins is
/// 2^{free positions}. Ceilings only remove freedom, so the exact count
/// never exceeds the idealized 2^{m_k - s sum m_j}.
#[derive(Debug, Clone, Serialize)]
pub struct FSetCount {
    pub schedule: Vec<u64>,
    pub s: Density,
    /// free positions at the last stage
    pub free_positions: u64,
    #[serde(serialize_with = "serialize_biguint_hex")]
    pub exact_count: BigUint,
    /// m_k - s * sum_{j<=k} m_j, the idealized (ceiling-free) exponent
    pub idealized_exponent: f64,
    /// 1 - s * (sum_{j<=k} m_j) / (m_k + 2) per stage k
    pub local_dims: Vec<f64>,
}

pub fn f_set_count(schedule: &[u64], s: Density) -> Result<FSetCount> {
    if schedule.is_empty() {
        return Err(Error::Empty("schedule has no stages".into()));
    }
    let mut prev = 0u64;
    for &m in schedule {
        if m <= prev {
            return Err(Error::ScheduleRejected(format!(
                "stages must increase strictly, got {prev} then {m}"
            )));
        }
        let run = s.run_len(m as usize) as u64;
        if prev + run > m {
            return Err(Error::ScheduleRejected(format!(
                "run of length {run} at position {prev} overruns the next stage {m}"
            )));
        }
        prev = m;
    }
    let k = schedule.len();
    let m_k = schedule[k - 1];
    let pinned: u64 = schedule.iter().map(|&m| s.run_len(m as usize) as u64).sum();
    let free = m_k - pinned;
    let mut running = 0f64;
    let mut local_dims = Vec::with_capacity(k);
    for &m in schedule {
        running += m as f64;
        local_dims.push(1.0 - s.value() * running / (m as f64 + 2.0));
    }
    let sum: f64 = schedule.iter().map(|&m| m as f64).sum();
    Ok(FSetCount {
        schedule: schedule.to_vec(),
        s,
        free_positions: free,
        exact_count: BigUint::one() << free,
        idealized_exponent: m_k as f64 - s.value() * sum,
        local_dims,
    })
}

/// The inductive stage generator m_k = k * sum_{j<k} m_j with m_1 = 1:
/// 1, 2, 9, 48, 300, 2160, ... Its partial-sum ratio tends to 1, which
/// drives the local dimension to 1 - s.
pub fn inductive_schedule(stages: usize) -> Vec<u64> {
    assert!(stages >= 1);
    let mut out = vec![1u64];
    let mut sum = 1u64;
    for k in 2..=stages {
        let m = k as u64 * sum;
        out.push(m);
        sum += m;
    }
    out
}

/// Hausdorff-dimension reference value ((1-s)/(1+s))^2 for the zero-run
/// density s; a closed-form constant, never estimated.
pub fn bl_hausdorff_reference(s: f64) -> f64 {
    assert!((0.0..=1.0).contains(&s));
    ((1.0 - s) / (1.0 + s)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn word(bits: &str) -> Vec<bool> {
        bits.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn predicate_known_words() {
        let s1 = Density::new(1, 1);
        let s12 = Density::new(1, 2);
        assert!(eah_word_compatible(&word("110000"), s1, 3));
        assert!(!eah_word_compatible(&word("011"), s12, 1));
        assert!(eah_word_compatible(&word("010"), s12, 1));
        assert!(!eah_word_compatible(&word("100"), s12, 1));
        assert!(eah_word_compatible(&word("000"), s12, 1));
        assert!(eah_word_compatible(&word("001"), s12, 1));
    }

    #[test]
    fn brute_force_known_counts() {
        let s12 = Density::new(1, 2);
        assert_eq!(
            brute_force_count(3, s12, 1).unwrap().count,
            BigUint::from(3u8)
        );
        // all-tail-zero structure: free digits are positions 0..n-2
        for n in 1..=5usize {
            for len in n..=(n + 4) {
                let c = brute_force_count(len, Density::new(1, 1), n).unwrap();
                assert_eq!(c.count, BigUint::from(1u64 << (n - 1)), "N={len} n={n}");
            }
        }
        // window empty when the word is shorter than n
        let c = brute_force_count(3, s12, 5).unwrap();
        assert_eq!(c.count, BigUint::from(8u8));
        assert!(brute_force_count(30, s12, 1).is_err());
    }

    #[test]
    fn dp_matches_brute_force_sweep() {
        let densities = [
            Density::new(1, 4),
            Density::new(1, 3),
            Density::new(1, 2),
            Density::new(2, 3),
        ];
        for &s in &densities {
            for n in 1..=6usize {
                for len in 1..=18usize {
                    let fast = count_compatible(len, s, n).unwrap();
                    let slow = brute_force_count(len, s, n).unwrap();
                    assert_eq!(
                        fast.count, slow.count,
                        "s={}/{} n={n} N={len}",
                        s.num, s.den
                    );
                }
            }
        }
    }

    #[test]
    fn dp_guard_and_tail_structure() {
        assert!(count_compatible(2001, Density::new(1, 2), 1).is_err());
        let c = count_compatible(10, Density::new(1, 1), 4).unwrap();
        assert_eq!(c.count, BigUint::from(8u8));
        // s = 1 counts do not depend on N
        for len in [5usize, 20, 80] {
            let c = count_compatible(len, Density::new(1, 1), 4).unwrap();
            assert_eq!(c.count, BigUint::from(8u8));
        }
    }

    #[test]
    fn count_monotone_in_s_and_n() {
        for len in [10usize, 14] {
            for n in [1usize, 3] {
                let mut prev: Option<BigUint> = None;
                for s in [
                    Density::new(1, 4),
                    Density::new(1, 3),
                    Density::new(1, 2),
                    Density::new(2, 3),
                    Density::new(1, 1),
                ] {
                    let c = count_compatible(len, s, n).unwrap().count;
                    if let Some(p) = prev {
                        assert!(c <= p, "count must shrink as s grows");
                    }
                    prev = Some(c);
                }
            }
            let s = Density::new(1, 2);
            let mut prev: Option<BigUint> = None;
            for n in 1..=6usize {
                let c = count_compatible(len, s, n).unwrap().count;
                if let Some(p) = prev {
                    assert!(c >= p, "count must grow as the window start rises");
                }
                prev = Some(c);
            }
        }
    }

    #[test]
    fn counts_below_cover_bound() {
        for &(num, den) in &[(1u64, 4u64), (1, 2), (2, 3)] {
            let s = Density::new(num, den);
            let s_v = s.value();
            for n in [1usize, 4] {
                for len in [20usize, 60, 150] {
                    let c = count_compatible(len, s, n).unwrap();
                    let nf = len as f64;
                    let kk = (2.0 + nf.ln() / -(1.0 - s_v).ln()).ceil();
                    let bound = (2.0 * kk + 1.0) * nf.log2() + (1.0 - s_v) * nf + n as f64;
                    assert!(
                        c.log2_count() <= bound,
                        "s={num}/{den} n={n} N={len}: {} > {bound}",
                        c.log2_count()
                    );
                }
            }
        }
    }

    #[test]
    fn incremental_state_matches_predicate() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let s = Density::new(1, 2);
        for _ in 0..1000 {
            let len = rng.gen_range(1..=40usize);
            let n = rng.gen_range(1..=6usize);
            // bias towards zeros so both outcomes appear often
            let w: Vec<bool> = (0..len).map(|_| rng.gen_range(0..4u8) == 0).collect();
            let mut st = PrefixState::start(n);
            for (p, &bit) in w.iter().enumerate() {
                st.push(bit, p, s, len);
            }
            assert_eq!(
                st.accepts(len),
                eah_word_compatible(&w, s, n),
                "word {:?} n={n}",
                w.iter().map(|&b| b as u8).collect::<Vec<_>>()
            );
            // appending a zero can never break compatibility
            if st.accepts(len) {
                let mut extended = w.clone();
                extended.push(false);
                assert!(eah_word_compatible(&extended, s, n));
            }
        }
    }

    #[test]
    fn box_dim_slopes() {
        let lens: Vec<usize> = (40..=200).step_by(8).collect();
        let est = box_dim_estimate(Density::new(1, 2), 2, &lens).unwrap();
        assert!(
            (0.45..=0.55).contains(&est.fit.slope),
            "slope {}",
            est.fit.slope
        );
        let est = box_dim_estimate(Density::new(1, 4), 2, &lens).unwrap();
        assert!(
            (0.70..=0.80).contains(&est.fit.slope),
            "slope {}",
            est.fit.slope
        );
        let est = box_dim_estimate(Density::new(1, 1), 2, &[40, 60, 80, 100]).unwrap();
        assert!(est.fit.slope.abs() < 1e-12);
        assert!(box_dim_estimate(Density::new(1, 2), 1, &[40, 48]).is_err());
    }

    #[test]
    fn f_set_schedule_and_counts() {
        assert_eq!(inductive_schedule(6), vec![1, 2, 9, 48, 300, 2160]);
        let s = Density::new(1, 2);
        let c = f_set_count(&[1, 2, 9], s).unwrap();
        // pinned zeros: 1 (for m=1) + 1 (for m=2) + 5 (for m=9)
        assert_eq!(c.free_positions, 2);
        assert_eq!(c.exact_count, BigUint::from(4u8));
        assert!((c.idealized_exponent - 3.0).abs() < 1e-12);

        // exact counts never exceed the idealized bound
        for stages in 2..=6usize {
            let sched = inductive_schedule(stages);
            if let Ok(c) = f_set_count(&sched, s) {
                assert!(log2_biguint(&c.exact_count) <= c.idealized_exponent + 1e-9);
            }
        }
        // partial-sum ratio tends to 1, so the local dimension tends to 1-s
        let sched = inductive_schedule(12);
        let c = f_set_count(&sched, s).unwrap();
        let last = *c.local_dims.last().unwrap();
        assert!((last - 0.5).abs() < 0.05, "local dim {last}");

        assert!(f_set_count(&[5, 6], Density::new(1, 1)).is_err());
        assert!(f_set_count(&[3, 3], s).is_err());
    }

    #[test]
    fn hausdorff_reference_values() {
        assert_eq!(bl_hausdorff_reference(0.0), 1.0);
        assert_eq!(bl_hausdorff_reference(1.0), 0.0);
        let h = bl_hausdorff_reference(0.5);
        assert!((h - 1.0 / 9.0).abs() < 1e-15);
        // 0 < hausdorff < 1/2 = upper box slope < 1
        assert!(0.0 < h && h < 0.5 && 0.5 < 1.0);
    }
}
