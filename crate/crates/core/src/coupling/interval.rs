//! Closed subintervals of `[0, 1]` whose endpoints are exact tokens.
//!
//! A sampled uniform is stored as a 64-bit integer `t` standing for `t / 2^64`;
//! `0` and `1` are the two sentinels. Order queries compare integers, so label
//! containment never depends on floating-point rounding.

use alloc::vec::Vec;
use core::cmp::Ordering;
use rand::Rng;
use serde::{Deserialize, Serialize};

const ONE_RAW: u128 = 1 << 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token(u128);

impl Token {
    pub const ZERO: Token = Token(0);
    pub const ONE: Token = Token(ONE_RAW);

    /// A uniform on `(0, 1)` with 64-bit resolution.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Token {
        loop {
            let t = rng.next_u64();
            if t != 0 {
                return Token(u128::from(t));
            }
        }
    }

    pub fn from_raw(t: u64) -> Token {
        Token(u128::from(t))
    }

    pub fn raw(self) -> u128 {
        self.0
    }

    /// Nearest `f64` (for reporting only).
    pub fn value(self) -> f64 {
        self.0 as f64 / ONE_RAW as f64
    }
}

/// Exact comparison of a real `p ∈ [0, 1]` with a token.
pub fn cmp_real(p: f64, t: Token) -> Ordering {
    // p·2^64 is exact in binary floating point.
    let scaled = p * ONE_RAW as f64;
    let whole = libm::trunc(scaled);
    let frac = scaled - whole;
    let whole = whole as u128;
    match whole.cmp(&t.0) {
        Ordering::Equal if frac > 0.0 => Ordering::Greater,
        other => other,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Token,
    pub hi: Token,
}

impl Interval {
    pub const UNIT: Interval = Interval {
        lo: Token::ZERO,
        hi: Token::ONE,
    };

    pub fn new(lo: Token, hi: Token) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn contains_real(&self, p: f64) -> bool {
        cmp_real(p, self.lo) != Ordering::Less && cmp_real(p, self.hi) != Ordering::Greater
    }

    /// `lo < t < hi`.
    pub fn contains_strictly(&self, t: Token) -> bool {
        self.lo < t && t < self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// A finite union of disjoint closed intervals, kept sorted with touching parts merged.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn unit() -> Self {
        IntervalSet {
            parts: alloc::vec![Interval::UNIT],
        }
    }

    pub fn from_intervals(mut parts: Vec<Interval>) -> Self {
        parts.sort_by_key(|iv| iv.lo);
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for iv in parts {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains_real(&self, p: f64) -> bool {
        self.parts.iter().any(|iv| iv.contains_real(p))
    }

    /// Whether some component contains all of `iv`.
    pub fn contains_interval(&self, iv: &Interval) -> bool {
        self.parts.iter().any(|part| part.contains(iv))
    }

    pub fn intersect_interval(&self, iv: &Interval) -> IntervalSet {
        let parts = self
            .parts
            .iter()
            .filter_map(|part| {
                let lo = part.lo.max(iv.lo);
                let hi = part.hi.min(iv.hi);
                (lo <= hi).then_some(Interval { lo, hi })
            })
            .collect();
        IntervalSet { parts }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        IntervalSet::from_intervals(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tok(x: f64) -> Token {
        Token((x * ONE_RAW as f64) as u128)
    }

    #[test]
    fn exact_comparisons() {
        let t = Token::from_raw(1 << 63);
        assert_eq!(cmp_real(0.5, t), Ordering::Equal);
        assert_eq!(cmp_real(0.5 + 1e-12, t), Ordering::Greater);
        assert_eq!(cmp_real(0.5 - 1e-12, t), Ordering::Less);
        assert_eq!(cmp_real(1.0, Token::ONE), Ordering::Equal);
        assert_eq!(cmp_real(0.0, Token::ZERO), Ordering::Equal);
        // One unit of 2^-64 apart is still resolved.
        assert_eq!(
            cmp_real(0.5, Token::from_raw((1 << 63) + 1)),
            Ordering::Less
        );
    }

    #[test]
    fn merge_touching_parts() {
        let s = IntervalSet::from_intervals(alloc::vec![
            Interval::new(tok(0.5), Token::ONE),
            Interval::new(Token::ZERO, tok(0.5)),
        ]);
        assert_eq!(s, IntervalSet::unit());
    }

    #[test]
    fn intersection_and_containment() {
        let s = IntervalSet::from_intervals(alloc::vec![
            Interval::new(Token::ZERO, tok(0.25)),
            Interval::new(tok(0.5), tok(0.75)),
        ]);
        let cut = s.intersect_interval(&Interval::new(tok(0.6), Token::ONE));
        assert_eq!(cut.parts(), &[Interval::new(tok(0.6), tok(0.75))]);
        assert!(s.contains_interval(&Interval::new(tok(0.5), tok(0.7))));
        assert!(!s.contains_interval(&Interval::new(tok(0.2), tok(0.6))));
        assert!(s.contains_real(0.1) && !s.contains_real(0.4));
        assert!(s
            .intersect_interval(&Interval::new(tok(0.3), tok(0.4)))
            .is_empty());
    }

    proptest! {
        #[test]
        fn union_is_sorted_disjoint_and_covers_inputs(raw in proptest::collection::vec((0u64..1000, 0u64..1000), 1..12)) {
            let parts: Vec<Interval> = raw
                .iter()
                .map(|(a, b)| Interval::new(Token::from_raw(*a.min(b)), Token::from_raw(*a.max(b))))
                .collect();
            let s = IntervalSet::from_intervals(parts.clone());
            for w in s.parts().windows(2) {
                prop_assert!(w[0].hi < w[1].lo);
            }
            for iv in &parts {
                prop_assert!(s.contains_interval(iv));
            }
        }
    }
}
