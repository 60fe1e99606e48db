//! Points of the two-sided full shift on `alphabet` symbols.
//!
//! A point is a finite window of explicit symbols embedded in a periodic
//! background word. Shifting only moves offsets, so orbits share storage.

use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct ShiftPoint {
    alphabet: u32,
    window: Arc<[u8]>,
    /// Sequence index of `window[0]`.
    lo: i64,
    core: Arc<[u8]>,
    /// Sequence index `n` outside the window reads `core[(n + phase) mod |core|]`.
    phase: i64,
}

impl ShiftPoint {
    /// A point with explicit symbols `window` starting at index `lo`, and the
    /// periodic background `core` (aligned so that index 0 reads `core[0]`).
    pub fn new(alphabet: u32, window: Vec<u8>, lo: i64, core: Vec<u8>) -> Self {
        assert!(!core.is_empty(), "core word must be nonempty");
        assert!(
            window.iter().chain(core.iter()).all(|&s| (s as u32) < alphabet),
            "symbol outside alphabet"
        );
        ShiftPoint {
            alphabet,
            window: window.into(),
            lo,
            core: core.into(),
            phase: 0,
        }
    }

    /// The bi-infinite repetition of `word`, with `word[0]` at index 0.
    pub fn periodic(alphabet: u32, word: Vec<u8>) -> Self {
        ShiftPoint::new(alphabet, Vec::new(), 0, word)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn symbol(&self, n: i64) -> u8 {
        let off = n - self.lo;
        if off >= 0 && (off as usize) < self.window.len() {
            self.window[off as usize]
        } else {
            let len = self.core.len() as i64;
            self.core[(n + self.phase).rem_euclid(len) as usize]
        }
    }

    /// `(σ^m x)_n = x_{n+m}`.
    pub fn shifted(&self, m: i64) -> ShiftPoint {
        let len = self.core.len() as i64;
        ShiftPoint {
            alphabet: self.alphabet,
            window: Arc::clone(&self.window),
            lo: self.lo - m,
            core: Arc::clone(&self.core),
            phase: (self.phase + m).rem_euclid(len),
        }
    }

    /// Largest |index| covered by the explicit window.
    fn window_extent(&self) -> i64 {
        if self.window.is_empty() {
            0
        } else {
            self.lo.abs().max((self.lo + self.window.len() as i64 - 1).abs())
        }
    }

    /// Smallest |n| where the sequences differ, or `None` if they agree
    /// everywhere.
    pub fn first_difference(&self, other: &ShiftPoint) -> Option<u64> {
        // Beyond both windows the sequences are periodic with period
        // lcm(|core_a|, |core_b|), so one full period past the windows decides.
        let a = self.core.len() as i64;
        let b = other.core.len() as i64;
        let period = a / gcd(a, b) * b;
        let bound = self.window_extent().max(other.window_extent()) + period + 1;
        (0..=bound).find_map(|m| {
            let differs = self.symbol(m) != other.symbol(m) || self.symbol(-m) != other.symbol(-m);
            differs.then_some(m as u64)
        })
    }

    /// Coordinates used as cocycle input: the forward and backward halves
    /// read as base-`alphabet` expansions, both in [0, 1].
    pub fn coords(&self) -> [f64; 2] {
        let q = self.alphabet as f64;
        let terms = (64.0 / q.log2()).ceil() as i64;
        let mut fwd = 0.0;
        let mut bwd = 0.0;
        let mut w = 1.0 / q;
        for n in 0..terms {
            fwd += self.symbol(n) as f64 * w;
            bwd += self.symbol(-n - 1) as f64 * w;
            w /= q;
        }
        [fwd, bwd]
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifting_moves_indices() {
        let x = ShiftPoint::new(2, vec![1, 0, 1, 1], -2, vec![0]);
        assert_eq!(x.symbol(-2), 1);
        assert_eq!(x.symbol(1), 1);
        assert_eq!(x.symbol(5), 0);
        let y = x.shifted(1);
        assert_eq!(y.symbol(0), x.symbol(1));
        assert_eq!(y.symbol(-3), x.symbol(-2));
    }

    #[test]
    fn periodic_words_agree_after_full_period() {
        let x = ShiftPoint::periodic(2, vec![0, 1]);
        let y = ShiftPoint::periodic(2, vec![0, 1, 0, 1]);
        assert_eq!(x.first_difference(&y), None);
        assert_eq!(x.first_difference(&x.shifted(2)), None);
        assert_eq!(x.first_difference(&x.shifted(1)), Some(0));
    }
}
