//! Dense fixed-length bit buffers used for explicit prefixes.

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitBuf {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for BitBuf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitBuf(len={}, ones={})", self.len, self.count_ones())
    }
}

impl BitBuf {
    pub fn zeros(len: usize) -> Self {
        BitBuf {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = BitBuf {
            words: vec![!0; len.div_ceil(64)],
            len,
        };
        b.clear_tail();
        b
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut words = Vec::new();
        let mut len = 0usize;
        for bit in bits {
            if len.is_multiple_of(64) {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        BitBuf { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    /// Sets every bit in `[from, to)`.
    pub fn fill_range(&mut self, from: usize, to: usize) {
        let to = to.min(self.len);
        let mut i = from;
        while i < to && !i.is_multiple_of(64) {
            self.set(i, true);
            i += 1;
        }
        while i + 64 <= to {
            self.words[i / 64] = !0;
            i += 64;
        }
        while i < to {
            self.set(i, true);
            i += 1;
        }
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of set bits in `[0, end)`.
    pub fn rank(&self, end: usize) -> u64 {
        let end = end.min(self.len);
        let full = end / 64;
        let mut c: u64 = self.words[..full]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum();
        let r = end % 64;
        if r != 0 {
            c += (self.words[full] & ((1u64 << r) - 1)).count_ones() as u64;
        }
        c
    }

    /// Copies `[from, from + len)` into a new buffer aligned at bit 0.
    pub fn slice(&self, from: usize, len: usize) -> BitBuf {
        assert!(from + len <= self.len, "slice out of range");
        let mut out = BitBuf::zeros(len);
        let shift = from % 64;
        let base = from / 64;
        for (w, slot) in out.words.iter_mut().enumerate() {
            let lo = self.words.get(base + w).copied().unwrap_or(0) >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + w + 1).copied().unwrap_or(0) << (64 - shift)
            };
            *slot = lo | hi;
        }
        out.clear_tail();
        out
    }

    pub fn and_assign(&mut self, other: &BitBuf) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &BitBuf) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn and_not_assign(&mut self, other: &BitBuf) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn not_assign(&mut self) {
        for w in &mut self.words {
            *w = !*w;
        }
        self.clear_tail();
    }

    /// Position of the `k`-th set bit (0-indexed).
    pub fn select(&self, mut k: u64) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones() as u64;
            if k < c {
                let mut w = w;
                for _ in 0..k {
                    w &= w - 1;
                }
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            k -= c;
        }
        None
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    /// Run-length encoding: value of the first bit followed by maximal run lengths.
    pub fn to_rle(&self) -> Rle {
        let mut runs = Vec::new();
        let first = self.len > 0 && self.get(0);
        let mut cur = first;
        let mut run = 0u64;
        for i in 0..self.len {
            let b = self.get(i);
            if b == cur {
                run += 1;
            } else {
                runs.push(run);
                cur = b;
                run = 1;
            }
        }
        if self.len > 0 {
            runs.push(run);
        }
        Rle {
            horizon: self.len as u64,
            first,
            runs,
        }
    }

    pub fn from_rle(rle: &Rle) -> Option<BitBuf> {
        let total: u64 = rle.runs.iter().sum();
        if total != rle.horizon {
            return None;
        }
        let mut out = BitBuf::zeros(rle.horizon as usize);
        let mut pos = 0usize;
        let mut cur = rle.first;
        for &r in &rle.runs {
            if cur {
                out.fill_range(pos, pos + r as usize);
            }
            pos += r as usize;
            cur = !cur;
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub horizon: u64,
    pub first: bool,
    pub runs: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_and_select() {
        let b = BitBuf::from_bools((0..200).map(|i| i % 3 == 0));
        assert_eq!(b.rank(0), 0);
        assert_eq!(b.rank(1), 1);
        assert_eq!(b.rank(200), 67);
        assert_eq!(b.select(10), Some(30));
        assert_eq!(b.select(67), None);
    }

    #[test]
    fn fill_range_crosses_words() {
        let mut b = BitBuf::zeros(300);
        b.fill_range(60, 200);
        assert_eq!(b.count_ones(), 140);
        assert!(!b.get(59) && b.get(60) && b.get(199) && !b.get(200));
    }

    proptest! {
        #[test]
        fn slice_matches_pointwise(bits in proptest::collection::vec(any::<bool>(), 1..400), a in 0usize..400, l in 0usize..400) {
            let b = BitBuf::from_bools(bits.iter().copied());
            let from = a % bits.len();
            let len = l % (bits.len() - from + 1);
            let s = b.slice(from, len);
            for i in 0..len {
                prop_assert_eq!(s.get(i), bits[from + i]);
            }
            prop_assert_eq!(s.count_ones(), bits[from..from + len].iter().filter(|&&x| x).count() as u64);
        }

        #[test]
        fn rle_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let b = BitBuf::from_bools(bits.iter().copied());
            prop_assert_eq!(BitBuf::from_rle(&b.to_rle()).unwrap(), b);
        }
    }
}
