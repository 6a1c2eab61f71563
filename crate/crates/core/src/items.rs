//! Fixed-capacity item sets.
//!
//! Items are indexed from 0. Sets are ordered by their characteristic
//! vector read as a binary number with item 0 least significant, so every
//! subset sorts before its supersets. That order is the final demand
//! tie-break.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_ITEMS: usize = 256;
const WORDS: usize = MAX_ITEMS / 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ItemSet([u64; WORDS]);

impl ItemSet {
    pub const fn empty() -> Self {
        ItemSet([0; WORDS])
    }

    /// The set {0, .., m-1}.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_ITEMS, "at most {MAX_ITEMS} items");
        let mut s = Self::empty();
        for w in 0..WORDS {
            let lo = w * 64;
            if m >= lo + 64 {
                s.0[w] = u64::MAX;
            } else if m > lo {
                s.0[w] = (1u64 << (m - lo)) - 1;
            }
        }
        s
    }

    pub fn from_mask(mask: u64) -> Self {
        let mut s = Self::empty();
        s.0[0] = mask;
        s
    }

    /// Low 64 bits; callers only use this when every item index is below 64.
    pub fn mask(&self) -> u64 {
        self.0[0]
    }

    pub fn singleton(j: usize) -> Self {
        let mut s = Self::empty();
        s.insert(j);
        s
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        let mut s = Self::empty();
        for j in items {
            s.insert(j);
        }
        s
    }

    pub fn contains(&self, j: usize) -> bool {
        j < MAX_ITEMS && self.0[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn insert(&mut self, j: usize) {
        assert!(j < MAX_ITEMS, "item index {j} out of range");
        self.0[j / 64] |= 1 << (j % 64);
    }

    pub fn remove(&mut self, j: usize) {
        if j < MAX_ITEMS {
            self.0[j / 64] &= !(1 << (j % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut r = *self;
        for w in 0..WORDS {
            r.0[w] |= other.0[w];
        }
        r
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut r = *self;
        for w in 0..WORDS {
            r.0[w] &= other.0[w];
        }
        r
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut r = *self;
        for w in 0..WORDS {
            r.0[w] &= !other.0[w];
        }
        r
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        (0..WORDS).all(|w| self.0[w] & !other.0[w] == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        (0..WORDS).any(|w| self.0[w] & other.0[w] != 0)
    }

    /// Largest item index plus one, or 0 for the empty set.
    pub fn bound(&self) -> usize {
        for w in (0..WORDS).rev() {
            if self.0[w] != 0 {
                return w * 64 + 64 - self.0[w].leading_zeros() as usize;
            }
        }
        0
    }

    pub fn iter(&self) -> Iter {
        Iter {
            words: self.0,
            word: 0,
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

pub struct Iter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}

impl Ord for ItemSet {
    fn cmp(&self, other: &Self) -> Ordering {
        for w in (0..WORDS).rev() {
            match self.0[w].cmp(&other.0[w]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for ItemSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_items(iter)
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(d)?;
        if let Some(&j) = items.iter().find(|&&j| j >= MAX_ITEMS) {
            return Err(serde::de::Error::custom(format!(
                "item index {j} out of range"
            )));
        }
        Ok(Self::from_items(items))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_len() {
        assert_eq!(ItemSet::full(0).len(), 0);
        assert_eq!(ItemSet::full(64).len(), 64);
        assert_eq!(ItemSet::full(200).len(), 200);
        assert_eq!(ItemSet::full(200).bound(), 200);
        assert!(ItemSet::full(70).contains(69));
        assert!(!ItemSet::full(70).contains(70));
    }

    #[test]
    fn order_puts_subsets_first() {
        let a = ItemSet::from_items([1, 2]);
        let b = ItemSet::from_items([2]);
        assert!(b < a);
        let c = ItemSet::from_items([130]);
        assert!(ItemSet::from_items([0, 1, 2, 3]) < c);
    }

    #[test]
    fn iter_roundtrip() {
        let s = ItemSet::from_items([0, 5, 63, 64, 255]);
        assert_eq!(s.to_vec(), vec![0, 5, 63, 64, 255]);
        assert_eq!(s.iter().collect::<ItemSet>(), s);
    }
}
