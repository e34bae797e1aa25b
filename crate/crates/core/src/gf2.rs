//! Dense bit rows over GF(2) and an incremental echelon basis.
//!
//! Rows are reduced on their *highest* set bit. Callers choose the bit
//! layout, so "highest bit" can mean "latest in basis order" or "largest
//! filtration value" depending on how positions were assigned.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_positions<I: IntoIterator<Item = usize>>(len: usize, positions: I) -> Self {
        let mut row = Self::zeros(len);
        for p in positions {
            row.flip(p);
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range (len={})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range (len={})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range (len={})", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "xor of rows with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Highest set position, if any.
    pub fn top(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| k * 64 + 63 - w.leading_zeros() as usize)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set positions in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.ones()).finish()
    }
}

/// A row together with the combination of generators that produced it.
#[derive(Clone, Debug)]
pub struct TaggedRow {
    pub value: BitRow,
    pub tag: BitRow,
}

impl TaggedRow {
    pub fn new(value: BitRow, tag: BitRow) -> Self {
        Self { value, tag }
    }

    fn absorb(&mut self, other: &TaggedRow) {
        self.value.xor_assign(&other.value);
        self.tag.xor_assign(&other.tag);
    }
}

/// Echelon basis with distinct highest-bit pivots.
///
/// Invariant: every stored row has a distinct `top()`, so the top of any
/// nonzero combination of stored rows is the largest pivot involved.
#[derive(Clone, Debug)]
pub struct Echelon {
    rows: Vec<TaggedRow>,
    pivot_row: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(width: usize) -> Self {
        Self {
            rows: Vec::new(),
            pivot_row: vec![None; width],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[TaggedRow] {
        &self.rows
    }

    pub fn row_with_pivot(&self, pivot: usize) -> Option<&TaggedRow> {
        self.pivot_row[pivot].map(|r| &self.rows[r])
    }

    /// Cancels the top bit while it is a pivot. The result's top (if any)
    /// is not a pivot, and the result is zero iff the input lies in the span.
    pub fn reduce(&self, mut row: TaggedRow) -> TaggedRow {
        while let Some(top) = row.value.top() {
            match self.pivot_row[top] {
                Some(r) => row.absorb(&self.rows[r]),
                None => break,
            }
        }
        row
    }

    /// Inserts `row` after reduction. Returns `None` when it extends the
    /// basis, or the reduced row (zero value, dependency in its tag) when
    /// it was already in the span.
    pub fn insert(&mut self, row: TaggedRow) -> Option<TaggedRow> {
        let reduced = self.reduce(row);
        match reduced.value.top() {
            Some(top) => {
                self.pivot_row[top] = Some(self.rows.len());
                self.rows.push(reduced);
                None
            }
            None => Some(reduced),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_and_ones_cross_word_boundaries() {
        let row = BitRow::from_positions(130, [3, 64, 129]);
        assert_eq!(row.top(), Some(129));
        assert_eq!(row.ones().collect::<Vec<_>>(), vec![3, 64, 129]);
        assert_eq!(row.count_ones(), 3);
        assert_eq!(BitRow::zeros(70).top(), None);
    }

    #[test]
    fn repeated_positions_cancel() {
        let row = BitRow::from_positions(8, [1, 1, 2]);
        assert_eq!(row.ones().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn echelon_detects_dependency_with_tag() {
        let width = 4;
        let mut ech = Echelon::new(width);
        let a = TaggedRow::new(BitRow::from_positions(width, [0, 1]), BitRow::from_positions(3, [0]));
        let b = TaggedRow::new(BitRow::from_positions(width, [1, 2]), BitRow::from_positions(3, [1]));
        let c = TaggedRow::new(BitRow::from_positions(width, [0, 2]), BitRow::from_positions(3, [2]));
        assert!(ech.insert(a).is_none());
        assert!(ech.insert(b).is_none());
        let dep = ech.insert(c).expect("c = a + b");
        assert!(dep.value.is_zero());
        assert_eq!(dep.tag.ones().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(ech.rank(), 2);
    }
}
