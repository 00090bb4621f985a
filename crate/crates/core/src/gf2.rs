//! Linear algebra over the two-element field.
//!
//! Vectors are kept sparse ([`F2Vector`], a support set) while they are being
//! assembled, and converted to dense bit rows ([`BitRow`]) for elimination.
//! [`Echelon`] maintains a reduced row echelon form incrementally; its pivot
//! choice (highest set column) makes coset representatives of quotients the
//! lowest-indexed basis tokens.

use std::collections::{btree_set, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector over F₂ given by its support: a term is present iff its
/// coefficient is 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct F2Vector<T: Ord>(BTreeSet<T>);

impl<T: Ord> Default for F2Vector<T> {
    fn default() -> Self {
        F2Vector(BTreeSet::new())
    }
}

impl<T: Ord> F2Vector<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_term(t: T) -> Self {
        let mut v = Self::zero();
        v.add_term(t);
        v
    }

    /// Adds a single basis term (toggles its coefficient).
    pub fn add_term(&mut self, t: T) {
        if !self.0.remove(&t) {
            self.0.insert(t);
        }
    }

    pub fn contains(&self, t: &T) -> bool {
        self.0.contains(t)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_set::Iter<'_, T> {
        self.0.iter()
    }

    pub fn first(&self) -> Option<&T> {
        self.0.iter().next()
    }

    pub fn map<U: Ord, F: FnMut(&T) -> U>(&self, mut f: F) -> F2Vector<U> {
        let mut out = F2Vector::zero();
        for t in self.iter() {
            out.add_term(f(t));
        }
        out
    }

    /// Linear extension of `f` from terms to vectors.
    pub fn flat_map<U: Ord, F: FnMut(&T) -> F2Vector<U>>(&self, mut f: F) -> F2Vector<U> {
        let mut out = F2Vector::zero();
        for t in self.iter() {
            out += f(t);
        }
        out
    }
}

impl<T: Ord + Clone> F2Vector<T> {
    pub fn terms(&self) -> Vec<T> {
        self.0.iter().cloned().collect()
    }
}

impl<T: Ord> FromIterator<T> for F2Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut v = Self::zero();
        for t in iter {
            v.add_term(t);
        }
        v
    }
}

impl<T: Ord> IntoIterator for F2Vector<T> {
    type Item = T;
    type IntoIter = btree_set::IntoIter<T>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a, T: Ord> IntoIterator for &'a F2Vector<T> {
    type Item = &'a T;
    type IntoIter = btree_set::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl<T: Ord> AddAssign for F2Vector<T> {
    fn add_assign(&mut self, rhs: Self) {
        for t in rhs.0 {
            self.add_term(t);
        }
    }
}

impl<T: Ord + Clone> AddAssign<&F2Vector<T>> for F2Vector<T> {
    fn add_assign(&mut self, rhs: &F2Vector<T>) {
        for t in rhs.iter() {
            self.add_term(t.clone());
        }
    }
}

impl<T: Ord> Add for F2Vector<T> {
    type Output = F2Vector<T>;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for F2Vector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl<T: Ord + fmt::Display> fmt::Display for F2Vector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, t) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Dense row of bits, used during elimination.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut r = Self::zeros(len);
        r.set(index);
        r
    }

    /// Builds a row from a sparse support, checking the indices.
    pub fn from_indices<'a, I: IntoIterator<Item = &'a usize>>(len: usize, support: I) -> Result<Self> {
        let mut r = Self::zeros(len);
        for &i in support {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, dim: len });
            }
            r.flip(i);
        }
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn highest_bit(&self) -> Option<usize> {
        for (k, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(k * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitRow({s})")
    }
}

/// Incrementally maintained reduced row echelon form.
#[derive(Clone, Debug)]
pub struct Echelon {
    dim: usize,
    rows: Vec<BitRow>,
    pivots: Vec<usize>,
    row_of_pivot: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(dim: usize) -> Self {
        Echelon {
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
            row_of_pivot: vec![None; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn check(&self, v: &BitRow) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::MixedBases {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Reduces `v` in place against the current rows; the remainder is
    /// supported on non-pivot columns only.
    pub fn reduce(&self, v: &mut BitRow) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                v.xor_assign(row);
            }
        }
    }

    /// Inserts a vector; returns whether it enlarged the span.
    pub fn insert(&mut self, mut v: BitRow) -> Result<bool> {
        self.check(&v)?;
        self.reduce(&mut v);
        let Some(p) = v.highest_bit() else {
            return Ok(false);
        };
        for row in self.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign(&v);
            }
        }
        self.row_of_pivot[p] = Some(self.rows.len());
        self.rows.push(v);
        self.pivots.push(p);
        Ok(true)
    }

    pub fn contains(&self, v: &BitRow) -> Result<bool> {
        self.check(v)?;
        let mut w = v.clone();
        self.reduce(&mut w);
        Ok(w.is_zero())
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.row_of_pivot[col].is_some()
    }

    /// Columns that carry no pivot, in increasing order.
    pub fn non_pivots(&self) -> Vec<usize> {
        (0..self.dim).filter(|&c| !self.is_pivot(c)).collect()
    }

    /// The reduced basis rows, sorted by pivot column.
    pub fn reduced_basis(&self) -> Vec<BitRow> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_by_key(|&k| self.pivots[k]);
        idx.into_iter().map(|k| self.rows[k].clone()).collect()
    }
}

fn to_rows(dim: usize, vectors: &[F2Vector<usize>]) -> Result<Vec<BitRow>> {
    vectors.iter().map(|v| BitRow::from_indices(dim, v.iter())).collect()
}

/// Rank of the span of `vectors`, all indexed over a basis of size `dim`.
pub fn rank(dim: usize, vectors: &[F2Vector<usize>]) -> Result<usize> {
    let mut e = Echelon::new(dim);
    for r in to_rows(dim, vectors)? {
        e.insert(r)?;
    }
    Ok(e.rank())
}

/// `ambient_dim - rank(ideal_vectors)`.
pub fn quotient_dimension(ambient_dim: usize, ideal_vectors: &[F2Vector<usize>]) -> Result<usize> {
    Ok(ambient_dim - rank(ambient_dim, ideal_vectors)?)
}

/// Decides whether `v` lies in the span of `span`; on success returns the
/// indices of a sublist summing to `v`.
pub fn solve_membership(
    dim: usize,
    v: &F2Vector<usize>,
    span: &[F2Vector<usize>],
) -> Result<Option<Vec<usize>>> {
    let target = BitRow::from_indices(dim, v.iter())?;
    let rows = to_rows(dim, span)?;
    // Each reduced row carries the combination of inputs it came from.
    let mut basis: Vec<(usize, BitRow, BitRow)> = Vec::new();
    for (k, r) in rows.into_iter().enumerate() {
        let mut r = r;
        let mut combo = BitRow::unit(span.len(), k);
        for (p, row, c) in &basis {
            if r.get(*p) {
                r.xor_assign(row);
                combo.xor_assign(c);
            }
        }
        if let Some(p) = r.highest_bit() {
            for (_, row, c) in basis.iter_mut() {
                if row.get(p) {
                    row.xor_assign(&r);
                    c.xor_assign(&combo);
                }
            }
            basis.push((p, r, combo));
        }
    }
    let mut t = target;
    let mut combo = BitRow::zeros(span.len());
    for (p, row, c) in &basis {
        if t.get(*p) {
            t.xor_assign(row);
            combo.xor_assign(c);
        }
    }
    if t.is_zero() {
        Ok(Some(combo.ones().collect()))
    } else {
        Ok(None)
    }
}

/// An indexed basis of structured tokens.
#[derive(Clone, Debug)]
pub struct Basis<T: Hash + Eq> {
    tokens: Vec<T>,
    index: HashMap<T, usize>,
}

impl<T: Hash + Eq + Clone> Basis<T> {
    pub fn new(tokens: Vec<T>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (k, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), k).is_some() {
                return Err(Error::Inconsistent("duplicate basis token".into()));
            }
        }
        Ok(Basis { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[T] {
        &self.tokens
    }

    pub fn get(&self, k: usize) -> &T {
        &self.tokens[k]
    }

    pub fn index_of(&self, t: &T) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Converts a sparse vector over tokens into a dense row.
    pub fn row<'a, I>(&self, terms: I) -> Result<BitRow>
    where
        T: 'a,
        I: IntoIterator<Item = &'a T>,
    {
        let mut r = BitRow::zeros(self.len());
        for t in terms {
            let k = self
                .index_of(t)
                .ok_or_else(|| Error::Inconsistent("token outside the basis".into()))?;
            r.flip(k);
        }
        Ok(r)
    }
}

/// Finite-dimensional-per-degree space with labelled bases, truncated at
/// an explicit degree cap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedSpace {
    cap: u32,
    labels: Vec<Vec<String>>,
}

impl GradedSpace {
    pub fn new(cap: u32, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != cap as usize + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} degrees of labels, got {}",
                cap + 1,
                labels.len()
            )));
        }
        for deg in &labels {
            let uniq: BTreeSet<&String> = deg.iter().collect();
            if uniq.len() != deg.len() {
                return Err(Error::InvalidArgument("duplicate basis label".into()));
            }
        }
        Ok(GradedSpace { cap, labels })
    }

    pub fn zero(cap: u32) -> Self {
        GradedSpace {
            cap,
            labels: vec![Vec::new(); cap as usize + 1],
        }
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn check_degree(&self, d: u32) -> Result<()> {
        if d > self.cap {
            Err(Error::DegreeAboveCap {
                degree: d,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn dim(&self, d: u32) -> Result<usize> {
        self.check_degree(d)?;
        Ok(self.labels[d as usize].len())
    }

    pub fn labels(&self, d: u32) -> Result<&[String]> {
        self.check_degree(d)?;
        Ok(&self.labels[d as usize])
    }

    pub fn label(&self, d: u32, k: usize) -> &str {
        &self.labels[d as usize][k]
    }

    pub fn find(&self, d: u32, label: &str) -> Option<usize> {
        self.labels.get(d as usize)?.iter().position(|l| l == label)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }
}

/// Degreewise linear map with a fixed degree shift; `columns[d][b]` is the
/// image of basis token `b` of source degree `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMap {
    pub shift: i32,
    pub source_dims: Vec<usize>,
    pub target_dims: Vec<usize>,
    columns: Vec<Vec<F2Vector<usize>>>,
}

impl LinearMap {
    pub fn new(
        shift: i32,
        source_dims: Vec<usize>,
        target_dims: Vec<usize>,
        columns: Vec<Vec<F2Vector<usize>>>,
    ) -> Result<Self> {
        for (d, cols) in columns.iter().enumerate() {
            if cols.len() != source_dims[d] {
                return Err(Error::MixedBases {
                    expected: source_dims[d],
                    found: cols.len(),
                });
            }
            if cols.iter().all(F2Vector::is_zero) {
                continue;
            }
            let td = d as i64 + shift as i64;
            let tdim = usize::try_from(td)
                .ok()
                .and_then(|t| target_dims.get(t))
                .copied()
                .ok_or(Error::DegreeAboveCap {
                    degree: td.max(0) as u32,
                    cap: target_dims.len().saturating_sub(1) as u32,
                })?;
            for c in cols {
                if let Some(&i) = c.iter().next_back() {
                    if i >= tdim {
                        return Err(Error::IndexOutOfRange { index: i, dim: tdim });
                    }
                }
            }
        }
        Ok(LinearMap {
            shift,
            source_dims,
            target_dims,
            columns,
        })
    }

    pub fn column(&self, d: u32, b: usize) -> &F2Vector<usize> {
        &self.columns[d as usize][b]
    }

    pub fn apply(&self, d: u32, v: &F2Vector<usize>) -> F2Vector<usize> {
        v.flat_map(|&b| self.columns[d as usize][b].clone())
    }

    /// Rank of the map restricted to source degree `d`.
    pub fn rank_in_degree(&self, d: u32) -> Result<usize> {
        let td = d as i64 + self.shift as i64;
        let tdim = if td < 0 {
            0
        } else {
            self.target_dims.get(td as usize).copied().unwrap_or(0)
        };
        let cols = &self.columns[d as usize];
        if cols.iter().all(F2Vector::is_zero) {
            return Ok(0);
        }
        rank(tdim, cols)
    }

    pub fn is_injective_in_degree(&self, d: u32) -> Result<bool> {
        Ok(self.rank_in_degree(d)? == self.source_dims[d as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize) -> F2Vector<usize> {
        F2Vector::from_term(i)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(3, &[]).unwrap(), 0);
        assert_eq!(rank(3, &[e(0), e(1), e(0) + e(1)]).unwrap(), 2);
        assert_eq!(rank(3, &[e(0), e(1), e(2)]).unwrap(), 3);
        assert!(matches!(rank(2, &[e(5)]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn quotient_dimension_examples() {
        assert_eq!(quotient_dimension(5, &[]).unwrap(), 5);
        assert_eq!(quotient_dimension(3, &[e(0) + e(1)]).unwrap(), 2);
        assert_eq!(quotient_dimension(4, &[e(0), e(1), e(2), e(3)]).unwrap(), 0);
        assert!(quotient_dimension(2, &[e(2)]).is_err());
    }

    #[test]
    fn membership_examples() {
        let w = solve_membership(3, &(e(0) + e(1)), &[e(0), e(1)]).unwrap();
        assert_eq!(w, Some(vec![0, 1]));
        assert_eq!(solve_membership(3, &e(2), &[e(0), e(1)]).unwrap(), None);
        assert_eq!(solve_membership(3, &F2Vector::zero(), &[]).unwrap(), Some(vec![]));
    }

    #[test]
    fn echelon_rejects_mixed_lengths() {
        let mut ech = Echelon::new(4);
        assert!(matches!(ech.insert(BitRow::zeros(3)), Err(Error::MixedBases { .. })));
    }

    #[test]
    fn graded_space_refuses_queries_above_cap() {
        let g = GradedSpace::zero(3);
        assert_eq!(g.dim(3).unwrap(), 0);
        assert!(matches!(g.dim(4), Err(Error::DegreeAboveCap { .. })));
    }

    #[test]
    fn self_addition_is_zero() {
        let v: F2Vector<usize> = [1, 4, 7].into_iter().collect();
        assert!((v.clone() + v).is_zero());
    }

    fn vectors(dim: usize) -> impl Strategy<Value = Vec<F2Vector<usize>>> {
        prop::collection::vec(
            prop::collection::btree_set(0..dim, 0..dim).prop_map(|s| s.into_iter().collect()),
            0..8,
        )
    }

    proptest! {
        #[test]
        fn adding_a_span_member_keeps_rank(vs in vectors(10), mask in any::<u8>()) {
            let mut v = F2Vector::zero();
            for (k, w) in vs.iter().enumerate() {
                if mask >> (k % 8) & 1 == 1 {
                    v += w;
                }
            }
            let r = rank(10, &vs).unwrap();
            let mut more = vs.clone();
            more.push(v.clone());
            prop_assert_eq!(rank(10, &more).unwrap(), r);
            let witness = solve_membership(10, &v, &vs).unwrap().unwrap();
            let sum: F2Vector<usize> = witness.iter().fold(F2Vector::zero(), |acc, &k| acc + vs[k].clone());
            prop_assert_eq!(sum, v);
        }

        #[test]
        fn quotient_dimension_is_monotone(vs in vectors(9), extra in vectors(9)) {
            let q0 = quotient_dimension(9, &vs).unwrap();
            let mut all = vs.clone();
            all.extend(extra);
            prop_assert!(quotient_dimension(9, &all).unwrap() <= q0);
        }

        #[test]
        fn elimination_is_deterministic(vs in vectors(12)) {
            let build = || {
                let mut ech = Echelon::new(12);
                for v in &vs {
                    ech.insert(BitRow::from_indices(12, v.iter()).unwrap()).unwrap();
                }
                ech.reduced_basis()
            };
            prop_assert_eq!(build(), build());
        }
    }
}
