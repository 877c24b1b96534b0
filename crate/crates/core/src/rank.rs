//! Exact rank of binary spike-state matrices over the rationals.
//!
//! Rank is computed by fraction-free (Bareiss) elimination on integers. The
//! fast path runs in `i128` with checked arithmetic; if any intermediate minor
//! overflows, the elimination restarts on arbitrary-precision integers. No
//! floating-point tolerance is involved anywhere.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::snn::SpikeStateMatrix;

trait ExactScalar: Clone {
    fn from_bit(b: u8) -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    /// `(a * d - b * c) / div`, exact by the Bareiss identity. `None` on overflow.
    fn cross_div(a: &Self, d: &Self, b: &Self, c: &Self, div: &Self) -> Option<Self>;
}

impl ExactScalar for i128 {
    fn from_bit(b: u8) -> Self {
        b as i128
    }

    fn one() -> Self {
        1
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }

    #[inline]
    fn cross_div(a: &Self, d: &Self, b: &Self, c: &Self, div: &Self) -> Option<Self> {
        let ad = a.checked_mul(*d)?;
        let bc = b.checked_mul(*c)?;
        Some(ad.checked_sub(bc)? / div)
    }
}

impl ExactScalar for BigInt {
    fn from_bit(b: u8) -> Self {
        BigInt::from(b)
    }

    fn one() -> Self {
        <BigInt as One>::one()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn cross_div(a: &Self, d: &Self, b: &Self, c: &Self, div: &Self) -> Option<Self> {
        Some((a * d - b * c) / div)
    }
}

/// Rank by fraction-free elimination, `None` if the scalar type overflowed.
fn bareiss_rank<T: ExactScalar>(rows: &[Vec<u8>]) -> Option<usize> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.iter().map(|&b| T::from_bit(b)).collect())
        .collect();
    let mut prev = T::one();
    let mut rank = 0;
    for col in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(pivot) = (rank..n_rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let (head, tail) = m.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut() {
            let lead = row[col].clone();
            for j in col + 1..n_cols {
                row[j] = T::cross_div(&pivot_row[col], &row[j], &lead, &pivot_row[j], &prev)?;
            }
            row[col] = T::from_bit(0);
        }
        prev = pivot_row[col].clone();
        rank += 1;
    }
    Some(rank)
}

fn distinct_nonzero(rows: impl Iterator<Item = Vec<u8>>) -> Vec<Vec<u8>> {
    let mut seen = HashSet::new();
    rows.filter(|r| r.contains(&1))
        .filter(|r| seen.insert(r.clone()))
        .collect()
}

fn transpose(rows: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let cols = rows.first().map_or(0, Vec::len);
    (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Rank of a 0/1 matrix given as rows, over the rationals.
pub fn binary_rank(rows: &[Vec<u8>]) -> usize {
    // Zero and duplicate rows/columns never change rank.
    let reduced = distinct_nonzero(rows.iter().cloned());
    let reduced = distinct_nonzero(transpose(&reduced).into_iter());
    if reduced.is_empty() {
        return 0;
    }
    // Eliminate along the shorter side.
    let reduced = if reduced.len() > reduced[0].len() {
        transpose(&reduced)
    } else {
        reduced
    };
    match bareiss_rank::<i128>(&reduced) {
        Some(r) => r,
        None => bareiss_rank::<BigInt>(&reduced).expect("big integers do not overflow"),
    }
}

/// Separation property of a liquid: the rank of its spike-state matrix.
pub fn separation_property(s: &SpikeStateMatrix) -> usize {
    let rows: Vec<Vec<u8>> = (0..s.rows()).map(|i| s.row(i).to_vec()).collect();
    binary_rank(&rows)
}
