//! Classical spin configurations encoded as bit patterns.
//!
//! Bit `i` of the index holds spin `x_i`: a clear bit is `+1`, a set bit is
//! `-1`. Every matrix in the crate is indexed by this encoding.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    index: usize,
    n: usize,
}

impl SpinConfiguration {
    pub fn new(index: usize, n: usize) -> Result<Self> {
        if n >= usize::BITS as usize {
            return Err(Error::InvalidParameter("spin count exceeds index width"));
        }
        if index >> n != 0 {
            return Err(Error::InvalidParameter("index out of range for spin count"));
        }
        Ok(Self { index, n })
    }

    /// Builds a configuration from `±1` spins.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut index = 0usize;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => index |= 1 << i,
                _ => return Err(Error::InvalidParameter("spins must be +1 or -1")),
            }
        }
        Self::new(index, spins.len())
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        spin_of(self.index, i)
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.spin(i)).collect()
    }

    pub fn flip(&self, i: usize) -> Self {
        Self { index: self.index ^ (1 << i), n: self.n }
    }

    pub fn flip_all(&self) -> Self {
        Self { index: self.index ^ ((1 << self.n) - 1), n: self.n }
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        (self.index ^ other.index).count_ones()
    }
}

/// Spin value of bit `i` in `index`.
#[inline]
pub fn spin_of(index: usize, i: usize) -> i8 {
    1 - 2 * ((index >> i) & 1) as i8
}

/// Same as [`spin_of`] as a float.
#[inline]
pub(crate) fn spin_f64(index: usize, i: usize) -> f64 {
    if (index >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
