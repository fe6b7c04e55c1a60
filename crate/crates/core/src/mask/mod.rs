//! Single-frame binary masks and the pixel kernels built on them.
//!
//! Masks are stored as a row-major bit raster packed into `u64` words. Bits
//! past `width * height` in the last word are always zero, so population
//! counts over whole words are exact.

mod band;
mod edt;
mod morph;
mod resample;
mod rle;

pub use band::{boundary_band, contour, BandMode, BoundaryBand};
pub use edt::{squared_distance_transform, UNREACHABLE};
pub use morph::{dilate, erode, morph, MorphOp};
pub use resample::{resample, ResampleDirection};
pub use rle::{rle_decode, rle_encode, Rle};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u64>,
}

impl BinaryMask {
    /// An all-background mask.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidShape { width, height });
        }
        let words = (width * height).div_ceil(WORD);
        Ok(Self { width, height, bits: vec![0; words] })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        let mut m = Self::new(width, height)?;
        m.bits.iter_mut().for_each(|w| *w = !0);
        m.clear_tail();
        Ok(m)
    }

    /// Builds a mask by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut m = Self::new(width, height)?;
        for row in 0..height {
            for col in 0..width {
                if f(row, col) {
                    m.set(row, col, true);
                }
            }
        }
        Ok(m)
    }

    /// Builds a mask from a row-major slice of booleans.
    pub fn from_bools(width: usize, height: usize, values: &[bool]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::CountsMismatch { sum: values.len() as u64, expected: (width * height) as u64 });
        }
        Self::from_fn(width, height, |r, c| values[r * width + c])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.height && col < self.width);
        self.get_index(row * self.width + col)
    }

    /// Like [`get`](Self::get) but treats out-of-range coordinates as background.
    #[inline]
    pub fn get_or_false(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            return false;
        }
        self.get(row as usize, col as usize)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.height && col < self.width);
        self.set_index(row * self.width + col, value);
    }

    #[inline]
    pub(crate) fn get_index(&self, i: usize) -> bool {
        (self.bits[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_index(&mut self, i: usize, value: bool) {
        let bit = 1u64 << (i % WORD);
        if value {
            self.bits[i / WORD] |= bit;
        } else {
            self.bits[i / WORD] &= !bit;
        }
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ResolutionMismatch { expected: self.dims(), found: other.dims() });
        }
        Ok(())
    }

    /// `|self ∩ other|`. Panics in debug builds if the dimensions differ.
    pub fn intersection_count(&self, other: &Self) -> u64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }

    /// `|self ∪ other|`. Panics in debug builds if the dimensions differ.
    pub fn union_count(&self, other: &Self) -> u64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a | b).count_ones() as u64).sum()
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn and_not(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn xor(&self, other: &Self) -> Self {
        self.zip_words(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> Self {
        let mut m = Self { width: self.width, height: self.height, bits: self.bits.iter().map(|w| !w).collect() };
        m.clear_tail();
        m
    }

    /// `self ⊆ other`
    pub fn is_subset(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Foreground pixel coordinates as `(row, col)` in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.bits.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                let i = wi * WORD + tz;
                Some((i / width, i % width))
            })
        })
    }

    /// Copies the mask into a `width x height` canvas (background elsewhere).
    pub fn padded(&self, width: usize, height: usize) -> Result<Self> {
        let mut out = Self::new(width, height)?;
        for (r, c) in self.ones() {
            if r < height && c < width {
                out.set(r, c, true);
            }
        }
        Ok(out)
    }

    /// The top-left `width x height` window.
    pub fn cropped(&self, width: usize, height: usize) -> Result<Self> {
        self.padded(width, height)
    }

    /// Shifts content by `(dr, dc)`, dropping pixels that leave the frame.
    pub fn translated(&self, dr: isize, dc: isize) -> Self {
        let mut out = Self { width: self.width, height: self.height, bits: vec![0; self.bits.len()] };
        for (r, c) in self.ones() {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr >= 0 && nc >= 0 && (nr as usize) < self.height && (nc as usize) < self.width {
                out.set(nr as usize, nc as usize, true);
            }
        }
        out
    }

    fn zip_words(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        debug_assert_eq!(self.dims(), other.dims());
        let mut m =
            Self { width: self.width, height: self.height, bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect() };
        m.clear_tail();
        m
    }

    fn clear_tail(&mut self) {
        let rem = self.len() % WORD;
        if rem != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{} ({} set)", self.width, self.height, self.count())?;
        if self.width <= 64 && self.height <= 64 {
            for r in 0..self.height {
                for c in 0..self.width {
                    f.write_str(if self.get(r, c) { "#" } else { "." })?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dims_rejected() {
        assert!(BinaryMask::new(0, 3).is_err());
        assert!(BinaryMask::new(3, 0).is_err());
    }

    #[test]
    fn not_keeps_tail_clear() {
        let m = BinaryMask::new(3, 3).unwrap();
        let n = m.not();
        assert_eq!(n.count(), 9);
        assert_eq!(n.not().count(), 0);
    }

    #[test]
    fn ones_iterates_row_major() {
        let mut m = BinaryMask::new(70, 2).unwrap();
        m.set(0, 69, true);
        m.set(1, 0, true);
        m.set(1, 65, true);
        let v: Vec<_> = m.ones().collect();
        assert_eq!(v, [(0, 69), (1, 0), (1, 65)]);
    }

    #[test]
    fn set_algebra_counts() {
        let a = BinaryMask::from_fn(5, 5, |r, _| r < 3).unwrap();
        let b = BinaryMask::from_fn(5, 5, |_, c| c < 2).unwrap();
        assert_eq!(a.intersection_count(&b), 6);
        assert_eq!(a.union_count(&b), 19);
        assert_eq!(a.and(&b).count(), 6);
        assert_eq!(a.and_not(&b).count(), 9);
        assert!(a.and(&b).is_subset(&a));
    }
}
