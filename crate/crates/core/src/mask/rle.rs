//! Column-major run-length encoding, compatible with COCO/YTVIS annotations.
//!
//! Runs alternate background/foreground starting with a (possibly empty)
//! background run. The compressed string form is the LEB128-like scheme
//! used by `maskApi.c`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rle {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u32>,
}

/// Encodes `mask` as column-major run lengths.
pub fn rle_encode(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = mask.dims();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for col in 0..w {
        for row in 0..h {
            let v = mask.get(row, col);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    counts
}

/// Decodes column-major run lengths into a `width x height` mask.
pub fn rle_decode(counts: &[u32], width: usize, height: usize) -> Result<BinaryMask> {
    let mut mask = BinaryMask::new(width, height)?;
    let expected = (width * height) as u64;
    let sum: u64 = counts.iter().map(|&c| c as u64).sum();
    if sum != expected {
        return Err(Error::CountsMismatch { sum, expected });
    }
    let mut pos = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        let c = c as usize;
        if i % 2 == 1 {
            for k in pos..pos + c {
                mask.set(k % height, k / height, true);
            }
        }
        pos += c;
    }
    Ok(mask)
}

impl Rle {
    pub fn encode(mask: &BinaryMask) -> Self {
        Self { width: mask.width(), height: mask.height(), counts: rle_encode(mask) }
    }

    pub fn decode(&self) -> Result<BinaryMask> {
        rle_decode(&self.counts, self.width, self.height)
    }

    /// Foreground area without decoding.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    /// COCO compressed string form.
    pub fn to_coco_string(&self) -> String {
        let mut s = String::new();
        for (i, &cnt) in self.counts.iter().enumerate() {
            let mut x = cnt as i64;
            if i > 2 {
                x -= self.counts[i - 2] as i64;
            }
            loop {
                let mut c = (x & 0x1f) as u8;
                x >>= 5;
                let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
                if more {
                    c |= 0x20;
                }
                s.push((c + 48) as char);
                if !more {
                    break;
                }
            }
        }
        s
    }

    /// Parses the COCO compressed string form. The counts are not checked
    /// against `width * height` here; [`decode`](Self::decode) does that.
    pub fn from_coco_string(s: &str, width: usize, height: usize) -> Result<Self> {
        let bytes = s.as_bytes();
        let mut counts: Vec<u32> = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let mut x: i64 = 0;
            let mut shift = 0u32;
            let mut more = true;
            while more {
                let Some(&b) = bytes.get(i) else {
                    return Err(Error::MalformedRle("truncated run".to_string()));
                };
                if !(48..48 + 64).contains(&b) || shift > 55 {
                    return Err(Error::MalformedRle(alloc::format!("bad byte {b:#x} at {i}")));
                }
                let c = (b - 48) as i64;
                x |= (c & 0x1f) << shift;
                more = c & 0x20 != 0;
                shift += 5;
                i += 1;
                if !more && c & 0x10 != 0 {
                    x |= -1i64 << shift;
                }
            }
            if counts.len() > 2 {
                x += counts[counts.len() - 2] as i64;
            }
            let v = u32::try_from(x).map_err(|_| Error::MalformedRle(alloc::format!("run {} out of range: {x}", counts.len())))?;
            counts.push(v);
        }
        Ok(Self { width, height, counts })
    }
}
