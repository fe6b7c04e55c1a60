use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleDirection {
    /// Majority pooling over `factor x factor` blocks; ties go to foreground.
    Down,
    /// Nearest-neighbour replication.
    Up,
}

pub fn resample(mask: &BinaryMask, direction: ResampleDirection, factor: usize) -> Result<BinaryMask> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidFactor(factor));
    }
    let (w, h) = mask.dims();
    match direction {
        ResampleDirection::Down => {
            if w % factor != 0 || h % factor != 0 {
                return Err(Error::IndivisibleShape { width: w, height: h, factor });
            }
            let (ow, oh) = (w / factor, h / factor);
            let mut counts = alloc::vec![0u32; ow * oh];
            for (r, c) in mask.ones() {
                counts[(r / factor) * ow + c / factor] += 1;
            }
            let area = (factor * factor) as u32;
            let mut out = BinaryMask::new(ow, oh)?;
            for (i, &n) in counts.iter().enumerate() {
                if 2 * n >= area {
                    out.set_index(i, true);
                }
            }
            Ok(out)
        }
        ResampleDirection::Up => BinaryMask::from_fn(w * factor, h * factor, |r, c| mask.get(r / factor, c / factor)),
    }
}
