use crate::dataset::Tracklet;
use crate::error::{Error, Result};
use crate::incoherence::FineCoord;

use super::layers::NodePrediction;

/// Default confidence a prediction must exceed to overwrite a label.
pub const CORRECTION_THRESHOLD: f64 = 0.65;

/// Overwrites each listed pixel with `p > 0.5` where `max(p, 1 - p) >
/// threshold`; everything else keeps its coarse value. `preds` is aligned
/// with `coords`. A probability of exactly 0.5 has confidence 0.5, so it
/// never passes a threshold of at least 0.5 and needs no tie rule.
pub fn apply_corrections(coarse: &Tracklet, preds: &NodePrediction, coords: &[FineCoord], threshold: f64) -> Result<Tracklet> {
    if preds.probabilities.len() != coords.len() {
        return Err(Error::PredictionCount { expected: coords.len(), found: preds.probabilities.len() });
    }
    let mut out = coarse.clone();
    for (c, &p) in coords.iter().zip(&preds.probabilities) {
        let oob = Error::CoordOutOfBounds { t: c.t, row: c.row, col: c.col };
        let frame = c.t.checked_sub(1).and_then(|i| out.frames.get_mut(i)).and_then(Option::as_mut).ok_or(oob.clone())?;
        if c.row >= frame.height() || c.col >= frame.width() {
            return Err(oob);
        }
        if p.max(1.0 - p) > threshold {
            frame.set(c.row, c.col, p > 0.5);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BinaryMask;
    use alloc::vec;
    use alloc::vec::Vec;

    fn track() -> Tracklet {
        let m = BinaryMask::from_fn(4, 4, |r, _| r < 2).unwrap();
        Tracklet { id: 1, video_id: 1, category_id: 1, score: 1.0, frames: vec![Some(m), None] }
    }

    fn at(row: usize, col: usize) -> FineCoord {
        FineCoord { t: 1, row, col }
    }

    fn pred(p: &[f64]) -> NodePrediction {
        NodePrediction { probabilities: p.to_vec() }
    }

    #[test]
    fn threshold_boundary_cases() {
        let t = track();
        // (0,0) is set, (3,3) is clear
        let coords = [at(0, 0), at(3, 3), at(0, 1), at(3, 2), at(3, 1)];
        let out = apply_corrections(&t, &pred(&[0.6, 0.4, 0.34, 0.66, 0.65]), &coords, 0.65).unwrap();
        let f = out.frame(1).unwrap();
        assert!(f.get(0, 0), "p = 0.6 has confidence 0.6 and keeps the coarse 1");
        assert!(!f.get(3, 3), "p = 0.4 keeps the coarse 0");
        assert!(!f.get(0, 1), "p = 0.34 has confidence 0.66 and clears");
        assert!(f.get(3, 2), "p = 0.66 sets");
        assert!(!f.get(3, 1), "p = 0.65 is exactly at the threshold and keeps");
    }

    #[test]
    fn neutral_predictions_change_nothing() {
        let t = track();
        let coords: Vec<_> = (0..4).flat_map(|r| (0..4).map(move |c| at(r, c))).collect();
        let out = apply_corrections(&t, &pred(&[0.5; 16]), &coords, CORRECTION_THRESHOLD).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn confident_labels_are_written_and_idempotent() {
        let t = track();
        let coords = [at(1, 1), at(2, 2)];
        let p = pred(&[0.0, 1.0]);
        let once = apply_corrections(&t, &p, &coords, CORRECTION_THRESHOLD).unwrap();
        assert!(!once.frame(1).unwrap().get(1, 1));
        assert!(once.frame(1).unwrap().get(2, 2));
        let diff = once.frame(1).unwrap().xor(t.frame(1).unwrap());
        assert_eq!(diff.count(), 2);
        assert_eq!(apply_corrections(&once, &p, &coords, CORRECTION_THRESHOLD).unwrap(), once);
    }

    #[test]
    fn errors() {
        let t = track();
        assert!(matches!(apply_corrections(&t, &pred(&[1.0]), &[at(4, 0)], 0.65), Err(Error::CoordOutOfBounds { .. })));
        assert!(matches!(
            apply_corrections(&t, &pred(&[1.0]), &[FineCoord { t: 2, row: 0, col: 0 }], 0.65),
            Err(Error::CoordOutOfBounds { .. })
        ));
        assert!(matches!(apply_corrections(&t, &pred(&[1.0, 0.0]), &[at(0, 0)], 0.65), Err(Error::PredictionCount { .. })));
    }
}
