//! Uniform-grid bucket index over rectangles. Rule checks are pairwise
//! within a bounded distance, so each shape only needs to see the buckets
//! its query window covers.

use std::collections::HashMap;

use crate::geom::Rect;

pub struct RectIndex {
    cell: i64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

fn bucket_span(lo: i64, hi: i64, cell: i64) -> std::ops::RangeInclusive<i64> {
    lo.div_euclid(cell)..=hi.div_euclid(cell)
}

impl RectIndex {
    pub fn build(rects: &[Rect], cell: i64) -> RectIndex {
        let cell = cell.max(1);
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, r) in rects.iter().enumerate() {
            for bx in bucket_span(r.x_lo, r.x_hi, cell) {
                for by in bucket_span(r.y_lo, r.y_hi, cell) {
                    buckets.entry((bx, by)).or_default().push(i as u32);
                }
            }
        }
        RectIndex { cell, buckets }
    }

    /// Indices of every rect that could lie within `radius` of `rect`
    /// (a superset; callers do the exact distance test). Sorted, deduped.
    pub fn near(&self, rect: &Rect, radius: i64) -> Vec<u32> {
        let q = rect.expand(radius.max(0));
        let mut out = Vec::new();
        for bx in bucket_span(q.x_lo, q.x_hi, self.cell) {
            for by in bucket_span(q.y_lo, q.y_hi, self.cell) {
                if let Some(v) = self.buckets.get(&(bx, by)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
