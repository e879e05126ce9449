//! Integer rectangle geometry shared by every stage of the pipeline.
//!
//! All coordinates are database units (1000 per micron). Keeping geometry
//! integral makes rule checks exact: "closer than S" is the integer
//! comparison `gap_sq < S*S`, with no epsilon anywhere.

use serde::Serialize;

/// Database units per micron. The whole pipeline assumes this scale.
pub const DBU_PER_MICRON: i64 = 1000;

/// Axis-aligned rectangle, lower-left inclusive, in database units.
///
/// The derived `Ord` (lexicographic over `x_lo, y_lo, x_hi, y_hi`) is used
/// wherever a deterministic geometric sort order is needed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Rect {
    pub x_lo: i64,
    pub y_lo: i64,
    pub x_hi: i64,
    pub y_hi: i64,
}

impl Rect {
    /// Build a rectangle from two corner points in any order.
    pub fn new(x1: i64, y1: i64, x2: i64, y2: i64) -> Rect {
        Rect {
            x_lo: x1.min(x2),
            y_lo: y1.min(y2),
            x_hi: x1.max(x2),
            y_hi: y1.max(y2),
        }
    }

    pub fn width(&self) -> i64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> i64 {
        self.y_hi - self.y_lo
    }

    /// Smaller of the two side lengths; the "drawn width" of a wire or pad.
    pub fn min_side(&self) -> i64 {
        self.width().min(self.height())
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_lo >= self.x_lo
            && other.x_hi <= self.x_hi
            && other.y_lo >= self.y_lo
            && other.y_hi <= self.y_hi
    }

    /// True when the interiors intersect (positive-area overlap).
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x_lo < other.x_hi
            && other.x_lo < self.x_hi
            && self.y_lo < other.y_hi
            && other.y_lo < self.y_hi
    }

    /// True when the closed rectangles intersect at all — overlap, shared
    /// edge, or shared corner. Touching shapes on the same layer conduct.
    pub fn touches(&self, other: &Rect) -> bool {
        self.x_lo <= other.x_hi
            && other.x_lo <= self.x_hi
            && self.y_lo <= other.y_hi
            && other.y_lo <= self.y_hi
    }

    pub fn expand(&self, d: i64) -> Rect {
        Rect {
            x_lo: self.x_lo - d,
            y_lo: self.y_lo - d,
            x_hi: self.x_hi + d,
            y_hi: self.y_hi + d,
        }
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect {
            x_lo: self.x_lo + dx,
            y_lo: self.y_lo + dy,
            x_hi: self.x_hi + dx,
            y_hi: self.y_hi + dy,
        }
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            x_lo: self.x_lo.min(other.x_lo),
            y_lo: self.y_lo.min(other.y_lo),
            x_hi: self.x_hi.max(other.x_hi),
            y_hi: self.y_hi.max(other.y_hi),
        }
    }

    /// Per-axis separation between the closed rectangles: zero on an axis
    /// where the projections overlap or touch.
    pub fn gap_xy(&self, other: &Rect) -> (i64, i64) {
        let dx = (self.x_lo.max(other.x_lo) - self.x_hi.min(other.x_hi)).max(0);
        let dy = (self.y_lo.max(other.y_lo) - self.y_hi.min(other.y_hi)).max(0);
        (dx, dy)
    }

    /// Squared Euclidean edge-to-edge distance. Zero when touching or
    /// overlapping; corner-to-corner separations contribute both axes.
    pub fn gap_sq(&self, other: &Rect) -> i64 {
        let (dx, dy) = self.gap_xy(other);
        dx * dx + dy * dy
    }

    /// Exact test for "edge-to-edge distance strictly less than `d`".
    pub fn closer_than(&self, other: &Rect, d: i64) -> bool {
        self.gap_sq(other) < d * d
    }

    /// Marker rectangle for a pair of shapes: the region between their
    /// facing edges (their intersection when they overlap). Used as the
    /// reported location of a spacing or short violation.
    pub fn gap_region(&self, other: &Rect) -> Rect {
        let span = |a_lo: i64, a_hi: i64, b_lo: i64, b_hi: i64| -> (i64, i64) {
            if a_hi <= b_lo {
                (a_hi, b_lo) // disjoint: the gap interval
            } else if b_hi <= a_lo {
                (b_hi, a_lo)
            } else {
                (a_lo.max(b_lo), a_hi.min(b_hi)) // overlapping projections
            }
        };
        let (x_lo, x_hi) = span(self.x_lo, self.x_hi, other.x_lo, other.x_hi);
        let (y_lo, y_hi) = span(self.y_lo, self.y_hi, other.y_lo, other.y_hi);
        Rect { x_lo, y_lo, x_hi, y_hi }
    }
}

/// Parse a decimal micron value ("1.8", "0.06", "2") into integer units at
/// `units` per micron, exactly. Values finer than one unit are rejected
/// rather than rounded.
pub fn parse_scaled_decimal(text: &str, units: i64) -> Option<i64> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let int_val: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.len() > 9 {
        return None;
    }
    let frac_val: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().ok()?
    };
    let denom = 10i64.pow(frac_part.len() as u32);
    let frac_scaled = frac_val as i128 * units as i128;
    if frac_scaled % denom as i128 != 0 {
        return None; // finer than one database unit
    }
    let total = int_val as i128 * units as i128 + frac_scaled / denom as i128;
    i64::try_from(sign * total).ok()
}

/// Parse a decimal micron value into database units at the fixed pipeline
/// scale of [`DBU_PER_MICRON`].
pub fn microns_to_dbu(text: &str) -> Option<i64> {
    parse_scaled_decimal(text, DBU_PER_MICRON)
}

/// Render database units as a minimal decimal micron string ("1800" → "1.8").
pub fn dbu_to_microns(v: i64) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let v = v.abs();
    let (q, r) = (v / DBU_PER_MICRON, v % DBU_PER_MICRON);
    if r == 0 {
        format!("{sign}{q}")
    } else {
        let frac = format!("{r:03}");
        let frac = frac.trim_end_matches('0');
        format!("{sign}{q}.{frac}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_is_zero_for_touching_and_overlapping() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.gap_sq(&Rect::new(10, 0, 20, 10)), 0); // shared edge
        assert_eq!(a.gap_sq(&Rect::new(10, 10, 20, 20)), 0); // shared corner
        assert_eq!(a.gap_sq(&Rect::new(5, 5, 20, 20)), 0); // overlap
        assert!(!a.overlaps(&Rect::new(10, 0, 20, 10)));
        assert!(a.touches(&Rect::new(10, 0, 20, 10)));
    }

    #[test]
    fn corner_gap_uses_both_axes() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(13, 14, 20, 20);
        assert_eq!(a.gap_sq(&b), 3 * 3 + 4 * 4);
        assert!(a.closer_than(&b, 6)); // 5 < 6
        assert!(!a.closer_than(&b, 5)); // 5 < 5 is false
    }

    #[test]
    fn gap_region_spans_facing_edges() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(14, 2, 20, 8);
        assert_eq!(a.gap_region(&b), Rect::new(10, 2, 14, 8));
        // overlapping pair: the intersection
        let c = Rect::new(5, 5, 20, 20);
        assert_eq!(a.gap_region(&c), Rect::new(5, 5, 10, 10));
    }

    #[test]
    fn micron_parsing_is_exact() {
        assert_eq!(microns_to_dbu("1.8"), Some(1800));
        assert_eq!(microns_to_dbu("0.06"), Some(60));
        assert_eq!(microns_to_dbu(".2"), Some(200));
        assert_eq!(microns_to_dbu("2"), Some(2000));
        assert_eq!(microns_to_dbu("0.1985"), None); // sub-dbu
        assert_eq!(microns_to_dbu("0.1980"), Some(198)); // trailing zero ok
        assert_eq!(microns_to_dbu("x"), None);
        assert_eq!(microns_to_dbu("-0.5"), Some(-500));
    }

    #[test]
    fn scaled_parsing_honors_unit_grid() {
        assert_eq!(parse_scaled_decimal("1.8", 100), Some(180));
        assert_eq!(parse_scaled_decimal("0.05", 100), Some(5));
        assert_eq!(parse_scaled_decimal("0.055", 100), None); // half a unit
        assert_eq!(parse_scaled_decimal("0.25", 2000), Some(500));
    }

    #[test]
    fn micron_formatting_round_trips() {
        for v in [0, 60, 100, 198, 1800, 2000, 12_345] {
            assert_eq!(microns_to_dbu(&dbu_to_microns(v)), Some(v));
        }
        assert_eq!(dbu_to_microns(1800), "1.8");
        assert_eq!(dbu_to_microns(60), "0.06");
        assert_eq!(dbu_to_microns(0), "0");
    }
}
