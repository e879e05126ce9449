//! Standard-cell library model: cell geometry, technology rules, profiling.
//!
//! Two text inputs feed the pipeline: a cell file (a small LEF-like subset
//! with full pin and obstruction geometry, see [`parse_cells`]) and a
//! technology rule file (one line per layer, see [`parse_tech`]). Both are
//! scaled to integer database units at parse time.

mod lef;
mod tech;

pub use lef::{emit_cells, parse_cells, LefError, ParsedCells};
pub use tech::{parse_tech, TechError};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::Rect;
use crate::Diagnostic;

/// Pin electrical class. POWER/GROUND pins bind to the rail nets; SIGNAL
/// pins are the ones the router must reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PinKind {
    Signal,
    Power,
    Ground,
}

/// One rectangle of pin geometry. `mask` is the pre-assigned exposure for
/// double patterning: 0 = uncolored, 1 or 2 = colored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PinShape {
    pub layer: String,
    pub mask: u8,
    pub rect: Rect,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pin {
    pub name: String,
    pub kind: PinKind,
    pub shapes: Vec<PinShape>,
}

/// Obstruction geometry: routing metal the cell occupies without exposing
/// a terminal there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub layer: String,
    pub rect: Rect,
}

/// A library cell with full physical view. `height_rows` is the number of
/// site rows the cell spans; `height == height_rows * site_row_height`
/// always holds for accepted cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub name: String,
    pub width: i64,
    pub height: i64,
    pub height_rows: u32,
    pub pins: Vec<Pin>,
    pub obstructions: Vec<LayerShape>,
}

impl Cell {
    pub fn pin(&self, name: &str) -> Option<&Pin> {
        self.pins.iter().find(|p| p.name == name)
    }

    pub fn has_pin_kind(&self, kind: PinKind) -> bool {
        self.pins.iter().any(|p| p.kind == kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LayerKind {
    Routing,
    Cut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Horizontal,
    Vertical,
    /// Cut layers carry no preferred direction.
    None,
}

/// Per-layer design rules, all in database units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerRule {
    pub name: String,
    pub kind: LayerKind,
    pub direction: Direction,
    pub pitch: i64,
    pub min_width: i64,
    pub min_spacing: i64,
    /// Spacing bound between disjoint same-net shapes. Defaults to
    /// `min_spacing` when the rule file does not override it.
    pub same_net_spacing: i64,
    /// Double-patterning proximity bound; 0 disables DP analysis on the layer.
    pub dp_spacing: i64,
    /// Required metal overhang around a via cut (cut layers).
    pub via_enclosure: i64,
    /// Minimum drawn width of metal enclosing a via cut. Defaults to
    /// `min_width`.
    pub min_enclosed_width: i64,
}

/// The technology stack, bottom-up. Layers alternate ROUTING and CUT.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TechRules {
    pub units_per_micron: i64,
    pub site_row_height: i64,
    pub layers: Vec<LayerRule>,
}

impl TechRules {
    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    pub fn layer(&self, index: usize) -> &LayerRule {
        &self.layers[index]
    }

    /// Indices of routing layers, bottom-up.
    pub fn routing_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LayerKind::Routing)
            .map(|(i, _)| i)
            .collect()
    }

    /// The cut layer sitting between two routing layers adjacent in the
    /// stack, if the pair really is adjacent.
    pub fn cut_between(&self, lower: usize, upper: usize) -> Option<usize> {
        let (lo, hi) = (lower.min(upper), lower.max(upper));
        if hi == lo + 2 && self.layers.get(lo + 1).map(|l| l.kind) == Some(LayerKind::Cut) {
            Some(lo + 1)
        } else {
            None
        }
    }
}

/// Per-cell summary used by reports and by testcell sizing sanity checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellProfile {
    pub width: i64,
    pub height: i64,
    pub height_rows: u32,
    pub pins: Vec<String>,
}

/// Library-wide profile: per-cell dimensions plus a width histogram in
/// multiples of the narrowest cell width.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LibraryProfile {
    pub cells: BTreeMap<String, CellProfile>,
    /// Narrowest cell width; histogram bucket size.
    pub min_width: i64,
    /// `(bucket, fraction)` rows, bucket = width / min_width (integer
    /// division), sorted ascending. Fractions sum to 1 for non-empty input.
    pub histogram: Vec<(u32, f64)>,
}

/// Summarize cell dimensions and pin lists, and bucket the width
/// distribution by multiples of the minimum width.
pub fn profile_library(cells: &[Cell]) -> LibraryProfile {
    let mut profile = LibraryProfile {
        cells: BTreeMap::new(),
        min_width: 0,
        histogram: Vec::new(),
    };
    if cells.is_empty() {
        return profile;
    }
    profile.min_width = cells.iter().map(|c| c.width).min().unwrap_or(0);
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for cell in cells {
        profile.cells.insert(
            cell.name.clone(),
            CellProfile {
                width: cell.width,
                height: cell.height,
                height_rows: cell.height_rows,
                pins: cell.pins.iter().map(|p| p.name.clone()).collect(),
            },
        );
        let bucket = (cell.width / profile.min_width) as u32;
        *counts.entry(bucket).or_insert(0) += 1;
    }
    let total = cells.len() as f64;
    profile.histogram = counts
        .into_iter()
        .map(|(bucket, n)| (bucket, n as f64 / total))
        .collect();
    profile
}

/// Recompute `height_rows` against the site row height and drop cells whose
/// height is not an integer multiple, reporting each with a REJECTED_CELL
/// diagnostic.
pub fn bind_row_heights(cells: &mut Vec<Cell>, tech: &TechRules) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let row = tech.site_row_height;
    cells.retain_mut(|cell| {
        if row > 0 && cell.height % row == 0 && cell.height > 0 {
            cell.height_rows = (cell.height / row) as u32;
            true
        } else {
            diags.push(Diagnostic::warning(format!(
                "REJECTED_CELL {}: height {} is not an integer multiple of the site row height {}",
                cell.name, cell.height, row
            )));
            false
        }
    });
    diags
}
