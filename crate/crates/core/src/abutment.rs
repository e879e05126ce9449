//! Abutment testcell enumeration.
//!
//! The goal is to exercise every way two cells can sit side by side in a
//! row, with as few placed instances as possible. Placement orientations
//! form the Klein four-group {R0, R180, MX, MY}; a whole-row mirror maps
//! the left/right pair (L, R) to (MY∘R, MY∘L), so two abutments that are
//! mirror images of each other stress the same geometry and only one of
//! them needs to be built. [`AdjacencyClass`] canonicalizes pairs under
//! that symmetry, and the testcell constructors below realize every class
//! with 4 instances per cell ([`make_type_aa`]) and 5 per cell pair
//! ([`make_type_ab`], [`make_type_multi`]), instead of the 8 and 16 a
//! non-mirrored enumeration needs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geom::Rect;
use crate::library::{Cell, PinKind};

/// Placement orientation: identity, 180° rotation, and the two mirrors
/// (MX flips y, MY flips x). Composition is commutative and every element
/// is its own inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Orientation {
    R0,
    R180,
    MX,
    MY,
}

impl Orientation {
    pub const ALL: [Orientation; 4] =
        [Orientation::R0, Orientation::R180, Orientation::MX, Orientation::MY];

    pub fn flips_x(self) -> bool {
        matches!(self, Orientation::MY | Orientation::R180)
    }

    pub fn flips_y(self) -> bool {
        matches!(self, Orientation::MX | Orientation::R180)
    }

    /// Group product: the orientation whose x/y flips are the XOR of the
    /// operands' flips.
    pub fn compose(self, other: Orientation) -> Orientation {
        match (self.flips_x() ^ other.flips_x(), self.flips_y() ^ other.flips_y()) {
            (false, false) => Orientation::R0,
            (true, true) => Orientation::R180,
            (false, true) => Orientation::MX,
            (true, false) => Orientation::MY,
        }
    }

    /// Placement code used in DEF COMPONENTS lines.
    pub fn def_code(self) -> &'static str {
        match self {
            Orientation::R0 => "N",
            Orientation::R180 => "S",
            Orientation::MX => "FS",
            Orientation::MY => "FN",
        }
    }

    pub fn from_def_code(code: &str) -> Option<Orientation> {
        match code {
            "N" => Some(Orientation::R0),
            "S" => Some(Orientation::R180),
            "FS" => Some(Orientation::MX),
            "FN" => Some(Orientation::MY),
            _ => None,
        }
    }
}

/// Map a rectangle in a cell's local frame (origin at the cell's lower-left
/// corner, cell size `w` × `h`) through an orientation. The oriented cell
/// keeps the same bounding box.
pub fn apply_orientation(o: Orientation, rect: &Rect, w: i64, h: i64) -> Rect {
    let (x_lo, x_hi) = if o.flips_x() {
        (w - rect.x_hi, w - rect.x_lo)
    } else {
        (rect.x_lo, rect.x_hi)
    };
    let (y_lo, y_hi) = if o.flips_y() {
        (h - rect.y_hi, h - rect.y_lo)
    } else {
        (rect.y_lo, rect.y_hi)
    };
    Rect { x_lo, y_lo, x_hi, y_hi }
}

/// A cell name together with a placement orientation; one side of an
/// abutment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientedCell {
    pub cell: String,
    pub orientation: Orientation,
}

impl OrientedCell {
    pub fn new(cell: impl Into<String>, orientation: Orientation) -> OrientedCell {
        OrientedCell { cell: cell.into(), orientation }
    }

    fn mirrored(&self) -> OrientedCell {
        OrientedCell {
            cell: self.cell.clone(),
            orientation: self.orientation.compose(Orientation::MY),
        }
    }
}

/// An ordered left/right abutment pair, canonicalized under whole-row
/// mirroring: (L, R) and (MY∘R, MY∘L) are the same class. The stored pair
/// is the lexicographically smaller of the two representatives.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdjacencyClass {
    pub left: OrientedCell,
    pub right: OrientedCell,
}

impl AdjacencyClass {
    pub fn new(left: OrientedCell, right: OrientedCell) -> AdjacencyClass {
        let mirrored = (right.mirrored(), left.mirrored());
        let (l, r) = (left, right).min(mirrored);
        AdjacencyClass { left: l, right: r }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TestcellKind {
    #[serde(rename = "TYPE_AA")]
    TypeAa,
    #[serde(rename = "TYPE_AB")]
    TypeAb,
    #[serde(rename = "TYPE_MULTI")]
    TypeMulti,
}

impl fmt::Display for TestcellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TestcellKind::TypeAa => "TYPE_AA",
            TestcellKind::TypeAb => "TYPE_AB",
            TestcellKind::TypeMulti => "TYPE_MULTI",
        };
        f.write_str(s)
    }
}

/// One placed cell instance inside a testcell. `x`, `y` is the lower-left
/// corner of the instance bounding box in database units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub cell: String,
    pub orientation: Orientation,
    pub x: i64,
    pub y: i64,
}

/// A generated abutment testcell: a fixed pattern of instances in one or
/// more site rows, plus the exact die box enclosing them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Testcell {
    pub name: String,
    pub kind: TestcellKind,
    pub instances: Vec<Instance>,
    pub die: Rect,
    pub rows: u32,
}

/// Self-abutment testcell: A A A A in orientations R0 MY MY R0.
///
/// The three internal boundaries realize all three self-adjacency classes
/// of a cell: (R0|MY), (MY|MY) ≡ (R0|R0), and (MY|R0).
pub fn make_type_aa(cell: &Cell) -> Testcell {
    use Orientation::{MY, R0};
    let w = cell.width;
    let orients = [R0, MY, MY, R0];
    let instances = orients
        .iter()
        .enumerate()
        .map(|(i, &o)| Instance {
            name: format!("U{}", i + 1),
            cell: cell.name.clone(),
            orientation: o,
            x: i as i64 * w,
            y: 0,
        })
        .collect();
    Testcell {
        name: format!("scell_{}", cell.name),
        kind: TestcellKind::TypeAa,
        instances,
        die: Rect::new(0, 0, 4 * w, cell.height),
        rows: cell.height_rows.max(1),
    }
}

/// Pair-abutment testcell: B A B A B in orientations R0 R0 MY MY R0,
/// with `a` in the two center slots. The four internal boundaries realize
/// all four mixed adjacency classes of the pair {A, B}.
pub fn make_type_ab(a: &Cell, b: &Cell) -> Testcell {
    use Orientation::{MY, R0};
    let (wa, wb) = (a.width, b.width);
    let slots: [(&Cell, Orientation, i64); 5] = [
        (b, R0, 0),
        (a, R0, wb),
        (b, MY, wb + wa),
        (a, MY, 2 * wb + wa),
        (b, R0, 2 * (wb + wa)),
    ];
    let instances = slots
        .iter()
        .enumerate()
        .map(|(i, &(cell, o, x))| Instance {
            name: format!("U{}", i + 1),
            cell: cell.name.clone(),
            orientation: o,
            x,
            y: 0,
        })
        .collect();
    Testcell {
        name: format!("scell_{}_{}", a.name, b.name),
        kind: TestcellKind::TypeAb,
        instances,
        die: Rect::new(0, 0, 3 * wb + 2 * wa, a.height.max(b.height)),
        rows: a.height_rows.max(b.height_rows).max(1),
    }
}

/// Multi-height abutment testcell for a tall cell `a` spanning `k` site
/// rows next to a single-height cell `b`.
///
/// The floorplan is five columns — B-stack, A, B-stack, A, B-stack — where
/// each B-stack holds `k` copies of `b`, one per row. Row orientations
/// keep the power rails aligned: even rows use the TYPE_AB pattern
/// (R0/MY), odd rows its vertical flip (MX/R180). Instances are numbered
/// column-major, bottom-up, so every row parity realizes all four mixed
/// adjacency classes available to it.
pub fn make_type_multi(a: &Cell, b: &Cell, row_height: i64) -> Testcell {
    use Orientation::{MX, MY, R0, R180};
    let k = a.height_rows.max(1) as i64;
    let (wa, wb) = (a.width, b.width);
    let col_x = [0, wb, wb + wa, 2 * wb + wa, 2 * (wb + wa)];
    let even_b = [R0, MY, R0];
    let odd_b = [MX, R180, MX];

    let mut instances = Vec::new();
    let mut next = 1u32;
    for (col, &x) in col_x.iter().enumerate() {
        if col % 2 == 0 {
            // B-stack column (stack index 0, 1, 2).
            let stack = col / 2;
            for row in 0..k {
                let o = if row % 2 == 0 { even_b[stack] } else { odd_b[stack] };
                instances.push(Instance {
                    name: format!("U{next}"),
                    cell: b.name.clone(),
                    orientation: o,
                    x,
                    y: row * row_height,
                });
                next += 1;
            }
        } else {
            let o = if col == 1 { R0 } else { MY };
            instances.push(Instance {
                name: format!("U{next}"),
                cell: a.name.clone(),
                orientation: o,
                x,
                y: 0,
            });
            next += 1;
        }
    }
    Testcell {
        name: format!("mcell_{}_{}", a.name, b.name),
        kind: TestcellKind::TypeMulti,
        instances,
        die: Rect::new(0, 0, 3 * wb + 2 * wa, k * row_height),
        rows: k as u32,
    }
}

/// Testcell selection mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationMode {
    /// One TYPE_AA testcell per cell.
    SingleCellOnly,
    /// One TYPE_AB per unordered pair of single-height cells, plus one
    /// TYPE_MULTI per (multi-height, single-height) pair.
    CellByCellOnly,
    /// The same set as `CellByCellOnly`; downstream emission additionally
    /// places every testcell under one combined top-level design.
    AllComboInOneCellOnly,
    /// Union of the single-cell and pair testcells.
    All,
}

impl EnumerationMode {
    fn includes_single(self) -> bool {
        matches!(self, EnumerationMode::SingleCellOnly | EnumerationMode::All)
    }

    fn includes_pairs(self) -> bool {
        !matches!(self, EnumerationMode::SingleCellOnly)
    }

    /// Whether generation should also emit one combined placement holding
    /// every testcell.
    pub fn combined_top(self) -> bool {
        matches!(self, EnumerationMode::AllComboInOneCellOnly | EnumerationMode::All)
    }
}

/// Enumerate the testcell set for a library under the given mode. The
/// result is sorted by testcell name.
pub fn enumerate_library(cells: &[Cell], mode: EnumerationMode, row_height: i64) -> Vec<Testcell> {
    let mut sorted: Vec<&Cell> = cells.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let singles: Vec<&Cell> = sorted.iter().copied().filter(|c| c.height_rows == 1).collect();
    let multis: Vec<&Cell> = sorted.iter().copied().filter(|c| c.height_rows > 1).collect();

    let mut out = Vec::new();
    if mode.includes_single() {
        for cell in &sorted {
            out.push(make_type_aa(cell));
        }
    }
    if mode.includes_pairs() {
        for (i, a) in singles.iter().enumerate() {
            for b in &singles[i + 1..] {
                out.push(make_type_ab(a, b));
            }
        }
        for m in &multis {
            for s in &singles {
                out.push(make_type_multi(m, s, row_height));
            }
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// Instance count of the mirror-reduced enumeration for a library of `n`
/// single-height cells: 4 per cell + 5 per unordered pair.
pub fn count_mirror_reduced(n: u64) -> u64 {
    4 * n + 5 * n * (n.saturating_sub(1)) / 2
}

/// Instance count of a full enumeration that builds each abutment in both
/// mirror images: 8 per cell + 8 per ordered pair.
pub fn count_exhaustive(n: u64) -> u64 {
    8 * n + 8 * n * (n.saturating_sub(1))
}

/// Instance count of the common paired enumeration (6 per cell + 6 per
/// ordered pair), included for comparison.
pub fn count_paired(n: u64) -> u64 {
    6 * n + 6 * n * (n.saturating_sub(1))
}

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("testcell {testcell}: instance {instance} references unknown cell `{cell}`")]
    UnknownCell {
        testcell: String,
        instance: String,
        cell: String,
    },
}

/// A pin rectangle mapped to die coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedPinShape {
    pub instance: String,
    pub cell: String,
    pub pin: String,
    pub kind: PinKind,
    pub layer: String,
    pub mask: u8,
    pub rect: Rect,
}

/// An obstruction rectangle mapped to die coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedObstruction {
    pub instance: String,
    pub cell: String,
    pub layer: String,
    pub rect: Rect,
}

/// All cell geometry of a testcell in die coordinates.
#[derive(Clone, Debug, Default)]
pub struct Placement {
    pub pins: Vec<PlacedPinShape>,
    pub obstructions: Vec<PlacedObstruction>,
}

/// Flatten a testcell: apply each instance's orientation to its cell's
/// geometry and translate it to the instance position.
pub fn place_shapes(
    testcell: &Testcell,
    cells: &BTreeMap<String, Cell>,
) -> Result<Placement, PlacementError> {
    let mut placement = Placement::default();
    for inst in &testcell.instances {
        let cell = cells.get(&inst.cell).ok_or_else(|| PlacementError::UnknownCell {
            testcell: testcell.name.clone(),
            instance: inst.name.clone(),
            cell: inst.cell.clone(),
        })?;
        let orient = |r: &Rect| {
            apply_orientation(inst.orientation, r, cell.width, cell.height)
                .translate(inst.x, inst.y)
        };
        for pin in &cell.pins {
            for shape in &pin.shapes {
                placement.pins.push(PlacedPinShape {
                    instance: inst.name.clone(),
                    cell: cell.name.clone(),
                    pin: pin.name.clone(),
                    kind: pin.kind,
                    layer: shape.layer.clone(),
                    mask: shape.mask,
                    rect: orient(&shape.rect),
                });
            }
        }
        for obs in &cell.obstructions {
            placement.obstructions.push(PlacedObstruction {
                instance: inst.name.clone(),
                cell: cell.name.clone(),
                layer: obs.layer.clone(),
                rect: orient(&obs.rect),
            });
        }
    }
    Ok(placement)
}

/// The adjacency classes a testcell actually realizes: one class per pair
/// of instances that share a vertical boundary with positive y-overlap.
pub fn realized_classes(
    testcell: &Testcell,
    cells: &BTreeMap<String, Cell>,
) -> BTreeSet<AdjacencyClass> {
    let mut classes = BTreeSet::new();
    let boxes: Vec<(usize, Rect)> = testcell
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| {
            cells.get(&inst.cell).map(|c| {
                (i, Rect::new(inst.x, inst.y, inst.x + c.width, inst.y + c.height))
            })
        })
        .collect();
    for &(i, ref bi) in &boxes {
        for &(j, ref bj) in &boxes {
            if i == j || bi.x_hi != bj.x_lo {
                continue;
            }
            let overlap = bi.y_hi.min(bj.y_hi) - bi.y_lo.max(bj.y_lo);
            if overlap <= 0 {
                continue;
            }
            let left = &testcell.instances[i];
            let right = &testcell.instances[j];
            classes.insert(AdjacencyClass::new(
                OrientedCell::new(left.cell.clone(), left.orientation),
                OrientedCell::new(right.cell.clone(), right.orientation),
            ));
        }
    }
    classes
}

/// Every adjacency class a set of single-height cells can form in an
/// even-parity row, where legal orientations are R0 and MY: the coverage
/// target for TYPE_AA + TYPE_AB enumeration.
pub fn expected_classes(cells: &[&Cell]) -> BTreeSet<AdjacencyClass> {
    use Orientation::{MY, R0};
    let mut classes = BTreeSet::new();
    for a in cells {
        for b in cells {
            for oa in [R0, MY] {
                for ob in [R0, MY] {
                    classes.insert(AdjacencyClass::new(
                        OrientedCell::new(a.name.clone(), oa),
                        OrientedCell::new(b.name.clone(), ob),
                    ));
                }
            }
        }
    }
    classes
}
