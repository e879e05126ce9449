//! Rule-based checks over a routed testcell.
//!
//! The checker walks the flat shape list a routed design carries and
//! reports geometric rule breaks (spacing, width, via coverage), missing
//! connectivity, and double-patterning decomposition failures. Every
//! violation is then classified against the cell-boundary bands of the
//! testcell and attributed to the master cells whose outlines touch it —
//! the downstream report cares about cells whose trouble sits at an
//! abutment edge, not about congestion in the middle of a cell.
//!
//! Rule distances can be uniformly inflated to stress-test margins; the
//! inflated deck keeps every clean design clean at factor 1.0 and only
//! ever adds findings as the factor grows.

mod dp;
mod index;

pub use dp::{check_dp, DptMode};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::abutment::{Testcell, TestcellKind};
use crate::geom::Rect;
use crate::library::{Cell, LayerKind, LayerRule, TechRules};
use crate::route::{DesignShape, NetKind, RoutedDesign, ShapeClass, UnroutedNet, UnroutedReason};
use crate::Diagnostic;
use index::RectIndex;

/// Every rule the checker knows. Declaration order is report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RuleKind {
    DiffNetSpacing,
    SameNetSpacing,
    MinWidth,
    ViaEnclosure,
    MinEnclosedWidth,
    Short,
    Open,
    DpOddCycle,
    DpPrecolorConflict,
}

impl RuleKind {
    /// Human-readable rule name as printed in summaries. Same-net spacing
    /// reads differently on cut layers, so the display resolves against
    /// the layer the violation sits on.
    pub fn display(self, tech: &TechRules, layer: Option<usize>) -> &'static str {
        let on_cut = layer
            .and_then(|l| tech.layers.get(l))
            .map_or(false, |r| r.kind == LayerKind::Cut);
        match self {
            RuleKind::DiffNetSpacing => "Diff net spacing",
            RuleKind::SameNetSpacing if on_cut => "Same net via-cut spacing",
            RuleKind::SameNetSpacing => "Same net spacing",
            RuleKind::MinWidth => "Min width",
            RuleKind::ViaEnclosure => "Via enclosure",
            RuleKind::MinEnclosedWidth => "Min enclosed width",
            RuleKind::Short => "Short",
            RuleKind::Open => "Open",
            RuleKind::DpOddCycle => "Double pattern odd cycle",
            RuleKind::DpPrecolorConflict => "Double pattern color conflict",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: RuleKind,
    /// Layer the violation sits on; `None` for connectivity findings that
    /// span layers.
    pub layer: Option<usize>,
    pub location: Rect,
    /// Net names involved, sorted; unowned obstructions contribute none.
    pub nets: Vec<String>,
    /// The location intersects a cell-boundary band.
    pub at_boundary: bool,
    /// Masters of the placed instances whose outlines touch the location,
    /// sorted and unique.
    pub masters: Vec<String>,
    /// More than one master is involved.
    pub shared: bool,
}

impl Violation {
    fn sort_key(&self) -> (bool, usize, Rect, RuleKind) {
        (
            self.layer.is_none(),
            self.layer.unwrap_or(usize::MAX),
            self.location,
            self.rule,
        )
    }
}

#[derive(Clone, Debug)]
pub struct DrcOptions {
    pub dpt: DptMode,
    /// Uniform scale on rule distances, >= 1.0.
    pub rule_inflation: f64,
    /// Half-width of the cell-boundary bands; when unset, twice the
    /// min spacing of the lowest window layer (after inflation).
    pub boundary_margin: Option<i64>,
    /// Only report DP odd cycles whose witness fits within this span.
    pub locality: Option<i64>,
}

impl Default for DrcOptions {
    fn default() -> DrcOptions {
        DrcOptions {
            dpt: DptMode::Off,
            rule_inflation: 1.0,
            boundary_margin: None,
            locality: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DrcError {
    #[error("rule inflation factor {0} must be at least 1.0")]
    BadInflation(f64),
}

/// Checker output for one testcell.
#[derive(Clone, Debug)]
pub struct DrcResult {
    pub testcell: String,
    pub kind: TestcellKind,
    pub instances: usize,
    pub violations: Vec<Violation>,
    pub unrouted: Vec<UnroutedNet>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Scale the distance rules of a deck by `factor` (ceiling), leaving
/// widths of drawn geometry (pitch, via enclosure) and the deliberately
/// exact same-net / DP bounds alone. Factors below 1.0 are refused: a
/// deflated deck would hide real violations.
pub fn inflate_rules(tech: &TechRules, factor: f64) -> Result<TechRules, DrcError> {
    if !factor.is_finite() || factor < 1.0 {
        return Err(DrcError::BadInflation(factor));
    }
    let scale = |v: i64| -> i64 { (v as f64 * factor).ceil() as i64 };
    let mut out = tech.clone();
    for rule in &mut out.layers {
        rule.min_spacing = scale(rule.min_spacing);
        rule.min_width = scale(rule.min_width);
        rule.min_enclosed_width = scale(rule.min_enclosed_width);
    }
    Ok(out)
}

/// Run every check over a routed design and classify the findings
/// against the testcell's abutment boundaries.
pub fn check_design(
    design: &RoutedDesign,
    testcell: &Testcell,
    cells: &BTreeMap<String, Cell>,
    tech: &TechRules,
    options: &DrcOptions,
) -> Result<DrcResult, DrcError> {
    let deck = inflate_rules(tech, options.rule_inflation)?;
    let mut violations = Vec::new();
    let mut diagnostics = design.diagnostics.clone();

    for (layer, rule) in deck.layers.iter().enumerate() {
        let on_layer: Vec<&DesignShape> = design
            .shapes
            .iter()
            .filter(|s| s.layer == layer)
            .collect();
        if on_layer.is_empty() {
            continue;
        }
        check_min_width(layer, rule, &on_layer, &mut violations);
        check_spacing(layer, rule, &on_layer, &mut violations);
        check_same_net(layer, rule, &on_layer, &mut violations);
    }
    check_vias(&deck, &design.shapes, &mut violations);
    check_opens(design, &mut violations);
    let (mut dp_violations, mut dp_diags) =
        dp::check_dp(&design.shapes, &deck, options.dpt, options.locality);
    violations.append(&mut dp_violations);
    diagnostics.append(&mut dp_diags);

    let margin = options.boundary_margin.unwrap_or_else(|| {
        let lowest = design.window.first().copied().unwrap_or(0);
        2 * deck.layers[lowest].min_spacing
    });
    let outlines = instance_outlines(testcell, cells);
    let bands = boundary_bands(&outlines, &design.die, margin);
    for v in &mut violations {
        v.at_boundary = bands.iter().any(|b| b.touches(&v.location));
        let mut masters: Vec<String> = outlines
            .iter()
            .filter(|(_, bbox)| bbox.touches(&v.location))
            .map(|(master, _)| master.clone())
            .collect();
        masters.sort();
        masters.dedup();
        v.shared = masters.len() > 1;
        v.masters = masters;
    }
    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    violations.dedup();

    Ok(DrcResult {
        testcell: design.testcell.clone(),
        kind: testcell.kind,
        instances: testcell.instances.len(),
        violations,
        unrouted: design.unrouted.clone(),
        diagnostics,
    })
}

fn violation(rule: RuleKind, layer: usize, location: Rect, nets: Vec<String>) -> Violation {
    Violation {
        rule,
        layer: Some(layer),
        location,
        nets,
        at_boundary: false,
        masters: Vec::new(),
        shared: false,
    }
}

/// Drawn shapes narrower than the layer minimum. Straps and rails are
/// exempt: they are deliberately non-standard stress geometry.
fn check_min_width(
    layer: usize,
    rule: &LayerRule,
    shapes: &[&DesignShape],
    out: &mut Vec<Violation>,
) {
    for s in shapes {
        if matches!(s.class, ShapeClass::Strap | ShapeClass::Rail) {
            continue;
        }
        if s.rect.min_side() < rule.min_width {
            out.push(violation(
                RuleKind::MinWidth,
                layer,
                s.rect,
                s.net.iter().cloned().collect(),
            ));
        }
    }
}

/// Shorts and different-net spacing, one pass over close pairs. Two
/// owned shapes of different nets that overlap are a short; anything
/// else involving at least one owner inside the spacing distance is a
/// spacing violation. Unowned-vs-unowned pairs are cell-internal
/// geometry and not checked.
fn check_spacing(
    layer: usize,
    rule: &LayerRule,
    shapes: &[&DesignShape],
    out: &mut Vec<Violation>,
) {
    let spacing = rule.min_spacing;
    let rects: Vec<Rect> = shapes.iter().map(|s| s.rect).collect();
    let idx = RectIndex::build(&rects, (spacing * 4).max(256));
    for (i, a) in shapes.iter().enumerate() {
        for j in idx.near(&a.rect, spacing) {
            let j = j as usize;
            if j <= i {
                continue;
            }
            let b = shapes[j];
            let mut nets: Vec<String> = match (&a.net, &b.net) {
                (None, None) => continue,
                (Some(x), Some(y)) if x == y => continue,
                (x, y) => x.iter().chain(y.iter()).cloned().collect(),
            };
            nets.sort();
            if a.net.is_some() && b.net.is_some() && a.rect.overlaps(&b.rect) {
                out.push(violation(
                    RuleKind::Short,
                    layer,
                    a.rect.gap_region(&b.rect),
                    nets,
                ));
            } else if a.rect.closer_than(&b.rect, spacing) {
                out.push(violation(
                    RuleKind::DiffNetSpacing,
                    layer,
                    a.rect.gap_region(&b.rect),
                    nets,
                ));
            }
        }
    }
}

/// Disconnected same-net islands closer than the same-net bound. Shapes
/// that touch merge into one island first, so a via landing on a wire
/// never trips this; two parallel runs of one net pinched together do.
fn check_same_net(
    layer: usize,
    rule: &LayerRule,
    shapes: &[&DesignShape],
    out: &mut Vec<Violation>,
) {
    let sns = rule.same_net_spacing;
    let mut by_net: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in shapes.iter().enumerate() {
        if let Some(net) = &s.net {
            by_net.entry(net.as_str()).or_default().push(i);
        }
    }
    for (net, members) in by_net {
        if members.len() < 2 {
            continue;
        }
        let rects: Vec<Rect> = members.iter().map(|&i| shapes[i].rect).collect();
        let idx = RectIndex::build(&rects, (sns * 4).max(256));
        let mut uf = UnionFind::new(rects.len());
        for (i, rect) in rects.iter().enumerate() {
            for j in idx.near(rect, 0) {
                let j = j as usize;
                if j > i && rect.touches(&rects[j]) {
                    uf.union(i, j);
                }
            }
        }
        let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..rects.len() {
            grouped.entry(uf.find(i)).or_default().push(i);
        }
        let mut islands: Vec<(Rect, Vec<usize>)> = grouped
            .into_values()
            .map(|ids| {
                let bbox = ids
                    .iter()
                    .map(|&i| rects[i])
                    .reduce(|a, b| a.union(&b))
                    .expect("islands are non-empty");
                (bbox, ids)
            })
            .collect();
        islands.sort_by_key(|(bbox, _)| *bbox);
        for a in 0..islands.len() {
            for b in a + 1..islands.len() {
                // island min gap is bounded below by bbox gap
                if islands[a].0.gap_sq(&islands[b].0) >= sns * sns {
                    continue;
                }
                let mut closest: Option<(i64, Rect)> = None;
                for &i in &islands[a].1 {
                    for &j in &islands[b].1 {
                        let gap = rects[i].gap_sq(&rects[j]);
                        if closest.as_ref().map_or(true, |&(g, _)| gap < g) {
                            closest = Some((gap, rects[i].gap_region(&rects[j])));
                        }
                    }
                }
                if let Some((gap, region)) = closest {
                    if gap < sns * sns {
                        out.push(violation(
                            RuleKind::SameNetSpacing,
                            layer,
                            region,
                            vec![net.to_string()],
                        ));
                    }
                }
            }
        }
    }
}

/// Via coverage: every router-made cut needs a same-net landing pad on
/// each adjacent routing layer, enclosing it by the cut layer's bound,
/// and the pad itself must meet the routing layer's enclosed-width
/// minimum. The best available pad is judged, so overlapping wires
/// help rather than double-report.
fn check_vias(deck: &TechRules, shapes: &[DesignShape], out: &mut Vec<Violation>) {
    let mut per_layer: BTreeMap<usize, Vec<&DesignShape>> = BTreeMap::new();
    for s in shapes {
        per_layer.entry(s.layer).or_default().push(s);
    }
    let indexes: BTreeMap<usize, RectIndex> = per_layer
        .iter()
        .map(|(&l, list)| {
            let rects: Vec<Rect> = list.iter().map(|s| s.rect).collect();
            (l, RectIndex::build(&rects, 512))
        })
        .collect();
    let enclosure_margin = |pad: &Rect, cut: &Rect| -> i64 {
        (cut.x_lo - pad.x_lo)
            .min(pad.x_hi - cut.x_hi)
            .min(cut.y_lo - pad.y_lo)
            .min(pad.y_hi - cut.y_hi)
    };
    for via in shapes.iter().filter(|s| s.class == ShapeClass::Via) {
        let Some(net) = &via.net else { continue };
        let enc = deck.layers[via.layer].via_enclosure;
        for side in [via.layer.wrapping_sub(1), via.layer + 1] {
            let Some(rule) = deck.layers.get(side) else { continue };
            if rule.kind != LayerKind::Routing {
                continue;
            }
            let (Some(list), Some(idx)) = (per_layer.get(&side), indexes.get(&side)) else {
                out.push(violation(
                    RuleKind::ViaEnclosure,
                    via.layer,
                    via.rect,
                    vec![net.clone()],
                ));
                continue;
            };
            let covering: Vec<&DesignShape> = idx
                .near(&via.rect, 0)
                .into_iter()
                .map(|i| list[i as usize])
                .filter(|s| s.net.as_ref() == Some(net) && s.rect.contains_rect(&via.rect))
                .collect();
            let best_margin = covering
                .iter()
                .map(|s| enclosure_margin(&s.rect, &via.rect))
                .max();
            if best_margin.map_or(true, |m| m < enc) {
                out.push(violation(
                    RuleKind::ViaEnclosure,
                    via.layer,
                    via.rect,
                    vec![net.clone()],
                ));
            }
            if let Some(best_pad) = covering.iter().max_by_key(|s| s.rect.min_side()) {
                if best_pad.rect.min_side() < rule.min_enclosed_width {
                    out.push(violation(
                        RuleKind::MinEnclosedWidth,
                        side,
                        best_pad.rect,
                        vec![net.clone()],
                    ));
                }
            }
        }
    }
}

/// Connectivity. A net whose pins could not reach the routing grid gets
/// one open per blocked pin; otherwise the net's drawn shapes are merged
/// (touching on a layer, or bridged through a touching cut) and every
/// island beyond the first is an open.
fn check_opens(design: &RoutedDesign, out: &mut Vec<Violation>) {
    let blocked: BTreeMap<&str, &UnroutedNet> = design
        .unrouted
        .iter()
        .filter(|u| u.reason == UnroutedReason::PinBlocked)
        .map(|u| (u.net.as_str(), u))
        .collect();
    let open = |location: Rect, net: &str| Violation {
        rule: RuleKind::Open,
        layer: None,
        location,
        nets: vec![net.to_string()],
        at_boundary: false,
        masters: Vec::new(),
        shared: false,
    };
    for net in design.nets.iter().filter(|n| n.kind == NetKind::Signal) {
        if let Some(unrouted) = blocked.get(net.name.as_str()) {
            for pin in &unrouted.blocked_pins {
                out.push(open(pin.bbox, &net.name));
            }
            continue;
        }
        let members: Vec<&DesignShape> = design
            .shapes
            .iter()
            .filter(|s| s.net.as_deref() == Some(net.name.as_str()))
            .collect();
        if members.len() < 2 {
            continue;
        }
        let mut uf = UnionFind::new(members.len());
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (members[i], members[j]);
                if a.layer.abs_diff(b.layer) <= 1 && a.rect.touches(&b.rect) {
                    uf.union(i, j);
                }
            }
        }
        let mut grouped: BTreeMap<usize, Rect> = BTreeMap::new();
        for (i, s) in members.iter().enumerate() {
            let root = uf.find(i);
            grouped
                .entry(root)
                .and_modify(|bbox| *bbox = bbox.union(&s.rect))
                .or_insert(s.rect);
        }
        if grouped.len() < 2 {
            continue;
        }
        let mut islands: Vec<Rect> = grouped.into_values().collect();
        islands.sort();
        for island in &islands[1..] {
            out.push(open(*island, &net.name));
        }
    }
}

/// Instance outlines as `(master, bbox)`, in placement order.
fn instance_outlines(testcell: &Testcell, cells: &BTreeMap<String, Cell>) -> Vec<(String, Rect)> {
    testcell
        .instances
        .iter()
        .filter_map(|inst| {
            cells.get(&inst.cell).map(|c| {
                let bbox = Rect::new(inst.x, inst.y, inst.x + c.width, inst.y + c.height);
                (inst.cell.clone(), bbox)
            })
        })
        .collect()
}

/// Full-height bands of half-width `margin` centered on every vertical
/// edge where two instances abut, plus the die's own left and right
/// edges.
fn boundary_bands(outlines: &[(String, Rect)], die: &Rect, margin: i64) -> Vec<Rect> {
    let mut edges: BTreeSet<i64> = BTreeSet::new();
    edges.insert(die.x_lo);
    edges.insert(die.x_hi);
    for (i, (_, a)) in outlines.iter().enumerate() {
        for (_, b) in &outlines[i + 1..] {
            for (lhs, rhs) in [(a, b), (b, a)] {
                if lhs.x_hi == rhs.x_lo && lhs.y_lo < rhs.y_hi && rhs.y_lo < lhs.y_hi {
                    edges.insert(lhs.x_hi);
                }
            }
        }
    }
    edges
        .into_iter()
        .map(|x| Rect::new(x - margin, die.y_lo, x + margin, die.y_hi))
        .collect()
}

/// Minimal union-find with smallest-index roots, shared by the
/// connectivity and clustering passes.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // smaller index wins so roots are deterministic
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abutment::{Instance, Orientation};
    use crate::library::Direction;
    use crate::route::Net;

    fn tech() -> TechRules {
        let layer = |name: &str, kind, dir, width, spacing| LayerRule {
            name: name.into(),
            kind,
            direction: dir,
            pitch: 200,
            min_width: width,
            min_spacing: spacing,
            same_net_spacing: spacing,
            dp_spacing: 0,
            via_enclosure: 10,
            min_enclosed_width: width,
        };
        TechRules {
            units_per_micron: 1000,
            site_row_height: 1800,
            layers: vec![
                layer("M1", LayerKind::Routing, Direction::Horizontal, 60, 60),
                layer("V1", LayerKind::Cut, Direction::None, 60, 80),
                layer("M2", LayerKind::Routing, Direction::Horizontal, 100, 100),
                layer("V2", LayerKind::Cut, Direction::None, 60, 80),
                layer("M3", LayerKind::Routing, Direction::Vertical, 100, 100),
            ],
        }
    }

    fn shape(layer: usize, rect: Rect, net: Option<&str>, class: ShapeClass) -> DesignShape {
        DesignShape {
            layer,
            rect,
            net: net.map(str::to_string),
            class,
            instance: None,
            mask: 0,
        }
    }

    fn signal_net(name: &str) -> Net {
        Net {
            name: name.into(),
            kind: NetKind::Signal,
            terminals: Vec::new(),
        }
    }

    /// A bare design around the given shapes: single-instance die, M2/M3
    /// window, no nets unless added.
    fn design(shapes: Vec<DesignShape>) -> RoutedDesign {
        RoutedDesign {
            testcell: "scell_X".into(),
            die: Rect::new(0, 0, 2000, 1800),
            rows: 1,
            window: vec![2, 4],
            nets: Vec::new(),
            shapes,
            unrouted: Vec::new(),
            diagnostics: Vec::new(),
            iteration_metrics: Vec::new(),
        }
    }

    fn testcell() -> Testcell {
        Testcell {
            name: "scell_X".into(),
            kind: TestcellKind::TypeAa,
            instances: vec![
                Instance {
                    name: "U1".into(),
                    cell: "X".into(),
                    orientation: Orientation::R0,
                    x: 0,
                    y: 0,
                },
                Instance {
                    name: "U2".into(),
                    cell: "X".into(),
                    orientation: Orientation::MY,
                    x: 1000,
                    y: 0,
                },
            ],
            die: Rect::new(0, 0, 2000, 1800),
            rows: 1,
        }
    }

    fn cell_map() -> BTreeMap<String, Cell> {
        let mut m = BTreeMap::new();
        m.insert(
            "X".into(),
            Cell {
                name: "X".into(),
                width: 1000,
                height: 1800,
                height_rows: 1,
                pins: Vec::new(),
                obstructions: Vec::new(),
            },
        );
        m
    }

    fn check(shapes: Vec<DesignShape>) -> DrcResult {
        check_design(
            &design(shapes),
            &testcell(),
            &cell_map(),
            &tech(),
            &DrcOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn inflation_scales_only_distance_rules() {
        let deck = inflate_rules(&tech(), 1.25).unwrap();
        assert_eq!(deck.layers[0].min_spacing, 75); // ceil(60 * 1.25)
        assert_eq!(deck.layers[0].min_width, 75);
        assert_eq!(deck.layers[2].min_enclosed_width, 125);
        // untouched: pitch, enclosure, same-net, cut spacing stays on the
        // cut layer's own fields
        assert_eq!(deck.layers[0].pitch, 200);
        assert_eq!(deck.layers[0].via_enclosure, 10);
        assert_eq!(deck.layers[0].same_net_spacing, 60);
        assert!(inflate_rules(&tech(), 1.0).is_ok());
        assert!(matches!(
            inflate_rules(&tech(), 0.8),
            Err(DrcError::BadInflation(_))
        ));
        assert!(inflate_rules(&tech(), f64::NAN).is_err());
    }

    #[test]
    fn narrow_wires_flag_min_width_but_rails_are_exempt() {
        let r = check(vec![
            shape(2, Rect::new(0, 0, 400, 50), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(0, 500, 400, 550), Some("VSS"), ShapeClass::Rail),
            shape(2, Rect::new(0, 900, 400, 950), Some("VDD"), ShapeClass::Strap),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::MinWidth);
        assert_eq!(r.violations[0].location, Rect::new(0, 0, 400, 50));
        assert_eq!(r.violations[0].nets, vec!["a"]);
    }

    #[test]
    fn overlap_is_a_short_and_near_miss_is_spacing() {
        // overlapping different nets: short at the intersection
        let r = check(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(250, 0, 500, 100), Some("b"), ShapeClass::Wire),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::Short);
        assert_eq!(r.violations[0].location, Rect::new(250, 0, 300, 100));
        assert_eq!(r.violations[0].nets, vec!["a", "b"]);

        // 40 apart on M2 (spacing 100): different-net spacing
        let r = check(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(340, 0, 600, 100), Some("b"), ShapeClass::Wire),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::DiffNetSpacing);
        assert_eq!(r.violations[0].location, Rect::new(300, 0, 340, 100));
    }

    #[test]
    fn obstructions_join_spacing_but_never_short() {
        // net metal overlapping an unowned obstruction: spacing, not short
        let r = check(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(250, 0, 500, 100), None, ShapeClass::Fixed),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::DiffNetSpacing);
        assert!(r.violations[0].nets == vec!["a"]);

        // two unowned obstructions: cell-internal, ignored
        let r = check(vec![
            shape(2, Rect::new(0, 0, 300, 100), None, ShapeClass::Fixed),
            shape(2, Rect::new(310, 0, 600, 100), None, ShapeClass::Fixed),
        ]);
        assert!(r.violations.is_empty());

        // same net twice: no short, no diff-net spacing
        let r = check(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(250, 0, 500, 100), Some("a"), ShapeClass::Wire),
        ]);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn pinched_same_net_islands_report_once_per_pair() {
        // two parallel same-net runs 40 apart (M2 same-net bound 100)
        let r = check(vec![
            shape(2, Rect::new(0, 0, 600, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(0, 140, 600, 240), Some("a"), ShapeClass::Wire),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::SameNetSpacing);
        assert_eq!(r.violations[0].location, Rect::new(0, 100, 600, 140));

        // bridged into one island: clean
        let r = check(vec![
            shape(2, Rect::new(0, 0, 600, 100), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(0, 140, 600, 240), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(0, 0, 100, 240), Some("a"), ShapeClass::Wire),
        ]);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn vias_need_covering_pads_on_both_sides() {
        let covered = vec![
            shape(2, Rect::new(200, 200, 300, 300), Some("a"), ShapeClass::Wire),
            shape(4, Rect::new(200, 200, 300, 300), Some("a"), ShapeClass::Wire),
            shape(3, Rect::new(220, 220, 280, 280), Some("a"), ShapeClass::Via),
        ];
        assert!(check(covered).violations.is_empty());

        // no pad on M3 at all: enclosure failure on the cut
        let r = check(vec![
            shape(2, Rect::new(200, 200, 300, 300), Some("a"), ShapeClass::Wire),
            shape(3, Rect::new(220, 220, 280, 280), Some("a"), ShapeClass::Via),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::ViaEnclosure);
        assert_eq!(r.violations[0].layer, Some(3));
        assert_eq!(r.violations[0].location, Rect::new(220, 220, 280, 280));

        // full-width pad, but shifted: margin 5 < 10 on one side
        let r = check(vec![
            shape(2, Rect::new(200, 200, 300, 300), Some("a"), ShapeClass::Wire),
            shape(4, Rect::new(215, 200, 315, 300), Some("a"), ShapeClass::Wire),
            shape(3, Rect::new(220, 220, 280, 280), Some("a"), ShapeClass::Via),
        ]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::ViaEnclosure);
    }

    #[test]
    fn skinny_landing_pads_flag_min_enclosed_width() {
        // 80-wide pads fully cover the 60 cut with margin 10, but M2/M3
        // need 100 of enclosed width
        let r = check(vec![
            shape(2, Rect::new(210, 210, 290, 290), Some("a"), ShapeClass::Wire),
            shape(4, Rect::new(210, 210, 290, 290), Some("a"), ShapeClass::Wire),
            shape(3, Rect::new(220, 220, 280, 280), Some("a"), ShapeClass::Via),
        ]);
        let mew: Vec<&Violation> = r
            .violations
            .iter()
            .filter(|v| v.rule == RuleKind::MinEnclosedWidth)
            .collect();
        assert_eq!(mew.len(), 2);
        assert_eq!(mew[0].layer, Some(2));
        assert_eq!(mew[1].layer, Some(4));
        assert_eq!(mew[0].location, Rect::new(210, 210, 290, 290));
        assert!(r
            .violations
            .iter()
            .all(|v| v.rule != RuleKind::ViaEnclosure));
    }

    #[test]
    fn disconnected_net_islands_are_opens() {
        let mut d = design(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Fixed),
            shape(2, Rect::new(900, 0, 1200, 100), Some("a"), ShapeClass::Fixed),
        ]);
        d.nets.push(signal_net("a"));
        let r = check_design(&d, &testcell(), &cell_map(), &tech(), &DrcOptions::default())
            .unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::Open);
        assert_eq!(r.violations[0].layer, None);
        // the lexically-later island is the reported one
        assert_eq!(r.violations[0].location, Rect::new(900, 0, 1200, 100));

        // a cut bridging M2<->M3 stitches the net together
        let mut d = design(vec![
            shape(2, Rect::new(0, 0, 300, 100), Some("a"), ShapeClass::Fixed),
            shape(3, Rect::new(220, 20, 280, 80), Some("a"), ShapeClass::Via),
            shape(4, Rect::new(200, 0, 300, 800), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(200, 700, 1200, 800), Some("a"), ShapeClass::Wire),
            shape(3, Rect::new(220, 720, 280, 780), Some("a"), ShapeClass::Via),
        ]);
        d.nets.push(signal_net("a"));
        let r = check_design(&d, &testcell(), &cell_map(), &tech(), &DrcOptions::default())
            .unwrap();
        assert!(r.violations.iter().all(|v| v.rule != RuleKind::Open));
    }

    #[test]
    fn blocked_pins_open_at_the_pin() {
        let mut d = design(vec![shape(
            0,
            Rect::new(100, 100, 180, 180),
            Some("a"),
            ShapeClass::Fixed,
        )]);
        d.nets.push(signal_net("a"));
        d.unrouted.push(UnroutedNet {
            net: "a".into(),
            reason: UnroutedReason::PinBlocked,
            blocked_pins: vec![crate::route::BlockedPin {
                instance: "U1".into(),
                pin: "A".into(),
                bbox: Rect::new(100, 100, 180, 180),
            }],
        });
        let r = check_design(&d, &testcell(), &cell_map(), &tech(), &DrcOptions::default())
            .unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, RuleKind::Open);
        assert_eq!(r.violations[0].location, Rect::new(100, 100, 180, 180));
        assert_eq!(r.unrouted.len(), 1);
    }

    #[test]
    fn boundary_bands_and_attribution() {
        // the two instances abut at x=1000; default margin is
        // 2 * M2 spacing = 200, bands [800,1200], [-200,200], [1800,2200]
        let r = check(vec![
            // straddles the abutment: boundary, both masters (same cell)
            shape(2, Rect::new(900, 0, 1200, 50), Some("a"), ShapeClass::Wire),
            // interior of U1: not boundary
            shape(2, Rect::new(300, 100, 700, 150), Some("b"), ShapeClass::Wire),
        ]);
        assert_eq!(r.violations.len(), 2); // two min-width findings
        let at_edge = r
            .violations
            .iter()
            .find(|v| v.location.x_lo == 900)
            .unwrap();
        assert!(at_edge.at_boundary);
        assert_eq!(at_edge.masters, vec!["X"]);
        assert!(!at_edge.shared); // same master on both sides
        let interior = r
            .violations
            .iter()
            .find(|v| v.location.x_lo == 300)
            .unwrap();
        assert!(!interior.at_boundary);

        // near the die's left edge counts as boundary too
        let r = check(vec![shape(
            2,
            Rect::new(50, 0, 400, 50),
            Some("a"),
            ShapeClass::Wire,
        )]);
        assert!(r.violations[0].at_boundary);
    }

    #[test]
    fn results_sort_by_layer_then_location_and_spacing_excludes_shorted_pairs() {
        let r = check(vec![
            shape(4, Rect::new(0, 0, 50, 400), Some("a"), ShapeClass::Wire),
            shape(2, Rect::new(0, 500, 400, 550), Some("b"), ShapeClass::Wire),
            shape(2, Rect::new(0, 0, 300, 100), Some("c"), ShapeClass::Wire),
            shape(2, Rect::new(250, 0, 500, 100), Some("d"), ShapeClass::Wire),
        ]);
        // M2 findings precede M3, ordered by location within a layer;
        // the shorted pair reports Short only
        let rules: Vec<RuleKind> = r.violations.iter().map(|v| v.rule).collect();
        assert_eq!(
            rules,
            vec![
                RuleKind::MinWidth, // M2 wire at x=0
                RuleKind::Short,    // M2 overlap at x=250
                RuleKind::MinWidth, // M3 wire
            ]
        );
        assert_eq!(r.violations[0].layer, Some(2));
        assert_eq!(r.violations[2].layer, Some(4));
        assert!(r
            .violations
            .iter()
            .all(|v| v.rule != RuleKind::DiffNetSpacing));
    }

    #[test]
    fn result_carries_testcell_identity() {
        let r = check(Vec::new());
        assert_eq!(r.testcell, "scell_X");
        assert_eq!(r.kind, TestcellKind::TypeAa);
        assert_eq!(r.instances, 2);
        assert!(r.violations.is_empty());
    }
}
