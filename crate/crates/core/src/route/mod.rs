//! Randomized pin-to-pin routing over a placed testcell.
//!
//! The pipeline per testcell: flatten the placement, derive the routing
//! window and track grid, preroute power rails and randomized straps,
//! partition signal pins into nets, then maze-route every net with
//! negotiated congestion repair. The output is a flat shape list — fixed
//! cell geometry, power metal, wires, vias — ready for rule checking,
//! plus the list of nets that could not be completed and why.

mod grid;
mod maze;
mod nets;
pub mod rng;

pub use grid::{resolve_window, ResourceState, RouteGrid};
pub use maze::{
    negotiate, AccessPoint, AccessVia, NegotiationResult, NetRoute, RoutableNet, TerminalAccess,
};
pub use nets::{assign_pin_nets, generate_straps, preroute_power, PowerShape};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::abutment::{place_shapes, PlacementError, Testcell};
use crate::geom::Rect;
use crate::library::{Cell, TechRules};
use crate::route::rng::{Stream, StreamPurpose};
use crate::Diagnostic;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("unknown layer `{0}` for the routing window")]
    UnknownLayer(String),
    #[error("layer `{0}` is not a routing layer")]
    NotRoutingLayer(String),
    #[error("routing window is empty: {min} is above {max}")]
    EmptyWindow { min: String, max: String },
    #[error("the technology stack has fewer than two routing layers")]
    TooFewRoutingLayers,
    #[error("routing window has no cut layer between adjacent routing layers")]
    DisjointWindow,
    #[error("routing window needs at least one horizontal and one vertical layer")]
    UnroutableWindow,
    #[error(
        "window layers {a} and {b} share a direction but not a pitch ({pitch_a} vs {pitch_b})"
    )]
    PitchMismatch {
        a: String,
        b: String,
        pitch_a: i64,
        pitch_b: i64,
    },
    #[error("die is too small to carry a routing track")]
    NoTracks,
}

/// How signal pins are grouped into nets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PinPairing {
    /// Shuffle all signal terminals and deal them into nets of
    /// `net_degree`.
    Random,
    /// Pair terminals that share a pin name, in instance order.
    Aligned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NetKind {
    Signal,
    Power,
    Ground,
}

/// One connection point: a named pin of a placed instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Terminal {
    pub instance: String,
    pub pin: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Net {
    pub name: String,
    pub kind: NetKind,
    pub terminals: Vec<Terminal>,
}

/// Provenance class of a shape in the flat design view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShapeClass {
    /// Cell geometry: pin metal and obstructions.
    Fixed,
    Wire,
    Via,
    Strap,
    Rail,
}

/// One rectangle of the flat routed design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignShape {
    /// Tech layer index.
    pub layer: usize,
    pub rect: Rect,
    /// Owning net name; `None` for obstructions and unconnected pin metal.
    pub net: Option<String>,
    pub class: ShapeClass,
    /// Source instance for `Fixed` shapes.
    pub instance: Option<String>,
    /// Pre-assigned double-patterning mask (0 = uncolored).
    pub mask: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnroutedReason {
    /// A terminal has no reachable track node (covered by foreign metal or
    /// off the grid entirely).
    PinBlocked,
    /// Negotiation could not fit the net; its wiring was stripped.
    Congestion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockedPin {
    pub instance: String,
    pub pin: String,
    pub bbox: Rect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnroutedNet {
    pub net: String,
    pub reason: UnroutedReason,
    pub blocked_pins: Vec<BlockedPin>,
}

#[derive(Clone, Debug)]
pub struct RouteOptions {
    pub seed: u64,
    pub min_layer: Option<String>,
    pub max_layer: Option<String>,
    pub via_cost: u64,
    pub max_ripup: u32,
    pub strap_density: f64,
    pub net_degree: usize,
    pub pin_pairing: PinPairing,
    pub die_margin: i64,
}

impl Default for RouteOptions {
    fn default() -> RouteOptions {
        RouteOptions {
            seed: 1,
            min_layer: None,
            max_layer: None,
            via_cost: 5,
            max_ripup: 20,
            strap_density: 1.0,
            net_degree: 2,
            pin_pairing: PinPairing::Random,
            die_margin: 0,
        }
    }
}

/// The routed testcell: nets, the flat shape list, and failures.
#[derive(Clone, Debug)]
pub struct RoutedDesign {
    pub testcell: String,
    pub die: Rect,
    pub rows: u32,
    /// Tech indices of the routing-window layers used, bottom-up.
    pub window: Vec<usize>,
    pub nets: Vec<Net>,
    pub shapes: Vec<DesignShape>,
    pub unrouted: Vec<UnroutedNet>,
    pub diagnostics: Vec<Diagnostic>,
    /// Accepted congestion metric per negotiation pass (non-increasing).
    pub iteration_metrics: Vec<u64>,
}

/// Route one testcell end to end.
pub fn route_testcell(
    testcell: &Testcell,
    cells: &BTreeMap<String, Cell>,
    tech: &TechRules,
    options: &RouteOptions,
) -> Result<RoutedDesign, RouteError> {
    let placement = place_shapes(testcell, cells)?;
    let die = testcell.die.expand(options.die_margin);
    let window = resolve_window(
        tech,
        options.min_layer.as_deref(),
        options.max_layer.as_deref(),
    )?;
    let mut grid = RouteGrid::build(tech, &window, die)?;
    let mut diagnostics = Vec::new();
    let mut shapes = Vec::new();

    // net assignment precedes blockage marking so pin metal can be marked
    // with its owning net
    let mut pin_stream = Stream::new(options.seed, StreamPurpose::PinAssign, &testcell.name);
    let (nets, mut net_diags) = assign_pin_nets(
        &placement,
        options.pin_pairing,
        options.net_degree,
        &mut pin_stream,
    );
    diagnostics.append(&mut net_diags);
    let net_id: BTreeMap<&str, u32> = nets
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i as u32))
        .collect();
    let terminal_net: BTreeMap<(&str, &str), u32> = nets
        .iter()
        .enumerate()
        .flat_map(|(i, n)| {
            n.terminals
                .iter()
                .map(move |t| ((t.instance.as_str(), t.pin.as_str()), i as u32))
        })
        .collect();

    for rail in preroute_power(tech, &die, testcell.rows) {
        let id = net_id.get(rail.net.as_str()).copied();
        grid.block_shape(rail.layer, &rail.rect, id);
        shapes.push(DesignShape {
            layer: rail.layer,
            rect: rail.rect,
            net: Some(rail.net),
            class: ShapeClass::Rail,
            instance: None,
            mask: 0,
        });
    }

    let mut strap_stream = Stream::new(options.seed, StreamPurpose::Straps, &testcell.name);
    let (straps, mut strap_diags) = generate_straps(
        tech,
        &window,
        &die,
        options.strap_density,
        &mut strap_stream,
    );
    diagnostics.append(&mut strap_diags);
    for strap in straps {
        let id = net_id.get(strap.net.as_str()).copied();
        grid.block_shape(strap.layer, &strap.rect, id);
        shapes.push(DesignShape {
            layer: strap.layer,
            rect: strap.rect,
            net: Some(strap.net),
            class: ShapeClass::Strap,
            instance: None,
            mask: 0,
        });
    }

    let mut missing_layers: Vec<String> = Vec::new();
    let note_missing = |name: &str, missing: &mut Vec<String>, diags: &mut Vec<Diagnostic>| {
        if !missing.iter().any(|m| m == name) {
            missing.push(name.to_string());
            diags.push(Diagnostic::warning(format!(
                "layer {name} is not in the technology stack; its shapes are ignored"
            )));
        }
    };
    for pin in &placement.pins {
        let Some(layer) = tech.layer_index(&pin.layer) else {
            note_missing(&pin.layer, &mut missing_layers, &mut diagnostics);
            continue;
        };
        let owner = terminal_net
            .get(&(pin.instance.as_str(), pin.pin.as_str()))
            .copied();
        grid.block_shape(layer, &pin.rect, owner);
        shapes.push(DesignShape {
            layer,
            rect: pin.rect,
            net: owner.map(|id| nets[id as usize].name.clone()),
            class: ShapeClass::Fixed,
            instance: Some(pin.instance.clone()),
            mask: pin.mask,
        });
    }
    for obs in &placement.obstructions {
        let Some(layer) = tech.layer_index(&obs.layer) else {
            note_missing(&obs.layer, &mut missing_layers, &mut diagnostics);
            continue;
        };
        grid.block_shape(layer, &obs.rect, None);
        shapes.push(DesignShape {
            layer,
            rect: obs.rect,
            net: None,
            class: ShapeClass::Fixed,
            instance: Some(obs.instance.clone()),
            mask: 0,
        });
    }

    // pin access analysis for signal nets
    let mut pin_shapes: BTreeMap<(&str, &str), Vec<&crate::abutment::PlacedPinShape>> =
        BTreeMap::new();
    for pin in &placement.pins {
        pin_shapes
            .entry((pin.instance.as_str(), pin.pin.as_str()))
            .or_default()
            .push(pin);
    }
    let mut unrouted: Vec<UnroutedNet> = Vec::new();
    let mut candidates: Vec<(usize, u32, Vec<TerminalAccess>)> = Vec::new();
    for (idx, routed_net) in nets.iter().enumerate() {
        if routed_net.kind != NetKind::Signal {
            continue;
        }
        let id = idx as u32;
        let mut accesses = Vec::new();
        let mut blocked = Vec::new();
        for (t_idx, term) in routed_net.terminals.iter().enumerate() {
            let key = (term.instance.as_str(), term.pin.as_str());
            let placed = pin_shapes.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let points = access_points(&grid, tech, placed, id);
            if points.is_empty() {
                let bbox = placed
                    .iter()
                    .map(|p| p.rect)
                    .reduce(|a, b| a.union(&b))
                    .unwrap_or(Rect::new(0, 0, 0, 0));
                blocked.push(BlockedPin {
                    instance: term.instance.clone(),
                    pin: term.pin.clone(),
                    bbox,
                });
            } else {
                accesses.push(TerminalAccess {
                    terminal_index: t_idx,
                    points,
                });
            }
        }
        if !blocked.is_empty() {
            for b in &blocked {
                diagnostics.push(Diagnostic::warning(format!(
                    "net {}: pin {}/{} has no reachable routing track",
                    routed_net.name, b.instance, b.pin
                )));
            }
            unrouted.push(UnroutedNet {
                net: routed_net.name.clone(),
                reason: UnroutedReason::PinBlocked,
                blocked_pins: blocked,
            });
        }
        if accesses.len() >= 2 {
            candidates.push((idx, id, accesses));
        }
    }

    // routing order: half-perimeter of the terminal centers, then name
    let hpwl = |idx: usize| -> i64 {
        let mut bbox: Option<Rect> = None;
        for term in &nets[idx].terminals {
            let key = (term.instance.as_str(), term.pin.as_str());
            if let Some(placed) = pin_shapes.get(&key) {
                if let Some(u) = placed.iter().map(|p| p.rect).reduce(|a, b| a.union(&b)) {
                    let center = Rect::new(
                        (u.x_lo + u.x_hi) / 2,
                        (u.y_lo + u.y_hi) / 2,
                        (u.x_lo + u.x_hi) / 2,
                        (u.y_lo + u.y_hi) / 2,
                    );
                    bbox = Some(match bbox {
                        Some(b) => b.union(&center),
                        None => center,
                    });
                }
            }
        }
        bbox.map(|b| b.width() + b.height()).unwrap_or(0)
    };
    candidates.sort_by(|a, b| {
        (hpwl(a.0), nets[a.0].name.as_str()).cmp(&(hpwl(b.0), nets[b.0].name.as_str()))
    });
    let routable: Vec<RoutableNet> = candidates
        .iter()
        .enumerate()
        .map(|(rank, (idx, id, accesses))| RoutableNet {
            id: *id,
            name: nets[*idx].name.clone(),
            order_rank: rank,
            terminals: accesses.clone(),
        })
        .collect();

    let result = negotiate(&grid, &routable, options.via_cost, options.max_ripup);
    for (pos, route) in result.routes.iter().enumerate() {
        let name = &routable[pos].name;
        match route {
            Some(route) => {
                realize_route(&grid, route, name, &mut shapes);
            }
            None => {
                diagnostics.push(Diagnostic::warning(format!(
                    "net {name}: unrouted after negotiation (congestion)"
                )));
                if !unrouted.iter().any(|u| &u.net == name) {
                    unrouted.push(UnroutedNet {
                        net: name.clone(),
                        reason: UnroutedReason::Congestion,
                        blocked_pins: Vec::new(),
                    });
                }
            }
        }
    }
    unrouted.sort_by(|a, b| a.net.cmp(&b.net));

    Ok(RoutedDesign {
        testcell: testcell.name.clone(),
        die,
        rows: testcell.rows,
        window,
        nets,
        shapes,
        unrouted,
        diagnostics,
        iteration_metrics: result.iteration_metrics,
    })
}

/// All usable entries from a pin's placed shapes onto the grid: direct
/// nodes where the pin metal itself sits on a window layer, or an access
/// via from the routing layer directly below the window.
fn access_points(
    grid: &RouteGrid,
    tech: &TechRules,
    placed: &[&crate::abutment::PlacedPinShape],
    net: u32,
) -> Vec<AccessPoint> {
    let mut points = Vec::new();
    for shape in placed {
        let Some(layer) = tech.layer_index(&shape.layer) else {
            continue;
        };
        if let Some(l) = grid.layers.iter().position(|&w| w == layer) {
            for (iy, ix) in grid.nodes_in_rect(&shape.rect) {
                if grid.node_state(l, iy, ix).passable(net) {
                    points.push(AccessPoint {
                        node: grid.node_index(l, iy, ix),
                        via: None,
                    });
                }
            }
        } else if Some(layer) == grid.below_layer {
            let Some(cut_layer) = grid.access_cut else {
                continue;
            };
            let half = grid.access_cut_width / 2;
            for (iy, ix) in grid.nodes_in_rect(&shape.rect) {
                if !grid.node_state(0, iy, ix).passable(net) {
                    continue;
                }
                let (x, y) = grid.node_point(iy, ix);
                let cut = Rect::new(x - half, y - half, x + half, y + half);
                if !grid.die.contains_rect(&cut.expand(grid.access_cut_enclosure)) {
                    continue;
                }
                points.push(AccessPoint {
                    node: grid.node_index(0, iy, ix),
                    via: Some(AccessVia {
                        cut_layer,
                        cut,
                        pin_rect: shape.rect,
                    }),
                });
            }
        }
    }
    points
}

/// Convert a committed route into drawn shapes: maximal same-track runs
/// become wires, layer changes become vias, and via landings without a
/// wire on their layer get a minimum square pad.
fn realize_route(grid: &RouteGrid, route: &NetRoute, net: &str, shapes: &mut Vec<DesignShape>) {
    use crate::library::Direction;
    let push = |shapes: &mut Vec<DesignShape>, layer: usize, rect: Rect, class: ShapeClass| {
        shapes.push(DesignShape {
            layer,
            rect,
            net: Some(net.to_string()),
            class,
            instance: None,
            mask: 0,
        });
    };
    // group track edges into per-track runs
    let mut runs: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &(a, _) in &route.edges {
        let (l, iy, ix) = grid.node_at(a);
        let key = match grid.directions[l] {
            Direction::Horizontal => (l, iy),
            _ => (l, ix),
        };
        runs.entry(key).or_default().push(match grid.directions[l] {
            Direction::Horizontal => ix,
            _ => iy,
        });
    }
    let mut covered: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
    for ((l, track), mut steps) in runs {
        steps.sort_unstable();
        let width = grid.widths[l];
        let mut start = steps[0];
        let mut prev = steps[0];
        let flush = |s: usize, e: usize, shapes: &mut Vec<DesignShape>| {
            // run from node s to node e+1 inclusive
            let rect = match grid.directions[l] {
                Direction::Horizontal => {
                    let y = grid.ys[track];
                    Rect::new(
                        grid.xs[s] - width / 2,
                        y - width / 2,
                        grid.xs[e + 1] + width / 2,
                        y + width / 2,
                    )
                }
                _ => {
                    let x = grid.xs[track];
                    Rect::new(
                        x - width / 2,
                        grid.ys[s] - width / 2,
                        x + width / 2,
                        grid.ys[e + 1] + width / 2,
                    )
                }
            };
            push(shapes, grid.layers[l], rect, ShapeClass::Wire);
        };
        for &s in &steps[1..] {
            if s != prev + 1 {
                flush(start, prev, shapes);
                start = s;
            }
            prev = s;
        }
        flush(start, prev, shapes);
        for &s in &steps {
            let (iy, ix) = match grid.directions[l] {
                Direction::Horizontal => (track, s),
                _ => (s, track),
            };
            covered.insert(grid.node_index(l, iy, ix));
            let (iy2, ix2) = match grid.directions[l] {
                Direction::Horizontal => (track, s + 1),
                _ => (s + 1, track),
            };
            covered.insert(grid.node_index(l, iy2, ix2));
        }
    }
    // square pads for nodes no wire run covers (via transits, lone landings)
    for &node in &route.nodes {
        if covered.contains(&node) {
            continue;
        }
        let (l, iy, ix) = grid.node_at(node);
        let (x, y) = grid.node_point(iy, ix);
        let half = grid.widths[l] / 2;
        push(
            shapes,
            grid.layers[l],
            Rect::new(x - half, y - half, x + half, y + half),
            ShapeClass::Wire,
        );
    }
    for &lower in &route.vias {
        let (l, iy, ix) = grid.node_at(lower);
        let (x, y) = grid.node_point(iy, ix);
        let half = grid.cut_widths[l] / 2;
        push(
            shapes,
            grid.cuts[l],
            Rect::new(x - half, y - half, x + half, y + half),
            ShapeClass::Via,
        );
    }
    for (_, access) in &route.accesses {
        if let Some(via) = &access.via {
            push(shapes, via.cut_layer, via.cut, ShapeClass::Via);
        }
    }
}
