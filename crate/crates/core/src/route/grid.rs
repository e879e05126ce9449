//! Track graph for maze routing: a window of adjacent routing layers, the
//! on-pitch track coordinates over the die, and the fixed blockage state of
//! every node, edge, and via site.
//!
//! Nodes live at track crossings `(xs[ix], ys[iy])` on every window layer.
//! A horizontal layer contributes edges along x, a vertical layer along y;
//! vias connect vertically adjacent window layers at shared crossings.

use crate::geom::Rect;
use crate::library::{Direction, TechRules};
use crate::route::RouteError;

/// Fixed usability of a routing resource. Fixed metal of one net keeps the
/// resource passable for that net; anything else (obstructions, metal of
/// two different nets) rules it out for everyone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceState {
    Free,
    Hard,
    Net(u32),
}

impl ResourceState {
    fn absorb(&mut self, owner: Option<u32>) {
        *self = match (*self, owner) {
            (ResourceState::Hard, _) => ResourceState::Hard,
            (_, None) => ResourceState::Hard,
            (ResourceState::Free, Some(n)) => ResourceState::Net(n),
            (ResourceState::Net(a), Some(b)) if a == b => ResourceState::Net(a),
            (ResourceState::Net(_), Some(_)) => ResourceState::Hard,
        };
    }

    pub fn passable(self, net: u32) -> bool {
        match self {
            ResourceState::Free => true,
            ResourceState::Hard => false,
            ResourceState::Net(owner) => owner == net,
        }
    }
}

/// Pick the window of routing layers to route in.
///
/// Defaults to the second and third routing layers of the stack, falling
/// back to the only two available when the stack has exactly two. Explicit
/// layer names (CLI `--min-layer`/`--max-layer`) override either end; the
/// window is every routing layer between them, inclusive.
pub fn resolve_window(
    tech: &TechRules,
    min_layer: Option<&str>,
    max_layer: Option<&str>,
) -> Result<Vec<usize>, RouteError> {
    let routing = tech.routing_layers();
    if routing.len() < 2 {
        return Err(RouteError::TooFewRoutingLayers);
    }
    let position = |name: &str| -> Result<usize, RouteError> {
        let idx = tech
            .layer_index(name)
            .ok_or_else(|| RouteError::UnknownLayer(name.to_string()))?;
        routing
            .iter()
            .position(|&r| r == idx)
            .ok_or_else(|| RouteError::NotRoutingLayer(name.to_string()))
    };
    let (default_lo, default_hi) = if routing.len() >= 3 { (1, 2) } else { (0, 1) };
    let lo = match min_layer {
        Some(name) => position(name)?,
        None => default_lo,
    };
    let hi = match max_layer {
        Some(name) => position(name)?,
        None => default_hi,
    };
    if lo > hi {
        return Err(RouteError::EmptyWindow {
            min: tech.layer(routing[lo]).name.clone(),
            max: tech.layer(routing[hi]).name.clone(),
        });
    }
    Ok(routing[lo..=hi].to_vec())
}

/// The routing grid over one die.
pub struct RouteGrid {
    /// Tech indices of the window layers, bottom-up.
    pub layers: Vec<usize>,
    /// Preferred direction per window layer.
    pub directions: Vec<Direction>,
    /// Drawn wire width per window layer (the layer's minimum width).
    pub widths: Vec<i64>,
    /// Tech indices of the cut layers between window layers; `cuts[i]`
    /// connects window layer `i` to `i + 1`.
    pub cuts: Vec<usize>,
    /// Cut square side per entry of `cuts`.
    pub cut_widths: Vec<i64>,
    /// Routing layer directly below the window, when the stack has one
    /// (pins there are reachable through a single access cut).
    pub below_layer: Option<usize>,
    /// Cut layer between `below_layer` and the lowest window layer.
    pub access_cut: Option<usize>,
    pub access_cut_width: i64,
    pub access_cut_enclosure: i64,
    /// Vertical-track x coordinates, ascending.
    pub xs: Vec<i64>,
    /// Horizontal-track y coordinates, ascending.
    pub ys: Vec<i64>,
    pub die: Rect,
    node_state: Vec<ResourceState>,
    edge_state: Vec<ResourceState>,
    via_state: Vec<ResourceState>,
}

impl RouteGrid {
    pub fn build(tech: &TechRules, window: &[usize], die: Rect) -> Result<RouteGrid, RouteError> {
        let directions: Vec<Direction> =
            window.iter().map(|&l| tech.layer(l).direction).collect();
        let has_h = directions.contains(&Direction::Horizontal);
        let has_v = directions.contains(&Direction::Vertical);
        if !(has_h && has_v) {
            return Err(RouteError::UnroutableWindow);
        }
        // same-direction layers must share a pitch or the grids would not line up
        for dir in [Direction::Horizontal, Direction::Vertical] {
            let pitches: Vec<(usize, i64)> = window
                .iter()
                .filter(|&&l| tech.layer(l).direction == dir)
                .map(|&l| (l, tech.layer(l).pitch))
                .collect();
            if let Some(&(first, p0)) = pitches.first() {
                if let Some(&(other, p1)) = pitches.iter().find(|&&(_, p)| p != p0) {
                    return Err(RouteError::PitchMismatch {
                        a: tech.layer(first).name.clone(),
                        b: tech.layer(other).name.clone(),
                        pitch_a: p0,
                        pitch_b: p1,
                    });
                }
            }
        }
        let pitch_of = |dir: Direction| -> i64 {
            window
                .iter()
                .find(|&&l| tech.layer(l).direction == dir)
                .map(|&l| tech.layer(l).pitch)
                .unwrap_or(0)
        };
        let tracks = |lo: i64, hi: i64, pitch: i64| -> Vec<i64> {
            let mut out = Vec::new();
            let mut c = lo + pitch / 2;
            while c <= hi - pitch / 2 {
                out.push(c);
                c += pitch;
            }
            out
        };
        let xs = tracks(die.x_lo, die.x_hi, pitch_of(Direction::Vertical));
        let ys = tracks(die.y_lo, die.y_hi, pitch_of(Direction::Horizontal));
        if xs.is_empty() || ys.is_empty() {
            return Err(RouteError::NoTracks);
        }
        let mut cuts = Vec::new();
        for pair in window.windows(2) {
            let cut = tech
                .cut_between(pair[0], pair[1])
                .ok_or(RouteError::DisjointWindow)?;
            cuts.push(cut);
        }
        let cut_widths: Vec<i64> = cuts.iter().map(|&c| tech.layer(c).min_width).collect();
        let routing = tech.routing_layers();
        let window_lo_pos = routing.iter().position(|&l| l == window[0]).unwrap_or(0);
        let below_layer = window_lo_pos.checked_sub(1).map(|p| routing[p]);
        let access_cut = below_layer.and_then(|b| tech.cut_between(b, window[0]));
        let (access_cut_width, access_cut_enclosure) = match access_cut {
            Some(c) => (tech.layer(c).min_width, tech.layer(c).via_enclosure),
            None => (0, 0),
        };
        let widths: Vec<i64> = window.iter().map(|&l| tech.layer(l).min_width).collect();
        let nodes = window.len() * xs.len() * ys.len();
        let vias = window.len().saturating_sub(1) * xs.len() * ys.len();
        Ok(RouteGrid {
            layers: window.to_vec(),
            directions,
            widths,
            cuts,
            cut_widths,
            below_layer,
            access_cut,
            access_cut_width,
            access_cut_enclosure,
            xs,
            ys,
            die,
            node_state: vec![ResourceState::Free; nodes],
            edge_state: vec![ResourceState::Free; nodes],
            via_state: vec![ResourceState::Free; vias],
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_state.len()
    }

    pub fn node_index(&self, l: usize, iy: usize, ix: usize) -> usize {
        (l * self.ys.len() + iy) * self.xs.len() + ix
    }

    /// Inverse of [`node_index`](Self::node_index): `(layer, iy, ix)`.
    pub fn node_at(&self, index: usize) -> (usize, usize, usize) {
        let nx = self.xs.len();
        let ny = self.ys.len();
        (index / (nx * ny), (index / nx) % ny, index % nx)
    }

    pub fn node_point(&self, iy: usize, ix: usize) -> (i64, i64) {
        (self.xs[ix], self.ys[iy])
    }

    pub fn node_state(&self, l: usize, iy: usize, ix: usize) -> ResourceState {
        self.node_state[self.node_index(l, iy, ix)]
    }

    /// State of the edge leaving `(l, iy, ix)` toward the next node in the
    /// layer's preferred direction.
    pub fn edge_state(&self, l: usize, iy: usize, ix: usize) -> ResourceState {
        self.edge_state[self.node_index(l, iy, ix)]
    }

    /// State of the via site between window layers `l` and `l + 1`.
    pub fn via_state(&self, l: usize, iy: usize, ix: usize) -> ResourceState {
        self.via_state[self.node_index(l, iy, ix)]
    }

    fn window_position(&self, tech_layer: usize) -> Option<usize> {
        self.layers.iter().position(|&l| l == tech_layer)
    }

    /// Fold one fixed shape into the blockage state. `owner` is the net the
    /// shape belongs to, or `None` for obstructions. Shapes on layers that
    /// neither sit in the window nor form a cut between window layers are
    /// ignored — they cannot collide with window routing.
    pub fn block_shape(&mut self, tech_layer: usize, rect: &Rect, owner: Option<u32>) {
        if let Some(l) = self.window_position(tech_layer) {
            self.block_on_layer(l, rect, owner);
        } else if let Some(l) = self.cuts.iter().position(|&c| c == tech_layer) {
            self.block_via_sites(l, rect, owner);
        }
    }

    fn block_on_layer(&mut self, l: usize, rect: &Rect, owner: Option<u32>) {
        let half = self.widths[l] / 2;
        // nodes: a wire centered on the node would touch or overlap the shape
        let keepout = rect.expand(half);
        for iy in self.track_range(&self.ys, keepout.y_lo, keepout.y_hi) {
            for ix in self.track_range(&self.xs, keepout.x_lo, keepout.x_hi) {
                let idx = self.node_index(l, iy, ix);
                self.node_state[idx].absorb(owner);
            }
        }
        // edges: the drawn segment between two adjacent nodes would overlap
        // the shape with positive area
        match self.directions[l] {
            Direction::Horizontal => {
                for iy in 0..self.ys.len() {
                    let y = self.ys[iy];
                    if y - half >= rect.y_hi || y + half <= rect.y_lo {
                        continue;
                    }
                    for ix in 0..self.xs.len().saturating_sub(1) {
                        let seg = Rect::new(self.xs[ix], y - half, self.xs[ix + 1], y + half);
                        if seg.overlaps(rect) {
                            let idx = self.node_index(l, iy, ix);
                            self.edge_state[idx].absorb(owner);
                        }
                    }
                }
            }
            Direction::Vertical => {
                for ix in 0..self.xs.len() {
                    let x = self.xs[ix];
                    if x - half >= rect.x_hi || x + half <= rect.x_lo {
                        continue;
                    }
                    for iy in 0..self.ys.len().saturating_sub(1) {
                        let seg = Rect::new(x - half, self.ys[iy], x + half, self.ys[iy + 1]);
                        if seg.overlaps(rect) {
                            let idx = self.node_index(l, iy, ix);
                            self.edge_state[idx].absorb(owner);
                        }
                    }
                }
            }
            Direction::None => {}
        }
    }

    fn block_via_sites(&mut self, l: usize, rect: &Rect, owner: Option<u32>) {
        let half = self.cut_widths[l] / 2;
        for iy in 0..self.ys.len() {
            for ix in 0..self.xs.len() {
                let (x, y) = self.node_point(iy, ix);
                let cut = Rect::new(x - half, y - half, x + half, y + half);
                if cut.overlaps(rect) {
                    let idx = self.node_index(l, iy, ix);
                    self.via_state[idx].absorb(owner);
                }
            }
        }
    }

    /// Indices of track coordinates falling inside the closed interval.
    fn track_range(&self, tracks: &[i64], lo: i64, hi: i64) -> std::ops::Range<usize> {
        let start = tracks.partition_point(|&c| c < lo);
        let end = tracks.partition_point(|&c| c <= hi);
        start..end
    }

    /// Track crossings whose point lies inside the closed rect. Crossing
    /// coordinates are shared by every window layer.
    pub fn nodes_in_rect(&self, rect: &Rect) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in self.track_range(&self.ys, rect.y_lo, rect.y_hi) {
            for ix in self.track_range(&self.xs, rect.x_lo, rect.x_hi) {
                out.push((iy, ix));
            }
        }
        out
    }
}
