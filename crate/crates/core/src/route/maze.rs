//! Grid maze router with negotiated congestion.
//!
//! Each net is routed by Dijkstra over the track graph; overlapping nets
//! are then repaired iteratively: contested nodes accrue history cost and
//! the nets crossing them are ripped up and rerouted under a growing
//! present-sharing penalty. Repair is monotone — an iteration that would
//! worsen the open-plus-overflow metric is rolled back and negotiation
//! stops. A final arbitration pass gives every contested node to the
//! earliest-ordered net and hard-reroutes the losers; nets that still fail
//! are reported unrouted.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::geom::Rect;
use crate::library::Direction;
use crate::route::grid::RouteGrid;

/// Congestion penalty per co-user of a node in negotiation pass `i`
/// is `PRESENT_BASE * (i + 1)`.
const PRESENT_BASE: u64 = 10;
/// History added to every contested node per repair iteration.
const HISTORY_INCREMENT: u64 = 5;

/// Entry through a cut from a pin below the routing window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessVia {
    /// Tech index of the cut layer.
    pub cut_layer: usize,
    /// The drawn cut square, centered on the access node.
    pub cut: Rect,
    /// The pin rectangle the cut lands on.
    pub pin_rect: Rect,
}

/// One way to reach a terminal from the track graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessPoint {
    pub node: usize,
    /// `Some` when the entry costs an access via (pin below the window).
    pub via: Option<AccessVia>,
}

/// A terminal of a routable net together with its usable entry points.
#[derive(Clone, Debug)]
pub struct TerminalAccess {
    /// Index into the owning net's terminal list.
    pub terminal_index: usize,
    pub points: Vec<AccessPoint>,
}

/// A net prepared for maze routing. `id` matches the fixed-blockage net
/// ids marked on the grid; `order_rank` is the net's position in the
/// routing order and doubles as its arbitration priority.
#[derive(Clone, Debug)]
pub struct RoutableNet {
    pub id: u32,
    pub name: String,
    pub order_rank: usize,
    pub terminals: Vec<TerminalAccess>,
}

/// The committed route of one net on the grid.
#[derive(Clone, Debug, Default)]
pub struct NetRoute {
    pub nodes: BTreeSet<usize>,
    /// Track edges as `(lower, higher)` node-index pairs.
    pub edges: BTreeSet<(usize, usize)>,
    /// Vias between window layers, keyed by the lower node index.
    pub vias: BTreeSet<usize>,
    /// Chosen access per connected terminal.
    pub accesses: Vec<(usize, AccessPoint)>,
}

/// Outcome of negotiation over one testcell.
pub struct NegotiationResult {
    /// Per net, same order as the input slice.
    pub routes: Vec<Option<NetRoute>>,
    /// Accepted value of the open-plus-overflow metric after each pass;
    /// non-increasing by construction.
    pub iteration_metrics: Vec<u64>,
}

struct Maze<'a> {
    grid: &'a RouteGrid,
    nets: &'a [RoutableNet],
    via_cost: u64,
    users: Vec<Vec<u32>>,
    history: Vec<u64>,
    routes: Vec<Option<NetRoute>>,
}

impl<'a> Maze<'a> {
    fn new(grid: &'a RouteGrid, nets: &'a [RoutableNet], via_cost: u64) -> Maze<'a> {
        Maze {
            grid,
            nets,
            via_cost,
            users: vec![Vec::new(); grid.node_count()],
            history: vec![0; grid.node_count()],
            routes: vec![None; nets.len()],
        }
    }

    fn node_cost(&self, node: usize, net: u32, present: u64, hard: bool) -> Option<u64> {
        let (l, iy, ix) = self.grid.node_at(node);
        if !self.grid.node_state(l, iy, ix).passable(net) {
            return None;
        }
        let others = self.users[node].iter().filter(|&&u| u != net).count() as u64;
        if hard && others > 0 {
            return None;
        }
        Some(1 + self.history[node] + present * others)
    }

    /// Dijkstra from a set of seeded sources to the cheapest target,
    /// including per-target entry surcharges (access vias). Returns the
    /// node path source→target and the target node.
    fn search(
        &self,
        net: u32,
        sources: &[(usize, u64)],
        targets: &BTreeMap<usize, u64>,
        present: u64,
        hard: bool,
    ) -> Option<(Vec<usize>, usize)> {
        const UNSEEN: u64 = u64::MAX;
        let n = self.grid.node_count();
        let mut dist = vec![UNSEEN; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
        for &(node, extra) in sources {
            let Some(cost) = self.node_cost(node, net, present, hard) else {
                continue;
            };
            let d = extra + cost;
            if d < dist[node] {
                dist[node] = d;
                parent[node] = node;
                heap.push(Reverse((d, node)));
            }
        }
        let mut best: Option<(u64, usize)> = None;
        while let Some(Reverse((d, node))) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            // no later settle can beat the best finished target
            if let Some((bd, _)) = best {
                if d >= bd {
                    break;
                }
            }
            if let Some(&extra) = targets.get(&node) {
                let total = d + extra;
                if best.map_or(true, |(bd, bn)| (total, node) < (bd, bn)) {
                    best = Some((total, node));
                }
            }
            let (l, iy, ix) = self.grid.node_at(node);
            let mut moves: [Option<(usize, bool)>; 4] = [None; 4];
            match self.grid.directions[l] {
                Direction::Horizontal => {
                    if ix > 0 && self.grid.edge_state(l, iy, ix - 1).passable(net) {
                        moves[0] = Some((self.grid.node_index(l, iy, ix - 1), false));
                    }
                    if ix + 1 < self.grid.nx() && self.grid.edge_state(l, iy, ix).passable(net) {
                        moves[1] = Some((self.grid.node_index(l, iy, ix + 1), false));
                    }
                }
                Direction::Vertical => {
                    if iy > 0 && self.grid.edge_state(l, iy - 1, ix).passable(net) {
                        moves[0] = Some((self.grid.node_index(l, iy - 1, ix), false));
                    }
                    if iy + 1 < self.grid.ny() && self.grid.edge_state(l, iy, ix).passable(net) {
                        moves[1] = Some((self.grid.node_index(l, iy + 1, ix), false));
                    }
                }
                Direction::None => {}
            }
            if l > 0 && self.grid.via_state(l - 1, iy, ix).passable(net) {
                moves[2] = Some((self.grid.node_index(l - 1, iy, ix), true));
            }
            if l + 1 < self.grid.num_layers() && self.grid.via_state(l, iy, ix).passable(net) {
                moves[3] = Some((self.grid.node_index(l + 1, iy, ix), true));
            }
            for (to, is_via) in moves.into_iter().flatten() {
                let Some(cost) = self.node_cost(to, net, present, hard) else {
                    continue;
                };
                let step = d + cost + if is_via { self.via_cost } else { 0 };
                if step < dist[to] {
                    dist[to] = step;
                    parent[to] = node;
                    heap.push(Reverse((step, to)));
                }
            }
        }
        let (_, target) = best?;
        let mut path = vec![target];
        let mut cur = target;
        while parent[cur] != cur {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Some((path, target))
    }

    /// Route one net terminal-by-terminal onto its growing tree. On any
    /// failure the net's partial usage is rolled back and `false` is
    /// returned.
    fn route_net(&mut self, idx: usize, present: u64, hard: bool) -> bool {
        debug_assert!(self.routes[idx].is_none());
        let net = &self.nets[idx];
        let mut route = NetRoute::default();
        let mut ok = true;
        for (k, term) in net.terminals.iter().enumerate() {
            if k == 0 {
                continue; // the first terminal seeds the tree lazily below
            }
            let sources: Vec<(usize, u64)> = if route.nodes.is_empty() {
                net.terminals[0]
                    .points
                    .iter()
                    .map(|p| (p.node, if p.via.is_some() { self.via_cost } else { 0 }))
                    .collect()
            } else {
                route.nodes.iter().map(|&n| (n, 0)).collect()
            };
            let mut targets: BTreeMap<usize, u64> = BTreeMap::new();
            for p in &term.points {
                let extra = if p.via.is_some() { self.via_cost } else { 0 };
                let slot = targets.entry(p.node).or_insert(extra);
                *slot = (*slot).min(extra);
            }
            let Some((path, target)) = self.search(net.id, &sources, &targets, present, hard)
            else {
                ok = false;
                break;
            };
            if route.nodes.is_empty() {
                let first = path[0];
                if let Some(access) = net.terminals[0]
                    .points
                    .iter()
                    .filter(|p| p.node == first)
                    .min_by_key(|p| u8::from(p.via.is_some()))
                {
                    route.accesses.push((net.terminals[0].terminal_index, access.clone()));
                }
            }
            let target_access = term
                .points
                .iter()
                .filter(|p| p.node == target)
                .min_by_key(|p| u8::from(p.via.is_some()))
                .expect("target came from this terminal's access set");
            route.accesses.push((term.terminal_index, target_access.clone()));
            for pair in path.windows(2) {
                let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                let (la, ..) = self.grid.node_at(a);
                let (lb, ..) = self.grid.node_at(b);
                if la == lb {
                    route.edges.insert((a, b));
                } else {
                    route.vias.insert(a);
                }
            }
            for &node in &path {
                if route.nodes.insert(node) {
                    self.users[node].push(net.id);
                }
            }
        }
        if !ok {
            for &node in &route.nodes {
                self.users[node].retain(|&u| u != net.id);
            }
            return false;
        }
        self.routes[idx] = Some(route);
        true
    }

    fn rip(&mut self, idx: usize) {
        if let Some(route) = self.routes[idx].take() {
            let id = self.nets[idx].id;
            for &node in &route.nodes {
                self.users[node].retain(|&u| u != id);
            }
        }
    }

    fn contested(&self) -> Vec<usize> {
        (0..self.users.len()).filter(|&n| self.users[n].len() >= 2).collect()
    }

    fn metric(&self) -> u64 {
        let opens = self.routes.iter().filter(|r| r.is_none()).count() as u64;
        let overflow: u64 = self
            .users
            .iter()
            .map(|u| (u.len() as u64).saturating_sub(1))
            .sum();
        opens + overflow
    }
}

/// Route every net and repair congestion. Nets must arrive in routing
/// order (the order doubles as arbitration priority), each with at least
/// two terminals carrying at least one access point.
pub fn negotiate(
    grid: &RouteGrid,
    nets: &[RoutableNet],
    via_cost: u64,
    max_ripup: u32,
) -> NegotiationResult {
    let mut maze = Maze::new(grid, nets, via_cost);
    for idx in 0..nets.len() {
        let _ = maze.route_net(idx, PRESENT_BASE, false);
    }
    let mut metrics = vec![maze.metric()];
    for iteration in 1..=max_ripup {
        let contested = maze.contested();
        if contested.is_empty() {
            break;
        }
        for &node in &contested {
            maze.history[node] += HISTORY_INCREMENT;
        }
        let mut ripped: BTreeSet<usize> = (0..nets.len())
            .filter(|&i| maze.routes[i].is_none())
            .collect();
        for (idx, route) in maze.routes.iter().enumerate() {
            if let Some(route) = route {
                if contested.iter().any(|n| route.nodes.contains(n)) {
                    ripped.insert(idx);
                }
            }
        }
        let snapshot = (maze.users.clone(), maze.routes.clone());
        for &idx in &ripped {
            maze.rip(idx);
        }
        let present = PRESENT_BASE * (iteration as u64 + 1);
        for idx in 0..nets.len() {
            if ripped.contains(&idx) {
                let _ = maze.route_net(idx, present, false);
            }
        }
        let m = maze.metric();
        if m > *metrics.last().expect("seeded above") {
            (maze.users, maze.routes) = snapshot;
            break;
        }
        metrics.push(m);
    }
    // arbitration: every contested node goes to its earliest-ordered user,
    // losers reroute around committed wiring or fail
    let rank_of = |id: u32| -> usize {
        nets.iter().find(|n| n.id == id).map(|n| n.order_rank).unwrap_or(usize::MAX)
    };
    let mut losers: BTreeSet<usize> = BTreeSet::new();
    for node in maze.contested() {
        let winner = *maze.users[node]
            .iter()
            .min_by_key(|&&id| rank_of(id))
            .expect("contested nodes have users");
        for (idx, net) in nets.iter().enumerate() {
            if net.id != winner && maze.users[node].contains(&net.id) {
                losers.insert(idx);
            }
        }
    }
    for &idx in &losers {
        maze.rip(idx);
    }
    for &idx in &losers {
        let _ = maze.route_net(idx, 0, true);
    }
    NegotiationResult {
        routes: maze.routes,
        iteration_metrics: metrics,
    }
}
