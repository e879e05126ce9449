//! Double-patterning decomposition checks.
//!
//! On every layer with a DP proximity bound, touching shapes merge into
//! features and features closer than the bound must take different masks.
//! Two analysis modes: honor the pre-assigned masks (conflicts are
//! reportable as-is), or ignore them and ask only whether any two-mask
//! assignment exists (odd conflict cycles make it impossible).

use std::collections::{BTreeSet, VecDeque};

use crate::drc::index::RectIndex;
use crate::drc::{RuleKind, UnionFind, Violation};
use crate::geom::Rect;
use crate::library::TechRules;
use crate::route::{DesignShape, ShapeClass};
use crate::Diagnostic;

/// Double-patterning analysis mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DptMode {
    Off,
    /// Keep pre-assigned masks; propagate onto uncolored features and
    /// report every inconsistency.
    Precolored,
    /// Ignore pre-assigned masks; report only features that admit no
    /// two-mask assignment at all (odd conflict cycles).
    Recolor,
}

struct Cluster {
    bbox: Rect,
    members: Vec<usize>,
    /// Pre-assigned mask: None when every member is uncolored; `mixed`
    /// set when members disagree.
    color: Option<u8>,
    mixed: bool,
    nets: BTreeSet<String>,
}

struct Edge {
    a: usize,
    b: usize,
    region: Rect,
}

/// Run DP checks over the flat shape list. Straps are excluded: they are
/// deliberately oversized pattern stress, not cell-level features.
pub fn check_dp(
    shapes: &[DesignShape],
    tech: &TechRules,
    mode: DptMode,
    locality: Option<i64>,
) -> (Vec<Violation>, Vec<Diagnostic>) {
    let mut violations = Vec::new();
    let mut diagnostics = Vec::new();
    if mode == DptMode::Off {
        return (violations, diagnostics);
    }
    for (layer, rule) in tech.layers.iter().enumerate() {
        if rule.dp_spacing <= 0 {
            continue;
        }
        let items: Vec<&DesignShape> = shapes
            .iter()
            .filter(|s| s.layer == layer && s.class != ShapeClass::Strap)
            .collect();
        if items.is_empty() {
            continue;
        }
        let (clusters, edges) = build_graph(&items, rule.dp_spacing);
        let uncolored = clusters.iter().filter(|c| c.color.is_none()).count();
        match mode {
            DptMode::Precolored => {
                if uncolored > 0 {
                    diagnostics.push(Diagnostic::info(format!(
                        "layer {}: {} uncolored feature(s) assigned masks by propagation",
                        rule.name, uncolored
                    )));
                }
                check_precolored(layer, &clusters, &edges, locality, &mut violations);
            }
            DptMode::Recolor => {
                check_recolor(layer, &clusters, &edges, locality, &mut violations);
            }
            DptMode::Off => unreachable!(),
        }
    }
    (violations, diagnostics)
}

/// Merge touching shapes into features and connect features closer than
/// the DP bound. Clusters come out sorted by bounding box, so ids and
/// everything derived from them are deterministic.
fn build_graph(items: &[&DesignShape], dp_spacing: i64) -> (Vec<Cluster>, Vec<Edge>) {
    let rects: Vec<Rect> = items.iter().map(|s| s.rect).collect();
    let index = RectIndex::build(&rects, (dp_spacing * 4).max(256));
    let mut uf = UnionFind::new(items.len());
    for (i, rect) in rects.iter().enumerate() {
        for j in index.near(rect, 0) {
            let j = j as usize;
            if j > i && rect.touches(&rects[j]) {
                uf.union(i, j);
            }
        }
    }
    let mut grouped: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..items.len() {
        grouped.entry(uf.find(i)).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = grouped
        .into_values()
        .map(|members| {
            let bbox = members
                .iter()
                .map(|&i| rects[i])
                .reduce(|a, b| a.union(&b))
                .expect("clusters are non-empty");
            let masks: BTreeSet<u8> = members
                .iter()
                .map(|&i| items[i].mask)
                .filter(|&m| m != 0)
                .collect();
            let nets = members
                .iter()
                .filter_map(|&i| items[i].net.clone())
                .collect();
            Cluster {
                bbox,
                members,
                color: masks.iter().next().copied(),
                mixed: masks.len() > 1,
                nets,
            }
        })
        .collect();
    clusters.sort_by_key(|c| c.bbox);

    let bboxes: Vec<Rect> = clusters.iter().map(|c| c.bbox).collect();
    let cluster_index = RectIndex::build(&bboxes, (dp_spacing * 4).max(256));
    let mut edges = Vec::new();
    for (a, cluster) in clusters.iter().enumerate() {
        for b in cluster_index.near(&cluster.bbox, dp_spacing) {
            let b = b as usize;
            if b <= a {
                continue;
            }
            // distinct clusters never touch, so the minimum gap is positive
            let mut closest: Option<(i64, Rect)> = None;
            for &i in &cluster.members {
                for &j in &clusters[b].members {
                    let gap = rects[i].gap_sq(&rects[j]);
                    if closest.as_ref().map_or(true, |&(g, _)| gap < g) {
                        closest = Some((gap, rects[i].gap_region(&rects[j])));
                    }
                }
            }
            if let Some((gap, region)) = closest {
                if gap < dp_spacing * dp_spacing {
                    edges.push(Edge { a, b, region });
                }
            }
        }
    }
    (clusters, edges)
}

fn adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn cluster_nets(clusters: &[Cluster], ids: impl IntoIterator<Item = usize>) -> Vec<String> {
    let mut nets: Vec<String> = ids
        .into_iter()
        .flat_map(|i| clusters[i].nets.iter().cloned())
        .collect();
    nets.sort();
    nets.dedup();
    nets
}

fn check_precolored(
    layer: usize,
    clusters: &[Cluster],
    edges: &[Edge],
    locality: Option<i64>,
    violations: &mut Vec<Violation>,
) {
    let mut bad = vec![false; clusters.len()];
    for (i, cluster) in clusters.iter().enumerate() {
        if cluster.mixed {
            bad[i] = true;
            violations.push(Violation {
                rule: RuleKind::DpPrecolorConflict,
                layer: Some(layer),
                location: cluster.bbox,
                nets: cluster_nets(clusters, [i]),
                at_boundary: false,
                masters: Vec::new(),
                shared: false,
            });
        }
    }
    let live: Vec<Edge> = edges
        .iter()
        .filter(|e| !bad[e.a] && !bad[e.b])
        .map(|e| Edge { a: e.a, b: e.b, region: e.region })
        .collect();
    let adj = adjacency(clusters.len(), &live);
    // propagate fixed colors outward; first writer wins, disagreements
    // surface in the edge scan below
    let mut color: Vec<Option<u8>> = clusters.iter().map(|c| c.color).collect();
    let mut queue: VecDeque<usize> = (0..clusters.len())
        .filter(|&i| !bad[i] && color[i].is_some())
        .collect();
    while let Some(u) = queue.pop_front() {
        let next = if color[u] == Some(1) { 2 } else { 1 };
        for &v in &adj[u] {
            if color[v].is_none() {
                color[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    for e in &live {
        if color[e.a].is_some() && color[e.a] == color[e.b] {
            violations.push(Violation {
                rule: RuleKind::DpPrecolorConflict,
                layer: Some(layer),
                location: e.region,
                nets: cluster_nets(clusters, [e.a, e.b]),
                at_boundary: false,
                masters: Vec::new(),
                shared: false,
            });
        }
    }
    // components no color reached are pure-uncolored: they may still be
    // impossible to decompose
    let still_uncolored: Vec<usize> =
        (0..clusters.len()).filter(|&i| !bad[i] && color[i].is_none()).collect();
    odd_cycles(layer, clusters, &adj, &still_uncolored, locality, violations);
}

fn check_recolor(
    layer: usize,
    clusters: &[Cluster],
    edges: &[Edge],
    locality: Option<i64>,
    violations: &mut Vec<Violation>,
) {
    let adj = adjacency(clusters.len(), edges);
    let all: Vec<usize> = (0..clusters.len()).collect();
    odd_cycles(layer, clusters, &adj, &all, locality, violations);
}

/// Parity-BFS the given nodes and report one odd-cycle witness per
/// non-bipartite component, optionally dropping witnesses wider than the
/// locality radius.
fn odd_cycles(
    layer: usize,
    clusters: &[Cluster],
    adj: &[Vec<usize>],
    nodes: &[usize],
    locality: Option<i64>,
    violations: &mut Vec<Violation>,
) {
    let inside: BTreeSet<usize> = nodes.iter().copied().collect();
    let mut parity: Vec<Option<u8>> = vec![None; clusters.len()];
    let mut parent: Vec<usize> = (0..clusters.len()).collect();
    let mut depth: Vec<u32> = vec![0; clusters.len()];
    for &start in nodes {
        if parity[start].is_some() {
            continue;
        }
        parity[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        let mut witness: Option<Vec<usize>> = None;
        // drain the whole component even after a witness turns up:
        // stopping early would leave part of it uncolored, and a later
        // start would re-root it against stale parities
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !inside.contains(&v) {
                    continue;
                }
                match parity[v] {
                    None => {
                        parity[v] = Some(1 - parity[u].unwrap());
                        parent[v] = u;
                        depth[v] = depth[u] + 1;
                        queue.push_back(v);
                    }
                    Some(p) if Some(p) == parity[u] && witness.is_none() => {
                        witness = Some(cycle_through(&parent, &depth, u, v));
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(cycle) = witness {
            let bbox = cycle
                .iter()
                .map(|&i| clusters[i].bbox)
                .reduce(|a, b| a.union(&b))
                .expect("cycles are non-empty");
            if let Some(radius) = locality {
                if bbox.width().max(bbox.height()) > radius {
                    continue;
                }
            }
            violations.push(Violation {
                rule: RuleKind::DpOddCycle,
                layer: Some(layer),
                location: bbox,
                nets: cluster_nets(clusters, cycle),
                at_boundary: false,
                masters: Vec::new(),
                shared: false,
            });
        }
    }
}

/// The cycle closed by the non-tree edge `(u, v)`: both paths up to the
/// lowest common ancestor.
fn cycle_through(parent: &[usize], depth: &[u32], mut u: usize, mut v: usize) -> Vec<usize> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    while depth[u] > depth[v] {
        left.push(u);
        u = parent[u];
    }
    while depth[v] > depth[u] {
        right.push(v);
        v = parent[v];
    }
    while u != v {
        left.push(u);
        right.push(v);
        u = parent[u];
        v = parent[v];
    }
    left.push(u); // the common ancestor
    left.extend(right.into_iter().rev());
    left
}
