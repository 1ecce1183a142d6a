//! Suspension flows over a base homeomorphism and the chain metric on the
//! suspension space.
//!
//! The flow moves a point up its fiber at unit speed and applies the base
//! map whenever it crosses the roof. Distances between suspension points
//! are measured through chains of horizontal segments (same fiber,
//! weighted interpolation of base metrics) and vertical segments (time
//! along an orbit); the chain infimum is bracketed from above by shortest
//! paths over a discretized chain graph and from below by certified
//! projection estimates.

use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::systems::{pullback_dist, BaseSystem, Point};

/// A point of the suspension space: base point plus fiber time in [0, roof).
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionPoint {
    pub base: Point,
    pub fiber: f64,
}

impl SuspensionPoint {
    pub fn new(base: Point, fiber: f64) -> Self {
        SuspensionPoint { base, fiber }
    }

    /// Canonical hashable key; fibers are dyadic so the bit pattern is stable.
    pub(crate) fn key(&self) -> (Point, u64) {
        (self.base.clone(), self.fiber.to_bits())
    }
}

/// Suspension of a base system under a constant roof.
#[derive(Clone, Debug)]
pub struct SuspensionFlow {
    pub base: BaseSystem,
    pub roof: f64,
}

/// Builds the suspension flow of `sys` under the constant roof `c`.
pub fn suspend(sys: BaseSystem, roof: f64) -> Result<SuspensionFlow> {
    if roof <= 0.0 || !roof.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "roof must be positive, got {roof}"
        )));
    }
    Ok(SuspensionFlow { base: sys, roof })
}

impl SuspensionFlow {
    pub fn name(&self) -> String {
        format!("susp_{}_roof{}", self.base.name(), self.roof)
    }

    pub fn point(&self, base: Point, fiber: f64) -> Result<SuspensionPoint> {
        if !(0.0..self.roof).contains(&fiber) {
            return Err(Error::InvalidParameter(format!(
                "fiber {fiber} outside [0, {})",
                self.roof
            )));
        }
        Ok(SuspensionPoint { base, fiber })
    }

    /// X^t: flow for time `t` of either sign, wrapping through the roof by
    /// applying the base map once per crossing.
    pub fn flow_at(&self, p: &SuspensionPoint, t: f64) -> Result<SuspensionPoint> {
        let total = p.fiber + t;
        let q = (total / self.roof).floor();
        let r = total - q * self.roof;
        let wraps = q as i64;
        let base = self.base.iterate(&p.base, wraps)?;
        // r lies in [0, roof) up to rounding of non-dyadic times.
        let fiber = if r >= self.roof { 0.0 } else { r.max(0.0) };
        Ok(SuspensionPoint { base, fiber })
    }

    /// Interpolation weight of a fiber value, in [0, 1).
    fn weight(&self, fiber: f64) -> f64 {
        fiber / self.roof
    }

    /// The horizontal metric on a fiber level: points with equal fiber t
    /// are compared by (1-t)d(y,z) + t d(phi y, phi z), with t normalized
    /// by the roof.
    pub fn fiber_metric(&self, a: &SuspensionPoint, b: &SuspensionPoint) -> Result<f64> {
        if a.fiber != b.fiber {
            return Err(Error::InvalidPair(format!(
                "fiber_metric needs equal fibers, got {} and {}",
                a.fiber, b.fiber
            )));
        }
        let u = self.weight(a.fiber);
        let d0 = self.base.dist(&a.base, &b.base);
        let fa = self.base.forward(&a.base)?;
        let fb = self.base.forward(&b.base)?;
        Ok((1.0 - u) * d0 + u * self.base.dist(&fa, &fb))
    }

    /// Like `fiber_metric` but saturating: when the window cannot support
    /// the forward application the unknowable term is replaced by its
    /// certified lower bound 0.
    fn fiber_metric_sat(&self, u: f64, y: &Point, z: &Point) -> f64 {
        let d0 = self.base.dist(y, z);
        match (self.base.forward(y), self.base.forward(z)) {
            (Ok(fy), Ok(fz)) => (1.0 - u) * d0 + u * self.base.dist(&fy, &fz),
            _ => (1.0 - u) * d0,
        }
    }

    /// Cheap distance on the suspension space: the minimum over a fixed
    /// family of explicit chains (meet at either fiber, or wrap through
    /// the roof in either direction). Total and symmetric; an upper bound
    /// of the chain infimum wherever the window suffices, saturating to
    /// certified lower estimates at the resolution edge.
    pub fn point_distance(&self, p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
        let (s, t) = (p.fiber, q.fiber);
        let gap = (s - t).abs();
        let us = self.weight(s);
        let ut = self.weight(t);
        // meet at fiber s or fiber t
        let mut best = gap + self.fiber_metric_sat(us, &p.base, &q.base);
        best = best.min(gap + self.fiber_metric_sat(ut, &p.base, &q.base));
        // p wraps up through the roof
        if let Ok(fp) = self.base.forward(&p.base) {
            let vertical = (self.roof - s) + t;
            let horiz = self
                .base
                .dist(&fp, &q.base)
                .min(self.fiber_metric_sat(ut, &fp, &q.base));
            best = best.min(vertical + horiz);
        }
        // q wraps up through the roof
        if let Ok(fq) = self.base.forward(&q.base) {
            let vertical = (self.roof - t) + s;
            let horiz = self
                .base
                .dist(&fq, &p.base)
                .min(self.fiber_metric_sat(us, &fq, &p.base));
            best = best.min(vertical + horiz);
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Horizontal,
    Vertical,
}

/// A finite chain of suspension points; segment i joins nodes i and i+1.
#[derive(Clone, Debug)]
pub struct Chain {
    pub nodes: Vec<SuspensionPoint>,
    pub segments: Vec<SegmentKind>,
}

impl SuspensionFlow {
    /// Minimal |s| with X^s carrying `a` to `b` along the orbit, scanning
    /// wrap counts up to `max_wraps`. None when no observable time works.
    fn vertical_time(&self, a: &SuspensionPoint, b: &SuspensionPoint, max_wraps: i64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for q in -max_wraps..=max_wraps {
            let img = match self.base.iterate(&a.base, q) {
                Ok(p) => p,
                Err(_) => continue,
            };
            if self.base.same_within_resolution(&img, &b.base) {
                let s = q as f64 * self.roof + (b.fiber - a.fiber);
                best = Some(best.map_or(s.abs(), |cur: f64| cur.min(s.abs())));
            }
        }
        best
    }

    /// Sum of segment lengths. Horizontal segments need equal fibers and
    /// use the fiber metric; vertical segments use the shortest flow time
    /// between the nodes, ignoring orbit direction. A vertical segment
    /// between distinct nodes on the same fiber falls back to the fiber
    /// metric, which is always shorter than a full turn.
    pub fn chain_length(&self, chain: &Chain, max_wraps: i64) -> Result<f64> {
        if chain.nodes.len() != chain.segments.len() + 1 || chain.nodes.is_empty() {
            return Err(Error::InvalidChain(
                "chain needs one more node than segments".into(),
            ));
        }
        let mut total = 0.0;
        for (i, kind) in chain.segments.iter().enumerate() {
            let a = &chain.nodes[i];
            let b = &chain.nodes[i + 1];
            match kind {
                SegmentKind::Horizontal => {
                    total += self.fiber_metric(a, b)?;
                }
                SegmentKind::Vertical => {
                    let same_node = a.fiber == b.fiber
                        && self.base.same_within_resolution(&a.base, &b.base);
                    if same_node {
                        continue;
                    }
                    let time = self.vertical_time(a, b, max_wraps).ok_or_else(|| {
                        Error::InvalidChain("vertical segment nodes not on one orbit".into())
                    })?;
                    if a.fiber == b.fiber {
                        total += self.fiber_metric(a, b)?;
                    } else {
                        total += time;
                    }
                }
            }
        }
        Ok(total)
    }
}

/// Budget for the chain-graph bracketing of the chain infimum.
#[derive(Clone, Copy, Debug)]
pub struct BwBudget {
    /// Chains of at most this many segments.
    pub max_segments: usize,
    /// Fiber grid resolution: levels at multiples of 1/grid.
    pub grid: u32,
    /// Vertical segments scan orbit times up to this many roof crossings.
    pub max_wraps: i64,
}

impl Default for BwBudget {
    fn default() -> Self {
        BwBudget {
            max_segments: 8,
            grid: 8,
            max_wraps: 4,
        }
    }
}

/// Bracketing interval for the chain infimum.
#[derive(Clone, Copy, Debug)]
pub struct BwBracket {
    pub lower: f64,
    pub upper: f64,
    /// Set when one extra segment would still improve the upper bound.
    pub inexact: bool,
}

pub(crate) fn fiber_levels(roof: f64, grid: u32) -> Result<usize> {
    let levels = roof * grid as f64;
    if levels.fract() != 0.0 || levels < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "fiber grid {grid} does not divide roof {roof}"
        )));
    }
    Ok(levels as usize)
}

type NodeKey = (Point, u64);

struct ChainGraph<'a> {
    flow: &'a SuspensionFlow,
    net: Vec<Point>,
    step: f64,
    levels: usize,
    budget: BwBudget,
}

impl<'a> ChainGraph<'a> {
    fn new(flow: &'a SuspensionFlow, budget: BwBudget) -> Result<Self> {
        let levels = fiber_levels(flow.roof, budget.grid)?;
        Ok(ChainGraph {
            flow,
            net: flow.base.net(),
            step: 1.0 / budget.grid as f64,
            levels,
            budget,
        })
    }

    fn snap(&self, p: &SuspensionPoint) -> Result<SuspensionPoint> {
        let l = p.fiber / self.step;
        if l.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fiber {} not on the 1/{} grid",
                p.fiber, self.budget.grid
            )));
        }
        Ok(p.clone())
    }

    /// Single-segment moves from `p`: all horizontal jumps on its fiber
    /// level and all vertical slides to grid fibers within the wrap budget.
    fn segment_edges(&self, p: &SuspensionPoint) -> Vec<(SuspensionPoint, f64)> {
        let mut out = Vec::new();
        let u = self.flow.weight(p.fiber);
        for z in &self.net {
            if self.flow.base.same_within_resolution(z, &p.base) {
                continue;
            }
            // horizontal needs the forward application on both sides
            let fy = self.flow.base.forward(&p.base);
            let fz = self.flow.base.forward(z);
            if let (Ok(fy), Ok(fz)) = (fy, fz) {
                let d0 = self.flow.base.dist(&p.base, z);
                let w = (1.0 - u) * d0 + u * self.flow.base.dist(&fy, &fz);
                out.push((SuspensionPoint::new(z.clone(), p.fiber), w));
            }
        }
        for q in -self.budget.max_wraps..=self.budget.max_wraps {
            let img = match self.flow.base.iterate(&p.base, q) {
                Ok(i) => i,
                Err(_) => continue,
            };
            for l in 0..self.levels {
                let fiber = l as f64 * self.step;
                let s = q as f64 * self.flow.roof + (fiber - p.fiber);
                if s == 0.0 {
                    continue;
                }
                out.push((SuspensionPoint::new(img.clone(), fiber), s.abs()));
            }
        }
        out
    }
}

/// Bracket of the chain infimum between two grid points of the suspension.
///
/// The upper bound is the exact minimum over chains of at most
/// `budget.max_segments` segments whose nodes live on the net-times-grid
/// graph; the lower bound is certified beneath every chain (fiber travel
/// around the circle, and base distances collapsed along orbits).
pub fn bw_distance(
    flow: &SuspensionFlow,
    p: &SuspensionPoint,
    q: &SuspensionPoint,
    budget: BwBudget,
) -> Result<BwBracket> {
    let graph = ChainGraph::new(flow, budget)?;
    let p = graph.snap(p)?;
    let q = graph.snap(q)?;
    if p.fiber == q.fiber && flow.base.same_within_resolution(&p.base, &q.base) {
        return Ok(BwBracket {
            lower: 0.0,
            upper: 0.0,
            inexact: false,
        });
    }
    // Layered relaxation: dist[k] = best over chains of <= k segments.
    let target = q.key();
    let mut dist: HashMap<NodeKey, f64> = HashMap::new();
    dist.insert(p.key(), 0.0);
    let mut frontier: Vec<SuspensionPoint> = vec![p.clone()];
    let mut best_at: Vec<f64> = vec![f64::INFINITY];
    for _layer in 0..=budget.max_segments {
        let mut improved: Vec<SuspensionPoint> = Vec::new();
        for node in &frontier {
            let base_cost = dist[&node.key()];
            for (next, w) in graph.segment_edges(node) {
                let cand = base_cost + w;
                let entry = dist.entry(next.key()).or_insert(f64::INFINITY);
                if cand < *entry {
                    *entry = cand;
                    improved.push(next);
                }
            }
        }
        frontier = improved;
        best_at.push(dist.get(&target).copied().unwrap_or(f64::INFINITY));
        if frontier.is_empty() {
            break;
        }
    }
    let upper = best_at
        .get(budget.max_segments.min(best_at.len() - 1))
        .copied()
        .unwrap_or(f64::INFINITY);
    let beyond = best_at.last().copied().unwrap_or(upper);
    let inexact = beyond < upper;
    let lower = bw_lower_bound(flow, &p, &q);
    Ok(BwBracket {
        lower: lower.min(upper),
        upper,
        inexact,
    })
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    node: SuspensionPoint,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on cost, ties by node key for determinism
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.key().cmp(&self.node.key()))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Unbounded-segment upper bound: plain Dijkstra over the chain graph.
/// On resolution-free bases this is a true metric on grid nodes
/// (symmetric, triangle inequality exact).
pub fn bw_upper_unbounded(
    flow: &SuspensionFlow,
    p: &SuspensionPoint,
    q: &SuspensionPoint,
    grid: u32,
) -> Result<f64> {
    let budget = BwBudget {
        max_segments: 0,
        grid,
        max_wraps: 4,
    };
    let graph = ChainGraph::new(flow, budget)?;
    let p = graph.snap(p)?;
    let q = graph.snap(q)?;
    let target = q.key();
    let mut settled: HashMap<NodeKey, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        cost: 0.0,
        node: p,
    });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        let key = node.key();
        if settled.contains_key(&key) {
            continue;
        }
        if key == target {
            return Ok(cost);
        }
        settled.insert(key, cost);
        for (next, w) in graph.segment_edges(&node) {
            if !settled.contains_key(&next.key()) {
                heap.push(HeapEntry {
                    cost: cost + w,
                    node: next,
                });
            }
        }
    }
    Err(Error::DomainError(
        "target unreachable in the chain graph".into(),
    ))
}

/// All-pairs chain-graph distances for a resolution-free base (explicit or
/// odometer), via Floyd-Warshall over the closed node set net x grid.
/// Returns the node list in canonical order and the distance matrix.
pub fn all_pairs_bw(
    flow: &SuspensionFlow,
    grid: u32,
) -> Result<(Vec<SuspensionPoint>, Vec<Vec<f64>>)> {
    if flow.base.is_symbolic() {
        return Err(Error::UnsupportedSystem(
            "all-pairs table needs a resolution-free base".into(),
        ));
    }
    let budget = BwBudget {
        max_segments: 0,
        grid,
        max_wraps: 4,
    };
    let graph = ChainGraph::new(flow, budget)?;
    let mut nodes = Vec::new();
    for y in &graph.net {
        for l in 0..graph.levels {
            nodes.push(SuspensionPoint::new(y.clone(), l as f64 * graph.step));
        }
    }
    let n = nodes.len();
    let index: HashMap<NodeKey, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (p.key(), i))
        .collect();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (i, node) in nodes.iter().enumerate() {
        dist[i][i] = 0.0;
        for (next, w) in graph.segment_edges(node) {
            let j = index[&next.key()];
            if w < dist[i][j] {
                dist[i][j] = w;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if dist[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    Ok((nodes, dist))
}

fn bw_lower_bound(flow: &SuspensionFlow, p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
    // Any chain's vertical segments move the fiber around the circle of
    // circumference roof.
    let gap = (p.fiber - q.fiber).abs();
    let circle = gap.min(flow.roof - gap);
    // Horizontal segments cost at least the pullback distance of their
    // endpoints and vertical segments slide base points along orbits for
    // free, so the orbit-collapsed pullback shortest path undercuts every
    // chain.
    let collapsed = collapsed_base_bound(flow, &p.base, &q.base);
    circle.max(collapsed)
}

fn collapsed_base_bound(flow: &SuspensionFlow, y: &Point, z: &Point) -> f64 {
    let net = flow.base.net();
    let n = net.len();
    let idx_of = |p: &Point| net.iter().position(|q| flow.base.same_within_resolution(q, p));
    let (si, ti) = match (idx_of(y), idx_of(z)) {
        (Some(a), Some(b)) => (a, b),
        _ => return 0.0,
    };
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        w[i][i] = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            // Without the forward application nothing below the pullback
            // value is certifiable, so the edge saturates to 0.
            let rho = pullback_dist(&flow.base, &net[i], &net[j]).unwrap_or(0.0);
            w[i][j] = w[i][j].min(rho);
        }
        // collapse along the orbit, both directions
        for img in [flow.base.forward(&net[i]), flow.base.backward(&net[i])] {
            if let Ok(img) = img {
                for (j, z) in net.iter().enumerate() {
                    if flow.base.same_within_resolution(z, &img) {
                        w[i][j] = 0.0;
                        w[j][i] = 0.0;
                    }
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = w[i][k] + w[k][j];
                if through < w[i][j] {
                    w[i][j] = through;
                }
            }
        }
    }
    w[si][ti]
}
