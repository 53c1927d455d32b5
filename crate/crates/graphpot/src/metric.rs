//! Pseudo metrics on graph windows.
//!
//! The workhorse is the path metric with per-edge lengths and shortest-path
//! closure (Dijkstra). Two canonical length choices:
//!
//! * `delta`: length `(Deg(x) ∨ Deg(y))^(-1/2)` per edge, intrinsic for
//!   every weighted graph;
//! * `natural`: unit lengths, intrinsic whenever `m >= n(x) = sum_y mu(x,y)`.
//!
//! Truncating the lengths at `r` yields a metric with jump size at most
//! `r`. On a window of an infinite family, shortest paths can only
//! overestimate the true distances (paths through the missing part of the
//! graph are not seen), so every certificate produced here is one-sided;
//! reports carry that caveat.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ScalarField, VertexId, WeightedGraph};

/// Max-heap entry negated into a min-heap on distance.
#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path pseudo metric with stored edge lengths.
pub struct PathMetric {
    base: usize,
    edge_len: Vec<f64>,
    dist_base: Vec<f64>,
    declared_jump: Option<f64>,
    cache: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

/// Explicit pairwise distances (no stored edge lengths, cannot be
/// truncated as a path metric).
pub struct DistanceTable {
    base: usize,
    table: Vec<Vec<f64>>,
}

/// A pseudo metric handle over one graph window.
pub enum Metric {
    Path(PathMetric),
    Table(DistanceTable),
}

fn dijkstra(g: &WeightedGraph<f64>, edge_len: &[f64], src: usize) -> Vec<f64> {
    // Adjacency with lengths: recover per-edge lengths through the
    // canonical edge list.
    let n = g.n_vertices();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (e, len) in g.edges().iter().zip(edge_len.iter()) {
        adj[e.u].push((e.v, *len));
        adj[e.v].push((e.u, *len));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: src });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, len) in &adj[node] {
            let nd = d + len;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapEntry { dist: nd, node: next });
            }
        }
    }
    dist
}

impl PathMetric {
    fn build(
        g: &WeightedGraph<f64>,
        base: VertexId,
        edge_len: Vec<f64>,
        declared_jump: Option<f64>,
    ) -> Result<Self> {
        let base = g.index(base)?;
        let dist_base = dijkstra(g, &edge_len, base);
        for (i, d) in dist_base.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::DisconnectedWindow(g.id(i)));
            }
        }
        Ok(PathMetric { base, edge_len, dist_base, declared_jump, cache: Mutex::new(HashMap::new()) })
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_len
    }

    fn distances_from(&self, g: &WeightedGraph<f64>, src: usize) -> Arc<Vec<f64>> {
        if src == self.base {
            return Arc::new(self.dist_base.clone());
        }
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(src)
            .or_insert_with(|| Arc::new(dijkstra(g, &self.edge_len, src)))
            .clone()
    }
}

impl Metric {
    /// The intrinsic path metric with edge lengths
    /// `(Deg(x) ∨ Deg(y))^(-1/2)`.
    pub fn delta(g: &WeightedGraph<f64>, base: VertexId) -> Result<Metric> {
        let deg: Vec<f64> = (0..g.n_vertices()).map(|i| g.weighted_degree(i)).collect();
        let lens: Vec<f64> = g
            .edges()
            .iter()
            .map(|e| deg[e.u].max(deg[e.v]).powf(-0.5))
            .collect();
        Ok(Metric::Path(PathMetric::build(g, base, lens, None)?))
    }

    /// The natural graph distance (unit edge lengths).
    pub fn natural(g: &WeightedGraph<f64>, base: VertexId) -> Result<Metric> {
        let lens = vec![1.0; g.edges().len()];
        Ok(Metric::Path(PathMetric::build(g, base, lens, None)?))
    }

    /// Path metric with caller-supplied edge lengths, aligned with
    /// [`WeightedGraph::edges`].
    pub fn from_edge_lengths(
        g: &WeightedGraph<f64>,
        base: VertexId,
        lens: Vec<f64>,
    ) -> Result<Metric> {
        if lens.len() != g.edges().len() {
            return Err(Error::FieldMismatch { field: lens.len(), graph: g.edges().len() });
        }
        Ok(Metric::Path(PathMetric::build(g, base, lens, None)?))
    }

    /// Explicit distance table (symmetric, zero diagonal).
    pub fn from_table(g: &WeightedGraph<f64>, base: VertexId, table: Vec<Vec<f64>>) -> Result<Metric> {
        let n = g.n_vertices();
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(Error::FieldMismatch { field: table.len(), graph: n });
        }
        for i in 0..n {
            if table[i][i] != 0.0 {
                return Err(Error::Parse { line: 0, msg: format!("nonzero diagonal at {}", g.id(i)) });
            }
            for j in 0..n {
                if (table[i][j] - table[j][i]).abs() > 0.0 {
                    return Err(Error::Parse {
                        line: 0,
                        msg: format!("asymmetric distances at {} {}", g.id(i), g.id(j)),
                    });
                }
            }
        }
        Ok(Metric::Table(DistanceTable { base: g.index(base)?, table }))
    }

    /// Truncation: per-edge lengths `min(len, r)`, shortest-path closure.
    /// The declared jump size of the result is exactly `r`.
    pub fn truncated(&self, g: &WeightedGraph<f64>, r: f64) -> Result<Metric> {
        match self {
            Metric::Path(p) => {
                if r < 0.0 {
                    return Err(Error::BadRadii { r, big_r: f64::INFINITY });
                }
                let lens: Vec<f64> = p.edge_len.iter().map(|&l| l.min(r)).collect();
                let base = g.id(p.base);
                Ok(Metric::Path(PathMetric::build(g, base, lens, Some(r))?))
            }
            Metric::Table(_) => Err(Error::NotAPathMetric),
        }
    }

    pub fn base(&self) -> usize {
        match self {
            Metric::Path(p) => p.base,
            Metric::Table(t) => t.base,
        }
    }

    /// Distance to the base point.
    pub fn to_base(&self, i: usize) -> f64 {
        match self {
            Metric::Path(p) => p.dist_base[i],
            Metric::Table(t) => t.table[t.base][i],
        }
    }

    pub fn distance(&self, g: &WeightedGraph<f64>, x: usize, y: usize) -> f64 {
        match self {
            Metric::Path(p) => {
                if x == y {
                    return 0.0;
                }
                if x == p.base || y == p.base {
                    return p.dist_base[if x == p.base { y } else { x }];
                }
                p.distances_from(g, x.min(y))[x.max(y)]
            }
            Metric::Table(t) => t.table[x][y],
        }
    }

    /// Distances from `x` to each of its graph neighbors, by an
    /// early-terminated Dijkstra (or table lookup).
    pub fn neighbor_distances(&self, g: &WeightedGraph<f64>, x: usize) -> Vec<(usize, f64)> {
        match self {
            Metric::Table(t) => g.neighbors(x).iter().map(|(j, _)| (*j, t.table[x][*j])).collect(),
            Metric::Path(p) => {
                let targets: Vec<usize> = g.neighbors(x).iter().map(|(j, _)| *j).collect();
                let mut remaining = targets.len();
                let n = g.n_vertices();
                let mut is_target = vec![false; n];
                for &t in &targets {
                    is_target[t] = true;
                }
                let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
                for (e, len) in g.edges().iter().zip(p.edge_len.iter()) {
                    adj[e.u].push((e.v, *len));
                    adj[e.v].push((e.u, *len));
                }
                let mut dist = vec![f64::INFINITY; n];
                let mut settled = vec![false; n];
                let mut heap = BinaryHeap::new();
                dist[x] = 0.0;
                heap.push(HeapEntry { dist: 0.0, node: x });
                while let Some(HeapEntry { dist: d, node }) = heap.pop() {
                    if settled[node] {
                        continue;
                    }
                    settled[node] = true;
                    if is_target[node] {
                        remaining -= 1;
                        if remaining == 0 {
                            break;
                        }
                    }
                    for &(next, len) in &adj[node] {
                        let nd = d + len;
                        if nd < dist[next] {
                            dist[next] = nd;
                            heap.push(HeapEntry { dist: nd, node: next });
                        }
                    }
                }
                targets.into_iter().map(|t| (t, dist[t])).collect()
            }
        }
    }

    /// Measured jump size: `max` over window edges of the metric distance
    /// between the endpoints.
    pub fn measured_jump(&self, g: &WeightedGraph<f64>) -> f64 {
        let mut s = 0.0f64;
        for x in 0..g.n_vertices() {
            for (y, d) in self.neighbor_distances(g, x) {
                if y > x {
                    s = s.max(d);
                }
            }
        }
        s
    }

    /// The truncation bound `r`, when this metric was built by truncation.
    pub fn declared_jump(&self) -> Option<f64> {
        match self {
            Metric::Path(p) => p.declared_jump,
            Metric::Table(_) => None,
        }
    }

    /// Jump size used in audits: the declared bound when present, the
    /// measured window value otherwise.
    pub fn jump_size(&self, g: &WeightedGraph<f64>) -> f64 {
        self.declared_jump().unwrap_or_else(|| self.measured_jump(g))
    }

    /// Closed ball `B_r = { x : ρ(x, o) <= r }`, sorted by index.
    /// Fails with `WindowTooSmall` when the ball touches the window rim:
    /// beyond the rim the true ball content is unknown.
    pub fn ball(&self, g: &WeightedGraph<f64>, r: f64) -> Result<Vec<usize>> {
        let members = self.ball_unchecked(g, r);
        for &i in &members {
            if !g.is_complete(i) {
                return Err(Error::WindowTooSmall(format!(
                    "ball of radius {r} reaches the window rim at vertex {}",
                    g.id(i)
                )));
            }
        }
        Ok(members)
    }

    /// Ball without the rim check (finite graphs, diagnostics).
    pub fn ball_unchecked(&self, g: &WeightedGraph<f64>, r: f64) -> Vec<usize> {
        (0..g.n_vertices()).filter(|&i| self.to_base(i) <= r).collect()
    }

    /// The cut-off field `η = 1 ∧ ((R - ρ(·,o)) / (R - r))_+`:
    /// identically 1 on `B_r`, 0 outside `B_R`, linear ramp between.
    pub fn cutoff(&self, g: &WeightedGraph<f64>, r: f64, big_r: f64) -> Result<ScalarField<f64>> {
        if !(0.0 < r && r < big_r) {
            return Err(Error::BadRadii { r, big_r });
        }
        let mut f = ScalarField::undefined(g);
        for i in 0..g.n_vertices() {
            let d = self.to_base(i);
            let v = ((big_r - d) / (big_r - r)).clamp(0.0, 1.0);
            f.set(i, v);
        }
        Ok(f)
    }

    /// Triangle-inequality spot check over sampled triples; returns the
    /// worst violation `d(x,z) - d(x,y) - d(y,z)` found (non-positive when
    /// the inequality holds).
    pub fn spot_check_triangle(
        &self,
        g: &WeightedGraph<f64>,
        samples: usize,
        seed: u64,
    ) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = g.n_vertices();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            let z = rng.gen_range(0..n);
            let v = self.distance(g, x, z) - self.distance(g, x, y) - self.distance(g, y, z);
            worst = worst.max(v);
        }
        worst
    }
}

/// Outcome of the intrinsic-metric verification
/// `sum_y mu(x,y) ρ²(x,y) <= m(x)` over a window.
#[derive(Clone, Debug, Serialize)]
pub struct IntrinsicReport {
    pub max_ratio: f64,
    pub offending: Vec<VertexId>,
    pub intrinsic: bool,
    pub checked: usize,
    pub tol: f64,
    /// Window distances only overestimate the infinite-graph metric, so a
    /// failed certificate on a window is not a disproof for the family.
    pub one_sided_note: &'static str,
}

/// Row mass `sum_y mu(x,y) ρ²(x,y)`; shared by the intrinsic check and the
/// minimal-measure construction so that equality cases agree bit for bit.
fn row_metric_mass(g: &WeightedGraph<f64>, metric: &Metric, x: usize) -> f64 {
    let mut acc = 0.0;
    let dists = metric.neighbor_distances(g, x);
    for ((j, w), (j2, d)) in g.neighbors(x).iter().zip(dists.iter()) {
        debug_assert_eq!(j, j2);
        acc += w * d * d;
    }
    acc
}

/// Verifies the intrinsic inequality on the given window vertices.
pub fn verify_intrinsic(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    window: &[usize],
    tol: f64,
) -> Result<IntrinsicReport> {
    let mut max_ratio = 0.0f64;
    let mut offending = Vec::new();
    for &x in window {
        if !g.is_complete(x) {
            return Err(Error::NeighborOutsideWindow { vertex: g.id(x), neighbor: None });
        }
        let mass = row_metric_mass(g, metric, x);
        let ratio = mass / g.measure(x);
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        if ratio > 1.0 + tol {
            offending.push(g.id(x));
        }
    }
    Ok(IntrinsicReport {
        max_ratio,
        intrinsic: offending.is_empty(),
        offending,
        checked: window.len(),
        tol,
        one_sided_note: "window distances are upper bounds for the infinite-graph metric",
    })
}

/// The minimal measure making `metric` intrinsic:
/// `m(x) = sum_y mu(x,y) ρ²(x,y)`. Errors when some window vertex has an
/// empty row (its minimal measure would be zero); the caller must override
/// those vertices.
pub fn minimal_measure(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    window: &[usize],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.n_vertices()];
    let mut zero_rows = Vec::new();
    for x in 0..g.n_vertices() {
        out[x] = row_metric_mass(g, metric, x);
    }
    for &x in window {
        if out[x] == 0.0 {
            zero_rows.push(g.id(x));
        }
    }
    if !zero_rows.is_empty() {
        return Err(Error::ZeroRow(zero_rows));
    }
    Ok(out)
}

/// Replaces the vertex measure wholesale (used with [`minimal_measure`]).
pub fn with_measure(g: &WeightedGraph<f64>, m: &[f64]) -> Result<WeightedGraph<f64>> {
    use crate::graph::GraphBuilder;
    if m.len() != g.n_vertices() {
        return Err(Error::FieldMismatch { field: m.len(), graph: g.n_vertices() });
    }
    let mut b = GraphBuilder::new();
    for i in 0..g.n_vertices() {
        b.vertex(g.id(i), m[i])?;
    }
    for e in g.edges() {
        b.edge(g.id(e.u), g.id(e.v), e.weight)?;
    }
    for i in 0..g.n_vertices() {
        if !g.is_complete(i) {
            b.incomplete(g.id(i));
        }
    }
    if let Some(tag) = g.window() {
        b.window(tag.clone());
    }
    b.build()
}

/// Per-ball weighted-degree bound, part of the compatibility certificate.
#[derive(Clone, Debug, Serialize)]
pub struct BallDegreeBound {
    pub radius: f64,
    pub vertices: usize,
    pub deg_bound: f64,
}

/// Compatibility certificate: finite jump size plus a finite degree bound
/// on every checked ball. Certified per radius list, never globally.
#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityReport {
    pub jump_size: f64,
    pub declared_jump: Option<f64>,
    pub balls: Vec<BallDegreeBound>,
    pub compatible: bool,
    pub certified_radii: Vec<f64>,
}

pub fn verify_compatible(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    radii: &[f64],
) -> Result<CompatibilityReport> {
    let jump = metric.measured_jump(g);
    let mut balls = Vec::new();
    for &r in radii {
        let ball = metric.ball(g, r)?;
        let deg_bound = ball
            .iter()
            .map(|&i| g.weighted_degree(i))
            .fold(0.0f64, f64::max);
        balls.push(BallDegreeBound { radius: r, vertices: ball.len(), deg_bound });
    }
    let compatible = jump.is_finite() && balls.iter().all(|b| b.deg_bound.is_finite());
    Ok(CompatibilityReport {
        jump_size: jump,
        declared_jump: metric.declared_jump(),
        balls,
        compatible,
        certified_radii: radii.to_vec(),
    })
}

/// Vertex-wise audit of the cut-off energy bound
/// `sum_y mu(x,y) |∇η|² <= m(x)/(R-r)²` with support inside
/// `B_{R+s} \ B_{r-s}`.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffCheck {
    pub r: f64,
    pub big_r: f64,
    pub jump: f64,
    pub max_residual: f64,
    pub violations: usize,
    pub checked: usize,
}

pub fn cutoff_bound_check(
    g: &WeightedGraph<f64>,
    metric: &Metric,
    r: f64,
    big_r: f64,
    tol: f64,
) -> Result<CutoffCheck> {
    let eta = metric.cutoff(g, r, big_r)?;
    let s = metric.jump_size(g);
    let mut max_residual = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut checked = 0;
    for x in 0..g.n_vertices() {
        if !g.is_complete(x) {
            continue;
        }
        checked += 1;
        let ex = *eta.get(g, x)?;
        let mut lhs = 0.0;
        for (y, w) in g.neighbors(x) {
            let ey = *eta.get(g, *y)?;
            lhs += w * (ex - ey) * (ex - ey);
        }
        let d = metric.to_base(x);
        let bound = if d > r - s && d <= big_r + s {
            g.measure(x) / ((big_r - r) * (big_r - r))
        } else {
            0.0
        };
        let residual = lhs - bound;
        max_residual = max_residual.max(residual);
        if residual > tol * (1.0 + bound) {
            violations += 1;
        }
    }
    Ok(CutoffCheck { r, big_r, jump: s, max_residual, violations, checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{finite_volume_example, Family};
    use crate::graph::GraphBuilder;
    use approx::assert_relative_eq;

    fn v(i: i64) -> VertexId {
        VertexId(i)
    }

    fn line(n: i64) -> WeightedGraph<f64> {
        Family::Line { mu: 1.0, m: 1.0 }.window(n as u32, 1)
    }

    #[test]
    fn delta_metric_on_the_integers() {
        // Deg = 2 everywhere, edge length 2^(-1/2), so δ(0,k) = k/sqrt(2).
        let g = line(12);
        let d = Metric::delta(&g, v(0)).unwrap();
        for k in 0..=12i64 {
            let i = g.index(v(k)).unwrap();
            assert_relative_eq!(d.to_base(i), k as f64 / (2.0f64).sqrt(), max_relative = 1e-12);
        }
        let report = verify_intrinsic(&g, &d, &g.complete_indices(), 1e-12).unwrap();
        assert!(report.intrinsic);
        // Equality case: the intrinsic inequality is tight on the line.
        assert_relative_eq!(report.max_ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_vertex_metric_is_zero() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        let g = b.build().unwrap();
        let d = Metric::delta(&g, v(0)).unwrap();
        assert_eq!(d.to_base(0), 0.0);
    }

    #[test]
    fn finite_volume_edge_distance_lower_bound() {
        // δ(x, x+1) >= C (|x|+1)^{-1}: minimize the ratio over the window.
        let (g, _) = finite_volume_example(60);
        let d = Metric::delta(&g, v(0)).unwrap();
        let mut c = f64::INFINITY;
        for x in -59i64..59 {
            let i = g.index(v(x)).unwrap();
            let j = g.index(v(x + 1)).unwrap();
            let dist = d.distance(&g, i, j);
            c = c.min(dist * (x.abs() + 1) as f64);
        }
        assert!(c > 0.25, "constant too small: {c}");
    }

    #[test]
    fn natural_metric_intrinsic_iff_measure_dominates() {
        let g = line(6);
        let nat = Metric::natural(&g, v(0)).unwrap();
        let report = verify_intrinsic(&g, &nat, &g.complete_indices(), 1e-12).unwrap();
        assert!(!report.intrinsic);
        assert_relative_eq!(report.max_ratio, 2.0);

        // m = row sum: Deg <= 1 and the natural metric is intrinsic.
        let m: Vec<f64> = (0..g.n_vertices()).map(|i| g.row_sum(i)).collect();
        let g2 = with_measure(&g, &m).unwrap();
        let nat2 = Metric::natural(&g2, v(0)).unwrap();
        let report = verify_intrinsic(&g2, &nat2, &g2.complete_indices(), 1e-12).unwrap();
        assert!(report.intrinsic);
        for i in g2.complete_indices() {
            assert!(g2.weighted_degree(i) <= 1.0);
        }
    }

    #[test]
    fn minimal_measure_examples() {
        // Single edge mu = 1 with ρ(x,y) = 2: m = 4 at both ends.
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 1.0).unwrap();
        let g = b.build().unwrap();
        let d = Metric::from_edge_lengths(&g, v(0), vec![2.0]).unwrap();
        let m = minimal_measure(&g, &d, &[0, 1]).unwrap();
        assert_eq!(m, vec![4.0, 4.0]);

        // The integers with the natural metric: m = 2.
        let g = line(5);
        let nat = Metric::natural(&g, v(0)).unwrap();
        let m = minimal_measure(&g, &nat, &g.complete_indices()).unwrap();
        for i in g.complete_indices() {
            assert_eq!(m[i], 2.0);
        }
        // And the rebuilt graph passes the intrinsic check with ratio 1.
        let g2 = with_measure(&g, &m).unwrap();
        let nat2 = Metric::natural(&g2, v(0)).unwrap();
        let report = verify_intrinsic(&g2, &nat2, &g2.complete_indices(), 1e-12).unwrap();
        assert!(report.intrinsic);
        assert!(report.max_ratio <= 1.0 && report.max_ratio >= 1.0 - 1e-12);
    }

    #[test]
    fn minimal_measure_rejects_isolated_vertices() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.vertex(v(2), 1.0).unwrap();
        b.edge(v(0), v(1), 1.0).unwrap();
        let g = b.build().unwrap();
        let d = Metric::natural(&g, v(0));
        // Disconnected window is already rejected at metric build time.
        assert!(matches!(d, Err(Error::DisconnectedWindow(_))));
        let table = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 5.0],
            vec![5.0, 5.0, 0.0],
        ];
        let t = Metric::from_table(&g, v(0), table).unwrap();
        match minimal_measure(&g, &t, &[0, 1, 2]) {
            Err(Error::ZeroRow(ids)) => assert_eq!(ids, vec![v(2)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_clips_lengths_and_jump() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.vertex(v(2), 1.0).unwrap();
        b.edge(v(0), v(1), 1.0).unwrap();
        b.edge(v(1), v(2), 1.0).unwrap();
        let g = b.build().unwrap();
        let d = Metric::from_edge_lengths(&g, v(0), vec![100.0, 1.0]).unwrap();
        assert_relative_eq!(d.to_base(2), 101.0);

        let t = d.truncated(&g, 3.0).unwrap();
        assert_relative_eq!(t.to_base(1), 3.0);
        assert_relative_eq!(t.to_base(2), 4.0);
        assert_eq!(t.declared_jump(), Some(3.0));
        assert!(t.measured_jump(&g) <= 3.0);

        // Small lengths are untouched.
        let same = d.truncated(&g, 1000.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(same.to_base(i), d.to_base(i));
        }

        // r = 0 collapses everything to the degenerate pseudo metric.
        let zero = d.truncated(&g, 0.0).unwrap();
        for i in 0..3 {
            assert_eq!(zero.to_base(i), 0.0);
        }

        // Distances never increase under truncation.
        for i in 0..3 {
            for j in 0..3 {
                assert!(t.distance(&g, i, j) <= d.distance(&g, i, j) + 1e-15);
            }
        }
    }

    #[test]
    fn table_metric_cannot_be_truncated() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 1.0).unwrap();
        let g = b.build().unwrap();
        let t = Metric::from_table(&g, v(0), vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(t.truncated(&g, 1.0), Err(Error::NotAPathMetric)));
    }

    #[test]
    fn balls_are_monotone_and_exhaust_the_window() {
        let g = line(10);
        let d = Metric::delta(&g, v(0)).unwrap();
        let ell = (2.0f64).powf(-0.5);
        // A radius strictly between 5 and 6 edge lengths: ball = {-5..5}.
        let b5 = d.ball(&g, 5.5 * ell).unwrap();
        let got: Vec<i64> = b5.iter().map(|&i| g.id(i).0).collect();
        assert_eq!(got, (-5..=5).collect::<Vec<_>>());

        let mut prev: Vec<usize> = Vec::new();
        for k in 0..10 {
            let b = d.ball_unchecked(&g, k as f64 * ell + 0.1);
            assert!(prev.iter().all(|x| b.contains(x)), "balls must be nested");
            prev = b;
        }
        // Union of balls covers the window.
        assert_eq!(d.ball_unchecked(&g, 1e9).len(), g.n_vertices());

        // B_0 contains the base point.
        let b0 = d.ball(&g, 0.0).unwrap();
        assert_eq!(b0, vec![g.index(v(0)).unwrap()]);
    }

    #[test]
    fn ball_touching_rim_is_an_error() {
        let g = line(4);
        let d = Metric::natural(&g, v(0)).unwrap();
        assert!(d.ball(&g, 3.0).is_ok());
        assert!(matches!(d.ball(&g, 5.0), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn cutoff_profile() {
        let g = line(20);
        let nat = Metric::natural(&g, v(0)).unwrap();
        let (r, big_r) = (4.0, 12.0);
        let eta = nat.cutoff(&g, r, big_r).unwrap();
        assert_eq!(*eta.at(&g, v(2)).unwrap(), 1.0);
        assert_eq!(*eta.at(&g, v(4)).unwrap(), 1.0);
        assert_eq!(*eta.at(&g, v(15)).unwrap(), 0.0);
        // Midpoint of the ramp.
        assert_relative_eq!(*eta.at(&g, v(8)).unwrap(), 0.5);
        assert!(matches!(nat.cutoff(&g, 5.0, 5.0), Err(Error::BadRadii { .. })));
        assert!(matches!(nat.cutoff(&g, 0.0, 5.0), Err(Error::BadRadii { .. })));
    }

    #[test]
    fn cutoff_energy_bound_on_finite_volume_graph() {
        let (g, _) = finite_volume_example(60);
        let d = Metric::delta(&g, v(0)).unwrap();
        let check = cutoff_bound_check(&g, &d, 0.4, 1.6, 1e-12).unwrap();
        assert_eq!(check.violations, 0, "max residual {}", check.max_residual);
    }

    #[test]
    fn compatibility_certificate_on_radii() {
        let (g, _) = finite_volume_example(60);
        let d = Metric::delta(&g, v(0)).unwrap();
        let report = verify_compatible(&g, &d, &[0.5, 1.0, 1.5, 2.0]).unwrap();
        assert!(report.compatible);
        assert!(report.jump_size.is_finite());
        assert_eq!(report.balls.len(), 4);
        for w in report.balls.windows(2) {
            assert!(w[0].vertices <= w[1].vertices);
            assert!(w[0].deg_bound <= w[1].deg_bound);
        }
    }

    #[test]
    fn triangle_spot_check_passes_on_path_metrics() {
        let g = line(8);
        let d = Metric::delta(&g, v(0)).unwrap();
        assert!(d.spot_check_triangle(&g, 500, 7) <= 1e-12);
    }
}
