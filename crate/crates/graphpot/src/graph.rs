//! Weighted graphs, scalar fields, and the formal Laplacian.
//!
//! A weighted graph is a triple: a countable vertex set carrying a positive
//! measure `m`, and symmetric non-negative edge weights `mu` with summable
//! rows. Infinite graphs enter only as finite windows produced by a
//! generator; every vertex records whether its full neighbor row is present
//! (`complete`), and operations that read neighbors refuse to run where it
//! is not.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weight::Weight;

/// External vertex identifier. Integer ids keep generated families
/// (lines, trees, gluings) readable in files and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct VertexId(pub i64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Marks a graph as a finite window into a generated infinite family.
#[derive(Clone, Debug, Serialize)]
pub struct WindowTag {
    /// Generator name plus parameters, for reports.
    pub source: String,
    /// Trusted window radius (hop count from the generator root).
    pub radius: u32,
    /// Extra hop layers generated beyond the trusted radius.
    pub halo: u32,
}

/// Undirected edge in canonical order: `id(u) < id(v)`.
#[derive(Clone, Debug)]
pub struct Edge<W> {
    pub u: usize,
    pub v: usize,
    pub weight: W,
}

/// A weighted graph `(X, mu, m)`, possibly a window of an infinite family.
///
/// Immutable after construction; all operations are pure.
#[derive(Clone, Debug)]
pub struct WeightedGraph<W> {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    measure: Vec<W>,
    adj: Vec<Vec<(usize, W)>>,
    edges: Vec<Edge<W>>,
    complete: Vec<bool>,
    window: Option<WindowTag>,
}

/// Builder enforcing the graph invariants: symmetric weights by
/// construction, zero diagonal, positive measure, no duplicates.
pub struct GraphBuilder<W> {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    measure: Vec<W>,
    edges: Vec<(usize, usize, W)>,
    edge_seen: HashMap<(usize, usize), ()>,
    incomplete: Vec<VertexId>,
    window: Option<WindowTag>,
}

impl<W: Weight> Default for GraphBuilder<W> {
    fn default() -> Self {
        Self::new()
    }
}

impl<W: Weight> GraphBuilder<W> {
    pub fn new() -> Self {
        GraphBuilder {
            ids: Vec::new(),
            index: HashMap::new(),
            measure: Vec::new(),
            edges: Vec::new(),
            edge_seen: HashMap::new(),
            incomplete: Vec::new(),
            window: None,
        }
    }

    pub fn vertex(&mut self, id: VertexId, m: W) -> Result<&mut Self> {
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateVertex(id));
        }
        if m <= W::zero() {
            return Err(Error::NonPositiveMeasure(id));
        }
        self.index.insert(id, self.ids.len());
        self.ids.push(id);
        self.measure.push(m);
        Ok(self)
    }

    /// Declares the symmetric weight `mu(a,b) = mu(b,a)`. A zero weight
    /// means "no edge" and is skipped.
    pub fn edge(&mut self, a: VertexId, b: VertexId, mu: W) -> Result<&mut Self> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if mu < W::zero() {
            return Err(Error::NegativeEdgeWeight(a, b));
        }
        if mu.is_zero() {
            return Ok(self);
        }
        let (a, b) = if a.0 < b.0 { (a, b) } else { (b, a) };
        let i = *self.index.get(&a).ok_or(Error::UnknownVertex(a))?;
        let j = *self.index.get(&b).ok_or(Error::UnknownVertex(b))?;
        if self.edge_seen.insert((i, j), ()).is_some() {
            return Err(Error::DuplicateEdge(a, b));
        }
        self.edges.push((i, j, mu));
        Ok(self)
    }

    /// Marks a vertex as lacking part of its neighbor row (window rim).
    pub fn incomplete(&mut self, id: VertexId) -> &mut Self {
        self.incomplete.push(id);
        self
    }

    pub fn window(&mut self, tag: WindowTag) -> &mut Self {
        self.window = Some(tag);
        self
    }

    pub fn build(self) -> Result<WeightedGraph<W>> {
        // Re-sort vertices by id so identical data always yields the same
        // internal layout regardless of declaration order.
        let mut order: Vec<usize> = (0..self.ids.len()).collect();
        order.sort_by_key(|&i| self.ids[i]);
        let mut rank = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let ids: Vec<VertexId> = order.iter().map(|&i| self.ids[i]).collect();
        let measure: Vec<W> = order.iter().map(|&i| self.measure[i].clone()).collect();
        let index: HashMap<VertexId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut edges: Vec<Edge<W>> = self
            .edges
            .into_iter()
            .map(|(i, j, w)| {
                let (u, v) = (rank[i], rank[j]);
                let (u, v) = if u < v { (u, v) } else { (v, u) };
                Edge { u, v, weight: w }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));

        let mut adj: Vec<Vec<(usize, W)>> = vec![Vec::new(); ids.len()];
        for e in &edges {
            adj[e.u].push((e.v, e.weight.clone()));
            adj[e.v].push((e.u, e.weight.clone()));
        }
        for row in adj.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
        }

        let mut complete = vec![true; ids.len()];
        for id in &self.incomplete {
            let i = *index.get(id).ok_or(Error::UnknownVertex(*id))?;
            complete[i] = false;
        }

        Ok(WeightedGraph {
            ids,
            index,
            measure,
            adj,
            edges,
            complete,
            window: self.window,
        })
    }
}

impl<W: Weight> WeightedGraph<W> {
    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    pub fn index(&self, id: VertexId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    pub fn try_index(&self, id: VertexId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn measure(&self, i: usize) -> &W {
        &self.measure[i]
    }

    /// Neighbor list of vertex `i` with edge weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, W)] {
        &self.adj[i]
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    /// Row sum `n(x) = sum_y mu(x,y)` over the window.
    pub fn row_sum(&self, i: usize) -> W {
        self.adj[i]
            .iter()
            .fold(W::zero(), |acc, (_, w)| acc + w.clone())
    }

    /// Weighted vertex degree `Deg(x) = n(x)/m(x)`; zero on isolated vertices.
    pub fn weighted_degree(&self, i: usize) -> W {
        let n = self.row_sum(i);
        if n.is_zero() {
            W::zero()
        } else {
            n / self.measure[i].clone()
        }
    }

    /// Whether the full neighbor row of `i` is present in the window.
    pub fn is_complete(&self, i: usize) -> bool {
        self.complete[i]
    }

    pub fn window(&self) -> Option<&WindowTag> {
        self.window.as_ref()
    }

    /// Vertices whose whole neighbor row is present.
    pub fn complete_indices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| self.complete[i]).collect()
    }

    pub fn interior_ids(&self) -> Vec<VertexId> {
        self.complete_indices().into_iter().map(|i| self.ids[i]).collect()
    }

    /// Component label per vertex (labels are the smallest index inside).
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = start;
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adj[x] {
                    if label[y] == usize::MAX {
                        label[y] = start;
                        stack.push(y);
                    }
                }
            }
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        let labels = self.components();
        labels.iter().all(|&l| l == 0)
    }

    /// Formal Laplacian at `x`:
    /// `(1/m(x)) * sum_y mu(x,y) (f(x) - f(y))`.
    ///
    /// Requires the full neighbor row of `x` and a field value on every
    /// neighbor.
    pub fn laplacian(&self, f: &ScalarField<W>, x: VertexId) -> Result<W> {
        let i = self.index(x)?;
        self.laplacian_at(f, i)
    }

    pub fn laplacian_at(&self, f: &ScalarField<W>, i: usize) -> Result<W> {
        f.check_len(self)?;
        if !self.complete[i] {
            return Err(Error::NeighborOutsideWindow {
                vertex: self.ids[i],
                neighbor: None,
            });
        }
        let fx = f.get(self, i)?;
        let mut acc = W::zero();
        for (j, w) in &self.adj[i] {
            let fy = f.values[*j].as_ref().ok_or(Error::NeighborOutsideWindow {
                vertex: self.ids[i],
                neighbor: Some(self.ids[*j]),
            })?;
            acc = acc + w.clone() * (fx.clone() - fy.clone());
        }
        Ok(acc / self.measure[i].clone())
    }

    /// Membership check for the formal domain: `sum_y mu(x,y) |f(y)|` over
    /// the window, plus a caller-supplied bound on the tail outside it.
    /// On a finite graph (or a complete vertex) the window sum is the whole
    /// sum and no bound is needed.
    pub fn formal_domain_sum(
        &self,
        f: &ScalarField<W>,
        x: VertexId,
        tail_bound: Option<f64>,
    ) -> Result<f64> {
        let i = self.index(x)?;
        let mut acc = 0.0f64;
        for (j, w) in &self.adj[i] {
            let fy = f.values[*j]
                .as_ref()
                .ok_or(Error::FieldUndefined(self.ids[*j]))?;
            acc += w.as_f64() * fy.as_f64().abs();
        }
        match (self.complete[i], tail_bound) {
            (true, _) => Ok(acc),
            (false, Some(b)) if b.is_finite() => Ok(acc + b),
            (false, Some(b)) => Err(Error::FormalDomainViolation(x, b)),
            (false, None) => Err(Error::NeighborOutsideWindow {
                vertex: x,
                neighbor: None,
            }),
        }
    }

    /// Energy form `E(f) = 1/2 sum_{x,y} mu(x,y) (f(x)-f(y))^2`, summed over
    /// the edges present in the window (each unordered edge enters the
    /// double sum twice, so this is a plain sum over stored edges).
    pub fn energy(&self, f: &ScalarField<W>) -> Result<W> {
        f.check_len(self)?;
        let mut acc = W::zero();
        for e in &self.edges {
            let fu = f.get(self, e.u)?;
            let fv = f.get(self, e.v)?;
            let d = fu.clone() - fv.clone();
            acc = acc + e.weight.clone() * d.clone() * d;
        }
        Ok(acc)
    }

    /// Harmonicity classification of `f` over `region` at tolerance `tol`.
    pub fn classify(
        &self,
        f: &ScalarField<W>,
        region: &[VertexId],
        tol: W,
    ) -> Result<ClassifyOutcome<W>> {
        let mut max_abs = W::zero();
        let mut max_pos = W::zero();
        let mut max_neg = W::zero();
        let mut worst = None;
        for &x in region {
            let lap = self.laplacian(f, x)?;
            let a = lap.abs();
            if a > max_abs {
                max_abs = a.clone();
                worst = Some(x);
            }
            if lap > max_pos {
                max_pos = lap.clone();
            }
            if -lap.clone() > max_neg {
                max_neg = -lap;
            }
        }
        let verdict = if max_abs <= tol {
            Harmonicity::Harmonic
        } else if max_pos <= tol {
            Harmonicity::Subharmonic
        } else if max_neg <= tol {
            Harmonicity::Superharmonic
        } else {
            Harmonicity::None
        };
        Ok(ClassifyOutcome {
            verdict,
            max_abs_residual: max_abs,
            max_positive_part: max_pos,
            max_negative_part: max_neg,
            worst_vertex: worst,
            checked: region.len(),
        })
    }

    /// Lossy conversion of all scalar data to `f64`.
    pub fn to_f64(&self) -> WeightedGraph<f64> {
        WeightedGraph {
            ids: self.ids.clone(),
            index: self.index.clone(),
            measure: self.measure.iter().map(Weight::as_f64).collect(),
            adj: self
                .adj
                .iter()
                .map(|row| row.iter().map(|(j, w)| (*j, w.as_f64())).collect())
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { u: e.u, v: e.v, weight: e.weight.as_f64() })
                .collect(),
            complete: self.complete.clone(),
            window: self.window.clone(),
        }
    }
}

/// Classification verdict per the sign of the formal Laplacian:
/// harmonic means `Δf = 0`, subharmonic `Δf <= 0`, superharmonic `Δf >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Harmonicity {
    Harmonic,
    Subharmonic,
    Superharmonic,
    None,
}

#[derive(Clone, Debug)]
pub struct ClassifyOutcome<W> {
    pub verdict: Harmonicity,
    /// max |Δf| over the region.
    pub max_abs_residual: W,
    /// max (Δf)_+, the violation measure for subharmonicity.
    pub max_positive_part: W,
    /// max (Δf)_-, the violation measure for superharmonicity.
    pub max_negative_part: W,
    pub worst_vertex: Option<VertexId>,
    pub checked: usize,
}

/// A real-valued function on the vertices of one graph, with an explicit
/// domain: vertices without a value are outside the window of trust and
/// reading them is an error, never a silent zero.
#[derive(Clone, Debug)]
pub struct ScalarField<W> {
    values: Vec<Option<W>>,
}

impl<W: Weight> ScalarField<W> {
    pub fn undefined(g: &WeightedGraph<W>) -> Self {
        ScalarField { values: vec![None; g.n_vertices()] }
    }

    pub fn constant(g: &WeightedGraph<W>, c: W) -> Self {
        ScalarField { values: vec![Some(c); g.n_vertices()] }
    }

    /// Total field from a function of the vertex id.
    pub fn from_fn(g: &WeightedGraph<W>, mut f: impl FnMut(VertexId) -> W) -> Self {
        ScalarField { values: g.ids().iter().map(|&id| Some(f(id))).collect() }
    }

    /// Partial field; `None` leaves the vertex outside the domain.
    pub fn from_fn_partial(g: &WeightedGraph<W>, mut f: impl FnMut(VertexId) -> Option<W>) -> Self {
        ScalarField { values: g.ids().iter().map(|&id| f(id)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_len(&self, g: &WeightedGraph<W>) -> Result<()> {
        if self.values.len() != g.n_vertices() {
            return Err(Error::FieldMismatch { field: self.values.len(), graph: g.n_vertices() });
        }
        Ok(())
    }

    pub fn get<'a>(&'a self, g: &WeightedGraph<W>, i: usize) -> Result<&'a W> {
        self.values[i].as_ref().ok_or(Error::FieldUndefined(g.id(i)))
    }

    pub fn try_get(&self, i: usize) -> Option<&W> {
        self.values[i].as_ref()
    }

    pub fn is_defined(&self, i: usize) -> bool {
        self.values[i].is_some()
    }

    pub fn set(&mut self, i: usize, v: W) {
        self.values[i] = Some(v);
    }

    pub fn unset(&mut self, i: usize) {
        self.values[i] = None;
    }

    /// Value at an external id.
    pub fn at(&self, g: &WeightedGraph<W>, id: VertexId) -> Result<&W> {
        self.check_len(g)?;
        let i = g.index(id)?;
        self.get(g, i)
    }

    /// Gradient along an oriented edge: `f(x) - f(y)`. Antisymmetric.
    pub fn gradient(&self, g: &WeightedGraph<W>, x: VertexId, y: VertexId) -> Result<W> {
        self.check_len(g)?;
        let i = g.index(x)?;
        let j = g.index(y)?;
        let fx = self.values[i].as_ref().ok_or(Error::NeighborOutsideWindow {
            vertex: x,
            neighbor: Some(x),
        })?;
        let fy = self.values[j].as_ref().ok_or(Error::NeighborOutsideWindow {
            vertex: x,
            neighbor: Some(y),
        })?;
        Ok(fx.clone() - fy.clone())
    }

    /// Indices carrying a non-zero value.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| match v {
                Some(v) if !v.is_zero() => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn map<U: Weight>(&self, f: impl Fn(&W) -> U) -> ScalarField<U> {
        ScalarField { values: self.values.iter().map(|v| v.as_ref().map(&f)).collect() }
    }

    pub fn to_f64(&self) -> ScalarField<f64> {
        self.map(Weight::as_f64)
    }
}

/// Edge of the oriented set `E_f`: oriented so the gradient is
/// non-negative, `f(upper) >= f(lower)`. Ties are oriented by id order,
/// which is immaterial because tied edges have zero gradient.
#[derive(Clone, Copy, Debug)]
pub struct OrientedEdge {
    pub upper: usize,
    pub lower: usize,
    pub weight: f64,
    pub grad: f64,
}

impl WeightedGraph<f64> {
    /// The oriented edge set `E_f` of a field: every window edge, oriented
    /// from the larger value to the smaller.
    pub fn oriented_edges(&self, f: &ScalarField<f64>) -> Result<Vec<OrientedEdge>> {
        f.check_len(self)?;
        let mut out = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let fu = *f.get(self, e.u)?;
            let fv = *f.get(self, e.v)?;
            let (upper, lower, grad) = if fu >= fv {
                (e.u, e.v, fu - fv)
            } else {
                (e.v, e.u, fv - fu)
            };
            out.push(OrientedEdge { upper, lower, weight: e.weight, grad });
        }
        Ok(out)
    }

    /// `sum_x |f(x)|^p m(x) w(x)` over the window (or `subset` if given).
    /// Defined for every `p > 0`; this is the quantity `v(r)` in the Karp
    /// machinery is built from.
    pub fn lp_power_sum(
        &self,
        f: &ScalarField<f64>,
        p: f64,
        weight: Option<&ScalarField<f64>>,
        subset: Option<&[usize]>,
    ) -> Result<f64> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        f.check_len(self)?;
        let mut acc = 0.0;
        let mut add = |i: usize| -> Result<()> {
            let v = f.get(self, i)?.abs();
            let w = match weight {
                Some(w) => *w.get(self, i)?,
                None => 1.0,
            };
            acc += v.powf(p) * self.measure[i] * w;
            Ok(())
        };
        match subset {
            Some(s) => {
                for &i in s {
                    add(i)?;
                }
            }
            None => {
                for i in 0..self.n_vertices() {
                    add(i)?;
                }
            }
        }
        Ok(acc)
    }

    /// `L^p` norm with respect to `m` times an optional positive weight.
    /// `p = infinity` returns the sup of |f| on the window; `p < 1` is
    /// rejected; use [`WeightedGraph::lp_norm_quasi`] for the quasi-norm.
    pub fn lp_norm(
        &self,
        f: &ScalarField<f64>,
        p: f64,
        weight: Option<&ScalarField<f64>>,
    ) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            f.check_len(self)?;
            let mut sup = 0.0f64;
            for i in 0..self.n_vertices() {
                sup = sup.max(f.get(self, i)?.abs());
            }
            return Ok(sup);
        }
        if p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(self.lp_power_sum(f, p, weight, None)?.powf(1.0 / p))
    }

    /// Quasi-norm `(sum |f|^p m w)^{1/p}` for `p` in (0,1).
    pub fn lp_norm_quasi(
        &self,
        f: &ScalarField<f64>,
        p: f64,
        weight: Option<&ScalarField<f64>>,
    ) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(self.lp_power_sum(f, p, weight, None)?.powf(1.0 / p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{exact_int, Exact};
    use approx::assert_relative_eq;

    fn v(i: i64) -> VertexId {
        VertexId(i)
    }

    /// Path 0 - 1 - 2 with unit weights and unit measure.
    fn path3() -> WeightedGraph<f64> {
        let mut b = GraphBuilder::new();
        for i in 0..3 {
            b.vertex(v(i), 1.0).unwrap();
        }
        b.edge(v(0), v(1), 1.0).unwrap();
        b.edge(v(1), v(2), 1.0).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn laplacian_hand_example() {
        // f = (0, 1, 4) at the middle vertex: (1-0) + (1-4) = -2.
        let g = path3();
        let f = ScalarField::from_fn(&g, |id| match id.0 {
            0 => 0.0,
            1 => 1.0,
            _ => 4.0,
        });
        assert_relative_eq!(g.laplacian(&f, v(1)).unwrap(), -2.0);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = path3();
        let f = ScalarField::constant(&g, 3.25);
        for i in 0..3 {
            assert_eq!(g.laplacian(&f, v(i)).unwrap(), 0.0);
        }
    }

    #[test]
    fn laplacian_requires_neighbor_values() {
        let g = path3();
        let mut f = ScalarField::constant(&g, 1.0);
        f.unset(g.index(v(2)).unwrap());
        let err = g.laplacian(&f, v(1)).unwrap_err();
        assert!(matches!(err, Error::NeighborOutsideWindow { .. }));
        // Vertex 0 does not see vertex 2.
        assert!(g.laplacian(&f, v(0)).is_ok());
    }

    #[test]
    fn laplacian_errors_on_rim_vertices() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 1.0).unwrap();
        b.incomplete(v(1));
        let g = b.build().unwrap();
        let f = ScalarField::constant(&g, 0.0);
        assert!(g.laplacian(&f, v(0)).is_ok());
        assert!(matches!(
            g.laplacian(&f, v(1)),
            Err(Error::NeighborOutsideWindow { neighbor: None, .. })
        ));
    }

    #[test]
    fn gradient_is_antisymmetric() {
        let g = path3();
        let f = ScalarField::from_fn(&g, |id| (id.0 as f64) * 1.5 + 0.25);
        let a = f.gradient(&g, v(0), v(1)).unwrap();
        let b = f.gradient(&g, v(1), v(0)).unwrap();
        assert_eq!(a, -b);
        assert_eq!(f.gradient(&g, v(2), v(0)).unwrap(), 3.0);
    }

    #[test]
    fn gradient_hand_values() {
        let g = path3();
        let f = ScalarField::from_fn(&g, |id| if id.0 == 0 { 7.0 } else { 3.0 });
        assert_eq!(f.gradient(&g, v(0), v(1)).unwrap(), 4.0);
        let c = ScalarField::constant(&g, 2.0);
        assert_eq!(c.gradient(&g, v(0), v(2)).unwrap(), 0.0);
    }

    #[test]
    fn energy_single_edge_both_orientations() {
        // mu = 2, values 0 and 3: E = 1/2 (2*9 + 2*9) = 18.
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 2.0).unwrap();
        let g = b.build().unwrap();
        let f = ScalarField::from_fn(&g, |id| if id.0 == 0 { 0.0 } else { 3.0 });
        assert_relative_eq!(g.energy(&f).unwrap(), 18.0);
    }

    #[test]
    fn energy_of_linear_field_on_path() {
        // Path on {-n..n}, f(x) = x: 2n edges, each contributing 1.
        let n = 17i64;
        let mut b = GraphBuilder::new();
        for i in -n..=n {
            b.vertex(v(i), 1.0).unwrap();
        }
        for i in -n..n {
            b.edge(v(i), v(i + 1), 1.0).unwrap();
        }
        let g = b.build().unwrap();
        let f = ScalarField::from_fn(&g, |id| id.0 as f64);
        assert_relative_eq!(g.energy(&f).unwrap(), 2.0 * n as f64);
        let c = ScalarField::constant(&g, -4.0);
        assert_eq!(g.energy(&c).unwrap(), 0.0);
    }

    #[test]
    fn weighted_degree_cases() {
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 2.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.vertex(v(2), 1.0).unwrap();
        b.vertex(v(9), 5.0).unwrap(); // isolated
        b.edge(v(0), v(1), 3.0).unwrap();
        b.edge(v(0), v(2), 1.0).unwrap();
        let g = b.build().unwrap();
        // row sum 4, m = 2.
        assert_relative_eq!(g.weighted_degree(g.index(v(0)).unwrap()), 2.0);
        assert_eq!(g.weighted_degree(g.index(v(9)).unwrap()), 0.0);
        // normalized case: m = row sum gives Deg = 1.
        let mut b = GraphBuilder::new();
        b.vertex(v(0), 2.0).unwrap();
        b.vertex(v(1), 2.0).unwrap();
        b.edge(v(0), v(1), 2.0).unwrap();
        let g = b.build().unwrap();
        assert_relative_eq!(g.weighted_degree(0), 1.0);
    }

    #[test]
    fn classify_absolute_value_on_line() {
        let n = 12i64;
        let mut b = GraphBuilder::new();
        for i in -n..=n {
            b.vertex(v(i), 1.0).unwrap();
        }
        for i in -n..n {
            b.edge(v(i), v(i + 1), 1.0).unwrap();
        }
        b.incomplete(v(-n));
        b.incomplete(v(n));
        let g = b.build().unwrap();
        let f = ScalarField::from_fn(&g, |id| id.0.abs() as f64);
        let region: Vec<VertexId> = (-(n - 1)..n).map(v).collect();
        let out = g.classify(&f, &region, 1e-12).unwrap();
        assert_eq!(out.verdict, Harmonicity::Subharmonic);
        assert_relative_eq!(out.max_abs_residual, 2.0);
        assert_eq!(out.worst_vertex, Some(v(0)));
        assert_eq!(out.max_positive_part, 0.0);

        let c = ScalarField::constant(&g, 1.0);
        let out = g.classify(&c, &region, 0.0).unwrap();
        assert_eq!(out.verdict, Harmonicity::Harmonic);
        assert_eq!(out.max_abs_residual, 0.0);
    }

    #[test]
    fn classify_measure_independent_and_scaling() {
        // Multiplying m by c divides the Laplacian by c; the verdict is
        // unchanged.
        let g = path3();
        let f = ScalarField::from_fn(&g, |id| (id.0 * id.0) as f64);
        let lap = g.laplacian(&f, v(1)).unwrap();

        let mut b = GraphBuilder::new();
        for i in 0..3 {
            b.vertex(v(i), 4.0).unwrap();
        }
        b.edge(v(0), v(1), 1.0).unwrap();
        b.edge(v(1), v(2), 1.0).unwrap();
        let g4 = b.build().unwrap();
        let f4 = ScalarField::from_fn(&g4, |id| (id.0 * id.0) as f64);
        assert_relative_eq!(g4.laplacian(&f4, v(1)).unwrap(), lap / 4.0);
        let region = [v(1)];
        assert_eq!(
            g.classify(&f, &region, 1e-12).unwrap().verdict,
            g4.classify(&f4, &region, 1e-12).unwrap().verdict
        );
    }

    #[test]
    fn exact_mode_laplacian() {
        let mut b: GraphBuilder<Exact> = GraphBuilder::new();
        for i in 0..3 {
            b.vertex(v(i), exact_int(1)).unwrap();
        }
        b.edge(v(0), v(1), exact_int(1)).unwrap();
        b.edge(v(1), v(2), exact_int(1)).unwrap();
        let g = b.build().unwrap();
        let f = ScalarField::from_fn(&g, |id| exact_int(id.0 * id.0));
        assert_eq!(g.laplacian(&f, v(1)).unwrap(), exact_int(-2));
    }

    #[test]
    fn lp_norms() {
        let g = path3();
        let one = ScalarField::constant(&g, 1.0);
        assert_relative_eq!(g.lp_norm(&one, 1.0, None).unwrap(), 3.0);
        let f = ScalarField::from_fn(&g, |id| id.0 as f64 - 1.0);
        assert_relative_eq!(g.lp_norm(&f, 2.0, None).unwrap(), (2.0f64).sqrt());
        assert_relative_eq!(g.lp_norm(&f, f64::INFINITY, None).unwrap(), 1.0);
        assert!(matches!(g.lp_norm(&f, 0.5, None), Err(Error::InvalidExponent(_))));
        assert!(g.lp_norm_quasi(&f, 0.5, None).is_ok());
        let w = ScalarField::constant(&g, 2.0);
        assert_relative_eq!(g.lp_norm(&one, 1.0, Some(&w)).unwrap(), 6.0);
    }

    #[test]
    fn builder_rejects_invalid_data() {
        let mut b: GraphBuilder<f64> = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        assert!(matches!(b.vertex(v(0), 1.0), Err(Error::DuplicateVertex(_))));
        assert!(matches!(b.vertex(v(1), 0.0), Err(Error::NonPositiveMeasure(_))));
        b.vertex(v(1), 1.0).unwrap();
        assert!(matches!(b.edge(v(0), v(0), 1.0), Err(Error::SelfLoop(_))));
        assert!(matches!(b.edge(v(0), v(1), -1.0), Err(Error::NegativeEdgeWeight(..))));
        b.edge(v(0), v(1), 1.0).unwrap();
        assert!(matches!(b.edge(v(1), v(0), 1.0), Err(Error::DuplicateEdge(..))));
        assert!(matches!(b.edge(v(0), v(7), 1.0), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn oriented_edges_have_nonnegative_gradient() {
        let g = path3();
        let f = ScalarField::from_fn(&g, |id| -(id.0 as f64));
        for e in g.oriented_edges(&f).unwrap() {
            assert!(e.grad >= 0.0);
            let fu = *f.try_get(e.upper).unwrap();
            let fl = *f.try_get(e.lower).unwrap();
            assert!(fu >= fl);
        }
    }

    #[test]
    fn connectivity_reporting() {
        let mut b: GraphBuilder<f64> = GraphBuilder::new();
        for i in 0..4 {
            b.vertex(v(i), 1.0).unwrap();
        }
        b.edge(v(0), v(1), 1.0).unwrap();
        b.edge(v(2), v(3), 1.0).unwrap();
        let g = b.build().unwrap();
        assert!(!g.is_connected());
        let labels = g.components();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
    }

    #[test]
    fn formal_domain_hook() {
        let mut b: GraphBuilder<f64> = GraphBuilder::new();
        b.vertex(v(0), 1.0).unwrap();
        b.vertex(v(1), 1.0).unwrap();
        b.edge(v(0), v(1), 2.0).unwrap();
        b.incomplete(v(1));
        let g = b.build().unwrap();
        let f = ScalarField::constant(&g, -3.0);
        assert_relative_eq!(g.formal_domain_sum(&f, v(0), None).unwrap(), 6.0);
        assert_relative_eq!(g.formal_domain_sum(&f, v(1), Some(0.5)).unwrap(), 6.5);
        assert!(matches!(
            g.formal_domain_sum(&f, v(1), None),
            Err(Error::NeighborOutsideWindow { .. })
        ));
        assert!(matches!(
            g.formal_domain_sum(&f, v(1), Some(f64::INFINITY)),
            Err(Error::FormalDomainViolation(..))
        ));
    }
}
