//! Harmonic maps from weighted graphs into Hadamard spaces.
//!
//! A map is harmonic at `x` when `u(x)` is the barycenter of the push
//! forward of the random walk measure `P_x(y) = mu(x,y)/sum_z mu(x,z)`.
//! With a Euclidean line as target this is exactly the harmonic-function
//! condition. The solver is barycenter relaxation: synchronous (Jacobi)
//! sweeps by default for reproducibility, with a sequential Gauss-Seidel
//! toggle for speed.
//!
//! Push-forward measures have finite support here, so the finite
//! first-moment requirement on them holds automatically; on genuinely
//! infinite graphs that membership would need its own certificate, which
//! finite windows cannot provide.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ClassifyOutcome, ScalarField, VertexId, WeightedGraph};
use crate::hadamard::{Point, PointMeasure, Space};

/// A map from window vertices into a fixed target space; vertices without
/// a value are outside the domain of trust.
#[derive(Clone, Debug, Serialize)]
pub struct VertexMap {
    points: Vec<Option<Point>>,
}

impl VertexMap {
    pub fn undefined(g: &WeightedGraph<f64>) -> Self {
        VertexMap { points: vec![None; g.n_vertices()] }
    }

    pub fn from_fn(g: &WeightedGraph<f64>, mut f: impl FnMut(VertexId) -> Option<Point>) -> Self {
        VertexMap { points: g.ids().iter().map(|&id| f(id)).collect() }
    }

    pub fn constant(g: &WeightedGraph<f64>, p: Point) -> Self {
        VertexMap { points: vec![Some(p); g.n_vertices()] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn set(&mut self, i: usize, p: Point) {
        self.points[i] = Some(p);
    }

    pub fn try_get(&self, i: usize) -> Option<&Point> {
        self.points[i].as_ref()
    }

    pub fn get<'a>(&'a self, g: &WeightedGraph<f64>, i: usize) -> Result<&'a Point> {
        self.points[i].as_ref().ok_or(Error::FieldUndefined(g.id(i)))
    }

    pub fn at(&self, g: &WeightedGraph<f64>, id: VertexId) -> Result<&Point> {
        self.get(g, g.index(id)?)
    }

    fn check_len(&self, g: &WeightedGraph<f64>) -> Result<()> {
        if self.points.len() != g.n_vertices() {
            return Err(Error::FieldMismatch { field: self.points.len(), graph: g.n_vertices() });
        }
        Ok(())
    }
}

/// The random walk measure at `x` as vertex weights
/// `P_x(y) = mu(x,y) / sum_z mu(x,z)`.
pub fn random_walk_measure(g: &WeightedGraph<f64>, x: VertexId) -> Result<Vec<(VertexId, f64)>> {
    let i = g.index(x)?;
    if !g.is_complete(i) {
        return Err(Error::NeighborOutsideWindow { vertex: x, neighbor: None });
    }
    let total = g.row_sum(i);
    if total <= 0.0 {
        return Err(Error::IsolatedVertex(x));
    }
    Ok(g.neighbors(i).iter().map(|&(j, w)| (g.id(j), w / total)).collect())
}

/// Push forward of the random walk measure at `x` through the map `u`.
pub fn push_forward(
    g: &WeightedGraph<f64>,
    u: &VertexMap,
    x: VertexId,
) -> Result<PointMeasure> {
    u.check_len(g)?;
    let i = g.index(x)?;
    if !g.is_complete(i) {
        return Err(Error::NeighborOutsideWindow { vertex: x, neighbor: None });
    }
    let total = g.row_sum(i);
    if total <= 0.0 {
        return Err(Error::IsolatedVertex(x));
    }
    let mut atoms = Vec::with_capacity(g.neighbors(i).len());
    for &(j, w) in g.neighbors(i) {
        let p = u.points[j].as_ref().ok_or(Error::NeighborOutsideWindow {
            vertex: x,
            neighbor: Some(g.id(j)),
        })?;
        atoms.push((p.clone(), w / total));
    }
    PointMeasure::normalized(atoms)
}

/// Per-vertex defect report of the harmonic-map condition
/// `u(x) = b(u_* P_x)`.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicMapReport {
    pub max_defect: f64,
    pub worst_vertex: Option<VertexId>,
    pub defects: Vec<(VertexId, f64)>,
    pub harmonic: bool,
    pub tol: f64,
}

pub fn is_harmonic_map(
    g: &WeightedGraph<f64>,
    space: &Space,
    u: &VertexMap,
    region: &[VertexId],
    tol: f64,
) -> Result<HarmonicMapReport> {
    u.check_len(g)?;
    let mut defects = Vec::with_capacity(region.len());
    let mut max_defect = 0.0f64;
    let mut worst = None;
    for &x in region {
        let i = g.index(x)?;
        let nu = push_forward(g, u, x)?;
        let b = space.barycenter(&nu)?;
        let d = space.distance(u.get(g, i)?, &b)?;
        if d > max_defect {
            max_defect = d;
            worst = Some(x);
        }
        defects.push((x, d));
    }
    Ok(HarmonicMapReport {
        max_defect,
        worst_vertex: worst,
        defects,
        harmonic: max_defect <= tol,
        tol,
    })
}

/// Sweep order of the barycenter relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relaxation {
    /// Synchronous updates from the previous iterate (deterministic
    /// reference scheme).
    Jacobi,
    /// In-place sequential updates, usually converging in fewer sweeps.
    GaussSeidel,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop when the largest per-vertex displacement of one sweep drops
    /// below this.
    pub tol: f64,
    pub scheme: Relaxation,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iters: 200_000, tol: 1e-10, scheme: Relaxation::Jacobi }
    }
}

#[derive(Clone, Debug)]
pub struct HarmonicMapSolution {
    pub map: VertexMap,
    pub iterations: usize,
    pub final_displacement: f64,
}

/// Solves the harmonic-map problem on `region` by barycenter relaxation:
/// `u_{k+1}(x) = b((u_k)_* P_x)` with the boundary held fixed.
pub fn solve_harmonic_map(
    g: &WeightedGraph<f64>,
    space: &Space,
    region: &[VertexId],
    boundary: &VertexMap,
    opts: SolveOptions,
) -> Result<HarmonicMapSolution> {
    boundary.check_len(g)?;
    let free: Vec<usize> = region.iter().map(|&id| g.index(id)).collect::<Result<_>>()?;
    for (&x, &id) in free.iter().zip(region.iter()) {
        if !g.is_complete(x) {
            return Err(Error::NeighborOutsideWindow { vertex: id, neighbor: None });
        }
    }
    let in_region = {
        let mut v = vec![false; g.n_vertices()];
        for &x in &free {
            v[x] = true;
        }
        v
    };
    // Every outside neighbor needs a boundary value.
    for &x in &free {
        for &(y, _) in g.neighbors(x) {
            if !in_region[y] && boundary.try_get(y).is_none() {
                return Err(Error::NeighborOutsideWindow {
                    vertex: g.id(x),
                    neighbor: Some(g.id(y)),
                });
            }
        }
    }
    // Initial iterate: boundary values where given, else the first given
    // boundary point (deterministic).
    let seed_point = (0..g.n_vertices())
        .filter(|&i| !in_region[i])
        .find_map(|i| boundary.try_get(i).cloned())
        .or_else(|| (0..g.n_vertices()).find_map(|i| boundary.try_get(i).cloned()))
        .ok_or(Error::EmptyMeasure)?;
    let mut u = boundary.clone();
    for &x in &free {
        if u.try_get(x).is_none() {
            u.set(x, seed_point.clone());
        }
    }

    let mut displacement = f64::INFINITY;
    for iter in 1..=opts.max_iters {
        displacement = 0.0f64;
        match opts.scheme {
            Relaxation::Jacobi => {
                let mut next = Vec::with_capacity(free.len());
                for &x in &free {
                    let nu = push_forward(g, &u, g.id(x))?;
                    next.push(space.barycenter(&nu)?);
                }
                for (&x, p) in free.iter().zip(next) {
                    displacement = displacement.max(space.distance(u.get(g, x)?, &p)?);
                    u.set(x, p);
                }
            }
            Relaxation::GaussSeidel => {
                for &x in &free {
                    let nu = push_forward(g, &u, g.id(x))?;
                    let p = space.barycenter(&nu)?;
                    displacement = displacement.max(space.distance(u.get(g, x)?, &p)?);
                    u.set(x, p);
                }
            }
        }
        if displacement <= opts.tol {
            return Ok(HarmonicMapSolution { map: u, iterations: iter, final_displacement: displacement });
        }
    }
    Err(Error::MaxItersExceeded {
        iterations: opts.max_iters,
        displacement,
        best: Box::new(u),
    })
}

/// Map energy `1/2 sum_{x,y} mu(x,y) d²(u(x), u(y))`, summed over window
/// edges.
pub fn map_energy(g: &WeightedGraph<f64>, space: &Space, u: &VertexMap) -> Result<f64> {
    u.check_len(g)?;
    let mut acc = 0.0;
    for e in g.edges() {
        let d = space.distance(u.get(g, e.u)?, u.get(g, e.v)?)?;
        acc += e.weight * d * d;
    }
    Ok(acc)
}

/// The scalar field `x ↦ d(u(x), y)`, defined wherever the map is.
pub fn distance_field(
    g: &WeightedGraph<f64>,
    space: &Space,
    u: &VertexMap,
    y: &Point,
) -> Result<ScalarField<f64>> {
    u.check_len(g)?;
    let mut f = ScalarField::undefined(g);
    for i in 0..g.n_vertices() {
        if let Some(p) = u.try_get(i) {
            f.set(i, space.distance(p, y)?);
        }
    }
    Ok(f)
}

/// Checks that distance functions of a harmonic map are subharmonic:
/// classify `d(u(·), y)` over the region. Errors when the map itself
/// fails the harmonicity check at the given tolerance.
pub fn subharmonicity_audit(
    g: &WeightedGraph<f64>,
    space: &Space,
    u: &VertexMap,
    y: &Point,
    region: &[VertexId],
    tol: f64,
) -> Result<ClassifyOutcome<f64>> {
    let check = is_harmonic_map(g, space, u, region, tol)?;
    if !check.harmonic {
        return Err(Error::NotHarmonicMap(check.max_defect));
    }
    let f = distance_field(g, space, u, y)?;
    g.classify(&f, region, tol)
}
