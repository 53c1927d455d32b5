//! Metric trees: finite combinatorial trees with positive edge lengths.
//!
//! Points live on edges as `(anchor, up)` pairs: the point at distance
//! `up` from the anchor node towards its parent. Distances are path sums
//! through nearest common ancestors. A metric tree is the minimal locally
//! compact Hadamard space with genuine branching, which makes it the
//! canonical non-Euclidean barycenter target.

use serde::Serialize;

use crate::error::{Error, Result};

/// A point of a metric tree: on the edge from `anchor` to its parent, at
/// distance `up` from `anchor`. Vertices have `up = 0`; the constructor
/// normalizes `up = len(anchor)` to the parent vertex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreePoint {
    pub anchor: usize,
    pub up: f64,
}

impl TreePoint {
    pub fn vertex(node: usize) -> Self {
        TreePoint { anchor: node, up: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct MetricTree {
    parent: Vec<Option<usize>>,
    /// Length of the edge towards the parent; 0 for the root.
    len: Vec<f64>,
    children: Vec<Vec<usize>>,
    /// Metric depth (sum of lengths to the root).
    depth: Vec<f64>,
    hops: Vec<u32>,
    root: usize,
}

impl MetricTree {
    /// Builds from parent pointers and parent-edge lengths. Exactly one
    /// root (parent `None`), positive lengths elsewhere.
    pub fn new(parent: Vec<Option<usize>>, len: Vec<f64>) -> Result<Self> {
        let n = parent.len();
        if len.len() != n {
            return Err(Error::FieldMismatch { field: len.len(), graph: n });
        }
        let mut root = None;
        for (i, p) in parent.iter().enumerate() {
            match p {
                None => {
                    if root.replace(i).is_some() {
                        return Err(Error::Parse { line: 0, msg: "two roots in tree".into() });
                    }
                }
                Some(p) => {
                    if *p >= n {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("parent {p} out of range"),
                        });
                    }
                    if !(len[i] > 0.0) {
                        return Err(Error::Parse {
                            line: 0,
                            msg: format!("edge length at node {i} must be positive"),
                        });
                    }
                }
            }
        }
        let root = root.ok_or(Error::Parse { line: 0, msg: "tree has no root".into() })?;
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        // Depth-first accumulation; also detects cycles/unreachable nodes.
        let mut depth = vec![f64::NAN; n];
        let mut hops = vec![0u32; n];
        let mut stack = vec![root];
        depth[root] = 0.0;
        let mut seen = 1;
        while let Some(x) = stack.pop() {
            for &c in &children[x] {
                if !depth[c].is_nan() {
                    return Err(Error::Parse { line: 0, msg: "cycle in tree".into() });
                }
                depth[c] = depth[x] + len[c];
                hops[c] = hops[x] + 1;
                seen += 1;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(Error::Parse { line: 0, msg: "tree is not connected".into() });
        }
        Ok(MetricTree { parent, len, children, depth, hops, root })
    }

    /// Tree from undirected weighted edges, rooted at node 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, l) in edges {
            if a >= n || b >= n {
                return Err(Error::Parse { line: 0, msg: "edge endpoint out of range".into() });
            }
            adj[a].push((b, l));
            adj[b].push((a, l));
        }
        let mut parent = vec![None; n];
        let mut len = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &(y, l) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some(x);
                    len[y] = l;
                    stack.push(y);
                }
            }
        }
        MetricTree::new(parent, len)
    }

    /// Three rays of the given length joined at a center: center 0,
    /// tips 1, 2, 3.
    pub fn tripod(arm: f64) -> Self {
        MetricTree::new(vec![None, Some(0), Some(0), Some(0)], vec![0.0, arm, arm, arm])
            .expect("tripod data is valid")
    }

    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edge_length(&self, node: usize) -> f64 {
        self.len[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Validates and normalizes a point: `up` within the anchor edge, with
    /// `up = len` folded to the parent vertex.
    pub fn normalize(&self, p: TreePoint) -> Result<TreePoint> {
        if p.anchor >= self.n_nodes() {
            return Err(Error::PointOutsideSpace(format!("node {} out of range", p.anchor)));
        }
        if p.anchor == self.root {
            if p.up != 0.0 {
                return Err(Error::PointOutsideSpace("root has no parent edge".into()));
            }
            return Ok(p);
        }
        if !(0.0 <= p.up && p.up <= self.len[p.anchor]) {
            return Err(Error::PointOutsideSpace(format!(
                "offset {} outside edge of length {}",
                p.up, self.len[p.anchor]
            )));
        }
        if p.up == self.len[p.anchor] {
            return Ok(TreePoint::vertex(self.parent[p.anchor].unwrap()));
        }
        Ok(p)
    }

    fn point_depth(&self, p: TreePoint) -> f64 {
        self.depth[p.anchor] - p.up
    }

    /// Whether `a` is an ancestor of `d` (or equal).
    fn is_ancestor(&self, a: usize, d: usize) -> bool {
        let mut x = d;
        while self.hops[x] > self.hops[a] {
            x = self.parent[x].expect("hops > 0 implies a parent");
        }
        x == a
    }

    fn lca(&self, a: usize, b: usize) -> usize {
        let (mut x, mut y) = (a, b);
        while self.hops[x] > self.hops[y] {
            x = self.parent[x].unwrap();
        }
        while self.hops[y] > self.hops[x] {
            y = self.parent[y].unwrap();
        }
        while x != y {
            x = self.parent[x].unwrap();
            y = self.parent[y].unwrap();
        }
        x
    }

    /// Station list of the geodesic: consecutive stations lie on a common
    /// root line, so segment lengths are depth differences.
    fn stations(&self, a: TreePoint, b: TreePoint) -> Vec<TreePoint> {
        if a.anchor == b.anchor {
            return vec![a, b];
        }
        let (u, v) = (a.anchor, b.anchor);
        if self.is_ancestor(u, v) {
            // Descend from a through u to b.
            let mut chain = Vec::new();
            let mut x = v;
            loop {
                chain.push(TreePoint::vertex(x));
                if x == u {
                    break;
                }
                x = self.parent[x].unwrap();
            }
            chain.reverse(); // u ... v
            chain.pop(); // b sits on the edge above v; stop at p(v)
            let mut out = vec![a];
            out.extend(chain);
            out.push(b);
            return out;
        }
        if self.is_ancestor(v, u) {
            let mut out: Vec<TreePoint> = self.stations(b, a);
            out.reverse();
            return out;
        }
        let w = self.lca(u, v);
        // Up from a: p(u), ..., w.
        let mut out = vec![a];
        let mut x = self.parent[u].unwrap();
        loop {
            out.push(TreePoint::vertex(x));
            if x == w {
                break;
            }
            x = self.parent[x].unwrap();
        }
        // Down from w to p(v), then b.
        let mut down = Vec::new();
        let mut y = self.parent[v].unwrap();
        while y != w {
            down.push(TreePoint::vertex(y));
            y = self.parent[y].unwrap();
        }
        down.reverse();
        out.extend(down);
        out.push(b);
        out
    }

    pub fn distance(&self, a: TreePoint, b: TreePoint) -> f64 {
        let st = self.stations(a, b);
        st.windows(2)
            .map(|w| (self.point_depth(w[0]) - self.point_depth(w[1])).abs())
            .sum()
    }

    /// The point at arc distance `dist` from `a` along the geodesic to `b`.
    pub fn walk(&self, a: TreePoint, b: TreePoint, dist: f64) -> TreePoint {
        let st = self.stations(a, b);
        let mut remaining = dist.max(0.0);
        for w in st.windows(2) {
            let (p, q) = (w[0], w[1]);
            let seg = (self.point_depth(p) - self.point_depth(q)).abs();
            if remaining <= seg || seg > 0.0 && w[1] == *st.last().unwrap() {
                if seg == 0.0 {
                    continue;
                }
                let t = (remaining / seg).min(1.0);
                return self.interpolate_on_edge(p, q, t);
            }
            remaining -= seg;
        }
        *st.last().unwrap()
    }

    /// Linear interpolation between two points on a common edge.
    fn interpolate_on_edge(&self, p: TreePoint, q: TreePoint, t: f64) -> TreePoint {
        // The common edge is anchored at the deeper anchor.
        let anchor = if p.anchor == q.anchor || self.parent[p.anchor] == Some(q.anchor) {
            p.anchor
        } else {
            debug_assert_eq!(self.parent[q.anchor], Some(p.anchor));
            q.anchor
        };
        let up_of = |x: TreePoint| -> f64 {
            if x.anchor == anchor {
                x.up
            } else {
                self.len[anchor] // the parent vertex in anchor coordinates
            }
        };
        let up = up_of(p) * (1.0 - t) + up_of(q) * t;
        self.normalize(TreePoint { anchor, up }).expect("interpolation stays on the edge")
    }

    pub fn geodesic(&self, a: TreePoint, b: TreePoint, t: f64) -> TreePoint {
        let d = self.distance(a, b);
        if d == 0.0 {
            return a;
        }
        self.walk(a, b, t.clamp(0.0, 1.0) * d)
    }

    /// Direction of the first step of the geodesic from `p` towards
    /// `target`: `None` when they coincide, `Some(None)` for "up towards
    /// the parent", `Some(Some(c))` for "down into child `c`" (`c` is the
    /// anchor of the edge the step descends into).
    fn first_step(&self, p: TreePoint, target: TreePoint) -> Option<Option<usize>> {
        if p == target {
            return None;
        }
        if p.up > 0.0 {
            // Interior edge point: down means towards the anchor.
            let below = (target.anchor == p.anchor && target.up < p.up)
                || (target.anchor != p.anchor && self.is_ancestor(p.anchor, target.anchor))
                || (target.anchor == p.anchor && target.up == 0.0);
            return Some(if below { Some(p.anchor) } else { None });
        }
        // Vertex: find the child whose subtree holds the target.
        let x = p.anchor;
        if target.anchor == x {
            // target on x's own parent edge, strictly above.
            return Some(None);
        }
        for &c in &self.children[x] {
            if self.is_ancestor(c, target.anchor) {
                return Some(Some(c));
            }
        }
        Some(None)
    }

    /// Barycenter of a finitely supported probability measure by convex
    /// descent: the variance `F(y) = sum w_i d²(y, y_i)` has second
    /// derivative exactly 2 along unit-speed geodesics, so on each edge
    /// segment the directional derivative is linear and its zero is the
    /// minimizer. The walk starts at the first atom and descends until no
    /// direction decreases `F`.
    pub fn barycenter(&self, atoms: &[(TreePoint, f64)]) -> Result<TreePoint> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let atoms: Vec<(TreePoint, f64)> = atoms
            .iter()
            .map(|&(p, w)| Ok((self.normalize(p)?, w)))
            .collect::<Result<_>>()?;
        let deriv = |y: TreePoint, dir: Option<usize>| -> f64 {
            // d/dt sum w_i d²(y_t, y_i) = sum 2 w_i d_i sigma_i, where
            // sigma is -1 when the step moves towards y_i.
            let mut d = 0.0;
            for &(p, w) in &atoms {
                let di = self.distance(y, p);
                if di == 0.0 {
                    continue;
                }
                let toward = self.first_step(y, p) == Some(dir);
                d += 2.0 * w * di * if toward { -1.0 } else { 1.0 };
            }
            d
        };
        let mut current = atoms[0].0;
        let eps = 1e-14;
        for _ in 0..10 * (self.n_nodes() + atoms.len()) {
            // Candidate directions at the current point.
            let mut dirs: Vec<Option<usize>> = Vec::new();
            if current.up > 0.0 {
                dirs.push(None);
                dirs.push(Some(current.anchor));
            } else {
                if self.parent[current.anchor].is_some() {
                    dirs.push(None);
                }
                for &c in &self.children[current.anchor] {
                    dirs.push(Some(c));
                }
            }
            let mut best: Option<(Option<usize>, f64)> = None;
            for dir in dirs {
                let d = deriv(current, dir);
                if d < -eps && best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((dir, d));
                }
            }
            let Some((dir, d0)) = best else {
                return Ok(current);
            };
            // Move along `dir`. The derivative along the segment is
            // d0 + 2t until the segment end or the nearest atom on it.
            let seg_end = self.segment_end(current, dir, &atoms);
            let t_star = -d0 / 2.0;
            let step = t_star.min(seg_end);
            current = self.step_in_direction(current, dir, step);
            if t_star <= seg_end {
                return Ok(current);
            }
        }
        debug_assert!(false, "tree barycenter walk failed to terminate");
        Ok(current)
    }

    /// Arc length from `p` to the end of the constant-derivative segment
    /// in direction `dir`: the nearest vertex or atom strictly ahead.
    fn segment_end(&self, p: TreePoint, dir: Option<usize>, atoms: &[(TreePoint, f64)]) -> f64 {
        let mut end = match dir {
            // Up: to the parent vertex of the current edge.
            None => self.len[p.anchor] - p.up,
            // Down into child edge c (or towards the anchor when inside
            // an edge).
            Some(c) => {
                if p.up > 0.0 {
                    p.up
                } else {
                    self.len[c]
                }
            }
        };
        // Atoms in the interior of the segment break the linearity of the
        // derivative.
        for &(a, _) in atoms {
            let on_same_line = match dir {
                None => a.anchor == p.anchor && a.up > p.up,
                Some(c) => {
                    if p.up > 0.0 {
                        a.anchor == p.anchor && a.up < p.up
                    } else {
                        a.anchor == c && a.up < self.len[c]
                    }
                }
            };
            if on_same_line {
                let dist = self.distance(p, a);
                if dist > 1e-15 && dist < end {
                    end = dist;
                }
            }
        }
        end
    }

    fn step_in_direction(&self, p: TreePoint, dir: Option<usize>, step: f64) -> TreePoint {
        match dir {
            None => self
                .normalize(TreePoint {
                    anchor: p.anchor,
                    up: (p.up + step).min(self.len[p.anchor]),
                })
                .expect("step stays on the edge"),
            Some(c) => {
                if p.up > 0.0 {
                    self.normalize(TreePoint { anchor: p.anchor, up: (p.up - step).max(0.0) })
                        .expect("step stays on the edge")
                } else {
                    self.normalize(TreePoint { anchor: c, up: (self.len[c] - step).max(0.0) })
                        .expect("step stays on the edge")
                }
            }
        }
    }
}
