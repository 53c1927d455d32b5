//! Window generators for infinite graph families.
//!
//! An infinite graph is only ever materialized as a finite window: the hop
//! ball of a given `radius` around the family root, padded by `halo` extra
//! layers. Vertices on the outermost generated layer are marked incomplete,
//! so any operation that needs their full neighbor row fails loudly instead
//! of silently truncating.
//!
//! Generators are deterministic and overlap-consistent: enlarging the
//! window never changes previously produced weights or measures.

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, ScalarField, VertexId, WeightedGraph, WindowTag};
use crate::weight::{exact_int, exact_pow2, Exact};

/// Id offset for attachment vertices in glued families, so line ids and
/// attachment ids never collide.
pub const ATTACH_ID_OFFSET: i64 = 1_000_000;

/// Attachment families for the glued (infinite-volume) construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attachment {
    /// Half line 0,1,2,... with unit weights and unit measure.
    HalfLine,
    /// Rooted binary tree with unit weights and unit measure.
    BinaryTree,
}

/// Generated infinite families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// The integers with constant edge weight and measure.
    Line { mu: f64, m: f64 },
    /// Non-negative integers with constant edge weight and measure.
    HalfLine { mu: f64, m: f64 },
    /// The finite-volume line graph: weights `2^(1 - max(|x|,|x+1|))` and
    /// measure `(|x|+1)^-2 2^-|x|`, which carries a non-constant harmonic
    /// function in every `L^p`, `p <= 1`.
    FiniteVolume,
    /// Rooted binary tree, unit weights and measure (transient).
    BinaryTree,
    /// The finite-volume line with an infinite-volume attachment glued to
    /// the origin.
    Glued { attach: Attachment },
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Line { .. } => "line".into(),
            Family::HalfLine { .. } => "half-line".into(),
            Family::FiniteVolume => "finite-volume".into(),
            Family::BinaryTree => "binary-tree".into(),
            Family::Glued { attach: Attachment::HalfLine } => "glued:half-line".into(),
            Family::Glued { attach: Attachment::BinaryTree } => "glued:binary-tree".into(),
        }
    }

    /// The hop ball of `radius` around the root plus `halo` extra layers.
    /// At least one halo layer is always generated, so every vertex of the
    /// trusted ball carries its complete neighbor row.
    pub fn window(&self, radius: u32, halo: u32) -> WeightedGraph<f64> {
        let halo = halo.max(1);
        let r = radius + halo;
        let tag = WindowTag { source: format!("generator:{}", self.name()), radius, halo };
        match self {
            Family::Line { mu, m } => line_window(-(r as i64), r as i64, *mu, *m, tag),
            Family::HalfLine { mu, m } => line_window(0, r as i64, *mu, *m, tag),
            Family::FiniteVolume => finite_volume_window(r as i64, tag),
            Family::BinaryTree => binary_tree_window(r, 0, tag),
            Family::Glued { attach } => glued_window(r as i64, *attach, r, tag),
        }
    }
}

fn line_window(lo: i64, hi: i64, mu: f64, m: f64, tag: WindowTag) -> WeightedGraph<f64> {
    let mut b = GraphBuilder::new();
    for x in lo..=hi {
        b.vertex(VertexId(x), m).unwrap();
    }
    for x in lo..hi {
        b.edge(VertexId(x), VertexId(x + 1), mu).unwrap();
    }
    if lo != 0 {
        b.incomplete(VertexId(lo));
    }
    b.incomplete(VertexId(hi));
    b.window(tag);
    b.build().unwrap()
}

fn finite_volume_window(r: i64, tag: WindowTag) -> WeightedGraph<f64> {
    let mut b = GraphBuilder::new();
    for x in -r..=r {
        b.vertex(VertexId(x), fv_measure(x)).unwrap();
    }
    for x in -r..r {
        b.edge(VertexId(x), VertexId(x + 1), fv_weight(x)).unwrap();
    }
    b.incomplete(VertexId(-r));
    b.incomplete(VertexId(r));
    b.window(tag);
    b.build().unwrap()
}

fn fv_weight(x: i64) -> f64 {
    // mu(x, x+1) = 2^(1 - max(|x|, |x+1|))
    let k = x.abs().max((x + 1).abs());
    (2.0f64).powi(1 - k as i32)
}

fn fv_measure(x: i64) -> f64 {
    let a = x.abs();
    ((a + 1) as f64).powi(-2) * (2.0f64).powi(-(a as i32))
}

/// The harmonic function `sign(x) (2^|x| - 1)` of the finite-volume line.
pub fn finite_volume_field(g: &WeightedGraph<f64>) -> ScalarField<f64> {
    ScalarField::from_fn(g, |id| fv_value(id.0))
}

fn fv_value(x: i64) -> f64 {
    (x.signum() as f64) * ((2.0f64).powi(x.abs() as i32) - 1.0)
}

/// Finite-volume example at truncation depth `n`: the window `|x| <= n+1`
/// (rim at `±(n+1)`) together with its harmonic function.
pub fn finite_volume_example(n: u32) -> (WeightedGraph<f64>, ScalarField<f64>) {
    let g = Family::FiniteVolume.window(n, 1);
    let f = finite_volume_field(&g);
    (g, f)
}

/// Exact-rational variant of [`finite_volume_example`]; all data are
/// rational, so harmonicity can be checked with zero residual.
pub fn finite_volume_example_exact(n: u32) -> (WeightedGraph<Exact>, ScalarField<Exact>) {
    let r = n as i64 + 1;
    let mut b: GraphBuilder<Exact> = GraphBuilder::new();
    for x in -r..=r {
        let a = x.abs();
        let m = exact_pow2(-a) / exact_int((a + 1) * (a + 1));
        b.vertex(VertexId(x), m).unwrap();
    }
    for x in -r..r {
        let k = x.abs().max((x + 1).abs());
        b.edge(VertexId(x), VertexId(x + 1), exact_pow2(1 - k)).unwrap();
    }
    b.incomplete(VertexId(-r));
    b.incomplete(VertexId(r));
    b.window(WindowTag { source: "generator:finite-volume".into(), radius: n, halo: 1 });
    let g = b.build().unwrap();
    let f = ScalarField::from_fn(&g, |id| {
        let x = id.0;
        exact_int(x.signum()) * (exact_pow2(x.abs()) - exact_int(1))
    });
    (g, f)
}

fn binary_tree_window(depth: u32, id_offset: i64, tag: WindowTag) -> WeightedGraph<f64> {
    let mut b = GraphBuilder::new();
    // Heap indexing: root 1, children of k are 2k and 2k+1.
    let last: i64 = (1i64 << (depth + 1)) - 1;
    for k in 1..=last {
        b.vertex(VertexId(id_offset + k), 1.0).unwrap();
    }
    for k in 1..=last {
        for c in [2 * k, 2 * k + 1] {
            if c <= last {
                b.edge(VertexId(id_offset + k), VertexId(id_offset + c), 1.0).unwrap();
            }
        }
    }
    // The deepest generated layer misses its children.
    let first_deep = 1i64 << depth;
    for k in first_deep..=last {
        b.incomplete(VertexId(id_offset + k));
    }
    b.window(tag);
    b.build().unwrap()
}

/// Root vertex id of the rooted binary tree family.
pub fn binary_tree_root() -> VertexId {
    VertexId(1)
}

fn glued_window(line_r: i64, attach: Attachment, attach_r: u32, tag: WindowTag) -> WeightedGraph<f64> {
    let mut b = GraphBuilder::new();
    // Line part with its finite-volume data.
    for x in -line_r..=line_r {
        let m = if x == 0 {
            // Measures add at the junction vertex.
            fv_measure(0) + 1.0
        } else {
            fv_measure(x)
        };
        b.vertex(VertexId(x), m).unwrap();
    }
    for x in -line_r..line_r {
        b.edge(VertexId(x), VertexId(x + 1), fv_weight(x)).unwrap();
    }
    b.incomplete(VertexId(-line_r));
    b.incomplete(VertexId(line_r));

    match attach {
        Attachment::HalfLine => {
            // Vertices 1..attach_r of the half line; its 0 is the junction.
            for k in 1..=attach_r as i64 {
                b.vertex(VertexId(ATTACH_ID_OFFSET + k), 1.0).unwrap();
            }
            b.edge(VertexId(0), VertexId(ATTACH_ID_OFFSET + 1), 1.0).unwrap();
            for k in 1..attach_r as i64 {
                b.edge(
                    VertexId(ATTACH_ID_OFFSET + k),
                    VertexId(ATTACH_ID_OFFSET + k + 1),
                    1.0,
                )
                .unwrap();
            }
            b.incomplete(VertexId(ATTACH_ID_OFFSET + attach_r as i64));
        }
        Attachment::BinaryTree => {
            let last: i64 = (1i64 << (attach_r + 1)) - 1;
            for k in 2..=last {
                b.vertex(VertexId(ATTACH_ID_OFFSET + k), 1.0).unwrap();
            }
            for k in 1..=last {
                for c in [2 * k, 2 * k + 1] {
                    if c <= last {
                        let from = if k == 1 { VertexId(0) } else { VertexId(ATTACH_ID_OFFSET + k) };
                        b.edge(from, VertexId(ATTACH_ID_OFFSET + c), 1.0).unwrap();
                    }
                }
            }
            let first_deep = 1i64 << attach_r;
            for k in first_deep..=last {
                b.incomplete(VertexId(ATTACH_ID_OFFSET + k));
            }
        }
    }
    b.window(tag);
    b.build().unwrap()
}

/// Infinite-volume variant: the finite-volume line glued at the origin to
/// an infinite-volume attachment, with the harmonic function extended by
/// zero over the attachment. The junction stays harmonic because the two
/// line neighbors of the origin cancel and the attachment contributes zero
/// differences.
pub fn infinite_volume_example(
    n: u32,
    attach: Attachment,
    attach_radius: u32,
) -> (WeightedGraph<f64>, ScalarField<f64>) {
    let tag = WindowTag {
        source: format!("generator:glued:{}", match attach {
            Attachment::HalfLine => "half-line",
            Attachment::BinaryTree => "binary-tree",
        }),
        radius: n,
        halo: 1,
    };
    let g = glued_window(n as i64 + 1, attach, attach_radius + 1, tag);
    let f = ScalarField::from_fn(&g, |id| {
        if id.0.abs() <= n as i64 + 1 && id.0 < ATTACH_ID_OFFSET {
            fv_value(id.0)
        } else {
            0.0
        }
    });
    (g, f)
}

/// Parses a generator spec of the form `name:key=value,key=value`.
///
/// Names: `line`, `half-line`, `finite-volume`, `binary-tree`,
/// `glued-half-line`, `glued-binary-tree`. Keys: `radius` (or `n`/`depth`),
/// `halo` (default 1), and for the constant-weight lines `mu` and `m`.
pub fn parse_family(spec: &str) -> Result<(Family, u32, u32)> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (spec.trim(), ""),
    };
    let mut radius = None;
    let mut halo = 1u32;
    let mut mu = 1.0f64;
    let mut m = 1.0f64;
    for part in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("generator parameter `{part}` is not key=value"),
        })?;
        let bad = |msg: String| Error::Parse { line: 0, msg };
        match k.trim() {
            "radius" | "n" | "depth" => {
                radius = Some(v.trim().parse::<u32>().map_err(|e| bad(format!("radius: {e}")))?)
            }
            "halo" => halo = v.trim().parse::<u32>().map_err(|e| bad(format!("halo: {e}")))?,
            "mu" => mu = v.trim().parse::<f64>().map_err(|e| bad(format!("mu: {e}")))?,
            "m" => m = v.trim().parse::<f64>().map_err(|e| bad(format!("m: {e}")))?,
            other => return Err(bad(format!("unknown generator parameter `{other}`"))),
        }
    }
    let family = match name {
        "line" => Family::Line { mu, m },
        "half-line" => Family::HalfLine { mu, m },
        "finite-volume" => Family::FiniteVolume,
        "binary-tree" => Family::BinaryTree,
        "glued-half-line" => Family::Glued { attach: Attachment::HalfLine },
        "glued-binary-tree" => Family::Glued { attach: Attachment::BinaryTree },
        other => {
            return Err(Error::Parse { line: 0, msg: format!("unknown generator `{other}`") })
        }
    };
    let radius = radius.ok_or(Error::Parse {
        line: 0,
        msg: "generator needs a radius (radius=, n= or depth=)".into(),
    })?;
    Ok((family, radius, halo))
}
