//! Text format for graphs, fields, and generator configs.
//!
//! ```text
//! #vertices
//! -1 1/4
//! 0 1
//! 1 0.25
//! #edges
//! -1 0 2
//! 0 1 1/2
//! ```
//!
//! Scalar literals are exact decimals or rationals `p/q`. Optional
//! sections: `#field` (`id value` lines), `#incomplete` (rim vertex ids of
//! a window), `#window` (`source radius halo`), and `#generator`, which
//! replaces the explicit sections by a family name plus parameters:
//!
//! ```text
//! #generator
//! name finite-volume
//! n 40
//! halo 1
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::generate::{parse_family, Family};
use crate::graph::{GraphBuilder, ScalarField, VertexId, WeightedGraph, WindowTag};
use crate::weight::{parse_exact, parse_f64, Exact, Weight};

/// Parsed contents of a graph file.
pub enum GraphSource {
    Explicit { graph: WeightedGraph<f64>, field: Option<ScalarField<f64>> },
    Generator { family: Family, radius: u32, halo: u32 },
}

impl GraphSource {
    /// Materializes the source: windows the generator if needed and
    /// attaches the family's canonical field when it has one.
    pub fn resolve(self) -> (WeightedGraph<f64>, Option<ScalarField<f64>>) {
        match self {
            GraphSource::Explicit { graph, field } => (graph, field),
            GraphSource::Generator { family, radius, halo } => {
                let g = family.window(radius, halo);
                let f = canonical_field(&family, &g);
                (g, f)
            }
        }
    }
}

/// The distinguished field of a generated family, if the family carries
/// one (the finite-volume line and its gluings carry their harmonic
/// function).
pub fn canonical_field(family: &Family, g: &WeightedGraph<f64>) -> Option<ScalarField<f64>> {
    match family {
        Family::FiniteVolume => Some(crate::generate::finite_volume_field(g)),
        Family::Glued { .. } => {
            let f = ScalarField::from_fn(g, |id| {
                if id.0 >= crate::generate::ATTACH_ID_OFFSET {
                    0.0
                } else {
                    let a = id.0.abs() as i32;
                    (id.0.signum() as f64) * ((2.0f64).powi(a) - 1.0)
                }
            });
            Some(f)
        }
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Vertices,
    Edges,
    Field,
    Incomplete,
    Window,
    Generator,
}

struct RawGraph<W> {
    vertices: Vec<(VertexId, W)>,
    edges: Vec<(VertexId, VertexId, W)>,
    field: Vec<(VertexId, W)>,
    incomplete: Vec<VertexId>,
    window: Option<WindowTag>,
    generator: Vec<(String, String)>,
}

fn parse_raw<W>(text: &str, parse: impl Fn(&str) -> Option<W>) -> Result<RawGraph<W>> {
    let mut raw = RawGraph {
        vertices: Vec::new(),
        edges: Vec::new(),
        field: Vec::new(),
        incomplete: Vec::new(),
        window: None,
        generator: Vec::new(),
    };
    let mut section = Section::None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fail = |msg: String| Error::Parse { line: lineno, msg };
        if let Some(header) = line.strip_prefix('#') {
            section = match header.trim() {
                "vertices" => Section::Vertices,
                "edges" => Section::Edges,
                "field" => Section::Field,
                "incomplete" => Section::Incomplete,
                "window" => Section::Window,
                "generator" => Section::Generator,
                other => return Err(fail(format!("unknown section `#{other}`"))),
            };
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let id = |s: &str| -> Result<VertexId> {
            s.parse::<i64>().map(VertexId).map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("vertex id `{s}`: {e}"),
            })
        };
        let num = |s: &str| -> Result<W> {
            parse(s).ok_or_else(|| Error::Parse { line: lineno, msg: format!("bad scalar `{s}`") })
        };
        match section {
            Section::None => return Err(fail("data before any #section header".into())),
            Section::Vertices => {
                if tokens.len() != 2 {
                    return Err(fail("expected `id m-value`".into()));
                }
                raw.vertices.push((id(tokens[0])?, num(tokens[1])?));
            }
            Section::Edges => {
                if tokens.len() != 3 {
                    return Err(fail("expected `id id mu-value`".into()));
                }
                raw.edges.push((id(tokens[0])?, id(tokens[1])?, num(tokens[2])?));
            }
            Section::Field => {
                if tokens.len() != 2 {
                    return Err(fail("expected `id value`".into()));
                }
                raw.field.push((id(tokens[0])?, num(tokens[1])?));
            }
            Section::Incomplete => {
                for t in tokens {
                    raw.incomplete.push(id(t)?);
                }
            }
            Section::Window => {
                if tokens.len() != 3 {
                    return Err(fail("expected `source radius halo`".into()));
                }
                raw.window = Some(WindowTag {
                    source: tokens[0].to_string(),
                    radius: tokens[1].parse().map_err(|e| fail(format!("radius: {e}")))?,
                    halo: tokens[2].parse().map_err(|e| fail(format!("halo: {e}")))?,
                });
            }
            Section::Generator => {
                if tokens.len() != 2 {
                    return Err(fail("expected `key value`".into()));
                }
                raw.generator.push((tokens[0].to_string(), tokens[1].to_string()));
            }
        }
    }
    Ok(raw)
}

fn assemble<W: Weight>(raw: RawGraph<W>) -> Result<(WeightedGraph<W>, Option<ScalarField<W>>)> {
    let mut b = GraphBuilder::new();
    for (id, m) in raw.vertices {
        b.vertex(id, m)?;
    }
    for (a, bb, w) in raw.edges {
        b.edge(a, bb, w)?;
    }
    for id in raw.incomplete {
        b.incomplete(id);
    }
    if let Some(tag) = raw.window {
        b.window(tag);
    }
    let g = b.build()?;
    let field = if raw.field.is_empty() {
        None
    } else {
        let mut f = ScalarField::undefined(&g);
        for (id, v) in raw.field {
            f.set(g.index(id)?, v);
        }
        Some(f)
    };
    Ok((g, field))
}

/// Parses the text format in double precision. Returns the generator spec
/// unresolved when the file holds a `#generator` block.
pub fn parse_graph_text(text: &str) -> Result<GraphSource> {
    let raw = parse_raw(text, parse_f64)?;
    if !raw.generator.is_empty() {
        if !raw.vertices.is_empty() || !raw.edges.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "a file may hold either explicit sections or a #generator block, not both"
                    .into(),
            });
        }
        let mut name = None;
        let mut params = Vec::new();
        for (k, v) in raw.generator {
            if k == "name" {
                name = Some(v);
            } else {
                params.push(format!("{k}={v}"));
            }
        }
        let name = name.ok_or(Error::Parse {
            line: 0,
            msg: "#generator block needs a `name` line".into(),
        })?;
        let spec = format!("{name}:{}", params.join(","));
        let (family, radius, halo) = parse_family(&spec)?;
        return Ok(GraphSource::Generator { family, radius, halo });
    }
    let (graph, field) = assemble(raw)?;
    Ok(GraphSource::Explicit { graph, field })
}

/// Parses the text format exactly; `#generator` blocks are rejected except
/// for `finite-volume`, the one family with exact rational data.
pub fn parse_graph_text_exact(
    text: &str,
) -> Result<(WeightedGraph<Exact>, Option<ScalarField<Exact>>)> {
    let raw = parse_raw(text, parse_exact)?;
    if !raw.generator.is_empty() {
        let spec_name = raw.generator.iter().find(|(k, _)| k == "name").map(|(_, v)| v.clone());
        if spec_name.as_deref() == Some("finite-volume") {
            let n = raw
                .generator
                .iter()
                .find(|(k, _)| k == "n" || k == "radius")
                .and_then(|(_, v)| v.parse::<u32>().ok())
                .ok_or(Error::Parse { line: 0, msg: "finite-volume needs n".into() })?;
            let (g, f) = crate::generate::finite_volume_example_exact(n);
            return Ok((g, Some(f)));
        }
        return Err(Error::Parse {
            line: 0,
            msg: "exact mode supports explicit data or the finite-volume generator".into(),
        });
    }
    assemble(raw)
}

/// Writes a graph (and optionally a field on it) in the text format.
/// Rational weights print as `p/q` and round-trip exactly.
pub fn write_graph_text<W: Weight>(
    g: &WeightedGraph<W>,
    field: Option<&ScalarField<W>>,
) -> String {
    let mut out = String::new();
    out.push_str("#vertices\n");
    for i in 0..g.n_vertices() {
        writeln!(out, "{} {}", g.id(i), g.measure(i)).unwrap();
    }
    out.push_str("#edges\n");
    for e in g.edges() {
        writeln!(out, "{} {} {}", g.id(e.u), g.id(e.v), e.weight).unwrap();
    }
    let rim: Vec<String> = (0..g.n_vertices())
        .filter(|&i| !g.is_complete(i))
        .map(|i| g.id(i).to_string())
        .collect();
    if !rim.is_empty() {
        out.push_str("#incomplete\n");
        writeln!(out, "{}", rim.join(" ")).unwrap();
    }
    if let Some(tag) = g.window() {
        out.push_str("#window\n");
        writeln!(out, "{} {} {}", tag.source, tag.radius, tag.halo).unwrap();
    }
    if let Some(f) = field {
        out.push_str("#field\n");
        for i in 0..g.n_vertices() {
            if let Some(v) = f.try_get(i) {
                writeln!(out, "{} {}", g.id(i), v).unwrap();
            }
        }
    }
    out
}
