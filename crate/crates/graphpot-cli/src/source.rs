//! Input loading and argument parsing for the CLI: graph sources,
//! metrics, exhaustions, regions, targets, maps, and measures.

use std::io::Read;

use anyhow::{anyhow, bail, Context, Result};
use graphpot::generate::Family;
use graphpot::graph::{ScalarField, VertexId, WeightedGraph};
use graphpot::hadamard::{MetricTree, Point, PointMeasure, Space, TreePoint};
use graphpot::hmap::VertexMap;
use graphpot::io::{canonical_field, parse_graph_text, parse_graph_text_exact};
use graphpot::metric::Metric;
use graphpot::potential::Exhaustion;
use graphpot::weight::Exact;

use crate::{GraphSource as SourceArgs, MetricChoice};

pub struct Loaded {
    pub graph: WeightedGraph<f64>,
    pub field: Option<ScalarField<f64>>,
    pub source_desc: String,
}

fn read_text(path: &str) -> Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf).context("reading stdin")?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

pub fn load_graph(src: &SourceArgs) -> Result<Loaded> {
    match (&src.graph, &src.gen) {
        (Some(path), None) => {
            let text = read_text(path)?;
            let (graph, field) = parse_graph_text(&text)?.resolve();
            Ok(Loaded { graph, field, source_desc: format!("file:{path}") })
        }
        (None, Some(spec)) => {
            let (family, radius, halo) = graphpot::generate::parse_family(spec)?;
            let graph = family.window(radius, halo);
            let field = canonical_field(&family, &graph);
            Ok(Loaded { graph, field, source_desc: format!("generator:{spec}") })
        }
        (Some(_), Some(_)) => bail!("pass either --graph or --gen, not both"),
        (None, None) => bail!("a graph source is required: --graph FILE or --gen SPEC"),
    }
}

pub fn load_graph_exact(
    src: &SourceArgs,
) -> Result<(WeightedGraph<Exact>, Option<ScalarField<Exact>>)> {
    match (&src.graph, &src.gen) {
        (Some(path), None) => {
            let text = read_text(path)?;
            Ok(parse_graph_text_exact(&text)?)
        }
        (None, Some(spec)) => {
            let (family, radius, _halo) = graphpot::generate::parse_family(spec)?;
            if family != Family::FiniteVolume {
                bail!("exact mode supports only the finite-volume generator");
            }
            let (g, f) = graphpot::generate::finite_volume_example_exact(radius);
            Ok((g, Some(f)))
        }
        _ => bail!("a single graph source is required"),
    }
}

/// Region expressions: `all`, `interior`, `abs<=K` (also `|x|<=K`),
/// `ids:a,b,c`.
pub fn parse_region(g: &WeightedGraph<f64>, expr: &str) -> Result<Vec<VertexId>> {
    let expr = expr.trim();
    if expr == "all" {
        return Ok(g.ids().to_vec());
    }
    if expr == "interior" {
        return Ok(g.interior_ids());
    }
    if let Some(rest) = expr.strip_prefix("ids:") {
        return rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map(VertexId)
                    .map_err(|e| anyhow!("bad id `{t}`: {e}"))
            })
            .collect();
    }
    let normalized = expr.replace("|x|", "abs").replace(' ', "");
    if let Some(k) = normalized.strip_prefix("abs<=") {
        let k: i64 = k.parse().with_context(|| format!("bad bound in `{expr}`"))?;
        return Ok(g
            .ids()
            .iter()
            .copied()
            .filter(|id| id.0.abs() <= k)
            .collect());
    }
    bail!("unknown region `{expr}` (use all, interior, abs<=K, ids:a,b,c)")
}

/// Numeric lists: comma-separated scalars and `a..b[..step]` ranges.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, rest)) = tok.split_once("..") {
            let (b, step) = match rest.split_once("..") {
                Some((b, s)) => (b, s.parse::<f64>().context("range step")?),
                None => (rest, 1.0),
            };
            let a: f64 = a.parse().with_context(|| format!("range start `{tok}`"))?;
            let b: f64 = b.parse().with_context(|| format!("range end `{tok}`"))?;
            if step <= 0.0 || b < a {
                bail!("bad range `{tok}`");
            }
            let mut x = a;
            while x <= b + 1e-12 {
                out.push(x);
                x += step;
            }
        } else {
            out.push(tok.parse().with_context(|| format!("bad number `{tok}`"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    parse_f64_list(s)?
        .into_iter()
        .map(|x| {
            if x.fract() == 0.0 && x >= 0.0 {
                Ok(x as u32)
            } else {
                bail!("expected non-negative integers, got {x}")
            }
        })
        .collect()
}

pub fn build_metric(g: &WeightedGraph<f64>, choice: &MetricChoice) -> Result<Metric> {
    let base = VertexId(choice.base);
    let metric = match choice.kind.as_str() {
        "delta" => Metric::delta(g, base)?,
        "natural" => Metric::natural(g, base)?,
        "delta-trunc" => {
            let r = choice.trunc.ok_or_else(|| anyhow!("--kind delta-trunc needs --trunc R"))?;
            Metric::delta(g, base)?.truncated(g, r)?
        }
        "file" => {
            let path = choice
                .lengths
                .as_ref()
                .ok_or_else(|| anyhow!("--kind file needs --lengths FILE"))?;
            let text = read_text(path)?;
            let mut lens = vec![f64::NAN; g.edges().len()];
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    bail!("{path}:{}: expected `id id length`", lineno + 1);
                }
                let a = g.index(VertexId(toks[0].parse()?))?;
                let b = g.index(VertexId(toks[1].parse()?))?;
                let (a, b) = (a.min(b), a.max(b));
                let pos = g
                    .edges()
                    .iter()
                    .position(|e| e.u == a && e.v == b)
                    .ok_or_else(|| anyhow!("{path}:{}: no such edge", lineno + 1))?;
                lens[pos] = toks[2].parse()?;
            }
            if lens.iter().any(|l| l.is_nan()) {
                bail!("{path}: lengths missing for some edges");
            }
            Metric::from_edge_lengths(g, base, lens)?
        }
        other => bail!("unknown metric kind `{other}`"),
    };
    Ok(metric)
}

/// Exhaustion specs: `hops:a,b,c` or `balls:r1,r2,...` (ranges allowed).
pub fn build_exhaustion(
    g: &WeightedGraph<f64>,
    metric_choice: &MetricChoice,
    o: VertexId,
    spec: &str,
) -> Result<Exhaustion> {
    if let Some(list) = spec.strip_prefix("hops:") {
        let hops = parse_u32_list(list)?;
        return Ok(Exhaustion::hop_balls(g, o, &hops)?);
    }
    if let Some(list) = spec.strip_prefix("balls:") {
        let radii = parse_f64_list(list)?;
        // Balls are centered at the queried vertex, matching hop balls.
        let mut choice = metric_choice.clone();
        choice.base = o.0;
        let metric = build_metric(g, &choice)?;
        return Ok(Exhaustion::metric_balls(g, &metric, &radii)?);
    }
    bail!("unknown exhaustion `{spec}` (use hops:... or balls:...)")
}

/// Targets: `euclidean:N`, `tree:FILE` (edge list `a b length`, rooted at
/// node 0), `disk`.
pub fn parse_target(spec: &str) -> Result<Space> {
    if spec == "disk" {
        return Ok(Space::Disk);
    }
    if let Some(n) = spec.strip_prefix("euclidean:") {
        return Ok(Space::Euclidean(n.parse().context("euclidean dimension")?));
    }
    if let Some(path) = spec.strip_prefix("tree:") {
        let text = read_text(path)?;
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                bail!("{path}:{}: expected `node node length`", lineno + 1);
            }
            let a: usize = toks[0].parse()?;
            let b: usize = toks[1].parse()?;
            let l: f64 = toks[2].parse()?;
            max_node = max_node.max(a).max(b);
            edges.push((a, b, l));
        }
        return Ok(Space::Tree(MetricTree::from_edges(max_node + 1, &edges)?));
    }
    bail!("unknown target `{spec}` (use euclidean:N, tree:FILE, disk)")
}

/// Point literals: comma-separated model coordinates
/// (euclidean: N floats; tree: `anchor,up`; disk: `x,y`).
pub fn parse_point(space: &Space, s: &str) -> Result<Point> {
    let coords: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad coordinate `{t}`: {e}")))
        .collect::<Result<_>>()?;
    let p = point_from_coords(space, &coords)?;
    space.check_point(&p)?;
    Ok(p)
}

fn point_from_coords(space: &Space, coords: &[f64]) -> Result<Point> {
    match space {
        Space::Euclidean(n) => {
            if coords.len() != *n {
                bail!("expected {n} coordinates, got {}", coords.len());
            }
            Ok(Point::Euclidean(coords.to_vec()))
        }
        Space::Tree(_) => {
            if coords.len() != 2 || coords[0].fract() != 0.0 {
                bail!("tree points are `anchor,up` with an integer anchor");
            }
            Ok(Point::Tree(TreePoint { anchor: coords[0] as usize, up: coords[1] }))
        }
        Space::Disk => {
            if coords.len() != 2 {
                bail!("disk points are `x,y`");
            }
            Ok(Point::Disk([coords[0], coords[1]]))
        }
    }
}

/// Map files: `vertex-id model-specific-coordinates` lines.
pub fn load_map(g: &WeightedGraph<f64>, space: &Space, path: &str) -> Result<VertexMap> {
    let text = read_text(path)?;
    let mut map = VertexMap::undefined(g);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let id: i64 = toks
            .next()
            .ok_or_else(|| anyhow!("{path}:{}: empty line", lineno + 1))?
            .parse()?;
        let coords: Vec<f64> = toks
            .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{path}:{}: {e}", lineno + 1)))
            .collect::<Result<_>>()?;
        let p = point_from_coords(space, &coords)
            .with_context(|| format!("{path}:{}", lineno + 1))?;
        space.check_point(&p)?;
        map.set(g.index(VertexId(id))?, p);
    }
    Ok(map)
}

pub fn write_map(g: &WeightedGraph<f64>, map: &VertexMap) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for i in 0..g.n_vertices() {
        if let Some(p) = map.try_get(i) {
            match p {
                Point::Euclidean(v) => {
                    let coords: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
                    writeln!(out, "{} {}", g.id(i), coords.join(" ")).unwrap();
                }
                Point::Tree(t) => writeln!(out, "{} {} {}", g.id(i), t.anchor, t.up).unwrap(),
                Point::Disk(d) => writeln!(out, "{} {} {}", g.id(i), d[0], d[1]).unwrap(),
            }
        }
    }
    out
}

/// Measure files: `weight coords...` lines.
pub fn load_measure(space: &Space, path: &str) -> Result<PointMeasure> {
    let text = read_text(path)?;
    let mut atoms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let w: f64 = toks
            .next()
            .ok_or_else(|| anyhow!("{path}:{}: empty line", lineno + 1))?
            .parse()?;
        let coords: Vec<f64> = toks
            .map(|t| t.parse::<f64>().map_err(|e| anyhow!("{path}:{}: {e}", lineno + 1)))
            .collect::<Result<_>>()?;
        let p = point_from_coords(space, &coords)
            .with_context(|| format!("{path}:{}", lineno + 1))?;
        atoms.push((p, w));
    }
    Ok(PointMeasure::normalized(atoms)?)
}
