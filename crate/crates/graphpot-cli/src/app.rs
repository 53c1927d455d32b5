//! Command dispatch, report envelopes, and CSV emission.

use anyhow::{anyhow, bail, Result};
use graphpot::graph::{Harmonicity, ScalarField, VertexId, WeightedGraph};
use graphpot::hadamard::{jensen_audit, Space};
use graphpot::hmap::{
    self, is_harmonic_map, map_energy, solve_harmonic_map, Relaxation, SolveOptions,
};
use graphpot::liouville::{self, CaccioppoliForm};
use graphpot::metric::{cutoff_bound_check, verify_compatible, verify_intrinsic};
use graphpot::potential::{self, heat};
use graphpot::weight::Weight;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::source::{
    build_exhaustion, build_metric, load_graph, load_graph_exact, load_map, load_measure,
    parse_f64_list, parse_point, parse_region, parse_target, write_map, Loaded,
};
use crate::{
    Cli, ExamplesCmd, Global, GraphCmd, HmapCmd, LiouvilleCmd, MetricCmd, PotentialCmd, Verb,
};

/// Report schema version pinned by the golden CLI tests.
pub const SCHEMA: u32 = 1;

struct Outcome {
    command: String,
    report: Value,
    /// `Some(false)` exits with code 2 (audit failure).
    pass: Option<bool>,
    window: Option<Value>,
    /// Raw text output (examples, field dumps) printed instead of JSON.
    raw: Option<String>,
    csv: Option<String>,
}

impl Outcome {
    fn new(command: &str, report: Value) -> Self {
        Outcome { command: command.into(), report, pass: None, window: None, raw: None, csv: None }
    }
}

fn window_json(g: &WeightedGraph<f64>, source_desc: &str) -> Value {
    let interior = g.complete_indices().len();
    match g.window() {
        Some(tag) => json!({
            "source": source_desc,
            "generator": tag.source,
            "radius": tag.radius,
            "halo": tag.halo,
            "vertices": g.n_vertices(),
            "interior": interior,
        }),
        None => json!({
            "source": source_desc,
            "vertices": g.n_vertices(),
            "interior": interior,
        }),
    }
}

pub fn run(cli: Cli) -> i32 {
    let global = cli.global.clone();
    match dispatch(cli) {
        Ok(out) => {
            if let Some(raw) = &out.raw {
                print!("{raw}");
                if let Some(path) = &global.json {
                    let envelope = envelope(&global, &out);
                    if let Err(e) = std::fs::write(path, envelope) {
                        eprintln!("error: writing {path}: {e}");
                        return 1;
                    }
                }
            } else {
                let envelope = envelope(&global, &out);
                match &global.json {
                    Some(path) => {
                        if let Err(e) = std::fs::write(path, &envelope) {
                            eprintln!("error: writing {path}: {e}");
                            return 1;
                        }
                    }
                    None => println!("{envelope}"),
                }
            }
            if let Some(path) = &global.csv {
                match &out.csv {
                    Some(table) => {
                        if let Err(e) = std::fs::write(path, table) {
                            eprintln!("error: writing {path}: {e}");
                            return 1;
                        }
                    }
                    None => eprintln!("warning: this command has no CSV table"),
                }
            }
            match out.pass {
                Some(false) => 2,
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn envelope(global: &Global, out: &Outcome) -> String {
    let value = json!({
        "schema": SCHEMA,
        "command": out.command,
        "seed": global.seed,
        "tol": global.tol,
        "exact": global.exact,
        "window": out.window,
        "report": out.report,
        "pass": out.pass,
    });
    let mut s = serde_json::to_string_pretty(&value).expect("reports serialize");
    s.push('\n');
    s
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    match cli.verb {
        Verb::Graph { cmd } => graph_cmd(g, cmd),
        Verb::Metric { cmd } => metric_cmd(g, cmd),
        Verb::Potential { cmd } => potential_cmd(g, cmd),
        Verb::Liouville { cmd } => liouville_cmd(g, cmd),
        Verb::Hmap { cmd } => hmap_cmd(g, cmd),
        Verb::Examples { cmd } => examples_cmd(g, cmd),
    }
}

fn need_field(loaded: &Loaded) -> Result<&ScalarField<f64>> {
    loaded
        .field
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a #field section (or a generator with a canonical field)"))
}

fn graph_cmd(global: &Global, cmd: GraphCmd) -> Result<Outcome> {
    match cmd {
        GraphCmd::Validate { src } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let labels = g.components();
            let components = labels.iter().filter(|&&l| labels[l] == l).count();
            let rim: Vec<i64> = (0..g.n_vertices())
                .filter(|&i| !g.is_complete(i))
                .map(|i| g.id(i).0)
                .collect();
            let mut out = Outcome::new(
                "graph validate",
                json!({
                    "vertices": g.n_vertices(),
                    "edges": g.edges().len(),
                    "connected": g.is_connected(),
                    "components": components,
                    "rim_vertices": rim,
                    "has_field": loaded.field.is_some(),
                }),
            );
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        GraphCmd::Classify { src, region } => {
            if global.exact {
                let desc = src
                    .graph
                    .as_deref()
                    .map(|p| format!("file:{p}"))
                    .or_else(|| src.gen.as_deref().map(|s| format!("generator:{s}")))
                    .unwrap_or_else(|| "exact".into());
                let (ge, fe) = load_graph_exact(&src)?;
                let fe = fe.ok_or_else(|| anyhow!("exact classify needs a field"))?;
                let gf = ge.to_f64();
                let region = parse_region(&gf, &region)?;
                let out_exact =
                    ge.classify(&fe, &region, graphpot::weight::exact_int(0))?;
                let report = json!({
                    "verdict": out_exact.verdict,
                    "max_abs_residual": out_exact.max_abs_residual.as_f64(),
                    "exact_zero_residual": out_exact.max_abs_residual
                        == graphpot::weight::exact_int(0),
                    "checked": out_exact.checked,
                    "worst_vertex": out_exact.worst_vertex.map(|v| v.0),
                });
                let mut out = Outcome::new("graph classify", report);
                out.window = Some(window_json(&gf, &desc));
                return Ok(out);
            }
            let loaded = load_graph(&src)?;
            let f = need_field(&loaded)?;
            let region = parse_region(&loaded.graph, &region)?;
            let res = loaded.graph.classify(f, &region, global.tol)?;
            let report = json!({
                "verdict": res.verdict,
                "max_abs_residual": res.max_abs_residual,
                "max_positive_part": res.max_positive_part,
                "max_negative_part": res.max_negative_part,
                "checked": res.checked,
                "worst_vertex": res.worst_vertex.map(|v| v.0),
            });
            let mut out = Outcome::new("graph classify", report);
            out.window = Some(window_json(&loaded.graph, &loaded.source_desc));
            Ok(out)
        }
        GraphCmd::Energy { src } => {
            let loaded = load_graph(&src)?;
            let f = need_field(&loaded)?;
            let energy = loaded.graph.energy(f)?;
            let mut out = Outcome::new("graph energy", json!({ "energy": energy }));
            out.window = Some(window_json(&loaded.graph, &loaded.source_desc));
            Ok(out)
        }
        GraphCmd::Norm { src, p, quasi } => {
            let loaded = load_graph(&src)?;
            let f = need_field(&loaded)?;
            let g = &loaded.graph;
            let pv: f64 = if p == "inf" { f64::INFINITY } else { p.parse()? };
            let norm = if quasi && pv < 1.0 {
                g.lp_norm_quasi(f, pv, None)?
            } else {
                g.lp_norm(f, pv, None)?
            };
            let mut out =
                Outcome::new("graph norm", json!({ "p": pv, "norm": norm, "quasi": quasi }));
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
    }
}

fn metric_cmd(global: &Global, cmd: MetricCmd) -> Result<Outcome> {
    match cmd {
        MetricCmd::Build { src, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let m = build_metric(g, &metric)?;
            let jump = m.measured_jump(g);
            let mut rows = String::from("u,v,length\n");
            let mut lengths = Vec::new();
            for e in g.edges() {
                let d = m.distance(g, e.u, e.v);
                rows.push_str(&format!("{},{},{}\n", g.id(e.u), g.id(e.v), d));
                lengths.push(json!([g.id(e.u).0, g.id(e.v).0, d]));
            }
            let mut out = Outcome::new(
                "metric build",
                json!({
                    "kind": metric.kind,
                    "base": metric.base,
                    "measured_jump": jump,
                    "declared_jump": m.declared_jump(),
                    "edges": lengths,
                }),
            );
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        MetricCmd::Verify { src, metric, intrinsic, compatible, radii } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let m = build_metric(g, &metric)?;
            // With no explicit selection, verify everything requested by
            // the data (intrinsic always; compatibility if radii given).
            let run_intrinsic = intrinsic || !compatible;
            let run_compatible = compatible || !radii.is_empty();
            let mut pass = true;
            let mut report = serde_json::Map::new();
            if run_intrinsic {
                let rep = verify_intrinsic(g, &m, &g.complete_indices(), global.tol)?;
                pass &= rep.intrinsic;
                report.insert("intrinsic".into(), serde_json::to_value(&rep)?);
            }
            if run_compatible {
                let radii = parse_f64_list(&radii)?;
                let rep = verify_compatible(g, &m, &radii)?;
                pass &= rep.compatible;
                report.insert("compatible".into(), serde_json::to_value(&rep)?);
            }
            let mut out = Outcome::new("metric verify", Value::Object(report));
            out.pass = Some(pass);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        MetricCmd::Balls { src, metric, o, radii } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let mut choice = metric;
            if let Some(o) = o {
                choice.base = o;
            }
            let m = build_metric(g, &choice)?;
            let radii = parse_f64_list(&radii)?;
            let mut balls = Vec::new();
            let mut rows = String::from("radius,vertices,mass\n");
            for &r in &radii {
                let ball = m.ball(g, r)?;
                let mass: f64 = ball.iter().map(|&i| g.measure(i)).sum();
                rows.push_str(&format!("{r},{},{mass}\n", ball.len()));
                balls.push(json!({
                    "radius": r,
                    "vertices": ball.len(),
                    "mass": mass,
                    "members": ball.iter().map(|&i| g.id(i).0).collect::<Vec<_>>(),
                }));
            }
            let mut out = Outcome::new("metric balls", json!({ "base": choice.base, "balls": balls }));
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        MetricCmd::Cutoff { src, metric, r, big_r } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let m = build_metric(g, &metric)?;
            let check = cutoff_bound_check(g, &m, r, big_r, global.tol.max(1e-12))?;
            let pass = check.violations == 0;
            let mut out = Outcome::new("metric cutoff", serde_json::to_value(&check)?);
            out.pass = Some(pass);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
    }
}

fn potential_cmd(_global: &Global, cmd: PotentialCmd) -> Result<Outcome> {
    match cmd {
        PotentialCmd::Dirichlet { src, region, field_out } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let boundary = need_field(&loaded)?;
            let region = parse_region(g, &region)?;
            let sol = potential::solve_dirichlet(g, &region, boundary, None)?;
            let mut rows = String::from("id,value\n");
            let mut values = Vec::new();
            for i in 0..g.n_vertices() {
                if let Some(v) = sol.try_get(i) {
                    rows.push_str(&format!("{},{}\n", g.id(i), v));
                    values.push(json!([g.id(i).0, v]));
                }
            }
            if let Some(path) = field_out {
                std::fs::write(&path, graphpot::io::write_graph_text(g, Some(&sol)))?;
            }
            let mut out = Outcome::new("potential dirichlet", json!({ "values": values }));
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        PotentialCmd::Green { src, x, y, exhaustion, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let ex = build_exhaustion(g, &metric, VertexId(x), &exhaustion)?;
            let seq = potential::green_exhaustion(g, &ex, VertexId(x), VertexId(y.unwrap_or(x)))?;
            let mut rows = String::from("level,size,green\n");
            for (k, v) in seq.values.iter().enumerate() {
                rows.push_str(&format!("{k},{},{v}\n", seq.level_sizes[k]));
            }
            let mut out = Outcome::new("potential green", serde_json::to_value(&seq)?);
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        PotentialCmd::Capacity { src, x, exhaustion, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let ex = build_exhaustion(g, &metric, VertexId(x), &exhaustion)?;
            let seq = potential::capacity(g, VertexId(x), &ex)?;
            let mut rows = String::from("level,size,capacity\n");
            for (k, v) in seq.values.iter().enumerate() {
                rows.push_str(&format!("{k},{},{v}\n", seq.level_sizes[k]));
            }
            let mut out = Outcome::new("potential capacity", serde_json::to_value(&seq)?);
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        PotentialCmd::Recurrence { src, o, exhaustion, radii, steps, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let o = VertexId(o);
            let ex = match &exhaustion {
                Some(spec) => Some(build_exhaustion(g, &metric, o, spec)?),
                None => None,
            };
            let radii = match &radii {
                Some(list) => Some(parse_f64_list(list)?),
                None => None,
            };
            let m = match radii {
                Some(_) => Some(build_metric(g, &metric)?),
                None => None,
            };
            let rep = potential::recurrence_report(
                g,
                o,
                ex.as_ref(),
                m.as_ref(),
                radii.as_deref(),
                steps,
            )?;
            let csv = rep.volume.as_ref().map(|v| {
                let mut rows = String::from("radius,mass\n");
                for (r, m) in v.radii.iter().zip(v.masses.iter()) {
                    rows.push_str(&format!("{r},{m}\n"));
                }
                rows
            });
            let mut out = Outcome::new("potential recurrence", serde_json::to_value(&rep)?);
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = csv;
            Ok(out)
        }
        PotentialCmd::Royden { src, exhaustion, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let f = need_field(&loaded)?;
            let base = g.id(0);
            let ex = build_exhaustion(g, &metric, base, &exhaustion)?;
            let levels = potential::royden_decompose(g, &ex, f)?;
            let mut rows = String::from("level,energy_f,energy_g,energy_h,residual\n");
            let summary: Vec<Value> = levels
                .iter()
                .map(|l| {
                    rows.push_str(&format!(
                        "{},{},{},{},{}\n",
                        l.level, l.energy_f, l.energy_g, l.energy_h, l.residual
                    ));
                    json!({
                        "level": l.level,
                        "energy_f": l.energy_f,
                        "energy_g": l.energy_g,
                        "energy_h": l.energy_h,
                        "residual": l.residual,
                    })
                })
                .collect();
            let mut out = Outcome::new("potential royden", json!({ "levels": summary }));
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        PotentialCmd::Heat { src, t, set, exhaustion, o, metric } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            if let Some(spec) = exhaustion {
                let ex = build_exhaustion(g, &metric, VertexId(o), &spec)?;
                let probe = heat::stochastic_completeness_probe(g, &ex, t, VertexId(o))?;
                let mut rows = String::from("level,probe\n");
                for (k, v) in probe.values.iter().enumerate() {
                    rows.push_str(&format!("{k},{v}\n"));
                }
                let mut out = Outcome::new("potential heat", serde_json::to_value(&probe)?);
                out.window = Some(window_json(g, &loaded.source_desc));
                out.csv = Some(rows);
                return Ok(out);
            }
            let set = parse_region(g, set.as_deref().unwrap_or("interior"))?;
            let ones = ScalarField::constant(g, 1.0);
            let f = loaded.field.as_ref().unwrap_or(&ones);
            let evolved = heat::heat_semigroup_apply(g, &set, t, f)?;
            let mut rows = String::from("id,value\n");
            let mut values = Vec::new();
            for i in 0..g.n_vertices() {
                if let Some(v) = evolved.try_get(i) {
                    rows.push_str(&format!("{},{}\n", g.id(i), v));
                    values.push(json!([g.id(i).0, v]));
                }
            }
            let mut out = Outcome::new("potential heat", json!({ "t": t, "values": values }));
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
    }
}

fn field_for_audit(loaded: &Loaded, take_abs: bool) -> Result<ScalarField<f64>> {
    let f = need_field(loaded)?;
    Ok(if take_abs { f.map(|x| x.abs()) } else { f.clone() })
}

fn liouville_cmd(global: &Global, cmd: LiouvilleCmd) -> Result<Outcome> {
    match cmd {
        LiouvilleCmd::Karp { src, metric, p, radii, abs } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let f = field_for_audit(&loaded, abs)?;
            let m = build_metric(g, &metric)?;
            let radii = parse_f64_list(&radii)?;
            let prof = liouville::karp_profile(g, &m, &f, p, &radii, global.tol)?;
            let mut rows = String::from("radius,v\n");
            for (r, v) in prof.radii.iter().zip(prof.v.iter()) {
                rows.push_str(&format!("{r},{v}\n"));
            }
            let mut out = Outcome::new("liouville karp", serde_json::to_value(&prof)?);
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        LiouvilleCmd::Caccioppoli { src, metric, p, r, big_r, strong, abs, calibrate } => {
            if calibrate {
                let rep = liouville::calibrate_caccioppoli(global.tol)?;
                let pass = rep.all_pass
                    && rep.max_ratio <= liouville::CACCIOPPOLI_GOLDEN_MAX_RATIO * 1.01;
                let mut out = Outcome::new(
                    "liouville caccioppoli calibrate",
                    json!({
                        "calibration": rep,
                        "frozen_max_ratio": liouville::CACCIOPPOLI_GOLDEN_MAX_RATIO,
                    }),
                );
                out.pass = Some(pass);
                return Ok(out);
            }
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let f = field_for_audit(&loaded, abs)?;
            let m = build_metric(g, &metric)?;
            let (r, big_r) = (
                r.ok_or_else(|| anyhow!("--r is required"))?,
                big_r.ok_or_else(|| anyhow!("--R is required"))?,
            );
            let form = if strong { CaccioppoliForm::SumPowers } else { CaccioppoliForm::Max };
            let audit =
                liouville::caccioppoli_audit(g, &m, &f, p, r, big_r, form, global.tol)?;
            let mut out = Outcome::new("liouville caccioppoli", serde_json::to_value(&audit)?);
            out.pass = Some(audit.pass);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        LiouvilleCmd::Keyest { src, metric, p, r, big_r, abs } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let f = field_for_audit(&loaded, abs)?;
            let m = build_metric(g, &metric)?;
            let s = m.jump_size(g);
            let phi = m.cutoff(g, r + s, big_r - s)?;
            let audit = liouville::key_estimate_audit(g, &f, &phi, p, global.tol)?;
            let mut out = Outcome::new("liouville keyest", serde_json::to_value(&audit)?);
            out.pass = Some(audit.pass);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        LiouvilleCmd::Mvi { grid, a, b, p } => {
            if let (Some(a), Some(b), Some(p)) = (a, b, p) {
                let check = liouville::mvi_check(a, b, p)?;
                let pass = check.holds_max_power && check.holds_half_sum.unwrap_or(true);
                let mut out = Outcome::new("liouville mvi", serde_json::to_value(&check)?);
                out.pass = Some(pass);
                return Ok(out);
            }
            let samples = match grid.as_deref() {
                None | Some("default") => 100_000,
                Some(n) => n.parse()?,
            };
            let rep = liouville::mvi_grid_audit(samples, global.seed);
            let pass = rep.violations_half_sum == 0 && rep.violations_max_power == 0;
            let mut out = Outcome::new("liouville mvi", serde_json::to_value(&rep)?);
            out.pass = Some(pass);
            Ok(out)
        }
        LiouvilleCmd::Growth { src, metric, power, abs } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let f = field_for_audit(&loaded, abs)?;
            let m = build_metric(g, &metric)?;
            let fit = liouville::growth_classifier(
                g,
                &m,
                &f,
                |r| r.powf(power),
                liouville::GROWTH_MARGIN,
            )?;
            let mut out = Outcome::new(
                "liouville growth",
                json!({ "comparison_power": power, "fit": fit }),
            );
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        LiouvilleCmd::Moment { src, metric, q, decay_beta, radii } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let m = build_metric(g, &metric)?;
            let rep = liouville::moment(g, &m, q)?;
            let decay = match decay_beta {
                Some(beta) => {
                    let radii = parse_f64_list(
                        radii.as_deref().ok_or_else(|| anyhow!("--decay-beta needs --radii"))?,
                    )?;
                    Some(liouville::decay_probe(g, &m, beta, &radii)?)
                }
                None => None,
            };
            let mut rows = String::from("index,partial_sum\n");
            for (k, v) in rep.partial_sums.iter().enumerate() {
                rows.push_str(&format!("{k},{v}\n"));
            }
            let mut out =
                Outcome::new("liouville moment", json!({ "moment": rep, "decay": decay }));
            out.window = Some(window_json(g, &loaded.source_desc));
            out.csv = Some(rows);
            Ok(out)
        }
        LiouvilleCmd::Examples { cmd } => examples_cmd(global, cmd),
    }
}

fn hmap_cmd(global: &Global, cmd: HmapCmd) -> Result<Outcome> {
    match cmd {
        HmapCmd::Solve { src, target, boundary, region, max_iters, gauss_seidel, map_out } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let space = parse_target(&target)?;
            let boundary = load_map(g, &space, &boundary)?;
            let region = parse_region(g, &region)?;
            let opts = SolveOptions {
                max_iters,
                tol: global.tol.min(1e-9),
                scheme: if gauss_seidel { Relaxation::GaussSeidel } else { Relaxation::Jacobi },
            };
            let sol = solve_harmonic_map(g, &space, &region, &boundary, opts)?;
            let check = is_harmonic_map(g, &space, &sol.map, &region, opts.tol * 10.0)?;
            if let Some(path) = map_out {
                std::fs::write(&path, write_map(g, &sol.map))?;
            }
            let map_json: Vec<Value> = (0..g.n_vertices())
                .filter_map(|i| sol.map.try_get(i).map(|p| json!([g.id(i).0, p])))
                .collect();
            let mut out = Outcome::new(
                "hmap solve",
                json!({
                    "target": space.model_name(),
                    "iterations": sol.iterations,
                    "final_displacement": sol.final_displacement,
                    "max_defect": check.max_defect,
                    "map": map_json,
                }),
            );
            out.pass = Some(check.harmonic);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        HmapCmd::Check { src, target, map, region } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let space = parse_target(&target)?;
            let u = load_map(g, &space, &map)?;
            let region = parse_region(g, &region)?;
            let rep = is_harmonic_map(g, &space, &u, &region, global.tol)?;
            let mut out = Outcome::new("hmap check", serde_json::to_value(&rep)?);
            out.pass = Some(rep.harmonic);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        HmapCmd::Energy { src, target, map } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let space = parse_target(&target)?;
            let u = load_map(g, &space, &map)?;
            let energy = map_energy(g, &space, &u)?;
            let mut out = Outcome::new(
                "hmap energy",
                json!({ "target": space.model_name(), "energy": energy }),
            );
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        HmapCmd::Subharmonic { src, target, map, y, region } => {
            let loaded = load_graph(&src)?;
            let g = &loaded.graph;
            let space = parse_target(&target)?;
            let u = load_map(g, &space, &map)?;
            let y = parse_point(&space, &y)?;
            let region = parse_region(g, &region)?;
            let res = hmap::subharmonicity_audit(g, &space, &u, &y, &region, global.tol)?;
            let pass = matches!(res.verdict, Harmonicity::Subharmonic | Harmonicity::Harmonic);
            let mut out = Outcome::new(
                "hmap subharmonic",
                json!({
                    "verdict": res.verdict,
                    "max_positive_part": res.max_positive_part,
                    "checked": res.checked,
                }),
            );
            out.pass = Some(pass);
            out.window = Some(window_json(g, &loaded.source_desc));
            Ok(out)
        }
        HmapCmd::Jensen { target, measure, y0, samples } => {
            let space = parse_target(&target)?;
            match measure {
                Some(path) => {
                    let nu = load_measure(&space, &path)?;
                    let y0 = y0
                        .as_deref()
                        .map(|s| parse_point(&space, s))
                        .transpose()?
                        .unwrap_or_else(|| nu.atoms()[0].0.clone());
                    let residual = jensen_audit(&space, &nu, &y0)?;
                    let pass = residual >= -global.tol;
                    let mut out = Outcome::new(
                        "hmap jensen",
                        json!({ "target": space.model_name(), "residual": residual }),
                    );
                    out.pass = Some(pass);
                    Ok(out)
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
                    let mut min_residual = f64::INFINITY;
                    let mut violations = 0usize;
                    for _ in 0..samples {
                        let nu = sample_measure(&space, &mut rng)?;
                        let y0 = sample_point(&space, &mut rng);
                        let residual = jensen_audit(&space, &nu, &y0)?;
                        min_residual = min_residual.min(residual);
                        if residual < -global.tol {
                            violations += 1;
                        }
                    }
                    let mut out = Outcome::new(
                        "hmap jensen",
                        json!({
                            "target": space.model_name(),
                            "samples": samples,
                            "min_residual": min_residual,
                            "violations": violations,
                        }),
                    );
                    out.pass = Some(violations == 0);
                    Ok(out)
                }
            }
        }
    }
}

fn sample_point(space: &Space, rng: &mut ChaCha8Rng) -> graphpot::hadamard::Point {
    use graphpot::hadamard::{Point, TreePoint};
    match space {
        Space::Euclidean(n) => {
            Point::Euclidean((0..*n).map(|_| rng.gen_range(-2.0..2.0)).collect())
        }
        Space::Tree(t) => {
            let anchor = rng.gen_range(0..t.n_nodes());
            if anchor == t.root() {
                Point::Tree(TreePoint::vertex(t.root()))
            } else {
                Point::Tree(TreePoint { anchor, up: rng.gen_range(0.0..t.edge_length(anchor)) })
            }
        }
        Space::Disk => {
            let r: f64 = rng.gen_range(0.0..0.9);
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Point::Disk([r * a.cos(), r * a.sin()])
        }
    }
}

fn sample_measure(
    space: &Space,
    rng: &mut ChaCha8Rng,
) -> Result<graphpot::hadamard::PointMeasure> {
    let k = rng.gen_range(2..=5);
    let atoms: Vec<_> =
        (0..k).map(|_| (sample_point(space, rng), rng.gen_range(0.1..1.0))).collect();
    Ok(graphpot::hadamard::PointMeasure::normalized(atoms)?)
}

fn examples_cmd(global: &Global, cmd: ExamplesCmd) -> Result<Outcome> {
    match cmd {
        ExamplesCmd::FiniteVolume { n, out } => {
            let text = if global.exact {
                let (g, f) = graphpot::generate::finite_volume_example_exact(n);
                graphpot::io::write_graph_text(&g, Some(&f))
            } else {
                let (g, f) = graphpot::generate::finite_volume_example(n);
                graphpot::io::write_graph_text(&g, Some(&f))
            };
            emit_example(global, "examples finite-volume", n, text, out)
        }
        ExamplesCmd::InfiniteVolume { n, attach, attach_radius, out } => {
            let attachment = match attach.as_str() {
                "half-line" => graphpot::generate::Attachment::HalfLine,
                "binary-tree" => graphpot::generate::Attachment::BinaryTree,
                other => bail!("unknown attachment `{other}`"),
            };
            let (g, f) =
                graphpot::generate::infinite_volume_example(n, attachment, attach_radius);
            let text = graphpot::io::write_graph_text(&g, Some(&f));
            emit_example(global, "examples infinite-volume", n, text, out)
        }
    }
}

fn emit_example(
    _global: &Global,
    command: &str,
    n: u32,
    text: String,
    out_path: Option<String>,
) -> Result<Outcome> {
    let mut out = Outcome::new(command, json!({ "n": n, "bytes": text.len() }));
    match out_path {
        Some(path) => {
            std::fs::write(&path, &text)?;
        }
        None => out.raw = Some(text),
    }
    Ok(out)
}
