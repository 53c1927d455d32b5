//! The `gpot` command-line driver for the graphpot library.
//!
//! Verbs: `graph`, `metric`, `potential`, `liouville`, `hmap`, `examples`.
//! Reports are schema-versioned JSON on stdout (or `--json FILE`), with
//! optional per-radius CSV tables via `--csv FILE`. Exit codes: 0 on
//! success, 2 when an audited inequality or verification fails, 1 on
//! usage or data errors.

mod app;
mod source;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "gpot", version, about = "Potential theory on weighted graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Exact-rational mode where supported (classification, examples).
    #[arg(long, global = true)]
    pub exact: bool,
    /// Tolerance for classifications and audits.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for randomized audits (always reported).
    #[arg(long, global = true, default_value_t = 424242)]
    pub seed: u64,
    /// Write the JSON report to a file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub json: Option<String>,
    /// Write a CSV table (radius/level keyed) next to the report.
    #[arg(long, global = true, value_name = "FILE")]
    pub csv: Option<String>,
}

#[derive(Args, Clone)]
pub struct GraphSource {
    /// Graph file (`-` for stdin); explicit sections or a #generator block.
    #[arg(long, value_name = "FILE")]
    pub graph: Option<String>,
    /// Inline generator spec, e.g. `line:radius=40,halo=2`.
    #[arg(long, alias = "generator", value_name = "SPEC")]
    pub gen: Option<String>,
}

#[derive(Args, Clone)]
pub struct MetricChoice {
    /// Metric kind.
    #[arg(long, default_value = "delta", value_parser = ["delta", "delta-trunc", "natural", "file"])]
    pub kind: String,
    /// Truncation radius for `delta-trunc`.
    #[arg(long)]
    pub trunc: Option<f64>,
    /// Edge-length file for `--kind file` (`id id length` lines).
    #[arg(long, value_name = "FILE")]
    pub lengths: Option<String>,
    /// Base vertex of the metric.
    #[arg(long, default_value_t = 0, value_name = "ID")]
    pub base: i64,
}

#[derive(Subcommand)]
pub enum Verb {
    /// Validate, classify, and measure scalar fields on graphs.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Build and verify intrinsic/compatible pseudo metrics.
    Metric {
        #[command(subcommand)]
        cmd: MetricCmd,
    },
    /// Dirichlet and Green solvers, capacity, recurrence, heat probes.
    Potential {
        #[command(subcommand)]
        cmd: PotentialCmd,
    },
    /// Liouville-criterion profiles and inequality audits.
    Liouville {
        #[command(subcommand)]
        cmd: LiouvilleCmd,
    },
    /// Harmonic maps into Hadamard spaces.
    Hmap {
        #[command(subcommand)]
        cmd: HmapCmd,
    },
    /// Generate the counter-example families.
    Examples {
        #[command(subcommand)]
        cmd: ExamplesCmd,
    },
}

#[derive(Subcommand)]
pub enum GraphCmd {
    /// Check graph invariants and report connectivity.
    Validate {
        #[command(flatten)]
        src: GraphSource,
    },
    /// Classify a field as harmonic/sub/superharmonic over a region.
    Classify {
        #[command(flatten)]
        src: GraphSource,
        /// Region: `all`, `interior`, `abs<=K` (or `|x|<=K`), `ids:a,b,c`.
        #[arg(long, default_value = "interior")]
        region: String,
    },
    /// Energy of the field carried by the graph source.
    Energy {
        #[command(flatten)]
        src: GraphSource,
    },
    /// Lp norm of the field; `inf` for the sup norm.
    Norm {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        p: String,
        /// Allow the quasi-norm range p in (0,1).
        #[arg(long)]
        quasi: bool,
    },
}

#[derive(Subcommand)]
pub enum MetricCmd {
    /// Build a metric and report edge lengths and jump size.
    Build {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
    },
    /// Verify the intrinsic inequality and the compatibility certificate.
    Verify {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long)]
        intrinsic: bool,
        #[arg(long)]
        compatible: bool,
        /// Radii for the compatibility certificate, e.g. `0.5,1,1.5`.
        #[arg(long, default_value = "")]
        radii: String,
    },
    /// Enumerate distance balls around a base vertex.
    Balls {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        /// Base vertex (overrides the metric base).
        #[arg(long, value_name = "ID")]
        o: Option<i64>,
        #[arg(long)]
        radii: String,
    },
    /// Evaluate the cut-off field and audit its energy bound.
    Cutoff {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
    },
}

#[derive(Subcommand)]
pub enum PotentialCmd {
    /// Solve the Dirichlet problem: boundary data from the #field section.
    Dirichlet {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        region: String,
        /// Write the solved field as a graph-format file.
        #[arg(long, value_name = "FILE")]
        field_out: Option<String>,
    },
    /// Green's function sequence along an exhaustion.
    Green {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long, default_value_t = 0)]
        x: i64,
        #[arg(long)]
        y: Option<i64>,
        /// `hops:a,b,c` or `balls:r1,r2` (ranges `a..b[..step]` allowed).
        #[arg(long)]
        exhaustion: String,
        #[command(flatten)]
        metric: MetricChoice,
    },
    /// Capacity sequence along an exhaustion.
    Capacity {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long, default_value_t = 0)]
        x: i64,
        #[arg(long)]
        exhaustion: String,
        #[command(flatten)]
        metric: MetricChoice,
    },
    /// Combined recurrence diagnostics.
    Recurrence {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long, default_value_t = 0)]
        o: i64,
        #[arg(long)]
        exhaustion: Option<String>,
        /// Radii for the volume criterion.
        #[arg(long)]
        radii: Option<String>,
        /// Steps of the transition-matrix partial sums.
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        metric: MetricChoice,
    },
    /// Royden-type splitting along an exhaustion (field from #field).
    Royden {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        exhaustion: String,
        #[command(flatten)]
        metric: MetricChoice,
    },
    /// Heat semigroup: evolve the field on a set, or probe an exhaustion.
    Heat {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        t: f64,
        /// Region for a single application (`all`, `interior`, ...).
        #[arg(long)]
        set: Option<String>,
        /// Stochastic-completeness probe along this exhaustion.
        #[arg(long)]
        exhaustion: Option<String>,
        #[arg(long, default_value_t = 0)]
        o: i64,
        #[command(flatten)]
        metric: MetricChoice,
    },
}

#[derive(Subcommand)]
pub enum LiouvilleCmd {
    /// Karp-criterion profile of the #field (or canonical field).
    Karp {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        radii: String,
        /// Audit |f| instead of f (signed harmonic examples).
        #[arg(long)]
        abs: bool,
    },
    /// Caccioppoli-type inequality audit on a ball pair.
    Caccioppoli {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "R")]
        big_r: Option<f64>,
        /// Strengthened left side (p >= 2).
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        abs: bool,
        /// Run the golden-suite calibration instead of a single audit.
        #[arg(long)]
        calibrate: bool,
    },
    /// Key-estimate audit with a cut-off test function.
    Keyest {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long)]
        abs: bool,
    },
    /// Mean-value inequalities: single triple or randomized grid.
    Mvi {
        /// `default` (100000 samples) or a sample count.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Growth classification against r^q.
    Growth {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        /// Exponent of the comparison growth function r^q.
        #[arg(long)]
        power: f64,
        #[arg(long)]
        abs: bool,
    },
    /// Moment partial sums and the annulus decay probe.
    Moment {
        #[command(flatten)]
        src: GraphSource,
        #[command(flatten)]
        metric: MetricChoice,
        #[arg(long)]
        q: f64,
        /// Also run the decay probe with this beta.
        #[arg(long)]
        decay_beta: Option<f64>,
        #[arg(long)]
        radii: Option<String>,
    },
    /// Counter-example generators (same as the top-level verb).
    Examples {
        #[command(subcommand)]
        cmd: ExamplesCmd,
    },
}

#[derive(Subcommand)]
pub enum HmapCmd {
    /// Solve the harmonic-map problem by barycenter relaxation.
    Solve {
        #[command(flatten)]
        src: GraphSource,
        /// Target: `euclidean:N`, `tree:FILE`, or `disk`.
        #[arg(long)]
        target: String,
        /// Map file with boundary values (`id coords...` lines).
        #[arg(long, value_name = "FILE")]
        boundary: String,
        #[arg(long)]
        region: String,
        #[arg(long, default_value_t = 200000)]
        max_iters: usize,
        /// Sequential sweeps instead of synchronous ones.
        #[arg(long)]
        gauss_seidel: bool,
        /// Write the solved map (`id coords...` lines).
        #[arg(long, value_name = "FILE")]
        map_out: Option<String>,
    },
    /// Check the harmonic-map condition of a given map.
    Check {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        target: String,
        #[arg(long, value_name = "FILE")]
        map: String,
        #[arg(long)]
        region: String,
    },
    /// Map energy.
    Energy {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        target: String,
        #[arg(long, value_name = "FILE")]
        map: String,
    },
    /// Subharmonicity audit of distance functions of a map.
    Subharmonic {
        #[command(flatten)]
        src: GraphSource,
        #[arg(long)]
        target: String,
        #[arg(long, value_name = "FILE")]
        map: String,
        /// Reference point (model coordinates, comma separated).
        #[arg(long)]
        y: String,
        #[arg(long)]
        region: String,
    },
    /// Jensen-inequality audit of barycenters.
    Jensen {
        #[arg(long)]
        target: String,
        /// Measure file (`weight coords...` lines); omit for sampling.
        #[arg(long, value_name = "FILE")]
        measure: Option<String>,
        /// Reference point; defaults to a sampled one per measure.
        #[arg(long)]
        y0: Option<String>,
        /// Random measures to sample when no file is given.
        #[arg(long, default_value_t = 10000)]
        samples: usize,
    },
}

#[derive(Subcommand)]
pub enum ExamplesCmd {
    /// Finite-volume line graph with its harmonic function.
    FiniteVolume {
        #[arg(long, alias = "N")]
        n: u32,
        /// Write to a file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
    /// Finite-volume line glued to an infinite-volume attachment.
    InfiniteVolume {
        #[arg(long, alias = "N")]
        n: u32,
        #[arg(long, default_value = "half-line", value_parser = ["half-line", "binary-tree"])]
        attach: String,
        #[arg(long, default_value_t = 12)]
        attach_radius: u32,
        #[arg(long, value_name = "FILE")]
        out: Option<String>,
    },
}

fn main() {
    // Usage errors exit with 1; code 2 is reserved for failed audits.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            e.print().expect("rendering a clap error");
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    std::process::exit(app::run(cli));
}
