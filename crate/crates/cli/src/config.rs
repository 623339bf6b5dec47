//! TOML configuration for `generate` and `benchmark`.
//!
//! Semantic validation errors carry the line of the offending value.

use std::path::{Path, PathBuf};

use lingam_order::simulate::{GraphScheme, SimConfig};
use lingam_order::{Dag, NoiseFamily};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, Result};
use crate::io::{parse_edge_list, read_to_string};

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

struct Ctx<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Ctx<'_> {
    fn err<T>(&self, span: std::ops::Range<usize>, msg: impl std::fmt::Display) -> Result<T> {
        Err(CliError::config(self.path, format!("line {}: {msg}", line_of(self.text, span.start))))
    }

    fn family(&self, v: &Spanned<String>) -> Result<NoiseFamily> {
        match NoiseFamily::parse(v.get_ref()) {
            Ok(NoiseFamily::Gaussian) => self.err(v.span(), "gaussian noise is not a valid data-generating family"),
            Ok(f) => Ok(f),
            Err(e) => self.err(v.span(), e),
        }
    }
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let loc = e.span().map(|s| format!("line {}: ", line_of(text, s.start))).unwrap_or_default();
        CliError::config(path, format!("{loc}{}", e.message()))
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    scheme: Spanned<String>,
    root_frac: Option<Spanned<f64>>,
    min_parents: Option<Spanned<usize>>,
    max_parents: Option<Spanned<usize>>,
    edges: Option<Vec<(usize, usize)>>,
    edge_file: Option<PathBuf>,
}

#[derive(Debug)]
struct RawRanges {
    coef_low: Option<Spanned<f64>>,
    coef_high: Option<Spanned<f64>>,
    scale_low: Option<Spanned<f64>>,
    scale_high: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerate {
    p: Spanned<usize>,
    n: Spanned<usize>,
    seed: u64,
    family: Spanned<String>,
    coef_low: Option<Spanned<f64>>,
    coef_high: Option<Spanned<f64>>,
    scale_low: Option<Spanned<f64>>,
    scale_high: Option<Spanned<f64>>,
    graph: Spanned<RawGraph>,
}

/// Graph description shared by both configs; `p` is resolved later for
/// large sparse graphs.
#[derive(Debug, Clone)]
pub enum GraphSpec {
    LargeSparse { root_frac: f64, min_parents: usize, max_parents: usize },
    Fixed(Dag),
}

#[derive(Debug, Clone, Copy)]
pub struct Ranges {
    pub coef: (f64, f64),
    pub scale: (f64, f64),
}

fn resolve_graph(ctx: &Ctx, g: &Spanned<RawGraph>, p: Option<&Spanned<usize>>) -> Result<GraphSpec> {
    let raw = g.get_ref();
    match raw.scheme.get_ref().as_str() {
        "large-sparse" => {
            let root_frac = raw.root_frac.as_ref().map_or(0.05, |v| *v.get_ref());
            let min_parents = raw.min_parents.as_ref().map_or(1, |v| *v.get_ref());
            let max_parents = raw.max_parents.as_ref().map_or(2, |v| *v.get_ref());
            if !(root_frac > 0.0 && root_frac < 1.0) {
                let span = raw.root_frac.as_ref().map_or(g.span(), |v| v.span());
                return ctx.err(span, format!("root_frac must lie in (0, 1), got {root_frac}"));
            }
            if min_parents < 1 {
                let span = raw.min_parents.as_ref().map_or(g.span(), |v| v.span());
                return ctx.err(span, "min_parents must be at least 1");
            }
            if max_parents < min_parents {
                let span = raw.max_parents.as_ref().map_or(g.span(), |v| v.span());
                return ctx.err(span, format!("max_parents ({max_parents}) is below min_parents ({min_parents})"));
            }
            Ok(GraphSpec::LargeSparse { root_frac, min_parents, max_parents })
        }
        "edges" => {
            let edges = match (&raw.edges, &raw.edge_file) {
                (Some(e), None) => e.clone(),
                (None, Some(f)) => {
                    let f = ctx.path.parent().map_or(f.clone(), |d| d.join(f));
                    parse_edge_list(&f, &read_to_string(&f)?)?
                }
                _ => return ctx.err(g.span(), "scheme `edges` needs exactly one of `edges` or `edge_file`"),
            };
            let p = match p {
                Some(p) => *p.get_ref(),
                None => edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0),
            };
            match Dag::from_edges(p, &edges) {
                Ok(d) => Ok(GraphSpec::Fixed(d)),
                Err(e) => ctx.err(g.span(), e),
            }
        }
        other => ctx.err(raw.scheme.span(), format!("unknown graph scheme `{other}` (expected `large-sparse` or `edges`)")),
    }
}

fn resolve_ranges(ctx: &Ctx, r: &RawRanges, graph: &GraphSpec) -> Result<Ranges> {
    let (scale_lo, scale_hi) = match graph {
        GraphSpec::LargeSparse { .. } => (0.25, 0.9),
        GraphSpec::Fixed(_) => (0.4, 0.7),
    };
    let get = |v: &Option<Spanned<f64>>, d: f64| v.as_ref().map_or(d, |s| *s.get_ref());
    let coef = (get(&r.coef_low, 0.4), get(&r.coef_high, 0.9));
    let scale = (get(&r.scale_low, scale_lo), get(&r.scale_high, scale_hi));
    for (name, lo_f, hi_f, (lo, hi)) in [
        ("coef", &r.coef_low, &r.coef_high, coef),
        ("scale", &r.scale_low, &r.scale_high, scale),
    ] {
        if !(lo > 0.0) {
            return ctx.err(lo_f.as_ref().map_or(0..0, |s| s.span()), format!("{name}_low must be positive, got {lo}"));
        }
        if !(hi >= lo && hi.is_finite()) {
            return ctx.err(hi_f.as_ref().map_or(0..0, |s| s.span()), format!("{name}_high ({hi}) must be at least {name}_low ({lo})"));
        }
    }
    Ok(Ranges { coef, scale })
}

pub fn sim_config(graph: &GraphSpec, ranges: Ranges, p: usize, n: usize, family: NoiseFamily, seed: u64) -> SimConfig {
    let graph = match graph {
        GraphSpec::LargeSparse { root_frac, min_parents, max_parents } => {
            GraphScheme::LargeSparse { root_frac: *root_frac, min_parents: *min_parents, max_parents: *max_parents }
        }
        GraphSpec::Fixed(d) => GraphScheme::FromDag(d.clone()),
    };
    SimConfig {
        p,
        graph,
        coef_low: ranges.coef.0,
        coef_high: ranges.coef.1,
        scale_low: ranges.scale.0,
        scale_high: ranges.scale.1,
        family,
        n,
        seed,
    }
}

pub fn load_generate(path: &Path) -> Result<SimConfig> {
    let text = read_to_string(path)?;
    parse_generate(path, &text)
}

pub fn parse_generate(path: &Path, text: &str) -> Result<SimConfig> {
    let raw: RawGenerate = parse_toml(path, text)?;
    let ctx = Ctx { path, text };
    let family = ctx.family(&raw.family)?;
    if *raw.n.get_ref() == 0 {
        return ctx.err(raw.n.span(), "n must be positive");
    }
    let graph = resolve_graph(&ctx, &raw.graph, Some(&raw.p))?;
    let p = *raw.p.get_ref();
    match &graph {
        GraphSpec::LargeSparse { .. } if p < 2 => return ctx.err(raw.p.span(), "large-sparse graphs need p >= 2"),
        _ if p == 0 => return ctx.err(raw.p.span(), "p must be positive"),
        _ => {}
    }
    let ranges = resolve_ranges(&ctx, &RawRanges { coef_low: raw.coef_low, coef_high: raw.coef_high, scale_low: raw.scale_low, scale_high: raw.scale_high }, &graph)?;
    let cfg = sim_config(&graph, ranges, p, *raw.n.get_ref(), family, raw.seed);
    cfg.validate().map_err(|e| CliError::config(path, e))?;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBenchmark {
    base_seed: u64,
    replicates: usize,
    p: Option<Spanned<Vec<usize>>>,
    n_multipliers: Spanned<Vec<f64>>,
    families: Spanned<Vec<String>>,
    score_family: Option<Spanned<String>>,
    modes: Spanned<Vec<String>>,
    neighborhoods: Spanned<Vec<String>>,
    coef_low: Option<Spanned<f64>>,
    coef_high: Option<Spanned<f64>>,
    scale_low: Option<Spanned<f64>>,
    scale_high: Option<Spanned<f64>>,
    graph: Option<Spanned<RawGraph>>,
}

/// One cell of the benchmark grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub p: usize,
    pub n: usize,
    pub n_multiplier: f64,
    pub data_family: NoiseFamily,
    pub score_family: NoiseFamily,
    pub mode: lingam_order::SortMode,
    pub neighborhoods: NeighborhoodSpec,
}

/// Neighborhood construction used inside the benchmark loop.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborhoodSpec {
    /// True Markov blankets of the generating graph.
    Blankets,
    Full,
    /// Top-`m` absolute correlations on a `frac` holdout of each replicate.
    Correlated { m: usize, frac: f64 },
}

impl NeighborhoodSpec {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mb" => Ok(NeighborhoodSpec::Blankets),
            "full" => Ok(NeighborhoodSpec::Full),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["corr", m, frac] => {
                        let m = m.parse().map_err(|_| format!("bad neighborhood size in `{s}`"))?;
                        let frac: f64 = frac.parse().map_err(|_| format!("bad holdout fraction in `{s}`"))?;
                        if !(frac > 0.0 && frac < 1.0) {
                            return Err(format!("holdout fraction must lie in (0, 1) in `{s}`"));
                        }
                        Ok(NeighborhoodSpec::Correlated { m, frac })
                    }
                    _ => Err(format!("unknown neighborhood scheme `{s}` (expected mb, full or corr:<m>:<frac>)")),
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            NeighborhoodSpec::Blankets => "mb".into(),
            NeighborhoodSpec::Full => "full".into(),
            NeighborhoodSpec::Correlated { m, frac } => format!("corr:{m}:{frac}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub base_seed: u64,
    pub replicates: usize,
    pub graph: GraphSpec,
    pub ranges: Ranges,
    pub cells: Vec<Cell>,
}

pub fn load_benchmark(path: &Path) -> Result<BenchmarkConfig> {
    let text = read_to_string(path)?;
    parse_benchmark(path, &text)
}

pub fn parse_benchmark(path: &Path, text: &str) -> Result<BenchmarkConfig> {
    let raw: RawBenchmark = parse_toml(path, text)?;
    let ctx = Ctx { path, text };
    let graph = match &raw.graph {
        Some(g) => resolve_graph(&ctx, g, None)?,
        None => GraphSpec::LargeSparse { root_frac: 0.05, min_parents: 1, max_parents: 2 },
    };
    let ps: Vec<usize> = match (&graph, &raw.p) {
        (GraphSpec::Fixed(d), None) => vec![d.p()],
        (GraphSpec::Fixed(d), Some(p)) => {
            if p.get_ref().iter().any(|&q| q != d.p()) {
                return ctx.err(p.span(), format!("p must equal the edge-list graph size {}", d.p()));
            }
            p.get_ref().clone()
        }
        (GraphSpec::LargeSparse { .. }, Some(p)) => {
            if p.get_ref().iter().any(|&q| q < 2) {
                return ctx.err(p.span(), "large-sparse graphs need p >= 2");
            }
            p.get_ref().clone()
        }
        (GraphSpec::LargeSparse { .. }, None) => {
            return Err(CliError::config(path, "missing field `p` (required for large-sparse graphs)"))
        }
    };
    let ranges = resolve_ranges(&ctx, &RawRanges { coef_low: raw.coef_low, coef_high: raw.coef_high, scale_low: raw.scale_low, scale_high: raw.scale_high }, &graph)?;
    if let Some(m) = raw.n_multipliers.get_ref().iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return ctx.err(raw.n_multipliers.span(), format!("n multipliers must be positive, got {m}"));
    }
    let families = raw
        .families
        .get_ref()
        .iter()
        .map(|f| ctx.family(&Spanned::new(raw.families.span(), f.clone())))
        .collect::<Result<Vec<_>>>()?;
    let score_family = raw.score_family.as_ref().map(|f| ctx.family(f)).transpose()?;
    let modes = raw
        .modes
        .get_ref()
        .iter()
        .map(|m| lingam_order::SortMode::parse(m).or_else(|e| ctx.err(raw.modes.span(), e)))
        .collect::<Result<Vec<_>>>()?;
    let nbhds = raw
        .neighborhoods
        .get_ref()
        .iter()
        .map(|s| NeighborhoodSpec::parse(s).or_else(|e| ctx.err(raw.neighborhoods.span(), e)))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for &p in &ps {
        for &mult in raw.n_multipliers.get_ref() {
            let n = ((mult * p as f64).round() as usize).max(1);
            for &data_family in &families {
                for &mode in &modes {
                    for nb in &nbhds {
                        if let NeighborhoodSpec::Correlated { m, .. } = nb {
                            if *m >= p {
                                return ctx.err(raw.neighborhoods.span(), format!("neighborhood size {m} must be below p = {p}"));
                            }
                        }
                        cells.push(Cell {
                            p,
                            n,
                            n_multiplier: mult,
                            data_family,
                            score_family: score_family.unwrap_or(data_family),
                            mode,
                            neighborhoods: nb.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(BenchmarkConfig { base_seed: raw.base_seed, replicates: raw.replicates, graph, ranges, cells })
}
