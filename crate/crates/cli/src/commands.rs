//! Command implementations. Each command computes everything in memory and
//! writes its outputs only once all of them are ready.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lingam_order::metrics::{fit_coefficients, heldout_loglik, order_error, reversed_edge_count, FittedSem};
use lingam_order::neighborhoods::{blanket_recall, full_neighborhoods, markov_blankets, top_correlated};
use lingam_order::regression::{standardize_with_stats, ColumnStats};
use lingam_order::simulate::{derive_seed, simulate, stream_rng, Simulation};
use lingam_order::sorter::{DegenerateNode, StepTrace, Truncation};
use lingam_order::{is_topological, sort, DataMatrix, Dag, NeighborhoodSets, NoiseFamily, Ordering, SortConfig, SortMode};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{self, BenchmarkConfig, Cell, NeighborhoodSpec};
use crate::error::{CliError, Result};
use crate::io::{data_to_csv, read_csv, read_json, to_json_pretty, write_file, EdgeJson, FamilyJson, TruthFile};

/// RNG stream used for the holdout shuffle.
const SPLIT_STREAM: u64 = 8;

pub fn generate(config: &Path, data_out: &Path, truth_out: &Path) -> Result<()> {
    let cfg = config::load_generate(config)?;
    let sim = simulate(&cfg)?;
    let truth = TruthFile::new(&sim.truth, &sim.generating_order, cfg.seed);
    log::info!("generated n={} p={} with {} edges", cfg.n, cfg.p, sim.truth.dag().edge_count());
    let csv = data_to_csv(&sim.data);
    let json = to_json_pretty(&truth);
    write_file(data_out, &csv)?;
    write_file(truth_out, json.as_bytes()).inspect_err(|_| {
        let _ = std::fs::remove_file(data_out);
    })
}

/// Neighborhood source accepted by `sort` and `fit`.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborhoodArg {
    Full,
    File(PathBuf),
    Correlated { m: usize, frac: f64, seed: u64 },
    Blankets(PathBuf),
}

impl NeighborhoodArg {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        if s == "full" {
            return Ok(NeighborhoodArg::Full);
        }
        if let Some(path) = s.strip_prefix("mb:") {
            return Ok(NeighborhoodArg::Blankets(path.into()));
        }
        if let Some(rest) = s.strip_prefix("corr:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [m, frac, seed] = parts.as_slice() else {
                return Err(format!("expected corr:<m>:<frac>:<seed>, got `{s}`"));
            };
            let m = m.parse().map_err(|_| format!("bad neighborhood size `{m}`"))?;
            let frac: f64 = frac.parse().map_err(|_| format!("bad holdout fraction `{frac}`"))?;
            let seed = seed.parse().map_err(|_| format!("bad seed `{seed}`"))?;
            if !(frac > 0.0 && frac < 1.0) {
                return Err(format!("holdout fraction must lie in (0, 1), got {frac}"));
            }
            return Ok(NeighborhoodArg::Correlated { m, frac, seed });
        }
        Ok(NeighborhoodArg::File(s.into()))
    }
}

/// Splits rows into a holdout of `round(frac * n)` rows and the remainder,
/// both kept in their original row order.
pub fn holdout_split(x: &DataMatrix, frac: f64, seed: u64) -> lingam_order::Result<(DataMatrix, DataMatrix)> {
    let n = x.n();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, SPLIT_STREAM));
    let h = ((frac * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let (hold, rest) = idx.split_at_mut(h);
    hold.sort_unstable();
    rest.sort_unstable();
    Ok((x.select_rows(hold)?, x.select_rows(rest)?))
}

/// Resolves the neighborhood argument. Returns the sets and the rows left for
/// the downstream fit (all of them unless a correlation holdout was split off).
fn build_neighborhoods(arg: &NeighborhoodArg, x: DataMatrix) -> Result<(NeighborhoodSets, DataMatrix)> {
    let p = x.p();
    let check = |path: &Path, found: usize| {
        if found != p {
            Err(CliError::format(path, format!("neighborhoods are for p = {found}, data has p = {p}")))
        } else {
            Ok(())
        }
    };
    match arg {
        NeighborhoodArg::Full => Ok((full_neighborhoods(p), x)),
        NeighborhoodArg::File(path) => {
            let nb: NeighborhoodSets = read_json(path)?;
            check(path, nb.p())?;
            Ok((nb, x))
        }
        NeighborhoodArg::Blankets(path) => {
            let truth = TruthFile::read(path)?;
            check(path, truth.p)?;
            Ok((markov_blankets(&truth.dag()?), x))
        }
        NeighborhoodArg::Correlated { m, frac, seed } => {
            if *m >= p {
                return Err(CliError::Usage(format!("neighborhood size {m} must be below p = {p}")));
            }
            let (hold, rest) = holdout_split(&x, *frac, *seed)?;
            log::info!("correlation screen on {} rows, sorting on {}", hold.n(), rest.n());
            Ok((top_correlated(&hold, *m)?, rest))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SortArgs {
    pub data: PathBuf,
    pub out: Option<PathBuf>,
    pub family: NoiseFamily,
    pub mode: SortMode,
    pub neighborhoods: NeighborhoodArg,
    pub trace: bool,
    pub restrict_updates: bool,
    pub timings: bool,
}

#[derive(Debug, Serialize)]
struct SortOutput {
    ordering: Ordering,
    family: FamilyJson,
    mode: &'static str,
    n: usize,
    update_count: usize,
    skipped_updates: usize,
    wall_time_ms: Option<f64>,
    degenerate: Vec<DegenerateNode>,
    truncations: Vec<Truncation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_scores: Option<Vec<StepTrace>>,
}

pub fn sort_cmd(args: &SortArgs) -> Result<String> {
    args.family.validate()?;
    if args.family == NoiseFamily::Gaussian {
        return Err(CliError::Usage("the gaussian family cannot be used for sorting".into()));
    }
    let x = read_csv(&args.data)?;
    let (nb, x) = build_neighborhoods(&args.neighborhoods, x)?;
    let mut cfg = SortConfig::new(args.family, args.mode, nb).with_trace(args.trace);
    cfg.restrict_updates_to_neighborhood = args.restrict_updates;
    let res = sort(&x, &cfg)?;
    for d in &res.degenerate {
        log::warn!("node {} had a zero residual at step {}", d.node, d.step);
    }
    let out = SortOutput {
        ordering: res.ordering,
        family: args.family.into(),
        mode: args.mode.as_str(),
        n: x.n(),
        update_count: res.update_count,
        skipped_updates: res.skipped_updates,
        wall_time_ms: args.timings.then_some(res.wall_time.as_secs_f64() * 1e3),
        degenerate: res.degenerate,
        truncations: res.truncations,
        step_scores: res.step_scores,
    };
    let json = to_json_pretty(&out);
    if let Some(path) = &args.out {
        write_file(path, json.as_bytes())?;
        Ok(String::new())
    } else {
        Ok(json)
    }
}

/// Reads an ordering either as a bare array or as the object written by `sort`.
fn read_ordering(path: &Path) -> Result<Ordering> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Bare(Ordering),
        Wrapped { ordering: Ordering },
    }
    Ok(match read_json::<Either>(path)? {
        Either::Bare(o) | Either::Wrapped { ordering: o } => o,
    })
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    order_error: f64,
    is_topological: bool,
    reversed_edge_count: usize,
}

pub fn eval(truth: &Path, ordering: &Path) -> Result<String> {
    let t = TruthFile::read(truth)?;
    let ord = read_ordering(ordering)?;
    if ord.p() != t.p {
        return Err(CliError::Compute(lingam_order::Error::DimensionMismatch { expected: t.p, found: ord.p() }));
    }
    let dag = t.dag()?;
    Ok(to_json_pretty(&EvalOutput {
        order_error: order_error(&dag, &ord)?,
        is_topological: is_topological(&dag, &ord)?,
        reversed_edge_count: reversed_edge_count(&dag, &ord)?,
    }))
}

/// One benchmark replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub n_multiplier: f64,
    pub family: String,
    pub score_family: String,
    pub mode: String,
    pub neighborhoods: String,
    pub order_error: Option<f64>,
    pub update_count: Option<usize>,
    pub wall_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blanket_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct RunOutcome {
    order_error: f64,
    update_count: usize,
    wall_time_ms: f64,
    blanket_recall: Option<f64>,
}

fn run_replicate(cfg: &BenchmarkConfig, cell: &Cell, seed: u64) -> lingam_order::Result<RunOutcome> {
    let sim_cfg = config::sim_config(&cfg.graph, cfg.ranges, cell.p, cell.n, cell.data_family, seed);
    let Simulation { truth, data, .. } = simulate(&sim_cfg)?;
    let dag: &Dag = truth.dag();
    let (nb, x, recall) = match &cell.neighborhoods {
        NeighborhoodSpec::Blankets => (markov_blankets(dag), data, None),
        NeighborhoodSpec::Full => (full_neighborhoods(cell.p), data, None),
        NeighborhoodSpec::Correlated { m, frac } => {
            let (hold, rest) = holdout_split(&data, *frac, derive_seed(seed, SPLIT_STREAM))?;
            let nb = top_correlated(&hold, *m)?;
            let recall = blanket_recall(&nb, dag);
            (nb, rest, Some(recall))
        }
    };
    let start = Instant::now();
    let res = sort(&x, &SortConfig::new(cell.score_family, cell.mode, nb))?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(RunOutcome { order_error: order_error(dag, &res.ordering)?, update_count: res.update_count, wall_time_ms, blanket_recall: recall })
}

/// Seed of replicate `r`; shared across cells so that modes and
/// neighborhood schemes are compared on identical draws.
pub fn replicate_seed(base_seed: u64, replicate: usize) -> u64 {
    derive_seed(base_seed, replicate as u64)
}

pub fn benchmark_records(cfg: &BenchmarkConfig, timings: bool) -> Vec<BenchRecord> {
    let jobs: Vec<(usize, usize)> =
        (0..cfg.cells.len()).flat_map(|c| (0..cfg.replicates).map(move |r| (c, r))).collect();
    let mut records: Vec<BenchRecord> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cell = &cfg.cells[c];
            let seed = replicate_seed(cfg.base_seed, r);
            let outcome = run_replicate(cfg, cell, seed);
            if let Err(e) = &outcome {
                log::warn!("cell {c} replicate {r}: {e}");
            }
            let ok = outcome.as_ref().ok();
            BenchRecord {
                cell: c,
                replicate: r,
                seed,
                p: cell.p,
                n: cell.n,
                n_multiplier: cell.n_multiplier,
                family: cell.data_family.to_string(),
                score_family: cell.score_family.to_string(),
                mode: cell.mode.as_str().to_string(),
                neighborhoods: cell.neighborhoods.label(),
                order_error: ok.map(|o| o.order_error),
                update_count: ok.map(|o| o.update_count),
                wall_time_ms: ok.filter(|_| timings).map(|o| o.wall_time_ms),
                blanket_recall: ok.and_then(|o| o.blanket_recall),
                error: outcome.err().map(|e| e.to_string()),
            }
        })
        .collect();
    records.sort_by_key(|r| (r.cell, r.replicate));
    records
}

pub fn benchmark(config: &Path, out: &Path, timings: bool) -> Result<()> {
    let cfg = config::load_benchmark(config)?;
    log::info!("{} cells x {} replicates", cfg.cells.len(), cfg.replicates);
    let records = benchmark_records(&cfg, timings);
    let mut buf = String::new();
    for r in &records {
        buf.push_str(&serde_json::to_string(r).expect("serializable"));
        buf.push('\n');
    }
    write_file(out, buf.as_bytes())
}

/// Fitted model together with the training standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub p: usize,
    pub family: FamilyJson,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub edges: Vec<EdgeJson>,
    pub scales: Vec<f64>,
}

impl ModelFile {
    fn new(sem: &FittedSem, stats: &ColumnStats) -> Self {
        let edges = sem
            .coefficients
            .iter()
            .enumerate()
            .flat_map(|(to, row)| row.iter().map(move |&(from, weight)| EdgeJson { from, to, weight }))
            .collect();
        ModelFile {
            p: sem.p(),
            family: sem.family.into(),
            means: stats.means.clone(),
            sds: stats.sds.clone(),
            edges,
            scales: sem.scales.clone(),
        }
    }

    fn parts(&self, path: &Path) -> Result<(FittedSem, ColumnStats)> {
        let p = self.p;
        if self.means.len() != p || self.sds.len() != p || self.scales.len() != p {
            return Err(CliError::format(path, format!("model vectors must have length p = {p}")));
        }
        let mut coefficients = vec![Vec::new(); p];
        for e in &self.edges {
            if e.from >= p || e.to >= p {
                return Err(CliError::format(path, format!("edge {} -> {} out of range", e.from, e.to)));
            }
            coefficients[e.to].push((e.from, e.weight));
        }
        for row in &mut coefficients {
            row.sort_by_key(|&(j, _)| j);
        }
        let family = self.family.to_family().map_err(|e| CliError::format(path, e))?;
        Ok((FittedSem { family, coefficients, scales: self.scales.clone() }, ColumnStats { means: self.means.clone(), sds: self.sds.clone() }))
    }
}

pub struct FitArgs {
    pub data: PathBuf,
    pub ordering: PathBuf,
    pub family: NoiseFamily,
    pub neighborhoods: NeighborhoodArg,
    pub out: PathBuf,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    args.family.validate()?;
    let x = read_csv(&args.data)?;
    let ord = read_ordering(&args.ordering)?;
    if ord.p() != x.p() {
        return Err(CliError::Compute(lingam_order::Error::DimensionMismatch { expected: x.p(), found: ord.p() }));
    }
    let (nb, x) = build_neighborhoods(&args.neighborhoods, x)?;
    let (z, stats) = standardize_with_stats(&x)?;
    let sem = fit_coefficients(&z, &ord, &nb, args.family)?;
    write_file(&args.out, to_json_pretty(&ModelFile::new(&sem, &stats)).as_bytes())
}

#[derive(Debug, Serialize)]
struct LoglikOutput {
    mean_loglik: f64,
    units: &'static str,
    n: usize,
    p: usize,
}

pub fn loglik(model: &Path, test: &Path) -> Result<String> {
    let m: ModelFile = read_json(model)?;
    let (sem, stats) = m.parts(model)?;
    let x = read_csv(test)?;
    if x.p() != sem.p() {
        return Err(CliError::Compute(lingam_order::Error::DimensionMismatch { expected: sem.p(), found: x.p() }));
    }
    let z = stats.apply(&x)?;
    Ok(to_json_pretty(&LoglikOutput {
        mean_loglik: heldout_loglik(&z, &sem)?,
        units: "nats per observation per variable",
        n: x.n(),
        p: x.p(),
    }))
}
