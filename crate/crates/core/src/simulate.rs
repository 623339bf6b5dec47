//! Random linear non-Gaussian SEMs and iid data drawn from them.
//!
//! All randomness comes from ChaCha8 streams keyed by a single 64-bit master
//! seed. Each concern reads its own stream, and the noise for node `k` lives
//! on stream `NOISE_STREAM_BASE + k`, so a data matrix does not depend on the
//! order in which its columns are computed.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DataMatrix, Dag, NoiseFamily, Ordering, WeightedDag};

pub const GRAPH_STREAM: u64 = 0;
pub const WEIGHT_STREAM: u64 = 1;
pub const SCALE_STREAM: u64 = 2;
pub const NOISE_STREAM_BASE: u64 = 16;

/// The generator for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; used to derive child seeds from a parent seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphScheme {
    /// Random permutation; the first `ceil(root_frac * p)` nodes are roots and
    /// every later node takes between `min_parents` and `max_parents` parents
    /// among its predecessors.
    LargeSparse { root_frac: f64, min_parents: usize, max_parents: usize },
    FromDag(Dag),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: usize,
    pub graph: GraphScheme,
    pub coef_low: f64,
    pub coef_high: f64,
    pub scale_low: f64,
    pub scale_high: f64,
    pub family: NoiseFamily,
    pub n: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Large sparse graph with 5% roots, 1-2 parents, `|B| ∈ [0.4, 0.9]` and
    /// `θ ∈ [0.25, 0.9]`.
    pub fn large_sparse(p: usize, n: usize, family: NoiseFamily, seed: u64) -> Self {
        SimConfig {
            p,
            graph: GraphScheme::LargeSparse { root_frac: 0.05, min_parents: 1, max_parents: 2 },
            coef_low: 0.4,
            coef_high: 0.9,
            scale_low: 0.25,
            scale_high: 0.9,
            family,
            n,
            seed,
        }
    }

    /// Fixed topology with `|B| ∈ [0.4, 0.9]` and `θ ∈ [0.4, 0.7]`.
    pub fn from_dag(dag: Dag, n: usize, family: NoiseFamily, seed: u64) -> Self {
        SimConfig {
            p: dag.p(),
            graph: GraphScheme::FromDag(dag),
            coef_low: 0.4,
            coef_high: 0.9,
            scale_low: 0.4,
            scale_high: 0.7,
            family,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.coef_low > 0.0 && self.coef_low <= self.coef_high && self.coef_high.is_finite()) {
            return bad(format!("need 0 < coef_low <= coef_high, got [{}, {}]", self.coef_low, self.coef_high));
        }
        if !(self.scale_low > 0.0 && self.scale_low <= self.scale_high && self.scale_high.is_finite()) {
            return bad(format!("need 0 < scale_low <= scale_high, got [{}, {}]", self.scale_low, self.scale_high));
        }
        self.family.validate()?;
        match &self.graph {
            GraphScheme::LargeSparse { root_frac, min_parents, max_parents } => {
                if !(*root_frac > 0.0 && *root_frac < 1.0) {
                    return bad(format!("root_frac must lie in (0, 1), got {root_frac}"));
                }
                if *min_parents < 1 || max_parents < min_parents {
                    return bad(format!("need 1 <= min_parents <= max_parents, got {min_parents}..{max_parents}"));
                }
                if self.p < 2 {
                    return bad("large sparse graphs need p >= 2".into());
                }
            }
            GraphScheme::FromDag(d) => {
                if d.p() != self.p {
                    return Err(Error::DimensionMismatch { expected: self.p, found: d.p() });
                }
            }
        }
        Ok(())
    }
}

/// Number of root nodes for a given fraction: `ceil(root_frac * p)`.
pub fn root_count(p: usize, root_frac: f64) -> usize {
    ((root_frac * p as f64).ceil() as usize).clamp(1, p)
}

pub fn generate_large_sparse_dag<R: Rng + ?Sized>(
    p: usize,
    root_frac: f64,
    min_parents: usize,
    max_parents: usize,
    rng: &mut R,
) -> Result<(Dag, Ordering)> {
    if p < 2 || min_parents < 1 || max_parents < min_parents || !(root_frac > 0.0 && root_frac < 1.0) {
        return Err(Error::InvalidParameter("invalid large sparse graph parameters".into()));
    }
    let mut sigma: Vec<usize> = (0..p).collect();
    sigma.shuffle(rng);
    let roots = root_count(p, root_frac);
    let mut parents = vec![Vec::new(); p];
    for t in roots..p {
        let hi = max_parents.min(t);
        let lo = min_parents.min(hi);
        let count = rng.random_range(lo..=hi);
        parents[sigma[t]] = index::sample(rng, t, count).into_iter().map(|i| sigma[i]).collect();
    }
    Ok((Dag::new(parents)?, Ordering::new(sigma)?))
}

/// Edge weights with `|B_jk| ~ U[coef_low, coef_high]` and a fair random sign.
/// Aligned with the DAG's parent lists.
pub fn sample_weights<R: Rng + ?Sized>(dag: &Dag, coef_low: f64, coef_high: f64, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if !(coef_low > 0.0 && coef_low <= coef_high) {
        return Err(Error::InvalidParameter(format!("invalid coefficient range [{coef_low}, {coef_high}]")));
    }
    Ok(dag
        .parent_lists()
        .iter()
        .map(|pa| {
            pa.iter()
                .map(|_| {
                    let mag = if coef_low == coef_high { coef_low } else { rng.random_range(coef_low..=coef_high) };
                    if rng.random_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect()
        })
        .collect())
}

/// `n` iid draws from `family` at scale `theta`, all with mean zero.
///
/// `Gaussian` is a negative-control sampler only; it violates the
/// non-Gaussianity the ordering procedure relies on.
pub fn sample_noise<R: Rng + ?Sized>(family: NoiseFamily, theta: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    family.validate()?;
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise scale must be positive, got {theta}")));
    }
    let out = match family {
        NoiseFamily::Laplace => (0..n)
            .map(|_| {
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                -theta * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect(),
        NoiseFamily::Logistic => (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                theta * (u / (1.0 - u)).ln()
            })
            .collect(),
        NoiseFamily::ScaledT { df } => {
            let chi = ChiSquared::new(df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    let v: f64 = chi.sample(rng);
                    theta * z / (v / df).sqrt()
                })
                .collect()
        }
        NoiseFamily::Gaussian => (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                theta * z
            })
            .collect(),
    };
    Ok(out)
}

/// Draws `n` rows from the SEM `X_k = Σ_{j ∈ PA_k} B_jk X_j + ε_k`.
///
/// Noise for node `k` comes from stream `NOISE_STREAM_BASE + k` of `seed`.
pub fn sample_data(w: &WeightedDag, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let family = w.family();
    let mut columns: Vec<Vec<f64>> = (0..w.p())
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, NOISE_STREAM_BASE + k as u64);
            sample_noise(family, w.scales()[k], n, &mut rng)
        })
        .collect::<Result<_>>()?;
    for k in w.dag().topological_order().as_slice().iter().copied() {
        let pa = w.dag().parents(k);
        if pa.is_empty() {
            continue;
        }
        let mut col = std::mem::take(&mut columns[k]);
        for (&j, &b) in pa.iter().zip(w.parent_weights(k)) {
            for (x, v) in col.iter_mut().zip(&columns[j]) {
                *x += b * v;
            }
        }
        columns[k] = col;
    }
    DataMatrix::from_columns(columns)
}

/// One simulated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: WeightedDag,
    /// The ordering used to generate the graph (a topological ordering).
    pub generating_order: Ordering,
    pub data: DataMatrix,
}

pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let (dag, order) = match &cfg.graph {
        GraphScheme::LargeSparse { root_frac, min_parents, max_parents } => {
            let mut rng = stream_rng(cfg.seed, GRAPH_STREAM);
            generate_large_sparse_dag(cfg.p, *root_frac, *min_parents, *max_parents, &mut rng)?
        }
        GraphScheme::FromDag(d) => (d.clone(), d.topological_order()),
    };
    let weights = sample_weights(&dag, cfg.coef_low, cfg.coef_high, &mut stream_rng(cfg.seed, WEIGHT_STREAM))?;
    let mut srng = stream_rng(cfg.seed, SCALE_STREAM);
    let scales: Vec<f64> = (0..cfg.p)
        .map(|_| {
            if cfg.scale_low == cfg.scale_high {
                cfg.scale_low
            } else {
                srng.random_range(cfg.scale_low..=cfg.scale_high)
            }
        })
        .collect();
    let truth = WeightedDag::new(dag, weights, cfg.family, scales)?;
    let data = sample_data(&truth, cfg.n, cfg.seed)?;
    Ok(Simulation { truth, generating_order: order, data })
}
