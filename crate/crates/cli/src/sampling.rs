//! Root-value sampling shared by the tree commands.

use acstab_core::green::{free_fixed_point, LadderDistance, SpectralPoint};
use acstab_core::pool::run_pool;
use acstab_core::sampler::{RootProblem, RootSampler, SamplerRegistry};
use acstab_core::stats::{median, stream_seed};
use acstab_core::Error as CoreError;
use num_complex::Complex64;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::parallel::Workers;

/// Pooled `Im Γ₀` at one `(E, λ)` grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridValue {
    pub energy: f64,
    pub lambda: f64,
    /// The η actually used; the last rung when a ladder is walked.
    pub eta: f64,
    pub mean_im: f64,
    pub stderr: f64,
    /// Median of the root samples, the typical value of `Im Γ₀`.
    pub median_im: f64,
}

#[derive(Debug, Clone, Copy)]
struct PointStats {
    mean: f64,
    stderr: f64,
    median: f64,
}

impl LadderDistance for PointStats {
    fn distance(&self, other: &Self) -> f64 {
        (self.mean - other.mean).abs()
    }
}

fn point_stats(strategy: &dyn RootSampler, p: &RootProblem) -> acstab_core::Result<PointStats> {
    let s = strategy.sample(p)?;
    let im: Vec<f64> = s.samples.iter().map(|g| g.im).collect();
    Ok(PointStats {
        mean: s.mean_im,
        stderr: s.stderr_im,
        median: median(&im),
    })
}

/// `(λ index, E index)` pairs in row-major order.
pub fn grid_indices(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let n = cfg.grid.energies().len();
    (0..cfg.grid.lambdas.len())
        .flat_map(|l| (0..n).map(move |e| (l, e)))
        .collect()
}

pub fn problem(cfg: &ExperimentConfig, lambda: f64, z: SpectralPoint, seed: u64) -> RootProblem {
    let t = &cfg.tree;
    RootProblem {
        branching: t.branching,
        disorder: t.disorder(lambda),
        potential: t.potential.clone(),
        z,
        pool: cfg.pool,
        depth: t.depth,
        realizations: t.realizations,
        seed,
    }
}

pub fn sampler<'a>(registry: &'a SamplerRegistry, cfg: &ExperimentConfig) -> CliResult<&'a dyn RootSampler> {
    registry.get(&cfg.tree.sampler).map_err(|e| match e {
        CoreError::UnknownStrategy(name) => CliError::config(
            "tree.sampler",
            format!("unknown sampler `{name}`; known: {}", registry.names().join(", ")),
        ),
        other => other.into(),
    })
}

/// `E[Im Γ₀]` and the median over the whole `(E, λ)` grid, one independent stream per point.
pub fn tree_grid(cfg: &ExperimentConfig, workers: Workers) -> CliResult<Vec<GridValue>> {
    let registry = SamplerRegistry::standard();
    let strategy = sampler(&registry, cfg)?;
    cfg.pool_params()?;
    let energies = cfg.grid.energies();
    let lambdas = &cfg.grid.lambdas;
    workers.map(&grid_indices(cfg), |_, &(li, ei)| {
        let (lambda, energy) = (lambdas[li], energies[ei]);
        let seed = stream_seed(cfg.seed, li as u64, ei as u64);
        let (eta, st) = match cfg.grid.eta_ladder {
            Some(ladder) => {
                let p = problem(cfg, lambda, SpectralPoint::new(energy, ladder.start)?, seed);
                let lim = ladder.limit(|eta| point_stats(strategy, &p.at(p.z.with_eta(eta))))?;
                (lim.eta, lim.value)
            }
            None => {
                let p = problem(cfg, lambda, SpectralPoint::new(energy, cfg.grid.eta)?, seed);
                (cfg.grid.eta, point_stats(strategy, &p)?)
            }
        };
        Ok(GridValue {
            energy,
            lambda,
            eta,
            mean_im: st.mean,
            stderr: st.stderr,
            median_im: st.median,
        })
    })
}

/// Stationary pool samples of `Γ₀` at one point.
pub fn pool_samples(cfg: &ExperimentConfig, lambda: f64, z: SpectralPoint, seed: u64) -> CliResult<Vec<Complex64>> {
    let t = &cfg.tree;
    let run = run_pool(t.branching, &t.disorder(lambda), &t.potential, z, cfg.pool_params()?, seed)?;
    Ok(run.pool.samples().to_vec())
}

/// Root values per energy for one λ: the exact `η = 0⁺` value when the
/// tree is free, one pool sample at `grid.eta` otherwise.
pub fn root_values(cfg: &ExperimentConfig, workers: Workers, li: usize) -> CliResult<Vec<Complex64>> {
    let lambda = cfg.grid.lambdas[li];
    let energies = cfg.grid.energies();
    if free_tree(cfg, lambda) {
        return energies
            .iter()
            .map(|&e| Ok(free_fixed_point(cfg.tree.branching, SpectralPoint::new(e, 0.0)?)?.0))
            .collect();
    }
    let eta = cfg.positive_eta()?;
    workers.map(&energies, |ei, &e| {
        let samples = pool_samples(cfg, lambda, SpectralPoint::new(e, eta)?, stream_seed(cfg.seed, li as u64, ei as u64))?;
        Ok(samples[0])
    })
}

pub fn free_tree(cfg: &ExperimentConfig, lambda: f64) -> bool {
    lambda == 0.0 && cfg.tree.potential == acstab_core::tree::PotentialSpec::Zero
}
