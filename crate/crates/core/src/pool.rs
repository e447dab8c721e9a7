//! Population dynamics: a Monte Carlo pool representing the law of `Γ₀`,
//! iterated through the random recursion with fresh disorder.
//!
//! One elementary update draws `K` pool members (with replacement) and a
//! fresh `ω`, forms `1/(λω + U - z - ΣΓ)` and overwrites a uniformly chosen
//! slot; a sweep is `N` updates. A radial-periodic background of period `τ`
//! keeps `τ` sub-pools, the one for generation class `j` fed by class `j+1`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{check_herglotz, free_fixed_point, mobius_step, SpectralPoint};
use crate::tree::{Correlation, DisorderSpec, PotentialSpec};

pub const MIN_POOL_SIZE: usize = 1000;

/// Sizes and sweep counts for a pool run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolParams {
    pub size: usize,
    pub burn_in: usize,
    pub sweeps: usize,
}

impl Default for PoolParams {
    fn default() -> Self {
        Self {
            size: 100_000,
            burn_in: 100,
            sweeps: 200,
        }
    }
}

impl PoolParams {
    pub fn validate(&self) -> Result<()> {
        if self.size < MIN_POOL_SIZE {
            return Err(Error::PoolTooSmall {
                size: self.size,
                min: MIN_POOL_SIZE,
            });
        }
        Ok(())
    }
}

/// A population of Herglotz values, one sub-pool per radial period class.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaPool {
    phases: Vec<Vec<Complex64>>,
    sweeps_done: u64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl GammaPool {
    /// Every slot of every phase set to `init`.
    pub fn constant(init: Complex64, size: usize, period: usize, seed: u64) -> Result<Self> {
        if size < MIN_POOL_SIZE {
            return Err(Error::PoolTooSmall {
                size,
                min: MIN_POOL_SIZE,
            });
        }
        if period == 0 {
            return Err(Error::InvalidPotential("period must be at least 1".into()));
        }
        Ok(Self {
            phases: vec![vec![init; size]; period],
            sweeps_done: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Default initialization at the free fixed point `free_fixed_point(K, z)`.
    pub fn free(k: usize, z: SpectralPoint, size: usize, potential: &PotentialSpec, seed: u64) -> Result<Self> {
        let init = free_fixed_point(k, z)?.0;
        Self::constant(init, size, period_of(potential)?, seed)
    }

    pub fn from_samples(samples: Vec<Complex64>, seed: u64) -> Result<Self> {
        if samples.len() < MIN_POOL_SIZE {
            return Err(Error::PoolTooSmall {
                size: samples.len(),
                min: MIN_POOL_SIZE,
            });
        }
        Ok(Self {
            phases: vec![samples],
            sweeps_done: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Samples of `Γ` at the root generation class.
    pub fn samples(&self) -> &[Complex64] {
        &self.phases[0]
    }

    pub fn phase(&self, j: usize) -> &[Complex64] {
        &self.phases[j]
    }

    pub fn period(&self) -> usize {
        self.phases.len()
    }

    pub fn size(&self) -> usize {
        self.phases[0].len()
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean_im(&self) -> f64 {
        let s = self.samples();
        s.iter().map(|g| g.im).sum::<f64>() / s.len() as f64
    }
}

fn period_of(potential: &PotentialSpec) -> Result<usize> {
    match potential {
        PotentialSpec::Zero => Ok(1),
        PotentialSpec::RadialPeriodic { values } => {
            if values.is_empty() {
                Err(Error::InvalidPotential("radial period must be at least 1".into()))
            } else {
                Ok(values.len())
            }
        }
        PotentialSpec::QuasiPeriodic { .. } => Err(Error::Unsupported(
            "quasi-periodic backgrounds are handled by the cocycle iteration".into(),
        )),
    }
}

/// Advance `pool` by `sweeps` sweeps. Pure in `(pool, specs, z, sweeps)`:
/// the random stream lives in the pool.
pub fn pool_iterate(
    mut pool: GammaPool,
    k: usize,
    disorder: &DisorderSpec,
    potential: &PotentialSpec,
    z: SpectralPoint,
    sweeps: usize,
) -> Result<GammaPool> {
    z.require_open()?;
    if k < 2 {
        return Err(Error::InvalidTopology(format!("branching number must be at least 2, got {k}")));
    }
    disorder.validate()?;
    let period = period_of(potential)?;
    if period != pool.period() {
        return Err(Error::InvalidPotential(format!(
            "pool has {} phases but the potential has period {period}",
            pool.period()
        )));
    }
    if pool.size() < MIN_POOL_SIZE {
        return Err(Error::PoolTooSmall {
            size: pool.size(),
            min: MIN_POOL_SIZE,
        });
    }
    let profile = potential.radial_profile(period);
    let zc = z.z();
    let lambda = disorder.strength;
    let family = disorder.family;
    let radial = disorder.correlation == Correlation::Radial;
    let n = pool.size();
    let kf = k as f64;

    for _ in 0..sweeps {
        for j in (0..period).rev() {
            let source = (j + 1) % period;
            for _ in 0..n {
                let sum = if radial {
                    // Siblings share their whole subtree: one draw, K copies.
                    kf * pool.phases[source][pool.rng.random_range(0..n)]
                } else {
                    let mut s = Complex64::new(0.0, 0.0);
                    for _ in 0..k {
                        s += pool.phases[source][pool.rng.random_range(0..n)];
                    }
                    s
                };
                let omega = family.sample(&mut pool.rng);
                let g = mobius_step(profile[j] + lambda * omega, zc, sum);
                let slot = pool.rng.random_range(0..n);
                pool.phases[j][slot] = g;
            }
        }
        pool.sweeps_done += 1;
    }
    for phase in &pool.phases {
        for g in phase {
            check_herglotz(*g, z.eta, "pool_iterate")?;
        }
    }
    Ok(pool)
}

/// Result of a burn-in plus measurement run.
#[derive(Debug, Clone)]
pub struct PoolRun {
    pub pool: GammaPool,
    /// Pool mean of `Im Γ₀` after each measurement sweep.
    pub sweep_means: Vec<f64>,
}

impl PoolRun {
    /// Mean of `Im Γ₀` over measurement sweeps.
    pub fn mean_im(&self) -> f64 {
        if self.sweep_means.is_empty() {
            return self.pool.mean_im();
        }
        self.sweep_means.iter().sum::<f64>() / self.sweep_means.len() as f64
    }

    /// Standard error of [`Self::mean_im`] from batch means over sweeps,
    /// floored by the single-snapshot standard error of the pool.
    pub fn stderr_im(&self) -> f64 {
        let snapshot = {
            let s = self.pool.samples();
            let im: Vec<f64> = s.iter().map(|g| g.im).collect();
            crate::stats::mean_and_stderr(&im).1
        };
        let m = self.sweep_means.len();
        if m < 4 {
            return snapshot;
        }
        let batches = m.min(10);
        let per = m / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| self.sweep_means[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
            .collect();
        crate::stats::mean_and_stderr(&means).1.max(snapshot / (m as f64).sqrt())
    }
}

/// Initialize at the free fixed point, burn in, then measure.
pub fn run_pool(
    k: usize,
    disorder: &DisorderSpec,
    potential: &PotentialSpec,
    z: SpectralPoint,
    params: PoolParams,
    seed: u64,
) -> Result<PoolRun> {
    params.validate()?;
    let pool = GammaPool::free(k, z, params.size, potential, seed)?;
    let mut pool = pool_iterate(pool, k, disorder, potential, z, params.burn_in)?;
    let mut sweep_means = Vec::with_capacity(params.sweeps);
    for _ in 0..params.sweeps {
        pool = pool_iterate(pool, k, disorder, potential, z, 1)?;
        sweep_means.push(pool.mean_im());
    }
    Ok(PoolRun { pool, sweep_means })
}
