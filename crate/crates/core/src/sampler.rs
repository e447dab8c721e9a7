//! Interchangeable producers of root samples `Γ₀(z)`, selected by name.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::green::{free_fixed_point, qp_cocycle_iterate, radial_recursion, recurse_finite, EtaLadder, LadderLimit, SpectralPoint};
use crate::pool::{run_pool, PoolParams};
use crate::stats::{mean_and_stderr, stream_seed};
use crate::tree::{build_instance, Correlation, DisorderSpec, PotentialSpec, TreeTopology};

/// Everything a sampler may need; each strategy reads what applies to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RootProblem {
    pub branching: usize,
    pub disorder: DisorderSpec,
    pub potential: PotentialSpec,
    pub z: SpectralPoint,
    pub pool: PoolParams,
    /// Truncation depth for the finite, radial and cocycle strategies.
    pub depth: usize,
    /// Independent realizations for the finite, radial and cocycle strategies.
    pub realizations: usize,
    pub seed: u64,
}

impl RootProblem {
    pub fn at(&self, z: SpectralPoint) -> Self {
        Self { z, ..self.clone() }
    }
}

/// Root samples with the `Im Γ₀` mean and its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSamples {
    pub samples: Vec<Complex64>,
    pub mean_im: f64,
    pub stderr_im: f64,
}

impl RootSamples {
    fn from_independent(samples: Vec<Complex64>) -> Self {
        let im: Vec<f64> = samples.iter().map(|g| g.im).collect();
        let (mean_im, stderr_im) = mean_and_stderr(&im);
        Self {
            samples,
            mean_im,
            stderr_im,
        }
    }
}

pub trait RootSampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn sample(&self, problem: &RootProblem) -> Result<RootSamples>;
}

/// Exact `Γ₀` of the free tree; only for `λ = 0`, `U = 0`.
pub struct ClosedForm;

impl RootSampler for ClosedForm {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn sample(&self, p: &RootProblem) -> Result<RootSamples> {
        if p.disorder.strength != 0.0 || p.potential != PotentialSpec::Zero {
            return Err(Error::Unsupported("closed form needs λ = 0 and U = 0".into()));
        }
        let g = free_fixed_point(p.branching, p.z)?.0;
        Ok(RootSamples {
            samples: vec![g],
            mean_im: g.im,
            stderr_im: 0.0,
        })
    }
}

/// Population dynamics.
pub struct Pool;

impl RootSampler for Pool {
    fn name(&self) -> &'static str {
        "pool"
    }

    fn sample(&self, p: &RootProblem) -> Result<RootSamples> {
        let run = run_pool(p.branching, &p.disorder, &p.potential, p.z, p.pool, p.seed)?;
        Ok(RootSamples {
            samples: run.pool.samples().to_vec(),
            mean_im: run.mean_im(),
            stderr_im: run.stderr_im(),
        })
    }
}

/// Full finite trees with free boundary values at the truncation depth.
pub struct FiniteTree;

impl RootSampler for FiniteTree {
    fn name(&self) -> &'static str {
        "finite-tree"
    }

    fn sample(&self, p: &RootProblem) -> Result<RootSamples> {
        need_realizations(p)?;
        let topo = TreeTopology::new(p.branching, p.depth)?;
        let leaf = free_fixed_point(p.branching, p.z)?;
        let samples = (0..p.realizations)
            .map(|r| {
                let inst = build_instance(topo, p.disorder, p.potential.clone(), stream_seed(p.seed, r as u64, 0))?;
                Ok(recurse_finite(&inst, p.z, leaf)?.root().0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RootSamples::from_independent(samples))
    }
}

/// One-dimensional recursion for radially symmetric operators.
pub struct Radial;

impl RootSampler for Radial {
    fn name(&self) -> &'static str {
        "radial"
    }

    fn sample(&self, p: &RootProblem) -> Result<RootSamples> {
        need_realizations(p)?;
        if p.disorder.correlation != Correlation::Radial && p.disorder.strength != 0.0 {
            return Err(Error::Unsupported("the radial recursion needs radially correlated disorder".into()));
        }
        p.disorder.validate()?;
        p.potential.validate()?;
        let profile = p.potential.radial_profile(p.depth);
        let samples = (0..p.realizations)
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(p.seed, r as u64, 0));
                let xi: Vec<f64> = (0..p.depth).map(|_| p.disorder.family.sample(&mut rng)).collect();
                Ok(radial_recursion(&profile, &xi, p.disorder.strength, p.branching, p.z, p.depth)?.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RootSamples::from_independent(samples))
    }
}

/// Quasi-periodic cocycle with uniformly random starting phase.
pub struct Cocycle;

impl RootSampler for Cocycle {
    fn name(&self) -> &'static str {
        "cocycle"
    }

    fn sample(&self, p: &RootProblem) -> Result<RootSamples> {
        need_realizations(p)?;
        let PotentialSpec::QuasiPeriodic {
            amplitude, frequency, ..
        } = p.potential
        else {
            return Err(Error::Unsupported("the cocycle needs a quasi-periodic potential".into()));
        };
        if p.disorder.strength != 0.0 {
            return Err(Error::Unsupported("the cocycle carries no random disorder".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let samples = (0..p.realizations)
            .map(|_| {
                let theta = rng.random_range(0.0..TAU);
                Ok(qp_cocycle_iterate(amplitude, frequency, theta, p.branching, p.z, p.depth)?.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RootSamples::from_independent(samples))
    }
}

fn need_realizations(p: &RootProblem) -> Result<()> {
    if p.realizations == 0 {
        Err(Error::Domain("at least one realization is required".into()))
    } else {
        Ok(())
    }
}

/// Name → strategy table.
pub struct SamplerRegistry {
    strategies: BTreeMap<&'static str, Box<dyn RootSampler>>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ClosedForm));
        r.register(Box::new(Pool));
        r.register(Box::new(FiniteTree));
        r.register(Box::new(Radial));
        r.register(Box::new(Cocycle));
        r
    }

    pub fn register(&mut self, sampler: Box<dyn RootSampler>) {
        self.strategies.insert(sampler.name(), sampler);
    }

    pub fn get(&self, name: &str) -> Result<&dyn RootSampler> {
        self.strategies
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

/// `E[Im Γ₀]` walked down an η ladder; the value carries `(mean, stderr)`.
pub fn mean_im_limit(
    sampler: &dyn RootSampler,
    problem: &RootProblem,
    ladder: EtaLadder,
) -> Result<LadderLimit<MeanWithError>> {
    ladder.limit(|eta| {
        let s = sampler.sample(&problem.at(problem.z.with_eta(eta)))?;
        Ok(MeanWithError {
            mean: s.mean_im,
            stderr: s.stderr_im,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanWithError {
    pub mean: f64,
    pub stderr: f64,
}

impl crate::green::LadderDistance for MeanWithError {
    fn distance(&self, other: &Self) -> f64 {
        (self.mean - other.mean).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::DisorderFamily;

    fn problem(lambda: f64, correlation: Correlation, potential: PotentialSpec) -> RootProblem {
        let disorder = match correlation {
            Correlation::Iid => DisorderSpec::iid(DisorderFamily::Uniform, lambda),
            Correlation::Radial => DisorderSpec::radial(DisorderFamily::Uniform, lambda),
        };
        RootProblem {
            branching: 2,
            disorder,
            potential,
            z: SpectralPoint::new(0.4, 0.05).unwrap(),
            pool: PoolParams {
                size: 2000,
                burn_in: 30,
                sweeps: 20,
            },
            depth: 8,
            realizations: 20,
            seed: 3,
        }
    }

    #[test]
    fn strategies_agree_without_disorder() {
        let reg = SamplerRegistry::standard();
        let p = problem(0.0, Correlation::Iid, PotentialSpec::Zero);
        let exact = reg.get("closed-form").unwrap().sample(&p).unwrap().mean_im;
        for name in ["pool", "finite-tree", "radial"] {
            let got = reg.get(name).unwrap().sample(&p).unwrap().mean_im;
            assert!((got - exact).abs() < 1e-10, "{name}: {got} vs {exact}");
        }
    }

    #[test]
    fn unknown_and_unsupported() {
        let reg = SamplerRegistry::standard();
        assert!(matches!(reg.get("nope"), Err(Error::UnknownStrategy(_))));
        assert_eq!(reg.names(), vec!["closed-form", "cocycle", "finite-tree", "pool", "radial"]);
        let p = problem(0.3, Correlation::Iid, PotentialSpec::Zero);
        assert!(matches!(reg.get("closed-form").unwrap().sample(&p), Err(Error::Unsupported(_))));
        assert!(matches!(reg.get("radial").unwrap().sample(&p), Err(Error::Unsupported(_))));
        assert!(matches!(reg.get("cocycle").unwrap().sample(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn radial_disorder_paths_agree() {
        let reg = SamplerRegistry::standard();
        let p = problem(0.5, Correlation::Radial, PotentialSpec::Zero);
        let pool = reg.get("pool").unwrap().sample(&p).unwrap();
        let radial = reg.get("radial").unwrap().sample(&RootProblem { realizations: 4000, depth: 60, ..p }).unwrap();
        let se = (pool.stderr_im.powi(2) + radial.stderr_im.powi(2)).sqrt();
        assert!((pool.mean_im - radial.mean_im).abs() < 4.0 * se, "{pool:?} {radial:?}");
    }

    #[test]
    fn cocycle_samples_are_herglotz() {
        let reg = SamplerRegistry::standard();
        let qp = PotentialSpec::QuasiPeriodic {
            amplitude: 0.5,
            frequency: 0.618_033_988_749_895,
            phase: 0.0,
        };
        let s = reg.get("cocycle").unwrap().sample(&problem(0.0, Correlation::Iid, qp)).unwrap();
        assert_eq!(s.samples.len(), 20);
        assert!(s.samples.iter().all(|g| g.im > 0.0));
    }

    #[test]
    fn ladder_limit_of_free_density() {
        let reg = SamplerRegistry::standard();
        let p = problem(0.0, Correlation::Iid, PotentialSpec::Zero).at(SpectralPoint::new(0.0, 0.1).unwrap());
        let lim = mean_im_limit(
            reg.get("closed-form").unwrap(),
            &p,
            EtaLadder {
                start: 0.1,
                floor: 1e-6,
                tolerance: 1e-5,
            },
        )
        .unwrap();
        assert!(lim.converged);
        assert!((lim.value.mean - 1.0 / 2f64.sqrt()).abs() < 2e-5);
    }
}
