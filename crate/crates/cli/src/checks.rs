//! Named verification checks for `verify`, looked up in a registry.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use acstab_core::green::{free_fixed_point, halfline_m, radial_recursion, recurse_finite, GammaValue, SpectralPoint};
use acstab_core::resolvent::resolvent_column;
use acstab_core::spectral::{
    fluctuation_bound_check, jensen_boost_check, log_current_check, sample_tuples, BoundReport, FluctuationReport,
    LogCurrentReport,
};
use acstab_core::stats::stream_seed;
use acstab_core::tree::{build_instance, TreeTopology};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::scatter_report;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::CheckRecord;
use crate::parallel::Workers;
use crate::sampling::{grid_indices, pool_samples};

/// Tolerances of the deterministic checks.
pub const FIXED_POINT_RESIDUAL: f64 = 1e-13;
pub const RADIAL_IDENTITY_TOL: f64 = 1e-12;
pub const CURRENT_IDENTITY_TOL: f64 = 1e-10;
pub const DEFICIT_RATIO_TOL: f64 = 1e-6;
pub const JENSEN_EXACT_TOL: f64 = 1e-6;
pub const UNITARITY_SLACK: f64 = 1e-12;

impl CheckRecord {
    /// `lhs ≤ rhs` within an exact tolerance.
    pub fn at_most(check: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            check: check.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            stderr: 0.0,
            pass: lhs <= rhs,
        }
    }

    pub fn from_bound(check: impl Into<String>, b: &BoundReport) -> Self {
        Self {
            check: check.into(),
            lhs: b.lhs,
            rhs: b.rhs,
            slack: b.slack,
            stderr: b.stderr,
            pass: !b.violated,
        }
    }
}

/// Per-point pool statistics shared by the Monte Carlo checks.
#[derive(Debug, Clone)]
pub struct PoolPoint {
    pub lambda: f64,
    pub energy: f64,
    pub jensen: BoundReport,
    pub fluctuation: FluctuationReport,
    pub log_current: LogCurrentReport,
}

impl PoolPoint {
    fn label(&self, check: &str) -> String {
        format!("{check}[lambda={},E={}]", self.lambda, self.energy)
    }
}

pub struct CheckContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub workers: Workers,
    pools: OnceLock<Vec<PoolPoint>>,
}

impl<'a> CheckContext<'a> {
    pub fn new(cfg: &'a ExperimentConfig, workers: Workers) -> Self {
        Self {
            cfg,
            workers,
            pools: OnceLock::new(),
        }
    }

    /// Pools over the `(E, λ)` grid, run once and shared between checks.
    pub fn pools(&self) -> CliResult<&[PoolPoint]> {
        if let Some(p) = self.pools.get() {
            return Ok(p);
        }
        let cfg = self.cfg;
        let eta = cfg.positive_eta()?;
        let energies = cfg.grid.energies();
        let k = cfg.tree.branching;
        let v = &cfg.verify;
        let kappa = cfg.tree.disorder(0.0).effective_kappa();
        let points = self.workers.map(&grid_indices(cfg), |_, &(li, ei)| {
            let (lambda, energy) = (cfg.grid.lambdas[li], energies[ei]);
            let seed = stream_seed(cfg.seed, li as u64, ei as u64);
            let samples = pool_samples(cfg, lambda, SpectralPoint::new(energy, eta)?, seed)?;
            let tuples = sample_tuples(&samples, k, v.tuples, stream_seed(seed, 1, 0), |g| g.im);
            Ok(PoolPoint {
                lambda,
                energy,
                jensen: jensen_boost_check(&tuples, v.alpha, kappa)?,
                fluctuation: fluctuation_bound_check(&samples, v.alpha, kappa, k)?,
                log_current: log_current_check(&samples, k, v.tuples, stream_seed(seed, 2, 0))?,
            })
        })?;
        Ok(self.pools.get_or_init(|| points))
    }

    fn rng(&self, tag: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(stream_seed(self.cfg.seed, u64::MAX, tag))
    }
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>>;
}

/// `KΓ² + zΓ + 1 = 0` and `Im Γ > 0` at random `z` with `η ∈ [10⁻³, 1]`.
pub struct FreeFixedPoint;

impl Check for FreeFixedPoint {
    fn name(&self) -> &'static str {
        "free-fixed-point"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let k = ctx.cfg.tree.branching;
        let edge = (k + 2) as f64;
        let mut rng = ctx.rng(1);
        let mut worst = 0.0f64;
        let mut herglotz = true;
        for _ in 0..ctx.cfg.verify.cases {
            let z = SpectralPoint::new(rng.random_range(-edge..edge), rng.random_range(1e-3..=1.0))?;
            let g = free_fixed_point(k, z)?.0;
            worst = worst.max((k as f64 * g * g + z.z() * g + 1.0).norm());
            herglotz &= g.im > 0.0;
        }
        let mut r = CheckRecord::at_most("free-fixed-point", worst, FIXED_POINT_RESIDUAL);
        r.pass &= herglotz;
        Ok(vec![r])
    }
}

/// `√K Γ₀(z) = m₀(z/√K)` for random radial potentials, `V_n = U_n/√K`.
pub struct RadialIdentity;

impl Check for RadialIdentity {
    fn name(&self) -> &'static str {
        "radial-identity"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let v = &ctx.cfg.verify;
        let k = ctx.cfg.tree.branching;
        let sk = (k as f64).sqrt();
        let depth = v.radial_depth;
        let mut rng = ctx.rng(2);
        let zeros = vec![0.0; depth];
        let mut worst = 0.0f64;
        for _ in 0..v.cases {
            let u: Vec<f64> = (0..depth).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = SpectralPoint::new(
                rng.random_range(-(sk * 2.0 + 1.0)..(sk * 2.0 + 1.0)),
                rng.random_range(1e-3..=1.0),
            )?;
            let g = radial_recursion(&u, &zeros, 0.0, k, z, depth)?.0;
            let scaled: Vec<f64> = u.iter().map(|x| x / sk).collect();
            let m = halfline_m(&scaled, SpectralPoint::new(z.energy / sk, z.eta / sk)?, depth)?;
            worst = worst.max((g - m / sk).norm());
        }
        Ok(vec![CheckRecord::at_most(format!("radial-identity[K={k}]"), worst, RADIAL_IDENTITY_TOL)])
    }
}

/// Exhaustive two-atom margin, then the Monte Carlo margin on every pool.
pub struct Jensen;

/// Margin of the two-atom law `P(1) = P(2) = 1/2`, `K = 2`, `α = 1/4`,
/// `κ = 1`, enumerated by hand: `δ = 1/2`.
pub fn jensen_two_atom_margin() -> f64 {
    let lhs = 0.5 * 1.5f64.ln() + 0.25 * 2f64.ln();
    let rhs = 0.5 * 2f64.ln() + 0.25f64.powi(2) / 4.0 * 0.25;
    lhs - rhs
}

impl Check for Jensen {
    fn name(&self) -> &'static str {
        "jensen"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let tuples = vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]];
        let exact = jensen_boost_check(&tuples, 0.25, 1.0)?;
        let err = (exact.slack - jensen_two_atom_margin()).abs();
        let mut out = vec![CheckRecord {
            check: "jensen-exact".into(),
            lhs: exact.slack,
            rhs: jensen_two_atom_margin(),
            slack: JENSEN_EXACT_TOL - err,
            stderr: 0.0,
            pass: err < JENSEN_EXACT_TOL,
        }];
        for p in ctx.pools()? {
            out.push(CheckRecord::from_bound(p.label("jensen"), &p.jensen));
        }
        Ok(out)
    }
}

/// `δ(Im Γ₀, α)² ≤ (8/κα²) γ` on every pool.
pub struct Flu1;

impl Check for Flu1 {
    fn name(&self) -> &'static str {
        "flu1"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        Ok(ctx
            .pools()?
            .iter()
            .map(|p| CheckRecord::from_bound(p.label("flu1"), &p.fluctuation.im_width))
            .collect())
    }
}

/// `δ(|Γ₀|², α)² ≤ (32(K+1)²/κα²) γ` on every pool.
pub struct Flu2;

impl Check for Flu2 {
    fn name(&self) -> &'static str {
        "flu2"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        Ok(ctx
            .pools()?
            .iter()
            .map(|p| CheckRecord::from_bound(p.label("flu2"), &p.fluctuation.modulus_width))
            .collect())
    }
}

pub struct LogCurrent;

impl Check for LogCurrent {
    fn name(&self) -> &'static str {
        "log-current"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let mut out = Vec::new();
        for p in ctx.pools()? {
            out.push(CheckRecord::from_bound(p.label("log-current-lower"), &p.log_current.nonnegative));
            out.push(CheckRecord::from_bound(p.label("log-current-upper"), &p.log_current.upper));
        }
        Ok(out)
    }
}

/// Current balance `deficit_x = η|ψ_x|² ≥ 0` on finite trees, for each λ
/// and each η of `verify.eta_values`, worst case over the energy grid.
pub struct CurrentDeficit;

impl Check for CurrentDeficit {
    fn name(&self) -> &'static str {
        "current-deficit"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let cfg = ctx.cfg;
        let topo = TreeTopology::new(cfg.tree.branching, cfg.verify.depth)?;
        let energies = cfg.grid.energies();
        let mut out = Vec::new();
        for (li, &lambda) in cfg.grid.lambdas.iter().enumerate() {
            let inst = build_instance(topo, cfg.tree.disorder(lambda), cfg.tree.potential.clone(), stream_seed(cfg.seed, li as u64, 3))?;
            for &eta in &cfg.verify.eta_values {
                let reps = ctx.workers.map(&energies, |_, &e| {
                    let z = SpectralPoint::new(e, eta)?;
                    let col = resolvent_column(&inst, z)?;
                    let field = recurse_finite(&inst, z, GammaValue(Complex64::new(0.0, 0.0)))?;
                    Ok(acstab_core::spectral::current_deficit(&col, &field, z)?)
                })?;
                let identity = reps
                    .iter()
                    .map(|r| r.max_abs_error / r.max_psi_sq)
                    .fold(0.0, f64::max);
                let negativity = reps
                    .iter()
                    .map(|r| -r.min_deficit / r.max_psi_sq)
                    .fold(f64::NEG_INFINITY, f64::max);
                let ratio = reps
                    .iter()
                    .map(|r| (r.max_normalized() / eta - 1.0).abs())
                    .fold(0.0, f64::max);
                let tag = format!("lambda={lambda},eta={eta}");
                let mut rec = CheckRecord::at_most(format!("current-identity[{tag}]"), identity, CURRENT_IDENTITY_TOL);
                rec.pass &= reps.iter().all(|r| r.holds(CURRENT_IDENTITY_TOL));
                out.push(rec);
                out.push(CheckRecord::at_most(format!("current-deficit-sign[{tag}]"), negativity, CURRENT_IDENTITY_TOL));
                out.push(CheckRecord::at_most(format!("current-deficit-linear[{tag}]"), ratio, DEFICIT_RATIO_TOL));
            }
        }
        Ok(out)
    }
}

/// `|r| < 1` against `Im Γ₀ > threshold`, per λ, using the scattering section.
pub struct Equivalence;

impl Check for Equivalence {
    fn name(&self) -> &'static str {
        "equivalence"
    }

    fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let mut out = Vec::new();
        for (li, &lambda) in ctx.cfg.grid.lambdas.iter().enumerate() {
            let rep = scatter_report(ctx.cfg, ctx.workers, li)?;
            out.push(CheckRecord::at_most(
                format!("equivalence[lambda={lambda}]"),
                rep.disagreements as f64,
                0.0,
            ));
            out.push(CheckRecord::at_most(
                format!("subunitarity[lambda={lambda}]"),
                rep.max_abs_r,
                1.0 + UNITARITY_SLACK,
            ));
        }
        Ok(out)
    }
}

/// Name → check table.
pub struct CheckRegistry {
    checks: BTreeMap<&'static str, Box<dyn Check>>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self { checks: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(FreeFixedPoint));
        r.register(Box::new(RadialIdentity));
        r.register(Box::new(Jensen));
        r.register(Box::new(Flu1));
        r.register(Box::new(Flu2));
        r.register(Box::new(LogCurrent));
        r.register(Box::new(CurrentDeficit));
        r.register(Box::new(Equivalence));
        r
    }

    pub fn register(&mut self, check: Box<dyn Check>) {
        self.checks.insert(check.name(), check);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.checks.keys().copied().collect()
    }

    /// Resolve every requested name before anything runs.
    pub fn resolve(&self, names: &[String]) -> CliResult<Vec<&dyn Check>> {
        if names.is_empty() {
            return Err(CliError::config("verify.checks", "no checks requested"));
        }
        names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                self.checks.get(n.as_str()).map(|c| c.as_ref()).ok_or_else(|| {
                    CliError::config(
                        format!("verify.checks[{i}]"),
                        format!("unknown check `{n}`; known: {}", self.names().join(", ")),
                    )
                })
            })
            .collect()
    }

    pub fn run(&self, ctx: &CheckContext) -> CliResult<Vec<CheckRecord>> {
        let mut out = Vec::new();
        for check in self.resolve(&ctx.cfg.verify.checks)? {
            out.extend(check.run(ctx)?);
        }
        Ok(out)
    }
}
