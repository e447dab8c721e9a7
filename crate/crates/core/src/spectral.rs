//! Observables built from samples of `Γ₀`: ac density, Lyapunov exponent,
//! relative α-widths, and slack-reporting checkers for the current identity,
//! the Jensen improvement and the fluctuation bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::green::{GammaField, SpectralPoint};
use crate::resolvent::PsiColumn;
use crate::stats::{block_jackknife, trapezoid};

/// Number of standard errors a Monte Carlo check may miss by.
pub const VIOLATION_SIGMAS: f64 = 3.0;

const JACKKNIFE_BLOCKS: usize = 20;

/// `δ(X, α) = (ξ₊ - ξ₋)/ξ₊` with its quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileWidth {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("α must lie in (0, 1/2], got {alpha}")))
    }
}

/// Empirical relative α-width.
///
/// `ξ₋ = sup{ξ : P(X < ξ) ≤ α}` and `ξ₊ = inf{ξ : P(X > ξ) ≤ α}`; when `αn`
/// is an integer both are the midpoint of the two bracketing order
/// statistics.
pub fn alpha_width(samples: &[f64], alpha: f64) -> Result<QuantileWidth> {
    check_alpha(alpha)?;
    if samples.is_empty() {
        return Err(Error::Domain("alpha_width needs at least one sample".into()));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("alpha_width needs positive samples, got {bad}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(width_of_sorted(&sorted, alpha))
}

fn width_of_sorted(sorted: &[f64], alpha: f64) -> QuantileWidth {
    let n = sorted.len();
    let an = alpha * n as f64;
    let m = an.floor() as usize;
    let at = |i: usize| sorted[i - 1]; // 1-based order statistic
    let (lower, upper) = if (an - an.round()).abs() < 1e-9 && m >= 1 {
        (
            0.5 * (at(m) + at(m + 1)),
            0.5 * (at(n - m) + at(n - m + 1)),
        )
    } else {
        (at(m + 1), at(n - m))
    };
    QuantileWidth {
        alpha,
        lower,
        upper,
        delta: (upper - lower) / upper,
    }
}

/// `γ` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub gamma: f64,
    pub stderr: f64,
}

fn log_scaled_modulus(samples: &[Complex64], k: usize) -> Result<Vec<f64>> {
    let sk = (k as f64).sqrt();
    samples
        .iter()
        .map(|g| {
            let r = g.norm();
            if r > 0.0 && r.is_finite() {
                Ok((sk * r).ln())
            } else {
                Err(Error::Domain(format!("sample with modulus {r} has no logarithm")))
            }
        })
        .collect()
}

/// `γ = -E[log √K |Γ₀|]` over the samples, jackknife standard error.
pub fn lyapunov(samples: &[Complex64], k: usize) -> Result<LyapunovEstimate> {
    if samples.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let logs = log_scaled_modulus(samples, k)?;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(LyapunovEstimate {
        gamma: -mean(&logs),
        stderr: block_jackknife(&logs, JACKKNIFE_BLOCKS, mean),
    })
}

/// `E[Im Γ₀]/π`.
pub fn ac_density(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().map(|g| g.im).sum::<f64>() / samples.len() as f64 / PI
}

/// A one-sided inequality `lhs ≤ rhs` estimated by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative slack is a breach of the point estimate.
    pub slack: f64,
    pub stderr: f64,
    /// Slack below `-3·stderr`.
    pub violated: bool,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, stderr: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            stderr,
            violated: slack < -VIOLATION_SIGMAS * stderr,
        }
    }
}

/// `E[log (1/K)ΣX_j] ≥ E[log X₁] + (α²κ/4) δ(X₁,α)²`, as `lhs ≥ rhs`.
///
/// `δ` and `E[log X₁]` use all tuple components, which share one law.
/// The report's `slack` is the margin `lhs - rhs`.
pub fn jensen_boost_check(tuples: &[Vec<f64>], alpha: f64, kappa: f64) -> Result<BoundReport> {
    check_alpha(alpha)?;
    if tuples.is_empty() || tuples.iter().any(|t| t.is_empty()) {
        return Err(Error::Domain("jensen_boost_check needs non-empty tuples".into()));
    }
    if tuples.iter().flatten().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("jensen_boost_check needs positive values".into()));
    }
    let sides = |ts: &[Vec<f64>]| -> (f64, f64) {
        let n = ts.len() as f64;
        let lhs = ts
            .iter()
            .map(|t| (t.iter().sum::<f64>() / t.len() as f64).ln())
            .sum::<f64>()
            / n;
        let comps: Vec<f64> = ts.iter().flatten().copied().collect();
        let log_mean = comps.iter().map(|x| x.ln()).sum::<f64>() / comps.len() as f64;
        let mut sorted = comps;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let delta = width_of_sorted(&sorted, alpha).delta;
        (lhs, log_mean + alpha * alpha * kappa / 4.0 * delta * delta)
    };
    let (lhs, rhs) = sides(tuples);
    let stderr = block_jackknife(tuples, JACKKNIFE_BLOCKS, |ts| {
        let (l, r) = sides(ts);
        l - r
    });
    // Reported as "rhs ≤ lhs": slack = lhs - rhs.
    Ok(BoundReport::new(rhs, lhs, stderr))
}

/// `count` tuples of `K` values `f(Γ)` drawn with replacement from the samples.
pub fn sample_tuples<F>(samples: &[Complex64], k: usize, count: usize, seed: u64, f: F) -> Vec<Vec<f64>>
where
    F: Fn(Complex64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..k).map(|_| f(samples[rng.random_range(0..samples.len())])).collect())
        .collect()
}

/// Both fluctuation bounds at one spectral point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    pub gamma: LyapunovEstimate,
    /// `δ(Im Γ₀, α)² ≤ (8/κα²) γ`.
    pub im_width: BoundReport,
    /// `δ(|Γ₀|², α)² ≤ (32(K+1)²/κα²) γ`.
    pub modulus_width: BoundReport,
}

pub fn fluctuation_bound_check(
    samples: &[Complex64],
    alpha: f64,
    kappa: f64,
    k: usize,
) -> Result<FluctuationReport> {
    check_alpha(alpha)?;
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Domain(format!("κ must lie in (0, 1], got {kappa}")));
    }
    let gamma = lyapunov(samples, k)?;
    let c1 = 8.0 / (kappa * alpha * alpha);
    let c2 = 32.0 * ((k + 1) as f64).powi(2) / (kappa * alpha * alpha);
    let sk = (k as f64).sqrt();

    let gamma_of = |s: &[Complex64]| -> f64 {
        -s.iter().map(|g| (sk * g.norm()).ln()).sum::<f64>() / s.len() as f64
    };
    let width_sq = |s: &[Complex64], f: &dyn Fn(Complex64) -> f64| -> f64 {
        let mut v: Vec<f64> = s.iter().map(|&g| f(g)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        width_of_sorted(&v, alpha).delta.powi(2)
    };
    let im = |g: Complex64| g.im;
    let modsq = |g: Complex64| g.norm_sqr();
    for g in samples {
        if !(g.im > 0.0) {
            return Err(Error::Domain(format!("sample {g} is not in the upper half plane")));
        }
    }

    let lhs1 = width_sq(samples, &im);
    let lhs2 = width_sq(samples, &modsq);
    let se1 = block_jackknife(samples, JACKKNIFE_BLOCKS, |s| width_sq(s, &im) - c1 * gamma_of(s));
    let se2 = block_jackknife(samples, JACKKNIFE_BLOCKS, |s| width_sq(s, &modsq) - c2 * gamma_of(s));
    Ok(FluctuationReport {
        gamma,
        im_width: BoundReport::new(lhs1, c1 * gamma.gamma, se1),
        modulus_width: BoundReport::new(lhs2, c2 * gamma.gamma, se2),
    })
}

/// `0 ≤ E[log (1/K)Σ Im Γ_y] - E[log Im Γ_x] ≤ 2γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCurrentReport {
    /// The Jensen gap, i.e. the left side.
    pub gap: f64,
    pub two_gamma: f64,
    /// `gap ≥ 0`, with `slack = gap`.
    pub nonnegative: BoundReport,
    /// `gap ≤ 2γ`, with `slack = 2γ - gap`.
    pub upper: BoundReport,
}

/// Log-current inequality from `K`-tuples drawn out of the samples.
pub fn log_current_check(samples: &[Complex64], k: usize, tuples: usize, seed: u64) -> Result<LogCurrentReport> {
    if samples.is_empty() || tuples == 0 {
        return Err(Error::Domain("log_current_check needs samples and tuples".into()));
    }
    let gamma = lyapunov(samples, k)?;
    let tuple_vals = sample_tuples(samples, k, tuples, seed, |g| g.im);
    let log_im: Vec<f64> = samples.iter().map(|g| g.im.ln()).collect();
    let single = log_im.iter().sum::<f64>() / log_im.len() as f64;
    let log_avg: Vec<f64> = tuple_vals
        .iter()
        .map(|t| (t.iter().sum::<f64>() / k as f64).ln())
        .collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let gap = mean(&log_avg) - single;

    let se_avg = block_jackknife(&log_avg, JACKKNIFE_BLOCKS, mean);
    let se_single = block_jackknife(&log_im, JACKKNIFE_BLOCKS, mean);
    let se_gap = (se_avg.powi(2) + se_single.powi(2)).sqrt();
    let sk = (k as f64).sqrt();
    let se_upper = block_jackknife(samples, JACKKNIFE_BLOCKS, |s| {
        let l: f64 = s.iter().map(|g| g.im.ln()).sum::<f64>() / s.len() as f64;
        let gm: f64 = -s.iter().map(|g| (sk * g.norm()).ln()).sum::<f64>() / s.len() as f64;
        2.0 * gm + l
    });
    let se_upper = (se_upper.powi(2) + se_avg.powi(2)).sqrt();
    Ok(LogCurrentReport {
        gap,
        two_gamma: 2.0 * gamma.gamma,
        nonnegative: BoundReport::new(0.0, gap, se_gap),
        upper: BoundReport::new(gap, 2.0 * gamma.gamma, se_upper),
    })
}

/// Per-vertex current balance `J_{x⁻x} - Σ_y J_{xy}` against `η|ψ_x|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficitReport {
    /// `(storage index, deficit, η|ψ_x|²)` for every non-root vertex.
    pub deficits: Vec<(usize, f64, f64)>,
    /// `max_x |deficit - η|ψ_x|²|`.
    pub max_abs_error: f64,
    /// `max_x |ψ_x|²`.
    pub max_psi_sq: f64,
    pub min_deficit: f64,
    /// Vertices skipped because `ψ_{x⁻} = 0`.
    pub skipped: Vec<usize>,
    pub eta: f64,
}

impl DeficitReport {
    /// `max |deficit - η|ψ|²| ≤ tol · max|ψ|²` and every deficit ≥ 0.
    pub fn holds(&self, tol: f64) -> bool {
        self.max_abs_error <= tol * self.max_psi_sq && self.min_deficit >= -tol * self.max_psi_sq
    }

    /// `max_x deficit_x / |ψ_x|²`, which equals `η`.
    pub fn max_normalized(&self) -> f64 {
        self.deficits
            .iter()
            .filter(|d| d.2 > 0.0)
            .map(|&(_, d, e)| self.eta * d / e)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Current deficits with `J_{xy} = |ψ_x|² Im Γ_y`. Vertices at the
/// truncation depth have no forward current (Dirichlet truncation).
pub fn current_deficit(column: &PsiColumn, gammas: &GammaField, z: SpectralPoint) -> Result<DeficitReport> {
    z.require_open()?;
    let topo = column.topology;
    if gammas.topology != topo {
        return Err(Error::MismatchedGrids("Γ field and ψ column on different trees".into()));
    }
    let psi = &column.values;
    let mut deficits = Vec::with_capacity(psi.len());
    let mut skipped = Vec::new();
    let mut max_abs_error: f64 = 0.0;
    let mut min_deficit = f64::INFINITY;
    for x in 1..psi.len() {
        let parent = topo.parent_of(x).expect("non-root");
        if psi[parent].norm() == 0.0 {
            skipped.push(x);
            continue;
        }
        let psi_sq = psi[x].norm_sqr();
        let incoming = psi[parent].norm_sqr() * gammas.values[x].im;
        let outgoing: f64 = topo.children_of(x).map(|y| psi_sq * gammas.values[y].im).sum();
        let deficit = incoming - outgoing;
        let expected = z.eta * psi_sq;
        max_abs_error = max_abs_error.max((deficit - expected).abs());
        min_deficit = min_deficit.min(deficit);
        deficits.push((x, deficit, expected));
    }
    let max_psi_sq = psi.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max);
    Ok(DeficitReport {
        deficits,
        max_abs_error,
        max_psi_sq,
        min_deficit,
        skipped,
        eta: z.eta,
    })
}

/// Density of states curve `E ↦ E[Im Γ₀(E + iη)]/π` on an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub points: Vec<SpectralPoint>,
    pub mean_im: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl DensityCurve {
    pub fn new(points: Vec<SpectralPoint>, mean_im: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        if points.len() != mean_im.len() || points.len() != stderr.len() {
            return Err(Error::MismatchedGrids("curve columns differ in length".into()));
        }
        if let Some(bad) = mean_im.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!("density must be non-negative, got {bad}")));
        }
        Ok(Self {
            points,
            mean_im,
            stderr,
        })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    pub fn density(&self) -> Vec<f64> {
        self.mean_im.iter().map(|v| v / PI).collect()
    }

    pub fn density_stderr(&self) -> Vec<f64> {
        self.stderr.iter().map(|v| v / PI).collect()
    }

    fn window(&self, interval: (f64, f64)) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| {
                let e = self.points[i].energy;
                e >= interval.0 - 1e-12 && e <= interval.1 + 1e-12
            })
            .collect()
    }
}

/// `∫_I |ρ_λ - ρ₀| dE` by the trapezoid rule over the shared grid.
pub fn l1_density_distance(curve: &DensityCurve, reference: &DensityCurve, interval: (f64, f64)) -> Result<f64> {
    let ea = curve.energies();
    let eb = reference.energies();
    if ea.len() != eb.len() || ea.iter().zip(&eb).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::MismatchedGrids(format!(
            "{} vs {} grid points",
            ea.len(),
            eb.len()
        )));
    }
    let idx = curve.window(interval);
    let (da, db) = (curve.density(), reference.density());
    let xs: Vec<f64> = idx.iter().map(|&i| ea[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| (da[i] - db[i]).abs()).collect();
    Ok(trapezoid(&xs, &ys))
}

/// Integrated standard error `∫_I sqrt(se_a² + se_b²) dE`, the noise floor
/// for [`l1_density_distance`].
pub fn l1_noise_floor(curve: &DensityCurve, reference: &DensityCurve, interval: (f64, f64)) -> f64 {
    let idx = curve.window(interval);
    let e = curve.energies();
    let (sa, sb) = (curve.density_stderr(), reference.density_stderr());
    let xs: Vec<f64> = idx.iter().map(|&i| e[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| (sa[i].powi(2) + sb[i].powi(2)).sqrt()).collect();
    trapezoid(&xs, &ys)
}

/// Grid-cell Lebesgue measure of `{E : ρ(E) > threshold}`; each grid point
/// owns the cell reaching halfway to its neighbors.
pub fn ac_measure(curve: &DensityCurve, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {threshold}")));
    }
    Ok(cell_measure(&curve.energies(), &curve.density(), threshold))
}

/// Measure of `{x : y(x) > threshold}` with half-way cells around each grid point.
pub fn cell_measure(xs: &[f64], ys: &[f64], threshold: f64) -> f64 {
    let n = xs.len();
    (0..n)
        .filter(|&i| ys[i] > threshold)
        .map(|i| {
            let lo = if i == 0 { xs[0] } else { 0.5 * (xs[i - 1] + xs[i]) };
            let hi = if i + 1 == n { xs[n - 1] } else { 0.5 * (xs[i] + xs[i + 1]) };
            hi - lo
        })
        .sum()
}

/// Lyapunov exponent of `ψ_{n+1} = (E - V_n)ψ_n - ψ_{n-1}` by a
/// renormalized transfer-matrix product over the whole sequence.
pub fn transfer_lyapunov<I>(potential: I, energy: f64) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let (mut a, mut b) = (1.0f64, 0.0f64); // (ψ_n, ψ_{n-1})
    let mut log_growth = 0.0;
    let mut steps = 0usize;
    for v in potential {
        let next = (energy - v) * a - b;
        b = a;
        a = next;
        let norm = a.hypot(b);
        log_growth += norm.ln();
        a /= norm;
        b /= norm;
        steps += 1;
    }
    if steps == 0 {
        0.0
    } else {
        log_growth / steps as f64
    }
}
