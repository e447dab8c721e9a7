//! Metric rooted trees with `-d²/dx²` on every edge, continuity and
//! Kirchhoff conditions at internal vertices, and a rotated boundary
//! condition `cos α ψ(0) - sin α ψ'(0) = 0` at the root.
//!
//! Edge `e` is identified with the storage index of its far vertex, so edge
//! lengths live at indices `1..n` of a [`TreeTopology`]. The root vertex
//! carries `K` edges. Along each edge the coordinate runs from the parent
//! end (`x = 0`) to the child end (`x = L_e`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::green::SpectralPoint;
use crate::spectral::cell_measure;
use crate::stats::{mean_and_stderr, median};
use crate::tree::{DisorderFamily, TreeTopology};

/// `[[a, b], [c, d]]`.
pub type Transfer = [[Complex64; 2]; 2];

const HERGLOTZ_SLACK: f64 = 1e-12;

/// A metric tree with lengths `L_e = L·exp(λω_e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGraphInstance {
    pub topology: TreeTopology,
    pub base_length: f64,
    pub lambda: f64,
    /// `ω_e` per edge; index 0 is unused and zero.
    pub omega: Vec<f64>,
    pub alpha_root: f64,
    lengths: Vec<f64>,
}

impl QGraphInstance {
    /// Random lengths drawn from `family` with a ChaCha stream seeded by `seed`.
    pub fn random(
        topology: TreeTopology,
        base_length: f64,
        lambda: f64,
        family: DisorderFamily,
        alpha_root: f64,
        seed: u64,
    ) -> Result<Self> {
        family.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = topology.vertex_count();
        let mut omega = vec![0.0; n];
        for w in omega.iter_mut().skip(1) {
            *w = family.sample(&mut rng);
        }
        Self::from_omega(topology, base_length, lambda, omega, alpha_root)
    }

    /// Every edge of length `base_length`.
    pub fn regular(topology: TreeTopology, base_length: f64, alpha_root: f64) -> Result<Self> {
        let n = topology.vertex_count();
        Self::from_omega(topology, base_length, 0.0, vec![0.0; n], alpha_root)
    }

    pub fn from_omega(
        topology: TreeTopology,
        base_length: f64,
        lambda: f64,
        omega: Vec<f64>,
        alpha_root: f64,
    ) -> Result<Self> {
        topology.validate()?;
        if !(base_length > 0.0 && base_length.is_finite()) {
            return Err(Error::Domain(format!("base length must be positive, got {base_length}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidDisorder(format!("λ must be finite, got {lambda}")));
        }
        if !(0.0..PI).contains(&alpha_root) {
            return Err(Error::Domain(format!("root angle must lie in [0, π), got {alpha_root}")));
        }
        if omega.len() != topology.vertex_count() {
            return Err(Error::MismatchedGrids(format!(
                "{} edge variables for {} vertices",
                omega.len(),
                topology.vertex_count()
            )));
        }
        let mut lengths = vec![0.0; omega.len()];
        for e in 1..omega.len() {
            let l = base_length * (lambda * omega[e]).exp();
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Domain(format!("edge {e} has length {l}")));
            }
            lengths[e] = l;
        }
        Ok(Self {
            topology,
            base_length,
            lambda,
            omega,
            alpha_root,
            lengths,
        })
    }

    /// Length of the edge ending at vertex `e ≥ 1`.
    pub fn edge_length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn edge_count(&self) -> usize {
        self.lengths.len() - 1
    }
}

/// `sin(kL)/k`, continuous through `k = 0`.
fn sin_over_k(k: Complex64, length: f64) -> Complex64 {
    let x = k * length;
    if x.norm() < 1e-4 {
        let x2 = x * x;
        length * (Complex64::new(1.0, 0.0) - x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        x.sin() / k
    }
}

/// `M` with `(ψ(0), ψ'(0))ᵀ = M (ψ(L), ψ'(L))ᵀ` for `-ψ'' = k²ψ`.
pub fn interval_transfer(length: f64, k: Complex64) -> Transfer {
    let c = (k * length).cos();
    let s_k = sin_over_k(k, length);
    [[c, -s_k], [k * k * s_k, c]]
}

/// Projective pair `(ψ, ψ')` up to scale; the ratio is `d/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPair {
    pub p: Complex64,
    pub d: Complex64,
}

impl RatioPair {
    pub fn from_ratio(r: Complex64) -> Self {
        Self {
            p: Complex64::new(1.0, 0.0),
            d: r,
        }
        .normalized()
    }

    fn normalized(self) -> Self {
        let s = self.p.norm().max(self.d.norm());
        if s > 0.0 && s.is_finite() {
            Self {
                p: self.p / s,
                d: self.d / s,
            }
        } else {
            self
        }
    }

    /// `d/p`; `None` in the inverse chart's pole `p = 0`.
    pub fn ratio(&self) -> Option<Complex64> {
        (self.p.norm() > 0.0).then(|| self.d / self.p)
    }

    /// `Im(d p̄)`, which has the sign of `Im(d/p)` in either chart.
    fn im_sign(&self) -> f64 {
        (self.d * self.p.conj()).im
    }

    /// `Im(d p̄)/(|p|² + |d|²)`: chart independent, small near real points
    /// including poles.
    pub fn spherical_im(&self) -> f64 {
        self.im_sign() / (self.p.norm_sqr() + self.d.norm_sqr())
    }

    fn is_degenerate(&self) -> bool {
        !(self.p.norm() > 0.0 || self.d.norm() > 0.0) || !(self.p.re.is_finite() && self.d.re.is_finite())
    }
}

/// Kirchhoff sum `R⁺ = Σ R_e` in projective form.
pub fn kirchhoff_combine(children: &[RatioPair]) -> RatioPair {
    let mut acc = RatioPair {
        p: Complex64::new(1.0, 0.0),
        d: Complex64::new(0.0, 0.0),
    };
    for c in children {
        acc = RatioPair {
            p: acc.p * c.p,
            d: acc.d * c.p + acc.p * c.d,
        }
        .normalized();
    }
    acc
}

/// Ratio at the parent end of an edge given `R⁺` at the child end.
pub fn transport(length: f64, k: Complex64, plus: RatioPair) -> RatioPair {
    let m = interval_transfer(length, k);
    RatioPair {
        p: m[0][0] * plus.p + m[0][1] * plus.d,
        d: m[1][0] * plus.p + m[1][1] * plus.d,
    }
    .normalized()
}

/// `m_α = (cos α m + sin α)/(cos α - sin α m)` in projective form.
pub fn rotate_root(m: RatioPair, alpha: f64) -> RatioPair {
    let (s, c) = alpha.sin_cos();
    RatioPair {
        p: c * m.p - s * m.d,
        d: c * m.d + s * m.p,
    }
    .normalized()
}

/// Root spectral functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFunction {
    /// `Σ_{root edges} ψ_e'(0)/ψ_e(0)` (Dirichlet root angle).
    pub m: RatioPair,
    /// `m` rotated by the instance's root angle.
    pub m_alpha: RatioPair,
}

impl RootFunction {
    pub fn m_alpha_value(&self) -> Result<Complex64> {
        self.m_alpha
            .ratio()
            .ok_or_else(|| Error::SingularPoint("root function has a pole".into()))
    }
}

/// `k = √z` on the principal branch.
pub fn momentum(z: SpectralPoint) -> Complex64 {
    z.z().sqrt()
}

fn herglotz_guard(pair: &RatioPair, eta: f64, context: impl Fn() -> String) -> Result<()> {
    if pair.is_degenerate() {
        return Err(Error::SingularPoint(format!("both charts degenerate at {}", context())));
    }
    let im = pair.im_sign();
    let scale = pair.p.norm_sqr() + pair.d.norm_sqr();
    if eta > 0.0 && im < -HERGLOTZ_SLACK * scale {
        return Err(Error::NotHerglotz { im, context: context() });
    }
    Ok(())
}

/// Leaves-to-root sweep on a finite metric tree. Vertices at the
/// truncation depth see `K` virtual edges whose ratios are `leaf_init`
/// (`0` is a Neumann end).
pub fn qg_recursion(instance: &QGraphInstance, z: SpectralPoint, leaf_init: Complex64) -> Result<RootFunction> {
    z.require_open()?;
    if leaf_init.im < 0.0 {
        return Err(Error::NotHerglotz {
            im: leaf_init.im,
            context: "leaf_init".into(),
        });
    }
    let topo = instance.topology;
    let kk = topo.branching;
    let k = momentum(z);
    let n = topo.vertex_count();
    let leaf_plus = RatioPair::from_ratio(leaf_init * kk as f64);
    let mut edge = vec![
        RatioPair {
            p: Complex64::new(1.0, 0.0),
            d: Complex64::new(0.0, 0.0),
        };
        n
    ];
    for v in (1..n).rev() {
        let kids = topo.children_of(v);
        let plus = if kids.is_empty() {
            leaf_plus
        } else {
            kirchhoff_combine(&edge[kids])
        };
        let pair = transport(instance.edge_length(v), k, plus);
        herglotz_guard(&pair, z.eta, || format!("edge {v}"))?;
        edge[v] = pair;
    }
    let m = if n == 1 {
        leaf_plus
    } else {
        kirchhoff_combine(&edge[topo.children_of(0)])
    };
    let m_alpha = rotate_root(m, instance.alpha_root);
    herglotz_guard(&m_alpha, z.eta, || "root".into())?;
    Ok(RootFunction { m, m_alpha })
}

/// `θ = arctan((K-1)/(2√K))`, so `cos θ = 2√K/(K+1)`.
pub fn band_angle(k: usize) -> f64 {
    let kf = k as f64;
    ((kf - 1.0) / (2.0 * kf.sqrt())).atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub n: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub e_lo: f64,
    pub e_hi: f64,
}

/// Ordered, disjoint energy bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandList {
    pub bands: Vec<Band>,
}

impl BandList {
    pub fn contains(&self, energy: f64) -> bool {
        self.bands.iter().any(|b| energy >= b.e_lo && energy <= b.e_hi)
    }

    /// `|∪ bands ∩ [lo, hi]|`.
    pub fn measure_in(&self, interval: (f64, f64)) -> f64 {
        self.bands
            .iter()
            .map(|b| (b.e_hi.min(interval.1) - b.e_lo.max(interval.0)).max(0.0))
            .sum()
    }
}

/// Bands of the regular tree with all lengths `L`: `|cos kL| ≤ cos θ`.
pub fn regular_bands(k: usize, length: f64, n_max: usize) -> Result<BandList> {
    if k < 2 {
        return Err(Error::InvalidTopology(format!("branching must be at least 2, got {k}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("length must be positive, got {length}")));
    }
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let theta = band_angle(k);
    let bands = (0..n_max)
        .map(|n| {
            let k_lo = (n as f64 * PI + theta) / length;
            let k_hi = ((n + 1) as f64 * PI - theta) / length;
            Band {
                n,
                k_lo,
                k_hi,
                e_lo: k_lo * k_lo,
                e_hi: k_hi * k_hi,
            }
        })
        .collect();
    Ok(BandList { bands })
}

/// Coefficients `(a, b, c, d)` of the generation map `R ↦ (aR + b)/(cR + d)`
/// on the regular tree.
pub fn regular_map(k: usize, length: f64, momentum: Complex64) -> [Complex64; 4] {
    let m = interval_transfer(length, momentum);
    let kf = k as f64;
    // R = (m10 + m11 K R)/(m00 + m01 K R)
    [m[1][1] * kf, m[1][0], m[0][1] * kf, m[0][0]]
}

/// Depth limit of the regular recursion: the fixed point of
/// [`regular_map`] lying deepest in the upper half plane, or the attracting
/// one when both are real.
pub fn regular_fixed_point(k: usize, length: f64, momentum: Complex64) -> Result<Complex64> {
    let [a, b, c, d] = regular_map(k, length, momentum);
    // c R² + (d - a) R - b = 0
    let lin = d - a;
    if c.norm() < 1e-14 * (lin.norm() + b.norm()).max(1e-300) {
        return Err(Error::SingularPoint(format!("k = {momentum}: the fixed point sits at infinity")));
    }
    let disc = (lin * lin + 4.0 * b * c).sqrt();
    let q = if (lin.conj() * disc).re >= 0.0 {
        -(lin + disc) / 2.0
    } else {
        -(lin - disc) / 2.0
    };
    if q.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let roots = [q / c, -b / q];
    let slope = |r: Complex64| (a * d - b * c).norm() / (c * r + d).norm_sqr();
    let tie = 1e-12 * (roots[0].norm() + roots[1].norm()).max(1.0);
    let chosen = if (roots[0].im - roots[1].im).abs() > tie {
        if roots[0].im > roots[1].im {
            roots[0]
        } else {
            roots[1]
        }
    } else if slope(roots[0]) <= slope(roots[1]) {
        roots[0]
    } else {
        roots[1]
    };
    Ok(chosen)
}

/// Edges of `{k : Im R_∞(√(k² + iη)) > threshold}` on `[k_lo, k_hi]`,
/// located on a grid and refined by bisection of the same indicator.
/// `Im R_∞` is read in the spherical chart so the poles of `R_∞` at the
/// Dirichlet points do not register; `η = 0` selects the limit from the
/// upper half plane.
pub fn band_edge_scan(
    k: usize,
    length: f64,
    range: (f64, f64),
    points: usize,
    eta: f64,
    threshold: f64,
) -> Result<Vec<(f64, f64)>> {
    if points < 2 || !(range.1 > range.0) || !(eta >= 0.0) || !(threshold > 0.0) {
        return Err(Error::Domain("band_edge_scan needs a grid, η ≥ 0 and threshold > 0".into()));
    }
    let indicator = |kr: f64| -> Result<bool> {
        let mom = Complex64::new(kr * kr, eta).sqrt();
        let r = match regular_fixed_point(k, length, mom) {
            Ok(r) => RatioPair::from_ratio(r),
            Err(Error::SingularPoint(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        Ok(r.spherical_im() > threshold)
    };
    let refine = |mut lo: f64, mut hi: f64, lo_in: bool| -> Result<f64> {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if indicator(mid)? == lo_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let grid: Vec<f64> = (0..points)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (points - 1) as f64)
        .collect();
    let mut flags = Vec::with_capacity(points);
    for &g in &grid {
        flags.push(indicator(g)?);
    }
    let mut bands = Vec::new();
    let mut start = if flags[0] { Some(grid[0]) } else { None };
    for i in 1..points {
        if flags[i] != flags[i - 1] {
            let edge = refine(grid[i - 1], grid[i], flags[i - 1])?;
            if flags[i] {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                bands.push((s, edge));
            }
        }
    }
    if let Some(s) = start {
        bands.push((s, grid[points - 1]));
    }
    Ok(bands)
}

/// Pool parameters for random-length population dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QgPoolParams {
    pub size: usize,
    pub burn_in: usize,
    pub sweeps: usize,
    /// Independent root batches used for the spread of the estimate.
    pub batches: usize,
}

impl Default for QgPoolParams {
    fn default() -> Self {
        Self {
            size: 4000,
            burn_in: 60,
            sweeps: 20,
            batches: 10,
        }
    }
}

impl QgPoolParams {
    pub fn validate(&self) -> Result<()> {
        if self.size < 2 || self.batches < 2 || self.sweeps == 0 {
            return Err(Error::Domain(
                "quantum-graph pool needs size ≥ 2, batches ≥ 2 and sweeps ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Edge ratios sampled from the stationary law of the random-length tree.
#[derive(Debug, Clone)]
pub struct QgPool {
    pub branching: usize,
    pub pairs: Vec<RatioPair>,
    rng: ChaCha8Rng,
}

impl QgPool {
    /// Start from the regular depth limit (or `i·|k|` when it is singular).
    pub fn new(k: usize, base_length: f64, z: SpectralPoint, size: usize, seed: u64) -> Result<Self> {
        let mom = momentum(z);
        let init = regular_fixed_point(k, base_length, mom)
            .ok()
            .filter(|r| r.im >= 0.0 && r.re.is_finite())
            .unwrap_or(Complex64::new(0.0, mom.norm().max(1.0)));
        Ok(Self {
            branching: k,
            pairs: vec![RatioPair::from_ratio(init); size],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// `sweeps × size` elementary updates: `K` parents drawn with
    /// replacement, a fresh edge length, result written to a random slot.
    pub fn iterate(
        &mut self,
        base_length: f64,
        lambda: f64,
        family: DisorderFamily,
        z: SpectralPoint,
        sweeps: usize,
    ) -> Result<()> {
        let mom = momentum(z);
        let n = self.pairs.len();
        let mut kids = vec![self.pairs[0]; self.branching];
        for _ in 0..sweeps * n {
            for slot in kids.iter_mut() {
                *slot = self.pairs[self.rng.random_range(0..n)];
            }
            let length = base_length * (lambda * family.sample(&mut self.rng)).exp();
            let pair = transport(length, mom, kirchhoff_combine(&kids));
            herglotz_guard(&pair, z.eta, || "pool update".into())?;
            let target = self.rng.random_range(0..n);
            self.pairs[target] = pair;
        }
        Ok(())
    }

    /// `count` root values `Im m_α`, each the Kirchhoff sum of `K` pool draws.
    pub fn root_im(&mut self, alpha: f64, count: usize) -> Vec<f64> {
        let n = self.pairs.len();
        let mut kids = vec![self.pairs[0]; self.branching];
        (0..count)
            .map(|_| {
                for slot in kids.iter_mut() {
                    *slot = self.pairs[self.rng.random_range(0..n)];
                }
                let m = rotate_root(kirchhoff_combine(&kids), alpha);
                m.ratio().map_or(f64::INFINITY, |v| v.im)
            })
            .collect()
    }
}

/// Per-batch medians of `Im m_α(z)` for one `(λ, z)` point.
#[allow(clippy::too_many_arguments)]
pub fn qg_point_medians(
    k: usize,
    base_length: f64,
    lambda: f64,
    family: DisorderFamily,
    alpha: f64,
    z: SpectralPoint,
    params: QgPoolParams,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    z.require_open()?;
    let mut pool = QgPool::new(k, base_length, z, params.size, seed)?;
    if lambda == 0.0 {
        // Stationary from the start.
        pool.iterate(base_length, 0.0, family, z, 1)?;
    } else {
        pool.iterate(base_length, lambda, family, z, params.burn_in)?;
    }
    let per_batch = (params.size / params.batches).max(1);
    let mut medians = Vec::with_capacity(params.batches);
    for _ in 0..params.batches {
        pool.iterate(base_length, lambda, family, z, params.sweeps.div_ceil(params.batches).max(1))?;
        medians.push(median(&pool.root_im(alpha, per_batch)));
    }
    Ok(medians)
}

/// Measure of `{E : median Im m_α > threshold}` per batch, averaged over
/// batches. `medians[i]` holds the batch medians at `energies[i]`.
pub fn measure_from_medians(energies: &[f64], medians: &[Vec<f64>], threshold: f64) -> Result<(f64, f64)> {
    if energies.len() != medians.len() || energies.is_empty() {
        return Err(Error::MismatchedGrids("one batch list per energy is required".into()));
    }
    let batches = medians[0].len();
    if batches == 0 || medians.iter().any(|m| m.len() != batches) {
        return Err(Error::MismatchedGrids("ragged batch lists".into()));
    }
    let per_batch: Vec<f64> = (0..batches)
        .map(|b| {
            let ys: Vec<f64> = medians.iter().map(|m| m[b]).collect();
            cell_measure(energies, &ys, threshold)
        })
        .collect();
    Ok(mean_and_stderr(&per_batch))
}

/// `(λ, measure, stderr)` rows of an ac-measure ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub lambda: f64,
    pub measure: f64,
    pub stderr: f64,
}

/// Sequential ac-measure ladder over `lambdas` on an energy grid.
#[allow(clippy::too_many_arguments)]
pub fn qg_ac_measure(
    k: usize,
    base_length: f64,
    lambdas: &[f64],
    family: DisorderFamily,
    alpha: f64,
    energies: &[f64],
    eta: f64,
    threshold: f64,
    params: QgPoolParams,
    seed: u64,
) -> Result<Vec<MeasureRow>> {
    lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let medians = energies
                .iter()
                .enumerate()
                .map(|(ei, &e)| {
                    let z = SpectralPoint::new(e, eta)?;
                    let s = crate::stats::stream_seed(seed, li as u64, ei as u64);
                    qg_point_medians(k, base_length, lambda, family, alpha, z, params, s)
                })
                .collect::<Result<Vec<_>>>()?;
            let (measure, stderr) = measure_from_medians(energies, &medians, threshold)?;
            Ok(MeasureRow {
                lambda,
                measure,
                stderr,
            })
        })
        .collect()
}
