//! Weyl-Titchmarsh functions `Γ_x(z) = -ψ_x/ψ_{x⁻}` on the tree: the
//! closed-form free fixed point, the exact finite-tree recursion, and the
//! one-dimensional reductions (radial, half-line, quasi-periodic cocycle).
//!
//! Every producer checks the Herglotz property `Im Γ > 0` for `Im z > 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{torus_orbit, TreeInstance, TreeTopology, VertexId};

/// `z = E + iη` in the closed upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub energy: f64,
    pub eta: f64,
}

impl SpectralPoint {
    pub fn new(energy: f64, eta: f64) -> Result<Self> {
        if !energy.is_finite() || !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidSpectralPoint(format!(
                "E={energy}, η={eta}: need finite E and η ≥ 0"
            )));
        }
        Ok(Self { energy, eta })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }

    /// Resolvent-based routines need `η > 0`.
    pub fn require_open(&self) -> Result<()> {
        if self.eta > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSpectralPoint(format!(
                "η must be positive here (E={}, η={})",
                self.energy, self.eta
            )))
        }
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self {
            energy: self.energy,
            eta,
        }
    }
}

/// A value of a Herglotz function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaValue(pub Complex64);

impl GammaValue {
    /// Wrap `value`, enforcing `Im > 0` whenever `eta > 0`.
    pub fn checked(value: Complex64, eta: f64, context: &str) -> Result<Self> {
        check_herglotz(value, eta, context)?;
        Ok(Self(value))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }
}

pub(crate) fn check_herglotz(value: Complex64, eta: f64, context: &str) -> Result<()> {
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numeric {
            message: format!("non-finite value in {context}"),
            residual: f64::NAN,
        });
    }
    if eta > 0.0 && value.im <= 0.0 {
        return Err(Error::NotHerglotz {
            im: value.im,
            context: context.to_string(),
        });
    }
    Ok(())
}

fn check_branching(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidTopology(format!(
            "branching number must be at least 2, got {k}"
        )));
    }
    Ok(())
}

/// The two roots of `a x² + b x + 1 = 0`, computed without cancellation.
fn unit_quadratic_roots(a: f64, b: Complex64) -> (Complex64, Complex64) {
    let disc = (b * b - 4.0 * a).sqrt();
    // Pick the sign that makes |b + s·disc| large.
    let s = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -(b + s * disc) / 2.0;
    (q / a, 1.0 / q)
}

/// Root in ℂ⁺ of `a x² + z x + 1 = 0`, with the boundary-value rule on the
/// real axis: the `Im > 0` limit inside `|E| < 2√a`, the real root of smaller
/// modulus outside.
fn herglotz_root(a: f64, z: SpectralPoint) -> Complex64 {
    let e = z.energy;
    if z.eta > 0.0 {
        let (r1, r2) = unit_quadratic_roots(a, z.z());
        return if r1.im > r2.im { r1 } else { r2 };
    }
    let edge = 2.0 * a.sqrt();
    if e.abs() < edge {
        Complex64::new(-e / (2.0 * a), (4.0 * a - e * e).sqrt() / (2.0 * a))
    } else {
        // -E ± sign(E)√(E² - 4a) over 2a; the + branch has smaller modulus.
        let root = (e * e - 4.0 * a).max(0.0).sqrt();
        Complex64::new((-e + e.signum() * root) / (2.0 * a), 0.0)
    }
}

/// Unique ℂ⁺ fixed point of the non-random recursion `Γ = 1/(-z - KΓ)`, i.e.
/// the Herglotz root of `KΓ² + zΓ + 1 = 0`.
///
/// At `η = 0` this returns the boundary value `Γ(E + i0)`.
pub fn free_fixed_point(k: usize, z: SpectralPoint) -> Result<GammaValue> {
    check_branching(k)?;
    let root = herglotz_root(k as f64, z);
    if z.eta > 0.0 && root.im <= 0.0 {
        // Product of roots is 1/K and Im of their sum is -η/K < 0; a root in ℂ⁺ must exist.
        return Err(Error::Numeric {
            message: format!("no root in the upper half plane at z={}", z.z()),
            residual: root.im,
        });
    }
    GammaValue::checked(root, z.eta, "free_fixed_point")
}

/// Free half-line value: root of `m² + z m + 1 = 0` in ℂ⁺.
pub fn halfline_free(z: SpectralPoint) -> Result<Complex64> {
    let root = herglotz_root(1.0, z);
    check_herglotz(root, z.eta, "halfline_free")?;
    Ok(root)
}

/// One Möbius step `1/(d - z - s)`, as a single division.
#[inline]
pub(crate) fn mobius_step(diagonal: f64, z: Complex64, children_sum: Complex64) -> Complex64 {
    (Complex64::new(diagonal, 0.0) - z - children_sum).inv()
}

fn singular_guard(den: Complex64, context: impl FnOnce() -> String) -> Result<()> {
    if den.re == 0.0 && den.im == 0.0 {
        Err(Error::SingularPoint(context()))
    } else {
        Ok(())
    }
}

/// `Γ_x` for every vertex of a finite instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaField {
    pub topology: TreeTopology,
    /// Storage (breadth-first) order.
    pub values: Vec<Complex64>,
}

impl GammaField {
    pub fn get(&self, v: &VertexId) -> Option<Complex64> {
        self.values.get(v.to_index(self.topology.branching)).copied()
    }

    pub fn root(&self) -> GammaValue {
        GammaValue(self.values[0])
    }

    /// Iterate `(vertex, Γ)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Complex64)> + '_ {
        let k = self.topology.branching;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &g)| (VertexId::from_index(k, i), g))
    }
}

/// Exact backward recursion on a finite instance.
///
/// Vertices at the truncation depth see `K` virtual children each carrying
/// `leaf_init`; `leaf_init = 0` is the Dirichlet truncation (absent
/// children) and `leaf_init = free_fixed_point` grafts free subtrees.
pub fn recurse_finite(
    instance: &TreeInstance,
    z: SpectralPoint,
    leaf_init: GammaValue,
) -> Result<GammaField> {
    z.require_open()?;
    if leaf_init.0.im < 0.0 {
        return Err(Error::NotHerglotz {
            im: leaf_init.0.im,
            context: "leaf_init".into(),
        });
    }
    let topology = instance.topology;
    let k = topology.branching;
    let n = topology.vertex_count();
    let zc = z.z();
    let leaf_sum = leaf_init.0 * k as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); n];

    for i in (0..n).rev() {
        let kids = topology.children_of(i);
        let sum = if kids.is_empty() {
            leaf_sum
        } else {
            values[kids].iter().sum()
        };
        let den = Complex64::new(instance.diagonal(i), 0.0) - zc - sum;
        singular_guard(den, || format!("vertex {i}"))?;
        let g = den.inv();
        check_herglotz(g, z.eta, "recurse_finite")?;
        values[i] = g;
    }
    Ok(GammaField { topology, values })
}

/// Backward radial recursion `Γ_n = 1/(λξ_n + U_n - z - KΓ_{n+1})` from
/// `Γ_depth = free_fixed_point(K, z)`; returns `Γ_0`.
pub fn radial_recursion(
    potential: &[f64],
    xi: &[f64],
    lambda: f64,
    k: usize,
    z: SpectralPoint,
    depth: usize,
) -> Result<GammaValue> {
    let profile = radial_profile(potential, xi, lambda, depth)?;
    radial_backward(&profile, k, z)
}

fn radial_profile(potential: &[f64], xi: &[f64], lambda: f64, depth: usize) -> Result<Vec<f64>> {
    if potential.len() < depth || xi.len() < depth {
        return Err(Error::Domain(format!(
            "radial sequences shorter than depth {depth} (U: {}, ξ: {})",
            potential.len(),
            xi.len()
        )));
    }
    Ok((0..depth).map(|n| potential[n] + lambda * xi[n]).collect())
}

/// All values `Γ_0 … Γ_depth` of the radial recursion for a diagonal profile.
pub fn radial_backward_all(diagonal: &[f64], k: usize, z: SpectralPoint) -> Result<Vec<Complex64>> {
    z.require_open()?;
    let mut out = vec![Complex64::new(0.0, 0.0); diagonal.len() + 1];
    out[diagonal.len()] = free_fixed_point(k, z)?.0;
    let kf = k as f64;
    let zc = z.z();
    for n in (0..diagonal.len()).rev() {
        let den = Complex64::new(diagonal[n], 0.0) - zc - kf * out[n + 1];
        singular_guard(den, || format!("generation {n}"))?;
        out[n] = den.inv();
    }
    for g in &out {
        check_herglotz(*g, z.eta, "radial_recursion")?;
    }
    Ok(out)
}

fn radial_backward(diagonal: &[f64], k: usize, z: SpectralPoint) -> Result<GammaValue> {
    let all = radial_backward_all(diagonal, k, z)?;
    Ok(GammaValue(all[0]))
}

/// Half-line continued fraction `m_n = 1/(V_n - z' - m_{n+1})` from the free
/// half-line value at `depth`; returns `m_0`.
pub fn halfline_m(potential: &[f64], z: SpectralPoint, depth: usize) -> Result<Complex64> {
    z.require_open()?;
    if potential.len() < depth {
        return Err(Error::Domain(format!(
            "potential shorter than depth {depth} ({})",
            potential.len()
        )));
    }
    let zc = z.z();
    let mut m = halfline_free(z)?;
    for n in (0..depth).rev() {
        let den = Complex64::new(potential[n], 0.0) - zc - m;
        singular_guard(den, || format!("site {n}"))?;
        m = den.inv();
    }
    check_herglotz(m, z.eta, "halfline_m")?;
    Ok(m)
}

/// Backward cocycle iteration `Γ_n(θ) = 1/(u₀cos(S^nθ) - z - KΓ_{n+1}(θ))`
/// from the free value at `depth`; returns `Γ_0(θ)`.
pub fn qp_cocycle_iterate(
    amplitude: f64,
    frequency: f64,
    theta: f64,
    k: usize,
    z: SpectralPoint,
    depth: usize,
) -> Result<GammaValue> {
    check_branching(k)?;
    let diagonal: Vec<f64> = torus_orbit(theta, frequency, depth)
        .into_iter()
        .map(|phase| amplitude * phase.cos())
        .collect();
    radial_backward(&diagonal, k, z)
}

/// Like [`qp_cocycle_iterate`] but returns every generation `Γ_0 … Γ_depth`.
pub fn qp_cocycle_orbit(
    amplitude: f64,
    frequency: f64,
    theta: f64,
    k: usize,
    z: SpectralPoint,
    depth: usize,
) -> Result<Vec<Complex64>> {
    check_branching(k)?;
    let diagonal: Vec<f64> = torus_orbit(theta, frequency, depth)
        .into_iter()
        .map(|phase| amplitude * phase.cos())
        .collect();
    radial_backward_all(&diagonal, k, z)
}

/// Geometric schedule `η_j = η₀ 2^{-j}` toward the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaLadder {
    pub start: f64,
    pub floor: f64,
    /// Stop once successive rungs differ by less than this.
    pub tolerance: f64,
}

impl Default for EtaLadder {
    fn default() -> Self {
        Self {
            start: 0.1,
            floor: 1e-3,
            tolerance: 1e-4,
        }
    }
}

/// Outcome of walking an [`EtaLadder`].
#[derive(Debug, Clone, PartialEq)]
pub struct LadderLimit<T> {
    pub value: T,
    pub eta: f64,
    pub rungs: Vec<(f64, T)>,
    /// True when the Cauchy criterion fired before the floor.
    pub converged: bool,
}

impl EtaLadder {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.floor > 0.0 && self.floor <= self.start && self.tolerance > 0.0) {
            return Err(Error::InvalidSpectralPoint(format!(
                "bad η ladder: start={}, floor={}, tolerance={}",
                self.start, self.floor, self.tolerance
            )));
        }
        Ok(())
    }

    /// The rungs `η₀, η₀/2, …` down to (and including one step reaching) the floor.
    pub fn rungs(&self) -> Vec<f64> {
        let mut out = vec![self.start];
        let mut eta = self.start;
        while eta > self.floor {
            eta = (eta / 2.0).max(self.floor);
            out.push(eta);
        }
        out
    }

    /// Walk down the ladder evaluating `f(η)` until the Cauchy criterion
    /// `|f(η_j) - f(η_{j-1})| < tolerance` holds or the floor is reached.
    pub fn limit<T, F>(&self, mut f: F) -> Result<LadderLimit<T>>
    where
        T: Clone + LadderDistance,
        F: FnMut(f64) -> Result<T>,
    {
        self.validate()?;
        let mut rungs: Vec<(f64, T)> = Vec::new();
        for eta in self.rungs() {
            let v = f(eta)?;
            let done = rungs
                .last()
                .map(|(_, prev)| prev.distance(&v) < self.tolerance)
                .unwrap_or(false);
            rungs.push((eta, v.clone()));
            if done {
                return Ok(LadderLimit {
                    value: v,
                    eta,
                    rungs,
                    converged: true,
                });
            }
        }
        let (eta, value) = rungs.last().cloned().expect("ladder has at least one rung");
        Ok(LadderLimit {
            value,
            eta,
            rungs,
            converged: false,
        })
    }
}

/// Distance used by the ladder's Cauchy test.
pub trait LadderDistance {
    fn distance(&self, other: &Self) -> f64;
}

impl LadderDistance for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl LadderDistance for Complex64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl LadderDistance for Vec<f64> {
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_instance, DisorderFamily, DisorderSpec, PotentialSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_fixed_point_examples() {
        let g = free_fixed_point(2, SpectralPoint::new(0.0, 0.0).unwrap()).unwrap().0;
        assert_abs_diff_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        let g = free_fixed_point(2, SpectralPoint::new(0.0, 1.0).unwrap()).unwrap().0;
        assert_abs_diff_eq!(g.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, 0.5, epsilon = 1e-15);

        let g = free_fixed_point(2, SpectralPoint::new(3.0, 0.0).unwrap()).unwrap().0;
        assert_abs_diff_eq!(g.re, -0.5, epsilon = 1e-15);
        assert_eq!(g.im, 0.0);

        // The real-axis value is the η → 0 limit of the Herglotz branch.
        for e in [-3.0, -1.2, 0.4, 2.5, 3.0, 5.0] {
            let at0 = free_fixed_point(2, SpectralPoint::new(e, 0.0).unwrap()).unwrap().0;
            let near = free_fixed_point(2, SpectralPoint::new(e, 1e-10).unwrap()).unwrap().0;
            assert!((at0 - near).norm() < 1e-8, "E={e}: {at0} vs {near}");
        }
        assert!(free_fixed_point(1, SpectralPoint::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn halfline_free_examples() {
        let m = halfline_free(SpectralPoint::new(0.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(m.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.im, (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-15);
        let m = halfline_free(SpectralPoint::new(0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(m.im, 1.0, epsilon = 1e-15);
    }

    fn zero_instance(k: usize, depth: usize) -> TreeInstance {
        build_instance(
            TreeTopology::new(k, depth).unwrap(),
            DisorderSpec::iid(DisorderFamily::Uniform, 0.0),
            PotentialSpec::Zero,
            0,
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_is_stationary_under_finite_recursion() {
        let z = SpectralPoint::new(0.7, 0.05).unwrap();
        let fp = free_fixed_point(3, z).unwrap();
        let field = recurse_finite(&zero_instance(3, 5), z, fp).unwrap();
        for g in &field.values {
            assert!((g - fp.0).norm() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_recursion_converges_to_fixed_point() {
        let z = SpectralPoint::new(0.0, 1.0).unwrap();
        // A zero-disorder tree is radial, so depth 30 runs through the chain.
        let field = recurse_finite(&zero_instance(2, 14), z, GammaValue(c(0.0, 0.0))).unwrap();
        let chain14 = radial_chain_dirichlet(2, z, 14);
        assert!((field.root().0 - chain14).norm() < 1e-15);
        let chain30 = radial_chain_dirichlet(2, z, 30);
        assert!((chain30 - c(0.0, 0.5)).norm() < 1e-6);
    }

    fn radial_chain_dirichlet(k: usize, z: SpectralPoint, depth: usize) -> Complex64 {
        let mut g = c(0.0, 0.0);
        for _ in 0..=depth {
            g = mobius_step(0.0, z.z(), k as f64 * g);
        }
        g
    }

    #[test]
    fn mobius_contraction_rate_at_eta_point_one() {
        // Error after n generations from two different Herglotz leaf values.
        let z = SpectralPoint::new(0.3, 0.1).unwrap();
        let fp = free_fixed_point(2, z).unwrap().0;
        let mut errs = Vec::new();
        for init in [c(0.0, 0.0), c(1.0, 3.0), c(-2.0, 0.01)] {
            let mut g = init;
            let mut trace = Vec::new();
            for _ in 0..200 {
                g = mobius_step(0.0, z.z(), 2.0 * g);
                trace.push((g - fp).norm());
            }
            errs.push(trace);
        }
        // Halving at least every 10/η = 100 generations, geometric thereafter.
        for trace in errs {
            assert!(trace[199] <= 0.25 * trace[99].max(1e-300) || trace[199] < 1e-14);
            assert!(trace[99] <= 0.5 * trace[0]);
        }
    }

    #[test]
    fn finite_recursion_fixed_point_residual() {
        let inst = build_instance(
            TreeTopology::new(2, 10).unwrap(),
            DisorderSpec::iid(DisorderFamily::Uniform, 0.8),
            PotentialSpec::RadialPeriodic {
                values: vec![0.3, -0.1],
            },
            77,
        )
        .unwrap();
        let z = SpectralPoint::new(-0.4, 0.02).unwrap();
        let field = recurse_finite(&inst, z, free_fixed_point(2, z).unwrap()).unwrap();
        for i in 0..inst.len() {
            let kids = inst.topology.children_of(i);
            if kids.is_empty() {
                continue;
            }
            let sum: Complex64 = field.values[kids].iter().sum();
            let expected = mobius_step(inst.diagonal(i), z.z(), sum);
            assert!((field.values[i] - expected).norm() <= 1e-12);
            assert!(field.values[i].im > 0.0);
        }
    }

    #[test]
    fn recursion_rejects_closed_axis() {
        let inst = zero_instance(2, 3);
        let z = SpectralPoint::new(0.0, 0.0).unwrap();
        assert!(recurse_finite(&inst, z, GammaValue(c(0.0, 0.0))).is_err());
    }

    #[test]
    fn radial_equals_full_tree() {
        let topo = TreeTopology::new(2, 8).unwrap();
        let pot = PotentialSpec::RadialPeriodic {
            values: vec![0.5, -0.25, 0.1],
        };
        let inst = build_instance(topo, DisorderSpec::radial(DisorderFamily::Uniform, 0.7), pot.clone(), 19)
            .unwrap();
        let z = SpectralPoint::new(0.3, 0.01).unwrap();
        let field = recurse_finite(&inst, z, free_fixed_point(2, z).unwrap()).unwrap();
        let u = pot.radial_profile(9);
        let radial = radial_recursion(&u, &inst.draws, 0.7, 2, z, 9).unwrap();
        assert_eq!(field.root().0, radial.0);
    }

    #[test]
    fn zero_radial_data_gives_fixed_point() {
        let z = SpectralPoint::new(1.1, 0.2).unwrap();
        let g = radial_recursion(&[0.0; 50], &[0.0; 50], 1.0, 3, z, 50).unwrap();
        assert!((g.0 - free_fixed_point(3, z).unwrap().0).norm() < 1e-14);
        let q = qp_cocycle_iterate(0.0, 0.3, 1.0, 3, z, 50).unwrap();
        assert!((q.0 - free_fixed_point(3, z).unwrap().0).norm() < 1e-14);
    }

    #[test]
    fn cocycle_covariance_is_exact() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let z = SpectralPoint::new(0.2, 0.01).unwrap();
        let theta = 1.234;
        let orbit = qp_cocycle_orbit(0.5, alpha, theta, 2, z, 200).unwrap();
        let shifted =
            qp_cocycle_iterate(0.5, alpha, crate::tree::torus_shift(theta, alpha), 2, z, 199).unwrap();
        assert_eq!(orbit[1], shifted.0);
    }

    #[test]
    fn ladder_stops_on_cauchy_criterion() {
        let ladder = EtaLadder {
            start: 0.1,
            floor: 1e-6,
            tolerance: 1e-3,
        };
        let out = ladder.limit(|eta| Ok(2.0 + eta)).unwrap();
        assert!(out.converged);
        assert!(out.eta < 2e-3);
        assert!((out.value - 2.0).abs() < 2e-3);
        assert!(EtaLadder { start: 0.1, floor: 1.0, tolerance: 1e-3 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn free_fixed_point_residual(e in -6.0f64..6.0, eta in 1e-3f64..1.0, k in 2usize..6) {
            let z = SpectralPoint::new(e, eta).unwrap();
            let g = free_fixed_point(k, z).unwrap().0;
            let res = (k as f64) * g * g + z.z() * g + 1.0;
            prop_assert!(res.norm() < 1e-13);
            prop_assert!(g.im > 0.0);
        }

        #[test]
        fn radial_scaling_identity(seed in 0u64..500, k in 2usize..4, e in -3.0f64..3.0, eta in 1e-3f64..1.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let depth = 300;
            let u: Vec<f64> = (0..depth).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xi: Vec<f64> = (0..depth).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = SpectralPoint::new(e, eta).unwrap();
            let g = radial_recursion(&u, &xi, 0.9, k, z, depth).unwrap().0;
            let sk = (k as f64).sqrt();
            let v: Vec<f64> = (0..depth).map(|n| (u[n] + 0.9 * xi[n]) / sk).collect();
            let m = halfline_m(&v, SpectralPoint::new(e / sk, eta / sk).unwrap(), depth).unwrap();
            prop_assert!((sk * g - m).norm() < 1e-12);
        }
    }
}
