//! Rooted K-ary trees, vertex addressing, and the disorder / background
//! potential generators shared by every other module.
//!
//! Vertices are stored in breadth-first order: the root is index 0 and the
//! children of index `i` are `K*i + 1 ..= K*i + K`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Hard cap on materialized vertices.
pub const MAX_VERTICES: usize = 1 << 26;

/// Finite truncation of the regular rooted tree with branching `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    pub branching: usize,
    pub depth: usize,
}

impl TreeTopology {
    pub fn new(branching: usize, depth: usize) -> Result<Self> {
        let topology = Self { branching, depth };
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching < 2 {
            return Err(Error::InvalidTopology(format!(
                "branching number must be at least 2, got {}",
                self.branching
            )));
        }
        match self.checked_vertex_count() {
            Some(n) if n <= MAX_VERTICES => Ok(()),
            _ => Err(Error::InvalidTopology(format!(
                "K={} D={} exceeds {} vertices",
                self.branching, self.depth, MAX_VERTICES
            ))),
        }
    }

    fn checked_vertex_count(&self) -> Option<usize> {
        let mut total: usize = 0;
        let mut level: usize = 1;
        for _ in 0..=self.depth {
            total = total.checked_add(level)?;
            level = level.checked_mul(self.branching)?;
        }
        Some(total)
    }

    /// `sum_{n=0}^{D} K^n`.
    pub fn vertex_count(&self) -> usize {
        self.checked_vertex_count().expect("validated topology")
    }

    /// Index of the first vertex of generation `n`.
    pub fn generation_start(&self, n: usize) -> usize {
        let mut start = 0;
        let mut level = 1;
        for _ in 0..n {
            start += level;
            level *= self.branching;
        }
        start
    }

    pub fn generation_len(&self, n: usize) -> usize {
        self.branching.pow(n as u32)
    }

    /// Generation of every vertex, in storage order.
    pub fn generations(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.vertex_count());
        let mut level = 1;
        for n in 0..=self.depth {
            out.extend(std::iter::repeat_n(n, level));
            level *= self.branching;
        }
        out
    }

    /// Children of the vertex stored at `index`, empty for leaves.
    pub fn children_of(&self, index: usize) -> std::ops::Range<usize> {
        let first = self.branching * index + 1;
        if first >= self.vertex_count() {
            first..first
        } else {
            first..first + self.branching
        }
    }

    pub fn parent_of(&self, index: usize) -> Option<usize> {
        (index > 0).then(|| (index - 1) / self.branching)
    }

    pub fn is_leaf(&self, index: usize) -> bool {
        self.branching * index + 1 >= self.vertex_count()
    }
}

/// A vertex addressed by its path of child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexId {
    path: Vec<usize>,
}

impl VertexId {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_path(path: impl Into<Vec<usize>>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    pub fn generation(&self) -> usize {
        self.path.len()
    }

    /// Backward neighbor `x⁻`; `None` at the root.
    pub fn parent(&self) -> Option<VertexId> {
        if self.path.is_empty() {
            return None;
        }
        Some(Self {
            path: self.path[..self.path.len() - 1].to_vec(),
        })
    }

    pub fn child(&self, i: usize) -> VertexId {
        let mut path = self.path.clone();
        path.push(i);
        Self { path }
    }

    pub fn to_index(&self, branching: usize) -> usize {
        self.path.iter().fold(0, |idx, &c| idx * branching + 1 + c)
    }

    pub fn from_index(branching: usize, mut index: usize) -> Self {
        let mut path = Vec::new();
        while index > 0 {
            path.push((index - 1) % branching);
            index = (index - 1) / branching;
        }
        path.reverse();
        Self { path }
    }
}

/// The `K` forward neighbors of `v`, in child-index order. Leaves and
/// vertices beyond the truncation have none.
pub fn forward_neighbors(topology: &TreeTopology, v: &VertexId) -> Vec<VertexId> {
    if v.generation() >= topology.depth || v.path.iter().any(|&c| c >= topology.branching) {
        return Vec::new();
    }
    (0..topology.branching).map(|i| v.child(i)).collect()
}

/// Bounded single-site distribution of the random variables `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisorderFamily {
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// `±1` with equal probability.
    TwoPoint,
    /// Centered normal with standard deviation `sigma`, conditioned on `|ω| <= cutoff`.
    TruncatedGaussian { sigma: f64, cutoff: f64 },
}

impl DisorderFamily {
    pub fn validate(&self) -> Result<()> {
        if let DisorderFamily::TruncatedGaussian { sigma, cutoff } = *self {
            if !(sigma.is_finite() && sigma > 0.0 && cutoff.is_finite() && cutoff > 0.0) {
                return Err(Error::InvalidDisorder(format!(
                    "truncated gaussian needs finite sigma > 0 and cutoff > 0, got sigma={sigma}, cutoff={cutoff}"
                )));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DisorderFamily::Uniform => rng.random_range(-1.0..=1.0),
            DisorderFamily::TwoPoint => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DisorderFamily::TruncatedGaussian { sigma, cutoff } => loop {
                let g: f64 = StandardNormal.sample(rng);
                let x = sigma * g;
                if x.abs() <= cutoff {
                    break x;
                }
            },
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DisorderFamily::Uniform | DisorderFamily::TwoPoint => (-1.0, 1.0),
            DisorderFamily::TruncatedGaussian { cutoff, .. } => (-cutoff, cutoff),
        }
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DisorderFamily::Uniform => 1.0 / 3.0,
            DisorderFamily::TwoPoint => 1.0,
            DisorderFamily::TruncatedGaussian { sigma, cutoff } => {
                // Simpson on the truncated density.
                let n = 2000;
                let h = 2.0 * cutoff / n as f64;
                let (mut mass, mut second) = (0.0, 0.0);
                for i in 0..=n {
                    let x = -cutoff + i as f64 * h;
                    let w = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let g = (-0.5 * (x / sigma).powi(2)).exp();
                    mass += w * g;
                    second += w * g * x * x;
                }
                second / mass
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Correlation {
    #[default]
    Iid,
    /// One draw per generation: `ω_x = ξ_{|x|}`.
    Radial,
}

/// Law of the random potential `λ V(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub family: DisorderFamily,
    pub strength: f64,
    #[serde(default)]
    pub correlation: Correlation,
    /// Weak-correlation constant. Recorded as declared, never validated
    /// against the field; iid fields always use 1.
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl DisorderSpec {
    pub fn iid(family: DisorderFamily, strength: f64) -> Self {
        Self {
            family,
            strength,
            correlation: Correlation::Iid,
            kappa: 1.0,
        }
    }

    pub fn radial(family: DisorderFamily, strength: f64) -> Self {
        Self {
            family,
            strength,
            correlation: Correlation::Radial,
            kappa: 1.0,
        }
    }

    /// Declare `κ` for bound checks; ignored (forced to 1) for iid fields.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn effective_kappa(&self) -> f64 {
        match self.correlation {
            Correlation::Iid => 1.0,
            Correlation::Radial => self.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if !self.strength.is_finite() {
            return Err(Error::InvalidDisorder("strength must be finite".into()));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidDisorder(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Background potential `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `U_x = values[|x| mod τ]` with `τ = values.len()`.
    RadialPeriodic { values: Vec<f64> },
    /// `U_x = u₀ cos(S^{|x|} θ₀)` with `S θ = (θ + 2π α) mod 2π`.
    QuasiPeriodic {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::RadialPeriodic { values } => {
                if values.is_empty() {
                    Err(Error::InvalidPotential("radial period must be at least 1".into()))
                } else if values.iter().any(|v| !v.is_finite()) {
                    Err(Error::InvalidPotential("non-finite periodic value".into()))
                } else {
                    Ok(())
                }
            }
            PotentialSpec::QuasiPeriodic {
                amplitude,
                frequency,
                phase,
            } => {
                if [amplitude, frequency, phase].iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential("non-finite quasi-periodic parameter".into()))
                }
            }
        }
    }

    /// Radial profile `U_0, …, U_{len-1}`.
    pub fn radial_profile(&self, len: usize) -> Vec<f64> {
        match self {
            PotentialSpec::Zero => vec![0.0; len],
            PotentialSpec::RadialPeriodic { values } => {
                (0..len).map(|n| values[n % values.len()]).collect()
            }
            PotentialSpec::QuasiPeriodic {
                amplitude,
                frequency,
                phase,
            } => torus_orbit(*phase, *frequency, len)
                .into_iter()
                .map(|theta| amplitude * theta.cos())
                .collect(),
        }
    }

    /// `U` at generation `n`.
    pub fn at_generation(&self, n: usize) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::RadialPeriodic { values } => values[n % values.len()],
            PotentialSpec::QuasiPeriodic { .. } => self.radial_profile(n + 1)[n],
        }
    }
}

/// One step of the torus shift `S θ = (θ + 2π α) mod 2π`.
pub fn torus_shift(theta: f64, frequency: f64) -> f64 {
    (theta + TAU * frequency).rem_euclid(TAU)
}

/// `θ, Sθ, S²θ, …` (`len` points), generated by repeated shifting so that
/// the orbit of `Sθ` is exactly the tail of the orbit of `θ`.
pub fn torus_orbit(theta: f64, frequency: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut phase = theta.rem_euclid(TAU);
    for _ in 0..len {
        out.push(phase);
        phase = torus_shift(phase, frequency);
    }
    out
}

/// A realization of `T + U + λV(ω)` on a finite truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeInstance {
    pub topology: TreeTopology,
    pub disorder: DisorderSpec,
    pub potential_spec: PotentialSpec,
    /// `ω_x` per vertex, storage order.
    pub omega: Vec<f64>,
    /// `U_x` per vertex, storage order.
    pub potential: Vec<f64>,
    /// The independent draws: one per vertex (iid) or one per generation (radial).
    pub draws: Vec<f64>,
    pub seed: u64,
}

impl TreeInstance {
    pub fn branching(&self) -> usize {
        self.topology.branching
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Diagonal `λω_x + U_x` of the operator at storage index `i`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.disorder.strength * self.omega[i] + self.potential[i]
    }

    pub fn omega_at(&self, v: &VertexId) -> f64 {
        self.omega[v.to_index(self.topology.branching)]
    }
}

/// Draw a tree instance; bit-identical for identical `(specs, seed)`.
pub fn build_instance(
    topology: TreeTopology,
    disorder: DisorderSpec,
    potential: PotentialSpec,
    seed: u64,
) -> Result<TreeInstance> {
    topology.validate()?;
    disorder.validate()?;
    potential.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let generations = topology.generations();
    let n = generations.len();

    let (omega, draws) = match disorder.correlation {
        Correlation::Iid => {
            let omega: Vec<f64> = (0..n).map(|_| disorder.family.sample(&mut rng)).collect();
            (omega.clone(), omega)
        }
        Correlation::Radial => {
            let xi: Vec<f64> = (0..=topology.depth)
                .map(|_| disorder.family.sample(&mut rng))
                .collect();
            (generations.iter().map(|&g| xi[g]).collect(), xi)
        }
    };

    let profile = potential.radial_profile(topology.depth + 1);
    let potential_values = generations.iter().map(|&g| profile[g]).collect();

    Ok(TreeInstance {
        topology,
        disorder,
        potential_spec: potential,
        omega,
        potential: potential_values,
        draws,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_disorder() -> DisorderSpec {
        DisorderSpec::iid(DisorderFamily::Uniform, 0.0)
    }

    #[test]
    fn rejects_chain() {
        assert!(matches!(
            TreeTopology::new(1, 3),
            Err(Error::InvalidTopology(_))
        ));
        assert!(build_instance(
            TreeTopology { branching: 1, depth: 2 },
            zero_disorder(),
            PotentialSpec::Zero,
            1
        )
        .is_err());
    }

    #[test]
    fn binary_depth_two_has_seven_vertices() {
        let inst = build_instance(
            TreeTopology::new(2, 2).unwrap(),
            zero_disorder(),
            PotentialSpec::Zero,
            0,
        )
        .unwrap();
        assert_eq!(inst.len(), 7);
        assert!(inst.potential.iter().all(|&u| u == 0.0));
        assert!((0..7).all(|i| inst.diagonal(i) == 0.0));
    }

    #[test]
    fn radial_draws_one_value_per_generation() {
        let inst = build_instance(
            TreeTopology::new(2, 3).unwrap(),
            DisorderSpec::radial(DisorderFamily::Uniform, 1.0),
            PotentialSpec::Zero,
            11,
        )
        .unwrap();
        assert_eq!(inst.draws.len(), 4);
        for (i, g) in inst.topology.generations().into_iter().enumerate() {
            assert_eq!(inst.omega[i], inst.draws[g]);
        }
    }

    #[test]
    fn quasi_periodic_generation_one() {
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let pot = PotentialSpec::QuasiPeriodic {
            amplitude: 0.5,
            frequency: alpha,
            phase: 0.0,
        };
        let inst = build_instance(TreeTopology::new(2, 2).unwrap(), zero_disorder(), pot, 3).unwrap();
        // 0.5 cos(2π(√5−1)/2), evaluated directly.
        assert!((inst.potential[1] - (-0.368_684_439)).abs() < 1e-8, "{}", inst.potential[1]);
        assert_eq!(inst.potential[1], inst.potential[2]);
    }

    #[test]
    fn bad_potentials_rejected() {
        let topo = TreeTopology::new(2, 2).unwrap();
        let err = build_instance(
            topo,
            zero_disorder(),
            PotentialSpec::RadialPeriodic { values: vec![] },
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidPotential(_)));
    }

    #[test]
    fn periodic_potential_cycles() {
        let pot = PotentialSpec::RadialPeriodic {
            values: vec![1.0, -2.0, 0.5],
        };
        assert_eq!(pot.radial_profile(7), vec![1.0, -2.0, 0.5, 1.0, -2.0, 0.5, 1.0]);
        assert_eq!(pot.at_generation(4), -2.0);
    }

    #[test]
    fn neighbors() {
        let topo = TreeTopology::new(2, 3).unwrap();
        assert_eq!(
            forward_neighbors(&topo, &VertexId::root()),
            vec![VertexId::from_path([0]), VertexId::from_path([1])]
        );
        assert!(forward_neighbors(&topo, &VertexId::from_path([0, 1, 1])).is_empty());

        let topo3 = TreeTopology::new(3, 4).unwrap();
        let kids = forward_neighbors(&topo3, &VertexId::from_path([1, 0]));
        assert_eq!(kids.len(), 3);
        for (i, kid) in kids.iter().enumerate() {
            assert_eq!(kid.path(), &[1, 0, i]);
            assert_eq!(kid.parent().unwrap(), VertexId::from_path([1, 0]));
        }
    }

    #[test]
    fn index_roundtrip_and_layout() {
        let topo = TreeTopology::new(3, 4).unwrap();
        for i in 0..topo.vertex_count() {
            let v = VertexId::from_index(3, i);
            assert_eq!(v.to_index(3), i);
            if let Some(p) = topo.parent_of(i) {
                assert_eq!(v.parent().unwrap().to_index(3), p);
                assert!(topo.children_of(p).contains(&i));
            }
            assert_eq!(topo.is_leaf(i), v.generation() == 4);
        }
        assert_eq!(topo.vertex_count(), 1 + 3 + 9 + 27 + 81);
        assert_eq!(topo.generation_start(2), 4);
    }

    #[test]
    fn families_are_bounded_with_correct_mean() {
        let families = [
            DisorderFamily::Uniform,
            DisorderFamily::TwoPoint,
            DisorderFamily::TruncatedGaussian {
                sigma: 0.7,
                cutoff: 1.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for fam in families {
            let (lo, hi) = fam.support();
            let n = 1_000_000;
            let mut sum = 0.0;
            for _ in 0..n {
                let x = fam.sample(&mut rng);
                assert!((lo..=hi).contains(&x));
                sum += x;
            }
            let mean = sum / n as f64;
            let sigma = fam.variance().sqrt();
            assert!(
                (mean - fam.mean()).abs() < 5.0 * sigma / 1e3,
                "{fam:?}: mean {mean}"
            );
        }
    }

    #[test]
    fn truncated_gaussian_variance_matches_samples() {
        let fam = DisorderFamily::TruncatedGaussian {
            sigma: 1.0,
            cutoff: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let var = (0..n).map(|_| fam.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
        // Known value for the unit normal truncated at ±1.
        assert!((fam.variance() - 0.291_125_095).abs() < 1e-6);
        assert!((var - fam.variance()).abs() < 5e-3);
    }

    #[test]
    fn torus_orbit_is_shift_covariant() {
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let orbit = torus_orbit(0.3, a, 50);
        let shifted = torus_orbit(torus_shift(0.3, a), a, 49);
        assert_eq!(&orbit[1..], &shifted[..]);
    }
}
