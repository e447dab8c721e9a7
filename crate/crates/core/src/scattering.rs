//! A semi-infinite discrete wire attached to the root of a tree.
//!
//! Wire sites `n = -1, -2, …` carry `-Δ + C`; the hop between site `-1`
//! and the root is `-t`. An incoming wave `e^{ikn}` at
//! `E = 4 sin²(k/2) + C` is reflected with amplitude `r`, and the tree
//! enters only through its root Weyl value `Γ₀`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::green::GammaValue;

/// Probe parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireSpec {
    pub c: f64,
    pub k: f64,
    pub t: f64,
}

impl WireSpec {
    pub fn new(c: f64, k: f64, t: f64) -> Result<Self> {
        let w = Self { c, k, t };
        w.validate()?;
        Ok(w)
    }

    /// Wire tuned so that momentum `k` sits at `energy`: `C = E - 4 sin²(k/2)`.
    pub fn for_energy(energy: f64, k: f64, t: f64) -> Result<Self> {
        Self::new(energy - 4.0 * (k / 2.0).sin().powi(2), k, t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k < PI) {
            return Err(Error::Domain(format!("wire momentum must lie in (0, π), got {}", self.k)));
        }
        if self.t == 0.0 || !self.t.is_finite() || !self.c.is_finite() {
            return Err(Error::Domain(format!("wire needs finite C and t ≠ 0, got C={}, t={}", self.c, self.t)));
        }
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        4.0 * (self.k / 2.0).sin().powi(2) + self.c
    }

    /// Incoming flux of the unit plane wave.
    pub fn velocity(&self) -> f64 {
        self.k.sin()
    }
}

/// Reflection amplitude `r = (1 - a e^{-ik})/(a e^{ik} - 1)` with `a = t²Γ₀`.
pub fn reflection(gamma_root: GammaValue, wire: WireSpec) -> Result<Complex64> {
    wire.validate()?;
    let a = wire.t * wire.t * gamma_root.0;
    let e = Complex64::from_polar(1.0, wire.k);
    let den = a * e - 1.0;
    if den.norm() <= 1e-14 * (1.0 + a.norm()) || !den.re.is_finite() {
        return Err(Error::SingularJunction(format!("a e^(ik) = 1 at Γ₀ = {}", gamma_root.0)));
    }
    Ok((1.0 - a * e.conj()) / den)
}

/// Amplitudes and fluxes at the junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub r: Complex64,
    /// Wire amplitude at site `-1`: `e^{-ik} + r e^{ik}`.
    pub psi_wire: Complex64,
    /// Root amplitude `(1 + r)/t`.
    pub psi_root: Complex64,
    /// `sin k (1 - |r|²)`.
    pub wire_flux: f64,
    /// `t² |ψ_{-1}|² Im Γ₀`.
    pub tree_flux: f64,
}

pub fn junction(gamma_root: GammaValue, wire: WireSpec) -> Result<Junction> {
    let r = reflection(gamma_root, wire)?;
    let e = Complex64::from_polar(1.0, wire.k);
    let psi_wire = e.conj() + r * e;
    Ok(Junction {
        r,
        psi_wire,
        psi_root: (1.0 + r) / wire.t,
        wire_flux: wire.velocity() * (1.0 - r.norm_sqr()),
        tree_flux: wire.t * wire.t * psi_wire.norm_sqr() * gamma_root.0.im,
    })
}

/// `Σ_y |ψ₀|² Im Γ_y + η|ψ₀|²`, the root's outgoing current plus absorption.
pub fn root_outflow(junction: &Junction, forward: &[Complex64], eta: f64) -> f64 {
    let p = junction.psi_root.norm_sqr();
    forward.iter().map(|g| p * g.im).sum::<f64>() + eta * p
}

/// `y < √(1 + x² - 2x cos k)` for `a = t²Γ₀ = x + iy`: on this set `|r|`
/// strictly decreases as `Im Γ₀` grows.
pub fn in_monotone_region(gamma_root: Complex64, wire: WireSpec) -> bool {
    let a = wire.t * wire.t * gamma_root;
    let q = 1.0 + a.re * a.re - 2.0 * a.re * wire.k.cos();
    a.im * a.im < q
}

/// One point of an equivalence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub energy: f64,
    pub k: f64,
    pub c: f64,
    pub re_r: f64,
    pub im_r: f64,
    pub abs_r: f64,
    pub im_gamma: f64,
    /// `|r|` below its value at `Im Γ₀ = threshold`.
    pub absorbs: bool,
    /// `Im Γ₀ > threshold`.
    pub conducts: bool,
    /// The cell holding a change of the conduction indicator, excluded from the count.
    pub edge_cell: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub rows: Vec<ScanRow>,
    pub disagreements: usize,
    pub max_abs_r: f64,
    pub threshold: f64,
}

/// Compare `|r| < 1` against `Im Γ₀ > threshold` over an energy grid with
/// one root value per energy. The reflection side uses the matching
/// threshold `|r(Re Γ₀ + i·threshold)|`, and `threshold = 0` compares with
/// `|r| < 1 - 1e-12` directly. The grid cell holding each change of the
/// conduction indicator is excluded from the count.
pub fn equivalence_scan(energies: &[f64], gammas: &[Complex64], k: f64, t: f64, threshold: f64) -> Result<EquivalenceReport> {
    if energies.len() != gammas.len() {
        return Err(Error::MismatchedGrids(format!("{} energies, {} Γ values", energies.len(), gammas.len())));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!("threshold must be non-negative, got {threshold}")));
    }
    let mut rows = Vec::with_capacity(energies.len());
    for (&e, &g) in energies.iter().zip(gammas) {
        let wire = WireSpec::for_energy(e, k, t)?;
        let r = reflection(GammaValue(g), wire)?;
        let bar = if threshold > 0.0 {
            reflection(GammaValue(Complex64::new(g.re, threshold)), wire)?.norm()
        } else {
            1.0 - 1e-12
        };
        rows.push(ScanRow {
            energy: e,
            k,
            c: wire.c,
            re_r: r.re,
            im_r: r.im,
            abs_r: r.norm(),
            im_gamma: g.im,
            absorbs: r.norm() < bar,
            conducts: g.im > threshold,
            edge_cell: false,
        });
    }
    // One cell per change of the indicator: the point nearer to where the
    // linear interpolant of Im Γ₀ crosses the threshold.
    for i in 1..rows.len() {
        if rows[i].conducts != rows[i - 1].conducts {
            let (a, b) = (rows[i - 1].im_gamma - threshold, rows[i].im_gamma - threshold);
            let t = if a == b { 0.5 } else { a / (a - b) };
            let j = if t < 0.5 { i - 1 } else { i };
            rows[j].edge_cell = true;
        }
    }
    let disagreements = rows.iter().filter(|r| !r.edge_cell && r.absorbs != r.conducts).count();
    let max_abs_r = rows.iter().map(|r| r.abs_r).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        rows,
        disagreements,
        max_abs_r,
        threshold,
    })
}
