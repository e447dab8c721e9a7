//! Root ratio of the metric tree against a second-order finite-difference
//! discretization of the full graph.

use std::collections::BTreeMap;

use acstab_core::green::SpectralPoint;
use acstab_core::qgraph::{momentum, qg_recursion, QGraphInstance};
use acstab_core::sparse::SparseMatrix;
use acstab_core::tree::{DisorderFamily, TreeTopology};
use num_complex::Complex64;

const SEGMENTS: usize = 200;

/// Node layout: vertex `v ≥ 1` owns one unknown, and edge `e` (ending at
/// `e`) owns `SEGMENTS - 1` interior unknowns ordered from the parent end.
struct Layout {
    n_vertices: usize,
}

impl Layout {
    fn vertex(&self, v: usize) -> Option<usize> {
        (v > 0).then(|| v - 1)
    }

    fn interior(&self, e: usize, j: usize) -> usize {
        debug_assert!((1..SEGMENTS).contains(&j));
        (self.n_vertices - 1) + (e - 1) * (SEGMENTS - 1) + (j - 1)
    }

    fn unknowns(&self) -> usize {
        (self.n_vertices - 1) * SEGMENTS
    }

    /// Node `j ∈ [0, SEGMENTS]` of edge `e`; `None` for the root.
    fn node(&self, topo: &TreeTopology, e: usize, j: usize) -> Option<usize> {
        if j == 0 {
            self.vertex(topo.parent_of(e).unwrap())
        } else if j == SEGMENTS {
            self.vertex(e)
        } else {
            Some(self.interior(e, j))
        }
    }
}

/// `m = Σ_{root edges} ψ'(0)` with `ψ(root) = 1`, Kirchhoff at internal
/// vertices and Neumann ends at the leaves.
fn fd_root_ratio(inst: &QGraphInstance, z: SpectralPoint) -> Complex64 {
    let topo = inst.topology;
    let n_vertices = topo.vertex_count();
    let layout = Layout { n_vertices };
    let k2 = z.z();
    let one = Complex64::new(1.0, 0.0);
    let mut entries: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    let mut rhs = vec![Complex64::new(0.0, 0.0); layout.unknowns()];
    let mut add = |row: usize, col: Option<usize>, value: Complex64, rhs: &mut Vec<Complex64>| match col {
        Some(c) => *entries.entry((row, c)).or_default() += value,
        None => rhs[row] -= value, // root value is 1
    };

    for e in 1..n_vertices {
        let h = inst.edge_length(e) / SEGMENTS as f64;
        for j in 1..SEGMENTS {
            let row = layout.interior(e, j);
            add(row, layout.node(&topo, e, j - 1), one, &mut rhs);
            add(row, Some(row), -(2.0 - h * h * k2), &mut rhs);
            add(row, layout.node(&topo, e, j + 1), one, &mut rhs);
        }
    }
    for v in 1..n_vertices {
        let row = layout.vertex(v).unwrap();
        // ψ_e'(L) ≈ (ψ_n - ψ_{n-1})/h - (h/2)k²ψ_n on the incoming edge.
        let h = inst.edge_length(v) / SEGMENTS as f64;
        add(row, Some(row), one / h - h / 2.0 * k2, &mut rhs);
        add(row, layout.node(&topo, v, SEGMENTS - 1), -one / h, &mut rhs);
        // minus Σ ψ_f'(0) ≈ (ψ_1 - ψ_0)/h + (h/2)k²ψ_0 on outgoing edges.
        for f in topo.children_of(v) {
            let hf = inst.edge_length(f) / SEGMENTS as f64;
            add(row, layout.node(&topo, f, 1), -one / hf, &mut rhs);
            add(row, Some(row), one / hf - hf / 2.0 * k2, &mut rhs);
        }
    }

    let mut a = SparseMatrix::new(layout.unknowns());
    for (&(i, j), &v) in &entries {
        if i == j {
            a.add_diagonal(i, v);
        } else if i < j {
            let back = entries.get(&(j, i)).copied().unwrap_or_default();
            a.add_pair(i, j, v, back);
        } else if !entries.contains_key(&(j, i)) {
            a.add_pair(j, i, Complex64::new(0.0, 0.0), v);
        }
    }
    let (psi, residual) = a.solve(&rhs).unwrap();
    assert!(residual < 1e-9, "residual {residual}");

    topo.children_of(0)
        .map(|f| {
            let h = inst.edge_length(f) / SEGMENTS as f64;
            let psi1 = psi[layout.node(&topo, f, 1).unwrap()];
            (psi1 - one) / h + h / 2.0 * k2
        })
        .sum()
}

#[test]
fn recursion_matches_finite_differences() {
    let cases = [(2, 3, 0.0, 2.0, 0.5, 1), (2, 3, 0.3, 5.0, 0.3, 2), (3, 2, 0.5, 1.2, 0.2, 3)];
    for (k, depth, lambda, e, eta, seed) in cases {
        let topo = TreeTopology::new(k, depth).unwrap();
        let inst = QGraphInstance::random(topo, 1.0, lambda, DisorderFamily::Uniform, 0.0, seed).unwrap();
        let z = SpectralPoint::new(e, eta).unwrap();
        let exact = qg_recursion(&inst, z, Complex64::new(0.0, 0.0)).unwrap().m.ratio().unwrap();
        let fd = fd_root_ratio(&inst, z);
        let rel = (exact - fd).norm() / exact.norm();
        assert!(rel < 1e-4, "K={k} E={e}: recursion {exact} vs FD {fd} (rel {rel:e}, k = {})", momentum(z));
        assert!(exact.im > 0.0);
    }
}
