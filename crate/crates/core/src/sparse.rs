//! Small sparse direct solver for complex matrices with a structurally
//! symmetric pattern.
//!
//! Gaussian elimination without pivoting, in minimum-degree order. The
//! routine knows nothing about trees; on tree-shaped or path-shaped patterns
//! minimum degree produces no fill-in.

use num_complex::Complex64;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};

/// Row-wise complex sparse matrix with a structurally symmetric pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    diag: Vec<Complex64>,
    /// `offdiag[i][j] = (A_ij, A_ji)` for `i != j`, stored on both endpoints.
    offdiag: Vec<BTreeMap<usize, (Complex64, Complex64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            diag: vec![Complex64::new(0.0, 0.0); n],
            offdiag: vec![BTreeMap::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_diagonal(&mut self, i: usize, value: Complex64) {
        self.diag[i] += value;
    }

    /// Add `a_ij` at `(i, j)` and `a_ji` at `(j, i)`.
    pub fn add_pair(&mut self, i: usize, j: usize, a_ij: Complex64, a_ji: Complex64) {
        assert_ne!(i, j, "use add_diagonal for diagonal entries");
        let e = self.offdiag[i].entry(j).or_insert((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        e.0 += a_ij;
        e.1 += a_ji;
        let e = self.offdiag[j].entry(i).or_insert((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        e.0 += a_ji;
        e.1 += a_ij;
    }

    pub fn add_symmetric(&mut self, i: usize, j: usize, value: Complex64) {
        self.add_pair(i, j, value, value);
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                self.diag[i] * x[i]
                    + self.offdiag[i]
                        .iter()
                        .map(|(&j, &(a_ij, _))| a_ij * x[j])
                        .sum::<Complex64>()
            })
            .collect()
    }

    pub fn factor(&self) -> Result<SparseLu> {
        SparseLu::factor(self)
    }

    /// Solve `A x = b` with two steps of iterative refinement; returns the
    /// solution and the final residual `‖b - A x‖₂`.
    pub fn solve(&self, b: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        let lu = self.factor()?;
        let mut x = lu.solve(b);
        for _ in 0..2 {
            let ax = self.mul_vec(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = lu.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        let ax = self.mul_vec(&x);
        let residual = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai).norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok((x, residual))
    }
}

/// LU factors in elimination order.
#[derive(Debug, Clone)]
pub struct SparseLu {
    order: Vec<usize>,
    pivots: Vec<Complex64>,
    /// Multipliers `l_ip = A_ip / d_p` per pivot.
    lower: Vec<Vec<(usize, Complex64)>>,
    /// Row entries `A_pj` per pivot.
    upper: Vec<Vec<(usize, Complex64)>>,
}

impl SparseLu {
    fn factor(matrix: &SparseMatrix) -> Result<Self> {
        let n = matrix.n;
        let mut diag = matrix.diag.clone();
        let mut rows = matrix.offdiag.clone();
        let mut eliminated = vec![false; n];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).map(|i| Reverse((rows[i].len(), i))).collect();

        let mut order = Vec::with_capacity(n);
        let mut pivots = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);

        while let Some(Reverse((deg, p))) = heap.pop() {
            if eliminated[p] || deg != rows[p].len() {
                continue;
            }
            let d = diag[p];
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::Numeric {
                    message: format!("zero or non-finite pivot at row {p}"),
                    residual: d.norm(),
                });
            }
            eliminated[p] = true;
            let neighbors: Vec<(usize, (Complex64, Complex64))> =
                std::mem::take(&mut rows[p]).into_iter().collect();

            // Schur complement update over neighbor pairs.
            for &(i, (_, a_ip)) in &neighbors {
                rows[i].remove(&p);
                let l = a_ip / d;
                for &(j, (a_pj, _)) in &neighbors {
                    let update = l * a_pj;
                    if i == j {
                        diag[i] -= update;
                    } else if i < j {
                        let a_jp = neighbors.iter().find(|e| e.0 == j).map(|e| e.1 .1).unwrap();
                        let a_pi = neighbors.iter().find(|e| e.0 == i).map(|e| e.1 .0).unwrap();
                        let update_ji = a_jp / d * a_pi;
                        let zero = Complex64::new(0.0, 0.0);
                        let e = rows[i].entry(j).or_insert((zero, zero));
                        e.0 -= update;
                        e.1 -= update_ji;
                        let e = rows[j].entry(i).or_insert((zero, zero));
                        e.0 -= update_ji;
                        e.1 -= update;
                    }
                }
            }
            for &(i, _) in &neighbors {
                heap.push(Reverse((rows[i].len(), i)));
            }

            order.push(p);
            pivots.push(d);
            lower.push(neighbors.iter().map(|&(i, (_, a_ip))| (i, a_ip / d)).collect());
            upper.push(neighbors.iter().map(|&(j, (a_pj, _))| (j, a_pj)).collect());
        }

        Ok(Self {
            order,
            pivots,
            lower,
            upper,
        })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut y = b.to_vec();
        for (k, &p) in self.order.iter().enumerate() {
            let yp = y[p];
            for &(i, l) in &self.lower[k] {
                y[i] -= l * yp;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); b.len()];
        for (k, &p) in self.order.iter().enumerate().rev() {
            let s: Complex64 = self.upper[k].iter().map(|&(j, u)| u * x[j]).sum();
            x[p] = (y[p] - s) / self.pivots[k];
        }
        x
    }
}
