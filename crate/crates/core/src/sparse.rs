//! Compressed-row sparse matrices on the P1 mesh graph and an envelope
//! Cholesky factorization for the symmetric positive definite systems.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::mesh::TriangularMesh;

/// Row structure shared by every operator assembled on one mesh.
///
/// `element_slots[e][a][b]` is the position in the value array of the entry
/// (row = vertex `a` of element `e`, column = vertex `b`).
#[derive(Debug, Clone)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    element_slots: Vec<[[usize; 3]; 3]>,
}

impl SparsityPattern {
    pub fn from_mesh(mesh: &TriangularMesh) -> Self {
        let n = mesh.num_nodes();
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for tri in mesh.elements() {
            for &a in tri {
                for &b in tri {
                    rows[a].insert(b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            col_idx.extend(row.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let mut pattern = Self {
            n,
            row_ptr,
            col_idx,
            element_slots: Vec::with_capacity(mesh.num_elements()),
        };
        for tri in mesh.elements() {
            let mut slots = [[0; 3]; 3];
            for (a, &ra) in tri.iter().enumerate() {
                for (b, &cb) in tri.iter().enumerate() {
                    slots[a][b] = pattern.position(ra, cb).expect("pattern covers element");
                }
            }
            pattern.element_slots.push(slots);
        }
        pattern
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    /// Sums 3×3 element matrices into a matrix with this pattern. Element
    /// contributions are added in element order.
    pub fn assemble<I>(&self, contributions: I) -> CsrMatrix
    where
        I: IntoIterator<Item = (usize, [[f64; 3]; 3])>,
    {
        let mut values = vec![0.0; self.nnz()];
        for (e, local) in contributions {
            let slots = &self.element_slots[e];
            for a in 0..3 {
                for b in 0..3 {
                    values[slots[a][b]] += local[a][b];
                }
            }
        }
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }
}

/// Square sparse matrix in compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * y[self.col_idx[k]];
            }
            s += xi * r;
        }
        s
    }

    /// `self + scale * other`; both must share the same pattern.
    pub fn add_scaled(&self, scale: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.row_ptr, other.row_ptr);
        assert_eq!(self.col_idx, other.col_idx);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        CsrMatrix {
            values,
            ..self.clone()
        }
    }

    pub fn scaled(&self, scale: f64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|v| scale * v).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |A_ij - A_ji| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Indices of rows that contain a nonzero value.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row(i).any(|(_, v)| v != 0.0))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Counts linear solves and factorizations. Shared by reference between the
/// components of one solver run.
#[derive(Debug, Default)]
pub struct SolveCounters {
    solves: AtomicUsize,
    factorizations: AtomicUsize,
}

impl SolveCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations.load(Ordering::Relaxed)
    }

    pub(crate) fn record_solve(&self) {
        self.solves.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn record_factorization(&self) {
        self.factorizations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.solves.store(0, Ordering::Relaxed);
        self.factorizations.store(0, Ordering::Relaxed);
    }
}

/// Cholesky factor `A = L Lᵀ` stored row-wise over the lower envelope of `A`.
///
/// With the lexicographic node ordering the envelope of a P1 matrix on an
/// `n × n` grid has half-bandwidth `n + 2`, and factorization does not fill
/// outside of it.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).map(|(j, _)| j).min().unwrap_or(i).min(i))
            .collect();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[offset[i] + j - fi];
                let li = &data[offset[i] + k0 - fi..offset[i] + j - fi];
                let lj = &data[offset[j] + k0 - fj..offset[j] + j - fj];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    let djj = data[offset[j + 1] - 1];
                    data[offset[i] + j - fi] = s / djj;
                } else {
                    if !(s > 0.0) {
                        return Err(Error::Factorization { row: i, pivot: s });
                    }
                    data[offset[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b` in place (one forward and one backward substitution).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(l, x)| l * x).sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (bk, l) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
