//! Structured P1 triangulation of the square (-1,1)².
//!
//! Nodes are numbered lexicographically with x₁ running fastest, so node
//! `(i, j)` of the grid has index `j * (n + 1) + i`. Every grid cell is split
//! along its lower-left to upper-right diagonal into two counter-clockwise
//! triangles.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Uniform triangulation of (-1,1)² with `n` cells per axis.
#[derive(Debug, Clone)]
pub struct TriangularMesh {
    n: usize,
    nodes: Vec<Point>,
    elements: Vec<[usize; 3]>,
    element_area: f64,
    basis_gradients: Vec<[Point; 3]>,
}

impl TriangularMesh {
    /// Builds the uniform mesh with `n` subdivisions per axis.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh needs at least one subdivision per axis".into(),
            ));
        }
        let h = 2.0 / n as f64;
        let stride = n + 1;
        let mut nodes = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
            }
        }
        // Exact grid endpoints avoid 1 - 1e-16 style coordinates on the boundary.
        for j in 0..=n {
            nodes[j * stride + n][0] = 1.0;
            nodes[n * stride + j][1] = 1.0;
        }

        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * stride + i;
                let v10 = v00 + 1;
                let v01 = v00 + stride;
                let v11 = v01 + 1;
                elements.push([v00, v10, v11]);
                elements.push([v00, v11, v01]);
            }
        }

        let basis_gradients = elements
            .iter()
            .map(|tri| p1_gradients(&tri.map(|v| nodes[v])))
            .collect();

        Ok(Self {
            n,
            nodes,
            elements,
            element_area: 0.5 * h * h,
            basis_gradients,
        })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    /// Mesh width `h = 2 / n`.
    pub fn h(&self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> [usize; 3] {
        self.elements[e]
    }

    /// Area of element `e`; all elements of the uniform mesh are congruent.
    pub fn element_area(&self, _e: usize) -> f64 {
        self.element_area
    }

    pub fn element_vertices(&self, e: usize) -> [Point; 3] {
        self.elements[e].map(|v| self.nodes[v])
    }

    /// Constant gradients of the three hat functions on element `e`.
    pub fn basis_gradients(&self, e: usize) -> &[Point; 3] {
        &self.basis_gradients[e]
    }

    /// Whether node `i` lies on ∂Ω.
    pub fn is_boundary_node(&self, i: usize) -> bool {
        let stride = self.n + 1;
        let (ix, iy) = (i % stride, i / stride);
        ix == 0 || iy == 0 || ix == self.n || iy == self.n
    }

    /// Finds the element containing `x` and the barycentric coordinates of
    /// `x` with respect to its vertices. Points on shared edges go to the
    /// element with the larger grid index.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        if !(-1.0..=1.0).contains(&x[0]) || !(-1.0..=1.0).contains(&x[1]) {
            return None;
        }
        let h = self.h();
        let i = (((x[0] + 1.0) / h).floor() as usize).min(self.n - 1);
        let j = (((x[1] + 1.0) / h).floor() as usize).min(self.n - 1);
        let sx = (x[0] - self.nodes[j * (self.n + 1) + i][0]) / h;
        let sy = (x[1] - self.nodes[j * (self.n + 1) + i][1]) / h;
        let cell = j * self.n + i;
        if sx >= sy {
            // lower triangle (v00, v10, v11)
            Some((2 * cell, [1.0 - sx, sx - sy, sy]))
        } else {
            // upper triangle (v00, v11, v01)
            Some((2 * cell + 1, [1.0 - sy, sx, sy - sx]))
        }
    }

    /// Constant gradient of the P1 interpolant of `w` on element `e`.
    pub fn element_gradient(&self, w: &NodalField, e: usize) -> Point {
        let grads = &self.basis_gradients[e];
        let tri = self.elements[e];
        let mut g = [0.0; 2];
        for (k, &v) in tri.iter().enumerate() {
            g[0] += w[v] * grads[k][0];
            g[1] += w[v] * grads[k][1];
        }
        g
    }

    /// Nodal interpolant of `f`. Fails if `f` is not finite at some node.
    pub fn interpolate<F>(&self, f: F) -> Result<NodalField>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut values = Vec::with_capacity(self.nodes.len());
        for (i, x) in self.nodes.iter().enumerate() {
            let v = f(x[0], x[1]);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "interpolated function is {v} at node {i} ({}, {})",
                    x[0], x[1]
                )));
            }
            values.push(v);
        }
        Ok(NodalField::new(values))
    }

    /// Evaluates the P1 function `w` at `x`.
    pub fn evaluate(&self, w: &NodalField, x: Point) -> Option<f64> {
        self.locate(x).map(|(e, bary)| {
            let tri = self.elements[e];
            bary[0] * w[tri[0]] + bary[1] * w[tri[1]] + bary[2] * w[tri[2]]
        })
    }

    /// Checks that `field` lives on this mesh.
    pub fn check_field(&self, field: &NodalField) -> Result<()> {
        if field.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_nodes(),
                found: field.len(),
            });
        }
        Ok(())
    }
}

/// Gradients of the barycentric coordinates of a triangle.
pub fn p1_gradients(v: &[Point; 3]) -> [Point; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = v[(k + 1) % 3];
        let b = v[(k + 2) % 3];
        g[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    g
}

/// Signed area of a triangle (positive for counter-clockwise orientation).
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Coefficients of a P1 finite element function, one value per mesh node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self {
            values: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for NodalField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

impl From<Vec<f64>> for NodalField {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}
