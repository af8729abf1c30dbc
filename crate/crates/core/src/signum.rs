//! Signum of piecewise linear functions and its derivative.
//!
//! For a P1 function `w_h` the zero level set is a union of straight
//! segments, one per cut triangle. Splitting each cut triangle along its
//! segment into a sub-triangle and a quadrilateral makes `∫ sign(w_h) φ_i`
//! and `∫ |w_h|` exact, and the derivative of `w ↦ sign(w)` is the surface
//! measure
//!
//! ```text
//! ⟨sign'(w) z, ψ⟩ = 2 ∫_{w=0} z ψ / |∇w| dH¹,
//! ```
//!
//! which on P1 basis pairs gives the matrix `D(w)`. With exact integration
//! `D(w)` is the Jacobian of the nodal map `w ↦ (∫ sign(w_h) φ_i)_i`
//! wherever the cut topology does not change.
//!
//! Nodal values with `|w_i| ≤ 1e-14 ‖w‖∞` are moved to `+1e-14 ‖w‖∞`
//! before classification so that every element has a well-defined split.

use crate::exec::{map_indices, Parallelism};
use crate::mesh::{NodalField, Point, TriangularMesh};
use crate::sparse::{CsrMatrix, SparsityPattern};

/// Relative threshold below which nodal values are treated as zero.
pub const TIE_BREAK: f64 = 1e-14;
/// Elements with mixed signs and `|∇w|` below this value are degenerate.
pub const DEGENERATE_GRADIENT: f64 = 1e-12;

/// Nodal values after the positive tie-break.
pub fn tie_broken(w: &[f64]) -> Vec<f64> {
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = TIE_BREAK * scale;
    w.iter()
        .map(|&v| if v.abs() <= eps { eps } else { v })
        .collect()
}

fn sign_of(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// How the zero level set of `w_h` intersects one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementSplit {
    /// `w_h` has one sign on the whole element.
    Uncut { sign: f64 },
    /// Vertex `lone` (local index) has sign `lone_sign`, the other two the
    /// opposite sign. The level set runs from `p` on edge (lone, lone+1) to
    /// `q` on edge (lone, lone+2); `t_p`, `t_q` are the edge parameters
    /// measured from the lone vertex.
    Cut {
        lone: usize,
        lone_sign: f64,
        t_p: f64,
        t_q: f64,
        p: Point,
        q: Point,
    },
}

impl ElementSplit {
    /// Barycentric coordinates (in element-local vertex order) of the two
    /// segment endpoints.
    pub fn endpoint_barycentrics(&self) -> Option<[[f64; 3]; 2]> {
        match *self {
            ElementSplit::Uncut { .. } => None,
            ElementSplit::Cut { lone, t_p, t_q, .. } => {
                let (j, k) = ((lone + 1) % 3, (lone + 2) % 3);
                let mut bp = [0.0; 3];
                let mut bq = [0.0; 3];
                bp[lone] = 1.0 - t_p;
                bp[j] = t_p;
                bq[lone] = 1.0 - t_q;
                bq[k] = t_q;
                Some([bp, bq])
            }
        }
    }
}

/// Splits element `e` for tie-broken nodal values `wt`.
pub fn split_element(mesh: &TriangularMesh, wt: &[f64], e: usize) -> ElementSplit {
    let tri = mesh.element(e);
    let vals = tri.map(|v| wt[v]);
    let signs = vals.map(sign_of);
    if signs[0] == signs[1] && signs[1] == signs[2] {
        return ElementSplit::Uncut { sign: signs[0] };
    }
    let lone = if signs[0] == signs[1] {
        2
    } else if signs[0] == signs[2] {
        1
    } else {
        0
    };
    let (j, k) = ((lone + 1) % 3, (lone + 2) % 3);
    let x = mesh.element_vertices(e);
    let t_p = vals[lone] / (vals[lone] - vals[j]);
    let t_q = vals[lone] / (vals[lone] - vals[k]);
    let lerp = |a: Point, b: Point, t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    ElementSplit::Cut {
        lone,
        lone_sign: signs[lone],
        t_p,
        t_q,
        p: lerp(x[lone], x[j], t_p),
        q: lerp(x[lone], x[k], t_q),
    }
}

/// One segment of the discrete zero level set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetSegment {
    pub element: usize,
    pub endpoints: [Point; 2],
    /// Barycentric coordinates of the endpoints in the element's vertex order.
    pub barycentrics: [[f64; 3]; 2],
    pub length: f64,
    pub gradient_norm: f64,
}

/// The zero level set `{w_h = 0}` as a list of per-element segments.
#[derive(Debug, Clone, Default)]
pub struct ZeroLevelSet {
    pub segments: Vec<LevelSetSegment>,
    /// Cut elements skipped because `|∇w_h|` is (numerically) zero.
    pub degenerate: Vec<usize>,
    /// Cut elements whose segment touches ∂Ω.
    pub boundary_cuts: usize,
}

impl ZeroLevelSet {
    /// H¹ measure of the level set.
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn on_boundary(p: Point) -> bool {
    p[0].abs() >= 1.0 - 1e-14 || p[1].abs() >= 1.0 - 1e-14
}

fn segment_of(mesh: &TriangularMesh, wt: &[f64], e: usize) -> Option<Result<LevelSetSegment, usize>> {
    let split = split_element(mesh, wt, e);
    let ElementSplit::Cut { p, q, .. } = split else {
        return None;
    };
    let grads = mesh.basis_gradients(e);
    let tri = mesh.element(e);
    let mut grad = [0.0; 2];
    for k in 0..3 {
        grad[0] += wt[tri[k]] * grads[k][0];
        grad[1] += wt[tri[k]] * grads[k][1];
    }
    let gradient_norm = grad[0].hypot(grad[1]);
    if gradient_norm < DEGENERATE_GRADIENT {
        return Some(Err(e));
    }
    Some(Ok(LevelSetSegment {
        element: e,
        endpoints: [p, q],
        barycentrics: split.endpoint_barycentrics().unwrap(),
        length: (q[0] - p[0]).hypot(q[1] - p[1]),
        gradient_norm,
    }))
}

/// Extracts the zero level set of the P1 function `w`.
pub fn extract_zero_levelset(mesh: &TriangularMesh, w: &NodalField) -> ZeroLevelSet {
    extract_zero_levelset_with(mesh, w, Parallelism::default())
}

pub fn extract_zero_levelset_with(
    mesh: &TriangularMesh,
    w: &NodalField,
    parallelism: Parallelism,
) -> ZeroLevelSet {
    let wt = tie_broken(w.values());
    let found = map_indices(mesh.num_elements(), parallelism, |e| segment_of(mesh, &wt, e));
    let mut level_set = ZeroLevelSet::default();
    for item in found.into_iter().flatten() {
        match item {
            Ok(seg) => {
                if on_boundary(seg.endpoints[0]) || on_boundary(seg.endpoints[1]) {
                    level_set.boundary_cuts += 1;
                }
                level_set.segments.push(seg);
            }
            Err(e) => level_set.degenerate.push(e),
        }
    }
    level_set
}

fn sign_load_local(mesh: &TriangularMesh, wt: &[f64], e: usize) -> [f64; 3] {
    let area = mesh.element_area(e);
    match split_element(mesh, wt, e) {
        ElementSplit::Uncut { sign } => [sign * area / 3.0; 3],
        ElementSplit::Cut {
            lone,
            lone_sign,
            t_p,
            t_q,
            ..
        } => {
            let (j, k) = ((lone + 1) % 3, (lone + 2) % 3);
            let sub = t_p * t_q * area / 3.0;
            let mut b = [-lone_sign * area / 3.0; 3];
            // ∫_{T'} φ_m = |T'|/3 (φ_m(x_lone) + φ_m(p) + φ_m(q))
            b[lone] += 2.0 * lone_sign * sub * (3.0 - t_p - t_q);
            b[j] += 2.0 * lone_sign * sub * t_p;
            b[k] += 2.0 * lone_sign * sub * t_q;
            b
        }
    }
}

/// Load vector `b_i = ∫ sign(w_h) φ_i`, integrated exactly.
pub fn integrate_sign(mesh: &TriangularMesh, w: &NodalField) -> Vec<f64> {
    integrate_sign_with(mesh, w, Parallelism::default())
}

pub fn integrate_sign_with(mesh: &TriangularMesh, w: &NodalField, parallelism: Parallelism) -> Vec<f64> {
    let wt = tie_broken(w.values());
    let local = map_indices(mesh.num_elements(), parallelism, |e| sign_load_local(mesh, &wt, e));
    let mut b = vec![0.0; mesh.num_nodes()];
    for (e, l) in local.into_iter().enumerate() {
        for (k, &v) in mesh.element(e).iter().enumerate() {
            b[v] += l[k];
        }
    }
    b
}

fn l1_local(mesh: &TriangularMesh, wt: &[f64], e: usize) -> f64 {
    let area = mesh.element_area(e);
    let vals = mesh.element(e).map(|v| wt[v]);
    match split_element(mesh, wt, e) {
        ElementSplit::Uncut { sign } => sign * area * (vals[0] + vals[1] + vals[2]) / 3.0,
        ElementSplit::Cut {
            lone,
            lone_sign,
            t_p,
            t_q,
            ..
        } => {
            -lone_sign * area * (vals[0] + vals[1] + vals[2]) / 3.0
                + 2.0 * t_p * t_q * area * vals[lone].abs() / 3.0
        }
    }
}

/// `∫ |w_h|`, integrated exactly.
pub fn l1_norm(mesh: &TriangularMesh, w: &NodalField) -> f64 {
    l1_norm_with(mesh, w, Parallelism::default())
}

pub fn l1_norm_with(mesh: &TriangularMesh, w: &NodalField, parallelism: Parallelism) -> f64 {
    let wt = tie_broken(w.values());
    map_indices(mesh.num_elements(), parallelism, |e| l1_local(mesh, &wt, e))
        .into_iter()
        .sum()
}

/// Exact areas of `{w_h > 0}` and `{w_h < 0}`.
pub fn sign_areas(mesh: &TriangularMesh, w: &NodalField) -> (f64, f64) {
    let wt = tie_broken(w.values());
    let mut pos = 0.0;
    let mut neg = 0.0;
    for e in 0..mesh.num_elements() {
        let area = mesh.element_area(e);
        match split_element(mesh, &wt, e) {
            ElementSplit::Uncut { sign } if sign > 0.0 => pos += area,
            ElementSplit::Uncut { .. } => neg += area,
            ElementSplit::Cut {
                lone_sign, t_p, t_q, ..
            } => {
                let sub = t_p * t_q * area;
                if lone_sign > 0.0 {
                    pos += sub;
                    neg += area - sub;
                } else {
                    neg += sub;
                    pos += area - sub;
                }
            }
        }
    }
    (pos, neg)
}

/// `D(w)` with `D_ij = 2 ∫_{w=0} φ_i φ_j / |∇w| dH¹`.
#[derive(Debug, Clone)]
pub struct SignDerivativeMatrix {
    pub matrix: CsrMatrix,
    pub level_set: ZeroLevelSet,
}

impl SignDerivativeMatrix {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// `xᵀ D y`
    pub fn pair(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matrix.bilinear(x, y)
    }

    /// Seminorm `√(vᵀ D v)`.
    pub fn seminorm(&self, v: &[f64]) -> f64 {
        self.pair(v, v).max(0.0).sqrt()
    }

    pub fn has_degenerate_elements(&self) -> bool {
        !self.level_set.degenerate.is_empty()
    }
}

const GAUSS_2: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9, // ½ - 1/(2√3)
    0.5 + 0.288_675_134_594_812_9,
];

/// Element matrix of one segment: `2/|∇w| ∫_seg λ_a λ_b` by 2-point Gauss.
fn segment_matrix(seg: &LevelSetSegment) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    let scale = 2.0 / seg.gradient_norm * 0.5 * seg.length;
    let [bp, bq] = seg.barycentrics;
    for s in GAUSS_2 {
        let lam: [f64; 3] = std::array::from_fn(|k| (1.0 - s) * bp[k] + s * bq[k]);
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += scale * (lam[a] * lam[b]);
            }
        }
    }
    m
}

/// Assembles `D(w)` on the mesh pattern.
pub fn assemble_sign_derivative(
    mesh: &TriangularMesh,
    pattern: &SparsityPattern,
    w: &NodalField,
) -> SignDerivativeMatrix {
    assemble_sign_derivative_with(mesh, pattern, w, Parallelism::default())
}

pub fn assemble_sign_derivative_with(
    mesh: &TriangularMesh,
    pattern: &SparsityPattern,
    w: &NodalField,
    parallelism: Parallelism,
) -> SignDerivativeMatrix {
    let level_set = extract_zero_levelset_with(mesh, w, parallelism);
    let matrix = pattern.assemble(
        level_set
            .segments
            .iter()
            .map(|seg| (seg.element, segment_matrix(seg))),
    );
    SignDerivativeMatrix { matrix, level_set }
}

/// Total area of the elements crossed by the level set.
pub fn cut_area(mesh: &TriangularMesh, level_set: &ZeroLevelSet) -> f64 {
    level_set
        .segments
        .iter()
        .map(|s| mesh.element_area(s.element))
        .sum::<f64>()
        + level_set
            .degenerate
            .iter()
            .map(|&e| mesh.element_area(e))
            .sum::<f64>()
}
