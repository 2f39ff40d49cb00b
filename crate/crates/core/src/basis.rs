//! RWG basis functions on the interior edges of a closed mesh and the two
//! Gram matrices of the weak-form combined-source condition.
//!
//! On its plus triangle `β_n(r) = l_n / (2A⁺) (r − p⁺)`, on its minus triangle
//! `β_n(r) = −l_n / (2A⁻) (r − p⁻)`, where `p±` are the vertices opposite the
//! edge. The plus triangle is the one that traverses the edge from its lower
//! to its higher vertex index.

use crate::error::Result;
use crate::linalg::{SparseMatrix, Symmetry};
use crate::mesh::Mesh;
use crate::quadrature::{RuleOrder, TriangleRule};
use crate::{SparseRealMatrix, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwgFunction {
    pub edge: usize,
    pub length: f64,
    pub plus: usize,
    pub minus: usize,
    pub free_plus: usize,
    pub free_minus: usize,
    pub area_plus: f64,
    pub area_minus: f64,
}

/// The three RWG half-functions living on one triangle. Slot `i` belongs to
/// the edge opposite local vertex `i`, whose free vertex is that vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFunctions {
    pub index: [usize; 3],
    /// `+1` on the plus triangle, `−1` on the minus triangle.
    pub sign: [f64; 3],
    /// `l / (2A)`
    pub coefficient: [f64; 3],
    pub free_vertex: [Vec3; 3],
}

impl LocalFunctions {
    /// Value of local function `i` at `r`.
    #[inline]
    pub fn value(&self, i: usize, r: &Vec3) -> Vec3 {
        (r - self.free_vertex[i]) * (self.sign[i] * self.coefficient[i])
    }

    /// Surface divergence of local function `i` (constant on the triangle).
    #[inline]
    pub fn divergence(&self, i: usize) -> f64 {
        2.0 * self.sign[i] * self.coefficient[i]
    }
}

#[derive(Debug, Clone)]
pub struct RwgBasis {
    mesh: Mesh,
    functions: Vec<RwgFunction>,
    local: Vec<LocalFunctions>,
}

impl RwgBasis {
    /// One function per edge, ordered like the mesh edges (lexicographic in
    /// the sorted vertex pair).
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let mut functions = Vec::with_capacity(mesh.num_edges());
        for (e, edge) in mesh.edges().iter().enumerate() {
            let [a, b] = edge.vertices;
            let [t0, t1] = edge.triangles;
            let forward = |t: usize| {
                let tri = mesh.triangles()[t];
                (0..3).any(|i| tri[i] == a && tri[(i + 1) % 3] == b)
            };
            let (plus, minus) = if forward(t0) { (t0, t1) } else { (t1, t0) };
            let free = |t: usize| {
                *mesh.triangles()[t]
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .expect("triangle has a vertex off the edge")
            };
            functions.push(RwgFunction {
                edge: e,
                length: mesh.edge_length(e),
                plus,
                minus,
                free_plus: free(plus),
                free_minus: free(minus),
                area_plus: mesh.area(plus),
                area_minus: mesh.area(minus),
            });
        }

        let local = (0..mesh.num_triangles())
            .map(|t| {
                let tri = mesh.triangles()[t];
                let edges = mesh.triangle_edges(t);
                let mut lf = LocalFunctions {
                    index: edges,
                    sign: [0.0; 3],
                    coefficient: [0.0; 3],
                    free_vertex: [Vec3::zeros(); 3],
                };
                for i in 0..3 {
                    let f = &functions[edges[i]];
                    lf.sign[i] = if f.plus == t { 1.0 } else { -1.0 };
                    lf.coefficient[i] = f.length / (2.0 * mesh.area(t));
                    lf.free_vertex[i] = mesh.vertices()[tri[i]];
                }
                lf
            })
            .collect();

        Ok(RwgBasis {
            mesh: mesh.clone(),
            functions,
            local,
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn functions(&self) -> &[RwgFunction] {
        &self.functions
    }

    pub fn function(&self, n: usize) -> &RwgFunction {
        &self.functions[n]
    }

    pub fn local(&self, t: usize) -> &LocalFunctions {
        &self.local[t]
    }

    /// `β_n(point)` for `point` on triangle `tri`; zero if `tri` is outside the
    /// support of `β_n`.
    pub fn eval(&self, n: usize, tri: usize, point: &Vec3) -> Vec3 {
        let lf = &self.local[tri];
        match lf.index.iter().position(|&m| m == n) {
            Some(i) => lf.value(i, point),
            None => Vec3::zeros(),
        }
    }

    /// Surface divergence of `β_n` on triangle `tri`.
    pub fn divergence(&self, n: usize, tri: usize) -> f64 {
        let lf = &self.local[tri];
        match lf.index.iter().position(|&m| m == n) {
            Some(i) => lf.divergence(i),
            None => 0.0,
        }
    }

    /// Quadrature points (physical coordinates) and weights (including area)
    /// of `rule` on triangle `t`.
    pub fn quadrature_points(&self, t: usize, rule: &TriangleRule) -> Vec<(Vec3, f64)> {
        quadrature_points(&self.mesh.corners(t), self.mesh.area(t), rule)
    }

    /// Gram matrix `A_mn = ∫ β_m · (n̂ × β_n) ds`: skew-symmetric, four
    /// structural nonzeros per row.
    pub fn gram_a(&self) -> SparseRealMatrix {
        let rule = RuleOrder::P3.rule();
        let mut triplets = Vec::with_capacity(4 * self.len());
        for t in 0..self.mesh.num_triangles() {
            let lf = &self.local[t];
            let normal = self.mesh.normal(t);
            let points = self.quadrature_points(t, &rule);
            for i in 0..3 {
                for j in 0..3 {
                    // Upper triangle by global index; the mirror entry is its exact negative.
                    if lf.index[i] >= lf.index[j] {
                        continue;
                    }
                    let v: f64 = points
                        .iter()
                        .map(|(r, w)| w * lf.value(i, r).dot(&normal.cross(&lf.value(j, r))))
                        .sum();
                    triplets.push((lf.index[i], lf.index[j], v));
                    triplets.push((lf.index[j], lf.index[i], -v));
                }
            }
        }
        SparseMatrix::from_triplets(self.len(), &triplets, Symmetry::Skew).expect("indices in range")
    }

    /// Gram matrix `A′_mn = ∫ β_m · β_n ds`: symmetric positive definite,
    /// five structural nonzeros per row.
    pub fn gram_a_prime(&self) -> SparseRealMatrix {
        self.gram_a_prime_with(&RuleOrder::P3.rule())
    }

    pub(crate) fn gram_a_prime_with(&self, rule: &TriangleRule) -> SparseRealMatrix {
        let mut triplets = Vec::with_capacity(5 * self.len());
        for t in 0..self.mesh.num_triangles() {
            let lf = &self.local[t];
            let points = self.quadrature_points(t, rule);
            for i in 0..3 {
                for j in i..3 {
                    let v: f64 = points.iter().map(|(r, w)| w * lf.value(i, r).dot(&lf.value(j, r))).sum();
                    triplets.push((lf.index[i], lf.index[j], v));
                    if i != j {
                        triplets.push((lf.index[j], lf.index[i], v));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.len(), &triplets, Symmetry::Symmetric).expect("indices in range")
    }
}

pub(crate) fn quadrature_points(corners: &[Vec3; 3], area: f64, rule: &TriangleRule) -> Vec<(Vec3, f64)> {
    rule.iter()
        .map(|(b, w)| (corners[0] * b[0] + corners[1] * b[1] + corners[2] * b[2], w * area))
        .collect()
}
