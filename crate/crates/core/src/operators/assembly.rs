//! Dense Galerkin assembly of the EFIE operator `T` and the rotated-kernel
//! operators `K` (β-tested) and `K_n×β` (n̂×β-tested).
//!
//! Interactions are computed triangle pair by triangle pair. Far pairs use
//! product Gauss rules. Near pairs take the static `1/(4πR)` part of the
//! kernel (and optionally the `−k₀²R/(8π)` term) in closed form over the
//! source triangle and integrate the smooth remainder numerically; the outer
//! (test) triangle is subdivided towards the source triangle so that the
//! weakly singular outer integrand is resolved.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::greens::{greens_at, greens_derivative, greens_derivative_remainder, greens_remainder};
use super::potentials::{point_boundary_distance, point_triangle_distance, static_integrals};
use super::QuadratureConfig;
use crate::basis::{quadrature_points, RwgBasis};
use crate::error::{Error, Result};
use crate::linalg::Symmetry;
use crate::quadrature::{gauss_legendre, TriangleRule};
use crate::{CVec3, Complex, DenseComplexMatrix, Vec3};

const FOUR_PI: f64 = 4.0 * PI;

/// Test triangles per parallel work unit.
const CHUNK: usize = 16;

/// Which operator matrices to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub t: bool,
    pub k: bool,
    pub k_nxb: bool,
}

impl Request {
    pub const ALL: Request = Request {
        t: true,
        k: true,
        k_nxb: true,
    };
}

/// Assembled operator matrices; entries not requested are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub t: Option<DenseComplexMatrix>,
    pub k: Option<DenseComplexMatrix>,
    pub k_nxb: Option<DenseComplexMatrix>,
}

/// Inner (source-triangle) integrals at one observation point.
#[derive(Debug, Clone, Copy)]
struct Inner {
    /// `∫ G ds'`
    phi: Complex,
    /// `∫ G (r' − r) ds'`
    vec: CVec3,
    /// `∫ ∇_r G ds'`
    grad: CVec3,
}

struct Geometry {
    corners: Vec<[Vec3; 3]>,
    centroids: Vec<Vec3>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    far_outer: Vec<Vec<(Vec3, f64)>>,
    far_inner: Vec<Vec<(Vec3, f64)>>,
    near_inner: Vec<Vec<(Vec3, f64)>>,
}

pub fn assemble(basis: &RwgBasis, k0: f64, quad: &QuadratureConfig, request: Request) -> Result<OperatorSet> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive (got {k0})")));
    }
    quad.validate()?;
    let mesh = basis.mesh();
    let nt = mesh.num_triangles();
    let n = basis.len();

    let far_outer_rule = quad.far_outer.rule();
    let far_inner_rule = quad.far_inner.rule();
    let near_inner_rule = quad.near_inner.rule();
    let near_outer_rule = quad.near_outer.rule();
    let corners: Vec<[Vec3; 3]> = (0..nt).map(|t| mesh.corners(t)).collect();
    let pts = |rule: &TriangleRule| -> Vec<Vec<(Vec3, f64)>> {
        (0..nt).map(|t| quadrature_points(&corners[t], mesh.area(t), rule)).collect()
    };
    let geom = Geometry {
        centroids: (0..nt).map(|t| mesh.centroid(t)).collect(),
        normals: (0..nt).map(|t| mesh.normal(t)).collect(),
        areas: mesh.areas().to_vec(),
        far_outer: pts(&far_outer_rule),
        far_inner: pts(&far_inner_rule),
        near_inner: (0..nt)
            .map(|t| electrically_small_points(&corners[t], mesh.area(t), &near_inner_rule, k0))
            .collect(),
        corners,
    };
    let near_distance = quad.near_threshold * mesh.mean_edge_length();

    let mut t_mat = request.t.then(|| DenseComplexMatrix::zeros(n, n));
    let mut k_mat = request.k.then(|| DenseComplexMatrix::zeros(n, n));
    let mut kn_mat = request.k_nxb.then(|| DenseComplexMatrix::zeros(n, n));

    let triangles: Vec<usize> = (0..nt).collect();
    for chunk in triangles.chunks(CHUNK * rayon::current_num_threads().max(1)) {
        let blocks: Vec<[Vec<Complex>; 3]> = chunk
            .par_iter()
            .map(|&t| {
                test_triangle_blocks(
                    basis,
                    &geom,
                    t,
                    k0,
                    quad,
                    &near_outer_rule,
                    near_distance,
                    request,
                )
            })
            .collect();
        for (&t, block) in chunk.iter().zip(&blocks) {
            let rows = basis.local(t).index;
            for (mat, data) in [&mut t_mat, &mut k_mat, &mut kn_mat].into_iter().zip(block) {
                let Some(mat) = mat.as_mut() else { continue };
                for s in 0..nt {
                    let cols = basis.local(s).index;
                    for i in 0..3 {
                        for j in 0..3 {
                            mat[(rows[i], cols[j])] += data[(s * 3 + i) * 3 + j];
                        }
                    }
                }
            }
        }
    }

    Ok(OperatorSet {
        t: t_mat.map(|m| m.with_symmetry(Symmetry::Symmetric)),
        k: k_mat.map(|m| m.with_symmetry(Symmetry::Symmetric)),
        k_nxb: kn_mat.map(|m| m.with_symmetry(Symmetry::General)),
    })
}

#[allow(clippy::too_many_arguments)]
fn test_triangle_blocks(
    basis: &RwgBasis,
    geom: &Geometry,
    t: usize,
    k0: f64,
    quad: &QuadratureConfig,
    near_outer_rule: &TriangleRule,
    near_distance: f64,
    request: Request,
) -> [Vec<Complex>; 3] {
    let nt = geom.corners.len();
    let zero = Complex::new(0.0, 0.0);
    let mut out = [
        if request.t { vec![zero; nt * 9] } else { Vec::new() },
        if request.k { vec![zero; nt * 9] } else { Vec::new() },
        if request.k_nxb { vec![zero; nt * 9] } else { Vec::new() },
    ];
    let tri_t = basis.mesh().triangles()[t];

    let c = &geom.corners[t];
    let diameter_t = (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm());
    let graded_points = quad.near_outer.points() + GRADED_RULE_EXTRA + (2.0 * k0 * diameter_t).ceil() as usize;

    for s in 0..nt {
        let tri_s = basis.mesh().triangles()[s];
        let touching = tri_t.iter().any(|v| tri_s.contains(v));
        let near = s == t || touching || (geom.centroids[t] - geom.centroids[s]).norm() < near_distance;

        let shared: Vec<usize> = (0..3).filter(|&i| tri_s.contains(&tri_t[i])).collect();
        let outer: std::borrow::Cow<'_, [(Vec3, f64)]> = if near && s != t && shared.len() == 2 {
            let c = geom.corners[t];
            let free = (0..3).find(|i| !shared.contains(i)).expect("third vertex");
            std::borrow::Cow::Owned(edge_graded_points(
                &c[shared[0]],
                &c[shared[1]],
                &c[free],
                geom.areas[t],
                graded_points,
            ))
        } else if s == t {
            let cen = geom.centroids[t];
            let third = geom.areas[t] / 3.0;
            std::borrow::Cow::Owned(
                (0..3)
                    .flat_map(|i| edge_graded_points(&c[i], &c[(i + 1) % 3], &cen, third, graded_points))
                    .collect(),
            )
        } else if near && shared.len() == 1 {
            let c = geom.corners[t];
            let v = shared[0];
            std::borrow::Cow::Owned(vertex_graded_points(
                &c[v],
                &c[(v + 1) % 3],
                &c[(v + 2) % 3],
                geom.areas[t],
                graded_points,
            ))
        } else if near {
            std::borrow::Cow::Owned(refined_outer_points(geom, t, s, near_outer_rule, quad.near_refinement, k0))
        } else {
            std::borrow::Cow::Borrowed(&geom.far_outer[t])
        };

        let mut block_t = [[zero; 3]; 3];
        let mut block_k = [[zero; 3]; 3];
        let mut block_kn = [[zero; 3]; 3];
        let lt = basis.local(t);
        let ls = basis.local(s);
        let normal_t = geom.normals[t];
        let inv_k2 = 1.0 / (k0 * k0);
        let rotated = (request.k || request.k_nxb) && s != t;

        for &(r, w) in outer.iter() {
            let inner = if near {
                near_inner(geom, s, &r, k0, quad.extraction_order)
            } else {
                far_inner(&geom.far_inner[s], &r, k0)
            };
            let mut a = [CVec3::zeros(); 3];
            let mut b = [CVec3::zeros(); 3];
            for j in 0..3 {
                let c = ls.sign[j] * ls.coefficient[j];
                let offset = r - ls.free_vertex[j];
                if request.t {
                    a[j] = (inner.vec + offset.map(|x| Complex::new(x, 0.0)) * inner.phi) * Complex::new(c, 0.0);
                }
                if rotated {
                    b[j] = cross_cr(&inner.grad, &offset) * Complex::new(c, 0.0);
                }
            }
            for i in 0..3 {
                let beta = lt.value(i, &r);
                let div_i = lt.divergence(i);
                for j in 0..3 {
                    if request.t {
                        block_t[i][j] += (dot_rc(&beta, &a[j]) - inner.phi * (div_i * ls.divergence(j) * inv_k2)) * w;
                    }
                    if rotated {
                        if request.k {
                            block_k[i][j] += dot_rc(&beta, &b[j]) * w;
                        }
                        if request.k_nxb {
                            block_kn[i][j] += dot_rc(&normal_t.cross(&beta), &b[j]) * w;
                        }
                    }
                }
            }
        }

        for (slot, block, wanted) in [(0, &block_t, request.t), (1, &block_k, request.k), (2, &block_kn, request.k_nxb)] {
            if !wanted {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    out[slot][(s * 3 + i) * 3 + j] = block[i][j];
                }
            }
        }
    }
    out
}

#[inline]
fn dot_rc(a: &Vec3, b: &CVec3) -> Complex {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

#[inline]
fn cross_cr(a: &CVec3, b: &Vec3) -> CVec3 {
    CVec3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

#[inline]
fn real_vec(v: &Vec3) -> CVec3 {
    v.map(|x| Complex::new(x, 0.0))
}

fn far_inner(points: &[(Vec3, f64)], r: &Vec3, k0: f64) -> Inner {
    let mut phi = Complex::new(0.0, 0.0);
    let mut vec = CVec3::zeros();
    let mut grad = CVec3::zeros();
    for (rp, w) in points {
        let diff = rp - r;
        let big_r = diff.norm();
        let g = greens_at(big_r, k0) * *w;
        let dg = greens_derivative(big_r, k0) * (*w / big_r);
        phi += g;
        vec += real_vec(&diff) * g;
        grad -= real_vec(&diff) * dg;
    }
    Inner { phi, vec, grad }
}

fn near_inner(geom: &Geometry, s: usize, r: &Vec3, k0: f64, order: u8) -> Inner {
    let st = static_integrals(r, &geom.corners[s], &geom.normals[s]);
    let mut phi = Complex::new(st.inv_r / FOUR_PI, 0.0);
    let mut vec = real_vec(&(st.inv_r_vec / FOUR_PI));
    let mut grad = real_vec(&(st.inv_r_grad / FOUR_PI));
    if order >= 2 {
        let c = -k0 * k0 / (2.0 * FOUR_PI);
        phi += c * st.r;
        vec += real_vec(&(st.r_vec * c));
        grad += real_vec(&(st.r_grad * c));
    }
    for (rp, w) in &geom.near_inner[s] {
        let diff = rp - r;
        let big_r = diff.norm();
        let g = greens_remainder(big_r, k0, order) * *w;
        phi += g;
        vec += real_vec(&diff) * g;
        if big_r > 0.0 {
            let dg = greens_derivative_remainder(big_r, k0, order) * (*w / big_r);
            grad -= real_vec(&diff) * dg;
        }
    }
    Inner { phi, vec, grad }
}

/// Outer quadrature points on test triangle `t`, subdividing towards the
/// singular set of the source potential: the source triangle itself, or its
/// boundary when source and test coincide.
fn refined_outer_points(
    geom: &Geometry,
    t: usize,
    s: usize,
    rule: &TriangleRule,
    max_depth: usize,
    k0: f64,
) -> Vec<(Vec3, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(geom.corners[t], geom.areas[t], 0usize)];
    while let Some((c, area, depth)) = stack.pop() {
        let centroid = (c[0] + c[1] + c[2]) / 3.0;
        let diameter = (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm());
        let distance = if s == t {
            point_boundary_distance(&centroid, &geom.corners[s])
        } else {
            point_triangle_distance(&centroid, &geom.corners[s], &geom.normals[s])
        };
        let singular = depth < max_depth && distance < REFINE_RATIO * diameter;
        if singular || k0 * diameter > MAX_ELECTRICAL_SIZE {
            let (ab, bc, ca) = ((c[0] + c[1]) * 0.5, (c[1] + c[2]) * 0.5, (c[2] + c[0]) * 0.5);
            let quarter = 0.25 * area;
            stack.push(([c[0], ab, ca], quarter, depth + 1));
            stack.push(([ab, c[1], bc], quarter, depth + 1));
            stack.push(([ca, bc, c[2]], quarter, depth + 1));
            stack.push(([ab, bc, ca], quarter, depth + 1));
        } else {
            out.extend(quadrature_points(&c, area, rule));
        }
    }
    out
}

/// Product rule on the triangle `(v, a, b)` graded towards the vertex `v`,
/// the only point a vertex-adjacent source triangle shares with it.
///
/// `r = v + ρ [(1 − ξ)(a − v) + ξ (b − v)]` with `ρ = w³`.
fn vertex_graded_points(v: &Vec3, a: &Vec3, b: &Vec3, area: f64, n: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (&xs, &ws) in x.iter().zip(&w) {
        let xi = 0.5 * (xs + 1.0);
        let dir = (a - v) * (1.0 - xi) + (b - v) * xi;
        for (&xw, &ww) in x.iter().zip(&w) {
            let u = 0.5 * (xw + 1.0);
            let rho = u * u * u;
            let drho = 3.0 * u * u;
            // d(area)/dξ dρ = 2A ρ; the Gauss weights carry a factor ¼.
            out.push((v + dir * rho, 0.25 * ws * ww * drho * 2.0 * area * rho));
        }
    }
    out
}

/// Rule points on `corners`, uniformly subdivided until every piece
/// satisfies the `k₀ · diameter` limit.
fn electrically_small_points(corners: &[Vec3; 3], area: f64, rule: &TriangleRule, k0: f64) -> Vec<(Vec3, f64)> {
    let c = corners;
    let diameter = (c[0] - c[1]).norm().max((c[1] - c[2]).norm()).max((c[2] - c[0]).norm());
    if k0 * diameter <= MAX_ELECTRICAL_SIZE {
        return quadrature_points(c, area, rule);
    }
    let (ab, bc, ca) = ((c[0] + c[1]) * 0.5, (c[1] + c[2]) * 0.5, (c[2] + c[0]) * 0.5);
    let quarter = 0.25 * area;
    [[c[0], ab, ca], [ab, c[1], bc], [ca, bc, c[2]], [ab, bc, ca]]
        .iter()
        .flat_map(|piece| electrically_small_points(piece, quarter, rule, k0))
        .collect()
}

/// A sub-triangle is split while it lies closer to the singular set than
/// this multiple of its diameter.
const REFINE_RATIO: f64 = 2.0;

/// Near-pair rules are applied on pieces no larger than this `k₀ · diameter`.
const MAX_ELECTRICAL_SIZE: f64 = 1.0;

/// Extra Gauss points per direction of the graded rules over the point count
/// of the near rule they replace.
const GRADED_RULE_EXTRA: usize = 3;

/// Product rule on the triangle `(a, b, c)` graded towards the edge `a–b`,
/// where the outer integrand of an edge-adjacent pair has a logarithmic
/// singularity, and towards both ends of that edge.
///
/// `r = (1 − η)[(1 − ξ) a + ξ b] + η c` with `η = w³` and `ξ` a quintic
/// smoothstep of `u`; Gauss–Legendre in `u` and `w`.
fn edge_graded_points(a: &Vec3, b: &Vec3, c: &Vec3, area: f64, n: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (&xu, &wu) in x.iter().zip(&w) {
        let u = 0.5 * (xu + 1.0);
        let xi = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
        let dxi = 30.0 * u * u * (1.0 - u) * (1.0 - u);
        for (&xw, &ww) in x.iter().zip(&w) {
            let v = 0.5 * (xw + 1.0);
            let eta = v * v * v;
            let deta = 3.0 * v * v;
            let r = (a * (1.0 - xi) + b * xi) * (1.0 - eta) + c * eta;
            // d(area)/dξ dη = 2A (1 − η); the Gauss weights carry a factor ¼.
            let weight = 0.25 * wu * ww * dxi * deta * 2.0 * area * (1.0 - eta);
            out.push((r, weight));
        }
    }
    out
}
