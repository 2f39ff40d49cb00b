//! Closed, consistently oriented triangular surface meshes.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::Vec3;

/// An edge with its two adjacent triangles. `vertices` is sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Local edge index `i` of a triangle is the edge opposite vertex `i`.
    triangle_edges: Vec<[usize; 3]>,
    areas: Vec<f64>,
    normals: Vec<Vec3>,
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles, enforcing a closed
    /// 2-manifold and repairing orientation so that all normals point out.
    pub fn new(vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        let adjacency = edge_adjacency(&triangles)?;
        orient(&vertices, &mut triangles, &adjacency)?;

        let edges: Vec<Edge> = adjacency
            .iter()
            .map(|(&(a, b), tris)| Edge {
                vertices: [a, b],
                triangles: [tris[0], tris[1]],
            })
            .collect();
        let edge_index: HashMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, e)| ((e.vertices[0], e.vertices[1]), i)).collect();
        let triangle_edges = triangles
            .iter()
            .map(|tri| {
                let mut local = [0; 3];
                for (i, slot) in local.iter_mut().enumerate() {
                    let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                    *slot = edge_index[&(a.min(b), a.max(b))];
                }
                local
            })
            .collect();

        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let cross = (vertices[tri[1]] - vertices[tri[0]]).cross(&(vertices[tri[2]] - vertices[tri[0]]));
            let norm = cross.norm();
            if !(norm > 0.0) {
                return Err(Error::DegenerateTriangle(t));
            }
            areas.push(0.5 * norm);
            normals.push(cross / norm);
        }

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            areas,
            normals,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normal(&self, t: usize) -> Vec3 {
        self.normals[t]
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum::<f64>() / self.edges.len() as f64
    }

    /// Enclosed volume from the divergence theorem; positive for outward normals.
    pub fn signed_volume(&self) -> f64 {
        signed_volume(&self.vertices, &self.triangles)
    }

    /// Copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Mesh> {
        Mesh::new(self.vertices.iter().map(|v| v * factor).collect(), self.triangles.clone())
    }

    pub fn translated(&self, offset: Vec3) -> Result<Mesh> {
        Mesh::new(self.vertices.iter().map(|v| v + offset).collect(), self.triangles.clone())
    }

    /// Reads an ASCII OFF file.
    pub fn load_off(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Mesh::parse_off(&text)
    }

    pub fn parse_off(text: &str) -> Result<Mesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line, header) = lines.next().ok_or(Error::OffParse {
            line: 0,
            message: "empty file".into(),
        })?;
        // The counts may follow the keyword on the same line.
        let mut rest = match header.strip_prefix("OFF") {
            Some(r) => r.trim().to_string(),
            None => {
                return Err(Error::OffParse {
                    line,
                    message: "missing OFF header".into(),
                })
            }
        };
        let mut counts_line = line;
        if rest.is_empty() {
            let (l, c) = lines.next().ok_or(Error::OffParse {
                line,
                message: "missing counts line".into(),
            })?;
            counts_line = l;
            rest = c.to_string();
        }
        let counts = parse_numbers::<usize>(&rest, counts_line)?;
        if counts.len() < 2 {
            return Err(Error::OffParse {
                line: counts_line,
                message: "expected vertex and face counts".into(),
            });
        }
        let (nv, nf) = (counts[0], counts[1]);

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, s) = lines.next().ok_or(Error::OffParse {
                line: counts_line,
                message: "unexpected end of file in vertex list".into(),
            })?;
            let xyz = parse_numbers::<f64>(s, l)?;
            if xyz.len() < 3 {
                return Err(Error::OffParse {
                    line: l,
                    message: "vertex needs three coordinates".into(),
                });
            }
            vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
        }

        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (l, s) = lines.next().ok_or(Error::OffParse {
                line: counts_line,
                message: "unexpected end of file in face list".into(),
            })?;
            let idx = parse_numbers::<usize>(s, l)?;
            if idx.first() != Some(&3) || idx.len() < 4 {
                return Err(Error::OffParse {
                    line: l,
                    message: "only triangular faces are supported".into(),
                });
            }
            if idx[1..4].iter().any(|&v| v >= nv) {
                return Err(Error::OffParse {
                    line: l,
                    message: "vertex index out of range".into(),
                });
            }
            triangles.push([idx[1], idx[2], idx[3]]);
        }
        Mesh::new(vertices, triangles)
    }

    pub fn to_off(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "OFF");
        let _ = writeln!(out, "{} {} {}", self.vertices.len(), self.triangles.len(), self.edges.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn save_off(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_off()).map_err(|e| Error::io(path, e))
    }
}

fn parse_numbers<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::OffParse {
                line,
                message: format!("cannot parse '{tok}'"),
            })
        })
        .collect()
}

type Adjacency = BTreeMap<(usize, usize), Vec<usize>>;

fn edge_adjacency(triangles: &[[usize; 3]]) -> Result<Adjacency> {
    let mut map: Adjacency = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    for (&(a, b), tris) in &map {
        if tris.len() != 2 {
            return Err(Error::NonManifoldEdge(a, b, tris.len()));
        }
    }
    Ok(map)
}

/// True if `tri` traverses the directed edge `a → b`.
fn has_directed_edge(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|i| tri[i] == a && tri[(i + 1) % 3] == b)
}

fn signed_volume(vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| vertices[t[0]].dot(&vertices[t[1]].cross(&vertices[t[2]])))
        .sum::<f64>()
        / 6.0
}

/// Breadth-first winding propagation per connected component, then a global
/// flip of any component with negative enclosed volume.
fn orient(vertices: &[Vec3], triangles: &mut [[usize; 3]], adjacency: &Adjacency) -> Result<()> {
    let nt = triangles.len();
    let mut neighbours: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); nt];
    for (&(a, b), tris) in adjacency {
        neighbours[tris[0]].push((tris[1], a, b));
        neighbours[tris[1]].push((tris[0], a, b));
    }

    let mut visited = vec![false; nt];
    for seed in 0..nt {
        if visited[seed] {
            continue;
        }
        let mut component = vec![seed];
        visited[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            for &(u, a, b) in &neighbours[t] {
                // Neighbours must traverse the shared edge in opposite directions.
                let t_ab = has_directed_edge(&triangles[t], a, b);
                let u_ab = has_directed_edge(&triangles[u], a, b);
                if visited[u] {
                    if t_ab == u_ab {
                        return Err(Error::NonOrientable(u));
                    }
                    continue;
                }
                if t_ab == u_ab {
                    triangles[u].swap(1, 2);
                }
                visited[u] = true;
                component.push(u);
                queue.push_back(u);
            }
        }
        let volume: f64 = component
            .iter()
            .map(|&t| {
                let tri = triangles[t];
                vertices[tri[0]].dot(&vertices[tri[1]].cross(&vertices[tri[2]]))
            })
            .sum();
        if volume < 0.0 {
            for &t in &component {
                triangles[t].swap(1, 2);
            }
        }
    }
    Ok(())
}

/// Axis-aligned cube centred at the origin, each face split into
/// `divisions²` squares of two triangles each.
pub fn gen_cube(edge_len: f64, divisions: usize) -> Result<Mesh> {
    if !(edge_len > 0.0) || divisions == 0 {
        return Err(Error::InvalidArgument(format!(
            "cube needs edge_len > 0 and divisions >= 1 (got {edge_len}, {divisions})"
        )));
    }
    let d = divisions as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex = |p: [i64; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            let s = edge_len / d as f64;
            vertices.push(Vec3::new(
                p[0] as f64 * s - 0.5 * edge_len,
                p[1] as f64 * s - 0.5 * edge_len,
                p[2] as f64 * s - 0.5 * edge_len,
            ));
            vertices.len() - 1
        })
    };

    // (fixed axis, fixed value, in-plane axes u and v with u × v along the outward normal)
    let faces: [(usize, i64, usize, usize); 6] = [
        (0, d, 1, 2),
        (0, 0, 2, 1),
        (1, d, 2, 0),
        (1, 0, 0, 2),
        (2, d, 0, 1),
        (2, 0, 1, 0),
    ];
    for &(axis, value, u, v) in &faces {
        for i in 0..d {
            for j in 0..d {
                let corner = |di: i64, dj: i64| {
                    let mut p = [0i64; 3];
                    p[axis] = value;
                    p[u] = i + di;
                    p[v] = j + dj;
                    p
                };
                let p00 = vertex(corner(0, 0), &mut vertices);
                let p10 = vertex(corner(1, 0), &mut vertices);
                let p11 = vertex(corner(1, 1), &mut vertices);
                let p01 = vertex(corner(0, 1), &mut vertices);
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            }
        }
    }
    Mesh::new(vertices, triangles)
}

/// Icosahedron refined `subdivisions` times by 1-to-4 splitting, with new
/// vertices projected onto the sphere of the given diameter.
pub fn gen_icosphere(diameter: f64, subdivisions: usize) -> Result<Mesh> {
    if !(diameter > 0.0) {
        return Err(Error::InvalidArgument(format!("sphere diameter must be positive (got {diameter})")));
    }
    let radius = 0.5 * diameter;
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let mut vertices: Vec<Vec3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = refined;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    Mesh::new(vertices, triangles)
}

/// Edge-length statistics relative to a wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQualityReport {
    pub min_edge: f64,
    pub max_edge: f64,
    pub mean_edge: f64,
    pub wavelength: f64,
    pub min_edge_per_wavelength: f64,
    pub max_edge_per_wavelength: f64,
    pub mean_edge_per_wavelength: f64,
    pub triangles: usize,
    pub edges: usize,
    pub vertices: usize,
}

impl MeshQualityReport {
    pub fn to_csv(&self) -> String {
        let rows: [(&str, String); 10] = [
            ("min_edge_m", format!("{:?}", self.min_edge)),
            ("max_edge_m", format!("{:?}", self.max_edge)),
            ("mean_edge_m", format!("{:?}", self.mean_edge)),
            ("wavelength_m", format!("{:?}", self.wavelength)),
            ("min_edge_per_wavelength", format!("{:?}", self.min_edge_per_wavelength)),
            ("max_edge_per_wavelength", format!("{:?}", self.max_edge_per_wavelength)),
            ("mean_edge_per_wavelength", format!("{:?}", self.mean_edge_per_wavelength)),
            ("triangles", self.triangles.to_string()),
            ("edges", self.edges.to_string()),
            ("vertices", self.vertices.to_string()),
        ];
        let mut out = String::from("metric,value\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

pub fn mesh_quality(mesh: &Mesh, k0: f64) -> Result<MeshQualityReport> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidArgument(format!("wavenumber must be positive (got {k0})")));
    }
    let lengths: Vec<f64> = (0..mesh.num_edges()).map(|e| mesh.edge_length(e)).collect();
    let min_edge = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let max_edge = lengths.iter().copied().fold(0.0, f64::max);
    let mean_edge = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let wavelength = 2.0 * std::f64::consts::PI / k0;
    Ok(MeshQualityReport {
        min_edge,
        max_edge,
        mean_edge,
        wavelength,
        min_edge_per_wavelength: min_edge / wavelength,
        max_edge_per_wavelength: max_edge / wavelength,
        mean_edge_per_wavelength: mean_edge / wavelength,
        triangles: mesh.num_triangles(),
        edges: mesh.num_edges(),
        vertices: mesh.num_vertices(),
    })
}
