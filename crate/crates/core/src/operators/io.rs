//! Binary matrix dumps and the content-addressed matrix cache.
//!
//! Layout (all little-endian): the 8-byte magic `CSIEMAT1`, the row and
//! column counts as `u64`, then `rows × cols` complex entries in row-major
//! order, each stored as two `f64` (real, imaginary).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::QuadratureConfig;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::{Complex, DenseComplexMatrix};

const MAGIC: &[u8; 8] = b"CSIEMAT1";

pub fn write_matrix<W: Write>(mut w: W, m: &DenseComplexMatrix) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for z in m.as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DenseComplexMatrix> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::CacheFormat("bad magic".into()));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let len = rows
        .checked_mul(cols)
        .filter(|&n| n <= 1 << 32)
        .ok_or_else(|| Error::CacheFormat(format!("implausible size {rows}×{cols}")))?;
    let mut data = Vec::with_capacity(len);
    let mut buf = [0u8; 16];
    for _ in 0..len {
        read_exact(&mut r, &mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        data.push(Complex::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::CacheFormat(e.to_string()))? != 0 {
        return Err(Error::CacheFormat("trailing data".into()));
    }
    DenseComplexMatrix::from_row_major(rows, cols, data)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::CacheFormat(format!("truncated matrix file: {e}")))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn save_matrix(path: &Path, m: &DenseComplexMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(BufWriter::new(file), m).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<DenseComplexMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(BufReader::new(file))
}

/// Hex SHA-256 over the mesh geometry, the wavenumber and the quadrature
/// configuration: everything an assembled matrix depends on.
pub fn cache_key(mesh: &Mesh, k0: f64, quad: &QuadratureConfig) -> String {
    let mut h = Sha256::new();
    h.update(MAGIC);
    h.update((mesh.num_vertices() as u64).to_le_bytes());
    for v in mesh.vertices() {
        for x in v.iter() {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    h.update((mesh.num_triangles() as u64).to_le_bytes());
    for t in mesh.triangles() {
        for &i in t {
            h.update((i as u64).to_le_bytes());
        }
    }
    h.update(k0.to_bits().to_le_bytes());
    for order in [quad.far_outer, quad.far_inner, quad.near_outer, quad.near_inner] {
        h.update((order.points() as u64).to_le_bytes());
    }
    h.update(quad.near_threshold.to_bits().to_le_bytes());
    h.update([quad.extraction_order]);
    h.update((quad.near_refinement as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Directory of matrix dumps named `<key>-<name>.bin`.
#[derive(Debug, Clone)]
pub struct MatrixCache {
    dir: PathBuf,
}

impl MatrixCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(MatrixCache { dir })
    }

    pub fn path(&self, key: &str, name: &str) -> PathBuf {
        self.dir.join(format!("{key}-{name}.bin"))
    }

    /// Cached matrix, or `None` when absent or unreadable.
    pub fn get(&self, key: &str, name: &str) -> Option<DenseComplexMatrix> {
        let path = self.path(key, name);
        path.exists().then(|| load_matrix(&path).ok()).flatten()
    }

    /// Writes through a temporary file so concurrent readers never see a
    /// partial dump.
    pub fn put(&self, key: &str, name: &str, m: &DenseComplexMatrix) -> Result<()> {
        let path = self.path(key, name);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        save_matrix(&tmp, m)?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
