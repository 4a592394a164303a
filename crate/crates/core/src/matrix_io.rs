//! Binary matrix export.
//!
//! Layout (little endian): the 4 bytes `BRSL`, `u32` format version, `u64` dimension `N`,
//! `u8` space tag (1 weighted, 0 unweighted), then `N²` `f64` entries in column-major order.
//! A sidecar CSV `index,x1,...,x{n+1},weight,mu` lists the grid nodes, their cell volumes and
//! the measure weights `x_{n+1}^{2λ}` (1 in the unweighted space).

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;

use crate::discretize::{OperatorMatrix, SpaceTag};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BRSL";
pub const VERSION: u32 = 1;

/// Contents of a matrix file.
#[derive(Debug, Clone)]
pub struct MatrixFile {
    pub space: SpaceTag,
    pub entries: Mat<f64>,
}

pub fn write_matrix_to(w: &mut impl Write, a: &OperatorMatrix) -> Result<()> {
    let n = a.dim();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&[a.space().code()])?;
    for j in 0..n {
        for v in a.entries().col_as_slice(j) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_from(r: &mut impl Read) -> Result<MatrixFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MatrixFormat(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::MatrixFormat(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::MatrixFormat("dimension overflows".into()))?;
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)?;
    let space = SpaceTag::from_code(tag[0]).ok_or_else(|| Error::MatrixFormat(format!("bad space tag {}", tag[0])))?;
    let mut entries = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for slot in entries.col_as_slice_mut(j) {
            r.read_exact(&mut b8)?;
            *slot = f64::from_le_bytes(b8);
        }
    }
    Ok(MatrixFile { space, entries })
}

pub fn grid_csv(a: &OperatorMatrix) -> String {
    let grid = a.grid();
    let d = grid.dim();
    let mut out = String::from("index");
    for c in 1..=d {
        let _ = write!(out, ",x{c}");
    }
    out.push_str(",weight,mu\n");
    for (i, (x, w)) in grid.nodes().iter().zip(grid.cell_weights()).enumerate() {
        let mu = match a.space() {
            SpaceTag::Weighted => x.last().powf(a.measure_exponent()),
            SpaceTag::Unweighted => 1.0,
        };
        let _ = write!(out, "{i}");
        for c in x.coords() {
            let _ = write!(out, ",{c:e}");
        }
        let _ = writeln!(out, ",{w:e},{mu:e}");
    }
    out
}

/// Path of the sidecar written next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".grid.csv");
    PathBuf::from(s)
}

/// Writes `path` and its grid sidecar.
pub fn write_matrix(path: &Path, a: &OperatorMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_to(&mut w, a)?;
    w.flush()?;
    std::fs::write(sidecar_path(path), grid_csv(a))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    read_matrix_from(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::discretize::BoxGrid;

    #[test]
    fn round_trip() {
        let g = Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (1.0, 2.0)], 3).unwrap());
        let m = Mat::from_fn(9, 9, |i, j| (i as f64) - 0.5 * j as f64);
        let a = OperatorMatrix::from_entries(m.clone(), g, SpaceTag::Weighted, 1.0).unwrap();
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &a).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 1 + 81 * 8);
        assert_eq!(&buf[..4], b"BRSL");
        // column-major: second stored value is entry (1, 0)
        assert_eq!(f64::from_le_bytes(buf[25..33].try_into().unwrap()), 1.0);
        let back = read_matrix_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.space, SpaceTag::Weighted);
        assert_eq!(back.entries, m);
        buf[0] = b'X';
        assert!(read_matrix_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn sidecar_rows() {
        let g = Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (1.0, 2.0)], 2).unwrap());
        let a = OperatorMatrix::from_entries(Mat::zeros(4, 4), g, SpaceTag::Weighted, 0.5).unwrap();
        let csv = grid_csv(&a);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "index,x1,x2,weight,mu");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "1,2.5e-1,1.75e0,2.5e-1,1.75e0");
    }
}
