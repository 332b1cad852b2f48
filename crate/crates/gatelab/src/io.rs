//! Matrix files and CSV emitters.
//!
//! Matrix file: `{"dims": [n, m], "re": [[..]], "im": [[..]]}` with the
//! rows of the `nm x nm` matrix in composite-index order. CSV floats are
//! written with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};
use crate::spectra::SpectralSample;
use crate::thermal::Trajectory;

/// Matrix files above this order are large enough to warn about.
pub const LARGE_MATRIX_ORDER: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dims: [usize; 2],
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_operator(op: &BipartiteOperator) -> Self {
        let m = op.matrix();
        let rows = |f: fn(&c64) -> f64| (0..m.rows()).map(|r| m.row(r).iter().map(f).collect()).collect();
        MatrixFile {
            dims: op.dims().into(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Shape-checked conversion; unitarity is not checked here.
    pub fn to_operator(&self) -> std::result::Result<BipartiteOperator, String> {
        let dims = Dims::new(self.dims[0], self.dims[1]).map_err(|e| e.to_string())?;
        let d = dims.total();
        if self.re.len() != d || self.im.len() != d {
            return Err(format!("expected {d} rows for dims {dims}, found {} / {}", self.re.len(), self.im.len()));
        }
        let mut data = Vec::with_capacity(d * d);
        for (r, (re, im)) in self.re.iter().zip(&self.im).enumerate() {
            if re.len() != d || im.len() != d {
                return Err(format!("row {r} has {} / {} entries, expected {d}", re.len(), im.len()));
            }
            data.extend(re.iter().zip(im).map(|(&a, &b)| c64::new(a, b)));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err("non-finite entry".into());
        }
        let mat = CMatrix::from_vec(d, d, data).map_err(|e| e.to_string())?;
        BipartiteOperator::new(dims, mat).map_err(|e| e.to_string())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a matrix file and requires the operator to be unitary.
pub fn read_matrix_file(path: &Path) -> Result<BipartiteOperator> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let bad = |reason: String| Error::MatrixFile {
        path: path.display().to_string(),
        reason,
    };
    let file: MatrixFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let op = file.to_operator().map_err(bad)?;
    let deviation = op.unitarity_deviation();
    if !(deviation < crate::bipartite::UNITARY_TOL) {
        return Err(bad(format!("not unitary (max |U^dag U - 1| entry {deviation:.3e})")));
    }
    Ok(op)
}

pub fn write_matrix_file(path: &Path, op: &BipartiteOperator) -> Result<()> {
    let text = serde_json::to_string(&MatrixFile::from_operator(op)).expect("plain data serializes");
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRAJECTORY_HEADER: &str = "n,mean_ep,stderr_ep,mean_gt,stderr_gt,X,Y,theory_ep,theory_gt";

pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in &traj.rows {
        let cols = [r.mean_ep, r.stderr_ep, r.mean_gt, r.stderr_gt, r.x, r.y, r.theory_ep, r.theory_gt];
        let cols: Vec<String> = cols.iter().map(|&x| fmt_float(x)).collect();
        writeln!(out, "{},{}", r.n, cols.join(","))?;
    }
    Ok(())
}

pub fn write_points_csv<W: Write>(out: &mut W, points: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(out, "ep,gt")?;
    for &(ep, gt) in points {
        writeln!(out, "{},{}", fmt_float(ep), fmt_float(gt))?;
    }
    Ok(())
}

/// Boundary samples as `curve,ep,gt` rows.
pub fn write_curves_csv<W: Write>(out: &mut W, curves: &[(String, Vec<(f64, f64)>)]) -> std::io::Result<()> {
    writeln!(out, "curve,ep,gt")?;
    for (name, pts) in curves {
        for &(ep, gt) in pts {
            writeln!(out, "{name},{},{}", fmt_float(ep), fmt_float(gt))?;
        }
    }
    Ok(())
}

pub fn write_eigenvalues_csv<W: Write>(out: &mut W, samples: &[SpectralSample]) -> std::io::Result<()> {
    writeln!(out, "kind,step,re,im")?;
    for s in samples {
        for z in &s.eigenvalues {
            writeln!(out, "{},{},{},{}", s.kind, s.step, fmt_float(z.re), fmt_float(z.im))?;
        }
    }
    Ok(())
}

pub fn write_singular_csv<W: Write>(out: &mut W, samples: &[SpectralSample]) -> std::io::Result<()> {
    writeln!(out, "kind,step,x")?;
    for s in samples {
        for x in &s.scaled_sq_singular {
            writeln!(out, "{},{},{}", s.kind, s.step, fmt_float(*x))?;
        }
    }
    Ok(())
}
