//! Complex field containers and the binary snapshot format.
//!
//! A snapshot is a single JSON header line
//! `{"dim":2,"n":64,"L":8.0,"components":1,"layout":"x1-fastest"}` followed by
//! the samples as little-endian `f64` pairs `(re, im)`. Spinor snapshots carry
//! `"components":2` and store the full up component before the down component.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Boundary-mass threshold below which a field counts as resolved.
pub const RESOLVED_BOUNDARY_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: Grid,
    pub up: Vec<Complex64>,
    pub down: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: *grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: *grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid: *grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.values {
            *z *= factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn boundary_mass(&self) -> f64 {
        boundary_mass(&self.grid, &[&self.values])
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        write_snapshot(path, &self.grid, &[&self.values])
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self> {
        let (grid, mut comps) = read_snapshot(path)?;
        if comps.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "expected a scalar snapshot, found {} components",
                comps.len()
            )));
        }
        Ok(Self { grid, values: comps.remove(0) })
    }
}

impl SpinorField {
    pub fn new(grid: &Grid, up: Vec<Complex64>, down: Vec<Complex64>) -> Result<Self> {
        if up.len() != grid.len() || down.len() != grid.len() {
            return Err(Error::InvalidArgument("spinor components must match the grid".into()));
        }
        Ok(Self { grid: *grid, up, down })
    }

    pub fn from_components(up: ScalarField, down: ScalarField) -> Result<Self> {
        if !up.grid.same_as(&down.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: up.grid, up: up.values, down: down.values })
    }

    pub fn up_field(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.up.clone() }
    }

    pub fn down_field(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.down.clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.up.iter().chain(&self.down).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn boundary_mass(&self) -> f64 {
        boundary_mass(&self.grid, &[&self.up, &self.down])
    }

    pub fn write_snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        write_snapshot(path, &self.grid, &[&self.up, &self.down])
    }

    pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Self> {
        let (grid, mut comps) = read_snapshot(path)?;
        if comps.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "expected a spinor snapshot, found {} components",
                comps.len()
            )));
        }
        let down = comps.pop().unwrap();
        let up = comps.pop().unwrap();
        Ok(Self { grid, up, down })
    }
}

/// `h^dim Σ |ψ|²` over the boundary shell of the grid, summed over components.
pub fn boundary_mass(grid: &Grid, components: &[&[Complex64]]) -> f64 {
    let mut acc = 0.0;
    for comp in components {
        for (i, z) in comp.iter().enumerate() {
            if grid.in_boundary_shell(i) {
                acc += z.norm_sqr();
            }
        }
    }
    acc * grid.cell_volume()
}

/// Fails with [`Error::Unresolved`] when the boundary mass exceeds `threshold`.
pub fn check_resolved(grid: &Grid, components: &[&[Complex64]], threshold: f64) -> Result<f64> {
    let mass = boundary_mass(grid, components);
    if !(mass <= threshold) {
        return Err(Error::Unresolved { boundary_mass: mass, threshold });
    }
    Ok(mass)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotHeader {
    dim: usize,
    n: usize,
    #[serde(rename = "L")]
    extent: f64,
    components: usize,
    layout: String,
}

const LAYOUT: &str = "x1-fastest";

pub fn write_snapshot(path: impl AsRef<Path>, grid: &Grid, components: &[&[Complex64]]) -> Result<()> {
    let header = SnapshotHeader {
        dim: grid.dim(),
        n: grid.n(),
        extent: grid.extent(),
        components: components.len(),
        layout: LAYOUT.to_string(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for comp in components {
        for z in comp.iter() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(Grid, Vec<Vec<Complex64>>)> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    if header.layout != LAYOUT {
        return Err(Error::InvalidArgument(format!("unsupported layout {:?}", header.layout)));
    }
    if header.components == 0 || header.components > 2 {
        return Err(Error::InvalidArgument(format!(
            "unsupported component count {}",
            header.components
        )));
    }
    let grid = Grid::new(header.dim, header.n, header.extent)?;
    let mut comps = Vec::with_capacity(header.components);
    let mut buf = [0u8; 16];
    for _ in 0..header.components {
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            reader.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            values.push(Complex64::new(re, im));
        }
        comps.push(values);
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::InvalidArgument("trailing bytes after snapshot payload".into()));
    }
    Ok((grid, comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn snapshot_is_bit_exact() {
        let grid = make_grid(2, 16, 2.5).unwrap();
        let f = ScalarField::from_fn(&grid, |x| {
            Complex64::new((x[0] * 1.7).sin() / 3.0, x[1].exp() * 1e-300 + f64::MIN_POSITIVE)
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        f.write_snapshot(&path).unwrap();
        let g = ScalarField::read_snapshot(&path).unwrap();
        assert!(g.grid.same_as(&f.grid));
        for (a, b) in f.values.iter().zip(&g.values) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let bytes = std::fs::read(&path).unwrap();
        let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        assert_eq!(header, r#"{"dim":2,"n":16,"L":2.5,"components":1,"layout":"x1-fastest"}"#);
        assert_eq!(bytes.len() - header_end - 1, 16 * 16 * 16);
    }

    #[test]
    fn spinor_snapshot_round_trip() {
        let grid = make_grid(3, 8, 1.0).unwrap();
        let up = ScalarField::from_fn(&grid, |x| Complex64::new(x[0], x[2]));
        let down = ScalarField::from_fn(&grid, |x| Complex64::new(-x[1], 0.25));
        let s = SpinorField::from_components(up, down).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        s.write_snapshot(&path).unwrap();
        assert_eq!(SpinorField::read_snapshot(&path).unwrap(), s);
        assert!(ScalarField::read_snapshot(&path).is_err());
    }

    #[test]
    fn boundary_mass_sees_only_the_shell() {
        let grid = make_grid(2, 64, 4.0).unwrap();
        let mut f = ScalarField::zeros(&grid);
        f.values[grid.ravel([32, 32, 0])] = Complex64::new(1.0, 0.0);
        assert_eq!(f.boundary_mass(), 0.0);
        f.values[grid.ravel([0, 10, 0])] = Complex64::new(2.0, 0.0);
        assert!((f.boundary_mass() - 4.0 * grid.cell_volume()).abs() < 1e-15);
        assert!(check_resolved(&grid, &[&f.values], 1e-12).is_err());
    }
}
