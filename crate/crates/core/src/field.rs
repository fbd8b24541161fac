//! Real scalar fields on the periodic grid and their binary file format.
//!
//! File layout: the 4 magic bytes `MAGE`, then `version`, `n` and `R` as
//! little-endian `u32`, then `R^{2n}` little-endian `f64` values in
//! row-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{MageError, Result};
use crate::torus::{make_grid, GridSpec};

pub const FIELD_MAGIC: &[u8; 4] = b"MAGE";
pub const FIELD_VERSION: u32 = 1;

#[derive(Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("grid", &self.grid)
            .field("inf", &self.inf())
            .field("sup", &self.sup())
            .finish()
    }
}

impl ScalarField {
    /// Panics if the value count does not match the grid.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        ScalarField { grid, values }
    }

    /// Like [`ScalarField::from_values`] but rejects non-finite values.
    pub fn try_from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MageError::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MageError::NonFinite(i));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(MageError::GridMismatch);
        }
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    pub fn shift(&self, c: f64) -> ScalarField {
        self.map(|v| v + c)
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Flat-measure average, i.e. the periodic trapezoid rule on the unit torus.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Periodic translation by whole grid cells: `out(x) = self(x + shift·h)`.
    pub fn translate(&self, shift: &[isize]) -> ScalarField {
        let g = self.grid;
        let r = g.resolution as isize;
        let d = g.real_dim();
        let mut m = vec![0usize; d];
        let mut src = vec![0usize; d];
        let values = (0..g.len())
            .map(|i| {
                g.multi_index(i, &mut m);
                for a in 0..d {
                    src[a] = (m[a] as isize + shift[a]).rem_euclid(r) as usize;
                }
                self.values[g.flat_index(&src)]
            })
            .collect();
        ScalarField { grid: g, values }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&FIELD_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        w.write_all(&(self.grid.resolution as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<ScalarField> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)
            .map_err(|_| MageError::BadFieldFile("truncated header".into()))?;
        if &head[0..4] != FIELD_MAGIC {
            return Err(MageError::BadFieldFile("bad magic".into()));
        }
        let word = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().unwrap());
        let version = word(4);
        if version != FIELD_VERSION {
            return Err(MageError::BadFieldFile(format!(
                "unsupported version {version}"
            )));
        }
        let grid = make_grid(word(8) as usize, word(12) as usize)?;
        let mut bytes = vec![0u8; 8 * grid.len()];
        r.read_exact(&mut bytes)
            .map_err(|_| MageError::BadFieldFile("truncated payload".into()))?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        ScalarField::try_from_values(grid, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScalarField> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
