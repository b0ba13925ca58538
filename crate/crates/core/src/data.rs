use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};

/// Row-major `n x d` sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(FdeError::InvalidInput("empty data matrix".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(FdeError::InvalidInput("rows have zero columns".into()));
        }
        let mut values = Vec::with_capacity(n * d);
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(FdeError::InvalidInput(format!(
                    "row {idx} has {} columns, expected {d}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(DataMatrix { n, d, values })
    }

    pub fn from_vec(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d || n == 0 || d == 0 {
            return Err(FdeError::InvalidInput(format!(
                "shape ({n}, {d}) does not match {} values",
                values.len()
            )));
        }
        Ok(DataMatrix { n, d, values })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.d + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.d..(row + 1) * self.d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|s| self.get(s, col)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sub-matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        DataMatrix {
            n: rows.len(),
            d: self.d,
            values,
        }
    }

    /// SHA-256 of the little-endian bytes of all entries, row-major.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        format!("{:x}", hasher.finalize())
    }
}

/// Per-column affine map `x -> (x - min) / range` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub min: f64,
    pub range: f64,
}

impl AffineMap {
    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.min) / self.range
    }

    #[inline]
    pub fn inverse(&self, u: f64) -> f64 {
        self.min + u * self.range
    }
}

/// Rescale every column onto `[0, 1]` (min to 0, max to 1), recording the
/// affine maps for later inverse or reuse on held-out data.
pub fn rescale_to_unit_cube(data: &DataMatrix) -> Result<(DataMatrix, Vec<AffineMap>)> {
    if data.n() < 2 {
        return Err(FdeError::InvalidInput(
            "need at least 2 rows to rescale".into(),
        ));
    }
    let mut maps = Vec::with_capacity(data.d());
    for j in 0..data.d() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..data.n() {
            let v = data.get(s, j);
            if !v.is_finite() {
                return Err(FdeError::InvalidInput(format!(
                    "non-finite value in column {j}"
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi <= lo {
            return Err(FdeError::ConstantColumn { dim: j });
        }
        maps.push(AffineMap {
            min: lo,
            range: hi - lo,
        });
    }
    Ok((apply_rescale(data, &maps, false), maps))
}

/// Apply recorded affine maps. With `clamp`, values are clipped into
/// `[0, 1]`; held-out data can fall slightly outside the training range.
pub fn apply_rescale(data: &DataMatrix, maps: &[AffineMap], clamp: bool) -> DataMatrix {
    let mut values = Vec::with_capacity(data.n() * data.d());
    for s in 0..data.n() {
        for (j, map) in maps.iter().enumerate() {
            let mut u = map.forward(data.get(s, j));
            if clamp {
                u = u.clamp(0.0, 1.0);
            }
            values.push(u);
        }
    }
    DataMatrix {
        n: data.n(),
        d: data.d(),
        values,
    }
}

/// A seeded shuffle split: the first `ceil(frac * n)` shuffled rows form D1,
/// the rest D2. The permutation is kept so a split can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub permutation: Vec<usize>,
    pub n1: usize,
}

impl DataSplit {
    pub fn new(n: usize, frac: f64, seed: u64) -> Result<Self> {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(FdeError::InvalidInput(format!(
                "split fraction must be in (0, 1), got {frac}"
            )));
        }
        let mut permutation: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        permutation.shuffle(&mut rng);
        let n1 = (frac * n as f64).ceil() as usize;
        if n1 == 0 || n1 >= n {
            return Err(FdeError::InvalidInput(format!(
                "split leaves an empty half (n = {n}, frac = {frac})"
            )));
        }
        Ok(DataSplit { permutation, n1 })
    }

    pub fn d1_rows(&self) -> &[usize] {
        &self.permutation[..self.n1]
    }

    pub fn d2_rows(&self) -> &[usize] {
        &self.permutation[self.n1..]
    }
}
