//! Discrete imaging raster and scalar fields on it.
//!
//! Pixel `(i, j)` has center `(x0 + i*dx, z0 + j*dz)`; `i` runs along track
//! (cross-range), `j` away from the sonar path (range). Storage is row-major
//! in `j`: flat index `i + j*nx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    pub x0: f64,
    pub z0: f64,
}

impl Grid2D {
    /// Validated constructor.
    pub fn new(nx: usize, nz: usize, dx: f64, dz: f64, x0: f64, z0: f64) -> Result<Self> {
        let grid = Grid2D {
            nx,
            nz,
            dx,
            dz,
            x0,
            z0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(Error::invalid("nx", format!("need nx >= 2, got {}", self.nx)));
        }
        if self.nz < 1 {
            return Err(Error::invalid("nz", "need nz >= 1, got 0"));
        }
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return Err(Error::invalid("dx", format!("need dx > 0, got {}", self.dx)));
        }
        if !(self.dz.is_finite() && self.dz > 0.0) {
            return Err(Error::invalid("dz", format!("need dz > 0, got {}", self.dz)));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        if !self.z0.is_finite() {
            return Err(Error::invalid("z0", "must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.nz);
        i + j * self.nx
    }

    #[inline]
    pub fn unindex(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.dz
    }

    /// Pixel whose center is nearest to `(x, z)`, if inside the raster.
    pub fn nearest_pixel(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x0) / self.dx).round();
        let fj = ((z - self.z0) / self.dz).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.nz as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Same shape and spacing, compared exactly.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        self == other
    }
}

/// Scalar field sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<T> {
    grid: Grid2D,
    values: Vec<T>,
}

impl<T: Real> Field2D<T> {
    pub fn zeros(grid: Grid2D) -> Self {
        Field2D {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nz {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        Field2D { grid, values }
    }

    /// Wraps existing samples; rejects wrong length and non-finite values.
    pub fn from_values(grid: Grid2D, values: Vec<T>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("length {} != nx*nz = {}", values.len(), grid.len()),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = grid.unindex(k);
            return Err(Error::invalid("values", format!("non-finite sample at ({i}, {j})")));
        }
        Ok(Field2D { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn row(&self, j: usize) -> &[T] {
        let nx = self.grid.nx;
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        let nx = self.grid.nx;
        &mut self.values[j * nx..(j + 1) * nx]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rectified magnitude, the detected image.
    pub fn magnitude(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Flat index of the largest sample (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        self.grid.unindex(best)
    }

    pub fn cast<U: Real>(&self) -> Field2D<U> {
        Field2D {
            grid: self.grid,
            values: self
                .values
                .iter()
                .map(|v| U::lit(v.as_f64()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_grid_has_two_pixels() {
        let g = Grid2D::new(2, 1, 0.1, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn zero_nx_is_rejected_by_name() {
        let err = Grid2D::new(0, 1, 0.1, 0.1, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { field: "nx", .. }), "{err}");
    }

    #[test]
    fn pixel_centers_span_expected_extent() {
        let g = Grid2D::new(128, 256, 0.05, 0.05, -3.2, 0.0).unwrap();
        assert_eq!(g.x(0), -3.2);
        assert!((g.x(127) - 3.15).abs() < 1e-12);
        assert_eq!(g.z(0), 0.0);
    }

    #[test]
    fn from_values_rejects_nan_and_bad_length() {
        let g = Grid2D::new(2, 2, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(Field2D::from_values(g, vec![0.0f64; 3]).is_err());
        assert!(Field2D::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Field2D::from_values(g, vec![0.0f64; 4]).is_ok());
    }

    proptest! {
        #[test]
        fn index_round_trip(nx in 2usize..40, nz in 1usize..40) {
            let g = Grid2D::new(nx, nz, 1.0, 1.0, 0.0, 0.0).unwrap();
            for j in 0..nz {
                for i in 0..nx {
                    prop_assert_eq!(g.unindex(g.index(i, j)), (i, j));
                }
            }
        }

        #[test]
        fn constructor_rejects_every_violation(
            nx in 0usize..4,
            nz in 0usize..3,
            dx in -1.0f64..1.0,
            dz in -1.0f64..1.0,
        ) {
            let valid = nx >= 2 && nz >= 1 && dx > 0.0 && dz > 0.0;
            prop_assert_eq!(Grid2D::new(nx, nz, dx, dz, 0.0, 0.0).is_ok(), valid);
        }
    }
}
