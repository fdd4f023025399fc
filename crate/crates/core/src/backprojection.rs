//! Delay-and-sum reference imager and point-spread measurements.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::travel_time;
use crate::grid::{Field2D, Grid2D};
use crate::record::SasRecord;
use crate::scalar::Real;

/// `image(x, z) = sum_i data_i(2 |(x_i, 0) - (x, z)| / c)`, with linear
/// interpolation in time and zero outside the record.
pub fn backproject<T: Real>(record: &SasRecord<T>, grid: &Grid2D) -> Result<Field2D<T>> {
    grid.validate()?;
    record.sampling().validate()?;
    let mut image = Field2D::zeros(*grid);
    let c = record.c;
    image
        .values_mut()
        .par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(j, row)| {
            let z = grid.z(j);
            for (i, out) in row.iter_mut().enumerate() {
                let x = grid.x(i);
                let mut acc = T::zero();
                for k in 0..record.n_traces {
                    // c was validated above
                    let t = travel_time(record.trace_x(k), 0.0, x, z, c).unwrap_or(f64::NAN);
                    acc += record.sample_at(k, t);
                }
                *out = acc;
            }
        });
    Ok(image)
}

/// Peak location and -3 dB widths of a detected image around a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfReport {
    pub peak_pixel: (usize, usize),
    pub peak_value: f64,
    /// Cross-range width at `peak / sqrt(2)`, meters.
    pub width_x_3db: f64,
    /// Range width at `peak / sqrt(2)`, meters.
    pub width_z_3db: f64,
}

/// Measures the peak of `|image|` within `radius` meters of `near`.
///
/// The peak must be a local maximum of the whole image (8-neighbourhood).
/// Widths interpolate linearly between the last sample above `peak/sqrt(2)`
/// and the first below it, and are never reported below one pixel pitch.
pub fn psf_metrics<T: Real>(image: &Field2D<T>, near: (f64, f64), radius: f64) -> Result<PsfReport> {
    if !image.all_finite() {
        return Err(Error::invalid("image", "contains non-finite values"));
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid("radius", "must be non-negative"));
    }
    let g = *image.grid();
    let mag = |i: usize, j: usize| image.get(i, j).as_f64().abs();
    let span = |center: f64, origin: f64, pitch: f64, n: usize| {
        let lo = ((center - radius - origin) / pitch).ceil().max(0.0);
        let hi = ((center + radius - origin) / pitch).floor().min(n as f64 - 1.0);
        (lo <= hi).then_some((lo as usize, hi as usize))
    };
    let not_found = || {
        Error::NotFound(format!(
            "no local maximum within {radius} m of ({}, {})",
            near.0, near.1
        ))
    };
    let (i0, i1) = span(near.0, g.x0, g.dx, g.nx).ok_or_else(not_found)?;
    let (j0, j1) = span(near.1, g.z0, g.dz, g.nz).ok_or_else(not_found)?;

    let mut best = (i0, j0);
    let mut lowest = f64::INFINITY;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let v = mag(i, j);
            if v > mag(best.0, best.1) {
                best = (i, j);
            }
            lowest = lowest.min(v);
        }
    }
    let (pi, pj) = best;
    let peak = mag(pi, pj);
    if !(peak > lowest) {
        return Err(not_found());
    }
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let (ni, nj) = (pi as i64 + di, pj as i64 + dj);
            if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= g.nx as i64 || nj >= g.nz as i64 {
                continue;
            }
            if mag(ni as usize, nj as usize) > peak {
                return Err(not_found());
            }
        }
    }

    let threshold = peak / std::f64::consts::SQRT_2;
    let width = |profile: &dyn Fn(usize) -> f64, n: usize, at: usize, pitch: f64| {
        let crossing = |step: i64| -> f64 {
            let mut k = at as i64;
            loop {
                let next = k + step;
                if next < 0 || next >= n as i64 {
                    return k as f64;
                }
                let (a, b) = (profile(k as usize), profile(next as usize));
                if b < threshold {
                    return k as f64 + step as f64 * (a - threshold) / (a - b);
                }
                k = next;
            }
        };
        ((crossing(1) - crossing(-1)) * pitch).max(pitch)
    };
    Ok(PsfReport {
        peak_pixel: (pi, pj),
        peak_value: peak,
        width_x_3db: width(&|i| mag(i, pj), g.nx, pi, g.dx),
        width_z_3db: width(&|j| mag(pi, j), g.nz, pj, g.dz),
    })
}
