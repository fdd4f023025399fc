//! Variational enhancement of detected images.
//!
//! Minimizes
//!
//! ```text
//! E(S) = sum (S - s)^2 h + beta sum_p 1/4 sum_corners phi(|grad S|^2) h,   h = dx dz,
//! ```
//!
//! where each pixel averages `phi` over its four one-sided gradients (forward
//! or backward in x, forward or backward in z; differences across the image
//! border are zero). Averaging the four corners keeps the discrete operator
//! invariant under flips. Stationarity reads `A(S) S = s` with
//!
//! ```text
//! (A(S) S)_p = S_p + beta sum_{edges e=(p,q)} w_e (S_p - S_q) / h_e^2,
//! ```
//!
//! `w_e` the mean of `phi'` over the four corners that use edge `e`. The
//! solver freezes `w` at the current iterate, solves the symmetric positive
//! definite system by Jacobi-preconditioned conjugate gradients and repeats
//! until the stationarity residual is small.

use log::warn;
use rayon::prelude::*;

use crate::config::{EnhanceConfig, PhiVariant};
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::scalar::Real;

/// Weight `phi'(q)` with `1/sqrt` floored at `epsilon`.
pub fn phi_prime(q: f64, variant: PhiVariant, epsilon: f64) -> f64 {
    let tv = |q: f64| 1.0 / q.max(epsilon).sqrt();
    match variant {
        PhiVariant::Gaussian => 1.0,
        PhiVariant::Bv => tv(q),
        PhiVariant::Hybrid { delta } => {
            if q >= 1.0 {
                1.0 / q.sqrt()
            } else if q >= delta {
                1.0
            } else {
                tv(q)
            }
        }
    }
}

/// Antiderivative of [`phi_prime`] with `phi(0) = 0`.
pub fn phi(q: f64, variant: PhiVariant, epsilon: f64) -> f64 {
    let tv = |q: f64| {
        if q < epsilon {
            q / epsilon.sqrt()
        } else {
            2.0 * q.sqrt() - epsilon.sqrt()
        }
    };
    match variant {
        PhiVariant::Gaussian => q,
        PhiVariant::Bv => tv(q),
        PhiVariant::Hybrid { delta } => {
            if q < delta {
                tv(q)
            } else if q < 1.0 {
                tv(delta) + (q - delta)
            } else {
                tv(delta) + (1.0 - delta) + 2.0 * (q.sqrt() - 1.0)
            }
        }
    }
}

/// One-sided differences at pixel `(i, j)`: `[fx, bx, fz, bz]`.
#[inline]
fn one_sided(v: &[f64], g: &Grid2D, i: usize, j: usize) -> [f64; 4] {
    let nx = g.nx;
    let k = i + j * nx;
    let fx = if i + 1 < nx { (v[k + 1] - v[k]) / g.dx } else { 0.0 };
    let bx = if i > 0 { (v[k] - v[k - 1]) / g.dx } else { 0.0 };
    let fz = if j + 1 < g.nz { (v[k + nx] - v[k]) / g.dz } else { 0.0 };
    let bz = if j > 0 { (v[k] - v[k - nx]) / g.dz } else { 0.0 };
    [fx, bx, fz, bz]
}

/// Squared gradient at the corners `[++, +-, -+, --]` (x sign, z sign).
#[inline]
fn corner_q(d: [f64; 4]) -> [f64; 4] {
    let [fx, bx, fz, bz] = d;
    [fx * fx + fz * fz, fx * fx + bz * bz, bx * bx + fz * fz, bx * bx + bz * bz]
}

fn check_grids<T: Real>(a: &Field2D<T>, b: &Field2D<T>) -> Result<()> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::invalid("grid", "fields are on different grids"));
    }
    Ok(())
}

/// Discrete restoration energy of `big_s` for data `s`.
pub fn energy<T: Real>(
    big_s: &Field2D<T>,
    s: &Field2D<T>,
    beta: f64,
    variant: PhiVariant,
    epsilon: f64,
) -> Result<f64> {
    check_grids(big_s, s)?;
    let g = *s.grid();
    let h = g.dx * g.dz;
    let v: Vec<f64> = big_s.values().iter().map(|x| x.as_f64()).collect();
    let data: f64 = v
        .iter()
        .zip(s.values())
        .map(|(a, b)| (a - b.as_f64()).powi(2))
        .sum();
    let mut reg = 0.0;
    for j in 0..g.nz {
        for i in 0..g.nx {
            let q = corner_q(one_sided(&v, &g, i, j));
            reg += 0.25 * q.iter().map(|&q| phi(q, variant, epsilon)).sum::<f64>();
        }
    }
    Ok((data + beta * reg) * h)
}

/// Edge weights frozen at one iterate.
struct Weights {
    grid: Grid2D,
    beta: f64,
    /// `(nx - 1) * nz` edges between `(i, j)` and `(i + 1, j)`, already
    /// divided by `dx^2`.
    wx: Vec<f64>,
    /// `nx * (nz - 1)` edges between `(i, j)` and `(i, j + 1)`, divided by
    /// `dz^2`.
    wz: Vec<f64>,
    diag: Vec<f64>,
}

impl Weights {
    fn at(v: &[f64], g: Grid2D, beta: f64, variant: PhiVariant, epsilon: f64) -> Self {
        let (nx, nz) = (g.nx, g.nz);
        // corner weights, 4 per pixel
        let mut cw = vec![0.0; 4 * nx * nz];
        cw.par_chunks_mut(4 * nx).enumerate().for_each(|(j, row)| {
            for i in 0..nx {
                let q = corner_q(one_sided(v, &g, i, j));
                for c in 0..4 {
                    row[4 * i + c] = phi_prime(q[c], variant, epsilon);
                }
            }
        });
        let c = |i: usize, j: usize, corner: usize| cw[4 * (i + j * nx) + corner];
        let (ix2, iz2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dz * g.dz));
        let mut wx = vec![0.0; (nx - 1) * nz];
        for j in 0..nz {
            for i in 0..nx - 1 {
                let w = c(i, j, 0) + c(i, j, 1) + c(i + 1, j, 2) + c(i + 1, j, 3);
                wx[i + j * (nx - 1)] = 0.25 * w * ix2;
            }
        }
        let mut wz = vec![0.0; nx * nz.saturating_sub(1)];
        for j in 0..nz.saturating_sub(1) {
            for i in 0..nx {
                let w = c(i, j, 0) + c(i, j, 2) + c(i, j + 1, 1) + c(i, j + 1, 3);
                wz[i + j * nx] = 0.25 * w * iz2;
            }
        }
        let mut weights = Weights {
            grid: g,
            beta,
            wx,
            wz,
            diag: Vec::new(),
        };
        weights.diag = (0..nx * nz)
            .map(|k| {
                let (i, j) = g.unindex(k);
                1.0 + beta * weights.neighbours(i, j).map(|(_, w)| w).sum::<f64>()
            })
            .collect();
        weights
    }

    /// Flat indices and scaled weights of the up to four neighbours.
    #[inline]
    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let nx = self.grid.nx;
        let k = i + j * nx;
        let left = (i > 0).then(|| (k - 1, self.wx[i - 1 + j * (nx - 1)]));
        let right = (i + 1 < nx).then(|| (k + 1, self.wx[i + j * (nx - 1)]));
        let up = (j > 0).then(|| (k - nx, self.wz[i + (j - 1) * nx]));
        let down = (j + 1 < self.grid.nz).then(|| (k + nx, self.wz[k]));
        [left, right, up, down].into_iter().flatten()
    }

    /// `out = A x`.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let nx = self.grid.nx;
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, o) in row.iter_mut().enumerate() {
                let k = i + j * nx;
                let lap: f64 = self.neighbours(i, j).map(|(q, w)| w * (x[k] - x[q])).sum();
                *o = x[k] + self.beta * lap;
            }
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG on `A x = b` from the initial `x`. Returns the
/// iteration count, or the count and final relative residual on failure.
fn pcg(a: &Weights, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> std::result::Result<usize, (usize, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for (r, b) in r.iter_mut().zip(b) {
        *r = b - *r;
    }
    let mut z: Vec<f64> = r.iter().zip(&a.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(it);
        }
        a.apply(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] / a.diag[k];
        }
        let rz_new = dot(&r, &z);
        let ratio = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + ratio * p[k];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol * bnorm {
        Ok(max_iter)
    } else {
        Err((max_iter, rnorm / bnorm))
    }
}

/// `||A(S) S - s||_2`, the stationarity residual of the energy.
pub fn euler_lagrange_residual<T: Real>(
    big_s: &Field2D<T>,
    s: &Field2D<T>,
    config: &EnhanceConfig,
) -> Result<f64> {
    check_grids(big_s, s)?;
    let v: Vec<f64> = big_s.values().iter().map(|x| x.as_f64()).collect();
    let d: Vec<f64> = s.values().iter().map(|x| x.as_f64()).collect();
    let w = Weights::at(&v, *s.grid(), config.beta, config.variant, config.epsilon);
    Ok(residual(&w, &v, &d))
}

fn residual(w: &Weights, v: &[f64], d: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    w.apply(v, &mut av);
    av.iter().zip(d).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Result of [`enhance`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceReport<T> {
    pub image: Field2D<T>,
    /// Linear solves performed.
    pub iterations: usize,
    /// Final `||A(S) S - s|| / ||s||`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Minimizes the restoration energy for data `s` by the lagged-weight
/// fixed point. The image is used as given; see [`detect_and_normalize`].
pub fn enhance<T: Real>(s: &Field2D<T>, config: &EnhanceConfig) -> Result<EnhanceReport<T>> {
    config.validate()?;
    if !s.all_finite() {
        return Err(Error::invalid("s", "contains non-finite values"));
    }
    let g = *s.grid();
    let d: Vec<f64> = s.values().iter().map(|x| x.as_f64()).collect();
    let snorm = dot(&d, &d).sqrt();
    let constant = d.iter().all(|&v| v == d[0]);
    if config.beta == 0.0 || constant || snorm == 0.0 {
        return Ok(EnhanceReport {
            image: s.clone(),
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let cg_cap = (4 * d.len()).max(1000);
    let mut v = d.clone();
    let mut solves = 0;
    loop {
        let w = Weights::at(&v, g, config.beta, config.variant, config.epsilon);
        let rel = residual(&w, &v, &d) / snorm;
        if rel <= config.fixedpoint_tol || solves == config.max_iters {
            let converged = rel <= config.fixedpoint_tol;
            if !converged {
                warn!("enhancement stopped after {solves} iterations, relative residual {rel:e}");
            }
            return Ok(EnhanceReport {
                image: Field2D::from_fn(g, |i, j| T::lit(v[i + j * g.nx])),
                iterations: solves,
                relative_residual: rel,
                converged,
            });
        }
        pcg(&w, &d, &mut v, config.linear_tol, cg_cap).map_err(|(iterations, residual)| {
            Error::SolverDiverged {
                outer: solves,
                iterations,
                residual,
            }
        })?;
        solves += 1;
    }
}

/// `|s| / max |s|`, or zeros for an all-zero field.
pub fn detect_and_normalize<T: Real>(s: &Field2D<T>) -> Field2D<T> {
    let peak = s.max_abs();
    if peak == T::zero() {
        return Field2D::zeros(*s.grid());
    }
    s.map(|v| v.abs() / peak)
}
