//! Stop-and-go forward model and the planning formulas used to choose
//! migration parameters.
//!
//! Each trace is recorded with the platform stationary at `(x_i, 0)`; a point
//! reflector at `(x_k, z_k)` returns the transmitted pulse after the two-way
//! delay `2 R / c`, attenuated by spherical spreading `1 / R`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::record::{SasRecord, Sampling};
use crate::scalar::Real;
use crate::scene::{PulseSpec, Scatterer};

/// Two-way travel time between `(x, z)` and `(x0, z0)`.
pub fn travel_time(x: f64, z: f64, x0: f64, z0: f64, c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid("c", format!("need c > 0, got {c}")));
    }
    Ok(2.0 / c * (x - x0).hypot(z - z0))
}

/// Synthesizes `data[i][n] = sum_k a_k p(t_n - tau_ik) / R_ik`.
pub fn synthesize_sas<T: Real>(
    scatterers: &[Scatterer],
    sampling: Sampling,
    pulse: &PulseSpec,
) -> Result<SasRecord<T>> {
    sampling.validate()?;
    pulse.validate()?;
    for s in scatterers {
        s.validate()?;
    }
    if sampling.dt >= 0.5 / pulse.center_frequency {
        return Err(Error::Config(format!(
            "sample period {} s violates Nyquist for carrier {} Hz (need dt < {})",
            sampling.dt,
            pulse.center_frequency,
            0.5 / pulse.center_frequency
        )));
    }
    let mut record = SasRecord::<T>::zeros(sampling)?;
    let c = sampling.c;
    record
        .data_mut()
        .par_chunks_mut(sampling.n_samples)
        .enumerate()
        .for_each(|(i, trace)| {
            let xi = i as f64 * sampling.dx_track;
            for (n, out) in trace.iter_mut().enumerate() {
                let t = sampling.t0 + n as f64 * sampling.dt;
                let mut acc = 0.0;
                for s in scatterers {
                    let range = (xi - s.x).hypot(s.z);
                    let tau = 2.0 * range / c;
                    acc += s.amplitude * pulse.at(t - tau) / range;
                }
                *out = T::lit(acc);
            }
        });
    Ok(record)
}

/// Main-lobe (3 dB) beam width `alpha_w * c / (f * D)` in radians.
pub fn beam_width(f: f64, aperture: f64, c: f64, alpha_w: f64) -> Result<f64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::invalid("f", "must be positive"));
    }
    if !(aperture.is_finite() && aperture > 0.0) {
        return Err(Error::invalid("D", "must be positive"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid("c", "must be positive"));
    }
    if !(alpha_w.is_finite() && alpha_w >= 0.0) {
        return Err(Error::invalid("alpha_w", "must be non-negative"));
    }
    Ok(alpha_w * c / (f * aperture))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionVariant {
    /// `kz = k sqrt(1 - s^2)`, `s = kx / k`.
    Exact,
    /// `kz = k (1 - s^2 / 2)`.
    Taylor15,
    /// `kz = k (1 - alpha s^2 / (1 - beta s^2))`.
    Rational { alpha: f64, beta: f64 },
}

/// Vertical wavenumber under the chosen approximation of
/// `omega^2 = (c^2/4)(kx^2 + kz^2)`.
pub fn kz_dispersion(k: f64, kx: f64, variant: DispersionVariant) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    if !kx.is_finite() {
        return Err(Error::invalid("kx", "must be finite"));
    }
    let s = kx / k;
    match variant {
        DispersionVariant::Exact => {
            if kx.abs() > k {
                return Err(Error::Evanescent { k, kx });
            }
            Ok(k * (1.0 - s * s).sqrt())
        }
        DispersionVariant::Taylor15 => Ok(k * (1.0 - 0.5 * s * s)),
        DispersionVariant::Rational { alpha, beta } => {
            let denom = 1.0 - beta * s * s;
            if denom == 0.0 {
                return Err(Error::DispersionPole { s });
            }
            Ok(k * (1.0 - alpha * s * s / denom))
        }
    }
}
