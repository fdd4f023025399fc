//! Echo data recorded along the sonar path.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sampled `SAS(x, t)`: `data[i*n_samples + n]` is the echo at trace
/// position `x_i = i*dx_track` and time `t0 + n*dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SasRecord<T> {
    pub n_traces: usize,
    pub n_samples: usize,
    pub dt: f64,
    pub dx_track: f64,
    pub t0: f64,
    pub c: f64,
    data: Vec<T>,
}

/// Acquisition metadata without samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_traces: usize,
    pub n_samples: usize,
    pub dt: f64,
    pub dx_track: f64,
    pub t0: f64,
    pub c: f64,
}

impl Sampling {
    pub fn validate(&self) -> Result<()> {
        if self.n_traces == 0 {
            return Err(Error::invalid("n_traces", "must be positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("need dt > 0, got {}", self.dt)));
        }
        if !(self.dx_track.is_finite() && self.dx_track > 0.0) {
            return Err(Error::invalid(
                "dx_track",
                format!("need dx_track > 0, got {}", self.dx_track),
            ));
        }
        if !self.t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid("c", format!("need c > 0, got {}", self.c)));
        }
        Ok(())
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.n_samples - 1) as f64 * self.dt
    }
}

impl<T: Real> SasRecord<T> {
    pub fn zeros(sampling: Sampling) -> Result<Self> {
        sampling.validate()?;
        Ok(Self::with_data(
            sampling,
            vec![T::zero(); sampling.n_traces * sampling.n_samples],
        ))
    }

    /// Wraps trace-major samples after validating metadata and values.
    pub fn from_data(sampling: Sampling, data: Vec<T>) -> Result<Self> {
        sampling.validate()?;
        let expected = sampling.n_traces * sampling.n_samples;
        if data.len() != expected {
            return Err(Error::invalid(
                "data",
                format!("length {} != n_traces*n_samples = {expected}", data.len()),
            ));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "data",
                format!(
                    "non-finite sample in trace {} at index {}",
                    k / sampling.n_samples,
                    k % sampling.n_samples
                ),
            ));
        }
        Ok(Self::with_data(sampling, data))
    }

    fn with_data(s: Sampling, data: Vec<T>) -> Self {
        SasRecord {
            n_traces: s.n_traces,
            n_samples: s.n_samples,
            dt: s.dt,
            dx_track: s.dx_track,
            t0: s.t0,
            c: s.c,
            data,
        }
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            n_traces: self.n_traces,
            n_samples: self.n_samples,
            dt: self.dt,
            dx_track: self.dx_track,
            t0: self.t0,
            c: self.c,
        }
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn trace(&self, i: usize) -> &[T] {
        &self.data[i * self.n_samples..(i + 1) * self.n_samples]
    }

    #[inline]
    pub fn trace_mut(&mut self, i: usize) -> &mut [T] {
        let n = self.n_samples;
        &mut self.data[i * n..(i + 1) * n]
    }

    #[inline]
    pub fn trace_x(&self, i: usize) -> f64 {
        i as f64 * self.dx_track
    }

    /// Linearly interpolated sample of trace `i` at absolute time `t`.
    /// Samples outside the record are zero.
    pub fn sample_at(&self, i: usize, t: f64) -> T {
        interpolate_trace(self.trace(i), (t - self.t0) / self.dt)
    }

    pub fn cast<U: Real>(&self) -> SasRecord<U> {
        SasRecord::with_data(
            self.sampling(),
            self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        )
    }
}

/// Linear interpolation at fractional sample index `pos`, zero-extended on
/// both sides.
#[inline]
pub(crate) fn interpolate_trace<T: Real>(trace: &[T], pos: f64) -> T {
    let n = trace.len() as f64;
    if !(pos > -1.0 && pos < n) {
        return T::zero();
    }
    let base = pos.floor();
    let frac = T::lit(pos - base);
    let k = base as i64;
    let at = |k: i64| -> T {
        if k < 0 || k as usize >= trace.len() {
            T::zero()
        } else {
            trace[k as usize]
        }
    };
    let a = at(k);
    if frac == T::zero() {
        return a;
    }
    a + (at(k + 1) - a) * frac
}
