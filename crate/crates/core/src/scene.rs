//! Forward-model inputs: point reflectors and the transmitted pulse.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    /// Depth below the sonar path; strictly positive.
    pub z: f64,
    pub amplitude: f64,
}

impl Scatterer {
    pub fn new(x: f64, z: f64, amplitude: f64) -> Result<Self> {
        let s = Scatterer { x, z, amplitude };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() {
            return Err(Error::invalid("x", "must be finite"));
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return Err(Error::invalid(
                "z",
                format!("scatterer must lie below the path (z > 0), got {}", self.z),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        Ok(())
    }
}

pub type ScattererList = Vec<Scatterer>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// Full width at half maximum equals the envelope duration.
    Gaussian,
    /// `0.5*(1 + cos(2*pi*t/duration))` on `|t| < duration/2`.
    RaisedCosine,
}

/// Carrier-modulated transmit pulse centred on `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub center_frequency: f64,
    pub envelope: Envelope,
    pub envelope_duration: f64,
}

impl PulseSpec {
    pub fn new(center_frequency: f64, envelope: Envelope, envelope_duration: f64) -> Result<Self> {
        let p = PulseSpec {
            center_frequency,
            envelope,
            envelope_duration,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency.is_finite() && self.center_frequency > 0.0) {
            return Err(Error::invalid("center_frequency", "must be positive"));
        }
        if !(self.envelope_duration.is_finite() && self.envelope_duration > 0.0) {
            return Err(Error::invalid("envelope_duration", "must be positive"));
        }
        Ok(())
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian => {
                let sigma = self.envelope_duration / (2.0 * (2.0 * 2f64.ln()).sqrt());
                (-0.5 * (t / sigma).powi(2)).exp()
            }
            Envelope::RaisedCosine => {
                if t.abs() < 0.5 * self.envelope_duration {
                    0.5 * (1.0 + (2.0 * PI * t / self.envelope_duration).cos())
                } else {
                    0.0
                }
            }
        }
    }

    /// `p(t) = envelope(t) * cos(2*pi*f*t)`.
    pub fn at(&self, t: f64) -> f64 {
        self.envelope_at(t) * (2.0 * PI * self.center_frequency * t).cos()
    }
}
