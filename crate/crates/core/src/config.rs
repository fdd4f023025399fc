//! Migration and enhancement settings.

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Angular accuracy of the one-way equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleVariant {
    /// Parabolic (15 degree) equation, integrated by the two-step scheme.
    Deg15,
    /// Rational approximation with `(alpha, beta) = (0.5, 0.25)`.
    Deg45,
    /// Rational approximation with `(alpha, beta) = (0.478, 0.376)`.
    Deg65,
    Custom { alpha: f64, beta: f64 },
}

impl AngleVariant {
    /// `(alpha, beta)` of `kz = k(1 - alpha s^2 / (1 - beta s^2))`.
    pub fn coefficients(&self) -> (f64, f64) {
        match *self {
            AngleVariant::Deg15 => (0.5, 0.0),
            AngleVariant::Deg45 => (0.5, 0.25),
            AngleVariant::Deg65 => (0.478, 0.376),
            AngleVariant::Custom { alpha, beta } => (alpha, beta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (alpha, beta) = self.coefficients();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("need alpha > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid("beta", format!("need beta >= 0, got {beta}")));
        }
        Ok(())
    }
}

/// Interface of a horizontal layer: speed `c` applies from depth `z_top`
/// down to the next layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub z_top: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SoundSpeed {
    Constant(f64),
    /// Sorted by `z_top`; the first layer starts at or above `z = 0`.
    Layered(Vec<Layer>),
}

impl SoundSpeed {
    pub fn validate(&self) -> Result<()> {
        match self {
            SoundSpeed::Constant(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid("c", format!("need c > 0, got {c}")));
                }
            }
            SoundSpeed::Layered(layers) => {
                let first = layers
                    .first()
                    .ok_or_else(|| Error::invalid("layers", "empty layer list"))?;
                if first.z_top > 0.0 {
                    return Err(Error::invalid(
                        "layers",
                        format!("first layer must start at z <= 0, got {}", first.z_top),
                    ));
                }
                for (k, l) in layers.iter().enumerate() {
                    if !(l.c.is_finite() && l.c > 0.0) {
                        return Err(Error::invalid("layers", format!("layer {k}: speed {} <= 0", l.c)));
                    }
                    if !l.z_top.is_finite() {
                        return Err(Error::invalid("layers", format!("layer {k}: non-finite z_top")));
                    }
                    if k > 0 && l.z_top <= layers[k - 1].z_top {
                        return Err(Error::invalid("layers", format!("layer {k}: z_top not increasing")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, z: f64) -> f64 {
        match self {
            SoundSpeed::Constant(c) => *c,
            SoundSpeed::Layered(layers) => layers
                .iter()
                .take_while(|l| l.z_top <= z)
                .last()
                .unwrap_or(&layers[0])
                .c,
        }
    }

    /// Speed at the sonar path; fixes the time normalization.
    pub fn reference(&self) -> f64 {
        self.at(0.0)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            SoundSpeed::Constant(_) => true,
            SoundSpeed::Layered(layers) => layers.iter().all(|l| l.c == layers[0].c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MigrationConfig {
    pub variant: AngleVariant,
    /// Number of leading depth rows that receive the cross-range solve (`M`).
    pub focusing_steps: usize,
    pub sound_speed: SoundSpeed,
    /// Range increment per step at the reference speed.
    pub dz: f64,
    pub output_grid: Grid2D,
}

impl MigrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        self.sound_speed.validate()?;
        self.output_grid.validate()?;
        if !(self.dz.is_finite() && self.dz > 0.0) {
            return Err(Error::invalid("dz", format!("need dz > 0, got {}", self.dz)));
        }
        if self.focusing_steps == 0 {
            return Err(Error::invalid("focusing_steps", "M must be positive"));
        }
        if self.focusing_steps > self.output_grid.nz {
            return Err(Error::Config(format!(
                "focusing steps M = {} exceed output grid depth nz = {}",
                self.focusing_steps, self.output_grid.nz
            )));
        }
        Ok(())
    }
}

/// `M = ceil(tan(theta/2) * z_max / dx)`, clamped to `[1, nz]`: enough
/// cross-range solves to span the beam cone at the deepest row.
pub fn beam_focusing_steps(beam_width: f64, z_max: f64, dx: f64, nz: usize) -> usize {
    let m = ((0.5 * beam_width).tan() * z_max / dx).ceil();
    if !m.is_finite() || m < 1.0 {
        1
    } else {
        (m as usize).clamp(1, nz.max(1))
    }
}

/// Weight `phi'` of the restoration energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiVariant {
    /// `phi(q) = q`: quadratic smoothing.
    Gaussian,
    /// `phi(q) = 2 sqrt(q)`: total variation.
    Bv,
    /// BV weight below `delta` and above 1, quadratic in between.
    Hybrid { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    pub beta: f64,
    pub variant: PhiVariant,
    /// Floor under `|grad S|^2` inside `1/sqrt(.)`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub linear_tol: f64,
    pub fixedpoint_tol: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            beta: 0.1,
            variant: PhiVariant::Bv,
            epsilon: 1e-8,
            max_iters: 500,
            linear_tol: 1e-10,
            fixedpoint_tol: 1e-6,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid("beta", format!("need beta >= 0, got {}", self.beta)));
        }
        if let PhiVariant::Hybrid { delta } = self.variant {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::invalid("delta", format!("need 0 < delta < 1, got {delta}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::invalid("linear_tol", "must be positive"));
        }
        if !(self.fixedpoint_tol > 0.0) {
            return Err(Error::invalid("fixedpoint_tol", "must be positive"));
        }
        Ok(())
    }
}
