//! One-way wave equation migration.
//!
//! Both schemes run the record backwards in time. Time is normalized so that
//! one step advances the field by one depth row: a physical step of
//! `2 dz / c_ref` maps to a normalized step `dt = dz`. Each step
//!
//! 1. shifts the transported field (`v` for the 15 degree scheme, `F` for
//!    the wide-angle scheme) one row deeper and injects the time derivative
//!    of the reversed traces at row 0, then
//! 2. applies implicit cross-range solves `(I + gamma H)` on the rows that
//!    have been reached, up to the `M` focusing rows.
//!
//! Rows deeper than `M` never receive solves; their `u` values follow the
//! shift, so a pixel below `M` keeps the value focused at row `M`.
//!
//! In a layered medium the rows stay one step apart in travel time, so their
//! physical thickness is `dz * c(z) / c_ref` and the solve coefficient of
//! each row uses its own thickness. The image is resampled from those row
//! depths onto the requested output grid.

pub mod alg1;
mod ring;
pub mod wide;

use log::warn;

use crate::config::{AngleVariant, MigrationConfig, SoundSpeed};
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::record::SasRecord;
use crate::scalar::Real;
use crate::tridiag::TridiagSystem;

pub use alg1::{alg1_step, migrate_alg1, MigrationState};
pub use wide::{alg2_step, migrate_alg2, WideState};

use ring::DepthRing;

/// Below this many samples per step the row solves run on the calling thread.
const PAR_MIN_WORK: usize = 1 << 14;

fn use_parallel(active_rows: usize, nx: usize) -> bool {
    active_rows > 1 && active_rows * nx >= PAR_MIN_WORK && rayon::current_num_threads() > 1
}

/// Boundary data for every step, in the order the steps consume it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySequence<T> {
    nx: usize,
    dz: f64,
    data: Vec<T>,
}

impl<T: Real> BoundarySequence<T> {
    /// Wraps `steps * nx` values, step-major.
    pub fn from_rows(nx: usize, dz: f64, data: Vec<T>) -> Result<Self> {
        if nx == 0 || !data.len().is_multiple_of(nx) {
            return Err(Error::invalid("data", "length must be a positive multiple of nx"));
        }
        if !(dz.is_finite() && dz > 0.0) {
            return Err(Error::invalid("dz", "must be positive"));
        }
        Ok(BoundarySequence { nx, dz, data })
    }

    /// Number of steps `N_t`.
    pub fn len(&self) -> usize {
        self.data.len() / self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Normalized time step (equal to the depth step).
    pub fn dt(&self) -> f64 {
        self.dz
    }

    pub fn step(&self, n: usize) -> &[T] {
        &self.data[n * self.nx..(n + 1) * self.nx]
    }

    /// `sum_n sum_i |b^n_i|^2 dx dt`.
    pub fn injected_energy(&self, dx: f64) -> f64 {
        self.data.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() * dx * self.dz
    }
}

/// Time-reversed, resampled boundary derivative.
///
/// With `dtp = 2 dz / c_ref`, `N_t = ceil((t_end + dt) / dtp)` and
/// `T = N_t dtp`, the reversed trace is `S_rev^n = S(T - n dtp)` (linear
/// interpolation, zero outside the record), and step `n = 1..N_t` receives
/// `b^n = (S_rev^n - S_rev^{n-1}) / dz`. Summing `b dz` over the steps
/// recovers the trace at `t = 0`.
pub fn prepare_boundary<T: Real>(
    record: &SasRecord<T>,
    config: &MigrationConfig,
) -> Result<BoundarySequence<T>> {
    record.sampling().validate()?;
    config.sound_speed.validate()?;
    if !(config.dz.is_finite() && config.dz > 0.0) {
        return Err(Error::invalid("dz", format!("need dz > 0, got {}", config.dz)));
    }
    let dz = config.dz;
    let dtp = 2.0 * dz / config.sound_speed.reference();
    let horizon = record.sampling().t_end() + record.dt;
    let n_t = (horizon / dtp).ceil();
    if !(n_t >= 2.0) {
        return Err(Error::invalid(
            "record",
            format!("record spans {n_t} migration steps of {dtp:e} s, need at least 2"),
        ));
    }
    let n_t = n_t as usize;
    let nx = record.n_traces;
    // sample index of S_rev^n is p0 - n * rate
    let p0 = (n_t as f64 * dtp - record.t0) / record.dt;
    let rate = dtp / record.dt;
    let inv_dz = T::lit(1.0 / dz);
    let mut data = vec![T::zero(); n_t * nx];
    for i in 0..nx {
        let trace = record.trace(i);
        let mut prev = crate::record::interpolate_trace(trace, p0);
        for n in 1..=n_t {
            let cur = crate::record::interpolate_trace(trace, p0 - n as f64 * rate);
            data[(n - 1) * nx + i] = (cur - prev) * inv_dz;
            prev = cur;
        }
    }
    BoundarySequence::from_rows(nx, dz, data)
}

/// Depth and thickness of each native row.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RowLayout {
    dx: f64,
    dz: f64,
    depths: Vec<f64>,
    thickness: Vec<f64>,
    uniform: bool,
}

impl RowLayout {
    pub fn uniform(rows: usize, dx: f64, dz: f64) -> Self {
        RowLayout {
            dx,
            dz,
            depths: (0..rows).map(|j| j as f64 * dz).collect(),
            thickness: vec![dz; rows],
            uniform: true,
        }
    }

    /// Enough rows to reach `z_max`, plus one, and at least two.
    pub fn covering(speed: &SoundSpeed, dx: f64, dz: f64, z_max: f64) -> Self {
        if speed.is_constant() {
            let reach = (z_max / dz - 1e-9).ceil().max(0.0) as usize;
            return RowLayout::uniform((reach + 2).max(2), dx, dz);
        }
        let c_ref = speed.reference();
        let mut depths = vec![0.0];
        let mut thickness = Vec::new();
        loop {
            let z = *depths.last().unwrap();
            let h = dz * speed.at(z + 1e-9 * dz) / c_ref;
            thickness.push(h);
            if z >= z_max - 1e-9 * dz && depths.len() >= 2 {
                break;
            }
            depths.push(z + h);
        }
        // one row past the deepest output depth
        let z = *depths.last().unwrap();
        depths.push(z + thickness[thickness.len() - 1]);
        thickness.push(dz * speed.at(*depths.last().unwrap() + 1e-9 * dz) / c_ref);
        RowLayout {
            dx,
            dz,
            depths,
            thickness,
            uniform: false,
        }
    }

    pub fn rows(&self) -> usize {
        self.depths.len()
    }

    /// `coef * (h_j / dx)^2` for every row.
    pub fn gammas(&self, coef: f64) -> Vec<f64> {
        self.thickness
            .iter()
            .map(|h| {
                let ratio = h / self.dx;
                coef * ratio * ratio
            })
            .collect()
    }

    /// Fractional row index of depth `z`, or `None` outside the rows.
    fn row_position(&self, z: f64) -> Option<f64> {
        let last = self.rows() - 1;
        let pos = if self.uniform {
            z / self.dz
        } else {
            if z < self.depths[0] || z > self.depths[last] {
                return snap_in_range(
                    if z < self.depths[0] { -1.0 } else { last as f64 + 1.0 },
                    last,
                );
            }
            let k = self.depths.partition_point(|&d| d <= z).clamp(1, last);
            let (a, b) = (self.depths[k - 1], self.depths[k]);
            (k - 1) as f64 + (z - a) / (b - a)
        };
        snap_in_range(pos, last)
    }
}

/// Rounds positions within `1e-9` of an integer, rejects those outside
/// `[0, last]`.
fn snap_in_range(pos: f64, last: usize) -> Option<f64> {
    let r = pos.round();
    let pos = if (pos - r).abs() < 1e-9 { r } else { pos };
    (pos >= 0.0 && pos <= last as f64).then_some(pos)
}

/// Pre-factored solves for each row, shared between rows of equal `gamma`.
#[derive(Debug, Clone)]
pub(crate) struct RowSystems<T> {
    index: Vec<usize>,
    systems: Vec<TridiagSystem<T>>,
}

impl<T: Real> RowSystems<T> {
    pub fn new(nx: usize, gammas: &[f64]) -> Result<Self> {
        let mut keys: Vec<u64> = Vec::new();
        let mut systems = Vec::new();
        let mut index = Vec::with_capacity(gammas.len());
        for &g in gammas {
            let k = match keys.iter().position(|&b| b == g.to_bits()) {
                Some(k) => k,
                None => {
                    keys.push(g.to_bits());
                    systems.push(TridiagSystem::new(nx, T::lit(g))?);
                    keys.len() - 1
                }
            };
            index.push(k);
        }
        Ok(RowSystems { index, systems })
    }

    #[inline]
    pub fn get(&self, row: usize) -> &TridiagSystem<T> {
        &self.systems[self.index[row]]
    }
}

/// State shared by both schemes: the image `u`, split into the focusing rows
/// `0..=m` and the shifted rows below them.
#[derive(Debug, Clone)]
pub(crate) struct Frame<T> {
    nx: usize,
    m: usize,
    step: usize,
    dt: T,
    layout: RowLayout,
    u_focus: Vec<T>,
    u_frozen: DepthRing<T>,
}

impl<T: Real> Frame<T> {
    fn new(nx: usize, layout: RowLayout, m: usize) -> Result<Self> {
        if nx < 2 {
            return Err(Error::invalid("nx", format!("need at least 2 traces, got {nx}")));
        }
        let rows = layout.rows();
        if rows < 2 {
            return Err(Error::invalid("rows", format!("need at least 2 rows, got {rows}")));
        }
        if m == 0 || m >= rows {
            return Err(Error::invalid(
                "focusing_steps",
                format!("need 1 <= M <= {}, got {m}", rows - 1),
            ));
        }
        Ok(Frame {
            nx,
            m,
            step: 0,
            dt: T::lit(layout.dz),
            u_focus: vec![T::zero(); (m + 1) * nx],
            u_frozen: DepthRing::zeros(nx, rows - m - 1),
            layout,
        })
    }

    fn rows(&self) -> usize {
        self.layout.rows()
    }

    /// Rows `1..=active` receive solves in the current step.
    fn active(&self) -> usize {
        self.step.min(self.m)
    }

    /// Moves the frozen rows one row deeper; row `m + 1` takes the value of
    /// row `m` before this step's solves.
    fn advance_frozen(&mut self) {
        if self.u_frozen.rows() > 0 {
            let src = &self.u_focus[self.m * self.nx..];
            self.u_frozen.push_front().copy_from_slice(src);
        }
    }

    fn u_row(&self, j: usize) -> &[T] {
        if j <= self.m {
            &self.u_focus[j * self.nx..(j + 1) * self.nx]
        } else {
            self.u_frozen.row(j - self.m - 1)
        }
    }

    fn u_values(&self) -> Vec<T> {
        let mut out = self.u_focus.clone();
        out.extend(self.u_frozen.to_vec());
        out
    }

    fn native_grid(&self) -> Grid2D {
        Grid2D {
            nx: self.nx,
            nz: self.rows(),
            dx: self.layout.dx,
            dz: self.layout.dz,
            x0: 0.0,
            z0: 0.0,
        }
    }

    /// Wraps row-major values without the finiteness check, so a state can
    /// be inspected after a failed step.
    fn native_field(&self, values: Vec<T>) -> Field2D<T> {
        let nx = self.nx;
        Field2D::from_fn(self.native_grid(), |i, j| values[i + j * nx])
    }

    /// `sum |D_x u|^2 dx dz` over all rows.
    fn gradient_energy(&self) -> f64 {
        let dx = self.layout.dx;
        let mut acc = 0.0;
        for j in 0..self.rows() {
            let row = self.u_row(j);
            for w in row.windows(2) {
                acc += ((w[1] - w[0]).as_f64() / dx).powi(2);
            }
        }
        acc * dx * self.layout.dz
    }

    fn check_boundary(&self, boundary: &[T]) -> Result<()> {
        if boundary.len() != self.nx {
            return Err(Error::invalid(
                "boundary",
                format!("length {} != nx = {}", boundary.len(), self.nx),
            ));
        }
        if boundary.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: self.step + 1,
                row: 0,
            });
        }
        Ok(())
    }

    /// Resamples `u` onto `grid`; points outside the native rows or the
    /// track are zero.
    fn extract(&self, grid: &Grid2D) -> Field2D<T> {
        let u = self.u_values();
        let nx = self.nx;
        let rows = self.rows();
        let dx = self.layout.dx;
        let xs: Vec<Option<f64>> = (0..grid.nx)
            .map(|i| snap_in_range(grid.x(i) / dx, nx - 1))
            .collect();
        let zs: Vec<Option<f64>> = (0..grid.nz)
            .map(|j| self.layout.row_position(grid.z(j)))
            .collect();
        let split = |p: f64, last: usize| {
            let k = (p.floor() as usize).min(last - 1);
            (k, T::lit(p - k as f64))
        };
        Field2D::from_fn(*grid, |i, j| match (xs[i], zs[j]) {
            (Some(px), Some(pz)) => {
                let (a, wx) = split(px, nx - 1);
                let (b, wz) = split(pz, rows - 1);
                let at = |ii: usize, jj: usize| u[ii + jj * nx];
                let one = T::one();
                let top = at(a, b) * (one - wx) + at(a + 1, b) * wx;
                let bottom = at(a, b + 1) * (one - wx) + at(a + 1, b + 1) * wx;
                top * (one - wz) + bottom * wz
            }
            _ => T::zero(),
        })
    }
}

/// Everything a driver needs before stepping.
pub(crate) struct Plan<T> {
    boundary: BoundarySequence<T>,
    layout: RowLayout,
    focusing: usize,
    nx: usize,
}

pub(crate) fn plan<T: Real>(record: &SasRecord<T>, config: &MigrationConfig) -> Result<Plan<T>> {
    config.validate()?;
    if record.n_traces < 2 {
        return Err(Error::invalid(
            "n_traces",
            format!("need at least 2 traces, got {}", record.n_traces),
        ));
    }
    let boundary = prepare_boundary(record, config)?;
    let g = &config.output_grid;
    let z_max = g.z(g.nz - 1).max(0.0);
    let layout = RowLayout::covering(&config.sound_speed, record.dx_track, config.dz, z_max);
    let focusing = config.focusing_steps.min(layout.rows() - 1);
    if boundary.len() < focusing {
        warn!(
            "record gives only {} steps but M = {focusing}; rows below {} are never focused",
            boundary.len(),
            boundary.len()
        );
    }
    Ok(Plan {
        boundary,
        layout,
        focusing,
        nx: record.n_traces,
    })
}

/// Migrates with the scheme matching `config.variant`: the two-step scheme
/// for the 15 degree equation, the three-step scheme otherwise.
pub fn migrate<T: Real>(record: &SasRecord<T>, config: &MigrationConfig) -> Result<Field2D<T>> {
    match config.variant {
        AngleVariant::Deg15 => migrate_alg1(record, config),
        _ => migrate_alg2(record, config),
    }
}
