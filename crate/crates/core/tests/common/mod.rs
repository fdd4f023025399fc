#![allow(dead_code)]

use sas_core::forward::synthesize_sas;
use sas_core::{
    AngleVariant, Envelope, Field, Grid2D, MigrationConfig, PulseSpec, Record, Sampling,
    Scatterer, SoundSpeed,
};

pub const C: f64 = 1500.0;
pub const FREQ: f64 = 12e3;

pub fn sampling(n_traces: usize, n_samples: usize) -> Sampling {
    Sampling {
        n_traces,
        n_samples,
        dt: 1e-5,
        dx_track: 0.02,
        t0: 0.0,
        c: C,
    }
}

pub fn pulse() -> PulseSpec {
    PulseSpec::new(FREQ, Envelope::Gaussian, 2.0 / FREQ).unwrap()
}

pub fn record(scatterers: &[Scatterer], n_traces: usize, n_samples: usize) -> Record {
    synthesize_sas(scatterers, sampling(n_traces, n_samples), &pulse()).unwrap()
}

/// `nx` columns on the traces, `nz` rows of `c dt / 2` from the path.
pub fn image_grid(nx: usize, nz: usize) -> Grid2D {
    Grid2D::new(nx, nz, 0.02, C * 1e-5 / 2.0, 0.0, 0.0).unwrap()
}

pub fn config(variant: AngleVariant, grid: Grid2D) -> MigrationConfig {
    MigrationConfig {
        variant,
        focusing_steps: grid.nz,
        sound_speed: SoundSpeed::Constant(C),
        dz: grid.dz,
        output_grid: grid,
    }
}

pub fn three_scatterers() -> Vec<Scatterer> {
    vec![
        Scatterer::new(0.8, 0.35, 1.0).unwrap(),
        Scatterer::new(1.3, 0.6, 1.0).unwrap(),
        Scatterer::new(1.9, 0.8, 1.0).unwrap(),
    ]
}

/// True if `|img|` at `(i, j)` is at least every 8-neighbour.
pub fn is_local_max(img: &Field, i: usize, j: usize) -> bool {
    let g = img.grid();
    let v = img.get(i, j).abs();
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a >= g.nx as i64 || b >= g.nz as i64 {
                continue;
            }
            if img.get(a as usize, b as usize).abs() > v {
                return false;
            }
        }
    }
    v > 0.0
}

/// Local maxima of `|img|` within one pixel of `(i, j)`, strongest first.
pub fn local_maxima_near(img: &Field, i: usize, j: usize) -> Vec<(usize, usize)> {
    let g = img.grid();
    let mut found = Vec::new();
    for b in j.saturating_sub(1)..=(j + 1).min(g.nz - 1) {
        for a in i.saturating_sub(1)..=(i + 1).min(g.nx - 1) {
            if is_local_max(img, a, b) {
                found.push((a, b));
            }
        }
    }
    found.sort_by(|p, q| img.get(q.0, q.1).abs().total_cmp(&img.get(p.0, p.1).abs()));
    found
}

pub fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
