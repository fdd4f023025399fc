//! Two-step splitting for the 15 degree equation.
//!
//! Per step: `v` is shifted one row deeper with the boundary at row 0, then
//! every active row solves
//!
//! ```text
//! u_new = (I + gamma H)^{-1} (u + dt v),   v = (u_new - u) / dt,
//! ```
//!
//! with `gamma = alpha (dz / dx)^2`, `alpha = 1/2`.

use rayon::prelude::*;

use super::{plan, use_parallel, DepthRing, Frame, RowLayout, RowSystems};
use crate::config::{AngleVariant, MigrationConfig};
use crate::error::{Error, Result};
use crate::grid::Field2D;
use crate::record::SasRecord;
use crate::scalar::Real;
use crate::tridiag::TridiagSystem;

/// Coefficient of the parabolic approximation.
const ALPHA: f64 = 0.5;

/// `(u, v)` of the 15 degree scheme on the native rows.
#[derive(Debug, Clone)]
pub struct MigrationState<T> {
    frame: Frame<T>,
    v: DepthRing<T>,
    systems: RowSystems<T>,
}

impl<T: Real> MigrationState<T> {
    /// Zero state on `rows` uniform rows, focusing the first `m` of them.
    pub fn new(nx: usize, rows: usize, m: usize, dx: f64, dz: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::invalid("dx", "must be positive"));
        }
        if !(dz.is_finite() && dz > 0.0) {
            return Err(Error::invalid("dz", "must be positive"));
        }
        Self::with_layout(nx, RowLayout::uniform(rows, dx, dz), m)
    }

    pub(crate) fn with_layout(nx: usize, layout: RowLayout, m: usize) -> Result<Self> {
        let gammas = layout.gammas(ALPHA);
        let systems = RowSystems::new(nx, &gammas[..=m.min(gammas.len() - 1)])?;
        let frame = Frame::new(nx, layout, m)?;
        let v = DepthRing::zeros(nx, frame.rows());
        Ok(MigrationState { frame, v, systems })
    }

    /// Steps taken so far.
    pub fn step_index(&self) -> usize {
        self.frame.step
    }

    pub fn focusing_steps(&self) -> usize {
        self.frame.m
    }

    pub fn u(&self) -> Field2D<T> {
        self.frame.native_field(self.frame.u_values())
    }

    pub fn v(&self) -> Field2D<T> {
        self.frame.native_field(self.v.to_vec())
    }

    /// `sum (|D_x u|^2 + |v|^2 / alpha) dx dz`.
    pub fn energy(&self) -> f64 {
        let l = &self.frame.layout;
        let v2: f64 = self.v.to_vec().iter().map(|v| v.as_f64().powi(2)).sum();
        self.frame.gradient_energy() + v2 / ALPHA * l.dx * l.dz
    }
}

#[inline]
fn update_row<T: Real>(sys: &TridiagSystem<T>, dt: T, u: &mut [T], v: &mut [T], w: &mut [T]) -> bool {
    for ((w, &u), &v) in w.iter_mut().zip(u.iter()).zip(v.iter()) {
        *w = u + dt * v;
    }
    sys.solve_in_place(w);
    let mut ok = true;
    for ((u, v), &w) in u.iter_mut().zip(v.iter_mut()).zip(w.iter()) {
        *v = (w - *u) / dt;
        *u = w;
        ok &= v.is_finite();
    }
    ok
}

/// Advances `state` by one step with boundary values `boundary` (one per
/// trace).
pub fn alg1_step<T: Real>(state: &mut MigrationState<T>, boundary: &[T]) -> Result<()> {
    state.frame.check_boundary(boundary)?;
    let nx = state.frame.nx;
    let n = state.frame.step;
    let active = state.frame.active();
    let dt = state.frame.dt;

    state.frame.advance_frozen();
    state.v.push_front().copy_from_slice(boundary);

    let (v1, v2) = state.v.segments_mut(1, active + 1);
    let u = &mut state.frame.u_focus[nx..(active + 1) * nx];
    let systems = &state.systems;
    let bad = if use_parallel(active, nx) {
        v1.par_chunks_mut(nx)
            .chain(v2.par_chunks_mut(nx))
            .zip(u.par_chunks_mut(nx))
            .enumerate()
            .map_init(
                || vec![T::zero(); nx],
                |w, (k, (v, u))| (!update_row(systems.get(k + 1), dt, u, v, w)).then_some(k + 1),
            )
            .flatten()
            .min()
    } else {
        let mut w = vec![T::zero(); nx];
        v1.chunks_mut(nx)
            .chain(v2.chunks_mut(nx))
            .zip(u.chunks_mut(nx))
            .enumerate()
            .filter_map(|(k, (v, u))| {
                (!update_row(systems.get(k + 1), dt, u, v, &mut w)).then_some(k + 1)
            })
            .min()
    };
    state.frame.step += 1;
    match bad {
        Some(row) => Err(Error::NonFinite { step: n + 1, row }),
        None => Ok(()),
    }
}

/// Migrates `record` with the 15 degree scheme and resamples the final `u`
/// onto `config.output_grid`.
pub fn migrate_alg1<T: Real>(record: &SasRecord<T>, config: &MigrationConfig) -> Result<Field2D<T>> {
    if config.variant != AngleVariant::Deg15 {
        return Err(Error::Config(format!(
            "the two-step scheme integrates the 15 degree equation only, got {:?}",
            config.variant
        )));
    }
    let plan = plan(record, config)?;
    let mut state = MigrationState::with_layout(plan.nx, plan.layout, plan.focusing)?;
    for n in 0..plan.boundary.len() {
        alg1_step(&mut state, plan.boundary.step(n))?;
    }
    Ok(state.frame.extract(&config.output_grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tridiag::apply_h;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for r in k + 1..n {
                let f = a[r][k] / a[k][k];
                for c in k..n {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|c| a[k][c] * x[c]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    fn dense_operator(n: usize, gamma: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|r| {
                let mut e = vec![0.0; n];
                e[r] = 1.0;
                let he = apply_h(&e).unwrap();
                (0..n).map(|c| e[c] + gamma * he[c]).collect()
            })
            .collect()
    }

    fn random_state(rng: &mut ChaCha8Rng, nx: usize, rows: usize, m: usize, steps: usize) -> MigrationState<f64> {
        let mut st = MigrationState::new(nx, rows, m, 0.02, 0.015).unwrap();
        for _ in 0..steps {
            let b: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
            alg1_step(&mut st, &b).unwrap();
        }
        st
    }

    #[test]
    fn zero_state_zero_boundary_stays_zero() {
        let mut st = MigrationState::<f64>::new(5, 6, 5, 0.02, 0.01).unwrap();
        for _ in 0..10 {
            alg1_step(&mut st, &[0.0; 5]).unwrap();
        }
        assert!(st.u().values().iter().all(|&v| v == 0.0));
        assert!(st.v().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_only_injects_row_zero() {
        let mut st = MigrationState::<f64>::new(4, 3, 2, 0.02, 0.01).unwrap();
        alg1_step(&mut st, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let v = st.v();
        assert_eq!(v.row(0), &[0.0, 1.0, 0.0, 0.0]);
        assert!(v.row(1).iter().chain(v.row(2)).all(|&x| x == 0.0));
        assert!(st.u().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_step_matches_dense_oracle() {
        // 4 traces x 3 rows, all rows active
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = random_state(&mut rng, 4, 3, 2, 5);
        let (nx, dx, dz) = (4, 0.02, 0.015);
        let u0 = st.u();
        let v0 = st.v();
        let b: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
        alg1_step(&mut st, &b).unwrap();

        let gamma = 0.5 * (dz / dx) * (dz / dx);
        let a = dense_operator(nx, gamma);
        let vhat = |j: usize| if j == 0 { b.clone() } else { v0.row(j - 1).to_vec() };
        assert_eq!(st.v().row(0), &b[..]);
        for j in 1..3 {
            let rhs: Vec<f64> = (0..nx).map(|i| u0.get(i, j) + dz * vhat(j)[i]).collect();
            let un = dense_solve(a.clone(), rhs);
            for i in 0..nx {
                let vn = (un[i] - u0.get(i, j)) / dz;
                assert!((st.u().get(i, j) - un[i]).abs() < 1e-12);
                assert!((st.v().get(i, j) - vn).abs() < 1e-10);
            }
        }
        assert_eq!(st.u().row(0), &[0.0; 4]);
    }

    #[test]
    fn step_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (nx, rows, m) = (6, 7, 6);
        let bx: Vec<Vec<f64>> = (0..9).map(|_| (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let by: Vec<Vec<f64>> = (0..9).map(|_| (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let (a, b) = (1.7, -0.4);
        let run = |seq: &dyn Fn(usize) -> Vec<f64>| {
            let mut st = MigrationState::<f64>::new(nx, rows, m, 0.02, 0.01).unwrap();
            for n in 0..9 {
                alg1_step(&mut st, &seq(n)).unwrap();
            }
            (st.u(), st.v())
        };
        let (ux, vx) = run(&|n| bx[n].clone());
        let (uy, vy) = run(&|n| by[n].clone());
        let (uz, vz) = run(&|n| (0..nx).map(|i| a * bx[n][i] + b * by[n][i]).collect());
        for k in 0..nx * rows {
            let eu = a * ux.values()[k] + b * uy.values()[k];
            let ev = a * vx.values()[k] + b * vy.values()[k];
            assert!((uz.values()[k] - eu).abs() <= 1e-12 * (1.0 + eu.abs()));
            assert!((vz.values()[k] - ev).abs() <= 1e-12 * (1.0 + ev.abs()));
        }
    }

    #[test]
    fn rows_not_yet_reached_are_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut st = MigrationState::<f64>::new(5, 10, 8, 0.02, 0.01).unwrap();
        for n in 0..4 {
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let before = st.u();
            alg1_step(&mut st, &b).unwrap();
            let after = st.u();
            for j in n.min(8) + 1..=8 {
                assert_eq!(before.row(j), after.row(j), "row {j} at step {n}");
            }
        }
    }

    #[test]
    fn rows_below_m_follow_the_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 3;
        let mut st = MigrationState::<f64>::new(5, 8, m, 0.02, 0.01).unwrap();
        for _ in 0..12 {
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let before = st.u();
            alg1_step(&mut st, &b).unwrap();
            let after = st.u();
            for j in m + 1..8 {
                assert_eq!(after.row(j), before.row(j - 1));
            }
        }
    }

    #[test]
    fn energy_bounded_by_injected_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (nx, rows) = (16, 16);
        let mut st = MigrationState::<f64>::new(nx, rows, rows - 1, 0.02, 0.01).unwrap();
        let mut injected = 0.0;
        for _ in 0..40 {
            let b: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect();
            injected += b.iter().map(|v| v * v).sum::<f64>() * 0.02 * 0.01;
            alg1_step(&mut st, &b).unwrap();
            assert!(st.energy() <= (1.0 + 1e-9) * injected / ALPHA);
        }
    }

    #[test]
    fn nan_boundary_is_reported() {
        let mut st = MigrationState::<f64>::new(4, 3, 2, 0.02, 0.01).unwrap();
        let err = alg1_step(&mut st, &[0.0, f64::NAN, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 1, row: 0 }));
        assert!(alg1_step(&mut st, &[0.0; 3]).is_err());
    }

    #[test]
    fn wide_variant_rejected() {
        let rec = SasRecord::<f64>::zeros(crate::record::Sampling {
            n_traces: 4,
            n_samples: 8,
            dt: 1e-5,
            dx_track: 0.02,
            t0: 0.0,
            c: 1500.0,
        })
        .unwrap();
        let cfg = MigrationConfig {
            variant: AngleVariant::Deg45,
            focusing_steps: 2,
            sound_speed: crate::config::SoundSpeed::Constant(1500.0),
            dz: 0.0075,
            output_grid: crate::grid::Grid2D::new(4, 4, 0.02, 0.0075, 0.0, 0.0).unwrap(),
        };
        assert!(matches!(migrate_alg1(&rec, &cfg), Err(Error::Config(_))));
        let cfg = MigrationConfig { variant: AngleVariant::Deg15, ..cfg };
        let img = migrate_alg1(&rec, &cfg).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
    }
}
