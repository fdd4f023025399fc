//! Three-step splitting for the rational (wide-angle) equation
//! `kz = k (1 - alpha s^2 / (1 - beta s^2))`.
//!
//! With `F` the transported field and `vt = v - F`, each step
//!
//! ```text
//! shift F one row deeper,             F_0 = b - vt_0
//! uh = (I + alpha c^2 H)^{-1} (u + dt F),    F  = (uh - u) / dt
//! u  = (I + beta  c^2 H)^{-1} (uh + dt vt),  vt = (u - uh) / dt
//! ```
//!
//! where `c = dz / dx`. For `beta = 0` the last line is the identity, `vt`
//! stays zero and the scheme coincides with the 15 degree scheme.

use rayon::prelude::*;

use super::{plan, use_parallel, DepthRing, Frame, RowLayout, RowSystems};
use crate::config::{AngleVariant, MigrationConfig};
use crate::error::{Error, Result};
use crate::grid::Field2D;
use crate::record::SasRecord;
use crate::scalar::Real;
use crate::tridiag::TridiagSystem;

/// `(F, u, vt)` of the wide-angle scheme on the native rows.
#[derive(Debug, Clone)]
pub struct WideState<T> {
    frame: Frame<T>,
    f: DepthRing<T>,
    /// `vt` on the focusing rows; zero below them.
    vt: Vec<T>,
    alpha: f64,
    beta: f64,
    sys_alpha: RowSystems<T>,
    sys_beta: RowSystems<T>,
}

impl<T: Real> WideState<T> {
    pub fn new(
        nx: usize,
        rows: usize,
        m: usize,
        dx: f64,
        dz: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::invalid("dx", "must be positive"));
        }
        if !(dz.is_finite() && dz > 0.0) {
            return Err(Error::invalid("dz", "must be positive"));
        }
        Self::with_layout(nx, RowLayout::uniform(rows, dx, dz), m, alpha, beta)
    }

    pub(crate) fn with_layout(
        nx: usize,
        layout: RowLayout,
        m: usize,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        AngleVariant::Custom { alpha, beta }.validate()?;
        let frame = Frame::new(nx, layout, m)?;
        let ga = frame.layout.gammas(alpha);
        let gb = frame.layout.gammas(beta);
        let sys_alpha = RowSystems::new(nx, &ga[..=m])?;
        let sys_beta = RowSystems::new(nx, &gb[..=m])?;
        Ok(WideState {
            f: DepthRing::zeros(nx, frame.rows()),
            vt: vec![T::zero(); (m + 1) * nx],
            frame,
            alpha,
            beta,
            sys_alpha,
            sys_beta,
        })
    }

    pub fn step_index(&self) -> usize {
        self.frame.step
    }

    pub fn focusing_steps(&self) -> usize {
        self.frame.m
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn u(&self) -> Field2D<T> {
        self.frame.native_field(self.frame.u_values())
    }

    pub fn f(&self) -> Field2D<T> {
        self.frame.native_field(self.f.to_vec())
    }

    pub fn v_tilde(&self) -> Field2D<T> {
        let mut values = self.vt.clone();
        values.resize(self.frame.nx * self.frame.rows(), T::zero());
        self.frame.native_field(values)
    }

    /// `sum (|D_x u|^2 + |F|^2 / alpha + |vt|^2 / beta) dx dz`; the last
    /// term is dropped when `beta = 0`, where `vt` is identically zero.
    pub fn energy(&self) -> f64 {
        let l = &self.frame.layout;
        let sq = |v: &[T]| v.iter().map(|x| x.as_f64().powi(2)).sum::<f64>();
        let mut e = sq(&self.f.to_vec()) / self.alpha;
        if self.beta > 0.0 {
            e += sq(&self.vt) / self.beta;
        }
        self.frame.gradient_energy() + e * l.dx * l.dz
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn update_row<T: Real>(
    sa: &TridiagSystem<T>,
    sb: &TridiagSystem<T>,
    dt: T,
    u: &mut [T],
    f: &mut [T],
    vt: &mut [T],
    w: &mut [T],
) -> bool {
    for ((w, &u), &f) in w.iter_mut().zip(u.iter()).zip(f.iter()) {
        *w = u + dt * f;
    }
    sa.solve_in_place(w);
    for (((u, f), &vt), &w) in u.iter_mut().zip(f.iter_mut()).zip(vt.iter()).zip(w.iter()) {
        *f = (w - *u) / dt;
        *u = w + dt * vt;
    }
    sb.solve_in_place(u);
    let mut ok = true;
    for (((vt, &u), &w), &f) in vt.iter_mut().zip(u.iter()).zip(w.iter()).zip(f.iter()) {
        *vt = (u - w) / dt;
        ok &= vt.is_finite() && f.is_finite();
    }
    ok
}

/// Advances `state` by one step with boundary values `boundary`.
pub fn alg2_step<T: Real>(state: &mut WideState<T>, boundary: &[T]) -> Result<()> {
    state.frame.check_boundary(boundary)?;
    let nx = state.frame.nx;
    let n = state.frame.step;
    let active = state.frame.active();
    let dt = state.frame.dt;

    state.frame.advance_frozen();
    {
        let vt0 = &state.vt[..nx];
        for ((f, &b), &v) in state.f.push_front().iter_mut().zip(boundary).zip(vt0) {
            *f = b - v;
        }
    }

    let (f1, f2) = state.f.segments_mut(1, active + 1);
    let u = &mut state.frame.u_focus[nx..(active + 1) * nx];
    let vt = &mut state.vt[nx..(active + 1) * nx];
    let (sa, sb) = (&state.sys_alpha, &state.sys_beta);
    let bad = if use_parallel(active, nx) {
        f1.par_chunks_mut(nx)
            .chain(f2.par_chunks_mut(nx))
            .zip(u.par_chunks_mut(nx))
            .zip(vt.par_chunks_mut(nx))
            .enumerate()
            .map_init(
                || vec![T::zero(); nx],
                |w, (k, ((f, u), vt))| {
                    let j = k + 1;
                    (!update_row(sa.get(j), sb.get(j), dt, u, f, vt, w)).then_some(j)
                },
            )
            .flatten()
            .min()
    } else {
        let mut w = vec![T::zero(); nx];
        f1.chunks_mut(nx)
            .chain(f2.chunks_mut(nx))
            .zip(u.chunks_mut(nx))
            .zip(vt.chunks_mut(nx))
            .enumerate()
            .filter_map(|(k, ((f, u), vt))| {
                let j = k + 1;
                (!update_row(sa.get(j), sb.get(j), dt, u, f, vt, &mut w)).then_some(j)
            })
            .min()
    };
    state.frame.step += 1;
    match bad {
        Some(row) => Err(Error::NonFinite { step: n + 1, row }),
        None => Ok(()),
    }
}

/// Migrates `record` with the wide-angle scheme for `config.variant`
/// (45, 65 degree or custom coefficients).
pub fn migrate_alg2<T: Real>(record: &SasRecord<T>, config: &MigrationConfig) -> Result<Field2D<T>> {
    if config.variant == AngleVariant::Deg15 {
        return Err(Error::Config(
            "the 15 degree equation uses the two-step scheme; pick 45, 65 or custom".into(),
        ));
    }
    let (alpha, beta) = config.variant.coefficients();
    let plan = plan(record, config)?;
    let mut state = WideState::with_layout(plan.nx, plan.layout, plan.focusing, alpha, beta)?;
    for n in 0..plan.boundary.len() {
        alg2_step(&mut state, plan.boundary.step(n))?;
    }
    Ok(state.frame.extract(&config.output_grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::migrate::alg1::{alg1_step, MigrationState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn boundaries(seed: u64, nx: usize, steps: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..steps)
            .map(|_| (0..nx).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn run_wide(beta: f64, seq: &[Vec<f64>], rows: usize, m: usize) -> WideState<f64> {
        let nx = seq[0].len();
        let mut st = WideState::new(nx, rows, m, 0.02, 0.01, 0.5, beta).unwrap();
        for b in seq {
            alg2_step(&mut st, b).unwrap();
        }
        st
    }

    #[test]
    fn zero_in_zero_out() {
        let seq = vec![vec![0.0; 6]; 8];
        let st = run_wide(0.25, &seq, 6, 5);
        assert!(st.u().values().iter().all(|&v| v == 0.0));
        assert!(st.f().values().iter().all(|&v| v == 0.0));
        assert!(st.v_tilde().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_beta_reproduces_two_step_scheme_exactly() {
        let seq = boundaries(1, 7, 30);
        for m in [3, 9] {
            let wide = run_wide(0.0, &seq, 10, m);
            let mut narrow = MigrationState::<f64>::new(7, 10, m, 0.02, 0.01).unwrap();
            for b in &seq {
                alg1_step(&mut narrow, b).unwrap();
            }
            assert_eq!(wide.u(), narrow.u());
            assert_eq!(wide.f(), narrow.v());
        }
    }

    #[test]
    fn small_beta_converges_to_two_step_scheme() {
        let seq = boundaries(2, 8, 25);
        let mut narrow = MigrationState::<f64>::new(8, 12, 11, 0.02, 0.01).unwrap();
        for b in &seq {
            alg1_step(&mut narrow, b).unwrap();
        }
        let dist = |beta: f64| {
            let w = run_wide(beta, &seq, 12, 11);
            w.u()
                .values()
                .iter()
                .zip(narrow.u().values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let (d3, d6) = (dist(1e-3), dist(1e-6));
        assert!(d6 < d3, "{d6} !< {d3}");
        assert!(d6 < 1e-2 * d3);
    }

    #[test]
    fn step_is_linear() {
        let x = boundaries(3, 5, 10);
        let y = boundaries(4, 5, 10);
        let (a, b) = (-2.0, 0.3);
        let z: Vec<Vec<f64>> = x
            .iter()
            .zip(&y)
            .map(|(p, q)| p.iter().zip(q).map(|(p, q)| a * p + b * q).collect())
            .collect();
        let (sx, sy, sz) = (run_wide(0.25, &x, 8, 7), run_wide(0.25, &y, 8, 7), run_wide(0.25, &z, 8, 7));
        for ((ux, uy), uz) in sx.u().values().iter().zip(sy.u().values()).zip(sz.u().values()) {
            let e = a * ux + b * uy;
            assert!((uz - e).abs() <= 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn weighted_energy_bounded() {
        let seq = boundaries(6, 12, 40);
        let mut st = WideState::<f64>::new(12, 14, 13, 0.02, 0.01, 0.478, 0.376).unwrap();
        let mut injected = 0.0;
        for b in &seq {
            injected += b.iter().map(|v| v * v).sum::<f64>() * 0.02 * 0.01;
            alg2_step(&mut st, b).unwrap();
            assert!(st.energy() <= (1.0 + 1e-9) * injected / 0.478);
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(WideState::<f64>::new(4, 4, 3, 0.02, 0.01, 0.0, 0.25).is_err());
        assert!(WideState::<f64>::new(4, 4, 3, 0.02, 0.01, 0.5, -0.1).is_err());
    }
}
