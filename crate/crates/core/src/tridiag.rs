//! Cross-range operator `H` and the shifted solve `(I + gamma H) u = b`.
//!
//! `H` is the second-difference matrix with reflecting ends,
//!
//! ```text
//! (Hu)_0     = u_0 - u_1
//! (Hu)_i     = -(u_{i+1} - 2 u_i + u_{i-1})
//! (Hu)_{n-1} = u_{n-1} - u_{n-2}
//! ```
//!
//! i.e. `H = D^T D` for the forward difference `D`, which encodes the
//! homogeneous Neumann condition at both ends of the track.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Applies `H` to `u`.
pub fn apply_h<T: Real>(u: &[T]) -> Result<Vec<T>> {
    let n = u.len();
    if n < 2 {
        return Err(Error::invalid("u", format!("need length >= 2, got {n}")));
    }
    let mut out = vec![T::zero(); n];
    out[0] = u[0] - u[1];
    for i in 1..n - 1 {
        out[i] = (u[i] + u[i]) - u[i + 1] - u[i - 1];
    }
    out[n - 1] = u[n - 1] - u[n - 2];
    Ok(out)
}

/// Pre-factored `I + gamma H` of size `n`.
///
/// The matrix is symmetric, strictly diagonally dominant and an M-matrix for
/// every `gamma >= 0`, so elimination without pivoting is stable. The
/// factorization depends only on `(n, gamma)`; each solve is two sweeps.
#[derive(Debug, Clone)]
pub struct TridiagSystem<T> {
    n: usize,
    gamma: T,
    /// Upper coefficient after elimination, `c'_i`.
    upper: Vec<T>,
    /// Reciprocal pivots.
    inv_pivot: Vec<T>,
}

impl<T: Real> TridiagSystem<T> {
    pub fn new(n: usize, gamma: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", format!("need n >= 2, got {n}")));
        }
        if !(gamma.is_finite() && gamma >= T::zero()) {
            return Err(Error::invalid("gamma", format!("need gamma >= 0, got {gamma}")));
        }
        let one = T::one();
        let off = -gamma;
        let diag = |i: usize| {
            if i == 0 || i == n - 1 {
                one + gamma
            } else {
                one + gamma + gamma
            }
        };
        let mut upper = vec![T::zero(); n];
        let mut inv_pivot = vec![T::zero(); n];
        inv_pivot[0] = one / diag(0);
        upper[0] = off * inv_pivot[0];
        for i in 1..n {
            inv_pivot[i] = one / (diag(i) - off * upper[i - 1]);
            upper[i] = off * inv_pivot[i];
        }
        Ok(TridiagSystem {
            n,
            gamma,
            upper,
            inv_pivot,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Overwrites `b` with `(I + gamma H)^{-1} b`.
    ///
    /// # Panics
    /// If `b.len() != self.n()`.
    #[inline]
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let off = -self.gamma;
        b[0] *= self.inv_pivot[0];
        for i in 1..self.n {
            b[i] = (b[i] - off * b[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..self.n - 1).rev() {
            b[i] -= self.upper[i] * b[i + 1];
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::invalid(
                "b",
                format!("length {} != system size {}", b.len(), self.n),
            ));
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// `(I + gamma H) u`.
    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.n {
            return Err(Error::invalid("u", "length mismatch"));
        }
        let hu = apply_h(u)?;
        Ok(u.iter().zip(hu).map(|(&a, h)| a + self.gamma * h).collect())
    }
}

/// One-shot `(I + gamma H)^{-1} b`.
pub fn solve_shifted<T: Real>(gamma: T, b: &[T]) -> Result<Vec<T>> {
    TridiagSystem::new(b.len(), gamma)?.solve(b)
}
