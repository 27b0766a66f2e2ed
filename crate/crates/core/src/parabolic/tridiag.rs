//! Tridiagonal solvers: Thomas elimination and its cyclic variant through
//! the Sherman-Morrison correction.
//!
//! Both factorizations are built once and can be applied to many right-hand
//! sides, which is what the constant-coefficient steppers do.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// LU factors of a tridiagonal matrix with rows
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`.
#[derive(Debug, Clone)]
pub struct Tridiag<T> {
    lower: Vec<T>,
    c_prime: Vec<T>,
    inv_denom: Vec<T>,
}

impl<T: Real> Tridiag<T> {
    /// Factors the matrix. `lower[0]` and `upper[n-1]` are ignored.
    pub fn new(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 2 && lower.len() == n && upper.len() == n);
        let mut c_prime = vec![T::zero(); n];
        let mut inv_denom = vec![T::zero(); n];
        let mut prev_c = T::zero();
        for i in 0..n {
            let a = if i == 0 { T::zero() } else { lower[i] };
            let denom = diag[i] - a * prev_c;
            if denom == T::zero() || !denom.is_finite() {
                return Err(Error::SolverBreakdown {
                    node: i,
                    suggested: f64::NAN,
                });
            }
            inv_denom[i] = T::one() / denom;
            prev_c = if i + 1 < n { upper[i] * inv_denom[i] } else { T::zero() };
            c_prime[i] = prev_c;
        }
        Ok(Tridiag {
            lower: lower.to_vec(),
            c_prime,
            inv_denom,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_denom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_denom.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = self.len();
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.c_prime[i] * rhs[i + 1];
        }
    }
}

/// Factorization of a periodic tridiagonal matrix, where row 0 couples to
/// `x[n-1]` through `lower[0]` and row `n-1` couples to `x[0]` through
/// `upper[n-1]`.
#[derive(Debug, Clone)]
pub struct CyclicTridiag<T> {
    inner: Tridiag<T>,
    z: Vec<T>,
    beta_over_gamma: T,
    inv_factor: T,
}

impl<T: Real> CyclicTridiag<T> {
    pub fn new(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 3 && lower.len() == n && upper.len() == n);
        let gamma = -diag[0];
        let alpha = upper[n - 1];
        let beta = lower[0];
        let mut d = diag.to_vec();
        d[0] = diag[0] - gamma;
        d[n - 1] = diag[n - 1] - alpha * beta / gamma;
        let inner = Tridiag::new(lower, &d, upper)?;
        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = alpha;
        inner.solve_in_place(&mut z);
        let beta_over_gamma = beta / gamma;
        let factor = T::one() + z[0] + beta_over_gamma * z[n - 1];
        if factor == T::zero() || !factor.is_finite() {
            return Err(Error::SolverBreakdown {
                node: 0,
                suggested: f64::NAN,
            });
        }
        Ok(CyclicTridiag {
            inner,
            z,
            beta_over_gamma,
            inv_factor: T::one() / factor,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = self.len();
        self.inner.solve_in_place(rhs);
        let s = (rhs[0] + self.beta_over_gamma * rhs[n - 1]) * self.inv_factor;
        for (r, &z) in rhs.iter_mut().zip(&self.z) {
            *r -= s * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cyclic_matvec(l: &[f64], d: &[f64], u: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| l[i] * x[(i + n - 1) % n] + d[i] * x[i] + u[i] * x[(i + 1) % n])
            .collect()
    }

    #[test]
    fn thomas_solves_known_system() {
        let l = [0.0, -1.0, -1.0, -1.0];
        let d = [2.0, 2.0, 2.0, 2.0];
        let u = [-1.0, -1.0, -1.0, 0.0];
        let mut r = [1.0f64, 0.0, 0.0, 1.0];
        Tridiag::new(&l, &d, &u).unwrap().solve_in_place(&mut r);
        for v in r {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn f32_cyclic() {
        let n = 8;
        let l = vec![-0.25f32; n];
        let d = vec![1.5f32; n];
        let u = vec![-0.25f32; n];
        let mut r = vec![1.0f32; n];
        CyclicTridiag::new(&l, &d, &u).unwrap().solve_in_place(&mut r);
        for v in r {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn cyclic_residual_is_small(
            n in 3usize..40,
            seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 40)
        ) {
            let l: Vec<f64> = seed[..n].iter().map(|s| s.0).collect();
            let u: Vec<f64> = seed[..n].iter().map(|s| s.1).collect();
            let d: Vec<f64> = (0..n).map(|i| l[i].abs() + u[i].abs() + 1.0).collect();
            let x: Vec<f64> = seed[..n].iter().map(|s| s.2).collect();
            let mut r = cyclic_matvec(&l, &d, &u, &x);
            CyclicTridiag::new(&l, &d, &u).unwrap().solve_in_place(&mut r);
            for (a, b) in r.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
