//! Discrete residual `w_t - a w_xx + q w_x - f(x,t,w)` of a candidate
//! function, by centred differences in space and time.
//!
//! Candidates built from `min`/`max` of smooth pieces report which piece is
//! active; any stencil that straddles two pieces is masked.

use crate::coefficients::{CoefficientField, ReactionTerm};
use crate::scalar::Real;

/// A function of `(x, t)` made of smooth pieces.
pub trait Candidate<T: Real> {
    fn value(&self, x: T, t: T) -> T;

    /// Label of the smooth piece active at `(x, t)`.
    fn piece(&self, _x: T, _t: T) -> i64 {
        0
    }
}

impl<T: Real, F: Fn(T, T) -> T> Candidate<T> for F {
    fn value(&self, x: T, t: T) -> T {
        self(x, t)
    }
}

/// Space-time lattice on which the residual is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualGrid<T> {
    pub x_min: T,
    pub dx: T,
    pub n_x: usize,
    /// Time spacing of both the lattice and the difference stencil.
    pub dt: T,
}

#[derive(Debug, Clone)]
pub struct ResidualField<T> {
    pub xs: Vec<T>,
    pub ts: Vec<T>,
    /// Row-major `[time][space]`.
    pub values: Vec<T>,
    /// Candidate values at the lattice points.
    pub candidate: Vec<T>,
    /// `true` where the stencil straddles an interface.
    pub masked: Vec<bool>,
}

impl<T: Real> ResidualField<T> {
    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|m| **m).count()
    }

    /// Unmasked `(candidate, residual)` pairs.
    pub fn unmasked(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.masked
            .iter()
            .zip(self.candidate.iter().zip(&self.values))
            .filter(|(m, _)| !**m)
            .map(|(_, (w, r))| (*w, *r))
    }

    /// Smallest unmasked residual where `keep(candidate)` holds.
    pub fn min_where(&self, keep: impl Fn(T) -> bool) -> Option<T> {
        self.unmasked().filter(|(w, _)| keep(*w)).map(|(_, r)| r).reduce(T::min)
    }

    /// Largest unmasked residual where `keep(candidate)` holds.
    pub fn max_where(&self, keep: impl Fn(T) -> bool) -> Option<T> {
        self.unmasked().filter(|(w, _)| keep(*w)).map(|(_, r)| r).reduce(T::max)
    }
}

/// Evaluates the residual on `grid` for `t` in `window`, at times
/// `t0, t0 + dt, ...` up to `t1`.
pub fn residual<T: Real, C: Candidate<T> + ?Sized>(
    candidate: &C,
    window: (T, T),
    grid: &ResidualGrid<T>,
    cf: &CoefficientField,
    rt: &ReactionTerm,
) -> ResidualField<T> {
    let (t0, t1) = window;
    let (dx, dt) = (grid.dx, grid.dt);
    let n_t = ((t1 - t0) / dt).round().to_usize().unwrap_or(0) + 1;
    let xs: Vec<T> = (0..grid.n_x).map(|j| grid.x_min + dx * T::from_usize_lossy(j)).collect();
    let ts: Vec<T> = (0..n_t).map(|k| t0 + dt * T::from_usize_lossy(k)).collect();
    let mut values = Vec::with_capacity(n_t * grid.n_x);
    let mut cand = Vec::with_capacity(n_t * grid.n_x);
    let mut masked = Vec::with_capacity(n_t * grid.n_x);
    let two = T::lit(2.0);
    for &t in &ts {
        for &x in &xs {
            let w = candidate.value(x, t);
            let p = candidate.piece(x, t);
            let stencil = [(x - dx, t), (x + dx, t), (x, t - dt), (x, t + dt)];
            let interface = stencil.iter().any(|&(sx, st)| candidate.piece(sx, st) != p);
            let wl = candidate.value(x - dx, t);
            let wr = candidate.value(x + dx, t);
            let wt = (candidate.value(x, t + dt) - candidate.value(x, t - dt)) / (two * dt);
            let wxx = (wr - two * w + wl) / (dx * dx);
            let wx = (wr - wl) / (two * dx);
            let r = wt - cf.a_at(x, t) * wxx + cf.q_at(x, t) * wx - rt.f(cf, x, t, w);
            values.push(r);
            cand.push(w);
            masked.push(interface);
        }
    }
    ResidualField {
        xs,
        ts,
        values,
        candidate: cand,
        masked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, Params};

    #[test]
    fn constant_one_has_zero_residual() {
        let (cf, rt) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let g = ResidualGrid {
            x_min: 0.0,
            dx: 0.05,
            n_x: 40,
            dt: 0.01,
        };
        let one = |_x: f64, _t: f64| 1.0;
        let r = residual(&one, (0.0, 1.0), &g, &cf, &rt);
        assert_eq!(r.masked_count(), 0);
        assert!(r.values.iter().all(|v| v.abs() < 1e-12));
    }

    struct Kink;
    impl Candidate<f64> for Kink {
        fn value(&self, x: f64, t: f64) -> f64 {
            (-(x - 2.0 * t)).exp().min(1.0)
        }
        fn piece(&self, x: f64, t: f64) -> i64 {
            (x - 2.0 * t > 0.0) as i64
        }
    }

    #[test]
    fn kink_cells_are_masked_and_pieces_match_exact_residual() {
        // Homogeneous KPP with lambda = 1: the exponential piece has residual
        // w^2 exactly; the constant piece has zero residual.
        let (cf, rt) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
        let g = ResidualGrid {
            x_min: -2.0,
            dx: 0.01,
            n_x: 800,
            dt: 0.001,
        };
        let r = residual(&Kink, (0.0, 0.5), &g, &cf, &rt);
        assert!(r.masked_count() > 0);
        for (w, v) in r.unmasked() {
            let exact = if w < 1.0 { w * w } else { 0.0 };
            assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
        }
    }
}
