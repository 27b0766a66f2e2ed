//! Nonlinear problem `u_t - a u_xx + q u_x = f(x,t,u)` on a truncated line
//! with `u = 1` at the left end and `u = 0` at the right end.
//!
//! IMEX stepping: Crank-Nicolson for diffusion and drift with coefficients
//! at the half step, forward Euler for the reaction at the current state.

use crate::coefficients::{CoefficientField, ReactionTerm};
use crate::error::{invalid, Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::parabolic::tridiag::Tridiag;
use crate::parabolic::StateVector;
use crate::scalar::Real;

/// Per-step clipping above this magnitude is reported as an error.
pub const CLIP_LIMIT: f64 = 1e-6;

/// Uniform grid `x_j = x_min + j dx`, `j = 0..n_x-1`, including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid<T> {
    pub x_min: T,
    pub x_max: T,
    pub n_x: usize,
    pub dx: T,
    pub dt: T,
}

impl<T: Real> LineGrid<T> {
    pub fn new(x_min: T, x_max: T, n_x: usize, dt: T) -> Result<Self> {
        if n_x < 3 {
            return Err(invalid("n_x", "need at least three nodes"));
        }
        if !(x_max > x_min) {
            return Err(invalid("domain", "x_max must exceed x_min"));
        }
        if !(dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        Ok(LineGrid {
            x_min,
            x_max,
            n_x,
            dx: (x_max - x_min) / T::from_usize_lossy(n_x - 1),
            dt,
        })
    }

    /// Grid with spacing close to `dx` on `[x_min, x_max]` and the largest
    /// time step dividing `unit` below
    /// `min(dx^2 / (2 a_max), dx / sup|q|, 1 / (2 sup mu))`.
    pub fn with_spacing(cf: &CoefficientField, x_min: T, x_max: T, dx: T, unit: T) -> Result<Self> {
        let n = ((x_max - x_min) / dx).round().to_usize().unwrap_or(0) + 1;
        let mut g = LineGrid::new(x_min, x_max, n, T::one())?;
        let bound = g.stability_bound(cf);
        let steps = (unit / bound).ceil().to_usize().unwrap_or(1).max(1);
        g.dt = unit / T::from_usize_lossy(steps);
        Ok(g)
    }

    pub fn x(&self, j: usize) -> T {
        self.x_min + self.dx * T::from_usize_lossy(j)
    }

    /// Time step bound under which the explicit half of the step is a
    /// monotone map on `[0, 1]`.
    pub fn stability_bound(&self, cf: &CoefficientField) -> T {
        let b = &cf.bounds;
        let mut bound = self.dx * self.dx / (T::lit(2.0) * T::lit(b.alpha_upper));
        if b.q_sup > 0.0 {
            bound = bound.min(self.dx / T::lit(b.q_sup));
        }
        if b.mu_sup > 0.0 {
            bound = bound.min(T::lit(0.5 / b.mu_sup));
        }
        bound
    }

    /// Checks that the domain is wide enough for a front moving at most at
    /// `c_max` during `t_sim`, with a margin of twenty diffusion lengths.
    pub fn validate_width(&self, cf: &CoefficientField, c_max: T, t_sim: T) -> Result<()> {
        let margin = T::lit(20.0 * cf.bounds.alpha_upper.sqrt());
        let need = c_max * t_sim + margin;
        if self.x_max - self.x_min < need {
            return Err(invalid(
                "domain",
                format!("width {} is below c_max * T_sim + margin = {}", self.x_max - self.x_min, need),
            ));
        }
        Ok(())
    }
}

/// Fills `out[j]` with `e(x_j, t)`, evaluating one spatial period and tiling
/// when the grid is commensurate with the period.
pub(crate) fn fill_on_line<T: Real>(e: &Expression, grid: &LineGrid<T>, period: T, t: T, out: &mut [T]) {
    if !e.uses(Var::X) {
        let v = e.eval_raw(&Bindings::xt(grid.x_min, t));
        out.iter_mut().for_each(|o| *o = v);
        return;
    }
    let m = (period / grid.dx).round();
    let shift = grid.x_min / grid.dx;
    let tol = T::lit(1e-9);
    let commensurate = m >= T::one()
        && (m * grid.dx - period).abs() <= tol * period
        && (shift - shift.round()).abs() <= T::lit(1e-6);
    match m.to_usize() {
        Some(m) if commensurate && m < out.len() => {
            for (j, o) in out.iter_mut().enumerate().take(m) {
                *o = e.eval_raw(&Bindings::xt(grid.x(j), t));
            }
            for j in m..out.len() {
                out[j] = out[j - m];
            }
        }
        _ => {
            for (j, o) in out.iter_mut().enumerate() {
                *o = e.eval_raw(&Bindings::xt(grid.x(j), t));
            }
        }
    }
}

struct Operator<T> {
    ex_lo: Vec<T>,
    ex_di: Vec<T>,
    ex_up: Vec<T>,
    implicit: Tridiag<T>,
}

/// Stepper for the nonlinear problem. Tracks how much clipping to `[0, 1]`
/// it has applied.
pub struct NonlinearLineStepper<'a, T: Real> {
    grid: LineGrid<T>,
    cf: &'a CoefficientField,
    rt: &'a ReactionTerm,
    frozen: Option<Operator<T>>,
    a: Vec<T>,
    q: Vec<T>,
    mu: Vec<T>,
    rhs: Vec<T>,
    clip_total: T,
    clip_max: T,
    boundary: (T, T),
    mu_frozen: bool,
}

impl<'a, T: Real> NonlinearLineStepper<'a, T> {
    pub fn new(grid: LineGrid<T>, cf: &'a CoefficientField, rt: &'a ReactionTerm) -> Result<Self> {
        let bound = grid.stability_bound(cf);
        if grid.dt > bound * T::lit(1.0 + 1e-9) {
            return Err(Error::Unstable {
                dt: grid.dt.as_f64(),
                bound: bound.as_f64(),
                suggested: bound.as_f64(),
            });
        }
        let n = grid.n_x;
        let mut s = NonlinearLineStepper {
            grid,
            cf,
            rt,
            frozen: None,
            a: vec![T::zero(); n],
            q: vec![T::zero(); n],
            mu: vec![T::zero(); n],
            rhs: vec![T::zero(); n],
            clip_total: T::zero(),
            clip_max: T::zero(),
            boundary: (T::one(), T::zero()),
            mu_frozen: !cf.mu.uses(Var::T),
        };
        if !(cf.a.uses(Var::T) || cf.q.uses(Var::T)) {
            s.frozen = Some(s.assemble(T::zero())?);
        }
        if s.mu_frozen {
            s.fill_mu(T::zero());
        }
        Ok(s)
    }

    pub fn grid(&self) -> &LineGrid<T> {
        &self.grid
    }

    /// Replaces the default Dirichlet values `(1, 0)`.
    pub fn set_boundary(&mut self, left: T, right: T) {
        self.boundary = (left, right);
    }

    /// Sum of per-step clipping magnitudes so far.
    pub fn clip_total(&self) -> T {
        self.clip_total
    }

    /// Largest clipping magnitude in a single step.
    pub fn clip_max(&self) -> T {
        self.clip_max
    }

    fn fill_mu(&mut self, t: T) {
        let l = T::lit(self.cf.period_l);
        fill_on_line(&self.cf.mu, &self.grid, l, t, &mut self.mu);
    }

    fn assemble(&mut self, tm: T) -> Result<Operator<T>> {
        let l = T::lit(self.cf.period_l);
        fill_on_line(&self.cf.a, &self.grid, l, tm, &mut self.a);
        fill_on_line(&self.cf.q, &self.grid, l, tm, &mut self.q);
        let n = self.grid.n_x;
        let (dx, dt) = (self.grid.dx, self.grid.dt);
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let mut ex_lo = vec![T::zero(); n];
        let mut ex_di = vec![T::one(); n];
        let mut ex_up = vec![T::zero(); n];
        let mut im_lo = vec![T::zero(); n];
        let mut im_di = vec![T::one(); n];
        let mut im_up = vec![T::zero(); n];
        for j in 1..n - 1 {
            let diff = self.a[j] / (dx * dx);
            let adv = self.q[j] / (two * dx);
            if !(diff.is_finite() && adv.is_finite()) {
                return Err(Error::Domain(format!("non-finite coefficient at x = {}", self.grid.x(j))));
            }
            let (lo, di, up) = (diff + adv, -two * diff, diff - adv);
            ex_lo[j] = half * dt * lo;
            ex_di[j] = T::one() + half * dt * di;
            ex_up[j] = half * dt * up;
            im_lo[j] = -half * dt * lo;
            im_di[j] = T::one() - half * dt * di;
            im_up[j] = -half * dt * up;
            if im_di[j].abs() < im_lo[j].abs() + im_up[j].abs() {
                return Err(Error::SolverBreakdown {
                    node: j,
                    suggested: (dx * dx / (two * self.a[j])).as_f64(),
                });
            }
        }
        Ok(Operator {
            ex_lo,
            ex_di,
            ex_up,
            implicit: Tridiag::new(&im_lo, &im_di, &im_up)?,
        })
    }

    /// Advances `state` by one step. Boundary values are re-imposed and the
    /// result is clipped to `[0, 1]`.
    pub fn step(&mut self, state: &mut StateVector<T>) -> Result<()> {
        let n = self.grid.n_x;
        let t = state.time;
        let dt = self.grid.dt;
        let assembled;
        if !self.mu_frozen {
            self.fill_mu(t);
        }
        let op = match &self.frozen {
            Some(op) => op,
            None => {
                assembled = self.assemble(t + dt * T::lit(0.5))?;
                &assembled
            }
        };
        let u = &mut state.values;
        let logistic = self.rt.is_logistic();
        for j in 1..n - 1 {
            let react = if logistic {
                self.mu[j] * u[j] * (T::one() - u[j])
            } else {
                self.rt.f_with_mu(self.mu[j], self.grid.x(j), t, u[j])
            };
            self.rhs[j] = op.ex_lo[j] * u[j - 1] + op.ex_di[j] * u[j] + op.ex_up[j] * u[j + 1] + dt * react;
        }
        self.rhs[0] = self.boundary.0;
        self.rhs[n - 1] = self.boundary.1;
        op.implicit.solve_in_place(&mut self.rhs);
        let mut clip = T::zero();
        for (v, r) in u.iter_mut().zip(&self.rhs) {
            if !r.is_finite() {
                return Err(Error::Overflow { time: t.as_f64() });
            }
            let c = r.max(T::zero()).min(T::one());
            clip = clip.max((c - *r).abs());
            *v = c;
        }
        self.clip_total += clip;
        self.clip_max = self.clip_max.max(clip);
        state.time += dt;
        if clip > T::lit(CLIP_LIMIT) {
            return Err(Error::ExcessiveClipping {
                magnitude: clip.as_f64(),
            });
        }
        Ok(())
    }
}

/// One nonlinear step from `state` at `state.time`.
pub fn step_nonlinear_line<T: Real>(
    state: &StateVector<T>,
    grid: &LineGrid<T>,
    cf: &CoefficientField,
    rt: &ReactionTerm,
) -> Result<StateVector<T>> {
    let mut stepper = NonlinearLineStepper::new(*grid, cf, rt)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{make_builtin, Family, Params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn homogeneous() -> (CoefficientField, ReactionTerm) {
        make_builtin(Family::Homogeneous, &Params::new()).unwrap()
    }

    #[test]
    fn zero_is_steady() {
        let (cf, rt) = homogeneous();
        let g = LineGrid::<f64>::with_spacing(&cf, 0.0, 20.0, 0.1, 1.0).unwrap();
        let mut st = NonlinearLineStepper::new(g, &cf, &rt).unwrap();
        st.set_boundary(0.0, 0.0);
        let mut s = StateVector::constant(g.n_x, 0.0, 0.0);
        for _ in 0..100 {
            st.step(&mut s).unwrap();
        }
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_is_steady() {
        let (cf, rt) = homogeneous();
        let g = LineGrid::<f64>::with_spacing(&cf, 0.0, 10.0, 0.1, 1.0).unwrap();
        let mut st = NonlinearLineStepper::new(g, &cf, &rt).unwrap();
        st.set_boundary(1.0, 1.0);
        let mut s = StateVector::constant(g.n_x, 1.0, 0.0);
        for _ in 0..100 {
            st.step(&mut s).unwrap();
        }
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn small_data_follows_logistic_ode() {
        let (cf, rt) = homogeneous();
        let g = LineGrid::<f64>::with_spacing(&cf, 0.0, 40.0, 0.1, 1.0).unwrap();
        let mut st = NonlinearLineStepper::new(g, &cf, &rt).unwrap();
        let u0 = 1e-4;
        let mut s = StateVector::constant(g.n_x, u0, 0.0);
        s.values[0] = 1.0;
        let steps = (1.0 / g.dt).round() as usize;
        for _ in 0..steps {
            st.step(&mut s).unwrap();
        }
        let e = std::f64::consts::E;
        let exact = u0 * e / (1.0 - u0 + u0 * e);
        let mid = s.values[g.n_x / 2];
        assert!((mid / exact - 1.0).abs() < 0.01, "{mid} vs {exact}");
    }

    #[test]
    fn comparison_principle_on_random_pairs() {
        let (cf, rt) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let g = LineGrid::<f64>::with_spacing(&cf, 0.0, 10.0, 0.05, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut u = StateVector::constant(g.n_x, 0.0, rng.gen_range(0.0..5.0));
            let mut v = u.clone();
            for j in 0..g.n_x {
                let a: f64 = rng.gen();
                let b: f64 = rng.gen();
                u.values[j] = a.min(b);
                v.values[j] = a.max(b);
            }
            u.values[0] = 1.0;
            v.values[0] = 1.0;
            let un = step_nonlinear_line(&u, &g, &cf, &rt).unwrap();
            let vn = step_nonlinear_line(&v, &g, &cf, &rt).unwrap();
            for j in 0..g.n_x {
                assert!(un.values[j] <= vn.values[j] + 1e-10);
            }
        }
    }

    #[test]
    fn tiling_matches_direct_evaluation() {
        let (cf, _) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let g = LineGrid::<f64>::new(-3.0, 7.0, 201, 0.001).unwrap();
        let mut tiled = vec![0.0; g.n_x];
        fill_on_line(&cf.mu, &g, 1.0, 0.3, &mut tiled);
        for j in 0..g.n_x {
            let direct: f64 = cf.mu_at(g.x(j), 0.3);
            assert!((tiled[j] - direct).abs() < 1e-12);
        }
    }
}
