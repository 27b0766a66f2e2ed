//! Linear periodic-cell problem
//!
//! ```text
//! eta_t = a eta_xx - (q + 2 lambda a) eta_x + (mu + lambda^2 a + lambda q) eta
//! ```
//!
//! on one spatial period with wraparound neighbours. One step is a Strang
//! splitting: half a step of exact exponential growth with the zeroth-order
//! coefficient frozen at the half step, a Crank-Nicolson step of the
//! diffusion and drift terms (cyclic tridiagonal solve), and the other half
//! of the growth.

use crate::coefficients::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::parabolic::tridiag::CyclicTridiag;
use crate::parabolic::StateVector;
use crate::scalar::Real;

/// Uniform grid on one periodicity cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid<T> {
    pub n_x: usize,
    pub period: T,
    pub dx: T,
    pub dt: T,
}

pub const MIN_CELL_POINTS: usize = 32;

impl<T: Real> CellGrid<T> {
    pub fn new(n_x: usize, period: T, dt: T) -> Result<Self> {
        if n_x < MIN_CELL_POINTS {
            return Err(invalid("n_x", format!("at least {MIN_CELL_POINTS} points per period")));
        }
        if !(period > T::zero()) {
            return Err(invalid("period", "must be positive"));
        }
        if !(dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        Ok(CellGrid {
            n_x,
            period,
            dx: period / T::from_usize_lossy(n_x),
            dt,
        })
    }

    /// Grid whose time step is the largest divisor of `unit` below
    /// `safety * positivity_bound(cf, lambda_max)`.
    pub fn auto(n_x: usize, cf: &CoefficientField, lambda_max: T, unit: T, safety: T) -> Result<Self> {
        Self::auto_capped(n_x, cf, lambda_max, unit, safety, None)
    }

    /// As [`CellGrid::auto`], with the time step also kept below `max_dt`.
    pub fn auto_capped(
        n_x: usize,
        cf: &CoefficientField,
        lambda_max: T,
        unit: T,
        safety: T,
        max_dt: Option<T>,
    ) -> Result<Self> {
        let probe = CellGrid::new(n_x, T::lit(cf.period_l), T::one())?;
        let mut bound = probe.positivity_bound(cf, lambda_max) * safety;
        if let Some(m) = max_dt {
            if !(m > T::zero()) {
                return Err(crate::error::invalid("dt", "must be positive"));
            }
            bound = bound.min(m);
        }
        let steps = (unit / bound).ceil().to_usize().unwrap_or(1).max(1);
        CellGrid::new(n_x, T::lit(cf.period_l), unit / T::from_usize_lossy(steps))
    }

    pub fn x(&self, j: usize) -> T {
        self.dx * T::from_usize_lossy(j)
    }

    /// `min(dx^2 / (2 a_max), dx / max|q + 2 lambda a|)` from the sampled bounds.
    pub fn positivity_bound(&self, cf: &CoefficientField, lambda: T) -> T {
        let b = &cf.bounds;
        let a_max = T::lit(b.alpha_upper);
        let drift = T::lit(b.q_sup) + T::lit(2.0) * lambda.abs() * a_max;
        let diff = self.dx * self.dx / (T::lit(2.0) * a_max);
        if drift > T::zero() {
            diff.min(self.dx / drift)
        } else {
            diff
        }
    }

    /// Cell Peclet number `max|q + 2 lambda a| dx / (2 a_min)`.
    pub fn peclet(&self, cf: &CoefficientField, lambda: T) -> T {
        let b = &cf.bounds;
        let drift = T::lit(b.q_sup) + T::lit(2.0) * lambda.abs() * T::lit(b.alpha_upper);
        drift * self.dx / (T::lit(2.0) * T::lit(b.alpha_lower))
    }

    /// Whether `unit` is an integer multiple of `dt` (within rounding).
    pub fn steps_per(&self, unit: T) -> Option<usize> {
        let r = unit / self.dt;
        let n = r.round();
        let tol = T::lit(1e-6).max(T::epsilon() * T::lit(16.0) * r);
        if n >= T::one() && (r - n).abs() < tol {
            n.to_usize()
        } else {
            None
        }
    }
}

/// Which drift convention the linear operator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSign {
    /// `q + 2 lambda a`, the linearised equation for `e^{-lambda x} eta`.
    Plus,
    /// `q - 2 lambda a`.
    Minus,
}

/// Crank-Nicolson factors of the diffusion and drift part.
#[derive(Debug, Clone)]
struct Transport<T> {
    /// Explicit half `I + dt/2 L`.
    ex_lo: Vec<T>,
    ex_di: Vec<T>,
    ex_up: Vec<T>,
    /// Implicit half `I - dt/2 L`, factored.
    implicit: CyclicTridiag<T>,
    /// `lambda^2 a + lambda q`, the part of the growth rate carried by the
    /// transport coefficients.
    base_rate: Vec<T>,
}

/// Stepper for the linear cell problem at a fixed decay rate.
///
/// Whatever does not depend on time is assembled once: the transport factors
/// when `a` and `q` are time independent, and the growth factors when all
/// three coefficients are.
pub struct LinearCellStepper<'a, T: Real> {
    grid: CellGrid<T>,
    cf: &'a CoefficientField,
    lambda: T,
    sign: DriftSign,
    stability_bound: T,
    transport: Option<Transport<T>>,
    growth_frozen: bool,
    half_growth: Vec<T>,
    scratch: Vec<T>,
    mu: Vec<T>,
}

impl<'a, T: Real> LinearCellStepper<'a, T> {
    pub fn new(grid: CellGrid<T>, cf: &'a CoefficientField, lambda: T) -> Result<Self> {
        Self::with_sign(grid, cf, lambda, DriftSign::Plus)
    }

    pub fn with_sign(grid: CellGrid<T>, cf: &'a CoefficientField, lambda: T, sign: DriftSign) -> Result<Self> {
        if lambda < T::zero() {
            return Err(invalid("lambda", "must be nonnegative"));
        }
        let bound = grid.positivity_bound(cf, lambda);
        if grid.dt > bound * T::lit(1.0 + 1e-9) {
            let suggested = bound.as_f64();
            return Err(Error::Unstable {
                dt: grid.dt.as_f64(),
                bound: bound.as_f64(),
                suggested,
            });
        }
        let pe = grid.peclet(cf, lambda);
        if pe > T::one() {
            let needed = (T::from_usize_lossy(grid.n_x) * pe).ceil().to_usize().unwrap_or(usize::MAX);
            return Err(Error::UnresolvedDrift {
                peclet: pe.as_f64(),
                suggested_nx: needed,
            });
        }
        let n = grid.n_x;
        let mut s = LinearCellStepper {
            grid,
            cf,
            lambda,
            sign,
            stability_bound: bound,
            transport: None,
            growth_frozen: false,
            half_growth: vec![T::zero(); n],
            scratch: vec![T::zero(); n],
            mu: vec![T::zero(); n],
        };
        if !(cf.a.uses(Var::T) || cf.q.uses(Var::T)) {
            let tr = s.assemble_transport(T::zero())?;
            if !cf.mu.uses(Var::T) {
                s.fill_growth(&tr, T::zero())?;
                s.growth_frozen = true;
            }
            s.transport = Some(tr);
        }
        Ok(s)
    }

    pub fn grid(&self) -> &CellGrid<T> {
        &self.grid
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// The positivity bound on `dt` recorded at construction.
    pub fn stability_bound(&self) -> T {
        self.stability_bound
    }

    /// Fills `out` with `e` on the cell nodes at time `t`.
    fn sample(&self, e: &Expression, t: T, out: &mut [T]) -> Result<()> {
        if e.uses(Var::X) {
            for (j, o) in out.iter_mut().enumerate() {
                *o = e.eval_raw(&Bindings::xt(self.grid.x(j), t));
            }
        } else {
            let v = e.eval_raw(&Bindings::xt(T::zero(), t));
            out.iter_mut().for_each(|o| *o = v);
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!("non-finite coefficient at t = {t}")))
        }
    }

    fn assemble_transport(&self, tm: T) -> Result<Transport<T>> {
        let n = self.grid.n_x;
        let mut a = vec![T::zero(); n];
        let mut q = vec![T::zero(); n];
        self.sample(&self.cf.a, tm, &mut a)?;
        self.sample(&self.cf.q, tm, &mut q)?;
        let (dx, dt) = (self.grid.dx, self.grid.dt);
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let lam = self.lambda;
        let mut ex_lo = vec![T::zero(); n];
        let mut ex_di = vec![T::zero(); n];
        let mut ex_up = vec![T::zero(); n];
        let mut im_lo = vec![T::zero(); n];
        let mut im_di = vec![T::zero(); n];
        let mut im_up = vec![T::zero(); n];
        let mut base_rate = vec![T::zero(); n];
        for j in 0..n {
            let b = match self.sign {
                DriftSign::Plus => q[j] + two * lam * a[j],
                DriftSign::Minus => q[j] - two * lam * a[j],
            };
            let diff = a[j] / (dx * dx);
            let adv = b / (two * dx);
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
                    suggested: (dx * dx / (two * a[j])).as_f64(),
                });
            }
            base_rate[j] = lam * lam * a[j] + lam * q[j];
        }
        Ok(Transport {
            ex_lo,
            ex_di,
            ex_up,
            implicit: CyclicTridiag::new(&im_lo, &im_di, &im_up)?,
            base_rate,
        })
    }

    /// `half_growth[j] = exp((mu_j + base_j) dt / 2)` at the half step `tm`.
    fn fill_growth(&mut self, tr: &Transport<T>, tm: T) -> Result<()> {
        let half_dt = self.grid.dt * T::lit(0.5);
        let uniform = !self.cf.depends_on_x();
        let mut mu = std::mem::take(&mut self.mu);
        let res = if uniform {
            let m = self.cf.mu.eval_raw(&Bindings::xt(T::zero(), tm));
            let g = ((m + tr.base_rate[0]) * half_dt).exp();
            self.half_growth.iter_mut().for_each(|h| *h = g);
            if m.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("non-finite coefficient at t = {tm}")))
            }
        } else {
            self.sample(&self.cf.mu, tm, &mut mu).map(|_| {
                for ((h, m), b) in self.half_growth.iter_mut().zip(&mu).zip(&tr.base_rate) {
                    *h = ((*m + *b) * half_dt).exp();
                }
            })
        };
        self.mu = mu;
        res
    }

    /// Advances `state` by one time step in place.
    pub fn step(&mut self, state: &mut StateVector<T>) -> Result<()> {
        if let Some((node, &value)) = state.values.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
            return Err(Error::NonPositiveState {
                node,
                value: value.as_f64(),
            });
        }
        self.step_unchecked(state)
    }

    fn step_unchecked(&mut self, state: &mut StateVector<T>) -> Result<()> {
        let tm = state.time + self.grid.dt * T::lit(0.5);
        let tr = match self.transport.take() {
            Some(tr) => tr,
            None => self.assemble_transport(tm)?,
        };
        if !self.growth_frozen {
            if let Err(e) = self.fill_growth(&tr, tm) {
                self.restore(tr);
                return Err(e);
            }
        }
        apply_split(&tr, &self.half_growth, &mut state.values, &mut self.scratch);
        self.restore(tr);
        state.time += self.grid.dt;
        Ok(())
    }

    fn restore(&mut self, tr: Transport<T>) {
        if !(self.cf.a.uses(Var::T) || self.cf.q.uses(Var::T)) {
            self.transport = Some(tr);
        }
    }

    /// Advances `steps` steps, checking positivity of the input only.
    pub fn advance(&mut self, state: &mut StateVector<T>, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        self.step(state)?;
        for _ in 1..steps {
            self.step_unchecked(state)?;
        }
        Ok(())
    }
}

fn apply_split<T: Real>(tr: &Transport<T>, half_growth: &[T], u: &mut [T], scratch: &mut [T]) {
    let n = u.len();
    for (v, g) in u.iter_mut().zip(half_growth) {
        *v *= *g;
    }
    scratch[0] = tr.ex_lo[0] * u[n - 1] + tr.ex_di[0] * u[0] + tr.ex_up[0] * u[1];
    for j in 1..n - 1 {
        scratch[j] = tr.ex_lo[j] * u[j - 1] + tr.ex_di[j] * u[j] + tr.ex_up[j] * u[j + 1];
    }
    scratch[n - 1] = tr.ex_lo[n - 1] * u[n - 2] + tr.ex_di[n - 1] * u[n - 1] + tr.ex_up[n - 1] * u[0];
    tr.implicit.solve_in_place(scratch);
    for ((v, s), g) in u.iter_mut().zip(scratch.iter()).zip(half_growth) {
        *v = *s * *g;
    }
}

/// One step of the linear cell problem from `state` at `state.time`.
pub fn step_linear_cell<T: Real>(
    state: &StateVector<T>,
    grid: &CellGrid<T>,
    cf: &CoefficientField,
    lambda: T,
) -> Result<StateVector<T>> {
    let mut stepper = LinearCellStepper::new(*grid, cf, lambda)?;
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

    fn homogeneous(mu0: f64) -> CoefficientField {
        CoefficientField::from_strs("1", "0", &format!("{mu0}"), 2.0 * std::f64::consts::PI, None).unwrap()
    }

    #[test]
    fn constant_state_grows_exponentially() {
        let cf = homogeneous(1.0);
        let lambda = 0.7;
        let grid = CellGrid::<f64>::auto(64, &cf, lambda, 1.0, 1.0).unwrap();
        let mut st = LinearCellStepper::new(grid, &cf, lambda).unwrap();
        let mut s = StateVector::constant(64, 1.0, 0.0);
        let steps = grid.steps_per(3.0).unwrap();
        st.advance(&mut s, steps).unwrap();
        let exact = ((1.0 + lambda * lambda) * 3.0f64).exp();
        for v in &s.values {
            assert!(((v / exact) - 1.0).abs() < 3e-6, "{v} vs {exact}");
        }
    }

    #[test]
    fn pure_diffusion_conserves_mean() {
        let cf = CoefficientField::from_strs("1", "0", "0", 1.0, None).unwrap();
        let grid = CellGrid::<f64>::auto(64, &cf, 0.0, 1.0, 1.0).unwrap();
        let mut st = LinearCellStepper::new(grid, &cf, 0.0).unwrap();
        let mut s = StateVector {
            values: (0..64).map(|j| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * grid.x(j)).cos()).collect(),
            time: 0.0,
        };
        let mean0: f64 = s.values.iter().sum::<f64>() / 64.0;
        for _ in 0..50 {
            st.step(&mut s).unwrap();
            let mean: f64 = s.values.iter().sum::<f64>() / 64.0;
            assert!((mean - mean0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_nonpositive_and_unstable() {
        let cf = homogeneous(1.0);
        let grid = CellGrid::<f64>::new(64, cf.period_l, 0.5).unwrap();
        assert!(matches!(LinearCellStepper::new(grid, &cf, 1.0), Err(Error::Unstable { .. })));
        let grid = CellGrid::<f64>::auto(64, &cf, 1.0, 1.0, 1.0).unwrap();
        let mut st = LinearCellStepper::new(grid, &cf, 1.0).unwrap();
        let mut s = StateVector::constant(64, 1.0, 0.0);
        s.values[5] = 0.0;
        assert!(matches!(st.step(&mut s), Err(Error::NonPositiveState { node: 5, .. })));
        assert!(CellGrid::<f64>::new(16, 1.0, 0.01).is_err());
    }

    #[test]
    fn under_resolved_drift_is_reported() {
        let cf = CoefficientField::from_strs("0.01", "20", "1", 1.0, None).unwrap();
        let grid = CellGrid::<f64>::auto(32, &cf, 0.0, 1.0, 1.0).unwrap();
        match LinearCellStepper::new(grid, &cf, 0.0) {
            Err(Error::UnresolvedDrift { suggested_nx, .. }) => assert!(suggested_nx >= 32 * 31),
            other => panic!("expected an unresolved-drift error, got {:?}", other.err()),
        }
    }

    /// Fourier-mode oracle: `e^{(mu0+lambda^2) t} (1 + eps e^{-k^2 t} cos(k (x - 2 lambda t)))`.
    fn mode_error(n_x: usize, dt_scale: f64) -> f64 {
        let cf = homogeneous(1.0);
        let lambda = 0.5;
        let l = cf.period_l;
        let k = 2.0 * std::f64::consts::PI / l;
        let base = CellGrid::<f64>::auto(n_x, &cf, lambda, 1.0, 1.0).unwrap();
        let grid = CellGrid::new(n_x, l, base.dt * dt_scale).unwrap();
        let mut st = LinearCellStepper::new(grid, &cf, lambda).unwrap();
        let eps = 0.3;
        let mut s = StateVector {
            values: (0..n_x).map(|j| 1.0 + eps * (k * grid.x(j)).cos()).collect(),
            time: 0.0,
        };
        let steps = grid.steps_per(1.0).unwrap();
        st.advance(&mut s, steps).unwrap();
        let t = 1.0;
        (0..n_x)
            .map(|j| {
                let exact = ((1.0 + lambda * lambda) * t).exp()
                    * (1.0 + eps * (-k * k * t).exp() * (k * (grid.x(j) - 2.0 * lambda * t)).cos());
                (s.values[j] - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_order_convergence() {
        // Large time steps relative to the bound so the temporal error is visible.
        let e1 = mode_error(32, 1.0);
        let e2 = mode_error(64, 0.5);
        assert!(e1 / e2 >= 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn positivity_over_random_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a0 = rng.gen_range(0.5..1.5);
            let amp = rng.gen_range(0.0..0.4) * a0;
            let q = rng.gen_range(-1.0..1.0);
            let mu_amp = rng.gen_range(0.0..0.9);
            let cf = CoefficientField::from_strs(
                &format!("{a0} + {amp}*cos(2*pi*x)"),
                &format!("{q}*sin(2*pi*(x - t))"),
                &format!("1 + {mu_amp}*cos(2*pi*x + t)"),
                1.0,
                None,
            )
            .unwrap();
            let lambda = rng.gen_range(0.0..2.0);
            let grid = CellGrid::<f64>::auto(32, &cf, lambda, 1.0, 1.0).unwrap();
            let mut st = LinearCellStepper::new(grid, &cf, lambda).unwrap();
            let mut s = StateVector {
                values: (0..32).map(|_| rng.gen_range(1e-6..1.0)).collect(),
                time: 0.0,
            };
            for _ in 0..200 {
                st.step(&mut s).unwrap();
                assert!(s.values.iter().all(|v| *v > 0.0));
            }
        }
    }

    #[test]
    fn million_steps_stay_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut total = 0usize;
        while total < 1_000_000 {
            let a0 = rng.gen_range(0.5..1.5);
            let amp = rng.gen_range(0.0..0.4) * a0;
            let q = rng.gen_range(-2.0..2.0);
            let cf = CoefficientField::from_strs(
                &format!("{a0} + {amp}*sin(2*pi*x)"),
                &format!("{q}*cos(2*pi*x)"),
                &format!("{} + 0.9*cos(2*pi*x)", rng.gen_range(-1.0..1.0)),
                1.0,
                None,
            )
            .unwrap();
            let lambda = rng.gen_range(0.0..1.5);
            let grid = CellGrid::<f64>::auto(32, &cf, lambda, 1.0, 1.0).unwrap();
            let mut st = LinearCellStepper::new(grid, &cf, lambda).unwrap();
            let mut s = StateVector {
                values: (0..32).map(|_| rng.gen_range(1e-3..1.0)).collect(),
                time: 0.0,
            };
            for _ in 0..5000 {
                st.step(&mut s).unwrap();
                let m = s.max();
                assert!(s.values.iter().all(|v| *v > 0.0));
                s.values.iter_mut().for_each(|v| *v /= m);
            }
            total += 5000;
        }
    }

    #[test]
    fn minus_sign_matches_plus_for_symmetric_data() {
        let (cf, _) = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap();
        let grid = CellGrid::<f64>::auto(32, &cf, 1.0, 1.0, 1.0).unwrap();
        let mut p = LinearCellStepper::with_sign(grid, &cf, 1.0, DriftSign::Plus).unwrap();
        let mut m = LinearCellStepper::with_sign(grid, &cf, 1.0, DriftSign::Minus).unwrap();
        let mut sp = StateVector::constant(32, 1.0, 0.0);
        let mut sm = sp.clone();
        p.advance(&mut sp, 200).unwrap();
        m.advance(&mut sm, 200).unwrap();
        let maxp = sp.values.iter().cloned().fold(0.0, f64::max);
        let maxm = sm.values.iter().cloned().fold(0.0, f64::max);
        assert!((maxp / maxm - 1.0).abs() < 1e-10);
    }
}
