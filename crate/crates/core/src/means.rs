//! Least and upper means of sampled bounded functions,
//!
//! ```text
//! lm(g) = sup_T inf_t (1/T) int_t^{t+T} g,     um(g) = inf_T sup_t (1/T) int_t^{t+T} g,
//! ```
//!
//! evaluated on a finite horizon with prefix sums, and the bounded corrector
//! `sigma` with `inf (sigma' + g) >= lm(g) - eps`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Ratio of the geometric grid of window lengths.
pub const WINDOW_RATIO: f64 = 1.25;

/// Relative tolerance of the convergence cross-check between the returned
/// value and the value at the largest window.
pub const CONVERGENCE_TOL: f64 = 0.05;

/// How the stored values relate to the underlying function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// `values[i] = g(i h)`; integrals use the trapezoid rule.
    Point,
    /// `values[i]` is the mean of `g` on `[i h, (i+1) h]`.
    CellAverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    pub h: T,
    pub values: Vec<T>,
    pub kind: SampleKind,
}

impl<T: Real> SampledFunction<T> {
    pub fn points(h: T, values: Vec<T>) -> Result<Self> {
        Self::build(h, values, SampleKind::Point)
    }

    pub fn cell_averages(h: T, values: Vec<T>) -> Result<Self> {
        Self::build(h, values, SampleKind::CellAverage)
    }

    fn build(h: T, values: Vec<T>, kind: SampleKind) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(invalid("h", "sample step must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "samples must be finite"));
        }
        let g = SampledFunction { h, values, kind };
        if g.cells() == 0 {
            return Err(invalid("values", "need at least one sample interval"));
        }
        Ok(g)
    }

    /// Samples `f` at `t = i h` on `[0, horizon]`.
    pub fn from_fn(h: T, horizon: T, f: impl Fn(T) -> T) -> Result<Self> {
        let n = (horizon / h).round().to_usize().unwrap_or(0);
        Self::points(h, (0..=n).map(|i| f(h * T::from_usize_lossy(i))).collect())
    }

    /// Number of sample intervals.
    pub fn cells(&self) -> usize {
        match self.kind {
            SampleKind::Point => self.values.len().saturating_sub(1),
            SampleKind::CellAverage => self.values.len(),
        }
    }

    pub fn horizon(&self) -> T {
        self.h * T::from_usize_lossy(self.cells())
    }

    /// Mean of `g` on sample interval `i`.
    pub fn cell_mean(&self, i: usize) -> T {
        match self.kind {
            SampleKind::Point => (self.values[i] + self.values[i + 1]) * T::lit(0.5),
            SampleKind::CellAverage => self.values[i],
        }
    }

    /// `P[i] = int_0^{i h} g`, with `P[0] = 0`.
    pub fn prefix_integrals(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.cells() + 1);
        let mut acc = T::zero();
        p.push(acc);
        for i in 0..self.cells() {
            acc += self.cell_mean(i) * self.h;
            p.push(acc);
        }
        p
    }

    pub fn sup(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn inf(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        SampledFunction {
            h: self.h,
            values: self.values.iter().map(|v| f(*v)).collect(),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFlavor {
    Least,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate<T> {
    pub flavor: MeanFlavor,
    pub value: T,
    pub best_window: T,
    /// `(T, inf_t or sup_t of the windowed average)` for each window length.
    pub trace: Vec<(T, T)>,
    /// Extremal windowed average at the largest window.
    pub value_at_t_max: T,
    pub warning: Option<String>,
}

/// Window lengths in samples: `round(1.25^k / h)` for `1.25^k <= T_max`,
/// plus `T_max` itself, deduplicated.
pub fn window_grid<T: Real>(h: T, t_max: T) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut push = |t: T| {
        let w = (t / h).round().to_usize().unwrap_or(1).max(1);
        if out.last() != Some(&w) {
            out.push(w);
        }
    };
    let mut t = T::one().min(t_max);
    while t <= t_max * T::lit(1.0 - 1e-12) {
        push(t);
        t *= T::lit(WINDOW_RATIO);
    }
    push(t_max);
    out.sort_unstable();
    out.dedup();
    out
}

fn windowed_extremum<T: Real>(p: &[T], w: usize, h: T, least: bool) -> T {
    let len = T::from_usize_lossy(w) * h;
    let mut best = if least { T::infinity() } else { T::neg_infinity() };
    for j in 0..p.len() - w {
        let avg = (p[j + w] - p[j]) / len;
        best = if least { best.min(avg) } else { best.max(avg) };
    }
    best
}

fn mean_estimate<T: Real>(g: &SampledFunction<T>, t_max: T, flavor: MeanFlavor) -> Result<MeanEstimate<T>> {
    let horizon = g.horizon();
    if t_max > horizon * T::lit(0.5) * T::lit(1.0 + 1e-12) {
        return Err(invalid(
            "t_max",
            format!("window {t_max} exceeds half the horizon {}", horizon * T::lit(0.5)),
        ));
    }
    if !(t_max >= g.h) {
        return Err(invalid("t_max", "window must cover at least one sample interval"));
    }
    let least = flavor == MeanFlavor::Least;
    let p = g.prefix_integrals();
    let trace: Vec<(T, T)> = window_grid(g.h, t_max)
        .into_iter()
        .map(|w| (T::from_usize_lossy(w) * g.h, windowed_extremum(&p, w, g.h, least)))
        .collect();
    let pick = |a: T, b: T| if least { b > a } else { b < a };
    let (mut best_window, mut value) = trace[0];
    for &(t, v) in &trace[1..] {
        if pick(value, v) {
            value = v;
            best_window = t;
        }
    }
    let value_at_t_max = trace.last().map(|p| p.1).unwrap_or(value);
    let scale = value.abs().max(g.sup() - g.inf());
    let warning = if (value_at_t_max - value).abs() > T::lit(CONVERGENCE_TOL) * scale {
        Some(format!(
            "{} mean not converged: {value} at T = {best_window} but {value_at_t_max} at T_max = {t_max}",
            if least { "least" } else { "upper" }
        ))
    } else {
        None
    };
    Ok(MeanEstimate {
        flavor,
        value,
        best_window,
        trace,
        value_at_t_max,
        warning,
    })
}

/// Least mean over windows up to `t_max` (at most half the horizon).
pub fn least_mean<T: Real>(g: &SampledFunction<T>, t_max: T) -> Result<MeanEstimate<T>> {
    mean_estimate(g, t_max, MeanFlavor::Least)
}

/// Upper mean over windows up to `t_max` (at most half the horizon).
pub fn upper_mean<T: Real>(g: &SampledFunction<T>, t_max: T) -> Result<MeanEstimate<T>> {
    mean_estimate(g, t_max, MeanFlavor::Upper)
}

/// Check of the corrector produced by [`construct_sigma`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCertificate<T> {
    pub least_mean: T,
    pub epsilon: T,
    pub block_length: T,
    /// `min` over sample intervals of `sigma' + g`.
    pub inf_sigma_prime_plus_g: T,
    pub sup_abs_sigma: T,
    /// `T* (|g|_inf + |lm(g)| + eps)`.
    pub sup_bound: T,
    pub holds: bool,
}

/// Builds `sigma` (sampled at the nodes `i h`) such that `sigma' + g` equals
/// the block mean of `g` on every block of length `T*`, where `T*` is the
/// shortest grid window whose worst average is at least `lm(g) - eps`. A
/// trailing partial block uses the smallest full-block mean.
pub fn construct_sigma<T: Real>(g: &SampledFunction<T>, epsilon: T) -> Result<(SampledFunction<T>, SigmaCertificate<T>)> {
    if !(epsilon > T::zero()) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let t_max = (g.horizon() * T::lit(0.5)).max(g.h);
    let lm = least_mean(g, t_max)?;
    let target = lm.value - epsilon;
    let p = g.prefix_integrals();
    let w = window_grid(g.h, t_max)
        .into_iter()
        .find(|&w| windowed_extremum(&p, w, g.h, true) >= target)
        .expect("the maximising window always qualifies");
    let n = g.cells();
    let block_mean = |start: usize| (p[start + w] - p[start]) / (T::from_usize_lossy(w) * g.h);
    // The trailing partial block follows the worst full block, which is
    // itself at least lm(g) - eps.
    let tail_mean = (0..n / w).map(|k| block_mean(k * w)).fold(T::infinity(), T::min).max(target);
    let mut sigma = vec![T::zero(); n + 1];
    let mut start = 0;
    while start < n {
        let end = (start + w).min(n);
        let m = if end - start == w { block_mean(start) } else { tail_mean };
        for i in start..end {
            sigma[i + 1] = sigma[i] - g.h * (g.cell_mean(i) - m);
        }
        start = end;
    }
    let inf = (0..n)
        .map(|i| (sigma[i + 1] - sigma[i]) / g.h + g.cell_mean(i))
        .fold(T::infinity(), T::min);
    let sup_abs = sigma.iter().map(|s| s.abs()).fold(T::zero(), T::max);
    let g_norm = g.sup().abs().max(g.inf().abs());
    let block_length = T::from_usize_lossy(w) * g.h;
    let sup_bound = block_length * (g_norm + lm.value.abs() + epsilon);
    let slack = T::lit(1e-9) * (T::one() + g_norm);
    let cert = SigmaCertificate {
        least_mean: lm.value,
        epsilon,
        block_length,
        inf_sigma_prime_plus_g: inf,
        sup_abs_sigma: sup_abs,
        sup_bound,
        holds: inf >= target - slack && sup_abs <= sup_bound + slack,
    };
    Ok((SampledFunction::points(g.h, sigma)?, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_least(g: &SampledFunction<f64>, t_max: f64) -> f64 {
        // Direct summation over every admissible (start, length) pair of the grid.
        let mut best = f64::NEG_INFINITY;
        for w in window_grid(g.h, t_max) {
            let mut worst = f64::INFINITY;
            for j in 0..=g.cells() - w {
                let s: f64 = (j..j + w).map(|i| g.cell_mean(i)).sum::<f64>() / w as f64;
                worst = worst.min(s);
            }
            best = best.max(worst);
        }
        best
    }

    fn random_fn(rng: &mut ChaCha8Rng) -> SampledFunction<f64> {
        let h = [0.1, 0.25, 0.5][rng.gen_range(0..3)];
        let n = (50.0 / h) as usize;
        let (a, b, w) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.1..3.0));
        let noise = rng.gen_range(0.0..0.5);
        let vals = (0..=n)
            .map(|i| a + b * (w * i as f64 * h).sin() + noise * rng.gen_range(-1.0..1.0))
            .collect();
        SampledFunction::points(h, vals).unwrap()
    }

    #[test]
    fn constant_is_exact() {
        let g = SampledFunction::<f64>::from_fn(0.1, 40.0, |_| 0.7).unwrap();
        let lm = least_mean(&g, 20.0).unwrap();
        let um = upper_mean(&g, 20.0).unwrap();
        assert!((lm.value - 0.7).abs() < 1e-14 && (um.value - 0.7).abs() < 1e-14);
        assert!(lm.warning.is_none());
    }

    #[test]
    fn sine_means() {
        let g = SampledFunction::<f64>::from_fn(0.01, 400.0, f64::sin).unwrap();
        let lm = least_mean(&g, 200.0).unwrap();
        let um = upper_mean(&g, 200.0).unwrap();
        assert!(lm.value.abs() < 0.02 && um.value.abs() < 0.02, "{} {}", lm.value, um.value);
        assert!(lm.warning.is_none());
        let g = SampledFunction::<f64>::from_fn(0.01, 400.0, |t| 1.0 + 0.5 * t.sin()).unwrap();
        assert!((least_mean(&g, 200.0).unwrap().value - 1.0).abs() < 0.02);
    }

    #[test]
    fn window_larger_than_half_horizon_is_rejected() {
        let g = SampledFunction::<f64>::from_fn(0.1, 40.0, |_| 1.0).unwrap();
        assert!(least_mean(&g, 21.0).is_err());
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let g = random_fn(&mut rng);
            let lm = least_mean(&g, 25.0).unwrap().value;
            assert!((lm - brute_least(&g, 25.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn algebraic_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = random_fn(&mut rng);
            let lm = least_mean(&g, 25.0).unwrap();
            let um = upper_mean(&g, 25.0).unwrap();
            assert!(lm.value <= um.value + 1e-12);
            assert!(lm.value >= g.inf() - 1e-12 && um.value <= g.sup() + 1e-12);
            let neg = upper_mean(&g.map(|v| -v), 25.0).unwrap();
            assert!((neg.value + lm.value).abs() < 1e-12);
            let c = rng.gen_range(-3.0..3.0);
            let shifted = least_mean(&g.map(|v| v + c), 25.0).unwrap();
            assert!((shifted.value - lm.value - c).abs() < 1e-10);
            // A window of length k w splits into k windows of length w, so the
            // windowed infimum is non-decreasing along multiples.
            let p = g.prefix_integrals();
            for w in [1usize, 3, 7, 20] {
                let base = windowed_extremum(&p, w, g.h, true);
                for k in 2..5 {
                    assert!(windowed_extremum(&p, k * w, g.h, true) >= base - 1e-12);
                }
            }
        }
    }

    #[test]
    fn sigma_for_constant_is_zero() {
        let g = SampledFunction::<f64>::from_fn(0.1, 50.0, |_| 1.0).unwrap();
        let (s, c) = construct_sigma(&g, 0.1).unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-12));
        assert!(c.holds && (c.inf_sigma_prime_plus_g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_for_sine() {
        let g = SampledFunction::<f64>::from_fn(0.01, 200.0, f64::sin).unwrap();
        let (_, c) = construct_sigma(&g, 0.1).unwrap();
        assert!(c.holds);
        assert!(c.inf_sigma_prime_plus_g >= -0.1);
        assert!(c.sup_abs_sigma <= 2.0 * std::f64::consts::PI * 1.2);
        let g = SampledFunction::<f64>::from_fn(0.01, 200.0, |t| 1.0 + 0.5 * t.sin()).unwrap();
        let (_, c) = construct_sigma(&g, 0.05).unwrap();
        assert!(c.holds && c.inf_sigma_prime_plus_g >= 0.95 - 0.02);
    }

    #[test]
    fn sigma_certificate_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let g = random_fn(&mut rng);
            let eps = rng.gen_range(0.01..0.3);
            let (_, c) = construct_sigma(&g, eps).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn cell_averages_integrate_exactly() {
        let g = SampledFunction::<f64>::cell_averages(1.0, vec![1.0, 3.0, 1.0, 3.0, 1.0, 3.0]).unwrap();
        let lm = least_mean(&g, 2.0).unwrap();
        assert!((lm.value - 2.0).abs() < 1e-14);
        assert_eq!(g.horizon(), 6.0);
    }
}
