use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let ok = lower.len() == upper.len()
            && !lower.is_empty()
            && lower.iter().zip(&upper).all(|(l, u)| l.is_finite() && u.is_finite() && l <= u);
        if ok {
            Ok(Self { lower, upper })
        } else {
            Err(Error::Validation {
                field: "optim.bounds",
                reason: "must be finite, ordered and non-empty",
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| if u > l { ((x - l) / (u - l)).clamp(0.0, 1.0) } else { 0.0 })
            .collect()
    }

    fn from_unit(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(y, (l, u))| l + y.clamp(0.0, 1.0) * (u - l))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadSettings {
    pub max_evals: usize,
    /// Initial simplex edge, in box-normalized units.
    pub initial_step: f64,
    /// Stop once every vertex lies within this normalized distance of the best.
    pub tolerance: f64,
    /// Extra runs restarted from the incumbent with a seeded random offset.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self {
            max_evals: 400,
            initial_step: 0.1,
            tolerance: 1e-6,
            restarts: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub x: Vec<f64>,
    /// Cost used by the simplex; a penalty if the evaluation failed.
    pub cost: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxEvaluations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub trace: Vec<EvalRecord>,
    pub evaluations: usize,
    pub termination: Termination,
    pub seed: u64,
}

impl OptimizationResult {
    /// Best feasible cost seen after each evaluation.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|r| {
                if r.feasible && r.cost < best {
                    best = r.cost;
                }
                best
            })
            .collect()
    }
}

struct Evaluator<'a, F> {
    f: F,
    bounds: &'a Bounds,
    trace: Vec<EvalRecord>,
    feasible: Vec<f64>,
    max: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Evaluator<'_, F> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.max
    }

    fn penalty(&self) -> f64 {
        if self.feasible.is_empty() {
            return 1e6;
        }
        let mut v = self.feasible.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        let med = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        if med > 0.0 {
            1e6 * med
        } else {
            1e6
        }
    }

    fn eval(&mut self, y: &[f64]) -> f64 {
        let x = self.bounds.from_unit(y);
        let (cost, feasible) = match (self.f)(&x) {
            Ok(c) if c.is_finite() => (c, true),
            _ => (self.penalty(), false),
        };
        if feasible {
            self.feasible.push(cost);
        }
        self.trace.push(EvalRecord { x, cost, feasible });
        cost
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a), projected onto the unit box
    a.iter().zip(b).map(|(a, b)| (a + t * (b - a)).clamp(0.0, 1.0)).collect()
}

/// Repeats simplex descents from the incumbent until a fresh simplex no
/// longer improves it. Box projection can flatten a simplex onto a face;
/// rebuilding it restores full dimension.
fn descend<F: FnMut(&[f64]) -> Result<f64>>(ev: &mut Evaluator<'_, F>, y0: &[f64], step: f64, tol: f64) -> bool {
    let mut y = y0.to_vec();
    let mut best = f64::INFINITY;
    loop {
        let (converged, yb, fb) = descend_once(ev, &y, step, tol);
        if !converged {
            return false;
        }
        if !(fb < best) || dist(&yb, &y) < tol {
            return true;
        }
        best = fb;
        y = yb;
    }
}

/// One simplex descent from `y0`: (converged, best vertex, best cost).
fn descend_once<F: FnMut(&[f64]) -> Result<f64>>(
    ev: &mut Evaluator<'_, F>,
    y0: &[f64],
    step: f64,
    tol: f64,
) -> (bool, Vec<f64>, f64) {
    let n = y0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = ev.eval(y0);
    simplex.push((y0.to_vec(), f0));
    for i in 0..n {
        if ev.exhausted() {
            return (false, y0.to_vec(), f0);
        }
        let mut y = y0.to_vec();
        y[i] = if y[i] + step <= 1.0 { y[i] + step } else { y[i] - step };
        let f = ev.eval(&y);
        simplex.push((y, f));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..].iter().map(|v| dist(&v.0, &simplex[0].0)).fold(0.0, f64::max);
        if diameter < tol {
            return (true, simplex[0].0.clone(), simplex[0].1);
        }
        if ev.exhausted() {
            return (false, simplex[0].0.clone(), simplex[0].1);
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let (worst, fw) = simplex[n].clone();
        let fb = simplex[0].1;
        let fs = simplex[n - 1].1;
        let yr = combine(&centroid, &worst, -1.0);
        let fr = ev.eval(&yr);
        if fr < fb {
            if ev.exhausted() {
                simplex[n] = (yr, fr);
                continue;
            }
            let ye = combine(&centroid, &worst, -2.0);
            let fe = ev.eval(&ye);
            simplex[n] = if fe < fr { (ye, fe) } else { (yr, fr) };
            continue;
        }
        if fr < fs {
            simplex[n] = (yr, fr);
            continue;
        }
        if ev.exhausted() {
            continue;
        }
        // Outside contraction towards the reflected point, inside otherwise.
        let (yc, fc) = if fr < fw {
            let y = combine(&centroid, &worst, -0.5);
            let f = ev.eval(&y);
            (y, f)
        } else {
            let y = combine(&centroid, &worst, 0.5);
            let f = ev.eval(&y);
            (y, f)
        };
        if fc < fr.min(fw) {
            simplex[n] = (yc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            if ev.exhausted() {
                break;
            }
            let y = combine(&best, &v.0, 0.5);
            let f = ev.eval(&y);
            *v = (y, f);
        }
    }
}

/// Bounded Nelder-Mead. Coordinates are normalized to the unit box and
/// every trial point is projected onto it. Failed evaluations receive
/// `1e6 x` the median feasible cost so the simplex keeps moving.
pub fn nelder_mead<F>(f: F, x0: &[f64], bounds: &Bounds, settings: &NelderMeadSettings) -> Result<OptimizationResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if x0.len() != bounds.dim() {
        return Err(Error::Validation {
            field: "optim.x0",
            reason: "dimension does not match bounds",
        });
    }
    let mut ev = Evaluator {
        f,
        bounds,
        trace: Vec::new(),
        feasible: Vec::new(),
        max: settings.max_evals.max(1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut start = bounds.to_unit(x0);
    let mut converged = descend(&mut ev, &start, settings.initial_step, settings.tolerance);
    for _ in 0..settings.restarts {
        if ev.exhausted() {
            break;
        }
        let best = best_feasible(&ev.trace).map(|r| bounds.to_unit(&r.x)).unwrap_or(start);
        start = best
            .iter()
            .map(|y| (y + settings.initial_step * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0))
            .collect();
        converged = descend(&mut ev, &start, settings.initial_step, settings.tolerance);
    }
    let n = ev.trace.len();
    let best = best_feasible(&ev.trace).ok_or(Error::AllEvaluationsFailed(n))?.clone();
    Ok(OptimizationResult {
        x_best: best.x,
        f_best: best.cost,
        evaluations: n,
        trace: ev.trace,
        termination: if converged { Termination::Converged } else { Termination::MaxEvaluations },
        seed: settings.seed,
    })
}

fn best_feasible(trace: &[EvalRecord]) -> Option<&EvalRecord> {
    // First occurrence wins ties, which keeps the choice deterministic.
    trace.iter().filter(|r| r.feasible).fold(None, |b: Option<&EvalRecord>, r| match b {
        Some(b) if b.cost <= r.cost => Some(b),
        _ => Some(r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(max: usize, tol: f64) -> NelderMeadSettings {
        NelderMeadSettings {
            max_evals: max,
            tolerance: tol,
            ..Default::default()
        }
    }

    #[test]
    fn sphere_interior_minimum() {
        let c = [0.3, -0.2, 0.7];
        let f = |x: &[f64]| Ok(x.iter().zip(&c).map(|(x, c)| (x - c) * (x - c)).sum());
        let b = Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let r = nelder_mead(f, &[0.0; 3], &b, &settings(5000, 1e-11)).unwrap();
        for i in 0..3 {
            assert!((r.x_best[i] - c[i]).abs() < 1e-8, "{:?}", r.x_best);
        }
        assert_eq!(r.termination, Termination::Converged);
    }

    #[test]
    fn sphere_outside_box_lands_on_projection() {
        let c = [2.0, -0.5];
        let f = |x: &[f64]| Ok(x.iter().zip(&c).map(|(x, c)| (x - c) * (x - c)).sum());
        let b = Bounds::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let r = nelder_mead(f, &[0.0; 2], &b, &settings(5000, 1e-11)).unwrap();
        assert!((r.x_best[0] - 1.0).abs() < 1e-8 && (r.x_best[1] + 0.5).abs() < 1e-8, "{:?} {} {:?}", r.x_best, r.evaluations, r.termination);
    }

    #[test]
    fn rosenbrock_within_budget() {
        let f = |x: &[f64]| Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2));
        let b = Bounds::new(vec![-2.0; 2], vec![2.0; 2]).unwrap();
        let r = nelder_mead(f, &[-1.2, 1.0], &b, &settings(500, 1e-10)).unwrap();
        assert!(r.f_best < 1e-6, "f = {} after {}", r.f_best, r.evaluations);
        assert!(r.evaluations <= 500);
    }

    #[test]
    fn failures_are_penalized_and_never_returned() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                Err(Error::IllConditioned)
            } else {
                Ok((x[0] - 0.02).powi(2))
            }
        };
        let b = Bounds::new(vec![-1.0], vec![1.0]).unwrap();
        let r = nelder_mead(f, &[0.9], &b, &settings(200, 1e-9)).unwrap();
        assert!(r.trace.iter().any(|e| !e.feasible));
        assert!(r.x_best[0] >= 0.0 && (r.x_best[0] - 0.02).abs() < 1e-4);
    }

    #[test]
    fn all_failures_report_error() {
        let f = |_: &[f64]| -> Result<f64> { Err(Error::IllConditioned) };
        let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(
            nelder_mead(f, &[0.5], &b, &settings(10, 1e-9)),
            Err(Error::AllEvaluationsFailed(10))
        );
    }
}
