//! Derivative-free minimization with the Nelder-Mead simplex method.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged once the spread of simplex values drops below `ftol`
    /// and its largest edge below `xtol`.
    pub ftol: f64,
    pub xtol: f64,
    /// Fresh simplices built around the best point after convergence.
    pub restarts: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: 1e-10,
            xtol: 1e-8,
            restarts: 3,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Objective value of every evaluation, in call order.
    pub trace: Vec<f64>,
}

/// Optional box constraints; trial points are projected into the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

struct Counter<'a, F> {
    f: F,
    bounds: Option<&'a Bounds>,
    evals: usize,
    trace: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &mut [f64]) -> f64 {
        if let Some(b) = self.bounds {
            b.project(x);
        }
        self.evals += 1;
        let v = (self.f)(x);
        // NaN compares as worst.
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.trace.push(v);
        v
    }
}

/// Minimizes `f` starting from `x0` with an initial simplex of per-axis
/// `steps`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    steps: &[f64],
    bounds: Option<&Bounds>,
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    assert_eq!(x0.len(), steps.len(), "one initial step per coordinate");
    let mut counter = Counter { f, bounds, evals: 0, trace: Vec::new() };
    let mut best_x = x0.to_vec();
    let mut best_f = counter.eval(&mut best_x);
    let mut converged = false;
    let mut restarts_used = 0;
    for attempt in 0..=opts.restarts {
        if counter.evals >= opts.max_evals {
            break;
        }
        // Restarts shrink the simplex so they probe locally.
        let scale = 0.5f64.powi(attempt as i32);
        let (x, fx, ok) = run(&mut counter, &best_x, best_f, steps, scale, opts);
        let improvement = best_f - fx;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if attempt > 0 {
            restarts_used = attempt;
        }
        if ok && attempt > 0 && improvement <= opts.ftol {
            break;
        }
    }
    NelderMeadResult { x: best_x, f: best_f, evals: counter.evals, converged, restarts_used, trace: counter.trace }
}

fn run<F: FnMut(&[f64]) -> f64>(
    c: &mut Counter<'_, F>,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    scale: f64,
    o: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += steps[k] * scale;
        if x[k] == x0[k] || c.bounds.is_some_and(|b| x[k] > b.upper[k]) {
            x[k] = x0[k] - steps[k] * scale;
        }
        let fx = c.eval(&mut x);
        simplex.push((x, fx));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= o.ftol && diameter <= o.xtol {
            return (simplex[0].0.clone(), simplex[0].1, true);
        }
        if diameter == 0.0 {
            // Collapsed onto a point without meeting the value tolerance.
            return (simplex[0].0.clone(), simplex[0].1, false);
        }
        if c.evals >= o.max_evals {
            return (simplex[0].0.clone(), simplex[0].1, false);
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (ci, xi) in centroid.iter_mut().zip(x) {
                *ci += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(ci, wi)| ci + t * (ci - wi)).collect()
        };
        let mut xr = along(o.reflection);
        let fr = c.eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = along(o.reflection * o.expansion);
            let fe = c.eval(&mut xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, outside) = if fr < simplex[n].1 {
                (along(o.reflection * o.contraction), true)
            } else {
                (along(-o.contraction), false)
            };
            let fc = c.eval(&mut xc);
            let accept = if outside { fc <= fr } else { fc < simplex[n].1 };
            if accept {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex[1..].iter_mut() {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + o.shrink * (*xi - bi);
                    }
                    *fx = c.eval(x);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(rosen, &[-1.2, 1.0], &[0.1, 0.1], None, &NelderMeadOptions { max_evals: 5000, ..Default::default() });
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert_eq!(r.trace.len(), r.evals);
    }

    #[test]
    fn respects_bounds() {
        let b = Bounds { lower: vec![0.5], upper: vec![2.0] };
        let r = minimize(|x| x[0] * x[0], &[1.0], &[0.2], Some(&b), &NelderMeadOptions::default());
        assert!((r.x[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.1).abs();
        let a = minimize(f, &[0.0, 0.0], &[0.1, 0.1], None, &NelderMeadOptions::default());
        let b = minimize(f, &[0.0, 0.0], &[0.1, 0.1], None, &NelderMeadOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(rosen, &[-1.2, 1.0], &[0.1, 0.1], None, &NelderMeadOptions { max_evals: 20, ..Default::default() });
        assert!(!r.converged);
        assert!(r.evals <= 22);
    }
}
