//! Limited-memory quasi-Newton minimisation for smooth convex objectives.
//!
//! Used by the constrained-projection dual and anywhere a cheap
//! unconstrained inner solve is needed. The implementation is the standard
//! two-loop recursion over a short (s, y) history with backtracking line
//! search on the sufficient-decrease condition; curvature pairs that fail
//! s·y > 0 are skipped rather than damped.

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    /// Number of (s, y) pairs retained.
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the gradient sup-norm falls below this.
    pub grad_tol: f64,
    /// Sufficient-decrease constant for the backtracking search.
    pub armijo: f64,
    pub max_line_steps: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 8, max_iters: 500, grad_tol: 1e-9, armijo: 1e-4, max_line_steps: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimise `f`, which must write the gradient at `x` into its second
/// argument and return the value. Starts from `x0`; returns the final point
/// and a convergence report.
pub fn lbfgs_minimize(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
) -> (Vec<f64>, LbfgsReport) {
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        if inf_norm(&grad) <= cfg.grad_tol {
            break;
        }
        iterations += 1;

        // two-loop recursion: direction = -H·grad
        let mut q = grad.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &q);
            alphas[i] = a;
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= a * yj;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y).max(1e-300);
            for qj in q.iter_mut() {
                *qj *= gamma;
            }
        }
        for i in 0..s_hist.len() {
            let b = rho_hist[i] * dot(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alphas[i] - b) * sj;
            }
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();

        let mut slope = dot(&grad, &dir);
        let descent = if slope < 0.0 {
            dir
        } else {
            // defensive fallback: steepest descent
            slope = -dot(&grad, &grad);
            grad.iter().map(|g| -g).collect()
        };

        // backtracking on f(x + t·d) ≤ f(x) + c·t·⟨g, d⟩
        let mut t = 1.0;
        let mut new_x = vec![0.0; n];
        let mut new_grad = vec![0.0; n];
        let mut new_value = value;
        let mut accepted = false;
        for _ in 0..cfg.max_line_steps {
            for ((nx, &xi), &di) in new_x.iter_mut().zip(&x).zip(&descent) {
                *nx = xi + t * di;
            }
            new_value = f(&new_x, &mut new_grad);
            // sufficient decrease, with an absolute slack so the search can
            // still make progress when |f| dwarfs the remaining decrease
            if new_value <= value + cfg.armijo * t * slope + 1e-14 * (1.0 + value.abs()) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }

        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * inf_norm(&s).max(1e-300) * inf_norm(&y).max(1e-300) {
            if s_hist.len() == cfg.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x = new_x;
        grad = new_grad;
        value = new_value;
    }

    let grad_norm = inf_norm(&grad);
    let converged = grad_norm <= cfg.grad_tol;
    (x, LbfgsReport { iterations, value, grad_norm, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_minimised_exactly() {
        // f = ½ Σ (i+1)·x_i², minimum at the origin
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (i, (&xi, gi)) in x.iter().zip(g.iter_mut()).enumerate() {
                let w = (i + 1) as f64;
                v += 0.5 * w * xi * xi;
                *gi = w * xi;
            }
            v
        };
        let (x, rep) = lbfgs_minimize(f, vec![3.0; 12], &LbfgsConfig::default());
        assert!(rep.converged, "grad norm {}", rep.grad_norm);
        assert!(x.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn rosenbrock_reaches_optimum() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let cfg = LbfgsConfig { max_iters: 2000, grad_tol: 1e-8, ..Default::default() };
        let (x, rep) = lbfgs_minimize(f, vec![-1.2, 1.0], &cfg);
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn piecewise_smooth_max_with_zero_region() {
        // f = ½ Σ max(x_i, 0)² is C¹ but not C²: the flat region must not
        // trap the line search. Optimum value 0 on the nonpositive orthant.
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (&xi, gi) in x.iter().zip(g.iter_mut()) {
                let p = xi.max(0.0);
                v += 0.5 * p * p;
                *gi = p;
            }
            v
        };
        let (x, rep) = lbfgs_minimize(f, vec![2.0, -1.0, 0.5], &LbfgsConfig::default());
        assert!(rep.value < 1e-14, "value {}", rep.value);
        assert!(x[0] < 1e-6 && x[2] < 1e-6);
        assert!((x[1] + 1.0).abs() < 1e-9, "untouched coordinate moved");
    }
}
