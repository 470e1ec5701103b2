//! Quasi-Newton minimizer: BFGS inverse-Hessian update with a backtracking
//! Armijo line search.

use nalgebra::{DMatrix, DVector};

pub struct BfgsOptions {
    /// Convergence test: max-norm of the gradient.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gradient_tolerance: 1e-5,
            max_iterations: 300,
        }
    }
}

pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f`, which returns the value and gradient at a point.
/// Non-finite trial values are treated as rejected steps.
pub fn minimize<F>(mut f: F, x0: &[f64], options: &BfgsOptions) -> Option<BfgsOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x.as_slice());
    if !fx.is_finite() {
        return None;
    }
    let mut grad = DVector::from_vec(g0);
    let mut h_inv = DMatrix::<f64>::identity(n, n);

    let mut iterations = 0;
    for _ in 0..options.max_iterations {
        let gnorm = grad.amax();
        if gnorm <= options.gradient_tolerance {
            return Some(BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient_norm: gnorm,
                iterations,
                converged: true,
            });
        }
        iterations += 1;

        let mut direction = -(&h_inv * &grad);
        let mut slope = direction.dot(&grad);
        if slope >= 0.0 {
            // Curvature information went bad; restart from steepest descent.
            h_inv = DMatrix::identity(n, n);
            direction = -grad.clone();
            slope = direction.dot(&grad);
        }

        // Backtracking Armijo search.
        let mut step = 1.0;
        let c1 = 1e-4;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + step * &direction;
            let (ft, gt) = f(trial.as_slice());
            if ft.is_finite() && ft <= fx + c1 * step * slope {
                accepted = Some((trial, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // Line search failed; report the best point found so far.
            let gnorm = grad.amax();
            return Some(BfgsOutcome {
                x: x.as_slice().to_vec(),
                value: fx,
                gradient_norm: gnorm,
                iterations,
                converged: gnorm <= options.gradient_tolerance,
            });
        };

        let s = &x_new - &x;
        let y = &g_new - &grad;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let identity = DMatrix::<f64>::identity(n, n);
            let left = &identity - rho * &s * y.transpose();
            let right = &identity - rho * &y * s.transpose();
            h_inv = &left * &h_inv * &right + rho * &s * s.transpose();
        }

        x = x_new;
        fx = f_new;
        grad = g_new;
    }

    let gnorm = grad.amax();
    Some(BfgsOutcome {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= options.gradient_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let f = |x: &[f64]| {
            let v = (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
            (v, vec![2.0 * (x[0] - 3.0), 4.0 * (x[1] + 1.0)])
        };
        let out = minimize(f, &[0.0, 0.0], &BfgsOptions::default()).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-6);
        assert!((out.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (1.0, 100.0);
            let v = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (a - x[0]) - 4.0 * b * (x[1] - x[0] * x[0]) * x[0],
                2.0 * b * (x[1] - x[0] * x[0]),
            ];
            (v, g)
        };
        let out = minimize(
            f,
            &[-1.2, 1.0],
            &BfgsOptions {
                gradient_tolerance: 1e-6,
                max_iterations: 500,
            },
        )
        .unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-4);
        assert!((out.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let f = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(minimize(f, &[0.0], &BfgsOptions::default()).is_none());
    }
}
