//! Dense BFGS for small problems, minimizing `φ(x)`.
//!
//! The line search is Armijo backtracking; a trial point whose value is not
//! finite (the objective returns `+∞` outside the feasible set) is treated as a
//! failed trial and the step is halved, so iterates never leave the interior.

#[derive(Debug, Clone)]
pub(crate) struct BfgsOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Upper bound on the Euclidean length of any single step.
    pub max_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn identity(n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { scale } else { 0.0 }).collect()).collect()
}

/// `x0` must be feasible (finite value).
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    debug_assert!(fx.is_finite(), "BFGS started at an infeasible point");
    let mut h = identity(n, 1.0);
    let mut first_update = true;
    let mut iterations = 0;

    loop {
        let gn = norm(&g);
        if gn <= opts.grad_tol {
            return BfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: true };
        }
        if iterations >= opts.max_iters {
            return BfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: false };
        }
        iterations += 1;

        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            // Lost descent; restart from steepest descent.
            h = identity(n, 1.0);
            first_update = true;
            d = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }

        let dn = norm(&d);
        let mut t = if dn > opts.max_step { opts.max_step / dn } else { 1.0 };
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + ARMIJO * t * slope {
                break (trial, ft, gt);
            }
            t *= 0.5;
            if t * dn < MIN_STEP * (1.0 + norm(&x)) {
                // No acceptable step: we are at the resolution limit of φ.
                return BfgsOutcome { x, value: fx, grad_norm: gn, iterations, converged: false };
            }
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if first_update {
                h = identity(n, sy / dot(&y, &y));
                first_update = false;
            }
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        x = x_new;
        fx = f_new;
        g = g_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> BfgsOptions {
        BfgsOptions { grad_tol: 1e-10, max_iters: 500, max_step: 1.0 }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let out = minimize(f, &[-1.2, 1.0], &opts());
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stays_inside_barrier() {
        // Minimize x − ln(x) − ln(2 − x) … restricted to 0 < x < 2; infeasible is +∞.
        let f = |x: &[f64]| {
            let v = x[0];
            if v <= 0.0 || v >= 2.0 {
                return (f64::INFINITY, vec![0.0]);
            }
            (3.0 * v - 0.1 * v.ln() - 0.1 * (2.0 - v).ln(), vec![3.0 - 0.1 / v + 0.1 / (2.0 - v)])
        };
        let out = minimize(f, &[1.9], &opts());
        assert!(out.converged);
        let want = {
            // root of 3 − 0.1/x + 0.1/(2 − x) in (0, 2)
            let (mut lo, mut hi) = (1e-12, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 3.0 - 0.1 / mid + 0.1 / (2.0 - mid) > 0.0 { hi = mid } else { lo = mid }
            }
            lo
        };
        assert!((out.x[0] - want).abs() < 1e-8);
    }
}
