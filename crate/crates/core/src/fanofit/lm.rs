//! Levenberg–Marquardt for four-parameter models.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

pub(crate) struct LmOptions {
    pub max_iter: usize,
    /// Relative parameter-step tolerance.
    pub xtol: f64,
    /// Infinity-norm tolerance on `Jᵀr`.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 500, xtol: 1e-10, gtol: 1e-12 }
    }
}

pub(crate) struct LmOutcome {
    pub theta: Vector4<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `½|r(θ)|²`. `eval` returns residuals and their Jacobian (or
/// `None` where the model is undefined); `project` maps a trial point back
/// into the feasible set.
pub(crate) fn minimize<F, P>(theta0: Vector4<f64>, eval: F, project: P, opts: &LmOptions) -> LmOutcome
where
    F: Fn(&Vector4<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>,
    P: Fn(&mut Vector4<f64>),
{
    let mut theta = theta0;
    let Some((mut r, mut j)) = eval(&theta) else {
        return LmOutcome { theta, cost: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut cost = 0.5 * r.norm_squared();
    let mut jtj: Matrix4<f64> = (j.transpose() * &j).fixed_view::<4, 4>(0, 0).into_owned();
    let mut lambda = 1e-3 * jtj.diagonal().max().max(1e-300);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let g: Vector4<f64> = (j.transpose() * &r).fixed_rows::<4>(0).into_owned();
        if g.amax() < opts.gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut a = jtj;
        for i in 0..4 {
            a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
        }
        let Some(chol) = a.cholesky() else {
            lambda *= 10.0;
            continue;
        };
        let delta = -chol.solve(&g);
        let mut trial = theta + delta;
        project(&mut trial);
        let small = is_small(&(trial - theta), &theta, opts.xtol);
        match eval(&trial) {
            Some((rt, jt)) if 0.5 * rt.norm_squared() < cost => {
                theta = trial;
                cost = 0.5 * rt.norm_squared();
                r = rt;
                j = jt;
                jtj = (j.transpose() * &j).fixed_view::<4, 4>(0, 0).into_owned();
                lambda = (lambda * 0.3).max(1e-20);
                if small {
                    converged = true;
                    break;
                }
            }
            _ => {
                if small {
                    // no representable improvement left
                    converged = true;
                    break;
                }
                lambda *= 10.0;
                if lambda > 1e30 {
                    break;
                }
            }
        }
    }
    if converged {
        // cost differences along a flat valley vanish below rounding long before
        // the gradient does; finish with undamped steps that keep the cost within
        // rounding of its minimum
        for _ in 0..20 {
            let g: Vector4<f64> = (j.transpose() * &r).fixed_rows::<4>(0).into_owned();
            let Some(chol) = jtj.cholesky() else { break };
            let mut trial = theta - chol.solve(&g);
            project(&mut trial);
            if is_small(&(trial - theta), &theta, 1e-3 * opts.xtol) {
                break;
            }
            match eval(&trial) {
                Some((rt, jt)) if 0.5 * rt.norm_squared() <= cost * (1.0 + 1e-13) => {
                    theta = trial;
                    cost = cost.min(0.5 * rt.norm_squared());
                    r = rt;
                    j = jt;
                    jtj = (j.transpose() * &j).fixed_view::<4, 4>(0, 0).into_owned();
                }
                _ => break,
            }
        }
    }
    LmOutcome { theta, cost, iterations, converged }
}

fn is_small(step: &Vector4<f64>, theta: &Vector4<f64>, xtol: f64) -> bool {
    (0..4).all(|i| step[i].abs() <= xtol * (theta[i].abs() + xtol))
}
