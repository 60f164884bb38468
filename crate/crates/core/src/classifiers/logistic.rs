use nalgebra::{DMatrix, DVector};

use super::ClassifierError;
use crate::data::StandardizationParams;

pub const DEFAULT_RIDGE: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 500;
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub ridge_lambda: f64,
    pub standardization: Option<StandardizationParams>,
    pub iterations: usize,
    /// ∞-norm of the regularized gradient at the returned point.
    pub grad_norm: f64,
}

impl LogisticModel {
    pub fn zero(p: usize) -> Self {
        Self {
            beta0: 0.0,
            beta: vec![0.0; p],
            ridge_lambda: 0.0,
            standardization: None,
            iterations: 0,
            grad_norm: 0.0,
        }
    }

    pub fn converged(&self) -> bool {
        self.grad_norm <= GRAD_TOL
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.beta0 + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// log(1 + e^t) without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// 1 / (1 + e^{-t}).
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &[i8]) -> Result<(), ClassifierError> {
    if x.nrows() != y.len() {
        return Err(ClassifierError::Shape(format!(
            "{} rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn margins(x: &DMatrix<f64>, theta: &DVector<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| theta[0] + (0..x.ncols()).map(|j| x[(i, j)] * theta[j + 1]).sum::<f64>())
        .collect()
}

fn objective(x: &DMatrix<f64>, y: &[i8], theta: &DVector<f64>, lambda: f64) -> f64 {
    let m = margins(x, theta);
    let loss: f64 = m.iter().zip(y).map(|(m, &y)| softplus(-f64::from(y) * m)).sum();
    let ridge: f64 = theta.rows(1, x.ncols()).norm_squared();
    loss + 0.5 * lambda * ridge
}

fn gradient(x: &DMatrix<f64>, y: &[i8], theta: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let p = x.ncols();
    let m = margins(x, theta);
    let mut g = DVector::zeros(p + 1);
    for i in 0..x.nrows() {
        let yi = f64::from(y[i]);
        let w = -yi * sigmoid(-yi * m[i]);
        g[0] += w;
        for j in 0..p {
            g[j + 1] += w * x[(i, j)];
        }
    }
    for j in 0..p {
        g[j + 1] += lambda * theta[j + 1];
    }
    g
}

fn hessian(x: &DMatrix<f64>, theta: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
    let p = x.ncols();
    let m = margins(x, theta);
    let mut h = DMatrix::zeros(p + 1, p + 1);
    let mut row = vec![0.0; p + 1];
    for i in 0..x.nrows() {
        let s = sigmoid(m[i]);
        let w = s * (1.0 - s);
        row[0] = 1.0;
        for j in 0..p {
            row[j + 1] = x[(i, j)];
        }
        for a in 0..=p {
            let wa = w * row[a];
            for b in a..=p {
                h[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..=p {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    for j in 1..=p {
        h[(j, j)] += lambda;
    }
    h
}

fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let scale = h.diagonal().amax().max(1.0);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut hj = h.clone();
        for k in 0..hj.nrows() {
            hj[(k, k)] += jitter;
        }
        if let Some(ch) = hj.cholesky() {
            return -ch.solve(g);
        }
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 100.0 };
    }
    -g.clone()
}

/// Ridge-regularized logistic regression by damped Newton. The intercept is
/// not penalized.
pub fn fit_logistic(x: &DMatrix<f64>, y: &[i8], ridge_lambda: f64) -> Result<LogisticModel, ClassifierError> {
    check_shapes(x, y)?;
    if y.len() < 2 {
        return Err(ClassifierError::Degenerate("need at least two rows".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(ClassifierError::Degenerate("labels contain a single class".into()));
    }
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(ClassifierError::Degenerate("ridge must be a finite non-negative number".into()));
    }
    let p = x.ncols();
    let mut theta = DVector::zeros(p + 1);
    let mut f = objective(x, y, &theta, ridge_lambda);
    let mut g = gradient(x, y, &theta, ridge_lambda);
    let mut iterations = 0;
    while g.amax() > GRAD_TOL && iterations < MAX_NEWTON {
        iterations += 1;
        let d = newton_direction(hessian(x, &theta, ridge_lambda), &g);
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut accepted = None;
        // Below the rounding level of f the Armijo test cannot see progress.
        let flat = -slope <= 1e-12 * f.abs().max(1.0);
        for _ in 0..if flat { 0 } else { 60 } {
            let cand = &theta + t * &d;
            let fc = objective(x, y, &cand, ridge_lambda);
            if fc <= f + ARMIJO * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let (cand, fc) = match accepted {
            Some(v) => v,
            None => {
                // Near the optimum the objective is flat to rounding; take the
                // full step if it shrinks the gradient.
                let cand = &theta + &d;
                if gradient(x, y, &cand, ridge_lambda).amax() < g.amax() {
                    let fc = objective(x, y, &cand, ridge_lambda);
                    (cand, fc)
                } else {
                    break;
                }
            }
        };
        theta = cand;
        f = fc;
        g = gradient(x, y, &theta, ridge_lambda);
    }
    Ok(LogisticModel {
        beta0: theta[0],
        beta: theta.rows(1, p).iter().copied().collect(),
        ridge_lambda,
        standardization: None,
        iterations,
        grad_norm: g.amax(),
    })
}

/// Σ log(1 + exp(−y_i(β·x_i + β0))), without the ridge term.
pub fn logistic_loss(model: &LogisticModel, x: &DMatrix<f64>, y: &[i8]) -> Result<f64, ClassifierError> {
    check_shapes(x, y)?;
    if model.beta.len() != x.ncols() {
        return Err(ClassifierError::Shape("coefficient length differs from column count".into()));
    }
    Ok((0..x.nrows())
        .map(|i| {
            let m = model.beta0 + (0..x.ncols()).map(|j| x[(i, j)] * model.beta[j]).sum::<f64>();
            softplus(-f64::from(y[i]) * m)
        })
        .sum())
}

/// Gradient blocks of f(β, γ) = Σ log(1 + exp(−y_i(β·x_i+β0) + 2y_i(γ_i·x_i+γ_{i,0}))).
#[derive(Clone, Debug, PartialEq)]
pub struct FlipGradient {
    pub d_beta0: f64,
    pub d_beta: Vec<f64>,
    pub d_gamma0: Vec<f64>,
    pub d_gamma: DMatrix<f64>,
}

fn flip_exponents(
    beta0: f64,
    beta: &[f64],
    gamma0: &[f64],
    gamma: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &[i8],
) -> Result<Vec<f64>, ClassifierError> {
    let (n, p) = x.shape();
    check_shapes(x, y)?;
    if beta.len() != p || gamma0.len() != n || gamma.shape() != (n, p) {
        return Err(ClassifierError::Shape("flip variables do not match data shape".into()));
    }
    Ok((0..n)
        .map(|i| {
            let yi = f64::from(y[i]);
            let m = beta0 + (0..p).map(|j| beta[j] * x[(i, j)]).sum::<f64>();
            let g = gamma0[i] + (0..p).map(|j| gamma[(i, j)] * x[(i, j)]).sum::<f64>();
            -yi * m + 2.0 * yi * g
        })
        .collect())
}

/// f(β, γ) with γ_{i,·} standing in for z_i·β_·.
pub fn flip_objective(
    beta0: f64,
    beta: &[f64],
    gamma0: &[f64],
    gamma: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &[i8],
) -> Result<f64, ClassifierError> {
    Ok(flip_exponents(beta0, beta, gamma0, gamma, x, y)?.into_iter().map(softplus).sum())
}

/// Gradient of [`flip_objective`]. The per-point weight is
/// q_i = 1 / (1 + exp(y_i(β·x_i+β0) − 2y_i(γ_i·x_i+γ_{i,0}))), the derivative
/// of the i-th softplus term with respect to its exponent.
pub fn logistic_flip_gradient(
    beta0: f64,
    beta: &[f64],
    gamma0: &[f64],
    gamma: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &[i8],
) -> Result<FlipGradient, ClassifierError> {
    let t = flip_exponents(beta0, beta, gamma0, gamma, x, y)?;
    let (n, p) = x.shape();
    let mut out = FlipGradient {
        d_beta0: 0.0,
        d_beta: vec![0.0; p],
        d_gamma0: vec![0.0; n],
        d_gamma: DMatrix::zeros(n, p),
    };
    for i in 0..n {
        let yq = f64::from(y[i]) * sigmoid(t[i]);
        out.d_beta0 -= yq;
        out.d_gamma0[i] = 2.0 * yq;
        for j in 0..p {
            out.d_beta[j] -= yq * x[(i, j)];
            out.d_gamma[(i, j)] = 2.0 * yq * x[(i, j)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_column_balanced_labels() {
        let x = DMatrix::zeros(4, 1);
        let m = fit_logistic(&x, &[1, -1, 1, -1], 1e-6).unwrap();
        assert!(m.beta0.abs() < 1e-12 && m.beta[0].abs() < 1e-12);
    }

    #[test]
    fn separable_data_stays_finite() {
        let x = DMatrix::from_column_slice(4, 1, &[-2.0, -1.0, 1.0, 2.0]);
        let m = fit_logistic(&x, &[-1, -1, 1, 1], 1e-6).unwrap();
        assert!(m.beta[0].is_finite() && m.beta[0] > 1.0);
        assert!(m.converged(), "grad {}", m.grad_norm);
    }

    #[test]
    fn one_class_rejected() {
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(fit_logistic(&x, &[1, 1, 1], 1e-6), Err(ClassifierError::Degenerate(_))));
    }

    #[test]
    fn loss_values() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let mut m = LogisticModel::zero(1);
        assert!((logistic_loss(&m, &x, &[1, -1]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        m.beta[0] = 1.0;
        let want = (1.0 + (-1f64).exp()).ln() + (1.0 + 1f64.exp()).ln();
        assert!((logistic_loss(&m, &x, &[1, -1]).unwrap() - want).abs() < 1e-14);
        assert!(logistic_loss(&m, &x, &[1]).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(-800.0), 0.0);
        assert_eq!(softplus(800.0), 800.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn saturated_margins_have_vanishing_gradient() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, -1.0]);
        let g = logistic_flip_gradient(0.0, &[60.0], &[0.0; 2], &DMatrix::zeros(2, 1), &x, &[1, -1]).unwrap();
        assert!(g.d_beta[0].abs() < 1e-20 && g.d_beta0.abs() < 1e-20);
    }
}
