use nalgebra::DMatrix;

use super::ClassifierError;
use crate::data::StandardizationParams;

pub const DEFAULT_C: f64 = 1.0;
const GAP_TOL: f64 = 1e-6;
const MAX_EPOCHS: usize = 100_000;
const TAU: f64 = 1e-12;

/// Linear soft-margin SVM with decision value w·x − b.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub b: f64,
    pub w: Vec<f64>,
    pub c: f64,
    pub standardization: Option<StandardizationParams>,
    /// ½‖w‖² + C·Σξ on the training data at fit time.
    pub objective: f64,
    pub duality_gap: f64,
}

impl SvmModel {
    pub fn zero(p: usize, c: f64) -> Self {
        Self {
            b: 0.0,
            w: vec![0.0; p],
            c,
            standardization: None,
            objective: 0.0,
            duality_gap: 0.0,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() - self.b
    }

    /// ½‖w‖² + C·Σ max(0, 1 − y_i(w·x_i − b)).
    pub fn primal_objective(&self, x: &DMatrix<f64>, y: &[i8]) -> Result<f64, ClassifierError> {
        let xi: f64 = hinge_losses(self, x, y)?.iter().sum();
        Ok(0.5 * self.w.iter().map(|v| v * v).sum::<f64>() + self.c * xi)
    }
}

pub fn hinge_losses(model: &SvmModel, x: &DMatrix<f64>, y: &[i8]) -> Result<Vec<f64>, ClassifierError> {
    if x.nrows() != y.len() || x.ncols() != model.w.len() {
        return Err(ClassifierError::Shape(format!(
            "data is {}x{} with {} labels, model has {} weights",
            x.nrows(),
            x.ncols(),
            y.len(),
            model.w.len()
        )));
    }
    Ok((0..x.nrows())
        .map(|i| {
            let s: f64 = (0..x.ncols()).map(|j| x[(i, j)] * model.w[j]).sum::<f64>() - model.b;
            (1.0 - f64::from(y[i]) * s).max(0.0)
        })
        .collect())
}

fn dot_row(x: &DMatrix<f64>, i: usize, w: &[f64]) -> f64 {
    (0..x.ncols()).map(|j| x[(i, j)] * w[j]).sum()
}

/// Offset minimizing Σ max(0, 1 − y_i(s_i − b)) for fixed scores s. The
/// minimizers form an interval; the point of it closest to `hint` is returned.
fn best_offset(s: &[f64], y: &[i8], hint: f64) -> f64 {
    // Positive rows contribute max(0, b − (s_i − 1)), negative rows
    // max(0, (s_i + 1) − b). The slope at b is #{pos kinks < b} − #{neg kinks > b}.
    let mut kinks: Vec<(f64, bool)> = s
        .iter()
        .zip(y)
        .map(|(&si, &yi)| if yi > 0 { (si - 1.0, true) } else { (si + 1.0, false) })
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_neg = kinks.iter().filter(|k| !k.1).count() as i64;
    // slope just left of the first kink
    let mut slope = -total_neg;
    if slope >= 0 {
        return hint.min(kinks.first().map_or(hint, |k| k.0));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut i = 0;
    while i < kinks.len() {
        let at = kinks[i].0;
        let mut j = i;
        while j < kinks.len() && kinks[j].0 == at {
            slope += 1;
            j += 1;
        }
        if slope >= 0 && lo == f64::NEG_INFINITY {
            lo = at;
            if slope > 0 {
                return at;
            }
            // slope exactly zero: flat until the next kink
            let hi = kinks.get(j).map_or(f64::INFINITY, |k| k.0);
            return hint.clamp(lo, hi);
        }
        i = j;
    }
    hint
}

/// L1-hinge linear SVM fitted through its dual by sequential minimal
/// optimization on pairs (maximal-violating pair, second-order choice), then
/// an exact offset for the final weights.
pub fn fit_svm(x: &DMatrix<f64>, y: &[i8], c: f64) -> Result<SvmModel, ClassifierError> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(ClassifierError::Shape(format!("{n} rows but {} labels", y.len())));
    }
    if n < 2 || !(y.contains(&1) && y.contains(&-1)) {
        return Err(ClassifierError::Degenerate("need both labels present".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifierError::Degenerate("C must be positive".into()));
    }
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let kdiag: Vec<f64> = (0..n).map(|i| x.row(i).norm_squared()).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; p];
    let mut eps = 1e-3;
    let mut steps = 0usize;
    let max_steps = MAX_EPOCHS.saturating_mul(n);
    let mut grad = vec![0.0; n];
    loop {
        // G_t = y_t w·x_t − 1
        for t in 0..n {
            grad[t] = yf[t] * dot_row(x, t, &w) - 1.0;
        }
        let mut converged_inner = false;
        while steps < max_steps {
            let up = |t: usize| (yf[t] > 0.0 && alpha[t] < c) || (yf[t] < 0.0 && alpha[t] > 0.0);
            let low = |t: usize| (yf[t] > 0.0 && alpha[t] > 0.0) || (yf[t] < 0.0 && alpha[t] < c);
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                if up(t) && -yf[t] * grad[t] >= gmax {
                    if -yf[t] * grad[t] > gmax {
                        i = t;
                    }
                    gmax = -yf[t] * grad[t];
                }
            }
            let mut gmin = f64::INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !low(t) {
                    continue;
                }
                let v = -yf[t] * grad[t];
                gmin = gmin.min(v);
                if i != usize::MAX && v < gmax {
                    let b = gmax - v;
                    let kit: f64 = (0..p).map(|k| x[(i, k)] * x[(t, k)]).sum();
                    let a = (kdiag[i] + kdiag[t] - 2.0 * kit).max(TAU);
                    let score = -b * b / a;
                    if score < best {
                        best = score;
                        j = t;
                    }
                }
            }
            if i == usize::MAX || j == usize::MAX || gmax - gmin < eps {
                converged_inner = true;
                break;
            }
            steps += 1;
            let kij: f64 = (0..p).map(|k| x[(i, k)] * x[(j, k)]).sum();
            let quad = (kdiag[i] + kdiag[j] - 2.0 * kij).max(TAU);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let (mut ai, mut aj) = (old_i, old_j);
            if yf[i] != yf[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = ai - aj;
                ai += delta;
                aj += delta;
                if diff > 0.0 {
                    if aj < 0.0 {
                        aj = 0.0;
                        ai = diff;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = -diff;
                }
                if diff > 0.0 {
                    if ai > c {
                        ai = c;
                        aj = c - diff;
                    }
                } else if aj > c {
                    aj = c;
                    ai = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = ai + aj;
                ai -= delta;
                aj += delta;
                if sum > c {
                    if ai > c {
                        ai = c;
                        aj = sum - c;
                    }
                } else if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if sum > c {
                    if aj > c {
                        aj = c;
                        ai = sum - c;
                    }
                } else if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
            alpha[i] = ai;
            alpha[j] = aj;
            let (di, dj) = ((ai - old_i) * yf[i], (aj - old_j) * yf[j]);
            let mut dw = vec![0.0; p];
            for k in 0..p {
                dw[k] = di * x[(i, k)] + dj * x[(j, k)];
                w[k] += dw[k];
            }
            for t in 0..n {
                grad[t] += yf[t] * dot_row(x, t, &dw);
            }
        }
        // Rebuild w from α to shed accumulated drift before judging the gap.
        w = vec![0.0; p];
        for t in 0..n {
            if alpha[t] != 0.0 {
                for k in 0..p {
                    w[k] += alpha[t] * yf[t] * x[(t, k)];
                }
            }
        }
        let s: Vec<f64> = (0..n).map(|t| dot_row(x, t, &w)).collect();
        let hint = dual_offset(&alpha, &yf, &s, c);
        let b = best_offset(&s, y, hint);
        let ww: f64 = w.iter().map(|v| v * v).sum();
        let xi: f64 = (0..n).map(|t| (1.0 - yf[t] * (s[t] - b)).max(0.0)).sum();
        let primal = 0.5 * ww + c * xi;
        let dual = alpha.iter().sum::<f64>() - 0.5 * ww;
        let gap = primal - dual;
        if gap <= GAP_TOL * primal.max(1.0) || (converged_inner && eps <= 1e-14) {
            if gap > GAP_TOL * primal.max(1.0) {
                return Err(ClassifierError::NonConvergence { gap });
            }
            return Ok(SvmModel {
                b,
                w,
                c,
                standardization: None,
                objective: primal,
                duality_gap: gap.max(0.0),
            });
        }
        if !converged_inner {
            return Err(ClassifierError::NonConvergence { gap });
        }
        eps *= 0.1;
    }
}

/// KKT offset from free support vectors (w·x_t − b = y_t); bounds midpoint if
/// none are free.
fn dual_offset(alpha: &[f64], yf: &[f64], s: &[f64], c: f64) -> f64 {
    let free: Vec<f64> = (0..alpha.len())
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| s[t] - yf[t])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    0.0
}
