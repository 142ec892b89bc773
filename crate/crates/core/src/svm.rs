//! C-SVM on a precomputed kernel, trained with SMO.
//!
//! The solver works on the dual `min ½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`,
//! `0 ≤ α ≤ C` and `yᵀα = 0`, picking the maximal-violating pair with
//! second-order working-set selection. It stops once the gap between the
//! most violating up and low candidates falls below `tol`, which implies the
//! margin conditions hold within `tol`.

/// Curvature used when a pair's kernel distance is not positive.
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    /// Iteration cap as a multiple of `M²` (that is, passes of `M` updates
    /// per training point).
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    alpha: Vec<f64>,
    labels: Vec<f64>,
    bias: f64,
    c: f64,
    iterations: usize,
    converged: bool,
}

impl SvmModel {
    /// Dual variables, one per training point.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Training indices with a non-zero dual variable.
    pub fn support(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect()
    }

    /// `Σ α_i y_i k(x, x_i) + b` for `kernel_row[i] = k(x, x_i)`.
    pub fn decision_value(&self, kernel_row: &[f64]) -> f64 {
        assert_eq!(
            kernel_row.len(),
            self.alpha.len(),
            "kernel row of length {} for {} training points",
            kernel_row.len(),
            self.alpha.len()
        );
        let mut s = 0.0;
        for ((a, y), k) in self.alpha.iter().zip(&self.labels).zip(kernel_row) {
            if *a != 0.0 {
                s += a * y * k;
            }
        }
        s + self.bias
    }

    /// The predicted label, `+1` when the decision value is exactly zero.
    pub fn predict(&self, kernel_row: &[f64]) -> (i8, f64) {
        let v = self.decision_value(kernel_row);
        (if v >= 0.0 { 1 } else { -1 }, v)
    }
}

/// Trains on the row-major `m x m` kernel matrix `gram` with `labels` in
/// `{-1, +1}`.
pub fn smo_train(gram: &[f64], labels: &[f64], cfg: &SvmConfig) -> SvmModel {
    let m = labels.len();
    assert_eq!(gram.len(), m * m, "Gram matrix does not match {m} labels");
    assert!(labels.iter().all(|&y| y == 1.0 || y == -1.0), "labels must be +1 or -1");
    assert!(cfg.c > 0.0, "C must be positive");
    let (c, y) = (cfg.c, labels);
    let k = |i: usize, j: usize| gram[i * m + j];
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let max_iter = cfg.max_passes.saturating_mul(m * m).max(1);
    let mut iterations = 0;
    let mut converged = false;

    let is_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let is_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if is_up(alpha[t], y[t]) && (i == usize::MAX || -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..m {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let score = -b * b / if a > 0.0 { a } else { TAU };
                if score < best {
                    best = score;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = positive(k(i, i) + k(j, j) + 2.0 * qij);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(k(i, i) + k(j, j) - 2.0 * qij);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }
    if !converged {
        log::warn!(
            "SMO stopped after {iterations} iterations without reaching tol {}",
            cfg.tol
        );
    }

    SvmModel {
        bias: -rho(&alpha, y, &grad, c),
        alpha,
        labels: y.to_vec(),
        c,
        iterations,
        converged,
    }
}

fn positive(q: f64) -> f64 {
    if q > 0.0 {
        q
    } else {
        TAU
    }
}

/// Threshold: the mean of `y G` over free variables, or the midpoint of the
/// feasible interval when every variable sits at a bound.
fn rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else if ub.is_infinite() {
        lb
    } else if lb.is_infinite() {
        ub
    } else {
        (ub + lb) / 2.0
    }
}

/// `Σα − ½ αᵀQα`, the dual objective SMO maximizes.
pub fn dual_objective(gram: &[f64], labels: &[f64], alpha: &[f64]) -> f64 {
    let m = labels.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * gram[i * m + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest violation of the margin conditions on the training set:
/// `α=0 ⇒ y f ≥ 1`, `0<α<C ⇒ y f = 1`, `α=C ⇒ y f ≤ 1`.
pub fn kkt_residual(model: &SvmModel, gram: &[f64]) -> f64 {
    let m = model.alpha.len();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let yf = model.labels[i] * model.decision_value(&gram[i * m..(i + 1) * m]);
        let a = model.alpha[i];
        let v = if a <= 0.0 {
            1.0 - yf
        } else if a >= model.c {
            yf - 1.0
        } else {
            (yf - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// One binary SVM for two classes, one-vs-rest otherwise.
#[derive(Clone, Debug)]
pub struct MultiClassSvm {
    num_classes: usize,
    models: Vec<SvmModel>,
}

impl MultiClassSvm {
    /// `targets` are class ids in `0..num_classes`.
    pub fn train(gram: &[f64], targets: &[usize], num_classes: usize, cfg: &SvmConfig) -> Self {
        assert!(num_classes >= 2, "need at least two classes");
        assert!(
            targets.iter().all(|&t| t < num_classes),
            "target outside the class range"
        );
        let binary = |positive: usize| -> Vec<f64> {
            targets
                .iter()
                .map(|&t| if t == positive { 1.0 } else { -1.0 })
                .collect()
        };
        let models = if num_classes == 2 {
            vec![smo_train(gram, &binary(1), cfg)]
        } else {
            (0..num_classes).map(|c| smo_train(gram, &binary(c), cfg)).collect()
        };
        MultiClassSvm { num_classes, models }
    }

    pub fn models(&self) -> &[SvmModel] {
        &self.models
    }

    /// Class id for a kernel row against the training points. For two
    /// classes a zero decision value picks class 1; otherwise the largest
    /// decision value wins, ties going to the lower class.
    pub fn predict(&self, kernel_row: &[f64]) -> usize {
        if self.num_classes == 2 {
            return (self.models[0].predict(kernel_row).0 > 0) as usize;
        }
        let scores: Vec<f64> = self.models.iter().map(|m| m.decision_value(kernel_row)).collect();
        crate::model::argmax(&scores)
    }
}
