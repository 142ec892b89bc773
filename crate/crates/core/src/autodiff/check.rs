//! Central finite-difference gradient checking.

use super::{Gradients, ParamStore};

/// Outcome of [`finite_difference_check`].
#[derive(Clone, Debug)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Relative errors are taken against `max(|analytic|, |numeric|, FLOOR)` so
/// that entries which are zero up to rounding do not dominate.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// Compares `analytic` with central differences of `loss` taken over every
/// scalar of every parameter in `store`.
pub fn finite_difference_check<F>(store: &ParamStore, analytic: &Gradients, step: f64, loss: F) -> GradientCheck
where
    F: Fn(&ParamStore) -> f64,
{
    let mut probe = store.clone();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        worst_parameter: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for id in store.ids() {
        for idx in 0..store.value(id).len() {
            let original = store.value(id).data()[idx];
            probe.value_mut(id).data_mut()[idx] = original + step;
            let up = loss(&probe);
            probe.value_mut(id).data_mut()[idx] = original - step;
            let down = loss(&probe);
            probe.value_mut(id).data_mut()[idx] = original;

            let numeric = (up - down) / (2.0 * step);
            let a = analytic.get(id).data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
            report.checked += 1;
            if rel > report.max_relative_error || !rel.is_finite() {
                report.max_relative_error = rel;
                report.worst_parameter = store.name(id).to_string();
                report.worst_index = idx;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report
}
