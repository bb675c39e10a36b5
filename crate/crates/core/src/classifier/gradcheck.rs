use ndarray::ArrayView2;

use super::net::{backward, cross_entropy, forward_train};
use super::CnnModel;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is zero (conv biases ahead of batch norm) compare on an
/// absolute scale.
pub const GRAD_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

fn loss(model: &CnnModel, x: ArrayView2<f64>, labels: &[usize]) -> f64 {
    cross_entropy(&forward_train(model, x).probs, labels)
}

/// Compare backprop gradients of the training-mode loss against central
/// differences with step `h`, for every parameter.
pub fn gradient_check(model: &CnnModel, x: ArrayView2<f64>, labels: &[usize], h: f64) -> GradCheckReport {
    let analytic = backward(model, &forward_train(model, x), labels);
    let mut m = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for i in 0..m.params.len() {
        let orig = m.params[i];
        m.params[i] = orig + h;
        let up = loss(&m, x, labels);
        m.params[i] = orig - h;
        let down = loss(&m, x, labels);
        m.params[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
        report.checked += 1;
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_param = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report
}
