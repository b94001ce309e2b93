/// Huber loss of `e = y_pred - y_target` and its derivative with respect to
/// `y_pred`: quadratic inside `|e| <= delta`, linear outside.
pub fn huber_loss(y_pred: f64, y_target: f64, delta: f64) -> (f64, f64) {
    debug_assert!(delta > 0.0);
    let e = y_pred - y_target;
    if e.abs() <= delta {
        (0.5 * e * e, e)
    } else {
        (delta * e.abs() - 0.5 * delta * delta, delta * e.signum())
    }
}
