use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

/// Below this magnitude gradients are compared on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// Coordinate with the largest relative error.
    pub worst_coordinate: usize,
    pub coordinates_checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `analytic` against central differences
/// `(f(θ + ε e_i) - f(θ - ε e_i)) / 2ε` on up to `samples` coordinates drawn
/// at random (all of them when `θ` is smaller).
///
/// Relative error is `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn gradient_check<F, R>(
    mut f: F,
    theta: &[f64],
    analytic: &[f64],
    eps: f64,
    tolerance: f64,
    samples: usize,
    rng: &mut R,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    assert_eq!(theta.len(), analytic.len(), "gradient length must match parameters");
    let coords: Vec<usize> = if theta.len() <= samples {
        (0..theta.len()).collect()
    } else {
        let mut c = sample(rng, theta.len(), samples).into_vec();
        c.sort_unstable();
        c
    };
    let mut probe = theta.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
        worst_coordinate: 0,
        coordinates_checked: coords.len(),
        tolerance,
        passed: true,
    };
    for &i in &coords {
        let orig = probe[i];
        probe[i] = orig + eps;
        let up = f(&probe);
        probe[i] = orig - eps;
        let down = f(&probe);
        probe[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let abs = (analytic[i] - numeric).abs();
        let rel = abs / analytic[i].abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        report.max_absolute_error = report.max_absolute_error.max(abs);
        if rel > report.max_relative_error || rel.is_nan() {
            report.max_relative_error = rel;
            report.worst_coordinate = i;
        }
    }
    report.passed = report.max_relative_error < tolerance;
    report
}
