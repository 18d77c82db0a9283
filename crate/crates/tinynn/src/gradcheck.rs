//! Central finite differences for verifying hand-written backward passes.
//!
//! Only forward evaluations are used here, so a check is independent of the
//! analytic gradient it validates.

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Denominator floor of [`relative_error`]; below it the comparison is
/// effectively absolute.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Report {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

pub fn compare(analytic: &[f64], numeric: &[f64]) -> Report {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let mut report = Report { max_relative_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0 };
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let e = relative_error(a, n);
        if e > report.max_relative_error || e.is_nan() {
            report = Report { max_relative_error: e, worst_index: i, analytic: a, numeric: n };
        }
    }
    report
}
