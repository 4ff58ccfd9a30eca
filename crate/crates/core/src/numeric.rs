//! Small numeric helpers shared by estimators and metric aggregation.

/// Neumaier-compensated running sum.
///
/// Inverse-degree sums mix magnitudes of 1 and 1e-2; plain accumulation
/// loses the low bits that the estimator identities in the test suite
/// check at 1e-12.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Round to `digits` significant digits and render without exponent.
pub fn format_significant(value: f64, digits: i32) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    let rounded = (value * factor).round() / factor;
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(0.5, 6), "0.5");
        assert_eq!(format_significant(0.123456789, 6), "0.123457");
        assert_eq!(format_significant(-0.0512345678, 6), "-0.0512346");
        assert_eq!(format_significant(12345.6789, 6), "12345.7");
    }
}
