use crate::error::{Error, Result};

/// Floor applied to samples before the geometric and harmonic means, so that
/// zero-valued samples (empty histogram bins, black pixels) stay finite.
pub const ZERO_CLAMP_EPSILON: f64 = 1e-6;

/// First-order statistics of a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramStats {
    pub range: f64,
    pub mean: f64,
    pub geometric_mean: f64,
    pub harmonic_mean: f64,
    pub std_dev: f64,
    /// Population variance.
    pub variance: f64,
    pub median: f64,
    /// How many samples were raised to [`ZERO_CLAMP_EPSILON`] for the
    /// geometric/harmonic means.
    pub clamped_samples: usize,
}

impl HistogramStats {
    /// The seven statistics in their canonical order: range, mean, geometric
    /// mean, harmonic mean, standard deviation, variance, median.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.range,
            self.mean,
            self.geometric_mean,
            self.harmonic_mean,
            self.std_dev,
            self.variance,
            self.median,
        ]
    }
}

pub fn histogram_stats(samples: &[f64]) -> Result<HistogramStats> {
    if samples.is_empty() {
        return Err(Error::Empty(
            "histogram statistics need at least one sample",
        ));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Parameter(format!(
            "histogram samples must be finite and non-negative, got {bad}"
        )));
    }
    let n = samples.len() as f64;

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };

    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;

    let mut clamped_samples = 0;
    let mut log_sum = 0.0;
    let mut recip_sum = 0.0;
    for &v in samples {
        let c = if v < ZERO_CLAMP_EPSILON {
            clamped_samples += 1;
            ZERO_CLAMP_EPSILON
        } else {
            v
        };
        log_sum += c.ln();
        recip_sum += c.recip();
    }

    let mut geometric_mean = (log_sum / n).exp();
    let mut harmonic_mean = n / recip_sum;
    if clamped_samples == 0 {
        // H <= G <= A holds exactly; keep rounding from inverting it
        geometric_mean = geometric_mean.min(mean);
        harmonic_mean = harmonic_mean.min(geometric_mean);
    }

    Ok(HistogramStats {
        range: max - min,
        mean,
        geometric_mean,
        harmonic_mean,
        std_dev: variance.sqrt(),
        variance,
        median,
        clamped_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn constant_samples() {
        let s = histogram_stats(&[5.0; 4]).unwrap();
        assert_eq!(s.range, 0.0);
        assert_eq!(s.mean, 5.0);
        assert!(close(s.geometric_mean, 5.0, 1e-12));
        assert!(close(s.harmonic_mean, 5.0, 1e-12));
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.clamped_samples, 0);
    }

    #[test]
    fn one_to_five() {
        // golden values from 40-digit evaluation
        let s = histogram_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.range, 4.0);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.variance, 2.0);
        assert_eq!(s.median, 3.0);
        assert!(close(s.geometric_mean, 2.605_171_084_697_352, 1e-12));
        assert!(close(s.harmonic_mean, 2.189_781_021_897_81, 1e-12));
        assert!(close(s.std_dev, std::f64::consts::SQRT_2, 1e-15));
    }

    #[test]
    fn zero_sample_is_clamped() {
        let s = histogram_stats(&[0.0, 4.0]).unwrap();
        assert_eq!((s.mean, s.median, s.range), (2.0, 2.0, 4.0));
        assert_eq!(s.clamped_samples, 1);
        assert!(close(s.geometric_mean, 0.002, 1e-12));
        assert!((s.harmonic_mean - 1.999_999_500_000_125e-6).abs() < 1e-18);
    }

    #[test]
    fn even_median_and_errors() {
        assert_eq!(histogram_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(matches!(histogram_stats(&[]), Err(Error::Empty(_))));
        assert!(histogram_stats(&[-1.0]).is_err());
        assert!(histogram_stats(&[f64::NAN]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn means_are_ordered(samples in proptest::collection::vec(1e-3f64..1e4, 1..200)) {
            let s = histogram_stats(&samples).unwrap();
            proptest::prop_assert!(s.harmonic_mean <= s.geometric_mean);
            proptest::prop_assert!(s.geometric_mean <= s.mean);
            proptest::prop_assert!(s.std_dev >= 0.0 && s.range >= 0.0);
        }
    }
}
