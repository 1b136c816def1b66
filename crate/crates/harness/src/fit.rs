//! Log-log rate fitting: ordinary least squares on (ln ε, ln value), with a
//! leave-one-out resampling interval that exposes fragile fits and outliers.

use crate::HarnessError;

#[derive(Debug, Clone)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Leave-one-out slope interval [lo, hi] (contains the full-sample slope).
    pub lo: f64,
    pub hi: f64,
    pub n_used: usize,
    /// Points dropped because their value was nonpositive or non-finite.
    pub excluded: usize,
}

impl Fit {
    /// Width of the resampling interval — a fragility indicator.
    pub fn spread(&self) -> f64 {
        self.hi - self.lo
    }
}

fn ols_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit `value ≈ C·εᵖ` over (ε, value) pairs and estimate p. Nonpositive
/// values are excluded (they have no logarithm and indicate a degenerate
/// metric); fewer than 3 usable points is an error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<Fit, HarnessError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(e, v)| e > 0.0 && v > 0.0 && e.is_finite() && v.is_finite())
        .map(|&(e, v)| (e.ln(), v.ln()))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(HarnessError::Config(format!(
            "rate fit needs ≥ 3 usable points, got {} ({} excluded as nonpositive)",
            usable.len(),
            excluded
        )));
    }
    let (slope, intercept) = ols_slope(&usable);
    let mut lo = slope;
    let mut hi = slope;
    for skip in 0..usable.len() {
        let subset: Vec<(f64, f64)> = usable
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &p)| p)
            .collect();
        let (s, _) = ols_slope(&subset);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok(Fit {
        slope,
        intercept,
        lo,
        hi,
        n_used: usable.len(),
        excluded,
    })
}
