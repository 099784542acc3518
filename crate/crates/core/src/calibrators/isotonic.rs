use serde::{Deserialize, Serialize};

use super::{sorted_by_score, CalibrationSample, InputDomain};
use crate::error::{Error, Result};

/// Piecewise-linear monotone map through `(xs[k], ys[k])`, constant outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub input_domain: InputDomain,
}

/// Weighted pool-adjacent-violators.
///
/// Returns the non-decreasing sequence minimizing `sum w_k (f_k - y_k)^2`.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // blocks of (mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yk, &wk) in y.iter().zip(w) {
        let mut cur = (yk, wk, 1usize);
        while let Some(&(m, wt, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = wt + cur.1;
            cur = ((m * wt + cur.0 * cur.1) / total, total, len + cur.2);
        }
        blocks.push(cur);
    }
    blocks.into_iter().flat_map(|(m, _, len)| std::iter::repeat_n(m, len)).collect()
}

/// Weighted isotonic regression of labels on scores.
///
/// Samples sharing a score are pooled first so the fit is a function of the
/// score.
pub fn fit_isotonic(samples: &[CalibrationSample]) -> Result<IsotonicFit> {
    if samples.len() < 2 {
        return Err(Error::Fit("isotonic regression needs at least 2 samples".into()));
    }
    let order = sorted_by_score(samples);
    let mut xs: Vec<f64> = Vec::new();
    let mut sums: Vec<(f64, f64)> = Vec::new();
    for &k in &order {
        let s = &samples[k];
        if xs.last() == Some(&s.score) {
            let last = sums.last_mut().expect("pooled alongside xs");
            last.0 += s.weight * s.label;
            last.1 += s.weight;
        } else {
            xs.push(s.score);
            sums.push((s.weight * s.label, s.weight));
        }
    }
    let y: Vec<f64> = sums.iter().map(|(n, d)| n / d).collect();
    let w: Vec<f64> = sums.iter().map(|&(_, d)| d).collect();
    let ys = pava(&y, &w);
    Ok(IsotonicFit { xs, ys, input_domain: InputDomain::Unbounded })
}

impl IsotonicFit {
    pub fn calibrate(&self, score: f64) -> f64 {
        let n = self.xs.len();
        if score <= self.xs[0] {
            return self.ys[0];
        }
        if score >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let hi = self.xs.partition_point(|&x| x <= score);
        let lo = hi - 1;
        if self.xs[lo] == score {
            return self.ys[lo];
        }
        let t = (score - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        self.ys[lo] + t * (self.ys[hi] - self.ys[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_input_is_unchanged() {
        let s = [
            CalibrationSample::unranked(0.2, 0.1),
            CalibrationSample::unranked(0.5, 0.5),
            CalibrationSample::unranked(0.9, 0.9),
        ];
        let f = fit_isotonic(&s).unwrap();
        assert_eq!(f.ys, vec![0.2, 0.5, 0.9]);
    }

    #[test]
    fn single_violator_pools() {
        let s = [
            CalibrationSample::unranked(1.0, 0.1),
            CalibrationSample::unranked(0.0, 0.2),
            CalibrationSample::unranked(1.0, 0.3),
        ];
        assert_eq!(fit_isotonic(&s).unwrap().ys, vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn duplicate_equals_doubled_weight() {
        let base = [
            CalibrationSample::unranked(1.0, 0.1),
            CalibrationSample::unranked(0.0, 0.2),
            CalibrationSample::unranked(0.3, 0.25),
            CalibrationSample::unranked(1.0, 0.3),
        ];
        let mut dup = base.to_vec();
        dup.push(base[1]);
        let mut weighted = base.to_vec();
        weighted[1].weight = 2.0;
        let a = fit_isotonic(&dup).unwrap();
        let b = fit_isotonic(&weighted).unwrap();
        assert_eq!(a.xs, b.xs);
        for (x, y) in a.ys.iter().zip(&b.ys) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_and_clamps() {
        let f = IsotonicFit { xs: vec![0.0, 1.0, 2.0], ys: vec![0.1, 0.3, 0.9], input_domain: InputDomain::Unbounded };
        assert_eq!(f.calibrate(1.0), 0.3);
        assert!((f.calibrate(1.5) - 0.6).abs() < 1e-12);
        assert_eq!(f.calibrate(-3.0), 0.1);
        assert_eq!(f.calibrate(7.0), 0.9);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_isotonic(&[CalibrationSample::unranked(1.0, 0.0)]).is_err());
    }
}
