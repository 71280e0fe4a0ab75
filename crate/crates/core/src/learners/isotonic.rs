use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-decreasing step function from raw score to probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicCalibrator {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// Pool-adjacent-violators fit of labels ordered by score. Equal scores are
/// pooled before fitting so the result is a function of the score.
pub fn fit_isotonic(scores: &[f64], labels: &[bool]) -> Result<IsotonicCalibrator> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::arg("isotonic fit needs equally many scores and labels, at least one"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("isotonic fit on non-finite score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // blocks of (first score, label sum, weight)
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for &i in &order {
        let y = f64::from(u8::from(labels[i]));
        match blocks.last_mut() {
            Some(b) if b.0 == scores[i] => {
                b.1 += y;
                b.2 += 1.0;
            }
            _ => blocks.push((scores[i], y, 1.0)),
        }
    }
    let breakpoints: Vec<f64> = blocks.iter().map(|b| b.0).collect();

    // stack of pooled (sum, weight, count of distinct scores)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(blocks.len());
    for &(_, sum, w) in &blocks {
        stack.push((sum, w, 1));
        while stack.len() >= 2 {
            let (s2, w2, c2) = stack[stack.len() - 1];
            let (s1, w1, c1) = stack[stack.len() - 2];
            if s1 / w1 <= s2 / w2 {
                break;
            }
            stack.pop();
            *stack.last_mut().expect("two blocks") = (s1 + s2, w1 + w2, c1 + c2);
        }
    }
    let values = stack.iter().flat_map(|&(s, w, c)| std::iter::repeat_n(s / w, c)).collect();
    Ok(IsotonicCalibrator { breakpoints, values })
}

impl IsotonicCalibrator {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the last breakpoint at or below `score`, clamped to the first
    /// and last fitted values outside the fitted range.
    pub fn apply_one(&self, score: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= score);
        self.values[k.saturating_sub(1)]
    }

    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply_one(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_apply(scores: &[f64], labels: &[u8]) -> Vec<f64> {
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        fit_isotonic(scores, &labels).unwrap().apply(scores)
    }

    #[test]
    fn pools_one_violation() {
        assert_eq!(fit_apply(&[0.1, 0.2, 0.3], &[0, 1, 0]), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn monotone_labels_untouched() {
        assert_eq!(fit_apply(&[0.1, 0.2, 0.3, 0.4], &[0, 0, 1, 1]), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn all_positive_is_constant() {
        let cal = fit_isotonic(&[0.3, 0.1, 0.7], &[true; 3]).unwrap();
        assert!([-1.0, 0.0, 0.5, 2.0].iter().all(|&s| cal.apply_one(s) == 1.0));
    }

    #[test]
    fn clamps_and_steps() {
        let cal = fit_isotonic(&[0.2, 0.4, 0.6], &[false, true, true]).unwrap();
        assert_eq!(cal.apply(&[0.0, 0.3, 0.5, 0.9]), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn tied_scores_pool() {
        assert_eq!(fit_apply(&[0.5, 0.5, 0.9], &[1, 0, 1]), vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(fit_isotonic(&[], &[]).is_err());
    }
}
