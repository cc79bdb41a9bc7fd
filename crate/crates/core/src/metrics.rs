//! Scores for an estimated target set against the truth.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::algorithms::discobax_value;
use crate::domain::TargetSet;

const REGRET_FLOOR: f64 = 1e-12;

/// `2TP / (2TP + FP + FN)`; two empty sets score 1.
pub fn f1_score(pred: &TargetSet, truth: &TargetSet) -> f64 {
    let p = pred.index_set();
    let t = truth.index_set();
    let tp = p.intersection(&t).count() as f64;
    let fp = p.difference(&t).count() as f64;
    let fneg = t.difference(&p).count() as f64;
    let denom = 2.0 * tp + fp + fneg;
    if denom == 0.0 {
        1.0
    } else {
        2.0 * tp / denom
    }
}

/// `1 − |A∩B| / |A∪B|`; two empty sets are at distance 0.
pub fn jaccard_distance(pred: &TargetSet, truth: &TargetSet) -> f64 {
    jaccard_sets(&pred.index_set(), &truth.index_set())
}

pub(crate) fn jaccard_sets(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

/// `log10(f* − f(x̂))`, with the gap clamped below at 1e-12.
pub fn inference_regret_log10(f_star: f64, f_at_estimate: f64) -> f64 {
    (f_star - f_at_estimate).max(REGRET_FLOOR).log10()
}

/// Value gap between the reference set and the estimate under the true
/// values and shared η draws.
pub fn discobax_regret(true_values: &[f64], eta: &DMatrix<f64>, s_opt: &TargetSet, s_est: &TargetSet) -> f64 {
    let opt: Vec<usize> = s_opt.indices().unwrap_or_default().to_vec();
    let est: Vec<usize> = s_est.indices().unwrap_or_default().to_vec();
    discobax_value(true_values, eta, &opt) - discobax_value(true_values, eta, &est)
}
