//! Accuracy and one-vs-rest AUC, sensitivity and specificity.

use serde::{Deserialize, Serialize};

use crate::{config_err, PhgError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: usize,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Accuracy plus one-vs-rest scores averaged over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub samples: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Index of the largest probability; ties go to the lowest class.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Area under the ROC curve via the rank-sum statistic; tied scores count
/// one half.
pub fn auc_ovr(scores: &[f64], positive: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

pub fn compute_metrics(probs: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<Metrics, PhgError> {
    if probs.is_empty() {
        return Err(config_err("cannot evaluate an empty dataset"));
    }
    if probs.len() != labels.len() {
        return Err(config_err(format!("{} predictions for {} labels", probs.len(), labels.len())));
    }
    if let Some(p) = probs.iter().find(|p| p.len() != num_classes) {
        return Err(config_err(format!("{} scores per sample for {num_classes} classes", p.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(config_err(format!("label {l} out of range for {num_classes} classes")));
    }
    let n = labels.len();
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    let mut per_class = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        let support = positive.iter().filter(|&&p| p).count();
        if support == 0 || support == n {
            return Err(config_err(format!("class {c} is absent from the split, or the only class in it")));
        }
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let (mut tp, mut tn) = (0usize, 0usize);
        for (&pred, &pos) in preds.iter().zip(&positive) {
            match (pred == c, pos) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                _ => {}
            }
        }
        per_class.push(ClassMetrics {
            class: c,
            support,
            auc: auc_ovr(&scores, &positive),
            sensitivity: tp as f64 / support as f64,
            specificity: tn as f64 / (n - support) as f64,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / num_classes as f64;
    Ok(Metrics {
        samples: n,
        accuracy: correct as f64 / n as f64,
        auc: mean(|m| m.auc),
        sensitivity: mean(|m| m.sensitivity),
        specificity: mean(|m| m.specificity),
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let labels = [0, 1, 2, 0, 1, 2];
        let probs: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| (0..3).map(|c| if c == l { 0.8 } else { 0.1 }).collect())
            .collect();
        let m = compute_metrics(&probs, &labels, 3).unwrap();
        assert_eq!((m.accuracy, m.auc, m.sensitivity, m.specificity), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn constant_predictor_on_balanced_pair() {
        let labels = [0, 1, 0, 1];
        let probs = vec![vec![0.9, 0.1]; 4];
        let m = compute_metrics(&probs, &labels, 2).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.auc, 0.5);
        assert_eq!(m.per_class[0].sensitivity, 1.0);
        assert_eq!(m.per_class[0].specificity, 0.0);
    }

    #[test]
    fn auc_counts_misordered_pairs() {
        // Positives 0.9, 0.4; negatives 0.5, 0.1: three of four pairs ordered.
        let auc = auc_ovr(&[0.9, 0.4, 0.5, 0.1], &[true, true, false, false]);
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_missing_class() {
        assert!(matches!(compute_metrics(&[], &[], 2), Err(PhgError::Config(_))));
        let probs = vec![vec![0.5, 0.3, 0.2]; 2];
        assert!(matches!(compute_metrics(&probs, &[0, 1], 3), Err(PhgError::Config(_))));
    }
}
