use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Parameter(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Parameter("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    Ok((pos, labels.len() - pos))
}

/// Groups of tied scores in descending order, as (positives, negatives).
fn tie_groups(scores: &[f64], labels: &[f64]) -> Vec<(f64, f64)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut prev = None;
    for i in idx {
        if prev != Some(scores[i]) {
            groups.push((0.0, 0.0));
            prev = Some(scores[i]);
        }
        let g = groups.last_mut().unwrap();
        if labels[i] > 0.0 {
            g.0 += 1.0;
        } else {
            g.1 += 1.0;
        }
    }
    groups
}

/// Trapezoidal area under the ROC curve; tied scores form one diagonal step.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (p, n) = check(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::Metric("ROC AUC needs both classes".into()));
    }
    let mut tp = 0.0;
    let mut area = 0.0;
    for (gp, gn) in tie_groups(scores, labels) {
        area += gn * (tp + gp / 2.0);
        tp += gp;
    }
    Ok(area / (p as f64 * n as f64))
}

/// Average precision: sum over descending thresholds of recall gain times
/// precision, with tied scores admitted together.
pub fn pr_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (p, _) = check(scores, labels)?;
    if p == 0 {
        return Err(Error::Metric("PR AUC needs positive samples".into()));
    }
    let (mut tp, mut fp, mut ap) = (0.0, 0.0, 0.0);
    for (gp, gn) in tie_groups(scores, labels) {
        tp += gp;
        fp += gn;
        if gp > 0.0 {
            ap += (gp / p as f64) * (tp / (tp + fp));
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&self, o: &Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }

    /// F1, sensitivity, precision with `0/0 = 0`.
    pub fn rates(&self) -> (f64, f64, f64) {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let sens = ratio(self.tp, self.tp + self.fn_);
        let prec = ratio(self.tp, self.tp + self.fp);
        let f1 = ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_);
        (f1, sens, prec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMetrics {
    pub f1: f64,
    pub sensitivity: f64,
    pub precision: f64,
    pub confusion: Confusion,
}

pub fn confusion_metrics(scores: &[f64], labels: &[f64], threshold: f64) -> Result<ConfusionMetrics> {
    check(scores, labels)?;
    let mut c = Confusion::default();
    for (s, y) in scores.iter().zip(labels) {
        match (*s > threshold, *y > 0.0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let (f1, sensitivity, precision) = c.rates();
    Ok(ConfusionMetrics {
        f1,
        sensitivity,
        precision,
        confusion: c,
    })
}

/// Candidate thresholds: midpoints between consecutive distinct scores,
/// plus one below the minimum and one above the maximum. Returned in
/// descending order.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = scores.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s.dedup();
    let Some((&hi, &lo)) = s.first().zip(s.last()) else {
        return vec![];
    };
    let mut out = vec![hi + hi.abs().max(1.0)];
    out.extend(s.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(lo - lo.abs().max(1.0));
    out
}

/// Threshold maximizing F1; ties go to the higher threshold. The outer
/// candidates are finite stand-ins for "predict nothing" and "predict all".
pub fn best_f1_threshold(scores: &[f64], labels: &[f64]) -> Result<(f64, f64)> {
    let (p, n) = check(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::Metric("threshold selection needs both classes".into()));
    }
    let thresholds = candidate_thresholds(scores);
    let groups = tie_groups(scores, labels);
    // thresholds[k] admits exactly the first k tie groups.
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut best = (thresholds[0], 0.0);
    for (k, t) in thresholds.iter().enumerate().skip(1) {
        tp += groups[k - 1].0;
        fp += groups[k - 1].1;
        let f1 = 2.0 * tp / (tp + p as f64 + fp);
        if f1 > best.1 {
            best = (*t, f1);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const POS: f64 = 1.0;
    const NEG: f64 = -1.0;

    fn random_instance(seed: u64, n: usize, levels: u32) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.4) { POS } else { NEG }).collect();
        y[0] = POS;
        y[1] = NEG;
        // Coarse levels force ties.
        let s = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.1).collect();
        (s, y)
    }

    fn mann_whitney(s: &[f64], y: &[f64]) -> f64 {
        let (mut num, mut pairs) = (0.0, 0.0);
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] > 0.0 && y[j] < 0.0 {
                    pairs += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / pairs
    }

    fn exhaustive_ap(s: &[f64], y: &[f64]) -> f64 {
        let mut ts: Vec<f64> = s.to_vec();
        ts.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ts.dedup();
        let p = y.iter().filter(|&&v| v > 0.0).count() as f64;
        let (mut prev_recall, mut ap) = (0.0, 0.0);
        for t in ts {
            let tp = s.iter().zip(y).filter(|(a, b)| **a >= t && **b > 0.0).count() as f64;
            let k = s.iter().filter(|&&a| a >= t).count() as f64;
            let recall = tp / p;
            ap += (recall - prev_recall) * tp / k;
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn perfect_and_inverted_ranking() {
        let s = [0.9, 0.8, 0.3, 0.1];
        let y = [POS, POS, NEG, NEG];
        assert_eq!(roc_auc(&s, &y).unwrap(), 1.0);
        assert_eq!(roc_auc(&s, &[NEG, NEG, POS, POS]).unwrap(), 0.0);
        assert_eq!(pr_auc(&s, &y).unwrap(), 1.0);
        assert!(roc_auc(&s, &[POS; 4]).is_err());
        assert!(pr_auc(&s, &[NEG; 4]).is_err());
    }

    #[test]
    fn all_equal_scores() {
        let y = [POS, NEG, NEG, POS, NEG];
        assert_eq!(pr_auc(&[0.5; 5], &y).unwrap(), 0.4);
        assert_eq!(roc_auc(&[0.5; 5], &y).unwrap(), 0.5);
    }

    #[test]
    fn oracles_on_random_instances() {
        for seed in 0..30 {
            let (s, y) = random_instance(seed, 30, 8);
            assert!((roc_auc(&s, &y).unwrap() - mann_whitney(&s, &y)).abs() <= 1e-12);
            assert!((pr_auc(&s, &y).unwrap() - exhaustive_ap(&s, &y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn complement_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..50).map(|i| if i % 3 == 0 { POS } else { NEG }).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let a = roc_auc(&s, &y).unwrap();
        assert!((roc_auc(&neg, &y).unwrap() - (1.0 - a)).abs() <= 1e-12);
    }

    #[test]
    fn confusion_closed_form() {
        let s = [0.9, 0.8, 0.7, 0.2, 0.1];
        let y = [POS, POS, NEG, POS, NEG];
        let m = confusion_metrics(&s, &y, 0.5).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 2, fp: 1, tn: 1, fn_: 1 });
        for v in [m.precision, m.sensitivity, m.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        let none = confusion_metrics(&s, &y, 1.0).unwrap();
        assert_eq!(none.sensitivity, 0.0);
        assert_eq!(none.precision, 0.0);
        assert_eq!(none.f1, 0.0);
    }

    #[test]
    fn confusion_matches_counting_loop() {
        let (s, y) = random_instance(8, 60, 20);
        let t = 0.95;
        let m = confusion_metrics(&s, &y, t).unwrap();
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for i in 0..60 {
            if s[i] > t && y[i] == POS {
                tp += 1;
            }
            if s[i] > t && y[i] == NEG {
                fp += 1;
            }
            if s[i] <= t && y[i] == POS {
                fn_ += 1;
            }
        }
        assert_eq!((m.confusion.tp, m.confusion.fp, m.confusion.fn_), (tp, fp, fn_));
        assert_eq!(m.confusion.total(), 60);
    }

    #[test]
    fn separated_scores_reach_f1_one() {
        let s = [3.0, 2.5, 2.0, -1.0, -2.0];
        let y = [POS, POS, POS, NEG, NEG];
        let (t, f1) = best_f1_threshold(&s, &y).unwrap();
        assert_eq!(f1, 1.0);
        assert!(t > -1.0 && t < 2.0);
    }

    #[test]
    fn f1_threshold_matches_exhaustive_scan() {
        for seed in 0..20 {
            let (s, y) = random_instance(seed + 100, 40, 12);
            let (t, f1) = best_f1_threshold(&s, &y).unwrap();
            let mut best = (f64::NEG_INFINITY, -1.0);
            for c in candidate_thresholds(&s) {
                let f = confusion_metrics(&s, &y, c).unwrap().f1;
                // Candidates arrive in descending order; keep the first maximum.
                if f > best.1 {
                    best = (c, f);
                }
            }
            assert_eq!((t, f1), best);
            assert!((confusion_metrics(&s, &y, t).unwrap().f1 - f1).abs() < 1e-15);
        }
    }

    #[test]
    fn f1_ties_prefer_higher_threshold() {
        // Thresholds 2.5 and -1 both give F1 = 2/3.
        let s = [3.0, 2.0, 1.0, 0.0];
        let y = [POS, NEG, NEG, POS];
        let (t, f1) = best_f1_threshold(&s, &y).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t, 2.5);
    }

    proptest! {
        #[test]
        fn best_f1_beats_random_thresholds(seed in any::<u64>()) {
            let (s, y) = random_instance(seed, 50, 30);
            let (_, f1) = best_f1_threshold(&s, &y).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            for _ in 0..1000 {
                let t = rng.random_range(-0.5..3.5);
                prop_assert!(f1 >= confusion_metrics(&s, &y, t).unwrap().f1);
            }
        }

        #[test]
        fn auroc_invariant_to_monotone_maps(seed in any::<u64>()) {
            let (s, y) = random_instance(seed, 40, 15);
            let a = roc_auc(&s, &y).unwrap();
            let mapped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert!((roc_auc(&mapped, &y).unwrap() - a).abs() <= 1e-12);
        }
    }
}
