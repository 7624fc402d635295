//! Fold construction. Row order within a patient is taken as time order.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tkrr_core::LabeledDataset;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvScheme {
    /// One fold per patient; that patient's rows are the test set.
    LeaveOneGroupOut,
    /// Per patient, one fold per seizure; train on that seizure plus as
    /// many nearby background windows, test on the rest of the patient.
    LeaveOneSeizureIn,
    KFold { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub group: Option<u32>,
    pub seizure: Option<u32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    pub fn name(&self) -> String {
        match (self.group, self.seizure) {
            (Some(g), Some(s)) => format!("patient{g}_seizure{s}"),
            (Some(g), None) => format!("patient{g}"),
            _ => "fold".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub scheme: CvScheme,
    pub folds: Vec<Fold>,
}

fn groups(ds: &LabeledDataset) -> Vec<u32> {
    ds.group_ids().iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

fn without_overlap(ds: &LabeledDataset, rows: impl Iterator<Item = usize>) -> Vec<usize> {
    rows.filter(|&i| !ds.overlap_flags()[i]).collect()
}

/// Seizure ids carried by positive rows of `group`, ascending.
pub fn seizures_of(ds: &LabeledDataset, group: u32) -> Vec<u32> {
    (0..ds.len())
        .filter(|&i| ds.group_ids()[i] == group && ds.labels()[i] > 0.0)
        .map(|i| ds.seizure_ids()[i])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// The leave-one-seizure-in fold for one seizure of one patient.
///
/// Background partners are the patient's background rows closest in row
/// order to the seizure's span, one per seizure window (earlier rows win
/// ties). Test rows exclude training rows and overlap-flagged windows.
pub fn losi_fold(ds: &LabeledDataset, group: u32, seizure: u32) -> Result<Fold> {
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.group_ids()[i] == group).collect();
    if rows.is_empty() {
        return Err(Error::Cv(format!("no rows for patient {group}")));
    }
    let sz: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&i| ds.labels()[i] > 0.0 && ds.seizure_ids()[i] == seizure)
        .collect();
    let (Some(&first), Some(&last)) = (sz.first(), sz.last()) else {
        return Err(Error::Cv(format!("patient {group} has no seizure {seizure}")));
    };
    let mut background: Vec<usize> = rows.iter().copied().filter(|&i| ds.labels()[i] < 0.0).collect();
    let distance = |i: usize| if i < first { first - i } else { i.saturating_sub(last) };
    background.sort_by_key(|&i| (distance(i), i));
    background.truncate(sz.len());

    let mut train = sz;
    train.extend(background);
    train.sort_unstable();
    let in_train: BTreeSet<usize> = train.iter().copied().collect();
    let test = without_overlap(ds, rows.into_iter().filter(|i| !in_train.contains(i)));
    Ok(Fold {
        group: Some(group),
        seizure: Some(seizure),
        train,
        test,
    })
}

pub fn make_cv_plan(ds: &LabeledDataset, scheme: CvScheme) -> Result<CvPlan> {
    let folds = match scheme {
        CvScheme::LeaveOneGroupOut => {
            let gs = groups(ds);
            if gs.len() < 2 {
                return Err(Error::Cv(format!("need at least 2 patients, found {}", gs.len())));
            }
            gs.iter()
                .map(|&g| Fold {
                    group: Some(g),
                    seizure: None,
                    train: (0..ds.len()).filter(|&i| ds.group_ids()[i] != g).collect(),
                    test: without_overlap(ds, (0..ds.len()).filter(|&i| ds.group_ids()[i] == g)),
                })
                .collect()
        }
        CvScheme::LeaveOneSeizureIn => {
            let mut folds = Vec::new();
            for g in groups(ds) {
                let seizures = seizures_of(ds, g);
                if seizures.len() < 2 {
                    return Err(Error::Cv(format!(
                        "patient {g} has {} seizure(s); at least 2 are needed",
                        seizures.len()
                    )));
                }
                for s in seizures {
                    folds.push(losi_fold(ds, g, s)?);
                }
            }
            folds
        }
        CvScheme::KFold { k, seed } => {
            if k < 2 || k > ds.len() {
                return Err(Error::Cv(format!("k = {k} folds for {} rows", ds.len())));
            }
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            (0..k)
                .map(|f| {
                    let lo = f * ds.len() / k;
                    let hi = (f + 1) * ds.len() / k;
                    let mut test = idx[lo..hi].to_vec();
                    test.sort_unstable();
                    let mut train: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
                    train.sort_unstable();
                    Fold {
                        group: None,
                        seizure: None,
                        train,
                        test,
                    }
                })
                .collect()
        }
    };
    Ok(CvPlan { scheme, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tkrr_core::Matrix;

    /// Patient-major rows: background, seizure, background, seizure, ...
    fn cohort(patients: u32, seizures: u32, sz_len: usize, bg_len: usize) -> LabeledDataset {
        let (mut labels, mut groups, mut sids, mut flags) = (vec![], vec![], vec![], vec![]);
        for p in 1..=patients {
            for s in 1..=seizures {
                for _ in 0..bg_len {
                    labels.push(-1.0);
                    groups.push(p);
                    sids.push(0);
                    flags.push(false);
                }
                for w in 0..sz_len {
                    labels.push(1.0);
                    groups.push(p);
                    sids.push(s);
                    flags.push(w % 2 == 1);
                }
            }
            for _ in 0..bg_len {
                labels.push(-1.0);
                groups.push(p);
                sids.push(0);
                flags.push(false);
            }
        }
        let n = labels.len();
        LabeledDataset::new(Matrix::zeros(n, 2), labels, groups, sids, flags).unwrap()
    }

    #[test]
    fn six_patients_six_folds() {
        let ds = cohort(6, 3, 4, 5);
        let plan = make_cv_plan(&ds, CvScheme::LeaveOneGroupOut).unwrap();
        assert_eq!(plan.folds.len(), 6);
        for f in &plan.folds {
            let g = f.group.unwrap();
            assert!(f.test.iter().all(|&i| ds.group_ids()[i] == g && !ds.overlap_flags()[i]));
            assert!(f.train.iter().all(|&i| ds.group_ids()[i] != g));
        }
    }

    #[test]
    fn five_seizures_five_folds() {
        let ds = cohort(1, 5, 6, 8);
        let plan = make_cv_plan(&ds, CvScheme::LeaveOneSeizureIn).unwrap();
        assert_eq!(plan.folds.len(), 5);
        for f in &plan.folds {
            let s = f.seizure.unwrap();
            let pos: Vec<usize> = f.train.iter().copied().filter(|&i| ds.labels()[i] > 0.0).collect();
            assert!(pos.iter().all(|&i| ds.seizure_ids()[i] == s));
            assert_eq!(pos.len(), 6);
            assert_eq!(f.train.len(), 12);
            assert!(f.test.iter().all(|&i| ds.seizure_ids()[i] != s && !ds.overlap_flags()[i]));
        }
    }

    #[test]
    fn background_partners_are_adjacent() {
        // Seizure 2 occupies rows 22..28, between background runs 14..22
        // and 28..36.
        let ds = cohort(1, 3, 6, 8);
        let f = losi_fold(&ds, 1, 2).unwrap();
        let bg: Vec<usize> = f.train.iter().copied().filter(|&i| ds.labels()[i] < 0.0).collect();
        assert_eq!(bg, vec![19, 20, 21, 28, 29, 30]);
    }

    #[test]
    fn errors() {
        let one_patient = cohort(1, 3, 2, 2);
        assert!(make_cv_plan(&one_patient, CvScheme::LeaveOneGroupOut).is_err());
        let one_seizure = cohort(2, 1, 2, 2);
        assert!(make_cv_plan(&one_seizure, CvScheme::LeaveOneSeizureIn).is_err());
        assert!(losi_fold(&one_seizure, 1, 7).is_err());
        assert!(losi_fold(&one_seizure, 9, 1).is_err());
        assert!(make_cv_plan(&one_seizure, CvScheme::KFold { k: 1, seed: 0 }).is_err());
    }

    #[test]
    fn kfold_partitions_and_is_seeded() {
        let ds = cohort(2, 2, 3, 4);
        let a = make_cv_plan(&ds, CvScheme::KFold { k: 5, seed: 3 }).unwrap();
        let b = make_cv_plan(&ds, CvScheme::KFold { k: 5, seed: 3 }).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.folds.iter().flat_map(|f| f.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn no_fold_leaks(p in 2u32..5, s in 2u32..5, sz in 1usize..6, bg in 1usize..6, k in 2usize..6) {
            let ds = cohort(p, s, sz, bg);
            for scheme in [CvScheme::LeaveOneGroupOut, CvScheme::LeaveOneSeizureIn, CvScheme::KFold { k, seed: 1 }] {
                let plan = make_cv_plan(&ds, scheme).unwrap();
                for f in &plan.folds {
                    let train: BTreeSet<_> = f.train.iter().collect();
                    prop_assert!(f.test.iter().all(|i| !train.contains(i)));
                    if scheme != (CvScheme::KFold { k, seed: 1 }) {
                        prop_assert!(f.test.iter().all(|&i| !ds.overlap_flags()[i]));
                    }
                }
                if scheme != CvScheme::LeaveOneSeizureIn {
                    let mut seen = BTreeSet::new();
                    for f in &plan.folds {
                        for &i in &f.test {
                            prop_assert!(seen.insert(i));
                        }
                    }
                }
            }
        }
    }
}
