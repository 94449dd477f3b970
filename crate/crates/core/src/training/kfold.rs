//! Recording-level K-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold assignments at the recording level. Round `k` tests fold `k`,
/// validates on fold `(k+1) mod K` and trains on the rest, so every
/// recording serves once as test and once as validation.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// (train, validation, test) recording ids for round `round`.
    ///
    /// With K = 2 there are no folds left over for training, so the
    /// validation fold doubles as the training fold.
    pub fn roles(&self, round: usize) -> (Vec<&str>, Vec<&str>, Vec<&str>) {
        let k = self.k();
        let val_idx = (round + 1) % k;
        let test: Vec<&str> = self.folds[round].iter().map(String::as_str).collect();
        let val: Vec<&str> = self.folds[val_idx].iter().map(String::as_str).collect();
        let mut train: Vec<&str> = Vec::new();
        for (i, fold) in self.folds.iter().enumerate() {
            if i != round && i != val_idx {
                train.extend(fold.iter().map(String::as_str));
            }
        }
        if train.is_empty() {
            train = val.clone();
        }
        (train, val, test)
    }
}

/// Seeded shuffle followed by round-robin assignment of recordings to folds.
pub fn kfold_split(ids: &[String], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if ids.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} recordings cannot fill {k} folds",
            ids.len()
        )));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in shuffled.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("rec{i:03}")).collect()
    }

    #[test]
    fn folds_partition_recordings() {
        let all = ids(20);
        let plan = kfold_split(&all, 10, 7).unwrap();
        assert_eq!(plan.k(), 10);
        let mut seen = HashSet::new();
        for fold in &plan.folds {
            assert_eq!(fold.len(), 2);
            for id in fold {
                assert!(seen.insert(id.clone()), "{id} in two folds");
            }
        }
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn same_seed_same_plan() {
        let all = ids(23);
        let a = kfold_split(&all, 10, 3).unwrap();
        let b = kfold_split(&all, 10, 3).unwrap();
        assert_eq!(a.folds, b.folds);
        let c = kfold_split(&all, 10, 4).unwrap();
        assert_ne!(a.folds, c.folds);
    }

    #[test]
    fn roles_are_disjoint() {
        let all = ids(20);
        let plan = kfold_split(&all, 10, 0).unwrap();
        for round in 0..10 {
            let (train, val, test) = plan.roles(round);
            let t: HashSet<_> = train.iter().collect();
            let v: HashSet<_> = val.iter().collect();
            let s: HashSet<_> = test.iter().collect();
            assert!(t.is_disjoint(&s));
            assert!(t.is_disjoint(&v));
            assert!(v.is_disjoint(&s));
            assert_eq!(train.len() + val.len() + test.len(), 20);
        }
    }

    #[test]
    fn two_fold_validation_doubles_as_training() {
        let all = ids(6);
        let plan = kfold_split(&all, 2, 0).unwrap();
        let (train, val, test) = plan.roles(0);
        assert_eq!(train, val);
        let t: HashSet<_> = train.iter().collect();
        let s: HashSet<_> = test.iter().collect();
        assert!(t.is_disjoint(&s));
    }

    #[test]
    fn every_recording_tested_once() {
        let all = ids(21);
        let plan = kfold_split(&all, 10, 5).unwrap();
        let mut tested = Vec::new();
        for round in 0..plan.k() {
            tested.extend(plan.roles(round).2.into_iter().map(String::from));
        }
        tested.sort();
        let mut expect: Vec<String> = all.clone();
        expect.sort();
        assert_eq!(tested, expect);
    }

    #[test]
    fn too_few_recordings_rejected() {
        assert!(kfold_split(&ids(5), 10, 0).is_err());
        assert!(kfold_split(&ids(5), 1, 0).is_err());
    }
}
