use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::dataset::UpliftDataset;
use crate::error::{Result, UpliftError};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Binary outcomes are used as-is; continuous ones are split at the median.
fn binarized_outcome(data: &UpliftDataset) -> Vec<bool> {
    let y = data.outcome();
    if data.is_binary_outcome() {
        return y.iter().map(|&v| v == 1.0).collect();
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    y.iter().map(|&v| v > median).collect()
}

/// Stratified k-fold partition of the rows.
///
/// Strata are (arm, binarized outcome). Each stratum is shuffled, strata are
/// laid end to end and position `j` goes to fold `j mod k`, so fold sizes
/// differ by at most one both overall and within every stratum. If a stratum
/// has fewer than `k` rows, stratification falls back to arm only.
pub fn split_folds(data: &UpliftDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(UpliftError::config("folds", format!("need at least 2 folds, got {k}")));
    }
    let n = data.len();
    if n < k {
        return Err(UpliftError::config("folds", format!("{k} folds requested for {n} rows")));
    }
    let outcome = binarized_outcome(data);
    let group = |by_outcome: bool| {
        let mut strata: BTreeMap<(usize, bool), Vec<usize>> = BTreeMap::new();
        for (i, &w) in data.treatment().iter().enumerate() {
            strata.entry((w, by_outcome && outcome[i])).or_default().push(i);
        }
        strata
    };
    let mut strata = group(true);
    if strata.values().any(|rows| rows.len() < k) {
        log::warn!("a (treatment, outcome) stratum has fewer than {k} rows; stratifying by treatment only");
        strata = group(false);
    }

    let mut rng = stream_rng(seed, Stream::Folds, k as u64);
    let mut fold_of = vec![0usize; n];
    let mut position = 0;
    for rows in strata.values_mut() {
        rows.shuffle(&mut rng);
        for &i in rows.iter() {
            fold_of[i] = position % k;
            position += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..n).partition(|&i| fold_of[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;

    fn data(n: usize, treated_every: impl Fn(usize) -> bool) -> UpliftDataset {
        UpliftDataset::new(
            Matrix::zeros(n, 1),
            (0..n).map(|i| (i % 3 == 0) as u8 as f64).collect(),
            (0..n).map(|i| usize::from(treated_every(i))).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    fn check_partition(folds: &[Fold], n: usize) {
        let mut seen = vec![0; n];
        for f in folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            assert_eq!(f.train.len() + f.test.len(), n);
        }
        assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn hundred_rows_ten_folds() {
        let d = data(100, |i| i % 2 == 0);
        let folds = split_folds(&d, 10, 1).unwrap();
        check_partition(&folds, 100);
        assert!(folds.iter().all(|f| f.test.len() == 10));
    }

    #[test]
    fn imbalanced_treatment_is_preserved() {
        // 850 treated of 1000: each fold should hold 85 +/- 2 treated rows
        let d = data(1000, |i| i % 20 >= 3);
        let folds = split_folds(&d, 10, 42).unwrap();
        check_partition(&folds, 1000);
        for f in &folds {
            let treated = f.test.iter().filter(|&&i| d.treatment()[i] == 1).count();
            assert!((83..=87).contains(&treated), "{treated}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let d = data(200, |i| i % 4 == 0);
        assert_eq!(split_folds(&d, 5, 7).unwrap(), split_folds(&d, 5, 7).unwrap());
        assert_ne!(split_folds(&d, 5, 7).unwrap(), split_folds(&d, 5, 8).unwrap());
    }

    #[test]
    fn small_strata_fall_back() {
        // only 3 treated responders with k = 5
        let d = data(30, |i| i < 9);
        let folds = split_folds(&d, 5, 3).unwrap();
        check_partition(&folds, 30);
    }

    #[test]
    fn rejects_bad_k() {
        let d = data(4, |i| i % 2 == 0);
        assert!(split_folds(&d, 1, 0).is_err());
        assert!(split_folds(&d, 5, 0).is_err());
    }
}
