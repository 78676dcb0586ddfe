//! Stratified hold-out splits and stratified k-fold partitions.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::{self, Rng};

fn class_rows(labels: &[u8]) -> [Vec<usize>; 2] {
    [0u8, 1].map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
}

/// Splits row indices into (train, test) with per-class test counts
/// proportional to class sizes. The total test size is
/// `round(n * (1 - train_fraction))`; per-class shares are apportioned by
/// largest remainder. With `strict`, every class must have at least two
/// rows.
pub fn stratified_indices(
    labels: &[u8],
    train_fraction: f64,
    rng: &mut Rng,
    strict: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = labels.len();
    let classes = class_rows(labels);
    if strict {
        if let Some(c) = (0..2).find(|&c| classes[c].len() == 1) {
            return Err(Error::Training(format!(
                "class {c} has a single row; stratified splitting needs at least 2"
            )));
        }
    }
    let target = (n as f64 * (1.0 - train_fraction)).round() as usize;
    let mut counts = [0usize; 2];
    let mut remainders = [(0usize, 0usize); 2];
    for c in 0..2 {
        let scaled = classes[c].len() * target;
        counts[c] = scaled / n.max(1);
        remainders[c] = (scaled % n.max(1), c);
    }
    let mut left = target - counts.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in &remainders {
        if left == 0 {
            break;
        }
        if counts[c] < classes[c].len() {
            counts[c] += 1;
            left -= 1;
        }
    }

    let mut train = Vec::with_capacity(n - target);
    let mut test = Vec::with_capacity(target);
    for (c, rows) in classes.into_iter().enumerate() {
        let mut rows = rows;
        rows.shuffle(rng);
        test.extend_from_slice(&rows[..counts[c]]);
        train.extend_from_slice(&rows[counts[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded stratified train/test split of a feature matrix.
pub fn stratified_split(
    x: &FeatureMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let mut rng = rng::stream(seed, "split", 0);
    let (train, test) = stratified_indices(x.labels(), train_fraction, &mut rng, true)?;
    Ok((x.select_rows(&train), x.select_rows(&test)))
}

/// Partitions rows into `k` stratified folds whose sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("fold count must be >= 2, got {k}")));
    }
    let classes = class_rows(labels);
    let minority = classes.iter().map(Vec::len).filter(|&c| c > 0).min().unwrap_or(0);
    if k > minority {
        return Err(Error::FoldCount { k, minority });
    }
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for rows in classes {
        let mut rows = rows;
        rows.shuffle(rng);
        for i in rows {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(pos: usize, neg: usize) -> Vec<u8> {
        let mut v = vec![1; pos];
        v.extend(vec![0; neg]);
        v
    }

    fn counts(labels: &[u8], idx: &[usize]) -> (usize, usize) {
        let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
        (pos, idx.len() - pos)
    }

    #[test]
    fn proportional_test_counts() {
        let y = labels(60, 40);
        let (train, test) = stratified_indices(&y, 0.8, &mut rng::stream(1, "t", 0), true).unwrap();
        assert_eq!(counts(&y, &test), (12, 8));
        assert_eq!(train.len(), 80);
        let y = labels(5, 5);
        let (_, test) = stratified_indices(&y, 0.8, &mut rng::stream(1, "t", 0), true).unwrap();
        assert_eq!(counts(&y, &test), (1, 1));
    }

    #[test]
    fn seeds_change_membership_not_counts() {
        let y = labels(60, 40);
        let a = stratified_indices(&y, 0.8, &mut rng::stream(1, "t", 0), true).unwrap();
        let b = stratified_indices(&y, 0.8, &mut rng::stream(1, "t", 0), true).unwrap();
        let c = stratified_indices(&y, 0.8, &mut rng::stream(2, "t", 0), true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
        assert_eq!(counts(&y, &a.1), counts(&y, &c.1));
    }

    #[test]
    fn single_row_class_errors() {
        let y = labels(1, 9);
        assert!(stratified_indices(&y, 0.8, &mut rng::stream(1, "t", 0), true).is_err());
    }

    #[test]
    fn fold_sizes_for_361_rows() {
        let y = labels(230, 131);
        let folds = stratified_folds(&y, 10, &mut rng::stream(3, "f", 0)).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [36, 36, 36, 36, 36, 36, 36, 36, 36, 37]);
    }

    #[test]
    fn too_many_folds_errors() {
        let y = labels(3, 10);
        assert!(matches!(
            stratified_folds(&y, 5, &mut rng::stream(3, "f", 0)),
            Err(Error::FoldCount { k: 5, minority: 3 })
        ));
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(pos in 2usize..80, neg in 2usize..80, seed in any::<u64>(), frac in 0.5f64..0.95) {
            let y = labels(pos, neg);
            let (train, test) = stratified_indices(&y, frac, &mut rng::stream(seed, "t", 0), true).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            prop_assert_eq!(test.len(), (y.len() as f64 * (1.0 - frac)).round() as usize);
            let (tp, tn) = counts(&y, &test);
            prop_assert!((tp as f64 - pos as f64 * (1.0 - frac)).abs() <= 1.0 + 1e-9);
            prop_assert!((tn as f64 - neg as f64 * (1.0 - frac)).abs() <= 1.0 + 1e-9);
        }

        #[test]
        fn folds_partition_rows(pos in 10usize..60, neg in 10usize..60, k in 2usize..10, seed in any::<u64>()) {
            let y = labels(pos, neg);
            let folds = stratified_folds(&y, k, &mut rng::stream(seed, "f", 0)).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..y.len()).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
