use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `0..labels.len()` into `folds` test sets of near-equal size that
/// keep every class within one sample of its global share.
///
/// Each class is shuffled and the classes are dealt round-robin in sequence,
/// so fold sizes differ by at most one. When some class has fewer than
/// `folds` members the split falls back to an unstratified shuffle.
pub fn stratified_kfold(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if folds < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::Argument(format!("{folds} folds for only {n} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    by_class.retain(|c| !c.is_empty());

    let order: Vec<usize> = if by_class.iter().all(|c| c.len() >= folds) {
        by_class
            .into_iter()
            .flat_map(|mut members| {
                members.shuffle(&mut rng);
                members
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {folds} members; using an unstratified split");
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };

    let mut tests = vec![Vec::new(); folds];
    for (pos, idx) in order.into_iter().enumerate() {
        tests[pos % folds].push(idx);
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect())
}

/// Child seed for repeat `repeat`, fold `fold`: `seed ^ splitmix64(repeat, fold)`.
pub fn derive_seed(seed: u64, repeat: usize, fold: usize) -> u64 {
    let mut z = ((repeat as u64) << 32 | (fold as u64 & 0xFFFF_FFFF)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed ^ (z ^ (z >> 31))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_binary_five_folds() {
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.test.len(), 2);
            let ones = f.test.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(ones, 1);
            assert_eq!(f.train.len(), 8);
        }
    }

    #[test]
    fn errors_and_fallback() {
        assert!(stratified_kfold(&[0, 1, 0], 4, 0).is_err());
        assert!(stratified_kfold(&[0, 1, 0], 1, 0).is_err());
        let folds = stratified_kfold(&[0, 0, 0, 0, 1], 2, 0).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 5);
    }

    #[test]
    fn child_seeds_differ() {
        let a = derive_seed(7, 0, 0);
        assert_ne!(a, derive_seed(7, 0, 1));
        assert_ne!(a, derive_seed(7, 1, 0));
        assert_eq!(a, derive_seed(7, 0, 0));
    }
}
