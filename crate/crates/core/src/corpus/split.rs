use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shuffles by seed and holds out `floor(n / 5)` items as the test set.
pub fn split_train_test<T: Clone>(items: &[T], rng_seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.len() < 5 {
        return Err(Error::InvalidConfig(format!(
            "train/test split needs at least 5 documents, got {}",
            items.len()
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let n_test = items.len() / 5;
    let test = order[..n_test].iter().map(|&i| items[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn proportions() {
        let items: Vec<u32> = (0..100).collect();
        let (train, test) = split_train_test(&items, 0).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        let (train, test) = split_train_test(&items[..5], 0).unwrap();
        assert_eq!((train.len(), test.len()), (4, 1));
        let (train, test) = split_train_test(&items[..9], 0).unwrap();
        assert_eq!((train.len(), test.len()), (8, 1));
        assert!(split_train_test(&items[..4], 0).is_err());
    }

    #[test]
    fn partition_and_determinism() {
        let items: Vec<u32> = (0..37).collect();
        let (train, test) = split_train_test(&items, 42).unwrap();
        let all: BTreeSet<u32> = train.iter().chain(&test).copied().collect();
        assert_eq!(all.len(), 37);
        assert_eq!(train.len() + test.len(), 37);
        assert_eq!(split_train_test(&items, 42).unwrap(), (train, test));
    }
}
