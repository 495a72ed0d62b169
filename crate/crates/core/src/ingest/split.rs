use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let f = Self {
            train,
            validation,
            test,
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p))
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidConfig(format!(
                "split fractions {parts:?} must be in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }

    /// `(train, validation, test)` sizes for `n` items. Train and validation
    /// are rounded; test takes the remainder.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = ((n as f64 * self.train).round() as usize).min(n);
        let validation = ((n as f64 * self.validation).round() as usize).min(n - train);
        (train, validation, n - train - validation)
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Shuffles `ids` with `seed` and cuts them by `fractions`.
///
/// With `strata` (one flag per id, e.g. the cardiomegaly label) each stratum
/// is shuffled and cut separately, so every split keeps the class balance to
/// within one item.
pub fn split(
    ids: &[String],
    fractions: SplitFractions,
    seed: u64,
    strata: Option<&[bool]>,
) -> Result<DatasetSplit> {
    fractions.validate()?;
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::InvalidConfig(format!("duplicate id {dup:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DatasetSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        seed,
    };
    let groups: Vec<Vec<String>> = match strata {
        None => vec![ids.to_vec()],
        Some(flags) => {
            if flags.len() != ids.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} strata flags for {} ids",
                    flags.len(),
                    ids.len()
                )));
            }
            let pick = |want: bool| {
                ids.iter()
                    .zip(flags)
                    .filter(|(_, f)| **f == want)
                    .map(|(id, _)| id.clone())
                    .collect()
            };
            vec![pick(true), pick(false)]
        }
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let (train, validation, _) = fractions.counts(group.len());
        let mut rest = group.split_off(train);
        let test = rest.split_off(validation);
        out.train.extend(group);
        out.validation.extend(rest);
        out.test.extend(test);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id{i:05}")).collect()
    }

    #[test]
    fn table_pattern() {
        let s = split(&ids(2440), SplitFractions::default(), 1, None).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (1952, 244, 244));
        let s = split(&ids(10), SplitFractions::default(), 1, None).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn seeded() {
        let a = split(&ids(50), SplitFractions::default(), 3, None).unwrap();
        let b = split(&ids(50), SplitFractions::default(), 3, None).unwrap();
        let c = split(&ids(50), SplitFractions::default(), 4, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SplitFractions::new(0.8, 0.1, 0.2).is_err());
        let mut dup = ids(3);
        dup.push("id00001".into());
        assert!(split(&dup, SplitFractions::default(), 0, None).is_err());
    }

    #[test]
    fn stratified_keeps_balance() {
        let all = ids(103);
        let flags: Vec<bool> = (0..103).map(|i| i % 3 == 0).collect();
        let s = split(&all, SplitFractions::default(), 5, Some(&flags)).unwrap();
        let positives = |part: &[String]| {
            part.iter()
                .filter(|id| flags[id[2..].parse::<usize>().unwrap()])
                .count()
        };
        let total_pos = flags.iter().filter(|f| **f).count() as f64;
        for (part, frac) in [(&s.train, 0.8), (&s.validation, 0.1), (&s.test, 0.1)] {
            let expect = total_pos * frac;
            assert!((positives(part) as f64 - expect).abs() <= 1.0);
        }
    }

    proptest! {
        #[test]
        fn disjoint_and_exhaustive(n in 3usize..1000, seed in any::<u64>()) {
            let all = ids(n);
            let s = split(&all, SplitFractions::default(), seed, None).unwrap();
            let mut joined: Vec<String> = s.train.iter().chain(&s.validation).chain(&s.test).cloned().collect();
            prop_assert_eq!(joined.len(), n);
            joined.sort();
            prop_assert_eq!(joined, all);
        }
    }
}
